use num_traits::{Signed, Zero};

use super::elementary::ElementaryOperator;
use crate::error::{Error, Result};
use crate::grid::{align, Interval, StepFunction, DEFAULT_LEVEL_CAP};
use crate::scalar::{Rational, Scalar};

/// A finite sum `Σ_n a_n(s) f(σ_n(s))` whose maps never agree at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoIntegralOperator<S = f64> {
    terms: Vec<ElementaryOperator<S>>,
}

impl<S: Scalar> PseudoIntegralOperator<S> {
    pub fn new(terms: Vec<ElementaryOperator<S>>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidArgument(
                "a pseudo-integral operator needs at least one term".into(),
            ));
        }
        check_distinct(&terms)?;
        Ok(Self { terms })
    }

    pub fn terms(&self) -> &[ElementaryOperator<S>] {
        &self.terms
    }

    pub fn apply(&self, f: &StepFunction<S>) -> Result<StepFunction<S>> {
        self.apply_with_cap(f, DEFAULT_LEVEL_CAP)
    }

    pub fn apply_with_cap(&self, f: &StepFunction<S>, cap: u32) -> Result<StepFunction<S>> {
        let mut acc: Option<StepFunction<S>> = None;
        for t in &self.terms {
            let g = t.apply_with_cap(f, cap)?;
            acc = Some(match acc {
                None => g,
                Some(a) => {
                    let (a, g) = align(&a, &g);
                    a.add(&g)
                }
            });
        }
        Ok(acc.expect("at least one term").simplify())
    }
}

impl<S: Scalar> From<ElementaryOperator<S>> for PseudoIntegralOperator<S> {
    fn from(t: ElementaryOperator<S>) -> Self {
        Self { terms: vec![t] }
    }
}

/// Source breakpoints of every term, merged.
pub(crate) fn common_breakpoints<S: Scalar>(terms: &[ElementaryOperator<S>]) -> Vec<Rational> {
    let mut pts: Vec<Rational> = terms
        .iter()
        .flat_map(|t| {
            t.map()
                .pieces()
                .iter()
                .flat_map(|p| [p.src.lo().clone(), p.src.hi().clone()])
        })
        .collect();
    pts.sort();
    pts.dedup();
    pts
}

fn check_distinct<S: Scalar>(terms: &[ElementaryOperator<S>]) -> Result<()> {
    let pts = common_breakpoints(terms);
    for w in pts.windows(2) {
        let cell = Interval::new(w[0].clone(), w[1].clone())?;
        let mid = (cell.lo() + cell.hi()) / Rational::from_integer(2.into());
        // image endpoints of each term over this cell
        let ends: Vec<(Rational, Rational)> = terms
            .iter()
            .map(|t| {
                let i = t.map().piece_at(&mid).expect("sources tile [0,1]");
                let p = &t.map().pieces()[i];
                (p.forward(cell.lo()), p.forward(cell.hi()))
            })
            .collect();
        for m in 0..ends.len() {
            for n in m + 1..ends.len() {
                let d0 = &ends[m].0 - &ends[n].0;
                let d1 = &ends[m].1 - &ends[n].1;
                // affine difference vanishes somewhere in the open cell
                let meets =
                    (d0.is_zero() && d1.is_zero()) || d0.signum() * d1.signum() < Rational::zero();
                if meets {
                    return Err(Error::Distinctness {
                        first: m,
                        second: n,
                        interval: cell.to_string(),
                    });
                }
            }
        }
    }
    Ok(())
}
