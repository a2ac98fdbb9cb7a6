use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::grid::{
    compose_pieces, parse_piece_line, rasterize, Interval, MeasureMap, Piece, StepFunction,
    DEFAULT_LEVEL_CAP,
};
use crate::scalar::{Rational, Scalar};

/// A weighted composition `Tf(s) = a(s) f(σ(s))` with `a` constant on each
/// source piece of `σ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementaryOperator<S = f64> {
    map: MeasureMap,
    multipliers: Vec<S>,
}

impl<S: Scalar> ElementaryOperator<S> {
    pub fn new(map: MeasureMap, multipliers: Vec<S>) -> Result<Self> {
        if multipliers.len() != map.pieces().len() {
            return Err(Error::InvalidArgument(format!(
                "{} multipliers for {} pieces",
                multipliers.len(),
                map.pieces().len()
            )));
        }
        if let Some(i) = multipliers.iter().position(|a| a.is_zero()) {
            return Err(Error::NotInvertible(i));
        }
        Ok(Self { map, multipliers })
    }

    pub fn identity() -> Self {
        Self::scalar(S::one())
    }

    /// `f ↦ c f`.
    pub fn scalar(c: S) -> Self {
        Self {
            map: MeasureMap::identity(),
            multipliers: vec![c],
        }
    }

    /// The composition operator `f ↦ f ∘ σ`.
    pub fn from_map(map: MeasureMap) -> Self {
        let multipliers = vec![S::one(); map.pieces().len()];
        Self { map, multipliers }
    }

    pub fn map(&self) -> &MeasureMap {
        &self.map
    }

    pub fn multipliers(&self) -> &[S] {
        &self.multipliers
    }

    /// Source piece, target piece and multiplier, one triple per branch.
    pub fn branches(&self) -> impl Iterator<Item = (&Piece, &S)> {
        self.map.pieces().iter().zip(&self.multipliers)
    }

    pub fn apply(&self, f: &StepFunction<S>) -> Result<StepFunction<S>> {
        self.apply_with_cap(f, DEFAULT_LEVEL_CAP)
    }

    pub fn apply_with_cap(&self, f: &StepFunction<S>, cap: u32) -> Result<StepFunction<S>> {
        let parts = self.map.pullback(f);
        let a = &self.multipliers;
        rasterize(
            parts.into_iter().map(|(i, p, v)| (p.src, a[i].clone() * v)),
            cap,
        )
    }

    /// `Tf` as `(value, length)` pieces. Unlike `apply` this never needs a
    /// dyadic grid, so it works when the map has non-dyadic breakpoints.
    pub fn image_distribution(&self, f: &StepFunction<S>) -> Vec<(S, Rational)> {
        let a = &self.multipliers;
        self.map
            .pullback(f)
            .into_iter()
            .map(|(i, p, v)| (a[i].clone() * v, p.src.length()))
            .collect()
    }

    /// `T⁻¹g = (g / a) ∘ σ⁻¹`.
    pub fn invert(&self) -> Result<Self> {
        if let Some(i) = self.multipliers.iter().position(|a| a.is_zero()) {
            return Err(Error::NotInvertible(i));
        }
        let multipliers = self
            .multipliers
            .iter()
            .map(|a| S::one() / a.clone())
            .collect();
        Ok(self.reversed(multipliers))
    }

    /// `T'g = (a w) ∘ σ⁻¹ · g ∘ σ⁻¹`, so that `∫ (Tf) g = ∫ f (T'g)`.
    pub fn adjoint(&self) -> Self {
        let multipliers = self
            .branches()
            .map(|(p, a)| a.clone() * S::from_rational(&p.weight()))
            .collect();
        self.reversed(multipliers)
    }

    // the inverse map lists pieces sorted by the old targets
    fn reversed(&self, multipliers: Vec<S>) -> Self {
        let inv = self.map.inverse();
        let mut tagged: Vec<(Piece, S)> = self
            .map
            .pieces()
            .iter()
            .map(|p| Piece::new(p.tgt.clone(), p.src.clone()))
            .zip(multipliers)
            .collect();
        tagged.sort_by(|a, b| a.0.src.cmp(&b.0.src));
        debug_assert!(tagged.iter().map(|t| &t.0).eq(inv.pieces().iter()));
        Self {
            map: inv,
            multipliers: tagged.into_iter().map(|t| t.1).collect(),
        }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.compose_with_cap(other, DEFAULT_LEVEL_CAP)
    }

    pub fn compose_with_cap(&self, other: &Self, cap: u32) -> Result<Self> {
        // (S T f)(s) = a_S(s) a_T(σ_S s) f(σ_T σ_S s)
        let parts = compose_pieces(&self.map, &other.map, cap)?;
        let multipliers = parts
            .iter()
            .map(|c| self.multipliers[c.first].clone() * other.multipliers[c.second].clone())
            .collect();
        let map = MeasureMap::new(parts.into_iter().map(|c| c.piece).collect())?;
        Ok(Self { map, multipliers }.canonical())
    }

    /// Merges neighbouring branches with the same affine law and multiplier.
    pub fn canonical(&self) -> Self {
        let mut pieces: Vec<Piece> = Vec::new();
        let mut mults: Vec<S> = Vec::new();
        for (p, a) in self.branches() {
            if let (Some(last), Some(la)) = (pieces.last_mut(), mults.last()) {
                if la == a
                    && last.src.hi() == p.src.lo()
                    && last.tgt.hi() == p.tgt.lo()
                    && last.weight() == p.weight()
                {
                    *last = Piece::new(
                        Interval::new(last.src.lo().clone(), p.src.hi().clone()).unwrap(),
                        Interval::new(last.tgt.lo().clone(), p.tgt.hi().clone()).unwrap(),
                    );
                    continue;
                }
            }
            pieces.push(p.clone());
            mults.push(a.clone());
        }
        let map = MeasureMap::new(pieces).expect("merging keeps a valid map");
        Self {
            map,
            multipliers: mults,
        }
    }

    /// Equality as operators, independent of how pieces are cut.
    pub fn same_operator(&self, other: &Self) -> bool {
        self.canonical() == other.canonical()
    }

    /// Every `|a_i| = 1`.
    pub fn is_modulus_one(&self) -> bool {
        self.multipliers.iter().all(|a| a.abs() == S::one())
    }

    pub fn is_measure_preserving(&self) -> bool {
        self.map.is_measure_preserving()
    }

    pub fn to_f64(&self) -> ElementaryOperator<f64> {
        ElementaryOperator {
            map: self.map.clone(),
            multipliers: self.multipliers.iter().map(|a| a.to_f64()).collect(),
        }
    }

    /// Map lines followed by one multiplier line per piece, in piece order.
    pub fn to_text(&self) -> String
    where
        S: std::fmt::Display,
    {
        let mut s = self.map.to_text();
        for a in &self.multipliers {
            let _ = writeln!(s, "{a}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut pieces = Vec::new();
        let mut mults = Vec::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.split_whitespace().count() == 1 {
                mults.push(S::parse_scalar(line)?);
            } else {
                if !mults.is_empty() {
                    return Err(Error::Parse(format!(
                        "piece line {line:?} after multipliers"
                    )));
                }
                pieces.push(parse_piece_line(line)?);
            }
        }
        Self::new(MeasureMap::new(pieces)?, mults)
    }
}

impl ElementaryOperator<Rational> {
    /// Exact operator with the same map and `f64` multipliers converted exactly.
    pub fn from_f64(op: &ElementaryOperator<f64>) -> Result<Self> {
        let multipliers = op
            .multipliers
            .iter()
            .map(|a| {
                a.to_rational()
                    .ok_or_else(|| Error::InvalidArgument(format!("non-finite multiplier {a}")))
            })
            .collect::<Result<_>>()?;
        Self::new(op.map.clone(), multipliers)
    }
}
