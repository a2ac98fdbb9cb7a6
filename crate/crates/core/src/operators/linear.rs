use super::elementary::ElementaryOperator;
use super::pseudo::PseudoIntegralOperator;
use crate::error::{Error, Result};
use crate::grid::{cell_range, rasterize, StepFunction};
use crate::scalar::Scalar;

/// A linear map from level-`in_level` step functions to level-`out_level`
/// step functions, stored as sparse columns in the cell basis.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap {
    in_level: u32,
    out_level: u32,
    cols: Vec<Vec<(usize, f64)>>,
}

impl LinearMap {
    pub fn new(in_level: u32, out_level: u32, cols: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let (n, m) = (1usize << in_level, 1usize << out_level);
        if cols.len() != n {
            return Err(Error::InvalidArgument(format!(
                "{} columns for level {in_level}",
                cols.len()
            )));
        }
        if cols.iter().flatten().any(|&(i, _)| i >= m) {
            return Err(Error::InvalidArgument(format!(
                "row index out of range for level {out_level}"
            )));
        }
        Ok(Self {
            in_level,
            out_level,
            cols,
        })
    }

    pub fn identity(level: u32) -> Self {
        Self::scalar(level, 1.0)
    }

    pub fn scalar(level: u32, c: f64) -> Self {
        let cols = (0..1usize << level).map(|j| vec![(j, c)]).collect();
        Self {
            in_level: level,
            out_level: level,
            cols,
        }
    }

    /// Builds the matrix column by column from the images of basis functions.
    pub fn from_fn(
        in_level: u32,
        mut image: impl FnMut(&StepFunction<f64>) -> Result<StepFunction<f64>>,
    ) -> Result<Self> {
        let n = 1usize << in_level;
        let images = (1..=n)
            .map(|j| image(&StepFunction::basis(in_level, j)?))
            .collect::<Result<Vec<_>>>()?;
        let out_level = images.iter().map(|g| g.level()).max().unwrap_or(0);
        let cols = images
            .into_iter()
            .map(|g| {
                let g = g.refine(out_level)?;
                Ok(g.values()
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(i, v)| (i, *v))
                    .collect())
            })
            .collect::<Result<_>>()?;
        Self::new(in_level, out_level, cols)
    }

    /// The matrix of `T` on level-`in_level` step functions.
    pub fn from_elementary<S: Scalar>(
        op: &ElementaryOperator<S>,
        in_level: u32,
        cap: u32,
    ) -> Result<Self> {
        // tag each input cell by a distinct value so pulled-back runs never merge
        let tags = StepFunction::new(in_level, (1..=1u32 << in_level).map(|j| j as f64).collect())?;
        let parts = op.map().pullback(&tags);
        let a: Vec<f64> = op.multipliers().iter().map(|x| x.to_f64()).collect();
        let level_of = rasterize(parts.iter().map(|(_, p, _)| (p.src.clone(), 0.0)), cap)?.level();
        let mut cols = vec![Vec::new(); 1usize << in_level];
        for (i, p, tag) in parts {
            let j = tag as usize - 1;
            for r in cell_range(&p.src, level_of) {
                cols[j].push((r, a[i]));
            }
        }
        for c in &mut cols {
            c.sort_by_key(|e| e.0);
        }
        Self::new(in_level, level_of, cols)
    }

    pub fn from_pseudo<S: Scalar>(
        op: &PseudoIntegralOperator<S>,
        in_level: u32,
        cap: u32,
    ) -> Result<Self> {
        let parts = op
            .terms()
            .iter()
            .map(|t| Self::from_elementary(t, in_level, cap))
            .collect::<Result<Vec<_>>>()?;
        let out_level = parts.iter().map(|m| m.out_level).max().unwrap_or(in_level);
        let mut cols = vec![Vec::<(usize, f64)>::new(); 1usize << in_level];
        for m in parts {
            let shift = out_level - m.out_level;
            for (j, col) in m.cols.into_iter().enumerate() {
                for (i, v) in col {
                    for r in i << shift..(i + 1) << shift {
                        cols[j].push((r, v));
                    }
                }
            }
        }
        for c in &mut cols {
            c.sort_by_key(|e| e.0);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(c.len());
            for &(r, v) in c.iter() {
                match merged.last_mut() {
                    Some(last) if last.0 == r => last.1 += v,
                    _ => merged.push((r, v)),
                }
            }
            *c = merged;
        }
        Self::new(in_level, out_level, cols)
    }

    pub fn in_level(&self) -> u32 {
        self.in_level
    }

    pub fn out_level(&self) -> u32 {
        self.out_level
    }

    pub fn in_dim(&self) -> usize {
        self.cols.len()
    }

    pub fn out_dim(&self) -> usize {
        1usize << self.out_level
    }

    pub fn columns(&self) -> &[Vec<(usize, f64)>] {
        &self.cols
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.out_dim()];
        for (col, xj) in self.cols.iter().zip(x) {
            if *xj != 0.0 {
                for &(i, a) in col {
                    y[i] += a * xj;
                }
            }
        }
        y
    }

    /// `Aᵀ y` for the coefficient matrix.
    pub fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        self.cols
            .iter()
            .map(|col| col.iter().map(|&(i, a)| a * y[i]).sum())
            .collect()
    }

    /// Applies the map to a step function at or below the input level.
    pub fn apply_step(&self, f: &StepFunction<f64>) -> Result<StepFunction<f64>> {
        if f.level() > self.in_level {
            return Err(Error::Level {
                requested: self.in_level,
                actual: f.level(),
            });
        }
        let f = f.refine(self.in_level)?;
        StepFunction::new(self.out_level, self.apply(f.values()))
    }

    pub fn is_nonnegative(&self) -> bool {
        self.cols.iter().flatten().all(|e| e.1 >= 0.0)
    }

    /// `A B` (apply `other` first), at the finer of the intermediate levels.
    pub fn compose(&self, other: &LinearMap) -> Result<LinearMap> {
        let mid = other.out_level;
        if mid < self.in_level {
            let lifted = other.refine_output(self.in_level);
            return self.compose(&lifted);
        }
        if mid > self.in_level {
            return Err(Error::Level {
                requested: self.in_level,
                actual: mid,
            });
        }
        LinearMap::from_fn(other.in_level, |e| {
            let y = other.apply_step(e)?;
            self.apply_step(&y)
        })
    }

    /// The same map with outputs expressed at a finer level.
    pub fn refine_output(&self, level: u32) -> LinearMap {
        let shift = level.saturating_sub(self.out_level);
        let cols = self
            .cols
            .iter()
            .map(|c| {
                c.iter()
                    .flat_map(|&(i, v)| (i << shift..(i + 1) << shift).map(move |r| (r, v)))
                    .collect()
            })
            .collect();
        LinearMap {
            in_level: self.in_level,
            out_level: self.out_level + shift,
            cols,
        }
    }

    /// Coefficient matrix norms `max_j Σ_i |a_ij| ℓ_out / ℓ_in` and
    /// `max_i Σ_j |a_ij|`, the `L₁` and `L_∞` operator norms.
    pub fn l1_linf_norms(&self) -> (f64, f64) {
        let ratio = (self.in_dim() as f64) / (self.out_dim() as f64);
        let l1 = self
            .cols
            .iter()
            .map(|c| c.iter().map(|e| e.1.abs()).sum::<f64>() * ratio)
            .fold(0.0, f64::max);
        let mut rows = vec![0.0; self.out_dim()];
        for &(i, a) in self.cols.iter().flatten() {
            rows[i] += a.abs();
        }
        (l1, rows.into_iter().fold(0.0, f64::max))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{random_automorphism, MeasureMap};

    #[test]
    fn matrix_matches_direct_application() {
        let sigma = random_automorphism(2, 3, 11).unwrap();
        let a: Vec<f64> = (0..sigma.pieces().len()).map(|i| 1.0 + i as f64).collect();
        let t = ElementaryOperator::new(sigma, a).unwrap();
        let m = LinearMap::from_elementary(&t, 3, crate::grid::DEFAULT_LEVEL_CAP).unwrap();
        let f = StepFunction::from_values((0..8).map(|i| (i * i) as f64 - 3.0).collect()).unwrap();
        let direct = t.apply(&f).unwrap();
        let via = m.apply_step(&f).unwrap();
        assert!(direct.sup_distance(&via) < 1e-12);
        let by_fn = LinearMap::from_fn(3, |e| t.apply(e)).unwrap();
        assert_eq!(
            by_fn.apply(f.values()),
            via.refine(by_fn.out_level()).unwrap().values()
        );
    }

    #[test]
    fn transpose_is_adjoint_in_coefficients() {
        let t = ElementaryOperator::new(MeasureMap::half_swap(), vec![2.0, -1.0]).unwrap();
        let m = LinearMap::from_elementary(&t, 2, crate::grid::DEFAULT_LEVEL_CAP).unwrap();
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [0.5, -1.0, 2.0, 1.0];
        let lhs: f64 = m.apply(&x).iter().zip(&y).map(|(a, b)| a * b).sum();
        let rhs: f64 = m
            .apply_transpose(&y)
            .iter()
            .zip(&x)
            .map(|(a, b)| a * b)
            .sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn pseudo_sum_matrix() {
        let a = ElementaryOperator::<f64>::identity();
        let b = ElementaryOperator::from_map(MeasureMap::half_swap());
        let t = PseudoIntegralOperator::new(vec![a, b]).unwrap();
        let m = LinearMap::from_pseudo(&t, 1, crate::grid::DEFAULT_LEVEL_CAP).unwrap();
        assert_eq!(m.apply(&[1.0, 5.0]), vec![6.0, 6.0]);
    }

    #[test]
    fn l1_and_linf_of_scaling() {
        assert_eq!(LinearMap::scalar(3, 2.0).l1_linf_norms(), (2.0, 2.0));
    }
}
