use microlp::{ComparisonOp, OptimizationDirection, Problem};

use super::oracle::{cut, evaluate, OracleEval};
use crate::error::{Error, Result};
use crate::grid::StepFunction;
use crate::norms::NormSpec;

#[derive(Debug, Clone)]
pub struct DefectOptions {
    /// Stop once the best value is within this of the cutting-plane model.
    pub gap_tol: f64,
    pub max_iterations: usize,
    /// Size of the cut pool.
    pub max_cuts: usize,
    pub seed: u64,
}

impl Default for DefectOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-8,
            max_iterations: 200,
            max_cuts: 512,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FlinnDefect {
    /// `‖I − f⊗u‖ − 1` at the best `f` found, clipped at 0.
    pub defect: f64,
    /// Certified lower bound on the defect over all admissible `f`.
    pub lower_bound: f64,
    pub best_f: StepFunction<f64>,
    /// The value at `best_f` is exact rather than an ascent lower bound.
    pub exact_value: bool,
    pub iterations: usize,
    pub converged: bool,
}

impl FlinnDefect {
    /// `Some(true)` when `u` is certified Flinn, `Some(false)` when certified
    /// not, `None` when the bounds straddle `tol`.
    pub fn is_flinn(&self, tol: f64) -> Option<bool> {
        if self.exact_value && self.defect <= tol {
            Some(true)
        } else if self.lower_bound > tol {
            Some(false)
        } else {
            None
        }
    }
}

/// Orthonormal basis of `u⊥` from the Householder reflection sending `u` to
/// a multiple of a coordinate vector. Returned as `n − 1` columns.
pub(crate) fn orthogonal_complement(u: &[f64]) -> Vec<Vec<f64>> {
    let n = u.len();
    let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    let k = (0..n)
        .max_by(|&a, &b| u[a].abs().total_cmp(&u[b].abs()))
        .unwrap_or(0);
    let mut v = u.to_vec();
    v[k] += if u[k] >= 0.0 { norm } else { -norm };
    let vv: f64 = v.iter().map(|x| x * x).sum();
    (0..n)
        .filter(|&j| j != k)
        .map(|j| {
            (0..n)
                .map(|i| if i == j { 1.0 } else { 0.0 } - 2.0 * v[i] * v[j] / vv)
                .collect()
        })
        .collect()
}

struct Cut {
    constant: f64,
    slope: Vec<f64>,
}

impl Cut {
    fn at(&self, c: &[f64]) -> f64 {
        self.constant + self.slope.iter().zip(c).map(|(a, b)| a * b).sum::<f64>()
    }
}

struct Problem1 {
    spec: NormSpec,
    level: u32,
    u: Vec<f64>,
    f0: Vec<f64>,
    basis: Vec<Vec<f64>>,
    seed: u64,
}

impl Problem1 {
    fn f_of(&self, c: &[f64]) -> Vec<f64> {
        let mut f = self.f0.clone();
        for (ck, z) in c.iter().zip(&self.basis) {
            for (fi, zi) in f.iter_mut().zip(z) {
                *fi += ck * zi;
            }
        }
        f
    }

    fn eval(&self, c: &[f64]) -> Result<(OracleEval, Vec<Cut>)> {
        let f = self.f_of(c);
        let ev = evaluate(&self.spec, self.level, &self.u, &f, self.seed)?;
        let ell = 1.0 / self.u.len() as f64;
        let mut cuts = Vec::with_capacity(ev.witnesses.len());
        for x in &ev.witnesses {
            let (alpha, beta) = cut(&self.spec, self.level, &self.u, &f, x)?;
            let f0x: f64 = self.f0.iter().zip(x).map(|(a, b)| a * b).sum();
            let slope = self
                .basis
                .iter()
                .map(|z| -ell * beta * z.iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
                .collect();
            cuts.push(Cut {
                constant: alpha - ell * beta * f0x,
                slope,
            });
        }
        Ok((ev, cuts))
    }
}

/// Minimizes the cut model over a box (or everywhere when `radius` is None).
fn solve_master(
    cuts: &[Cut],
    dim: usize,
    center: &[f64],
    radius: Option<f64>,
    floor: f64,
) -> Result<(Vec<f64>, f64)> {
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = (0..dim)
        .map(|k| match radius {
            Some(r) => lp.add_var(0.0, (center[k] - r, center[k] + r)),
            None => lp.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY)),
        })
        .collect();
    let t = lp.add_var(1.0, (floor, f64::INFINITY));
    for c in cuts {
        // t − slope·c ≥ constant
        let mut expr: Vec<_> = vars.iter().zip(&c.slope).map(|(v, s)| (*v, -s)).collect();
        expr.push((t, 1.0));
        lp.add_constraint(expr.as_slice(), ComparisonOp::Ge, c.constant);
    }
    let sol = lp
        .solve()
        .map_err(|_| Error::NoConvergence {
            iterations: 0,
            lower: f64::NAN,
            upper: f64::NAN,
        })
        .and_then(|o| {
            o.into_solution().map_err(|_| Error::NoConvergence {
                iterations: 0,
                lower: f64::NAN,
                upper: f64::NAN,
            })
        })?;
    Ok((
        vars.iter().map(|v| sol.var_value(*v)).collect(),
        sol.objective(),
    ))
}

/// `inf { ‖I − f⊗u‖ : ∫ f u = 1 } − 1` over functionals `f` at level `level`,
/// with `u` embedded at that level.
pub fn flinn_defect(
    spec: &NormSpec,
    u: &StepFunction<f64>,
    level: u32,
    opts: &DefectOptions,
) -> Result<FlinnDefect> {
    if u.is_zero() {
        return Err(Error::Degenerate(
            "no projection onto the span of the zero function".into(),
        ));
    }
    let u = u.refine(level.max(u.level()))?;
    let level = u.level();
    let n = u.len();
    let ell = 1.0 / n as f64;
    let uu: f64 = u.values().iter().map(|x| x * x).sum();
    let f0: Vec<f64> = u.values().iter().map(|x| x / (ell * uu)).collect();
    if n == 1 {
        return Ok(FlinnDefect {
            defect: 0.0,
            lower_bound: 0.0,
            best_f: StepFunction::new(level, f0)?,
            exact_value: true,
            iterations: 0,
            converged: true,
        });
    }
    let prob = Problem1 {
        spec: spec.clone(),
        level,
        u: u.values().to_vec(),
        f0,
        basis: orthogonal_complement(u.values()),
        seed: opts.seed,
    };
    let dim = n - 1;
    // every nonzero projection other than I has norm at least 1
    let floor = 1.0;

    let mut center = vec![0.0; dim];
    let (ev, mut cuts) = prob.eval(&center)?;
    let mut best = (ev.value, ev.exact);
    let scale = prob.f0.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut radius = scale.max(1.0);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iterations {
        iterations += 1;
        if best.0 - floor <= opts.gap_tol {
            converged = true;
            break;
        }
        let (trial, model) = solve_master(&cuts, dim, &center, Some(radius), floor)?;
        let binding = trial
            .iter()
            .zip(&center)
            .any(|(t, c)| (t - c).abs() >= radius * (1.0 - 1e-9));
        if best.0 - model <= opts.gap_tol {
            if !binding {
                converged = true;
                break;
            }
            radius *= 2.0;
            continue;
        }
        let (ev, new_cuts) = prob.eval(&trial)?;
        cuts.extend(new_cuts);
        if ev.value < best.0 - 0.1 * (best.0 - model) {
            center = trial;
            best = (ev.value, ev.exact);
            if binding {
                radius *= 2.0;
            }
        } else {
            radius = (radius * 0.5).max(1e-12);
        }
        if cuts.len() > opts.max_cuts {
            // drop the cuts with the most slack at the center
            cuts.sort_by(|a, b| b.at(&center).total_cmp(&a.at(&center)));
            cuts.truncate(opts.max_cuts);
        }
    }
    let global = solve_master(&cuts, dim, &center, None, floor)
        .map(|r| r.1)
        .unwrap_or(floor);
    Ok(FlinnDefect {
        defect: (best.0 - 1.0).max(0.0),
        lower_bound: (global - 1.0).max(0.0),
        best_f: StepFunction::new(level, prob.f_of(&center))?,
        exact_value: best.1,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complement_is_orthonormal() {
        let u = [1.0, -2.0, 0.5, 3.0];
        let z = orthogonal_complement(&u);
        assert_eq!(z.len(), 3);
        for (a, za) in z.iter().enumerate() {
            assert!(za.iter().zip(&u).map(|(p, q)| p * q).sum::<f64>().abs() < 1e-12);
            for (b, zb) in z.iter().enumerate() {
                let d: f64 = za.iter().zip(zb).map(|(p, q)| p * q).sum();
                assert!((d - if a == b { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hilbert_defect_vanishes() {
        let u = StepFunction::from_values(vec![1.0, -2.0, 0.5, 3.0]).unwrap();
        let d = flinn_defect(
            &NormSpec::lp(2.0).unwrap(),
            &u,
            2,
            &DefectOptions::default(),
        )
        .unwrap();
        assert!(d.defect <= 1e-8);
        assert_eq!(d.is_flinn(1e-8), Some(true));
        let uu: f64 = u.values().iter().map(|x| x * x).sum::<f64>() / 4.0;
        for (f, x) in d.best_f.values().iter().zip(u.values()) {
            assert!((f - x / uu).abs() < 1e-12);
        }
    }

    #[test]
    fn l1_constant_defect_matches_hand_value() {
        // ℓ1 on n cells: the best functional is uniform, ‖I − P‖ = 2 − 2/n
        let l1 = NormSpec::lp(1.0).unwrap();
        for level in [2, 3] {
            let d =
                flinn_defect(&l1, &StepFunction::one(), level, &DefectOptions::default()).unwrap();
            let n = (1u32 << level) as f64;
            assert!(
                (d.defect - (1.0 - 2.0 / n)).abs() < 1e-8,
                "level {level}: {d:?}"
            );
            assert!((d.lower_bound - d.defect).abs() < 1e-8);
            assert_eq!(d.is_flinn(1e-8), Some(false));
        }
    }
}
