use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::linear::LinearMap;
use crate::error::{Error, Result};
use crate::grid::StepFunction;
use crate::norms::{norm_of_values, norm_subgradient, NormSpec};

/// Largest input dimension for sign-vector enumeration on `L_∞`.
pub const MAX_SIGN_DIM: usize = 16;
/// Largest input dimension for signed-indicator enumeration on Lorentz balls.
pub const MAX_LORENTZ_DIM: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMethod {
    /// Exact maximum over the vertices of a polytope unit ball.
    ExtremePoints,
    MultistartAscent,
    /// Vertices when the ball is a small polytope, ascent otherwise.
    Auto,
}

#[derive(Debug, Clone)]
pub struct NormOptions {
    pub starts: usize,
    pub steps: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for NormOptions {
    fn default() -> Self {
        Self {
            starts: 32,
            steps: 300,
            tol: 1e-10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OperatorNorm {
    pub lower: f64,
    /// Present only with a certificate: vertex enumeration or an interpolation bound.
    pub upper: Option<f64>,
    /// Input at which `lower` is attained.
    pub witness: StepFunction<f64>,
    pub certified: bool,
    /// False when some ascent start hit the step cap still improving.
    pub converged: bool,
}

impl OperatorNorm {
    /// The certified value, if the bounds meet.
    pub fn value(&self) -> Option<f64> {
        self.certified.then_some(self.lower)
    }
}

/// `‖A‖_{dom → cod}` restricted to step functions at the input level of `A`.
pub fn operator_norm(
    dom: &NormSpec,
    cod: &NormSpec,
    a: &LinearMap,
    method: NormMethod,
    opts: &NormOptions,
) -> Result<OperatorNorm> {
    let vertices = extreme_points_available(dom, a.in_dim());
    match method {
        NormMethod::ExtremePoints if !vertices => Err(Error::Precondition(format!(
            "extreme-point enumeration needs an L1, small L∞ or small Lorentz domain, got {dom} on {} cells",
            a.in_dim()
        ))),
        NormMethod::ExtremePoints => by_extreme_points(dom, cod, a),
        NormMethod::Auto if vertices => by_extreme_points(dom, cod, a),
        _ => by_ascent(dom, cod, a, opts),
    }
}

fn extreme_points_available(dom: &NormSpec, n: usize) -> bool {
    match dom {
        NormSpec::Lp { p } if *p == 1.0 => true,
        NormSpec::Lp { p } if p.is_infinite() => n <= MAX_SIGN_DIM,
        NormSpec::Lorentz { .. } => n <= MAX_LORENTZ_DIM,
        _ => false,
    }
}

fn ratio(dom: &NormSpec, cod: &NormSpec, a: &LinearMap, x: &[f64]) -> Result<f64> {
    let nx = norm_of_values(dom, a.in_level(), x)?;
    if nx == 0.0 {
        return Ok(0.0);
    }
    Ok(norm_of_values(cod, a.out_level(), &a.apply(x))? / nx)
}

fn certified(lower: f64, x: Vec<f64>, level: u32) -> Result<OperatorNorm> {
    Ok(OperatorNorm {
        lower,
        upper: Some(lower),
        witness: StepFunction::new(level, x)?,
        certified: true,
        converged: true,
    })
}

/// Calls `visit` on every vertex of the domain unit ball up to scaling.
fn for_each_vertex(
    dom: &NormSpec,
    n: usize,
    mut visit: impl FnMut(&[f64]) -> Result<()>,
) -> Result<()> {
    match dom {
        NormSpec::Lp { p } if *p == 1.0 => {
            for j in 0..n {
                let mut x = vec![0.0; n];
                x[j] = 1.0;
                visit(&x)?;
            }
        }
        NormSpec::Lp { .. } => {
            // x and -x give the same ratio, so the first sign stays fixed
            let mut x = vec![1.0; n];
            visit(&x)?;
            for k in 1u64..1 << (n - 1) {
                let flip = k.trailing_zeros() as usize + 1;
                x[flip] = -x[flip];
                visit(&x)?;
            }
        }
        NormSpec::Lorentz { .. } => {
            // ±χ_A over nonempty sets A, each sign pattern up to a global flip
            let mut x = vec![0.0; n];
            for code in 1..3u64.pow(n as u32) {
                let mut c = code;
                let mut lead = 0.0;
                for xi in x.iter_mut() {
                    *xi = match c % 3 {
                        0 => 0.0,
                        1 => 1.0,
                        _ => -1.0,
                    };
                    if lead == 0.0 {
                        lead = *xi;
                    }
                    c /= 3;
                }
                if lead > 0.0 {
                    visit(&x)?;
                }
            }
        }
        NormSpec::Orlicz(_) => {
            return Err(Error::Precondition(
                "the Orlicz unit ball is not a polytope".into(),
            ));
        }
    }
    Ok(())
}

fn by_extreme_points(dom: &NormSpec, cod: &NormSpec, a: &LinearMap) -> Result<OperatorNorm> {
    let mut best = (f64::NEG_INFINITY, vec![0.0; a.in_dim()]);
    for_each_vertex(dom, a.in_dim(), |x| {
        let r = ratio(dom, cod, a, x)?;
        if r > best.0 {
            best = (r, x.to_vec());
        }
        Ok(())
    })?;
    certified(best.0.max(0.0), best.1, a.in_level())
}

/// The `keep` vertices with the largest ratios, best first, each scaled to
/// unit norm. Errors unless the domain ball is a small polytope.
pub(crate) fn top_vertices(
    dom: &NormSpec,
    cod: &NormSpec,
    a: &LinearMap,
    keep: usize,
) -> Result<Vec<(f64, Vec<f64>)>> {
    if !extreme_points_available(dom, a.in_dim()) {
        return Err(Error::Precondition(format!(
            "{dom} on {} cells has no enumerable vertex set",
            a.in_dim()
        )));
    }
    let mut all = Vec::new();
    for_each_vertex(dom, a.in_dim(), |x| {
        let nx = norm_of_values(dom, a.in_level(), x)?;
        let r = ratio(dom, cod, a, x)?;
        all.push((r, x.iter().map(|v| v / nx).collect::<Vec<f64>>()));
        Ok(())
    })?;
    all.sort_by(|p, q| q.0.total_cmp(&p.0));
    all.truncate(keep.max(1));
    Ok(all)
}

pub(crate) fn has_vertices(dom: &NormSpec, n: usize) -> bool {
    extreme_points_available(dom, n)
}

fn starts(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let unit = |j: usize| {
        let mut x = vec![0.0; n];
        x[j] = 1.0;
        x
    };
    if n <= 24 {
        out.extend((0..n).map(unit));
    } else {
        out.extend((0..8).map(|k| unit(k * (n - 1) / 7)));
    }
    out.push(vec![1.0; n]);
    out.push(
        (0..n)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect(),
    );
    out.push((0..n).map(|i| if i < n / 2 { 1.0 } else { 0.0 }).collect());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target = count.max(out.len() + 4);
    while out.len() < target {
        out.push((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect());
    }
    out
}

struct Ascent {
    value: f64,
    x: Vec<f64>,
    converged: bool,
}

fn ascend(
    dom: &NormSpec,
    cod: &NormSpec,
    a: &LinearMap,
    start: Vec<f64>,
    opts: &NormOptions,
) -> Result<Ascent> {
    let (li, lo) = (a.in_level(), a.out_level());
    let normalize = |x: Vec<f64>| -> Result<Vec<f64>> {
        let nx = norm_of_values(dom, li, &x)?;
        Ok(if nx > 0.0 {
            x.into_iter().map(|v| v / nx).collect()
        } else {
            x
        })
    };
    let mut x = normalize(start)?;
    let mut r = ratio(dom, cod, a, &x)?;
    let mut eta = 0.5;
    for _ in 0..opts.steps {
        let y = a.apply(&x);
        let gy = a.apply_transpose(&norm_subgradient(cod, lo, &y)?);
        let gx = norm_subgradient(dom, li, &x)?;
        let grad: Vec<f64> = gy.iter().zip(&gx).map(|(p, q)| p - r * q).collect();
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        let xnorm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if gnorm == 0.0 || xnorm == 0.0 {
            return Ok(Ascent {
                value: r,
                x,
                converged: true,
            });
        }
        let s = eta * xnorm / gnorm;
        let cand = normalize(x.iter().zip(&grad).map(|(v, g)| v + s * g).collect())?;
        let rc = ratio(dom, cod, a, &cand)?;
        if rc > r {
            let rel = (rc - r) / rc.abs().max(f64::MIN_POSITIVE);
            x = cand;
            r = rc;
            eta = (eta * 2.0).min(1.0);
            if rel < opts.tol {
                return Ok(Ascent {
                    value: r,
                    x,
                    converged: true,
                });
            }
        } else {
            eta *= 0.5;
            if eta < 1e-14 {
                return Ok(Ascent {
                    value: r,
                    x,
                    converged: true,
                });
            }
        }
    }
    Ok(Ascent {
        value: r,
        x,
        converged: false,
    })
}

/// Riesz–Thorin bound for a nonnegative matrix between equal `L_p` spaces.
fn interpolation_bound(dom: &NormSpec, cod: &NormSpec, a: &LinearMap) -> Option<f64> {
    let p = dom.lp_exponent()?;
    if cod.lp_exponent()? != p || !a.is_nonnegative() {
        return None;
    }
    let (n1, ninf) = a.l1_linf_norms();
    if p.is_infinite() {
        return Some(ninf);
    }
    Some(n1.powf(1.0 / p) * ninf.powf(1.0 - 1.0 / p))
}

/// On the cube the ratio is convex in each coordinate, so rounding to signs
/// and flipping single coordinates never loses ground.
fn polish_on_cube(dom: &NormSpec, cod: &NormSpec, a: &LinearMap, run: Ascent) -> Result<Ascent> {
    let mut x: Vec<f64> = run
        .x
        .iter()
        .map(|v| if *v < 0.0 { -1.0 } else { 1.0 })
        .collect();
    let mut r = ratio(dom, cod, a, &x)?;
    let mut improved = true;
    while improved {
        improved = false;
        for i in 0..x.len() {
            x[i] = -x[i];
            let rf = ratio(dom, cod, a, &x)?;
            if rf > r * (1.0 + 1e-15) {
                r = rf;
                improved = true;
            } else {
                x[i] = -x[i];
            }
        }
    }
    Ok(if r >= run.value {
        Ascent {
            value: r,
            x,
            converged: run.converged,
        }
    } else {
        run
    })
}

/// Every multistart run as `(ratio, unit-norm input, converged)`, in start order.
pub(crate) fn ascent_runs(
    dom: &NormSpec,
    cod: &NormSpec,
    a: &LinearMap,
    opts: &NormOptions,
) -> Result<Vec<(f64, Vec<f64>, bool)>> {
    let list = starts(a.in_dim(), opts.starts, opts.seed);
    let cube = dom.lp_exponent().is_some_and(f64::is_infinite);
    list.into_par_iter()
        .map(|s| {
            let run = ascend(dom, cod, a, s, opts)?;
            let run = if cube {
                polish_on_cube(dom, cod, a, run)?
            } else {
                run
            };
            let nx = norm_of_values(dom, a.in_level(), &run.x)?;
            let x = if nx > 0.0 {
                run.x.iter().map(|v| v / nx).collect()
            } else {
                run.x
            };
            Ok((run.value, x, run.converged))
        })
        .collect()
}

fn by_ascent(
    dom: &NormSpec,
    cod: &NormSpec,
    a: &LinearMap,
    opts: &NormOptions,
) -> Result<OperatorNorm> {
    let runs = ascent_runs(dom, cod, a, opts)?;
    let converged = runs.iter().all(|r| r.2);
    // first maximum in start order, so the result does not depend on scheduling
    let (lower, x, _) = runs
        .into_iter()
        .reduce(|b, r| if r.0 > b.0 { r } else { b })
        .expect("at least one start");
    let upper = interpolation_bound(dom, cod, a).map(|u| u.max(lower));
    let certified = upper.is_some_and(|u| u - lower <= opts.tol.max(1e-12) * u.max(1.0));
    Ok(OperatorNorm {
        lower,
        upper,
        witness: StepFunction::new(a.in_level(), x)?,
        certified,
        converged,
    })
}
