use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::small_fraction;

/// Piecewise-linear Young function sampled on `[0, U]`, extended linearly
/// beyond `U` with the last slope. Normalized so that `φ(1) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct YoungFunction {
    xs: Vec<f64>,
    phis: Vec<f64>,
    slopes: Vec<f64>,
}

impl YoungFunction {
    /// Validates a table of samples `(x_i, φ_i)`. A missing origin is added;
    /// values are rescaled so that `φ(1) = 1`.
    pub fn new(points: &[(f64, f64)]) -> Result<Self> {
        let mut pts: Vec<(f64, f64)> = points.to_vec();
        if pts.iter().any(|(x, p)| !x.is_finite() || !p.is_finite()) {
            return Err(Error::NormSpec("non-finite Young table entry".into()));
        }
        if pts.first().map(|p| p.0) != Some(0.0) {
            pts.insert(0, (0.0, 0.0));
        }
        if pts[0].1 != 0.0 {
            return Err(Error::NormSpec("Young function must vanish at 0".into()));
        }
        if pts.len() < 2 {
            return Err(Error::NormSpec(
                "Young table needs at least one positive sample".into(),
            ));
        }
        let mut slopes = Vec::with_capacity(pts.len() - 1);
        for w in pts.windows(2) {
            let (x0, p0) = w[0];
            let (x1, p1) = w[1];
            if x1 <= x0 {
                return Err(Error::NormSpec(
                    "Young table abscissae must increase".into(),
                ));
            }
            slopes.push((p1 - p0) / (x1 - x0));
        }
        if slopes.iter().any(|&s| s < 0.0) || *slopes.last().unwrap() <= 0.0 {
            return Err(Error::NormSpec("Young function must be increasing".into()));
        }
        if slopes
            .windows(2)
            .any(|w| w[1] < w[0] * (1.0 - 1e-12) - 1e-15)
        {
            return Err(Error::NormSpec("Young function must be convex".into()));
        }
        let upper = pts.last().unwrap().0;
        if upper < 1.0 {
            return Err(Error::NormSpec(format!("Young table ends at {upper} < 1")));
        }
        let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let raw: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let unnormalized = Self {
            xs: xs.clone(),
            phis: raw.clone(),
            slopes: slopes.clone(),
        };
        let at_one = unnormalized.value(1.0);
        if at_one <= 0.0 {
            return Err(Error::NormSpec("Young function vanishes at 1".into()));
        }
        Ok(Self {
            xs,
            phis: raw.iter().map(|p| p / at_one).collect(),
            slopes: slopes.iter().map(|s| s / at_one).collect(),
        })
    }

    /// `φ(x) = x^p` sampled at the given abscissae.
    pub fn power(p: f64, xs: &[f64]) -> Result<Self> {
        let pts: Vec<_> = xs.iter().map(|&x| (x, x.powf(p))).collect();
        Self::new(&pts)
    }

    pub fn upper(&self) -> f64 {
        *self.xs.last().unwrap()
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.phis.iter().copied())
    }

    fn segment(&self, x: f64) -> usize {
        // index of the segment [x_j, x_{j+1}) containing x; last segment extends to ∞
        self.xs
            .partition_point(|&b| b <= x)
            .saturating_sub(1)
            .min(self.slopes.len() - 1)
    }

    pub fn value(&self, x: f64) -> f64 {
        let x = x.abs();
        let j = self.segment(x);
        self.phis[j] + self.slopes[j] * (x - self.xs[j])
    }

    /// Right derivative.
    pub fn derivative(&self, x: f64) -> f64 {
        self.slopes[self.segment(x.abs())]
    }

    /// Largest slope; the complementary function is infinite beyond it.
    pub fn max_slope(&self) -> f64 {
        *self.slopes.last().unwrap()
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    /// Complementary Young function `ψ(y) = sup_x (xy − φ(x))`.
    pub fn complementary(&self, y: f64) -> f64 {
        let y = y.abs();
        if y > self.max_slope() * (1.0 + 1e-15) {
            return f64::INFINITY;
        }
        self.xs
            .iter()
            .zip(&self.phis)
            .map(|(x, p)| x * y - p)
            .fold(0.0, f64::max)
    }
}

/// A rearrangement-invariant norm on `[0,1]` with `‖χ_[0,1]‖ = 1`.
#[derive(Debug, Clone, PartialEq)]
pub enum NormSpec {
    /// `L_p`, `1 ≤ p ≤ ∞` (`p = f64::INFINITY` for the sup norm).
    Lp { p: f64 },
    /// Lorentz `Λ(W)` with `q = 1`: `Σ f*_i Ŵ_i` over `2^level` cell weights.
    Lorentz { level: u32, weights: Vec<f64> },
    /// Orlicz space with the Luxemburg norm.
    Orlicz(YoungFunction),
}

impl NormSpec {
    pub fn lp(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::NormSpec(format!("exponent {p} outside [1, ∞]")));
        }
        Ok(Self::Lp { p })
    }

    pub fn lp_inf() -> Self {
        Self::Lp { p: f64::INFINITY }
    }

    pub fn lorentz(level: u32, weights: Vec<f64>) -> Result<Self> {
        if weights.len() as u64 != 1u64 << level {
            return Err(Error::NormSpec(format!(
                "Lorentz level {level} needs {} weights",
                1u64 << level
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(Error::NormSpec("Lorentz weights must be positive".into()));
        }
        if weights.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::NormSpec(
                "Lorentz weights must be nonincreasing".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::NormSpec(format!(
                "Lorentz weights sum to {total}, not 1"
            )));
        }
        Ok(Self::Lorentz { level, weights })
    }

    pub fn orlicz(points: &[(f64, f64)]) -> Result<Self> {
        Ok(Self::Orlicz(YoungFunction::new(points)?))
    }

    /// The Lorentz space with weights `(0.4, 0.3, 0.2, 0.1)`.
    pub fn reference_lorentz() -> Self {
        Self::lorentz(2, vec![0.4, 0.3, 0.2, 0.1]).unwrap()
    }

    /// An Orlicz space with `φ(x) = x²` near the origin and `x³`-like growth.
    pub fn reference_orlicz() -> Self {
        Self::orlicz(&[(0.5, 0.2), (1.0, 1.0), (2.0, 5.0), (4.0, 25.0)]).unwrap()
    }

    /// The spaces used throughout the experiment suites.
    pub fn built_in() -> Vec<NormSpec> {
        vec![
            Self::lp(1.0).unwrap(),
            Self::lp(1.5).unwrap(),
            Self::lp(2.0).unwrap(),
            Self::lp(3.0).unwrap(),
            Self::lp(4.0).unwrap(),
            Self::lp_inf(),
            Self::reference_lorentz(),
            Self::reference_orlicz(),
        ]
    }

    pub fn lp_exponent(&self) -> Option<f64> {
        match self {
            Self::Lp { p } => Some(*p),
            _ => None,
        }
    }

    pub fn is_lp(&self, q: f64) -> bool {
        self.lp_exponent() == Some(q)
    }

    /// Exact `(num, den)` form of a finite `L_p` exponent with small height.
    pub fn exponent_fraction(&self) -> Option<(i64, u64)> {
        self.lp_exponent()
            .filter(|p| p.is_finite())
            .and_then(small_fraction)
    }

    /// Minimal level at which every step function must be evaluated.
    pub fn base_level(&self) -> u32 {
        match self {
            Self::Lorentz { level, .. } => *level,
            _ => 0,
        }
    }
}

fn format_num(x: f64) -> String {
    if x.is_infinite() {
        "inf".into()
    } else {
        format!("{x}")
    }
}

impl fmt::Display for NormSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Lp { p } => write!(f, "lp {}", format_num(*p)),
            Self::Lorentz { level, weights } => {
                write!(f, "lorentz {level}")?;
                for w in weights {
                    write!(f, " {w}")?;
                }
                Ok(())
            }
            Self::Orlicz(young) => {
                let pts: Vec<_> = young.samples().filter(|(x, _)| *x > 0.0).collect();
                write!(f, "orlicz {}", pts.len())?;
                for (x, p) in pts {
                    write!(f, " {x} {p}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for NormSpec {
    type Err = Error;

    /// `lp <p>` | `lp inf` | `lorentz <L> <W_1> … <W_2^L>` | `orlicz <n> <x_1> <φ_1> … <x_n> <φ_n>`.
    fn from_str(s: &str) -> Result<Self> {
        let tokens: Vec<&str> = s.split_whitespace().collect();
        let num = |t: &str| -> Result<f64> {
            t.parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number {t:?} in norm spec")))
        };
        match tokens.as_slice() {
            ["lp", "inf"] | ["lp", "infinity"] => Ok(Self::lp_inf()),
            ["lp", p] => Self::lp(num(p)?),
            ["lorentz", level, rest @ ..] => {
                let level: u32 = level
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad Lorentz level {level:?}")))?;
                let weights = rest.iter().map(|t| num(t)).collect::<Result<Vec<_>>>()?;
                Self::lorentz(level, weights)
            }
            ["orlicz", n, rest @ ..] => {
                let n: usize = n
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad Orlicz count {n:?}")))?;
                if rest.len() != 2 * n {
                    return Err(Error::Parse(format!(
                        "orlicz expects {} numbers, got {}",
                        2 * n,
                        rest.len()
                    )));
                }
                let pts = rest
                    .chunks(2)
                    .map(|c| Ok((num(c[0])?, num(c[1])?)))
                    .collect::<Result<Vec<_>>>()?;
                Self::orlicz(&pts)
            }
            _ => Err(Error::Parse(format!("unrecognized norm spec {s:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_print() {
        for text in [
            "lp 2",
            "lp inf",
            "lp 1.5",
            "lorentz 2 0.4 0.3 0.2 0.1",
            "orlicz 2 1 1 2 4",
        ] {
            let spec: NormSpec = text.parse().unwrap();
            let again: NormSpec = spec.to_string().parse().unwrap();
            assert_eq!(spec, again, "{text}");
        }
        assert!("lp 0.5".parse::<NormSpec>().is_err());
        assert!("lorentz 1 0.3 0.7".parse::<NormSpec>().is_err());
        assert!("lorentz 2 0.4 0.3 0.2".parse::<NormSpec>().is_err());
        assert!("orlicz 2 1 1".parse::<NormSpec>().is_err());
        assert!("banach 3".parse::<NormSpec>().is_err());
    }

    #[test]
    fn young_validation() {
        assert!(
            YoungFunction::new(&[(1.0, 1.0), (2.0, 1.5)]).is_err(),
            "concave"
        );
        assert!(YoungFunction::new(&[(0.5, 1.0)]).is_err(), "ends before 1");
        assert!(
            YoungFunction::new(&[(1.0, 1.0), (0.5, 2.0)]).is_err(),
            "unsorted"
        );
        // φ(1) = 2 is rescaled to 1
        let y = YoungFunction::new(&[(1.0, 2.0), (2.0, 8.0)]).unwrap();
        assert_eq!(y.value(1.0), 1.0);
        assert_eq!(y.value(2.0), 4.0);
        assert_eq!(y.value(3.0), 7.0);
    }

    #[test]
    fn complementary_of_square() {
        // φ(x)=x² sampled on a fine grid: ψ(y) ≈ y²/4
        let xs: Vec<f64> = (1..=400).map(|i| i as f64 / 100.0).collect();
        let y = YoungFunction::power(2.0, &xs).unwrap();
        for t in [0.5, 1.0, 2.0, 3.0] {
            assert!((y.complementary(t) - t * t / 4.0).abs() < 1e-3);
        }
        assert!(y.complementary(100.0).is_infinite());
    }
}
