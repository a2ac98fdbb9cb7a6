use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};

use super::cell::{dyadic_unit, DyadicCell, Interval, MAX_LEVEL};
use crate::error::{Error, Result};
use crate::scalar::{Rational, Scalar};

/// A function on `[0,1]` constant on each level-`N` dyadic cell.
///
/// `values[i]` is the value on cell `(N, i + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction<S = f64> {
    level: u32,
    values: Vec<S>,
}

impl<S: Scalar> StepFunction<S> {
    pub fn new(level: u32, values: Vec<S>) -> Result<Self> {
        if level > MAX_LEVEL || values.len() as u64 != 1u64 << level {
            return Err(Error::InvalidArgument(format!(
                "level {level} requires {} values, got {}",
                1u64.checked_shl(level).unwrap_or(0),
                values.len()
            )));
        }
        Ok(Self { level, values })
    }

    /// Build from values whose count is a power of two.
    pub fn from_values(values: Vec<S>) -> Result<Self> {
        let n = values.len();
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "{n} values is not a power of two"
            )));
        }
        Self::new(n.trailing_zeros(), values)
    }

    pub fn constant(level: u32, c: S) -> Self {
        Self {
            level,
            values: vec![c; 1usize << level],
        }
    }

    pub fn zero(level: u32) -> Self {
        Self::constant(level, S::zero())
    }

    /// `χ_[0,1]`.
    pub fn one() -> Self {
        Self::constant(0, S::one())
    }

    /// The basis function `e^N_i = χ_((i-1)2^-N, i 2^-N]` (1-based `i`).
    pub fn basis(level: u32, i: usize) -> Result<Self> {
        let cell = DyadicCell::new(level, i as u64)?;
        Ok(Self::indicator(&cell))
    }

    pub fn indicator(cell: &DyadicCell) -> Self {
        let mut f = Self::zero(cell.level());
        f.values[(cell.index() - 1) as usize] = S::one();
        f
    }

    /// Indicator of an interval with dyadic endpoints.
    pub fn interval_indicator(iv: &Interval) -> Result<Self> {
        let level = iv
            .dyadic_level()
            .ok_or_else(|| Error::NonDyadic(iv.to_string()))?;
        let mut f = Self::zero(level);
        for i in cell_range(iv, level) {
            f.values[i] = S::one();
        }
        Ok(f)
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn into_values(self) -> Vec<S> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value on a cell at least as fine as this function's level.
    pub fn value_on(&self, cell: &DyadicCell) -> Result<&S> {
        if cell.level() < self.level {
            return Err(Error::Level {
                requested: cell.level(),
                actual: self.level,
            });
        }
        let i = ((cell.index() - 1) >> (cell.level() - self.level)) as usize;
        Ok(&self.values[i])
    }

    /// Same function on the finer level `m`: each value is replicated `2^(m-N)` times.
    pub fn refine(&self, m: u32) -> Result<Self> {
        if m < self.level {
            return Err(Error::Level {
                requested: m,
                actual: self.level,
            });
        }
        if m > MAX_LEVEL {
            return Err(Error::InvalidArgument(format!(
                "level {m} exceeds {MAX_LEVEL}"
            )));
        }
        let rep = 1usize << (m - self.level);
        let values = self
            .values
            .iter()
            .flat_map(|v| std::iter::repeat_n(v.clone(), rep))
            .collect();
        Ok(Self { level: m, values })
    }

    /// Averages over level-`n` cells (conditional expectation onto `X_n`).
    pub fn average_to(&self, n: u32) -> Result<Self> {
        if n > self.level {
            return Err(Error::Level {
                requested: n,
                actual: self.level,
            });
        }
        let block = 1usize << (self.level - n);
        let inv = S::from_rational(&Rational::new(BigInt::one(), BigInt::from(block)));
        let values = self
            .values
            .chunks(block)
            .map(|c| c.iter().fold(S::zero(), |acc, v| acc + v.clone()) * inv.clone())
            .collect();
        Ok(Self { level: n, values })
    }

    /// Coarsest representation: merges sibling cells while they agree.
    pub fn simplify(&self) -> Self {
        let mut f = self.clone();
        while f.level > 0 && f.values.chunks(2).all(|c| c[0] == c[1]) {
            f.values = f.values.chunks(2).map(|c| c[0].clone()).collect();
            f.level -= 1;
        }
        f
    }

    pub fn cell_length(&self) -> S {
        S::from_rational(&dyadic_unit(self.level))
    }

    /// `∫ f dλ`.
    pub fn integral(&self) -> S {
        let sum = self.values.iter().fold(S::zero(), |acc, v| acc + v.clone());
        sum * self.cell_length()
    }

    /// `∫ f g dλ`, on the common refinement.
    pub fn pairing(&self, other: &Self) -> S {
        let (a, b) = align(self, other);
        let sum = a
            .values
            .iter()
            .zip(&b.values)
            .fold(S::zero(), |acc, (x, y)| acc + x.clone() * y.clone());
        sum * a.cell_length()
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> StepFunction<T> {
        StepFunction {
            level: self.level,
            values: self.values.iter().map(f).collect(),
        }
    }

    pub fn abs(&self) -> Self {
        self.map(|v| v.abs())
    }

    pub fn scale(&self, c: &S) -> Self {
        self.map(|v| v.clone() * c.clone())
    }

    pub fn add(&self, other: &Self) -> Self {
        let (a, b) = align(self, other);
        let values = a
            .values
            .iter()
            .zip(&b.values)
            .map(|(x, y)| x.clone() + y.clone())
            .collect();
        Self {
            level: a.level,
            values,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&(-S::one())))
    }

    pub fn to_f64(&self) -> StepFunction<f64> {
        self.map(|v| v.to_f64())
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.is_zero())
    }

    /// Exact equality as functions (representations may differ in level).
    pub fn same_function(&self, other: &Self) -> bool {
        let (a, b) = align(self, other);
        a.values == b.values
    }
}

impl StepFunction<f64> {
    pub fn sup_distance(&self, other: &Self) -> f64 {
        let (a, b) = align(self, other);
        a.values
            .iter()
            .zip(&b.values)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }
}

/// Both functions refined to the finer of the two levels.
pub fn align<S: Scalar>(
    a: &StepFunction<S>,
    b: &StepFunction<S>,
) -> (StepFunction<S>, StepFunction<S>) {
    let m = a.level.max(b.level);
    (
        a.refine(m).expect("finer level"),
        b.refine(m).expect("finer level"),
    )
}

/// Zero-based level-`level` cell indices covered by a dyadic interval.
pub(crate) fn cell_range(iv: &Interval, level: u32) -> std::ops::Range<usize> {
    let scale = Rational::from_integer(BigInt::one() << level as usize);
    let lo = (iv.lo() * &scale).to_integer().to_usize().unwrap_or(0);
    let hi = (iv.hi() * &scale).to_integer().to_usize().unwrap_or(0);
    lo..hi
}

/// Zero-based index of the level-`level` cell containing `x` (cells are `(lo, hi]`).
pub(crate) fn cell_of_point(x: &Rational, level: u32) -> usize {
    if x.is_zero() {
        return 0;
    }
    let scaled = x * Rational::from_integer(BigInt::one() << level as usize);
    let c = scaled.ceil().to_integer().to_usize().unwrap_or(1);
    c.saturating_sub(1)
}
