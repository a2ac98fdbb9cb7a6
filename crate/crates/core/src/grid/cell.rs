use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{rational_to_f64, Rational};

/// Largest supported dyadic level. Cell indices must fit in a `u64`.
pub const MAX_LEVEL: u32 = 62;

/// Default refinement cap for compositions and pullbacks.
pub const DEFAULT_LEVEL_CAP: u32 = 20;

/// `2^-level` as an exact rational.
pub fn dyadic_unit(level: u32) -> Rational {
    Rational::new(BigInt::one(), BigInt::one() << level as usize)
}

/// Dyadic level of `q`: the exponent `m` with `q = k / 2^m`, `k` odd (or `m = 0`).
pub fn dyadic_level(q: &Rational) -> Option<u32> {
    let d = q.denom();
    if d.is_zero() {
        return None;
    }
    let tz = d.trailing_zeros().unwrap_or(0);
    if (d >> tz as usize).is_one() {
        Some(tz as u32)
    } else {
        None
    }
}

/// Parse `p/q`, a decimal, or an integer into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational number: {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((int_part, frac)) = s.split_once('.') {
        let neg = int_part.starts_with('-');
        let digits = format!("{}{}", int_part.trim_start_matches('-'), frac);
        let n: BigInt = digits.parse().map_err(|_| bad())?;
        let d = num_traits::pow(BigInt::from(10), frac.len());
        let q = Rational::new(n, d);
        return Ok(if neg { -q } else { q });
    }
    let n: BigInt = s.parse().map_err(|_| bad())?;
    Ok(Rational::from_integer(n))
}

/// Interval `(lo, hi]` with exact rational endpoints (closed at 0 when `lo = 0`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Interval {
    lo: Rational,
    hi: Rational,
}

impl Interval {
    pub fn new(lo: Rational, hi: Rational) -> Result<Self> {
        if lo >= hi {
            return Err(Error::InvalidArgument(format!(
                "empty interval ({lo}, {hi}]"
            )));
        }
        if lo.is_negative() || hi > Rational::one() {
            return Err(Error::InvalidArgument(format!(
                "interval ({lo}, {hi}] leaves [0,1]"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn unit() -> Self {
        Self {
            lo: Rational::zero(),
            hi: Rational::one(),
        }
    }

    pub fn lo(&self) -> &Rational {
        &self.lo
    }

    pub fn hi(&self) -> &Rational {
        &self.hi
    }

    pub fn length(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn length_f64(&self) -> f64 {
        rational_to_f64(&self.length())
    }

    /// Intersection with positive length, if any.
    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = (&self.lo).max(&other.lo).clone();
        let hi = (&self.hi).min(&other.hi).clone();
        (lo < hi).then_some(Interval { lo, hi })
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// Point membership under the `(lo, hi]` convention, closed at 0.
    pub fn contains_point(&self, x: &Rational) -> bool {
        (x > &self.lo || (self.lo.is_zero() && x.is_zero())) && x <= &self.hi
    }

    /// Finest dyadic level needed to represent both endpoints, if they are dyadic.
    pub fn dyadic_level(&self) -> Option<u32> {
        Some(dyadic_level(&self.lo)?.max(dyadic_level(&self.hi)?))
    }

    /// The interval as a single dyadic cell, when it is one.
    pub fn as_cell(&self) -> Option<DyadicCell> {
        let len = self.length();
        let level = dyadic_level(&len)?;
        if !len.numer().is_one() {
            return None;
        }
        let k = (&self.hi / &len).to_integer();
        if !(&self.hi / &len).is_integer() {
            return None;
        }
        DyadicCell::new(level, k.to_u64()?).ok()
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.lo.is_zero() {
            write!(f, "[{}, {}]", self.lo, self.hi)
        } else {
            write!(f, "({}, {}]", self.lo, self.hi)
        }
    }
}

/// The dyadic interval `((k-1)2^-m, k 2^-m]`, first cell closed at 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicCell {
    level: u32,
    index: u64,
}

impl DyadicCell {
    pub fn new(level: u32, index: u64) -> Result<Self> {
        if level > MAX_LEVEL {
            return Err(Error::InvalidArgument(format!(
                "level {level} exceeds {MAX_LEVEL}"
            )));
        }
        if index == 0 || index > 1u64 << level {
            return Err(Error::InvalidArgument(format!(
                "cell index {index} outside 1..={} at level {level}",
                1u64 << level
            )));
        }
        Ok(Self { level, index })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn length(&self) -> Rational {
        dyadic_unit(self.level)
    }

    pub fn interval(&self) -> Interval {
        let unit = dyadic_unit(self.level);
        let hi = &unit * BigInt::from(self.index);
        Interval {
            lo: &hi - &unit,
            hi,
        }
    }

    /// Whether `self` contains `other` (dyadic cells are nested or disjoint).
    pub fn contains(&self, other: &DyadicCell) -> bool {
        other.level >= self.level
            && (other.index - 1) >> (other.level - self.level) == self.index - 1
    }

    pub fn is_disjoint(&self, other: &DyadicCell) -> bool {
        !self.contains(other) && !other.contains(self)
    }
}

impl fmt::Display for DyadicCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "D({},{})", self.level, self.index)
    }
}

/// A finite family of pairwise disjoint dyadic cells covering `[0,1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DyadicPartition {
    cells: Vec<DyadicCell>,
}

impl DyadicPartition {
    pub fn new(mut cells: Vec<DyadicCell>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::Partition("no cells".into()));
        }
        cells.sort_by(|a, b| a.interval().lo().cmp(b.interval().lo()));
        let mut cursor = Rational::zero();
        for c in &cells {
            let iv = c.interval();
            if *iv.lo() != cursor {
                return Err(Error::Partition(format!(
                    "gap or overlap at {cursor} (cell {c})"
                )));
            }
            cursor = iv.hi().clone();
        }
        if !cursor.is_one() {
            return Err(Error::Partition(format!("total length {cursor} != 1")));
        }
        Ok(Self { cells })
    }

    /// All cells of one level.
    pub fn uniform(level: u32) -> Self {
        let cells = (1..=1u64 << level)
            .map(|k| DyadicCell { level, index: k })
            .collect();
        Self { cells }
    }

    pub fn cells(&self) -> &[DyadicCell] {
        &self.cells
    }

    pub fn total_length(&self) -> Rational {
        self.cells.iter().map(|c| c.length()).sum()
    }
}
