//! Block balancing: distribute a nonincreasing sequence over `l` blocks of
//! size `m` so that any two block sums differ by at most the largest term.

use std::ops::{Add, Sub};

use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Balance<T> {
    /// 1-based source index for each slot; block `j` owns slots `(j−1)m+1 ..= jm`.
    pub sigma: Vec<usize>,
    pub blocks: Vec<T>,
    /// `max b − min b` after each round.
    pub round_spreads: Vec<T>,
    pub spread: T,
    pub bound_ok: bool,
}

fn spread<T: Clone + PartialOrd + Sub<Output = T>>(b: &[T]) -> T {
    let mut lo = b[0].clone();
    let mut hi = b[0].clone();
    for x in &b[1..] {
        if *x < lo {
            lo = x.clone();
        }
        if *x > hi {
            hi = x.clone();
        }
    }
    hi - lo
}

/// Round `k` hands indices `(k−1)l+1 ..= kl` to the blocks in ascending
/// order of their partial sums, ties broken by block index.
pub fn balance_permutation<T>(d: &[T], l: usize, m: usize) -> Result<Balance<T>>
where
    T: Clone + PartialOrd + Add<Output = T> + Sub<Output = T> + Zero,
{
    if l == 0 || m == 0 {
        return Err(Error::InvalidArgument(format!(
            "block count l = {l} and size m = {m} must be positive"
        )));
    }
    if d.len() != l * m {
        return Err(Error::InvalidArgument(format!(
            "length {} is not l·m = {}",
            d.len(),
            l * m
        )));
    }
    if let Some(i) = (1..d.len()).find(|&i| !(d[i] <= d[i - 1])) {
        return Err(Error::Precondition(format!(
            "sequence increases at index {}",
            i + 1
        )));
    }
    if !(d[d.len() - 1] >= T::zero()) {
        return Err(Error::Precondition("sequence has a negative term".into()));
    }
    let mut sigma = vec![0; l * m];
    let mut blocks = vec![T::zero(); l];
    let mut round_spreads = Vec::with_capacity(m);
    let mut order: Vec<usize> = (0..l).collect();
    for k in 0..m {
        order.sort_by(|&a, &b| {
            blocks[a]
                .partial_cmp(&blocks[b])
                .expect("comparable sums")
                .then(a.cmp(&b))
        });
        for (r, &j) in order.iter().enumerate() {
            let idx = k * l + r;
            sigma[j * m + k] = idx + 1;
            blocks[j] = blocks[j].clone() + d[idx].clone();
        }
        let s = spread(&blocks);
        debug_assert!(s <= d[0], "round {} spread exceeds d₁", k + 1);
        round_spreads.push(s);
    }
    let spread = spread(&blocks);
    let bound_ok = round_spreads.iter().all(|s| *s <= d[0]);
    Ok(Balance {
        sigma,
        blocks,
        round_spreads,
        spread,
        bound_ok,
    })
}
