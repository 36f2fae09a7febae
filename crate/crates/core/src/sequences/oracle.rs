//! Pair-square counts for shifted products and the Rademacher second moment.

use std::collections::HashMap;

use num_rational::Ratio;

use super::sieve::{is_squarefree, squarefree_kernel, Kernel};
use super::{generate, mix_seed, Kind, SequenceSpec};
use crate::error::{Error, Result};
use crate::par;

pub const CARD_B_MAX_M: u64 = 5000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairSquareCount {
    pub m: u64,
    pub lambda: Ratio<u64>,
    pub k: u64,
    /// Pairs `(s1, s2)` in `[m, lambda m]^2` with `s1(s1+k)s2(s2+k)` a square.
    pub card_b: u64,
    /// The same count restricted to `s_i` and `s_i + k` square-free.
    pub card_b_squarefree: u64,
}

fn range(m: u64, lambda: Ratio<u64>, k: u64) -> Result<(u64, u64)> {
    if !(2..=CARD_B_MAX_M).contains(&m) {
        return Err(Error::param(format!(
            "m = {m} outside the brute-force range 2..={CARD_B_MAX_M}"
        )));
    }
    if lambda < Ratio::from_integer(1) || lambda > Ratio::from_integer(2) {
        return Err(Error::param(format!("lambda = {lambda} must lie in [1, 2]")));
    }
    if k == 0 {
        return Err(Error::param("shift k must be >= 1"));
    }
    Ok((m, (lambda * m).floor().to_integer()))
}

/// Count pairs by grouping `s` on the square-free kernel of `s(s+k)`: the
/// product of two such numbers is a square iff their kernels coincide.
pub fn card_b(m: u64, lambda: Ratio<u64>, k: u64) -> Result<PairSquareCount> {
    let (lo, hi) = range(m, lambda, k)?;
    let mut all: HashMap<Kernel, u64> = HashMap::new();
    let mut restricted: HashMap<Kernel, u64> = HashMap::new();
    for s in lo..=hi {
        let kern = squarefree_kernel(s)?.product(&squarefree_kernel(s + k)?);
        if is_squarefree(s) && is_squarefree(s + k) {
            *restricted.entry(kern.clone()).or_default() += 1;
        }
        *all.entry(kern).or_default() += 1;
    }
    let sq = |h: &HashMap<Kernel, u64>| h.values().map(|c| c * c).sum();
    Ok(PairSquareCount {
        m,
        lambda,
        k,
        card_b: sq(&all),
        card_b_squarefree: sq(&restricted),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairMoment {
    pub trials: usize,
    /// Monte Carlo mean of `(sum_s xi(s) xi(s+k))^2`.
    pub mean: f64,
    pub std_error: f64,
    /// Exact expectation: the pair count over square-free `s, s+k`.
    pub exact: u64,
    pub card_b: u64,
}

/// Monte Carlo estimate of `E[(sum_{m <= s <= lambda m} xi(s) xi(s+k))^2]`
/// for the Rademacher multiplicative function, next to the exact value.
///
/// Trial `t` uses the generator with seed `mix_seed(seed, t)`.
pub fn rademacher_pair_moment(
    spec: &SequenceSpec,
    m: u64,
    lambda: Ratio<u64>,
    k: u64,
    trials: usize,
) -> Result<PairMoment> {
    let Kind::RademacherMultiplicative { seed } = spec.kind else {
        return Err(Error::param("pair moment needs a Rademacher multiplicative spec"));
    };
    if trials < 1000 {
        return Err(Error::param("pair moment needs at least 1000 trials"));
    }
    let counts = card_b(m, lambda, k)?;
    let (lo, hi) = range(m, lambda, k)?;
    let len = (hi + k - lo + 1) as usize;
    let samples = par::map_range(trials, |t| -> Result<f64> {
        let mut trial = spec.clone();
        trial.kind = Kind::RademacherMultiplicative {
            seed: mix_seed(seed, t as u64),
        };
        let w = generate(&trial, lo, len)?;
        let span = (hi - lo) as usize;
        let s: f64 = (0..=span)
            .map(|i| w.values[i].re * w.values[i + k as usize].re)
            .sum();
        Ok(s * s)
    });
    let samples = samples.into_iter().collect::<Result<Vec<f64>>>()?;
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(PairMoment {
        trials,
        mean,
        std_error: (var / n).sqrt(),
        exact: counts.card_b_squarefree,
        card_b: counts.card_b,
    })
}
