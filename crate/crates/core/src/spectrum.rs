//! Autocorrelations, spectral-measure estimators and the no-gap test.
//!
//! Convention: `rho(k) = (1/n) sum_s xi(s) conj(xi(s+k))`, which equals
//! `int e(-k theta) d mu(theta)` for the periodogram measure with density
//! `(1/n) |sum_s xi(s) e(-s theta)|^2`. A pure exponential `e(n lambda)` has
//! `rho(k) = e(-k lambda)` and spectral mass at `theta = lambda`.
//!
//! Arc `j` of a `J`-arc partition is centered on `j/J`, i.e. it is the
//! half-open interval `[(j - 1/2)/J, (j + 1/2)/J)` read modulo one.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dd::cis_turns;
use crate::error::{Error, Result};
use crate::par;
use crate::sequences::{generate, SequenceSpec};
use crate::sum::{ComplexSum, Neumaier};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AutocorrelationProfile {
    pub sample_sizes: Vec<usize>,
    pub max_lag: usize,
    /// `rho_hat[i][k]` for sample size `sample_sizes[i]`.
    pub rho_hat: Vec<Vec<Complex64>>,
    /// `conv_modulus[i][k] = max_{j >= i} |rho_hat[j][k] - rho_hat[last][k]|`.
    pub conv_modulus: Vec<Vec<f64>>,
}

impl AutocorrelationProfile {
    /// Lag-`k` value at the largest sample size, extended to negative `k`
    /// by Hermitian symmetry.
    pub fn rho(&self, k: i64) -> Complex64 {
        let row = self.rho_hat.last().expect("profile has at least one row");
        let v = row[k.unsigned_abs() as usize];
        if k < 0 {
            v.conj()
        } else {
            v
        }
    }
}

pub fn autocorrelation(
    spec: &SequenceSpec,
    sample_sizes: &[usize],
    max_lag: usize,
) -> Result<AutocorrelationProfile> {
    if sample_sizes.is_empty() || sample_sizes.windows(2).any(|w| w[0] >= w[1]) || sample_sizes[0] == 0 {
        return Err(Error::param("sample sizes must be positive and strictly increasing"));
    }
    if max_lag > sample_sizes[0] / 10 {
        return Err(Error::param(format!(
            "max lag {max_lag} exceeds a tenth of the smallest sample size {}",
            sample_sizes[0]
        )));
    }
    let n_max = *sample_sizes.last().unwrap();
    let xi = generate(spec, 0, n_max + max_lag)?.values;
    let per_lag: Vec<Vec<Complex64>> = par::map_range(max_lag + 1, |k| {
        let mut acc = ComplexSum::new();
        let mut out = Vec::with_capacity(sample_sizes.len());
        let mut s = 0;
        for &n in sample_sizes {
            while s < n {
                acc.add(xi[s] * xi[s + k].conj());
                s += 1;
            }
            out.push(acc.value() / n as f64);
        }
        out
    });
    let rows = sample_sizes.len();
    let mut rho_hat: Vec<Vec<Complex64>> = (0..rows)
        .map(|i| per_lag.iter().map(|col| col[i]).collect())
        .collect();
    for row in &mut rho_hat {
        row[0].im = 0.0;
    }
    let mut conv_modulus = vec![vec![0.0; max_lag + 1]; rows];
    for k in 0..=max_lag {
        let reference = rho_hat[rows - 1][k];
        let mut running: f64 = 0.0;
        for i in (0..rows).rev() {
            running = running.max((rho_hat[i][k] - reference).norm());
            conv_modulus[i][k] = running;
        }
    }
    Ok(AutocorrelationProfile {
        sample_sizes: sample_sizes.to_vec(),
        max_lag,
        rho_hat,
        conv_modulus,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HerglotzCheck {
    pub order: usize,
    pub min_eigenvalue: f64,
    pub pass: bool,
}

/// Smallest eigenvalue of the Hermitian Toeplitz matrix `[rho(j - l)]`.
pub fn toeplitz_min_eigenvalue(rho: &[Complex64]) -> f64 {
    let m = rho.len();
    let t = DMatrix::from_fn(m, m, |j, l| {
        if j >= l {
            rho[j - l].conj()
        } else {
            rho[l - j]
        }
    });
    t.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Positive-semidefiniteness of the `(order+1)`-square Toeplitz matrix built
/// from the largest-sample row, with tolerance `-1e-6 rho(0)`.
pub fn herglotz_check(profile: &AutocorrelationProfile, order: usize) -> Result<HerglotzCheck> {
    if order > profile.max_lag {
        return Err(Error::param(format!(
            "order {order} exceeds profile max lag {}",
            profile.max_lag
        )));
    }
    let rho: Vec<Complex64> = (0..=order as i64).map(|k| profile.rho(k)).collect();
    let min_eigenvalue = toeplitz_min_eigenvalue(&rho);
    Ok(HerglotzCheck {
        order,
        min_eigenvalue,
        pass: min_eigenvalue >= -1e-6 * rho[0].re,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum Estimator {
    Periodogram { n: usize },
    Abel { r: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralEstimate {
    pub masses: Vec<f64>,
    pub estimator: Estimator,
    pub total_mass: f64,
}

impl SpectralEstimate {
    pub fn arc_count(&self) -> usize {
        self.masses.len()
    }

    /// `(left, right)` endpoints of arc `j` in turns; arc 0 starts below zero.
    pub fn arc_bounds(&self, j: usize) -> (f64, f64) {
        let jj = self.masses.len() as f64;
        ((j as f64 - 0.5) / jj, (j as f64 + 0.5) / jj)
    }
}

/// Index of the arc containing `theta` (turns).
pub fn arc_index(theta: f64, arcs: usize) -> usize {
    let x = (theta * arcs as f64 + 0.5).floor();
    x.rem_euclid(arcs as f64) as usize
}

fn check_arcs(arcs: usize) -> Result<()> {
    if arcs < 2 {
        return Err(Error::param(format!("arc count {arcs} must be >= 2")));
    }
    Ok(())
}

/// Midpoint-rule masses of `density(theta) = weight * |sum_t y_t e(-t theta)|^2`
/// on cells of width `1/grid`, accumulated into centered arcs.
fn arc_masses(y: &[Complex64], weight: f64, arcs: usize, grid: usize) -> Vec<f64> {
    debug_assert!(grid >= y.len() && grid % (2 * arcs) == 0);
    // midpoints (s + 1/2)/grid: pre-twist by e(-t / (2 grid))
    let mut buf: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); grid];
    for (t, v) in y.iter().enumerate() {
        buf[t] = v * cis_turns(-(t as f64) / (2.0 * grid as f64));
    }
    FftPlanner::new().plan_fft_forward(grid).process(&mut buf);
    let cells_per_arc = grid / arcs;
    let half = cells_per_arc / 2;
    let cell = weight / grid as f64;
    par::map_range(arcs, |j| {
        let mut acc = Neumaier::new();
        for c in 0..cells_per_arc {
            let s = (j * cells_per_arc + grid - half + c) % grid;
            acc.add(buf[s].norm_sqr() * cell);
        }
        acc.value()
    })
}

fn grid_size(len: usize, arcs: usize) -> usize {
    // a multiple of 2J, so every arc holds a whole number of cells
    let min = (8 * arcs).max(2 * len.next_power_of_two());
    min.div_ceil(2 * arcs) * 2 * arcs
}

pub fn periodogram(spec: &SequenceSpec, n: usize, arcs: usize) -> Result<SpectralEstimate> {
    check_arcs(arcs)?;
    if arcs > n {
        return Err(Error::param(format!("arc count {arcs} exceeds sample size {n}")));
    }
    let xi = generate(spec, 0, n)?.values;
    let masses = arc_masses(&xi, 1.0 / n as f64, arcs, grid_size(n, arcs));
    let total_mass = crate::sum::sum_real(masses.iter().copied());
    Ok(SpectralEstimate {
        masses,
        estimator: Estimator::Periodogram { n },
        total_mass,
    })
}

/// Abel-mean estimate with density `(1 - r^2) |f(r e(-theta))|^2`, where
/// `f(z) = sum xi(n) z^n`. The factor `1 - r^2` normalizes the total mass to
/// the Abel mean of `|xi|^2`, i.e. to `rho(0)`.
pub fn abel_estimate(spec: &SequenceSpec, r: f64, arcs: usize) -> Result<SpectralEstimate> {
    check_arcs(arcs)?;
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::param(format!("Abel radius r = {r} must lie in (0, 1)")));
    }
    let env = spec.envelope();
    let target = 1e-12 * (1.0 - r);
    // smallest n with r^n * env(n) <= target
    let mut n = ((target / env.bound(1)).ln() / r.ln()).ceil().max(1.0) as usize;
    while r.powi(n as i32) * env.bound(n as u64) > target {
        n += n / 4 + 1;
    }
    let xi = generate(spec, 0, n)?.values;
    let lr = r.ln();
    let y: Vec<Complex64> = xi
        .iter()
        .enumerate()
        .map(|(t, v)| v * (t as f64 * lr).exp())
        .collect();
    let masses = arc_masses(&y, 1.0 - r * r, arcs, grid_size(n, arcs));
    let total_mass = crate::sum::sum_real(masses.iter().copied());
    Ok(SpectralEstimate {
        masses,
        estimator: Estimator::Abel { r },
        total_mass,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoGapVerdict {
    FullSupport,
    GapSuspected,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoGapReport {
    #[serde(rename = "J")]
    pub arcs: usize,
    pub min_normalized_mass: f64,
    pub threshold: f64,
    pub verdict: NoGapVerdict,
    pub witness: usize,
}

pub const DEFAULT_NO_GAP_THRESHOLD: f64 = 0.1;

pub fn no_gap_test(est: &SpectralEstimate, threshold: f64) -> Result<NoGapReport> {
    let arcs = est.masses.len();
    if arcs < 8 {
        return Err(Error::param(format!("no-gap test needs at least 8 arcs, got {arcs}")));
    }
    let mut witness = 0;
    for (j, &m) in est.masses.iter().enumerate() {
        if m < est.masses[witness] {
            witness = j;
        }
    }
    let min_normalized_mass = if est.total_mass > 0.0 {
        est.masses[witness] * arcs as f64 / est.total_mass
    } else {
        0.0
    };
    let verdict = if min_normalized_mass >= threshold {
        NoGapVerdict::FullSupport
    } else {
        NoGapVerdict::GapSuspected
    };
    Ok(NoGapReport {
        arcs,
        min_normalized_mass,
        threshold,
        verdict,
        witness,
    })
}

/// Diagnostic convergence level `psi_hat(n)` per tabulated sample size.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PsiEstimate {
    pub sample_sizes: Vec<usize>,
    pub psi: Vec<usize>,
}

/// Largest nondecreasing `psi` with `psi(n) <= K` and
/// `max_{|k| <= psi(n)} |rho_n(k) - rho_N(k)| <= 1/psi(n)` at every tabulated
/// `n`, using the largest sample `N` as a stand-in for the limit.
pub fn psi_estimate(profile: &AutocorrelationProfile) -> Result<PsiEstimate> {
    if profile.sample_sizes.len() < 3 {
        return Err(Error::param("psi estimate needs at least three sample sizes"));
    }
    let last = profile.rho_hat.len() - 1;
    // valid levels form {0, ..., best}: the error grows with the level while
    // the allowance 1/level shrinks
    let best: Vec<usize> = profile
        .rho_hat
        .iter()
        .map(|row| {
            let mut err: f64 = 0.0;
            let mut level = 0;
            for (k, v) in row.iter().enumerate() {
                err = err.max((v - profile.rho_hat[last][k]).norm());
                if k >= 1 && err <= 1.0 / k as f64 {
                    level = k;
                } else if k >= 1 {
                    break;
                }
            }
            level
        })
        .collect();
    let mut psi = best.clone();
    for i in (0..psi.len().saturating_sub(1)).rev() {
        psi[i] = psi[i].min(psi[i + 1]);
    }
    Ok(PsiEstimate {
        sample_sizes: profile.sample_sizes.clone(),
        psi,
    })
}
