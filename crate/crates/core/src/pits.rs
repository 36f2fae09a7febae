//! Zero-angle statistics, the window lower-bound probe, indicator
//! quantiles and the end-to-end verification report.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::evaluator::{self, IndicatorField, L1Discrepancy};
use crate::par;
use crate::sequences::{generate, mix_seed, SequenceSpec};
use crate::spectrum::{self, NoGapReport, NoGapVerdict};
use crate::zeros::{self, ZeroSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    /// Fail dominates, then Inconclusive.
    pub fn all(vs: &[Verdict]) -> Verdict {
        if vs.contains(&Verdict::Fail) {
            Verdict::Fail
        } else if vs.contains(&Verdict::Inconclusive) {
            Verdict::Inconclusive
        } else {
            Verdict::Pass
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub no_gap: f64,
    pub discrepancy: f64,
    pub chi2_quantile: f64,
    pub slope: (f64, f64),
    pub pits_area: f64,
    pub c_probe: f64,
    /// Bound on the normalized L1 discrepancy at the largest `t`.
    pub l1: f64,
    /// Largest tolerated fraction of unresolved cells in the L1 grid.
    pub unresolved: f64,
    /// Minimum number of zeros for statistical verdicts.
    pub min_zeros: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            no_gap: spectrum::DEFAULT_NO_GAP_THRESHOLD,
            discrepancy: 0.1,
            chi2_quantile: 0.99,
            slope: (0.8, 1.2),
            pits_area: 0.05,
            c_probe: 0.3,
            l1: 0.05,
            unresolved: 0.05,
            min_zeros: 30,
        }
    }
}

/// Kuiper-type circular discrepancy: the largest deviation of the empirical
/// angle distribution from uniform over all arcs. Invariant under rotation.
pub fn circular_discrepancy(angles: &[f64]) -> f64 {
    if angles.is_empty() {
        return 1.0;
    }
    let mut u: Vec<f64> = angles.iter().map(|a| a.rem_euclid(1.0)).collect();
    u.sort_by(f64::total_cmp);
    let n = u.len() as f64;
    let mut above: f64 = 0.0;
    let mut below: f64 = 0.0;
    for (i, &x) in u.iter().enumerate() {
        above = above.max((i + 1) as f64 / n - x);
        below = below.max(x - i as f64 / n);
    }
    (above + below).clamp(0.0, 1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquidistributionReport {
    pub zero_count: u64,
    pub annulus: (f64, f64),
    pub star_discrepancy: f64,
    pub sector_chi2: f64,
    pub chi2_critical: f64,
    pub sectors: usize,
    pub radial_slope: f64,
    pub discrepancy_verdict: Verdict,
    pub chi2_verdict: Verdict,
    pub slope_verdict: Verdict,
}

impl EquidistributionReport {
    pub fn verdict(&self) -> Verdict {
        Verdict::all(&[self.discrepancy_verdict, self.chi2_verdict, self.slope_verdict])
    }
}

/// Number of nested radii in the radial slope fit.
const SLOPE_RADII: usize = 10;

pub fn equidistribution(zs: &ZeroSet, sectors: usize, th: &Thresholds) -> Result<EquidistributionReport> {
    if sectors < 2 {
        return Err(Error::param("equidistribution needs at least two sectors"));
    }
    let mut angles = Vec::new();
    for z in &zs.zeros {
        for _ in 0..z.multiplicity {
            angles.push(z.angle);
        }
    }
    let n = angles.len() as u64;
    let star_discrepancy = circular_discrepancy(&angles);
    let counts = zeros::sector_counts(zs, sectors, zs.annulus.1)?;
    let expected = n as f64 / sectors as f64;
    let sector_chi2 = if n == 0 {
        0.0
    } else {
        counts
            .iter()
            .map(|c| (c.count as f64 - expected).powi(2) / expected)
            .sum()
    };
    let chi2_critical = ChiSquared::new((sectors - 1) as f64)
        .map_err(|e| Error::param(e.to_string()))?
        .inverse_cdf(th.chi2_quantile);
    let (lo, hi) = zs.annulus;
    let radii: Vec<f64> = (1..=SLOPE_RADII)
        .map(|i| lo + (hi - lo) * i as f64 / SLOPE_RADII as f64)
        .collect();
    let cum: Vec<f64> = radii
        .iter()
        .map(|&r| {
            zs.zeros
                .iter()
                .filter(|z| z.modulus <= r)
                .map(|z| z.multiplicity as f64)
                .sum()
        })
        .collect();
    let radial_slope = least_squares_slope(&radii, &cum).max(0.0);
    let enough = n as usize >= th.min_zeros;
    let gate = |ok: bool| if enough { Verdict::from_bool(ok) } else { Verdict::Inconclusive };
    Ok(EquidistributionReport {
        zero_count: n,
        annulus: zs.annulus,
        star_discrepancy,
        sector_chi2,
        chi2_critical,
        sectors,
        radial_slope,
        discrepancy_verdict: gate(star_discrepancy <= th.discrepancy),
        chi2_verdict: gate(sector_chi2 <= chi2_critical),
        slope_verdict: gate(radial_slope >= th.slope.0 && radial_slope <= th.slope.1),
    })
}

fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProbeResult {
    pub r: f64,
    pub theta: f64,
    pub r0: f64,
    pub theta0: f64,
    pub value: f64,
    /// `c_probe * r^{1/4} * rms|xi|` over the window at `r`.
    pub threshold: f64,
    pub pass: bool,
}

const PROBE_GRID: usize = 32;

/// Largest `|W~(r0, theta0)|` on a 32 x 32 grid in `(r, r + delta r) x
/// (theta - delta, theta + delta)`.
///
/// The `r^{1/4}` bar is multiplied by the root-mean-square of `|xi|` over the
/// window, which is 1 for unimodular data and makes the test invariant under
/// rescaling `xi`.
pub fn lower_bound_probe(
    spec: &SequenceSpec,
    r: f64,
    delta: f64,
    theta: f64,
    c_n: f64,
    c_probe: f64,
) -> Result<ProbeResult> {
    if r < 100.0 {
        return Err(Error::param(format!("probe radius {r} must be >= 100")));
    }
    if !(delta > 0.0 && delta <= 0.5) {
        return Err(Error::param(format!("probe width {delta} must lie in (0, 0.5]")));
    }
    let g = PROBE_GRID as f64;
    let radii: Vec<f64> = (0..PROBE_GRID)
        .map(|i| r + delta * r * (i as f64 + 0.5) / g)
        .collect();
    let angles: Vec<f64> = (0..PROBE_GRID)
        .map(|j| theta - delta + 2.0 * delta * (j as f64 + 0.5) / g)
        .collect();
    let cells = par::map_range(PROBE_GRID, |i| -> Result<(f64, f64, f64)> {
        let mut best = (0.0, radii[i], angles[0]);
        for &a in &angles {
            let v = evaluator::eval_window(spec, radii[i], a, c_n)?.norm();
            if v > best.0 {
                best = (v, radii[i], a);
            }
        }
        Ok(best)
    });
    let mut best = (-1.0, r, theta);
    for c in cells {
        let c = c?;
        if c.0 > best.0 {
            best = c;
        }
    }
    let n = evaluator::window_half_width(r, c_n)?;
    let lo = (r - n as f64).ceil() as u64;
    let hi = (r + n as f64).floor() as u64;
    let xi = generate(spec, lo, (hi - lo + 1) as usize)?.values;
    let rms = (xi.iter().map(Complex64::norm_sqr).sum::<f64>() / xi.len() as f64).sqrt();
    let threshold = c_probe * r.powf(0.25) * rms;
    Ok(ProbeResult {
        r,
        theta,
        r0: best.1,
        theta0: best.2.rem_euclid(1.0),
        value: best.0,
        threshold,
        pass: best.0 >= threshold,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PitsProfile {
    pub cells: usize,
    pub q01: f64,
    pub q05: f64,
    pub q25: f64,
    pub q50: f64,
    pub q95: f64,
    /// Fraction of cells with `h < 0.9`; unresolved cells count as pits.
    pub pits_area: f64,
    pub unresolved_fraction: f64,
}

pub const PITS_LEVEL: f64 = 0.9;

/// Quantiles of `h` (unresolved cells clipped at their resolution floor).
pub fn pits_profile(field: &IndicatorField) -> Result<PitsProfile> {
    let cells = field.h.len();
    if cells < 10_000 {
        return Err(Error::param(format!("pits profile needs >= 1e4 cells, got {cells}")));
    }
    let na = field.angles.len();
    let mut h: Vec<f64> = field
        .h
        .iter()
        .zip(&field.unresolved)
        .enumerate()
        .map(|(c, (&h, &bad))| if bad { field.floor[c / na].max(h) } else { h })
        .collect();
    let pits = field
        .h
        .iter()
        .zip(&field.unresolved)
        .filter(|(&h, &bad)| bad || h < PITS_LEVEL)
        .count();
    h.sort_by(f64::total_cmp);
    let q = |p: f64| h[((p * cells as f64).floor() as usize).min(cells - 1)];
    Ok(PitsProfile {
        cells,
        q01: q(0.01),
        q05: q(0.05),
        q25: q(0.25),
        q50: q(0.5),
        q95: q(0.95),
        pits_area: pits as f64 / cells as f64,
        unresolved_fraction: field.unresolved_fraction(),
    })
}

/// Stage parameters of [`verify`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyConfig {
    pub periodogram_n: usize,
    pub arcs: usize,
    pub annulus: (f64, f64),
    pub sectors: usize,
    pub l1_t: Vec<f64>,
    pub l1_annulus: (f64, f64),
    pub l1_grid: (usize, usize),
    pub probes: usize,
    pub probe_radii: (f64, f64),
    pub probe_delta: f64,
    pub c_n: f64,
    pub seed: u64,
    pub thresholds: Thresholds,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            periodogram_n: 1 << 14,
            arcs: 64,
            annulus: (50.0, 300.0),
            sectors: 16,
            l1_t: vec![200.0, 400.0],
            l1_annulus: (0.5, 1.0),
            l1_grid: (64, 256),
            probes: 5,
            probe_radii: (400.0, 1600.0),
            probe_delta: 0.05,
            c_n: evaluator::DEFAULT_C_N,
            seed: 0x5EED,
            thresholds: Thresholds::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Overall {
    ConsistentWithTheorem1,
    HypothesisFails,
    ConclusionFails,
    Inconclusive,
}

/// Overall verdict from the hypothesis, conclusion and probe verdicts.
///
/// | hypothesis | conclusion | probe | overall |
/// |---|---|---|---|
/// | Fail | any | any | HypothesisFails |
/// | Pass | Fail | any | ConclusionFails |
/// | Pass | Pass | Pass | ConsistentWithTheorem1 |
/// | otherwise | | | Inconclusive |
pub fn decide(hypothesis: Verdict, conclusion: Verdict, probe: Verdict) -> Overall {
    match (hypothesis, conclusion, probe) {
        (Verdict::Fail, _, _) => Overall::HypothesisFails,
        (Verdict::Pass, Verdict::Fail, _) => Overall::ConclusionFails,
        (Verdict::Pass, Verdict::Pass, Verdict::Pass) => Overall::ConsistentWithTheorem1,
        _ => Overall::Inconclusive,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct L1Entry {
    #[serde(flatten)]
    pub raw: L1Discrepancy,
    /// Discrepancy divided by `int |z| dA` over the annulus.
    pub normalized: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdicts {
    pub hypothesis: Verdict,
    pub equidistribution: Verdict,
    pub l1: Verdict,
    pub conclusion: Verdict,
    pub probe: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub schema: &'static str,
    pub spec: SequenceSpec,
    pub spec_hash: String,
    pub config: VerifyConfig,
    pub no_gap: NoGapReport,
    pub zeros: ZeroSetSummary,
    pub equidistribution: EquidistributionReport,
    pub l1: Vec<L1Entry>,
    pub probes: Vec<ProbeResult>,
    pub verdicts: Verdicts,
    pub verdict: Overall,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZeroSetSummary {
    pub count: u64,
    pub unresolved: usize,
    pub truncation_degree: u64,
    pub max_residual: f64,
}

pub const REPORT_SCHEMA: &str = "pits-report/1";

/// Intermediate stage outputs of a verification run.
#[derive(Clone, Debug)]
pub struct Artifacts {
    pub spectrum: spectrum::SpectralEstimate,
    pub zeros: ZeroSet,
}

/// Run every stage on one spec and fill the decision table.
pub fn verify(spec: &SequenceSpec, cfg: &VerifyConfig) -> Result<VerificationReport> {
    Ok(verify_with_artifacts(spec, cfg)?.0)
}

pub fn verify_with_artifacts(spec: &SequenceSpec, cfg: &VerifyConfig) -> Result<(VerificationReport, Artifacts)> {
    let th = &cfg.thresholds;
    let est = spectrum::periodogram(spec, cfg.periodogram_n, cfg.arcs).map_err(|e| e.in_stage("no-gap"))?;
    let no_gap = spectrum::no_gap_test(&est, th.no_gap).map_err(|e| e.in_stage("no-gap"))?;
    let hypothesis = Verdict::from_bool(no_gap.verdict == NoGapVerdict::FullSupport);

    let zs = zeros::find_zeros(spec, cfg.annulus, zeros::TRUNCATION_TOL).map_err(|e| e.in_stage("zeros"))?;
    let equi = equidistribution(&zs, cfg.sectors, th).map_err(|e| e.in_stage("equidistribution"))?;

    // the L1 stage sees xi / sqrt(rho(0)), so rescaling xi leaves it unchanged
    let mut unit = spec.clone();
    if est.total_mass > 0.0 {
        let s = unit.scale.unwrap_or(Complex64::new(1.0, 0.0));
        unit.scale = Some(s / est.total_mass.sqrt());
    }
    let (a, b) = cfg.l1_annulus;
    let mass = std::f64::consts::TAU * (b.powi(3) - a.powi(3)) / 3.0;
    let mut l1 = Vec::new();
    for &t in &cfg.l1_t {
        let raw = evaluator::l1_discrepancy(&unit, t, cfg.l1_annulus, cfg.l1_grid).map_err(|e| e.in_stage("l1"))?;
        l1.push(L1Entry {
            raw,
            normalized: raw.value / mass,
        });
    }
    let l1_verdict = match l1.last() {
        Some(e) => Verdict::from_bool(e.normalized <= th.l1 && e.raw.unresolved_fraction <= th.unresolved),
        None => Verdict::Inconclusive,
    };

    let (r_lo, r_hi) = cfg.probe_radii;
    let sites: Vec<(f64, f64)> = (0..cfg.probes as u64)
        .map(|i| {
            let u = |salt| (mix_seed(cfg.seed, 2 * i + salt) >> 11) as f64 / (1u64 << 53) as f64;
            (r_lo + (r_hi - r_lo) * u(0), u(1))
        })
        .collect();
    let mut probes = Vec::new();
    for (r, theta) in sites {
        probes.push(
            lower_bound_probe(spec, r, cfg.probe_delta, theta, cfg.c_n, th.c_probe)
                .map_err(|e| e.in_stage("probe"))?,
        );
    }
    let probe = if probes.is_empty() {
        Verdict::Inconclusive
    } else {
        Verdict::from_bool(probes.iter().all(|p| p.pass))
    };

    let equi_verdict = equi.verdict();
    let conclusion = Verdict::all(&[equi_verdict, l1_verdict]);
    let report = VerificationReport {
        schema: REPORT_SCHEMA,
        spec: spec.clone(),
        spec_hash: crate::config::spec_hash(spec),
        config: cfg.clone(),
        no_gap,
        zeros: ZeroSetSummary {
            count: zs.count(),
            unresolved: zs.unresolved,
            truncation_degree: zs.truncation_degree,
            max_residual: zs.max_residual,
        },
        equidistribution: equi,
        l1,
        probes,
        verdicts: Verdicts {
            hypothesis,
            equidistribution: equi_verdict,
            l1: l1_verdict,
            conclusion,
            probe,
        },
        verdict: decide(hypothesis, conclusion, probe),
    };
    Ok((report, Artifacts { spectrum: est, zeros: zs }))
}

/// Plain-text rendering of a report.
pub fn render_text(r: &VerificationReport) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    let _ = writeln!(s, "verdict: {:?}", r.verdict);
    let _ = writeln!(s, "spec hash: {}", r.spec_hash);
    let _ = writeln!(
        s,
        "no-gap: J={} min normalized mass {:.4} (threshold {}) -> {:?}, witness arc {}",
        r.no_gap.arcs, r.no_gap.min_normalized_mass, r.no_gap.threshold, r.no_gap.verdict, r.no_gap.witness
    );
    let e = &r.equidistribution;
    let _ = writeln!(
        s,
        "zeros in ({}, {}): {} (unresolved {}, degree {}, max residual {:.2e})",
        e.annulus.0, e.annulus.1, r.zeros.count, r.zeros.unresolved, r.zeros.truncation_degree, r.zeros.max_residual
    );
    let _ = writeln!(
        s,
        "equidistribution: discrepancy {:.4} {:?}, chi2 {:.2}/{:.2} {:?}, radial slope {:.3} {:?}",
        e.star_discrepancy,
        e.discrepancy_verdict,
        e.sector_chi2,
        e.chi2_critical,
        e.chi2_verdict,
        e.radial_slope,
        e.slope_verdict
    );
    for l in &r.l1 {
        let _ = writeln!(
            s,
            "l1 t={}: {:.5} (normalized {:.5}, unresolved {:.3})",
            l.raw.t, l.raw.value, l.normalized, l.raw.unresolved_fraction
        );
    }
    for p in &r.probes {
        let _ = writeln!(
            s,
            "probe r={:.1} theta={:.4}: |W| {:.3} at ({:.1}, {:.4}) vs {:.3} -> {}",
            p.r,
            p.theta,
            p.value,
            p.r0,
            p.theta0,
            p.threshold,
            if p.pass { "pass" } else { "fail" }
        );
    }
    let v = &r.verdicts;
    let _ = writeln!(
        s,
        "components: hypothesis {:?}, equidistribution {:?}, l1 {:?}, conclusion {:?}, probe {:?}",
        v.hypothesis, v.equidistribution, v.l1, v.conclusion, v.probe
    );
    s
}
