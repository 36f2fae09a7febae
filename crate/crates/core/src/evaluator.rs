//! Overflow-safe evaluation of `F(z) / U(r)`, `U(r) = e^r / sqrt(2 pi r)`.
//!
//! Every Taylor term `xi(k) z^k / k!` is formed as
//! `xi(k) e(k theta) exp(k ln r - ln k! - r + ln sqrt(2 pi r))`, whose
//! magnitude is `O(1)` near the mode `k = r`, so nothing overflows for any
//! radius up to `1e6`.
//!
//! A scaled value is *resolved* when its modulus is at least
//! `1e3 * eps * sum_k |term_k|`; below that level the result is dominated by
//! rounding in the cancelling sum. Unresolved cells are flagged, never
//! silently trusted.
//!
//! # Field cache layout
//!
//! [`write_field`] stores a [`ScaledValueField`] little-endian as
//!
//! ```text
//! 8 bytes   magic "PITSFLD1"
//! u32       method tag (0 direct, 1 central window, 2 gaussian window)
//! f64       method parameter (tolerance or c_N)
//! u64       radius count nr
//! u64       angle count na
//! f64 * nr  radii
//! f64 * nr  noise floors
//! f64 * na  angles (turns)
//! f64 * 2 * nr * na   values as (re, im), radius-major
//! ```

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dd::{cis_turns, turn_times};
use crate::error::{Error, Result};
use crate::par;
use crate::sequences::{generate, Envelope, SequenceSpec};
use crate::sum::ComplexSum;

/// Ratio of the resolution threshold to `eps * sum |term|`.
pub const RESOLVE_FACTOR: f64 = 1e3;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `ln k!`: exact table below 10, Stirling series above.
pub fn ln_factorial(k: u64) -> f64 {
    if k < 10 {
        let f: u64 = (1..=k).product();
        return (f as f64).ln();
    }
    let kf = k as f64;
    (kf + 0.5) * kf.ln() - kf + LN_SQRT_2PI + stirling_correction(kf)
}

fn stirling_correction(k: f64) -> f64 {
    let inv = 1.0 / k;
    let inv2 = inv * inv;
    inv * (1.0 / 12.0
        - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0 - inv2 / 1188.0))))
}

/// `ln(r^k / k! / U(r))`, computed without cancellation near `k = r`.
pub fn log_scaled_term(k: u64, r: f64) -> f64 {
    let half_log = 0.5 * (std::f64::consts::TAU * r).ln();
    if k < 10 {
        return k as f64 * r.ln() - ln_factorial(k) - r + half_log;
    }
    let kf = k as f64;
    let x = (r - kf) / kf;
    let l = x.ln_1p();
    kf * (l - x) + 0.5 * l - stirling_correction(kf)
}

/// The three-term exponent `gamma(k, r)` of the central-window weights.
pub fn gamma(k: u64, r: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::param("gamma(k, r) needs k >= 1"));
    }
    let k = k as f64;
    let d = k - r;
    Ok(d / (2.0 * k) + d * d / (2.0 * k) + d * d * d / (3.0 * k * k))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub lower: u64,
    pub upper: u64,
    /// Bound on the omitted scaled terms on both sides.
    pub tail_bound: f64,
}

/// Index range whose complement contributes at most `budget` in scaled
/// units, for coefficients bounded by `env`.
pub fn truncation_window(r: f64, env: Envelope, budget: f64) -> Truncation {
    let g = |k: u64| env.bound(k) * log_scaled_term(k, r).exp();
    let mode = r.floor() as u64;
    let half = budget / 2.0;
    // above the mode the ratio g(j+1)/g(j) <= q(j) = r/(j+1) * sqrt(1 + 1/(j+1))
    let ratio_up = |j: u64| {
        let jf = (j + 1) as f64;
        let e = if env.is_bounded() { 1.0 } else { (1.0 + 1.0 / jf).sqrt() };
        r / jf * e
    };
    let mut upper = mode;
    let upper_tail = loop {
        let q = ratio_up(upper + 1);
        if q < 1.0 {
            let tail = g(upper + 1) / (1.0 - q);
            if tail <= half {
                break tail;
            }
        }
        upper += 1;
    };
    // below the mode g(j-1)/g(j) <= j/r
    let mut lower = mode;
    let lower_tail = loop {
        if lower == 0 {
            break 0.0;
        }
        let q = (lower - 1) as f64 / r;
        if q < 1.0 {
            let tail = g(lower - 1) / (1.0 - q);
            if tail <= half {
                break tail;
            }
        }
        lower -= 1;
    };
    Truncation {
        lower,
        upper,
        tail_bound: upper_tail + lower_tail,
    }
}

/// Scaled Taylor weights `xi(k) r^k / k! / U(r)` on a truncation window.
#[derive(Clone, Debug)]
pub struct Weights {
    pub r: f64,
    pub first: u64,
    pub w: Vec<Complex64>,
    pub abs_sum: f64,
}

impl Weights {
    /// `sum_k w_k e(k theta)`, compensated, in index order.
    pub fn value(&self, theta: f64) -> Complex64 {
        let mut acc = ComplexSum::new();
        for (i, w) in self.w.iter().enumerate() {
            acc.add(w * cis_turns(turn_times(theta, self.first + i as u64)));
        }
        acc.value()
    }

    /// `(sum_k w_k e(k theta), sum_k k w_k e(k theta))`.
    pub fn value_and_slope(&self, theta: f64) -> (Complex64, Complex64) {
        let mut acc = ComplexSum::new();
        let mut acc1 = ComplexSum::new();
        for (i, w) in self.w.iter().enumerate() {
            let k = self.first + i as u64;
            let t = w * cis_turns(turn_times(theta, k));
            acc.add(t);
            acc1.add(t * k as f64);
        }
        (acc.value(), acc1.value())
    }

    pub fn noise_floor(&self) -> f64 {
        RESOLVE_FACTOR * f64::EPSILON * self.abs_sum
    }
}

/// Scaled value at a point together with the logarithmic derivative.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointEval {
    /// `F(z) / U(|z|)`.
    pub value: Complex64,
    /// `F'(z) / F(z)`.
    pub log_derivative: Complex64,
    pub noise_floor: f64,
}

impl PointEval {
    pub fn resolved(&self) -> bool {
        self.value.norm() >= self.noise_floor
    }
}

/// Cached coefficient data for repeated evaluation up to a radius.
#[derive(Clone, Debug)]
pub struct TaylorData {
    xi: Vec<Complex64>,
    env: Envelope,
    tol: f64,
}

impl TaylorData {
    pub fn new(spec: &SequenceSpec, r_max: f64, tol: f64) -> Result<Self> {
        if !(tol > 0.0 && tol <= 1e-6) {
            return Err(Error::param(format!("tolerance {tol} must lie in (0, 1e-6]")));
        }
        if !(r_max > 0.0 && r_max.is_finite()) {
            return Err(Error::param(format!("radius {r_max} must be positive")));
        }
        let env = spec.envelope();
        let upper = truncation_window(r_max, env, tol * 1e-2).upper;
        let xi = generate(spec, 0, upper as usize + 1)?.values;
        for (k, v) in xi.iter().enumerate() {
            if v.norm() > env.bound(k as u64) * (1.0 + 1e-9) {
                return Err(Error::Contract(format!(
                    "|xi({k})| = {} exceeds the declared envelope {}",
                    v.norm(),
                    env.bound(k as u64)
                )));
            }
        }
        Ok(TaylorData { xi, env, tol })
    }

    pub fn envelope(&self) -> Envelope {
        self.env
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.xi
    }

    pub fn at(&self, z: Complex64) -> Result<PointEval> {
        let r = z.norm();
        if r == 0.0 {
            return Err(Error::param("point evaluation needs z != 0"));
        }
        let theta = z.im.atan2(z.re) / std::f64::consts::TAU;
        let (w, _) = self.weights(r)?;
        let (s, s1) = w.value_and_slope(theta);
        Ok(PointEval {
            value: s,
            log_derivative: s1 / (z * s),
            noise_floor: w.noise_floor(),
        })
    }

    pub fn weights(&self, r: f64) -> Result<(Weights, Truncation)> {
        let cert = truncation_window(r, self.env, self.tol * 1e-2);
        if cert.upper as usize >= self.xi.len() {
            return Err(Error::param(format!(
                "radius {r} beyond the cached coefficient range"
            )));
        }
        let w: Vec<Complex64> = (cert.lower..=cert.upper)
            .map(|k| self.xi[k as usize] * log_scaled_term(k, r).exp())
            .collect();
        let abs_sum = w.iter().map(|v| v.norm()).sum();
        Ok((
            Weights {
                r,
                first: cert.lower,
                w,
                abs_sum,
            },
            cert,
        ))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DirectEval {
    pub value: Complex64,
    pub truncation: Truncation,
    pub noise_floor: f64,
    pub resolved: bool,
}

/// `F(r e(theta)) / U(r)` by the truncated log-domain Taylor sum.
pub fn eval_direct(spec: &SequenceSpec, r: f64, theta: f64, tol: f64) -> Result<DirectEval> {
    let data = TaylorData::new(spec, r, tol)?;
    let (w, truncation) = data.weights(r)?;
    let value = w.value(theta);
    let noise_floor = w.noise_floor();
    Ok(DirectEval {
        value,
        truncation,
        noise_floor,
        resolved: value.norm() >= noise_floor,
    })
}

pub const DEFAULT_C_N: f64 = 1.0;

/// Half-width `N = ceil(c_N sqrt(r) ln r)` of the central window.
pub fn window_half_width(r: f64, c_n: f64) -> Result<u64> {
    if r < 16.0 {
        return Err(Error::param(format!("window sums need r >= 16, got {r}")));
    }
    if !(c_n > 0.0) {
        return Err(Error::param(format!("c_N = {c_n} must be positive")));
    }
    let n = (c_n * r.sqrt() * r.ln()).ceil() as u64;
    if r - (n as f64) < 1.0 {
        return Err(Error::param(format!(
            "window of half-width {n} around r = {r} reaches below k = 1"
        )));
    }
    Ok(n)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum WindowKind {
    Central,
    Gaussian,
}

fn window_weights(spec: &SequenceSpec, r: f64, c_n: f64, kind: WindowKind) -> Result<Weights> {
    let n = window_half_width(r, c_n)?;
    let lo = (r - n as f64).ceil() as u64;
    let hi = (r + n as f64).floor() as u64;
    if kind == WindowKind::Gaussian && !spec.envelope().is_bounded() {
        return Err(Error::Contract(
            "gaussian window requires a bounded sequence".into(),
        ));
    }
    let xi = generate(spec, lo, (hi - lo + 1) as usize)?.values;
    let w: Vec<Complex64> = xi
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let k = lo + i as u64;
            let d = k as f64 - r;
            let e = match kind {
                WindowKind::Central => (-gamma(k, r).expect("k >= 1")).exp(),
                WindowKind::Gaussian => (-d * d / (2.0 * r)).exp(),
            };
            v * e
        })
        .collect();
    let abs_sum = w.iter().map(|v| v.norm()).sum();
    Ok(Weights {
        r,
        first: lo,
        w,
        abs_sum,
    })
}

/// Central-window sum `sum_{|k - r| <= N} xi(k) e(k theta) e^{-gamma(k, r)}`.
pub fn eval_window(spec: &SequenceSpec, r: f64, theta: f64, c_n: f64) -> Result<Complex64> {
    Ok(window_weights(spec, r, c_n, WindowKind::Central)?.value(theta))
}

/// Gaussian-weighted window `sum xi(k) e(k theta) e^{-(k-r)^2/(2r)}`.
pub fn eval_gaussian_window(spec: &SequenceSpec, r: f64, theta: f64, c_n: f64) -> Result<Complex64> {
    Ok(window_weights(spec, r, c_n, WindowKind::Gaussian)?.value(theta))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    Direct { tol: f64 },
    CentralWindow { c_n: f64 },
    GaussianWindow { c_n: f64 },
}

impl Default for Method {
    fn default() -> Self {
        Method::Direct { tol: 1e-10 }
    }
}

impl Method {
    fn tag(&self) -> (u32, f64) {
        match *self {
            Method::Direct { tol } => (0, tol),
            Method::CentralWindow { c_n } => (1, c_n),
            Method::GaussianWindow { c_n } => (2, c_n),
        }
    }

    fn from_tag(tag: u32, p: f64) -> Result<Self> {
        Ok(match tag {
            0 => Method::Direct { tol: p },
            1 => Method::CentralWindow { c_n: p },
            2 => Method::GaussianWindow { c_n: p },
            t => return Err(Error::Format(format!("unknown method tag {t}"))),
        })
    }
}

/// Scaled values on an `(r, theta)` grid, radius-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaledValueField {
    pub radii: Vec<f64>,
    pub angles: Vec<f64>,
    pub values: Vec<Complex64>,
    /// Resolution threshold per radius.
    pub noise: Vec<f64>,
    pub method: Method,
}

impl ScaledValueField {
    pub fn at(&self, ri: usize, ai: usize) -> Complex64 {
        self.values[ri * self.angles.len() + ai]
    }
}

fn uniform_angles(count: usize) -> Vec<f64> {
    (0..count).map(|j| j as f64 / count as f64).collect()
}

fn check_radii(radii: &[f64]) -> Result<()> {
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(Error::param("radii must be positive and finite"));
    }
    if radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("radii must be strictly increasing"));
    }
    Ok(())
}

fn radius_weights(spec: &SequenceSpec, radii: &[f64], method: Method) -> Result<Vec<Weights>> {
    match method {
        Method::Direct { tol } => {
            let data = TaylorData::new(spec, *radii.last().unwrap(), tol)?;
            radii.iter().map(|&r| Ok(data.weights(r)?.0)).collect()
        }
        Method::CentralWindow { c_n } => radii
            .iter()
            .map(|&r| window_weights(spec, r, c_n, WindowKind::Central))
            .collect(),
        Method::GaussianWindow { c_n } => radii
            .iter()
            .map(|&r| window_weights(spec, r, c_n, WindowKind::Gaussian))
            .collect(),
    }
}

fn field_on(spec: &SequenceSpec, radii: &[f64], angles: Vec<f64>, method: Method) -> Result<ScaledValueField> {
    check_radii(radii)?;
    let weights = radius_weights(spec, radii, method)?;
    let na = angles.len();
    let values = par::map_range(radii.len() * na, |c| weights[c / na].value(angles[c % na]));
    Ok(ScaledValueField {
        radii: radii.to_vec(),
        angles,
        values,
        noise: weights.iter().map(|w| w.noise_floor()).collect(),
        method,
    })
}

/// Values on `radii x {j / angle_count}`.
pub fn value_field(
    spec: &SequenceSpec,
    radii: &[f64],
    angle_count: usize,
    method: Method,
) -> Result<ScaledValueField> {
    if angle_count == 0 {
        return Err(Error::param("angle count must be positive"));
    }
    field_on(spec, radii, uniform_angles(angle_count), method)
}

/// `h = log|F| / r` per grid cell.
#[derive(Clone, Debug, PartialEq)]
pub struct IndicatorField {
    pub radii: Vec<f64>,
    pub angles: Vec<f64>,
    /// `-inf` where the computed value is exactly zero.
    pub h: Vec<f64>,
    /// Cells whose value is below the resolution threshold.
    pub unresolved: Vec<bool>,
    /// `h` at the resolution threshold, per radius.
    pub floor: Vec<f64>,
}

impl IndicatorField {
    pub fn at(&self, ri: usize, ai: usize) -> f64 {
        self.h[ri * self.angles.len() + ai]
    }

    pub fn unresolved_fraction(&self) -> f64 {
        self.unresolved.iter().filter(|&&u| u).count() as f64 / self.h.len().max(1) as f64
    }
}

/// `log|F(r e(theta))| / r` from a scaled magnitude.
pub fn unscale_log(scaled_abs: f64, r: f64) -> f64 {
    scaled_abs.ln() / r + 1.0 - 0.5 * (std::f64::consts::TAU * r).ln() / r
}

pub fn indicator_from(field: &ScaledValueField) -> IndicatorField {
    let na = field.angles.len();
    let mut h = Vec::with_capacity(field.values.len());
    let mut unresolved = Vec::with_capacity(field.values.len());
    for (c, v) in field.values.iter().enumerate() {
        let ri = c / na;
        let r = field.radii[ri];
        let m = v.norm();
        h.push(if m == 0.0 { f64::NEG_INFINITY } else { unscale_log(m, r) });
        unresolved.push(m < field.noise[ri]);
    }
    let floor = field
        .radii
        .iter()
        .zip(&field.noise)
        .map(|(&r, &n)| unscale_log(n, r))
        .collect();
    IndicatorField {
        radii: field.radii.clone(),
        angles: field.angles.clone(),
        h,
        unresolved,
        floor,
    }
}

pub fn indicator_field(
    spec: &SequenceSpec,
    radii: &[f64],
    angle_count: usize,
    method: Method,
) -> Result<IndicatorField> {
    Ok(indicator_from(&value_field(spec, radii, angle_count, method)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct L1Discrepancy {
    pub t: f64,
    pub value: f64,
    /// Fraction of cells clipped at the resolution threshold.
    pub unresolved_fraction: f64,
}

/// Midpoint rule for `int | t^{-1} log|F(t z)| - |z| | dA` over an annulus.
pub fn l1_discrepancy(
    spec: &SequenceSpec,
    t: f64,
    annulus: (f64, f64),
    grid: (usize, usize),
) -> Result<L1Discrepancy> {
    let (r1, r2) = annulus;
    if !(r1 > 0.0 && r1 < r2 && r2 <= 1.5) {
        return Err(Error::param(format!("annulus ({r1}, {r2}) must satisfy 0 < r1 < r2 <= 1.5")));
    }
    let (nr, na) = grid;
    if nr < 64 || na < 256 {
        return Err(Error::param("l1 grid must be at least 64 x 256"));
    }
    if !(t > 0.0) {
        return Err(Error::param("t must be positive"));
    }
    let dr = (r2 - r1) / nr as f64;
    let rho: Vec<f64> = (0..nr).map(|i| r1 + (i as f64 + 0.5) * dr).collect();
    let radii: Vec<f64> = rho.iter().map(|p| p * t).collect();
    let angles: Vec<f64> = (0..na).map(|j| (j as f64 + 0.5) / na as f64).collect();
    let field = indicator_from(&field_on(spec, &radii, angles, Method::default())?);
    let cell = dr * std::f64::consts::TAU / na as f64;
    let mut acc = crate::sum::Neumaier::new();
    for (c, (&h, &bad)) in field.h.iter().zip(&field.unresolved).enumerate() {
        let ri = c / na;
        let h = if bad { field.floor[ri].max(h) } else { h };
        acc.add(rho[ri] * (h - 1.0).abs() * rho[ri] * cell);
    }
    Ok(L1Discrepancy {
        t,
        value: acc.value(),
        unresolved_fraction: field.unresolved_fraction(),
    })
}

fn put_f64(out: &mut Vec<u8>, x: f64) {
    out.extend_from_slice(&x.to_le_bytes());
}

pub fn encode_field(field: &ScaledValueField) -> Vec<u8> {
    let mut out = Vec::with_capacity(40 + 16 * field.values.len());
    out.extend_from_slice(b"PITSFLD1");
    let (tag, p) = field.method.tag();
    out.extend_from_slice(&tag.to_le_bytes());
    put_f64(&mut out, p);
    out.extend_from_slice(&(field.radii.len() as u64).to_le_bytes());
    out.extend_from_slice(&(field.angles.len() as u64).to_le_bytes());
    for &r in &field.radii {
        put_f64(&mut out, r);
    }
    for &n in &field.noise {
        put_f64(&mut out, n);
    }
    for &a in &field.angles {
        put_f64(&mut out, a);
    }
    for v in &field.values {
        put_f64(&mut out, v.re);
        put_f64(&mut out, v.im);
    }
    out
}

pub fn decode_field(bytes: &[u8]) -> Result<ScaledValueField> {
    let mut pos = 0;
    let mut take = |n: usize| -> Result<&[u8]> {
        let s = bytes
            .get(pos..pos + n)
            .ok_or_else(|| Error::Format("truncated field file".into()))?;
        pos += n;
        Ok(s)
    };
    if take(8)? != b"PITSFLD1" {
        return Err(Error::Format("bad magic, not a PITSFLD1 file".into()));
    }
    let tag = u32::from_le_bytes(take(4)?.try_into().unwrap());
    let mut f64s = |n: usize| -> Result<Vec<f64>> {
        let raw = take(8 * n)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    };
    let p = f64s(1)?[0];
    let dims = f64s(2)?;
    let (nr, na) = (dims[0].to_bits() as usize, dims[1].to_bits() as usize);
    if nr.checked_mul(na).is_none_or(|c| c > bytes.len()) {
        return Err(Error::Format("implausible field dimensions".into()));
    }
    let radii = f64s(nr)?;
    let noise = f64s(nr)?;
    let angles = f64s(na)?;
    let flat = f64s(2 * nr * na)?;
    let values = flat.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect();
    Ok(ScaledValueField {
        radii,
        angles,
        values,
        noise,
        method: Method::from_tag(tag, p)?,
    })
}

pub fn write_field(field: &ScaledValueField, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&encode_field(field)).map_err(|e| Error::io(path, e))
}

pub fn read_field(path: &Path) -> Result<ScaledValueField> {
    let mut buf = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|e| Error::io(path, e))?;
    decode_field(&buf)
}
