//! Zeros of `F` in annuli and argument-principle counts.
//!
//! The series is truncated at degree `M` and rescaled by `z = rho_out w`, so
//! the coefficients `c_k = xi(k) rho_out^k / k! e^{-rho_out}` are bounded by
//! one. Roots of the polynomial come from Aberth-Ehrlich iteration; each
//! candidate is then refined and certified against the full (untruncated)
//! scaled series, which is independent of the polynomial.
//!
//! Angles are in turns. A sector count over `[t1, t2)` therefore expects
//! `(t2 - t1) * r` zeros per unit radius density, the turn form of
//! `(theta2 - theta1) r / (2 pi)` with radians.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::evaluator::{ln_factorial, log_scaled_term, TaylorData};
use crate::error::{Error, Result};
use crate::par;
use crate::sequences::{generate, SequenceSpec};

pub const MAX_OUTER_RADIUS: f64 = 600.0;

/// Scaled tail tolerance used to pick the polynomial degree.
pub const TRUNCATION_TOL: f64 = 1e-16;

/// Smallest `M >= ceil(R) + 8` whose scaled tail at radius `R` is `<= tol`.
pub fn truncation_degree(spec: &SequenceSpec, radius: f64, tol: f64) -> Result<u64> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::param(format!("radius {radius} must be positive")));
    }
    if !(tol > 0.0) {
        return Err(Error::param("tolerance must be positive"));
    }
    let env = spec.envelope();
    let floor = radius.ceil() as u64 + 8;
    let g = |k: u64| env.bound(k) * log_scaled_term(k, radius).exp();
    // terms from floor+1 on, until the remainder is negligible against tol
    let mut terms = Vec::new();
    let mut k = floor + 1;
    loop {
        let t = g(k);
        terms.push(t);
        let q = radius / (k + 1) as f64 * if env.is_bounded() { 1.0 } else { 1.01 };
        if q < 0.5 && t / (1.0 - q) < tol * 1e-6 {
            break;
        }
        k += 1;
    }
    // suffix[i] bounds the tail beyond index floor + i
    let mut suffix = vec![0.0; terms.len() + 1];
    for i in (0..terms.len()).rev() {
        suffix[i] = suffix[i + 1] + terms[i];
    }
    let mut m = floor;
    for s in &suffix {
        if *s <= tol {
            return Ok(m);
        }
        m += 1;
    }
    Ok(m)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Seeding {
    /// Radii from the Newton polygon of `|c_k|`, golden-angle offsets.
    #[default]
    NewtonPolygon,
    /// Circles `|w| in {0.5, 0.85, 1.0}` with golden-angle spacing.
    ThreeCircles,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroOptions {
    pub tail_tol: f64,
    pub max_sweeps: usize,
    pub seeding: Seeding,
    /// Merge radius in the rescaled `w` plane.
    pub cluster_radius: f64,
    pub max_residual: f64,
}

impl Default for ZeroOptions {
    fn default() -> Self {
        ZeroOptions {
            tail_tol: TRUNCATION_TOL,
            max_sweeps: 2000,
            seeding: Seeding::NewtonPolygon,
            cluster_radius: 1e-8,
            max_residual: 1e-6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Zero {
    pub modulus: f64,
    /// Turns in `[0, 1)`.
    pub angle: f64,
    pub multiplicity: u32,
    /// `|F / U|` at the zero.
    pub residual: f64,
}

impl Zero {
    pub fn z(&self) -> Complex64 {
        Complex64::from_polar(self.modulus, self.angle * std::f64::consts::TAU)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZeroSet {
    pub annulus: (f64, f64),
    pub zeros: Vec<Zero>,
    pub truncation_degree: u64,
    pub max_residual: f64,
    pub method: String,
    /// Polynomial roots in the annulus where `|F / U|` stays below the
    /// floating-point noise floor, so the series cannot confirm them.
    pub unresolved: usize,
    pub sweeps: usize,
}

impl ZeroSet {
    pub fn count(&self) -> u64 {
        self.zeros.iter().map(|z| z.multiplicity as u64).sum()
    }
}

struct Horner {
    /// `P / P'`.
    newton: Complex64,
    /// `|P|` over the rounding bound of its evaluation.
    small: bool,
}

fn horner(c: &[Complex64], w: Complex64) -> Horner {
    let d = c.len() - 1;
    let slack = (4 * d + 1) as f64 * f64::EPSILON;
    if w.norm() <= 1.0 {
        let a = w.norm();
        let mut p = c[d];
        let mut dp = Complex64::new(0.0, 0.0);
        let mut s = c[d].norm();
        for k in (0..d).rev() {
            dp = dp * w + p;
            p = p * w + c[k];
            s = s * a + c[k].norm();
        }
        Horner {
            newton: p / dp,
            small: p.norm() <= slack * s,
        }
    } else {
        // P(w) = w^d Q(1/w) with reversed coefficients
        let y = w.inv();
        let a = y.norm();
        let mut q = c[0];
        let mut dq = Complex64::new(0.0, 0.0);
        let mut s = c[0].norm();
        for k in 1..=d {
            dq = dq * y + q;
            q = q * y + c[k];
            s = s * a + c[k].norm();
        }
        Horner {
            newton: q / (y * (q * d as f64 - y * dq)),
            small: q.norm() <= slack * s,
        }
    }
}

const GOLDEN_TURN: f64 = 0.381_966_011_250_105_15;

fn seeds(c: &[Complex64], seeding: Seeding) -> Vec<Complex64> {
    let d = c.len() - 1;
    let polar = |radius: f64, turn: f64| Complex64::from_polar(radius, turn * std::f64::consts::TAU);
    match seeding {
        Seeding::ThreeCircles => (0..d)
            .map(|i| {
                let radius = [0.5, 0.85, 1.0][i % 3];
                polar(radius, i as f64 * GOLDEN_TURN + 0.1)
            })
            .collect(),
        Seeding::NewtonPolygon => {
            // upper convex hull of (k, ln|c_k|)
            let pts: Vec<(f64, f64)> = c
                .iter()
                .enumerate()
                .filter(|(_, v)| v.norm() > 0.0)
                .map(|(k, v)| (k as f64, v.norm().ln()))
                .collect();
            let mut hull: Vec<(f64, f64)> = Vec::new();
            for p in pts {
                while hull.len() >= 2 {
                    let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
                    let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
                    if cross >= 0.0 {
                        hull.pop();
                    } else {
                        break;
                    }
                }
                hull.push(p);
            }
            let mut out = Vec::with_capacity(d);
            for (e, pair) in hull.windows(2).enumerate() {
                let (a, b) = (pair[0], pair[1]);
                let n = (b.0 - a.0) as usize;
                let radius = ((a.1 - b.1) / (b.0 - a.0)).exp();
                for j in 0..n {
                    out.push(polar(
                        radius,
                        j as f64 / n as f64 + e as f64 * GOLDEN_TURN + 0.1,
                    ));
                }
            }
            out
        }
    }
}

/// Aberth-Ehrlich iteration with Jacobi-style sweeps.
fn aberth(c: &[Complex64], mut w: Vec<Complex64>, max_sweeps: usize) -> Result<(Vec<Complex64>, usize)> {
    let d = w.len();
    let mut done = vec![false; d];
    for sweep in 1..=max_sweeps {
        let corrections: Vec<Option<Complex64>> = par::map_range(d, |i| {
            if done[i] {
                return None;
            }
            let h = horner(c, w[i]);
            if h.small {
                return Some(Complex64::new(0.0, 0.0));
            }
            let mut a = Complex64::new(0.0, 0.0);
            for (j, wj) in w.iter().enumerate() {
                if j != i {
                    a += (w[i] - wj).inv();
                }
            }
            let corr = h.newton / (Complex64::new(1.0, 0.0) - h.newton * a);
            Some(if corr.is_finite() {
                corr
            } else {
                // degenerate step: nudge off the critical point
                w[i] * 1e-3 + 1e-12
            })
        });
        let mut pending = 0;
        for (i, corr) in corrections.into_iter().enumerate() {
            if let Some(corr) = corr {
                w[i] -= corr;
                if corr.norm() <= 1e-12 * w[i].norm() {
                    done[i] = true;
                } else {
                    pending += 1;
                }
            }
        }
        if pending == 0 {
            return Ok((w, sweep));
        }
    }
    Err(Error::NoConvergence {
        sweeps: max_sweeps,
        unconverged: (0..d).filter(|&i| !done[i]).collect(),
    })
}

/// Zeros of `F` with `rho_in <= |z| <= rho_out`.
pub fn find_zeros(spec: &SequenceSpec, annulus: (f64, f64), tol: f64) -> Result<ZeroSet> {
    find_zeros_with(
        spec,
        annulus,
        ZeroOptions {
            tail_tol: tol,
            ..ZeroOptions::default()
        },
    )
}

pub fn find_zeros_with(spec: &SequenceSpec, annulus: (f64, f64), opts: ZeroOptions) -> Result<ZeroSet> {
    let (rho_in, rho_out) = annulus;
    if !(rho_in >= 0.0 && rho_in < rho_out) {
        return Err(Error::param(format!("annulus ({rho_in}, {rho_out}) is degenerate")));
    }
    if rho_out > MAX_OUTER_RADIUS {
        return Err(Error::param(format!(
            "outer radius {rho_out} exceeds the cap {MAX_OUTER_RADIUS}"
        )));
    }
    let m = truncation_degree(spec, rho_out, opts.tail_tol)?;
    let xi = generate(spec, 0, m as usize + 1)?.values;
    let ln_rho = rho_out.ln();
    let mut c: Vec<Complex64> = xi
        .iter()
        .enumerate()
        .map(|(k, v)| v * (k as f64 * ln_rho - ln_factorial(k as u64) - rho_out).exp())
        .collect();
    while c.last().is_some_and(|v| v.norm() == 0.0) {
        c.pop();
    }
    let origin = c.iter().take_while(|v| v.norm() == 0.0).count();
    let mut zeros = Vec::new();
    let mut sweeps = 0;
    let mut unresolved = 0;
    if origin > 0 && rho_in == 0.0 {
        zeros.push(Zero {
            modulus: 0.0,
            angle: 0.0,
            multiplicity: origin as u32,
            residual: 0.0,
        });
    }
    let c: Vec<Complex64> = c.into_iter().skip(origin).collect();
    let data = TaylorData::new(spec, rho_out * 1.25 + 1.0, 1e-12)?;
    if c.len() >= 2 {
        let (roots, n) = aberth(&c, seeds(&c, opts.seeding), opts.max_sweeps)?;
        sweeps = n;
        let w_in = rho_in / rho_out;
        let candidates: Vec<Complex64> = roots
            .into_iter()
            .filter(|w| w.norm() >= 0.9 * w_in && w.norm() <= 1.1)
            .map(|w| w * rho_out)
            .collect();
        let refined = par::map_range(candidates.len(), |i| refine(&data, candidates[i], rho_out));
        let slack = 1e-9 * rho_out.max(1.0);
        let mut kept: Vec<(Complex64, f64)> = Vec::new();
        for r in refined {
            let r = r?;
            let Some((z, residual, resolved)) = r else { continue };
            if z.norm() < rho_in - slack || z.norm() > rho_out + slack {
                continue;
            }
            if !resolved {
                unresolved += 1;
                continue;
            }
            kept.push((z, residual));
        }
        zeros.extend(cluster(&kept, opts.cluster_radius * rho_out));
    }
    zeros.sort_by(|a, b| {
        a.modulus
            .total_cmp(&b.modulus)
            .then(a.angle.total_cmp(&b.angle))
    });
    let max_residual = zeros.iter().map(|z| z.residual).fold(0.0, f64::max);
    if max_residual > opts.max_residual {
        return Err(Error::Certification(format!(
            "largest residual {max_residual:e} exceeds {:e}",
            opts.max_residual
        )));
    }
    Ok(ZeroSet {
        annulus,
        zeros,
        truncation_degree: m,
        max_residual,
        method: "aberth-ehrlich".into(),
        unresolved,
        sweeps,
    })
}

/// Two Newton steps on the full series, then the residual and a check that
/// `F` rises above the noise floor on a small circle around the point.
fn refine(data: &TaylorData, z0: Complex64, rho_out: f64) -> Result<Option<(Complex64, f64, bool)>> {
    let limit = rho_out * 1.25;
    let mut z = z0;
    for _ in 0..2 {
        if z.norm() == 0.0 || z.norm() > limit {
            return Ok(None);
        }
        let p = data.at(z)?;
        let step = p.log_derivative.inv();
        if step.is_finite() && p.value.norm() > 0.0 {
            z -= step;
        }
    }
    if z.norm() == 0.0 || z.norm() > limit {
        return Ok(None);
    }
    let residual = data.at(z)?.value.norm();
    let delta = 0.05;
    let mut rises = false;
    for j in 0..8 {
        let q = z + Complex64::from_polar(delta, j as f64 * std::f64::consts::TAU / 8.0);
        if q.norm() == 0.0 || q.norm() > limit {
            continue;
        }
        let p = data.at(q)?;
        if p.resolved() {
            rises = true;
            break;
        }
    }
    Ok(Some((z, residual, rises)))
}

/// Argument in turns, in `[0, 1)`.
pub fn turn_of(z: Complex64) -> f64 {
    let t = (z.im.atan2(z.re) / std::f64::consts::TAU).rem_euclid(1.0);
    if t >= 1.0 {
        0.0
    } else {
        t
    }
}

fn cluster(points: &[(Complex64, f64)], radius: f64) -> Vec<Zero> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut i = i;
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if (points[i].0 - points[j].0).norm() <= radius {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut out = Vec::new();
    for i in 0..n {
        if find(&mut parent, i) != i {
            continue;
        }
        let members: Vec<usize> = (0..n).filter(|&j| find(&mut parent, j) == i).collect();
        let centre = members.iter().map(|&j| points[j].0).sum::<Complex64>() / members.len() as f64;
        let residual = members.iter().map(|&j| points[j].1).fold(0.0, f64::max);
        out.push(Zero {
            modulus: centre.norm(),
            angle: turn_of(centre),
            multiplicity: members.len() as u32,
            residual,
        });
    }
    out
}

/// Polar sector `rho_in <= |z| <= rho_out`, `t1 <= arg z < t2` (turns).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sector {
    pub rho_in: f64,
    pub rho_out: f64,
    pub t1: f64,
    pub t2: f64,
}

impl Sector {
    pub fn contains(&self, z: &Zero) -> bool {
        let span = self.t2 - self.t1;
        let rel = (z.angle - self.t1).rem_euclid(1.0);
        z.modulus > self.rho_in && z.modulus < self.rho_out && (span >= 1.0 || rel < span)
    }

    fn validate(&self) -> Result<()> {
        if !(self.rho_in > 0.0 && self.rho_in < self.rho_out && self.t1 < self.t2 && self.t2 - self.t1 <= 1.0) {
            return Err(Error::param(format!("invalid sector {self:?}")));
        }
        Ok(())
    }
}

/// Multiplicity-weighted number of zeros of a set inside a sector.
pub fn count_in_sector(zs: &ZeroSet, sector: &Sector) -> u64 {
    zs.zeros
        .iter()
        .filter(|z| sector.contains(z))
        .map(|z| z.multiplicity as u64)
        .sum()
}

#[derive(Clone, Copy, Debug)]
enum Piece {
    Arc { r: f64, t0: f64, t1: f64 },
    Radial { t: f64, r0: f64, r1: f64 },
}

impl Piece {
    fn point(&self, s: f64) -> Complex64 {
        let turn = std::f64::consts::TAU;
        match *self {
            Piece::Arc { r, t0, t1 } => Complex64::from_polar(r, (t0 + (t1 - t0) * s) * turn),
            Piece::Radial { t, r0, r1 } => Complex64::from_polar(r0 + (r1 - r0) * s, t * turn),
        }
    }

    fn length(&self) -> f64 {
        match *self {
            Piece::Arc { r, t0, t1 } => r * (t1 - t0).abs() * std::f64::consts::TAU,
            Piece::Radial { r0, r1, .. } => (r1 - r0).abs(),
        }
    }
}

#[derive(Clone, Copy)]
struct Sample {
    s: f64,
    z: Complex64,
    value: Complex64,
    dlog: f64,
}

fn sample(data: &TaylorData, piece: &Piece, s: f64) -> Result<Sample> {
    let z = piece.point(s);
    let p = data.at(z)?;
    if !p.resolved() {
        return Err(Error::Unresolved { re: z.re, im: z.im });
    }
    Ok(Sample {
        s,
        z,
        value: p.value,
        dlog: p.log_derivative.norm(),
    })
}

/// Phase change between two samples, bisecting until each increment is
/// below a quarter turn and the step is short against `|F'/F|`.
fn phase_step(data: &TaylorData, piece: &Piece, a: Sample, b: Sample, min_step: f64) -> Result<f64> {
    let mut stack = vec![(a, b)];
    let mut total = 0.0;
    while let Some((a, b)) = stack.pop() {
        let d = (b.value / a.value).arg();
        let dz = (b.z - a.z).norm();
        if d.abs() < std::f64::consts::FRAC_PI_2 && dz * a.dlog.max(b.dlog) <= 1.0 {
            total += d;
            continue;
        }
        if dz < min_step {
            let z = a.z;
            return Err(Error::ContourTooClose { re: z.re, im: z.im });
        }
        let mid = sample(data, piece, 0.5 * (a.s + b.s))?;
        stack.push((mid, b));
        stack.push((a, mid));
    }
    Ok(total)
}

/// Number of zeros inside a sector by the argument principle.
pub fn winding_count(spec: &SequenceSpec, sector: &Sector) -> Result<i64> {
    sector.validate()?;
    let data = TaylorData::new(spec, sector.rho_out * 1.01 + 1.0, 1e-12)?;
    winding_with(&data, sector)
}

fn winding_with(data: &TaylorData, sector: &Sector) -> Result<i64> {
    let Sector { rho_in, rho_out, t1, t2 } = *sector;
    let pieces = [
        Piece::Arc { r: rho_out, t0: t1, t1: t2 },
        Piece::Radial { t: t2, r0: rho_out, r1: rho_in },
        Piece::Arc { r: rho_in, t0: t2, t1: t1 },
        Piece::Radial { t: t1, r0: rho_in, r1: rho_out },
    ];
    let min_step = 1e-9 * rho_out.max(1.0);
    let mut total = 0.0;
    for piece in &pieces {
        let n = ((piece.length() * 4.0).ceil() as usize).max(8);
        let samples = par::map_range(n + 1, |i| sample(data, piece, i as f64 / n as f64));
        let samples = samples.into_iter().collect::<Result<Vec<_>>>()?;
        let pairs: Vec<(usize, usize)> = (0..n).map(|i| (i, i + 1)).collect();
        let steps = par::map_slice(&pairs, |&(i, j)| {
            phase_step(data, piece, samples[i], samples[j], min_step)
        });
        for s in steps {
            total += s?;
        }
    }
    let turns = total / std::f64::consts::TAU;
    let rounded = turns.round();
    if (turns - rounded).abs() > 0.25 {
        return Err(Error::Certification(format!(
            "winding {turns} is not close to an integer"
        )));
    }
    Ok(rounded as i64)
}

/// Winding count with up to five jittered retries (shifts `<= 1e-3`) when
/// the contour passes too close to a zero. Returns the sector actually used.
pub fn winding_count_jittered(spec: &SequenceSpec, sector: &Sector, seed: u64) -> Result<(i64, Sector)> {
    sector.validate()?;
    let data = TaylorData::new(spec, sector.rho_out * 1.01 + 1.0, 1e-12)?;
    let mut current = *sector;
    let mut last = None;
    for attempt in 0..6u64 {
        match winding_with(&data, &current) {
            Ok(n) => return Ok((n, current)),
            Err(e @ Error::ContourTooClose { .. }) => {
                last = Some(e);
                let u = |salt: u64| {
                    let h = crate::sequences::mix_seed(seed, attempt * 8 + salt);
                    (h >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
                };
                current = Sector {
                    rho_in: sector.rho_in + 1e-3 * u(0),
                    rho_out: sector.rho_out + 1e-3 * u(1),
                    t1: sector.t1 + 1e-3 * u(2),
                    t2: sector.t2 + 1e-3 * u(3),
                };
            }
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt failed"))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SectorCount {
    pub r: f64,
    pub t1: f64,
    pub t2: f64,
    pub count: u64,
    /// `(t2 - t1) * (r - rho_in)`: uniform density over the part of the
    /// disc covered by the zero set.
    pub expected: f64,
}

/// Counts over the `J` sectors `[j/J, (j+1)/J)` for zeros with `|z| <= r`.
/// Angles within `1e-9` of a boundary are snapped onto it first.
pub fn sector_counts(zs: &ZeroSet, sectors: usize, r: f64) -> Result<Vec<SectorCount>> {
    if sectors == 0 {
        return Err(Error::param("sector count must be positive"));
    }
    if r > zs.annulus.1 {
        return Err(Error::param(format!(
            "radius {r} beyond the zero set's outer radius {}",
            zs.annulus.1
        )));
    }
    let j = sectors as f64;
    let mut counts = vec![0u64; sectors];
    for z in zs.zeros.iter().filter(|z| z.modulus <= r) {
        let x = z.angle * j;
        let snapped = if (x - x.round()).abs() <= 1e-9 * j { x.round() } else { x };
        let idx = (snapped.floor() as i64).rem_euclid(sectors as i64) as usize;
        counts[idx] += z.multiplicity as u64;
    }
    let span = (r - zs.annulus.0).max(0.0);
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| SectorCount {
            r,
            t1: i as f64 / j,
            t2: (i + 1) as f64 / j,
            count,
            expected: span / j,
        })
        .collect())
}
