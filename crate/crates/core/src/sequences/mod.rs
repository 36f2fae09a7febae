//! Sequence families and their generators.
//!
//! A [`SequenceSpec`] describes `xi: Z_+ -> C` declaratively; [`generate`]
//! materializes any window `xi(start..start+len)`. Generation is a pure
//! function of the spec, so overlapping windows agree bit for bit.

mod oracle;
pub(crate) mod random;
mod sieve;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dd::{cis_turns, Dd, Real};
use crate::error::{Error, Result};
use crate::par;

pub use oracle::{card_b, rademacher_pair_moment, PairMoment, PairSquareCount};
pub use random::mix_seed;
pub use sieve::{
    factor_fold, is_squarefree, moebius_sieve, primes_up_to, squarefree_kernel, Kernel,
    SIEVE_CAPACITY,
};

pub const DEFAULT_LENGTH_HINT: u64 = 100_000_000;

fn default_length_hint() -> u64 {
    DEFAULT_LENGTH_HINT
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IidDist {
    Steinhaus,
    Rademacher,
    Gaussian,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub lambda: Real,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Kind {
    Constant,
    PureExponential {
        lambda: Real,
    },
    TrigPolynomial {
        terms: Vec<TrigTerm>,
    },
    /// `(-1)^floor(alpha n)`.
    SignBesicovitch {
        alpha: Real,
    },
    /// `e(q_2 n^2 + ... + q_d n^d)`; `q[0]` is `q_2`.
    PolynomialPhase {
        q: Vec<Real>,
    },
    /// `e(alpha n^beta)`.
    FractionalPowerPhase {
        alpha: Real,
        beta: Real,
    },
    /// `e(a^n x)`. Base-`a` digits of `x` beyond double-double precision are
    /// drawn from the seeded stream, i.e. `x` is completed to a typical real.
    GeometricPhase {
        a: u64,
        x: Real,
        #[serde(default)]
        seed: u64,
    },
    IidRandom {
        dist: IidDist,
        seed: u64,
    },
    SteinhausMultiplicative {
        seed: u64,
    },
    RademacherMultiplicative {
        seed: u64,
    },
    Moebius,
    /// Finitely supported Taylor data `xi(n) = values[n]`, zero beyond.
    Explicit {
        values: Vec<Complex64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceSpec {
    #[serde(flatten)]
    pub kind: Kind,
    #[serde(default = "default_length_hint")]
    pub length_hint: u64,
    /// Constant factor applied to every term.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<Complex64>,
    /// Multiply `xi(n)` by `e(n * twist)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub twist: Option<Real>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SequenceWindow {
    pub start: u64,
    pub values: Vec<Complex64>,
}

/// Pointwise bound on `|xi(k)|` declared by a family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Envelope {
    Bounded(f64),
    /// `|xi(k)| <= C sqrt(max(k, 1))`.
    SqrtGrowth(f64),
}

impl Envelope {
    pub fn bound(&self, k: u64) -> f64 {
        match *self {
            Envelope::Bounded(c) => c,
            Envelope::SqrtGrowth(c) => c * (k.max(1) as f64).sqrt(),
        }
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self, Envelope::Bounded(_))
    }
}

impl From<Kind> for SequenceSpec {
    fn from(kind: Kind) -> Self {
        SequenceSpec::new(kind)
    }
}

impl SequenceSpec {
    pub fn new(kind: Kind) -> Self {
        SequenceSpec {
            kind,
            length_hint: DEFAULT_LENGTH_HINT,
            scale: None,
            twist: None,
        }
    }

    pub fn constant() -> Self {
        Kind::Constant.into()
    }

    pub fn pure_exponential(lambda: &str) -> Result<Self> {
        Ok(Kind::PureExponential {
            lambda: Real::parse(lambda)?,
        }
        .into())
    }

    pub fn polynomial_phase(q: &[&str]) -> Result<Self> {
        let q = q.iter().map(|s| Real::parse(s)).collect::<Result<_>>()?;
        Ok(Kind::PolynomialPhase { q }.into())
    }

    pub fn fractional_power(alpha: &str, beta: &str) -> Result<Self> {
        Ok(Kind::FractionalPowerPhase {
            alpha: Real::parse(alpha)?,
            beta: Real::parse(beta)?,
        }
        .into())
    }

    pub fn explicit(values: &[f64]) -> Self {
        Kind::Explicit {
            values: values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
        .into()
    }

    /// Taylor data of `cosh z`: `1, 0, 1, 0, ...` as a trigonometric polynomial.
    pub fn cosh_data() -> Self {
        Kind::TrigPolynomial {
            terms: vec![
                TrigTerm {
                    lambda: Real::from(0.0),
                    re: 0.5,
                    im: 0.0,
                },
                TrigTerm {
                    lambda: Real::from(0.5),
                    re: 0.5,
                    im: 0.0,
                },
            ],
        }
        .into()
    }

    pub fn with_scale(mut self, c: Complex64) -> Self {
        self.scale = Some(c);
        self
    }

    pub fn with_twist(mut self, lambda: Real) -> Self {
        self.twist = Some(lambda);
        self
    }

    pub fn with_length_hint(mut self, n: u64) -> Self {
        self.length_hint = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: &Real| {
            let x = v.f64();
            if (0.0..1.0).contains(&x) {
                Ok(())
            } else {
                Err(Error::param(format!("{name} = {v} must lie in [0, 1)")))
            }
        };
        if self.length_hint == 0 {
            return Err(Error::param("length_hint must be positive"));
        }
        match &self.kind {
            Kind::Constant | Kind::Moebius => {}
            Kind::PureExponential { lambda } => unit("lambda", lambda)?,
            Kind::TrigPolynomial { terms } => {
                if terms.is_empty() {
                    return Err(Error::param("trigonometric polynomial has no terms"));
                }
                for t in terms {
                    unit("lambda", &t.lambda)?;
                    if !(t.re.is_finite() && t.im.is_finite()) {
                        return Err(Error::param("non-finite coefficient"));
                    }
                }
            }
            Kind::SignBesicovitch { alpha } => {
                if !alpha.f64().is_finite() {
                    return Err(Error::param("alpha must be finite"));
                }
            }
            Kind::PolynomialPhase { q } => {
                if q.is_empty() {
                    return Err(Error::param("polynomial phase needs degree >= 2"));
                }
                if q.iter().any(|v| !v.f64().is_finite()) {
                    return Err(Error::param("non-finite polynomial coefficient"));
                }
            }
            Kind::FractionalPowerPhase { alpha, beta } => {
                if !(beta.f64() > 0.0 && beta.f64().is_finite()) {
                    return Err(Error::param(format!("beta = {beta} must be > 0")));
                }
                if !alpha.f64().is_finite() {
                    return Err(Error::param("alpha must be finite"));
                }
            }
            Kind::GeometricPhase { a, x, .. } => {
                if *a < 2 {
                    return Err(Error::param(format!("base a = {a} must be >= 2")));
                }
                unit("x", x)?;
            }
            Kind::IidRandom { .. }
            | Kind::SteinhausMultiplicative { .. }
            | Kind::RademacherMultiplicative { .. } => {}
            Kind::Explicit { values } => {
                if values.is_empty() || values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
                    return Err(Error::param("explicit data must be non-empty and finite"));
                }
            }
        }
        if let Some(c) = self.scale {
            if !(c.re.is_finite() && c.im.is_finite()) || c == Complex64::new(0.0, 0.0) {
                return Err(Error::param("scale must be finite and nonzero"));
            }
        }
        if let Some(t) = &self.twist {
            unit("twist", t)?;
        }
        Ok(())
    }

    fn scale_abs(&self) -> f64 {
        self.scale.map_or(1.0, |c| c.norm())
    }

    pub fn envelope(&self) -> Envelope {
        let s = self.scale_abs();
        match &self.kind {
            Kind::TrigPolynomial { terms } => {
                Envelope::Bounded(s * terms.iter().map(|t| t.re.hypot(t.im)).sum::<f64>())
            }
            Kind::Explicit { values } => {
                Envelope::Bounded(s * values.iter().map(|v| v.norm()).fold(0.0, f64::max))
            }
            Kind::IidRandom {
                dist: IidDist::Gaussian,
                ..
            } => Envelope::SqrtGrowth(6.0 * s),
            _ => Envelope::Bounded(s),
        }
    }

    /// `|xi(n)|` is the same constant for every `n >= 1`.
    pub fn is_unimodular(&self) -> bool {
        matches!(
            self.kind,
            Kind::Constant
                | Kind::PureExponential { .. }
                | Kind::SignBesicovitch { .. }
                | Kind::PolynomialPhase { .. }
                | Kind::FractionalPowerPhase { .. }
                | Kind::GeometricPhase { .. }
                | Kind::SteinhausMultiplicative { .. }
                | Kind::IidRandom {
                    dist: IidDist::Steinhaus | IidDist::Rademacher,
                    ..
                }
        )
    }

    /// All values are real.
    pub fn is_real(&self) -> bool {
        let base = match &self.kind {
            Kind::Constant
            | Kind::SignBesicovitch { .. }
            | Kind::RademacherMultiplicative { .. }
            | Kind::Moebius
            | Kind::IidRandom {
                dist: IidDist::Rademacher,
                ..
            } => true,
            Kind::Explicit { values } => values.iter().all(|v| v.im == 0.0),
            Kind::TrigPolynomial { terms } => {
                // real iff the spectrum sits in {0, 1/2} with real weights
                terms
                    .iter()
                    .all(|t| t.im == 0.0 && (t.lambda.f64() == 0.0 || t.lambda.f64() == 0.5))
            }
            _ => false,
        };
        base && self.scale.is_none_or(|c| c.im == 0.0) && self.twist.is_none()
    }

    fn is_arithmetic(&self) -> bool {
        matches!(
            self.kind,
            Kind::Moebius | Kind::SteinhausMultiplicative { .. } | Kind::RademacherMultiplicative { .. }
        )
    }
}

/// `xi(start..start+len)`.
pub fn generate(spec: &SequenceSpec, start: u64, len: usize) -> Result<SequenceWindow> {
    spec.validate()?;
    let end = start
        .checked_add(len as u64)
        .ok_or_else(|| Error::param("window end overflows"))?;
    if end > spec.length_hint.saturating_add(1) {
        return Err(Error::Capacity {
            requested: end - 1,
            capacity: spec.length_hint,
        });
    }
    if spec.is_arithmetic() {
        sieve::check_capacity(end)?;
    }
    let mut values = base_values(spec, start, len)?;
    if spec.twist.is_some() || spec.scale.is_some() {
        let twist = spec.twist.as_ref().map(|t| t.dd());
        let scale = spec.scale.unwrap_or(Complex64::new(1.0, 0.0));
        for (i, v) in values.iter_mut().enumerate() {
            let mut z = *v * scale;
            if let Some(t) = twist {
                z *= cis_turns(t.frac_mul(start + i as u64).to_f64());
            }
            *v = z;
        }
    }
    Ok(SequenceWindow { start, values })
}

fn phase(t: Dd) -> Complex64 {
    cis_turns(t.centered_turn())
}

fn base_values(spec: &SequenceSpec, start: u64, len: usize) -> Result<Vec<Complex64>> {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let at = |i: usize| start + i as u64;
    Ok(match &spec.kind {
        Kind::Constant => vec![one; len],
        Kind::PureExponential { lambda } => {
            let l = lambda.dd();
            par::map_range(len, |i| phase(l.frac_mul(at(i))))
        }
        Kind::TrigPolynomial { terms } => par::map_range(len, |i| {
            let n = at(i);
            let mut acc = crate::sum::ComplexSum::new();
            for t in terms {
                acc.add(Complex64::new(t.re, t.im) * phase(t.lambda.dd().frac_mul(n)));
            }
            acc.value()
        }),
        Kind::SignBesicovitch { alpha } => {
            let a = alpha.dd();
            par::map_range(len, |i| {
                let f = a.mul_f64(at(i) as f64).floor();
                let parity = (f.hi.rem_euclid(2.0) + f.lo.rem_euclid(2.0)).rem_euclid(2.0);
                if parity == 0.0 {
                    one
                } else {
                    -one
                }
            })
        }
        Kind::PolynomialPhase { q } => {
            let q: Vec<Dd> = q.iter().map(|v| v.dd()).collect();
            par::map_range(len, |i| {
                let n = at(i);
                let mut total = Dd::ZERO;
                for (j, &c) in q.iter().enumerate() {
                    let mut t = c.frac();
                    for _ in 0..j + 2 {
                        t = t.frac_mul(n);
                    }
                    total = (total + t).frac();
                }
                phase(total)
            })
        }
        Kind::FractionalPowerPhase { alpha, beta } => {
            let (a, b) = (alpha.dd(), beta.dd());
            par::map_range(len, |i| {
                let n = at(i);
                if n == 0 {
                    return one;
                }
                phase(a * Dd::from_f64(n as f64).powf(b))
            })
        }
        Kind::GeometricPhase { a, x, seed } => geometric(*a, x.dd(), *seed, start, len),
        Kind::IidRandom { dist, seed } => {
            let seed = *seed;
            match dist {
                IidDist::Steinhaus => par::map_range(len, |i| random::iid_steinhaus(seed, at(i))),
                IidDist::Rademacher => par::map_range(len, |i| random::iid_rademacher(seed, at(i))),
                IidDist::Gaussian => par::map_range(len, |i| random::iid_gaussian(seed, at(i))),
            }
        }
        Kind::SteinhausMultiplicative { seed } => {
            let seed = *seed;
            let phases = factor_fold(start, len, 0u64, |u, p, a| {
                *u = u.wrapping_add(random::prime_phase(seed, p).wrapping_mul(a as u64));
            })?;
            phases
                .iter()
                .enumerate()
                .map(|(i, &u)| if at(i) == 0 { zero } else { random::fixed_turn_to_unit(u) })
                .collect()
        }
        Kind::RademacherMultiplicative { seed } => {
            let seed = *seed;
            let signs = factor_fold(start, len, 1i8, |s, p, a| {
                *s = if a >= 2 { 0 } else { *s * random::prime_sign(seed, p) };
            })?;
            signs
                .iter()
                .enumerate()
                .map(|(i, &s)| if at(i) == 0 { zero } else { Complex64::new(s as f64, 0.0) })
                .collect()
        }
        Kind::Moebius => {
            let mu = factor_fold(start, len, 1i8, |m, _, a| {
                *m = if a >= 2 { 0 } else { -*m };
            })?;
            mu.iter()
                .enumerate()
                .map(|(i, &m)| if at(i) == 0 { zero } else { Complex64::new(m as f64, 0.0) })
                .collect()
        }
        Kind::Explicit { values } => (0..len)
            .map(|i| values.get(at(i) as usize).copied().unwrap_or(zero))
            .collect(),
    })
}

/// `e(a^n x)` through the base-`a` digit expansion of `x`.
fn geometric(a: u64, x: Dd, seed: u64, start: u64, len: usize) -> Vec<Complex64> {
    let bits = (a as f64).log2();
    let exact_digits = (96.0 / bits).floor() as u64;
    let tail = (64.0 / bits).ceil() as u64 + 1;
    let base = a as f64;
    // digits d_1, d_2, ... of x; d_i for i in start+1 ..= start+len+tail
    let first = start + 1;
    let count = len as u64 + tail;
    let mut known = Vec::new();
    if first <= exact_digits {
        let mut t = x.frac();
        for _ in 0..exact_digits.min(first + count - 1) {
            let y = t.mul_f64(base);
            let d = y.floor();
            known.push(d.to_f64() as u64);
            t = (y - d).frac();
        }
    }
    let digits: Vec<u64> = par::map_range(count as usize, |j| {
        let i = first + j as u64;
        if i <= exact_digits {
            known[(i - 1) as usize]
        } else {
            random::digit(seed, a, i)
        }
    });
    par::map_range(len, |i| {
        let mut v = 0.0;
        for j in (0..tail as usize).rev() {
            v = (v + digits[i + j] as f64) / base;
        }
        cis_turns(v)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn constant_window() {
        let w = generate(&SequenceSpec::constant(), 0, 3).unwrap();
        assert_eq!(w.values, vec![c(1.0, 0.0); 3]);
    }

    #[test]
    fn moebius_window() {
        let w = generate(&Kind::Moebius.into(), 1, 6).unwrap();
        let re: Vec<f64> = w.values.iter().map(|z| z.re).collect();
        assert_eq!(re, vec![1.0, -1.0, -1.0, 0.0, -1.0, 1.0]);
    }

    #[test]
    fn quadratic_phase_against_long_arithmetic() {
        // frac(sqrt2 * n^2) for n = 0, 1, 2 from the digits of sqrt2
        let w = generate(&SequenceSpec::polynomial_phase(&["sqrt2"]).unwrap(), 0, 3).unwrap();
        let turns = [0.0, 0.41421356237309504880, 0.65685424949238019520];
        for (z, t) in w.values.iter().zip(turns) {
            let e = cis_turns(t);
            assert!((z - e).norm() < 1e-15, "{z} vs {e}");
        }
    }

    #[test]
    fn quadratic_phase_at_large_index() {
        // sqrt2 * (10^7)^2 = sqrt2 * 10^14; fractional part from the digits
        let w = generate(&SequenceSpec::polynomial_phase(&["sqrt2"]).unwrap(), 10_000_000, 1).unwrap();
        let e = cis_turns(0.50488016887242096981);
        assert!((w.values[0] - e).norm() < 1e-12);
    }

    #[test]
    fn rademacher_vanishes_off_squarefree() {
        let spec: SequenceSpec = Kind::RademacherMultiplicative { seed: 5 }.into();
        let w = generate(&spec, 0, 200).unwrap();
        assert_eq!(w.values[4], c(0.0, 0.0));
        for (n, v) in w.values.iter().enumerate().skip(1) {
            assert_eq!(v.re == 0.0, !is_squarefree(n as u64), "n = {n}");
            assert!(v.re.abs() == 1.0 || v.re == 0.0);
        }
    }

    #[test]
    fn sign_besicovitch_parity() {
        let spec: SequenceSpec = Kind::SignBesicovitch {
            alpha: Real::parse("golden").unwrap(),
        }
        .into();
        let w = generate(&spec, 0, 50).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        for (n, v) in w.values.iter().enumerate() {
            let expect = if ((phi * n as f64).floor() as i64) % 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(v.re, expect, "n = {n}");
        }
    }

    #[test]
    fn cosh_data_alternates() {
        let w = generate(&SequenceSpec::cosh_data(), 0, 6).unwrap();
        let re: Vec<f64> = w.values.iter().map(|z| z.re).collect();
        assert_eq!(re, vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        assert!(w.values.iter().all(|z| z.im == 0.0));
    }

    #[test]
    fn geometric_phase_matches_doubling_map() {
        // x = 1/3 in base 2: a^n x mod 1 alternates 1/3, 2/3
        let spec: SequenceSpec = Kind::GeometricPhase {
            a: 2,
            x: Real::parse("1/3").unwrap(),
            seed: 0,
        }
        .into();
        let w = generate(&spec, 0, 20).unwrap();
        for (n, z) in w.values.iter().enumerate() {
            let t = if n % 2 == 0 { 1.0 / 3.0 } else { 2.0 / 3.0 };
            assert!((z - cis_turns(t)).norm() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn parameter_gates() {
        assert!(matches!(
            generate(&SequenceSpec::fractional_power("1", "-1").unwrap(), 0, 4),
            Err(Error::Parameter(_))
        ));
        let bad: SequenceSpec = Kind::GeometricPhase {
            a: 1,
            x: Real::from(0.3),
            seed: 0,
        }
        .into();
        assert!(matches!(generate(&bad, 0, 4), Err(Error::Parameter(_))));
        let short = SequenceSpec::constant().with_length_hint(10);
        assert!(matches!(generate(&short, 5, 10), Err(Error::Capacity { .. })));
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = SequenceSpec::polynomial_phase(&["sqrt2", "0.25"]).unwrap();
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains("\"kind\":\"polynomial_phase\""));
        assert!(text.contains("\"sqrt2\""));
        let back: SequenceSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
    }
}
