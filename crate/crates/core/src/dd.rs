//! Double-double arithmetic for phase reduction modulo one.
//!
//! Phases such as `q n^2` or `alpha n^beta` must be reduced mod 1 with an
//! absolute error far below 1e-10 for indices up to 1e7, which plain `f64`
//! cannot deliver. A [`Dd`] carries roughly 106 significant bits.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

const LN2: Dd = Dd {
    hi: std::f64::consts::LN_2,
    lo: 2.319_046_813_846_299_6e-17,
};

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    pub fn new(hi: f64, lo: f64) -> Self {
        let (hi, lo) = quick_two_sum(hi, lo);
        Dd { hi, lo }
    }

    pub fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        let e = e + self.lo * b;
        Dd::new(p, e)
    }

    pub fn div(self, b: Dd) -> Self {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        Dd::new(q1, q2) + Dd::from_f64(q3)
    }

    pub fn floor(self) -> Self {
        let fh = self.hi.floor();
        if fh == self.hi {
            Dd::new(fh, self.lo.floor())
        } else {
            Dd::from_f64(fh)
        }
    }

    /// Fractional part in `[0, 1)`.
    pub fn frac(self) -> Self {
        let f = self - self.floor();
        if f.hi >= 1.0 {
            f - Dd::ONE
        } else if f.hi < 0.0 {
            f + Dd::ONE
        } else {
            f
        }
    }

    /// Representative of `self mod 1` in `[-1/2, 1/2)`, rounded to `f64`.
    pub fn centered_turn(self) -> f64 {
        let f = self.frac().to_f64();
        if f >= 0.5 {
            f - 1.0
        } else {
            f
        }
    }

    /// `frac(self * n)` computed by exact splitting of the integer factor.
    pub fn frac_mul(self, n: u64) -> Self {
        if n < (1u64 << 53) {
            self.frac().mul_f64(n as f64).frac()
        } else {
            let hi = n >> 26;
            let lo = n & ((1 << 26) - 1);
            let a = self.frac().frac_mul(hi).mul_f64((1u64 << 26) as f64).frac();
            (a + self.frac().mul_f64(lo as f64)).frac()
        }
    }

    pub fn exp(self) -> Self {
        if self.hi > 709.0 {
            return Dd::from_f64(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return Dd::ZERO;
        }
        let k = (self.hi / LN2.hi).round();
        let r = self - LN2.mul_f64(k);
        let r = r.mul_f64(1.0 / 1024.0);
        // expm1 of the reduced argument by Taylor series
        let mut term = r;
        let mut s = r;
        for i in 2..=12 {
            term = (term * r).div(Dd::from_f64(i as f64));
            s = s + term;
            if term.hi.abs() < 1e-36 {
                break;
            }
        }
        for _ in 0..10 {
            s = s.mul_f64(2.0) + s * s;
        }
        let e = s + Dd::ONE;
        let scale = 2f64.powi(k as i32);
        Dd::new(e.hi * scale, e.lo * scale)
    }

    /// Natural logarithm for positive arguments.
    pub fn ln(self) -> Self {
        let y0 = Dd::from_f64(self.hi.ln());
        let e = y0.exp();
        y0 + (self - e).div(e)
    }

    pub fn powf(self, exponent: Dd) -> Self {
        (exponent * self.ln()).exp()
    }

    /// Parse a decimal literal (`-1.25e-3`, `0.7071...`) to full precision.
    pub fn parse_decimal(s: &str) -> Result<Self> {
        let bad = || Error::param(format!("not a decimal number: {s:?}"));
        let t = s.trim();
        let (neg, body) = match t.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, t.strip_prefix('+').unwrap_or(t)),
        };
        let (mant, exp) = match body.find(['e', 'E']) {
            Some(i) => (
                &body[..i],
                body[i + 1..].parse::<i32>().map_err(|_| bad())?,
            ),
            None => (body, 0),
        };
        let (int_part, frac_part) = match mant.find('.') {
            Some(i) => (&mant[..i], &mant[i + 1..]),
            None => (mant, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        let mut acc = Dd::ZERO;
        let mut scale = exp;
        let mut digits = 0;
        for (pos, c) in int_part.chars().chain(frac_part.chars()).enumerate() {
            let d = c.to_digit(10).ok_or_else(bad)?;
            let in_frac = pos >= int_part.len();
            if digits < 34 {
                if acc.hi != 0.0 || d != 0 {
                    digits += 1;
                }
                acc = acc.mul_f64(10.0) + Dd::from_f64(d as f64);
                if in_frac {
                    scale -= 1;
                }
            } else if !in_frac {
                scale += 1;
            }
        }
        let mut value = acc;
        let mut k = scale.unsigned_abs();
        while k > 0 {
            let step = k.min(22);
            let p = Dd::from_f64(10f64.powi(step as i32));
            value = if scale > 0 { value * p } else { value.div(p) };
            k -= step;
        }
        Ok(if neg { -value } else { value })
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, b: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, b: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        Dd::new(p, e)
    }
}

/// `e(t) = exp(2 pi i t)` for a phase given in turns.
///
/// The argument is folded to `[-1/2, 1/2)` first, which makes the map odd
/// in `t` and exact at multiples of a quarter turn.
pub fn cis_turns(t: f64) -> Complex64 {
    let t = t - t.round();
    let t = if t >= 0.5 { t - 1.0 } else { t };
    if t == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    if t == 0.25 {
        return Complex64::new(0.0, 1.0);
    }
    if t == -0.25 {
        return Complex64::new(0.0, -1.0);
    }
    if t == -0.5 {
        return Complex64::new(-1.0, 0.0);
    }
    let (s, c) = (std::f64::consts::TAU * t).sin_cos();
    Complex64::new(c, s)
}

/// `frac(theta * k)` for an `f64` phase and integer multiplier, folded to
/// `[-1/2, 1/2)`; the product is formed exactly.
#[inline]
pub fn turn_times(theta: f64, k: u64) -> f64 {
    let (p, e) = two_prod(theta, k as f64);
    let d = Dd::new(p, e);
    d.centered_turn()
}

const TOKENS: &[(&str, &str)] = &[
    ("sqrt2", "1.41421356237309504880168872420969807857"),
    ("golden", "1.61803398874989484820458683436563811772"),
    ("pi", "3.14159265358979323846264338327950288420"),
    ("e", "2.71828182845904523536028747135266249776"),
];

/// A real parameter that keeps its textual form.
///
/// Accepts plain JSON numbers or strings holding a decimal literal or one of
/// the symbolic tokens `sqrt2`, `golden`, `pi`, `e` (optionally negated or
/// followed by `/N` for an integer `N`). Strings are parsed to double-double
/// precision, so `"sqrt2"` is irrational to ~32 digits rather than 16.
#[derive(Clone, Debug, PartialEq)]
pub struct Real {
    text: Option<String>,
    value: Dd,
}

impl Real {
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim();
        let (neg, body) = match t.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, t),
        };
        let (head, divisor) = match body.split_once('/') {
            Some((h, d)) => {
                let d: u64 = d
                    .trim()
                    .parse()
                    .map_err(|_| Error::param(format!("bad divisor in {s:?}")))?;
                if d == 0 {
                    return Err(Error::param(format!("zero divisor in {s:?}")));
                }
                (h.trim(), d)
            }
            None => (body, 1),
        };
        let base = match TOKENS.iter().find(|(name, _)| *name == head) {
            Some((_, digits)) => Dd::parse_decimal(digits)?,
            None => Dd::parse_decimal(head)?,
        };
        let v = base.div(Dd::from_f64(divisor as f64));
        Ok(Real {
            text: Some(t.to_string()),
            value: if neg { -v } else { v },
        })
    }

    pub fn dd(&self) -> Dd {
        self.value
    }

    pub fn f64(&self) -> f64 {
        self.value.to_f64()
    }
}

impl From<f64> for Real {
    fn from(x: f64) -> Self {
        Real {
            text: None,
            value: Dd::from_f64(x),
        }
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.text {
            Some(t) => f.write_str(t),
            None => write!(f, "{}", self.value.hi),
        }
    }
}

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match &self.text {
            Some(t) => s.serialize_str(t),
            None => s.serialize_f64(self.value.hi),
        }
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(Real::from(x)),
            Raw::Text(t) => Real::parse(&t).map_err(de::Error::custom),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_matches_f64_for_short_literals() {
        for s in ["0.5", "1.25e-3", "-7", "123456.789"] {
            let d = Dd::parse_decimal(s).unwrap();
            assert_eq!(d.to_f64(), s.parse::<f64>().unwrap(), "{s}");
        }
    }

    #[test]
    fn sqrt2_token_squares_to_two() {
        let r = Real::parse("sqrt2").unwrap().dd();
        let err = (r * r - Dd::from_f64(2.0)).to_f64();
        assert!(err.abs() < 1e-30, "{err}");
    }

    #[test]
    fn exp_ln_round_trip() {
        for x in [0.5, 1.0, 3.0, 17.25, 1e7] {
            let d = Dd::from_f64(x);
            let back = d.ln().exp();
            assert!(((back - d).to_f64() / x).abs() < 1e-29, "{x}");
        }
        let e1 = Dd::ONE.exp();
        let e_ref = Real::parse("e").unwrap().dd();
        assert!((e1 - e_ref).to_f64().abs() < 1e-30, "{:?}", (e1 - e_ref));
    }

    #[test]
    fn frac_mul_of_large_square() {
        // frac(sqrt2 * 10^14): digits 15.. of sqrt2 after the point
        let q = Real::parse("sqrt2").unwrap().dd();
        let f = q.frac_mul(10_000_000).frac_mul(10_000_000).to_f64();
        let expected = 0.50488016887242096980786;
        assert!((f - expected).abs() < 1e-15, "{f}");
    }

    #[test]
    fn cis_is_odd_and_exact_on_quarters() {
        assert_eq!(cis_turns(0.25), Complex64::new(0.0, 1.0));
        assert_eq!(cis_turns(0.75), Complex64::new(0.0, -1.0));
        for t in [0.1, 0.333, 0.49] {
            assert_eq!(cis_turns(-t), cis_turns(t).conj());
        }
    }
}
