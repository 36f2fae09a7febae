//! Inline sequence flags.

use clap::{Args, ValueEnum};
use pitslab::dd::Real;
use pitslab::sequences::{IidDist, Kind, SequenceSpec, TrigTerm};
use pitslab::{Error, Result};
use num_complex::Complex64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Constant,
    PureExp,
    Trig,
    SignBesicovitch,
    PolyPhase,
    FracPower,
    Geometric,
    Iid,
    SteinhausMult,
    RademacherMult,
    Moebius,
    Explicit,
    /// Taylor data of cosh, i.e. 1, 0, 1, 0, ...
    Cosh,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DistArg {
    Steinhaus,
    Rademacher,
    Gaussian,
}

/// Real parameters accept decimals, `sqrt2`, `golden`, `pi`, `e`, a leading
/// `-` and a `/N` suffix.
#[derive(Clone, Debug, Default, Args)]
pub struct SpecArgs {
    /// Sequence family; overrides the spec in --config
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    /// Frequency for pure-exp
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<String>,
    /// Coefficient for sign-besicovitch and frac-power (default 1)
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<String>,
    /// Exponent for frac-power
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<String>,
    /// Coefficient of n^2 for poly-phase
    #[arg(long, allow_hyphen_values = true)]
    pub q2: Option<String>,
    /// Coefficient of n^3 for poly-phase
    #[arg(long, allow_hyphen_values = true)]
    pub q3: Option<String>,
    /// Coefficient of n^4 for poly-phase
    #[arg(long, allow_hyphen_values = true)]
    pub q4: Option<String>,
    /// Integer base a >= 2 for geometric
    #[arg(long)]
    pub base: Option<u64>,
    /// Starting point x for geometric
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<String>,
    /// Seed for random families
    #[arg(long)]
    pub seed: Option<u64>,
    /// Distribution for iid
    #[arg(long, value_enum)]
    pub dist: Option<DistArg>,
    /// Values for explicit, as comma-separated `re` or `re:im`
    #[arg(long, allow_hyphen_values = true)]
    pub values: Option<String>,
    /// Terms for trig, as comma-separated `lambda:re` or `lambda:re:im`
    #[arg(long, allow_hyphen_values = true)]
    pub terms: Option<String>,
    /// Constant factor, `re` or `re:im`
    #[arg(long, allow_hyphen_values = true)]
    pub scale: Option<String>,
    /// Multiply xi(n) by e(n * twist)
    #[arg(long, allow_hyphen_values = true)]
    pub twist: Option<String>,
    /// Largest index any stage may request
    #[arg(long)]
    pub length_hint: Option<u64>,
}

fn need<'a>(v: &'a Option<String>, flag: &str, kind: &str) -> Result<&'a str> {
    v.as_deref()
        .ok_or_else(|| Error::Parameter(format!("--kind {kind} requires --{flag}")))
}

fn real(s: &str) -> Result<Real> {
    Real::parse(s)
}

fn complex(s: &str) -> Result<Complex64> {
    let bad = || Error::Parameter(format!("cannot parse complex value {s:?}"));
    let mut it = s.split(':');
    let re: f64 = it.next().unwrap_or("").trim().parse().map_err(|_| bad())?;
    let im: f64 = match it.next() {
        Some(t) => t.trim().parse().map_err(|_| bad())?,
        None => 0.0,
    };
    if it.next().is_some() {
        return Err(bad());
    }
    Ok(Complex64::new(re, im))
}

impl SpecArgs {
    /// The spec from these flags, falling back to `base` when no kind is
    /// given. Scale, twist and length hint apply either way.
    pub fn resolve(&self, base: Option<SequenceSpec>) -> Result<SequenceSpec> {
        let mut spec = match self.kind {
            Some(k) => SequenceSpec::new(self.kind_of(k)?),
            None => base.ok_or_else(|| Error::Parameter("no sequence given: pass --kind or --config".into()))?,
        };
        if let Some(s) = &self.scale {
            spec.scale = Some(complex(s)?);
        }
        if let Some(t) = &self.twist {
            spec.twist = Some(real(t)?);
        }
        if let Some(n) = self.length_hint {
            spec.length_hint = n;
        }
        spec.validate()?;
        Ok(spec)
    }

    fn kind_of(&self, k: KindArg) -> Result<Kind> {
        let seed = self.seed.unwrap_or(0);
        Ok(match k {
            KindArg::Constant => Kind::Constant,
            KindArg::PureExp => Kind::PureExponential {
                lambda: real(need(&self.lambda, "lambda", "pure-exp")?)?,
            },
            KindArg::Trig => {
                let raw = need(&self.terms, "terms", "trig")?;
                let terms = raw
                    .split(',')
                    .map(|t| {
                        let (lambda, c) = t
                            .split_once(':')
                            .ok_or_else(|| Error::Parameter(format!("trig term {t:?} needs lambda:re[:im]")))?;
                        let c = complex(c)?;
                        Ok(TrigTerm {
                            lambda: real(lambda)?,
                            re: c.re,
                            im: c.im,
                        })
                    })
                    .collect::<Result<_>>()?;
                Kind::TrigPolynomial { terms }
            }
            KindArg::SignBesicovitch => Kind::SignBesicovitch {
                alpha: real(need(&self.alpha, "alpha", "sign-besicovitch")?)?,
            },
            KindArg::PolyPhase => {
                let mut q: Vec<&Option<String>> = vec![&self.q2, &self.q3, &self.q4];
                while q.last().is_some_and(|v| v.is_none()) {
                    q.pop();
                }
                if q.is_empty() {
                    return Err(Error::Parameter("--kind poly-phase requires --q2, --q3 or --q4".into()));
                }
                Kind::PolynomialPhase {
                    q: q.iter().map(|v| real(v.as_deref().unwrap_or("0"))).collect::<Result<_>>()?,
                }
            }
            KindArg::FracPower => Kind::FractionalPowerPhase {
                alpha: real(self.alpha.as_deref().unwrap_or("1"))?,
                beta: real(need(&self.beta, "beta", "frac-power")?)?,
            },
            KindArg::Geometric => Kind::GeometricPhase {
                a: self.base.unwrap_or(2),
                x: real(need(&self.x, "x", "geometric")?)?,
                seed,
            },
            KindArg::Iid => Kind::IidRandom {
                dist: match self.dist.unwrap_or(DistArg::Steinhaus) {
                    DistArg::Steinhaus => IidDist::Steinhaus,
                    DistArg::Rademacher => IidDist::Rademacher,
                    DistArg::Gaussian => IidDist::Gaussian,
                },
                seed,
            },
            KindArg::SteinhausMult => Kind::SteinhausMultiplicative { seed },
            KindArg::RademacherMult => Kind::RademacherMultiplicative { seed },
            KindArg::Moebius => Kind::Moebius,
            KindArg::Explicit => Kind::Explicit {
                values: need(&self.values, "values", "explicit")?
                    .split(',')
                    .map(complex)
                    .collect::<Result<_>>()?,
            },
            KindArg::Cosh => SequenceSpec::cosh_data().kind,
        })
    }
}
