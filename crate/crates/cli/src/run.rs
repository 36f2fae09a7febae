//! Persisted run configuration and the stage commands.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use pitslab::emit;
use pitslab::evaluator::{self, Method};
use pitslab::pits::{self, VerifyConfig};
use pitslab::sequences::{generate, SequenceSpec};
use pitslab::spectrum::{self, SpectralEstimate};
use pitslab::zeros;
use pitslab::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    #[default]
    Periodogram,
    Abel,
}

/// Stage parameters. Every field has a default, so a config file may list
/// only the ones it changes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub start: u64,
    pub len: usize,
    pub acf_sizes: Vec<usize>,
    pub lags: usize,
    pub n: usize,
    pub arcs: usize,
    pub estimator: EstimatorKind,
    pub abel_r: f64,
    pub no_gap_threshold: f64,
    /// Explicit radii for `eval`; when empty, `r_range` is used.
    pub radii: Vec<f64>,
    /// `(first, last, count)`.
    pub r_range: (f64, f64, usize),
    pub angles: usize,
    pub method: Method,
    pub annulus: (f64, f64),
    pub tail_tol: f64,
    /// Sector counts emitted by `zeros` (0 for none) and used by `equi`.
    pub sectors: usize,
    pub pits_range: (f64, f64, usize),
    pub verify: VerifyConfig,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            start: 0,
            len: 1000,
            acf_sizes: vec![10_000, 100_000, 1_000_000],
            lags: 20,
            n: 1 << 14,
            arcs: 64,
            estimator: EstimatorKind::Periodogram,
            abel_r: 0.9999,
            no_gap_threshold: spectrum::DEFAULT_NO_GAP_THRESHOLD,
            radii: Vec::new(),
            r_range: (100.0, 200.0, 11),
            angles: 256,
            method: Method::default(),
            annulus: (50.0, 300.0),
            tail_tol: zeros::TRUNCATION_TOL,
            sectors: 16,
            pits_range: (780.0, 820.0, 64),
            verify: VerifyConfig::default(),
        }
    }
}

/// Everything needed to repeat a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    pub spec: Option<SequenceSpec>,
    #[serde(default)]
    pub out: PathBuf,
    #[serde(default)]
    pub format: Format,
    /// Worker threads; `None` uses the hardware parallelism.
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub params: Params,
}

impl RunConfig {
    pub fn new(command: &str) -> Self {
        RunConfig {
            command: command.to_string(),
            spec: None,
            out: PathBuf::from("pitslab-out"),
            format: Format::Csv,
            threads: None,
            params: Params::default(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Parameter(format!("config {}: {e}", path.display())))
    }

    fn spec(&self) -> &SequenceSpec {
        self.spec.as_ref().expect("spec resolved before dispatch")
    }
}

/// Writes outputs into the run directory and remembers their names.
struct Outputs<'a> {
    dir: &'a Path,
    written: Vec<String>,
}

impl<'a> Outputs<'a> {
    fn put(&mut self, name: &str, text: &str) -> Result<()> {
        emit::write(&self.dir.join(name), text)?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        self.put(name, &emit::json(value)?)
    }
}

/// Cache root from `PITSLAB_CACHE`, if set.
fn cache_root() -> Option<PathBuf> {
    std::env::var_os("PITSLAB_CACHE")
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
}

fn short_hash<T: Serialize>(value: &T) -> String {
    use std::hash::{Hash, Hasher};
    // FNV-1a: stable across processes and platforms
    struct Fnv(u64);
    impl Hasher for Fnv {
        fn finish(&self) -> u64 {
            self.0
        }
        fn write(&mut self, bytes: &[u8]) {
            for b in bytes {
                self.0 = (self.0 ^ *b as u64).wrapping_mul(0x100_0000_01b3);
            }
        }
    }
    let mut h = Fnv(0xcbf2_9ce4_8422_2325);
    serde_json::to_string(value).expect("serializable").hash(&mut h);
    format!("{:016x}", h.finish())
}

fn grid(range: (f64, f64, usize)) -> Result<Vec<f64>> {
    let (a, b, n) = range;
    if n == 0 || !(a > 0.0 && b >= a) || (n > 1 && b == a) {
        return Err(Error::Parameter(format!("bad radius range {a}:{b}:{n}")));
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect())
}

#[derive(Serialize)]
struct WindowJson<'a> {
    start: u64,
    values: &'a [num_complex::Complex64],
}

#[derive(Serialize)]
struct AcfJson<'a> {
    profile: &'a spectrum::AutocorrelationProfile,
    herglotz: spectrum::HerglotzCheck,
    psi: Option<spectrum::PsiEstimate>,
}

#[derive(Serialize)]
struct FieldJson<'a> {
    radii: &'a [f64],
    angles: &'a [f64],
    method: Method,
    values: &'a [num_complex::Complex64],
    noise: &'a [f64],
    h: &'a [f64],
    unresolved: &'a [bool],
}

#[derive(Serialize)]
struct ZerosJson<'a> {
    #[serde(flatten)]
    manifest: emit::ZeroManifest,
    zeros: &'a [zeros::Zero],
}

fn spectral_estimate(cfg: &RunConfig) -> Result<SpectralEstimate> {
    let p = &cfg.params;
    match p.estimator {
        EstimatorKind::Periodogram => spectrum::periodogram(cfg.spec(), p.n, p.arcs),
        EstimatorKind::Abel => spectrum::abel_estimate(cfg.spec(), p.abel_r, p.arcs),
    }
}

fn value_field(cfg: &RunConfig, radii: &[f64]) -> Result<evaluator::ScaledValueField> {
    let p = &cfg.params;
    let compute = || evaluator::value_field(cfg.spec(), radii, p.angles, p.method);
    let Some(root) = cache_root() else {
        return compute();
    };
    let key = short_hash(&(radii, p.angles, p.method));
    let path = root
        .join(pitslab::config::spec_hash(cfg.spec()))
        .join(format!("field-{key}.bin"));
    if path.exists() {
        return evaluator::read_field(&path);
    }
    let field = compute()?;
    evaluator::write_field(&field, &path)?;
    Ok(field)
}

/// Run one stage, write its outputs and `config.json`.
pub fn execute(cfg: &RunConfig) -> Result<Vec<String>> {
    let mut out = Outputs {
        dir: &cfg.out,
        written: Vec::new(),
    };
    // written first, so the effective config survives a failing stage
    out.json("config.json", cfg)?;
    let p = &cfg.params;
    let spec = cfg.spec();
    let csv = cfg.format == Format::Csv;
    match cfg.command.as_str() {
        "seq" => {
            let w = generate(spec, p.start, p.len)?;
            if csv {
                out.put("sequence.csv", &emit::window_csv(&w))?;
            } else {
                out.json(
                    "sequence.json",
                    &WindowJson {
                        start: w.start,
                        values: &w.values,
                    },
                )?;
            }
        }
        "acf" => {
            let profile = spectrum::autocorrelation(spec, &p.acf_sizes, p.lags)?;
            let herglotz = spectrum::herglotz_check(&profile, p.lags)?;
            let psi = if profile.sample_sizes.len() >= 3 {
                Some(spectrum::psi_estimate(&profile)?)
            } else {
                None
            };
            if csv {
                out.put("lags.csv", &emit::lags_csv(&profile))?;
            }
            out.json(
                "acf.json",
                &AcfJson {
                    profile: &profile,
                    herglotz,
                    psi,
                },
            )?;
        }
        "spectrum" => {
            let est = spectral_estimate(cfg)?;
            if csv {
                out.put("arcs.csv", &emit::arcs_csv(&est))?;
            } else {
                out.json("spectrum.json", &est)?;
            }
        }
        "nogap" => {
            let est = spectral_estimate(cfg)?;
            let report = spectrum::no_gap_test(&est, p.no_gap_threshold)?;
            if csv {
                out.put("arcs.csv", &emit::arcs_csv(&est))?;
            }
            out.json("nogap.json", &report)?;
        }
        "eval" => {
            let radii = if p.radii.is_empty() { grid(p.r_range)? } else { p.radii.clone() };
            let field = value_field(cfg, &radii)?;
            let ind = evaluator::indicator_from(&field);
            if csv {
                out.put("field.csv", &emit::value_field_csv(&field))?;
                out.put("indicator.csv", &emit::indicator_csv(&ind))?;
            } else {
                out.json(
                    "field.json",
                    &FieldJson {
                        radii: &field.radii,
                        angles: &field.angles,
                        method: field.method,
                        values: &field.values,
                        noise: &field.noise,
                        h: &ind.h,
                        unresolved: &ind.unresolved,
                    },
                )?;
            }
        }
        "zeros" => {
            let zs = zeros::find_zeros(spec, p.annulus, p.tail_tol)?;
            if csv {
                out.put("zeros.csv", &emit::zeros_csv(&zs))?;
                out.json("zeros.json", &emit::zero_manifest(&zs))?;
                if p.sectors > 0 {
                    let s = zeros::sector_counts(&zs, p.sectors, p.annulus.1)?;
                    out.put("sectors.csv", &emit::sectors_csv(&s))?;
                }
            } else {
                out.json(
                    "zeros.json",
                    &ZerosJson {
                        manifest: emit::zero_manifest(&zs),
                        zeros: &zs.zeros,
                    },
                )?;
            }
        }
        "equi" => {
            let zs = zeros::find_zeros(spec, p.annulus, p.tail_tol)?;
            let report = pits::equidistribution(&zs, p.sectors, &p.verify.thresholds)?;
            if csv {
                out.put("zeros.csv", &emit::zeros_csv(&zs))?;
            }
            out.json("equidistribution.json", &report)?;
        }
        "pits" => {
            let radii = grid(p.pits_range)?;
            let field = evaluator::indicator_from(&value_field(cfg, &radii)?);
            let profile = pits::pits_profile(&field)?;
            if csv {
                out.put("indicator.csv", &emit::indicator_csv(&field))?;
            }
            out.json("pits.json", &profile)?;
        }
        "verify" => {
            let (report, art) = pits::verify_with_artifacts(spec, &p.verify)?;
            if csv {
                out.put("arcs.csv", &emit::arcs_csv(&art.spectrum))?;
                out.put("zeros.csv", &emit::zeros_csv(&art.zeros))?;
            }
            out.json("report.json", &report)?;
            out.put("report.txt", &pits::render_text(&report))?;
        }
        other => return Err(Error::Parameter(format!("unknown command {other}"))),
    }
    if let Some(root) = cache_root() {
        let dir = root
            .join(pitslab::config::spec_hash(spec))
            .join(format!("{}-{}", cfg.command, short_hash(&(&cfg.params, cfg.format))));
        for name in &out.written {
            let text = std::fs::read(cfg.out.join(name)).map_err(|e| Error::io(cfg.out.join(name), e))?;
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            std::fs::write(dir.join(name), text).map_err(|e| Error::io(dir.join(name), e))?;
        }
    }
    Ok(out.written)
}
