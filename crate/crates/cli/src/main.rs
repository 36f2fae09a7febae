//! `pitslab` command-line front end.

mod run;
mod spec_args;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pitslab::evaluator::Method;
use pitslab::{Error, Result};

use run::{EstimatorKind, Format, RunConfig};
use spec_args::SpecArgs;

#[derive(Parser, Debug)]
#[command(name = "pitslab", version, about = "Zeros and growth indicators of entire functions with Wiener Taylor data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Run config (JSON); flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads (default: hardware parallelism)
    #[arg(long)]
    threads: Option<usize>,
    #[command(flatten)]
    spec: SpecArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Direct,
    Window,
    Gaussian,
}

/// `a:b` pair.
fn pair(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or("expected a:b")?;
    Ok((
        a.trim().parse().map_err(|e| format!("{a}: {e}"))?,
        b.trim().parse().map_err(|e| format!("{b}: {e}"))?,
    ))
}

/// `a:b:count` range.
fn range(s: &str) -> std::result::Result<(f64, f64, usize), String> {
    let mut it = s.split(':');
    let (Some(a), Some(b), Some(n), None) = (it.next(), it.next(), it.next(), it.next()) else {
        return Err("expected a:b:count".into());
    };
    Ok((
        a.trim().parse().map_err(|e| format!("{a}: {e}"))?,
        b.trim().parse().map_err(|e| format!("{b}: {e}"))?,
        n.trim().parse().map_err(|e| format!("{n}: {e}"))?,
    ))
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sequence window as index,re,im
    Seq {
        #[command(flatten)]
        common: Common,
        /// First index
        #[arg(long)]
        start: Option<u64>,
        /// Window length
        #[arg(long)]
        len: Option<usize>,
    },
    /// Empirical autocorrelations, Herglotz check and convergence level
    Acf {
        #[command(flatten)]
        common: Common,
        /// Increasing sample sizes, comma-separated
        #[arg(long, value_delimiter = ',')]
        n: Option<Vec<usize>>,
        /// Largest lag K
        #[arg(long)]
        lags: Option<usize>,
    },
    /// Spectral arc masses
    #[command(alias = "spec")]
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        est: EstimatorArgs,
    },
    /// No-gap test on the spectral estimate
    Nogap {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        est: EstimatorArgs,
        /// Minimum normalized arc mass
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Scaled values F/U and indicator h on a polar grid
    Eval {
        #[command(flatten)]
        common: Common,
        /// Radii, comma-separated (overrides --r-range)
        #[arg(long, value_delimiter = ',')]
        radii: Option<Vec<f64>>,
        /// Radii first:last:count
        #[arg(long, value_parser = range)]
        r_range: Option<(f64, f64, usize)>,
        #[command(flatten)]
        method: MethodArgs,
    },
    /// Zeros in an annulus
    Zeros {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        zeros: ZeroArgs,
    },
    /// Angular equidistribution and radial density of zeros
    Equi {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        zeros: ZeroArgs,
    },
    /// Quantile summary of the indicator over an annulus
    Pits {
        #[command(flatten)]
        common: Common,
        /// Radii first:last:count
        #[arg(long, value_parser = range)]
        r_range: Option<(f64, f64, usize)>,
        #[command(flatten)]
        method: MethodArgs,
    },
    /// Full pipeline and verdict
    Verify {
        #[command(flatten)]
        common: Common,
        /// Zero annulus a:b
        #[arg(long, value_parser = pair)]
        annulus: Option<(f64, f64)>,
        /// Angular sectors for the chi-squared test
        #[arg(long)]
        sectors: Option<usize>,
        /// Scales t for the L1 discrepancy, comma-separated
        #[arg(long, value_delimiter = ',')]
        t: Option<Vec<f64>>,
        /// Number of probe sites
        #[arg(long)]
        probes: Option<usize>,
        /// Seed for probe sites
        #[arg(long)]
        probe_seed: Option<u64>,
        /// Window width constant
        #[arg(long)]
        c_n: Option<f64>,
    },
}

#[derive(Args, Debug, Clone)]
struct EstimatorArgs {
    /// Sample size for the periodogram
    #[arg(long)]
    n: Option<usize>,
    /// Number of arcs J
    #[arg(long)]
    arcs: Option<usize>,
    #[arg(long, value_enum)]
    estimator: Option<EstimatorKind>,
    /// Radius for the Abel estimator
    #[arg(long)]
    abel_r: Option<f64>,
}

#[derive(Args, Debug, Clone)]
struct MethodArgs {
    /// Angles per radius
    #[arg(long)]
    angles: Option<usize>,
    /// Evaluation method
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// Window width constant (window methods)
    #[arg(long)]
    c_n: Option<f64>,
    /// Truncation tolerance (direct method)
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args, Debug, Clone)]
struct ZeroArgs {
    /// Annulus a:b
    #[arg(long, value_parser = pair)]
    annulus: Option<(f64, f64)>,
    /// Series tail tolerance
    #[arg(long)]
    tail_tol: Option<f64>,
    /// Angular sectors (0 disables sector counts in `zeros`)
    #[arg(long)]
    sectors: Option<usize>,
}

macro_rules! set {
    ($dst:expr, $src:expr) => {
        if let Some(v) = $src {
            $dst = v;
        }
    };
}

impl EstimatorArgs {
    fn apply(self, cfg: &mut RunConfig) {
        let p = &mut cfg.params;
        set!(p.n, self.n);
        set!(p.arcs, self.arcs);
        set!(p.estimator, self.estimator);
        set!(p.abel_r, self.abel_r);
    }
}

impl MethodArgs {
    fn apply(self, cfg: &mut RunConfig) {
        let p = &mut cfg.params;
        set!(p.angles, self.angles);
        let (old_tol, old_c) = match p.method {
            Method::Direct { tol } => (tol, pitslab::evaluator::DEFAULT_C_N),
            Method::CentralWindow { c_n } | Method::GaussianWindow { c_n } => (1e-10, c_n),
        };
        let tol = self.tol.unwrap_or(old_tol);
        let c_n = self.c_n.unwrap_or(old_c);
        p.method = match self.method {
            Some(MethodArg::Direct) => Method::Direct { tol },
            Some(MethodArg::Window) => Method::CentralWindow { c_n },
            Some(MethodArg::Gaussian) => Method::GaussianWindow { c_n },
            None => match p.method {
                Method::Direct { .. } => Method::Direct { tol },
                Method::CentralWindow { .. } => Method::CentralWindow { c_n },
                Method::GaussianWindow { .. } => Method::GaussianWindow { c_n },
            },
        };
    }
}

impl ZeroArgs {
    fn apply(self, cfg: &mut RunConfig) {
        let p = &mut cfg.params;
        set!(p.annulus, self.annulus);
        set!(p.tail_tol, self.tail_tol);
        set!(p.sectors, self.sectors);
    }
}

fn base_config(name: &str, common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::new(name),
    };
    cfg.command = name.to_string();
    set!(cfg.out, common.out.clone());
    set!(cfg.format, common.format);
    if common.threads.is_some() {
        cfg.threads = common.threads;
    }
    cfg.spec = Some(common.spec.resolve(cfg.spec.take())?);
    Ok(cfg)
}

fn build(command: Command) -> Result<RunConfig> {
    Ok(match command {
        Command::Seq { common, start, len } => {
            let mut cfg = base_config("seq", &common)?;
            set!(cfg.params.start, start);
            set!(cfg.params.len, len);
            cfg
        }
        Command::Acf { common, n, lags } => {
            let mut cfg = base_config("acf", &common)?;
            set!(cfg.params.acf_sizes, n);
            set!(cfg.params.lags, lags);
            cfg
        }
        Command::Spectrum { common, est } => {
            let mut cfg = base_config("spectrum", &common)?;
            est.apply(&mut cfg);
            cfg
        }
        Command::Nogap { common, est, threshold } => {
            let mut cfg = base_config("nogap", &common)?;
            est.apply(&mut cfg);
            set!(cfg.params.no_gap_threshold, threshold);
            cfg
        }
        Command::Eval {
            common,
            radii,
            r_range,
            method,
        } => {
            let mut cfg = base_config("eval", &common)?;
            set!(cfg.params.radii, radii);
            if let Some(r) = r_range {
                cfg.params.r_range = r;
                cfg.params.radii.clear();
            }
            method.apply(&mut cfg);
            cfg
        }
        Command::Zeros { common, zeros } => {
            let mut cfg = base_config("zeros", &common)?;
            zeros.apply(&mut cfg);
            cfg
        }
        Command::Equi { common, zeros } => {
            let mut cfg = base_config("equi", &common)?;
            zeros.apply(&mut cfg);
            cfg
        }
        Command::Pits { common, r_range, method } => {
            let mut cfg = base_config("pits", &common)?;
            set!(cfg.params.pits_range, r_range);
            method.apply(&mut cfg);
            cfg
        }
        Command::Verify {
            common,
            annulus,
            sectors,
            t,
            probes,
            probe_seed,
            c_n,
        } => {
            let mut cfg = base_config("verify", &common)?;
            let v = &mut cfg.params.verify;
            set!(v.annulus, annulus);
            set!(v.sectors, sectors);
            set!(v.l1_t, t);
            set!(v.probes, probes);
            set!(v.seed, probe_seed);
            set!(v.c_n, c_n);
            cfg
        }
    })
}

fn main_inner(cli: Cli) -> Result<()> {
    let cfg = build(cli.command)?;
    if let Some(n) = cfg.threads {
        if n == 0 {
            return Err(Error::Parameter("--threads must be positive".into()));
        }
        #[cfg(feature = "parallel")]
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Parameter(format!("thread pool: {e}")))?;
    }
    run::execute(&cfg)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pitslab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
