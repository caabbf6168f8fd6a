//! `causalcast`: causal discovery and token-based probabilistic forecasting
//! from the command line.
//!
//! Exit codes: 0 success, 2 usage or data error, 3 numerical failure.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use causalcast::chronoslite::Smoothing;
use causalcast::citest::CiTestKind;
use causalcast::discovery::DiscoveryMode;
use clap::{Args, Parser, Subcommand};

use config::{AugmentMode, RunConfig};

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { code: 2, message: message.into() }
    }
}

impl From<causalcast::Error> for CliError {
    fn from(e: causalcast::Error) -> Self {
        let code = if e.is_numerical() { 3 } else { 2 };
        CliError { code, message: e.to_string() }
    }
}

#[derive(Parser, Debug)]
#[command(name = "causalcast", version, about = "Lagged causal discovery and quantization-token forecasting")]
struct Cli {
    /// JSON run configuration; flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Global seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (does not change results)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct DataArgs {
    /// Input CSV (first column is the date unless --date-column is given)
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    date_column: Option<String>,
    /// Treat dates as monthly and average into quarters
    #[arg(long)]
    aggregate: bool,
    /// First period of the analysis span, e.g. 1970Q1
    #[arg(long)]
    start: Option<String>,
    /// Last period of the analysis span
    #[arg(long)]
    end: Option<String>,
    /// Comma-separated variables to keep
    #[arg(long, value_delimiter = ',')]
    vars: Vec<String>,
    /// Skip standard scaling
    #[arg(long)]
    no_scale: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Conditional independence test between two (lagged) variables
    Citest {
        #[command(flatten)]
        data: DataArgs,
        /// X as NAME or NAME:LAG
        #[arg(long)]
        x: Option<String>,
        /// Y as NAME or NAME:LAG
        #[arg(long)]
        y: Option<String>,
        /// Conditioning set, comma-separated NAME:LAG items
        #[arg(long, value_delimiter = ',')]
        z: Vec<String>,
        #[arg(long)]
        test: Option<CiTestKind>,
        #[arg(long)]
        n_perm: Option<usize>,
    },
    /// Lagged causal graph discovery (PCMCI or LPCMCI-lite)
    Discover {
        #[command(flatten)]
        data: DataArgs,
        /// pcmci or lpcmci
        #[arg(long)]
        mode: Option<DiscoveryMode>,
        #[arg(long)]
        test: Option<CiTestKind>,
        #[arg(long)]
        tau_max: Option<usize>,
        #[arg(long)]
        alpha_pc: Option<f64>,
        #[arg(long)]
        alpha_mci: Option<f64>,
        #[arg(long)]
        n_perm: Option<usize>,
        #[arg(long)]
        max_cond_dim: Option<usize>,
    },
    /// Rolling-origin probabilistic forecasts for one variable
    Forecast {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        var: Option<String>,
        #[arg(long)]
        context_len: Option<usize>,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        step: Option<usize>,
        #[arg(long)]
        train_stride: Option<usize>,
        #[arg(long)]
        bins: Option<usize>,
        #[arg(long, allow_hyphen_values = true)]
        lo: Option<f64>,
        #[arg(long)]
        hi: Option<f64>,
        #[arg(long)]
        order: Option<usize>,
        #[arg(long)]
        gamma: Option<f64>,
        /// additive or hierarchical
        #[arg(long)]
        smoothing: Option<Smoothing>,
        #[arg(long)]
        n_samples: Option<usize>,
        /// Index of the first forecast origin
        #[arg(long)]
        first_origin: Option<usize>,
        /// Leave sample trajectories out of the bundles
        #[arg(long)]
        no_samples: bool,
        /// Add this many KernelSynth series to the training corpus
        #[arg(long)]
        synthetic: Option<usize>,
    },
    /// Coverage, error, width and anomaly evaluation of forecast bundles
    Evaluate {
        /// Bundle JSON written by `forecast`
        #[arg(long)]
        bundles: Option<PathBuf>,
        /// CSV with observed values
        #[arg(long)]
        actuals: Option<PathBuf>,
        #[arg(long)]
        var: Option<String>,
        #[arg(long)]
        date_column: Option<String>,
        #[arg(long)]
        level: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        /// Evaluate per-horizon success counts instead of bundles
        #[arg(long, value_delimiter = ',')]
        counts: Vec<usize>,
        /// Trials per horizon for --counts
        #[arg(long)]
        n: Option<usize>,
    },
    /// Synthetic series via TSMixup or KernelSynth
    Augment {
        #[arg(long)]
        mode: Option<AugmentMode>,
        /// Number of series
        #[arg(long)]
        n: Option<usize>,
        /// Series length (KernelSynth)
        #[arg(long)]
        length: Option<usize>,
        /// Maximum kernel primitives (KernelSynth)
        #[arg(long)]
        max_terms: Option<usize>,
        /// Pool CSV for TSMixup
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        date_column: Option<String>,
    },
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn apply_data(cfg: &mut RunConfig, d: DataArgs) {
    if d.data.is_some() {
        cfg.data = d.data;
    }
    if d.date_column.is_some() {
        cfg.date_column = d.date_column;
    }
    if d.aggregate {
        cfg.aggregate = true;
    }
    if d.start.is_some() {
        cfg.start = d.start;
    }
    if d.end.is_some() {
        cfg.end = d.end;
    }
    if !d.vars.is_empty() {
        cfg.variables = d.vars;
    }
    if d.no_scale {
        cfg.scale = false;
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let bytes = output::read_bytes(path)?;
            serde_json::from_slice(&bytes)
                .map_err(|e| CliError::usage(format!("invalid config {}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    set(&mut cfg.seed, cli.seed);
    set(&mut cfg.out, cli.out.clone());
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = load_config(&cli)?;
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::usage(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Citest { data, x, y, z, test, n_perm } => {
            apply_data(&mut cfg, data);
            let c = &mut cfg.citest;
            if x.is_some() {
                c.x = x;
            }
            if y.is_some() {
                c.y = y;
            }
            if !z.is_empty() {
                c.z = z;
            }
            set(&mut c.test, test);
            set(&mut c.n_perm, n_perm);
            commands::citest(&cfg)
        }
        Command::Discover { data, mode, test, tau_max, alpha_pc, alpha_mci, n_perm, max_cond_dim } => {
            apply_data(&mut cfg, data);
            let d = &mut cfg.discovery;
            set(&mut d.mode, mode);
            set(&mut d.ci_test, test);
            set(&mut d.tau_max, tau_max);
            set(&mut d.alpha_pc, alpha_pc);
            set(&mut d.alpha_mci, alpha_mci);
            set(&mut d.n_perm, n_perm);
            if max_cond_dim.is_some() {
                d.max_cond_dim = max_cond_dim;
            }
            d.seed = cfg.seed;
            commands::discover(&cfg)
        }
        Command::Forecast {
            data,
            var,
            context_len,
            horizon,
            step,
            train_stride,
            bins,
            lo,
            hi,
            order,
            gamma,
            smoothing,
            n_samples,
            first_origin,
            no_samples,
            synthetic,
        } => {
            apply_data(&mut cfg, data);
            let f = &mut cfg.forecast;
            if var.is_some() {
                f.var = var;
            }
            set(&mut f.synthetic, synthetic);
            let m = &mut f.model;
            set(&mut m.context_len, context_len);
            set(&mut m.horizon, horizon);
            set(&mut m.step, step);
            set(&mut m.train_stride, train_stride);
            set(&mut m.bins, bins);
            set(&mut m.lo, lo);
            set(&mut m.hi, hi);
            set(&mut m.order, order);
            set(&mut m.gamma, gamma);
            set(&mut m.smoothing, smoothing);
            set(&mut m.n_samples, n_samples);
            if first_origin.is_some() {
                m.first_origin = first_origin;
            }
            if no_samples {
                m.keep_samples = false;
            }
            m.seed = cfg.seed;
            commands::forecast(&cfg)
        }
        Command::Evaluate { bundles, actuals, var, date_column, level, alpha, counts, n } => {
            if date_column.is_some() {
                cfg.date_column = date_column;
            }
            let e = &mut cfg.evaluation;
            if bundles.is_some() {
                e.bundles = bundles;
            }
            if actuals.is_some() {
                e.actuals = actuals;
            }
            if var.is_some() {
                e.var = var;
            }
            set(&mut e.level, level);
            set(&mut e.alpha, alpha);
            if !counts.is_empty() {
                e.counts = Some(counts);
            }
            if n.is_some() {
                e.n = n;
            }
            commands::evaluate(&cfg)
        }
        Command::Augment { mode, n, length, max_terms, data, date_column } => {
            let a = &mut cfg.augment;
            set(&mut a.mode, mode);
            set(&mut a.n, n);
            set(&mut a.length, length);
            set(&mut a.max_terms, max_terms);
            if data.is_some() {
                cfg.data = data;
            }
            if date_column.is_some() {
                cfg.date_column = date_column;
            }
            commands::augment(&cfg)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
