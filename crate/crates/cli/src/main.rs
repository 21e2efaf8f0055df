//! `cirsim`: command-line driver for the CIR scheme experiments.
//!
//! Exit codes: 0 when every checked row is consistent, 1 when some row is
//! rejected, 2 on usage, configuration or runtime errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cirsim_core::config::ExperimentConfig;
use cirsim_core::lab::{
    convergence_experiment, hitting_experiment, price_experiment, simulate_scheme_pairs,
    truncation_sandwich,
};
use cirsim_core::results::{render, write_results, OutputFormat, ResultRow};
use cirsim_core::tables::{bounds_table, marginal_table, moments_table, scheme_table};
use cirsim_core::{Error, Result, TruncationLevel};

#[derive(Parser)]
#[command(
    name = "cirsim",
    version,
    about = "CIR process, Rademacher schemes and convergence experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form mean, second moment and variance of X_t.
    Moments(Common),
    /// Noncentral chi-square law of X_t: CDF values and quantiles.
    Marginal {
        #[command(flatten)]
        common: Common,
        /// Points at which to evaluate the CDF.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        x: Vec<f64>,
        /// Probability levels for quantiles.
        #[arg(long, value_delimiter = ',')]
        p: Vec<f64>,
    },
    /// Simulate coupled full and truncated scheme paths and dump them with
    /// their condition residuals.
    Scheme {
        #[command(flatten)]
        common: Common,
        /// Number of paths to dump.
        #[arg(long, default_value_t = 3)]
        dump: usize,
    },
    /// Explicit bounds for every (n, C) pair.
    Bounds(Common),
    /// Exit probabilities from the scale function against Monte Carlo.
    Hitprob {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        /// Euler step of the Monte Carlo reference.
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        max_time: Option<f64>,
    },
    /// KS and moment tests of the additive scheme over the n ladder.
    Converge(Common),
    /// Disagreement frequencies of full and truncated schemes over the C x n ladder.
    Sandwich(Common),
    /// Product prices against the limit price on exact paths.
    Price {
        #[command(flatten)]
        common: Common,
        /// Resolution of the exact reference paths.
        #[arg(long)]
        n_ref: Option<usize>,
    },
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    x0: Option<f64>,
    /// Horizon T.
    #[arg(long = "T")]
    horizon: Option<f64>,
    /// Step counts, comma separated.
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    /// Truncation levels, comma separated.
    #[arg(long = "C", value_delimiter = ',')]
    c: Vec<f64>,
    /// Evaluation times, comma separated.
    #[arg(long, value_delimiter = ',')]
    t: Vec<f64>,
    /// Master seed (default: config, then $CIRSIM_SEED, then 42).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    paths: Option<usize>,
    /// Worker threads; 0 uses all cores.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    confidence: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Allow n <= 2T (schemes then report negative states as errors).
    #[arg(long)]
    no_positivity: bool,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json; defaults to the output file extension, then csv.
    #[arg(long)]
    format: Option<OutputFormat>,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::from_env()?;
        if let Some(path) = &self.config {
            cfg.merge_file(path)?;
        }
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut cfg.model.b, self.b);
        set(&mut cfg.model.sigma, self.sigma);
        set(&mut cfg.model.x0, self.x0);
        set(&mut cfg.horizon, self.horizon);
        set(&mut cfg.confidence, self.confidence);
        set(&mut cfg.epsilon, self.epsilon);
        if !self.n.is_empty() {
            cfg.n_ladder = self.n.clone();
        }
        if !self.c.is_empty() {
            cfg.c_ladder = self.c.clone();
        }
        if !self.t.is_empty() {
            cfg.eval_times = self.t.clone();
        }
        if let Some(seed) = self.seed {
            cfg.master_seed = seed;
        }
        if let Some(paths) = self.paths {
            cfg.path_count = paths;
        }
        if let Some(workers) = self.workers {
            cfg.workers = workers;
        }
        if self.no_positivity {
            cfg.positivity_mode = false;
        }
        if self.out.is_some() {
            cfg.output_path = self.out.clone();
        }
        Ok(cfg)
    }
}

fn run(command: Command) -> Result<(Vec<ResultRow>, ExperimentConfig, Option<OutputFormat>)> {
    let (rows, cfg, format) = match command {
        Command::Moments(common) => {
            let cfg = common.config()?;
            let params = cfg.params()?;
            (moments_table(&params, &cfg.eval_times)?, cfg, common.format)
        }
        Command::Marginal { common, x, p } => {
            let cfg = common.config()?;
            let params = cfg.params()?;
            let mut rows = Vec::new();
            for &t in &cfg.eval_times {
                rows.extend(marginal_table(&params, t, &x, &p)?);
            }
            (rows, cfg, common.format)
        }
        Command::Scheme { common, dump } => {
            let cfg = common.config()?;
            let params = cfg.params()?;
            let cap = TruncationLevel::new(cfg.c_ladder[0], &params)?;
            let pairs = simulate_scheme_pairs(&cfg, dump)?;
            (scheme_table(&pairs, &params, cap)?, cfg, common.format)
        }
        Command::Bounds(common) => {
            let cfg = common.config()?;
            cfg.check_basic()?;
            let params = cfg.params()?;
            let mut rows = Vec::new();
            for &n in &cfg.n_ladder {
                for &c in &cfg.c_ladder {
                    let cap = TruncationLevel::new(c, &params)?;
                    rows.extend(bounds_table(&params, cap, &cfg.grid(n)?));
                }
            }
            (rows, cfg, common.format)
        }
        Command::Hitprob {
            common,
            alpha,
            beta,
            dt,
            max_time,
        } => {
            let mut cfg = common.config()?;
            if let Some(&c) = common.c.first() {
                cfg.hit_cap = c;
            }
            cfg.alpha = alpha.unwrap_or(cfg.alpha);
            cfg.beta = beta.unwrap_or(cfg.beta);
            cfg.euler_dt = dt.unwrap_or(cfg.euler_dt);
            cfg.max_time = max_time.unwrap_or(cfg.max_time);
            (hitting_experiment(&cfg)?, cfg, common.format)
        }
        Command::Converge(common) => {
            let cfg = common.config()?;
            (convergence_experiment(&cfg)?, cfg, common.format)
        }
        Command::Sandwich(common) => {
            let cfg = common.config()?;
            (truncation_sandwich(&cfg)?, cfg, common.format)
        }
        Command::Price { common, n_ref } => {
            let mut cfg = common.config()?;
            cfg.n_ref = n_ref.unwrap_or(cfg.n_ref);
            (price_experiment(&cfg)?, cfg, common.format)
        }
    };
    Ok((rows, cfg, format))
}

fn emit(rows: &[ResultRow], cfg: &ExperimentConfig, format: Option<OutputFormat>) -> Result<()> {
    match &cfg.output_path {
        Some(path) => {
            let format = format.unwrap_or_else(|| OutputFormat::from_path(path));
            write_results(rows, path, format)
        }
        None => {
            let text = render(rows, format.unwrap_or(OutputFormat::Csv))?;
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = run(cli.command).and_then(|(rows, cfg, format)| {
        emit(&rows, &cfg, format)?;
        Ok(rows.iter().any(ResultRow::rejected))
    });
    match outcome {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(1),
        Err(e) => {
            let kind = match e {
                Error::ConfigInvalid(_) => "configuration error",
                Error::IoFailure(_) => "output error",
                _ => "error",
            };
            eprintln!("cirsim: {kind}: {e}");
            ExitCode::from(2)
        }
    }
}
