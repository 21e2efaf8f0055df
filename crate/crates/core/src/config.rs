//! Experiment configuration.
//!
//! Config files are TOML with four sections; every key is optional and falls
//! back to [`ExperimentConfig::default`]:
//!
//! ```toml
//! [model]
//! b = 1.0
//! sigma = 1.0
//! x0 = 1.0
//!
//! [grid]
//! horizon = 1.0
//! n = [8, 32, 128, 512]
//! C = [4.0, 8.0, 16.0, 32.0]
//! eval_times = [1.0]
//! positivity_mode = true
//!
//! [run]
//! paths = 100000
//! seed = 42
//! workers = 0
//! confidence = 0.999
//! epsilon = 0.01
//! output = "results.csv"
//!
//! [hitting]
//! alpha = 0.5
//! beta = 3.0
//! C = 1.5
//! dt = 0.00025
//! max_time = 50.0
//!
//! [price]
//! n_ref = 4096
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::model::{validate_params, CirParams, RawParams};
use crate::truncated::TruncationLevel;

/// Environment variable that replaces the built-in default seed.
pub const SEED_ENV: &str = "CIRSIM_SEED";
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: RawParams,
    pub horizon: f64,
    pub n_ladder: Vec<usize>,
    pub c_ladder: Vec<f64>,
    pub eval_times: Vec<f64>,
    pub positivity_mode: bool,
    pub path_count: usize,
    pub master_seed: u64,
    /// Rayon worker count; 0 uses the global pool.
    pub workers: usize,
    pub confidence: f64,
    pub epsilon: f64,
    pub output_path: Option<PathBuf>,
    pub alpha: f64,
    pub beta: f64,
    pub hit_cap: f64,
    pub euler_dt: f64,
    pub max_time: f64,
    pub n_ref: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: RawParams {
                b: 1.0,
                sigma: 1.0,
                x0: 1.0,
            },
            horizon: 1.0,
            n_ladder: vec![8, 32, 128, 512],
            c_ladder: vec![4.0, 8.0, 16.0, 32.0],
            eval_times: vec![1.0],
            positivity_mode: true,
            path_count: 100_000,
            master_seed: DEFAULT_SEED,
            workers: 0,
            confidence: 0.999,
            epsilon: 0.01,
            output_path: None,
            alpha: 0.5,
            beta: 3.0,
            hit_cap: 1.5,
            euler_dt: 2.5e-4,
            max_time: 50.0,
            n_ref: 4096,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileModel {
    b: Option<f64>,
    sigma: Option<f64>,
    x0: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileGrid {
    horizon: Option<f64>,
    n: Option<Vec<usize>>,
    #[serde(rename = "C")]
    c: Option<Vec<f64>>,
    eval_times: Option<Vec<f64>>,
    positivity_mode: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileRun {
    paths: Option<usize>,
    seed: Option<u64>,
    workers: Option<usize>,
    confidence: Option<f64>,
    epsilon: Option<f64>,
    output: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileHitting {
    alpha: Option<f64>,
    beta: Option<f64>,
    #[serde(rename = "C")]
    c: Option<f64>,
    dt: Option<f64>,
    max_time: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FilePrice {
    n_ref: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    model: FileModel,
    #[serde(default)]
    grid: FileGrid,
    #[serde(default)]
    run: FileRun,
    #[serde(default)]
    hitting: FileHitting,
    #[serde(default)]
    price: FilePrice,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl ExperimentConfig {
    /// Defaults with the seed taken from [`SEED_ENV`] when it is set.
    pub fn from_env() -> Result<Self> {
        let mut cfg = Self::default();
        if let Ok(raw) = std::env::var(SEED_ENV) {
            cfg.master_seed = raw.trim().parse().map_err(|_| {
                Error::ConfigInvalid(format!("{SEED_ENV}={raw:?} is not a u64 seed"))
            })?;
        }
        Ok(cfg)
    }

    /// Overlays the keys present in a TOML document.
    pub fn merge_toml(&mut self, text: &str) -> Result<()> {
        let file: ConfigFile =
            toml::from_str(text).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        set(&mut self.model.b, file.model.b);
        set(&mut self.model.sigma, file.model.sigma);
        set(&mut self.model.x0, file.model.x0);
        set(&mut self.horizon, file.grid.horizon);
        set(&mut self.n_ladder, file.grid.n);
        set(&mut self.c_ladder, file.grid.c);
        set(&mut self.eval_times, file.grid.eval_times);
        set(&mut self.positivity_mode, file.grid.positivity_mode);
        set(&mut self.path_count, file.run.paths);
        set(&mut self.master_seed, file.run.seed);
        set(&mut self.workers, file.run.workers);
        set(&mut self.confidence, file.run.confidence);
        set(&mut self.epsilon, file.run.epsilon);
        if file.run.output.is_some() {
            self.output_path = file.run.output;
        }
        set(&mut self.alpha, file.hitting.alpha);
        set(&mut self.beta, file.hitting.beta);
        set(&mut self.hit_cap, file.hitting.c);
        set(&mut self.euler_dt, file.hitting.dt);
        set(&mut self.max_time, file.hitting.max_time);
        set(&mut self.n_ref, file.price.n_ref);
        Ok(())
    }

    pub fn merge_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::ConfigInvalid(format!("cannot read {}: {e}", path.display())))?;
        self.merge_toml(&text)
    }

    /// Model parameters; `sigma = 0` selects the noise-free model.
    pub fn params(&self) -> Result<CirParams> {
        if self.model.sigma == 0.0 {
            CirParams::deterministic(self.model.b, self.model.x0)
        } else {
            validate_params(self.model)
        }
    }

    pub fn grid(&self, n: usize) -> Result<GridSpec> {
        GridSpec::new(self.horizon, n)
    }

    /// Shape checks that every experiment needs.
    pub fn check_basic(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::ConfigInvalid(msg));
        self.params()?;
        GridSpec::new(self.horizon, 1)?;
        if self.n_ladder.is_empty() || self.n_ladder.contains(&0) {
            return bad("n ladder must be nonempty with n >= 1".into());
        }
        if self.c_ladder.iter().any(|c| !(*c > 0.0)) {
            return bad("C values must be positive".into());
        }
        if self
            .eval_times
            .iter()
            .any(|t| !(*t >= 0.0 && *t <= self.horizon))
        {
            return bad(format!("eval times must lie in [0, T = {}]", self.horizon));
        }
        if self.path_count == 0 {
            return bad("path count must be positive".into());
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return bad(format!("confidence {} must lie in (0, 1)", self.confidence));
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive".into());
        }
        if !(self.euler_dt > 0.0 && self.max_time > 0.0) {
            return bad("hitting dt and max_time must be positive".into());
        }
        if self.n_ref == 0 {
            return bad("n_ref must be at least 1".into());
        }
        Ok(())
    }

    /// Full validation, including the preconditions of the positivity and
    /// truncation results. Every failure is reported as
    /// [`Error::ConfigInvalid`].
    pub fn validate(&self) -> Result<()> {
        self.validate_inner().map_err(|e| match e {
            Error::ConfigInvalid(_) => e,
            other => Error::ConfigInvalid(other.to_string()),
        })
    }

    fn validate_inner(&self) -> Result<()> {
        self.check_basic()?;
        let params = self.params()?;
        let bad = |msg: String| Err(Error::ConfigInvalid(msg));
        if self.path_count < 100 {
            return bad(format!(
                "path count {} below the minimum of 100",
                self.path_count
            ));
        }
        if self.positivity_mode {
            if !params.feller_ok() {
                return bad(format!(
                    "positivity mode requires 2b >= sigma^2 (2b = {}, sigma^2 = {})",
                    2.0 * params.b(),
                    params.sigma_sq()
                ));
            }
            if let Some(n) = self
                .n_ladder
                .iter()
                .find(|&&n| n as f64 <= 2.0 * self.horizon)
            {
                return bad(format!(
                    "positivity mode requires n > 2T; n = {n} with T = {}",
                    self.horizon
                ));
            }
        }
        for &c in &self.c_ladder {
            TruncationLevel::new(c, &params).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        }
        TruncationLevel::new(self.hit_cap, &params)
            .map_err(|e| Error::ConfigInvalid(format!("hitting C: {e}")))?;
        if !(self.alpha > 0.0 && self.alpha < params.x0() && params.x0() < self.beta) {
            return bad(format!(
                "hitting interval needs 0 < alpha < x0 < beta (alpha = {}, x0 = {}, beta = {})",
                self.alpha,
                params.x0(),
                self.beta
            ));
        }
        Ok(())
    }
}
