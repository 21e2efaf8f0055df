//! Residual checks for the convergence conditions and the Monte Carlo
//! experiments built on top of the schemes.
//!
//! Every experiment draws path `i` of a cell from
//! `PathRng::new(derive_seed(master, tags), i)` and collects results in path
//! order, so the output does not depend on the worker count.

use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::engines::{exact_cir_path, first_exit, ContinuousPath, ExitSide, TruncatedEulerStepper};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::model::{marginal_law, mean_at, second_moment_at, CirParams};
use crate::prices::{corrected_product_price, limit_price, product_price};
use crate::quadrature::{integrate, Tolerance};
use crate::results::ResultRow;
use crate::rng::{derive_seed, PathRng};
use crate::schemes::{
    additive_scheme_with, agreement_check, rademacher_noise, step_eval, theoretical_bounds,
    truncated_scheme_with, SchemeMode, SchemePath, StepPath, TheoreticalBounds,
};
use crate::stats::{
    ks_test, ks_two_sample, mean_difference_test, mean_estimate, mean_test, noncentral_chisq_cdf,
    StatReport,
};
use crate::truncated::{hitting_probability, scale_density, scale_function, TruncationLevel};

/// Slack allowed on exact residual-versus-bound comparisons.
pub const BOUND_SLACK: f64 = 1e-12;

/// Standard errors allowed in the moment tests.
pub const MOMENT_K_SE: f64 = 4.0;
/// Standard errors allowed between hitting frequencies and the formula.
pub const HITTING_K_SE: f64 = 3.0;

const TAG_CONVERGE: u64 = 1;
const TAG_SANDWICH: u64 = 2;
const TAG_HITTING: u64 = 3;
const TAG_PRICE: u64 = 4;
const TAG_PRICE_REF: u64 = 5;
const TAG_SCHEME: u64 = 6;

/// `f(0), .., f(count - 1)` evaluated on `workers` threads (0: rayon's
/// global pool), returned in index order.
pub fn par_map<T, F>(workers: usize, count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if workers == 0 {
        return Ok((0..count).into_par_iter().map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::ConfigInvalid(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(|| (0..count).into_par_iter().map(f).collect()))
}

fn collect<T>(items: Vec<Result<T>>) -> Result<Vec<T>> {
    items.into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionReport {
    pub max_increment: f64,
    /// `sup_t |Σ_{k <= ⌊nt/T⌋} E(Q_k | F_{k-1}) - ∫_0^t (b - X_s ∧ C) ds|`.
    pub drift_residual_sup: f64,
    /// Largest gap between the raw drift residual and `|b - X_k ∧ C| (t - kT/n)`.
    pub drift_identity_error: f64,
    /// Same as the drift residual for the conditional variances against `σ² ∫ X ∧ C`.
    pub quad_residual_sup_centered: f64,
    pub quad_identity_error: f64,
    /// Conditional second moments (not variances) against `σ² ∫ X ∧ C`.
    pub quad_residual_sup_uncentered: f64,
    pub bounds: TheoreticalBounds,
    pub pass: bool,
}

/// The two possible increments out of state `x`.
fn branches(x: f64, params: &CirParams, cap: f64, h: f64) -> (f64, f64) {
    let capped = x.min(cap);
    let drift = (params.b() - capped) * h;
    let shock = params.sigma() * h.sqrt() * capped.sqrt();
    (drift + shock, drift - shock)
}

/// Grid points, step midpoints and `T`.
pub fn residual_time_grid(grid: &GridSpec) -> Vec<f64> {
    let mut ts: Vec<f64> = (0..grid.steps())
        .flat_map(|k| [grid.time(k), 0.5 * (grid.time(k) + grid.time(k + 1))])
        .collect();
    ts.push(grid.horizon());
    ts
}

/// Evaluates the residuals of the drift and quadratic-variation conditions
/// along one path at the times in `t_grid`, and at the left limit before
/// every grid point, where the step-function residuals peak.
///
/// Conditional moments are computed by averaging over the two noise
/// branches of each step rather than from their closed forms.
pub fn condition_residuals(
    scheme: &SchemePath,
    params: &CirParams,
    cap: TruncationLevel,
    t_grid: &[f64],
) -> Result<ConditionReport> {
    let grid = scheme.grid;
    let n = grid.steps();
    if scheme.values.len() != n + 1 || scheme.increments.len() != n {
        return Err(Error::GridMismatch(
            "path length does not match its grid".into(),
        ));
    }
    if scheme.truncation.is_some_and(|c| c != cap) {
        return Err(Error::GridMismatch(format!(
            "path truncated at {} but residuals requested for C = {}",
            scheme.cap(),
            cap.value()
        )));
    }
    let c = cap.value();
    let h = grid.dt();
    let s2 = params.sigma_sq();

    // Prefix sums over steps 1..=k of the conditional moments, and of the
    // left-endpoint integral of X ∧ C over [0, kT/n].
    let mut mean_sum = vec![0.0; n + 1];
    let mut var_sum = vec![0.0; n + 1];
    let mut second_sum = vec![0.0; n + 1];
    let mut capped_integral = vec![0.0; n + 1];
    for k in 0..n {
        let x = scheme.values[k];
        let (up, down) = branches(x, params, c, h);
        let mean = 0.5 * (up + down);
        let second = 0.5 * (up * up + down * down);
        mean_sum[k + 1] = mean_sum[k] + mean;
        var_sum[k + 1] = var_sum[k] + (second - mean * mean);
        second_sum[k + 1] = second_sum[k] + second;
        capped_integral[k + 1] = capped_integral[k] + x.min(c) * (grid.time(k + 1) - grid.time(k));
    }

    let mut report = ConditionReport {
        max_increment: scheme.max_abs_increment(),
        drift_residual_sup: 0.0,
        drift_identity_error: 0.0,
        quad_residual_sup_centered: 0.0,
        quad_identity_error: 0.0,
        quad_residual_sup_uncentered: 0.0,
        bounds: theoretical_bounds(params, cap, &grid),
        pass: false,
    };

    // (k, t - kT/n, t) for the requested times and the left limits.
    let mut points = Vec::with_capacity(t_grid.len() + n);
    for &t in t_grid {
        let k = grid.index_at(t)?;
        points.push((k, t - grid.time(k), t));
    }
    for k in 0..n {
        points.push((k, grid.time(k + 1) - grid.time(k), grid.time(k + 1)));
    }

    for (k, frac, t) in points {
        let xk = scheme.values[k].min(c);
        let integral = capped_integral[k] + xk * frac;
        let drift_raw = (mean_sum[k] - (params.b() * t - integral)).abs();
        let drift_closed = ((params.b() - xk) * frac).abs();
        let quad_raw = (var_sum[k] - s2 * integral).abs();
        let quad_closed = s2 * xk * frac;
        let uncentered = (second_sum[k] - s2 * integral).abs();

        report.drift_residual_sup = report.drift_residual_sup.max(drift_raw);
        report.drift_identity_error = report
            .drift_identity_error
            .max((drift_raw - drift_closed).abs());
        report.quad_residual_sup_centered = report.quad_residual_sup_centered.max(quad_raw);
        report.quad_identity_error = report
            .quad_identity_error
            .max((quad_raw - quad_closed).abs());
        report.quad_residual_sup_uncentered = report.quad_residual_sup_uncentered.max(uncentered);
    }

    let b = &report.bounds;
    report.pass = report.max_increment <= b.increment_bound + BOUND_SLACK
        && report.drift_residual_sup <= b.drift_residual_bound + BOUND_SLACK
        && report.quad_residual_sup_centered <= b.centered_quad_residual_bound + BOUND_SLACK
        && report.quad_residual_sup_uncentered <= b.quad_residual_bound + BOUND_SLACK;
    Ok(report)
}

/// Largest increment over a batch of paths against the deterministic
/// increment bound.
pub fn condition_i_statistic(schemes: &[SchemePath], bounds: &TheoreticalBounds) -> StatReport {
    let statistic = schemes
        .iter()
        .map(SchemePath::max_abs_increment)
        .fold(0.0, f64::max);
    StatReport::new(
        schemes.len(),
        statistic,
        bounds.increment_bound + BOUND_SLACK,
        None,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionSums {
    /// `Σ_k E(Q_k² | F_{k-1})`.
    pub sum_sq: f64,
    /// `Σ_k |E(Q_k | F_{k-1})|`.
    pub sum_abs_mean: f64,
    /// `C_2²`.
    pub sum_sq_bound: f64,
    /// `(|b| + C) T`.
    pub sum_abs_mean_bound: f64,
    pub pass: bool,
}

pub fn conditions_ii_iii_sums(
    scheme: &SchemePath,
    params: &CirParams,
    cap: TruncationLevel,
) -> ConditionSums {
    let grid = scheme.grid;
    let h = grid.dt();
    let c = cap.value();
    let (mut sum_sq, mut sum_abs_mean) = (0.0, 0.0);
    for &x in &scheme.values[..grid.steps()] {
        let (up, down) = branches(x, params, c, h);
        sum_sq += 0.5 * (up * up + down * down);
        sum_abs_mean += (0.5 * (up + down)).abs();
    }
    let c2 = theoretical_bounds(params, cap, &grid).c2(&grid);
    let sum_sq_bound = c2 * c2;
    let sum_abs_mean_bound = (params.b().abs() + c) * grid.horizon();
    ConditionSums {
        sum_sq,
        sum_abs_mean,
        sum_sq_bound,
        sum_abs_mean_bound,
        pass: sum_sq <= sum_sq_bound + BOUND_SLACK
            && sum_abs_mean <= sum_abs_mean_bound + BOUND_SLACK,
    }
}

fn scheme_mode(cfg: &ExperimentConfig) -> SchemeMode {
    if cfg.positivity_mode {
        SchemeMode::Checked
    } else {
        SchemeMode::Unchecked
    }
}

/// Nonpositive states seen over `paths` runs of the full and the truncated
/// scheme (unchecked mode, so violations are counted rather than refused).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PositivityCensus {
    pub paths: usize,
    pub full_violations: usize,
    pub truncated_violations: usize,
}

pub fn positivity_census(
    params: &CirParams,
    cap: TruncationLevel,
    grid: &GridSpec,
    paths: usize,
    seed: u64,
    workers: usize,
) -> Result<PositivityCensus> {
    let hits = par_map(workers, paths, |i| {
        let noise = rademacher_noise(grid, &mut PathRng::new(seed, i as u64));
        let bad = |r: Result<SchemePath>| match r {
            Ok(s) => s.min_state() <= 0.0,
            Err(_) => true,
        };
        (
            bad(additive_scheme_with(
                params,
                grid,
                &noise,
                SchemeMode::Unchecked,
            )),
            bad(truncated_scheme_with(
                params,
                cap,
                grid,
                &noise,
                SchemeMode::Unchecked,
            )),
        )
    })?;
    Ok(PositivityCensus {
        paths,
        full_violations: hits.iter().filter(|h| h.0).count(),
        truncated_violations: hits.iter().filter(|h| h.1).count(),
    })
}

fn point_mass_or_law(params: &CirParams, t: f64) -> Option<crate::model::NoncentralChiSqSpec> {
    if params.sigma() == 0.0 || t == 0.0 {
        None
    } else {
        marginal_law(params, t).ok()
    }
}

/// Distribution test of `sample` against the law of `X_t`: one-sample KS
/// against the noncentral chi-square CDF, or a two-sample comparison with
/// the point mass when the law is degenerate.
fn marginal_ks(params: &CirParams, t: f64, sample: &[f64], confidence: f64) -> Result<StatReport> {
    match point_mass_or_law(params, t) {
        Some(spec) => ks_test(
            sample,
            |x| noncentral_chisq_cdf(&spec, x).unwrap_or(f64::NAN),
            confidence,
        ),
        None => ks_two_sample(sample, &[mean_at(params, t)?], confidence),
    }
}

fn count_increases(values: &[f64]) -> usize {
    values.windows(2).filter(|w| w[1] > w[0]).count()
}

/// KS distance and moment tests of the additive scheme at each evaluation
/// time, for every `n` in the ladder.
///
/// KS rows for all but the largest `n` are informational (the KS-vs-n table);
/// the largest `n` is tested against the DKW threshold and with moment tests
/// at four standard errors. A `ks_increases` row counts the non-monotone
/// steps of the table, of which at most one is tolerated.
pub fn convergence_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    const ID: &str = "converge";
    cfg.validate()?;
    let params = cfg.params()?;
    let mode = scheme_mode(cfg);
    let n_max = *cfg.n_ladder.iter().max().expect("validated ladder");
    let mut rows = Vec::new();
    let mut ks_table = vec![Vec::new(); cfg.eval_times.len()];

    for &n in &cfg.n_ladder {
        let grid = cfg.grid(n)?;
        let seed = derive_seed(cfg.master_seed, &[TAG_CONVERGE, n as u64]);
        let samples = collect(par_map(cfg.workers, cfg.path_count, |i| {
            let noise = rademacher_noise(&grid, &mut PathRng::new(seed, i as u64));
            let scheme = additive_scheme_with(&params, &grid, &noise, mode)?;
            let step = StepPath::new(&scheme);
            cfg.eval_times
                .iter()
                .map(|&t| step_eval(&step, t))
                .collect::<Result<Vec<f64>>>()
        })?)?;

        for (j, &t) in cfg.eval_times.iter().enumerate() {
            let sample: Vec<f64> = samples.iter().map(|v| v[j]).collect();
            let ks = marginal_ks(&params, t, &sample, cfg.confidence)?;
            ks_table[j].push(ks.statistic);
            if n == n_max {
                rows.push(ResultRow::from_report(ID, "ks", &ks).n(n).t(t));
                let mean = mean_test(&sample, mean_at(&params, t)?, MOMENT_K_SE, 0.0);
                rows.push(ResultRow::from_report(ID, "mean_error", &mean).n(n).t(t));
                let squares: Vec<f64> = sample.iter().map(|x| x * x).collect();
                let second = mean_test(&squares, second_moment_at(&params, t)?, MOMENT_K_SE, 0.0);
                rows.push(
                    ResultRow::from_report(ID, "second_moment_error", &second)
                        .n(n)
                        .t(t),
                );
            } else {
                rows.push(ResultRow::info(ID, "ks", ks.statistic).n(n).t(t));
            }
        }
    }
    for (j, &t) in cfg.eval_times.iter().enumerate() {
        let increases = count_increases(&ks_table[j]) as f64;
        rows.push(ResultRow::checked(ID, "ks_increases", increases, 1.0).t(t));
    }
    Ok(rows)
}

/// Coupled simulation of the full and truncated schemes on one noise path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SandwichCell {
    pub n: usize,
    pub c: f64,
    pub paths: usize,
    pub disagreements: usize,
    /// Paths with `sup_k |X^(n,C)_k - X^(n)_k| >= ε`.
    pub gap_exceedances: usize,
    pub bound: f64,
}

impl SandwichCell {
    pub fn frequency(&self) -> f64 {
        self.disagreements as f64 / self.paths as f64
    }

    pub fn gap_frequency(&self) -> f64 {
        self.gap_exceedances as f64 / self.paths as f64
    }
}

/// One `(C, n)` cell. `cap` may violate `C > max(b, 1)`; the bound is still
/// reported but only meaningful for valid levels.
#[allow(clippy::too_many_arguments)]
pub fn sandwich_cell(
    params: &CirParams,
    cap: TruncationLevel,
    grid: &GridSpec,
    epsilon: f64,
    paths: usize,
    seed: u64,
    workers: usize,
    mode: SchemeMode,
) -> Result<SandwichCell> {
    let outcomes = collect(par_map(workers, paths, |i| {
        let noise = rademacher_noise(grid, &mut PathRng::new(seed, i as u64));
        let full = additive_scheme_with(params, grid, &noise, mode)?;
        let trunc = truncated_scheme_with(params, cap, grid, &noise, mode)?;
        let agree = agreement_check(&full, &trunc)?.agree;
        let gap = full
            .values
            .iter()
            .zip(&trunc.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        Ok((!agree, gap >= epsilon))
    })?)?;
    Ok(SandwichCell {
        n: grid.steps(),
        c: cap.value(),
        paths,
        disagreements: outcomes.iter().filter(|o| o.0).count(),
        gap_exceedances: outcomes.iter().filter(|o| o.1).count(),
        bound: theoretical_bounds(params, cap, grid).disagreement_bound,
    })
}

/// Disagreement frequencies of the full and truncated schemes over the
/// `C × n` ladder. All cells with the same `n` share their noise paths.
pub fn truncation_sandwich(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    const ID: &str = "sandwich";
    cfg.validate()?;
    let params = cfg.params()?;
    let mode = scheme_mode(cfg);
    let mut rows = Vec::new();
    for &n in &cfg.n_ladder {
        let grid = cfg.grid(n)?;
        let seed = derive_seed(cfg.master_seed, &[TAG_SANDWICH, n as u64]);
        let mut cells = Vec::with_capacity(cfg.c_ladder.len());
        for &c in &cfg.c_ladder {
            let cap = TruncationLevel::new(c, &params)?;
            let cell = sandwich_cell(
                &params,
                cap,
                &grid,
                cfg.epsilon,
                cfg.path_count,
                seed,
                cfg.workers,
                mode,
            )?;
            rows.push(
                ResultRow::checked(ID, "disagree_freq", cell.frequency(), cell.bound)
                    .n(n)
                    .c(c),
            );
            rows.push(
                ResultRow::info(ID, "gap_freq", cell.gap_frequency())
                    .n(n)
                    .c(c),
            );
            cells.push(cell);
        }
        let mut order: Vec<&SandwichCell> = cells.iter().collect();
        order.sort_by(|a, b| a.c.total_cmp(&b.c));
        let worst_rise = order
            .windows(2)
            .map(|w| {
                let (lo, hi) = (w[0], w[1]);
                let m = cfg.path_count as f64;
                let se = (lo.frequency() * (1.0 - lo.frequency()) / m
                    + hi.frequency() * (1.0 - hi.frequency()) / m)
                    .sqrt();
                hi.frequency() - lo.frequency() - 2.0 * se
            })
            .fold(f64::NEG_INFINITY, f64::max);
        if worst_rise.is_finite() {
            rows.push(
                ResultRow::with_outcome(
                    ID,
                    "freq_rise_in_c",
                    worst_rise.max(0.0),
                    Some(0.0),
                    worst_rise <= 0.0,
                )
                .n(n),
            );
        }
    }
    Ok(rows)
}

/// Largest relative difference between the closed-form tail of the scale
/// function and direct quadrature of its density, over `points` evenly
/// spaced arguments in `(C, 4C]`.
pub fn tail_quadrature_discrepancy(
    params: &CirParams,
    cap: TruncationLevel,
    points: usize,
) -> Result<f64> {
    let c = cap.value();
    let tol = Tolerance {
        relative: 1e-14,
        absolute: 0.0,
        max_segments: 20_000,
    };
    let density = |y: f64| scale_density(y, params, cap);
    let to_cap = integrate(&density, 1.0, c, tol)?;
    let mut worst: f64 = 0.0;
    for i in 1..=points {
        let x = c + 3.0 * c * i as f64 / points as f64;
        let direct = to_cap + integrate(&density, c, x, tol)?;
        let closed = scale_function(x, params, cap)?.value;
        worst = worst.max(((closed - direct) / direct).abs());
    }
    Ok(worst)
}

/// Frequency of leaving `(alpha, beta)` through `alpha` first.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HittingEstimate {
    pub runs: usize,
    pub low_first: usize,
    pub unexited: usize,
}

impl HittingEstimate {
    pub fn frequency(&self) -> f64 {
        self.low_first as f64 / self.runs as f64
    }
}

#[allow(clippy::too_many_arguments)]
pub fn hitting_monte_carlo(
    params: &CirParams,
    cap: TruncationLevel,
    alpha: f64,
    beta: f64,
    dt: f64,
    max_time: f64,
    runs: usize,
    seed: u64,
    workers: usize,
) -> Result<HittingEstimate> {
    let stepper = TruncatedEulerStepper {
        params: *params,
        cap,
        dt,
        bridge: true,
    };
    let sides = collect(par_map(workers, runs, |i| {
        first_exit(
            &stepper,
            params.x0(),
            alpha,
            beta,
            max_time,
            &mut PathRng::new(seed, i as u64),
        )
        .map(|o| o.side)
    })?)?;
    Ok(HittingEstimate {
        runs,
        low_first: sides.iter().filter(|s| **s == ExitSide::Low).count(),
        unexited: sides.iter().filter(|s| **s == ExitSide::None).count(),
    })
}

/// Exit probabilities from the scale function against Euler Monte Carlo,
/// plus the tail-versus-quadrature check of the scale function.
pub fn hitting_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    const ID: &str = "hitprob";
    cfg.validate()?;
    let params = cfg.params()?;
    let cap = TruncationLevel::new(cfg.hit_cap, &params)?;
    let c = cap.value();
    let mut rows = Vec::new();

    let tail = tail_quadrature_discrepancy(&params, cap, 30)?;
    rows.push(ResultRow::checked(ID, "tail_vs_quadrature", tail, 1e-8).c(c));

    let formula = hitting_probability(&params, cap, cfg.alpha, cfg.beta)?.p_alpha_first;
    rows.push(ResultRow::info(ID, "p_alpha_formula", formula).c(c));
    let seed = derive_seed(cfg.master_seed, &[TAG_HITTING]);
    let mc = hitting_monte_carlo(
        &params,
        cap,
        cfg.alpha,
        cfg.beta,
        cfg.euler_dt,
        cfg.max_time,
        cfg.path_count,
        seed,
        cfg.workers,
    )?;
    let se = (formula * (1.0 - formula) / mc.runs as f64).sqrt();
    rows.push(ResultRow::info(ID, "p_alpha_mc", mc.frequency()).c(c));
    rows.push(
        ResultRow::checked(
            ID,
            "p_alpha_error",
            (mc.frequency() - formula).abs(),
            HITTING_K_SE * se,
        )
        .c(c),
    );
    rows.push(ResultRow::info(ID, "unexited_freq", mc.unexited as f64 / mc.runs as f64).c(c));
    Ok(rows)
}

fn reference_path(
    params: &CirParams,
    grid: &GridSpec,
    rng: &mut PathRng,
) -> Result<ContinuousPath> {
    if params.sigma() == 0.0 {
        let values = grid
            .times()
            .iter()
            .map(|&t| mean_at(params, t))
            .collect::<Result<Vec<_>>>()?;
        ContinuousPath::new(grid.times(), values)
    } else {
        exact_cir_path(params, grid, rng)
    }
}

/// Terminal log-prices of the product scheme against the limit price on
/// exact CIR paths at resolution `n_ref`.
///
/// Mean rows allow `4 SE + T/n + T/n_ref`. Two-sample KS rows are tested at
/// the largest `n` only. The corrected product is compared with `exp(X_T)`
/// when `T = 1`, where its per-step weight `σ²/(2n)` equals `σ²T/(2n)`.
pub fn price_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    const ID: &str = "price";
    cfg.validate()?;
    let params = cfg.params()?;
    let horizon = cfg.horizon;
    let mode = scheme_mode(cfg);
    let n_max = *cfg.n_ladder.iter().max().expect("validated ladder");
    let mut rows = Vec::new();

    let ref_grid = cfg.grid(cfg.n_ref)?;
    let ref_seed = derive_seed(cfg.master_seed, &[TAG_PRICE_REF, cfg.n_ref as u64]);
    let reference = collect(par_map(cfg.workers, cfg.path_count, |i| {
        let path = reference_path(&params, &ref_grid, &mut PathRng::new(ref_seed, i as u64))?;
        Ok((
            limit_price(&path, &params, None).terminal_log(),
            path.terminal(),
        ))
    })?)?;
    let limit_logs: Vec<f64> = reference.iter().map(|r| r.0).collect();
    let exp_logs: Vec<f64> = reference.iter().map(|r| r.1).collect();
    rows.push(
        ResultRow::info(ID, "limit_log_mean", mean_estimate(&limit_logs).mean)
            .n(cfg.n_ref)
            .t(horizon),
    );

    for &n in &cfg.n_ladder {
        let grid = cfg.grid(n)?;
        let seed = derive_seed(cfg.master_seed, &[TAG_PRICE, n as u64]);
        let logs = collect(par_map(cfg.workers, cfg.path_count, |i| {
            let noise = rademacher_noise(&grid, &mut PathRng::new(seed, i as u64));
            let scheme = additive_scheme_with(&params, &grid, &noise, mode)?;
            Ok((
                product_price(&scheme)?.terminal_log(),
                corrected_product_price(&scheme, &params)?.terminal_log(),
            ))
        })?)?;
        let product: Vec<f64> = logs.iter().map(|l| l.0).collect();
        let corrected: Vec<f64> = logs.iter().map(|l| l.1).collect();
        let allowance = horizon / n as f64 + horizon / cfg.n_ref as f64;

        rows.push(
            ResultRow::info(ID, "product_log_mean", mean_estimate(&product).mean)
                .n(n)
                .t(horizon),
        );
        let mean = mean_difference_test(&product, &limit_logs, MOMENT_K_SE, allowance);
        rows.push(
            ResultRow::from_report(ID, "product_log_mean_error", &mean)
                .n(n)
                .t(horizon),
        );
        let ks = ks_two_sample(&product, &limit_logs, cfg.confidence)?;
        if n == n_max {
            rows.push(
                ResultRow::from_report(ID, "product_ks", &ks)
                    .n(n)
                    .t(horizon),
            );
        } else {
            rows.push(
                ResultRow::info(ID, "product_ks", ks.statistic)
                    .n(n)
                    .t(horizon),
            );
        }
        let corr = mean_difference_test(&corrected, &exp_logs, MOMENT_K_SE, allowance);
        if horizon == 1.0 {
            rows.push(
                ResultRow::from_report(ID, "corrected_log_mean_error", &corr)
                    .n(n)
                    .t(horizon),
            );
        } else {
            rows.push(
                ResultRow::info(ID, "corrected_log_mean_error", corr.statistic)
                    .n(n)
                    .t(horizon),
            );
        }
    }
    Ok(rows)
}

/// Simulates `paths` coupled full and truncated paths at the first `n` and
/// `C` of the ladders. Returns the paths (full, truncated) per index.
pub fn simulate_scheme_pairs(
    cfg: &ExperimentConfig,
    paths: usize,
) -> Result<Vec<(SchemePath, SchemePath)>> {
    cfg.check_basic()?;
    let params = cfg.params()?;
    let n = cfg.n_ladder[0];
    let grid = cfg.grid(n)?;
    let cap = TruncationLevel::new(cfg.c_ladder[0], &params)?;
    let mode = scheme_mode(cfg);
    let seed = derive_seed(cfg.master_seed, &[TAG_SCHEME, n as u64]);
    collect(par_map(cfg.workers, paths, |i| {
        let noise = rademacher_noise(&grid, &mut PathRng::new(seed, i as u64));
        Ok((
            additive_scheme_with(&params, &grid, &noise, mode)?,
            truncated_scheme_with(&params, cap, &grid, &noise, mode)?,
        ))
    })?)
}
