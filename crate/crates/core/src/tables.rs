//! Closed-form tables emitted as result rows.

use crate::error::Result;
use crate::grid::GridSpec;
use crate::lab::{condition_residuals, conditions_ii_iii_sums, residual_time_grid};
use crate::model::{marginal_law, mean_at, second_moment_at, variance_at, CirParams};
use crate::results::ResultRow;
use crate::schemes::{positivity_precondition, theoretical_bounds, SchemePath};
use crate::stats::{noncentral_chisq_cdf, noncentral_chisq_quantile};
use crate::truncated::TruncationLevel;

/// Mean, second moment and variance of `X_t` at each time.
pub fn moments_table(params: &CirParams, times: &[f64]) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::with_capacity(3 * times.len());
    for &t in times {
        rows.push(ResultRow::info("moments", "mean", mean_at(params, t)?).t(t));
        rows.push(ResultRow::info("moments", "second_moment", second_moment_at(params, t)?).t(t));
        rows.push(ResultRow::info("moments", "variance", variance_at(params, t)?).t(t));
    }
    Ok(rows)
}

/// Law parameters of `X_t`, its CDF at each `x` and quantiles at each `p`.
pub fn marginal_table(
    params: &CirParams,
    t: f64,
    xs: &[f64],
    ps: &[f64],
) -> Result<Vec<ResultRow>> {
    let spec = marginal_law(params, t)?;
    let mut rows = vec![
        ResultRow::info("marginal", "df", spec.df).t(t),
        ResultRow::info("marginal", "noncentrality", spec.noncentrality).t(t),
        ResultRow::info("marginal", "scale", spec.scale).t(t),
        ResultRow::info("marginal", "mean", spec.mean()).t(t),
        ResultRow::info("marginal", "variance", spec.variance()).t(t),
    ];
    for &x in xs {
        let mut row = ResultRow::info("marginal", "cdf", noncentral_chisq_cdf(&spec, x)?).t(t);
        row.bound = Some(x);
        rows.push(row);
    }
    for &p in ps {
        let mut row =
            ResultRow::info("marginal", "quantile", noncentral_chisq_quantile(&spec, p)?).t(t);
        row.bound = Some(p);
        rows.push(row);
    }
    Ok(rows)
}

/// The explicit constants of the a-priori estimates and the positivity
/// discriminant.
pub fn bounds_table(params: &CirParams, cap: TruncationLevel, grid: &GridSpec) -> Vec<ResultRow> {
    let b = theoretical_bounds(params, cap, grid);
    let pos = positivity_precondition(params, grid);
    let (n, c) = (grid.steps(), cap.value());
    let row = |metric: &str, value: f64| {
        ResultRow::info("bounds", metric, value)
            .n(n)
            .c(c)
            .t(grid.horizon())
    };
    vec![
        row("gamma", b.gamma),
        row("increment_bound", b.increment_bound),
        row("c2", b.c2(grid)),
        row("disagreement_bound", b.disagreement_bound),
        row("drift_residual_bound", b.drift_residual_bound),
        row(
            "centered_quad_residual_bound",
            b.centered_quad_residual_bound,
        ),
        row("quad_residual_bound", b.quad_residual_bound),
        row("discriminant", pos.discriminant),
        row("positivity_ok", if pos.ok { 1.0 } else { 0.0 }),
    ]
}

/// Dumps coupled full/truncated paths (one row per state) followed by the
/// condition residuals of each truncated path.
pub fn scheme_table(
    pairs: &[(SchemePath, SchemePath)],
    params: &CirParams,
    cap: TruncationLevel,
) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    for (i, (full, trunc)) in pairs.iter().enumerate() {
        let grid = full.grid;
        let (n, c) = (grid.steps(), cap.value());
        for k in 0..=n {
            let t = grid.time(k);
            rows.push(
                ResultRow::info("scheme", &format!("x_full_p{i}"), full.values[k])
                    .n(n)
                    .t(t),
            );
            rows.push(
                ResultRow::info("scheme", &format!("x_trunc_p{i}"), trunc.values[k])
                    .n(n)
                    .c(c)
                    .t(t),
            );
        }
        let r = condition_residuals(trunc, params, cap, &residual_time_grid(&grid))?;
        let b = r.bounds;
        let check = |metric: String, value: f64, bound: f64| {
            ResultRow::checked("scheme", &metric, value, bound + crate::lab::BOUND_SLACK)
                .n(n)
                .c(c)
        };
        rows.push(check(
            format!("max_increment_p{i}"),
            r.max_increment,
            b.increment_bound,
        ));
        rows.push(check(
            format!("drift_residual_p{i}"),
            r.drift_residual_sup,
            b.drift_residual_bound,
        ));
        rows.push(check(
            format!("quad_residual_centered_p{i}"),
            r.quad_residual_sup_centered,
            b.centered_quad_residual_bound,
        ));
        rows.push(check(
            format!("quad_residual_uncentered_p{i}"),
            r.quad_residual_sup_uncentered,
            b.quad_residual_bound,
        ));
        let sums = conditions_ii_iii_sums(trunc, params, cap);
        rows.push(check(
            format!("sum_sq_p{i}"),
            sums.sum_sq,
            sums.sum_sq_bound,
        ));
        rows.push(check(
            format!("sum_abs_mean_p{i}"),
            sums.sum_abs_mean,
            sums.sum_abs_mean_bound,
        ));
    }
    Ok(rows)
}
