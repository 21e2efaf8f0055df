//! Distributional oracles: the noncentral chi-square CDF, Kolmogorov–Smirnov
//! statistics with DKW thresholds, and standard-error based moment tests.

use serde::Serialize;
use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::error::{Error, Result};
use crate::model::NoncentralChiSqSpec;

/// Poisson mass below which series terms are dropped.
const SERIES_TAIL: f64 = 1e-14;
const SERIES_MAX_TERMS: usize = 200_000;

/// `P(scale * chi'^2(df, λ) <= x)` as the Poisson-weighted sum
/// `Σ_j Pois(j; λ/2) P(df/2 + j, x / (2 scale))` of regularized lower
/// incomplete gamma functions.
///
/// Summation starts at the Poisson mode and walks outwards until the
/// remaining Poisson mass is below `1e-14`.
pub fn noncentral_chisq_cdf(spec: &NoncentralChiSqSpec, x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::InvalidTime(x));
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    if x == f64::INFINITY {
        return Ok(1.0);
    }
    let half_x = 0.5 * x / spec.scale;
    let half_df = 0.5 * spec.df;
    let mu = 0.5 * spec.noncentrality;
    if mu == 0.0 {
        return Ok(gamma_lr(half_df, half_x));
    }
    let log_weight = |j: usize| -mu + j as f64 * mu.ln() - ln_gamma(j as f64 + 1.0);
    let mode = mu.floor() as usize;

    let mut mass = 0.0;
    let mut total = 0.0;
    let mut terms = 0;
    // downwards from the mode, inclusive
    let mut j = mode;
    loop {
        let w = log_weight(j).exp();
        mass += w;
        total += w * gamma_lr(half_df + j as f64, half_x);
        terms += 1;
        if j == 0 || (w < SERIES_TAIL * 1e-3 && j < mode) {
            break;
        }
        j -= 1;
    }
    // upwards
    let mut j = mode + 1;
    loop {
        let w = log_weight(j).exp();
        mass += w;
        let p = gamma_lr(half_df + j as f64, half_x);
        total += w * p;
        terms += 1;
        // P(a, x) decreases in a, so the rest of the series is below p * (1 - mass).
        if (1.0 - mass) * p < SERIES_TAIL || (w < SERIES_TAIL * 1e-3 && 1.0 - mass < SERIES_TAIL) {
            break;
        }
        if terms > SERIES_MAX_TERMS {
            return Err(Error::SeriesNotConverged {
                df: spec.df,
                noncentrality: spec.noncentrality,
            });
        }
        j += 1;
    }
    if !total.is_finite() {
        return Err(Error::SeriesNotConverged {
            df: spec.df,
            noncentrality: spec.noncentrality,
        });
    }
    Ok(total.clamp(0.0, 1.0))
}

/// Inverse of [`noncentral_chisq_cdf`] by bracketing and bisection.
pub fn noncentral_chisq_quantile(spec: &NoncentralChiSqSpec, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::ConfigInvalid(format!(
            "quantile level {p} must lie in (0, 1)"
        )));
    }
    let (mut lo, mut hi) = (0.0, spec.mean().max(spec.scale));
    while noncentral_chisq_cdf(spec, hi)? < p {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if noncentral_chisq_cdf(spec, mid)? < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Consistent,
    Rejected,
}

impl Decision {
    pub fn from_bound(statistic: f64, threshold: f64) -> Self {
        if statistic <= threshold {
            Decision::Consistent
        } else {
            Decision::Rejected
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StatReport {
    pub sample_size: usize,
    pub statistic: f64,
    pub threshold: f64,
    pub decision: Decision,
    pub standard_error: Option<f64>,
}

impl StatReport {
    pub fn new(
        sample_size: usize,
        statistic: f64,
        threshold: f64,
        standard_error: Option<f64>,
    ) -> Self {
        Self {
            sample_size,
            statistic,
            threshold,
            decision: Decision::from_bound(statistic, threshold),
            standard_error,
        }
    }

    pub fn consistent(&self) -> bool {
        self.decision == Decision::Consistent
    }
}

pub const DEFAULT_CONFIDENCE: f64 = 0.999;

/// DKW radius `sqrt(ln(2/δ) / (2n))` with `δ = 1 - confidence`.
pub fn dkw_epsilon(n: usize, confidence: f64) -> f64 {
    let delta = 1.0 - confidence;
    ((2.0 / delta).ln() / (2.0 * n as f64)).sqrt()
}

fn sorted(sample: &[f64]) -> Vec<f64> {
    let mut v = sample.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    v
}

/// Exact one-sample statistic `D_n = sup_x |F_n(x) - F(x)|` for continuous `F`.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let xs = sorted(sample);
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = cdf(x);
        d.max((i + 1) as f64 / n - f).max(f - i as f64 / n)
    })
}

/// One-sample KS test with the DKW threshold at `confidence`.
pub fn ks_test(sample: &[f64], cdf: impl Fn(f64) -> f64, confidence: f64) -> Result<StatReport> {
    if sample.is_empty() {
        return Err(Error::ConfigInvalid(
            "KS test needs a nonempty sample".into(),
        ));
    }
    Ok(StatReport::new(
        sample.len(),
        ks_statistic(sample, cdf),
        dkw_epsilon(sample.len(), confidence),
        None,
    ))
}

/// `sup_x |F_a(x) - F_b(x)|`, ties handled exactly.
pub fn ks_two_sample_statistic(a: &[f64], b: &[f64]) -> f64 {
    let (xs, ys) = (sorted(a), sorted(b));
    let (na, nb) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < xs.len() && j < ys.len() {
        let v = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= v {
            i += 1;
        }
        while j < ys.len() && ys[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Two-sample KS test. Threshold: the sum of the two DKW radii, each at
/// level `δ/2`, which bounds `D` by the triangle inequality.
pub fn ks_two_sample(a: &[f64], b: &[f64], confidence: f64) -> Result<StatReport> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::ConfigInvalid(
            "KS test needs nonempty samples".into(),
        ));
    }
    let half = 1.0 - 0.5 * (1.0 - confidence);
    Ok(StatReport::new(
        a.len() + b.len(),
        ks_two_sample_statistic(a, b),
        dkw_epsilon(a.len(), half) + dkw_epsilon(b.len(), half),
        None,
    ))
}

/// Sample mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub n: usize,
    pub mean: f64,
    pub standard_error: f64,
}

pub fn mean_estimate(sample: &[f64]) -> MeanEstimate {
    let n = sample.len();
    let mean = sample.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        sample.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    MeanEstimate {
        n,
        mean,
        standard_error: (var / n as f64).sqrt(),
    }
}

/// `|mean - target| <= k SE + allowance`.
pub fn mean_test(sample: &[f64], target: f64, k_se: f64, allowance: f64) -> StatReport {
    let est = mean_estimate(sample);
    StatReport::new(
        est.n,
        (est.mean - target).abs(),
        k_se * est.standard_error + allowance,
        Some(est.standard_error),
    )
}

/// `|mean_a - mean_b| <= k sqrt(SE_a² + SE_b²) + allowance`.
pub fn mean_difference_test(a: &[f64], b: &[f64], k_se: f64, allowance: f64) -> StatReport {
    let (ea, eb) = (mean_estimate(a), mean_estimate(b));
    let se = ea.standard_error.hypot(eb.standard_error);
    StatReport::new(
        ea.n + eb.n,
        (ea.mean - eb.mean).abs(),
        k_se * se + allowance,
        Some(se),
    )
}
