//! Rademacher Euler schemes for the full and the truncated CIR process.
//!
//! ```text
//! X_k       = X_{k-1} + (b - X_{k-1}) T/n       + σ q_k sqrt(X_{k-1})
//! X_k^{(C)} = X_{k-1} + (b - X_{k-1} ∧ C) T/n   + σ q_k sqrt(X_{k-1} ∧ C)
//! ```
//!
//! with `q_k = ±sqrt(T/n)` iid fair signs. Both recursions stay strictly
//! positive when `2b >= σ²` and `n > 2T`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::model::CirParams;
use crate::rng::PathRng;
use crate::truncated::TruncationLevel;

/// The driving signs `q_k ∈ {+sqrt(T/n), -sqrt(T/n)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSequence {
    grid: GridSpec,
    q: Vec<f64>,
}

impl NoiseSequence {
    pub fn from_signs(grid: GridSpec, up: &[bool]) -> Result<Self> {
        if up.len() != grid.steps() {
            return Err(Error::GridMismatch(format!(
                "{} signs for {} steps",
                up.len(),
                grid.steps()
            )));
        }
        let mag = grid.dt().sqrt();
        Ok(Self {
            grid,
            q: up.iter().map(|&u| if u { mag } else { -mag }).collect(),
        })
    }

    /// Accepts only values equal to `±sqrt(T/n)` bit for bit.
    pub fn from_values(grid: GridSpec, q: Vec<f64>) -> Result<Self> {
        if q.len() != grid.steps() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} steps",
                q.len(),
                grid.steps()
            )));
        }
        let mag = grid.dt().sqrt();
        if let Some((index, &value)) = q.iter().enumerate().find(|(_, v)| v.abs() != mag) {
            return Err(Error::InvalidNoise { index, value });
        }
        Ok(Self { grid, q })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.q
    }
}

/// `n` iid fair signs scaled by `sqrt(T/n)`.
pub fn rademacher_noise(grid: &GridSpec, rng: &mut PathRng) -> NoiseSequence {
    let mag = grid.dt().sqrt();
    NoiseSequence {
        grid: *grid,
        q: (0..grid.steps())
            .map(|_| if rng.coin() { mag } else { -mag })
            .collect(),
    }
}

/// Whether scheme construction enforces the positivity precondition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SchemeMode {
    #[default]
    Checked,
    /// Runs for any `n`; a negative state under the square root is reported
    /// as [`Error::NegativeStateEncountered`] instead of producing NaN.
    Unchecked,
}

/// Discrete states `X_0..X_n` and realized increments `Q_1..Q_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemePath {
    pub values: Vec<f64>,
    /// `increments[k - 1] = values[k] - values[k - 1]`.
    pub increments: Vec<f64>,
    pub grid: GridSpec,
    pub truncation: Option<TruncationLevel>,
}

impl SchemePath {
    pub fn x0(&self) -> f64 {
        self.values[0]
    }

    pub fn terminal(&self) -> f64 {
        self.values[self.grid.steps()]
    }

    pub fn cap(&self) -> f64 {
        self.truncation.map_or(f64::INFINITY, |c| c.value())
    }

    pub fn max_abs_increment(&self) -> f64 {
        self.increments.iter().fold(0.0, |m, q| m.max(q.abs()))
    }

    pub fn min_state(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

fn run_scheme(
    params: &CirParams,
    grid: &GridSpec,
    noise: &NoiseSequence,
    cap: f64,
    mode: SchemeMode,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if noise.grid != *grid {
        return Err(Error::GridMismatch(
            "noise was generated for a different grid".into(),
        ));
    }
    if mode == SchemeMode::Checked {
        let pre = positivity_precondition(params, grid);
        if !pre.ok {
            return Err(Error::PositivityNotGuaranteed {
                discriminant: pre.discriminant,
            });
        }
    }
    let h = grid.dt();
    let (b, sigma) = (params.b(), params.sigma());
    let mut values = Vec::with_capacity(grid.steps() + 1);
    let mut increments = Vec::with_capacity(grid.steps());
    let mut x = params.x0();
    values.push(x);
    for (k, &q) in noise.q.iter().enumerate() {
        if !(x > 0.0) {
            return Err(Error::NegativeStateEncountered {
                step: k + 1,
                value: x,
            });
        }
        let capped = x.min(cap);
        let next = x + (b - capped) * h + sigma * q * capped.sqrt();
        increments.push(next - x);
        values.push(next);
        x = next;
    }
    if !(x > 0.0) {
        return Err(Error::NegativeStateEncountered {
            step: grid.steps(),
            value: x,
        });
    }
    Ok((values, increments))
}

/// Full scheme `X^(n)`.
pub fn additive_scheme(
    params: &CirParams,
    grid: &GridSpec,
    noise: &NoiseSequence,
) -> Result<SchemePath> {
    additive_scheme_with(params, grid, noise, SchemeMode::Checked)
}

pub fn additive_scheme_with(
    params: &CirParams,
    grid: &GridSpec,
    noise: &NoiseSequence,
    mode: SchemeMode,
) -> Result<SchemePath> {
    let (values, increments) = run_scheme(params, grid, noise, f64::INFINITY, mode)?;
    Ok(SchemePath {
        values,
        increments,
        grid: *grid,
        truncation: None,
    })
}

/// Truncated scheme `X^(n,C)`. An infinite cap reproduces [`additive_scheme`]
/// bit for bit.
pub fn truncated_scheme(
    params: &CirParams,
    cap: TruncationLevel,
    grid: &GridSpec,
    noise: &NoiseSequence,
) -> Result<SchemePath> {
    truncated_scheme_with(params, cap, grid, noise, SchemeMode::Checked)
}

pub fn truncated_scheme_with(
    params: &CirParams,
    cap: TruncationLevel,
    grid: &GridSpec,
    noise: &NoiseSequence,
    mode: SchemeMode,
) -> Result<SchemePath> {
    let (values, increments) = run_scheme(params, grid, noise, cap.value(), mode)?;
    Ok(SchemePath {
        values,
        increments,
        grid: *grid,
        truncation: Some(cap),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PositivityCheck {
    pub ok: bool,
    /// `σ²T/n - (4bT/n)(1 - T/n)` of the one-step quadratic in `sqrt(X)`.
    pub discriminant: f64,
}

/// `ok = (σ² <= 2b && n > 2T)`; in that case the discriminant is negative.
pub fn positivity_precondition(params: &CirParams, grid: &GridSpec) -> PositivityCheck {
    let h = grid.dt();
    let discriminant = params.sigma_sq() * h - 4.0 * params.b() * h * (1.0 - h);
    PositivityCheck {
        ok: params.feller_ok() && grid.positivity_ok(),
        discriminant,
    }
}

/// Explicit constants from the a-priori estimates for the schemes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoreticalBounds {
    /// `((σ² + 2b + sqrt(σ⁴ + 4bσ² + 8b²)) / (3/2)) ∨ x0`, bound on `E X_k`.
    pub gamma: f64,
    /// `(b + CT)/n + σ sqrt(TC/n)`, bound on `|Q_k^(n,C)|`.
    pub increment_bound: f64,
    /// `2C^{-2}(x0 + bT)² + 8σ²C^{-2}γT`, bound on `P(X^(n) ≠ X^(n,C))`.
    pub disagreement_bound: f64,
    /// `(|b| + C)T/n`.
    pub drift_residual_bound: f64,
    /// `σ²CT/n`.
    pub centered_quad_residual_bound: f64,
    /// `(|b| + C)²T·T/n + σ²CT/n`.
    pub quad_residual_bound: f64,
}

impl TheoreticalBounds {
    /// `C_2` with `sup_k |Q_k| <= C_2 / sqrt(n)`.
    pub fn c2(&self, grid: &GridSpec) -> f64 {
        self.increment_bound * (grid.steps() as f64).sqrt()
    }
}

pub fn theoretical_bounds(
    params: &CirParams,
    cap: TruncationLevel,
    grid: &GridSpec,
) -> TheoreticalBounds {
    let (b, s2, x0) = (params.b(), params.sigma_sq(), params.x0());
    let c = cap.value();
    let t = grid.horizon();
    let n = grid.steps() as f64;
    // Denominator 3/2 kept as printed; it is only ever used as an upper bound.
    let gamma = ((s2 + 2.0 * b + (s2 * s2 + 4.0 * b * s2 + 8.0 * b * b).sqrt()) / 1.5).max(x0);
    TheoreticalBounds {
        gamma,
        increment_bound: (b + c * t) / n + params.sigma() * (t * c / n).sqrt(),
        disagreement_bound: 2.0 * (x0 + b * t).powi(2) / (c * c) + 8.0 * s2 * gamma * t / (c * c),
        drift_residual_bound: (b.abs() + c) * t / n,
        centered_quad_residual_bound: s2 * c * t / n,
        quad_residual_bound: (b.abs() + c).powi(2) * t * t / n + s2 * c * t / n,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Agreement {
    pub agree: bool,
    pub first_divergence: Option<usize>,
}

/// Exact elementwise comparison of two paths driven by the same noise.
pub fn agreement_check(full: &SchemePath, truncated: &SchemePath) -> Result<Agreement> {
    if full.grid != truncated.grid || full.values.len() != truncated.values.len() {
        return Err(Error::GridMismatch("paths live on different grids".into()));
    }
    let first = full
        .values
        .iter()
        .zip(&truncated.values)
        .position(|(a, b)| a.to_bits() != b.to_bits());
    Ok(Agreement {
        agree: first.is_none(),
        first_divergence: first,
    })
}

/// Piecewise-constant embedding `X_t = X_{⌊nt/T⌋}` on `[0, T]`.
#[derive(Debug, Clone, Copy)]
pub struct StepPath<'a> {
    pub scheme: &'a SchemePath,
}

impl<'a> StepPath<'a> {
    pub fn new(scheme: &'a SchemePath) -> Self {
        Self { scheme }
    }

    /// Value on `[kT/n, (k+1)T/n)`; `t = T` maps to `X_n`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        step_eval(self, t)
    }
}

pub fn step_eval(step: &StepPath<'_>, t: f64) -> Result<f64> {
    let k = step.scheme.grid.index_at(t)?;
    Ok(step.scheme.values[k])
}
