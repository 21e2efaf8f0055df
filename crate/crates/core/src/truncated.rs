//! Truncated CIR coefficients, scale function and exit probabilities.
//!
//! The truncated process solves
//!
//! ```text
//! dX^C = (b - X^C ∧ C) dt + sigma sqrt((X^C ∨ 0) ∧ C) dW
//! ```
//!
//! Its scale function is `V(x) = ∫_1^x s(y) dy` with density
//! `s(y) = y^{-2b/σ²} exp(2(y-1)/σ²)` for `y <= C`, continued exponentially
//! past the cap. `V(0+) = -inf` whenever `2b >= σ²`, so the process never
//! reaches zero.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::CirParams;
use crate::quadrature::{integrate, Tolerance};

/// Cap `C` on the state in the drift and diffusion coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationLevel(f64);

impl TruncationLevel {
    /// Validated level: `C > max(b, 1)`.
    pub fn new(level: f64, params: &CirParams) -> Result<Self> {
        let required = params.b().max(1.0);
        if level > required && !level.is_nan() {
            Ok(Self(level))
        } else {
            Err(Error::TruncationTooLow { level, required })
        }
    }

    /// Any positive level, including ones that violate `C > max(b, 1)`.
    /// Experiments use this to probe what happens when the cap binds early.
    pub fn unchecked(level: f64) -> Result<Self> {
        if level > 0.0 && !level.is_nan() {
            Ok(Self(level))
        } else {
            Err(Error::NonPositiveParameter {
                name: "C",
                value: level,
            })
        }
    }

    /// `C = +inf`: the truncated coefficients reduce to the plain CIR ones.
    pub fn infinite() -> Self {
        Self(f64::INFINITY)
    }

    pub fn value(&self) -> f64 {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.is_finite()
    }

    fn require_finite_valid(&self, params: &CirParams) -> Result<()> {
        let required = params.b().max(1.0);
        if self.0.is_finite() && self.0 > required {
            Ok(())
        } else {
            Err(Error::TruncationTooLow {
                level: self.0,
                required,
            })
        }
    }
}

/// `b - min(x, C)`.
pub fn truncated_drift(x: f64, params: &CirParams, cap: TruncationLevel) -> f64 {
    params.b() - x.min(cap.0)
}

/// `sigma * sqrt(clamp(x, 0, C))`.
pub fn truncated_diffusion(x: f64, params: &CirParams, cap: TruncationLevel) -> f64 {
    params.sigma() * x.max(0.0).min(cap.0).sqrt()
}

fn log_scale_density(y: f64, params: &CirParams, cap: f64) -> f64 {
    let s2 = params.sigma_sq();
    let p = 2.0 * params.b() / s2;
    if y <= cap {
        -p * y.ln() + 2.0 * (y - 1.0) / s2
    } else {
        -p * cap.ln() + 2.0 * (cap - 1.0) / s2 - 2.0 * (params.b() - cap) * (y - cap) / (s2 * cap)
    }
}

/// Derivative of the scale function, `V'(y)`.
pub fn scale_density(y: f64, params: &CirParams, cap: TruncationLevel) -> f64 {
    log_scale_density(y, params, cap.0).exp()
}

/// How a scale-function value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleMethod {
    Quadrature,
    ClosedFormTail,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaleFunctionEval {
    pub x: f64,
    pub value: f64,
    pub method: ScaleMethod,
}

/// Smallest argument accepted by [`scale_function`].
pub const SCALE_DOMAIN_FLOOR: f64 = 1e-12;

const SCALE_TOL: Tolerance = Tolerance {
    relative: 1e-13,
    absolute: 0.0,
    max_segments: 4000,
};

/// `∫_lo^hi s(y) dy` for `0 < lo <= hi <= C`, integrated in `u = ln y`
/// where the integrand `exp(log s(e^u) + u)` is smooth.
fn integrate_below_cap(lo: f64, hi: f64, params: &CirParams, cap: f64) -> Result<f64> {
    if lo == hi {
        return Ok(0.0);
    }
    let f = |u: f64| (log_scale_density(u.exp(), params, cap) + u).exp();
    integrate(&f, lo.ln(), hi.ln(), SCALE_TOL)
}

/// `∫_C^x s(y) dy` for `x >= C`, in closed form.
fn tail_above_cap(x: f64, params: &CirParams, cap: f64) -> f64 {
    let s2 = params.sigma_sq();
    let p = 2.0 * params.b() / s2;
    let rate = 2.0 * (cap - params.b()) / (s2 * cap);
    let prefactor =
        ((1.0 - p) * cap.ln() + 2.0 * (cap - 1.0) / s2).exp() * s2 / (2.0 * (cap - params.b()));
    prefactor * (rate * (x - cap)).exp_m1()
}

/// `V(hi) - V(lo)` for `0 < lo <= hi`.
fn scale_increment(lo: f64, hi: f64, params: &CirParams, cap: f64) -> Result<f64> {
    let mut total = 0.0;
    if lo < cap {
        total += integrate_below_cap(lo, hi.min(cap), params, cap)?;
    }
    if hi > cap {
        let from = lo.max(cap);
        total += tail_above_cap(hi, params, cap) - tail_above_cap(from, params, cap);
    }
    Ok(total)
}

/// `V(x) = ∫_1^x s(y) dy`.
///
/// Quadrature for `x <= C`; for `x > C`,
/// `V(x) = C_1 + C^{1-2b/σ²} σ²/(2(C-b)) e^{2(C-1)/σ²} (e^{2(C-b)(x-C)/(σ²C)} - 1)`
/// with `C_1 = V(C)`.
pub fn scale_function(
    x: f64,
    params: &CirParams,
    cap: TruncationLevel,
) -> Result<ScaleFunctionEval> {
    cap.require_finite_valid(params)?;
    if !(x > SCALE_DOMAIN_FLOOR) || !x.is_finite() {
        return Err(Error::DomainTooSmall(x));
    }
    let c = cap.0;
    if x <= c {
        let value = if x >= 1.0 {
            integrate_below_cap(1.0, x, params, c)?
        } else {
            -integrate_below_cap(x, 1.0, params, c)?
        };
        Ok(ScaleFunctionEval {
            x,
            value,
            method: ScaleMethod::Quadrature,
        })
    } else {
        let c1 = integrate_below_cap(1.0, c, params, c)?;
        Ok(ScaleFunctionEval {
            x,
            value: c1 + tail_above_cap(x, params, c),
            method: ScaleMethod::ClosedFormTail,
        })
    }
}

/// Probabilities of leaving `(alpha, beta)` through either end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HittingProbabilities {
    pub p_alpha_first: f64,
    pub p_beta_first: f64,
}

/// `P(τ_α < τ_β) = (V(β) - V(x0)) / (V(β) - V(α))` for the truncated process
/// started at `x0`.
///
/// The two differences are integrated directly instead of subtracting
/// separately computed `V` values, so the result stays accurate when `alpha`
/// or `beta` sits right next to `x0`.
pub fn hitting_probability(
    params: &CirParams,
    cap: TruncationLevel,
    alpha: f64,
    beta: f64,
) -> Result<HittingProbabilities> {
    cap.require_finite_valid(params)?;
    let x0 = params.x0();
    if !(alpha > 0.0 && alpha < x0 && x0 < beta && beta.is_finite()) {
        return Err(Error::OrderingViolation { alpha, x0, beta });
    }
    if alpha <= SCALE_DOMAIN_FLOOR {
        return Err(Error::DomainTooSmall(alpha));
    }
    let lower = scale_increment(alpha, x0, params, cap.0)?;
    let upper = scale_increment(x0, beta, params, cap.0)?;
    let total = lower + upper;
    Ok(HittingProbabilities {
        p_alpha_first: (upper / total).clamp(0.0, 1.0),
        p_beta_first: (lower / total).clamp(0.0, 1.0),
    })
}
