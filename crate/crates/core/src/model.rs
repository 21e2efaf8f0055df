//! CIR model parameters and closed-form analytics.
//!
//! The process is the unit-speed square-root diffusion
//!
//! ```text
//! dX_t = (b - X_t) dt + sigma sqrt(X_t) dW_t,   X_0 = x0 > 0
//! ```
//!
//! Its marginal at `t > 0` is a scaled noncentral chi-square, which gives the
//! closed-form first and second moments used throughout the crate as oracles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unvalidated model coefficients, as read from a config file or the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawParams {
    pub b: f64,
    pub sigma: f64,
    pub x0: f64,
}

/// Validated CIR coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirParams {
    b: f64,
    sigma: f64,
    x0: f64,
    feller_ok: bool,
}

impl CirParams {
    pub fn new(b: f64, sigma: f64, x0: f64) -> Result<Self> {
        validate_params(RawParams { b, sigma, x0 })
    }

    /// Noise-free model (`sigma = 0`), used for the degenerate limits of the
    /// schemes. The Feller condition holds trivially.
    pub fn deterministic(b: f64, x0: f64) -> Result<Self> {
        check_positive("b", b)?;
        check_positive("x0", x0)?;
        Ok(Self {
            b,
            sigma: 0.0,
            x0,
            feller_ok: true,
        })
    }

    /// Same coefficients, different starting point. Used for transition laws.
    pub fn with_x0(&self, x0: f64) -> Result<Self> {
        check_positive("x0", x0)?;
        Ok(Self { x0, ..*self })
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn sigma_sq(&self) -> f64 {
        self.sigma * self.sigma
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    /// `2b >= sigma^2`.
    pub fn feller_ok(&self) -> bool {
        self.feller_ok
    }

    pub fn require_feller(&self) -> Result<()> {
        if self.feller_ok {
            Ok(())
        } else {
            Err(Error::FellerViolated {
                two_b: 2.0 * self.b,
                sigma_sq: self.sigma_sq(),
            })
        }
    }

    pub fn raw(&self) -> RawParams {
        RawParams {
            b: self.b,
            sigma: self.sigma,
            x0: self.x0,
        }
    }
}

fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveParameter { name, value })
    }
}

/// Validates raw coefficients and computes the Feller flag.
pub fn validate_params(raw: RawParams) -> Result<CirParams> {
    check_positive("b", raw.b)?;
    check_positive("sigma", raw.sigma)?;
    check_positive("x0", raw.x0)?;
    Ok(CirParams {
        b: raw.b,
        sigma: raw.sigma,
        x0: raw.x0,
        // A few ulps of slack so that e.g. sigma = sqrt(2b) sits on the boundary.
        feller_ok: raw.sigma * raw.sigma <= 2.0 * raw.b * (1.0 + 4.0 * f64::EPSILON),
    })
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidTime(t))
    }
}

/// `(e^{-t}, 1 - e^{-t})`, the second computed without cancellation.
fn decay(t: f64) -> (f64, f64) {
    (f64::exp(-t), -f64::exp_m1(-t))
}

/// `E X_t = x0 e^{-t} + b (1 - e^{-t})`.
pub fn mean_at(params: &CirParams, t: f64) -> Result<f64> {
    check_time(t)?;
    let (e, om) = decay(t);
    Ok(params.x0 * e + params.b * om)
}

/// `E X_t^2`.
///
/// Evaluated as `x0^2 e^{-2t} + x0 (2b + sigma^2) e^{-t}(1 - e^{-t}) + (b sigma^2/2 + b^2)(1 - e^{-t})^2`,
/// which is the textbook three-term expression regrouped so that no two large
/// terms cancel for small `t`.
pub fn second_moment_at(params: &CirParams, t: f64) -> Result<f64> {
    check_time(t)?;
    let (e, om) = decay(t);
    let (b, x0, s2) = (params.b, params.x0, params.sigma_sq());
    Ok(x0 * x0 * e * e + x0 * (2.0 * b + s2) * e * om + (0.5 * b * s2 + b * b) * om * om)
}

/// `Var X_t = x0 sigma^2 e^{-t}(1 - e^{-t}) + (b sigma^2 / 2)(1 - e^{-t})^2`.
pub fn variance_at(params: &CirParams, t: f64) -> Result<f64> {
    check_time(t)?;
    let (e, om) = decay(t);
    let s2 = params.sigma_sq();
    Ok(params.x0 * s2 * e * om + 0.5 * params.b * s2 * om * om)
}

/// Parameters of `X = scale * chi'^2(df, noncentrality)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoncentralChiSqSpec {
    pub df: f64,
    pub noncentrality: f64,
    pub scale: f64,
}

impl NoncentralChiSqSpec {
    pub fn new(df: f64, noncentrality: f64, scale: f64) -> Result<Self> {
        check_positive("df", df)?;
        check_positive("scale", scale)?;
        if !(noncentrality >= 0.0 && noncentrality.is_finite()) {
            return Err(Error::NonPositiveParameter {
                name: "noncentrality",
                value: noncentrality,
            });
        }
        Ok(Self {
            df,
            noncentrality,
            scale,
        })
    }

    pub fn mean(&self) -> f64 {
        self.scale * (self.df + self.noncentrality)
    }

    pub fn variance(&self) -> f64 {
        self.scale * self.scale * (2.0 * self.df + 4.0 * self.noncentrality)
    }
}

/// Exact law of `X_t` for `t > 0`:
/// `X_t = sigma^2 (1 - e^{-t}) / 4 * chi'^2(4b / sigma^2, 4 x0 e^{-t} / (sigma^2 (1 - e^{-t})))`.
pub fn marginal_law(params: &CirParams, t: f64) -> Result<NoncentralChiSqSpec> {
    check_time(t)?;
    if t == 0.0 {
        return Err(Error::DegenerateTime);
    }
    let s2 = params.sigma_sq();
    let (e, om) = decay(t);
    let scale = s2 * om / 4.0;
    NoncentralChiSqSpec::new(4.0 * params.b / s2, params.x0 * e / scale, scale)
}

/// Upper bound on `E X_t^2` over `[0, horizon]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentBounds {
    pub bound: f64,
    pub horizon: f64,
}

const SUP_GRID: usize = 4096;
const SUP_MARGIN: f64 = 1e-9;

/// `B >= sup_{t in [0, T]} E X_t^2`: grid maximum, polished by golden-section
/// search on the bracketing cells, inflated by a relative margin of `1e-9`.
pub fn second_moment_sup(params: &CirParams, horizon: f64) -> Result<MomentBounds> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidTime(horizon));
    }
    let m2 = |t: f64| second_moment_at(params, t).unwrap_or(f64::NAN);
    let h = horizon / SUP_GRID as f64;
    let (mut best_k, mut best) = (0usize, m2(0.0));
    for k in 1..=SUP_GRID {
        let v = m2(if k == SUP_GRID { horizon } else { k as f64 * h });
        if v > best {
            best = v;
            best_k = k;
        }
    }
    if best_k > 0 && best_k < SUP_GRID {
        best = best.max(golden_max(
            &m2,
            (best_k - 1) as f64 * h,
            (best_k + 1) as f64 * h,
        ));
    }
    Ok(MomentBounds {
        bound: best * (1.0 + SUP_MARGIN),
        horizon,
    })
}

fn golden_max(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..100 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
        if hi - lo < 1e-14 * hi.max(1.0) {
            break;
        }
    }
    f1.max(f2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(b: f64, sigma: f64, x0: f64) -> CirParams {
        CirParams::new(b, sigma, x0).unwrap()
    }

    #[test]
    fn feller_flag() {
        assert!(p(1.0, 1.2, 1.0).feller_ok());
        assert!(p(1.0, 2f64.sqrt(), 1.0).feller_ok());
        assert!(!p(1.0, 1.5, 1.0).feller_ok());
    }

    #[test]
    fn rejects_nonpositive() {
        let err = validate_params(RawParams {
            b: 0.0,
            sigma: 1.0,
            x0: 1.0,
        })
        .unwrap_err();
        assert_eq!(
            err,
            Error::NonPositiveParameter {
                name: "b",
                value: 0.0
            }
        );
        assert!(matches!(
            CirParams::new(1.0, -1.0, 1.0),
            Err(Error::NonPositiveParameter { name: "sigma", .. })
        ));
        assert!(matches!(
            CirParams::new(1.0, 1.0, f64::NAN),
            Err(Error::NonPositiveParameter { name: "x0", .. })
        ));
    }

    #[test]
    fn mean_examples() {
        let q = p(2.0, 1.0, 1.0);
        assert_eq!(mean_at(&q, 0.0).unwrap(), 1.0);
        assert!((mean_at(&q, 2f64.ln()).unwrap() - 1.5).abs() < 1e-15);
        assert!((mean_at(&q, 50.0).unwrap() - 2.0).abs() < 1e-12);
        assert!(mean_at(&q, -1.0).is_err());
    }

    #[test]
    fn second_moment_examples() {
        let q = p(2.0, 1.0, 1.0);
        assert_eq!(second_moment_at(&q, 0.0).unwrap(), 1.0);
        assert_eq!(variance_at(&q, 0.0).unwrap(), 0.0);
        // 50-digit evaluation of the printed three-term formula at b = sigma = x0 = t = 1.
        let frozen = 1.432_332_358_381_693_7;
        let v = second_moment_at(&p(1.0, 1.0, 1.0), 1.0).unwrap();
        assert!((v - frozen).abs() < 1e-15, "{v}");
    }

    #[test]
    fn marginal_examples() {
        let q = p(1.0, 2f64.sqrt(), 0.7);
        for t in [0.01, 0.5, 3.0] {
            assert!((marginal_law(&q, t).unwrap().df - 2.0).abs() < 1e-15);
        }
        assert!(marginal_law(&q, 60.0).unwrap().noncentrality < 1e-20);
        assert_eq!(marginal_law(&q, 0.0), Err(Error::DegenerateTime));
    }

    #[test]
    fn moment_sup_examples() {
        let q = p(2.0, 1.0, 0.5);
        let sup = second_moment_sup(&q, 1.5).unwrap();
        let end = second_moment_at(&q, 1.5).unwrap();
        assert!(sup.bound >= end && sup.bound <= end * (1.0 + 2e-9));
        assert!(sup.bound >= second_moment_at(&q, 0.75).unwrap());

        let flat = p(1.5, 1e-6, 1.5);
        let sup = second_moment_sup(&flat, 2.0).unwrap();
        assert!((sup.bound - 2.25).abs() < 1e-8);
    }

    #[test]
    fn moment_sup_interior_maximum() {
        // x0 large: E X_t^2 first rises then decays towards the stationary level.
        let q = p(0.2, 0.6, 1.0);
        let horizon = 5.0;
        let sup = second_moment_sup(&q, horizon).unwrap();
        let brute = (0..=200_000)
            .map(|k| second_moment_at(&q, horizon * k as f64 / 200_000.0).unwrap())
            .fold(f64::MIN, f64::max);
        assert!(sup.bound >= brute);
        assert!(sup.bound <= brute * (1.0 + 1e-8));
    }

    proptest! {
        #[test]
        fn variance_nonnegative(b in 0.05f64..5.0, sigma in 0.05f64..3.0, x0 in 0.01f64..10.0, t in 0.0f64..20.0) {
            let q = p(b, sigma, x0);
            let m = mean_at(&q, t).unwrap();
            let m2 = second_moment_at(&q, t).unwrap();
            prop_assert!(m2 - m * m >= -1e-12 * m2);
            let v = variance_at(&q, t).unwrap();
            prop_assert!((m2 - m * m - v).abs() <= 1e-10 * m2.max(1.0));
        }

        #[test]
        fn chi_square_identities(b in 0.05f64..5.0, sigma in 0.05f64..3.0, x0 in 0.01f64..10.0, t in 1e-4f64..20.0) {
            let q = p(b, sigma, x0);
            let law = marginal_law(&q, t).unwrap();
            let m = mean_at(&q, t).unwrap();
            let v = variance_at(&q, t).unwrap();
            prop_assert!((law.mean() - m).abs() <= 1e-10 * m);
            prop_assert!((law.variance() - v).abs() <= 1e-10 * v);
        }
    }
}
