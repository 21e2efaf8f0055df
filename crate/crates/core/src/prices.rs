//! Multiplicative price processes built on the schemes and on continuous paths.
//!
//! Prelimit:  `S^n_t = e^{x0} ∏_{k <= ⌊tn/T⌋} (1 + Q_k)` and the corrected
//! product with an extra `exp(σ² X_k / (2n))` per factor.
//! Limit:     `S_t = exp(X_t - σ²/2 ∫_0^t X ds)` (or `X ∧ C` in the integral)
//! and `exp(X_t)`.
//!
//! Paths are stored as logarithms.

use serde::Serialize;

use crate::engines::{cumulative_integral_with, ContinuousPath};
use crate::error::{Error, Result};
use crate::model::CirParams;
use crate::schemes::SchemePath;
use crate::truncated::TruncationLevel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PriceKind {
    ProductTrunc,
    ProductFull,
    ProductCorrected,
    LimitTrunc,
    LimitFull,
    Exponential,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PricePath {
    pub times: Vec<f64>,
    pub log_values: Vec<f64>,
    pub kind: PriceKind,
}

impl PricePath {
    pub fn values(&self) -> Vec<f64> {
        self.log_values.iter().map(|l| l.exp()).collect()
    }

    pub fn terminal_log(&self) -> f64 {
        *self.log_values.last().expect("nonempty price path")
    }
}

fn is_truncated(scheme: &SchemePath) -> bool {
    scheme.truncation.is_some_and(|c| c.is_finite())
}

fn log_product(scheme: &SchemePath, extra: impl Fn(usize) -> f64) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(scheme.values.len());
    let mut acc = scheme.x0();
    out.push(acc);
    for (i, q) in scheme.increments.iter().enumerate() {
        let factor = 1.0 + q;
        if !(factor > 0.0) {
            return Err(Error::NonPositiveFactor {
                step: i + 1,
                factor,
            });
        }
        acc += q.ln_1p() + extra(i + 1);
        out.push(acc);
    }
    Ok(out)
}

/// `e^{x0} ∏ (1 + Q_k)` at every grid time.
pub fn product_price(scheme: &SchemePath) -> Result<PricePath> {
    Ok(PricePath {
        times: scheme.grid.times(),
        log_values: log_product(scheme, |_| 0.0)?,
        kind: if is_truncated(scheme) {
            PriceKind::ProductTrunc
        } else {
            PriceKind::ProductFull
        },
    })
}

/// `e^{x0} ∏ (1 + Q_k) exp(σ² X_k / (2n))`, taking `Q` and `X` from the same scheme.
pub fn corrected_product_price(scheme: &SchemePath, params: &CirParams) -> Result<PricePath> {
    corrected_product_price_mixed(scheme, scheme, params)
}

/// Corrected product with increments from `increments_from` and correction
/// states from `states_from`, e.g. `Q^(n,C)` with `X^(n)`.
pub fn corrected_product_price_mixed(
    increments_from: &SchemePath,
    states_from: &SchemePath,
    params: &CirParams,
) -> Result<PricePath> {
    if increments_from.grid != states_from.grid {
        return Err(Error::GridMismatch(
            "corrected product needs one grid".into(),
        ));
    }
    let weight = params.sigma_sq() / (2.0 * increments_from.grid.steps() as f64);
    Ok(PricePath {
        times: increments_from.grid.times(),
        log_values: log_product(increments_from, |k| weight * states_from.values[k])?,
        kind: PriceKind::ProductCorrected,
    })
}

/// `exp(X_t - σ²/2 ∫_0^t (X_s or X_s ∧ C) ds)`, left-endpoint integral.
pub fn limit_price(
    path: &ContinuousPath,
    params: &CirParams,
    cap: Option<TruncationLevel>,
) -> PricePath {
    let c = cap.map_or(f64::INFINITY, |c| c.value());
    let integral = cumulative_integral_with(path, |x| x.min(c));
    let half_s2 = 0.5 * params.sigma_sq();
    PricePath {
        times: path.times.clone(),
        log_values: path
            .values
            .iter()
            .zip(&integral)
            .map(|(x, i)| x - half_s2 * i)
            .collect(),
        kind: if c.is_finite() {
            PriceKind::LimitTrunc
        } else {
            PriceKind::LimitFull
        },
    }
}

/// `exp(X_t)`.
pub fn exponential_price(path: &ContinuousPath) -> PricePath {
    PricePath {
        times: path.times.clone(),
        log_values: path.values.clone(),
        kind: PriceKind::Exponential,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::rng::PathRng;
    use crate::schemes::{
        additive_scheme, rademacher_noise, theoretical_bounds, truncated_scheme, NoiseSequence,
    };
    use proptest::prelude::*;

    fn one_up_step() -> (CirParams, SchemePath) {
        let p = CirParams::new(1.0, 1.0, 1.0).unwrap();
        let g = GridSpec::new(1.0, 4).unwrap();
        let noise = NoiseSequence::from_signs(g, &[true, true, false, false]).unwrap();
        (p, additive_scheme(&p, &g, &noise).unwrap())
    }

    #[test]
    fn product_examples() {
        let (_, s) = one_up_step();
        let price = product_price(&s).unwrap();
        assert_eq!(price.kind, PriceKind::ProductFull);
        assert_eq!(price.values()[0], 1f64.exp());
        assert!((price.values()[1] - 1f64.exp() * 1.5).abs() < 1e-14);
    }

    #[test]
    fn product_constant_at_fixed_point() {
        let p = CirParams::deterministic(2.0, 2.0).unwrap();
        let g = GridSpec::new(1.0, 16).unwrap();
        let s = additive_scheme(&p, &g, &rademacher_noise(&g, &mut PathRng::new(0, 0))).unwrap();
        let price = product_price(&s).unwrap();
        assert!(price.log_values.iter().all(|l| *l == 2.0));
    }

    #[test]
    fn corrected_examples() {
        let (p, s) = one_up_step();
        let price = corrected_product_price(&s, &p).unwrap();
        let expected = 1f64.exp() * 1.5 * (1.5f64 / 8.0).exp();
        assert!((price.values()[1] - expected).abs() < 1e-14);
        let plain = product_price(&s).unwrap();
        for (c, l) in price.log_values.iter().zip(&plain.log_values) {
            assert!(c >= l);
        }

        let flat = CirParams::deterministic(1.0, 1.3).unwrap();
        let g = GridSpec::new(1.0, 8).unwrap();
        let s = additive_scheme(&flat, &g, &rademacher_noise(&g, &mut PathRng::new(0, 0))).unwrap();
        assert_eq!(
            corrected_product_price(&s, &flat).unwrap().log_values,
            product_price(&s).unwrap().log_values
        );
    }

    #[test]
    fn mixed_wiring_uses_other_states() {
        let p = CirParams::new(1.0, 1.0, 3.5).unwrap();
        let g = GridSpec::new(1.0, 8).unwrap();
        let noise = NoiseSequence::from_signs(g, &[true; 8]).unwrap();
        let full = additive_scheme(&p, &g, &noise).unwrap();
        let trunc =
            truncated_scheme(&p, TruncationLevel::new(3.0, &p).unwrap(), &g, &noise).unwrap();
        let mixed = corrected_product_price_mixed(&trunc, &full, &p).unwrap();
        let matching = corrected_product_price(&trunc, &p).unwrap();
        assert_ne!(mixed.log_values, matching.log_values);
        let by_hand = 3.5 + trunc.increments[0].ln_1p() + full.values[1] / 16.0;
        assert!((mixed.log_values[1] - by_hand).abs() < 1e-14);
    }

    #[test]
    fn nonpositive_factor_reported() {
        let g = GridSpec::new(1.0, 2).unwrap();
        let s = SchemePath {
            values: vec![1.0, 1.5, 0.2],
            increments: vec![0.5, -1.3],
            grid: g,
            truncation: None,
        };
        assert!(matches!(
            product_price(&s),
            Err(Error::NonPositiveFactor { step: 2, .. })
        ));
    }

    #[test]
    fn limit_examples() {
        let p = CirParams::new(1.0, 0.8, 1.0).unwrap();
        let g = GridSpec::new(2.0, 10).unwrap();
        let c = 1.7;
        let path = ContinuousPath::new(g.times(), vec![c; 11]).unwrap();
        let price = limit_price(&path, &p, None);
        assert_eq!(price.kind, PriceKind::LimitFull);
        assert_eq!(price.log_values[0], c);
        let expected = c - 0.5 * 0.64 * c * 2.0;
        assert!((price.terminal_log() - expected).abs() < 1e-14);

        let capped = limit_price(&path, &p, Some(TruncationLevel::new(1.2, &p).unwrap()));
        assert_eq!(capped.kind, PriceKind::LimitTrunc);
        assert!((capped.terminal_log() - (c - 0.5 * 0.64 * 1.2 * 2.0)).abs() < 1e-14);

        let flat = CirParams::deterministic(1.0, 1.0).unwrap();
        assert_eq!(limit_price(&path, &flat, None).log_values, path.values);
    }

    #[test]
    fn exponential_examples() {
        let g = GridSpec::new(1.0, 3).unwrap();
        let path = ContinuousPath::new(g.times(), vec![1.0, 0.5, 2.0, 2.5]).unwrap();
        let price = exponential_price(&path);
        assert_eq!(price.values()[0], 1f64.exp());
        for (l, x) in price.values().iter().map(|v| v.ln()).zip(&path.values) {
            assert!((l - x).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn telescoping_log_identity(seed in any::<u64>(), n in 64usize..512) {
            let p = CirParams::new(1.0, 1.0, 1.0).unwrap();
            let g = GridSpec::new(1.0, n).unwrap();
            let s = additive_scheme(&p, &g, &rademacher_noise(&g, &mut PathRng::new(seed, 0))).unwrap();
            let price = product_price(&s).unwrap();
            let direct: f64 = 1.0 + s.increments.iter().map(|q| (1.0 + q).ln()).sum::<f64>();
            prop_assert!((price.terminal_log() - direct).abs() <= 1e-10 * direct.abs().max(1.0));
            prop_assert!(price.values().iter().all(|v| *v > 0.0));
        }

        #[test]
        fn no_nonpositive_factor_past_c2_floor(seed in any::<u64>()) {
            let p = CirParams::new(1.0, 1.0, 1.0).unwrap();
            let cap = TruncationLevel::new(5.0, &p).unwrap();
            // n >= 4 C_2^2 gives |Q_k| <= 1/2 for the truncated scheme.
            let c2 = theoretical_bounds(&p, cap, &GridSpec::new(1.0, 1).unwrap()).c2(&GridSpec::new(1.0, 1).unwrap());
            let n = (4.0 * c2 * c2).ceil() as usize;
            let g = GridSpec::new(1.0, n).unwrap();
            let s = truncated_scheme(&p, cap, &g, &rademacher_noise(&g, &mut PathRng::new(seed, 1))).unwrap();
            prop_assert!(product_price(&s).is_ok());
        }
    }
}
