//! Reference simulators for the continuous-time model.
//!
//! * exact CIR transitions through the noncentral chi-square law,
//! * a Gaussian Euler scheme for the truncated process,
//! * path functionals (left-endpoint time integrals, first exit from an interval).

use rand_distr::{Distribution, Gamma, Poisson};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::model::{marginal_law, CirParams, NoncentralChiSqSpec};
use crate::rng::PathRng;
use crate::truncated::{truncated_diffusion, truncated_drift, TruncationLevel};

/// A path sampled on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuousPath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Number of steps where the Euler update went negative and was clamped.
    pub clamp_count: usize,
}

impl ContinuousPath {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::GridMismatch(format!(
                "{} times vs {} values",
                times.len(),
                values.len()
            )));
        }
        if times[0] != 0.0 || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGrid(
                "times must start at 0 and increase strictly".into(),
            ));
        }
        if values.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidGrid("path values must be nonnegative".into()));
        }
        Ok(Self {
            times,
            values,
            clamp_count: 0,
        })
    }

    pub fn terminal(&self) -> f64 {
        *self.values.last().expect("nonempty path")
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("nonempty path")
    }
}

fn gamma(shape: f64, scale: f64) -> Gamma<f64> {
    Gamma::new(shape, scale).expect("positive gamma parameters")
}

/// One draw of `scale * chi'^2(df, noncentrality)` through the Poisson mixture
/// `chi'^2 = Gamma(df/2 + J, 2)`, `J ~ Poisson(noncentrality / 2)`.
pub fn sample_noncentral_chisq(spec: &NoncentralChiSqSpec, rng: &mut PathRng) -> f64 {
    let mut shape = 0.5 * spec.df;
    if spec.noncentrality > 0.0 {
        let j: f64 = Poisson::new(0.5 * spec.noncentrality)
            .expect("finite positive rate")
            .sample(rng);
        shape += j;
    }
    spec.scale * gamma(shape, 2.0).sample(rng)
}

/// One draw of `X_t`, `t > 0`.
pub fn sample_marginal(params: &CirParams, t: f64, rng: &mut PathRng) -> Result<f64> {
    let spec = marginal_law(params, t)?;
    Ok(sample_noncentral_chisq(&spec, rng))
}

/// Exact transition `X_{t+dt} | X_t = x` for a fixed step.
///
/// For `df > 1` the noncentral draw is built as `(Z + sqrt(λ))^2 + chi^2(df - 1)`,
/// which needs one normal and one gamma variate with a shape that is fixed for
/// the whole path. Otherwise the Poisson mixture is used.
#[derive(Debug, Clone)]
pub struct CirTransition {
    df: f64,
    decay: f64,
    scale: f64,
    central: Option<Gamma<f64>>,
}

impl CirTransition {
    pub fn new(params: &CirParams, dt: f64) -> Result<Self> {
        let law = marginal_law(params, dt)?;
        Ok(Self {
            df: law.df,
            decay: (-dt).exp(),
            scale: law.scale,
            central: (law.df > 1.0).then(|| gamma(0.5 * (law.df - 1.0), 2.0)),
        })
    }

    pub fn law_from(&self, x: f64) -> NoncentralChiSqSpec {
        NoncentralChiSqSpec {
            df: self.df,
            noncentrality: x.max(0.0) * self.decay / self.scale,
            scale: self.scale,
        }
    }

    pub fn sample(&self, x: f64, rng: &mut PathRng) -> f64 {
        let lambda = x.max(0.0) * self.decay / self.scale;
        match &self.central {
            Some(central) => {
                let z = rng.standard_normal() + lambda.sqrt();
                self.scale * (z * z + central.sample(rng))
            }
            None => sample_noncentral_chisq(&self.law_from(x), rng),
        }
    }
}

/// Markov chain on the grid using exact transitions.
pub fn exact_cir_path(
    params: &CirParams,
    grid: &GridSpec,
    rng: &mut PathRng,
) -> Result<ContinuousPath> {
    params.require_feller()?;
    let transition = CirTransition::new(params, grid.dt())?;
    let mut values = Vec::with_capacity(grid.steps() + 1);
    let mut x = params.x0();
    values.push(x);
    for _ in 0..grid.steps() {
        x = transition.sample(x, rng);
        values.push(x);
    }
    Ok(ContinuousPath {
        times: grid.times(),
        values,
        clamp_count: 0,
    })
}

/// Gaussian Euler scheme for the truncated SDE, floored at zero.
pub fn euler_truncated_path(
    params: &CirParams,
    cap: TruncationLevel,
    grid: &GridSpec,
    rng: &mut PathRng,
) -> ContinuousPath {
    let dt = grid.dt();
    let sqrt_dt = dt.sqrt();
    let mut values = Vec::with_capacity(grid.steps() + 1);
    let mut clamp_count = 0;
    let mut x = params.x0();
    values.push(x);
    for _ in 0..grid.steps() {
        let noise = if params.sigma() > 0.0 {
            truncated_diffusion(x, params, cap) * sqrt_dt * rng.standard_normal()
        } else {
            0.0
        };
        x += truncated_drift(x, params, cap) * dt + noise;
        if x < 0.0 {
            x = 0.0;
            clamp_count += 1;
        }
        values.push(x);
    }
    ContinuousPath {
        times: grid.times(),
        values,
        clamp_count,
    }
}

/// `∫_0^T f(X_s) ds` as a left-endpoint sum, cumulated at every grid time.
pub fn cumulative_integral_with(path: &ContinuousPath, f: impl Fn(f64) -> f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(path.values.len());
    let mut acc = 0.0;
    out.push(acc);
    for k in 1..path.values.len() {
        acc += f(path.values[k - 1]) * (path.times[k] - path.times[k - 1]);
        out.push(acc);
    }
    out
}

/// `∫_0^T X_s ds`, left-endpoint rule.
pub fn time_integral(path: &ContinuousPath) -> f64 {
    *cumulative_integral_with(path, |x| x)
        .last()
        .expect("nonempty path")
}

/// `∫_0^t X_s ds` for the step function that holds `values[k]` on `[t_k, t_{k+1})`.
pub fn time_integral_until(path: &ContinuousPath, t: f64) -> Result<f64> {
    let horizon = path.horizon();
    if !(t >= 0.0 && t <= horizon) {
        return Err(Error::OutOfDomain { t, horizon });
    }
    let mut acc = 0.0;
    for k in 0..path.values.len() - 1 {
        let (lo, hi) = (path.times[k], path.times[k + 1]);
        if t <= lo {
            break;
        }
        acc += path.values[k] * (hi.min(t) - lo);
    }
    Ok(acc)
}

/// A one-dimensional time-homogeneous step rule used by [`first_exit`].
pub trait PathStepper {
    fn dt(&self) -> f64;
    fn step(&self, x: f64, rng: &mut PathRng) -> f64;
    /// Local diffusion coefficient at `x`, if the stepper supports the
    /// Brownian-bridge crossing correction.
    fn local_vol(&self, _x: f64) -> Option<f64> {
        None
    }
}

/// Euler step for the truncated process with an optional Brownian-bridge
/// check for barrier crossings inside a step.
#[derive(Debug, Clone, Copy)]
pub struct TruncatedEulerStepper {
    pub params: CirParams,
    pub cap: TruncationLevel,
    pub dt: f64,
    pub bridge: bool,
}

impl PathStepper for TruncatedEulerStepper {
    fn dt(&self) -> f64 {
        self.dt
    }

    fn step(&self, x: f64, rng: &mut PathRng) -> f64 {
        let drift = truncated_drift(x, &self.params, self.cap) * self.dt;
        let vol = truncated_diffusion(x, &self.params, self.cap);
        (x + drift + vol * self.dt.sqrt() * rng.standard_normal()).max(0.0)
    }

    fn local_vol(&self, x: f64) -> Option<f64> {
        self.bridge
            .then(|| truncated_diffusion(x, &self.params, self.cap))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitSide {
    Low,
    High,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExitOutcome {
    pub side: ExitSide,
    pub time: f64,
}

/// Probability that a Brownian bridge with variance rate `vol^2 dt` between
/// two points on the same side of `level` touches it.
fn bridge_hit(from: f64, to: f64, level: f64, vol: f64, dt: f64) -> f64 {
    if vol <= 0.0 {
        return 0.0;
    }
    (-2.0 * (from - level) * (to - level) / (vol * vol * dt)).exp()
}

/// Runs `stepper` from `x0` until the state is `<= alpha` (low), `>= beta`
/// (high) or `max_time` has elapsed (none).
pub fn first_exit<S: PathStepper>(
    stepper: &S,
    x0: f64,
    alpha: f64,
    beta: f64,
    max_time: f64,
    rng: &mut PathRng,
) -> Result<ExitOutcome> {
    if !(alpha > 0.0 && alpha < x0 && x0 < beta) {
        return Err(Error::OrderingViolation { alpha, x0, beta });
    }
    let dt = stepper.dt();
    let max_steps = (max_time / dt).ceil() as u64;
    let mut x = x0;
    for k in 1..=max_steps {
        let next = stepper.step(x, rng);
        let time = k as f64 * dt;
        if next <= alpha {
            return Ok(ExitOutcome {
                side: ExitSide::Low,
                time,
            });
        }
        if next >= beta {
            return Ok(ExitOutcome {
                side: ExitSide::High,
                time,
            });
        }
        if let Some(vol) = stepper.local_vol(x) {
            let u_low = rng.uniform();
            let u_high = rng.uniform();
            if u_low < bridge_hit(x, next, alpha, vol, dt) {
                return Ok(ExitOutcome {
                    side: ExitSide::Low,
                    time,
                });
            }
            if u_high < bridge_hit(x, next, beta, vol, dt) {
                return Ok(ExitOutcome {
                    side: ExitSide::High,
                    time,
                });
            }
        }
        x = next;
    }
    Ok(ExitOutcome {
        side: ExitSide::None,
        time: max_time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::mean_at;

    fn params() -> CirParams {
        CirParams::new(1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn central_reduction_when_noncentrality_zero() {
        // λ = 0: the Poisson mixture never adds shape; compare against a direct gamma draw.
        let spec = NoncentralChiSqSpec::new(3.0, 0.0, 0.5).unwrap();
        let mut a = PathRng::new(5, 0);
        let mut b = PathRng::new(5, 0);
        for _ in 0..100 {
            let x = sample_noncentral_chisq(&spec, &mut a);
            let y = 0.5 * gamma(1.5, 2.0).sample(&mut b);
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn exact_path_is_deterministic_and_nonnegative() {
        let g = GridSpec::new(1.0, 64).unwrap();
        let p1 = exact_cir_path(&params(), &g, &mut PathRng::new(9, 2)).unwrap();
        let p2 = exact_cir_path(&params(), &g, &mut PathRng::new(9, 2)).unwrap();
        assert_eq!(p1, p2);
        assert_eq!(p1.values[0], 1.0);
        assert_eq!(p1.times.len(), 65);
        for s in 0..10_000 {
            let p = exact_cir_path(&params(), &g, &mut PathRng::new(1, s)).unwrap();
            assert!(p.values.iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn exact_path_small_df_uses_poisson_mixture() {
        // 4b / sigma^2 = 0.8 < 1 (Feller fails, so use the transition directly).
        let p = CirParams::new(0.2, 1.0, 1.0).unwrap();
        let t = CirTransition::new(&p, 0.1).unwrap();
        assert!(t.central.is_none());
        let mut rng = PathRng::new(3, 3);
        let n = 50_000;
        let draws: Vec<f64> = (0..n).map(|_| t.sample(1.0, &mut rng)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let target = mean_at(&p, 0.1).unwrap();
        let sd = crate::model::variance_at(&p, 0.1).unwrap().sqrt();
        assert!((mean - target).abs() < 4.0 * sd / (n as f64).sqrt());
    }

    #[test]
    fn exact_path_tracks_ode_for_tiny_sigma() {
        let p = CirParams::new(2.0, 1e-8, 0.5).unwrap();
        let g = GridSpec::new(2.0, 50).unwrap();
        let path = exact_cir_path(&p, &g, &mut PathRng::new(4, 0)).unwrap();
        for (t, x) in path.times.iter().zip(&path.values) {
            let ode = 2.0 + (0.5 - 2.0) * (-t).exp();
            assert!((x - ode).abs() < 1e-4, "t={t}: {x} vs {ode}");
        }
    }

    #[test]
    fn exact_path_requires_feller() {
        let p = CirParams::new(0.2, 1.0, 1.0).unwrap();
        let g = GridSpec::new(1.0, 4).unwrap();
        assert!(matches!(
            exact_cir_path(&p, &g, &mut PathRng::new(0, 0)),
            Err(Error::FellerViolated { .. })
        ));
    }

    #[test]
    fn euler_without_noise_is_deterministic_recursion() {
        let p = CirParams::deterministic(1.0, 3.0).unwrap();
        let cap = TruncationLevel::new(2.0, &p).unwrap();
        let g = GridSpec::new(1.0, 10).unwrap();
        let path = euler_truncated_path(&p, cap, &g, &mut PathRng::new(0, 0));
        let mut x: f64 = 3.0;
        for k in 1..=10 {
            x += (1.0 - x.min(2.0)) * 0.1;
            assert!((path.values[k] - x).abs() < 1e-15);
        }
        assert_eq!(path.clamp_count, 0);
    }

    #[test]
    fn euler_clamp_frequency_vanishes() {
        let p = CirParams::new(0.5, 1.0, 0.05).unwrap();
        let cap = TruncationLevel::new(4.0, &p).unwrap();
        let rate = |n: usize| {
            let g = GridSpec::new(1.0, n).unwrap();
            let total: usize = (0..2000)
                .map(|s| euler_truncated_path(&p, cap, &g, &mut PathRng::new(21, s)).clamp_count)
                .sum();
            total as f64 / (2000 * n) as f64
        };
        let coarse = rate(16);
        let fine = rate(1024);
        assert!(coarse > 0.0);
        assert!(fine < coarse / 4.0, "{coarse} -> {fine}");
    }

    #[test]
    fn integrals() {
        let g = GridSpec::new(2.0, 8).unwrap();
        let constant = ContinuousPath::new(g.times(), vec![1.5; 9]).unwrap();
        assert!((time_integral(&constant) - 3.0).abs() < 1e-15);
        assert_eq!(time_integral_until(&constant, 0.0).unwrap(), 0.0);
        assert!((time_integral_until(&constant, 0.3).unwrap() - 0.45).abs() < 1e-15);

        // Ramp x(t) = t on n points: left sum = T^2/2 - T^2/(2n).
        let n = 100;
        let g = GridSpec::new(1.0, n).unwrap();
        let ramp = ContinuousPath::new(g.times(), g.times()).unwrap();
        let gap = 0.5 - time_integral(&ramp);
        assert!((gap - 1.0 / (2.0 * n as f64)).abs() < 1e-14);
    }

    #[test]
    fn path_validation() {
        assert!(ContinuousPath::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(ContinuousPath::new(vec![0.1, 1.0], vec![1.0, 1.0]).is_err());
        assert!(ContinuousPath::new(vec![0.0, 1.0], vec![1.0, -1.0]).is_err());
    }

    #[test]
    fn first_exit_tight_upper_barrier() {
        let p = params();
        let cap = TruncationLevel::new(5.0, &p).unwrap();
        let stepper = TruncatedEulerStepper {
            params: p,
            cap,
            dt: 1e-3,
            bridge: true,
        };
        for s in 0..200 {
            let out = first_exit(
                &stepper,
                1.0,
                1e-9,
                1.0 * (1.0 + 1e-9),
                10.0,
                &mut PathRng::new(2, s),
            )
            .unwrap();
            assert_eq!(out.side, ExitSide::High);
        }
    }

    #[test]
    fn first_exit_none_vanishes_with_time() {
        let p = params();
        let cap = TruncationLevel::new(5.0, &p).unwrap();
        let stepper = TruncatedEulerStepper {
            params: p,
            cap,
            dt: 1e-2,
            bridge: false,
        };
        let none_rate = |max_time: f64| {
            (0..2000)
                .filter(|s| {
                    first_exit(&stepper, 1.0, 0.5, 2.0, max_time, &mut PathRng::new(8, *s))
                        .unwrap()
                        .side
                        == ExitSide::None
                })
                .count()
        };
        let short = none_rate(0.1);
        let long = none_rate(20.0);
        assert!(short > 500);
        assert_eq!(long, 0);
    }

    #[test]
    fn first_exit_ordering() {
        let p = params();
        let cap = TruncationLevel::new(5.0, &p).unwrap();
        let stepper = TruncatedEulerStepper {
            params: p,
            cap,
            dt: 1e-2,
            bridge: false,
        };
        assert!(first_exit(&stepper, 1.0, 1.0, 2.0, 1.0, &mut PathRng::new(0, 0)).is_err());
    }
}
