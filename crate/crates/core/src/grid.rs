use serde::Serialize;

use crate::error::{Error, Result};

/// Uniform time grid `t_k = kT/n`, `k = 0..=n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    horizon: f64,
    steps: usize,
}

impl GridSpec {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "horizon T = {horizon} must be positive"
            )));
        }
        if steps == 0 {
            return Err(Error::InvalidGrid("step count n must be at least 1".into()));
        }
        Ok(Self { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// `T / n`.
    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// `kT / n`; `time(n)` is exactly `T`.
    pub fn time(&self, k: usize) -> f64 {
        if k == self.steps {
            self.horizon
        } else {
            k as f64 * self.horizon / self.steps as f64
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| self.time(k)).collect()
    }

    /// `⌊nt/T⌋`: the largest `k` with `time(k) <= t`, for `t` in `[0, T]`.
    pub fn index_at(&self, t: f64) -> Result<usize> {
        if !(t >= 0.0 && t <= self.horizon) {
            return Err(Error::OutOfDomain {
                t,
                horizon: self.horizon,
            });
        }
        let mut k = ((t * self.steps as f64 / self.horizon).floor() as usize).min(self.steps);
        while k > 0 && self.time(k) > t {
            k -= 1;
        }
        while k < self.steps && self.time(k + 1) <= t {
            k += 1;
        }
        Ok(k)
    }

    /// `n > 2T`, the step-size condition under which the Rademacher schemes
    /// stay positive.
    pub fn positivity_ok(&self) -> bool {
        self.steps as f64 > 2.0 * self.horizon
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::new(0.0, 4).is_err());
        assert!(GridSpec::new(1.0, 0).is_err());
        assert!(GridSpec::new(f64::INFINITY, 4).is_err());
    }

    #[test]
    fn index_boundaries() {
        let g = GridSpec::new(1.0, 10).unwrap();
        assert_eq!(g.index_at(0.0).unwrap(), 0);
        assert_eq!(g.index_at(0.1 - 1e-15).unwrap(), 0);
        assert_eq!(g.index_at(g.time(1)).unwrap(), 1);
        assert_eq!(g.index_at(1.0).unwrap(), 10);
        assert!(g.index_at(1.0 + 1e-12).is_err());
        assert!(g.index_at(-1e-300).is_err());
    }

    #[test]
    fn positivity_strict() {
        assert!(!GridSpec::new(2.0, 4).unwrap().positivity_ok());
        assert!(GridSpec::new(2.0, 5).unwrap().positivity_ok());
    }

    proptest! {
        #[test]
        fn grid_points_map_to_own_index(horizon in 0.01f64..50.0, steps in 1usize..5000) {
            let g = GridSpec::new(horizon, steps).unwrap();
            for k in [0, steps / 3, steps / 2, steps.saturating_sub(1), steps] {
                prop_assert_eq!(g.index_at(g.time(k)).unwrap(), k);
            }
        }
    }
}
