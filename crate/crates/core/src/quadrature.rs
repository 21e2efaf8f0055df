//! Globally adaptive 7/15-point Gauss–Kronrod quadrature.

// Nodes and weights as tabulated in QUADPACK.
#![allow(clippy::excessive_precision)]

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

fn kronrod(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> Segment {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut gauss = fc * WG[3];
    let mut kron = fc * WGK[7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kron += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Segment {
        lo,
        hi,
        value: kron * half,
        error: ((kron - gauss) * half).abs(),
    }
}

/// Tolerances for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub relative: f64,
    pub absolute: f64,
    pub max_segments: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            relative: 1e-12,
            absolute: 0.0,
            max_segments: 4000,
        }
    }
}

/// Signed integral of `f` over `[a, b]` (`a > b` flips the sign).
///
/// Bisects the segment with the largest error estimate until the summed
/// estimate is within `max(absolute, relative * |I|)`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: Tolerance) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if a > b {
        return integrate(f, b, a, tol).map(|v| -v);
    }
    let mut segments = vec![kronrod(f, a, b)];
    loop {
        let total: f64 = segments.iter().map(|s| s.value).sum();
        let error: f64 = segments.iter().map(|s| s.error).sum();
        if !total.is_finite() || !error.is_finite() {
            return Err(Error::QuadratureFailure {
                lower: a,
                upper: b,
                estimate: error,
            });
        }
        if error <= tol.absolute.max(tol.relative * total.abs()) {
            return Ok(total);
        }
        if segments.len() >= tol.max_segments {
            return Err(Error::QuadratureFailure {
                lower: a,
                upper: b,
                estimate: error,
            });
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("nonempty");
        let s = segments.swap_remove(worst);
        let mid = 0.5 * (s.lo + s.hi);
        if mid <= s.lo || mid >= s.hi {
            // segment below floating-point resolution
            return Err(Error::QuadratureFailure {
                lower: a,
                upper: b,
                estimate: error,
            });
        }
        segments.push(kronrod(f, s.lo, mid));
        segments.push(kronrod(f, mid, s.hi));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_exact() {
        let v = integrate(
            &|x| x.powi(5) - 3.0 * x * x,
            -1.0,
            2.0,
            Tolerance::default(),
        )
        .unwrap();
        assert!((v - (64.0 / 6.0 - 1.0 / 6.0 - 9.0)).abs() < 1e-13);
    }

    #[test]
    fn reversed_bounds_flip_sign() {
        let f = |x: f64| x.exp();
        let fwd = integrate(&f, 0.0, 1.0, Tolerance::default()).unwrap();
        let rev = integrate(&f, 1.0, 0.0, Tolerance::default()).unwrap();
        assert_eq!(fwd, -rev);
        assert!((fwd - (1f64.exp() - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn kink_and_peak() {
        let v = integrate(&|x: f64| (x - 0.3).abs(), 0.0, 1.0, Tolerance::default()).unwrap();
        assert!((v - (0.045 + 0.245)).abs() < 1e-12);
        let v = integrate(
            &|x: f64| 1.0 / (1e-4 + x * x),
            -1.0,
            1.0,
            Tolerance::default(),
        )
        .unwrap();
        let exact = 2.0 * (1.0 / 1e-2) * (1.0f64 / 1e-2).atan();
        assert!((v - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn divergent_integrand_fails() {
        let r = integrate(&|x: f64| 1.0 / x, 0.0, 1.0, Tolerance::default());
        assert!(matches!(r, Err(Error::QuadratureFailure { .. })));
    }
}
