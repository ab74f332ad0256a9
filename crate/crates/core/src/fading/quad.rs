//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! The interval with the largest error estimate is bisected until the summed
//! estimate drops below the absolute tolerance. Running out of subdivisions is
//! an error carrying the achieved tolerance; a partially converged value is
//! never returned as if it were converged.

use std::cell::Cell;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError {
    #[error("quadrature did not converge: achieved {achieved:.3e}, requested {requested:.3e} after {subdivisions} subdivisions")]
    NoConvergence {
        achieved: f64,
        requested: f64,
        subdivisions: usize,
    },
    #[error("integrand returned a non-finite value at x = {at}")]
    NonFinite { at: f64 },
    #[error("invalid integration interval [{a}, {b}]")]
    BadInterval { a: f64, b: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            max_subdivisions: 10_000,
        }
    }
}

impl QuadOptions {
    pub fn with_tol(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub abs_error: f64,
    pub subdivisions: usize,
}

// Kronrod 15-point abscissae; odd indices are the embedded Gauss 7-point nodes.
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
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Segment, QuadError> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let eval = |x: f64| -> Result<f64, QuadError> {
        let y = f(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(QuadError::NonFinite { at: x })
        }
    };

    let fc = eval(center)?;
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let value = res_k * half;
    let mut error = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok(Segment { a, b, value, error })
}

/// `∫_a^b f(x) dx` to `opts.abs_tol`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    opts: QuadOptions,
) -> Result<Integral, QuadError> {
    if !a.is_finite() || !b.is_finite() || b < a {
        return Err(QuadError::BadInterval { a, b });
    }
    if a == b {
        return Ok(Integral {
            value: 0.0,
            abs_error: 0.0,
            subdivisions: 0,
        });
    }
    let mut segments = vec![kronrod15(&f, a, b)?];
    let mut subdivisions = 0;
    loop {
        let total_err: f64 = segments.iter().map(|s| s.error).sum();
        if total_err <= opts.abs_tol {
            break;
        }
        if subdivisions >= opts.max_subdivisions {
            return Err(QuadError::NoConvergence {
                achieved: total_err,
                requested: opts.abs_tol,
                subdivisions,
            });
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("at least one segment");
        let seg = segments.swap_remove(worst);
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            // interval exhausted at machine precision
            return Err(QuadError::NoConvergence {
                achieved: total_err,
                requested: opts.abs_tol,
                subdivisions,
            });
        }
        segments.push(kronrod15(&f, seg.a, mid)?);
        segments.push(kronrod15(&f, mid, seg.b)?);
        subdivisions += 1;
    }
    // sum in interval order so the result does not depend on refinement history
    segments.sort_by(|x, y| x.a.total_cmp(&y.a));
    Ok(Integral {
        value: segments.iter().map(|s| s.value).sum(),
        abs_error: segments.iter().map(|s| s.error).sum(),
        subdivisions,
    })
}

/// Iterated 2-D integral over the rectangle `[a1,b1] × [a2,b2]`.
///
/// The inner integral runs at the same absolute tolerance as the outer one.
pub fn integrate_2d<F: Fn(f64, f64) -> f64>(
    f: F,
    (a1, b1): (f64, f64),
    (a2, b2): (f64, f64),
    opts: QuadOptions,
) -> Result<Integral, QuadError> {
    let inner_failure: Cell<Option<QuadError>> = Cell::new(None);
    let outer = integrate(
        |x1| match integrate(|x2| f(x1, x2), a2, b2, opts) {
            Ok(r) => r.value,
            Err(e) => {
                inner_failure.set(Some(e));
                f64::NAN
            }
        },
        a1,
        b1,
        opts,
    );
    if let Some(e) = inner_failure.take() {
        return Err(e);
    }
    outer
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| 3.0 * x * x - x + 2.0, -1.0, 2.0, QuadOptions::default()).unwrap();
        assert!((r.value - 13.5).abs() < 1e-13);
        assert_eq!(r.subdivisions, 0);
    }

    #[test]
    fn peaked_and_oscillatory() {
        let r = integrate(
            |x| (-x * x * 400.0).exp(),
            -1.0,
            3.0,
            QuadOptions::default(),
        )
        .unwrap();
        assert!((r.value - PI.sqrt() / 20.0).abs() < 1e-10);
        let r = integrate(|x| (30.0 * x).sin(), 0.0, PI, QuadOptions::default()).unwrap();
        assert!(r.value.abs() < 1e-10);
    }

    #[test]
    fn integrable_singularity_converges() {
        let r = integrate(
            |x| if x > 0.0 { 1.0 / x.sqrt() } else { 0.0 },
            0.0,
            1.0,
            QuadOptions::with_tol(1e-8),
        )
        .unwrap();
        assert!((r.value - 2.0).abs() < 1e-7);
    }

    #[test]
    fn failure_is_reported() {
        let opts = QuadOptions {
            abs_tol: 1e-14,
            max_subdivisions: 3,
        };
        let err = integrate(|x| (1.0 / (x + 1e-3)).sin(), 0.0, 1.0, opts).unwrap_err();
        assert!(matches!(
            err,
            QuadError::NoConvergence {
                subdivisions: 3,
                ..
            }
        ));
        assert!(matches!(
            integrate(|_| f64::NAN, 0.0, 1.0, QuadOptions::default()),
            Err(QuadError::NonFinite { .. })
        ));
        assert!(integrate(|x| x, 1.0, 0.0, QuadOptions::default()).is_err());
    }

    #[test]
    fn two_dimensional_gaussian() {
        let r = integrate_2d(
            |x, y| (-(x * x + y * y)).exp(),
            (-8.0, 8.0),
            (-8.0, 8.0),
            QuadOptions::with_tol(1e-9),
        )
        .unwrap();
        assert!((r.value - PI).abs() < 1e-8);
    }
}
