//! Gamma and modified Bessel functions of the first kind.
//!
//! `I_ν(x)` is evaluated in the log domain throughout. Three regimes:
//!
//! * power series, for `x <= 30` or when the order is large relative to `x`;
//! * the exact finite hyperbolic form, for half-integer orders and `x > 30`;
//! * the large-argument (Hankel) expansion, for other orders and `x > 30`.
//!
//! The series uses only positive terms, so it is accurate everywhere; the
//! other two branches exist for speed at large arguments and to keep
//! `exp(log_bessel_i)` free of overflow in the combined-SNR densities.

use std::f64::consts::PI;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecialError {
    #[error("{func}: argument {arg} outside the domain ({expected})")]
    Domain {
        func: &'static str,
        arg: f64,
        expected: &'static str,
    },
    #[error("{func}: result overflows f64 at argument {arg}")]
    Overflow { func: &'static str, arg: f64 },
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Orders below this threshold of `x` (in `ν² < 2x`) use the large-argument forms.
const ASYMPTOTIC_MIN_X: f64 = 30.0;

fn lanczos_sum(z: f64) -> f64 {
    let mut acc = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    acc
}

/// `Γ(x)` for `x > 0`.
pub fn gamma_fn(x: f64) -> Result<f64, SpecialError> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(SpecialError::Domain {
            func: "gamma_fn",
            arg: x,
            expected: "x > 0",
        });
    }
    if x < 0.5 {
        // reflection: Γ(x)Γ(1-x) = π / sin(πx)
        let g = gamma_fn(1.0 - x)?;
        return Ok(PI / ((PI * x).sin() * g));
    }
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    // split the power so t^(z+1/2) does not overflow before e^-t pulls it back
    let half = t.powf((z + 0.5) / 2.0);
    let value = (2.0 * PI).sqrt() * half * (half * (-t).exp()) * lanczos_sum(z);
    if !value.is_finite() {
        return Err(SpecialError::Overflow {
            func: "gamma_fn",
            arg: x,
        });
    }
    Ok(value)
}

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64, SpecialError> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(SpecialError::Domain {
            func: "ln_gamma",
            arg: x,
            expected: "x > 0",
        });
    }
    if x < 0.5 {
        let g = ln_gamma(1.0 - x)?;
        return Ok((PI / (PI * x).sin()).ln() - g);
    }
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    Ok(LN_SQRT_2PI + (z + 0.5) * t.ln() - t + lanczos_sum(z).ln())
}

fn check_bessel_args(func: &'static str, nu: f64, x: f64) -> Result<(), SpecialError> {
    if !(nu > -1.0) || !nu.is_finite() {
        return Err(SpecialError::Domain {
            func,
            arg: nu,
            expected: "order nu > -1",
        });
    }
    if !(x >= 0.0) || !x.is_finite() {
        return Err(SpecialError::Domain {
            func,
            arg: x,
            expected: "finite x >= 0",
        });
    }
    Ok(())
}

/// `I_ν(x)`, modified Bessel function of the first kind.
///
/// Accepts `ν > -1` and `x >= 0`. Returns an overflow error once the value
/// leaves the f64 range (around `x ≈ 713`); use [`log_bessel_i`] there.
pub fn bessel_i(nu: f64, x: f64) -> Result<f64, SpecialError> {
    check_bessel_args("bessel_i", nu, x)?;
    if x == 0.0 {
        return Ok(bessel_at_zero(nu));
    }
    let value = log_bessel_i_unchecked(nu, x).exp();
    if !value.is_finite() {
        return Err(SpecialError::Overflow {
            func: "bessel_i",
            arg: x,
        });
    }
    Ok(value)
}

/// `ln I_ν(x)`.
///
/// At `x = 0` this is `0` for `ν = 0`, `-∞` for `ν > 0` and `+∞` for `ν < 0`.
pub fn log_bessel_i(nu: f64, x: f64) -> Result<f64, SpecialError> {
    check_bessel_args("log_bessel_i", nu, x)?;
    if x == 0.0 {
        return Ok(bessel_at_zero(nu).ln());
    }
    Ok(log_bessel_i_unchecked(nu, x))
}

/// `ln[I_ν(z) / (z/2)^ν]`, finite at `z = 0` where it equals `-ln Γ(ν+1)`.
///
/// Densities that multiply `(x/2β)^ν` into `I_ν(βx)` use this form so the
/// `β → 0` limit stays well defined.
pub fn log_bessel_i_scaled(nu: f64, z: f64) -> Result<f64, SpecialError> {
    check_bessel_args("log_bessel_i_scaled", nu, z)?;
    if use_series(nu, z) {
        Ok(log_series_sum(nu, z) - ln_gamma_unchecked(nu + 1.0))
    } else {
        Ok(log_bessel_i_unchecked(nu, z) - nu * (z / 2.0).ln())
    }
}

fn bessel_at_zero(nu: f64) -> f64 {
    if nu == 0.0 {
        1.0
    } else if nu > 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

fn ln_gamma_unchecked(x: f64) -> f64 {
    ln_gamma(x).expect("ln_gamma argument validated by caller")
}

fn use_series(nu: f64, x: f64) -> bool {
    x <= ASYMPTOTIC_MIN_X || nu * nu >= 2.0 * x
}

fn half_integer_index(nu: f64) -> Option<i64> {
    let twice = 2.0 * nu;
    if twice.fract() == 0.0 && (twice as i64) % 2 != 0 {
        Some(((twice as i64) - 1) / 2)
    } else {
        None
    }
}

pub(crate) fn log_bessel_i_unchecked(nu: f64, x: f64) -> f64 {
    if use_series(nu, x) {
        nu * (x / 2.0).ln() - ln_gamma_unchecked(nu + 1.0) + log_series_sum(nu, x)
    } else if let Some(n) = half_integer_index(nu) {
        log_half_integer(n, x)
    } else {
        log_hankel(nu, x)
    }
}

/// `ln Σ_k (x²/4)^k Γ(ν+1) / (k! Γ(k+ν+1))`, accumulated with rescaling.
fn log_series_sum(nu: f64, x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    let mut log_scale = 0.0_f64;
    let mut k = 0.0_f64;
    loop {
        k += 1.0;
        term *= q / (k * (k + nu));
        sum += term;
        if sum > 1e280 {
            sum *= 1e-280;
            term *= 1e-280;
            log_scale += 280.0 * std::f64::consts::LN_10;
        }
        // terms rise until k ≈ x/2, then fall geometrically
        if term < sum * 1e-17 && k * (k + nu) > q {
            break;
        }
    }
    sum.ln() + log_scale
}

/// Exact form for `ν = n + 1/2`, `n >= -1`.
fn log_half_integer(n: i64, x: f64) -> f64 {
    let prefix = x - 0.5 * (2.0 * PI * x).ln();
    if n < 0 {
        // I_{-1/2}(x) = sqrt(2/(πx)) cosh x
        return prefix + (-2.0 * x).exp().ln_1p();
    }
    let mut growing = 0.0;
    let mut decaying = 0.0;
    let mut coef = 1.0; // (n+k)! / (k! (n-k)!)
    let mut inv_pow = 1.0; // (2x)^-k
    for k in 0..=n {
        if k > 0 {
            let kf = k as f64;
            let nf = n as f64;
            coef *= (nf + kf) * (nf - kf + 1.0) / kf;
            inv_pow /= 2.0 * x;
        }
        let t = coef * inv_pow;
        growing += if k % 2 == 0 { t } else { -t };
        decaying += t;
    }
    let sign = if (n + 1) % 2 == 0 { 1.0 } else { -1.0 };
    prefix + (growing + sign * (-2.0 * x).exp() * decaying).ln()
}

fn log_hankel(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    let mut k = 1.0_f64;
    loop {
        let odd = 2.0 * k - 1.0;
        let next = -term * (mu - odd * odd) / (8.0 * k * x);
        if next.abs() >= term.abs() || next == 0.0 {
            break;
        }
        sum += next;
        term = next;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
        k += 1.0;
    }
    x - 0.5 * (2.0 * PI * x).ln() + sum.ln()
}
