//! Correlated bivariate gamma / Nakagami-m fading analytics.
//!
//! Two fading branches share one fading figure `m`; their squared envelopes
//! are gamma distributed with mean `Ω_d` and power correlation `ρ`. This
//! module evaluates the joint power density, the single-branch envelope
//! density, the density of the combined envelope `sqrt(r₁² + r₂²)` and of the
//! combined SNR `γ₁ + γ₂`, the moment generating function of the combined
//! SNR, and average symbol error probabilities built on top of it.
//!
//! All densities are evaluated in the log domain: the combined densities
//! multiply an exponentially large `I_ν` by an exponentially small decay
//! term, and neither factor is representable on its own at high SNR.
//!
//! Average error probabilities go through the MGF: for M-PSK,
//!
//! ```text
//! Pe = (1/π) ∫_0^{(M-1)π/M} M_a(-sin²(π/M) / sin²θ) dθ
//! ```
//!
//! which is the closed form of integrating the conditional phase-error
//! density over the fading distribution.

pub mod quad;
pub mod special;

use std::f64::consts::PI;

use thiserror::Error;

pub use quad::{integrate, integrate_2d, Integral, QuadError, QuadOptions};
pub use special::{bessel_i, gamma_fn, ln_gamma, log_bessel_i, log_bessel_i_scaled, SpecialError};

/// Integration ranges for the densities below stop this many standard
/// deviations past the mean.
pub const TRUNCATION_SIGMAS: f64 = 40.0;

/// Below this correlation the `m = 1` equal-branch density switches to a
/// form without the `1/√ρ` cancellation.
const SMALL_RHO: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FadingError {
    #[error("invalid parameter {name} = {value}: {reason}")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error(transparent)]
    Special(#[from] SpecialError),
    #[error(transparent)]
    Quad(#[from] QuadError),
}

fn domain(name: &'static str, value: f64, reason: &'static str) -> FadingError {
    FadingError::Domain {
        name,
        value,
        reason,
    }
}

fn check_fading_figure(m: f64) -> Result<(), FadingError> {
    if m >= 0.5 && m.is_finite() {
        Ok(())
    } else {
        Err(domain("m", m, "fading figure must satisfy m >= 1/2"))
    }
}

fn check_rho(rho: f64) -> Result<(), FadingError> {
    if (0.0..1.0).contains(&rho) {
        Ok(())
    } else {
        Err(domain("rho", rho, "correlation must satisfy 0 <= rho < 1"))
    }
}

fn check_positive(name: &'static str, v: f64) -> Result<(), FadingError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(domain(name, v, "must be positive and finite"))
    }
}

fn check_nonneg(name: &'static str, v: f64) -> Result<(), FadingError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(domain(name, v, "must be non-negative and finite"))
    }
}

/// Two correlated Nakagami-m branches sharing one fading figure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingParams {
    m: f64,
    omega1: f64,
    omega2: f64,
    rho: f64,
}

impl FadingParams {
    pub fn new(m: f64, omega1: f64, omega2: f64, rho: f64) -> Result<Self, FadingError> {
        check_fading_figure(m)?;
        check_positive("omega1", omega1)?;
        check_positive("omega2", omega2)?;
        check_rho(rho)?;
        Ok(Self {
            m,
            omega1,
            omega2,
            rho,
        })
    }

    pub fn m(&self) -> f64 {
        self.m
    }
    pub fn omega1(&self) -> f64 {
        self.omega1
    }
    pub fn omega2(&self) -> f64 {
        self.omega2
    }
    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Gamma scale of branch 1's squared envelope, `Ω₁/m`.
    pub fn branch_scale1(&self) -> f64 {
        self.omega1 / self.m
    }

    /// Gamma scale of branch 2's squared envelope, `Ω₂/m`.
    pub fn branch_scale2(&self) -> f64 {
        self.omega2 / self.m
    }

    /// Exponential decay rate of the combined-power density.
    pub fn decay_rate(&self) -> f64 {
        let (s1, s2) = (self.branch_scale1(), self.branch_scale2());
        (s1 + s2) / (2.0 * s1 * s2 * (1.0 - self.rho))
    }

    /// Bessel-argument rate of the combined-power density.
    pub fn coupling_rate(&self) -> f64 {
        let (s1, s2) = (self.branch_scale1(), self.branch_scale2());
        let num = (s1 - s2).powi(2) + 4.0 * s1 * s2 * self.rho;
        let den = 4.0 * s1 * s1 * s2 * s2 * (1.0 - self.rho).powi(2);
        (num / den).sqrt()
    }

    /// The joint law of the two squared envelopes.
    pub fn power_law(&self) -> BivariateGammaParams {
        BivariateGammaParams {
            shape: self.m,
            scale1: self.branch_scale1(),
            scale2: self.branch_scale2(),
            rho: self.rho,
        }
    }

    /// Upper integration limit for the combined envelope `r_t`.
    pub fn envelope_truncation(&self) -> f64 {
        let mean = self.omega1 + self.omega2;
        let var = (self.omega1.powi(2)
            + self.omega2.powi(2)
            + 2.0 * self.rho * self.omega1 * self.omega2)
            / self.m;
        (mean + TRUNCATION_SIGMAS * var.sqrt()).sqrt()
    }
}

/// Average SNR per symbol on each branch (linear).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrBranchParams {
    mean_snr1: f64,
    mean_snr2: f64,
}

impl SnrBranchParams {
    pub fn new(mean_snr1: f64, mean_snr2: f64) -> Result<Self, FadingError> {
        check_positive("gbar1", mean_snr1)?;
        check_positive("gbar2", mean_snr2)?;
        Ok(Self {
            mean_snr1,
            mean_snr2,
        })
    }

    /// Both branches at the same average SNR.
    pub fn equal(mean_snr: f64) -> Result<Self, FadingError> {
        Self::new(mean_snr, mean_snr)
    }

    pub fn mean_snr1(&self) -> f64 {
        self.mean_snr1
    }
    pub fn mean_snr2(&self) -> f64 {
        self.mean_snr2
    }

    /// SNR-normalized decay rate `m(γ̄₁+γ̄₂) / (2γ̄₁γ̄₂(1-ρ))`.
    pub fn decay_rate(&self, m: f64, rho: f64) -> f64 {
        let (g1, g2) = (self.mean_snr1, self.mean_snr2);
        m * (g1 + g2) / (2.0 * g1 * g2 * (1.0 - rho))
    }

    /// SNR-normalized coupling rate `m((γ̄₁+γ̄₂)² - 4γ̄₁γ̄₂(1-ρ))^½ / (2γ̄₁γ̄₂(1-ρ))`.
    pub fn coupling_rate(&self, m: f64, rho: f64) -> f64 {
        let (g1, g2) = (self.mean_snr1, self.mean_snr2);
        let disc = ((g1 + g2).powi(2) - 4.0 * g1 * g2 * (1.0 - rho)).max(0.0);
        m * disc.sqrt() / (2.0 * g1 * g2 * (1.0 - rho))
    }

    /// Upper integration limit for the combined SNR `γ₁ + γ₂`.
    pub fn snr_truncation(&self, m: f64, rho: f64) -> f64 {
        let (g1, g2) = (self.mean_snr1, self.mean_snr2);
        let var = (g1 * g1 + g2 * g2 + 2.0 * rho * g1 * g2) / m;
        g1 + g2 + TRUNCATION_SIGMAS * var.sqrt()
    }
}

/// Kibble–Moran bivariate gamma law of two correlated powers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BivariateGammaParams {
    pub shape: f64,
    pub scale1: f64,
    pub scale2: f64,
    pub rho: f64,
}

impl BivariateGammaParams {
    pub fn new(shape: f64, scale1: f64, scale2: f64, rho: f64) -> Result<Self, FadingError> {
        let p = Self {
            shape,
            scale1,
            scale2,
            rho,
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<(), FadingError> {
        check_positive("alpha_shape", self.shape)?;
        check_positive("beta1_scale", self.scale1)?;
        check_positive("beta2_scale", self.scale2)?;
        check_rho(self.rho)
    }
}

fn ln_gamma_density(shape: f64, scale: f64, x: f64) -> f64 {
    (shape - 1.0) * x.ln()
        - x / scale
        - shape * scale.ln()
        - ln_gamma(shape).expect("validated shape")
}

/// Joint density of two correlated gamma powers.
///
/// ```text
/// f(x₁,x₂) = (x₁x₂)^{(α-1)/2} exp(-(x₁/β₁ + x₂/β₂)/(1-ρ))
///            · I_{α-1}(2√(ρ x₁x₂/(β₁β₂)) / (1-ρ))
///            / (Γ(α) (β₁β₂)^{(α+1)/2} (1-ρ) ρ^{(α-1)/2})
/// ```
///
/// At `ρ = 0` the product of the two gamma marginals is returned.
pub fn bivariate_gamma_pdf(p: &BivariateGammaParams, x1: f64, x2: f64) -> Result<f64, FadingError> {
    p.validate()?;
    check_nonneg("x1", x1)?;
    check_nonneg("x2", x2)?;
    let a = p.shape;
    if x1 == 0.0 || x2 == 0.0 {
        return Ok(if a > 1.0 {
            0.0
        } else if a == 1.0 {
            if p.rho == 0.0 {
                (-x1 / p.scale1 - x2 / p.scale2).exp() / (p.scale1 * p.scale2)
            } else {
                (-(x1 / p.scale1 + x2 / p.scale2) / (1.0 - p.rho)).exp()
                    / (p.scale1 * p.scale2 * (1.0 - p.rho))
            }
        } else {
            f64::INFINITY
        });
    }
    if p.rho == 0.0 {
        return Ok((ln_gamma_density(a, p.scale1, x1) + ln_gamma_density(a, p.scale2, x2)).exp());
    }
    let one_minus = 1.0 - p.rho;
    let u = p.rho * x1 * x2 / (p.scale1 * p.scale2);
    let z = 2.0 * u.sqrt() / one_minus;
    let nu = a - 1.0;
    // (x₁x₂)^{ν/2} I_ν(z) / ρ^{ν/2} = (x₁x₂)^ν (β₁β₂)^{-ν/2} (1-ρ)^{-ν} · [I_ν(z)/(z/2)^ν]
    let ln = nu * (x1 * x2).ln() - 0.5 * nu * (p.scale1 * p.scale2).ln() - nu * one_minus.ln()
        + log_bessel_i_scaled(nu, z)?
        - (x1 / p.scale1 + x2 / p.scale2) / one_minus
        - ln_gamma(a)?
        - 0.5 * (a + 1.0) * (p.scale1 * p.scale2).ln()
        - one_minus.ln();
    Ok(ln.exp())
}

/// Nakagami-m envelope density `2 m^m r^{2m-1} e^{-m r²/Ω} / (Γ(m) Ω^m)`.
pub fn nakagami_envelope_pdf(m: f64, omega: f64, r: f64) -> Result<f64, FadingError> {
    check_fading_figure(m)?;
    check_positive("omega", omega)?;
    check_nonneg("r", r)?;
    if r == 0.0 {
        return Ok(if m == 0.5 {
            2.0 * (0.5 / omega).sqrt() / PI.sqrt()
        } else {
            0.0
        });
    }
    let ln = std::f64::consts::LN_2 + m * (m / omega).ln() + (2.0 * m - 1.0) * r.ln()
        - m * r * r / omega
        - ln_gamma(m)?;
    Ok(ln.exp())
}

/// `ln` of the density of `Y = X₁ + X₂` for correlated gamma powers:
/// `√π / (Γ(m) P^m) · (y/2β)^{m-½} I_{m-½}(βy) e^{-αy}` with `P` the
/// product `s₁s₂(1-ρ)`.
fn ln_power_sum_density(m: f64, ln_scale_product: f64, decay: f64, coupling: f64, y: f64) -> f64 {
    let nu = m - 0.5;
    // (y/2β)^ν I_ν(βy) = (y/2)^{2ν} · I_ν(z)/(z/2)^ν with z = βy
    let bessel_part = if nu == 0.0 {
        0.0
    } else {
        2.0 * nu * (y / 2.0).ln()
    } + log_bessel_i_scaled(nu, coupling * y)
        .expect("validated order and argument");
    0.5 * PI.ln() - ln_gamma(m).expect("validated m") - m * ln_scale_product + bessel_part
        - decay * y
}

/// Density of the combined envelope `r_t = sqrt(r₁² + r₂²)`.
pub fn combined_envelope_pdf(fp: &FadingParams, rt: f64) -> Result<f64, FadingError> {
    check_nonneg("rt", rt)?;
    if rt == 0.0 {
        return Ok(0.0);
    }
    let ln_p = (fp.branch_scale1() * fp.branch_scale2() * (1.0 - fp.rho)).ln();
    let y = rt * rt;
    let ln = ln_power_sum_density(fp.m, ln_p, fp.decay_rate(), fp.coupling_rate(), y);
    Ok(2.0 * rt * ln.exp())
}

/// Density of the combined SNR per symbol `γ = γ₁ + γ₂`.
pub fn combined_snr_pdf(
    sp: &SnrBranchParams,
    m: f64,
    rho: f64,
    g: f64,
) -> Result<f64, FadingError> {
    check_fading_figure(m)?;
    check_rho(rho)?;
    check_nonneg("gamma", g)?;
    if g == 0.0 {
        if m > 0.5 {
            return Ok(0.0);
        }
    }
    // [m²/(γ̄₁γ̄₂(1-ρ))]^m, written as a scale product to share the helper
    let ln_p = (sp.mean_snr1 * sp.mean_snr2 * (1.0 - rho) / (m * m)).ln();
    let ln = ln_power_sum_density(m, ln_p, sp.decay_rate(m, rho), sp.coupling_rate(m, rho), g);
    Ok(ln.exp())
}

/// Combined-SNR density for `m = 1` and equal branch SNRs `γ̄`:
///
/// ```text
/// p(γ) = [exp(-γ/((1+√ρ)γ̄)) - exp(-γ/((1-√ρ)γ̄))] / (2√ρ γ̄)
/// ```
///
/// For `ρ < 1e-5` the equivalent `e^{-γ/((1-ρ)γ̄)} · sinh(u)/u · γ/((1-ρ)γ̄²)`,
/// `u = γ√ρ/((1-ρ)γ̄)`, is used; it is exact and has no `0/0` at `ρ = 0`,
/// where it reduces to the Erlang-2 density `γ e^{-γ/γ̄}/γ̄²`.
pub fn reduced_snr_pdf_m1(gbar: f64, rho: f64, g: f64) -> Result<f64, FadingError> {
    check_positive("gbar", gbar)?;
    check_rho(rho)?;
    check_nonneg("gamma", g)?;
    let a = g / gbar;
    let s = rho.sqrt();
    if rho < SMALL_RHO {
        let u = a * s / (1.0 - rho);
        let sinhc = if u < 1e-8 {
            1.0 + u * u / 6.0
        } else {
            u.sinh() / u
        };
        return Ok((-a / (1.0 - rho)).exp() * sinhc * a / ((1.0 - rho) * gbar));
    }
    // e^{-a/(1+s)} - e^{-a/(1-s)} = e^{-a/(1+s)} · (1 - e^{-2as/(1-ρ)})
    let bracket = (-a / (1.0 + s)).exp() * -(-2.0 * a * s / (1.0 - rho)).exp_m1();
    Ok(bracket / (2.0 * s * gbar))
}

/// Moment generating function of the combined SNR,
/// `[1 - (γ̄₁+γ̄₂)s/m + (1-ρ)γ̄₁γ̄₂s²/m²]^{-m}`.
///
/// Defined for `s <= 0` and for positive `s` below the nearest pole.
pub fn mgf(sp: &SnrBranchParams, m: f64, rho: f64, s: f64) -> Result<f64, FadingError> {
    check_fading_figure(m)?;
    check_rho(rho)?;
    if !s.is_finite() {
        return Err(domain("s", s, "must be finite"));
    }
    let (g1, g2) = (sp.mean_snr1, sp.mean_snr2);
    let lin = (g1 + g2) / m;
    let quad = (1.0 - rho) * g1 * g2 / (m * m);
    if s > 0.0 {
        let disc = (lin * lin - 4.0 * quad).max(0.0);
        let first_pole = (lin - disc.sqrt()) / (2.0 * quad);
        if s >= first_pole {
            return Err(domain("s", s, "outside the MGF region of convergence"));
        }
    }
    let bracket = 1.0 - lin * s + quad * s * s;
    if !(bracket > 0.0) {
        return Err(domain("s", s, "MGF bracket is not positive"));
    }
    Ok((-m * bracket.ln()).exp())
}

fn check_psk_order(order: u32) -> Result<(), FadingError> {
    if order >= 2 && order.is_power_of_two() {
        Ok(())
    } else {
        Err(domain(
            "M_order",
            order as f64,
            "must be a power of two >= 2",
        ))
    }
}

/// Average M-PSK symbol error probability over the correlated combined SNR.
pub fn avg_error_prob_mpsk(
    sp: &SnrBranchParams,
    m: f64,
    rho: f64,
    order: u32,
) -> Result<f64, FadingError> {
    check_fading_figure(m)?;
    check_rho(rho)?;
    check_psk_order(order)?;
    let mf = order as f64;
    let g = (PI / mf).sin().powi(2);
    let upper = (mf - 1.0) * PI / mf;
    let integrand = |theta: f64| {
        let sin2 = theta.sin().powi(2);
        if sin2 == 0.0 {
            0.0
        } else {
            mgf(sp, m, rho, -g / sin2).unwrap_or(0.0)
        }
    };
    let r = integrate(integrand, 0.0, upper, QuadOptions::default())?;
    Ok((r.value / PI).clamp(0.0, 1.0))
}

/// Average bit error probability of Gray-mapped square M-QAM over the
/// combined SNR, via the exact symbol-error MGF expression divided by
/// `log2 M` (the usual one-bit-per-symbol-error approximation).
pub fn avg_ber_square_qam(
    sp: &SnrBranchParams,
    m: f64,
    rho: f64,
    order: u32,
) -> Result<f64, FadingError> {
    check_fading_figure(m)?;
    check_rho(rho)?;
    if !(order >= 4 && order.is_power_of_two() && order.trailing_zeros() % 2 == 0) {
        return Err(domain(
            "M_order",
            order as f64,
            "must be a square QAM order",
        ));
    }
    let mf = order as f64;
    let q = 1.0 - 1.0 / mf.sqrt();
    let g = 1.5 / (mf - 1.0);
    let integrand = |theta: f64| {
        let sin2 = theta.sin().powi(2);
        if sin2 == 0.0 {
            0.0
        } else {
            mgf(sp, m, rho, -g / sin2).unwrap_or(0.0)
        }
    };
    let opts = QuadOptions::default();
    let half = integrate(integrand, 0.0, PI / 2.0, opts)?.value;
    let quarter = integrate(integrand, 0.0, PI / 4.0, opts)?.value;
    let ser = 4.0 * q / PI * half - 4.0 * q * q / PI * quarter;
    Ok((ser / mf.log2()).clamp(0.0, 1.0))
}

/// Result of the closed-form high-SNR approximation, which can exceed 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxProbability {
    pub value: f64,
    pub unclamped: f64,
    pub clamped: bool,
}

/// High-SNR closed-form M-PSK error probability over correlated Nakagami
/// fading:
///
/// ```text
/// Γ(2m+½) / (ε_m √π Γ(2m+1)) · (1-k²)^{-m} · [1 / ((γ̄/m) sin²(π/M))]^{2m}
/// ```
///
/// `eps_m` is a caller-supplied normalization (use 1 when unknown).
pub fn miyagaki_error_prob(
    m: f64,
    k_corr: f64,
    gbar: f64,
    order: u32,
    eps_m: f64,
) -> Result<ApproxProbability, FadingError> {
    check_fading_figure(m)?;
    if !(0.0..1.0).contains(&k_corr) {
        return Err(domain("k_corr", k_corr, "must satisfy 0 <= k < 1"));
    }
    check_positive("gbar", gbar)?;
    check_positive("eps_m", eps_m)?;
    check_psk_order(order)?;
    let sin2 = (PI / order as f64).sin().powi(2);
    let ln = ln_gamma(2.0 * m + 0.5)?
        - eps_m.ln()
        - 0.5 * PI.ln()
        - ln_gamma(2.0 * m + 1.0)?
        - m * (1.0 - k_corr * k_corr).ln()
        - 2.0 * m * (gbar / m * sin2).ln();
    let unclamped = ln.exp();
    let value = unclamped.clamp(0.0, 1.0);
    Ok(ApproxProbability {
        value,
        unclamped,
        clamped: value != unclamped,
    })
}
