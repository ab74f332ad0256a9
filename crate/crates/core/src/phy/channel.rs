use std::f64::consts::PI;

use num_complex::Complex64;
use rand_distr::StandardNormal;

use super::{OfdmConfig, PhyError};
use crate::fading::FadingParams;

/// Per-subcarrier complex gains for the data subcarriers plus the noise
/// variance that sets the operating SNR (unit-energy symbols).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub gains: Vec<Complex64>,
    pub noise_var: f64,
}

impl ChannelRealization {
    pub fn new(gains: Vec<Complex64>, noise_var: f64) -> Result<Self, PhyError> {
        if gains.is_empty() {
            return Err(PhyError::Config("channel has no subcarriers".into()));
        }
        if !(noise_var > 0.0 && noise_var.is_finite()) {
            return Err(PhyError::Config(format!(
                "noise variance must be positive, got {noise_var}"
            )));
        }
        Ok(Self { gains, noise_var })
    }

    pub fn flat(n: usize, snr_db: f64) -> Result<Self, PhyError> {
        Self::new(vec![Complex64::new(1.0, 0.0); n], noise_var_for(snr_db))
    }

    /// The same gains at a different operating SNR.
    pub fn with_snr_db(mut self, snr_db: f64) -> Self {
        self.noise_var = noise_var_for(snr_db);
        self
    }

    /// Instantaneous per-subcarrier SNR `|hᵢ|²·Es/N₀` (linear).
    pub fn snrs(&self) -> Vec<f64> {
        self.gains
            .iter()
            .map(|g| g.norm_sqr() / self.noise_var)
            .collect()
    }

    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }
}

/// `N₀` for unit-energy symbols at the given `Es/N₀` in dB.
pub fn noise_var_for(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

pub(crate) fn complex_gaussian<R: rand::Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let s = (0.5 * var).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// Tap powers of the exponential power-delay profile, summing to one.
pub fn power_delay_profile(cfg: &OfdmConfig, n_taps: usize) -> Vec<f64> {
    let decay = cfg.rms_delay_spread_ns();
    let spacing = cfg.tap_spacing_ns();
    let raw: Vec<f64> = (0..n_taps)
        .map(|k| (-(k as f64) * spacing / decay).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|p| p / total).collect()
}

/// Frequency-selective Rayleigh channel from a tapped delay line.
///
/// Taps sit at multiples of the sample period `1/bandwidth`; the gains are
/// the tap vector's DFT over the full subcarrier grid (data then pilots),
/// truncated to the data subcarriers. Noise variance is 1 (0 dB).
pub fn rayleigh_channel<R: rand::Rng + ?Sized>(
    cfg: &OfdmConfig,
    n_taps: usize,
    rng: &mut R,
) -> Result<ChannelRealization, PhyError> {
    if n_taps == 0 {
        return Err(PhyError::Config("n_taps must be at least 1".into()));
    }
    let pdp = power_delay_profile(cfg, n_taps);
    let taps: Vec<Complex64> = pdp.iter().map(|&p| complex_gaussian(rng, p)).collect();
    Ok(ChannelRealization {
        gains: taps_to_gains(&taps, cfg),
        noise_var: 1.0,
    })
}

/// DFT of a tap vector evaluated at the data subcarriers.
pub fn taps_to_gains(taps: &[Complex64], cfg: &OfdmConfig) -> Vec<Complex64> {
    let grid = cfg.n_grid() as f64;
    (0..cfg.n_data())
        .map(|n| {
            taps.iter()
                .enumerate()
                .map(|(k, &h)| h * Complex64::from_polar(1.0, -2.0 * PI * (k * n) as f64 / grid))
                .sum()
        })
        .collect()
}

/// Number of real Gaussian components per branch, `2m`, when `m` is a
/// positive integer or half-integer.
fn gaussian_components(m: f64) -> Result<usize, PhyError> {
    let two_m = 2.0 * m;
    let rounded = two_m.round();
    if rounded >= 1.0 && (two_m - rounded).abs() < 1e-9 && rounded <= 1e6 {
        Ok(rounded as usize)
    } else {
        Err(PhyError::UnsupportedFadingFigure(m))
    }
}

/// Draws correlated Nakagami envelope pairs.
///
/// Each branch power is a sum of `2m` squared zero-mean Gaussians of variance
/// `Ω/(2m)`; component pairs share Gaussian correlation `√ρ`, which makes the
/// power correlation exactly `ρ`.
pub struct NakagamiPairSampler {
    components: usize,
    scale1: f64,
    scale2: f64,
    corr: f64,
    corr_c: f64,
}

impl NakagamiPairSampler {
    pub fn new(fp: &FadingParams) -> Result<Self, PhyError> {
        let components = gaussian_components(fp.m())?;
        let corr = fp.rho().sqrt();
        Ok(Self {
            components,
            scale1: (fp.omega1() / components as f64).sqrt(),
            scale2: (fp.omega2() / components as f64).sqrt(),
            corr,
            corr_c: (1.0 - fp.rho()).sqrt(),
        })
    }

    /// Branch powers `(r₁², r₂²)`.
    pub fn sample_powers<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let (mut p1, mut p2) = (0.0, 0.0);
        for _ in 0..self.components {
            let z1: f64 = rng.sample(StandardNormal);
            let z2: f64 = rng.sample(StandardNormal);
            let x1 = self.scale1 * z1;
            let x2 = self.scale2 * (self.corr * z1 + self.corr_c * z2);
            p1 += x1 * x1;
            p2 += x2 * x2;
        }
        (p1, p2)
    }

    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let (p1, p2) = self.sample_powers(rng);
        (p1.sqrt(), p2.sqrt())
    }
}

pub fn correlated_nakagami_pair<R: rand::Rng + ?Sized>(
    fp: &FadingParams,
    n: usize,
    rng: &mut R,
) -> Result<Vec<(f64, f64)>, PhyError> {
    let sampler = NakagamiPairSampler::new(fp)?;
    Ok((0..n).map(|_| sampler.sample(rng)).collect())
}

pub(crate) fn random_phase<R: rand::Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::from_polar(1.0, rng.random_range(0.0..2.0 * PI))
}
