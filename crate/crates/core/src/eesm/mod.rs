//! Two-parameter effective exponential SNR mapping (EESM).
//!
//! An OFDM block carries two subcarrier sets with different constellations.
//! The per-subcarrier SNRs of both sets are compressed into one AWGN-equivalent
//! SNR,
//!
//! ```text
//! γ_eff = -β_out · ln[(Σ_audio e^{-γᵢ/β₁} + Σ_video e^{-γᵢ/β₂}) / (N₁ + N₂)]
//! ```
//!
//! with a per-MCS calibration β for each set. `β_out` is explicit so that the
//! prediction for either set can use its own β; when both sets share one β the
//! mapping reduces to classical single-β EESM.
//!
//! The receiver summarizes its channel as a quadratic in `β_dB` (see
//! [`QuadraticCurve`]) instead of feeding back the full SNR vector.

mod quadratic;
mod table;

use thiserror::Error;

pub use quadratic::{fit_quadratic, CurvePoint, QuadraticCurve};
pub use table::{AwgnRefTable, Lookup};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EesmError {
    #[error("{0} SNR list is empty")]
    Empty(&'static str),
    #[error("non-finite input")]
    NonFinite,
    #[error("negative SNR {0}")]
    NegativeSnr(f64),
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("effective SNR is zero; cannot express it in dB")]
    ZeroEffectiveSnr,
    #[error("beta grid must be nonempty and strictly increasing")]
    BadGrid,
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("quadratic fit is rank deficient (fewer than 3 distinct abscissae)")]
    RankDeficient,
    #[error("{channels} channel samples but {measurements} measurements")]
    LengthMismatch {
        channels: usize,
        measurements: usize,
    },
    #[error("measured error rate {0} outside (0, 1]")]
    BadMeasurement(f64),
    #[error("calibrated beta {beta} pinned to the search boundary [{lo}, {hi}]")]
    Boundary { beta: f64, lo: f64, hi: f64 },
    #[error("invalid MCS: {0}")]
    InvalidMcs(String),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("invalid AWGN table: {0}")]
    InvalidTable(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Square QAM orders the simulator supports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Modulation {
    Qpsk,
    Qam16,
    Qam64,
}

impl Modulation {
    pub fn from_order(order: u32) -> Option<Self> {
        match order {
            4 => Some(Self::Qpsk),
            16 => Some(Self::Qam16),
            64 => Some(Self::Qam64),
            _ => None,
        }
    }

    pub fn order(self) -> u32 {
        match self {
            Self::Qpsk => 4,
            Self::Qam16 => 16,
            Self::Qam64 => 64,
        }
    }

    pub fn bits_per_symbol(self) -> u32 {
        self.order().trailing_zeros()
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Qpsk => "QPSK",
            Self::Qam16 => "16QAM",
            Self::Qam64 => "64QAM",
        }
    }
}

/// Nominal code rate. Carried as metadata; all error rates here are uncoded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CodeRate {
    pub num: u8,
    pub den: u8,
}

impl CodeRate {
    pub const HALF: Self = Self { num: 1, den: 2 };
    pub const TWO_THIRDS: Self = Self { num: 2, den: 3 };
    pub const THREE_QUARTERS: Self = Self { num: 3, den: 4 };

    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl std::fmt::Display for CodeRate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// One modulation and coding scheme with its EESM calibration β (linear).
#[derive(Debug, Clone, PartialEq)]
pub struct McsProfile {
    pub name: String,
    pub modulation: Modulation,
    pub code_rate: CodeRate,
    pub beta: f64,
}

impl McsProfile {
    pub fn new(
        name: impl Into<String>,
        order: u32,
        code_rate: CodeRate,
        beta: f64,
    ) -> Result<Self, EesmError> {
        let modulation = Modulation::from_order(order)
            .ok_or_else(|| EesmError::InvalidMcs(format!("unsupported order {order}")))?;
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(EesmError::InvalidMcs(format!(
                "beta must be positive, got {beta}"
            )));
        }
        Ok(Self {
            name: name.into(),
            modulation,
            code_rate,
            beta,
        })
    }

    pub fn modulation_order(&self) -> u32 {
        self.modulation.order()
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.modulation.bits_per_symbol()
    }

    pub fn beta_db(&self) -> f64 {
        10.0 * self.beta.log10()
    }

    pub fn with_beta(&self, beta: f64) -> Result<Self, EesmError> {
        Self::new(
            self.name.clone(),
            self.modulation_order(),
            self.code_rate,
            beta,
        )
    }

    // Default β values were fitted by `eesm-calibrate` against uncoded BER on
    // the default Rayleigh profile.
    pub fn qpsk() -> Self {
        Self::new("QPSK-1/2", 4, CodeRate::HALF, DEFAULT_BETA_QPSK).expect("valid builtin")
    }

    pub fn qam16() -> Self {
        Self::new("16QAM-2/3", 16, CodeRate::TWO_THIRDS, DEFAULT_BETA_QAM16).expect("valid builtin")
    }

    pub fn qam64() -> Self {
        Self::new(
            "64QAM-3/4",
            64,
            CodeRate::THREE_QUARTERS,
            DEFAULT_BETA_QAM64,
        )
        .expect("valid builtin")
    }

    /// Built-in profiles in increasing modulation order.
    pub fn builtin() -> Vec<Self> {
        vec![Self::qpsk(), Self::qam16(), Self::qam64()]
    }

    /// Resolves a built-in profile by name (`QPSK-1/2`) or modulation label (`QPSK`).
    pub fn lookup(name: &str) -> Option<Self> {
        Self::builtin().into_iter().find(|p| {
            p.name.eq_ignore_ascii_case(name) || p.modulation.label().eq_ignore_ascii_case(name)
        })
    }
}

/// Calibrated with `uelink eesm-calibrate` on the default configuration.
pub const DEFAULT_BETA_QPSK: f64 = 1.49;
pub const DEFAULT_BETA_QAM16: f64 = 7.34;
pub const DEFAULT_BETA_QAM64: f64 = 29.6;

/// Which subcarrier set a β sweep acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Audio,
    Video,
}

/// The split of one OFDM block into a low-order (audio) and a high-order
/// (video) subcarrier set. The two index sets partition `0..N`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockPartition {
    audio_indices: Vec<usize>,
    video_indices: Vec<usize>,
    pub audio_mcs: McsProfile,
    pub video_mcs: McsProfile,
}

impl BlockPartition {
    pub fn new(
        audio_indices: Vec<usize>,
        video_indices: Vec<usize>,
        audio_mcs: McsProfile,
        video_mcs: McsProfile,
    ) -> Result<Self, EesmError> {
        if audio_indices.is_empty() || video_indices.is_empty() {
            return Err(EesmError::InvalidPartition(
                "both subcarrier sets must be nonempty".into(),
            ));
        }
        for (label, set) in [("audio", &audio_indices), ("video", &video_indices)] {
            if set.windows(2).any(|w| w[1] <= w[0]) {
                return Err(EesmError::InvalidPartition(format!(
                    "{label} indices must be strictly increasing"
                )));
            }
        }
        let total = audio_indices.len() + video_indices.len();
        let mut seen = vec![false; total];
        for &i in audio_indices.iter().chain(&video_indices) {
            if i >= total || seen[i] {
                return Err(EesmError::InvalidPartition(format!(
                    "index {i} repeated or outside 0..{total}; sets must partition the block"
                )));
            }
            seen[i] = true;
        }
        let p = Self {
            audio_indices,
            video_indices,
            audio_mcs,
            video_mcs,
        };
        p.check_order()?;
        Ok(p)
    }

    /// Audio on the first `n_audio` subcarriers, video on the rest.
    pub fn contiguous(
        n_audio: usize,
        n_video: usize,
        audio_mcs: McsProfile,
        video_mcs: McsProfile,
    ) -> Result<Self, EesmError> {
        Self::new(
            (0..n_audio).collect(),
            (n_audio..n_audio + n_video).collect(),
            audio_mcs,
            video_mcs,
        )
    }

    fn check_order(&self) -> Result<(), EesmError> {
        if self.audio_mcs.modulation_order() > self.video_mcs.modulation_order() {
            return Err(EesmError::InvalidPartition(format!(
                "audio order {} exceeds video order {}",
                self.audio_mcs.modulation_order(),
                self.video_mcs.modulation_order()
            )));
        }
        Ok(())
    }

    /// Same index sets with a different MCS pair.
    pub fn with_mcs(
        &self,
        audio_mcs: McsProfile,
        video_mcs: McsProfile,
    ) -> Result<Self, EesmError> {
        let p = Self {
            audio_mcs,
            video_mcs,
            ..self.clone()
        };
        p.check_order()?;
        Ok(p)
    }

    pub fn audio_indices(&self) -> &[usize] {
        &self.audio_indices
    }

    pub fn video_indices(&self) -> &[usize] {
        &self.video_indices
    }

    pub fn len(&self) -> usize {
        self.audio_indices.len() + self.video_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Gathers a block-wide vector into its (audio, video) parts.
    pub fn split<T: Copy>(&self, values: &[T]) -> Result<(Vec<T>, Vec<T>), EesmError> {
        if values.len() != self.len() {
            return Err(EesmError::InvalidPartition(format!(
                "vector has {} entries, partition has {}",
                values.len(),
                self.len()
            )));
        }
        Ok((
            self.audio_indices.iter().map(|&i| values[i]).collect(),
            self.video_indices.iter().map(|&i| values[i]).collect(),
        ))
    }
}

fn check_beta(name: &'static str, beta: f64) -> Result<(), EesmError> {
    if !beta.is_finite() {
        return Err(EesmError::NonFinite);
    }
    if beta <= 0.0 {
        return Err(EesmError::NonPositive { name, value: beta });
    }
    Ok(())
}

fn check_snrs(gammas: &[f64]) -> Result<(), EesmError> {
    for &g in gammas {
        if !g.is_finite() {
            return Err(EesmError::NonFinite);
        }
        if g < 0.0 {
            return Err(EesmError::NegativeSnr(g));
        }
    }
    Ok(())
}

/// `-β_out · ln(mean over all subcarriers of e^{-γᵢ/β_set})` via log-sum-exp.
fn exp_mean_snr(groups: &[(&[f64], f64)], beta_out: f64) -> f64 {
    let n: usize = groups.iter().map(|g| g.0.len()).sum();
    let max_t = groups
        .iter()
        .flat_map(|(gs, b)| gs.iter().map(move |g| -g / b))
        .fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = groups
        .iter()
        .flat_map(|(gs, b)| gs.iter().map(move |g| (-g / b - max_t).exp()))
        .sum();
    -beta_out * (max_t + (sum / n as f64).ln())
}

/// Effective SNR (linear) of a two-set block.
pub fn effective_snr(
    gammas_audio: &[f64],
    gammas_video: &[f64],
    beta1: f64,
    beta2: f64,
    beta_out: f64,
) -> Result<f64, EesmError> {
    if gammas_audio.is_empty() {
        return Err(EesmError::Empty("audio"));
    }
    if gammas_video.is_empty() {
        return Err(EesmError::Empty("video"));
    }
    check_snrs(gammas_audio)?;
    check_snrs(gammas_video)?;
    check_beta("beta1", beta1)?;
    check_beta("beta2", beta2)?;
    check_beta("beta_out", beta_out)?;
    Ok(exp_mean_snr(
        &[(gammas_audio, beta1), (gammas_video, beta2)],
        beta_out,
    ))
}

/// Classical single-β EESM over one set of subcarriers.
pub fn effective_snr_single(gammas: &[f64], beta: f64) -> Result<f64, EesmError> {
    if gammas.is_empty() {
        return Err(EesmError::Empty("subcarrier"));
    }
    check_snrs(gammas)?;
    check_beta("beta", beta)?;
    Ok(exp_mean_snr(&[(gammas, beta)], beta))
}

pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// β grid used for CQI curves: 41 points uniformly over `[-10, 20]` dB.
pub fn standard_beta_grid() -> Vec<f64> {
    (0..41).map(|i| -10.0 + 0.75 * i as f64).collect()
}

/// Samples `SNR_eff` (dB) against one set's β (dB), holding the other set's β
/// fixed. The outer β follows the swept set.
pub fn snr_eff_vs_beta_curve(
    gammas_audio: &[f64],
    gammas_video: &[f64],
    fixed_other_beta: f64,
    which: Branch,
    grid_db: &[f64],
) -> Result<Vec<(f64, f64)>, EesmError> {
    if grid_db.is_empty()
        || grid_db.windows(2).any(|w| !(w[1] > w[0]))
        || grid_db.iter().any(|x| !x.is_finite())
    {
        return Err(EesmError::BadGrid);
    }
    grid_db
        .iter()
        .map(|&beta_db| {
            let beta = from_db(beta_db);
            let (b1, b2) = match which {
                Branch::Audio => (beta, fixed_other_beta),
                Branch::Video => (fixed_other_beta, beta),
            };
            let eff = effective_snr(gammas_audio, gammas_video, b1, b2, beta)?;
            if eff <= 0.0 {
                return Err(EesmError::ZeroEffectiveSnr);
            }
            Ok((beta_db, to_db(eff)))
        })
        .collect()
}

/// Classical single-β `SNR_eff` (dB) of one subcarrier set against β (dB).
pub fn single_set_curve(gammas: &[f64], grid_db: &[f64]) -> Result<Vec<(f64, f64)>, EesmError> {
    if grid_db.is_empty()
        || grid_db.windows(2).any(|w| !(w[1] > w[0]))
        || grid_db.iter().any(|x| !x.is_finite())
    {
        return Err(EesmError::BadGrid);
    }
    grid_db
        .iter()
        .map(|&beta_db| {
            let eff = effective_snr_single(gammas, from_db(beta_db))?;
            if eff <= 0.0 {
                return Err(EesmError::ZeroEffectiveSnr);
            }
            Ok((beta_db, to_db(eff)))
        })
        .collect()
}

/// Search interval for β calibration (linear).
pub const CALIBRATION_RANGE: (f64, f64) = (0.1, 100.0);
const CALIBRATION_TOL: f64 = 1e-4;
const CALIBRATION_SCAN_POINTS: usize = 64;
const FLAT_OBJECTIVE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub beta: f64,
    /// Sum of squared log10 error-rate residuals at `beta`.
    pub objective: f64,
    /// The objective did not depend on β (e.g. all channels flat); `beta` is
    /// then the midpoint of the search range.
    pub degenerate: bool,
}

/// Fits one MCS's β so that EESM + AWGN-table lookup reproduces measured
/// error rates over a set of channel realizations.
///
/// Minimizes `Σ (log10 BER_pred(β) - log10 BER_meas)²` by golden-section
/// search over [`CALIBRATION_RANGE`], bracketed by a log-spaced scan.
pub fn calibrate_beta(
    mcs: &McsProfile,
    channel_samples: &[Vec<f64>],
    measured: &[f64],
    table: &AwgnRefTable,
) -> Result<Calibration, EesmError> {
    let _ = mcs;
    if channel_samples.len() != measured.len() {
        return Err(EesmError::LengthMismatch {
            channels: channel_samples.len(),
            measurements: measured.len(),
        });
    }
    if channel_samples.len() < 8 {
        return Err(EesmError::TooFewPoints {
            needed: 8,
            got: channel_samples.len(),
        });
    }
    if let Some(&bad) = measured.iter().find(|&&m| !(m > 0.0 && m <= 1.0)) {
        return Err(EesmError::BadMeasurement(bad));
    }
    for s in channel_samples {
        if s.is_empty() {
            return Err(EesmError::Empty("channel sample"));
        }
        check_snrs(s)?;
    }
    let log_measured: Vec<f64> = measured.iter().map(|m| m.log10()).collect();
    let objective = |beta: f64| -> f64 {
        channel_samples
            .iter()
            .zip(&log_measured)
            .map(|(s, lm)| {
                let eff = exp_mean_snr(&[(s, beta)], beta);
                let pred = table.lookup(to_db(eff.max(f64::MIN_POSITIVE))).ber;
                (pred.log10() - lm).powi(2)
            })
            .sum()
    };

    let (lo, hi) = CALIBRATION_RANGE;
    let ratio = (hi / lo).powf(1.0 / (CALIBRATION_SCAN_POINTS - 1) as f64);
    let scan: Vec<(f64, f64)> = (0..CALIBRATION_SCAN_POINTS)
        .map(|i| {
            let b = if i == CALIBRATION_SCAN_POINTS - 1 {
                hi
            } else {
                lo * ratio.powi(i as i32)
            };
            (b, objective(b))
        })
        .collect();
    let (min_obj, max_obj) = scan
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
            (a.min(p.1), b.max(p.1))
        });
    if max_obj - min_obj < FLAT_OBJECTIVE {
        let mid = 0.5 * (lo + hi);
        return Ok(Calibration {
            beta: mid,
            objective: objective(mid),
            degenerate: true,
        });
    }
    let best = scan
        .iter()
        .enumerate()
        .min_by(|x, y| x.1 .1.total_cmp(&y.1 .1))
        .map(|(i, _)| i)
        .expect("nonempty scan");
    let mut a = scan[best.saturating_sub(1)].0;
    let mut b = scan[(best + 1).min(scan.len() - 1)].0;

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = objective(x1);
    let mut f2 = objective(x2);
    while b - a > CALIBRATION_TOL {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = objective(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = objective(x2);
        }
    }
    let beta = 0.5 * (a + b);
    if beta - lo < 10.0 * CALIBRATION_TOL || hi - beta < 10.0 * CALIBRATION_TOL {
        return Err(EesmError::Boundary { beta, lo, hi });
    }
    Ok(Calibration {
        beta,
        objective: objective(beta),
        degenerate: false,
    })
}
