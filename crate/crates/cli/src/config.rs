//! Line-oriented `key = value` experiment configuration.
//!
//! Keys are dotted (`ofdm.n_audio_subcarriers = 52`), `#` starts a comment,
//! unknown or repeated keys are errors. Number lists accept either
//! `start:step:stop` (inclusive) or comma-separated values.

use std::fmt::Write as _;

use sha2::{Digest, Sha256};
use thiserror::Error;

use uelink::adapt::{CurveMode, ShiftMode, DEFAULT_MAX_REFERENCE_AGE};
use uelink::eesm::{McsProfile, Modulation};
use uelink::fading::FadingParams;
use uelink::phy::{ChannelKind, OfdmConfig};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{}{key}: {msg}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: String,
    pub msg: String,
}

impl ConfigError {
    fn at(line: usize, key: &str, msg: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            key: key.to_string(),
            msg: msg.into(),
        }
    }

    fn field(key: &str, msg: impl Into<String>) -> Self {
        Self {
            line: None,
            key: key.to_string(),
            msg: msg.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelChoice {
    Awgn,
    Rayleigh,
    Nakagami,
    NakagamiCombined,
}

impl ChannelChoice {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "awgn" => Self::Awgn,
            "rayleigh" => Self::Rayleigh,
            "nakagami" => Self::Nakagami,
            "nakagami_combined" => Self::NakagamiCombined,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Self::Awgn => "awgn",
            Self::Rayleigh => "rayleigh",
            Self::Nakagami => "nakagami",
            Self::NakagamiCombined => "nakagami_combined",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalyticQuantity {
    NakagamiPdf,
    EnvelopePdf,
    SnrPdf,
    ReducedSnrPdf,
    Mgf,
    ErrorProbability,
}

impl AnalyticQuantity {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "nakagami_pdf" => Self::NakagamiPdf,
            "envelope_pdf" => Self::EnvelopePdf,
            "snr_pdf" => Self::SnrPdf,
            "reduced_snr_pdf" => Self::ReducedSnrPdf,
            "mgf" => Self::Mgf,
            "error_probability" => Self::ErrorProbability,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Self::NakagamiPdf => "nakagami_pdf",
            Self::EnvelopePdf => "envelope_pdf",
            Self::SnrPdf => "snr_pdf",
            Self::ReducedSnrPdf => "reduced_snr_pdf",
            Self::Mgf => "mgf",
            Self::ErrorProbability => "error_probability",
        }
    }
}

/// How the adaptation schedule draws its channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    /// A fresh Rayleigh realization every frame.
    Rayleigh,
    /// One Rayleigh realization replayed with only the average SNR changing.
    Scaled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FadingSpec {
    pub m: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub rho: f64,
}

impl FadingSpec {
    pub fn params(&self) -> Result<FadingParams, ConfigError> {
        self.with_rho(self.rho)
    }

    pub fn with_rho(&self, rho: f64) -> Result<FadingParams, ConfigError> {
        FadingParams::new(self.m, self.omega1, self.omega2, rho)
            .map_err(|e| ConfigError::field("fading", e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub ofdm: OfdmConfig,
    pub audio_mcs: String,
    pub video_mcs: String,
    /// Calibration β per modulation: QPSK, 16QAM, 64QAM.
    pub betas: [f64; 3],
    pub channel: ChannelChoice,
    pub n_taps: usize,
    pub fading: FadingSpec,
    pub sweep_snr_db: Vec<f64>,
    pub sweep_frames: usize,
    pub rho_values: Vec<f64>,
    pub rho_snr_db: Vec<f64>,
    pub rho_frames: usize,
    pub eesm_mcs: Vec<String>,
    pub eesm_awgn_grid_db: Vec<f64>,
    pub eesm_bits_per_point: u64,
    pub eesm_realizations: usize,
    pub eesm_frames_per_realization: usize,
    pub analytic_quantity: AnalyticQuantity,
    pub analytic_grid: Vec<f64>,
    pub analytic_order: u32,
    pub analytic_mean_snr_db: f64,
    pub adapt_frames: usize,
    pub adapt_snr_min_db: f64,
    pub adapt_snr_max_db: f64,
    pub adapt_snr_period: usize,
    pub adapt_schedule: ScheduleKind,
    /// Consecutive frames sharing one Rayleigh realization.
    pub adapt_coherence_frames: usize,
    pub adapt_full_report_period: u64,
    pub adapt_feedback_delay: usize,
    pub adapt_frames_per_step: usize,
    pub adapt_packet_bits: usize,
    pub adapt_target_ber: f64,
    pub adapt_shift_mode: ShiftMode,
    pub adapt_max_reference_age: u64,
    pub adapt_curve_mode: CurveMode,
    pub adapt_awgn_bits_per_point: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            ofdm: OfdmConfig::default(),
            audio_mcs: "16QAM-2/3".into(),
            video_mcs: "64QAM-3/4".into(),
            betas: [
                uelink::eesm::DEFAULT_BETA_QPSK,
                uelink::eesm::DEFAULT_BETA_QAM16,
                uelink::eesm::DEFAULT_BETA_QAM64,
            ],
            channel: ChannelChoice::Rayleigh,
            n_taps: 16,
            fading: FadingSpec {
                m: 1.0,
                omega1: 1.0,
                omega2: 1.0,
                rho: 0.5,
            },
            sweep_snr_db: range(0.0, 2.0, 30.0),
            sweep_frames: 1000,
            rho_values: vec![0.1, 0.5, 0.8],
            rho_snr_db: range(0.0, 2.0, 20.0),
            rho_frames: 1000,
            eesm_mcs: vec!["QPSK-1/2".into(), "16QAM-2/3".into(), "64QAM-3/4".into()],
            eesm_awgn_grid_db: range(-5.0, 0.5, 35.0),
            eesm_bits_per_point: 200_000,
            eesm_realizations: 96,
            eesm_frames_per_realization: 40,
            analytic_quantity: AnalyticQuantity::ErrorProbability,
            analytic_grid: range(0.0, 1.0, 30.0),
            analytic_order: 16,
            analytic_mean_snr_db: 10.0,
            adapt_frames: 500,
            adapt_snr_min_db: 5.0,
            adapt_snr_max_db: 25.0,
            adapt_snr_period: 200,
            adapt_schedule: ScheduleKind::Rayleigh,
            adapt_coherence_frames: 10,
            adapt_full_report_period: 8,
            adapt_feedback_delay: 1,
            adapt_frames_per_step: 4,
            adapt_packet_bits: 128,
            adapt_target_ber: 1e-3,
            adapt_shift_mode: ShiftMode::Delta,
            adapt_max_reference_age: DEFAULT_MAX_REFERENCE_AGE,
            adapt_curve_mode: CurveMode::PerClass,
            adapt_awgn_bits_per_point: 200_000,
        }
    }
}

fn range(start: f64, step: f64, stop: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    (0..n)
        .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
        .collect()
}

fn parse_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s:?}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("not finite: {s:?}"))
    }
}

fn parse_int<T: std::str::FromStr>(s: &str) -> Result<T, String> {
    s.replace('_', "")
        .parse()
        .map_err(|_| format!("not a non-negative integer: {s:?}"))
}

fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let [a, b, c] = parts[..] else {
            return Err(format!("range must be start:step:stop, got {s:?}"));
        };
        let (start, step, stop) = (parse_f64(a)?, parse_f64(b)?, parse_f64(c)?);
        if !(step > 0.0) || stop < start {
            return Err(format!("empty or descending range {s:?}"));
        }
        if (stop - start) / step > 1e6 {
            return Err(format!("range {s:?} has too many points"));
        }
        return Ok(range(start, step, stop));
    }
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(|t| parse_f64(t.trim())).collect()
}

fn fmt_list(v: &[f64]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

const BETA_KEYS: [&str; 3] = ["mcs.qpsk.beta", "mcs.16qam.beta", "mcs.64qam.beta"];

impl ExperimentConfig {
    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "seed" => self.seed = parse_int(value)?,
            "ofdm.n_audio_subcarriers" => self.ofdm.n_audio_subcarriers = parse_int(value)?,
            "ofdm.n_video_subcarriers" => self.ofdm.n_video_subcarriers = parse_int(value)?,
            "ofdm.n_pilots" => self.ofdm.n_pilots = parse_int(value)?,
            "ofdm.guard_interval_ns" => self.ofdm.guard_interval_ns = parse_f64(value)?,
            "ofdm.symbol_duration_us" => self.ofdm.symbol_duration_us = parse_f64(value)?,
            "ofdm.bandwidth_mhz" => self.ofdm.bandwidth_mhz = parse_f64(value)?,
            "partition.audio_mcs" => self.audio_mcs = value.to_string(),
            "partition.video_mcs" => self.video_mcs = value.to_string(),
            k if BETA_KEYS.contains(&k) => {
                let i = BETA_KEYS.iter().position(|b| *b == k).expect("listed");
                self.betas[i] = parse_f64(value)?;
            }
            "channel.kind" => {
                self.channel = ChannelChoice::parse(value).ok_or_else(|| {
                    format!(
                        "unknown channel {value:?} (awgn, rayleigh, nakagami, nakagami_combined)"
                    )
                })?
            }
            "channel.n_taps" => self.n_taps = parse_int(value)?,
            "fading.m" => self.fading.m = parse_f64(value)?,
            "fading.omega1" => self.fading.omega1 = parse_f64(value)?,
            "fading.omega2" => self.fading.omega2 = parse_f64(value)?,
            "fading.rho" => self.fading.rho = parse_f64(value)?,
            "sweep.snr_db" => self.sweep_snr_db = parse_list(value)?,
            "sweep.frames" => self.sweep_frames = parse_int(value)?,
            "rho_sweep.rho" => self.rho_values = parse_list(value)?,
            "rho_sweep.snr_db" => self.rho_snr_db = parse_list(value)?,
            "rho_sweep.frames" => self.rho_frames = parse_int(value)?,
            "eesm.mcs" => {
                self.eesm_mcs = value
                    .split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect()
            }
            "eesm.awgn_grid_db" => self.eesm_awgn_grid_db = parse_list(value)?,
            "eesm.bits_per_point" => self.eesm_bits_per_point = parse_int(value)?,
            "eesm.realizations" => self.eesm_realizations = parse_int(value)?,
            "eesm.frames_per_realization" => self.eesm_frames_per_realization = parse_int(value)?,
            "analytic.quantity" => {
                self.analytic_quantity = AnalyticQuantity::parse(value)
                    .ok_or_else(|| format!("unknown quantity {value:?}"))?
            }
            "analytic.grid" => self.analytic_grid = parse_list(value)?,
            "analytic.order" => self.analytic_order = parse_int(value)?,
            "analytic.mean_snr_db" => self.analytic_mean_snr_db = parse_f64(value)?,
            "adapt.frames" => self.adapt_frames = parse_int(value)?,
            "adapt.snr_min_db" => self.adapt_snr_min_db = parse_f64(value)?,
            "adapt.snr_max_db" => self.adapt_snr_max_db = parse_f64(value)?,
            "adapt.snr_period" => self.adapt_snr_period = parse_int(value)?,
            "adapt.schedule" => {
                self.adapt_schedule = match value {
                    "rayleigh" => ScheduleKind::Rayleigh,
                    "scaled" => ScheduleKind::Scaled,
                    v => return Err(format!("expected rayleigh or scaled, got {v:?}")),
                }
            }
            "adapt.coherence_frames" => self.adapt_coherence_frames = parse_int(value)?,
            "adapt.full_report_period" => self.adapt_full_report_period = parse_int(value)?,
            "adapt.feedback_delay" => self.adapt_feedback_delay = parse_int(value)?,
            "adapt.frames_per_step" => self.adapt_frames_per_step = parse_int(value)?,
            "adapt.packet_bits" => self.adapt_packet_bits = parse_int(value)?,
            "adapt.target_ber" => self.adapt_target_ber = parse_f64(value)?,
            "adapt.shift_mode" => {
                self.adapt_shift_mode = match value {
                    "delta" => ShiftMode::Delta,
                    v => match v.strip_prefix("fixed:") {
                        Some(db) => ShiftMode::Fixed(parse_f64(db.trim())?),
                        None => return Err(format!("expected delta or fixed:<dB>, got {v:?}")),
                    },
                }
            }
            "adapt.max_reference_age" => self.adapt_max_reference_age = parse_int(value)?,
            "adapt.curve_mode" => {
                self.adapt_curve_mode = match value {
                    "per_class" => CurveMode::PerClass,
                    "mixed" => CurveMode::Mixed,
                    v => return Err(format!("expected per_class or mixed, got {v:?}")),
                }
            }
            "adapt.awgn_bits_per_point" => self.adapt_awgn_bits_per_point = parse_int(value)?,
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut seen: Vec<(String, usize)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::at(line_no, line, "expected key = value"));
            };
            let (key, value) = (key.trim(), value.trim());
            if let Some((_, first)) = seen.iter().find(|(k, _)| k == key) {
                return Err(ConfigError::at(
                    line_no,
                    key,
                    format!("repeated (first set on line {first})"),
                ));
            }
            seen.push((key.to_string(), line_no));
            cfg.set(key, value)
                .map_err(|msg| ConfigError::at(line_no, key, msg))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.ofdm
            .validate()
            .map_err(|e| ConfigError::field("ofdm", e.to_string()))?;
        for (key, grid) in [
            ("sweep.snr_db", &self.sweep_snr_db),
            ("rho_sweep.snr_db", &self.rho_snr_db),
            ("eesm.awgn_grid_db", &self.eesm_awgn_grid_db),
            ("analytic.grid", &self.analytic_grid),
        ] {
            if grid.is_empty() {
                return Err(ConfigError::field(key, "grid is empty"));
            }
            if grid.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(ConfigError::field(key, "grid must be strictly increasing"));
            }
        }
        if self.rho_values.is_empty() {
            return Err(ConfigError::field("rho_sweep.rho", "list is empty"));
        }
        for &rho in &self.rho_values {
            self.fading
                .with_rho(rho)
                .map_err(|e| ConfigError::field("rho_sweep.rho", e.msg))?;
        }
        self.fading.params()?;
        for (key, v) in BETA_KEYS.iter().zip(self.betas) {
            if !(v > 0.0) {
                return Err(ConfigError::field(key, "beta must be positive"));
            }
        }
        let audio = self.mcs("partition.audio_mcs", &self.audio_mcs)?;
        let video = self.mcs("partition.video_mcs", &self.video_mcs)?;
        if audio.modulation_order() > video.modulation_order() {
            return Err(ConfigError::field(
                "partition.audio_mcs",
                "audio order must not exceed video order",
            ));
        }
        if self.eesm_mcs.is_empty() {
            return Err(ConfigError::field("eesm.mcs", "list is empty"));
        }
        for name in &self.eesm_mcs {
            self.mcs("eesm.mcs", name)?;
        }
        for (key, v) in [
            ("channel.n_taps", self.n_taps as u64),
            ("sweep.frames", self.sweep_frames as u64),
            ("rho_sweep.frames", self.rho_frames as u64),
            ("eesm.bits_per_point", self.eesm_bits_per_point),
            ("eesm.realizations", self.eesm_realizations as u64),
            (
                "eesm.frames_per_realization",
                self.eesm_frames_per_realization as u64,
            ),
            ("adapt.frames", self.adapt_frames as u64),
            ("adapt.snr_period", self.adapt_snr_period as u64),
            ("adapt.coherence_frames", self.adapt_coherence_frames as u64),
            ("adapt.full_report_period", self.adapt_full_report_period),
            ("adapt.frames_per_step", self.adapt_frames_per_step as u64),
            ("adapt.packet_bits", self.adapt_packet_bits as u64),
            ("adapt.max_reference_age", self.adapt_max_reference_age),
            ("adapt.awgn_bits_per_point", self.adapt_awgn_bits_per_point),
        ] {
            if v == 0 {
                return Err(ConfigError::field(key, "must be at least 1"));
            }
        }
        if self.eesm_realizations < 8 {
            return Err(ConfigError::field(
                "eesm.realizations",
                "calibration needs at least 8 realizations",
            ));
        }
        if self.adapt_feedback_delay > 1 {
            return Err(ConfigError::field("adapt.feedback_delay", "must be 0 or 1"));
        }
        if !(self.adapt_target_ber > 0.0 && self.adapt_target_ber < 0.5) {
            return Err(ConfigError::field(
                "adapt.target_ber",
                "must lie in (0, 0.5)",
            ));
        }
        if self.adapt_snr_max_db < self.adapt_snr_min_db {
            return Err(ConfigError::field(
                "adapt.snr_max_db",
                "below adapt.snr_min_db",
            ));
        }
        if ![2, 4, 8, 16, 32, 64].contains(&self.analytic_order) {
            return Err(ConfigError::field(
                "analytic.order",
                "must be a power of two between 2 and 64",
            ));
        }
        Ok(())
    }

    /// Resolves a built-in MCS name with the configured β.
    pub fn mcs(&self, key: &str, name: &str) -> Result<McsProfile, ConfigError> {
        let base = McsProfile::lookup(name)
            .ok_or_else(|| ConfigError::field(key, format!("unknown MCS {name:?}")))?;
        let beta = match base.modulation {
            Modulation::Qpsk => self.betas[0],
            Modulation::Qam16 => self.betas[1],
            Modulation::Qam64 => self.betas[2],
        };
        base.with_beta(beta)
            .map_err(|e| ConfigError::field(key, e.to_string()))
    }

    /// Built-in ladder with configured β values.
    pub fn ladder_profiles(&self) -> Vec<McsProfile> {
        McsProfile::builtin()
            .into_iter()
            .map(|p| self.mcs("mcs", &p.name).expect("builtin names resolve"))
            .collect()
    }

    pub fn channel_kind(&self) -> Result<ChannelKind, ConfigError> {
        Ok(match self.channel {
            ChannelChoice::Awgn => ChannelKind::Awgn,
            ChannelChoice::Rayleigh => ChannelKind::Rayleigh {
                n_taps: self.n_taps,
            },
            ChannelChoice::Nakagami => ChannelKind::Nakagami(self.fading.params()?),
            ChannelChoice::NakagamiCombined => ChannelKind::NakagamiCombined(self.fading.params()?),
        })
    }

    /// Every key with its resolved value, one per line in a fixed order.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        put("seed", self.seed.to_string());
        put(
            "ofdm.n_audio_subcarriers",
            self.ofdm.n_audio_subcarriers.to_string(),
        );
        put(
            "ofdm.n_video_subcarriers",
            self.ofdm.n_video_subcarriers.to_string(),
        );
        put("ofdm.n_pilots", self.ofdm.n_pilots.to_string());
        put(
            "ofdm.guard_interval_ns",
            self.ofdm.guard_interval_ns.to_string(),
        );
        put(
            "ofdm.symbol_duration_us",
            self.ofdm.symbol_duration_us.to_string(),
        );
        put("ofdm.bandwidth_mhz", self.ofdm.bandwidth_mhz.to_string());
        put("partition.audio_mcs", self.audio_mcs.clone());
        put("partition.video_mcs", self.video_mcs.clone());
        for (k, v) in BETA_KEYS.iter().zip(self.betas) {
            put(k, v.to_string());
        }
        put("channel.kind", self.channel.name().into());
        put("channel.n_taps", self.n_taps.to_string());
        put("fading.m", self.fading.m.to_string());
        put("fading.omega1", self.fading.omega1.to_string());
        put("fading.omega2", self.fading.omega2.to_string());
        put("fading.rho", self.fading.rho.to_string());
        put("sweep.snr_db", fmt_list(&self.sweep_snr_db));
        put("sweep.frames", self.sweep_frames.to_string());
        put("rho_sweep.rho", fmt_list(&self.rho_values));
        put("rho_sweep.snr_db", fmt_list(&self.rho_snr_db));
        put("rho_sweep.frames", self.rho_frames.to_string());
        put("eesm.mcs", self.eesm_mcs.join(","));
        put("eesm.awgn_grid_db", fmt_list(&self.eesm_awgn_grid_db));
        put("eesm.bits_per_point", self.eesm_bits_per_point.to_string());
        put("eesm.realizations", self.eesm_realizations.to_string());
        put(
            "eesm.frames_per_realization",
            self.eesm_frames_per_realization.to_string(),
        );
        put("analytic.quantity", self.analytic_quantity.name().into());
        put("analytic.grid", fmt_list(&self.analytic_grid));
        put("analytic.order", self.analytic_order.to_string());
        put(
            "analytic.mean_snr_db",
            self.analytic_mean_snr_db.to_string(),
        );
        put("adapt.frames", self.adapt_frames.to_string());
        put("adapt.snr_min_db", self.adapt_snr_min_db.to_string());
        put("adapt.snr_max_db", self.adapt_snr_max_db.to_string());
        put("adapt.snr_period", self.adapt_snr_period.to_string());
        put(
            "adapt.schedule",
            match self.adapt_schedule {
                ScheduleKind::Rayleigh => "rayleigh".into(),
                ScheduleKind::Scaled => "scaled".into(),
            },
        );
        put(
            "adapt.coherence_frames",
            self.adapt_coherence_frames.to_string(),
        );
        put(
            "adapt.full_report_period",
            self.adapt_full_report_period.to_string(),
        );
        put(
            "adapt.feedback_delay",
            self.adapt_feedback_delay.to_string(),
        );
        put(
            "adapt.frames_per_step",
            self.adapt_frames_per_step.to_string(),
        );
        put("adapt.packet_bits", self.adapt_packet_bits.to_string());
        put("adapt.target_ber", self.adapt_target_ber.to_string());
        put(
            "adapt.shift_mode",
            match self.adapt_shift_mode {
                ShiftMode::Delta => "delta".into(),
                ShiftMode::Fixed(d) => format!("fixed:{d}"),
            },
        );
        put(
            "adapt.max_reference_age",
            self.adapt_max_reference_age.to_string(),
        );
        put(
            "adapt.curve_mode",
            match self.adapt_curve_mode {
                CurveMode::PerClass => "per_class".into(),
                CurveMode::Mixed => "mixed".into(),
            },
        );
        put(
            "adapt.awgn_bits_per_point",
            self.adapt_awgn_bits_per_point.to_string(),
        );
        out
    }

    /// SHA-256 of the canonical form, lowercase hex.
    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical().as_bytes()).iter().fold(
            String::with_capacity(64),
            |mut s, b| {
                let _ = write!(s, "{b:02x}");
                s
            },
        )
    }
}
