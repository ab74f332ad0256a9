use std::fmt::Write as _;

use super::{
    build_full_report_with, build_shift_report, predicted_eff_snr_db, AdaptError, AdaptState,
    CurveMode, Selection, FULL_REPORT_SCALARS, SHIFT_REPORT_SCALARS,
};
use crate::eesm::{BlockPartition, McsProfile};
use crate::phy::{
    rayleigh_channel, simulate_on_channel, ChannelRealization, OfdmConfig, SimRng, Stream,
    DEFAULT_PACKET_BITS,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceOptions {
    /// Every `full_report_period`-th frame carries a full report.
    pub full_report_period: u64,
    /// Frames between a report and the transmission it governs (0 or 1).
    pub feedback_delay: usize,
    /// Monte-Carlo frames simulated per schedule entry.
    pub frames_per_step: usize,
    pub packet_bits: usize,
    pub curve_mode: CurveMode,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            full_report_period: 1,
            feedback_delay: 1,
            frames_per_step: 4,
            packet_bits: DEFAULT_PACKET_BITS,
            curve_mode: CurveMode::PerClass,
        }
    }
}

impl TraceOptions {
    fn validate(&self) -> Result<(), AdaptError> {
        if self.full_report_period == 0 {
            return Err(AdaptError::Config(
                "full_report_period must be at least 1".into(),
            ));
        }
        if self.feedback_delay > 1 {
            return Err(AdaptError::Config("feedback_delay must be 0 or 1".into()));
        }
        if self.frames_per_step == 0 || self.packet_bits == 0 {
            return Err(AdaptError::Config(
                "frames_per_step and packet_bits must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub frame: u64,
    pub full_report: bool,
    pub feedback_scalars: usize,
    pub audio_mcs: String,
    pub video_mcs: String,
    /// Video-class effective SNR predicted for the transmitted selection;
    /// absent before the first report takes effect.
    pub pred_eff_snr_db: Option<f64>,
    pub realized_ber_audio: f64,
    pub realized_ber_video: f64,
    /// Bits in error-free packets, summed over the frame's Monte-Carlo repeats.
    pub delivered_bits: u64,
}

fn transmit_row(
    part: &BlockPartition,
    ch: &ChannelRealization,
    frame: u64,
    audio: &McsProfile,
    video: &McsProfile,
    opts: &TraceOptions,
    rng: &SimRng,
) -> Result<TraceRow, AdaptError> {
    let p = part.with_mcs(audio.clone(), video.clone())?;
    let out = simulate_on_channel(&p, ch, opts.frames_per_step, rng, frame, opts.packet_bits)?;
    Ok(TraceRow {
        frame,
        full_report: false,
        feedback_scalars: 0,
        audio_mcs: audio.name.clone(),
        video_mcs: video.name.clone(),
        pred_eff_snr_db: None,
        realized_ber_audio: out.audio.ber,
        realized_ber_video: out.video.ber,
        delivered_bits: out.delivered_bits.0 + out.delivered_bits.1,
    })
}

/// Closed-loop adaptation over a channel schedule.
///
/// At frame `k` the receiver reports on channel `k` (full on every
/// `full_report_period`-th frame or when the reference is stale, shift
/// otherwise); the base station updates its selection; frame `k` is sent with
/// the selection made `feedback_delay` frames earlier. Frame `k`'s traffic
/// uses substreams keyed by `k`, so traces with different selections share
/// noise wherever their MCS agree.
pub fn run_adaptation_trace(
    part: &BlockPartition,
    schedule: &[ChannelRealization],
    opts: &TraceOptions,
    state: &mut AdaptState,
    rng: &SimRng,
) -> Result<Vec<TraceRow>, AdaptError> {
    opts.validate()?;
    let mut pending: Option<(Selection, Option<f64>)> = None;
    let mut initial = Some(state.current_selection().clone());
    let mut rows = Vec::with_capacity(schedule.len());
    for (k, ch) in schedule.iter().enumerate() {
        let frame = k as u64;
        let snrs = ch.snrs();
        let full = frame % opts.full_report_period == 0 || state.needs_full_report(frame);
        let report = if full {
            let current = state.current_selection();
            let p = part.with_mcs(current.audio.clone(), current.video.clone())?;
            build_full_report_with(&snrs, &p, frame, opts.curve_mode)?
        } else {
            build_shift_report(&snrs, frame)?
        };
        let (selection, (_, video_curve)) = state.receive(&report)?;
        let prediction = predicted_eff_snr_db(&video_curve, &selection.video);
        let decided = (selection, Some(prediction));
        let (used, pred) = if opts.feedback_delay == 0 {
            decided
        } else {
            let prev = pending.replace(decided);
            match prev {
                Some(p) => p,
                None => (initial.take().expect("first frame"), None),
            }
        };
        let mut row = transmit_row(part, ch, frame, &used.audio, &used.video, opts, rng)?;
        row.full_report = report.is_full();
        row.feedback_scalars = report.scalar_count();
        row.pred_eff_snr_db = pred;
        rows.push(row);
    }
    Ok(rows)
}

/// The same schedule and traffic under one frozen MCS pair.
pub fn run_fixed_trace(
    part: &BlockPartition,
    schedule: &[ChannelRealization],
    audio: &McsProfile,
    video: &McsProfile,
    opts: &TraceOptions,
    rng: &SimRng,
) -> Result<Vec<TraceRow>, AdaptError> {
    opts.validate()?;
    schedule
        .iter()
        .enumerate()
        .map(|(k, ch)| transmit_row(part, ch, k as u64, audio, video, opts, rng))
        .collect()
}

/// Independent Rayleigh realizations, frame `k` at `snr_db[k]`.
pub fn rayleigh_schedule(
    cfg: &OfdmConfig,
    snr_db: &[f64],
    n_taps: usize,
    rng: &SimRng,
) -> Result<Vec<ChannelRealization>, AdaptError> {
    snr_db
        .iter()
        .enumerate()
        .map(|(k, &s)| {
            Ok(
                rayleigh_channel(cfg, n_taps, &mut rng.stream(Stream::Schedule, 0, k as u64))?
                    .with_snr_db(s),
            )
        })
        .collect()
}

/// One channel shape replayed at a sequence of average SNRs.
pub fn scaled_schedule(base: &ChannelRealization, snr_db: &[f64]) -> Vec<ChannelRealization> {
    snr_db
        .iter()
        .map(|&s| base.clone().with_snr_db(s))
        .collect()
}

/// CQI scalars sent over `n_frames` frames: `(vertical-shift mode with the
/// given period, full report every frame)`.
pub fn feedback_scalars(n_frames: u64, period: u64) -> (u64, u64) {
    let fulls = n_frames.div_ceil(period.max(1));
    (
        fulls * FULL_REPORT_SCALARS as u64 + (n_frames - fulls) * SHIFT_REPORT_SCALARS as u64,
        n_frames * FULL_REPORT_SCALARS as u64,
    )
}

pub const TRACE_CSV_HEADER: &str =
    "frame,audio_mcs,video_mcs,pred_eff_snr_db,realized_ber_audio,realized_ber_video";

pub fn trace_csv(rows: &[TraceRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{TRACE_CSV_HEADER}");
    for r in rows {
        let pred = r.pred_eff_snr_db.map(|p| p.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.frame, r.audio_mcs, r.video_mcs, pred, r.realized_ber_audio, r.realized_ber_video
        );
    }
    out
}
