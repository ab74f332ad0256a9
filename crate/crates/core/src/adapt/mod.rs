//! Link-adaptation protocol: receiver-side CQI construction, base-station MCS
//! selection, and the vertical-shift feedback reduction.
//!
//! A full report carries the quadratic `SNR_eff(β_dB)` curve of each class. A
//! shift report carries only the band-average SNR; the base station then
//! moves its stored reference curves up or down by the change in band
//! average and reuses their shape.

mod trace;

use thiserror::Error;

use crate::eesm::{
    fit_quadratic, single_set_curve, snr_eff_vs_beta_curve, standard_beta_grid, AwgnRefTable,
    BlockPartition, Branch, EesmError, McsProfile, QuadraticCurve,
};
use crate::phy::PhyError;

pub use trace::{
    feedback_scalars, rayleigh_schedule, run_adaptation_trace, run_fixed_trace, scaled_schedule,
    trace_csv, TraceOptions, TraceRow, TRACE_CSV_HEADER,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AdaptError {
    #[error("shift report received before any full report")]
    NoReference,
    #[error("expected a {expected} report")]
    WrongReportKind { expected: &'static str },
    #[error("invalid MCS ladder: {0}")]
    InvalidLadder(String),
    #[error("SNR vector has {got} entries, partition has {expected}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("invalid option: {0}")]
    Config(String),
    #[error("malformed CQI line: {0}")]
    Wire(String),
    #[error(transparent)]
    Eesm(#[from] EesmError),
    #[error(transparent)]
    Phy(#[from] PhyError),
}

/// Scalars in a full report: six coefficients, two domain bounds, one average.
pub const FULL_REPORT_SCALARS: usize = 9;
/// Scalars in a shift report: frame index and band average.
pub const SHIFT_REPORT_SCALARS: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub enum CqiReport {
    Full {
        frame_index: u64,
        audio_curve: QuadraticCurve,
        video_curve: QuadraticCurve,
        band_avg_snr_db: f64,
    },
    Shift {
        frame_index: u64,
        band_avg_snr_db: f64,
    },
}

impl CqiReport {
    pub fn frame_index(&self) -> u64 {
        match self {
            Self::Full { frame_index, .. } | Self::Shift { frame_index, .. } => *frame_index,
        }
    }

    pub fn band_avg_snr_db(&self) -> f64 {
        match self {
            Self::Full {
                band_avg_snr_db, ..
            }
            | Self::Shift {
                band_avg_snr_db, ..
            } => *band_avg_snr_db,
        }
    }

    pub fn is_full(&self) -> bool {
        matches!(self, Self::Full { .. })
    }

    pub fn scalar_count(&self) -> usize {
        if self.is_full() {
            FULL_REPORT_SCALARS
        } else {
            SHIFT_REPORT_SCALARS
        }
    }

    /// `frame,full,a1,b1,c1,a2,b2,c2,avg` or `frame,shift,avg`. The fit domain
    /// is not written; it is the standard β grid's span on both ends.
    pub fn to_wire(&self) -> String {
        match self {
            Self::Full {
                frame_index,
                audio_curve: a,
                video_curve: v,
                band_avg_snr_db,
            } => format!(
                "{frame_index},full,{},{},{},{},{},{},{band_avg_snr_db}",
                a.a, a.b, a.c, v.a, v.b, v.c
            ),
            Self::Shift {
                frame_index,
                band_avg_snr_db,
            } => format!("{frame_index},shift,{band_avg_snr_db}"),
        }
    }

    pub fn from_wire(line: &str) -> Result<Self, AdaptError> {
        let fields: Vec<&str> = line.trim().split(',').collect();
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| AdaptError::Wire(format!("not a number: {s:?}")))
        };
        let frame_index = fields
            .first()
            .and_then(|f| f.parse::<u64>().ok())
            .ok_or_else(|| AdaptError::Wire("missing frame index".into()))?;
        match (fields.get(1).copied(), fields.len()) {
            (Some("full"), 9) => {
                let v: Vec<f64> = fields[2..]
                    .iter()
                    .map(|f| num(f))
                    .collect::<Result<_, _>>()?;
                let grid = standard_beta_grid();
                let domain = (grid[0], grid[grid.len() - 1]);
                Ok(Self::Full {
                    frame_index,
                    audio_curve: QuadraticCurve::new(v[0], v[1], v[2], domain),
                    video_curve: QuadraticCurve::new(v[3], v[4], v[5], domain),
                    band_avg_snr_db: v[6],
                })
            }
            (Some("shift"), 3) => Ok(Self::Shift {
                frame_index,
                band_avg_snr_db: num(fields[2])?,
            }),
            _ => Err(AdaptError::Wire(line.to_string())),
        }
    }
}

/// Arithmetic mean of the per-subcarrier SNRs in dB. Zero SNRs are floored
/// at the smallest positive double so the mean stays finite.
pub fn band_average_db(snrs: &[f64]) -> f64 {
    snrs.iter()
        .map(|&g| 10.0 * g.max(f64::MIN_POSITIVE).log10())
        .sum::<f64>()
        / snrs.len() as f64
}

/// How a full report builds each class's `SNR_eff(β_dB)` curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CurveMode {
    /// Classical EESM over the class's own subcarriers.
    #[default]
    PerClass,
    /// Two-β EESM over the whole block, sweeping the class's β while the other
    /// set stays at its current MCS's β.
    Mixed,
}

/// Receiver side: fits both class curves over the standard β grid.
pub fn build_full_report(
    snrs: &[f64],
    part: &BlockPartition,
    frame_index: u64,
) -> Result<CqiReport, AdaptError> {
    build_full_report_with(snrs, part, frame_index, CurveMode::PerClass)
}

pub fn build_full_report_with(
    snrs: &[f64],
    part: &BlockPartition,
    frame_index: u64,
    mode: CurveMode,
) -> Result<CqiReport, AdaptError> {
    if snrs.len() != part.len() {
        return Err(AdaptError::SizeMismatch {
            expected: part.len(),
            got: snrs.len(),
        });
    }
    let (audio, video) = part.split(snrs)?;
    let grid = standard_beta_grid();
    let (audio_pts, video_pts) = match mode {
        CurveMode::PerClass => (
            single_set_curve(&audio, &grid)?,
            single_set_curve(&video, &grid)?,
        ),
        CurveMode::Mixed => (
            snr_eff_vs_beta_curve(&audio, &video, part.video_mcs.beta, Branch::Audio, &grid)?,
            snr_eff_vs_beta_curve(&audio, &video, part.audio_mcs.beta, Branch::Video, &grid)?,
        ),
    };
    Ok(CqiReport::Full {
        frame_index,
        audio_curve: fit_quadratic(&audio_pts)?,
        video_curve: fit_quadratic(&video_pts)?,
        band_avg_snr_db: band_average_db(snrs),
    })
}

pub fn build_shift_report(snrs: &[f64], frame_index: u64) -> Result<CqiReport, AdaptError> {
    if snrs.is_empty() {
        return Err(AdaptError::Eesm(EesmError::Empty("subcarrier")));
    }
    Ok(CqiReport::Shift {
        frame_index,
        band_avg_snr_db: band_average_db(snrs),
    })
}

/// One ladder rung: an MCS and the effective SNR (dB) it needs.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderEntry {
    pub mcs: McsProfile,
    pub threshold_db: f64,
}

/// MCS options in increasing modulation order with strictly increasing
/// required effective SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct McsLadder {
    entries: Vec<LadderEntry>,
}

impl McsLadder {
    pub fn new(entries: Vec<LadderEntry>) -> Result<Self, AdaptError> {
        if entries.is_empty() {
            return Err(AdaptError::InvalidLadder("ladder is empty".into()));
        }
        for w in entries.windows(2) {
            if w[1].mcs.modulation_order() <= w[0].mcs.modulation_order() {
                return Err(AdaptError::InvalidLadder(
                    "modulation orders must strictly increase".into(),
                ));
            }
            if !(w[1].threshold_db > w[0].threshold_db) {
                return Err(AdaptError::InvalidLadder(format!(
                    "threshold of {} ({} dB) does not exceed that of {} ({} dB)",
                    w[1].mcs.name, w[1].threshold_db, w[0].mcs.name, w[0].threshold_db
                )));
            }
        }
        if entries.iter().any(|e| !e.threshold_db.is_finite()) {
            return Err(AdaptError::InvalidLadder("non-finite threshold".into()));
        }
        Ok(Self { entries })
    }

    /// Thresholds read off AWGN tables at `target_ber`.
    pub fn from_tables(
        profiles: &[McsProfile],
        tables: &[AwgnRefTable],
        target_ber: f64,
    ) -> Result<Self, AdaptError> {
        if profiles.len() != tables.len() {
            return Err(AdaptError::InvalidLadder(
                "one AWGN table per MCS required".into(),
            ));
        }
        let entries = profiles
            .iter()
            .zip(tables)
            .map(|(mcs, t)| {
                let threshold_db = t.snr_for_ber(target_ber).ok_or_else(|| {
                    AdaptError::InvalidLadder(format!(
                        "table for {} never reaches BER {target_ber}",
                        mcs.name
                    ))
                })?;
                Ok(LadderEntry {
                    mcs: mcs.clone(),
                    threshold_db,
                })
            })
            .collect::<Result<Vec<_>, AdaptError>>()?;
        Self::new(entries)
    }

    pub fn entries(&self) -> &[LadderEntry] {
        &self.entries
    }

    pub fn lowest(&self) -> &LadderEntry {
        &self.entries[0]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub audio: McsProfile,
    pub video: McsProfile,
    pub beta1: f64,
    pub beta2: f64,
    /// Some class fell back to the lowest rung without qualifying.
    pub floor: bool,
}

impl Selection {
    fn new(audio: McsProfile, video: McsProfile, floor: bool) -> Self {
        Self {
            beta1: audio.beta,
            beta2: video.beta,
            audio,
            video,
            floor,
        }
    }
}

/// How shift reports move the reference curves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShiftMode {
    /// By the change in band-average SNR since the reference.
    Delta,
    /// By a constant offset regardless of the report.
    Fixed(f64),
}

pub const DEFAULT_MAX_REFERENCE_AGE: u64 = 64;

/// Base-station state. Single owner; reports are applied in frame order.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptState {
    reference: Option<(u64, QuadraticCurve, QuadraticCurve, f64)>,
    current: Selection,
    ladder: McsLadder,
    pub shift_mode: ShiftMode,
    pub max_reference_age: u64,
}

impl AdaptState {
    /// Starts on the lowest rung for both classes with no reference.
    pub fn new(ladder: McsLadder) -> Self {
        let low = ladder.lowest().mcs.clone();
        Self {
            reference: None,
            current: Selection::new(low.clone(), low, true),
            ladder,
            shift_mode: ShiftMode::Delta,
            max_reference_age: DEFAULT_MAX_REFERENCE_AGE,
        }
    }

    pub fn ladder(&self) -> &McsLadder {
        &self.ladder
    }

    pub fn current_selection(&self) -> &Selection {
        &self.current
    }

    pub fn has_reference(&self) -> bool {
        self.reference.is_some()
    }

    pub fn reference_band_avg_snr_db(&self) -> Option<f64> {
        self.reference.map(|r| r.3)
    }

    /// Whether the receiver must send a full report at `frame_index`.
    pub fn needs_full_report(&self, frame_index: u64) -> bool {
        match self.reference {
            None => true,
            Some((at, ..)) => frame_index.saturating_sub(at) >= self.max_reference_age,
        }
    }

    /// Processes a report, updates the selection and returns it together with
    /// the class curves it was based on.
    pub fn receive(
        &mut self,
        report: &CqiReport,
    ) -> Result<(Selection, (QuadraticCurve, QuadraticCurve)), AdaptError> {
        let curves = match report {
            CqiReport::Full {
                frame_index,
                audio_curve,
                video_curve,
                band_avg_snr_db,
            } => {
                self.reference = Some((*frame_index, *audio_curve, *video_curve, *band_avg_snr_db));
                (*audio_curve, *video_curve)
            }
            CqiReport::Shift { .. } => apply_vertical_shift(self, report)?,
        };
        self.current = select_mcs(self, curves);
        Ok((self.current.clone(), curves))
    }
}

/// Reference curves moved vertically per the state's shift mode.
pub fn apply_vertical_shift(
    state: &AdaptState,
    report: &CqiReport,
) -> Result<(QuadraticCurve, QuadraticCurve), AdaptError> {
    let CqiReport::Shift {
        band_avg_snr_db, ..
    } = report
    else {
        return Err(AdaptError::WrongReportKind { expected: "shift" });
    };
    let (_, audio, video, ref_avg) = state.reference.ok_or(AdaptError::NoReference)?;
    let delta = match state.shift_mode {
        ShiftMode::Delta => band_avg_snr_db - ref_avg,
        ShiftMode::Fixed(d) => d,
    };
    Ok((audio.shifted(delta), video.shifted(delta)))
}

fn pick(ladder: &McsLadder, curve: &QuadraticCurve) -> (usize, bool) {
    ladder
        .entries
        .iter()
        .enumerate()
        .rev()
        .find(|(_, e)| curve.eval(e.mcs.beta_db()) >= e.threshold_db)
        .map_or((0, true), |(i, _)| (i, false))
}

/// Highest rung per class whose predicted effective SNR, read from the class
/// curve at that MCS's own β, meets its threshold. Audio never exceeds video.
pub fn select_mcs(
    state: &AdaptState,
    (audio_curve, video_curve): (QuadraticCurve, QuadraticCurve),
) -> Selection {
    let ladder = &state.ladder;
    let (ai, afloor) = pick(ladder, &audio_curve);
    let (vi, vfloor) = pick(ladder, &video_curve);
    let ai = ai.min(vi);
    Selection::new(
        ladder.entries[ai].mcs.clone(),
        ladder.entries[vi].mcs.clone(),
        afloor || vfloor,
    )
}

/// Predicted effective SNR (dB) of a class curve for an MCS.
pub fn predicted_eff_snr_db(curve: &QuadraticCurve, mcs: &McsProfile) -> f64 {
    curve.eval(mcs.beta_db())
}
