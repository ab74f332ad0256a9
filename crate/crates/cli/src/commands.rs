use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use uelink::adapt::{
    rayleigh_schedule, run_adaptation_trace, run_fixed_trace, scaled_schedule, trace_csv,
    AdaptError, AdaptState, McsLadder, TraceOptions, TraceRow, FULL_REPORT_SCALARS,
};
use uelink::eesm::{
    calibrate_beta, effective_snr_single, fit_quadratic, from_db, single_set_curve,
    standard_beta_grid, to_db, AwgnRefTable, BlockPartition, Calibration, EesmError, McsProfile,
};
use uelink::fading::{
    avg_ber_square_qam, avg_error_prob_mpsk, combined_envelope_pdf, combined_snr_pdf, mgf,
    nakagami_envelope_pdf, reduced_snr_pdf_m1, FadingError, SnrBranchParams,
};
use uelink::phy::{
    ber_csv, generate_awgn_ref, rayleigh_channel, simulate_block_ber, simulate_on_channel,
    BerRecord, ChannelKind, ChannelRealization, PhyError, SimRng, Stream,
};

use crate::config::{AnalyticQuantity, ConfigError, ExperimentConfig, ScheduleKind};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Numeric(_) => 3,
            Self::Io(_) => 4,
        }
    }
}

macro_rules! numeric_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                Self::Numeric(e.to_string())
            }
        }
    )*};
}
numeric_from!(PhyError, EesmError, FadingError, AdaptError);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    BerSweep,
    RhoSweep,
    EesmCalibrate,
    Analytic,
    AdaptTrace,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::BerSweep => "ber-sweep",
            Self::RhoSweep => "rho-sweep",
            Self::EesmCalibrate => "eesm-calibrate",
            Self::Analytic => "analytic",
            Self::AdaptTrace => "adapt-trace",
        }
    }
}

/// A command's output: the main file plus sibling files keyed by suffix.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub main: String,
    pub extra: Vec<(&'static str, String)>,
}

fn provenance(cmd: Command, cfg: &ExperimentConfig) -> String {
    format!(
        "# uelink {}\n# command: {}\n# seed: {}\n# config_sha256: {}\n",
        env!("CARGO_PKG_VERSION"),
        cmd.name(),
        cfg.seed,
        cfg.hash()
    )
}

/// Runs one command; every emitted file starts with the provenance block.
pub fn execute(cmd: Command, cfg: &ExperimentConfig) -> Result<Artifact, CliError> {
    cfg.validate()?;
    let head = provenance(cmd, cfg);
    let mut art = match cmd {
        Command::BerSweep => Artifact {
            main: ber_sweep(cfg)?,
            extra: vec![],
        },
        Command::RhoSweep => Artifact {
            main: rho_sweep(cfg)?,
            extra: vec![],
        },
        Command::EesmCalibrate => eesm_calibrate(cfg)?,
        Command::Analytic => Artifact {
            main: analytic(cfg)?,
            extra: vec![],
        },
        Command::AdaptTrace => Artifact {
            main: adapt_trace(cfg)?,
            extra: vec![],
        },
    };
    art.main.insert_str(0, &head);
    for (_, body) in &mut art.extra {
        body.insert_str(0, &head);
    }
    Ok(art)
}

fn partition(
    cfg: &ExperimentConfig,
    audio: McsProfile,
    video: McsProfile,
) -> Result<BlockPartition, CliError> {
    Ok(BlockPartition::contiguous(
        cfg.ofdm.n_audio_subcarriers,
        cfg.ofdm.n_video_subcarriers,
        audio,
        video,
    )?)
}

/// The three comparison blocks: all low order, all high order, and the split.
pub fn sweep_scenarios(
    cfg: &ExperimentConfig,
) -> Result<Vec<(&'static str, BlockPartition)>, CliError> {
    let audio = cfg.mcs("partition.audio_mcs", &cfg.audio_mcs)?;
    let video = cfg.mcs("partition.video_mcs", &cfg.video_mcs)?;
    Ok(vec![
        ("equal-low", partition(cfg, audio.clone(), audio.clone())?),
        ("equal-high", partition(cfg, video.clone(), video.clone())?),
        ("unequal", partition(cfg, audio, video)?),
    ])
}

pub fn ber_sweep(cfg: &ExperimentConfig) -> Result<String, CliError> {
    let rng = SimRng::new(cfg.seed);
    let kind = cfg.channel_kind()?;
    let scenarios = sweep_scenarios(cfg)?;
    let mut rows: Vec<(String, BerRecord)> = Vec::new();
    for &snr in &cfg.sweep_snr_db {
        for (name, part) in &scenarios {
            let r = simulate_block_ber(&cfg.ofdm, part, snr, cfg.sweep_frames, &kind, &rng)?;
            rows.push((format!("{name}.audio"), r.audio));
            rows.push((format!("{name}.video"), r.video));
            rows.push((format!("{name}.block"), r.block));
        }
    }
    Ok(ber_csv(&rows))
}

pub const RHO_CSV_HEADER: &str = "snr_db,rho,sim_ber,ci95,bits,analytic_qam_ber,analytic_16psk_ser";

/// 16QAM over the two-branch combined Nakagami channel, one curve per ρ,
/// with the closed-form averages for the same operating points.
pub fn rho_sweep(cfg: &ExperimentConfig) -> Result<String, CliError> {
    let rng = SimRng::new(cfg.seed);
    let qam16 = cfg.mcs("rho_sweep", "16QAM")?;
    let part = partition(cfg, qam16.clone(), qam16)?;
    let mut out = String::new();
    let _ = writeln!(out, "{RHO_CSV_HEADER}");
    for &rho in &cfg.rho_values {
        let fp = cfg.fading.with_rho(rho)?;
        let kind = ChannelKind::NakagamiCombined(fp.clone());
        for &snr in &cfg.rho_snr_db {
            let sim = simulate_block_ber(&cfg.ofdm, &part, snr, cfg.rho_frames, &kind, &rng)?.block;
            let g = from_db(snr);
            let sp = SnrBranchParams::new(fp.omega1() * g, fp.omega2() * g)?;
            let qam = avg_ber_square_qam(&sp, fp.m(), rho, 16)?;
            let psk = avg_error_prob_mpsk(&sp, fp.m(), rho, 16)?;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                snr, rho, sim.ber, sim.ci95_halfwidth, sim.bits_sent, qam, psk
            );
        }
    }
    Ok(out)
}

/// One calibration sample: per-subcarrier SNRs and the measured BER.
#[derive(Debug, Clone)]
pub struct CalibrationSample {
    pub snr_db: f64,
    pub snrs: Vec<f64>,
    pub measured: BerRecord,
}

/// Operating SNRs spread across the MCS's useful range: from where the AWGN
/// error rate is 10% up to where it reaches 1e-4, plus a fading margin.
fn operating_range(table: &AwgnRefTable) -> (f64, f64) {
    let (lo_t, hi_t) = table.snr_range();
    let lo = table.snr_for_ber(0.1).unwrap_or(lo_t);
    let hi = table.snr_for_ber(1e-4).unwrap_or(hi_t) + 6.0;
    (lo, hi)
}

/// Simulates `count` frequency-selective realizations for one MCS.
///
/// Realization `i` uses channel stream `(Channel, 1, first + i)` and traffic
/// keyed `first + i`, so disjoint `first` ranges give independent sets.
pub fn calibration_samples(
    cfg: &ExperimentConfig,
    mcs: &McsProfile,
    table: &AwgnRefTable,
    rng: &SimRng,
    first: u64,
    count: usize,
) -> Result<Vec<CalibrationSample>, CliError> {
    let part = partition(cfg, mcs.clone(), mcs.clone())?;
    let (lo, hi) = operating_range(table);
    (0..count)
        .into_par_iter()
        .map(|i| {
            let key = first + i as u64;
            let snr_db = lo + (hi - lo) * (i as f64 + 0.5) / count as f64;
            let ch: ChannelRealization = rayleigh_channel(
                &cfg.ofdm,
                cfg.n_taps,
                &mut rng.stream(Stream::Channel, 1, key),
            )?
            .with_snr_db(snr_db);
            let r = simulate_on_channel(
                &part,
                &ch,
                cfg.eesm_frames_per_realization,
                rng,
                key,
                cfg.adapt_packet_bits,
            )?;
            Ok(CalibrationSample {
                snr_db,
                snrs: ch.snrs(),
                measured: r.block,
            })
        })
        .collect()
}

/// Fits β from samples, ignoring realizations with no observed errors.
pub fn calibrate_from_samples(
    mcs: &McsProfile,
    samples: &[CalibrationSample],
    table: &AwgnRefTable,
) -> Result<(Calibration, usize), CliError> {
    let used: Vec<&CalibrationSample> = samples
        .iter()
        .filter(|s| s.measured.bit_errors > 0)
        .collect();
    let channels: Vec<Vec<f64>> = used.iter().map(|s| s.snrs.clone()).collect();
    let measured: Vec<f64> = used.iter().map(|s| s.measured.ber).collect();
    Ok((
        calibrate_beta(mcs, &channels, &measured, table)?,
        used.len(),
    ))
}

/// BER predicted by effective-SNR lookup in the AWGN table.
pub fn predicted_ber(snrs: &[f64], beta: f64, table: &AwgnRefTable) -> Result<f64, CliError> {
    let eff = effective_snr_single(snrs, beta)?;
    Ok(table.lookup(to_db(eff.max(f64::MIN_POSITIVE))).ber)
}

/// AWGN tables for the given profiles; table `i` uses seed `seed + i` so
/// profiles do not share noise.
pub fn awgn_tables(
    profiles: &[McsProfile],
    grid: &[f64],
    bits: u64,
    seed: u64,
) -> Result<Vec<AwgnRefTable>, CliError> {
    profiles
        .iter()
        .enumerate()
        .map(|(i, p)| {
            Ok(generate_awgn_ref(
                p,
                grid,
                bits,
                &SimRng::new(seed.wrapping_add(i as u64)),
            )?)
        })
        .collect()
}

const CURVE_REALIZATIONS: usize = 4;

pub fn eesm_calibrate(cfg: &ExperimentConfig) -> Result<Artifact, CliError> {
    let rng = SimRng::new(cfg.seed);
    let profiles: Vec<McsProfile> = cfg
        .eesm_mcs
        .iter()
        .map(|n| cfg.mcs("eesm.mcs", n))
        .collect::<Result<_, _>>()?;
    let tables = awgn_tables(
        &profiles,
        &cfg.eesm_awgn_grid_db,
        cfg.eesm_bits_per_point,
        cfg.seed,
    )?;
    let mut betas = String::from("mcs,beta,beta_db,objective,degenerate,realizations_used\n");
    let mut curves =
        String::from("mcs,realization,snr_db,beta_db,snr_eff_db,fit_snr_eff_db,rms_residual_db\n");
    let mut awgn = String::from("mcs,snr_db,ber,floor\n");
    let grid = standard_beta_grid();
    for (mcs, table) in profiles.iter().zip(&tables) {
        let samples = calibration_samples(cfg, mcs, table, &rng, 0, cfg.eesm_realizations)?;
        let (cal, used) = calibrate_from_samples(mcs, &samples, table)?;
        let _ = writeln!(
            betas,
            "{},{},{},{},{},{}",
            mcs.name,
            cal.beta,
            to_db(cal.beta),
            cal.objective,
            cal.degenerate,
            used
        );
        let step = (samples.len() / CURVE_REALIZATIONS).max(1);
        for (i, s) in samples
            .iter()
            .enumerate()
            .step_by(step)
            .take(CURVE_REALIZATIONS)
        {
            let pts = single_set_curve(&s.snrs, &grid)?;
            let q = fit_quadratic(&pts)?;
            for (b, eff) in pts {
                let _ = writeln!(
                    curves,
                    "{},{},{},{},{},{},{}",
                    mcs.name,
                    i,
                    s.snr_db,
                    b,
                    eff,
                    q.eval(b),
                    q.rms_residual
                );
            }
        }
        for ((snr, ber), floor) in table.points().iter().zip(table.floor_flags()) {
            let _ = writeln!(awgn, "{},{},{},{}", mcs.name, snr, ber, floor);
        }
    }
    Ok(Artifact {
        main: betas,
        extra: vec![(".curves.csv", curves), (".awgn.csv", awgn)],
    })
}

pub fn analytic(cfg: &ExperimentConfig) -> Result<String, CliError> {
    let fp = cfg.fading.params()?;
    let (m, rho) = (fp.m(), fp.rho());
    let gbar = from_db(cfg.analytic_mean_snr_db);
    let sp = SnrBranchParams::new(fp.omega1() * gbar, fp.omega2() * gbar)?;
    let order = cfg.analytic_order;
    let qam = [4, 16, 64].contains(&order);
    let mut out = String::new();
    match cfg.analytic_quantity {
        AnalyticQuantity::ErrorProbability if qam => {
            let _ = writeln!(out, "snr_db,pe_mpsk,ber_square_qam");
        }
        AnalyticQuantity::ErrorProbability => {
            let _ = writeln!(out, "snr_db,pe_mpsk");
        }
        AnalyticQuantity::NakagamiPdf | AnalyticQuantity::EnvelopePdf => {
            let _ = writeln!(out, "r,pdf");
        }
        AnalyticQuantity::SnrPdf | AnalyticQuantity::ReducedSnrPdf => {
            let _ = writeln!(out, "snr,pdf");
        }
        AnalyticQuantity::Mgf => {
            let _ = writeln!(out, "s,mgf");
        }
    }
    for &x in &cfg.analytic_grid {
        match cfg.analytic_quantity {
            AnalyticQuantity::NakagamiPdf => {
                let _ = writeln!(out, "{x},{}", nakagami_envelope_pdf(m, fp.omega1(), x)?);
            }
            AnalyticQuantity::EnvelopePdf => {
                let _ = writeln!(out, "{x},{}", combined_envelope_pdf(&fp, x)?);
            }
            AnalyticQuantity::SnrPdf => {
                let _ = writeln!(out, "{x},{}", combined_snr_pdf(&sp, m, rho, x)?);
            }
            AnalyticQuantity::ReducedSnrPdf => {
                let _ = writeln!(out, "{x},{}", reduced_snr_pdf_m1(gbar, rho, x)?);
            }
            AnalyticQuantity::Mgf => {
                let _ = writeln!(out, "{x},{}", mgf(&sp, m, rho, x)?);
            }
            AnalyticQuantity::ErrorProbability => {
                let g = from_db(x);
                let sp = SnrBranchParams::new(fp.omega1() * g, fp.omega2() * g)?;
                let pe = avg_error_prob_mpsk(&sp, m, rho, order)?;
                if qam {
                    let _ = writeln!(out, "{x},{pe},{}", avg_ber_square_qam(&sp, m, rho, order)?);
                } else {
                    let _ = writeln!(out, "{x},{pe}");
                }
            }
        }
    }
    Ok(out)
}

/// Average SNR of frame `k`: a raised cosine between the configured bounds.
pub fn schedule_snr_db(cfg: &ExperimentConfig) -> Vec<f64> {
    let (lo, hi) = (cfg.adapt_snr_min_db, cfg.adapt_snr_max_db);
    let period = cfg.adapt_snr_period as f64;
    (0..cfg.adapt_frames)
        .map(|k| {
            lo + (hi - lo) * 0.5 * (1.0 - (2.0 * std::f64::consts::PI * k as f64 / period).cos())
        })
        .collect()
}

pub fn adapt_schedule(
    cfg: &ExperimentConfig,
    rng: &SimRng,
) -> Result<Vec<ChannelRealization>, CliError> {
    let snrs = schedule_snr_db(cfg);
    Ok(match cfg.adapt_schedule {
        ScheduleKind::Rayleigh => {
            let n_blocks = snrs.len().div_ceil(cfg.adapt_coherence_frames);
            let blocks = rayleigh_schedule(&cfg.ofdm, &vec![0.0; n_blocks], cfg.n_taps, rng)?;
            snrs.iter()
                .enumerate()
                .map(|(k, &s)| {
                    blocks[k / cfg.adapt_coherence_frames]
                        .clone()
                        .with_snr_db(s)
                })
                .collect()
        }
        ScheduleKind::Scaled => {
            let base = rayleigh_channel(
                &cfg.ofdm,
                cfg.n_taps,
                &mut rng.stream(Stream::Schedule, 1, 0),
            )?;
            scaled_schedule(&base, &snrs)
        }
    })
}

/// Ladder from the built-in profiles with thresholds read off fresh AWGN
/// tables at the target BER.
pub fn adapt_ladder(cfg: &ExperimentConfig) -> Result<McsLadder, CliError> {
    let profiles = cfg.ladder_profiles();
    let tables = awgn_tables(
        &profiles,
        &cfg.eesm_awgn_grid_db,
        cfg.adapt_awgn_bits_per_point,
        cfg.seed,
    )?;
    Ok(McsLadder::from_tables(
        &profiles,
        &tables,
        cfg.adapt_target_ber,
    )?)
}

pub fn trace_options(cfg: &ExperimentConfig) -> TraceOptions {
    TraceOptions {
        full_report_period: cfg.adapt_full_report_period,
        feedback_delay: cfg.adapt_feedback_delay,
        frames_per_step: cfg.adapt_frames_per_step,
        packet_bits: cfg.adapt_packet_bits,
        curve_mode: cfg.adapt_curve_mode,
    }
}

pub fn adapt_state(cfg: &ExperimentConfig, ladder: McsLadder) -> AdaptState {
    let mut state = AdaptState::new(ladder);
    state.shift_mode = cfg.adapt_shift_mode;
    state.max_reference_age = cfg.adapt_max_reference_age;
    state
}

/// Bits in error-free packets per microsecond of air time (Mb/s).
pub fn goodput_mbps(rows: &[TraceRow], cfg: &ExperimentConfig) -> f64 {
    let bits: u64 = rows.iter().map(|r| r.delivered_bits).sum();
    let symbols = (rows.len() * cfg.adapt_frames_per_step).max(1) as f64;
    bits as f64 / (symbols * cfg.ofdm.symbol_duration_us)
}

/// Goodput of every frozen ladder pair with audio order not above video.
pub fn fixed_baselines(
    cfg: &ExperimentConfig,
    ladder: &McsLadder,
    part: &BlockPartition,
    schedule: &[ChannelRealization],
    rng: &SimRng,
) -> Result<Vec<(String, String, f64)>, CliError> {
    let opts = trace_options(cfg);
    let rungs = ladder.entries();
    let mut out = Vec::new();
    for (i, a) in rungs.iter().enumerate() {
        for v in &rungs[i..] {
            let rows = run_fixed_trace(part, schedule, &a.mcs, &v.mcs, &opts, rng)?;
            out.push((
                a.mcs.name.clone(),
                v.mcs.name.clone(),
                goodput_mbps(&rows, cfg),
            ));
        }
    }
    Ok(out)
}

pub fn adapt_trace(cfg: &ExperimentConfig) -> Result<String, CliError> {
    let rng = SimRng::new(cfg.seed);
    let ladder = adapt_ladder(cfg)?;
    let schedule = adapt_schedule(cfg, &rng)?;
    let opts = trace_options(cfg);
    let audio = cfg.mcs("partition.audio_mcs", &cfg.audio_mcs)?;
    let video = cfg.mcs("partition.video_mcs", &cfg.video_mcs)?;
    let part = partition(cfg, audio.clone(), video.clone())?;
    let mut state = adapt_state(cfg, ladder.clone());
    let rows = run_adaptation_trace(&part, &schedule, &opts, &mut state, &rng)?;
    let fixed = fixed_baselines(cfg, &ladder, &part, &schedule, &rng)?;

    let mut out = trace_csv(&rows);
    let sent: u64 = rows.iter().map(|r| r.feedback_scalars as u64).sum();
    let full_every_frame = rows.len() as u64 * FULL_REPORT_SCALARS as u64;
    let fulls = rows.iter().filter(|r| r.full_report).count();
    let _ = writeln!(
        out,
        "# summary: goodput_mbps adaptive {:.4}",
        goodput_mbps(&rows, cfg)
    );
    for (audio, video, g) in &fixed {
        let _ = writeln!(out, "# summary: goodput_mbps fixed {audio}/{video} {g:.4}");
    }
    let _ = writeln!(
        out,
        "# summary: feedback_scalars vertical_shift {sent} ({fulls} full reports), full_every_frame {full_every_frame}"
    );
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig::parse(
            "sweep.snr_db = 10, 20\nsweep.frames = 20\nrho_sweep.snr_db = 10\nrho_sweep.frames = 20\n\
             eesm.realizations = 16\neesm.frames_per_realization = 4\neesm.bits_per_point = 20000\n\
             adapt.frames = 40\nadapt.awgn_bits_per_point = 20000\n",
        )
        .unwrap()
    }

    #[test]
    fn provenance_header_on_every_file() {
        let cfg = small();
        let art = execute(Command::EesmCalibrate, &cfg).unwrap();
        assert_eq!(art.extra.len(), 2);
        for body in std::iter::once(&art.main).chain(art.extra.iter().map(|(_, b)| b)) {
            assert!(body.starts_with("# uelink "));
            assert!(body.contains(&cfg.hash()));
        }
    }

    #[test]
    fn ber_sweep_layout() {
        let out = ber_sweep(&small()).unwrap();
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines[0], uelink::phy::BER_CSV_HEADER);
        assert_eq!(lines.len(), 1 + 2 * 3 * 3);
        assert!(lines[1].starts_with("10,equal-low.audio,"));
    }

    #[test]
    fn single_rho_gives_single_curve() {
        let mut cfg = small();
        cfg.rho_values = vec![0.3];
        let out = rho_sweep(&cfg).unwrap();
        assert_eq!(out.lines().count(), 2);
        assert!(out.lines().nth(1).unwrap().starts_with("10,0.3,"));
    }

    #[test]
    fn analytic_error_probability_decreases() {
        let out = analytic(&small()).unwrap();
        let pe: Vec<f64> = out
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
            .collect();
        assert_eq!(pe.len(), 31);
        assert!(pe.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn static_trace_keeps_one_selection() {
        let mut cfg = small();
        cfg.adapt_schedule = ScheduleKind::Scaled;
        cfg.adapt_snr_min_db = 18.0;
        cfg.adapt_snr_max_db = 18.0;
        let out = adapt_trace(&cfg).unwrap();
        let picks: Vec<String> = out
            .lines()
            .skip(1)
            .filter(|l| !l.starts_with('#'))
            .skip(1)
            .map(|l| l.split(',').take(3).skip(1).collect::<Vec<_>>().join("/"))
            .collect();
        assert_eq!(picks.len(), 39);
        assert!(picks.windows(2).all(|w| w[0] == w[1]));
        assert!(out.contains("# summary: feedback_scalars"));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Numeric("x".into()).exit_code(), 3);
        assert_eq!(CliError::Io(std::io::Error::other("x")).exit_code(), 4);
        let e: CliError = ExperimentConfig::parse("bogus = 1").unwrap_err().into();
        assert_eq!(e.exit_code(), 2);
    }
}
