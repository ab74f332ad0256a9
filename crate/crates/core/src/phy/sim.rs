use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;

use super::channel::{complex_gaussian, random_phase, rayleigh_channel, NakagamiPairSampler};
use super::modem::{demap_into, map_into};
use super::{BerRecord, ChannelRealization, OfdmConfig, PhyError, SimRng, Stream};
use crate::eesm::{AwgnRefTable, BlockPartition, McsProfile, Modulation};
use crate::fading::FadingParams;

/// Channel model for a simulated frame.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelKind {
    Awgn,
    /// Tapped-delay-line Rayleigh with the exponential profile.
    Rayleigh {
        n_taps: usize,
    },
    /// Two correlated Nakagami envelopes, one per subcarrier set: branch 1
    /// scales every audio subcarrier, branch 2 every video subcarrier.
    Nakagami(FadingParams),
    /// Two-branch maximal-ratio combining per subcarrier: each subcarrier sees
    /// an independent correlated pair and the combined power `r₁² + r₂²`. The
    /// operating SNR is per branch.
    NakagamiCombined(FadingParams),
}

/// Draws one channel (unit noise variance) for the data subcarriers.
pub fn draw_channel<R: rand::Rng + ?Sized>(
    kind: &ChannelKind,
    cfg: &OfdmConfig,
    part: &BlockPartition,
    rng: &mut R,
) -> Result<ChannelRealization, PhyError> {
    let n = cfg.n_data();
    let gains = match kind {
        ChannelKind::Awgn => vec![Complex64::new(1.0, 0.0); n],
        ChannelKind::Rayleigh { n_taps } => return rayleigh_channel(cfg, *n_taps, rng),
        ChannelKind::Nakagami(fp) => {
            let (r1, r2) = NakagamiPairSampler::new(fp)?.sample(rng);
            let (h1, h2) = (r1 * random_phase(rng), r2 * random_phase(rng));
            let mut g = vec![Complex64::new(0.0, 0.0); n];
            for &i in part.audio_indices() {
                g[i] = h1;
            }
            for &i in part.video_indices() {
                g[i] = h2;
            }
            g
        }
        ChannelKind::NakagamiCombined(fp) => {
            let sampler = NakagamiPairSampler::new(fp)?;
            (0..n)
                .map(|_| {
                    let (p1, p2) = sampler.sample_powers(rng);
                    (p1 + p2).sqrt() * random_phase(rng)
                })
                .collect()
        }
    };
    Ok(ChannelRealization {
        gains,
        noise_var: 1.0,
    })
}

#[derive(Default, Clone, Copy)]
struct Counts {
    errors: u64,
    bits: u64,
    delivered: u64,
}

impl std::ops::Add for Counts {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            errors: self.errors + o.errors,
            bits: self.bits + o.bits,
            delivered: self.delivered + o.delivered,
        }
    }
}

fn transmit<R: rand::Rng + ?Sized>(
    gains: &[Complex64],
    noise_var: f64,
    modulation: Modulation,
    packet_bits: usize,
    rng: &mut R,
) -> Counts {
    let k = modulation.bits_per_symbol() as usize;
    let mut bits = Vec::with_capacity(gains.len() * k);
    while bits.len() < gains.len() * k {
        let word: u64 = rng.random();
        let take = (gains.len() * k - bits.len()).min(64);
        bits.extend((0..take).map(|s| ((word >> s) & 1) as u8));
    }
    let mut symbols = Vec::with_capacity(gains.len());
    map_into(&bits, modulation, &mut symbols);
    let equalized: Vec<Complex64> = symbols
        .iter()
        .zip(gains)
        .map(|(&s, &h)| {
            let y = h * s + complex_gaussian(rng, noise_var);
            if h.norm_sqr() > 0.0 {
                y / h
            } else {
                y
            }
        })
        .collect();
    let mut decided = Vec::with_capacity(bits.len());
    demap_into(&equalized, modulation, &mut decided);
    let mut errors = 0;
    let mut delivered = 0;
    for (sent, got) in bits.chunks(packet_bits).zip(decided.chunks(packet_bits)) {
        let e = sent.iter().zip(got).filter(|(a, b)| a != b).count() as u64;
        errors += e;
        if e == 0 {
            delivered += sent.len() as u64;
        }
    }
    Counts {
        errors,
        bits: bits.len() as u64,
        delivered,
    }
}

fn transmit_set<R: rand::Rng + ?Sized>(
    ch: &ChannelRealization,
    indices: &[usize],
    modulation: Modulation,
    packet_bits: usize,
    rng: &mut R,
) -> Counts {
    let gains: Vec<Complex64> = indices.iter().map(|&i| ch.gains[i]).collect();
    transmit(&gains, ch.noise_var, modulation, packet_bits, rng)
}

/// Per-class and whole-block error counts plus the per-frame SNR vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockBer {
    pub audio: BerRecord,
    pub video: BerRecord,
    pub block: BerRecord,
    /// Bits carried in error-free packets, audio then video.
    pub delivered_bits: (u64, u64),
    /// One `|hᵢ|²·Es/N₀` vector per frame, in block subcarrier order.
    pub snrs: Vec<Vec<f64>>,
}

impl BlockBer {
    fn from_frames(snr_db: f64, frames: Vec<(Counts, Counts, Vec<f64>)>) -> Self {
        let (mut a, mut v) = (Counts::default(), Counts::default());
        let mut snrs = Vec::with_capacity(frames.len());
        for (fa, fv, s) in frames {
            a = a + fa;
            v = v + fv;
            snrs.push(s);
        }
        let b = a + v;
        Self {
            audio: BerRecord::new(snr_db, a.errors, a.bits),
            video: BerRecord::new(snr_db, v.errors, v.bits),
            block: BerRecord::new(snr_db, b.errors, b.bits),
            delivered_bits: (a.delivered, v.delivered),
            snrs,
        }
    }
}

fn check_sizes(cfg: &OfdmConfig, part: &BlockPartition) -> Result<(), PhyError> {
    cfg.validate()?;
    if part.len() != cfg.n_data() {
        return Err(PhyError::Config(format!(
            "partition covers {} subcarriers, configuration has {}",
            part.len(),
            cfg.n_data()
        )));
    }
    Ok(())
}

fn frame_traffic(
    ch: &ChannelRealization,
    part: &BlockPartition,
    rng: &SimRng,
    outer: u64,
    frame: u64,
    packet_bits: usize,
) -> (Counts, Counts, Vec<f64>) {
    let a = transmit_set(
        ch,
        part.audio_indices(),
        part.audio_mcs.modulation,
        packet_bits,
        &mut rng.stream(Stream::Audio, outer, frame),
    );
    let v = transmit_set(
        ch,
        part.video_indices(),
        part.video_mcs.modulation,
        packet_bits,
        &mut rng.stream(Stream::Video, outer, frame),
    );
    (a, v, ch.snrs())
}

/// Simulates `n_frames` independent frames at average SNR `snr_db`.
///
/// Frame `f` draws its channel from stream `(Channel, 0, f)` and its audio and
/// video traffic from `(Audio, 0, f)` and `(Video, 0, f)`. Runs that differ only
/// in SNR or MCS therefore see the same channels.
pub fn simulate_block_ber(
    cfg: &OfdmConfig,
    part: &BlockPartition,
    snr_db: f64,
    n_frames: usize,
    kind: &ChannelKind,
    rng: &SimRng,
) -> Result<BlockBer, PhyError> {
    check_sizes(cfg, part)?;
    if n_frames == 0 {
        return Err(PhyError::Config("n_frames must be at least 1".into()));
    }
    if !snr_db.is_finite() {
        return Err(PhyError::Config(format!(
            "snr_db must be finite, got {snr_db}"
        )));
    }
    let frames = (0..n_frames as u64)
        .into_par_iter()
        .map(|f| {
            let ch = draw_channel(kind, cfg, part, &mut rng.stream(Stream::Channel, 0, f))?
                .with_snr_db(snr_db);
            Ok(frame_traffic(&ch, part, rng, 0, f, DEFAULT_PACKET_BITS))
        })
        .collect::<Result<Vec<_>, PhyError>>()?;
    Ok(BlockBer::from_frames(snr_db, frames))
}

/// Simulates `n_frames` frames over one fixed channel; only bits and noise
/// change between frames. `realization` selects the traffic substreams so
/// different channels get independent noise. Goodput is counted in packets of
/// `packet_bits` consecutive bits per class and frame.
pub fn simulate_on_channel(
    part: &BlockPartition,
    ch: &ChannelRealization,
    n_frames: usize,
    rng: &SimRng,
    realization: u64,
    packet_bits: usize,
) -> Result<BlockBer, PhyError> {
    if packet_bits == 0 {
        return Err(PhyError::Config("packet_bits must be positive".into()));
    }
    if ch.len() != part.len() {
        return Err(PhyError::Config(format!(
            "channel has {} subcarriers, partition {}",
            ch.len(),
            part.len()
        )));
    }
    if n_frames == 0 {
        return Err(PhyError::Config("n_frames must be at least 1".into()));
    }
    let snr_db = 10.0 * (1.0 / ch.noise_var).log10();
    let frames: Vec<_> = (0..n_frames as u64)
        .into_par_iter()
        .map(|f| frame_traffic(ch, part, rng, realization, f, packet_bits))
        .collect();
    Ok(BlockBer::from_frames(snr_db, frames))
}

const AWGN_CHUNK_SYMBOLS: usize = 4096;

/// Packet length used for goodput when the caller does not choose one.
pub const DEFAULT_PACKET_BITS: usize = 128;

/// Uncoded BER over AWGN from at least `n_bits` bits. `point` keys the
/// substreams so grid points are independent.
pub fn awgn_ber(
    modulation: Modulation,
    snr_db: f64,
    n_bits: u64,
    rng: &SimRng,
    point: u64,
) -> BerRecord {
    let k = modulation.bits_per_symbol() as u64;
    let n_symbols = n_bits.div_ceil(k).max(1) as usize;
    let n_chunks = n_symbols.div_ceil(AWGN_CHUNK_SYMBOLS);
    let noise_var = super::noise_var_for(snr_db);
    let total = (0..n_chunks as u64)
        .into_par_iter()
        .map(|c| {
            let len = AWGN_CHUNK_SYMBOLS.min(n_symbols - c as usize * AWGN_CHUNK_SYMBOLS);
            let gains = vec![Complex64::new(1.0, 0.0); len];
            transmit(
                &gains,
                noise_var,
                modulation,
                DEFAULT_PACKET_BITS,
                &mut rng.stream(Stream::Awgn, point, c),
            )
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Counts::default(), |a, b| a + b);
    BerRecord::new(snr_db, total.errors, total.bits)
}

/// Monte-Carlo AWGN reference table for one MCS.
///
/// Points with no observed errors are recorded at `1/(2·bits)` and flagged.
/// The resulting sequence is made non-increasing by pooling adjacent
/// violators (bit-weighted), so sampling noise cannot break monotonicity.
pub fn generate_awgn_ref(
    mcs: &McsProfile,
    snr_grid_db: &[f64],
    bits_per_point: u64,
    rng: &SimRng,
) -> Result<AwgnRefTable, PhyError> {
    if snr_grid_db.len() < 2 || snr_grid_db.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(PhyError::Config(
            "SNR grid must have at least two strictly increasing points".into(),
        ));
    }
    if bits_per_point == 0 {
        return Err(PhyError::Config("bits_per_point must be positive".into()));
    }
    let records: Vec<BerRecord> = snr_grid_db
        .iter()
        .enumerate()
        .map(|(i, &snr)| awgn_ber(mcs.modulation, snr, bits_per_point, rng, i as u64))
        .collect();
    let floor: Vec<bool> = records.iter().map(|r| r.bit_errors == 0).collect();
    let raw: Vec<(f64, f64)> = records
        .iter()
        .map(|r| {
            let ber = if r.bit_errors == 0 {
                0.5 / r.bits_sent as f64
            } else {
                r.ber
            };
            (ber, r.bits_sent as f64)
        })
        .collect();
    let smoothed = pool_non_increasing(&raw);
    let points = snr_grid_db.iter().copied().zip(smoothed).collect();
    Ok(AwgnRefTable::with_floor(mcs.name.clone(), points, floor)?)
}

/// Weighted isotonic regression onto non-increasing sequences.
fn pool_non_increasing(values: &[(f64, f64)]) -> Vec<f64> {
    // (mean, weight, count)
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(values.len());
    for &(v, w) in values {
        blocks.push((v, w, 1));
        while blocks.len() > 1 {
            let (m2, w2, c2) = blocks[blocks.len() - 1];
            let (m1, w1, c1) = blocks[blocks.len() - 2];
            if m2 <= m1 {
                break;
            }
            blocks.truncate(blocks.len() - 2);
            blocks.push(((m1 * w1 + m2 * w2) / (w1 + w2), w1 + w2, c1 + c2));
        }
    }
    blocks
        .into_iter()
        .flat_map(|(m, _, c)| std::iter::repeat_n(m, c))
        .collect()
}

pub const BER_CSV_HEADER: &str = "snr_db,class,ber,ci95,bits";

/// BER sweep rows in the `snr_db,class,ber,ci95,bits` format, header first.
pub fn ber_csv<S: AsRef<str>>(rows: &[(S, BerRecord)]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{BER_CSV_HEADER}");
    for (class, r) in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.snr_db,
            class.as_ref(),
            r.ber,
            r.ci95_halfwidth,
            r.bits_sent
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_partition(audio: McsProfile, video: McsProfile) -> (OfdmConfig, BlockPartition) {
        let cfg = OfdmConfig::default();
        let part = BlockPartition::contiguous(
            cfg.n_audio_subcarriers,
            cfg.n_video_subcarriers,
            audio,
            video,
        )
        .unwrap();
        (cfg, part)
    }

    #[test]
    fn pooling() {
        let w = |v: &[f64]| v.iter().map(|&x| (x, 1.0)).collect::<Vec<_>>();
        assert_eq!(
            pool_non_increasing(&w(&[3.0, 2.0, 1.0])),
            vec![3.0, 2.0, 1.0]
        );
        assert_eq!(
            pool_non_increasing(&w(&[3.0, 1.0, 2.0])),
            vec![3.0, 1.5, 1.5]
        );
        assert_eq!(
            pool_non_increasing(&w(&[1.0, 2.0, 3.0])),
            vec![2.0, 2.0, 2.0]
        );
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let (cfg, part) = default_partition(McsProfile::qam16(), McsProfile::qam64());
        let rng = SimRng::new(77);
        let kind = ChannelKind::Rayleigh { n_taps: 16 };
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| simulate_block_ber(&cfg, &part, 12.0, 24, &kind, &rng).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn snr_vector_shape_and_energy() {
        let (cfg, part) = default_partition(McsProfile::qpsk(), McsProfile::qam16());
        let out = simulate_block_ber(
            &cfg,
            &part,
            10.0,
            1000,
            &ChannelKind::Rayleigh { n_taps: 16 },
            &SimRng::new(3),
        )
        .unwrap();
        assert_eq!(out.snrs.len(), 1000);
        assert!(out
            .snrs
            .iter()
            .all(|s| s.len() == 308 && s.iter().all(|&x| x >= 0.0)));
        let mean = out.snrs.iter().flatten().sum::<f64>() / (308.0 * 1000.0);
        assert!((10.0 * mean.log10() - 10.0).abs() < 0.1, "{mean}");
        assert_eq!(
            out.block.bits_sent,
            out.audio.bits_sent + out.video.bits_sent
        );
        assert_eq!(out.audio.bits_sent, 1000 * 52 * 2);
    }

    #[test]
    fn block_mapped_nakagami_is_flat_per_set() {
        let (cfg, part) = default_partition(McsProfile::qpsk(), McsProfile::qam16());
        let fp = FadingParams::new(2.0, 1.0, 0.5, 0.4).unwrap();
        let ch = draw_channel(
            &ChannelKind::Nakagami(fp),
            &cfg,
            &part,
            &mut SimRng::new(1).stream(Stream::Channel, 0, 0),
        )
        .unwrap();
        let s = ch.snrs();
        assert!(s[..52].iter().all(|&x| (x - s[0]).abs() < 1e-12));
        assert!(s[52..].iter().all(|&x| (x - s[52]).abs() < 1e-12));
    }

    #[test]
    fn mismatched_partition_is_rejected() {
        let cfg = OfdmConfig::default();
        let part =
            BlockPartition::contiguous(4, 4, McsProfile::qpsk(), McsProfile::qpsk()).unwrap();
        assert!(
            simulate_block_ber(&cfg, &part, 5.0, 1, &ChannelKind::Awgn, &SimRng::new(0)).is_err()
        );
        let (cfg, part) = default_partition(McsProfile::qpsk(), McsProfile::qpsk());
        assert!(
            simulate_block_ber(&cfg, &part, 5.0, 0, &ChannelKind::Awgn, &SimRng::new(0)).is_err()
        );
        assert!(simulate_block_ber(
            &cfg,
            &part,
            f64::NAN,
            1,
            &ChannelKind::Awgn,
            &SimRng::new(0)
        )
        .is_err());
    }

    #[test]
    fn csv_format() {
        let text = ber_csv(&[("unequal.audio", BerRecord::new(10.0, 1, 4))]);
        assert_eq!(
            text,
            format!(
                "{BER_CSV_HEADER}\n10,unequal.audio,0.25,{},4\n",
                BerRecord::new(10.0, 1, 4).ci95_halfwidth
            )
        );
    }
}
