//! Monte-Carlo OFDM baseband link simulation.
//!
//! Everything runs per subcarrier in the frequency domain: `y = h·s + n`,
//! zero-forcing equalization with perfect channel knowledge, hard decisions.
//! SNRs are `Es/N₀` per subcarrier with unit-energy symbols.
//!
//! Randomness comes from ChaCha8 substreams keyed by `(seed, purpose, index)`,
//! so frames can be simulated in any order or in parallel with identical
//! results.

mod channel;
mod modem;
mod sim;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use channel::{
    correlated_nakagami_pair, noise_var_for, power_delay_profile, rayleigh_channel, taps_to_gains,
    ChannelRealization, NakagamiPairSampler,
};
pub use modem::{constellation, demap_symbols, level_spacing, map_symbols};
pub use sim::{
    awgn_ber, ber_csv, draw_channel, generate_awgn_ref, simulate_block_ber, simulate_on_channel,
    BlockBer, ChannelKind, BER_CSV_HEADER, DEFAULT_PACKET_BITS,
};

use crate::eesm::EesmError;
use crate::fading::FadingError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PhyError {
    #[error("unsupported modulation order {0}")]
    UnsupportedOrder(u32),
    #[error("{len} bits is not a multiple of {bits_per_symbol} bits per symbol")]
    BitLength { len: usize, bits_per_symbol: usize },
    #[error("bit value {0} is neither 0 nor 1")]
    NotABit(u8),
    #[error("fading figure m = {0} is not a positive integer or half-integer")]
    UnsupportedFadingFigure(f64),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Eesm(#[from] EesmError),
    #[error(transparent)]
    Fading(#[from] FadingError),
}

/// Block numerology. Defaults reproduce the reference parameter set: 52 audio
/// and 256 video data subcarriers, 4 pilots, 800 ns guard, 4 µs symbols,
/// 20 MHz.
#[derive(Debug, Clone, PartialEq)]
pub struct OfdmConfig {
    pub n_audio_subcarriers: usize,
    pub n_video_subcarriers: usize,
    pub n_pilots: usize,
    pub guard_interval_ns: f64,
    pub symbol_duration_us: f64,
    pub bandwidth_mhz: f64,
}

impl Default for OfdmConfig {
    fn default() -> Self {
        Self {
            n_audio_subcarriers: 52,
            n_video_subcarriers: 256,
            n_pilots: 4,
            guard_interval_ns: 800.0,
            symbol_duration_us: 4.0,
            bandwidth_mhz: 20.0,
        }
    }
}

impl OfdmConfig {
    pub fn validate(&self) -> Result<(), PhyError> {
        if self.n_audio_subcarriers == 0 || self.n_video_subcarriers == 0 || self.n_pilots == 0 {
            return Err(PhyError::Config(
                "subcarrier and pilot counts must be positive".into(),
            ));
        }
        for (name, v) in [
            ("guard_interval_ns", self.guard_interval_ns),
            ("symbol_duration_us", self.symbol_duration_us),
            ("bandwidth_mhz", self.bandwidth_mhz),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(PhyError::Config(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.guard_interval_ns >= 1000.0 * self.symbol_duration_us {
            return Err(PhyError::Config(
                "guard interval must be shorter than the symbol".into(),
            ));
        }
        Ok(())
    }

    pub fn n_data(&self) -> usize {
        self.n_audio_subcarriers + self.n_video_subcarriers
    }

    /// Data plus pilot subcarriers; the frequency grid the channel is sampled on.
    pub fn n_grid(&self) -> usize {
        self.n_data() + self.n_pilots
    }

    /// Decay constant of the exponential power-delay profile.
    pub fn rms_delay_spread_ns(&self) -> f64 {
        self.guard_interval_ns / 4.0
    }

    pub fn tap_spacing_ns(&self) -> f64 {
        1000.0 / self.bandwidth_mhz
    }

    /// Uncoded bit rate for the given audio and video bits per symbol.
    pub fn raw_bit_rate_mbps(&self, audio_bits_per_symbol: u32, video_bits_per_symbol: u32) -> f64 {
        let bits = self.n_audio_subcarriers as f64 * audio_bits_per_symbol as f64
            + self.n_video_subcarriers as f64 * video_bits_per_symbol as f64;
        bits / self.symbol_duration_us
    }
}

/// Outcome of a bit-error count at one operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerRecord {
    pub snr_db: f64,
    pub bit_errors: u64,
    pub bits_sent: u64,
    pub ber: f64,
    pub ci95_halfwidth: f64,
}

impl BerRecord {
    pub fn new(snr_db: f64, bit_errors: u64, bits_sent: u64) -> Self {
        assert!(bits_sent > 0 && bit_errors <= bits_sent, "bad error count");
        let n = bits_sent as f64;
        let ber = bit_errors as f64 / n;
        Self {
            snr_db,
            bit_errors,
            bits_sent,
            ber,
            ci95_halfwidth: 1.96 * (ber * (1.0 - ber) / n).sqrt(),
        }
    }

    pub fn merge(&self, other: &Self) -> Self {
        Self::new(
            self.snr_db,
            self.bit_errors + other.bit_errors,
            self.bits_sent + other.bits_sent,
        )
    }

    pub fn ci_low(&self) -> f64 {
        self.ber - self.ci95_halfwidth
    }

    pub fn ci_high(&self) -> f64 {
        self.ber + self.ci95_halfwidth
    }

    /// True when the two 95% intervals do not overlap and `self` is higher.
    pub fn clearly_above(&self, other: &Self) -> bool {
        self.ci_low() > other.ci_high()
    }
}

/// What a substream is used for. Distinct purposes never share a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Channel = 1,
    Audio = 2,
    Video = 3,
    Awgn = 4,
    Fading = 5,
    Schedule = 6,
}

const INDEX_BITS: u32 = 28;
const INDEX_MASK: u64 = (1 << INDEX_BITS) - 1;

/// Seeded source of independent ChaCha8 substreams.
///
/// Stream `(purpose, outer, inner)` is `ChaCha8Rng::seed_from_u64(seed)` with
/// the 64-bit stream id `purpose << 56 | outer << 28 | inner`. `outer` and
/// `inner` must fit in 28 bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimRng {
    seed: u64,
}

impl SimRng {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self, purpose: Stream, outer: u64, inner: u64) -> ChaCha8Rng {
        assert!(
            outer <= INDEX_MASK && inner <= INDEX_MASK,
            "substream index out of range"
        );
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(((purpose as u64) << 56) | (outer << INDEX_BITS) | inner);
        rng
    }
}
