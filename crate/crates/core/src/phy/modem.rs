//! Gray-mapped square QAM with unit average symbol energy.
//!
//! Each symbol's first half of bits selects the in-phase level, the second
//! half the quadrature level. Per axis the `L = √M` levels are
//! `(L-1-2i)·d` for Gray index `i`, so bits `00` of QPSK land on `(1+j)/√2`.

use num_complex::Complex64;

use super::PhyError;
use crate::eesm::Modulation;

fn gray_encode(i: u32) -> u32 {
    i ^ (i >> 1)
}

fn gray_decode(mut g: u32) -> u32 {
    let mut i = g;
    while g > 0 {
        g >>= 1;
        i ^= g;
    }
    i
}

/// Amplitude step `d` giving unit average energy: `E = 2(M-1)d²/3`.
pub fn level_spacing(modulation: Modulation) -> f64 {
    (1.5 / (modulation.order() as f64 - 1.0)).sqrt()
}

fn levels_per_axis(modulation: Modulation) -> u32 {
    1 << (modulation.bits_per_symbol() / 2)
}

fn modulation_for(order: u32) -> Result<Modulation, PhyError> {
    Modulation::from_order(order).ok_or(PhyError::UnsupportedOrder(order))
}

fn axis_amplitude(label: u32, levels: u32, d: f64) -> f64 {
    let i = gray_decode(label);
    (levels as f64 - 1.0 - 2.0 * i as f64) * d
}

/// Gray label of the level nearest to `x`; ties go to the smaller label.
fn axis_decide(x: f64, levels: u32, d: f64) -> u32 {
    let top = levels as f64 - 1.0;
    let t = ((top - x / d) / 2.0).clamp(0.0, top);
    let lo = t.floor();
    let frac = t - lo;
    let lo = lo as u32;
    let i = if frac < 0.5 || lo + 1 >= levels {
        lo
    } else if frac > 0.5 {
        lo + 1
    } else {
        let (ga, gb) = (gray_encode(lo), gray_encode(lo + 1));
        return ga.min(gb);
    };
    gray_encode(i)
}

pub(crate) fn map_into(bits: &[u8], modulation: Modulation, out: &mut Vec<Complex64>) {
    let k = modulation.bits_per_symbol() as usize;
    let half = k / 2;
    let levels = levels_per_axis(modulation);
    let d = level_spacing(modulation);
    out.clear();
    out.extend(bits.chunks_exact(k).map(|sym| {
        let label = |b: &[u8]| b.iter().fold(0u32, |acc, &v| (acc << 1) | v as u32);
        Complex64::new(
            axis_amplitude(label(&sym[..half]), levels, d),
            axis_amplitude(label(&sym[half..]), levels, d),
        )
    }));
}

pub(crate) fn demap_into(received: &[Complex64], modulation: Modulation, out: &mut Vec<u8>) {
    let half = modulation.bits_per_symbol() / 2;
    let levels = levels_per_axis(modulation);
    let d = level_spacing(modulation);
    out.clear();
    for y in received {
        for label in [axis_decide(y.re, levels, d), axis_decide(y.im, levels, d)] {
            for shift in (0..half).rev() {
                out.push(((label >> shift) & 1) as u8);
            }
        }
    }
}

/// Maps a bit sequence (one bit per byte, values 0 or 1) onto symbols.
pub fn map_symbols(bits: &[u8], order: u32) -> Result<Vec<Complex64>, PhyError> {
    let modulation = modulation_for(order)?;
    let k = modulation.bits_per_symbol() as usize;
    if bits.len() % k != 0 {
        return Err(PhyError::BitLength {
            len: bits.len(),
            bits_per_symbol: k,
        });
    }
    if let Some(&b) = bits.iter().find(|&&b| b > 1) {
        return Err(PhyError::NotABit(b));
    }
    let mut out = Vec::with_capacity(bits.len() / k);
    map_into(bits, modulation, &mut out);
    Ok(out)
}

/// Hard-decision minimum-distance demapper.
pub fn demap_symbols(received: &[Complex64], order: u32) -> Result<Vec<u8>, PhyError> {
    let modulation = modulation_for(order)?;
    let mut out = Vec::with_capacity(received.len() * modulation.bits_per_symbol() as usize);
    demap_into(received, modulation, &mut out);
    Ok(out)
}

/// All `M` constellation points indexed by their Gray label.
pub fn constellation(order: u32) -> Result<Vec<Complex64>, PhyError> {
    let modulation = modulation_for(order)?;
    let k = modulation.bits_per_symbol();
    let bits: Vec<u8> = (0..order)
        .flat_map(|label| (0..k).rev().map(move |s| ((label >> s) & 1) as u8))
        .collect();
    map_symbols(&bits, order)
}
