//! Gray-mapped QPSK, the hard decision device and packet framing.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::SeededRng;

/// Map bit pairs onto unit-energy QPSK with Gray labelling:
/// `00 -> (+1+i)/sqrt2`, `01 -> (-1+i)/sqrt2`, `11 -> (-1-i)/sqrt2`,
/// `10 -> (+1-i)/sqrt2`. The first bit of a pair selects the sign of the
/// imaginary part, the second the sign of the real part.
pub fn modulate_qpsk(bits: &[u8]) -> Result<Vec<Complex64>> {
    if !bits.len().is_multiple_of(2) {
        return Err(Error::OddBitCount(bits.len()));
    }
    Ok(bits
        .chunks_exact(2)
        .map(|pair| {
            let re = if pair[1] == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
            let im = if pair[0] == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
            Complex64::new(re, im)
        })
        .collect())
}

/// Inverse of the Gray labelling for an already-decided symbol.
pub fn demap_qpsk(symbol: Complex64) -> [u8; 2] {
    [u8::from(symbol.im < 0.0), u8::from(symbol.re < 0.0)]
}

/// Nearest QPSK point; zero components resolve to `+`.
#[inline]
pub fn decide(z: Complex64) -> Complex64 {
    Complex64::new(
        if z.re >= 0.0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 },
        if z.im >= 0.0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 },
    )
}

pub fn hard_decision(z: &[Complex64]) -> Vec<Complex64> {
    z.iter().copied().map(decide).collect()
}

/// Bit errors between two symbol sequences after Gray demapping.
pub fn count_bit_errors(detected: &[Complex64], reference: &[Complex64]) -> Result<usize> {
    if detected.len() != reference.len() {
        return Err(Error::LengthMismatch {
            left: detected.len(),
            right: reference.len(),
        });
    }
    Ok(detected
        .iter()
        .zip(reference)
        .map(|(d, r)| {
            let (a, b) = (demap_qpsk(decide(*d)), demap_qpsk(decide(*r)));
            usize::from(a[0] != b[0]) + usize::from(a[1] != b[1])
        })
        .sum())
}

/// Per-antenna bits and symbols of one packet. The first `train_len`
/// symbols of every antenna are known to the receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub bits: Vec<Vec<u8>>,
    pub symbols: Vec<Vec<Complex64>>,
    pub train_len: usize,
}

impl Frame {
    pub fn random(rng: &mut SeededRng, n_tx: usize, len: usize, train_len: usize) -> Self {
        let bits: Vec<Vec<u8>> = (0..n_tx)
            .map(|_| (0..2 * len).map(|_| rng.bit()).collect())
            .collect();
        let symbols = bits
            .iter()
            .map(|b| modulate_qpsk(b).expect("even bit count"))
            .collect();
        Self {
            bits,
            symbols,
            train_len,
        }
    }

    pub fn n_tx(&self) -> usize {
        self.symbols.len()
    }

    pub fn len(&self) -> usize {
        self.symbols.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Symbols of all antennas at time `i`.
    pub fn column(&self, i: usize) -> Vec<Complex64> {
        self.symbols.iter().map(|s| s[i]).collect()
    }

    pub fn is_training(&self, i: usize) -> bool {
        i < self.train_len
    }
}
