//! Quantization by reciprocal multiplication and zigzag readout.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::transform::DctCoeffBlock;
use crate::{Channel, BLOCK_LEN};

/// Fractional bits of the stored reciprocals.
pub const RECIP_FRAC_BITS: u32 = 19;

/// Inclusive range of a quantized coefficient (11-bit signed).
pub const QUANT_MIN: i32 = -1024;
pub const QUANT_MAX: i32 = 1023;

/// Annex K luminance table, raster order.
pub const STD_LUMA_QUANT: [u8; BLOCK_LEN] = [
    16, 11, 10, 16, 24, 40, 51, 61, //
    12, 12, 14, 19, 26, 58, 60, 55, //
    14, 13, 16, 24, 40, 57, 69, 56, //
    14, 17, 22, 29, 51, 87, 80, 62, //
    18, 22, 37, 56, 68, 109, 103, 77, //
    24, 35, 55, 64, 81, 104, 113, 92, //
    49, 64, 78, 87, 103, 121, 120, 101, //
    72, 92, 95, 98, 112, 100, 103, 99,
];

/// Annex K chrominance table, raster order.
pub const STD_CHROMA_QUANT: [u8; BLOCK_LEN] = [
    17, 18, 24, 47, 99, 99, 99, 99, //
    18, 21, 26, 66, 99, 99, 99, 99, //
    24, 26, 56, 99, 99, 99, 99, 99, //
    47, 66, 99, 99, 99, 99, 99, 99, //
    99, 99, 99, 99, 99, 99, 99, 99, //
    99, 99, 99, 99, 99, 99, 99, 99, //
    99, 99, 99, 99, 99, 99, 99, 99, //
    99, 99, 99, 99, 99, 99, 99, 99,
];

/// `ZIGZAG[i]` is the raster index read at zigzag step `i`.
pub const ZIGZAG: [usize; BLOCK_LEN] = [
    0, 1, 8, 16, 9, 2, 3, 10, //
    17, 24, 32, 25, 18, 11, 4, 5, //
    12, 19, 26, 33, 40, 48, 41, 34, //
    27, 20, 13, 6, 7, 14, 21, 28, //
    35, 42, 49, 56, 57, 50, 43, 36, //
    29, 22, 15, 23, 30, 37, 44, 51, //
    58, 59, 52, 45, 38, 31, 39, 46, //
    53, 60, 61, 54, 47, 55, 62, 63,
];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QuantTableError {
    #[error("expected 64 divisors, found {0}")]
    Count(usize),
    #[error("divisor {0:?} is not an integer in 1..=255")]
    BadDivisor(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ChannelClass {
    Luminance,
    Chrominance,
}

impl From<Channel> for ChannelClass {
    fn from(c: Channel) -> Self {
        if c.is_luma() {
            ChannelClass::Luminance
        } else {
            ChannelClass::Chrominance
        }
    }
}

/// Quantization divisors with their precomputed reciprocals.
#[derive(Clone, PartialEq, Eq)]
pub struct QuantTable {
    divisors: [u8; BLOCK_LEN],
    reciprocals: [u32; BLOCK_LEN],
    pub channel_class: ChannelClass,
}

impl fmt::Debug for QuantTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QuantTable").field("class", &self.channel_class).field("divisors", &self.divisors).finish()
    }
}

impl QuantTable {
    /// Builds a table from raster-order divisors. Returns `None` when any
    /// divisor is zero.
    pub fn new(divisors: [u8; BLOCK_LEN], channel_class: ChannelClass) -> Option<Self> {
        if divisors.contains(&0) {
            return None;
        }
        let reciprocals = divisors.map(|q| (1u32 << RECIP_FRAC_BITS).div_ceil(u32::from(q)));
        Some(QuantTable { divisors, reciprocals, channel_class })
    }

    pub fn standard_luma() -> Self {
        Self::new(STD_LUMA_QUANT, ChannelClass::Luminance).expect("standard table has no zero entries")
    }

    pub fn standard_chroma() -> Self {
        Self::new(STD_CHROMA_QUANT, ChannelClass::Chrominance).expect("standard table has no zero entries")
    }

    /// Parses 64 whitespace- or comma-separated divisors; `#` starts a comment.
    pub fn parse(text: &str, channel_class: ChannelClass) -> Result<Self, QuantTableError> {
        let mut values = Vec::with_capacity(BLOCK_LEN);
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("");
            for tok in line.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()) {
                match u8::from_str(tok) {
                    Ok(v) if v > 0 => values.push(v),
                    _ => return Err(QuantTableError::BadDivisor(tok.to_string())),
                }
            }
        }
        let divisors: [u8; BLOCK_LEN] = values.as_slice().try_into().map_err(|_| QuantTableError::Count(values.len()))?;
        Ok(Self::new(divisors, channel_class).expect("zero divisors rejected above"))
    }

    pub fn divisors(&self) -> &[u8; BLOCK_LEN] {
        &self.divisors
    }

    pub fn reciprocals(&self) -> &[u32; BLOCK_LEN] {
        &self.reciprocals
    }

    /// `v / divisors[index]` rounded half away from zero, computed as
    /// `(2|v| + q) * ceil(2^19 / q) >> 20`.
    #[inline]
    pub fn quantize_one(&self, v: i32, index: usize) -> i32 {
        let q = u64::from(self.divisors[index]);
        let numerator = 2 * u64::from(v.unsigned_abs()) + q;
        let magnitude = ((numerator * u64::from(self.reciprocals[index])) >> (RECIP_FRAC_BITS + 1)) as i32;
        if v < 0 {
            -magnitude
        } else {
            magnitude
        }
    }
}

/// Quantized coefficients of one block, zigzag order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QuantizedBlock {
    pub coeffs: [i32; BLOCK_LEN],
    pub channel: Channel,
}

/// Smallest AC value; the AC code alphabet stops at category 10.
pub const AC_QUANT_MIN: i32 = -QUANT_MAX;

/// Raster-order quantization. DC is clamped to the 11-bit range, AC to
/// `[-1023, 1023]`.
pub fn quantize(block: &DctCoeffBlock, table: &QuantTable) -> [i32; BLOCK_LEN] {
    std::array::from_fn(|i| {
        let lo = if i == 0 { QUANT_MIN } else { AC_QUANT_MIN };
        table.quantize_one(block.coeffs[i], i).clamp(lo, QUANT_MAX)
    })
}

pub fn dequantize(quantized: &[i32; BLOCK_LEN], table: &QuantTable, channel: Channel) -> DctCoeffBlock {
    DctCoeffBlock::new(std::array::from_fn(|i| quantized[i] * i32::from(table.divisors[i])), channel)
}

pub fn zigzag_scan<T: Copy>(raster: &[T; BLOCK_LEN]) -> [T; BLOCK_LEN] {
    std::array::from_fn(|i| raster[ZIGZAG[i]])
}

pub fn inverse_zigzag<T: Copy + Default>(zigzag: &[T; BLOCK_LEN]) -> [T; BLOCK_LEN] {
    let mut raster = [T::default(); BLOCK_LEN];
    for (i, &r) in ZIGZAG.iter().enumerate() {
        raster[r] = zigzag[i];
    }
    raster
}
