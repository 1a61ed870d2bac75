//! Fixed-point forward DCT (butterfly factorization) and floating-point
//! inverse DCT.
//!
//! The forward transform is the JPEG-normalized 8x8 DCT-II: orthonormal in
//! each dimension, so a constant block of value `v` has DC `8 * v`. Each 1-D
//! pass adds five fractional bits: pixel rows enter as integers, leave the row
//! pass in Q5 and the column pass in Q10, and a single final rounding produces
//! integer coefficients.
//!
//! The 1-D kernel splits the input into symmetric (`x[i] + x[7-i]`) and
//! antisymmetric (`x[i] - x[7-i]`) halves. The even outputs come from a
//! further butterfly plus one rotation, and the odd outputs from the
//! Loeffler rotation network, for 14 multiplications instead of 64.

use std::f64::consts::PI;
use std::sync::LazyLock;

use crate::frame_prep::PixelBlock;
use crate::{Channel, BLOCK_LEN};

/// Fractional bits added by each 1-D pass.
pub const PASS_FRAC_BITS: u32 = 5;

/// Fractional bits of the butterfly multipliers.
pub const DEFAULT_CONST_FRAC_BITS: u32 = 16;

/// Inclusive coefficient range of [`DctCoeffBlock`] (12-bit signed).
pub const COEFF_MIN: i32 = -2048;
pub const COEFF_MAX: i32 = 2047;

/// Eight fixed-point samples with `frac_bits` fractional bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DctVector {
    pub values: [i32; 8],
    pub frac_bits: u32,
}

impl DctVector {
    pub fn integers(values: [i32; 8]) -> Self {
        DctVector { values, frac_bits: 0 }
    }

    /// Signed bit width available to a vector with `frac_bits` fractional
    /// bits: 9 integer bits for level-shifted samples plus 3 bits of DCT gain.
    pub fn headroom_bits(frac_bits: u32) -> u32 {
        9 + frac_bits + 3
    }

    pub fn to_f64(&self) -> [f64; 8] {
        let scale = (1u64 << self.frac_bits) as f64;
        self.values.map(|v| v as f64 / scale)
    }
}

/// Raster-order DCT coefficients of one block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DctCoeffBlock {
    pub coeffs: [i32; BLOCK_LEN],
    pub channel: Channel,
    /// Set when any intermediate or output value had to be clamped.
    pub saturated: bool,
}

impl DctCoeffBlock {
    pub fn new(coeffs: [i32; BLOCK_LEN], channel: Channel) -> Self {
        DctCoeffBlock { coeffs, channel, saturated: false }
    }
}

/// Butterfly multipliers in fixed point.
///
/// Each constant is `round(2^const_frac_bits * w)` where `w` is a
/// combination of `cos(k*pi/16) / 2` (or `1 / (2*sqrt(2))` for the DC and
/// Nyquist outputs).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ButterflyConstants {
    pub const_frac_bits: u32,
    /// `1 / (2 sqrt 2)`, scales outputs 0 and 4.
    pub dc: i64,
    /// Even rotation: `c6/2`, `(c2 - c6)/2`, `(c2 + c6)/2`.
    pub even_common: i64,
    pub even_x2: i64,
    pub even_x6: i64,
    /// Odd rotation network, in the order
    /// `c3`, `t4`, `t5`, `t6`, `t7`, `z1`, `z2`, `z3`, `z4` (all halved).
    pub odd: [i64; 9],
}

fn cos16(k: u32) -> f64 {
    (k as f64 * PI / 16.0).cos()
}

impl ButterflyConstants {
    /// Exact real-valued multipliers, in the same order as
    /// [`ButterflyConstants::as_array`].
    pub fn exact_values() -> [f64; 13] {
        let (c1, c2, c3, c5, c6, c7) = (cos16(1), cos16(2), cos16(3), cos16(5), cos16(6), cos16(7));
        [
            1.0 / (2.0 * 2f64.sqrt()),
            c6 / 2.0,
            (c2 - c6) / 2.0,
            (c2 + c6) / 2.0,
            c3 / 2.0,
            (-c1 + c3 + c5 - c7) / 2.0,
            (c1 + c3 - c5 + c7) / 2.0,
            (c1 + c3 + c5 - c7) / 2.0,
            (c1 + c3 - c5 - c7) / 2.0,
            (c7 - c3) / 2.0,
            (-c1 - c3) / 2.0,
            (-c3 - c5) / 2.0,
            (c5 - c3) / 2.0,
        ]
    }

    pub fn with_precision(const_frac_bits: u32) -> Self {
        assert!((PASS_FRAC_BITS + 1..=30).contains(&const_frac_bits));
        let scale = (1u64 << const_frac_bits) as f64;
        let fix = Self::exact_values().map(|w| (w * scale).round() as i64);
        ButterflyConstants {
            const_frac_bits,
            dc: fix[0],
            even_common: fix[1],
            even_x2: fix[2],
            even_x6: fix[3],
            odd: [fix[4], fix[5], fix[6], fix[7], fix[8], fix[9], fix[10], fix[11], fix[12]],
        }
    }

    pub fn as_array(&self) -> [i64; 13] {
        let o = self.odd;
        [
            self.dc,
            self.even_common,
            self.even_x2,
            self.even_x6,
            o[0],
            o[1],
            o[2],
            o[3],
            o[4],
            o[5],
            o[6],
            o[7],
            o[8],
        ]
    }

    /// One 8-point DCT. The output carries [`PASS_FRAC_BITS`] more
    /// fractional bits than the input; values outside the headroom bound are
    /// clamped and reported through the returned flag.
    pub fn dct_1d(&self, input: &DctVector) -> (DctVector, bool) {
        let x = input.values.map(i64::from);
        let shift = self.const_frac_bits - PASS_FRAC_BITS;
        let descale = |v: i64| (v + (1 << (shift - 1))) >> shift;

        let tmp0 = x[0] + x[7];
        let tmp7 = x[0] - x[7];
        let tmp1 = x[1] + x[6];
        let tmp6 = x[1] - x[6];
        let tmp2 = x[2] + x[5];
        let tmp5 = x[2] - x[5];
        let tmp3 = x[3] + x[4];
        let tmp4 = x[3] - x[4];

        let tmp10 = tmp0 + tmp3;
        let tmp13 = tmp0 - tmp3;
        let tmp11 = tmp1 + tmp2;
        let tmp12 = tmp1 - tmp2;

        let mut out = [0i64; 8];
        out[0] = descale((tmp10 + tmp11) * self.dc);
        out[4] = descale((tmp10 - tmp11) * self.dc);

        let z1 = (tmp12 + tmp13) * self.even_common;
        out[2] = descale(z1 + tmp13 * self.even_x2);
        out[6] = descale(z1 - tmp12 * self.even_x6);

        let [k_c3, k_t4, k_t5, k_t6, k_t7, k_z1, k_z2, k_z3, k_z4] = self.odd;
        let z5 = (tmp4 + tmp6 + tmp5 + tmp7) * k_c3;
        let z1 = (tmp4 + tmp7) * k_z1;
        let z2 = (tmp5 + tmp6) * k_z2;
        let z3 = (tmp4 + tmp6) * k_z3 + z5;
        let z4 = (tmp5 + tmp7) * k_z4 + z5;

        out[7] = descale(tmp4 * k_t4 + z1 + z3);
        out[5] = descale(tmp5 * k_t5 + z2 + z4);
        out[3] = descale(tmp6 * k_t6 + z2 + z3);
        out[1] = descale(tmp7 * k_t7 + z1 + z4);

        let frac_bits = input.frac_bits + PASS_FRAC_BITS;
        let limit = 1i64 << (DctVector::headroom_bits(frac_bits) - 1);
        let mut saturated = false;
        let values = out.map(|v| {
            let c = v.clamp(-limit, limit - 1);
            saturated |= c != v;
            c as i32
        });
        (DctVector { values, frac_bits }, saturated)
    }

    /// Row pass then column pass; returns Q10 coefficients in raster order.
    pub fn dct_2d_fixed(&self, block: &PixelBlock) -> ([i32; BLOCK_LEN], bool) {
        let mut rows = [[0i32; 8]; 8];
        let mut saturated = false;
        for (r, row) in rows.iter_mut().enumerate() {
            let mut input = [0i32; 8];
            for (c, v) in input.iter_mut().enumerate() {
                *v = i32::from(block.samples[r * 8 + c]);
            }
            let (out, sat) = self.dct_1d(&DctVector::integers(input));
            saturated |= sat;
            *row = out.values;
        }
        let mut coeffs = [0i32; BLOCK_LEN];
        for c in 0..8 {
            let column = DctVector { values: std::array::from_fn(|r| rows[r][c]), frac_bits: PASS_FRAC_BITS };
            let (out, sat) = self.dct_1d(&column);
            saturated |= sat;
            for r in 0..8 {
                coeffs[r * 8 + c] = out.values[r];
            }
        }
        (coeffs, saturated)
    }

    pub fn dct_2d(&self, block: &PixelBlock) -> DctCoeffBlock {
        let (fixed, mut saturated) = self.dct_2d_fixed(block);
        let coeffs = fixed.map(|v| {
            let rounded = round_shift_half_away(v, 2 * PASS_FRAC_BITS);
            let c = rounded.clamp(COEFF_MIN, COEFF_MAX);
            saturated |= c != rounded;
            c
        });
        DctCoeffBlock { coeffs, channel: block.channel, saturated }
    }
}

/// Divides by `2^shift`, rounding halves away from zero.
pub(crate) fn round_shift_half_away(v: i32, shift: u32) -> i32 {
    let half = 1i32 << (shift - 1);
    if v >= 0 {
        (v + half) >> shift
    } else {
        -((-v + half) >> shift)
    }
}

static DEFAULT_CONSTANTS: LazyLock<ButterflyConstants> =
    LazyLock::new(|| ButterflyConstants::with_precision(DEFAULT_CONST_FRAC_BITS));

pub fn default_constants() -> &'static ButterflyConstants {
    &DEFAULT_CONSTANTS
}

/// 8-point DCT with the default constants. The flag reports saturation.
pub fn dct_1d(input: &DctVector) -> (DctVector, bool) {
    DEFAULT_CONSTANTS.dct_1d(input)
}

pub fn dct_2d(block: &PixelBlock) -> DctCoeffBlock {
    DEFAULT_CONSTANTS.dct_2d(block)
}

/// `basis[k][n] = s(k) * cos((2n+1) k pi / 16)` with orthonormal scaling.
static IDCT_BASIS: LazyLock<[[f64; 8]; 8]> = LazyLock::new(|| {
    std::array::from_fn(|k| {
        let s = if k == 0 { 1.0 / 8f64.sqrt() } else { 0.5 };
        std::array::from_fn(|n| s * ((2 * n + 1) as f64 * k as f64 * PI / 16.0).cos())
    })
});

/// Double-precision inverse DCT, rounded and clamped to `[-128, 127]`.
pub fn idct_2d(block: &DctCoeffBlock) -> PixelBlock {
    let basis = &*IDCT_BASIS;
    let mut tmp = [0f64; BLOCK_LEN];
    // Columns: tmp[y][u] = sum_v basis[v][y] * F[v][u]
    for u in 0..8 {
        for y in 0..8 {
            tmp[y * 8 + u] = (0..8).map(|v| basis[v][y] * f64::from(block.coeffs[v * 8 + u])).sum();
        }
    }
    let mut samples = [0i16; BLOCK_LEN];
    for y in 0..8 {
        for x in 0..8 {
            let s: f64 = (0..8).map(|u| basis[u][x] * tmp[y * 8 + u]).sum();
            samples[y * 8 + x] = s.round().clamp(-128.0, 127.0) as i16;
        }
    }
    PixelBlock { samples, channel: block.channel }
}
