//! Colour conversion, padding, chroma subsampling and superblock traversal.
//!
//! Frames are converted to full-range BT.601 YCbCr, padded on the right and
//! bottom to a multiple of 16 with black (code value 0), subsampled 4:2:0
//! and level shifted into `[-128, 127]`. The encoder then walks the padded
//! frame as pairs of 16x16 superblocks in row-major order; each pair is one
//! video packet.

use thiserror::Error;

use crate::{Channel, BLOCK_LEN};

/// Superblock edge in luma pixels.
pub const SUPERBLOCK: usize = 16;
/// Blocks in one superblock: four Y, one Cb, one Cr.
pub const BLOCKS_PER_SUPERBLOCK: usize = 6;
/// Blocks in one packet.
pub const BLOCKS_PER_PAIR: usize = 2 * BLOCKS_PER_SUPERBLOCK;
/// The position number travels in a single byte.
pub const MAX_POSITIONS: usize = 256;

/// Code value used for padding, before the level shift.
pub const PAD_VALUE: u8 = 0;
const LEVEL_SHIFT: i16 = 128;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FramePrepError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("frame holds {actual} bytes, expected {expected} for its geometry")]
    PixelCount { expected: usize, actual: usize },
    #[error("position {position} out of range (frame has {total} positions)")]
    PositionOutOfRange { position: usize, total: usize },
}

/// Frame dimensions and the superblock layout derived from them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Geometry {
    pub width: usize,
    pub height: usize,
}

impl Default for Geometry {
    fn default() -> Self {
        Geometry { width: 320, height: 180 }
    }
}

fn round_up_16(v: usize) -> usize {
    v.div_ceil(SUPERBLOCK) * SUPERBLOCK
}

impl Geometry {
    /// Validates that the frame is non-empty and that its packet positions
    /// fit the one-byte position field.
    pub fn new(width: usize, height: usize) -> Result<Self, FramePrepError> {
        if width == 0 || height == 0 {
            return Err(FramePrepError::InvalidGeometry(format!("{width}x{height} is empty")));
        }
        let g = Geometry { width, height };
        if g.positions() > MAX_POSITIONS {
            return Err(FramePrepError::InvalidGeometry(format!(
                "{width}x{height} needs {} packet positions, at most {MAX_POSITIONS} fit in the position byte",
                g.positions()
            )));
        }
        Ok(g)
    }

    pub fn padded_width(&self) -> usize {
        round_up_16(self.width)
    }

    pub fn padded_height(&self) -> usize {
        round_up_16(self.height)
    }

    pub fn superblock_cols(&self) -> usize {
        self.padded_width() / SUPERBLOCK
    }

    pub fn superblock_rows(&self) -> usize {
        self.padded_height() / SUPERBLOCK
    }

    pub fn superblocks(&self) -> usize {
        self.superblock_cols() * self.superblock_rows()
    }

    /// Packet positions per frame. An odd superblock count leaves the last
    /// pair with a single real superblock.
    pub fn positions(&self) -> usize {
        self.superblocks().div_ceil(2)
    }

    /// Top-left luma pixel `(row, col)` of superblock `index`, or `None` for
    /// the phantom second half of a trailing odd pair.
    pub fn superblock_origin(&self, index: usize) -> Option<(usize, usize)> {
        (index < self.superblocks()).then(|| {
            let cols = self.superblock_cols();
            ((index / cols) * SUPERBLOCK, (index % cols) * SUPERBLOCK)
        })
    }
}

/// Raw RGB24 image, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RgbFrame {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl RgbFrame {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, FramePrepError> {
        if width == 0 || height == 0 {
            return Err(FramePrepError::InvalidGeometry(format!("{width}x{height} is empty")));
        }
        let expected = width * height * 3;
        if pixels.len() != expected {
            return Err(FramePrepError::PixelCount { expected, actual: pixels.len() });
        }
        Ok(RgbFrame { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        let pixels = rgb.iter().copied().cycle().take(width * height * 3).collect();
        RgbFrame { width, height, pixels }
    }

    pub fn geometry(&self) -> Geometry {
        Geometry { width: self.width, height: self.height }
    }

    pub fn pixel(&self, row: usize, col: usize) -> [u8; 3] {
        let i = (row * self.width + col) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn set_pixel(&mut self, row: usize, col: usize, rgb: [u8; 3]) {
        let i = (row * self.width + col) * 3;
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }
}

/// A single image plane, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Plane<T> {
    pub width: usize,
    pub height: usize,
    pub data: Vec<T>,
}

impl<T: Copy> Plane<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Plane { width, height, data: vec![value; width * height] }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        self.data[row * self.width + col]
    }

    /// Extends to `width` x `height` with `value`, keeping the original
    /// content in the top-left corner.
    pub fn padded(&self, width: usize, height: usize, value: T) -> Plane<T> {
        assert!(width >= self.width && height >= self.height);
        let mut out = Plane::filled(width, height, value);
        for r in 0..self.height {
            let src = &self.data[r * self.width..(r + 1) * self.width];
            out.data[r * width..r * width + self.width].copy_from_slice(src);
        }
        out
    }
}

/// Three planes in Y, Cb, Cr order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColorPlanes<T> {
    pub y: Plane<T>,
    pub cb: Plane<T>,
    pub cr: Plane<T>,
}

/// Level-shifted, padded, 4:2:0 planes ready for block extraction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct YcbcrPlanes {
    pub y: Plane<i16>,
    pub cb: Plane<i16>,
    pub cr: Plane<i16>,
    pub orig_width: usize,
    pub orig_height: usize,
}

impl YcbcrPlanes {
    pub fn padded_width(&self) -> usize {
        self.y.width
    }

    pub fn padded_height(&self) -> usize {
        self.y.height
    }

    pub fn geometry(&self) -> Geometry {
        Geometry { width: self.orig_width, height: self.orig_height }
    }
}

/// 8x8 level-shifted samples, row-major.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PixelBlock {
    pub samples: [i16; BLOCK_LEN],
    pub channel: Channel,
}

/// The twelve blocks of one packet: superblock A then B, each as
/// Y top-left, Y top-right, Y bottom-left, Y bottom-right, Cb, Cr.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuperblockPair {
    pub position: usize,
    pub blocks: [PixelBlock; BLOCKS_PER_PAIR],
}

/// Channel for block `i` of a pair in canonical order.
pub fn pair_block_channel(i: usize) -> Channel {
    match i % BLOCKS_PER_SUPERBLOCK {
        0..=3 => Channel::Y,
        4 => Channel::Cb,
        _ => Channel::Cr,
    }
}

fn expand(v: u8, bits: u32) -> u8 {
    let top = v >> (8 - bits);
    (top << (8 - bits)) | (top >> (2 * bits - 8))
}

/// Reproduces RGB565 colour depth: red and blue keep five bits, green six,
/// each re-expanded to eight bits by replicating its top bits.
pub fn rgb565_emulate(frame: &RgbFrame) -> RgbFrame {
    let mut pixels = frame.pixels.clone();
    for px in pixels.chunks_exact_mut(3) {
        px[0] = expand(px[0], 5);
        px[1] = expand(px[1], 6);
        px[2] = expand(px[2], 5);
    }
    RgbFrame { width: frame.width, height: frame.height, pixels }
}

#[inline]
fn to_code(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// BT.601 full-range conversion of one pixel.
pub fn rgb_to_ycbcr_pixel([r, g, b]: [u8; 3]) -> [u8; 3] {
    let (r, g, b) = (f64::from(r), f64::from(g), f64::from(b));
    [
        to_code(0.299 * r + 0.587 * g + 0.114 * b),
        to_code(128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b),
        to_code(128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b),
    ]
}

/// Inverse of [`rgb_to_ycbcr_pixel`], rounded and clamped.
pub fn ycbcr_to_rgb_pixel([y, cb, cr]: [u8; 3]) -> [u8; 3] {
    let y = f64::from(y);
    let cb = f64::from(cb) - 128.0;
    let cr = f64::from(cr) - 128.0;
    [
        to_code(y + 1.402 * cr),
        to_code(y - 0.344136 * cb - 0.714136 * cr),
        to_code(y + 1.772 * cb),
    ]
}

/// Per-pixel conversion into full-resolution planes.
pub fn rgb_to_ycbcr(frame: &RgbFrame) -> ColorPlanes<u8> {
    let n = frame.width * frame.height;
    let mut y = Vec::with_capacity(n);
    let mut cb = Vec::with_capacity(n);
    let mut cr = Vec::with_capacity(n);
    for px in frame.pixels.chunks_exact(3) {
        let [py, pcb, pcr] = rgb_to_ycbcr_pixel([px[0], px[1], px[2]]);
        y.push(py);
        cb.push(pcb);
        cr.push(pcr);
    }
    let plane = |data| Plane { width: frame.width, height: frame.height, data };
    ColorPlanes { y: plane(y), cb: plane(cb), cr: plane(cr) }
}

/// Pads every plane to multiples of 16 with [`PAD_VALUE`].
pub fn pad_planes(planes: &ColorPlanes<u8>) -> ColorPlanes<u8> {
    let w = round_up_16(planes.y.width);
    let h = round_up_16(planes.y.height);
    ColorPlanes {
        y: planes.y.padded(w, h, PAD_VALUE),
        cb: planes.cb.padded(w, h, PAD_VALUE),
        cr: planes.cr.padded(w, h, PAD_VALUE),
    }
}

fn average_2x2(plane: &Plane<u8>) -> Plane<u8> {
    let (w, h) = (plane.width / 2, plane.height / 2);
    let mut data = Vec::with_capacity(w * h);
    for r in 0..h {
        for c in 0..w {
            let sum: u16 = [(0, 0), (0, 1), (1, 0), (1, 1)]
                .iter()
                .map(|(dr, dc)| u16::from(plane.get(2 * r + dr, 2 * c + dc)))
                .sum();
            data.push(((sum + 2) >> 2) as u8);
        }
    }
    Plane { width: w, height: h, data }
}

/// 4:2:0 subsampling: luma unchanged, each chroma sample is the mean of a
/// 2x2 grid rounded half up.
pub fn subsample_420(planes: &ColorPlanes<u8>) -> Result<ColorPlanes<u8>, FramePrepError> {
    let (w, h) = (planes.y.width, planes.y.height);
    if w % 2 != 0 || h % 2 != 0 {
        return Err(FramePrepError::InvalidGeometry(format!("{w}x{h} cannot be subsampled 2x2")));
    }
    Ok(ColorPlanes { y: planes.y.clone(), cb: average_2x2(&planes.cb), cr: average_2x2(&planes.cr) })
}

pub fn level_shift(plane: &Plane<u8>) -> Plane<i16> {
    Plane { width: plane.width, height: plane.height, data: plane.data.iter().map(|&v| i16::from(v) - LEVEL_SHIFT).collect() }
}

/// Inverse of [`level_shift`] for a single sample, clamped to `[0, 255]`.
pub fn unlevel_shift(v: i16) -> u8 {
    (v + LEVEL_SHIFT).clamp(0, 255) as u8
}

/// Full preparation pipeline: convert, pad, subsample, level shift.
pub fn prepare_frame(frame: &RgbFrame) -> Result<YcbcrPlanes, FramePrepError> {
    let full = rgb_to_ycbcr(frame);
    let sub = subsample_420(&pad_planes(&full))?;
    Ok(YcbcrPlanes {
        y: level_shift(&sub.y),
        cb: level_shift(&sub.cb),
        cr: level_shift(&sub.cr),
        orig_width: frame.width,
        orig_height: frame.height,
    })
}

fn read_block(plane: &Plane<i16>, top: usize, left: usize, channel: Channel) -> PixelBlock {
    let mut samples = [0i16; BLOCK_LEN];
    for r in 0..8 {
        let start = (top + r) * plane.width + left;
        samples[r * 8..r * 8 + 8].copy_from_slice(&plane.data[start..start + 8]);
    }
    PixelBlock { samples, channel }
}

fn superblock_blocks(planes: &YcbcrPlanes, origin: Option<(usize, usize)>, out: &mut [PixelBlock]) {
    let Some((top, left)) = origin else {
        let pad = i16::from(PAD_VALUE) - LEVEL_SHIFT;
        for (i, b) in out.iter_mut().enumerate() {
            *b = PixelBlock { samples: [pad; BLOCK_LEN], channel: pair_block_channel(i) };
        }
        return;
    };
    out[0] = read_block(&planes.y, top, left, Channel::Y);
    out[1] = read_block(&planes.y, top, left + 8, Channel::Y);
    out[2] = read_block(&planes.y, top + 8, left, Channel::Y);
    out[3] = read_block(&planes.y, top + 8, left + 8, Channel::Y);
    out[4] = read_block(&planes.cb, top / 2, left / 2, Channel::Cb);
    out[5] = read_block(&planes.cr, top / 2, left / 2, Channel::Cr);
}

/// The twelve blocks of packet `position`.
pub fn extract_superblock_pair(planes: &YcbcrPlanes, position: usize) -> Result<SuperblockPair, FramePrepError> {
    let geometry = Geometry { width: planes.padded_width(), height: planes.padded_height() };
    let total = geometry.positions();
    if position >= total {
        return Err(FramePrepError::PositionOutOfRange { position, total });
    }
    let empty = PixelBlock { samples: [0; BLOCK_LEN], channel: Channel::Y };
    let mut blocks = [empty; BLOCKS_PER_PAIR];
    let (a, b) = blocks.split_at_mut(BLOCKS_PER_SUPERBLOCK);
    superblock_blocks(planes, geometry.superblock_origin(2 * position), a);
    superblock_blocks(planes, geometry.superblock_origin(2 * position + 1), b);
    Ok(SuperblockPair { position, blocks })
}
