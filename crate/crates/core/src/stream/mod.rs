//! Frame and audio streaming on top of the codec and wire format.

pub mod audio;
pub mod cycles;
pub mod impair;
pub mod live;
pub mod reassembly;

use thiserror::Error;

use crate::bitstream::{BitReader, BitstreamError, WordStream, WordWriter};
use crate::entropy::{EntropyError, HuffmanSet};
use crate::frame_prep::{
    extract_superblock_pair, prepare_frame, unlevel_shift, ycbcr_to_rgb_pixel, FramePrepError, Geometry, PixelBlock,
    RgbFrame, BLOCKS_PER_PAIR, BLOCKS_PER_SUPERBLOCK, SUPERBLOCK,
};
use crate::packet::{PacketError, PacketKind, PacketMeta};
use crate::quant_zigzag::{dequantize, inverse_zigzag, quantize, zigzag_scan, QuantTable, QuantizedBlock};
use crate::transform::{default_constants, idct_2d, ButterflyConstants};
use crate::Channel;

pub use audio::{audio_packetize, AudioPacketizer, AudioPayload, AUDIO_CHUNK};
pub use cycles::{estimate_throughput, CycleModel, Throughput};
pub use impair::{impair, ImpairConfig};
pub use reassembly::{reassemble, Reassembled, Reassembler, StreamStats};

/// Capacity of the transmit register, in 32-bit words.
pub const MAX_WORDS: usize = 300;
/// Uncompressed size of one packet's coefficients: 12 blocks of 64
/// eleven-bit values.
pub const RAW_PAIR_BYTES: usize = BLOCKS_PER_PAIR * 64 * 11 / 8;
/// Value written for pixels of positions that never arrived.
pub const MISSING_FILL: u8 = 128;

#[derive(Debug, Error)]
pub enum StreamError {
    #[error(transparent)]
    FramePrep(#[from] FramePrepError),
    #[error(transparent)]
    Entropy(#[from] EntropyError),
    #[error(transparent)]
    Bitstream(#[from] BitstreamError),
    #[error(transparent)]
    Packet(#[from] PacketError),
    #[error("frame is {actual_width}x{actual_height}, expected {}x{}", expected.width, expected.height)]
    GeometryMismatch { expected: Geometry, actual_width: usize, actual_height: usize },
    #[error("position {position} needs {words} words, the register holds {MAX_WORDS}")]
    RegisterOverflow { position: usize, words: usize },
    #[error("position {position} outside a frame of {total} positions")]
    PositionOutOfRange { position: usize, total: usize },
    #[error("malformed video payload: {0}")]
    MalformedPayload(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Global 8-bit sequence counter shared by audio and video packets.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SeqCounter(pub u8);

impl SeqCounter {
    pub fn advance(&mut self) -> u8 {
        let s = self.0;
        self.0 = self.0.wrapping_add(1);
        s
    }
}

/// A position byte followed by the packet's word stream.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VideoPayload {
    pub position: u8,
    pub words: WordStream,
}

impl VideoPayload {
    /// Fails when `words` does not fit the transmit register.
    pub fn new(position: u8, words: WordStream) -> Result<Self, StreamError> {
        if words.words.len() > MAX_WORDS {
            return Err(StreamError::RegisterOverflow { position: usize::from(position), words: words.words.len() });
        }
        Ok(VideoPayload { position, words })
    }

    pub fn byte_len(&self) -> usize {
        1 + 4 * self.words.words.len()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.byte_len());
        out.push(self.position);
        out.extend_from_slice(&self.words.to_be_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, StreamError> {
        let (&position, rest) =
            bytes.split_first().ok_or_else(|| StreamError::MalformedPayload("empty payload".into()))?;
        if rest.len() / 4 > MAX_WORDS {
            return Err(StreamError::MalformedPayload(format!("{} words exceed the register", rest.len() / 4)));
        }
        let words = WordStream::from_be_bytes(rest)
            .ok_or_else(|| StreamError::MalformedPayload(format!("{} bytes is not a whole number of words", rest.len())))?;
        Ok(VideoPayload { position, words })
    }
}

/// Quantization tables, Huffman tables and DCT constants used by both ends.
#[derive(Clone, Debug, PartialEq)]
pub struct Codec {
    pub luma_quant: QuantTable,
    pub chroma_quant: QuantTable,
    pub huffman: HuffmanSet,
    pub dct: ButterflyConstants,
}

impl Default for Codec {
    fn default() -> Self {
        Codec {
            luma_quant: QuantTable::standard_luma(),
            chroma_quant: QuantTable::standard_chroma(),
            huffman: HuffmanSet::default(),
            dct: *default_constants(),
        }
    }
}

/// Per-frame encoder results.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EncodeReport {
    pub positions: usize,
    /// Blocks whose DCT saturated.
    pub saturated_blocks: usize,
    /// Positions left out because they overflowed the register, with the
    /// word count they needed.
    pub overflowed: Vec<(usize, usize)>,
    pub payload_bytes: Vec<usize>,
    pub next_seq: u8,
}

impl EncodeReport {
    pub fn mean_payload(&self) -> f64 {
        if self.payload_bytes.is_empty() {
            return 0.0;
        }
        self.payload_bytes.iter().sum::<usize>() as f64 / self.payload_bytes.len() as f64
    }

    pub fn compression_ratio(&self) -> f64 {
        RAW_PAIR_BYTES as f64 / self.mean_payload()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EncodedFrame {
    pub packets: Vec<(PacketMeta, VideoPayload)>,
    pub report: EncodeReport,
}

impl Codec {
    pub fn quant_for(&self, channel: Channel) -> &QuantTable {
        if channel.is_luma() {
            &self.luma_quant
        } else {
            &self.chroma_quant
        }
    }

    fn quantize_block(&self, block: &PixelBlock) -> (QuantizedBlock, bool) {
        let coeffs = self.dct.dct_2d(block);
        let q = quantize(&coeffs, self.quant_for(block.channel));
        (QuantizedBlock { coeffs: zigzag_scan(&q), channel: block.channel }, coeffs.saturated)
    }

    /// Quantized zigzag blocks for each of the twelve inputs.
    pub fn quantize_pair(&self, blocks: &[PixelBlock; BLOCKS_PER_PAIR]) -> ([QuantizedBlock; BLOCKS_PER_PAIR], usize) {
        let mut saturated = 0;
        let out = std::array::from_fn(|i| {
            let (q, s) = self.quantize_block(&blocks[i]);
            saturated += usize::from(s);
            q
        });
        (out, saturated)
    }

    pub fn entropy_encode(&self, blocks: &[QuantizedBlock]) -> Result<WordStream, StreamError> {
        let mut w = WordWriter::new();
        for b in blocks {
            for unit in self.huffman.encode_block(b)? {
                w.push_unit(&unit)?;
            }
        }
        Ok(w.finish())
    }

    /// Decodes exactly twelve blocks; bits after the last EOB are ignored.
    pub fn entropy_decode(&self, words: &WordStream) -> Result<[QuantizedBlock; BLOCKS_PER_PAIR], StreamError> {
        let mut r = BitReader::new(&words.words);
        let mut out = [QuantizedBlock { coeffs: [0; 64], channel: Channel::Y }; BLOCKS_PER_PAIR];
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = self.huffman.decode_block(&mut r, crate::frame_prep::pair_block_channel(i))?;
        }
        Ok(out)
    }

    pub fn reconstruct_block(&self, q: &QuantizedBlock) -> PixelBlock {
        let raster = inverse_zigzag(&q.coeffs);
        idct_2d(&dequantize(&raster, self.quant_for(q.channel), q.channel))
    }

    /// Encodes every position of `frame`. Sequence numbers start at
    /// `seq_start` and wrap modulo 256.
    pub fn encode_frame(&self, frame: &RgbFrame, seq_start: u8) -> Result<EncodedFrame, StreamError> {
        let geometry = Geometry::new(frame.width, frame.height)?;
        let planes = prepare_frame(frame)?;
        let mut seq = SeqCounter(seq_start);
        let mut report = EncodeReport { positions: geometry.positions(), ..Default::default() };
        let mut packets = Vec::with_capacity(geometry.positions());
        for position in 0..geometry.positions() {
            let pair = extract_superblock_pair(&planes, position)?;
            let (blocks, saturated) = self.quantize_pair(&pair.blocks);
            report.saturated_blocks += saturated;
            let words = self.entropy_encode(&blocks)?;
            let payload = match VideoPayload::new(position as u8, words) {
                Ok(p) => p,
                Err(StreamError::RegisterOverflow { words, .. }) => {
                    report.overflowed.push((position, words));
                    continue;
                }
                Err(e) => return Err(e),
            };
            report.payload_bytes.push(payload.byte_len());
            packets.push((PacketMeta { kind: PacketKind::Video, seq: seq.advance() }, payload));
        }
        report.next_seq = seq.0;
        Ok(EncodedFrame { packets, report })
    }

    /// Encodes one frame, checking its size against `geometry` first.
    pub fn encode_frame_checked(
        &self,
        frame: &RgbFrame,
        geometry: Geometry,
        seq_start: u8,
    ) -> Result<EncodedFrame, StreamError> {
        if frame.geometry() != geometry {
            return Err(StreamError::GeometryMismatch {
                expected: geometry,
                actual_width: frame.width,
                actual_height: frame.height,
            });
        }
        self.encode_frame(frame, seq_start)
    }
}

/// A frame being rebuilt from video packets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameAssembly {
    pub geometry: Geometry,
    pub frame: RgbFrame,
    received: Vec<bool>,
}

impl FrameAssembly {
    pub fn new(geometry: Geometry) -> Self {
        FrameAssembly {
            geometry,
            frame: RgbFrame::filled(geometry.width, geometry.height, [MISSING_FILL; 3]),
            received: vec![false; geometry.positions()],
        }
    }

    pub fn is_received(&self, position: usize) -> bool {
        self.received.get(position).copied().unwrap_or(false)
    }

    pub fn received_count(&self) -> usize {
        self.received.iter().filter(|&&r| r).count()
    }

    pub fn missing_positions(&self) -> Vec<usize> {
        (0..self.received.len()).filter(|&p| !self.received[p]).collect()
    }

    pub fn completeness(&self) -> f64 {
        self.received_count() as f64 / self.received.len() as f64
    }

    /// Pixel rectangles `(top, left, height, width)` covered by `position`,
    /// clipped to the frame.
    pub fn position_regions(geometry: &Geometry, position: usize) -> Vec<(usize, usize, usize, usize)> {
        (0..2)
            .filter_map(|half| geometry.superblock_origin(2 * position + half))
            .filter(|&(top, left)| top < geometry.height && left < geometry.width)
            .map(|(top, left)| {
                (top, left, SUPERBLOCK.min(geometry.height - top), SUPERBLOCK.min(geometry.width - left))
            })
            .collect()
    }

    fn write_superblock(&mut self, origin: (usize, usize), blocks: &[PixelBlock]) {
        let (top, left) = origin;
        for r in 0..SUPERBLOCK.min(self.geometry.height.saturating_sub(top)) {
            for c in 0..SUPERBLOCK.min(self.geometry.width.saturating_sub(left)) {
                let y = blocks[(r / 8) * 2 + c / 8].samples[(r % 8) * 8 + c % 8];
                let ci = (r / 2) * 8 + c / 2;
                let ycc = [unlevel_shift(y), unlevel_shift(blocks[4].samples[ci]), unlevel_shift(blocks[5].samples[ci])];
                self.frame.set_pixel(top + r, left + c, ycbcr_to_rgb_pixel(ycc));
            }
        }
    }

    fn write_pair(&mut self, position: usize, blocks: &[PixelBlock; BLOCKS_PER_PAIR]) {
        for half in 0..2 {
            if let Some(origin) = self.geometry.superblock_origin(2 * position + half) {
                self.write_superblock(origin, &blocks[half * BLOCKS_PER_SUPERBLOCK..(half + 1) * BLOCKS_PER_SUPERBLOCK]);
            }
        }
        self.received[position] = true;
    }
}

/// Decodes one video payload into `assembly`. On error the assembly is left
/// untouched.
pub fn decode_packet(codec: &Codec, payload: &VideoPayload, assembly: &mut FrameAssembly) -> Result<(), StreamError> {
    let position = usize::from(payload.position);
    let total = assembly.geometry.positions();
    if position >= total {
        return Err(StreamError::PositionOutOfRange { position, total });
    }
    let quantized = codec.entropy_decode(&payload.words)?;
    let pixels = quantized.map(|q| codec.reconstruct_block(&q));
    assembly.write_pair(position, &pixels);
    Ok(())
}

/// Peak signal-to-noise ratio of two equally sized RGB frames in dB.
pub fn psnr(a: &RgbFrame, b: &RgbFrame) -> f64 {
    assert_eq!((a.width, a.height), (b.width, b.height));
    let mse = a.pixels.iter().zip(&b.pixels).map(|(&x, &y)| (f64::from(x) - f64::from(y)).powi(2)).sum::<f64>()
        / a.pixels.len() as f64;
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (255.0f64 * 255.0 / mse).log10()
    }
}
