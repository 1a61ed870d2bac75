//! Software implementation of a hardware-style MJPEG video conferencing stack.
//!
//! The video path runs RGB frames through colour conversion and 4:2:0
//! subsampling ([`frame_prep`]), a fixed-point butterfly DCT ([`transform`]),
//! reciprocal quantization and zigzag readout ([`quant_zigzag`]), run-length
//! plus Huffman entropy coding ([`entropy`]) and 32-bit word serialization
//! ([`bitstream`]). Every packet carries two independently decodable 16x16
//! superblocks. [`packet`] builds and parses the byte-exact
//! Ethernet/IPv4/UDP wire frames, and [`stream`] ties everything together
//! with audio packetization, reassembly, impairment simulation and a cycle
//! cost model.

pub mod bitstream;
pub mod entropy;
pub mod frame_prep;
pub mod packet;
pub mod quant_zigzag;
pub mod stream;
pub mod transform;

use std::fmt;

/// Colour component an 8x8 block belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Channel {
    Y,
    Cb,
    Cr,
}

impl Channel {
    pub fn is_luma(self) -> bool {
        matches!(self, Channel::Y)
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Channel::Y => "Y",
            Channel::Cb => "Cb",
            Channel::Cr => "Cr",
        })
    }
}

/// Number of samples in one 8x8 block.
pub const BLOCK_LEN: usize = 64;

pub use bitstream::{BitAccumulator, BitReader, WordStream, WordWriter};
pub use entropy::{CodedUnit, HuffmanSet, HuffmanTable, RleSymbol};
pub use frame_prep::{Geometry, PixelBlock, RgbFrame, SuperblockPair, YcbcrPlanes};
pub use packet::{PacketKind, PacketMeta, WireConfig, WireFrame};
pub use quant_zigzag::{QuantTable, QuantizedBlock};
pub use transform::DctCoeffBlock;
