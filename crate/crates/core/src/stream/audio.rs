//! Audio packetization: unsigned 8-bit PCM at 8 kHz, 800 samples per packet.

use super::SeqCounter;
use crate::packet::{PacketKind, PacketMeta};

/// Samples per audio packet (0.1 s at 8 kHz).
pub const AUDIO_CHUNK: usize = 800;
pub const SAMPLE_RATE_HZ: u32 = 8000;
/// Byte used to pad the final chunk of a finite stream.
pub const AUDIO_PAD: u8 = 0;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AudioPayload {
    samples: Box<[u8; AUDIO_CHUNK]>,
}

impl AudioPayload {
    pub fn from_slice(bytes: &[u8]) -> Option<Self> {
        let samples: [u8; AUDIO_CHUNK] = bytes.try_into().ok()?;
        Some(AudioPayload { samples: Box::new(samples) })
    }

    pub fn samples(&self) -> &[u8; AUDIO_CHUNK] {
        &self.samples
    }
}

/// Cuts a PCM byte stream into full chunks, holding any remainder until
/// more bytes arrive.
#[derive(Debug, Default)]
pub struct AudioPacketizer {
    buf: Vec<u8>,
}

impl AudioPacketizer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, pcm: &[u8], seq: &mut SeqCounter) -> Vec<(PacketMeta, AudioPayload)> {
        self.buf.extend_from_slice(pcm);
        let full = self.buf.len() / AUDIO_CHUNK * AUDIO_CHUNK;
        let out = self.buf[..full]
            .chunks_exact(AUDIO_CHUNK)
            .map(|c| (meta(seq), AudioPayload::from_slice(c).expect("exact chunk")))
            .collect();
        self.buf.drain(..full);
        out
    }

    pub fn buffered(&self) -> usize {
        self.buf.len()
    }

    /// Pads any held remainder to a full packet. Returns the packet and the
    /// number of pad bytes.
    pub fn finish(mut self, seq: &mut SeqCounter) -> Option<((PacketMeta, AudioPayload), usize)> {
        if self.buf.is_empty() {
            return None;
        }
        let pad = AUDIO_CHUNK - self.buf.len();
        self.buf.resize(AUDIO_CHUNK, AUDIO_PAD);
        Some(((meta(seq), AudioPayload::from_slice(&self.buf).expect("padded chunk")), pad))
    }
}

fn meta(seq: &mut SeqCounter) -> PacketMeta {
    PacketMeta { kind: PacketKind::Audio, seq: seq.advance() }
}

/// Packetizes a complete PCM stream, padding the tail. Returns the packets
/// and the pad length.
pub fn audio_packetize(pcm: &[u8], seq: &mut SeqCounter) -> (Vec<(PacketMeta, AudioPayload)>, usize) {
    let mut p = AudioPacketizer::new();
    let mut packets = p.push(pcm, seq);
    let mut pad = 0;
    if let Some((last, n)) = p.finish(seq) {
        packets.push(last);
        pad = n;
    }
    (packets, pad)
}
