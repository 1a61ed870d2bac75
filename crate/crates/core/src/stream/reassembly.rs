//! Receiver side: restores sequence order, splits video into frames and
//! concatenates audio.
//!
//! Sequence numbers are 8 bits, so each arrival is unwrapped against the
//! highest sequence seen so far. Packets wait in a small buffer and are
//! released in sequence order once they fall `horizon` packets behind the
//! newest arrival. A video packet whose position is not above the previous
//! released position starts a new frame.

use std::collections::BTreeMap;

use super::{decode_packet, Codec, FrameAssembly, VideoPayload, RAW_PAIR_BYTES};
use crate::frame_prep::Geometry;
use crate::packet::{PacketKind, PacketMeta};

/// Default reorder tolerance, in packets. Must stay below 128 for the
/// sequence unwrap to be unambiguous.
pub const DEFAULT_HORIZON: usize = 64;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StreamStats {
    pub packets_seen: usize,
    pub video_packets: usize,
    pub audio_packets: usize,
    /// Sequence numbers never received.
    pub lost_packets: usize,
    /// Arrivals older than the newest sequence already seen.
    pub out_of_order: usize,
    /// Arrivals too old to be placed; discarded.
    pub late_packets: usize,
    pub duplicates: usize,
    /// Video packets that failed to decode.
    pub malformed: usize,
    pub frames: usize,
    /// Positions missing across all completed frames.
    pub missing_positions: usize,
    pub video_payload_bytes: usize,
}

impl StreamStats {
    pub fn mean_video_payload(&self) -> f64 {
        if self.video_packets == 0 {
            0.0
        } else {
            self.video_payload_bytes as f64 / self.video_packets as f64
        }
    }

    /// Raw coefficient size over mean payload.
    pub fn compression_ratio(&self) -> f64 {
        RAW_PAIR_BYTES as f64 / self.mean_video_payload()
    }
}

pub struct Reassembler<'c> {
    codec: &'c Codec,
    geometry: Geometry,
    horizon: i64,
    pending: BTreeMap<i64, (PacketKind, Vec<u8>)>,
    newest: Option<i64>,
    released: Option<i64>,
    current: Option<(FrameAssembly, u8)>,
    frames: Vec<FrameAssembly>,
    audio: Vec<u8>,
    stats: StreamStats,
}

impl<'c> Reassembler<'c> {
    pub fn new(codec: &'c Codec, geometry: Geometry) -> Self {
        Self::with_horizon(codec, geometry, DEFAULT_HORIZON)
    }

    pub fn with_horizon(codec: &'c Codec, geometry: Geometry, horizon: usize) -> Self {
        assert!(horizon < 128, "horizon must be below half the sequence space");
        Reassembler {
            codec,
            geometry,
            horizon: horizon as i64,
            pending: BTreeMap::new(),
            newest: None,
            released: None,
            current: None,
            frames: Vec::new(),
            audio: Vec::new(),
            stats: StreamStats::default(),
        }
    }

    pub fn stats(&self) -> &StreamStats {
        &self.stats
    }

    pub fn push(&mut self, meta: PacketMeta, payload: Vec<u8>) {
        self.stats.packets_seen += 1;
        let ext = match self.newest {
            None => i64::from(meta.seq),
            Some(n) => n + i64::from(meta.seq.wrapping_sub(n as u8) as i8),
        };
        match self.newest {
            Some(n) if ext < n => self.stats.out_of_order += 1,
            _ => self.newest = Some(ext),
        }
        if self.released.is_some_and(|r| ext <= r) {
            self.stats.late_packets += 1;
            return;
        }
        if self.pending.insert(ext, (meta.kind, payload)).is_some() {
            self.stats.duplicates += 1;
        }
        let newest = self.newest.expect("set above");
        while let Some(entry) = self.pending.first_entry() {
            if *entry.key() > newest - self.horizon {
                break;
            }
            let (ext, (kind, payload)) = entry.remove_entry();
            self.release(ext, kind, payload);
        }
    }

    fn release(&mut self, ext: i64, kind: PacketKind, payload: Vec<u8>) {
        if let Some(r) = self.released {
            self.stats.lost_packets += (ext - r - 1) as usize;
        }
        self.released = Some(ext);
        match kind {
            PacketKind::Audio => {
                self.stats.audio_packets += 1;
                self.audio.extend_from_slice(&payload);
            }
            PacketKind::Video => {
                self.stats.video_packets += 1;
                self.stats.video_payload_bytes += payload.len();
                self.video(&payload);
            }
        }
    }

    fn video(&mut self, bytes: &[u8]) {
        let Ok(payload) = VideoPayload::from_bytes(bytes) else {
            self.stats.malformed += 1;
            return;
        };
        if self.current.as_ref().is_some_and(|(_, last)| payload.position <= *last) {
            self.close_frame();
        }
        let (assembly, last) = self.current.get_or_insert_with(|| (FrameAssembly::new(self.geometry), 0));
        *last = payload.position;
        if decode_packet(self.codec, &payload, assembly).is_err() {
            self.stats.malformed += 1;
        }
    }

    fn close_frame(&mut self) {
        if let Some((a, _)) = self.current.take() {
            self.stats.frames += 1;
            self.stats.missing_positions += a.geometry.positions() - a.received_count();
            self.frames.push(a);
        }
    }

    /// Completed frames so far.
    pub fn drain_frames(&mut self) -> Vec<FrameAssembly> {
        std::mem::take(&mut self.frames)
    }

    /// Audio bytes released so far.
    pub fn drain_audio(&mut self) -> Vec<u8> {
        std::mem::take(&mut self.audio)
    }

    /// Releases everything still buffered and closes the open frame.
    pub fn finish(mut self) -> Reassembled {
        for (ext, (kind, payload)) in std::mem::take(&mut self.pending) {
            self.release(ext, kind, payload);
        }
        self.close_frame();
        Reassembled { frames: self.frames, audio: self.audio, stats: self.stats }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Reassembled {
    pub frames: Vec<FrameAssembly>,
    pub audio: Vec<u8>,
    pub stats: StreamStats,
}

pub fn reassemble<I>(codec: &Codec, geometry: Geometry, packets: I) -> Reassembled
where
    I: IntoIterator<Item = (PacketMeta, Vec<u8>)>,
{
    let mut r = Reassembler::new(codec, geometry);
    for (meta, payload) in packets {
        r.push(meta, payload);
    }
    r.finish()
}
