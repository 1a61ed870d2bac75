//! Ethernet/IPv4/UDP wire frames.
//!
//! Layout, in bytes:
//!
//! | field    | size   |
//! |----------|--------|
//! | preamble | 8 (optional, `55 x7` then `D5`) |
//! | Ethernet | 14     |
//! | IPv4     | 20     |
//! | UDP      | 8      |
//! | kind     | 1      |
//! | seq      | 1      |
//! | data     | 0..=1470 |
//! | padding  | zeros up to the 64-byte minimum frame |
//! | FCS      | 4, CRC-32 least significant byte first |
//!
//! The FCS covers everything after the preamble. The UDP checksum is
//! always zero.

pub mod capture;
pub mod crc;

use std::fmt;
use std::net::Ipv4Addr;

use thiserror::Error;

pub use crc::{crc32, Crc32};

pub const PREAMBLE: [u8; 8] = [0x55, 0x55, 0x55, 0x55, 0x55, 0x55, 0x55, 0xD5];
pub const PREAMBLE_LEN: usize = 8;
pub const ETH_HEADER_LEN: usize = 14;
pub const IPV4_HEADER_LEN: usize = 20;
pub const UDP_HEADER_LEN: usize = 8;
pub const META_LEN: usize = 2;
pub const FCS_LEN: usize = 4;
pub const MAX_PAYLOAD: usize = 1470;
/// Ethernet frame bounds, FCS included, preamble excluded.
pub const MIN_FRAME_LEN: usize = 64;
pub const MAX_FRAME_LEN: usize = 1518;
/// Bytes from the start of the Ethernet header to the first data byte.
pub const HEADERS_LEN: usize = ETH_HEADER_LEN + IPV4_HEADER_LEN + UDP_HEADER_LEN + META_LEN;

pub const ETHERTYPE_IPV4: u16 = 0x0800;
pub const IP_PROTO_UDP: u8 = 17;
pub const DEFAULT_PORT: u16 = 5005;
const IPV4_FLAG_DF: u16 = 0x4000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PacketError {
    #[error("payload of {0} bytes exceeds the {MAX_PAYLOAD}-byte limit")]
    Oversize(usize),
    #[error("FCS mismatch: frame carries {carried:#010x}, computed {computed:#010x}")]
    Fcs { carried: u32, computed: u32 },
    #[error("IPv4 header checksum does not verify")]
    Ipv4Checksum,
    #[error("not ours: {0}")]
    NotOurs(String),
    #[error("malformed frame: {0}")]
    Malformed(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PacketKind {
    Audio,
    Video,
}

impl PacketKind {
    pub fn to_byte(self) -> u8 {
        match self {
            PacketKind::Audio => 0x00,
            PacketKind::Video => 0x01,
        }
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0x00 => Some(PacketKind::Audio),
            0x01 => Some(PacketKind::Video),
            _ => None,
        }
    }
}

impl fmt::Display for PacketKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PacketKind::Audio => "audio",
            PacketKind::Video => "video",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PacketMeta {
    pub kind: PacketKind,
    pub seq: u8,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WireConfig {
    pub src_mac: [u8; 6],
    pub dst_mac: [u8; 6],
    pub src_ip: Ipv4Addr,
    pub dst_ip: Ipv4Addr,
    pub src_port: u16,
    pub dst_port: u16,
    pub ttl: u8,
    pub include_preamble: bool,
}

impl Default for WireConfig {
    fn default() -> Self {
        WireConfig {
            src_mac: [0x02, 0, 0, 0, 0, 0x01],
            dst_mac: [0x02, 0, 0, 0, 0, 0x02],
            src_ip: Ipv4Addr::new(192, 168, 1, 1),
            dst_ip: Ipv4Addr::new(192, 168, 1, 2),
            src_port: DEFAULT_PORT,
            dst_port: DEFAULT_PORT,
            ttl: 64,
            include_preamble: true,
        }
    }
}

/// A serialized frame.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WireFrame {
    pub bytes: Vec<u8>,
    pub has_preamble: bool,
}

impl WireFrame {
    /// Bytes from the Ethernet header through the FCS.
    pub fn ethernet(&self) -> &[u8] {
        if self.has_preamble {
            &self.bytes[PREAMBLE_LEN..]
        } else {
            &self.bytes
        }
    }

    pub fn ethernet_len(&self) -> usize {
        self.ethernet().len()
    }
}

/// Ones'-complement checksum over 16-bit big-endian words.
pub fn ipv4_checksum(header: &[u8]) -> u16 {
    debug_assert!(header.len().is_multiple_of(2));
    !ones_complement_sum(header)
}

fn ones_complement_sum(bytes: &[u8]) -> u16 {
    let mut sum: u32 = bytes.chunks(2).map(|c| u32::from(u16::from_be_bytes([c[0], *c.get(1).unwrap_or(&0)]))).sum();
    while sum > 0xFFFF {
        sum = (sum & 0xFFFF) + (sum >> 16);
    }
    sum as u16
}

pub fn build_frame(meta: PacketMeta, payload: &[u8], cfg: &WireConfig) -> Result<WireFrame, PacketError> {
    if payload.len() > MAX_PAYLOAD {
        return Err(PacketError::Oversize(payload.len()));
    }
    let udp_len = (UDP_HEADER_LEN + META_LEN + payload.len()) as u16;
    let ip_len = IPV4_HEADER_LEN as u16 + udp_len;
    let body_len = (HEADERS_LEN + payload.len()).max(MIN_FRAME_LEN - FCS_LEN);
    let start = if cfg.include_preamble { PREAMBLE_LEN } else { 0 };
    let mut out = Vec::with_capacity(start + body_len + FCS_LEN);
    if cfg.include_preamble {
        out.extend_from_slice(&PREAMBLE);
    }

    out.extend_from_slice(&cfg.dst_mac);
    out.extend_from_slice(&cfg.src_mac);
    out.extend_from_slice(&ETHERTYPE_IPV4.to_be_bytes());

    let ip_start = out.len();
    out.extend_from_slice(&[0x45, 0x00]);
    out.extend_from_slice(&ip_len.to_be_bytes());
    out.extend_from_slice(&[0, 0]);
    out.extend_from_slice(&IPV4_FLAG_DF.to_be_bytes());
    out.extend_from_slice(&[cfg.ttl, IP_PROTO_UDP, 0, 0]);
    out.extend_from_slice(&cfg.src_ip.octets());
    out.extend_from_slice(&cfg.dst_ip.octets());
    let csum = ipv4_checksum(&out[ip_start..]);
    out[ip_start + 10..ip_start + 12].copy_from_slice(&csum.to_be_bytes());

    out.extend_from_slice(&cfg.src_port.to_be_bytes());
    out.extend_from_slice(&cfg.dst_port.to_be_bytes());
    out.extend_from_slice(&udp_len.to_be_bytes());
    out.extend_from_slice(&[0, 0]);

    out.extend_from_slice(&[meta.kind.to_byte(), meta.seq]);
    out.extend_from_slice(payload);
    out.resize(start + body_len, 0);

    let fcs = {
        let mut c = Crc32::new();
        c.update(&out[start..]);
        c.finish()
    };
    out.extend_from_slice(&fcs);
    Ok(WireFrame { bytes: out, has_preamble: cfg.include_preamble })
}

/// Header fields of a frame, decoded without judging them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameInfo {
    pub has_preamble: bool,
    /// Ethernet length including FCS.
    pub frame_len: usize,
    pub dst_mac: [u8; 6],
    pub src_mac: [u8; 6],
    pub ethertype: u16,
    pub ip_total_len: u16,
    pub ttl: u8,
    pub protocol: u8,
    pub ip_checksum_ok: bool,
    pub src_ip: Ipv4Addr,
    pub dst_ip: Ipv4Addr,
    pub src_port: u16,
    pub dst_port: u16,
    pub udp_len: u16,
    pub fcs_carried: u32,
    pub fcs_computed: u32,
}

impl FrameInfo {
    pub fn fcs_ok(&self) -> bool {
        self.fcs_carried == self.fcs_computed
    }
}

fn strip_preamble(bytes: &[u8]) -> (bool, &[u8]) {
    match bytes.strip_prefix(&PREAMBLE[..]) {
        Some(rest) => (true, rest),
        None => (false, bytes),
    }
}

/// Reads header fields. Fails only if the frame is too short to hold them
/// or is not IPv4.
pub fn dissect(bytes: &[u8]) -> Result<FrameInfo, PacketError> {
    let (has_preamble, eth) = strip_preamble(bytes);
    if eth.len() < ETH_HEADER_LEN + FCS_LEN {
        return Err(PacketError::Malformed(format!("{} bytes is too short for an Ethernet frame", eth.len())));
    }
    let (body, fcs) = eth.split_at(eth.len() - FCS_LEN);
    let be16 = |at: usize| u16::from_be_bytes([body[at], body[at + 1]]);
    let ethertype = be16(12);
    if ethertype != ETHERTYPE_IPV4 {
        return Err(PacketError::NotOurs(format!("EtherType {ethertype:#06x}")));
    }
    if body.len() < ETH_HEADER_LEN + IPV4_HEADER_LEN + UDP_HEADER_LEN {
        return Err(PacketError::Malformed("truncated IPv4/UDP headers".into()));
    }
    let ip = &body[ETH_HEADER_LEN..ETH_HEADER_LEN + IPV4_HEADER_LEN];
    if ip[0] != 0x45 {
        return Err(PacketError::NotOurs(format!("IPv4 version/IHL byte {:#04x}", ip[0])));
    }
    let udp = ETH_HEADER_LEN + IPV4_HEADER_LEN;
    let octets = |at: usize| Ipv4Addr::new(ip[at], ip[at + 1], ip[at + 2], ip[at + 3]);
    Ok(FrameInfo {
        has_preamble,
        frame_len: eth.len(),
        dst_mac: body[0..6].try_into().expect("slice of 6"),
        src_mac: body[6..12].try_into().expect("slice of 6"),
        ethertype,
        ip_total_len: u16::from_be_bytes([ip[2], ip[3]]),
        ttl: ip[8],
        protocol: ip[9],
        ip_checksum_ok: ones_complement_sum(ip) == 0xFFFF,
        src_ip: octets(12),
        dst_ip: octets(16),
        src_port: be16(udp),
        dst_port: be16(udp + 2),
        udp_len: be16(udp + 4),
        fcs_carried: u32::from_le_bytes(fcs.try_into().expect("slice of 4")),
        fcs_computed: crc32(body),
    })
}

/// Validates a frame addressed to `dst_port` and returns its metadata and
/// data bytes.
pub fn parse_frame(bytes: &[u8], dst_port: u16) -> Result<(PacketMeta, Vec<u8>), PacketError> {
    let (_, eth) = strip_preamble(bytes);
    if eth.len() >= MIN_FRAME_LEN {
        let (body, fcs) = eth.split_at(eth.len() - FCS_LEN);
        let carried = u32::from_le_bytes(fcs.try_into().expect("slice of 4"));
        let computed = crc32(body);
        if carried != computed {
            return Err(PacketError::Fcs { carried, computed });
        }
    }
    let info = dissect(bytes)?;
    if !info.fcs_ok() {
        return Err(PacketError::Fcs { carried: info.fcs_carried, computed: info.fcs_computed });
    }
    if !info.ip_checksum_ok {
        return Err(PacketError::Ipv4Checksum);
    }
    if info.protocol != IP_PROTO_UDP {
        return Err(PacketError::NotOurs(format!("IP protocol {}", info.protocol)));
    }
    if info.dst_port != dst_port {
        return Err(PacketError::NotOurs(format!("UDP port {}", info.dst_port)));
    }
    let udp_len = usize::from(info.udp_len);
    if udp_len < UDP_HEADER_LEN + META_LEN || usize::from(info.ip_total_len) != IPV4_HEADER_LEN + udp_len {
        return Err(PacketError::Malformed(format!(
            "inconsistent lengths: IPv4 total {}, UDP {}",
            info.ip_total_len, info.udp_len
        )));
    }
    let start = ETH_HEADER_LEN + IPV4_HEADER_LEN + UDP_HEADER_LEN;
    let end = ETH_HEADER_LEN + IPV4_HEADER_LEN + udp_len;
    if end > eth.len() - FCS_LEN {
        return Err(PacketError::Malformed("UDP length runs past the frame".into()));
    }
    let datagram = &eth[start..end];
    decode_datagram(datagram).map(|(m, p)| (m, p.to_vec()))
}

/// UDP payload for socket transport: kind, seq, then data.
pub fn encode_datagram(meta: PacketMeta, payload: &[u8]) -> Result<Vec<u8>, PacketError> {
    if payload.len() > MAX_PAYLOAD {
        return Err(PacketError::Oversize(payload.len()));
    }
    let mut out = Vec::with_capacity(META_LEN + payload.len());
    out.extend_from_slice(&[meta.kind.to_byte(), meta.seq]);
    out.extend_from_slice(payload);
    Ok(out)
}

pub fn decode_datagram(bytes: &[u8]) -> Result<(PacketMeta, &[u8]), PacketError> {
    let [kind, seq, rest @ ..] = bytes else {
        return Err(PacketError::Malformed("datagram shorter than its 2-byte header".into()));
    };
    let kind = PacketKind::from_byte(*kind).ok_or_else(|| PacketError::NotOurs(format!("kind byte {kind:#04x}")))?;
    if rest.len() > MAX_PAYLOAD {
        return Err(PacketError::Oversize(rest.len()));
    }
    Ok((PacketMeta { kind, seq: *seq }, rest))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn meta(seq: u8) -> PacketMeta {
        PacketMeta { kind: PacketKind::Video, seq }
    }

    #[test]
    fn checksum_examples() {
        assert_eq!(ipv4_checksum(&[0; 20]), 0xFFFF);
        // Widely published sample header.
        let h = [
            0x45, 0x00, 0x00, 0x73, 0x00, 0x00, 0x40, 0x00, 0x40, 0x11, 0x00, 0x00, 0xc0, 0xa8, 0x00, 0x01, 0xc0, 0xa8,
            0x00, 0xc7,
        ];
        assert_eq!(ipv4_checksum(&h), 0xB861);
        let mut full = h;
        full[10..12].copy_from_slice(&0xB861u16.to_be_bytes());
        assert_eq!(ones_complement_sum(&full), 0xFFFF);
    }

    #[test]
    fn audio_frame_size() {
        let cfg = WireConfig { include_preamble: false, ..Default::default() };
        let f = build_frame(PacketMeta { kind: PacketKind::Audio, seq: 3 }, &[7; 800], &cfg).unwrap();
        assert_eq!(f.bytes.len(), 848);
        let f = build_frame(meta(0), &[7; 800], &WireConfig::default()).unwrap();
        assert_eq!(f.bytes.len(), 856);
        assert_eq!(f.ethernet_len(), 848);
    }

    #[test]
    fn empty_payload_padded() {
        let f = build_frame(meta(9), &[], &WireConfig::default()).unwrap();
        assert_eq!(f.ethernet_len(), MIN_FRAME_LEN);
        let (m, p) = parse_frame(&f.bytes, DEFAULT_PORT).unwrap();
        assert_eq!((m, p.len()), (meta(9), 0));
        let f = build_frame(meta(9), &[1; 5], &WireConfig::default()).unwrap();
        assert_eq!(parse_frame(&f.bytes, DEFAULT_PORT).unwrap().1, vec![1; 5]);
    }

    #[test]
    fn header_fields() {
        let cfg = WireConfig::default();
        let f = build_frame(meta(200), &[0xAB; 100], &cfg).unwrap();
        let info = dissect(&f.bytes).unwrap();
        assert!(info.has_preamble && info.fcs_ok() && info.ip_checksum_ok);
        assert_eq!(info.ip_total_len, 130);
        assert_eq!(info.udp_len, 110);
        assert_eq!((info.src_ip, info.dst_ip), (cfg.src_ip, cfg.dst_ip));
        assert_eq!(&f.bytes[..8], &PREAMBLE);
        let eth = f.ethernet();
        assert_eq!(&eth[HEADERS_LEN - 2..HEADERS_LEN], &[0x01, 200]);
    }

    #[test]
    fn rejects_oversize() {
        assert_eq!(build_frame(meta(0), &[0; 1471], &WireConfig::default()), Err(PacketError::Oversize(1471)));
        let f = build_frame(meta(0), &[0; 1470], &WireConfig::default()).unwrap();
        assert_eq!(f.ethernet_len(), MAX_FRAME_LEN);
    }

    #[test]
    fn filters_foreign_traffic() {
        let mut f = build_frame(meta(0), &[1, 2, 3], &WireConfig { include_preamble: false, ..Default::default() })
            .unwrap()
            .bytes;
        assert!(matches!(parse_frame(&f, 6000), Err(PacketError::NotOurs(_))));
        f[12..14].copy_from_slice(&0x86DDu16.to_be_bytes());
        let n = f.len() - FCS_LEN;
        let fcs = crc32(&f[..n]).to_le_bytes();
        f[n..].copy_from_slice(&fcs);
        assert!(matches!(parse_frame(&f, DEFAULT_PORT), Err(PacketError::NotOurs(_))));
    }

    #[test]
    fn corrupt_byte_fails_fcs() {
        let mut f = build_frame(meta(0), &[1, 2, 3], &WireConfig::default()).unwrap().bytes;
        f[50] ^= 0x40;
        assert!(matches!(parse_frame(&f, DEFAULT_PORT), Err(PacketError::Fcs { .. })));
        assert!(matches!(parse_frame(&f[..20], DEFAULT_PORT), Err(PacketError::Malformed(_))));
    }

    #[test]
    fn datagram_round_trip() {
        let d = encode_datagram(meta(77), &[5; 10]).unwrap();
        assert_eq!(&d[..2], &[1, 77]);
        let (m, p) = decode_datagram(&d).unwrap();
        assert_eq!((m, p), (meta(77), &[5u8; 10][..]));
        assert!(decode_datagram(&[1]).is_err());
        assert!(matches!(decode_datagram(&[9, 0]), Err(PacketError::NotOurs(_))));
    }

    proptest! {
        #[test]
        fn round_trip(payload in prop::collection::vec(any::<u8>(), 0..=MAX_PAYLOAD), seq in any::<u8>(), audio in any::<bool>(), pre in any::<bool>()) {
            let m = PacketMeta { kind: if audio { PacketKind::Audio } else { PacketKind::Video }, seq };
            let cfg = WireConfig { include_preamble: pre, ..Default::default() };
            let f = build_frame(m, &payload, &cfg).unwrap();
            prop_assert!((MIN_FRAME_LEN..=MAX_FRAME_LEN).contains(&f.ethernet_len()));
            let (m2, p2) = parse_frame(&f.bytes, DEFAULT_PORT).unwrap();
            prop_assert_eq!(m2, m);
            prop_assert_eq!(p2, payload);
        }
    }
}
