//! Live UDP transport. The producer (encoder) hands datagrams to a socket
//! writer thread through a bounded queue, so a slow socket stalls the
//! encoder instead of growing memory.

use std::io;
use std::net::{SocketAddr, UdpSocket};
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

use crate::packet::{decode_datagram, encode_datagram, PacketMeta, FCS_LEN, HEADERS_LEN, MIN_FRAME_LEN, PREAMBLE_LEN};

/// Interframe gap in byte times.
pub const IFG_BYTES: usize = 12;
pub const LINK_BPS: u64 = 100_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LiveConfig {
    pub queue_depth: usize,
    /// Space packets as they would be on the modeled link.
    pub pace: bool,
    pub link_bps: u64,
}

impl Default for LiveConfig {
    fn default() -> Self {
        LiveConfig { queue_depth: 256, pace: false, link_bps: LINK_BPS }
    }
}

/// Time one frame with `data_len` data bytes occupies the modeled link,
/// preamble and interframe gap included.
pub fn wire_time(data_len: usize, link_bps: u64) -> Duration {
    let frame = (HEADERS_LEN + data_len).max(MIN_FRAME_LEN - FCS_LEN) + FCS_LEN;
    let bits = ((PREAMBLE_LEN + frame + IFG_BYTES) * 8) as u64;
    Duration::from_nanos(bits * 1_000_000_000 / link_bps)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SendReport {
    pub packets: usize,
    pub bytes: usize,
}

/// Sends every packet to `target` from a writer thread.
pub fn send_stream<I>(socket: UdpSocket, target: SocketAddr, packets: I, cfg: &LiveConfig) -> io::Result<SendReport>
where
    I: IntoIterator<Item = (PacketMeta, Vec<u8>)>,
{
    let (tx, rx) = mpsc::sync_channel::<Vec<u8>>(cfg.queue_depth.max(1));
    let (pace, link_bps) = (cfg.pace, cfg.link_bps);
    let writer = thread::spawn(move || -> io::Result<SendReport> {
        let mut report = SendReport::default();
        let start = Instant::now();
        let mut due = Duration::ZERO;
        for datagram in rx {
            if pace {
                if let Some(wait) = due.checked_sub(start.elapsed()) {
                    thread::sleep(wait);
                }
                due += wire_time(datagram.len().saturating_sub(2), link_bps);
            }
            socket.send_to(&datagram, target)?;
            report.packets += 1;
            report.bytes += datagram.len();
        }
        Ok(report)
    });
    for (meta, payload) in packets {
        let datagram = encode_datagram(meta, &payload).map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e))?;
        if tx.send(datagram).is_err() {
            break;
        }
    }
    drop(tx);
    writer.join().map_err(|_| io::Error::other("socket writer panicked"))?
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReceiveLimits {
    pub max_packets: Option<usize>,
    /// Stop after this long without traffic.
    pub idle_timeout: Duration,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ReceiveReport {
    pub packets: usize,
    /// Datagrams that did not parse as ours.
    pub ignored: usize,
}

/// Receives datagrams until a limit is hit, passing each valid one to
/// `on_packet`.
pub fn receive_stream<F>(socket: &UdpSocket, limits: &ReceiveLimits, mut on_packet: F) -> io::Result<ReceiveReport>
where
    F: FnMut(PacketMeta, &[u8]),
{
    socket.set_read_timeout(Some(limits.idle_timeout))?;
    let mut buf = vec![0u8; 65536];
    let mut report = ReceiveReport::default();
    while limits.max_packets.is_none_or(|m| report.packets < m) {
        let n = match socket.recv_from(&mut buf) {
            Ok((n, _)) => n,
            Err(e) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => break,
            Err(e) => return Err(e),
        };
        match decode_datagram(&buf[..n]) {
            Ok((meta, payload)) => {
                report.packets += 1;
                on_packet(meta, payload);
            }
            Err(_) => report.ignored += 1,
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packet::PacketKind;

    #[test]
    fn wire_time_examples() {
        // 64-byte minimum frame plus 8 preamble and 12 gap bytes: 672 bits.
        assert_eq!(wire_time(0, LINK_BPS), Duration::from_nanos(6720));
        assert_eq!(wire_time(1470, LINK_BPS), Duration::from_nanos((8 + 1518 + 12) * 80));
    }

    #[test]
    fn loopback() {
        let rx = UdpSocket::bind("127.0.0.1:0").unwrap();
        let target = rx.local_addr().unwrap();
        let packets: Vec<_> =
            (0..50u8).map(|i| (PacketMeta { kind: PacketKind::Audio, seq: i }, vec![i; 100])).collect();
        let expected = packets.clone();
        let sender = thread::spawn(move || {
            let tx = UdpSocket::bind("127.0.0.1:0").unwrap();
            tx.send_to(&[0xEE, 1, 2], target).unwrap();
            send_stream(tx, target, packets, &LiveConfig { queue_depth: 4, pace: true, ..Default::default() }).unwrap()
        });
        let mut got = Vec::new();
        let limits = ReceiveLimits { max_packets: Some(50), idle_timeout: Duration::from_secs(5) };
        let report = receive_stream(&rx, &limits, |m, p| got.push((m, p.to_vec()))).unwrap();
        assert_eq!(sender.join().unwrap().packets, 50);
        assert_eq!(report, ReceiveReport { packets: 50, ignored: 1 });
        assert_eq!(got, expected);
    }
}
