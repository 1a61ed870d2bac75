use std::collections::BTreeMap;
use std::io::{BufWriter, Write};
use std::net::{IpAddr, SocketAddr, ToSocketAddrs, UdpSocket};
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::thread;
use std::time::Duration;

use serde_json::{json, Value};

use vidlink_core::frame_prep::RgbFrame;
use vidlink_core::packet::capture::{parse_hex_csv, read_capture, to_hex_csv, write_capture};
use vidlink_core::packet::{build_frame, dissect, parse_frame, PacketError, PacketKind, PacketMeta};
use vidlink_core::stream::audio::SAMPLE_RATE_HZ;
use vidlink_core::stream::live::{receive_stream, send_stream, LiveConfig, ReceiveLimits};
use vidlink_core::stream::{
    estimate_throughput, impair, psnr, AudioPacketizer, CycleModel, EncodeReport, FrameAssembly, Reassembler,
    SeqCounter, StreamStats, RAW_PAIR_BYTES,
};

use crate::config::Settings;
use crate::error::{io_error, CliError, Result};
use crate::frames::{expand_inputs, frame_name, load_frame, save_frame};

fn is_csv(path: &Path) -> bool {
    path.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Reads a binary capture, or hex-CSV when the extension is `.csv`.
pub fn read_frames(path: &Path) -> Result<Vec<Vec<u8>>> {
    if is_csv(path) {
        let text = std::fs::read_to_string(path).map_err(|e| io_error(path.display(), e))?;
        Ok(parse_hex_csv(&text)?)
    } else {
        let bytes = std::fs::read(path).map_err(|e| io_error(path.display(), e))?;
        Ok(read_capture(&bytes)?)
    }
}

pub fn write_frames(path: &Path, frames: &[Vec<u8>]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| io_error(path.display(), e))?;
    let mut out = BufWriter::new(file);
    let written = if is_csv(path) {
        out.write_all(to_hex_csv(frames).as_bytes())
    } else {
        write_capture(&mut out, frames)
    };
    written.and_then(|_| out.flush()).map_err(|e| io_error(path.display(), e))
}

fn read_pcm(path: Option<&Path>) -> Result<Vec<u8>> {
    match path {
        Some(p) => std::fs::read(p).map_err(|e| io_error(p.display(), e)),
        None => Ok(Vec::new()),
    }
}

fn load_frames(settings: &Settings, inputs: &[PathBuf]) -> Result<Vec<RgbFrame>> {
    expand_inputs(inputs)?.iter().map(|p| load_frame(p, settings.geometry)).collect()
}

#[derive(Debug, Default)]
struct Produced {
    reports: Vec<EncodeReport>,
    video_packets: usize,
    audio_packets: usize,
    audio_pad: usize,
}

/// Encodes `frames` (`repeat` times over) with audio interleaved at `fps`,
/// handing every packet to `sink` in transmit order.
fn produce(
    settings: &Settings,
    frames: &[RgbFrame],
    audio: &[u8],
    fps: f64,
    repeat: usize,
    mut sink: impl FnMut(PacketMeta, Vec<u8>) -> Result<()>,
) -> Result<Produced> {
    if fps.is_nan() || fps <= 0.0 {
        return Err(CliError::Usage(format!("frame rate must be positive, got {fps}")));
    }
    let mut seq = SeqCounter::default();
    let mut packetizer = AudioPacketizer::new();
    let mut fed = 0usize;
    let mut done = Produced::default();
    let mut feed_audio = |upto: usize, seq: &mut SeqCounter| {
        let upto = upto.min(audio.len());
        let out = if upto > fed { packetizer.push(&audio[fed..upto], seq) } else { Vec::new() };
        fed = fed.max(upto);
        out
    };
    let mut n = 0usize;
    for _ in 0..repeat {
        for frame in frames {
            let enc = settings.codec.encode_frame(frame, seq.0)?;
            seq = SeqCounter(enc.report.next_seq);
            for (position, words) in &enc.report.overflowed {
                eprintln!("warning: frame {n} position {position} needs {words} words; packet dropped");
            }
            done.video_packets += enc.packets.len();
            for (meta, p) in &enc.packets {
                sink(*meta, p.to_bytes())?;
            }
            done.reports.push(enc.report);
            n += 1;
            let due = (n as f64 * f64::from(SAMPLE_RATE_HZ) / fps).round() as usize;
            for (meta, p) in feed_audio(due, &mut seq) {
                done.audio_packets += 1;
                sink(meta, p.samples().to_vec())?;
            }
        }
    }
    for (meta, p) in feed_audio(audio.len(), &mut seq) {
        done.audio_packets += 1;
        sink(meta, p.samples().to_vec())?;
    }
    if let Some(((meta, p), pad)) = packetizer.finish(&mut seq) {
        done.audio_packets += 1;
        done.audio_pad = pad;
        sink(meta, p.samples().to_vec())?;
    }
    Ok(done)
}

fn frame_report_json(i: usize, r: &EncodeReport) -> Value {
    json!({
        "frame": i,
        "packets": r.payload_bytes.len(),
        "mean_payload_bytes": r.mean_payload(),
        "compression_ratio": r.compression_ratio(),
        "saturated_blocks": r.saturated_blocks,
        "overflowed": r.overflowed.iter().map(|(p, w)| json!({"position": p, "words": w})).collect::<Vec<_>>(),
    })
}

fn print_frame_report(i: usize, r: &EncodeReport) {
    println!(
        "frame {i}: {} packets, mean payload {:.1} B, ratio {:.2}, saturated blocks {}, overflowed {}",
        r.payload_bytes.len(),
        r.mean_payload(),
        r.compression_ratio(),
        r.saturated_blocks,
        r.overflowed.len()
    );
}

fn summary_json(p: &Produced) -> Value {
    let bytes: usize = p.reports.iter().flat_map(|r| &r.payload_bytes).sum();
    let mean = if p.video_packets == 0 { 0.0 } else { bytes as f64 / p.video_packets as f64 };
    json!({
        "frames": p.reports.len(),
        "video_packets": p.video_packets,
        "audio_packets": p.audio_packets,
        "audio_pad_bytes": p.audio_pad,
        "mean_video_payload_bytes": mean,
        "compression_ratio": if mean > 0.0 { RAW_PAIR_BYTES as f64 / mean } else { 0.0 },
    })
}

pub fn encode(settings: &Settings, inputs: &[PathBuf], output: &Path, audio: Option<&Path>, fps: f64) -> Result<Value> {
    let frames = load_frames(settings, inputs)?;
    let pcm = read_pcm(audio)?;
    let mut wire = Vec::new();
    let produced = produce(settings, &frames, &pcm, fps, 1, |meta, payload| {
        let f = build_frame(meta, &payload, &settings.wire).map_err(|e| CliError::Protocol(e.to_string()))?;
        wire.push(f.bytes);
        Ok(())
    })?;
    write_frames(output, &wire)?;
    for (i, r) in produced.reports.iter().enumerate() {
        print_frame_report(i, r);
    }
    let summary = summary_json(&produced);
    println!(
        "wrote {} packets ({} video, {} audio) to {}; mean video payload {:.1} B, ratio {:.2}",
        wire.len(),
        produced.video_packets,
        produced.audio_packets,
        output.display(),
        summary["mean_video_payload_bytes"].as_f64().unwrap_or(0.0),
        summary["compression_ratio"].as_f64().unwrap_or(0.0),
    );
    if produced.audio_pad > 0 {
        println!("last audio packet padded with {} bytes", produced.audio_pad);
    }
    Ok(json!({
        "command": "encode",
        "summary": summary,
        "frames": produced.reports.iter().enumerate().map(|(i, r)| frame_report_json(i, r)).collect::<Vec<_>>(),
    }))
}

#[derive(Debug, Default)]
struct Rejections {
    fcs: usize,
    ip_checksum: usize,
    foreign: usize,
    malformed: usize,
}

impl Rejections {
    fn record(&mut self, e: &PacketError) {
        match e {
            PacketError::Fcs { .. } => self.fcs += 1,
            PacketError::Ipv4Checksum => self.ip_checksum += 1,
            PacketError::NotOurs(_) => self.foreign += 1,
            PacketError::Oversize(_) | PacketError::Malformed(_) => self.malformed += 1,
        }
    }

    fn total(&self) -> usize {
        self.fcs + self.ip_checksum + self.foreign + self.malformed
    }

    fn json(&self) -> Value {
        json!({"fcs": self.fcs, "ip_checksum": self.ip_checksum, "foreign": self.foreign, "malformed": self.malformed})
    }
}

fn stats_json(s: &StreamStats) -> Value {
    json!({
        "packets_seen": s.packets_seen,
        "video_packets": s.video_packets,
        "audio_packets": s.audio_packets,
        "lost_packets": s.lost_packets,
        "out_of_order": s.out_of_order,
        "late_packets": s.late_packets,
        "duplicates": s.duplicates,
        "malformed": s.malformed,
        "frames": s.frames,
        "missing_positions": s.missing_positions,
        "mean_video_payload_bytes": s.mean_video_payload(),
        "compression_ratio": if s.video_packets > 0 { s.compression_ratio() } else { 0.0 },
    })
}

fn print_stats(s: &StreamStats) {
    println!(
        "packets: {} seen ({} video, {} audio), {} lost, {} out of order, {} late, {} duplicate, {} malformed",
        s.packets_seen, s.video_packets, s.audio_packets, s.lost_packets, s.out_of_order, s.late_packets, s.duplicates, s.malformed
    );
    if s.video_packets > 0 {
        println!("mean video payload {:.1} B, compression ratio {:.2}", s.mean_video_payload(), s.compression_ratio());
    }
}

/// Writes frames to `dir`, numbering from `first`.
struct FrameSink {
    dir: Option<PathBuf>,
    raw: bool,
    next: usize,
}

impl FrameSink {
    fn new(dir: Option<&Path>, raw: bool) -> Result<Self> {
        if let Some(d) = dir {
            std::fs::create_dir_all(d).map_err(|e| io_error(d.display(), e))?;
        }
        Ok(FrameSink { dir: dir.map(Path::to_path_buf), raw, next: 0 })
    }

    fn save(&mut self, a: &FrameAssembly) -> Result<()> {
        if let Some(d) = &self.dir {
            save_frame(&a.frame, &d.join(frame_name(self.next, self.raw)), self.raw)?;
        }
        self.next += 1;
        Ok(())
    }
}

pub fn decode(
    settings: &Settings,
    input: &Path,
    output: Option<&Path>,
    reference: &[PathBuf],
    raw: bool,
    audio_out: Option<&Path>,
    strict: bool,
) -> Result<Value> {
    let captured = read_frames(input)?;
    let references = if reference.is_empty() { Vec::new() } else { load_frames(settings, reference)? };
    let mut rejected = Rejections::default();
    let mut r = Reassembler::new(&settings.codec, settings.geometry);
    for f in &captured {
        match parse_frame(f, settings.wire.dst_port) {
            Ok((meta, payload)) => r.push(meta, payload),
            Err(e) => rejected.record(&e),
        }
    }
    let out = r.finish();
    let mut sink = FrameSink::new(output, raw)?;
    let mut per_frame = Vec::new();
    println!("frames: {}", out.frames.len());
    for (i, a) in out.frames.iter().enumerate() {
        sink.save(a)?;
        let q = references.get(i).map(|f| psnr(f, &a.frame));
        let total = settings.geometry.positions();
        match q {
            Some(db) => println!(
                "  frame {i}: {}/{total} positions ({:.1}%), PSNR {db:.2} dB",
                a.received_count(),
                100.0 * a.completeness()
            ),
            None => println!("  frame {i}: {}/{total} positions ({:.1}%)", a.received_count(), 100.0 * a.completeness()),
        }
        per_frame.push(json!({
            "frame": i,
            "received": a.received_count(),
            "positions": total,
            "completeness": a.completeness(),
            "missing": a.missing_positions(),
            "psnr_db": q,
        }));
    }
    print_stats(&out.stats);
    if rejected.total() > 0 {
        println!(
            "rejected frames: {} ({} FCS, {} IP checksum, {} foreign, {} malformed)",
            rejected.total(),
            rejected.fcs,
            rejected.ip_checksum,
            rejected.foreign,
            rejected.malformed
        );
    }
    if let Some(p) = audio_out {
        std::fs::write(p, &out.audio).map_err(|e| io_error(p.display(), e))?;
        println!("wrote {} audio bytes to {}", out.audio.len(), p.display());
    }
    let mean_completeness = if out.frames.is_empty() {
        0.0
    } else {
        out.frames.iter().map(FrameAssembly::completeness).sum::<f64>() / out.frames.len() as f64
    };
    let report = json!({
        "command": "decode",
        "captured_frames": captured.len(),
        "rejected": rejected.json(),
        "stream": stats_json(&out.stats),
        "mean_completeness": mean_completeness,
        "audio_bytes": out.audio.len(),
        "frames": per_frame,
    });
    if strict && (rejected.total() > 0 || out.stats.malformed > 0) {
        return Err(CliError::Protocol(format!(
            "{} frames rejected, {} malformed payloads",
            rejected.total(),
            out.stats.malformed
        )));
    }
    Ok(report)
}

fn socket_addr(text: &str, port: u16) -> Result<SocketAddr> {
    if let Ok(ip) = text.parse::<IpAddr>() {
        return Ok(SocketAddr::new(ip, port));
    }
    let with_port = if text.contains(':') { text.to_string() } else { format!("{text}:{port}") };
    with_port
        .to_socket_addrs()
        .ok()
        .and_then(|mut a| a.next())
        .ok_or_else(|| CliError::Usage(format!("cannot resolve address {text:?}")))
}

pub fn send(
    settings: &Settings,
    inputs: &[PathBuf],
    to: &str,
    audio: Option<&Path>,
    fps: f64,
    repeat: usize,
) -> Result<Value> {
    let frames = if inputs.is_empty() { Vec::new() } else { load_frames(settings, inputs)? };
    let pcm = read_pcm(audio)?;
    if frames.is_empty() && pcm.is_empty() {
        return Err(CliError::Usage("nothing to send: give frames or --audio".into()));
    }
    let target = socket_addr(to, settings.wire.dst_port)?;
    let local = if target.is_ipv4() { "0.0.0.0:0" } else { "[::]:0" };
    let socket = UdpSocket::bind(local).map_err(|e| io_error("bind", e))?;
    let cfg = LiveConfig { queue_depth: settings.queue_depth, pace: settings.pace, ..LiveConfig::default() };
    let (produced, sent) = thread::scope(|s| {
        let (tx, rx) = mpsc::sync_channel(settings.queue_depth);
        let producer = s.spawn(move || {
            produce(settings, &frames, &pcm, fps, repeat, |meta, payload| {
                tx.send((meta, payload)).map_err(|_| CliError::Validation("socket writer stopped".into()))
            })
        });
        let sent = send_stream(socket, target, rx, &cfg);
        (producer.join().expect("producer thread"), sent)
    });
    let sent = sent.map_err(|e| io_error(target, e))?;
    let produced = produced?;
    println!(
        "sent {} packets ({} bytes) to {target}: {} frames, {} video, {} audio",
        sent.packets,
        sent.bytes,
        produced.reports.len(),
        produced.video_packets,
        produced.audio_packets
    );
    Ok(json!({
        "command": "send",
        "target": target.to_string(),
        "packets": sent.packets,
        "bytes": sent.bytes,
        "summary": summary_json(&produced),
    }))
}

pub fn receive(
    settings: &Settings,
    bind: &str,
    output: &Path,
    count: Option<usize>,
    idle_ms: u64,
    decode_dir: Option<&Path>,
) -> Result<Value> {
    let addr = socket_addr(bind, settings.wire.dst_port)?;
    let socket = UdpSocket::bind(addr).map_err(|e| io_error(addr, e))?;
    let local = socket.local_addr().map_err(|e| io_error(addr, e))?;
    println!("listening on {local}");
    std::io::stdout().flush().ok();
    let limits = ReceiveLimits { max_packets: count, idle_timeout: Duration::from_millis(idle_ms.max(1)) };
    let mut sink = FrameSink::new(decode_dir, false)?;
    // Decoding runs off the socket thread so the receive buffer keeps draining.
    let (report, worked) = thread::scope(|s| {
        let (tx, rx) = mpsc::channel::<(PacketMeta, Vec<u8>)>();
        let worker = s.spawn(move || -> Result<_> {
            let mut wire = Vec::new();
            let mut r = Reassembler::new(&settings.codec, settings.geometry);
            for (meta, payload) in rx {
                let f = build_frame(meta, &payload, &settings.wire).map_err(|e| CliError::Protocol(e.to_string()))?;
                wire.push(f.bytes);
                r.push(meta, payload);
                for a in r.drain_frames() {
                    sink.save(&a)?;
                }
            }
            let out = r.finish();
            for a in &out.frames {
                sink.save(a)?;
            }
            Ok((wire, out))
        });
        let report = receive_stream(&socket, &limits, |meta, payload| {
            let _ = tx.send((meta, payload.to_vec()));
        });
        drop(tx);
        (report, worker.join().expect("decode thread"))
    });
    let report = report.map_err(|e| io_error(local, e))?;
    let (wire, out) = worked?;
    write_frames(output, &wire)?;
    println!("received {} packets, ignored {} datagrams; wrote {}", report.packets, report.ignored, output.display());
    print_stats(&out.stats);
    println!("frames: {}", out.stats.frames);
    Ok(json!({
        "command": "receive",
        "listen": local.to_string(),
        "packets": report.packets,
        "ignored": report.ignored,
        "stream": stats_json(&out.stats),
    }))
}

const HISTOGRAM_BIN: usize = 64;

pub fn analyze(settings: &Settings, input: &Path, verbose: bool) -> Result<Value> {
    let captured = read_frames(input)?;
    let mut rejected = Rejections::default();
    let (mut bad_fcs, mut bad_ip, mut preambles) = (0usize, 0usize, 0usize);
    let (mut video, mut audio, mut video_bytes) = (0usize, 0usize, 0usize);
    let mut histogram: BTreeMap<usize, usize> = BTreeMap::new();
    let mut records = Vec::new();
    for (i, f) in captured.iter().enumerate() {
        let info = dissect(f);
        if let Ok(info) = &info {
            bad_fcs += usize::from(!info.fcs_ok());
            bad_ip += usize::from(!info.ip_checksum_ok);
            preambles += usize::from(info.has_preamble);
        }
        let parsed = parse_frame(f, settings.wire.dst_port);
        let (kind, seq, position, payload_len) = match &parsed {
            Ok((meta, payload)) => {
                let position = match meta.kind {
                    PacketKind::Video => {
                        video += 1;
                        video_bytes += payload.len();
                        *histogram.entry(payload.len() / HISTOGRAM_BIN).or_default() += 1;
                        payload.first().copied()
                    }
                    PacketKind::Audio => {
                        audio += 1;
                        None
                    }
                };
                (Some(meta.kind.to_string()), Some(meta.seq), position, Some(payload.len()))
            }
            Err(e) => {
                rejected.record(e);
                (None, None, None, None)
            }
        };
        let status = match &parsed {
            Ok(_) => "ok".to_string(),
            Err(e) => e.to_string(),
        };
        if verbose {
            let fcs = info.as_ref().map(|i| if i.fcs_ok() { "ok" } else { "BAD" }).unwrap_or("-");
            let ip = info.as_ref().map(|i| if i.ip_checksum_ok { "ok" } else { "BAD" }).unwrap_or("-");
            println!(
                "{i:6} len {:5} {:5} seq {:>3} pos {:>3} payload {:>5} fcs {fcs:3} ip {ip:3} {status}",
                f.len(),
                kind.as_deref().unwrap_or("-"),
                seq.map_or("-".into(), |s| s.to_string()),
                position.map_or("-".into(), |p| p.to_string()),
                payload_len.map_or("-".into(), |p| p.to_string()),
            );
        }
        records.push(json!({
            "index": i,
            "len": f.len(),
            "fcs_ok": info.as_ref().ok().map(|i| i.fcs_ok()),
            "ip_checksum_ok": info.as_ref().ok().map(|i| i.ip_checksum_ok),
            "kind": kind,
            "seq": seq,
            "position": position,
            "payload_len": payload_len,
            "status": status,
        }));
    }
    let mean = if video == 0 { 0.0 } else { video_bytes as f64 / video as f64 };
    let ratio = if mean > 0.0 { RAW_PAIR_BYTES as f64 / mean } else { 0.0 };
    println!("{} frames ({} with preamble): {} video, {} audio, {} rejected", captured.len(), preambles, video, audio, rejected.total());
    println!("FCS errors {bad_fcs}, IPv4 checksum errors {bad_ip}");
    if rejected.total() > 0 {
        println!(
            "rejected: {} FCS, {} IP checksum, {} foreign, {} malformed",
            rejected.fcs, rejected.ip_checksum, rejected.foreign, rejected.malformed
        );
    }
    if video > 0 {
        println!("mean video payload {mean:.1} B, compression ratio {ratio:.2} (vs {RAW_PAIR_BYTES} B raw)");
        println!("video payload sizes:");
        for (bin, n) in &histogram {
            println!("  {:5}-{:5} B: {n}", bin * HISTOGRAM_BIN, (bin + 1) * HISTOGRAM_BIN - 1);
        }
    }
    Ok(json!({
        "command": "analyze",
        "frames": captured.len(),
        "with_preamble": preambles,
        "video_packets": video,
        "audio_packets": audio,
        "fcs_errors": bad_fcs,
        "ip_checksum_errors": bad_ip,
        "rejected": rejected.json(),
        "mean_video_payload_bytes": mean,
        "compression_ratio": ratio,
        "histogram": histogram.iter().map(|(b, n)| json!({"from": b * HISTOGRAM_BIN, "count": n})).collect::<Vec<_>>(),
        "records": records,
    }))
}

pub fn simulate(settings: &Settings, input: &Path, output: &Path) -> Result<Value> {
    let captured = read_frames(input)?;
    let total = captured.len();
    let kept = impair(captured, &settings.impair)?;
    write_frames(output, &kept)?;
    let c = &settings.impair;
    println!(
        "kept {} of {total} frames (drop {}, reorder window {}, seed {}); wrote {}",
        kept.len(),
        c.drop_probability,
        c.reorder_window,
        c.seed,
        output.display()
    );
    Ok(json!({
        "command": "simulate",
        "input_frames": total,
        "output_frames": kept.len(),
        "drop_probability": c.drop_probability,
        "reorder_window": c.reorder_window,
        "seed": c.seed,
    }))
}

pub fn cycles(settings: &Settings, input: Option<&Path>, payload: Option<f64>) -> Result<Value> {
    let mean = match (payload, input) {
        (Some(p), _) => p,
        (None, Some(path)) => {
            let (mut n, mut bytes) = (0usize, 0usize);
            for f in read_frames(path)? {
                if let Ok((meta, p)) = parse_frame(&f, settings.wire.dst_port) {
                    if meta.kind == PacketKind::Video {
                        n += 1;
                        bytes += p.len();
                    }
                }
            }
            if n == 0 {
                return Err(CliError::Validation(format!("{} holds no video packets", path.display())));
            }
            bytes as f64 / n as f64
        }
        (None, None) => return Err(CliError::Usage("give a capture or --payload".into())),
    };
    let model = CycleModel::default();
    let per_frame = settings.geometry.positions();
    let t = estimate_throughput(&model, mean, per_frame)?;
    println!(
        "mean video payload {mean:.1} B: {:.0} cycles per packet, {per_frame} packets per frame, {:.1} frames/s at {} MHz",
        t.cycles_per_packet,
        t.fps,
        model.clock_hz / 1_000_000
    );
    Ok(json!({
        "command": "cycles",
        "mean_video_payload_bytes": mean,
        "cycles_per_packet": t.cycles_per_packet,
        "packets_per_frame": per_frame,
        "fps": t.fps,
        "clock_hz": model.clock_hz,
    }))
}
