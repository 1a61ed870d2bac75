//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fail.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vidlink_core::bitstream::{BitReader, WordWriter};
use vidlink_core::entropy::HuffmanSet;
use vidlink_core::frame_prep::{Geometry, PixelBlock, RgbFrame};
use vidlink_core::packet::{
    build_frame, crc::POLY_REFLECTED, crc32, parse_frame, PacketError, PacketKind, PacketMeta, WireConfig,
    DEFAULT_PORT, ETH_HEADER_LEN, FCS_LEN, IPV4_HEADER_LEN, MAX_FRAME_LEN, MAX_PAYLOAD, META_LEN, MIN_FRAME_LEN,
    PREAMBLE, PREAMBLE_LEN, UDP_HEADER_LEN,
};
use vidlink_core::quant_zigzag::{QuantTable, QuantizedBlock, QUANT_MAX, QUANT_MIN};
use vidlink_core::stream::{
    audio_packetize, decode_packet, estimate_throughput, impair, psnr, reassemble, AudioPacketizer, Codec,
    CycleModel, FrameAssembly, ImpairConfig, Reassembler, SeqCounter, AUDIO_CHUNK, MISSING_FILL, RAW_PAIR_BYTES,
};
use vidlink_core::transform::{default_constants, PASS_FRAC_BITS};
use vidlink_core::Channel;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_block(r: &mut ChaCha8Rng, channel: Channel) -> QuantizedBlock {
    let density: f64 = r.random_range(0.0..=1.0);
    let coeffs = std::array::from_fn(|_| if r.random_bool(density) { r.random_range(-1023..=1023) } else { 0 });
    QuantizedBlock { coeffs, channel }
}

fn edge_blocks() -> Vec<[i32; 64]> {
    let mut min = [-1023; 64];
    min[0] = -1024;
    let mut out = vec![[0; 64], [1023; 64], [-1023; 64], min, [1; 64], [-1; 64]];
    out.push(std::array::from_fn(|i| if i % 2 == 0 { 1023 } else { -1023 }));
    for k in 0..64 {
        let mut c = [0; 64];
        c[k] = if k % 2 == 0 { 1023 } else { -1023 };
        out.push(c);
        let mut c = [0; 64];
        c[k] = 1;
        c[63] = -1;
        out.push(c);
    }
    for run in [15, 16, 17, 31, 32, 33, 47, 48, 62] {
        let mut c = [0; 64];
        c[run + 1] = 5;
        out.push(c);
    }
    out
}

fn criterion_1() -> Outcome {
    let set = HuffmanSet::default();
    let mut r = rng(1);
    let mut blocks: Vec<QuantizedBlock> = (0..10_000)
        .map(|i| random_block(&mut r, [Channel::Y, Channel::Cb, Channel::Cr][i % 3]))
        .collect();
    for c in edge_blocks() {
        for channel in [Channel::Y, Channel::Cb] {
            blocks.push(QuantizedBlock { coeffs: c, channel });
        }
    }
    let mut mismatches = 0;
    for b in &blocks {
        let mut w = WordWriter::new();
        for u in set.encode_block(b).expect("encodable") {
            w.push_unit(&u).expect("fits");
        }
        let s = w.finish();
        let mut rd = BitReader::with_limit(&s.words, s.total_bits);
        match set.decode_block(&mut rd, b.channel) {
            Ok(d) if d == *b && rd.remaining() == 0 => {}
            _ => mismatches += 1,
        }
    }
    outcome(mismatches == 0, format!("{} blocks, {mismatches} mismatches", blocks.len()))
}

fn pixel_block(r: &mut ChaCha8Rng, i: usize) -> PixelBlock {
    let samples: [i16; 64] = match i % 4 {
        0 => std::array::from_fn(|_| r.random_range(-128..=127)),
        1 => {
            let (base, dx, dy): (f64, f64, f64) = (r.random_range(-100.0..100.0), r.random_range(-8.0..8.0), r.random_range(-8.0..8.0));
            std::array::from_fn(|k| (base + dx * (k % 8) as f64 + dy * (k / 8) as f64).round().clamp(-128.0, 127.0) as i16)
        }
        2 => {
            let v = r.random_range(-128..=127);
            std::array::from_fn(|_| v)
        }
        _ => {
            let (lo, hi) = (r.random_range(-128..=0), r.random_range(0..=127));
            std::array::from_fn(|_| if r.random_bool(0.5) { lo } else { hi })
        }
    };
    PixelBlock { samples, channel: Channel::Y }
}

fn criterion_2() -> Outcome {
    let mut r = rng(2);
    let scale = f64::from(1u32 << (2 * PASS_FRAC_BITS));
    let (mut worst_rel, mut worst_small, mut worst_int) = (0f64, 0f64, 0f64);
    let mut failures = 0;
    for i in 0..10_000 {
        let b = pixel_block(&mut r, i);
        let oracle = common::dct_oracle(&b.samples);
        let (fixed, _) = default_constants().dct_2d_fixed(&b);
        let ints = default_constants().dct_2d(&b);
        for k in 0..64 {
            let got = f64::from(fixed[k]) / scale;
            if oracle[k].abs() >= 1.0 {
                let rel = (got - oracle[k]).abs() / oracle[k].abs();
                worst_rel = worst_rel.max(rel);
                failures += usize::from(rel > 0.05);
            } else {
                let abs = (got - oracle[k]).abs();
                worst_small = worst_small.max(abs);
                failures += usize::from(abs > 1.0);
            }
            let int_err = (f64::from(ints.coeffs[k]) - oracle[k]).abs();
            worst_int = worst_int.max(int_err);
            failures += usize::from(int_err > 0.5 + 1.0 / 16.0);
        }
    }
    outcome(
        failures == 0,
        format!(
            "worst relative {:.3}%, worst small-coefficient abs {worst_small:.4}, worst integer abs {worst_int:.4}",
            worst_rel * 100.0
        ),
    )
}

fn exact_rounded_division(v: i32, q: i32) -> i32 {
    // Half away from zero using only integer division of non-negatives.
    let m = (2 * v.abs() + q) / (2 * q);
    if v < 0 {
        -m
    } else {
        m
    }
}

fn criterion_3() -> Outcome {
    let tables = [QuantTable::standard_luma(), QuantTable::standard_chroma()];
    let mut mismatches = 0;
    let mut checked = 0;
    for t in &tables {
        for idx in 0..64 {
            let q = i32::from(t.divisors()[idx]);
            for v in -2048..=2047 {
                checked += 1;
                if t.quantize_one(v, idx).clamp(QUANT_MIN, QUANT_MAX) != exact_rounded_division(v, q).clamp(QUANT_MIN, QUANT_MAX)
                    || t.quantize_one(v, idx) != exact_rounded_division(v, q)
                {
                    mismatches += 1;
                }
            }
        }
    }
    outcome(mismatches == 0, format!("{checked} cases over 128 table entries, {mismatches} mismatches"))
}

fn bitwise_crc(bytes: &[u8]) -> u32 {
    let mut reg = 0xFFFF_FFFFu32;
    for &b in bytes {
        for i in 0..8 {
            let feedback = (reg ^ (u32::from(b) >> i)) & 1;
            reg >>= 1;
            if feedback != 0 {
                reg ^= POLY_REFLECTED;
            }
        }
    }
    !reg
}

fn criterion_4() -> Outcome {
    let mut r = rng(4);
    let mut crc_mismatch = 0;
    for _ in 0..10_000 {
        let len = r.random_range(0..2000);
        let s: Vec<u8> = (0..len).map(|_| r.random()).collect();
        crc_mismatch += usize::from(crc32(&s) != bitwise_crc(&s));
    }
    let check = crc32(b"123456789");
    let mut detected = 0;
    let cfg = WireConfig::default();
    for i in 0..1000u32 {
        let len = r.random_range(0..=MAX_PAYLOAD);
        let payload: Vec<u8> = (0..len).map(|_| r.random()).collect();
        let kind = if i % 2 == 0 { PacketKind::Audio } else { PacketKind::Video };
        let mut f = build_frame(PacketMeta { kind, seq: i as u8 }, &payload, &cfg).unwrap().bytes;
        let bit = r.random_range(PREAMBLE_LEN * 8..f.len() * 8);
        f[bit / 8] ^= 1 << (bit % 8);
        detected += usize::from(matches!(parse_frame(&f, DEFAULT_PORT), Err(PacketError::Fcs { .. })));
    }
    outcome(
        crc_mismatch == 0 && check == 0xCBF4_3926 && detected == 1000,
        format!("{crc_mismatch} table/bitwise mismatches, check value {check:#010X}, {detected}/1000 bit flips detected"),
    )
}

fn criterion_5() -> Outcome {
    let cfg = WireConfig::default();
    let mut problems = Vec::new();
    for len in 0..=MAX_PAYLOAD {
        let payload: Vec<u8> = (0..len).map(|i| (i * 7 + len) as u8).collect();
        let meta = PacketMeta { kind: PacketKind::Video, seq: len as u8 };
        let f = build_frame(meta, &payload, &cfg).unwrap();
        let b = &f.bytes;
        let eth = f.ethernet_len();
        let data_at = PREAMBLE_LEN + ETH_HEADER_LEN + IPV4_HEADER_LEN + UDP_HEADER_LEN + META_LEN;
        let expected_len = PREAMBLE_LEN + (data_at - PREAMBLE_LEN + len).max(MIN_FRAME_LEN - FCS_LEN) + FCS_LEN;
        let ip = PREAMBLE_LEN + ETH_HEADER_LEN;
        let udp = ip + IPV4_HEADER_LEN;
        let sections_ok = b[..PREAMBLE_LEN] == PREAMBLE
            && b[PREAMBLE_LEN + 12..PREAMBLE_LEN + 14] == [0x08, 0x00]
            && b[ip] == 0x45
            && usize::from(u16::from_be_bytes([b[ip + 2], b[ip + 3]])) == IPV4_HEADER_LEN + UDP_HEADER_LEN + META_LEN + len
            && usize::from(u16::from_be_bytes([b[udp + 4], b[udp + 5]])) == UDP_HEADER_LEN + META_LEN + len
            && b[udp + UDP_HEADER_LEN] == 0x01
            && b[udp + UDP_HEADER_LEN + 1] == len as u8
            && b[data_at..data_at + len] == payload[..]
            && b.len() == expected_len
            && b[b.len() - FCS_LEN..] == crc32(&b[PREAMBLE_LEN..b.len() - FCS_LEN]).to_le_bytes();
        let round_trip = parse_frame(b, DEFAULT_PORT).ok() == Some((meta, payload));
        if !sections_ok || !round_trip || !(MIN_FRAME_LEN..=MAX_FRAME_LEN).contains(&eth) {
            problems.push(len);
        }
    }
    let sizes = [PREAMBLE_LEN, ETH_HEADER_LEN, IPV4_HEADER_LEN, UDP_HEADER_LEN, 1, 1, MAX_PAYLOAD, FCS_LEN];
    let table_ok = sizes == [8, 14, 20, 8, 1, 1, 1470, 4];
    outcome(
        problems.is_empty() && table_ok,
        format!("sections {sizes:?}, payload lengths 0..=1470, {} failing lengths", problems.len()),
    )
}

fn criterion_6(codec: &Codec, image: &RgbFrame) -> Outcome {
    let enc = codec.encode_frame(image, 0).unwrap();
    let n = enc.packets.len();
    outcome(n == 120 && enc.report.overflowed.is_empty(), format!("{n} video packets for 320x180"))
}

fn criterion_7(codec: &Codec, image: &RgbFrame, other: &RgbFrame) -> Outcome {
    let mean = codec.encode_frame(image, 0).unwrap().report.mean_payload();
    let other_mean = codec.encode_frame(other, 0).unwrap().report.mean_payload();
    outcome(
        mean <= 275.0,
        format!(
            "mean payload {mean:.1} bytes, ratio {:.2} vs {RAW_PAIR_BYTES}-byte raw (second image {other_mean:.1} bytes; reference figure 135 bytes, ratio 8)",
            RAW_PAIR_BYTES as f64 / mean
        ),
    )
}

fn criterion_8(codec: &Codec, image: &RgbFrame) -> Outcome {
    let g = image.geometry();
    let enc = codec.encode_frame(image, 0).unwrap();
    let mut full = FrameAssembly::new(g);
    for (_, p) in &enc.packets {
        decode_packet(codec, p, &mut full).unwrap();
    }
    let quality = psnr(image, &full.frame);

    let mut coverage = vec![0u8; g.width * g.height];
    let mut placement_errors = 0;
    for (_, p) in &enc.packets {
        let regions = FrameAssembly::position_regions(&g, usize::from(p.position));
        let mut inside = vec![false; g.width * g.height];
        for (top, left, h, w) in regions {
            for r in top..top + h {
                for c in left..left + w {
                    inside[r * g.width + c] = true;
                    coverage[r * g.width + c] += 1;
                }
            }
        }
        let mut alone = FrameAssembly::new(g);
        decode_packet(codec, p, &mut alone).unwrap();
        for (i, &is_in) in inside.iter().enumerate() {
            let got = &alone.frame.pixels[i * 3..i * 3 + 3];
            let ok = if is_in { got == &full.frame.pixels[i * 3..i * 3 + 3] } else { got == [MISSING_FILL; 3] };
            placement_errors += usize::from(!ok);
        }
    }
    let partition = coverage.iter().all(|&c| c == 1);
    outcome(
        quality >= 28.0 && placement_errors == 0 && partition,
        format!("PSNR {quality:.2} dB, {placement_errors} misplaced pixels, partition {}", if partition { "exact" } else { "broken" }),
    )
}

fn criterion_9(codec: &Codec, images: &[RgbFrame]) -> Outcome {
    let g = images[0].geometry();
    let cfg = WireConfig::default();
    let mut seq = SeqCounter::default();
    let mut wire = Vec::new();
    let mut lossless = Vec::new();
    for (i, img) in images.iter().cycle().take(6).enumerate() {
        let enc = codec.encode_frame(img, seq.0).unwrap();
        seq.0 = enc.report.next_seq;
        let mut a = FrameAssembly::new(g);
        for (meta, p) in &enc.packets {
            decode_packet(codec, p, &mut a).unwrap();
            wire.push(build_frame(*meta, &p.to_bytes(), &cfg).unwrap().bytes);
        }
        lossless.push(a);
        let (audio, _) = audio_packetize(&[i as u8; AUDIO_CHUNK], &mut seq);
        wire.extend(audio.iter().map(|(m, p)| build_frame(*m, p.samples(), &cfg).unwrap().bytes));
    }
    let survivors = impair(wire, &ImpairConfig { drop_probability: 0.1, reorder_window: 8, seed: 9 }).unwrap();
    let received = survivors.len();
    let out = reassemble(codec, g, survivors.iter().map(|f| parse_frame(f, DEFAULT_PORT).unwrap()));
    let mut mismatched = 0;
    let mut covered = 0;
    if out.frames.len() != lossless.len() {
        return outcome(false, format!("{} frames reassembled, expected {}", out.frames.len(), lossless.len()));
    }
    for (got, want) in out.frames.iter().zip(&lossless) {
        for p in 0..g.positions() {
            let received = got.is_received(p);
            covered += usize::from(received);
            for (top, left, h, w) in FrameAssembly::position_regions(&g, p) {
                for r in top..top + h {
                    for c in left..left + w {
                        let px = got.frame.pixel(r, c);
                        let expect = if received { want.frame.pixel(r, c) } else { [MISSING_FILL; 3] };
                        mismatched += usize::from(px != expect);
                    }
                }
            }
        }
    }
    let total = lossless.len() * g.positions();
    outcome(
        mismatched == 0 && out.stats.out_of_order > 0 && covered < total,
        format!(
            "{received} of {} packets survived, {covered}/{total} positions rebuilt, {} reordered arrivals, {mismatched} mismatched pixels",
            total + lossless.len(),
            out.stats.out_of_order
        ),
    )
}

fn criterion_10() -> Outcome {
    let t = estimate_throughput(&CycleModel::default(), 135.0, 120).unwrap();
    let ok = (4300.0..=4400.0).contains(&t.cycles_per_packet) && (170.0..=200.0).contains(&t.fps);
    outcome(ok, format!("{:.0} cycles/packet, {:.1} FPS", t.cycles_per_packet, t.fps))
}

fn pcm_chunk(r: &mut ChaCha8Rng, n: usize) -> Vec<u8> {
    (0..n).map(|_| r.random()).collect()
}

fn criterion_11(codec: &Codec) -> Outcome {
    const PACKETS: usize = 240_000;
    let start = Instant::now();
    let cfg = WireConfig::default();
    let mut source = rng(11);
    let mut expected = rng(11);
    let mut seq = SeqCounter::default();
    let mut packetizer = AudioPacketizer::new();
    let mut rx = Reassembler::new(codec, Geometry::default());
    let (mut sent, mut mismatched_bytes, mut checked) = (0usize, 0usize, 0usize);
    let mut compare = |bytes: Vec<u8>, checked: &mut usize| -> usize {
        *checked += bytes.len();
        let want = pcm_chunk(&mut expected, bytes.len());
        bytes.iter().zip(&want).filter(|(a, b)| a != b).count()
    };
    while sent < PACKETS {
        // Odd-sized reads exercise the held remainder.
        let pcm = pcm_chunk(&mut source, 1337);
        let take = pcm.len().min((PACKETS - sent) * AUDIO_CHUNK - packetizer.buffered());
        for (meta, p) in packetizer.push(&pcm[..take], &mut seq) {
            let frame = build_frame(meta, p.samples(), &cfg).unwrap();
            let (m, payload) = parse_frame(&frame.bytes, DEFAULT_PORT).unwrap();
            rx.push(m, payload);
            sent += 1;
        }
        mismatched_bytes += compare(rx.drain_audio(), &mut checked);
    }
    let out = rx.finish();
    mismatched_bytes += compare(out.audio, &mut checked);
    let elapsed = start.elapsed();
    let s = out.stats;
    let ok = mismatched_bytes == 0
        && checked == PACKETS * AUDIO_CHUNK
        && s.audio_packets == PACKETS
        && s.lost_packets == 0
        && s.out_of_order == 0
        && elapsed < Duration::from_secs(60);
    outcome(
        ok,
        format!(
            "{} packets, {checked} bytes, {mismatched_bytes} byte mismatches, {} lost, {} reordered, {:.1} s",
            s.audio_packets,
            s.lost_packets,
            s.out_of_order,
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_12(codec: &Codec, images: &[RgbFrame]) -> Outcome {
    let frames: Vec<&RgbFrame> = images.iter().cycle().take(30).collect();
    // One untimed pass warms caches and lazy tables.
    codec.encode_frame(frames[0], 0).unwrap();
    let start = Instant::now();
    let mut packets = 0;
    let mut seq = 0u8;
    for f in &frames {
        let enc = codec.encode_frame(f, seq).unwrap();
        seq = enc.report.next_seq;
        packets += enc.packets.len();
    }
    let elapsed = start.elapsed();
    outcome(
        elapsed < Duration::from_secs(1) && packets == 3600,
        format!("30 frames ({packets} packets) in {:.1} ms", elapsed.as_secs_f64() * 1000.0),
    )
}

type Criterion<'a> = (&'a str, Box<dyn Fn() -> Outcome + 'a>);

fn main() -> ExitCode {
    let codec = Codec::default();
    let image = common::natural_image();
    let other = common::second_image();
    let images = [image.clone(), other.clone()];
    let criteria: Vec<Criterion> = vec![
        ("entropy/bitstream losslessness", Box::new(criterion_1)),
        ("fixed-point DCT accuracy", Box::new(criterion_2)),
        ("reciprocal quantization", Box::new(criterion_3)),
        ("CRC-32", Box::new(criterion_4)),
        ("wire-format conformance", Box::new(criterion_5)),
        ("packets per frame", Box::new(|| criterion_6(&codec, &image))),
        ("compression", Box::new(|| criterion_7(&codec, &image, &other))),
        ("end-to-end quality", Box::new(|| criterion_8(&codec, &image))),
        ("loss and reorder robustness", Box::new(|| criterion_9(&codec, &images))),
        ("throughput model", Box::new(criterion_10)),
        ("audio loopback", Box::new(|| criterion_11(&codec))),
        ("real-time encode budget", Box::new(|| criterion_12(&codec, &images))),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        failed += usize::from(!o.pass);
        println!("criterion {:>2} {:<31} {}  {}", i + 1, name, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
