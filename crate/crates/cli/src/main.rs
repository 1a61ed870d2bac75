//! `vidlink`: encode, decode, stream and inspect video/audio captures.
//!
//! Exit codes: 0 success, 1 usage, 2 validation or I/O, 3 protocol.

mod commands;
mod config;
mod error;
mod frames;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use vidlink_core::frame_prep::Geometry;

use crate::config::{parse_geometry, Overrides, Settings};

#[derive(Debug, Parser)]
#[command(name = "vidlink", version, about = "MJPEG over Ethernet/UDP: encoder, decoder, streamer and capture analyzer")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true, env = "VIDLINK_CONFIG")]
    config: Option<PathBuf>,
    /// Frame size as WIDTHxHEIGHT [default: 320x180].
    #[arg(long, global = true, env = "VIDLINK_GEOMETRY", value_parser = parse_geometry)]
    geometry: Option<Geometry>,
    /// UDP port for both ends [default: 5005].
    #[arg(long, global = true, env = "VIDLINK_PORT")]
    port: Option<u16>,
    /// Write the 8-byte preamble in capture files [default: true].
    #[arg(long, global = true, env = "VIDLINK_PREAMBLE", num_args = 0..=1, default_missing_value = "true")]
    preamble: Option<bool>,
    /// Impairment RNG seed.
    #[arg(long, global = true, env = "VIDLINK_SEED")]
    seed: Option<u64>,
    /// Per-packet drop probability.
    #[arg(long, global = true, env = "VIDLINK_DROP")]
    drop: Option<f64>,
    /// Reorder window in packets.
    #[arg(long, global = true, env = "VIDLINK_REORDER")]
    reorder: Option<usize>,
    /// Pace live sending at the modeled 100 Mbit/s link rate.
    #[arg(long, global = true, env = "VIDLINK_PACE")]
    pace: bool,
    /// Also write a JSON report to this path.
    #[arg(long, global = true, env = "VIDLINK_REPORT")]
    report: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Encode frames (and optional PCM audio) into a capture file.
    Encode {
        /// Frame files or directories.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Capture to write; a `.csv` extension writes hex-CSV.
        #[arg(short, long)]
        output: PathBuf,
        /// Unsigned 8-bit PCM at 8 kHz to interleave.
        #[arg(long)]
        audio: Option<PathBuf>,
        /// Frame rate used to interleave audio.
        #[arg(long, default_value_t = 30.0)]
        fps: f64,
    },
    /// Rebuild frames and audio from a capture.
    Decode {
        /// Capture file or hex-CSV.
        input: PathBuf,
        /// Directory for reconstructed frames.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Reference frames for PSNR, in order.
        #[arg(long)]
        reference: Vec<PathBuf>,
        /// Write raw RGB24 instead of PNG.
        #[arg(long)]
        raw: bool,
        /// Where to write the reassembled PCM.
        #[arg(long)]
        audio_out: Option<PathBuf>,
        /// Exit with a protocol error if any frame is rejected.
        #[arg(long)]
        strict: bool,
    },
    /// Stream frames and audio live over UDP.
    Send {
        /// Frame files or directories.
        inputs: Vec<PathBuf>,
        /// Destination HOST or HOST:PORT.
        #[arg(long, default_value = "127.0.0.1")]
        to: String,
        #[arg(long)]
        audio: Option<PathBuf>,
        #[arg(long, default_value_t = 30.0)]
        fps: f64,
        /// Send the whole sequence this many times.
        #[arg(long, default_value_t = 1)]
        repeat: usize,
    },
    /// Receive a live UDP stream into a capture file.
    Receive {
        /// Local address to listen on.
        #[arg(long, default_value = "0.0.0.0")]
        bind: String,
        /// Capture to write.
        #[arg(short, long)]
        output: PathBuf,
        /// Stop after this many packets.
        #[arg(long)]
        count: Option<usize>,
        /// Stop after this many milliseconds without traffic.
        #[arg(long, default_value_t = 2000)]
        idle_ms: u64,
        /// Also decode frames into this directory.
        #[arg(long)]
        decode: Option<PathBuf>,
    },
    /// Dissect a capture: headers, checksums, payload statistics.
    Analyze {
        input: PathBuf,
        /// One line per frame.
        #[arg(short, long)]
        verbose: bool,
    },
    /// Apply seeded drop and reorder to a capture.
    Simulate {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run the transmitter cycle model over a capture.
    Cycles {
        /// Capture to measure; omit when giving --payload.
        input: Option<PathBuf>,
        /// Mean video payload in bytes instead of measuring a capture.
        #[arg(long)]
        payload: Option<f64>,
    },
}

fn run(cli: Cli) -> error::Result<()> {
    let overrides = Overrides {
        geometry: cli.geometry,
        port: cli.port,
        preamble: cli.preamble,
        drop: cli.drop,
        reorder: cli.reorder,
        seed: cli.seed,
        pace: cli.pace,
    };
    let settings = Settings::load(cli.config.as_deref(), &overrides)?;
    let report = match cli.command {
        Command::Encode { inputs, output, audio, fps } => {
            commands::encode(&settings, &inputs, &output, audio.as_deref(), fps)?
        }
        Command::Decode { input, output, reference, raw, audio_out, strict } => {
            commands::decode(&settings, &input, output.as_deref(), &reference, raw, audio_out.as_deref(), strict)?
        }
        Command::Send { inputs, to, audio, fps, repeat } => {
            commands::send(&settings, &inputs, &to, audio.as_deref(), fps, repeat)?
        }
        Command::Receive { bind, output, count, idle_ms, decode } => {
            commands::receive(&settings, &bind, &output, count, idle_ms, decode.as_deref())?
        }
        Command::Analyze { input, verbose } => commands::analyze(&settings, &input, verbose)?,
        Command::Simulate { input, output } => commands::simulate(&settings, &input, &output)?,
        Command::Cycles { input, payload } => commands::cycles(&settings, input.as_deref(), payload)?,
    };
    if let Some(path) = cli.report {
        let text = serde_json::to_string_pretty(&report).expect("reports serialize");
        std::fs::write(&path, text + "\n").map_err(|e| error::io_error(path.display(), e))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("vidlink: {e}");
            e.exit_code()
        }
    }
}
