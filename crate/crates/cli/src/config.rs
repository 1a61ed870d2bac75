//! Settings: built-in defaults, overlaid by an optional TOML file, overlaid
//! by flags and `VIDLINK_*` environment variables.
//!
//! ```toml
//! [geometry]
//! width = 320
//! height = 180
//!
//! [wire]
//! src_mac = "02:00:00:00:00:01"
//! dst_mac = "02:00:00:00:00:02"
//! src_ip = "192.168.1.1"
//! dst_ip = "192.168.1.2"
//! src_port = 5005
//! dst_port = 5005
//! ttl = 64
//! preamble = true
//!
//! [tables]            # all optional
//! luma_quant = "luma.txt"
//! chroma_quant = "chroma.txt"
//! dc_luma = "dc_luma.txt"
//! ac_luma = "ac_luma.txt"
//! dc_chroma = "dc_chroma.txt"
//! ac_chroma = "ac_chroma.txt"
//!
//! [impair]
//! drop = 0.0
//! reorder = 0
//! seed = 0
//!
//! [live]
//! pace = false
//! queue_depth = 256
//! ```
//!
//! Relative table paths are resolved against the config file's directory.

use std::net::Ipv4Addr;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use vidlink_core::entropy::{HuffmanSet, HuffmanTable, TableClass};
use vidlink_core::frame_prep::Geometry;
use vidlink_core::packet::WireConfig;
use vidlink_core::quant_zigzag::{ChannelClass, QuantTable};
use vidlink_core::stream::{Codec, ImpairConfig};

use crate::error::{CliError, Result};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub geometry: Option<GeometrySection>,
    #[serde(default)]
    pub wire: WireSection,
    #[serde(default)]
    pub tables: TableSection,
    #[serde(default)]
    pub impair: ImpairSection,
    #[serde(default)]
    pub live: LiveSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub width: usize,
    pub height: usize,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireSection {
    pub src_mac: Option<String>,
    pub dst_mac: Option<String>,
    pub src_ip: Option<Ipv4Addr>,
    pub dst_ip: Option<Ipv4Addr>,
    pub src_port: Option<u16>,
    pub dst_port: Option<u16>,
    pub ttl: Option<u8>,
    pub preamble: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableSection {
    pub luma_quant: Option<PathBuf>,
    pub chroma_quant: Option<PathBuf>,
    pub dc_luma: Option<PathBuf>,
    pub ac_luma: Option<PathBuf>,
    pub dc_chroma: Option<PathBuf>,
    pub ac_chroma: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImpairSection {
    pub drop: Option<f64>,
    pub reorder: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiveSection {
    pub pace: Option<bool>,
    pub queue_depth: Option<usize>,
}

/// Values given on the command line; `None` falls through to the file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub geometry: Option<Geometry>,
    pub port: Option<u16>,
    pub preamble: Option<bool>,
    pub drop: Option<f64>,
    pub reorder: Option<usize>,
    pub seed: Option<u64>,
    pub pace: bool,
}

#[derive(Debug)]
pub struct Settings {
    pub geometry: Geometry,
    pub wire: WireConfig,
    pub codec: Codec,
    pub impair: ImpairConfig,
    pub pace: bool,
    pub queue_depth: usize,
}

pub fn parse_geometry(s: &str) -> std::result::Result<Geometry, String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected WIDTHxHEIGHT, got {s:?}"))?;
    let w = w.trim().parse().map_err(|_| format!("bad width in {s:?}"))?;
    let h = h.trim().parse().map_err(|_| format!("bad height in {s:?}"))?;
    Geometry::new(w, h).map_err(|e| e.to_string())
}

pub fn parse_mac(s: &str) -> Result<[u8; 6]> {
    let parts: Vec<&str> = s.split([':', '-']).collect();
    let bad = || CliError::Validation(format!("invalid MAC address {s:?}"));
    if parts.len() != 6 {
        return Err(bad());
    }
    let mut mac = [0u8; 6];
    for (m, p) in mac.iter_mut().zip(parts) {
        *m = u8::from_str_radix(p, 16).map_err(|_| bad())?;
    }
    Ok(mac)
}

fn read_text(base: &Path, rel: &Path) -> Result<String> {
    let path = base.join(rel);
    std::fs::read_to_string(&path).map_err(|e| crate::error::io_error(path.display(), e))
}

fn load_codec(tables: &TableSection, base: &Path) -> Result<Codec> {
    let mut codec = Codec::default();
    let quant = |p: &Option<PathBuf>, class| -> Result<Option<QuantTable>> {
        p.as_ref()
            .map(|p| {
                QuantTable::parse(&read_text(base, p)?, class)
                    .map_err(|e| CliError::Validation(format!("{}: {e}", p.display())))
            })
            .transpose()
    };
    if let Some(t) = quant(&tables.luma_quant, ChannelClass::Luminance)? {
        codec.luma_quant = t;
    }
    if let Some(t) = quant(&tables.chroma_quant, ChannelClass::Chrominance)? {
        codec.chroma_quant = t;
    }
    let huff = |p: &Option<PathBuf>, class, slot: &mut HuffmanTable| -> Result<()> {
        if let Some(p) = p {
            *slot = HuffmanTable::parse(class, &read_text(base, p)?)
                .map_err(|e| CliError::Validation(format!("{}: {e}", p.display())))?;
        }
        Ok(())
    };
    let HuffmanSet { dc_luma, ac_luma, dc_chroma, ac_chroma } = &mut codec.huffman;
    huff(&tables.dc_luma, TableClass::DcLuma, dc_luma)?;
    huff(&tables.ac_luma, TableClass::AcLuma, ac_luma)?;
    huff(&tables.dc_chroma, TableClass::DcChroma, dc_chroma)?;
    huff(&tables.ac_chroma, TableClass::AcChroma, ac_chroma)?;
    Ok(codec)
}

impl Settings {
    pub fn load(config: Option<&Path>, o: &Overrides) -> Result<Settings> {
        let (file, base) = match config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| crate::error::io_error(path.display(), e))?;
                let file: FileConfig =
                    toml::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
                (file, path.parent().map(Path::to_path_buf).unwrap_or_default())
            }
            None => (FileConfig::default(), PathBuf::new()),
        };
        let geometry = match (o.geometry, &file.geometry) {
            (Some(g), _) => g,
            (None, Some(g)) => Geometry::new(g.width, g.height).map_err(|e| CliError::Validation(e.to_string()))?,
            (None, None) => Geometry::default(),
        };
        let mut wire = WireConfig::default();
        let w = &file.wire;
        if let Some(m) = &w.src_mac {
            wire.src_mac = parse_mac(m)?;
        }
        if let Some(m) = &w.dst_mac {
            wire.dst_mac = parse_mac(m)?;
        }
        wire.src_ip = w.src_ip.unwrap_or(wire.src_ip);
        wire.dst_ip = w.dst_ip.unwrap_or(wire.dst_ip);
        wire.src_port = w.src_port.unwrap_or(wire.src_port);
        wire.dst_port = w.dst_port.unwrap_or(wire.dst_port);
        wire.ttl = w.ttl.unwrap_or(wire.ttl);
        wire.include_preamble = o.preamble.or(w.preamble).unwrap_or(true);
        if let Some(port) = o.port {
            wire.src_port = port;
            wire.dst_port = port;
        }
        let impair = ImpairConfig {
            drop_probability: o.drop.or(file.impair.drop).unwrap_or(0.0),
            reorder_window: o.reorder.or(file.impair.reorder).unwrap_or(0),
            seed: o.seed.or(file.impair.seed).unwrap_or(0),
        };
        if !(0.0..=1.0).contains(&impair.drop_probability) {
            return Err(CliError::Validation(format!("drop probability {} outside [0, 1]", impair.drop_probability)));
        }
        Ok(Settings {
            geometry,
            wire,
            codec: load_codec(&file.tables, &base)?,
            impair,
            pace: o.pace || file.live.pace.unwrap_or(false),
            queue_depth: file.live.queue_depth.unwrap_or(256).max(1),
        })
    }
}
