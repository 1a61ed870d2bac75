//! Huffman tables: the four typical JPEG tables, a plain-text table format,
//! and a 16-bit lookup decoder.
//!
//! Text format, one code per line:
//!
//! ```text
//! # index length codeword
//! 0x00 4 1010
//! 0x01 2 00
//! ```
//!
//! `index` is `(run << 4) | category` (hex or decimal), `length` the code
//! length in bits, `codeword` the code as a binary string of that length.
//! Blank lines and `#` comments are ignored.

use std::fmt::{self, Write as _};

use crate::bitstream::BitReader;

use super::EntropyError;

pub const MAX_CODE_LEN: u8 = 16;
pub const MIN_CODE_LEN: u8 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TableClass {
    DcLuma,
    AcLuma,
    DcChroma,
    AcChroma,
}

impl fmt::Display for TableClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TableClass::DcLuma => "DC-luma",
            TableClass::AcLuma => "AC-luma",
            TableClass::DcChroma => "DC-chroma",
            TableClass::AcChroma => "AC-chroma",
        })
    }
}

/// Code counts per length (index 0 = length 1) and symbols in code order,
/// as listed in the JPEG standard's example tables.
pub struct CanonicalSpec {
    pub counts: [u8; 16],
    pub symbols: &'static [u8],
}

pub const STD_DC_LUMA: CanonicalSpec = CanonicalSpec {
    counts: [0, 1, 5, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0],
    symbols: &[0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11],
};

pub const STD_DC_CHROMA: CanonicalSpec = CanonicalSpec {
    counts: [0, 3, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0],
    symbols: &[0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11],
};

pub const STD_AC_LUMA: CanonicalSpec = CanonicalSpec {
    counts: [0, 2, 1, 3, 3, 2, 4, 3, 5, 5, 4, 4, 0, 0, 1, 0x7d],
    symbols: &[
        0x01, 0x02, 0x03, 0x00, 0x04, 0x11, 0x05, 0x12, 0x21, 0x31, 0x41, 0x06, 0x13, 0x51, 0x61, 0x07, //
        0x22, 0x71, 0x14, 0x32, 0x81, 0x91, 0xa1, 0x08, 0x23, 0x42, 0xb1, 0xc1, 0x15, 0x52, 0xd1, 0xf0, //
        0x24, 0x33, 0x62, 0x72, 0x82, 0x09, 0x0a, 0x16, 0x17, 0x18, 0x19, 0x1a, 0x25, 0x26, 0x27, 0x28, //
        0x29, 0x2a, 0x34, 0x35, 0x36, 0x37, 0x38, 0x39, 0x3a, 0x43, 0x44, 0x45, 0x46, 0x47, 0x48, 0x49, //
        0x4a, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58, 0x59, 0x5a, 0x63, 0x64, 0x65, 0x66, 0x67, 0x68, 0x69, //
        0x6a, 0x73, 0x74, 0x75, 0x76, 0x77, 0x78, 0x79, 0x7a, 0x83, 0x84, 0x85, 0x86, 0x87, 0x88, 0x89, //
        0x8a, 0x92, 0x93, 0x94, 0x95, 0x96, 0x97, 0x98, 0x99, 0x9a, 0xa2, 0xa3, 0xa4, 0xa5, 0xa6, 0xa7, //
        0xa8, 0xa9, 0xaa, 0xb2, 0xb3, 0xb4, 0xb5, 0xb6, 0xb7, 0xb8, 0xb9, 0xba, 0xc2, 0xc3, 0xc4, 0xc5, //
        0xc6, 0xc7, 0xc8, 0xc9, 0xca, 0xd2, 0xd3, 0xd4, 0xd5, 0xd6, 0xd7, 0xd8, 0xd9, 0xda, 0xe1, 0xe2, //
        0xe3, 0xe4, 0xe5, 0xe6, 0xe7, 0xe8, 0xe9, 0xea, 0xf1, 0xf2, 0xf3, 0xf4, 0xf5, 0xf6, 0xf7, 0xf8, //
        0xf9, 0xfa,
    ],
};

pub const STD_AC_CHROMA: CanonicalSpec = CanonicalSpec {
    counts: [0, 2, 1, 2, 4, 4, 3, 4, 7, 5, 4, 4, 0, 1, 2, 0x77],
    symbols: &[
        0x00, 0x01, 0x02, 0x03, 0x11, 0x04, 0x05, 0x21, 0x31, 0x06, 0x12, 0x41, 0x51, 0x07, 0x61, 0x71, //
        0x13, 0x22, 0x32, 0x81, 0x08, 0x14, 0x42, 0x91, 0xa1, 0xb1, 0xc1, 0x09, 0x23, 0x33, 0x52, 0xf0, //
        0x15, 0x62, 0x72, 0xd1, 0x0a, 0x16, 0x24, 0x34, 0xe1, 0x25, 0xf1, 0x17, 0x18, 0x19, 0x1a, 0x26, //
        0x27, 0x28, 0x29, 0x2a, 0x35, 0x36, 0x37, 0x38, 0x39, 0x3a, 0x43, 0x44, 0x45, 0x46, 0x47, 0x48, //
        0x49, 0x4a, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58, 0x59, 0x5a, 0x63, 0x64, 0x65, 0x66, 0x67, 0x68, //
        0x69, 0x6a, 0x73, 0x74, 0x75, 0x76, 0x77, 0x78, 0x79, 0x7a, 0x82, 0x83, 0x84, 0x85, 0x86, 0x87, //
        0x88, 0x89, 0x8a, 0x92, 0x93, 0x94, 0x95, 0x96, 0x97, 0x98, 0x99, 0x9a, 0xa2, 0xa3, 0xa4, 0xa5, //
        0xa6, 0xa7, 0xa8, 0xa9, 0xaa, 0xb2, 0xb3, 0xb4, 0xb5, 0xb6, 0xb7, 0xb8, 0xb9, 0xba, 0xc2, 0xc3, //
        0xc4, 0xc5, 0xc6, 0xc7, 0xc8, 0xc9, 0xca, 0xd2, 0xd3, 0xd4, 0xd5, 0xd6, 0xd7, 0xd8, 0xd9, 0xda, //
        0xe2, 0xe3, 0xe4, 0xe5, 0xe6, 0xe7, 0xe8, 0xe9, 0xea, 0xf2, 0xf3, 0xf4, 0xf5, 0xf6, 0xf7, 0xf8, //
        0xf9, 0xfa,
    ],
};

const DC_LUMA_TXT: &str = include_str!("../../tables/dc_luma.txt");
const AC_LUMA_TXT: &str = include_str!("../../tables/ac_luma.txt");
const DC_CHROMA_TXT: &str = include_str!("../../tables/dc_chroma.txt");
const AC_CHROMA_TXT: &str = include_str!("../../tables/ac_chroma.txt");

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Code {
    pub bits: u16,
    pub len: u8,
}

/// Prefix-free code indexed by `(run << 4) | category`.
#[derive(Clone)]
pub struct HuffmanTable {
    pub class: TableClass,
    codes: [Option<Code>; 256],
    /// Entry for every 16-bit prefix: `(len << 8) | index`, 0 when no
    /// codeword matches.
    lookup: Vec<u16>,
}

impl fmt::Debug for HuffmanTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HuffmanTable").field("class", &self.class).field("codes", &self.code_count()).finish()
    }
}

impl PartialEq for HuffmanTable {
    fn eq(&self, other: &Self) -> bool {
        self.class == other.class && self.codes == other.codes
    }
}

impl HuffmanTable {
    /// Builds a table from explicit `(index, code)` pairs, rejecting codes
    /// outside 2..=16 bits, duplicate indices and prefix collisions.
    pub fn from_codes(class: TableClass, entries: &[(u8, Code)]) -> Result<Self, EntropyError> {
        let mut codes = [None; 256];
        let mut lookup = vec![0u16; 1 << 16];
        for &(index, code) in entries {
            if !(MIN_CODE_LEN..=MAX_CODE_LEN).contains(&code.len) {
                return Err(EntropyError::Table(format!("index {index:#04x}: length {} outside 2..=16", code.len)));
            }
            if u32::from(code.bits) >> code.len != 0 {
                return Err(EntropyError::Table(format!("index {index:#04x}: codeword wider than its length")));
            }
            if codes[usize::from(index)].replace(code).is_some() {
                return Err(EntropyError::Table(format!("index {index:#04x} defined twice")));
            }
            let shift = MAX_CODE_LEN - code.len;
            let start = usize::from(code.bits) << shift;
            let entry = (u16::from(code.len) << 8) | u16::from(index);
            for slot in &mut lookup[start..start + (1 << shift)] {
                if *slot != 0 {
                    return Err(EntropyError::Table(format!(
                        "index {index:#04x} collides with index {:#04x}: not prefix-free",
                        *slot & 0xFF
                    )));
                }
                *slot = entry;
            }
        }
        Ok(HuffmanTable { class, codes, lookup })
    }

    /// Canonical code assignment from per-length counts.
    pub fn from_canonical(class: TableClass, canon: &CanonicalSpec) -> Result<Self, EntropyError> {
        let mut entries = Vec::with_capacity(canon.symbols.len());
        let mut code: u32 = 0;
        let mut symbols = canon.symbols.iter();
        for (i, &count) in canon.counts.iter().enumerate() {
            let len = i as u8 + 1;
            for _ in 0..count {
                let &sym = symbols.next().ok_or_else(|| EntropyError::Table("counts exceed symbols".into()))?;
                entries.push((sym, Code { bits: code as u16, len }));
                code += 1;
            }
            code <<= 1;
        }
        Self::from_codes(class, &entries)
    }

    pub fn parse(class: TableClass, text: &str) -> Result<Self, EntropyError> {
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |what: &str| EntropyError::Table(format!("line {}: {what}: {line:?}", lineno + 1));
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [index, len, bits] = fields[..] else {
                return Err(bad("expected `index length codeword`"));
            };
            let index = match index.strip_prefix("0x").or_else(|| index.strip_prefix("0X")) {
                Some(hex) => u8::from_str_radix(hex, 16),
                None => index.parse(),
            }
            .map_err(|_| bad("bad index"))?;
            let len: u8 = len.parse().map_err(|_| bad("bad length"))?;
            if bits.len() != usize::from(len) || !bits.bytes().all(|b| b == b'0' || b == b'1') {
                return Err(bad("codeword must be a binary string of the stated length"));
            }
            let bits = u16::from_str_radix(bits, 2).map_err(|_| bad("bad codeword"))?;
            entries.push((index, Code { bits, len }));
        }
        Self::from_codes(class, &entries)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("# {} Huffman table: index length codeword\n", self.class);
        let mut rows: Vec<(u8, Code)> = self.iter().collect();
        rows.sort_by_key(|(i, c)| (c.len, c.bits, *i));
        for (index, code) in rows {
            let _ = writeln!(out, "{index:#04x} {} {:0width$b}", code.len, code.bits, width = usize::from(code.len));
        }
        out
    }

    pub fn standard(class: TableClass) -> Self {
        let text = match class {
            TableClass::DcLuma => DC_LUMA_TXT,
            TableClass::AcLuma => AC_LUMA_TXT,
            TableClass::DcChroma => DC_CHROMA_TXT,
            TableClass::AcChroma => AC_CHROMA_TXT,
        };
        Self::parse(class, text).expect("embedded tables are valid")
    }

    pub fn code(&self, index: u8) -> Option<Code> {
        self.codes[usize::from(index)]
    }

    pub fn code_count(&self) -> usize {
        self.codes.iter().flatten().count()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u8, Code)> + '_ {
        self.codes.iter().enumerate().filter_map(|(i, c)| c.map(|c| (i as u8, c)))
    }

    /// Consumes one codeword and returns its index.
    pub fn decode(&self, reader: &mut BitReader<'_>) -> Result<u8, EntropyError> {
        let (window, avail) = reader.peek(u32::from(MAX_CODE_LEN));
        let entry = self.lookup[window as usize];
        let len = u32::from(entry >> 8);
        if entry == 0 && avail == u32::from(MAX_CODE_LEN) {
            return Err(EntropyError::Malformed(format!(
                "no {} codeword matches at bit {}",
                self.class,
                reader.position()
            )));
        }
        if entry == 0 || len > avail {
            return Err(EntropyError::Malformed(format!("stream truncated inside a {} codeword", self.class)));
        }
        reader.skip(len)?;
        Ok((entry & 0xFF) as u8)
    }
}
