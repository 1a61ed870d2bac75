//! Lossless coding of quantized blocks.
//!
//! Each coefficient value travels as its category `C` (the bit width of
//! `|v|`) plus `C` value bits: `v` itself when positive, the one's
//! complement of `|v|` when negative. The DC coefficient is coded raw (no
//! prediction from the previous block) with a category-only Huffman index.
//! AC coefficients are run-length coded as `(run, category)` pairs, with
//! ZRL for sixteen zeros and an EOB after the last coefficient of every
//! block, including blocks whose final coefficient is nonzero.

pub mod huffman;

use thiserror::Error;

use crate::bitstream::{BitReader, BitstreamError};
use crate::quant_zigzag::QuantizedBlock;
use crate::{Channel, BLOCK_LEN};

pub use huffman::{Code, HuffmanTable, TableClass};

/// Largest magnitude a DC value may take.
pub const DC_MAX_MAGNITUDE: i32 = 2047;
/// Largest magnitude an AC value may take.
pub const AC_MAX_MAGNITUDE: i32 = 1023;
/// Longest zero run a single symbol can carry.
pub const MAX_RUN: u8 = 15;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EntropyError {
    #[error("value {0} outside the codable range")]
    ValueOutOfRange(i32),
    #[error("value bits {bits:#b} do not fit category {category}")]
    MalformedLength { category: u8, bits: u32 },
    #[error("index {index:#04x} has no code in the {class} table")]
    InvalidSymbol { class: TableClass, index: u8 },
    #[error("malformed stream: {0}")]
    Malformed(String),
    #[error("invalid Huffman table: {0}")]
    Table(String),
    #[error(transparent)]
    Bitstream(#[from] BitstreamError),
}

/// Category of `v`: 0 for zero, else `floor(log2 |v|) + 1`.
pub fn category(v: i32) -> u8 {
    (32 - v.unsigned_abs().leading_zeros()) as u8
}

/// Category and value bits for `v`, where `|v| <= max_magnitude`.
pub fn categorize_within(v: i32, max_magnitude: i32) -> Result<(u8, u16), EntropyError> {
    if v.unsigned_abs() > max_magnitude.unsigned_abs() {
        return Err(EntropyError::ValueOutOfRange(v));
    }
    let c = category(v);
    let bits = if v >= 0 { v } else { v + (1 << c) - 1 };
    Ok((c, bits as u16))
}

/// [`categorize_within`] with the DC bound of ±2047.
pub fn categorize(v: i32) -> Result<(u8, u16), EntropyError> {
    categorize_within(v, DC_MAX_MAGNITUDE)
}

/// Inverse of [`categorize`]: a leading 1 marks a positive value.
pub fn decategorize(category: u8, bits: u32) -> Result<i32, EntropyError> {
    if category > 11 || (category < 32 && bits >> category != 0) {
        return Err(EntropyError::MalformedLength { category, bits });
    }
    if category == 0 {
        return Ok(0);
    }
    let bits = bits as i32;
    if bits >> (category - 1) == 1 {
        Ok(bits)
    } else {
        Ok(bits - ((1 << category) - 1))
    }
}

/// One run-length symbol: `run` zeros, then a value of `category` bits.
/// `(0, 0)` is EOB and `(15, 0)` is ZRL in the AC alphabet.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RleSymbol {
    pub run: u8,
    pub category: u8,
    pub value: i32,
}

impl RleSymbol {
    pub const EOB: RleSymbol = RleSymbol { run: 0, category: 0, value: 0 };
    pub const ZRL: RleSymbol = RleSymbol { run: 15, category: 0, value: 0 };

    pub fn dc(value: i32) -> Self {
        RleSymbol { run: 0, category: category(value), value }
    }

    pub fn ac(run: u8, value: i32) -> Self {
        debug_assert!(run <= MAX_RUN && value != 0);
        RleSymbol { run, category: category(value), value }
    }

    pub fn index(&self) -> u8 {
        (self.run << 4) | self.category
    }

    pub fn is_eob(&self) -> bool {
        *self == Self::EOB
    }

    pub fn is_zrl(&self) -> bool {
        *self == Self::ZRL
    }

    /// Zero coefficients this AC symbol stands for.
    pub fn zeros(&self) -> usize {
        if self.is_zrl() {
            16
        } else {
            usize::from(self.run)
        }
    }
}

/// Run-length symbols for a zigzag-ordered block: the DC symbol first, then
/// AC symbols, always terminated by EOB. ZRLs are only emitted when a
/// nonzero coefficient follows them.
pub fn rle_encode_block(block: &QuantizedBlock) -> Vec<RleSymbol> {
    let mut out = Vec::with_capacity(16);
    out.push(RleSymbol::dc(block.coeffs[0]));
    let mut run = 0u8;
    let mut pending_zrl = 0;
    for &c in &block.coeffs[1..] {
        if c == 0 {
            run += 1;
            if run == 16 {
                pending_zrl += 1;
                run = 0;
            }
        } else {
            out.extend(std::iter::repeat_n(RleSymbol::ZRL, pending_zrl));
            pending_zrl = 0;
            out.push(RleSymbol::ac(run, c));
            run = 0;
        }
    }
    out.push(RleSymbol::EOB);
    out
}

/// Rebuilds 64 zigzag coefficients from [`rle_encode_block`] output.
pub fn rle_decode(symbols: &[RleSymbol]) -> Result<[i32; BLOCK_LEN], EntropyError> {
    let mut coeffs = [0i32; BLOCK_LEN];
    let (first, rest) = symbols.split_first().ok_or_else(|| EntropyError::Malformed("no DC symbol".into()))?;
    coeffs[0] = first.value;
    let mut k = 1usize;
    for (i, s) in rest.iter().enumerate() {
        if s.is_eob() {
            if i + 1 != rest.len() {
                return Err(EntropyError::Malformed("symbols after EOB".into()));
            }
            return Ok(coeffs);
        }
        k = place_ac(&mut coeffs, k, s)?;
    }
    Err(EntropyError::Malformed("block not terminated by EOB".into()))
}

fn place_ac(coeffs: &mut [i32; BLOCK_LEN], k: usize, s: &RleSymbol) -> Result<usize, EntropyError> {
    if s.is_zrl() {
        if k + 16 > BLOCK_LEN - 1 {
            return Err(EntropyError::Malformed("ZRL overruns the block".into()));
        }
        return Ok(k + 16);
    }
    if s.category == 0 {
        return Err(EntropyError::Malformed(format!("AC symbol {:#04x} carries no value", s.index())));
    }
    let at = k + usize::from(s.run);
    if at >= BLOCK_LEN {
        return Err(EntropyError::Malformed("run overruns the block".into()));
    }
    coeffs[at] = s.value;
    Ok(at + 1)
}

/// One entropy-coded symbol: Huffman codeword (left part) plus value bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CodedUnit {
    pub codeword: u16,
    pub codeword_len: u8,
    pub value_bits: u16,
    pub value_len: u8,
    pub end_of_block: bool,
}

impl CodedUnit {
    pub fn bit_len(&self) -> u32 {
        u32::from(self.codeword_len) + u32::from(self.value_len)
    }
}

pub fn huffman_encode(symbol: &RleSymbol, table: &HuffmanTable) -> Result<CodedUnit, EntropyError> {
    let max = match table.class {
        TableClass::DcLuma | TableClass::DcChroma => DC_MAX_MAGNITUDE,
        TableClass::AcLuma | TableClass::AcChroma => AC_MAX_MAGNITUDE,
    };
    let (category, value_bits) = categorize_within(symbol.value, max)?;
    debug_assert_eq!(category, symbol.category);
    let index = symbol.index();
    let code = table.code(index).ok_or(EntropyError::InvalidSymbol { class: table.class, index })?;
    Ok(CodedUnit { codeword: code.bits, codeword_len: code.len, value_bits, value_len: category, end_of_block: false })
}

/// Reads one codeword and its value bits.
pub fn huffman_decode(reader: &mut BitReader<'_>, table: &HuffmanTable) -> Result<RleSymbol, EntropyError> {
    let index = table.decode(reader)?;
    let (run, category) = (index >> 4, index & 0x0F);
    let bits = reader.read(u32::from(category))?;
    Ok(RleSymbol { run, category, value: decategorize(category, bits)? })
}

/// The four Huffman tables a coder needs.
#[derive(Clone, Debug, PartialEq)]
pub struct HuffmanSet {
    pub dc_luma: HuffmanTable,
    pub ac_luma: HuffmanTable,
    pub dc_chroma: HuffmanTable,
    pub ac_chroma: HuffmanTable,
}

impl Default for HuffmanSet {
    fn default() -> Self {
        HuffmanSet {
            dc_luma: HuffmanTable::standard(TableClass::DcLuma),
            ac_luma: HuffmanTable::standard(TableClass::AcLuma),
            dc_chroma: HuffmanTable::standard(TableClass::DcChroma),
            ac_chroma: HuffmanTable::standard(TableClass::AcChroma),
        }
    }
}

impl HuffmanSet {
    pub fn tables_for(&self, channel: Channel) -> (&HuffmanTable, &HuffmanTable) {
        if channel.is_luma() {
            (&self.dc_luma, &self.ac_luma)
        } else {
            (&self.dc_chroma, &self.ac_chroma)
        }
    }

    /// Coded units for one block; the last one has `end_of_block` set.
    pub fn encode_block(&self, block: &QuantizedBlock) -> Result<Vec<CodedUnit>, EntropyError> {
        let (dc, ac) = self.tables_for(block.channel);
        let symbols = rle_encode_block(block);
        let mut units = Vec::with_capacity(symbols.len());
        units.push(huffman_encode(&symbols[0], dc)?);
        for s in &symbols[1..] {
            units.push(huffman_encode(s, ac)?);
        }
        if let Some(last) = units.last_mut() {
            last.end_of_block = true;
        }
        Ok(units)
    }

    /// Inverse of [`HuffmanSet::encode_block`]; reads through the EOB.
    pub fn decode_block(&self, reader: &mut BitReader<'_>, channel: Channel) -> Result<QuantizedBlock, EntropyError> {
        let (dc, ac) = self.tables_for(channel);
        let mut coeffs = [0i32; BLOCK_LEN];
        coeffs[0] = huffman_decode(reader, dc)?.value;
        let mut k = 1usize;
        loop {
            let s = huffman_decode(reader, ac)?;
            if s.is_eob() {
                return Ok(QuantizedBlock { coeffs, channel });
            }
            if k >= BLOCK_LEN {
                return Err(EntropyError::Malformed("missing EOB after the last coefficient".into()));
            }
            k = place_ac(&mut coeffs, k, &s)?;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitstream::WordWriter;
    use proptest::prelude::*;

    fn block(coeffs: [i32; 64]) -> QuantizedBlock {
        QuantizedBlock { coeffs, channel: Channel::Y }
    }

    fn with_ac(dc: i32, ac: &[(usize, i32)]) -> QuantizedBlock {
        let mut c = [0; 64];
        c[0] = dc;
        for &(i, v) in ac {
            c[i] = v;
        }
        block(c)
    }

    fn round_trip(set: &HuffmanSet, b: &QuantizedBlock) -> QuantizedBlock {
        let mut w = WordWriter::new();
        for u in set.encode_block(b).unwrap() {
            w.push_unit(&u).unwrap();
        }
        let s = w.finish();
        let mut r = BitReader::with_limit(&s.words, s.total_bits);
        let out = set.decode_block(&mut r, b.channel).unwrap();
        assert_eq!(r.remaining(), 0);
        out
    }

    #[test]
    fn categorize_examples() {
        assert_eq!(categorize(7).unwrap(), (3, 0b111));
        assert_eq!(categorize(-7).unwrap(), (3, 0b000));
        assert_eq!(categorize(0).unwrap(), (0, 0));
        assert_eq!(categorize(-4).unwrap(), (3, 0b011));
        assert_eq!(categorize(2048), Err(EntropyError::ValueOutOfRange(2048)));
        let listing: Vec<u16> = [-7, -6, -5, -4, 4, 5, 6, 7].iter().map(|&v| categorize(v).unwrap().1).collect();
        assert_eq!(listing, (0..8).collect::<Vec<u16>>());
    }

    #[test]
    fn decategorize_examples() {
        assert_eq!(decategorize(3, 0b100).unwrap(), 4);
        assert_eq!(decategorize(3, 0b000).unwrap(), -7);
        assert_eq!(decategorize(0, 0).unwrap(), 0);
        assert!(matches!(decategorize(3, 0b1000), Err(EntropyError::MalformedLength { .. })));
        for v in -2047..=2047 {
            let (c, bits) = categorize(v).unwrap();
            assert_eq!(decategorize(c, u32::from(bits)).unwrap(), v);
            if v != 0 {
                assert!(1 << (c - 1) <= v.abs() && v.abs() < 1 << c);
            }
        }
    }

    #[test]
    fn rle_examples() {
        assert_eq!(rle_encode_block(&with_ac(5, &[])), vec![RleSymbol::dc(5), RleSymbol::EOB]);
        let s = rle_encode_block(&with_ac(0, &[(4, 7)]));
        assert_eq!(s[1], RleSymbol { run: 3, category: 3, value: 7 });
        let s = rle_encode_block(&with_ac(0, &[(17, 5)]));
        assert_eq!(&s[1..], &[RleSymbol::ZRL, RleSymbol { run: 0, category: 3, value: 5 }, RleSymbol::EOB]);
        let s = rle_encode_block(&with_ac(0, &[(41, 1)]));
        assert_eq!(&s[1..], &[RleSymbol::ZRL, RleSymbol::ZRL, RleSymbol { run: 8, category: 1, value: 1 }, RleSymbol::EOB]);
        // Nonzero final coefficient is still followed by EOB.
        let s = rle_encode_block(&with_ac(0, &[(63, -2)]));
        assert_eq!(s.last(), Some(&RleSymbol::EOB));
    }

    #[test]
    fn rle_decode_examples() {
        let c = rle_decode(&[RleSymbol::dc(5), RleSymbol::EOB]).unwrap();
        assert_eq!(c, with_ac(5, &[]).coeffs);
        let c = rle_decode(&[RleSymbol::dc(0), RleSymbol::ZRL, RleSymbol::ac(0, 5), RleSymbol::EOB]).unwrap();
        assert_eq!(c[17], 5);
        assert_eq!(c.iter().filter(|&&v| v != 0).count(), 1);
        let overrun = [RleSymbol::dc(0), RleSymbol::ZRL, RleSymbol::ZRL, RleSymbol::ZRL, RleSymbol::ZRL, RleSymbol::EOB];
        assert!(matches!(rle_decode(&overrun), Err(EntropyError::Malformed(_))));
        assert!(rle_decode(&[RleSymbol::dc(0)]).is_err());
    }

    #[test]
    fn eob_and_zrl_units() {
        let set = HuffmanSet::default();
        let eob = huffman_encode(&RleSymbol::EOB, &set.ac_luma).unwrap();
        assert_eq!((eob.codeword, eob.codeword_len, eob.value_len), (0b1010, 4, 0));
        let zrl = huffman_encode(&RleSymbol::ZRL, &set.ac_luma).unwrap();
        assert_eq!((zrl.codeword, zrl.codeword_len), (0b111_1111_1001, 11));
        // Category 11 does not exist in the AC alphabet.
        let big = RleSymbol { run: 0, category: 11, value: 1500 };
        assert!(huffman_encode(&big, &set.ac_luma).is_err());
    }

    #[test]
    fn minimal_block_encoding() {
        let set = HuffmanSet::default();
        let units = set.encode_block(&block([0; 64])).unwrap();
        assert_eq!(units.len(), 2);
        assert_eq!((units[0].codeword, units[0].codeword_len), (0b00, 2));
        assert_eq!((units[1].codeword, units[1].codeword_len), (0b1010, 4));
        assert!(units[1].end_of_block && !units[0].end_of_block);
    }

    #[test]
    fn dense_block_has_64_value_units() {
        let set = HuffmanSet::default();
        let b = block(std::array::from_fn(|i| if i % 2 == 0 { 3 } else { -1 }));
        let units = set.encode_block(&b).unwrap();
        assert_eq!(units.len(), 65);
        assert_eq!(round_trip(&set, &b), b);
    }

    #[test]
    fn adversarial_blocks_round_trip() {
        let set = HuffmanSet::default();
        let mut cases = vec![[0; 64], [1023; 64], [-1024; 64]];
        cases[2][1..].fill(-1023);
        cases.push(std::array::from_fn(|i| if i % 2 == 0 { 1023 } else { -1023 }));
        for offset in 0..64 {
            let mut c = [0; 64];
            c[offset] = -1;
            cases.push(c);
            let mut c = [7; 64];
            c[1..offset.max(1)].fill(0);
            cases.push(c);
        }
        for c in cases {
            for channel in [Channel::Y, Channel::Cb, Channel::Cr] {
                let b = QuantizedBlock { coeffs: c, channel };
                assert_eq!(round_trip(&set, &b), b);
            }
        }
    }

    #[test]
    fn decoder_rejects_missing_eob() {
        let set = HuffmanSet::default();
        let mut w = WordWriter::new();
        let units = set.encode_block(&block([1; 64])).unwrap();
        for u in &units[..units.len() - 1] {
            w.push_unit(u).unwrap();
        }
        let s = w.finish();
        let mut r = BitReader::with_limit(&s.words, s.total_bits);
        assert!(set.decode_block(&mut r, Channel::Y).is_err());
    }

    fn sparse_block() -> impl Strategy<Value = [i32; 64]> {
        prop::collection::vec((0usize..64, -1023i32..=1023), 0..20).prop_map(|entries| {
            let mut c = [0; 64];
            for (i, v) in entries {
                c[i] = v;
            }
            c
        })
    }

    proptest! {
        #[test]
        fn rle_zero_accounting(c in sparse_block()) {
            let symbols = rle_encode_block(&block(c));
            let nonzero_ac = c[1..].iter().filter(|&&v| v != 0).count();
            let last_nonzero = (1..64).rev().find(|&i| c[i] != 0).unwrap_or(0);
            let implied: usize = symbols[1..].iter().map(|s| s.zeros()).sum();
            let zeros_before_last = last_nonzero.saturating_sub(nonzero_ac);
            prop_assert_eq!(implied, zeros_before_last);
            prop_assert_eq!(rle_decode(&symbols).unwrap(), c);
        }

        #[test]
        fn lossless_sparse(c in sparse_block(), luma in any::<bool>()) {
            let set = HuffmanSet::default();
            let b = QuantizedBlock { coeffs: c, channel: if luma { Channel::Y } else { Channel::Cr } };
            prop_assert_eq!(round_trip(&set, &b), b);
        }

        #[test]
        fn units_fit_aligned_width(c in sparse_block(), dc in -1024i32..=1023) {
            let mut coeffs = c;
            coeffs[0] = dc;
            let units = HuffmanSet::default().encode_block(&block(coeffs)).unwrap();
            prop_assert!(units.iter().all(|u| u.bit_len() <= crate::bitstream::ALIGNED_WIDTH));
            prop_assert_eq!(units.iter().filter(|u| u.end_of_block).count(), 1);
        }
    }
}
