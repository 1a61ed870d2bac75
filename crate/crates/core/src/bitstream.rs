//! MSB-first packing of variable-length codes into 32-bit words, and the
//! matching bit reader.
//!
//! Bits are emitted most significant first, both inside a word and across
//! the stream. The last word of a packet is zero padded on the right.

use thiserror::Error;

use crate::entropy::CodedUnit;

/// Width of the aligned code/value container.
pub const ALIGNED_WIDTH: u32 = 27;
pub const WORD_BITS: u32 = 32;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BitstreamError {
    #[error("aligned value needs {0} bits, container holds {ALIGNED_WIDTH}")]
    AlignedOverflow(u32),
    #[error("read of {requested} bits with only {remaining} left")]
    Exhausted { requested: u32, remaining: usize },
}

/// Codeword followed by value bits, left-aligned in a 27-bit container.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AlignedValue {
    bits: u32,
    len: u32,
}

impl AlignedValue {
    /// `payload` holds `len` meaningful bits, right-aligned.
    pub fn from_right_aligned(payload: u32, len: u32) -> Result<Self, BitstreamError> {
        if len > ALIGNED_WIDTH {
            return Err(BitstreamError::AlignedOverflow(len));
        }
        let masked = if len == 0 { 0 } else { payload & (u32::MAX >> (32 - len)) };
        Ok(AlignedValue { bits: masked << (ALIGNED_WIDTH - len), len })
    }

    /// Container contents; only the top `len()` of 27 bits are meaningful.
    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn len(&self) -> u32 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Meaningful bits, right-aligned.
    pub fn payload(&self) -> u32 {
        if self.len == 0 {
            0
        } else {
            self.bits >> (ALIGNED_WIDTH - self.len)
        }
    }
}

/// Joins codeword and value bits of a coded unit.
pub fn align(unit: &CodedUnit) -> Result<AlignedValue, BitstreamError> {
    let len = u32::from(unit.codeword_len) + u32::from(unit.value_len);
    if len > ALIGNED_WIDTH {
        return Err(BitstreamError::AlignedOverflow(len));
    }
    let payload = (u32::from(unit.codeword) << unit.value_len) | u32::from(unit.value_bits);
    AlignedValue::from_right_aligned(payload, len)
}

/// Word-emitting bit buffer.
#[derive(Clone, Debug, Default)]
pub struct BitAccumulator {
    buffer: u64,
    count: u32,
}

impl BitAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn pending_bits(&self) -> u32 {
        self.count
    }

    /// Appends `v`; returns the oldest 32 bits once at least 32 are pending.
    pub fn append(&mut self, v: AlignedValue) -> Option<u32> {
        self.buffer = (self.buffer << v.len) | u64::from(v.payload());
        self.count += v.len;
        debug_assert!(self.count < WORD_BITS + ALIGNED_WIDTH);
        if self.count >= WORD_BITS {
            self.count -= WORD_BITS;
            let word = (self.buffer >> self.count) as u32;
            self.buffer &= (1u64 << self.count) - 1;
            Some(word)
        } else {
            None
        }
    }

    /// Emits pending bits left-aligned in a zero-padded word.
    pub fn flush(&mut self) -> Option<u32> {
        if self.count == 0 {
            return None;
        }
        let word = (self.buffer << (WORD_BITS - self.count)) as u32;
        self.buffer = 0;
        self.count = 0;
        Some(word)
    }
}

/// Sequence of 32-bit words plus the number of meaningful bits.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WordStream {
    pub words: Vec<u32>,
    pub total_bits: usize,
}

impl WordStream {
    pub fn from_words(words: Vec<u32>) -> Self {
        let total_bits = words.len() * WORD_BITS as usize;
        WordStream { words, total_bits }
    }

    pub fn to_be_bytes(&self) -> Vec<u8> {
        self.words.iter().flat_map(|w| w.to_be_bytes()).collect()
    }

    /// Big-endian words; trailing bytes that do not make a whole word are
    /// rejected by returning `None`.
    pub fn from_be_bytes(bytes: &[u8]) -> Option<Self> {
        if !bytes.len().is_multiple_of(4) {
            return None;
        }
        let words = bytes.chunks_exact(4).map(|c| u32::from_be_bytes([c[0], c[1], c[2], c[3]])).collect();
        Some(Self::from_words(words))
    }
}

/// Collects words from an accumulator into a [`WordStream`].
#[derive(Debug, Default)]
pub struct WordWriter {
    acc: BitAccumulator,
    stream: WordStream,
}

impl WordWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, v: AlignedValue) {
        self.stream.total_bits += v.len() as usize;
        if let Some(w) = self.acc.append(v) {
            self.stream.words.push(w);
        }
    }

    pub fn push_unit(&mut self, unit: &CodedUnit) -> Result<(), BitstreamError> {
        self.push(align(unit)?);
        Ok(())
    }

    pub fn word_count(&self) -> usize {
        self.stream.words.len() + usize::from(self.acc.pending_bits() > 0)
    }

    pub fn finish(mut self) -> WordStream {
        if let Some(w) = self.acc.flush() {
            self.stream.words.push(w);
        }
        self.stream
    }
}

/// MSB-first reader over 32-bit words.
#[derive(Clone, Debug)]
pub struct BitReader<'a> {
    words: &'a [u32],
    pos: usize,
    limit: usize,
}

impl<'a> BitReader<'a> {
    /// Reads every bit of `words`, padding included.
    pub fn new(words: &'a [u32]) -> Self {
        BitReader { words, pos: 0, limit: words.len() * WORD_BITS as usize }
    }

    pub fn with_limit(words: &'a [u32], total_bits: usize) -> Self {
        BitReader { words, pos: 0, limit: total_bits.min(words.len() * WORD_BITS as usize) }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.limit - self.pos
    }

    /// Up to 32 bits starting at the cursor, zero-filled past the end.
    fn window(&self, k: u32) -> u32 {
        debug_assert!(k <= 32);
        if k == 0 {
            return 0;
        }
        let word = self.pos / 32;
        let offset = (self.pos % 32) as u32;
        let hi = u64::from(self.words.get(word).copied().unwrap_or(0));
        let lo = u64::from(self.words.get(word + 1).copied().unwrap_or(0));
        let joined = (hi << 32) | lo;
        ((joined << offset) >> (64 - k)) as u32
    }

    /// Next `k` bits without consuming them; bits past the end read as zero.
    /// The second value is how many of those bits are real.
    pub fn peek(&self, k: u32) -> (u32, u32) {
        let avail = self.remaining().min(k as usize) as u32;
        let mut v = self.window(k);
        if avail < k {
            let keep = if avail == 0 { 0 } else { u32::MAX << (32 - avail) };
            v &= keep >> (32 - k);
        }
        (v, avail)
    }

    pub fn read(&mut self, k: u32) -> Result<u32, BitstreamError> {
        if (k as usize) > self.remaining() {
            return Err(BitstreamError::Exhausted { requested: k, remaining: self.remaining() });
        }
        let v = self.window(k);
        self.pos += k as usize;
        Ok(v)
    }

    pub fn skip(&mut self, k: u32) -> Result<(), BitstreamError> {
        self.read(k).map(|_| ())
    }

    /// True when every remaining bit is zero.
    pub fn rest_is_zero(&self) -> bool {
        let mut probe = self.clone();
        while probe.remaining() > 0 {
            let k = probe.remaining().min(32) as u32;
            if probe.read(k).unwrap_or(1) != 0 {
                return false;
            }
        }
        true
    }
}
