//! IEEE 802.3 CRC-32, one table lookup per byte.

/// Reflected generator polynomial.
pub const POLY_REFLECTED: u32 = 0xEDB8_8320;

const fn build_table() -> [u32; 256] {
    let mut table = [0u32; 256];
    let mut i = 0;
    while i < 256 {
        let mut r = i as u32;
        let mut bit = 0;
        while bit < 8 {
            r = if r & 1 != 0 { (r >> 1) ^ POLY_REFLECTED } else { r >> 1 };
            bit += 1;
        }
        table[i] = r;
        i += 1;
    }
    table
}

static TABLE: [u32; 256] = build_table();

pub fn table() -> &'static [u32; 256] {
    &TABLE
}

/// Running CRC remainder.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Crc32 {
    state: u32,
}

impl Default for Crc32 {
    fn default() -> Self {
        Self::new()
    }
}

impl Crc32 {
    pub fn new() -> Self {
        Crc32 { state: 0xFFFF_FFFF }
    }

    #[inline]
    pub fn update_byte(&mut self, b: u8) {
        self.state = (self.state >> 8) ^ TABLE[((self.state ^ u32::from(b)) & 0xFF) as usize];
    }

    pub fn update(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.update_byte(b);
        }
    }

    pub fn value(&self) -> u32 {
        !self.state
    }

    /// FCS bytes in transmission order (least significant first).
    pub fn finish(&self) -> [u8; 4] {
        self.value().to_le_bytes()
    }
}

pub fn crc32(bytes: &[u8]) -> u32 {
    let mut c = Crc32::new();
    c.update(bytes);
    c.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bitwise(bytes: &[u8]) -> u32 {
        let mut r = 0xFFFF_FFFFu32;
        for &b in bytes {
            for i in 0..8 {
                let bit = (u32::from(b) >> i) & 1;
                let top = r & 1;
                r >>= 1;
                if top ^ bit != 0 {
                    r ^= POLY_REFLECTED;
                }
            }
        }
        !r
    }

    #[test]
    fn check_value() {
        assert_eq!(crc32(b"123456789"), 0xCBF4_3926);
        assert_eq!(crc32(b""), 0);
        assert_eq!(bitwise(b""), 0);
    }

    #[test]
    fn table_matches_bitwise_single_bytes() {
        // With init 0 and no final complement the bitwise CRC of byte i is table[i].
        for i in 0..=255u8 {
            let mut r = u32::from(i);
            for _ in 0..8 {
                r = if r & 1 != 0 { (r >> 1) ^ POLY_REFLECTED } else { r >> 1 };
            }
            assert_eq!(table()[usize::from(i)], r);
        }
    }

    #[test]
    fn incremental_equals_oneshot() {
        let data: Vec<u8> = (0..=255).collect();
        let mut c = Crc32::new();
        c.update(&data[..100]);
        c.update(&data[100..]);
        assert_eq!(c.value(), crc32(&data));
        assert_eq!(c.value(), bitwise(&data));
        assert_eq!(c.finish(), crc32(&data).to_le_bytes());
    }
}
