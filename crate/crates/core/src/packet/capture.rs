//! Capture files: a sequence of frames, each a 4-byte little-endian length
//! followed by that many bytes. Hex-CSV holds one frame per line as a hex
//! string, optionally as the last comma-separated field.

use std::io::{self, Read, Write};

use thiserror::Error;

/// Longest record accepted when reading, preamble included.
pub const MAX_RECORD_LEN: usize = 1 << 16;

#[derive(Debug, Error)]
pub enum CaptureError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("record {index} is truncated")]
    Truncated { index: usize },
    #[error("record {index} claims {len} bytes")]
    RecordTooLong { index: usize, len: usize },
    #[error("line {line}: {msg}")]
    Hex { line: usize, msg: String },
}

pub struct CaptureWriter<W: Write> {
    inner: W,
    count: usize,
}

impl<W: Write> CaptureWriter<W> {
    pub fn new(inner: W) -> Self {
        CaptureWriter { inner, count: 0 }
    }

    pub fn write_frame(&mut self, frame: &[u8]) -> io::Result<()> {
        let len = u32::try_from(frame.len()).map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "frame too long"))?;
        self.inner.write_all(&len.to_le_bytes())?;
        self.inner.write_all(frame)?;
        self.count += 1;
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn into_inner(mut self) -> io::Result<W> {
        self.inner.flush()?;
        Ok(self.inner)
    }
}

/// Iterates records from a reader.
pub struct CaptureReader<R: Read> {
    inner: R,
    index: usize,
}

impl<R: Read> CaptureReader<R> {
    pub fn new(inner: R) -> Self {
        CaptureReader { inner, index: 0 }
    }

    fn next_record(&mut self) -> Result<Option<Vec<u8>>, CaptureError> {
        let mut len = [0u8; 4];
        let mut got = 0;
        while got < 4 {
            match self.inner.read(&mut len[got..])? {
                0 if got == 0 => return Ok(None),
                0 => return Err(CaptureError::Truncated { index: self.index }),
                n => got += n,
            }
        }
        let len = u32::from_le_bytes(len) as usize;
        if len > MAX_RECORD_LEN {
            return Err(CaptureError::RecordTooLong { index: self.index, len });
        }
        let mut buf = vec![0; len];
        self.inner.read_exact(&mut buf).map_err(|e| match e.kind() {
            io::ErrorKind::UnexpectedEof => CaptureError::Truncated { index: self.index },
            _ => CaptureError::Io(e),
        })?;
        self.index += 1;
        Ok(Some(buf))
    }
}

impl<R: Read> Iterator for CaptureReader<R> {
    type Item = Result<Vec<u8>, CaptureError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_record().transpose()
    }
}

pub fn write_capture<W: Write>(out: W, frames: &[Vec<u8>]) -> io::Result<()> {
    let mut w = CaptureWriter::new(out);
    for f in frames {
        w.write_frame(f)?;
    }
    w.into_inner().map(|_| ())
}

pub fn read_capture(bytes: &[u8]) -> Result<Vec<Vec<u8>>, CaptureError> {
    CaptureReader::new(bytes).collect()
}

/// Parses hex-CSV text. Blank lines and `#` comments are skipped, and a
/// first line that is not hex is taken as a column header.
pub fn parse_hex_csv(text: &str) -> Result<Vec<Vec<u8>>, CaptureError> {
    let mut frames = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let field = line.rsplit(',').next().unwrap_or("").trim().trim_matches('"');
        let digits: String = field.chars().filter(|c| !matches!(c, ' ' | ':' | '-')).collect();
        match hex::decode(&digits) {
            Ok(bytes) => frames.push(bytes),
            Err(_) if i == 0 => continue,
            Err(e) => return Err(CaptureError::Hex { line: i + 1, msg: e.to_string() }),
        }
    }
    Ok(frames)
}

pub fn to_hex_csv(frames: &[Vec<u8>]) -> String {
    let mut out = String::from("frame\n");
    for f in frames {
        out.push_str(&hex::encode(f));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capture_round_trip() {
        let frames = vec![vec![1, 2, 3], vec![], vec![0xFF; 1600]];
        let mut buf = Vec::new();
        write_capture(&mut buf, &frames).unwrap();
        assert_eq!(&buf[..4], &[3, 0, 0, 0]);
        assert_eq!(buf.len(), 12 + 3 + 1600);
        assert_eq!(read_capture(&buf).unwrap(), frames);
    }

    #[test]
    fn truncated_capture() {
        let mut buf = Vec::new();
        write_capture(&mut buf, &[vec![9; 10]]).unwrap();
        assert!(matches!(read_capture(&buf[..8]), Err(CaptureError::Truncated { index: 0 })));
        assert!(matches!(read_capture(&buf[..2]), Err(CaptureError::Truncated { index: 0 })));
        assert!(matches!(read_capture(&[0xFF; 4]), Err(CaptureError::RecordTooLong { .. })));
    }

    #[test]
    fn hex_csv() {
        let frames = vec![vec![0xDE, 0xAD], vec![0x00, 0x01, 0x02]];
        assert_eq!(parse_hex_csv(&to_hex_csv(&frames)).unwrap(), frames);
        let wireshark = "\"No.\",\"Data\"\n1,\"de:ad\"\n\n# note\n2,\"00 01 02\"\n";
        assert_eq!(parse_hex_csv(wireshark).unwrap(), frames);
        assert!(matches!(parse_hex_csv("dead\nzz\n"), Err(CaptureError::Hex { line: 2, .. })));
    }
}
