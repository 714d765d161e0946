//! Binary PGM (P5) with 16-bit big-endian samples.

use std::io::{BufRead, Read, Write};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pgm16 {
    pub width: u32,
    pub height: u32,
    pub maxval: u16,
    pub data: Vec<u16>,
}

impl Pgm16 {
    pub fn new(width: u32, height: u32, maxval: u16, data: Vec<u16>) -> Result<Self> {
        if data.len() != width as usize * height as usize {
            return Err(Error::Pgm(format!(
                "{} samples for a {width}x{height} image",
                data.len()
            )));
        }
        if maxval < 256 {
            return Err(Error::Pgm(format!("maxval {maxval} is not a 16-bit depth")));
        }
        if let Some(v) = data.iter().find(|&&v| v > maxval) {
            return Err(Error::Pgm(format!("sample {v} exceeds maxval {maxval}")));
        }
        Ok(Self {
            width,
            height,
            maxval,
            data,
        })
    }

    pub fn encode(&self) -> Vec<u8> {
        let header = format!("P5\n{} {}\n{}\n", self.width, self.height, self.maxval);
        let mut out = Vec::with_capacity(header.len() + 2 * self.data.len());
        out.extend_from_slice(header.as_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_be_bytes());
        }
        out
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(&self.encode())
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut cursor = std::io::Cursor::new(bytes);
        let magic = header_token(&mut cursor)?;
        if magic != "P5" {
            return Err(Error::Pgm(format!("unsupported magic `{magic}`")));
        }
        let width = parse_num(&header_token(&mut cursor)?, "width")?;
        let height = parse_num(&header_token(&mut cursor)?, "height")?;
        let maxval = parse_num(&header_token(&mut cursor)?, "maxval")?;
        if maxval == 0 || maxval > u16::MAX as u32 {
            return Err(Error::Pgm(format!("maxval {maxval} out of range")));
        }
        if maxval < 256 {
            return Err(Error::Pgm("8-bit PGM not supported".into()));
        }
        // Exactly one whitespace byte separates the header from the raster.
        let mut sep = [0u8; 1];
        cursor
            .read_exact(&mut sep)
            .map_err(|_| Error::Pgm("truncated header".into()))?;
        if !sep[0].is_ascii_whitespace() {
            return Err(Error::Pgm("missing whitespace after maxval".into()));
        }
        let n = width as usize * height as usize;
        let start = cursor.position() as usize;
        let raster = &bytes[start..];
        if raster.len() < 2 * n {
            return Err(Error::Pgm(format!(
                "expected {} raster bytes, found {}",
                2 * n,
                raster.len()
            )));
        }
        let data = raster[..2 * n]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect();
        Self::new(width, height, maxval as u16, data)
    }
}

fn parse_num(tok: &str, what: &str) -> Result<u32> {
    tok.parse()
        .map_err(|_| Error::Pgm(format!("bad {what} `{tok}`")))
}

/// Next whitespace-delimited header token, skipping `#` comments. Leaves the
/// cursor on the delimiter that ended the token.
fn header_token(cursor: &mut std::io::Cursor<&[u8]>) -> Result<String> {
    let mut tok = String::new();
    loop {
        let buf = cursor.fill_buf().map_err(|e| Error::Pgm(e.to_string()))?;
        let Some(&b) = buf.first() else {
            return if tok.is_empty() {
                Err(Error::Pgm("truncated header".into()))
            } else {
                Ok(tok)
            };
        };
        if b == b'#' && tok.is_empty() {
            let mut line = Vec::new();
            cursor
                .read_until(b'\n', &mut line)
                .map_err(|e| Error::Pgm(e.to_string()))?;
            continue;
        }
        if b.is_ascii_whitespace() {
            if !tok.is_empty() {
                return Ok(tok);
            }
            cursor.consume(1);
            continue;
        }
        tok.push(b as char);
        cursor.consume(1);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let img = Pgm16::new(2, 1, 1023, vec![1, 1023]).unwrap();
        let bytes = img.encode();
        assert_eq!(&bytes[..12], b"P5\n2 1\n1023\n");
        assert_eq!(&bytes[12..], &[0x00, 0x01, 0x03, 0xFF]);
    }

    #[test]
    fn comments_in_header() {
        let mut bytes = b"P5\n# made by hand\n2 1 # dims\n1023\n".to_vec();
        bytes.extend_from_slice(&[0, 7, 0, 9]);
        let img = Pgm16::decode(&bytes).unwrap();
        assert_eq!(img.data, vec![7, 9]);
    }

    #[test]
    fn rejects_malformed() {
        assert!(Pgm16::decode(b"P2\n1 1\n1023\n").is_err());
        assert!(Pgm16::decode(b"P5\n2 2\n1023\n\x00\x01").is_err());
        assert!(Pgm16::decode(b"P5\n1 1\n255\n\x01").is_err());
        assert!(Pgm16::new(1, 1, 1023, vec![1024]).is_err());
        assert!(Pgm16::decode(b"P5\n1 1\n1023\n\x04\x00").is_err());
    }

    proptest! {
        #[test]
        fn round_trip(w in 1u32..20, h in 1u32..20, seed in any::<u64>()) {
            let data: Vec<u16> = (0..w * h).map(|i| ((seed.wrapping_mul(i as u64 + 7) >> 13) % 1024) as u16).collect();
            let img = Pgm16::new(w, h, 1023, data).unwrap();
            prop_assert_eq!(Pgm16::decode(&img.encode()).unwrap(), img);
        }
    }
}
