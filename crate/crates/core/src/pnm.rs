//! Binary PGM (P5) and PPM (P6) reading and writing.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PnmKind {
    /// P5, one channel
    Graymap,
    /// P6, three channels
    Pixmap,
}

impl PnmKind {
    fn channels(self) -> usize {
        match self {
            PnmKind::Graymap => 1,
            PnmKind::Pixmap => 3,
        }
    }

    fn magic(self) -> &'static [u8; 2] {
        match self {
            PnmKind::Graymap => b"P5",
            PnmKind::Pixmap => b"P6",
        }
    }
}

/// Decoded image; samples are stored widened to u16, row-major, top row first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PnmImage {
    kind: PnmKind,
    width: usize,
    height: usize,
    maxval: u16,
    samples: Vec<u16>,
}

impl PnmImage {
    pub fn new(
        kind: PnmKind,
        width: usize,
        height: usize,
        maxval: u16,
        samples: Vec<u16>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Image("zero image dimension".into()));
        }
        if maxval == 0 {
            return Err(Error::Image("maxval must be positive".into()));
        }
        let expected = width
            .checked_mul(height)
            .and_then(|n| n.checked_mul(kind.channels()))
            .ok_or_else(|| Error::Image("image dimensions overflow".into()))?;
        if samples.len() != expected {
            return Err(Error::Image(format!(
                "expected {expected} samples, got {}",
                samples.len()
            )));
        }
        if let Some(s) = samples.iter().find(|&&s| s > maxval) {
            return Err(Error::Image(format!("sample {s} exceeds maxval {maxval}")));
        }
        Ok(Self {
            kind,
            width,
            height,
            maxval,
            samples,
        })
    }

    /// 8-bit RGB image.
    pub fn rgb8(width: usize, height: usize, rgb: &[[u8; 3]]) -> Result<Self> {
        let samples = rgb.iter().flatten().map(|&b| b as u16).collect();
        Self::new(PnmKind::Pixmap, width, height, 255, samples)
    }

    pub fn kind(&self) -> PnmKind {
        self.kind
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn maxval(&self) -> u16 {
        self.maxval
    }

    /// One slice of `channels` samples per pixel.
    pub fn pixels(&self) -> impl Iterator<Item = &[u16]> {
        self.samples.chunks_exact(self.kind.channels())
    }

    pub fn pixel(&self, col: usize, row: usize) -> &[u16] {
        let c = self.kind.channels();
        let start = (row * self.width + col) * c;
        &self.samples[start..start + c]
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.samples.len() * 2 + 32);
        out.extend_from_slice(self.kind.magic());
        out.extend_from_slice(
            format!("\n{} {}\n{}\n", self.width, self.height, self.maxval).as_bytes(),
        );
        if self.maxval < 256 {
            out.extend(self.samples.iter().map(|&s| s as u8));
        } else {
            for s in &self.samples {
                out.extend_from_slice(&s.to_be_bytes());
            }
        }
        out
    }
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.data.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.data.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn header_number(&mut self, what: &str) -> Result<u32> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.data.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Image(format!("missing {what}")));
        }
        std::str::from_utf8(&self.data[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Image(format!("{what} out of range")))
    }
}

/// Decodes a binary P5 or P6 file.
pub fn decode(data: &[u8]) -> Result<PnmImage> {
    let kind = match data.get(..2) {
        Some(b"P5") => PnmKind::Graymap,
        Some(b"P6") => PnmKind::Pixmap,
        _ => {
            return Err(Error::Image(
                "not a binary PGM/PPM (expected P5 or P6)".into(),
            ))
        }
    };
    let mut cur = Cursor { data, pos: 2 };
    let width = cur.header_number("width")? as usize;
    let height = cur.header_number("height")? as usize;
    let maxval = cur.header_number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::Image("zero image dimension".into()));
    }
    if !(1..=65535).contains(&maxval) {
        return Err(Error::Image(format!("maxval {maxval} outside 1..=65535")));
    }
    // exactly one whitespace byte separates the header from the raster
    match data.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err(Error::Image("missing whitespace after maxval".into())),
    }
    let bytes_per_sample = if maxval < 256 { 1 } else { 2 };
    let count = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(kind.channels()))
        .ok_or_else(|| Error::Image("image dimensions overflow".into()))?;
    let raster = &data[cur.pos..];
    let needed = count
        .checked_mul(bytes_per_sample)
        .ok_or_else(|| Error::Image("image dimensions overflow".into()))?;
    if raster.len() < needed {
        return Err(Error::Image(format!(
            "truncated raster: need {needed} bytes, have {}",
            raster.len()
        )));
    }
    let samples: Vec<u16> = if bytes_per_sample == 1 {
        raster[..needed].iter().map(|&b| b as u16).collect()
    } else {
        raster[..needed]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect()
    };
    PnmImage::new(kind, width, height, maxval as u16, samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decodes_p5_with_comment() {
        let mut data = b"P5\n# made by hand\n3 2\n255\n".to_vec();
        data.extend_from_slice(&[0, 10, 255, 10, 0, 0]);
        let img = decode(&data).unwrap();
        assert_eq!((img.width(), img.height()), (3, 2));
        assert_eq!(img.pixel(2, 0), &[255]);
        assert_eq!(img.pixel(0, 1), &[10]);
    }

    #[test]
    fn decodes_16_bit() {
        let mut data = b"P5 1 1 1000\n".to_vec();
        data.extend_from_slice(&1000u16.to_be_bytes());
        assert_eq!(decode(&data).unwrap().pixel(0, 0), &[1000]);
    }

    #[test]
    fn encode_then_decode() {
        let img = PnmImage::rgb8(2, 1, &[[1, 2, 3], [255, 0, 7]]).unwrap();
        assert_eq!(decode(&img.encode()).unwrap(), img);
    }

    #[test]
    fn rejects_malformed() {
        assert!(decode(b"").is_err());
        assert!(decode(b"P3 1 1 255\n1 2 3").is_err());
        assert!(decode(b"P6 1 1 255\n\x01\x02").is_err());
        assert!(decode(b"P5 0 1 255\n").is_err());
        assert!(decode(b"P5 1 1 0\n\x00").is_err());
        assert!(decode(b"P5 1 1 70000\n\x00\x00").is_err());
        assert!(decode(b"P5 1 1 255").is_err());
        assert!(decode(b"P5 99999999999999999999 1 255\n").is_err());
        assert!(decode(b"P5 1 1 100\n\xff").is_err());
    }
}
