//! Binary PGM ("P5", maxval <= 255) reader and writer.

use std::path::Path;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(Error::arg(format!(
                "image buffer of {} bytes does not match {width}x{height}",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderReader<'_> {
    fn fail<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Format {
            offset: self.pos,
            message: message.into(),
        })
    }

    fn skip_whitespace_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(|b| b.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return self.fail(format!("expected {what}"));
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii digits");
        match text.parse::<usize>() {
            Ok(v) => Ok(v),
            Err(_) => Err(Error::Format {
                offset: start,
                message: format!("{what} does not fit in an integer"),
            }),
        }
    }
}

/// Decodes a binary PGM held in memory.
pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let mut r = HeaderReader { bytes, pos: 0 };
    match bytes.get(..2) {
        Some(b"P5") => r.pos = 2,
        Some(m) if m[0] == b'P' => {
            return r.fail(format!(
                "unsupported PGM variant {:?}, only binary P5 is accepted",
                String::from_utf8_lossy(m)
            ))
        }
        _ => return r.fail("missing P5 magic"),
    }
    if !bytes
        .get(2)
        .is_some_and(|b| b.is_ascii_whitespace() || *b == b'#')
    {
        return r.fail("magic must be followed by whitespace");
    }
    let width = r.number("width")?;
    let height = r.number("height")?;
    r.skip_whitespace_and_comments();
    let maxval_at = r.pos;
    let maxval = r.number("maxval")?;
    if width == 0 || height == 0 {
        return r.fail("zero image dimension");
    }
    if maxval == 0 || maxval > 255 {
        return Err(Error::Format {
            offset: maxval_at,
            message: format!("maxval {maxval} outside 1..=255"),
        });
    }
    if !bytes.get(r.pos).is_some_and(|b| b.is_ascii_whitespace()) {
        return r.fail("expected single whitespace before raster");
    }
    r.pos += 1;
    let need = width.checked_mul(height).ok_or_else(|| Error::Format {
        offset: r.pos,
        message: "image dimensions overflow".into(),
    })?;
    let raster = &bytes[r.pos..];
    if raster.len() < need {
        return Err(Error::Format {
            offset: bytes.len(),
            message: format!(
                "truncated raster: expected {need} bytes, found {}",
                raster.len()
            ),
        });
    }
    GrayImage::new(width, height, raster[..need].to_vec())
}

pub fn encode_pgm(image: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.extend_from_slice(&image.pixels);
    out
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes)
}

pub fn save_pgm(path: impl AsRef<Path>, image: &GrayImage) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_pgm(image)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decodes_2x2() {
        let mut bytes = b"P5\n2 2\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 255, 128, 7]);
        let img = decode_pgm(&bytes).unwrap();
        assert_eq!((img.width(), img.height()), (2, 2));
        assert_eq!(img.pixels(), &[0, 255, 128, 7]);
        assert_eq!(img.get(1, 1), 7);
    }

    #[test]
    fn comments_in_header() {
        let mut bytes = b"P5 # made by hand\n# another\n3 1 255\n".to_vec();
        bytes.extend_from_slice(&[1, 2, 3]);
        assert_eq!(decode_pgm(&bytes).unwrap().pixels(), &[1, 2, 3]);
    }

    #[test]
    fn ascii_variant_rejected() {
        let err = decode_pgm(b"P2\n2 2\n255\n0 1 2 3\n").unwrap_err();
        assert!(matches!(err, Error::Format { offset: 0, .. }), "{err}");
    }

    #[test]
    fn sixteen_bit_rejected() {
        let err = decode_pgm(b"P5\n1 1\n65535\n\0\0").unwrap_err();
        assert!(matches!(err, Error::Format { offset: 7, .. }), "{err}");
    }

    #[test]
    fn truncated_raster_reports_offset() {
        let mut bytes = b"P5\n2 2\n255\n".to_vec();
        bytes.extend_from_slice(&[1, 2, 3]);
        match decode_pgm(&bytes).unwrap_err() {
            Error::Format { offset, .. } => assert_eq!(offset, bytes.len()),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn malformed_header() {
        assert!(decode_pgm(b"").is_err());
        assert!(decode_pgm(b"P5\nx 2\n255\n").is_err());
        assert!(decode_pgm(b"P5\n0 2\n255\n").is_err());
        assert!(decode_pgm(b"P6\n1 1\n255\n\0\0\0").is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.pgm");
        let img = GrayImage::new(3, 2, vec![9, 8, 7, 6, 5, 4]).unwrap();
        save_pgm(&path, &img).unwrap();
        assert_eq!(load_pgm(&path).unwrap(), img);
        assert!(matches!(
            load_pgm(dir.path().join("missing.pgm")),
            Err(Error::Io { .. })
        ));
    }
}
