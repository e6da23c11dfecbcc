//! 8-bit grayscale images and the binary PGM (`P5`) container.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Row-major grid of 8-bit gray samples.
#[derive(Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    samples: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, samples: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Dimension(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        let expected = width
            .checked_mul(height)
            .ok_or_else(|| Error::Dimension(format!("{width}x{height} overflows")))?;
        if samples.len() != expected {
            return Err(Error::Dimension(format!(
                "{width}x{height} image needs {expected} samples, got {}",
                samples.len()
            )));
        }
        Ok(Self {
            width,
            height,
            samples,
        })
    }

    /// An image with every sample set to `value`.
    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width.saturating_mul(height)])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<u8> {
        self.samples
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.samples[y * self.width + x]
    }

    pub fn row(&self, y: usize) -> &[u8] {
        &self.samples[y * self.width..(y + 1) * self.width]
    }

    pub fn mean(&self) -> f64 {
        let sum: u64 = self.samples.iter().map(|&s| u64::from(s)).sum();
        sum as f64 / self.samples.len() as f64
    }
}

impl fmt::Debug for GrayImage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GrayImage")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("samples", &format_args!("[{} bytes]", self.samples.len()))
            .finish()
    }
}

fn is_pnm_whitespace(b: u8) -> bool {
    matches!(b, b' ' | b'\t' | b'\n' | b'\r' | b'\x0b' | b'\x0c')
}

struct HeaderReader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl HeaderReader<'_> {
    /// Skips whitespace and `#` comments that run to the end of the line.
    fn skip_separators(&mut self) {
        while let Some(&b) = self.data.get(self.pos) {
            if is_pnm_whitespace(b) {
                self.pos += 1;
            } else if b == b'#' {
                while let Some(&c) = self.data.get(self.pos) {
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

    fn read_uint(&mut self, what: &str) -> Result<u32> {
        self.skip_separators();
        let start = self.pos;
        while self.data.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(match self.data.get(self.pos) {
                None => Error::Format(format!("header ends before {what}")),
                Some(&b) => Error::Format(format!("expected {what}, found byte 0x{b:02x}")),
            });
        }
        let text = std::str::from_utf8(&self.data[start..self.pos]).expect("ascii digits");
        text.parse()
            .map_err(|_| Error::Format(format!("{what} {text} out of range")))
    }
}

/// Parses a binary PGM (`P5`) with maxval at most 255.
pub fn load_pgm(bytes: &[u8]) -> Result<GrayImage> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(Error::Format("missing P5 magic".into()));
    }
    let mut reader = HeaderReader {
        data: bytes,
        pos: 2,
    };
    if !bytes
        .get(2)
        .copied()
        .is_some_and(|b| is_pnm_whitespace(b) || b == b'#')
    {
        return Err(Error::Format("magic must be followed by whitespace".into()));
    }
    let width = reader.read_uint("width")?;
    let height = reader.read_uint("height")?;
    let maxval = reader.read_uint("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::Format(format!("zero dimension {width}x{height}")));
    }
    if maxval == 0 {
        return Err(Error::Format("maxval must be positive".into()));
    }
    if maxval > 255 {
        return Err(Error::UnsupportedDepth(maxval));
    }
    // Exactly one whitespace byte separates maxval from the raster.
    match bytes.get(reader.pos) {
        Some(&b) if is_pnm_whitespace(b) => reader.pos += 1,
        Some(&b) => {
            return Err(Error::Format(format!(
                "expected whitespace after maxval, found byte 0x{b:02x}"
            )))
        }
        None => {
            return Err(Error::Truncated {
                expected: 1,
                found: 0,
            })
        }
    }

    let (width, height) = (width as usize, height as usize);
    let expected = width
        .checked_mul(height)
        .ok_or_else(|| Error::Format(format!("{width}x{height} overflows")))?;
    let raster = &bytes[reader.pos..];
    if raster.len() < expected {
        return Err(Error::Truncated {
            expected,
            found: raster.len(),
        });
    }
    GrayImage::new(width, height, raster[..expected].to_vec())
}

/// Serializes an image as binary PGM with maxval 255.
pub fn save_pgm(image: &GrayImage) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", image.width, image.height);
    let mut out = Vec::with_capacity(header.len() + image.samples.len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(&image.samples);
    out
}

pub fn read_pgm_file(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes =
        std::fs::read(path).map_err(|e| Error::from(e).context(path.display().to_string()))?;
    load_pgm(&bytes).map_err(|e| e.context(path.display().to_string()))
}

pub fn write_pgm_file(path: impl AsRef<Path>, image: &GrayImage) -> Result<()> {
    std::fs::write(path, save_pgm(image))?;
    Ok(())
}

/// Kinds of generated test images.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SynthKind {
    /// Horizontal ramp from 0 at the left edge to 255 at the right edge.
    Gradient,
    /// 8x8 cells alternating between 0 and 255, starting with 0 at the origin.
    Checker,
    /// Seeded uniform bytes.
    Noise,
}

impl SynthKind {
    pub const ALL: [SynthKind; 3] = [SynthKind::Gradient, SynthKind::Checker, SynthKind::Noise];

    pub fn name(self) -> &'static str {
        match self {
            SynthKind::Gradient => "gradient",
            SynthKind::Checker => "checker",
            SynthKind::Noise => "noise",
        }
    }
}

impl fmt::Display for SynthKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SynthKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown synthetic image kind {s:?}")))
    }
}

const CHECKER_CELL: usize = 8;

/// Deterministically generates a synthetic image. `seed` only affects [`SynthKind::Noise`].
pub fn synth_image(kind: SynthKind, width: usize, height: usize, seed: u64) -> Result<GrayImage> {
    if width == 0 || height == 0 {
        return Err(Error::DegenerateInput(format!(
            "synthetic image must be at least 1x1, got {width}x{height}"
        )));
    }
    let samples = match kind {
        SynthKind::Gradient => {
            if width < 2 {
                return Err(Error::DegenerateInput(
                    "gradient needs width of at least 2".into(),
                ));
            }
            let row: Vec<u8> = (0..width).map(|x| (255 * x / (width - 1)) as u8).collect();
            row.repeat(height)
        }
        SynthKind::Checker => (0..height)
            .flat_map(|y| {
                (0..width).map(move |x| {
                    if (x / CHECKER_CELL + y / CHECKER_CELL).is_multiple_of(2) {
                        0
                    } else {
                        255
                    }
                })
            })
            .collect(),
        SynthKind::Noise => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut buf = vec![0u8; width * height];
            rng.fill_bytes(&mut buf);
            buf
        }
    };
    GrayImage::new(width, height, samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn loads_minimal_images() {
        let img = load_pgm(b"P5\n2 2\n255\n\x00\x40\x80\xff").unwrap();
        assert_eq!((img.width(), img.height()), (2, 2));
        assert_eq!(img.samples(), &[0, 64, 128, 255]);

        let img = load_pgm(b"P5\n1 1\n255\n\x07").unwrap();
        assert_eq!(img.samples(), &[7]);
    }

    #[test]
    fn truncated_raster_is_rejected() {
        let err = load_pgm(b"P5\n2 2\n255\n\x00\x01\x02").unwrap_err();
        assert!(
            matches!(
                err,
                Error::Truncated {
                    expected: 4,
                    found: 3
                }
            ),
            "{err:?}"
        );
    }

    #[test]
    fn header_whitespace_and_comments() {
        let variants: [&[u8]; 4] = [
            b"P5 2 1 255 \x05\x06",
            b"P5\n# a comment\n2 1\n255\n\x05\x06",
            b"P5\n2\t1\r\n# another\n255\n\x05\x06",
            b"P5#c\n2 # w\n1\n255\t\x05\x06",
        ];
        for v in variants {
            let img =
                load_pgm(v).unwrap_or_else(|e| panic!("{:?}: {e}", String::from_utf8_lossy(v)));
            assert_eq!(img.samples(), &[5, 6]);
        }
    }

    #[test]
    fn raster_may_start_with_whitespace_byte() {
        // The single separator byte is consumed; following bytes are pixels even if they look like whitespace.
        let img = load_pgm(b"P5\n2 1\n255\n\x20\x0a").unwrap();
        assert_eq!(img.samples(), &[0x20, 0x0a]);
    }

    #[test]
    fn rejects_bad_headers() {
        assert!(matches!(
            load_pgm(b"P6\n1 1\n255\n\x00"),
            Err(Error::Format(_))
        ));
        assert!(matches!(
            load_pgm(b"P2\n1 1\n255\n0"),
            Err(Error::Format(_))
        ));
        assert!(matches!(
            load_pgm(b"P5\nx 1\n255\n\x00"),
            Err(Error::Format(_))
        ));
        assert!(matches!(load_pgm(b"P5\n0 1\n255\n"), Err(Error::Format(_))));
        assert!(matches!(load_pgm(b"P5\n1 1\n"), Err(Error::Format(_))));
        assert!(matches!(
            load_pgm(b"P5\n1 1\n65535\n\x00\x00"),
            Err(Error::UnsupportedDepth(65535))
        ));
    }

    #[test]
    fn save_writes_width_first() {
        let img = GrayImage::new(1, 1, vec![7]).unwrap();
        assert_eq!(save_pgm(&img), b"P5\n1 1\n255\n\x07");
        let img = GrayImage::new(2, 1, vec![0, 255]).unwrap();
        assert!(save_pgm(&img).starts_with(b"P5\n2 1\n"));
    }

    #[test]
    fn pseudorandom_roundtrip() {
        let img = synth_image(SynthKind::Noise, 64, 64, 9).unwrap();
        assert_eq!(load_pgm(&save_pgm(&img)).unwrap(), img);
    }

    #[test]
    fn checker_cells() {
        let img = synth_image(SynthKind::Checker, 16, 16, 0).unwrap();
        for y in 0..8 {
            for x in 0..8 {
                assert_eq!(img.get(x, y), 0);
                assert_eq!(img.get(x + 8, y), 255);
                assert_eq!(img.get(x, y + 8), 255);
                assert_eq!(img.get(x + 8, y + 8), 0);
            }
        }
    }

    #[test]
    fn gradient_ramp() {
        let img = synth_image(SynthKind::Gradient, 256, 1, 0).unwrap();
        let expected: Vec<u8> = (0..=255).collect();
        assert_eq!(img.samples(), expected.as_slice());
        assert!(matches!(
            synth_image(SynthKind::Gradient, 1, 4, 0),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn noise_is_seeded() {
        let a = synth_image(SynthKind::Noise, 8, 8, 42).unwrap();
        let b = synth_image(SynthKind::Noise, 8, 8, 42).unwrap();
        let c = synth_image(SynthKind::Noise, 8, 8, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn new_validates_length() {
        assert!(GrayImage::new(2, 2, vec![0; 3]).is_err());
        assert!(GrayImage::new(0, 2, vec![]).is_err());
    }

    proptest! {
        #[test]
        fn pgm_roundtrip(w in 1usize..40, h in 1usize..40, seed: u64) {
            let img = synth_image(SynthKind::Noise, w, h, seed).unwrap();
            prop_assert_eq!(load_pgm(&save_pgm(&img)).unwrap(), img);
        }
    }
}
