//! Encoding images against a codebook and the `PVQ1` container.
//!
//! Layout, little-endian throughout:
//!
//! | offset | size | field                          |
//! |--------|------|--------------------------------|
//! | 0      | 4    | magic `PVQ1`                   |
//! | 4      | 2    | format version (1)             |
//! | 6      | 4    | image width                    |
//! | 10     | 4    | image height                   |
//! | 14     | 2    | block width                    |
//! | 16     | 2    | block height                   |
//! | 18     | 4    | codebook size N                |
//! | 22     | 2    | index width in bytes (1 or 2)  |
//!
//! followed by `N * block_w * block_h` codeword bytes (codeword-major, row-major within a
//! block) and then one index per block, row-major over the block grid.

use std::path::Path;

use crate::error::{Error, Result};
use crate::imageio::GrayImage;
use crate::vq::{assign_all, tile_image, untile, BlockGeometry, Codebook};

pub const MAGIC: [u8; 4] = *b"PVQ1";
pub const FORMAT_VERSION: u16 = 1;
pub const HEADER_LEN: usize = 24;

/// Largest codebook addressable with two-byte indices.
pub const MAX_CODEBOOK_SIZE: usize = 1 << 16;

/// Bytes per stored index for a codebook of `size` entries.
pub fn index_width(size: usize) -> usize {
    if size <= 256 {
        1
    } else {
        2
    }
}

/// Codeword indices, row-major over the block grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexTable {
    indices: Vec<u16>,
    blocks_x: usize,
    blocks_y: usize,
}

impl IndexTable {
    pub fn new(blocks_x: usize, blocks_y: usize, indices: Vec<u16>) -> Result<Self> {
        if indices.len() != blocks_x * blocks_y {
            return Err(Error::Dimension(format!(
                "{blocks_x}x{blocks_y} block grid needs {} indices, got {}",
                blocks_x * blocks_y,
                indices.len()
            )));
        }
        Ok(Self {
            indices,
            blocks_x,
            blocks_y,
        })
    }

    pub fn indices(&self) -> &[u16] {
        &self.indices
    }

    pub fn blocks_x(&self) -> usize {
        self.blocks_x
    }

    pub fn blocks_y(&self) -> usize {
        self.blocks_y
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// A self-contained encoded image: geometry, 8-bit codebook and index table.
#[derive(Clone, Debug, PartialEq)]
pub struct CompressedImage {
    image_w: usize,
    image_h: usize,
    codebook: Codebook,
    index_table: IndexTable,
}

impl CompressedImage {
    /// Validates that the parts fit together. Codeword components must be whole gray levels.
    pub fn new(
        image_w: usize,
        image_h: usize,
        codebook: Codebook,
        index_table: IndexTable,
    ) -> Result<Self> {
        let geometry = codebook.geometry();
        if image_w == 0
            || image_h == 0
            || image_w > u32::MAX as usize
            || image_h > u32::MAX as usize
        {
            return Err(Error::Dimension(format!(
                "unsupported image size {image_w}x{image_h}"
            )));
        }
        if geometry.block_w() > usize::from(u16::MAX) || geometry.block_h() > usize::from(u16::MAX)
        {
            return Err(Error::Config(format!(
                "block {geometry} too large for the container"
            )));
        }
        if codebook.len() > MAX_CODEBOOK_SIZE {
            return Err(Error::Config(format!(
                "codebook of {} entries exceeds the {MAX_CODEBOOK_SIZE} addressable by two-byte indices",
                codebook.len()
            )));
        }
        if codebook.iter().flatten().any(|c| c.fract() != 0.0) {
            return Err(Error::Dimension(
                "stored codewords must hold whole gray levels".into(),
            ));
        }
        let (bx, by) = geometry.grid(image_w, image_h)?;
        if (index_table.blocks_x, index_table.blocks_y) != (bx, by) {
            return Err(Error::Dimension(format!(
                "index table is {}x{} blocks, image needs {bx}x{by}",
                index_table.blocks_x, index_table.blocks_y
            )));
        }
        if let Some(&bad) = index_table
            .indices
            .iter()
            .find(|&&i| usize::from(i) >= codebook.len())
        {
            return Err(Error::IndexOutOfRange {
                index: usize::from(bad),
                size: codebook.len(),
            });
        }
        Ok(Self {
            image_w,
            image_h,
            codebook,
            index_table,
        })
    }

    pub fn image_w(&self) -> usize {
        self.image_w
    }

    pub fn image_h(&self) -> usize {
        self.image_h
    }

    pub fn geometry(&self) -> BlockGeometry {
        self.codebook.geometry()
    }

    pub fn codebook(&self) -> &Codebook {
        &self.codebook
    }

    pub fn index_table(&self) -> &IndexTable {
        &self.index_table
    }

    /// Size of the serialized form in bytes.
    pub fn serialized_len(&self) -> usize {
        HEADER_LEN
            + self.codebook.len() * self.geometry().dim()
            + self.index_table.len() * index_width(self.codebook.len())
    }
}

/// Maps every block to its nearest codeword in the 8-bit rounded codebook.
///
/// The search runs against the rounded codewords that get stored, so the decoded image is
/// the closest reconstruction the file can express.
pub fn encode(image: &GrayImage, codebook: &Codebook) -> Result<CompressedImage> {
    if codebook.len() > MAX_CODEBOOK_SIZE {
        return Err(Error::Config(format!(
            "codebook of {} entries exceeds {MAX_CODEBOOK_SIZE}",
            codebook.len()
        )));
    }
    let stored = codebook.rounded();
    let ts = tile_image(image, stored.geometry())?;
    let indices = assign_all(&ts, stored.as_flat())
        .into_iter()
        .map(|(i, _)| i as u16)
        .collect();
    let (bx, by) = stored.geometry().grid(image.width(), image.height())?;
    let table = IndexTable::new(bx, by, indices)?;
    CompressedImage::new(image.width(), image.height(), stored, table)
}

pub fn decode(compressed: &CompressedImage) -> Result<GrayImage> {
    let cb = &compressed.codebook;
    let mut blocks = Vec::with_capacity(compressed.index_table.len());
    for &i in &compressed.index_table.indices {
        let i = usize::from(i);
        if i >= cb.len() {
            return Err(Error::IndexOutOfRange {
                index: i,
                size: cb.len(),
            });
        }
        blocks.push(cb.codeword(i));
    }
    untile(
        blocks,
        cb.geometry(),
        compressed.image_w,
        compressed.image_h,
    )
}

pub fn serialize(compressed: &CompressedImage) -> Vec<u8> {
    let g = compressed.geometry();
    let size = compressed.codebook.len();
    let width = index_width(size);
    let mut out = Vec::with_capacity(compressed.serialized_len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(compressed.image_w as u32).to_le_bytes());
    out.extend_from_slice(&(compressed.image_h as u32).to_le_bytes());
    out.extend_from_slice(&(g.block_w() as u16).to_le_bytes());
    out.extend_from_slice(&(g.block_h() as u16).to_le_bytes());
    out.extend_from_slice(&(size as u32).to_le_bytes());
    out.extend_from_slice(&(width as u16).to_le_bytes());
    out.extend_from_slice(&compressed.codebook.to_bytes());
    for &i in &compressed.index_table.indices {
        if width == 1 {
            out.push(i as u8);
        } else {
            out.extend_from_slice(&i.to_le_bytes());
        }
    }
    debug_assert_eq!(out.len(), compressed.serialized_len());
    out
}

fn u16_at(bytes: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([bytes[at], bytes[at + 1]])
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap())
}

pub fn deserialize(bytes: &[u8]) -> Result<CompressedImage> {
    if bytes.len() < MAGIC.len() {
        return Err(Error::Truncated {
            expected: HEADER_LEN,
            found: bytes.len(),
        });
    }
    let magic: [u8; 4] = bytes[..4].try_into().unwrap();
    if magic != MAGIC {
        return Err(Error::BadMagic(magic));
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::Truncated {
            expected: HEADER_LEN,
            found: bytes.len(),
        });
    }
    let version = u16_at(bytes, 4);
    if version != FORMAT_VERSION {
        return Err(Error::VersionMismatch(version));
    }
    let image_w = u32_at(bytes, 6) as usize;
    let image_h = u32_at(bytes, 10) as usize;
    let block_w = usize::from(u16_at(bytes, 14));
    let block_h = usize::from(u16_at(bytes, 16));
    let size = u32_at(bytes, 18) as usize;
    let width = usize::from(u16_at(bytes, 22));

    let geometry = BlockGeometry::new(block_w, block_h)
        .map_err(|_| Error::BadHeader(format!("block {block_w}x{block_h}")))?;
    if image_w == 0 || image_h == 0 {
        return Err(Error::BadHeader(format!("image size {image_w}x{image_h}")));
    }
    let (bx, by) = geometry.grid(image_w, image_h).map_err(|_| {
        Error::BadHeader(format!("{image_w}x{image_h} does not tile into {geometry}"))
    })?;
    if size == 0 || size > MAX_CODEBOOK_SIZE {
        return Err(Error::BadHeader(format!("codebook size {size}")));
    }
    if width != index_width(size) {
        return Err(Error::BadHeader(format!(
            "index width {width} does not match codebook size {size}"
        )));
    }

    let codebook_len = size * geometry.dim();
    let expected = HEADER_LEN + codebook_len + bx * by * width;
    if bytes.len() < expected {
        return Err(Error::Truncated {
            expected,
            found: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(Error::LengthMismatch {
            expected,
            found: bytes.len(),
        });
    }

    let words = &bytes[HEADER_LEN..HEADER_LEN + codebook_len];
    let codebook = Codebook::from_flat(geometry, words.iter().map(|&b| f64::from(b)).collect())?;
    let raw = &bytes[HEADER_LEN + codebook_len..];
    let indices: Vec<u16> = if width == 1 {
        raw.iter().map(|&b| u16::from(b)).collect()
    } else {
        raw.chunks_exact(2)
            .map(|c| u16::from_le_bytes([c[0], c[1]]))
            .collect()
    };
    let table = IndexTable::new(bx, by, indices)?;
    CompressedImage::new(image_w, image_h, codebook, table)
}

/// Raw image bytes divided by serialized bytes.
pub fn compression_ratio(compressed: &CompressedImage) -> f64 {
    (compressed.image_w * compressed.image_h) as f64 / compressed.serialized_len() as f64
}

pub fn read_pvq_file(path: impl AsRef<Path>) -> Result<CompressedImage> {
    let path = path.as_ref();
    let bytes =
        std::fs::read(path).map_err(|e| Error::from(e).context(path.display().to_string()))?;
    deserialize(&bytes).map_err(|e| e.context(path.display().to_string()))
}

pub fn write_pvq_file(path: impl AsRef<Path>, compressed: &CompressedImage) -> Result<()> {
    std::fs::write(path, serialize(compressed))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imageio::{synth_image, SynthKind};
    use crate::metrics::mse;
    use crate::vq::{init_random, nearest_codeword};
    use proptest::prelude::*;

    fn geom(w: usize, h: usize) -> BlockGeometry {
        BlockGeometry::new(w, h).unwrap()
    }

    fn two_level_codebook() -> Codebook {
        Codebook::new(geom(2, 2), vec![vec![0.0; 4], vec![255.0; 4]]).unwrap()
    }

    #[test]
    fn encodes_blocks_to_nearest() {
        let img = GrayImage::new(4, 2, vec![10, 10, 200, 200, 10, 10, 200, 200]).unwrap();
        let c = encode(&img, &two_level_codebook()).unwrap();
        assert_eq!(c.index_table().indices(), &[0, 1]);
        assert_eq!(
            (c.index_table().blocks_x(), c.index_table().blocks_y()),
            (2, 1)
        );
    }

    #[test]
    fn exact_blocks_are_lossless() {
        let words: Vec<Vec<f64>> = (0..8).map(|i| vec![f64::from(i * 30); 4]).collect();
        let cb = Codebook::new(geom(2, 2), words).unwrap();
        let img = GrayImage::new(4, 4, vec![150; 16]).unwrap();
        let c = encode(&img, &cb).unwrap();
        assert!(c.index_table().indices().iter().all(|&i| i == 5));
        assert_eq!(decode(&c).unwrap(), img);
    }

    #[test]
    fn constant_index_tiles_codeword() {
        let cb = Codebook::new(geom(2, 1), vec![vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let table = IndexTable::new(2, 2, vec![1; 4]).unwrap();
        let c = CompressedImage::new(4, 2, cb, table).unwrap();
        assert_eq!(decode(&c).unwrap().samples(), &[3, 4, 3, 4, 3, 4, 3, 4]);
    }

    #[test]
    fn encode_rejects_untileable() {
        let img = GrayImage::filled(5, 4, 0).unwrap();
        assert!(matches!(
            encode(&img, &two_level_codebook()),
            Err(Error::Tiling { .. })
        ));
    }

    #[test]
    fn encode_stores_rounded_codewords() {
        let cb = Codebook::new(geom(1, 1), vec![vec![10.4], vec![10.6], vec![100.5]]).unwrap();
        let img = GrayImage::new(2, 1, vec![11, 100]).unwrap();
        let c = encode(&img, &cb).unwrap();
        assert_eq!(c.codebook().to_bytes(), [10, 11, 101]);
        // 11 sits exactly on rounded codeword 1.
        assert_eq!(c.index_table().indices(), &[1, 2]);
    }

    #[test]
    fn header_layout_is_bit_exact() {
        let img = GrayImage::new(4, 2, vec![10, 10, 200, 200, 10, 10, 200, 200]).unwrap();
        let bytes = serialize(&encode(&img, &two_level_codebook()).unwrap());
        let mut expected = Vec::new();
        expected.extend_from_slice(b"PVQ1");
        expected.extend_from_slice(&[1, 0]);
        expected.extend_from_slice(&[4, 0, 0, 0, 2, 0, 0, 0]);
        expected.extend_from_slice(&[2, 0, 2, 0]);
        expected.extend_from_slice(&[2, 0, 0, 0]);
        expected.extend_from_slice(&[1, 0]);
        expected.extend_from_slice(&[0, 0, 0, 0, 255, 255, 255, 255]);
        expected.extend_from_slice(&[0, 1]);
        assert_eq!(bytes, expected);
    }

    #[test]
    fn wide_indices_are_little_endian() {
        let words: Vec<Vec<f64>> = (0..300).map(|i| vec![f64::from(i % 256)]).collect();
        let cb = Codebook::new(geom(1, 1), words).unwrap();
        let table = IndexTable::new(2, 1, vec![299, 1]).unwrap();
        let c = CompressedImage::new(2, 1, cb, table).unwrap();
        let bytes = serialize(&c);
        assert_eq!(&bytes[22..24], &[2, 0]);
        assert_eq!(&bytes[bytes.len() - 4..], &[0x2b, 0x01, 0x01, 0x00]);
        assert_eq!(deserialize(&bytes).unwrap(), c);
    }

    #[test]
    fn distinct_corruption_errors() {
        let img = GrayImage::new(4, 2, vec![10, 10, 200, 200, 10, 10, 200, 200]).unwrap();
        let good = serialize(&encode(&img, &two_level_codebook()).unwrap());

        let mut bad = good.clone();
        bad[..4].copy_from_slice(b"PVQX");
        assert!(matches!(deserialize(&bad), Err(Error::BadMagic(m)) if &m == b"PVQX"));

        let mut bad = good.clone();
        bad[4] = 2;
        assert!(matches!(deserialize(&bad), Err(Error::VersionMismatch(2))));

        assert!(matches!(
            deserialize(&good[..good.len() - 1]),
            Err(Error::Truncated { .. })
        ));
        assert!(matches!(
            deserialize(&good[..10]),
            Err(Error::Truncated { .. })
        ));

        let mut bad = good.clone();
        bad.push(0);
        assert!(matches!(
            deserialize(&bad),
            Err(Error::LengthMismatch { .. })
        ));

        let mut bad = good.clone();
        *bad.last_mut().unwrap() = 2;
        assert!(matches!(
            deserialize(&bad),
            Err(Error::IndexOutOfRange { index: 2, size: 2 })
        ));

        let mut bad = good.clone();
        bad[22] = 2;
        assert!(matches!(deserialize(&bad), Err(Error::BadHeader(_))));
    }

    #[test]
    fn truncated_codebook_section() {
        let img = synth_image(SynthKind::Noise, 64, 64, 3).unwrap();
        let ts = tile_image(&img, geom(4, 4)).unwrap();
        let c = encode(&img, &init_random(&ts, 256, 0).unwrap()).unwrap();
        let bytes = serialize(&c);
        assert!(matches!(
            deserialize(&bytes[..HEADER_LEN + 100]),
            Err(Error::Truncated { .. })
        ));
    }

    #[test]
    fn ratio_arithmetic() {
        let img = GrayImage::filled(512, 512, 9).unwrap();
        let cb = Codebook::new(geom(4, 4), vec![vec![9.0; 16]; 256]).unwrap();
        let c = encode(&img, &cb).unwrap();
        assert_eq!(serialize(&c).len(), 20504);
        assert!((compression_ratio(&c) - 12.785).abs() < 1e-3);

        let tiny = encode(&GrayImage::filled(2, 2, 0).unwrap(), &two_level_codebook()).unwrap();
        assert!(compression_ratio(&tiny) < 1.0);
    }

    #[test]
    fn ratio_grows_with_area() {
        let cb = Codebook::new(geom(4, 4), vec![vec![0.0; 16]; 16]).unwrap();
        let ratios: Vec<f64> = [16, 32, 64, 128]
            .iter()
            .map(|&s| {
                compression_ratio(&encode(&GrayImage::filled(s, s, 0).unwrap(), &cb).unwrap())
            })
            .collect();
        assert!(ratios.windows(2).all(|w| w[1] > w[0]), "{ratios:?}");
    }

    #[test]
    fn decode_mse_matches_rounded_codebook_distortion() {
        let img = synth_image(SynthKind::Noise, 32, 16, 8).unwrap();
        let ts = tile_image(&img, geom(4, 2)).unwrap();
        let mut cb = init_random(&ts, 12, 1).unwrap();
        // Push codewords off the integer grid.
        let shifted: Vec<Vec<f64>> = cb
            .iter()
            .map(|c| c.iter().map(|x| (x * 0.97 + 0.3).min(255.0)).collect())
            .collect();
        cb = Codebook::new(cb.geometry(), shifted).unwrap();
        let c = encode(&img, &cb).unwrap();
        let rounded = cb.rounded();
        let total: f64 = ts
            .iter()
            .map(|v| nearest_codeword(v, &rounded).unwrap().1)
            .sum();
        let expected = total / (img.width() * img.height()) as f64;
        let got = mse(&img, &decode(&c).unwrap()).unwrap();
        assert!((got - expected).abs() <= 1e-9, "{got} vs {expected}");
    }

    proptest! {
        #[test]
        fn serialization_roundtrip(bw in 1usize..5, bh in 1usize..5, nx in 1usize..6, ny in 1usize..6,
                                   n in 1usize..400, seed: u64) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let g = geom(bw, bh);
            let data: Vec<f64> = (0..n * g.dim()).map(|_| f64::from(rng.gen::<u8>())).collect();
            let cb = Codebook::from_flat(g, data).unwrap();
            let indices: Vec<u16> = (0..nx * ny).map(|_| rng.gen_range(0..n) as u16).collect();
            let c = CompressedImage::new(bw * nx, bh * ny, cb, IndexTable::new(nx, ny, indices).unwrap()).unwrap();
            let bytes = serialize(&c);
            prop_assert_eq!(bytes.len(), c.serialized_len());
            let back = deserialize(&bytes).unwrap();
            prop_assert_eq!(&back, &c);
            prop_assert_eq!(serialize(&back), bytes);
        }
    }
}
