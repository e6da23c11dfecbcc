//! Block vectors, codebooks, codebook initialization and LBG training.

mod init;
mod lbg;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imageio::GrayImage;

pub use init::{init_pyramid, init_random};
pub(crate) use lbg::assign_all;
pub use lbg::{lbg_train, LbgParams, TrainingReport, DEFAULT_EPSILON, DEFAULT_MAX_ITERS};

/// Width and height of the image blocks that become vectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BlockGeometry {
    block_w: usize,
    block_h: usize,
}

impl BlockGeometry {
    pub fn new(block_w: usize, block_h: usize) -> Result<Self> {
        if block_w == 0 || block_h == 0 {
            return Err(Error::Config(format!(
                "block dimensions must be positive, got {block_w}x{block_h}"
            )));
        }
        Ok(Self { block_w, block_h })
    }

    pub fn block_w(&self) -> usize {
        self.block_w
    }

    pub fn block_h(&self) -> usize {
        self.block_h
    }

    /// Vector dimension, `block_w * block_h`.
    pub fn dim(&self) -> usize {
        self.block_w * self.block_h
    }

    /// Block grid `(blocks_x, blocks_y)` for an image, or a tiling error.
    pub fn grid(&self, width: usize, height: usize) -> Result<(usize, usize)> {
        if !width.is_multiple_of(self.block_w) || !height.is_multiple_of(self.block_h) {
            return Err(Error::Tiling {
                width,
                height,
                block_w: self.block_w,
                block_h: self.block_h,
            });
        }
        Ok((width / self.block_w, height / self.block_h))
    }
}

impl fmt::Display for BlockGeometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.block_w, self.block_h)
    }
}

impl FromStr for BlockGeometry {
    type Err = Error;

    /// Parses `WxH`, e.g. `4x8`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("block geometry must look like WxH, got {s:?}"));
        let (w, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
        let w = w.trim().parse().map_err(|_| bad())?;
        let h = h.trim().parse().map_err(|_| bad())?;
        BlockGeometry::new(w, h)
    }
}

/// Flattened image blocks, row-major over the block grid.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingSet {
    geometry: BlockGeometry,
    blocks_x: usize,
    data: Vec<f64>,
}

impl TrainingSet {
    /// Builds a set from already-flattened vectors.
    pub fn from_vectors(
        geometry: BlockGeometry,
        blocks_x: usize,
        vectors: &[Vec<f64>],
    ) -> Result<Self> {
        let k = geometry.dim();
        let mut data = Vec::with_capacity(vectors.len() * k);
        for (i, v) in vectors.iter().enumerate() {
            if v.len() != k {
                return Err(Error::Dimension(format!(
                    "vector {i} has length {}, expected {k}",
                    v.len()
                )));
            }
            data.extend_from_slice(v);
        }
        Ok(Self {
            geometry,
            blocks_x,
            data,
        })
    }

    pub fn geometry(&self) -> BlockGeometry {
        self.geometry
    }

    pub fn dim(&self) -> usize {
        self.geometry.dim()
    }

    /// Blocks per row of the source image.
    pub fn blocks_x(&self) -> usize {
        self.blocks_x
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        let k = self.dim();
        &self.data[i * k..(i + 1) * k]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dim())
    }

    pub(crate) fn as_flat(&self) -> &[f64] {
        &self.data
    }
}

/// An ordered set of `len()` codewords of dimension `geometry.dim()`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CodebookRepr", into = "CodebookRepr")]
pub struct Codebook {
    geometry: BlockGeometry,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CodebookRepr {
    geometry: BlockGeometry,
    codewords: Vec<Vec<f64>>,
}

impl TryFrom<CodebookRepr> for Codebook {
    type Error = Error;

    fn try_from(repr: CodebookRepr) -> Result<Self> {
        Codebook::new(repr.geometry, repr.codewords)
    }
}

impl From<Codebook> for CodebookRepr {
    fn from(cb: Codebook) -> Self {
        CodebookRepr {
            geometry: cb.geometry,
            codewords: cb.iter().map(<[f64]>::to_vec).collect(),
        }
    }
}

impl Codebook {
    pub fn new(geometry: BlockGeometry, codewords: Vec<Vec<f64>>) -> Result<Self> {
        let k = geometry.dim();
        let mut data = Vec::with_capacity(codewords.len() * k);
        for (i, c) in codewords.iter().enumerate() {
            if c.len() != k {
                return Err(Error::Dimension(format!(
                    "codeword {i} has length {}, expected {k}",
                    c.len()
                )));
            }
            data.extend_from_slice(c);
        }
        Self::from_flat(geometry, data)
    }

    /// Builds a codebook from codewords laid out back to back.
    pub fn from_flat(geometry: BlockGeometry, data: Vec<f64>) -> Result<Self> {
        let k = geometry.dim();
        if data.is_empty() || !data.len().is_multiple_of(k) {
            return Err(Error::Dimension(format!(
                "codebook data of length {} is not a positive multiple of {k}",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|c| !(0.0..=255.0).contains(*c)) {
            return Err(Error::Dimension(format!(
                "codeword component {bad} outside [0, 255]"
            )));
        }
        Ok(Self { geometry, data })
    }

    pub fn geometry(&self) -> BlockGeometry {
        self.geometry
    }

    pub fn dim(&self) -> usize {
        self.geometry.dim()
    }

    /// Number of codewords.
    pub fn len(&self) -> usize {
        self.data.len() / self.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn codeword(&self, i: usize) -> &[f64] {
        let k = self.dim();
        &self.data[i * k..(i + 1) * k]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dim())
    }

    /// Copy with every component rounded to the nearest gray level.
    pub fn rounded(&self) -> Codebook {
        Codebook {
            geometry: self.geometry,
            data: self.data.iter().map(|&c| f64::from(to_sample(c))).collect(),
        }
    }

    /// Components as 8-bit gray levels, codeword-major.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.data.iter().map(|&c| to_sample(c)).collect()
    }

    pub(crate) fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn as_flat_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

/// Rounds half away from zero and clamps to `[0, 255]`.
#[inline]
pub fn to_sample(value: f64) -> u8 {
    value.round().clamp(0.0, 255.0) as u8
}

/// Splits an image into non-overlapping blocks, each flattened row-major.
pub fn tile_image(image: &GrayImage, geometry: BlockGeometry) -> Result<TrainingSet> {
    let (blocks_x, blocks_y) = geometry.grid(image.width(), image.height())?;
    let (bw, bh) = (geometry.block_w, geometry.block_h);
    let mut data = Vec::with_capacity(image.samples().len());
    for by in 0..blocks_y {
        for bx in 0..blocks_x {
            for y in by * bh..(by + 1) * bh {
                let row = &image.row(y)[bx * bw..(bx + 1) * bw];
                data.extend(row.iter().map(|&s| f64::from(s)));
            }
        }
    }
    Ok(TrainingSet {
        geometry,
        blocks_x,
        data,
    })
}

/// Reassembles block vectors (row-major over the block grid) into an image.
pub fn untile<'a, I>(
    vectors: I,
    geometry: BlockGeometry,
    image_w: usize,
    image_h: usize,
) -> Result<GrayImage>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let (blocks_x, blocks_y) = geometry.grid(image_w, image_h)?;
    let vectors: Vec<&[f64]> = vectors.into_iter().collect();
    let expected = blocks_x * blocks_y;
    if vectors.len() != expected {
        return Err(Error::Reassembly {
            expected,
            found: vectors.len(),
        });
    }
    let k = geometry.dim();
    if let Some(v) = vectors.iter().find(|v| v.len() != k) {
        return Err(Error::Dimension(format!(
            "vector of length {}, expected {k}",
            v.len()
        )));
    }
    let (bw, bh) = (geometry.block_w, geometry.block_h);
    let mut samples = vec![0u8; image_w * image_h];
    for (b, v) in vectors.iter().enumerate() {
        let (bx, by) = (b % blocks_x, b / blocks_x);
        for dy in 0..bh {
            let start = (by * bh + dy) * image_w + bx * bw;
            for (dst, &c) in samples[start..start + bw]
                .iter_mut()
                .zip(&v[dy * bw..(dy + 1) * bw])
            {
                *dst = to_sample(c);
            }
        }
    }
    GrayImage::new(image_w, image_h, samples)
}

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Unchecked nearest search over a flat codeword buffer; lowest index wins ties.
#[inline]
pub(crate) fn nearest_in(v: &[f64], codewords: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in codewords.chunks_exact(v.len()).enumerate() {
        let d = squared_distance(v, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// Index and squared Euclidean distance of the closest codeword. Ties go to the lowest index.
pub fn nearest_codeword(v: &[f64], codebook: &Codebook) -> Result<(usize, f64)> {
    if v.len() != codebook.dim() {
        return Err(Error::Dimension(format!(
            "vector of length {} against codebook of dimension {}",
            v.len(),
            codebook.dim()
        )));
    }
    Ok(nearest_in(v, codebook.as_flat()))
}
