//! Reduced-resolution image pyramids built by 2x2 box filtering and 2x subsampling.

use crate::error::{Error, Result};
use crate::imageio::GrayImage;

/// Successively halved copies of an image; `levels()[0]` is the original.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pyramid {
    levels: Vec<GrayImage>,
}

impl Pyramid {
    pub fn levels(&self) -> &[GrayImage] {
        &self.levels
    }

    pub fn level(&self, index: usize) -> Option<&GrayImage> {
        self.levels.get(index)
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// The coarsest level.
    pub fn top(&self) -> &GrayImage {
        self.levels
            .last()
            .expect("pyramid always holds the original image")
    }

    pub fn into_levels(self) -> Vec<GrayImage> {
        self.levels
    }
}

fn can_halve(width: usize, height: usize) -> bool {
    width >= 2 && height >= 2 && width.is_multiple_of(2) && height.is_multiple_of(2)
}

/// Halves both dimensions. Each output pixel is the rounded mean of its disjoint 2x2 source block.
pub fn reduce_once(image: &GrayImage) -> Result<GrayImage> {
    let (w, h) = (image.width(), image.height());
    if !can_halve(w, h) {
        return Err(Error::Dimension(format!(
            "cannot halve a {w}x{h} image: both dimensions must be even and at least 2"
        )));
    }
    let (ow, oh) = (w / 2, h / 2);
    let mut out = Vec::with_capacity(ow * oh);
    for y in 0..oh {
        let top = image.row(2 * y);
        let bottom = image.row(2 * y + 1);
        for x in 0..ow {
            let sum = u32::from(top[2 * x])
                + u32::from(top[2 * x + 1])
                + u32::from(bottom[2 * x])
                + u32::from(bottom[2 * x + 1]);
            // sum is non-negative, so +2 then floor-divide is round-half-away-from-zero; max 255.
            out.push(((sum + 2) / 4) as u8);
        }
    }
    GrayImage::new(ow, oh, out)
}

/// Builds levels by repeated [`reduce_once`] until a dimension can no longer be halved.
///
/// `max_levels` caps the total number of levels, original included; `Some(0)` is treated as 1.
pub fn build_pyramid(image: &GrayImage, max_levels: Option<usize>) -> Pyramid {
    let cap = max_levels.unwrap_or(usize::MAX).max(1);
    let mut levels = vec![image.clone()];
    while levels.len() < cap {
        let last = levels.last().unwrap();
        if !can_halve(last.width(), last.height()) {
            break;
        }
        let next = reduce_once(last).expect("dimensions checked");
        levels.push(next);
    }
    Pyramid { levels }
}

/// Dimensions of every level [`build_pyramid`] would produce for a `width` x `height` image.
pub fn level_dims(width: usize, height: usize) -> Vec<(usize, usize)> {
    let mut dims = vec![(width, height)];
    let (mut w, mut h) = (width, height);
    while can_halve(w, h) {
        w /= 2;
        h /= 2;
        dims.push((w, h));
    }
    dims
}

/// Number of `block_w` x `block_h` tiles in a `width` x `height` image, if it tiles exactly.
pub fn exact_block_count(
    width: usize,
    height: usize,
    block_w: usize,
    block_h: usize,
) -> Option<usize> {
    if block_w == 0
        || block_h == 0
        || !width.is_multiple_of(block_w)
        || !height.is_multiple_of(block_h)
    {
        return None;
    }
    Some((width / block_w) * (height / block_h))
}

/// Finds the pyramid level whose tiling yields exactly `codebook_size` blocks.
///
/// Block counts shrink fourfold per level, so at most one level can match.
pub fn select_seed_level(
    image_w: usize,
    image_h: usize,
    block_w: usize,
    block_h: usize,
    codebook_size: usize,
) -> Result<usize> {
    if image_w == 0 || image_h == 0 || block_w == 0 || block_h == 0 || codebook_size == 0 {
        return Err(Error::Config(format!(
            "seed level arguments must be positive: image {image_w}x{image_h}, \
             block {block_w}x{block_h}, codebook size {codebook_size}"
        )));
    }
    level_dims(image_w, image_h)
        .into_iter()
        .enumerate()
        .rev()
        .find(|&(_, (w, h))| exact_block_count(w, h, block_w, block_h) == Some(codebook_size))
        .map(|(level, _)| level)
        .ok_or(Error::NoExactLevel {
            image_w,
            image_h,
            block_w,
            block_h,
            codebook_size,
        })
}
