use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{tile_image, BlockGeometry, Codebook, TrainingSet};
use crate::error::{Error, Result};
use crate::imageio::GrayImage;
use crate::pyramid::{build_pyramid, select_seed_level};

/// Picks `size` distinct training vectors uniformly at random (conventional LBG seeding).
///
/// Distinct indices, not distinct values: an image with repeated blocks can yield
/// duplicate codewords, which training later repairs as empty cells.
pub fn init_random(ts: &TrainingSet, size: usize, seed: u64) -> Result<Codebook> {
    if size == 0 {
        return Err(Error::Config("codebook size must be positive".into()));
    }
    if ts.len() < size {
        return Err(Error::InsufficientData(format!(
            "{} training vectors cannot seed a codebook of {size}",
            ts.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = rand::seq::index::sample(&mut rng, ts.len(), size);
    let mut data = Vec::with_capacity(size * ts.dim());
    for i in picks.iter() {
        data.extend_from_slice(ts.vector(i));
    }
    Codebook::from_flat(ts.geometry(), data)
}

/// Seeds a codebook with every block of the pyramid level whose block count equals `size`.
pub fn init_pyramid(image: &GrayImage, geometry: BlockGeometry, size: usize) -> Result<Codebook> {
    let level = select_seed_level(
        image.width(),
        image.height(),
        geometry.block_w(),
        geometry.block_h(),
        size,
    )?;
    let pyramid = build_pyramid(image, Some(level + 1));
    debug_assert_eq!(pyramid.len(), level + 1);
    let seed_set = tile_image(pyramid.top(), geometry)?;
    debug_assert_eq!(seed_set.len(), size);
    Codebook::from_flat(geometry, seed_set.as_flat().to_vec())
}
