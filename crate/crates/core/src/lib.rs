//! Vector-quantization codec for 8-bit grayscale images.
//!
//! Codebooks are trained with the LBG iteration from one of two starting points: a random
//! draw of training blocks, or every block of a reduced-resolution pyramid level whose
//! block count equals the codebook size. Encoded images are a self-contained file holding
//! the 8-bit codebook and a fixed-width index table.

pub mod codec;
pub mod error;
pub mod experiment;
pub mod imageio;
pub mod metrics;
pub mod pyramid;
pub mod vq;

pub use codec::{
    compression_ratio, decode, deserialize, encode, serialize, CompressedImage, IndexTable,
};
pub use error::{Error, Result};
pub use imageio::{load_pgm, save_pgm, synth_image, GrayImage, SynthKind};
pub use metrics::{mse, psnr, QualityReport};
pub use pyramid::{build_pyramid, reduce_once, select_seed_level, Pyramid};
pub use vq::{
    init_pyramid, init_random, lbg_train, nearest_codeword, tile_image, untile, BlockGeometry,
    Codebook, LbgParams, TrainingReport, TrainingSet,
};
