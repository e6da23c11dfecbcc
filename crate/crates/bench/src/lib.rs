//! Fixtures shared by the criterion benchmarks.

use pvq_core::vq::to_sample;
use pvq_core::GrayImage;

/// Deterministic smooth test scene with texture, `side` x `side`.
pub fn scene(side: usize) -> GrayImage {
    let samples = (0..side * side)
        .map(|i| {
            let (x, y) = ((i % side) as f64, (i / side) as f64);
            let v = 128.0 + 70.0 * (x / 11.0).sin() * (y / 17.0).cos() + 0.1 * ((x * y) % 97.0);
            to_sample(v)
        })
        .collect();
    GrayImage::new(side, side, samples).expect("square scene")
}
