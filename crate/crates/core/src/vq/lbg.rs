//! The LBG (generalized Lloyd) iteration.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{nearest_in, Codebook, TrainingSet};
use crate::error::{Error, Result};

pub const DEFAULT_EPSILON: f64 = 0.001;
pub const DEFAULT_MAX_ITERS: usize = 100;

/// Below this many vectors the assignment pass stays on the calling thread.
const PAR_MIN_VECTORS: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LbgParams {
    /// Stop once the relative distortion drop `(D[m-1] - D[m]) / D[m]` is at most this.
    pub epsilon: f64,
    /// Upper bound on assignment passes.
    pub max_iters: usize,
}

impl Default for LbgParams {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            max_iters: DEFAULT_MAX_ITERS,
        }
    }
}

impl LbgParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!(
                "epsilon must be positive and finite, got {}",
                self.epsilon
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    /// Assignment passes performed, the first one against the initial codebook.
    pub iterations: usize,
    /// Mean squared distortion per training vector, one entry per pass.
    pub distortion_trace: Vec<f64>,
    pub converged: bool,
    pub epsilon: f64,
    pub empty_cell_repairs: usize,
}

impl TrainingReport {
    /// Distortion of the returned codebook over the training set.
    pub fn final_distortion(&self) -> f64 {
        *self.distortion_trace.last().expect("at least one pass")
    }
}

/// Nearest codeword for every training vector, in training-set order.
pub(crate) fn assign_all(ts: &TrainingSet, codewords: &[f64]) -> Vec<(usize, f64)> {
    let k = ts.dim();
    let flat = ts.as_flat();
    if ts.len() < PAR_MIN_VECTORS {
        flat.chunks_exact(k)
            .map(|v| nearest_in(v, codewords))
            .collect()
    } else {
        flat.par_chunks_exact(k)
            .with_min_len(64)
            .map(|v| nearest_in(v, codewords))
            .collect()
    }
}

/// Refines `initial` with nearest-neighbour / centroid passes until the relative distortion
/// drop falls to `params.epsilon`, the partition stops changing, distortion hits zero, or
/// `params.max_iters` passes have run.
///
/// The returned codebook is the one evaluated by the final pass, so its distortion is the
/// last entry of the trace. Output is identical regardless of thread count: assignments are
/// independent per vector and centroid sums accumulate sequentially.
pub fn lbg_train(
    ts: &TrainingSet,
    initial: &Codebook,
    params: &LbgParams,
) -> Result<(Codebook, TrainingReport)> {
    params.validate()?;
    if ts.is_empty() {
        return Err(Error::InsufficientData("empty training set".into()));
    }
    if ts.dim() != initial.dim() {
        return Err(Error::Dimension(format!(
            "training vectors have dimension {}, codebook has {}",
            ts.dim(),
            initial.dim()
        )));
    }

    let n = ts.len() as f64;
    let mut codebook = initial.clone();
    let mut trace = Vec::new();
    let mut repairs = 0;
    let mut converged = false;
    let mut previous: Option<Vec<usize>> = None;

    for pass in 1..=params.max_iters {
        let nearest = assign_all(ts, codebook.as_flat());
        let distortion = nearest.iter().map(|&(_, d)| d).sum::<f64>() / n;
        let last = trace.last().copied();
        trace.push(distortion);

        if distortion == 0.0 {
            converged = true;
            break;
        }
        if let Some(prev) = last {
            if (prev - distortion) / distortion <= params.epsilon {
                converged = true;
                break;
            }
        }
        let (mut cells, mut dists): (Vec<usize>, Vec<f64>) = nearest.into_iter().unzip();
        // Same partition as the codebook was built from: the update would be a no-op.
        if previous.as_deref() == Some(cells.as_slice()) {
            converged = true;
            break;
        }
        if pass == params.max_iters {
            break;
        }
        repairs += repair_empty_cells(&mut cells, &mut dists, codebook.len());
        update_centroids(ts, &cells, &mut codebook);
        previous = Some(cells);
    }

    let report = TrainingReport {
        iterations: trace.len(),
        distortion_trace: trace,
        converged,
        epsilon: params.epsilon,
        empty_cell_repairs: repairs,
    };
    Ok((codebook, report))
}

/// Hands each empty cell the vector farthest from its codeword, taken from a cell that keeps
/// at least one member. Farthest ties go to the lowest vector index. Returns the repair count.
fn repair_empty_cells(cells: &mut [usize], dists: &mut [f64], size: usize) -> usize {
    let mut counts = vec![0usize; size];
    for &c in cells.iter() {
        counts[c] += 1;
    }
    let mut repaired = 0;
    for empty in 0..size {
        if counts[empty] != 0 {
            continue;
        }
        let mut donor: Option<(usize, f64)> = None;
        for (i, (&c, &d)) in cells.iter().zip(dists.iter()).enumerate() {
            if counts[c] > 1 && d > 0.0 && donor.is_none_or(|(_, best)| d > best) {
                donor = Some((i, d));
            }
        }
        // Every remaining vector already sits on its codeword or alone in its cell.
        let Some((i, _)) = donor else { break };
        counts[cells[i]] -= 1;
        counts[empty] = 1;
        cells[i] = empty;
        dists[i] = 0.0;
        repaired += 1;
    }
    repaired
}

/// Moves every non-empty cell's codeword to the mean of its members. Empty cells keep theirs.
fn update_centroids(ts: &TrainingSet, cells: &[usize], codebook: &mut Codebook) {
    let k = ts.dim();
    let size = codebook.len();
    let mut sums = vec![0.0f64; size * k];
    let mut counts = vec![0usize; size];
    for (v, &c) in ts.iter().zip(cells) {
        counts[c] += 1;
        for (s, &x) in sums[c * k..(c + 1) * k].iter_mut().zip(v) {
            *s += x;
        }
    }
    let words = codebook.as_flat_mut();
    for (c, &count) in counts.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let inv = count as f64;
        for (w, &s) in words[c * k..(c + 1) * k]
            .iter_mut()
            .zip(&sums[c * k..(c + 1) * k])
        {
            *w = (s / inv).clamp(0.0, 255.0);
        }
    }
}
