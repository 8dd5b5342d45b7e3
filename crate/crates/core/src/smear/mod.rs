//! Stochastic downsampling over patch covers, and the smeared descent loop
//! built on it.
//!
//! A source grid is tiled by adjacent `k x k` patches (truncated at the right
//! and bottom edges). A [`Weighting`] assigns each patch a probability vector
//! over its pixels; the downsampled field takes, per patch, the weighted
//! average of the pixel values. The map is linear in the field, so its
//! gradient is the transpose applied by
//! [`compose_downsample_gradient`](crate::backprop::compose_downsample_gradient).

mod adam;
mod clarke;
mod descent;

pub use adam::{AdamParams, AdamState};
pub use clarke::{gram_matrix, min_norm_weights, sample_topological_gradients, MinNorm};
pub use descent::{
    loss_log_csv, run, stump_gradient, DataTerm, Mode, Optimizer, RunOutput, StepLosses,
    StepRecord, StumpConfig, LOSS_LOG_HEADER,
};

use rand::Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::field::ScalarField;

/// How each patch's weight vector is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    /// Plain average over the patch.
    Center,
    /// One pixel of the patch, chosen uniformly.
    VertexUniform,
    /// Uniform on the probability simplex of the patch (Dirichlet(1, ..., 1)).
    SimplexUniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DownsampleSpec {
    pub patch: usize,
    pub measure: Measure,
}

impl DownsampleSpec {
    pub fn new(patch: usize, measure: Measure) -> Result<Self> {
        if patch == 0 {
            return Err(Error::InvalidParameter("patch size must be >= 1".into()));
        }
        Ok(Self { patch, measure })
    }

    pub fn identity() -> Self {
        Self {
            patch: 1,
            measure: Measure::Center,
        }
    }
}

pub fn coarse_shape(rows: usize, cols: usize, k: usize) -> (usize, usize) {
    (rows.div_ceil(k), cols.div_ceil(k))
}

/// Per-patch probability vectors, stored as one weight per source pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct Weighting {
    rows: usize,
    cols: usize,
    patch: usize,
    weights: Vec<f64>,
}

impl Weighting {
    pub fn center(rows: usize, cols: usize, patch: usize) -> Self {
        let mut weights = vec![0.0; rows * cols];
        for (r, c, len) in patch_cells(rows, cols, patch) {
            let h = (r + patch).min(rows) - r;
            let w = (c + patch).min(cols) - c;
            debug_assert_eq!(h * w, len);
            for i in r..r + h {
                for j in c..c + w {
                    weights[i * cols + j] = 1.0 / len as f64;
                }
            }
        }
        Self {
            rows,
            cols,
            patch,
            weights,
        }
    }

    /// Wraps explicit per-pixel weights; every patch must be a probability vector.
    pub fn from_weights(rows: usize, cols: usize, patch: usize, weights: Vec<f64>) -> Result<Self> {
        if patch == 0 || weights.len() != rows * cols {
            return Err(Error::InvalidParameter("weights do not cover the grid".into()));
        }
        let w = Self {
            rows,
            cols,
            patch,
            weights,
        };
        for (i, sum) in w.patch_sums().into_iter().enumerate() {
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!("patch {i} sums to {sum}")));
            }
        }
        if w.weights.iter().any(|&x| !(x >= 0.0)) {
            return Err(Error::InvalidParameter("negative weight".into()));
        }
        Ok(w)
    }

    pub fn source_shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn coarse_shape(&self) -> (usize, usize) {
        coarse_shape(self.rows, self.cols, self.patch)
    }

    pub fn patch(&self) -> usize {
        self.patch
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Sum of weights per coarse cell, row-major.
    pub fn patch_sums(&self) -> Vec<f64> {
        let (cr, cc) = self.coarse_shape();
        let mut sums = vec![0.0; cr * cc];
        for r in 0..self.rows {
            for c in 0..self.cols {
                sums[(r / self.patch) * cc + c / self.patch] += self.weights[r * self.cols + c];
            }
        }
        sums
    }
}

/// Top-left corner and pixel count of every patch, row-major.
fn patch_cells(rows: usize, cols: usize, k: usize) -> impl Iterator<Item = (usize, usize, usize)> {
    (0..rows).step_by(k).flat_map(move |r| {
        (0..cols).step_by(k).map(move |c| {
            let h = (r + k).min(rows) - r;
            let w = (c + k).min(cols) - c;
            (r, c, h * w)
        })
    })
}

pub fn sample_weighting<R: Rng + ?Sized>(
    spec: &DownsampleSpec,
    shape: (usize, usize),
    rng: &mut R,
) -> Weighting {
    let (rows, cols) = shape;
    let k = spec.patch;
    if spec.measure == Measure::Center {
        return Weighting::center(rows, cols, k);
    }
    let mut weights = vec![0.0; rows * cols];
    let mut draws = Vec::with_capacity(k * k);
    for (r, c, len) in patch_cells(rows, cols, k) {
        let w = (c + k).min(cols) - c;
        let idx = |t: usize| (r + t / w) * cols + c + t % w;
        match spec.measure {
            Measure::VertexUniform => {
                weights[idx(rng.gen_range(0..len))] = 1.0;
            }
            Measure::SimplexUniform => {
                draws.clear();
                draws.extend((0..len).map(|_| rng.sample::<f64, _>(Exp1)));
                let total: f64 = draws.iter().sum();
                for (t, x) in draws.iter().enumerate() {
                    weights[idx(t)] = x / total;
                }
            }
            Measure::Center => unreachable!(),
        }
    }
    Weighting {
        rows,
        cols,
        patch: k,
        weights,
    }
}

/// Coarse field whose cell `i` holds the `w_i`-weighted average of patch `i`.
pub fn downsample(field: &ScalarField, w: &Weighting) -> Result<ScalarField> {
    if field.shape() != w.source_shape() {
        return Err(Error::ShapeMismatch {
            expected: w.source_shape(),
            got: field.shape(),
        });
    }
    if w.patch == 1 {
        let values = field
            .values()
            .iter()
            .zip(&w.weights)
            .map(|(v, x)| v * x)
            .collect();
        return ScalarField::new(w.rows, w.cols, values);
    }
    let (cr, cc) = w.coarse_shape();
    let mut out = vec![0.0; cr * cc];
    let vals = field.values();
    for r in 0..w.rows {
        let base = (r / w.patch) * cc;
        for c in 0..w.cols {
            let i = r * w.cols + c;
            out[base + c / w.patch] += w.weights[i] * vals[i];
        }
    }
    ScalarField::new(cr, cc, out)
}
