//! Gradient-sampling diagnostics: Gram matrices of sampled gradients and the
//! minimum-norm point of their convex hull.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{downsample, sample_weighting, DownsampleSpec};
use crate::backprop::{compose_downsample_gradient, pullback_gradient};
use crate::error::{Error, Result};
use crate::field::{add_uniform_noise, ScalarField};
use crate::functional::{diagram_gradient, FunctionalSpec};
use crate::persistence::diagram_of;

const MAX_ITERS: usize = 100_000;
const TOL: f64 = 1e-10;

/// Pairwise inner products `<g_i, g_j>`.
pub fn gram_matrix(grads: &[ScalarField]) -> Result<Vec<Vec<f64>>> {
    if let Some(first) = grads.first() {
        for g in grads {
            first.check_same_shape(g)?;
        }
    }
    let m = grads.len();
    let mut gram = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in i..m {
            let v = grads[i].dot(&grads[j]);
            gram[i][j] = v;
            gram[j][i] = v;
        }
    }
    Ok(gram)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinNorm {
    /// Convex weights `c` minimizing `|sum c_i g_i|^2`.
    pub weights: Vec<f64>,
    pub objective: f64,
    /// Set when every gradient is zero and the uniform weights were returned.
    pub degenerate: bool,
}

fn quad(gram: &[Vec<f64>], c: &[f64]) -> f64 {
    gram.iter()
        .zip(c)
        .map(|(row, ci)| ci * row.iter().zip(c).map(|(g, cj)| g * cj).sum::<f64>())
        .sum()
}

/// Euclidean projection onto the probability simplex.
fn project_simplex(y: &[f64]) -> Vec<f64> {
    let mut u = y.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &x) in u.iter().enumerate() {
        cum += x;
        let t = (cum - 1.0) / (k + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    y.iter().map(|&x| (x - theta).max(0.0)).collect()
}

pub fn min_norm_weights(grads: &[ScalarField]) -> Result<MinNorm> {
    if grads.is_empty() {
        return Err(Error::InvalidParameter("need at least one gradient".into()));
    }
    let gram = gram_matrix(grads)?;
    let m = grads.len();
    let uniform = vec![1.0 / m as f64; m];
    let diag: Vec<f64> = (0..m).map(|i| gram[i][i]).collect();
    if diag.iter().all(|&d| d == 0.0) {
        return Ok(MinNorm {
            weights: uniform,
            objective: 0.0,
            degenerate: true,
        });
    }
    let orthogonal = (0..m).all(|i| (0..m).all(|j| i == j || gram[i][j] == 0.0));
    if orthogonal {
        let zeros = diag.iter().filter(|&&d| d == 0.0).count();
        let weights: Vec<f64> = if zeros > 0 {
            diag.iter()
                .map(|&d| if d == 0.0 { 1.0 / zeros as f64 } else { 0.0 })
                .collect()
        } else {
            let total: f64 = diag.iter().map(|d| 1.0 / d).sum();
            diag.iter().map(|d| (1.0 / d) / total).collect()
        };
        let objective = quad(&gram, &weights);
        return Ok(MinNorm {
            weights,
            objective,
            degenerate: false,
        });
    }

    // accelerated projected gradient with restarts
    let scale = diag.iter().copied().fold(0.0, f64::max);
    let lipschitz = 2.0
        * gram
            .iter()
            .map(|row| row.iter().map(|g| g.abs()).sum::<f64>())
            .fold(0.0, f64::max);
    let step = 1.0 / lipschitz;
    let grad_at = |c: &[f64]| -> Vec<f64> {
        gram.iter()
            .map(|row| 2.0 * row.iter().zip(c).map(|(g, x)| g * x).sum::<f64>())
            .collect()
    };
    let mut c = uniform.clone();
    let mut y = c.clone();
    let mut t = 1.0f64;
    let mut obj = quad(&gram, &c);
    for _ in 0..MAX_ITERS {
        let g = grad_at(&y);
        let next = project_simplex(
            &y.iter().zip(&g).map(|(a, b)| a - step * b).collect::<Vec<_>>(),
        );
        let next_obj = quad(&gram, &next);
        if next_obj > obj {
            // restart momentum
            y = c.clone();
            t = 1.0;
            continue;
        }
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let beta = (t - 1.0) / t_next;
        y = next
            .iter()
            .zip(&c)
            .map(|(a, b)| a + beta * (a - b))
            .collect();
        c = next;
        obj = next_obj;
        t = t_next;
        // Frank-Wolfe gap bounds the distance to the optimal objective
        let gc = grad_at(&c);
        let lin: f64 = gc.iter().zip(&c).map(|(a, b)| a * b).sum();
        let gap = lin - gc.iter().copied().fold(f64::INFINITY, f64::min);
        if gap <= TOL * scale {
            break;
        }
    }
    Ok(MinNorm {
        weights: c,
        objective: obj,
        degenerate: false,
    })
}

/// Topological gradients of `m` independently perturbed and downsampled
/// copies of `field`, each pulled back to the source grid. Sample `i` draws
/// from its own stream of `seed`, so results do not depend on thread count.
pub fn sample_topological_gradients(
    field: &ScalarField,
    spec: &FunctionalSpec,
    down: &DownsampleSpec,
    eps: f64,
    m: usize,
    seed: u64,
) -> Result<Vec<ScalarField>> {
    (0..m)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let noisy = add_uniform_noise(field, eps, &mut rng)?;
            let w = sample_weighting(down, field.shape(), &mut rng);
            let coarse = downsample(&noisy, &w)?;
            let dgrad = diagram_gradient(&diagram_of(&coarse), spec);
            compose_downsample_gradient(&pullback_gradient(&dgrad, coarse.shape())?, &w)
        })
        .collect()
}
