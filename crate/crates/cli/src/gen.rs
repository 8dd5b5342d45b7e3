//! Synthetic test images. All outputs lie in [0, 255].

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use topo_smear::ScalarField;

use crate::CliError;

fn check_dims(rows: usize, cols: usize) -> Result<(), CliError> {
    if rows < 2 || cols < 2 {
        return Err(CliError::Generator(format!("grid {rows}x{cols} is too small")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WellParams {
    /// Well centers as (row, col) fractions of the grid.
    pub centers: [(f64, f64); 2],
    /// Width as a fraction of min(rows, cols).
    pub sigma_frac: f64,
    pub depth: f64,
}

impl Default for WellParams {
    fn default() -> Self {
        Self {
            centers: [(0.5, 0.35), (0.5, 0.65)],
            sigma_frac: 0.18,
            depth: 200.0,
        }
    }
}

/// `255 - depth * (g1 + g2)` with `g = exp(-r^2 / sigma^2)`, clamped to [0, 255].
pub fn gen_double_well(rows: usize, cols: usize, params: &WellParams) -> Result<ScalarField, CliError> {
    check_dims(rows, cols)?;
    if !(params.sigma_frac > 0.0) || !(params.depth >= 0.0) {
        return Err(CliError::Generator("well sigma must be positive and depth nonnegative".into()));
    }
    let sigma = params.sigma_frac * rows.min(cols) as f64;
    let centers = params
        .centers
        .map(|(fr, fc)| (fr * (rows - 1) as f64, fc * (cols - 1) as f64));
    Ok(ScalarField::from_fn(rows, cols, |r, c| {
        let d: f64 = centers
            .iter()
            .map(|&(cr, cc)| {
                let r2 = (r as f64 - cr).powi(2) + (c as f64 - cc).powi(2);
                (-r2 / (sigma * sigma)).exp()
            })
            .sum();
        (255.0 - params.depth * d).clamp(0.0, 255.0)
    }))
}

/// Sum of Gaussians centered at `n_points` random points on a centered circle
/// of radius `0.3 * min(rows, cols)`, min-max rescaled to [0, 255]. Point `k`
/// is uniform on the `k`-th of `n_points` equal arcs.
/// `sigma` is in pixels; `None` means `0.04 * min(rows, cols)`.
pub fn gen_circle(
    rows: usize,
    cols: usize,
    n_points: usize,
    sigma: Option<f64>,
    seed: u64,
) -> Result<ScalarField, CliError> {
    check_dims(rows, cols)?;
    if n_points < 3 {
        return Err(CliError::Generator(format!("circle needs at least 3 points, got {n_points}")));
    }
    let m = rows.min(cols) as f64;
    let sigma = sigma.unwrap_or(0.04 * m);
    if !(sigma > 0.0) {
        return Err(CliError::Generator(format!("sigma = {sigma}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (cr, cc) = ((rows - 1) as f64 / 2.0, (cols - 1) as f64 / 2.0);
    let radius = 0.3 * m;
    let arc = 2.0 * PI / n_points as f64;
    let pts: Vec<(f64, f64)> = (0..n_points)
        .map(|k| {
            let t = (k as f64 + rng.gen::<f64>()) * arc;
            (cr + radius * t.sin(), cc + radius * t.cos())
        })
        .collect();
    let raw = ScalarField::from_fn(rows, cols, |r, c| {
        pts.iter()
            .map(|&(pr, pc)| {
                let r2 = (r as f64 - pr).powi(2) + (c as f64 - pc).powi(2);
                (-r2 / (2.0 * sigma * sigma)).exp()
            })
            .sum()
    });
    Ok(rescale(&raw))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlobParams {
    pub n_blobs: usize,
    /// Bridge height as a fraction of the blob peak.
    pub bridge_frac: f64,
    /// Blob radius as a fraction of min(rows, cols).
    pub radius_frac: f64,
    /// Bridge half-width as a fraction of min(rows, cols).
    pub bridge_width_frac: f64,
}

impl Default for BlobParams {
    fn default() -> Self {
        Self {
            n_blobs: 3,
            bridge_frac: 0.5,
            radius_frac: 0.15,
            bridge_width_frac: 0.08,
        }
    }
}

/// Irregular Gaussian bumps of height 255 joined, center to consecutive
/// center, by straight flat bridges of height `bridge_frac * 255`. The two
/// are combined by pointwise max over a zero background.
pub fn gen_blobs(rows: usize, cols: usize, params: &BlobParams, seed: u64) -> Result<ScalarField, CliError> {
    check_dims(rows, cols)?;
    let n = params.n_blobs;
    if n < 2 {
        return Err(CliError::Generator(format!("blobs needs at least 2 blobs, got {n}")));
    }
    if !(0.0..=1.0).contains(&params.bridge_frac) {
        return Err(CliError::Generator(format!("bridge_frac = {}", params.bridge_frac)));
    }
    let m = rows.min(cols) as f64;
    let radius = params.radius_frac * m;
    let half_width = params.bridge_width_frac * m;
    if !(radius > 0.0) || !(half_width > 0.0) {
        return Err(CliError::Generator("blob radius and bridge width must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let margin = 1.3 * radius;
    let (hi_r, hi_c) = ((rows - 1) as f64 - margin, (cols - 1) as f64 - margin);
    if hi_r <= margin || hi_c <= margin {
        return Err(CliError::Generator("grid too small for the blob radius".into()));
    }

    // rejection sampling with a minimum separation, relaxed if the grid is crowded
    let mut centers: Vec<(f64, f64)> = Vec::with_capacity(n);
    let mut min_sep = 3.0 * radius;
    let mut tries = 0;
    while centers.len() < n {
        let p = (rng.gen_range(margin..hi_r), rng.gen_range(margin..hi_c));
        if centers.iter().all(|q| dist(p, *q) >= min_sep) {
            centers.push(p);
        }
        tries += 1;
        if tries % 1000 == 0 {
            min_sep *= 0.9;
        }
    }
    // each blob gets a wobbly outline
    let shapes: Vec<(f64, f64, f64)> = (0..n)
        .map(|_| {
            (
                rng.gen_range(2..=3) as f64,
                rng.gen_range(0.0..2.0 * PI),
                rng.gen_range(0.1..0.25),
            )
        })
        .collect();

    let peak = 255.0;
    let bridge = params.bridge_frac * peak;
    Ok(ScalarField::from_fn(rows, cols, |r, c| {
        let p = (r as f64, c as f64);
        let mut v: f64 = 0.0;
        for (&q, &(lobes, phase, amp)) in centers.iter().zip(&shapes) {
            let theta = (p.0 - q.0).atan2(p.1 - q.1);
            let rr = radius * (1.0 + amp * (lobes * theta + phase).sin());
            v = v.max(peak * (-(dist(p, q) / rr).powi(2)).exp());
        }
        // bridges are exactly flat, so their level sets are wide plateaus
        if centers
            .windows(2)
            .any(|w| segment_distance(p, w[0], w[1]) <= half_width)
        {
            v = v.max(bridge);
        }
        v
    }))
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    dist(p, (a.0 + t * dx, a.1 + t * dy))
}

fn rescale(f: &ScalarField) -> ScalarField {
    let (lo, hi) = (f.min(), f.max());
    if hi > lo {
        f.map(|x| 255.0 * ((x - lo) / (hi - lo)))
    } else {
        ScalarField::zeros(f.rows(), f.cols())
    }
}
