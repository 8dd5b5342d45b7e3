//! Sliced-Wasserstein matchings between diagrams, gradient transfer along
//! them, and critical smears: sample-averaged pullbacks of a transferred
//! gradient that localize a dot's critical pixels as a heat distribution.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::backprop::{compose_downsample_gradient, pullback_gradient};
use crate::error::{Error, Result};
use crate::field::{add_uniform_noise, to_byte, ScalarField};
use crate::functional::{
    diagram_gradient, DiagramGradient, DotGradient, FunctionalSpec, SelectedDot,
};
use crate::persistence::{diagram_of, PersistenceDiagram};
use crate::smear::{downsample, sample_weighting, DownsampleSpec};

/// Slice-aggregated partial matching between two diagrams.
///
/// Indices refer to `diagram.dots`. Each slice contributes `1 / n_proj` to
/// exactly one target (a real dot or the diagonal) per source dot.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagramMatching {
    n_proj: usize,
    src_len: usize,
    dst_len: usize,
    pairs: BTreeMap<(usize, usize), u32>,
    src_to_diagonal: BTreeMap<usize, u32>,
    dst_to_diagonal: BTreeMap<usize, u32>,
}

impl DiagramMatching {
    pub fn n_proj(&self) -> usize {
        self.n_proj
    }

    /// `(src, dst, weight)` for every pair matched in at least one slice.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.n_proj as f64;
        self.pairs.iter().map(move |(&(s, d), &c)| (s, d, c as f64 / n))
    }

    pub fn weight(&self, src: usize, dst: usize) -> f64 {
        self.pairs.get(&(src, dst)).map_or(0.0, |&c| c as f64 / self.n_proj as f64)
    }

    pub fn src_diagonal_weight(&self, src: usize) -> f64 {
        self.src_to_diagonal
            .get(&src)
            .map_or(0.0, |&c| c as f64 / self.n_proj as f64)
    }

    pub fn dst_diagonal_weight(&self, dst: usize) -> f64 {
        self.dst_to_diagonal
            .get(&dst)
            .map_or(0.0, |&c| c as f64 / self.n_proj as f64)
    }

    /// Slice count per source dot, real matches plus diagonal.
    pub fn src_mass(&self, src: usize) -> u32 {
        self.pairs
            .iter()
            .filter(|((s, _), _)| *s == src)
            .map(|(_, &c)| c)
            .sum::<u32>()
            + self.src_to_diagonal.get(&src).copied().unwrap_or(0)
    }

    /// The target receiving the most slices for `src`; ties go to the
    /// diagonal, then to the smaller dst index.
    pub fn dominant(&self, src: usize) -> Option<usize> {
        let diag = self.src_to_diagonal.get(&src).copied().unwrap_or(0);
        let mut best: Option<(usize, u32)> = None;
        for (&(s, d), &c) in &self.pairs {
            if s == src && best.is_none_or(|(_, bc)| c > bc) {
                best = Some((d, c));
            }
        }
        best.filter(|&(_, c)| c > diag).map(|(d, _)| d)
    }
}

/// Points of `dim` used for matching; essential deaths are clamped to the
/// diagram maximum so every point is finite.
fn matching_points(diag: &PersistenceDiagram, dim: u8) -> (Vec<usize>, Vec<(f64, f64)>) {
    diag.dots
        .iter()
        .enumerate()
        .filter(|(_, d)| d.dim == dim)
        .map(|(i, d)| {
            let death = if d.death.is_finite() {
                d.death
            } else {
                diag.max_value
            };
            (i, (d.birth, death))
        })
        .unzip()
}

/// Per-slice rank matching on point lists; returns counts keyed by list index.
fn slice_counts(
    src: &[(f64, f64)],
    dst: &[(f64, f64)],
    n_proj: usize,
) -> (BTreeMap<(usize, usize), u32>, BTreeMap<usize, u32>, BTreeMap<usize, u32>) {
    let (n1, n2) = (src.len(), dst.len());
    let on_diag = |p: (f64, f64)| {
        let m = (p.0 + p.1) / 2.0;
        (m, m)
    };
    // source side: real src dots then diagonal images of dst dots, and
    // symmetrically on the target side
    let a: Vec<(f64, f64)> = src.iter().copied().chain(dst.iter().map(|&p| on_diag(p))).collect();
    let b: Vec<(f64, f64)> = dst.iter().copied().chain(src.iter().map(|&p| on_diag(p))).collect();
    let mut pairs = BTreeMap::new();
    let mut src_diag = BTreeMap::new();
    let mut dst_diag = BTreeMap::new();
    let mut order_a: Vec<usize> = (0..a.len()).collect();
    let mut order_b: Vec<usize> = (0..b.len()).collect();
    for k in 0..n_proj {
        // midpoints of an even grid on [0, pi); avoids the diagonal direction
        let theta = (k as f64 + 0.5) * PI / n_proj as f64;
        let (s, c) = theta.sin_cos();
        let proj = |p: &(f64, f64)| p.0 * c + p.1 * s;
        order_a.sort_by(|&i, &j| proj(&a[i]).total_cmp(&proj(&a[j])).then(i.cmp(&j)));
        order_b.sort_by(|&i, &j| proj(&b[i]).total_cmp(&proj(&b[j])).then(i.cmp(&j)));
        for (&i, &j) in order_a.iter().zip(&order_b) {
            match (i < n1, j < n2) {
                (true, true) => *pairs.entry((i, j)).or_insert(0) += 1,
                (true, false) => *src_diag.entry(i).or_insert(0) += 1,
                (false, true) => *dst_diag.entry(j).or_insert(0) += 1,
                (false, false) => {}
            }
        }
    }
    (pairs, src_diag, dst_diag)
}

/// Sliced matching of the `dim` dots of two diagrams over `n_proj` evenly
/// spaced directions.
pub fn sliced_matching(
    src: &PersistenceDiagram,
    dst: &PersistenceDiagram,
    dim: u8,
    n_proj: usize,
) -> Result<DiagramMatching> {
    if n_proj == 0 {
        return Err(Error::InvalidParameter("need at least one projection".into()));
    }
    let (si, sp) = matching_points(src, dim);
    let (di, dp) = matching_points(dst, dim);
    let (pairs, sd, dd) = slice_counts(&sp, &dp, n_proj);
    Ok(DiagramMatching {
        n_proj,
        src_len: src.dots.len(),
        dst_len: dst.dots.len(),
        pairs: pairs.into_iter().map(|((i, j), c)| ((si[i], di[j]), c)).collect(),
        src_to_diagonal: sd.into_iter().map(|(i, c)| (si[i], c)).collect(),
        dst_to_diagonal: dd.into_iter().map(|(j, c)| (di[j], c)).collect(),
    })
}

/// Sliced matching on raw point lists (indices are list positions).
pub fn sliced_matching_points(
    src: &[(f64, f64)],
    dst: &[(f64, f64)],
    n_proj: usize,
) -> Result<DiagramMatching> {
    if n_proj == 0 {
        return Err(Error::InvalidParameter("need at least one projection".into()));
    }
    let (pairs, src_to_diagonal, dst_to_diagonal) = slice_counts(src, dst, n_proj);
    Ok(DiagramMatching {
        n_proj,
        src_len: src.len(),
        dst_len: dst.len(),
        pairs,
        src_to_diagonal,
        dst_to_diagonal,
    })
}

/// Moves a gradient on `src` onto the dots of `dst`: each dst dot receives the
/// matching-weighted sum of its partners' partials. Mass sent to the diagonal
/// is dropped.
pub fn transfer_gradient(
    src_grad: &DiagramGradient,
    matching: &DiagramMatching,
    src: &PersistenceDiagram,
    dst: &PersistenceDiagram,
) -> Result<DiagramGradient> {
    if matching.src_len != src.dots.len() || matching.dst_len != dst.dots.len() {
        return Err(Error::InvalidParameter(
            "matching was built from different diagrams".into(),
        ));
    }
    let mut by_src = BTreeMap::new();
    for e in &src_grad.entries {
        if e.dot.index >= src.dots.len() {
            return Err(Error::IndexOutOfRange {
                index: e.dot.index,
                len: src.dots.len(),
            });
        }
        by_src.insert(e.dot.index, (e.d_birth, e.d_death));
    }
    let mut acc: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
    for (s, d, w) in matching.pairs() {
        if let Some(&(gb, gd)) = by_src.get(&s) {
            let slot = acc.entry(d).or_insert((0.0, 0.0));
            slot.0 += w * gb;
            slot.1 += w * gd;
        }
    }
    let entries = acc
        .into_iter()
        .map(|(j, (d_birth, d_death))| {
            let dot = &dst.dots[j];
            let (death, death_vertex) = match dot.death_vertex {
                Some(v) => (dot.death, v),
                None => (dst.max_value, dst.max_vertex),
            };
            DotGradient {
                dot: SelectedDot {
                    index: j,
                    birth: dot.birth,
                    death,
                    birth_vertex: dot.birth_vertex,
                    death_vertex,
                },
                d_birth,
                d_death,
            }
        })
        .collect();
    Ok(DiagramGradient { entries })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmearHeatmap {
    pub birth_heat: ScalarField,
    pub death_heat: ScalarField,
    pub sample_count: usize,
}

impl SmearHeatmap {
    /// RGB image: birth heat in red, death heat in blue, each scaled by its
    /// own min-max range of absolute values.
    pub fn composite_rgb(&self) -> Vec<u8> {
        let norm = |f: &ScalarField| {
            let abs: Vec<f64> = f.values().iter().map(|v| v.abs()).collect();
            let lo = abs.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = abs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let span = if hi > lo { hi - lo } else { 1.0 };
            abs.into_iter()
                .map(|v| to_byte(255.0 * (v - lo) / span))
                .collect::<Vec<_>>()
        };
        let (r, b) = (norm(&self.birth_heat), norm(&self.death_heat));
        r.iter().zip(&b).flat_map(|(&r, &b)| [r, 0, b]).collect()
    }

    pub fn save_composite_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let (rows, cols) = self.birth_heat.shape();
        let mut enc = png::Encoder::new(BufWriter::new(file), cols as u32, rows as u32);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let png_err = |e: png::EncodingError| Error::Png {
            path: path.to_path_buf(),
            message: e.to_string(),
        };
        let mut w = enc.write_header().map_err(png_err)?;
        w.write_image_data(&self.composite_rgb()).map_err(png_err)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmearConfig {
    pub eps: f64,
    pub downsample: DownsampleSpec,
    pub n_samples: usize,
    pub n_proj: usize,
    pub seed: u64,
}

const CHUNK: usize = 8;

/// Critical smear of `spec`'s gradient on the diagram of `field`.
///
/// Sample `i` uses stream `i` of `seed`, and per-chunk sums are reduced in
/// chunk order, so the heatmap is identical for any thread count and the
/// first `n` samples of a longer run coincide with an `n`-sample run.
pub fn critical_smear(
    field: &ScalarField,
    spec: &FunctionalSpec,
    cfg: &SmearConfig,
) -> Result<SmearHeatmap> {
    spec.validate()?;
    if cfg.n_samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let reference = diagram_of(field);
    let ref_grad = diagram_gradient(&reference, spec);
    let (rows, cols) = field.shape();

    let sample = |i: usize| -> Result<(ScalarField, ScalarField)> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(i as u64);
        let noisy = add_uniform_noise(field, cfg.eps, &mut rng)?;
        let w = sample_weighting(&cfg.downsample, field.shape(), &mut rng);
        let coarse = downsample(&noisy, &w)?;
        let diag = diagram_of(&coarse);
        let matching = sliced_matching(&reference, &diag, spec.hom_dim, cfg.n_proj)?;
        let moved = transfer_gradient(&ref_grad, &matching, &reference, &diag)?;
        let part = |births: bool| -> Result<ScalarField> {
            let g = DiagramGradient {
                entries: moved
                    .entries
                    .iter()
                    .map(|e| DotGradient {
                        d_birth: if births { e.d_birth } else { 0.0 },
                        d_death: if births { 0.0 } else { e.d_death },
                        ..*e
                    })
                    .collect(),
            };
            compose_downsample_gradient(&pullback_gradient(&g, coarse.shape())?, &w)
        };
        Ok((part(true)?, part(false)?))
    };

    let chunks: Vec<Result<(Vec<f64>, Vec<f64>)>> = (0..cfg.n_samples.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut birth = vec![0.0; rows * cols];
            let mut death = vec![0.0; rows * cols];
            for i in c * CHUNK..((c + 1) * CHUNK).min(cfg.n_samples) {
                let (b, d) = sample(i)?;
                for (acc, v) in birth.iter_mut().zip(b.values()) {
                    *acc += v;
                }
                for (acc, v) in death.iter_mut().zip(d.values()) {
                    *acc += v;
                }
            }
            Ok((birth, death))
        })
        .collect();
    let mut birth = vec![0.0; rows * cols];
    let mut death = vec![0.0; rows * cols];
    for chunk in chunks {
        let (b, d) = chunk?;
        birth.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
        death.iter_mut().zip(&d).for_each(|(x, y)| *x += y);
    }
    let n = cfg.n_samples as f64;
    Ok(SmearHeatmap {
        birth_heat: ScalarField::new(rows, cols, birth.into_iter().map(|v| v / n).collect())?,
        death_heat: ScalarField::new(rows, cols, death.into_iter().map(|v| v / n).collect())?,
        sample_count: cfg.n_samples,
    })
}
