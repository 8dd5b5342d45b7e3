//! Persistence diagrams of cubical filtrations, with every dot carrying the
//! pixels that create and destroy it.
//!
//! The production path is a Z/2 boundary-matrix reduction with clearing:
//! squares are reduced first, and every edge that appears as a square pivot
//! is skipped when the edge columns are reduced. Boundaries are enumerated
//! from the grid geometry, only working columns are stored.
//!
//! [`brute_force_oracle`] recomputes the same multiset of (dim, birth, death)
//! from ranks of sublevel boundary maps, without any pairing logic.

use std::fmt::Write as _;

use crate::cubical::{build_filtration, CubicalFiltration, Grid};
use crate::field::ScalarField;

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dot {
    pub dim: u8,
    pub birth: f64,
    /// `f64::INFINITY` for essential classes.
    pub death: f64,
    pub birth_vertex: usize,
    pub death_vertex: Option<usize>,
}

impl Dot {
    pub fn lifetime(&self) -> f64 {
        self.death - self.birth
    }

    pub fn is_essential(&self) -> bool {
        self.death_vertex.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceDiagram {
    pub field_shape: (usize, usize),
    pub dots: Vec<Dot>,
    /// Pixel holding the largest field value, and that value.
    pub max_vertex: usize,
    pub max_value: f64,
}

impl PersistenceDiagram {
    pub fn dots_in_dim(&self, dim: u8) -> impl Iterator<Item = &Dot> {
        self.dots.iter().filter(move |d| d.dim == dim)
    }

    /// Sorted `(dim, birth, death)` triples, for multiset comparison.
    pub fn value_multiset(&self) -> Vec<(u8, f64, f64)> {
        let mut v: Vec<_> = self.dots.iter().map(|d| (d.dim, d.birth, d.death)).collect();
        sort_triples(&mut v);
        v
    }

    /// Number of dots in `dim` whose lifetime exceeds `threshold`
    /// (essential dots count).
    pub fn count_persistent(&self, dim: u8, threshold: f64) -> usize {
        self.dots_in_dim(dim).filter(|d| d.lifetime() > threshold).count()
    }

    /// CSV rows `dim,birth,death,birth_vertex,death_vertex` under a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("dim,birth,death,birth_vertex,death_vertex\n");
        for d in &self.dots {
            let death = if d.death.is_finite() {
                d.death.to_string()
            } else {
                "inf".to_string()
            };
            let dv = d
                .death_vertex
                .map_or_else(|| "none".to_string(), |v| v.to_string());
            let _ = writeln!(out, "{},{},{},{},{}", d.dim, d.birth, death, d.birth_vertex, dv);
        }
        out
    }
}

pub(crate) fn sort_triples(v: &mut [(u8, f64, f64)]) {
    v.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then(a.1.total_cmp(&b.1))
            .then(a.2.total_cmp(&b.2))
    });
}

/// Convenience: filtration plus reduction.
pub fn diagram_of(field: &ScalarField) -> PersistenceDiagram {
    compute_persistence(&build_filtration(field))
}

/// Symmetric difference of two ascending index lists into `out`.
fn add_columns(a: &[u32], b: &[u32], out: &mut Vec<u32>) {
    out.clear();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
}

pub fn compute_persistence(filt: &CubicalFiltration) -> PersistenceDiagram {
    let grid = filt.grid();
    let cells = filt.cells();
    let n = cells.len();

    // pivot row position -> owning column position
    let mut owner = vec![NONE; n];
    let mut cleared = vec![false; n];
    let mut pairs: Vec<(u32, u32)> = Vec::new();

    // squares
    let mut stored: Vec<Vec<u32>> = Vec::new();
    let mut slot_of = vec![NONE; n];
    let mut col = Vec::with_capacity(16);
    let mut scratch = Vec::with_capacity(16);
    for (j, cell) in cells.iter().enumerate() {
        if cell.dim != 2 {
            continue;
        }
        col.clear();
        col.extend(
            grid.boundary_of(cell.id)
                .as_slice()
                .iter()
                .map(|&f| filt.position(f) as u32),
        );
        col.sort_unstable();
        while let Some(&low) = col.last() {
            let o = owner[low as usize];
            if o == NONE {
                break;
            }
            add_columns(&col, &stored[slot_of[o as usize] as usize], &mut scratch);
            std::mem::swap(&mut col, &mut scratch);
        }
        if let Some(&low) = col.last() {
            owner[low as usize] = j as u32;
            cleared[low as usize] = true;
            slot_of[j] = stored.len() as u32;
            stored.push(col.clone());
            pairs.push((low, j as u32));
        }
    }
    drop(stored);

    // edges; reduced edge columns never exceed two entries
    let mut edge_col: Vec<(u32, u32)> = vec![(NONE, NONE); n];
    let mut essential_edges = Vec::new();
    for (j, cell) in cells.iter().enumerate() {
        if cell.dim != 1 || cleared[j] {
            continue;
        }
        let faces = grid.boundary_of(cell.id);
        let (a, b) = {
            let f = faces.as_slice();
            let (p, q) = (filt.position(f[0]) as u32, filt.position(f[1]) as u32);
            (p.min(q), p.max(q))
        };
        let (mut lo, mut hi) = (a, b);
        loop {
            let o = owner[hi as usize];
            if o == NONE {
                break;
            }
            // both columns have pivot `hi`; their sum keeps the two smaller rows
            let (c0, _) = edge_col[o as usize];
            if c0 == lo {
                lo = NONE;
                hi = NONE;
                break;
            }
            (lo, hi) = (lo.min(c0), lo.max(c0));
        }
        if hi == NONE {
            essential_edges.push(j as u32);
            continue;
        }
        owner[hi as usize] = j as u32;
        edge_col[j] = (lo, hi);
        pairs.push((hi, j as u32));
    }

    let mut dots = Vec::new();
    let mut paired = vec![false; n];
    for &(b, d) in &pairs {
        paired[b as usize] = true;
        paired[d as usize] = true;
        let (bc, dc) = (&cells[b as usize], &cells[d as usize]);
        if bc.value == dc.value {
            continue;
        }
        dots.push(Dot {
            dim: bc.dim,
            birth: bc.value,
            death: dc.value,
            birth_vertex: bc.critical_vertex,
            death_vertex: Some(dc.critical_vertex),
        });
    }
    for (j, cell) in cells.iter().enumerate() {
        if cell.dim == 0 && !paired[j] {
            dots.push(Dot {
                dim: 0,
                birth: cell.value,
                death: f64::INFINITY,
                birth_vertex: cell.critical_vertex,
                death_vertex: None,
            });
        }
    }
    for &j in &essential_edges {
        let cell = &cells[j as usize];
        dots.push(Dot {
            dim: 1,
            birth: cell.value,
            death: f64::INFINITY,
            birth_vertex: cell.critical_vertex,
            death_vertex: None,
        });
    }
    dots.sort_by(|a, b| {
        a.dim
            .cmp(&b.dim)
            .then(a.birth.total_cmp(&b.birth))
            .then(a.death.total_cmp(&b.death))
    });

    let top = cells
        .iter()
        .rev()
        .find(|c| c.dim == 0)
        .expect("grid has at least one vertex");
    PersistenceDiagram {
        field_shape: filt.field_shape(),
        dots,
        max_vertex: top.critical_vertex,
        max_value: top.value,
    }
}

/// Rank over Z/2 of a set of bit-packed columns.
fn gf2_rank(mut cols: Vec<Vec<u64>>) -> usize {
    let mut rank = 0;
    let mut pivots: Vec<Vec<u64>> = Vec::new();
    let mut pivot_bits: Vec<usize> = Vec::new();
    for c in cols.iter_mut() {
        for (p, &bit) in pivots.iter().zip(&pivot_bits) {
            if c[bit / 64] >> (bit % 64) & 1 == 1 {
                for (x, y) in c.iter_mut().zip(p) {
                    *x ^= y;
                }
            }
        }
        let lead = c
            .iter()
            .enumerate()
            .find(|(_, w)| **w != 0)
            .map(|(i, w)| i * 64 + w.trailing_zeros() as usize);
        if let Some(bit) = lead {
            // eliminate the new pivot from earlier pivots to keep them reduced
            for p in pivots.iter_mut() {
                if p[bit / 64] >> (bit % 64) & 1 == 1 {
                    for (x, y) in p.iter_mut().zip(c.iter()) {
                        *x ^= y;
                    }
                }
            }
            pivots.push(c.clone());
            pivot_bits.push(bit);
            rank += 1;
        }
    }
    rank
}

/// Persistence of the lower-star filtration of `field` from ranks of
/// sublevel boundary maps. Returns sorted `(dim, birth, death)` triples.
///
/// For levels `i <= j`, the persistent Betti number is
/// `dim Z_p(K_i) - rank d_{p+1}(K_j) + rank (P_i d_{p+1}(K_j))`, where `P_i`
/// projects onto p-cells outside `K_i`; dot multiplicities follow by
/// inclusion-exclusion. Cost grows quickly; meant for fields up to ~8x8.
pub fn brute_force_oracle(field: &ScalarField) -> Vec<(u8, f64, f64)> {
    let grid = Grid::new(field.rows(), field.cols());
    let vals = field.values();
    let value_of = |id: usize| {
        grid.vertices_of(id)
            .as_slice()
            .iter()
            .map(|&v| vals[v])
            .fold(f64::NEG_INFINITY, f64::max)
    };
    // cells grouped by dim, with their index within the dim
    let mut by_dim: [Vec<(usize, f64)>; 3] = Default::default();
    let mut local = vec![0usize; grid.n_cells()];
    for id in 0..grid.n_cells() {
        let d = grid.dim_of(id) as usize;
        local[id] = by_dim[d].len();
        by_dim[d].push((id, value_of(id)));
    }
    let mut levels: Vec<f64> = vals.to_vec();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let m = levels.len();

    let words = |d: usize| by_dim[d].len().div_ceil(64).max(1);
    // boundary column of a (p+1)-cell, rows = p-cells, restricted by `keep_row`
    let column = |id: usize, p: usize, keep_row: &dyn Fn(usize) -> bool| {
        let mut c = vec![0u64; words(p)];
        for &f in grid.boundary_of(id).as_slice() {
            if keep_row(f) {
                let r = local[f];
                c[r / 64] |= 1 << (r % 64);
            }
        }
        c
    };
    let in_level = |id: usize, t: f64| value_of(id) <= t;

    let mut out = Vec::new();
    for p in 0..2usize {
        let n_cycles: Vec<usize> = levels
            .iter()
            .map(|&t| {
                let n_p = by_dim[p].iter().filter(|(_, v)| *v <= t).count();
                let rank_p = if p == 0 {
                    0
                } else {
                    gf2_rank(
                        by_dim[p]
                            .iter()
                            .filter(|(_, v)| *v <= t)
                            .map(|&(id, _)| column(id, p - 1, &|_| true))
                            .collect(),
                    )
                };
                n_p - rank_p
            })
            .collect();
        let rank_next: Vec<usize> = levels
            .iter()
            .map(|&t| {
                gf2_rank(
                    by_dim[p + 1]
                        .iter()
                        .filter(|(_, v)| *v <= t)
                        .map(|&(id, _)| column(id, p, &|_| true))
                        .collect(),
                )
            })
            .collect();
        // beta[i][j] for i <= j
        let mut beta = vec![vec![0i64; m]; m];
        for i in 0..m {
            for j in i..m {
                let ti = levels[i];
                let proj = gf2_rank(
                    by_dim[p + 1]
                        .iter()
                        .filter(|(_, v)| *v <= levels[j])
                        .map(|&(id, _)| column(id, p, &|f| !in_level(f, ti)))
                        .collect(),
                );
                beta[i][j] = n_cycles[i] as i64 - rank_next[j] as i64 + proj as i64;
            }
        }
        let b = |i: isize, j: usize| if i < 0 { 0 } else { beta[i as usize][j] };
        for i in 0..m {
            for j in i + 1..m {
                let mult =
                    b(i as isize, j - 1) - b(i as isize, j) - b(i as isize - 1, j - 1)
                        + b(i as isize - 1, j);
                for _ in 0..mult.max(0) {
                    out.push((p as u8, levels[i], levels[j]));
                }
            }
            let ess = b(i as isize, m - 1) - b(i as isize - 1, m - 1);
            for _ in 0..ess.max(0) {
                out.push((p as u8, levels[i], f64::INFINITY));
            }
        }
    }
    sort_triples(&mut out);
    out
}
