//! Exact small-instance diagram distances, used to check the fast paths.
//!
//! Everything here is exponential or polynomial with large constants; keep the
//! inputs to a handful of dots.

use crate::persistence::PersistenceDiagram;

/// Minimal-cost partial matching between two point sets in the plane, where
/// unmatched points pay their squared distance to the diagonal and matched
/// pairs pay their squared Euclidean distance. Returns, for every source
/// point, `Some(dst)` or `None` (diagonal). Exhaustive search.
pub fn exact_matching(src: &[(f64, f64)], dst: &[(f64, f64)]) -> (Vec<Option<usize>>, f64) {
    fn diag_cost(p: (f64, f64)) -> f64 {
        (p.1 - p.0) * (p.1 - p.0) / 2.0
    }
    fn search(
        i: usize,
        src: &[(f64, f64)],
        dst: &[(f64, f64)],
        used: &mut Vec<bool>,
        cur: &mut Vec<Option<usize>>,
        cost: f64,
        best: &mut (Vec<Option<usize>>, f64),
    ) {
        if cost >= best.1 {
            return;
        }
        if i == src.len() {
            let rest: f64 = dst
                .iter()
                .zip(used.iter())
                .filter(|(_, u)| !**u)
                .map(|(p, _)| diag_cost(*p))
                .sum();
            if cost + rest < best.1 {
                *best = (cur.clone(), cost + rest);
            }
            return;
        }
        cur.push(None);
        search(i + 1, src, dst, used, cur, cost + diag_cost(src[i]), best);
        cur.pop();
        for j in 0..dst.len() {
            if used[j] {
                continue;
            }
            let (dx, dy) = (src[i].0 - dst[j].0, src[i].1 - dst[j].1);
            used[j] = true;
            cur.push(Some(j));
            search(i + 1, src, dst, used, cur, cost + dx * dx + dy * dy, best);
            cur.pop();
            used[j] = false;
        }
    }
    let mut best = (vec![None; src.len()], f64::INFINITY);
    search(
        0,
        src,
        dst,
        &mut vec![false; dst.len()],
        &mut Vec::new(),
        0.0,
        &mut best,
    );
    best
}

/// Exact bottleneck distance between the `dim` parts of two diagrams.
///
/// Essential dots are matched among themselves by sorted birth; a mismatch in
/// their count gives infinity.
pub fn bottleneck_distance(a: &PersistenceDiagram, b: &PersistenceDiagram, dim: u8) -> f64 {
    let split = |d: &PersistenceDiagram| {
        let mut fin = Vec::new();
        let mut ess = Vec::new();
        for dot in d.dots_in_dim(dim) {
            if dot.is_essential() {
                ess.push(dot.birth);
            } else {
                fin.push((dot.birth, dot.death));
            }
        }
        ess.sort_by(f64::total_cmp);
        (fin, ess)
    };
    let (fa, ea) = split(a);
    let (fb, eb) = split(b);
    if ea.len() != eb.len() {
        return f64::INFINITY;
    }
    let ess = ea
        .iter()
        .zip(&eb)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    ess.max(finite_bottleneck(&fa, &fb))
}

fn finite_bottleneck(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let linf = |p: (f64, f64), q: (f64, f64)| (p.0 - q.0).abs().max((p.1 - q.1).abs());
    let to_diag = |p: (f64, f64)| (p.1 - p.0) / 2.0;
    let mut candidates = vec![0.0];
    for &p in a {
        candidates.push(to_diag(p));
        for &q in b {
            candidates.push(linf(p, q));
        }
    }
    candidates.extend(b.iter().map(|&q| to_diag(q)));
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    let (n, m) = (a.len(), b.len());
    // left: a[0..n] then diagonal slots for b; right: b[0..m] then slots for a
    let feasible = |delta: f64| {
        let size = n + m;
        let adj: Vec<Vec<usize>> = (0..size)
            .map(|l| {
                let mut out = Vec::new();
                if l < n {
                    out.extend((0..m).filter(|&j| linf(a[l], b[j]) <= delta));
                    if to_diag(a[l]) <= delta {
                        out.push(m + l);
                    }
                } else {
                    let j = l - n;
                    if to_diag(b[j]) <= delta {
                        out.push(j);
                    }
                    out.extend(m..m + n);
                }
                out
            })
            .collect();
        perfect_matching(&adj, size)
    };
    let (mut lo, mut hi) = (0, candidates.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if feasible(candidates[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    candidates[lo]
}

fn perfect_matching(adj: &[Vec<usize>], size: usize) -> bool {
    fn augment(l: usize, adj: &[Vec<usize>], seen: &mut [bool], owner: &mut [usize]) -> bool {
        for &r in &adj[l] {
            if seen[r] {
                continue;
            }
            seen[r] = true;
            if owner[r] == usize::MAX || augment(owner[r], adj, seen, owner) {
                owner[r] = l;
                return true;
            }
        }
        false
    }
    let mut owner = vec![usize::MAX; size];
    (0..size).all(|l| augment(l, adj, &mut vec![false; size], &mut owner))
}
