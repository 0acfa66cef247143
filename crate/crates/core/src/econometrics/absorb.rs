//! Within transformation for several fixed-effect sets by alternating
//! projections, with optional group-specific linear trends.

use std::collections::HashMap;
use std::hash::Hash;

use super::spec::AbsorbOptions;
use crate::error::{Error, Result};

/// Dense codes `0..levels` in order of first appearance.
pub fn encode<K: Hash + Eq + Clone>(keys: &[K]) -> (Vec<usize>, usize) {
    let mut map: HashMap<K, usize> = HashMap::new();
    let codes = keys
        .iter()
        .map(|k| {
            let next = map.len();
            *map.entry(k.clone()).or_insert(next)
        })
        .collect();
    (codes, map.len())
}

#[derive(Debug, Clone)]
struct Factor {
    codes: Vec<usize>,
    counts: Vec<f64>,
}

impl Factor {
    fn new(codes: Vec<usize>) -> Self {
        let levels = codes.iter().max().map_or(0, |m| m + 1);
        let mut counts = vec![0.0; levels];
        for &c in &codes {
            counts[c] += 1.0;
        }
        Self { codes, counts }
    }

    fn project_out(&self, col: &mut [f64], scratch: &mut Vec<f64>) {
        scratch.clear();
        scratch.resize(self.counts.len(), 0.0);
        for (&c, &v) in self.codes.iter().zip(col.iter()) {
            scratch[c] += v;
        }
        for (s, n) in scratch.iter_mut().zip(&self.counts) {
            *s /= n;
        }
        for (&c, v) in self.codes.iter().zip(col.iter_mut()) {
            *v -= scratch[c];
        }
    }
}

/// Per-group `{1, t}` projection.
#[derive(Debug, Clone)]
struct Trends {
    groups: Factor,
    centered_t: Vec<f64>,
    /// `sum (t - tbar)^2` per group; zero when the group has a single period.
    sxx: Vec<f64>,
}

impl Trends {
    fn new(codes: Vec<usize>, t: &[f64]) -> Self {
        let groups = Factor::new(codes);
        let mut tbar = vec![0.0; groups.counts.len()];
        for (&c, &ti) in groups.codes.iter().zip(t) {
            tbar[c] += ti;
        }
        for (m, n) in tbar.iter_mut().zip(&groups.counts) {
            *m /= n;
        }
        let centered_t: Vec<f64> = groups.codes.iter().zip(t).map(|(&c, &ti)| ti - tbar[c]).collect();
        let mut sxx = vec![0.0; groups.counts.len()];
        for (&c, &d) in groups.codes.iter().zip(&centered_t) {
            sxx[c] += d * d;
        }
        for s in &mut sxx {
            if *s < 1e-12 {
                *s = 0.0;
            }
        }
        Self { groups, centered_t, sxx }
    }

    fn project_out(&self, col: &mut [f64], scratch: &mut Vec<f64>) {
        self.groups.project_out(col, scratch);
        scratch.clear();
        scratch.resize(self.sxx.len(), 0.0);
        for ((&c, &d), &v) in self.groups.codes.iter().zip(&self.centered_t).zip(col.iter()) {
            scratch[c] += d * v;
        }
        for (s, &sxx) in scratch.iter_mut().zip(&self.sxx) {
            *s = if sxx > 0.0 { *s / sxx } else { 0.0 };
        }
        for ((&c, &d), v) in self.groups.codes.iter().zip(&self.centered_t).zip(col.iter_mut()) {
            *v -= scratch[c] * d;
        }
    }

    fn rank(&self) -> usize {
        self.sxx.iter().map(|&s| if s > 0.0 { 2 } else { 1 }).sum()
    }
}

#[derive(Debug, Clone)]
enum Projection {
    Means(Factor),
    Trends(Trends),
}

impl Projection {
    fn apply(&self, col: &mut [f64], scratch: &mut Vec<f64>) {
        match self {
            Projection::Means(f) => f.project_out(col, scratch),
            Projection::Trends(t) => t.project_out(col, scratch),
        }
    }

    fn codes(&self) -> &[usize] {
        match self {
            Projection::Means(f) => &f.codes,
            Projection::Trends(t) => &t.groups.codes,
        }
    }

    fn levels(&self) -> usize {
        match self {
            Projection::Means(f) => f.counts.len(),
            Projection::Trends(t) => t.groups.counts.len(),
        }
    }
}

/// Residualizes columns on the span of all absorbed effects.
#[derive(Debug, Clone)]
pub struct Absorber {
    projections: Vec<Projection>,
    n: usize,
    options: AbsorbOptions,
}

impl Absorber {
    /// `factors` hold dense codes per fixed-effect set; `trends` holds group
    /// codes and the time variable for group-specific `{1, t}`.
    pub fn new(n: usize, factors: Vec<Vec<usize>>, trends: Option<(Vec<usize>, Vec<f64>)>, options: AbsorbOptions) -> Self {
        let mut projections: Vec<Projection> = factors.into_iter().map(|c| Projection::Means(Factor::new(c))).collect();
        if let Some((codes, t)) = trends {
            projections.push(Projection::Trends(Trends::new(codes, &t)));
        }
        for p in &projections {
            debug_assert_eq!(p.codes().len(), n);
        }
        Self { projections, n, options }
    }

    pub fn is_empty(&self) -> bool {
        self.projections.is_empty()
    }

    /// Number of projection passes per sweep.
    pub fn n_sets(&self) -> usize {
        self.projections.len()
    }

    /// Demeans in place; returns the number of sweeps used.
    pub fn demean(&self, col: &mut [f64]) -> Result<usize> {
        assert_eq!(col.len(), self.n);
        let mut scratch = Vec::new();
        match self.projections.len() {
            0 => return Ok(0),
            1 => {
                self.projections[0].apply(col, &mut scratch);
                return Ok(1);
            }
            _ => {}
        }
        // Pairs of plain sweeps followed by an Irons-Tuck extrapolation. The
        // extrapolated point is an affine combination of iterates, so it stays
        // in `x0 + span(effects)` and the limit is unchanged.
        let tol = self.options.tolerance;
        let mut x0 = col.to_vec();
        let mut x1 = vec![0.0; self.n];
        let mut last_change = f64::INFINITY;
        let mut sweeps = 0;
        while sweeps + 2 <= self.options.max_sweeps.max(2) {
            x1.copy_from_slice(&x0);
            self.sweep(&mut x1, &mut scratch);
            col.copy_from_slice(&x1);
            self.sweep(col, &mut scratch);
            sweeps += 2;
            let d1 = max_abs_diff(&x1, &x0);
            let d2 = max_abs_diff(col, &x1);
            last_change = d2;
            if converged(d1, d2, tol) {
                return Ok(sweeps);
            }
            let (mut num, mut den) = (0.0, 0.0);
            for ((&a, &b), &c) in x0.iter().zip(&x1).zip(col.iter()) {
                let second = c - 2.0 * b + a;
                num += (c - b) * second;
                den += second * second;
            }
            if den > 0.0 && num.is_finite() {
                let step = num / den;
                for (x, (&b, &c)) in x0.iter_mut().zip(x1.iter().zip(col.iter())) {
                    *x = c - step * (c - b);
                }
            } else {
                x0.copy_from_slice(col);
            }
        }
        Err(Error::NonConvergence { sweeps, last_change })
    }

    fn sweep(&self, col: &mut [f64], scratch: &mut Vec<f64>) {
        for p in &self.projections {
            p.apply(col, scratch);
        }
    }

    /// Dimension of the absorbed space. Exact for one or two sets;
    /// for more sets each additional set is assumed to add one redundancy.
    pub fn n_absorbed(&self) -> usize {
        match self.projections.as_slice() {
            [] => 0,
            [Projection::Trends(t)] => t.rank(),
            [p] => p.levels(),
            [Projection::Means(a), Projection::Means(b)] => {
                a.counts.len() + b.counts.len() - components(&a.codes, a.counts.len(), &b.codes, b.counts.len())
            }
            ps => {
                let total: usize = ps
                    .iter()
                    .map(|p| match p {
                        Projection::Trends(t) => t.rank(),
                        other => other.levels(),
                    })
                    .sum();
                total.saturating_sub(ps.len() - 1)
            }
        }
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Max cell change below `tol`, and the geometric tail implied by the
/// observed contraction rate also below `tol`.
fn converged(d1: f64, d2: f64, tol: f64) -> bool {
    if d2 >= tol {
        return false;
    }
    if d2 < tol * 1e-3 {
        return true;
    }
    let rate = d2 / d1;
    rate < 1.0 && d2 * rate / (1.0 - rate) < tol
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Connected components of the bipartite graph linking levels of two factors.
fn components(a: &[usize], la: usize, b: &[usize], lb: usize) -> usize {
    let mut parent: Vec<usize> = (0..la + lb).collect();
    for (&x, &y) in a.iter().zip(b) {
        let (rx, ry) = (find(&mut parent, x), find(&mut parent, la + y));
        if rx != ry {
            parent[rx] = ry;
        }
    }
    (0..la + lb).filter(|&i| find(&mut parent, i) == i).count()
}

/// Rows to keep after iteratively removing singleton levels of any set.
pub fn non_singletons(factors: &[&[usize]], n: usize) -> Vec<bool> {
    let mut keep = vec![true; n];
    loop {
        let mut changed = false;
        for codes in factors {
            let levels = codes.iter().max().map_or(0, |m| m + 1);
            let mut counts = vec![0usize; levels];
            for (i, &c) in codes.iter().enumerate() {
                if keep[i] {
                    counts[c] += 1;
                }
            }
            for (i, &c) in codes.iter().enumerate() {
                if keep[i] && counts[c] == 1 {
                    keep[i] = false;
                    changed = true;
                }
            }
        }
        if !changed {
            return keep;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_set_is_group_mean_subtraction() {
        let codes = vec![0, 0, 1, 1, 1];
        let ab = Absorber::new(5, vec![codes], None, AbsorbOptions::default());
        let mut x = vec![1.0, 3.0, 2.0, 4.0, 9.0];
        assert_eq!(ab.demean(&mut x).unwrap(), 1);
        let expected = [-1.0, 1.0, -3.0, -1.0, 4.0];
        for (a, b) in x.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(ab.n_absorbed(), 2);
    }

    #[test]
    fn trends_remove_within_group_lines() {
        let codes = vec![0, 0, 0, 1, 1, 1];
        let t = vec![1.0, 2.0, 3.0, 1.0, 2.0, 3.0];
        let ab = Absorber::new(6, vec![], Some((codes, t)), AbsorbOptions::default());
        let mut x = vec![2.0, 4.0, 6.0, -1.0, -2.0, -3.0];
        ab.demean(&mut x).unwrap();
        assert!(x.iter().all(|v| v.abs() < 1e-12));
        assert_eq!(ab.n_absorbed(), 4);
    }

    #[test]
    fn two_way_rank_counts_components() {
        // Two disconnected blocks: levels 2 + 2, two components -> rank 2.
        let a = vec![0, 0, 1, 1];
        let b = vec![0, 0, 1, 1];
        let ab = Absorber::new(4, vec![a, b], None, AbsorbOptions::default());
        assert_eq!(ab.n_absorbed(), 2);
    }

    #[test]
    fn singleton_removal_is_iterative() {
        // Row 3 is a singleton in `a`; removing it makes row 2 a singleton in `b`.
        let a = vec![0, 0, 1, 2];
        let b = vec![0, 0, 1, 1];
        let keep = non_singletons(&[&a, &b], 4);
        assert_eq!(keep, vec![true, true, false, false]);
    }

    #[test]
    fn reports_non_convergence() {
        let a = vec![0, 0, 1, 1, 2, 2];
        let b = vec![0, 1, 1, 2, 2, 0];
        let opts = AbsorbOptions { tolerance: 1e-300, max_sweeps: 4 };
        let ab = Absorber::new(6, vec![a, b], None, opts);
        let mut x = vec![1.0, 5.0, 2.0, 7.0, 3.0, 0.5];
        assert!(matches!(ab.demean(&mut x), Err(Error::NonConvergence { sweeps: 4, .. })));
    }
}
