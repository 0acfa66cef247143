//! Least squares by Householder QR with ordered collinearity screening, and
//! cluster-robust covariance pieces.

use nalgebra::{DMatrix, DVector};

/// Relative residual norm below which a column counts as collinear with
/// the columns before it.
pub const COLLINEAR_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub beta: DVector<f64>,
    /// `(X'X)^{-1}` over the kept columns.
    pub bread: DMatrix<f64>,
    pub kept: Vec<usize>,
    pub dropped: Vec<usize>,
}

/// Indices of columns that are not (numerically) spanned by earlier columns.
pub fn independent_columns(x: &DMatrix<f64>) -> (Vec<usize>, Vec<usize>) {
    independent_columns_above(x, 0.0)
}

/// As [`independent_columns`], but a column whose residual norm is at most
/// `floor` is also treated as collinear. Demeaned columns carry an absolute
/// error from the iterative projections; a remnant that small is noise.
pub fn independent_columns_above(x: &DMatrix<f64>, floor: f64) -> (Vec<usize>, Vec<usize>) {
    let n = x.nrows();
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let (mut kept, mut dropped) = (Vec::new(), Vec::new());
    for j in 0..x.ncols() {
        let col = x.column(j).into_owned();
        let norm = col.norm();
        if norm == 0.0 || !norm.is_finite() {
            dropped.push(j);
            continue;
        }
        let mut r = col.clone();
        // Two passes of modified Gram-Schmidt.
        for _ in 0..2 {
            for q in &basis {
                let c = q.dot(&r);
                r.axpy(-c, q, 1.0);
            }
        }
        let rn = r.norm();
        if rn <= COLLINEAR_TOL * norm || rn <= floor || n == 0 {
            dropped.push(j);
        } else {
            basis.push(r / rn);
            kept.push(j);
        }
    }
    (kept, dropped)
}

pub fn select_columns(x: &DMatrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows(), cols.len(), |i, j| x[(i, cols[j])])
}

/// Solves `min |y - X b|` on the independent columns of `X`.
pub fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> LeastSquares {
    least_squares_above(x, y, 0.0)
}

/// [`least_squares`] with the column screen of [`independent_columns_above`].
pub fn least_squares_above(x: &DMatrix<f64>, y: &DVector<f64>, floor: f64) -> LeastSquares {
    let (kept, dropped) = independent_columns_above(x, floor);
    let xk = select_columns(x, &kept);
    let p = kept.len();
    if p == 0 {
        return LeastSquares { beta: DVector::zeros(0), bread: DMatrix::zeros(0, 0), kept, dropped };
    }
    let qr = xk.qr();
    let r = qr.r();
    let qty = qr.q().transpose() * y;
    let beta = r.solve_upper_triangular(&qty).expect("independent columns give a nonsingular R");
    let rinv = r.solve_upper_triangular(&DMatrix::identity(p, p)).expect("nonsingular R");
    let bread = &rinv * rinv.transpose();
    LeastSquares { beta, bread, kept, dropped }
}

/// `sum_c (X_c' u_c)(X_c' u_c)'`, accumulated in row order within clusters and
/// in cluster-code order across clusters.
pub fn cluster_meat(x: &DMatrix<f64>, u: &DVector<f64>, clusters: &[usize], n_clusters: usize) -> DMatrix<f64> {
    let p = x.ncols();
    let mut scores = DMatrix::<f64>::zeros(n_clusters, p);
    for (i, &c) in clusters.iter().enumerate() {
        let ui = u[i];
        for j in 0..p {
            scores[(c, j)] += x[(i, j)] * ui;
        }
    }
    let mut meat = DMatrix::<f64>::zeros(p, p);
    for c in 0..n_clusters {
        for a in 0..p {
            let sa = scores[(c, a)];
            for b in 0..p {
                meat[(a, b)] += sa * scores[(c, b)];
            }
        }
    }
    meat
}

/// `B M B`, symmetrized.
pub fn sandwich(bread: &DMatrix<f64>, meat: &DMatrix<f64>) -> DMatrix<f64> {
    let v = bread * meat * bread;
    (&v + v.transpose()) * 0.5
}
