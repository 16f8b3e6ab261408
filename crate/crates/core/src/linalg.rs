//! Small dense-matrix helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

/// `[a | b]`.
pub fn hcat(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let rows = a.nrows().max(b.nrows());
    debug_assert!(a.ncols() == 0 || b.ncols() == 0 || a.nrows() == b.nrows());
    let mut out = DMatrix::zeros(rows, a.ncols() + b.ncols());
    if a.ncols() > 0 {
        out.view_mut((0, 0), (a.nrows(), a.ncols())).copy_from(a);
    }
    if b.ncols() > 0 {
        out.view_mut((0, a.ncols()), (b.nrows(), b.ncols())).copy_from(b);
    }
    out
}

/// `[a; b]`.
pub fn vcat(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let cols = a.ncols().max(b.ncols());
    let mut out = DMatrix::zeros(a.nrows() + b.nrows(), cols);
    if a.nrows() > 0 {
        out.view_mut((0, 0), (a.nrows(), a.ncols())).copy_from(a);
    }
    if b.nrows() > 0 {
        out.view_mut((a.nrows(), 0), (b.nrows(), b.ncols())).copy_from(b);
    }
    out
}

pub fn vcat_vec(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(a.len() + b.len());
    out.rows_mut(0, a.len()).copy_from(a);
    out.rows_mut(a.len(), b.len()).copy_from(b);
    out
}

/// `diag(a, b)`.
pub fn block_diag(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((a.nrows(), a.ncols()), b.shape()).copy_from(b);
    out
}

pub fn diag(v: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_diagonal(v)
}

/// Row-wise sums of absolute values, `|M| 1`.
pub fn abs_row_sums(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(m.nrows(), m.row_iter().map(|r| r.iter().map(|v| v.abs()).sum()))
}

pub fn all_finite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|v| v.is_finite())
}

pub fn all_finite_vec(v: &DVector<f64>) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Columns of `m` whose largest entry magnitude exceeds `tol`.
pub fn nonzero_columns(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let keep: alloc::vec::Vec<usize> = (0..m.ncols()).filter(|&j| m.column(j).amax() > tol).collect();
    m.select_columns(keep.iter())
}
