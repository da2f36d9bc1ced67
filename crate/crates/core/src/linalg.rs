//! Dense linear-algebra helpers shared by the realization routines.
//!
//! Every rank decision in the crate goes through [`numeric_rank`] so the
//! same relative threshold is applied to Hankel matrices, extended
//! reachability/observability matrices and pseudo-inverses.

use nalgebra::{DMatrix, DVector};

/// Default relative tolerance for rank decisions and pseudo-inverses.
pub const DEFAULT_REL_TOL: f64 = 1e-9;

/// Thin SVD with singular values sorted in decreasing order.
#[derive(Debug, Clone)]
pub struct SortedSvd {
    pub u: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    pub v_t: DMatrix<f64>,
}

impl SortedSvd {
    pub fn new(m: &DMatrix<f64>) -> Self {
        let (rows, cols) = m.shape();
        let k = rows.min(cols);
        if k == 0 {
            return SortedSvd {
                u: DMatrix::zeros(rows, 0),
                singular_values: DVector::zeros(0),
                v_t: DMatrix::zeros(0, cols),
            };
        }
        // nalgebra's SVD can return factors that do not reproduce
        // rank-deficient inputs, so the decomposition is delegated to faer.
        let fm = faer::Mat::<f64>::from_fn(rows, cols, |i, j| m[(i, j)]);
        let svd = fm.thin_svd().expect("SVD of a finite matrix converges");
        let (fu, fs, fv) = (svd.U(), svd.S().column_vector(), svd.V());
        let u = DMatrix::from_fn(rows, k, |i, j| fu[(i, j)]);
        let s = DVector::from_fn(k, |i, _| fs[i]);
        let v_t = DMatrix::from_fn(k, cols, |i, j| fv[(j, i)]);

        let mut order: Vec<usize> = (0..k).collect();
        // stable sort keeps ties in the order the decomposition produced
        order.sort_by(|&i, &j| s[j].partial_cmp(&s[i]).unwrap_or(std::cmp::Ordering::Equal));

        let mut su = DMatrix::zeros(rows, k);
        let mut sv = DMatrix::zeros(k, cols);
        let mut ss = DVector::zeros(k);
        for (dst, &src) in order.iter().enumerate() {
            su.set_column(dst, &u.column(src));
            sv.set_row(dst, &v_t.row(src));
            ss[dst] = s[src];
        }
        SortedSvd {
            u: su,
            singular_values: ss,
            v_t: sv,
        }
    }

    /// Number of singular values above `rel_tol * sigma_max`.
    pub fn rank(&self, rel_tol: f64) -> usize {
        rank_of_values(self.singular_values.as_slice(), rel_tol)
    }
}

fn rank_of_values(s: &[f64], rel_tol: f64) -> usize {
    let max = s.first().copied().unwrap_or(0.0);
    if max <= 0.0 || !max.is_finite() {
        return 0;
    }
    s.iter().take_while(|&&v| v > rel_tol * max).count()
}

/// Numerical rank at a relative tolerance, with the sorted singular values.
///
/// `rank = #{ sigma_i > rel_tol * sigma_max }`; a zero matrix has rank 0.
pub fn numeric_rank(m: &DMatrix<f64>, rel_tol: f64) -> (usize, Vec<f64>) {
    let svd = SortedSvd::new(m);
    let s: Vec<f64> = svd.singular_values.iter().copied().collect();
    (rank_of_values(&s, rel_tol), s)
}

/// Moore-Penrose pseudo-inverse, discarding singular values at or below
/// `rel_tol * sigma_max`.
pub fn pinv(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let (rows, cols) = m.shape();
    let svd = SortedSvd::new(m);
    let r = svd.rank(rel_tol);
    let mut out = DMatrix::zeros(cols, rows);
    for i in 0..r {
        let inv = 1.0 / svd.singular_values[i];
        out += svd.v_t.row(i).transpose() * svd.u.column(i).transpose() * inv;
    }
    out
}

/// Orthonormal basis of the column space of `m` together with an
/// orthonormal basis of its orthogonal complement.
///
/// Both come from the full set of left singular vectors, so
/// `[basis | complement]` is an orthogonal `rows x rows` matrix.
pub fn range_and_complement(m: &DMatrix<f64>, rel_tol: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    split_range(m, |s| rank_of_values(s, rel_tol))
}

/// As [`range_and_complement`], but keeping singular values above the
/// absolute threshold `abs_tol`. For matrices whose natural scale is one,
/// such as products of orthonormal bases, where a relative test would
/// promote pure rounding noise to rank one.
pub fn range_and_complement_abs(m: &DMatrix<f64>, abs_tol: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    split_range(m, |s| s.iter().take_while(|&&v| v > abs_tol).count())
}

fn split_range(m: &DMatrix<f64>, rank: impl Fn(&[f64]) -> usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let (rows, cols) = m.shape();
    if rows == 0 {
        return (DMatrix::zeros(0, 0), DMatrix::zeros(0, 0));
    }
    // zero-pad to at least `rows` columns so the SVD returns a full U
    let padded = if cols < rows {
        let mut p = DMatrix::zeros(rows, rows);
        p.view_mut((0, 0), (rows, cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = SortedSvd::new(&padded);
    let r = rank(svd.singular_values.as_slice());
    let basis = svd.u.columns(0, r).into_owned();
    let complement = svd.u.columns(r, rows - r).into_owned();
    (basis, complement)
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Horizontal concatenation of equally tall blocks.
pub fn hstack(blocks: &[&DMatrix<f64>], rows: usize) -> DMatrix<f64> {
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut c = 0;
    for b in blocks {
        out.view_mut((0, c), (rows, b.ncols())).copy_from(*b);
        c += b.ncols();
    }
    out
}

/// Vertical concatenation of equally wide blocks.
pub fn vstack(blocks: &[&DMatrix<f64>], cols: usize) -> DMatrix<f64> {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut r = 0;
    for b in blocks {
        out.view_mut((r, 0), (b.nrows(), cols)).copy_from(*b);
        r += b.nrows();
    }
    out
}
