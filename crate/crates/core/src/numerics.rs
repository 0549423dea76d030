//! Dense linear-algebra kernel.
//!
//! Everything here works on small dense matrices (tens of rows at most), so
//! rank decisions go through a singular-value decomposition rather than a
//! pivoted factorization.

use faer::Mat;
use nalgebra::{DMatrix, DVector};

use crate::error::NumericsError;

/// Relative singular-value cutoff used throughout the crate.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Singular-value decomposition, singular values in descending order.
///
/// The decomposition itself runs through faer, whose SVD stays accurate on
/// exactly rank-deficient inputs.
struct Svd {
    u: DMatrix<f64>,
    singular: DVector<f64>,
    v: DMatrix<f64>,
}

impl Svd {
    /// Thin (`min(rows, cols)` triplets), or with a full `cols × cols` right
    /// basis when `full_v` is set.
    fn new(a: &DMatrix<f64>, full_v: bool) -> Self {
        let (rows, cols) = a.shape();
        let m = Mat::<f64>::from_fn(rows, cols, |i, j| a[(i, j)]);
        let to_na = |x: faer::MatRef<'_, f64>| DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)]);
        let (u, s, v) = if full_v {
            let svd = m.svd().expect("SVD of a finite matrix");
            (to_na(svd.U()), svd.S().column_vector().to_owned(), to_na(svd.V()))
        } else {
            let svd = m.thin_svd().expect("SVD of a finite matrix");
            (to_na(svd.U()), svd.S().column_vector().to_owned(), to_na(svd.V()))
        };
        let k = rows.min(cols);
        Self {
            u: u.columns(0, k).into_owned(),
            singular: DVector::from_fn(k, |i, _| s[i]),
            v,
        }
    }

    fn cutoff(&self, tol: f64) -> f64 {
        tol * self.singular.iter().copied().fold(0.0, f64::max)
    }

    fn rank(&self, tol: f64) -> usize {
        let cut = self.cutoff(tol);
        self.singular.iter().filter(|&&s| s > cut && s > 0.0).count()
    }
}

/// Number of singular values above `tol · σ_max`.
pub fn numerical_rank(a: &DMatrix<f64>, tol: f64) -> usize {
    if a.is_empty() {
        return 0;
    }
    Svd::new(a, false).rank(tol)
}

/// Moore-Penrose pseudoinverse. Singular values at or below `tol · σ_max` are
/// treated as zero, so the zero matrix maps to the zero matrix of transposed
/// shape.
pub fn pinv(a: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let (rows, cols) = a.shape();
    if a.is_empty() {
        return DMatrix::zeros(cols, rows);
    }
    let svd = Svd::new(a, false);
    let cut = svd.cutoff(tol);
    let mut out = DMatrix::zeros(cols, rows);
    for (k, &s) in svd.singular.iter().enumerate() {
        if s <= cut || s == 0.0 {
            continue;
        }
        let v = svd.v.column(k);
        let u = svd.u.column(k);
        out.ger(1.0 / s, &v, &u, 1.0);
    }
    out
}

/// Orthonormal basis of `ker(A)`, one column per null direction.
///
/// A matrix of full column rank yields a `cols × 0` matrix.
pub fn nullspace_basis(a: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let cols = a.ncols();
    if a.nrows() == 0 || a.iter().all(|&x| x == 0.0) {
        return DMatrix::identity(cols, cols);
    }
    let svd = Svd::new(a, true);
    let rank = svd.rank(tol);
    svd.v.columns(rank, cols - rank).into_owned()
}

/// Least-squares projection of `v` onto the column span of `mb`:
/// `Mb (MbᵀMb)⁻¹ Mbᵀ v`.
///
/// An empty basis projects everything to zero. When the columns are already
/// orthonormal the Gram matrix is the identity and the solve is skipped.
pub fn project_onto_columns(
    mb: &DMatrix<f64>,
    v: &DVector<f64>,
) -> Result<DVector<f64>, NumericsError> {
    if mb.nrows() != v.len() {
        return Err(NumericsError::DimensionMismatch {
            expected: mb.nrows(),
            found: v.len(),
        });
    }
    if mb.ncols() == 0 {
        return Ok(DVector::zeros(v.len()));
    }
    let coords = mb.tr_mul(v);
    let gram = mb.tr_mul(mb);
    let identity = DMatrix::<f64>::identity(gram.nrows(), gram.ncols());
    if (&gram - &identity).amax() <= 1e-12 {
        return Ok(mb * coords);
    }
    let chol = gram.cholesky().ok_or(NumericsError::SingularGram)?;
    let pivots = chol.l_dirty().diagonal();
    let (lo, hi) = pivots
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &d| (lo.min(d * d), hi.max(d * d)));
    if lo <= 1e-12 * hi {
        return Err(NumericsError::SingularGram);
    }
    let x = chol.solve(&coords);
    if x.iter().any(|c| !c.is_finite()) {
        return Err(NumericsError::SingularGram);
    }
    Ok(mb * x)
}

/// Infinity norm of a matrix: largest absolute row sum.
pub fn norm_inf(a: &DMatrix<f64>) -> f64 {
    a.row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}
