//! Small dense complex linear algebra.
//!
//! Everything here works on matrices of a handful of rows (the transmit
//! antenna count), so the routines favour clarity over blocking. The
//! Hermitian eigen-solver is nalgebra's; the pencil reduction, factorization
//! and bordered determinants are built on top of it.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
/// Dense complex matrix, column-major.
pub type ComplexMatrix = DMatrix<C64>;
pub type ComplexVector = DVector<C64>;

/// Absolute tolerance on `max |A - A^H|` accepted by [`HermitianMatrix::new`].
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Relative tolerance used to decide the numerical rank of a PSD matrix.
pub const RANK_TOL: f64 = 1e-10;

/// A square complex matrix equal to its conjugate transpose.
///
/// Construction symmetrizes the input, so the stored entries are exactly
/// Hermitian even when the caller's matrix carried rounding noise.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(ComplexMatrix);

impl HermitianMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        Self::with_tol(m, HERMITIAN_TOL)
    }

    pub fn with_tol(m: ComplexMatrix, tol: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "expected a square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("matrix entry".into()));
        }
        let adj = m.adjoint();
        let skew = max_abs(&(&m - &adj));
        if skew > tol {
            return Err(Error::NotHermitian(skew));
        }
        Ok(Self((&m + &adj).scale(0.5)))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(ComplexMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(ComplexMatrix::identity(dim, dim))
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let d = DVector::from_iterator(diag.len(), diag.iter().map(|&x| C64::new(x, 0.0)));
        Self(ComplexMatrix::from_diagonal(&d))
    }

    /// Builds a matrix from real row-major entries; panics if not symmetric.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        let m = ComplexMatrix::from_fn(n, n, |i, j| C64::new(rows[i][j], 0.0));
        Self::new(m).expect("real rows must form a symmetric matrix")
    }

    /// `v v^H`.
    pub fn outer(v: &ComplexVector) -> Self {
        let m = v * v.adjoint();
        Self((&m + m.adjoint()).scale(0.5))
    }

    /// Symmetrizes without checking; for matrices Hermitian by construction.
    pub(crate) fn from_parts(m: ComplexMatrix) -> Self {
        let adj = m.adjoint();
        Self((&m + &adj).scale(0.5))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.0)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self(&self.0 - &other.0)
    }

    pub fn scale(&self, c: f64) -> Self {
        Self(self.0.scale(c))
    }

    /// `I + c·self`.
    pub fn shifted_identity(&self, c: f64) -> Self {
        Self(ComplexMatrix::identity(self.dim(), self.dim()) + self.0.scale(c))
    }

    /// `v^H A v`, real for Hermitian `A`.
    pub fn quad_form(&self, v: &[C64]) -> f64 {
        quad_form(&self.0, v)
    }

    /// Eigenpairs sorted by descending eigenvalue, each vector phase-normalized.
    pub fn eigen(&self) -> Vec<EigenPair> {
        let n = self.dim();
        if n == 0 {
            return Vec::new();
        }
        let eig = SymmetricEigen::new(self.0.clone());
        let mut pairs: Vec<EigenPair> = (0..n)
            .map(|k| {
                let v = eig.eigenvectors.column(k).into_owned();
                EigenPair { value: eig.eigenvalues[k], vector: normalize_phase(v) }
            })
            .collect();
        // stable: ties keep the solver's order
        pairs.sort_by(|a, b| b.value.total_cmp(&a.value));
        pairs
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eigen().into_iter().map(|p| p.value).collect()
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues().last().copied().unwrap_or(0.0)
    }

    /// Principal square root of a PSD matrix; slightly negative eigenvalues
    /// from rounding are clipped to zero.
    pub fn psd_sqrt(&self) -> Result<ComplexMatrix> {
        let n = self.dim();
        let pairs = self.eigen();
        let scale = pairs.iter().map(|p| p.value.abs()).fold(0.0, f64::max);
        let mut out = ComplexMatrix::zeros(n, n);
        for p in &pairs {
            if p.value < -RANK_TOL * scale.max(1.0) {
                return Err(Error::NotPsd(p.value));
            }
            let s = p.value.max(0.0).sqrt();
            out += (&p.vector * p.vector.adjoint()).scale(s);
        }
        Ok(out)
    }

    /// Smallest eigenvalue is at least `-tol·max(1, |λ|max)`.
    pub fn is_psd(&self, tol: f64) -> bool {
        let ev = self.eigenvalues();
        let scale = ev.iter().map(|v| v.abs()).fold(1.0, f64::max);
        ev.last().is_none_or(|&v| v >= -tol * scale)
    }
}

/// An eigenvalue with its unit-norm eigenvector.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    pub vector: ComplexVector,
}

pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn quad_form(a: &ComplexMatrix, v: &[C64]) -> f64 {
    let n = v.len();
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..n {
        let mut col = C64::new(0.0, 0.0);
        for i in 0..n {
            col += v[i].conj() * a[(i, j)];
        }
        acc += col * v[j];
    }
    acc.re
}

/// Scales `v` to unit norm and rotates its phase so that the first entry of
/// largest magnitude is real and positive.
pub fn normalize_phase(v: ComplexVector) -> ComplexVector {
    let norm = v.norm();
    if norm == 0.0 {
        return v;
    }
    let v = v.unscale(norm);
    let peak = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let pivot = v
        .iter()
        .find(|z| z.norm() >= peak * (1.0 - 1e-12))
        .copied()
        .unwrap_or(C64::new(1.0, 0.0));
    let rot = pivot.conj() / pivot.norm();
    v.map(|z| z * rot)
}

/// Factor `K = T·T^H` with `T` of shape `dim × rank`.
///
/// Columns follow the eigenvalues of `K` in descending order; eigenvalues at
/// or below `rank_tol·λmax` are dropped.
pub fn psd_factor(k: &HermitianMatrix, rank_tol: f64) -> Result<ComplexMatrix> {
    let n = k.dim();
    let pairs = k.eigen();
    let scale = pairs.iter().map(|p| p.value.abs()).fold(0.0, f64::max);
    if let Some(p) = pairs.last() {
        if p.value < -rank_tol * scale {
            return Err(Error::NotPsd(p.value));
        }
    }
    let kept: Vec<&EigenPair> =
        pairs.iter().filter(|p| p.value > rank_tol * scale && p.value > 0.0).collect();
    let mut t = ComplexMatrix::zeros(n, kept.len());
    for (c, p) in kept.iter().enumerate() {
        t.set_column(c, &p.vector.scale(p.value.sqrt()));
    }
    Ok(t)
}

/// Largest generalized eigenpair of the pencil `(A, B)` with `B ≻ 0`.
///
/// Reduces to the ordinary problem `L⁻¹ A L⁻ᴴ` with `B = L Lᴴ`. The returned
/// vector maximizes `eᴴAe / eᴴBe` and is unit-norm and phase-normalized.
pub fn max_generalized_eig(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<EigenPair> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "pencil dims {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    if a.dim() == 0 {
        return Err(Error::DimensionMismatch("empty pencil".into()));
    }
    let chol = Cholesky::new(b.as_matrix().clone()).ok_or(Error::NotPd)?;
    let l = chol.l();
    let l_inv = l.clone().try_inverse().ok_or(Error::NotPd)?;
    let reduced = HermitianMatrix::from_parts(&l_inv * a.as_matrix() * l_inv.adjoint());
    let top = reduced.eigen().into_iter().next().expect("nonempty spectrum");
    let e = l_inv.adjoint() * top.vector;
    Ok(EigenPair { value: top.value, vector: normalize_phase(e) })
}

/// Maximizes `tr(A M)` over PSD `M` with `tr M ≤ 1`: the optimum is
/// `M = e eᴴ` with `e` the top eigenvector of `A`, and the value is `λmax(A)`.
/// For negative-definite `A` the returned value is negative; callers clamp.
pub fn trace_max_unit_rank(a: &HermitianMatrix) -> Result<EigenPair> {
    a.eigen()
        .into_iter()
        .next()
        .ok_or_else(|| Error::DimensionMismatch("empty matrix".into()))
}

/// Determinant of `[[P, c], [cᴴ, d]]` via the Schur complement.
pub fn bordered_det(topleft: &HermitianMatrix, col: &ComplexVector, corner: f64) -> Result<f64> {
    let schur = BorderedSchur::new(topleft)?;
    Ok(schur.log_det_topleft().exp() * schur.schur_complement(col.as_slice(), corner))
}

/// Precomputed Cholesky factor of the top-left block of a bordered
/// Hermitian matrix, for evaluating many borders against the same block.
#[derive(Debug, Clone)]
pub struct BorderedSchur {
    inverse: ComplexMatrix,
    log_det_topleft: f64,
}

impl BorderedSchur {
    pub fn new(topleft: &HermitianMatrix) -> Result<Self> {
        let n = topleft.dim();
        if n == 0 {
            return Ok(Self { inverse: ComplexMatrix::zeros(0, 0), log_det_topleft: 0.0 });
        }
        let chol: Cholesky<C64, Dyn> =
            Cholesky::new(topleft.as_matrix().clone()).ok_or(Error::Singular)?;
        let log_det = chol.l().diagonal().iter().map(|z| 2.0 * z.re.ln()).sum();
        let inverse = HermitianMatrix::from_parts(chol.inverse()).into_matrix();
        Ok(Self { inverse, log_det_topleft: log_det })
    }

    pub fn dim(&self) -> usize {
        self.inverse.nrows()
    }

    /// Inverse of the top-left block.
    pub fn inverse(&self) -> &ComplexMatrix {
        &self.inverse
    }

    pub fn log_det_topleft(&self) -> f64 {
        self.log_det_topleft
    }

    /// `d - cᴴ P⁻¹ c`.
    pub fn schur_complement(&self, col: &[C64], corner: f64) -> f64 {
        corner - quad_form(&self.inverse, col)
    }

    /// Natural log of the full bordered determinant.
    pub fn log_det(&self, col: &[C64], corner: f64) -> Result<f64> {
        let s = self.schur_complement(col, corner);
        if s <= 0.0 || !s.is_finite() {
            return Err(Error::Singular);
        }
        Ok(self.log_det_topleft + s.ln())
    }
}

/// Determinant by LU, used where a dense reference is wanted.
pub fn dense_det(m: &ComplexMatrix) -> C64 {
    if m.nrows() == 0 {
        return C64::new(1.0, 0.0);
    }
    m.clone().lu().determinant()
}
