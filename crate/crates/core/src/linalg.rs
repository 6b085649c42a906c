//! Dense symmetric linear algebra: spectral decomposition, Moore–Penrose
//! inverse, positive-semidefiniteness and range tests.
//!
//! Every generalized inverse in the crate is the Moore–Penrose inverse. The
//! λ_max(N M⁻) test does not depend on which g-inverse is used once
//! ℜ(N) ⊆ ℜ(M), so nothing else is offered.

use std::ops::Deref;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Numerical thresholds shared by the rank, range and PSD tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    /// Eigen/singular values with |λ| ≤ rank_cut · max|λ| count as zero.
    pub rank_cut: f64,
    /// Absolute slack for nonnegativity tests: λ_min ≥ −psd_slack.
    pub psd_slack: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            rank_cut: 1e-10,
            psd_slack: 1e-8,
        }
    }
}

impl Tolerance {
    pub fn new(rank_cut: f64, psd_slack: f64) -> Result<Self> {
        if !(rank_cut > 0.0 && rank_cut < 1e-3) {
            return Err(Error::InvalidParameter(format!(
                "rank_cut must lie in (0, 1e-3), got {rank_cut}"
            )));
        }
        if !(psd_slack > 0.0 && psd_slack.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "psd_slack must be positive, got {psd_slack}"
            )));
        }
        Ok(Tolerance {
            rank_cut,
            psd_slack,
        })
    }
}

/// A finite, exactly symmetric square matrix.
///
/// Construction symmetrizes the input as (M + M′)/2, since products such as
/// X′WX drift from exact symmetry in floating point.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "symmetric matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix("non-finite entry".into()));
        }
        Ok(Self::symmetrized(m))
    }

    fn symmetrized(mut s: DMatrix<f64>) -> Self {
        let n = s.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (s[(i, j)] + s[(j, i)]);
                s[(i, j)] = avg;
                s[(j, i)] = avg;
            }
        }
        SymMatrix(s)
    }

    /// Builds from a row-major slice of length `dim * dim`.
    pub fn from_row_slice(dim: usize, values: &[f64]) -> Result<Self> {
        if values.len() != dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                values.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(dim, dim, values))
    }

    pub fn identity(dim: usize) -> Self {
        SymMatrix(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        SymMatrix(DMatrix::zeros(dim, dim))
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    /// `v v′`.
    pub fn outer(v: &DVector<f64>) -> Result<Self> {
        Self::new(v * v.transpose())
    }

    /// `B M B′` for an arbitrary conformable `B`.
    pub fn congruence(&self, b: &DMatrix<f64>) -> Result<Self> {
        if b.ncols() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "congruence needs {} columns, got {}",
                self.dim(),
                b.ncols()
            )));
        }
        Self::new(b * &self.0 * b.transpose())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn add(&self, other: &SymMatrix) -> Result<Self> {
        self.check_same_dim(other)?;
        Ok(SymMatrix(&self.0 + &other.0))
    }

    pub fn sub(&self, other: &SymMatrix) -> Result<Self> {
        self.check_same_dim(other)?;
        Ok(SymMatrix(&self.0 - &other.0))
    }

    pub fn scale(&self, factor: f64) -> Result<Self> {
        Self::new(&self.0 * factor)
    }

    fn check_same_dim(&self, other: &SymMatrix) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.dim(),
                self.dim(),
                other.dim(),
                other.dim()
            )));
        }
        Ok(())
    }
}

impl Deref for SymMatrix {
    type Target = DMatrix<f64>;

    fn deref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// Eigenvalues in descending order with the matching orthonormal eigenvectors
/// as the columns of `basis`.
#[derive(Debug, Clone)]
pub struct SpectralDecomp {
    pub eigenvalues: DVector<f64>,
    pub basis: DMatrix<f64>,
}

impl SpectralDecomp {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.get(0).copied().unwrap_or(0.0)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().next_back().copied().unwrap_or(0.0)
    }

    /// Largest absolute eigenvalue, the spectral norm of the decomposed matrix.
    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues
            .iter()
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    /// Threshold below which an eigenvalue counts as zero.
    pub fn zero_cut(&self, tol: &Tolerance) -> f64 {
        tol.rank_cut * self.spectral_radius()
    }

    pub fn rank(&self, tol: &Tolerance) -> usize {
        let cut = self.zero_cut(tol);
        self.eigenvalues.iter().filter(|v| v.abs() > cut).count()
    }

    /// `T f(Λ) T′`.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> SymMatrix {
        let n = self.dim();
        let mut scaled = self.basis.clone();
        for j in 0..n {
            let w = f(self.eigenvalues[j]);
            scaled.column_mut(j).scale_mut(w);
        }
        SymMatrix::symmetrized(&scaled * self.basis.transpose())
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.map(|l| l)
    }

    /// Columns of `basis` whose eigenvalues are nonzero at the tolerance.
    pub fn range_basis(&self, tol: &Tolerance) -> DMatrix<f64> {
        let cut = self.zero_cut(tol);
        let cols: Vec<usize> = (0..self.dim())
            .filter(|&j| self.eigenvalues[j].abs() > cut)
            .collect();
        self.basis.select_columns(cols.iter())
    }

    /// Inverse when every eigenvalue is strictly positive at the tolerance.
    pub fn pd_inverse(&self, tol: &Tolerance) -> Option<SymMatrix> {
        if self.dim() == 0 || self.min_eigenvalue() <= self.zero_cut(tol) {
            return None;
        }
        Some(self.map(|l| 1.0 / l))
    }
}

pub fn sym_eigen(m: &SymMatrix) -> SpectralDecomp {
    let eig = SymmetricEigen::new(m.as_matrix().clone());
    let n = m.dim();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let basis = eig.eigenvectors.select_columns(order.iter());
    SpectralDecomp { eigenvalues, basis }
}

pub fn moore_penrose(m: &SymMatrix, tol: &Tolerance) -> SymMatrix {
    let spec = sym_eigen(m);
    let cut = spec.zero_cut(tol);
    spec.map(|l| if l.abs() > cut { 1.0 / l } else { 0.0 })
}

/// Outcome of a nonnegative-definiteness test, with the smallest eigenvalue
/// as witness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsdCheck {
    pub is_psd: bool,
    pub min_eigenvalue: f64,
}

pub fn is_psd(m: &SymMatrix, tol: &Tolerance) -> PsdCheck {
    let min_eigenvalue = if m.dim() == 0 {
        0.0
    } else {
        sym_eigen(m).min_eigenvalue()
    };
    PsdCheck {
        is_psd: min_eigenvalue >= -tol.psd_slack,
        min_eigenvalue,
    }
}

pub fn numerical_rank(m: &SymMatrix, tol: &Tolerance) -> usize {
    sym_eigen(m).rank(tol)
}

fn range_residual(v: &DVector<f64>, range: &DMatrix<f64>) -> f64 {
    if range.ncols() == 0 {
        return v.norm();
    }
    let coeffs = range.transpose() * v;
    (v - range * coeffs).norm()
}

/// `v ∈ ℜ(M)`: true iff ‖(I − MM⁺)v‖ ≤ rank_cut · ‖v‖.
pub fn in_range(v: &DVector<f64>, m: &SymMatrix, tol: &Tolerance) -> Result<bool> {
    if v.len() != m.dim() {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} against {}x{} matrix",
            v.len(),
            m.dim(),
            m.dim()
        )));
    }
    let norm = v.norm();
    if norm == 0.0 {
        return Ok(true);
    }
    let range = sym_eigen(m).range_basis(tol);
    Ok(range_residual(v, &range) <= tol.rank_cut * norm)
}

/// `ℜ(N) ⊆ ℜ(M)`, tested column by column. Column residuals are measured
/// against ‖N‖_F so that columns which vanish analytically are not judged on
/// their rounding noise.
pub fn range_contains(n: &SymMatrix, m: &SymMatrix, tol: &Tolerance) -> Result<bool> {
    if n.dim() != m.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            n.dim(),
            n.dim(),
            m.dim(),
            m.dim()
        )));
    }
    let scale = n.norm();
    if scale == 0.0 {
        return Ok(true);
    }
    let range = sym_eigen(m).range_basis(tol);
    let limit = tol.rank_cut * scale;
    Ok(n.column_iter()
        .all(|col| range_residual(&col.clone_owned(), &range) <= limit))
}

/// λ_max(N M⁺) for PSD `N`, `M`.
///
/// Computed as λ_max of the symmetric matrix (M⁺)^½ N (M⁺)^½, which shares
/// the nonzero spectrum of N M⁺.
pub fn lambda_max_ratio(n: &SymMatrix, m: &SymMatrix, tol: &Tolerance) -> Result<f64> {
    if n.dim() != m.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            n.dim(),
            n.dim(),
            m.dim(),
            m.dim()
        )));
    }
    for mat in [n, m] {
        let check = is_psd(mat, tol);
        if !check.is_psd {
            return Err(Error::NotPsd {
                min_eigenvalue: check.min_eigenvalue,
            });
        }
    }
    let spec = sym_eigen(m);
    let cut = spec.zero_cut(tol);
    let half = spec.map(|l| if l > cut { 1.0 / l.sqrt() } else { 0.0 });
    let sandwiched = n.congruence(half.as_matrix())?;
    Ok(sym_eigen(&sandwiched).max_eigenvalue())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    #[test]
    fn eigen_of_identity_and_diagonal() {
        let spec = sym_eigen(&SymMatrix::identity(3));
        assert_eq!(spec.eigenvalues.as_slice(), &[1.0, 1.0, 1.0]);

        let spec = sym_eigen(&SymMatrix::from_diagonal(&[1.0, 4.0]).unwrap());
        assert_eq!(spec.eigenvalues.as_slice(), &[4.0, 1.0]);
        // basis is a signed permutation of the axes
        assert_abs_diff_eq!(spec.basis[(1, 0)].abs(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(spec.basis[(0, 1)].abs(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn eigen_of_two_by_two() {
        // characteristic polynomial (2-λ)² - 1 = 0 → λ = 3, 1
        let m = SymMatrix::from_row_slice(2, &[2.0, 1.0, 1.0, 2.0]).unwrap();
        let spec = sym_eigen(&m);
        assert_abs_diff_eq!(spec.eigenvalues[0], 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(spec.eigenvalues[1], 1.0, epsilon = 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v0 = spec.basis.column(0);
        let v1 = spec.basis.column(1);
        assert_abs_diff_eq!((v0[0] * h + v0[1] * h).abs(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!((v1[0] * h - v1[1] * h).abs(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn construction_symmetrizes_and_rejects_nan() {
        let m = SymMatrix::new(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 4.0, 1.0])).unwrap();
        assert_eq!(m[(0, 1)], 3.0);
        assert_eq!(m[(1, 0)], 3.0);
        assert!(matches!(
            SymMatrix::new(DMatrix::from_row_slice(1, 1, &[f64::NAN])),
            Err(Error::InvalidMatrix(_))
        ));
        assert!(matches!(
            SymMatrix::new(DMatrix::zeros(2, 3)),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn pseudo_inverse_examples() {
        let p = moore_penrose(&SymMatrix::from_diagonal(&[2.0, 0.0]).unwrap(), &tol());
        assert_abs_diff_eq!(p[(0, 0)], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p[(1, 1)], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p[(0, 1)], 0.0, epsilon = 1e-15);

        let p = moore_penrose(&SymMatrix::identity(3), &tol());
        assert_abs_diff_eq!(*p.as_matrix(), DMatrix::identity(3, 3), epsilon = 1e-15);

        // (vv′)⁺ = vv′ / ‖v‖⁴ = vv′/4 for v = (1,1)′
        let v = DVector::from_column_slice(&[1.0, 1.0]);
        let p = moore_penrose(&SymMatrix::outer(&v).unwrap(), &tol());
        for x in p.iter() {
            assert_abs_diff_eq!(*x, 0.25, epsilon = 1e-14);
        }

        let p = moore_penrose(&SymMatrix::zeros(2), &tol());
        assert!(p.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn psd_examples() {
        let c = is_psd(&SymMatrix::identity(2), &tol());
        assert!(c.is_psd);
        assert_abs_diff_eq!(c.min_eigenvalue, 1.0, epsilon = 1e-15);

        let c = is_psd(&SymMatrix::from_diagonal(&[1.0, -0.5]).unwrap(), &tol());
        assert!(!c.is_psd);
        assert_abs_diff_eq!(c.min_eigenvalue, -0.5, epsilon = 1e-15);

        let c = is_psd(
            &SymMatrix::from_row_slice(2, &[1.0, 2.0, 2.0, 1.0]).unwrap(),
            &tol(),
        );
        assert!(!c.is_psd);
        assert_abs_diff_eq!(c.min_eigenvalue, -1.0, epsilon = 1e-14);
    }

    #[test]
    fn range_examples() {
        let m = SymMatrix::from_diagonal(&[1.0, 0.0]).unwrap();
        let e1 = DVector::from_column_slice(&[1.0, 0.0]);
        let e2 = DVector::from_column_slice(&[0.0, 1.0]);
        assert!(in_range(&e1, &m, &tol()).unwrap());
        assert!(!in_range(&e2, &m, &tol()).unwrap());
        assert!(in_range(&DVector::zeros(2), &SymMatrix::zeros(2), &tol()).unwrap());

        let v = DVector::from_column_slice(&[1.0, 1.0]);
        let vv = SymMatrix::outer(&v).unwrap();
        assert!(in_range(&v, &vv, &tol()).unwrap());
        assert!(matches!(
            in_range(&DVector::zeros(3), &vv, &tol()),
            Err(Error::DimensionMismatch(_))
        ));

        assert!(range_contains(&vv.scale(0.5).unwrap(), &vv, &tol()).unwrap());
        assert!(!range_contains(&SymMatrix::identity(2), &vv, &tol()).unwrap());
    }

    #[test]
    fn lambda_max_ratio_examples() {
        let i = SymMatrix::identity(3);
        let r = lambda_max_ratio(&i.scale(0.5).unwrap(), &i, &tol()).unwrap();
        assert_abs_diff_eq!(r, 0.5, epsilon = 1e-14);

        let m = SymMatrix::from_row_slice(2, &[3.0, 1.0, 1.0, 2.0]).unwrap();
        assert_abs_diff_eq!(
            lambda_max_ratio(&m, &m, &tol()).unwrap(),
            1.0,
            epsilon = 1e-13
        );

        let n = SymMatrix::from_diagonal(&[1.0, 0.0]).unwrap();
        let m = SymMatrix::from_diagonal(&[2.0, 3.0]).unwrap();
        assert_abs_diff_eq!(
            lambda_max_ratio(&n, &m, &tol()).unwrap(),
            0.5,
            epsilon = 1e-14
        );

        let bad = SymMatrix::from_diagonal(&[1.0, -1.0]).unwrap();
        assert!(matches!(
            lambda_max_ratio(&bad, &m, &tol()),
            Err(Error::NotPsd { .. })
        ));
    }

    #[test]
    fn tolerance_validation() {
        assert!(Tolerance::new(1e-10, 1e-8).is_ok());
        assert!(Tolerance::new(0.0, 1e-8).is_err());
        assert!(Tolerance::new(1e-2, 1e-8).is_err());
        assert!(Tolerance::new(1e-10, -1.0).is_err());
    }
}
