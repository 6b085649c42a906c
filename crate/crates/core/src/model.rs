//! Binary logistic regression fitted by iteratively reweighted least squares.
//!
//! The fit produces the MLE together with the working weights Ŵ, working
//! response Z and information matrix C = X′ŴX that every shrinkage estimator
//! downstream consumes.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{sym_eigen, SymMatrix, Tolerance};

/// Design matrix plus binary response.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: DVector<f64>,
    has_intercept: bool,
}

impl Dataset {
    /// Validates `n > m ≥ 1`, finiteness and a 0/1 response. When
    /// `has_intercept` is set the first column must be all ones.
    pub fn new(x: DMatrix<f64>, y: DVector<f64>, has_intercept: bool) -> Result<Self> {
        let (n, m) = x.shape();
        if m == 0 || n <= m {
            return Err(Error::InvalidDataset(format!(
                "need n > m >= 1, got n = {n}, m = {m}"
            )));
        }
        if y.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "design has {n} rows but response has {}",
                y.len()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset("non-finite design entry".into()));
        }
        if let Some(i) = y.iter().position(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::NonBinaryResponse {
                row: i + 1,
                value: y[i].to_string(),
            });
        }
        if has_intercept && x.column(0).iter().any(|&v| v != 1.0) {
            return Err(Error::InvalidDataset(
                "intercept flag set but column 1 is not constant 1".into(),
            ));
        }
        Ok(Dataset {
            x,
            y,
            has_intercept,
        })
    }

    /// Prepends a column of ones.
    pub fn with_intercept(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        let n = x.nrows();
        let x = x.insert_column(0, 1.0);
        debug_assert_eq!(x.nrows(), n);
        Self::new(x, y, true)
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn has_intercept(&self) -> bool {
        self.has_intercept
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn m(&self) -> usize {
        self.x.ncols()
    }

    /// Predictor columns, excluding the intercept if present.
    pub fn predictors(&self) -> DMatrix<f64> {
        if self.has_intercept {
            self.x.columns(1, self.m() - 1).clone_owned()
        } else {
            self.x.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iter: usize,
    /// Convergence threshold on max |Δβ|.
    pub tol: f64,
    /// π̂ is clamped into [prob_clip, 1 − prob_clip].
    pub prob_clip: f64,
    pub tolerance: Tolerance,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iter: 50,
            tol: 1e-8,
            prob_clip: 1e-6,
            tolerance: Tolerance::default(),
        }
    }
}

impl FitOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be positive".into()));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidParameter("tol must be positive".into()));
        }
        if !(self.prob_clip > 0.0 && self.prob_clip < 0.5) {
            return Err(Error::InvalidParameter(
                "prob_clip must lie in (0, 0.5)".into(),
            ));
        }
        Ok(())
    }
}

/// State of a finished IRLS run. `weights`, `working_response` and `info`
/// are evaluated at `beta_mle`.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedLogit {
    pub beta_mle: DVector<f64>,
    pub weights: DVector<f64>,
    pub working_response: DVector<f64>,
    /// C = X′ŴX.
    pub info: SymMatrix,
    pub iterations: usize,
    pub converged: bool,
    pub final_step: f64,
    /// Rows whose fitted probability sits on the clamp at `beta_mle`. Nonzero
    /// after convergence usually means separation: no finite MLE exists.
    pub clamped_rows: usize,
}

/// Linear prior knowledge `Hβ = h`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearRestriction {
    h_mat: DMatrix<f64>,
    h_vec: DVector<f64>,
}

impl LinearRestriction {
    /// Requires `1 ≤ q ≤ m` and full row rank of `H`.
    pub fn new(h_mat: DMatrix<f64>, h_vec: DVector<f64>) -> Result<Self> {
        let (q, m) = h_mat.shape();
        if q == 0 || q > m {
            return Err(Error::InvalidParameter(format!(
                "restriction needs 1 <= q <= m, got q = {q}, m = {m}"
            )));
        }
        if h_vec.len() != q {
            return Err(Error::DimensionMismatch(format!(
                "H has {q} rows but h has {} entries",
                h_vec.len()
            )));
        }
        if h_mat.iter().chain(h_vec.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix("non-finite restriction entry".into()));
        }
        let gram = SymMatrix::new(&h_mat * h_mat.transpose())?;
        if sym_eigen(&gram).rank(&Tolerance::default()) < q {
            return Err(Error::InvalidParameter(
                "restriction matrix H must have full row rank".into(),
            ));
        }
        Ok(LinearRestriction { h_mat, h_vec })
    }

    /// Homogeneous restriction `Hβ = 0`.
    pub fn homogeneous(h_mat: DMatrix<f64>) -> Result<Self> {
        let q = h_mat.nrows();
        Self::new(h_mat, DVector::zeros(q))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.h_mat
    }

    pub fn rhs(&self) -> &DVector<f64> {
        &self.h_vec
    }

    pub fn q(&self) -> usize {
        self.h_mat.nrows()
    }

    pub fn width(&self) -> usize {
        self.h_mat.ncols()
    }

    /// `Hβ − h`.
    pub fn residual(&self, beta: &DVector<f64>) -> Result<DVector<f64>> {
        if beta.len() != self.width() {
            return Err(Error::DimensionMismatch(format!(
                "restriction width {} against coefficient length {}",
                self.width(),
                beta.len()
            )));
        }
        Ok(&self.h_mat * beta - &self.h_vec)
    }
}

fn logistic(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// Working quantities at `beta`: W, Z and C = X′WX.
pub fn working_quantities(
    data: &Dataset,
    beta: &DVector<f64>,
    opts: &FitOptions,
) -> Result<(DVector<f64>, DVector<f64>, SymMatrix)> {
    if beta.len() != data.m() {
        return Err(Error::DimensionMismatch(format!(
            "coefficient length {} against {} columns",
            beta.len(),
            data.m()
        )));
    }
    if beta.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite coefficients".into()));
    }
    let eta = data.x() * beta;
    let lo = opts.prob_clip;
    let hi = 1.0 - opts.prob_clip;
    let n = data.n();
    let mut w = DVector::zeros(n);
    let mut z = DVector::zeros(n);
    for i in 0..n {
        let pi = logistic(eta[i]).clamp(lo, hi);
        let wi = pi * (1.0 - pi);
        w[i] = wi;
        z[i] = (pi / (1.0 - pi)).ln() + (data.y()[i] - pi) / wi;
    }
    let c = weighted_cross_product(data.x(), &w)?;
    Ok((w, z, c))
}

fn weighted_cross_product(x: &DMatrix<f64>, w: &DVector<f64>) -> Result<SymMatrix> {
    let mut xw = x.clone();
    for (mut row, wi) in xw.row_iter_mut().zip(w.iter()) {
        row *= *wi;
    }
    SymMatrix::new(x.transpose() * xw)
}

/// Maximum-likelihood fit by IRLS from β⁽⁰⁾ = 0.
///
/// Each step solves (X′WX)β = X′WZ with Z_i = logit(π̂_i) + (y_i − π̂_i)/ŵ_i.
pub fn irls_fit(data: &Dataset, opts: &FitOptions) -> Result<FittedLogit> {
    opts.validate()?;
    let m = data.m();
    let mut beta = DVector::zeros(m);
    let mut step = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iter {
        let (w, z, c) = working_quantities(data, &beta, opts)?;
        let rhs = data.x().transpose() * w.component_mul(&z);
        let chol = c
            .as_matrix()
            .clone()
            .cholesky()
            .ok_or(Error::SingularInformation)?;
        let next = chol.solve(&rhs);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularInformation);
        }
        step = (&next - &beta).amax();
        beta = next;
        iterations += 1;
        if step <= opts.tol {
            converged = true;
            break;
        }
    }

    let (weights, working_response, info) = working_quantities(data, &beta, opts)?;
    let spec = sym_eigen(&info);
    if spec.min_eigenvalue() <= spec.zero_cut(&opts.tolerance) {
        return Err(Error::SingularInformation);
    }
    let clamped_rows = (data.x() * &beta)
        .iter()
        .map(|&e| logistic(e))
        .filter(|&p| p <= opts.prob_clip || p >= 1.0 - opts.prob_clip)
        .count();
    let fit = FittedLogit {
        beta_mle: beta,
        weights,
        working_response,
        info,
        iterations,
        converged,
        final_step: step,
        clamped_rows,
    };
    if converged {
        Ok(fit)
    } else {
        Err(Error::NotConverged(Box::new(fit)))
    }
}

/// Log-likelihood Σ y_i η_i − log(1 + e^{η_i}) without clamping.
pub fn log_likelihood(data: &Dataset, beta: &DVector<f64>) -> f64 {
    let eta = data.x() * beta;
    eta.iter()
        .zip(data.y().iter())
        .map(|(&e, &y)| {
            let softplus = if e > 0.0 {
                e + (-e).exp().ln_1p()
            } else {
                e.exp().ln_1p()
            };
            y * e - softplus
        })
        .sum()
}
