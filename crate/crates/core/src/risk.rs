//! Exact bias, covariance and matrix mean squared error of each estimator at
//! a known truth (C, H, h, β).
//!
//! Under the linearized model β̂_MLE ~ (β, C⁻¹) every estimator is an affine
//! map of β̂_MLE, so MMSE = Cov + bias·bias′ and MSE = tr(MMSE) are exact:
//!
//! | kind  | covariance  | bias                      |
//! |-------|-------------|---------------------------|
//! | MLE   | C⁻¹         | 0                         |
//! | RMLE  | ACA         | r                         |
//! | LE    | F C⁻¹ F     | (F − I)β                  |
//! | RLE   | F A F       | (F − I)β + F r            |
//! | AULE  | L C⁻¹ L     | (L − I)β                  |
//! | RAULE | L A L       | (L − I)β + L r            |
//!
//! with A = C⁻¹ − C⁻¹H′(HC⁻¹H′)⁻¹HC⁻¹ and r = −C⁻¹H′(HC⁻¹H′)⁻¹(Hβ − h), which
//! vanishes when the truth satisfies the restriction. The LE and RLE rows
//! follow from the same decomposition; they are derived here rather than
//! quoted from the literature.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::estimators::{EstimatorKind, EstimatorSpec, InfoSpectrum};
use crate::linalg::{SymMatrix, Tolerance};
use crate::model::LinearRestriction;

/// ‖Hβ − h‖ above which the truth is reported as violating the restriction.
pub const RESTRICTION_VIOLATION_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct RiskReport {
    pub spec: EstimatorSpec,
    pub cov: SymMatrix,
    pub bias: DVector<f64>,
    pub mmse: SymMatrix,
    pub mse: f64,
    /// Set when the truth violates the restriction and the estimator uses it.
    pub restriction_violated: bool,
}

/// A fixed truth at which risks are evaluated. The restricted dispersion
/// matrix A is computed once on construction.
#[derive(Debug, Clone)]
pub struct RiskScenario {
    spectrum: InfoSpectrum,
    restriction: Option<LinearRestriction>,
    beta_true: DVector<f64>,
    a: Option<SymMatrix>,
    restriction_bias: Option<DVector<f64>>,
    violated: bool,
}

impl RiskScenario {
    pub fn new(
        info: SymMatrix,
        restriction: Option<LinearRestriction>,
        beta_true: DVector<f64>,
    ) -> Result<Self> {
        Self::with_tolerance(info, restriction, beta_true, &Tolerance::default())
    }

    pub fn with_tolerance(
        info: SymMatrix,
        restriction: Option<LinearRestriction>,
        beta_true: DVector<f64>,
        tol: &Tolerance,
    ) -> Result<Self> {
        let m = info.dim();
        if beta_true.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "true coefficients have length {} against {m}x{m} information",
                beta_true.len()
            )));
        }
        if beta_true.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "non-finite true coefficients".into(),
            ));
        }
        let spectrum = InfoSpectrum::new(&info, tol)?;
        let (a, restriction_bias, violated) = match &restriction {
            Some(r) => {
                let a = restricted_dispersion(&spectrum, r)?;
                let resid = r.residual(&beta_true)?;
                let violated = resid.norm() > RESTRICTION_VIOLATION_TOL;
                let bias = if violated {
                    -(spectrum.restriction_correction(r)? * resid)
                } else {
                    DVector::zeros(m)
                };
                (Some(a), Some(bias), violated)
            }
            None => (None, None, false),
        };
        Ok(RiskScenario {
            spectrum,
            restriction,
            beta_true,
            a,
            restriction_bias,
            violated,
        })
    }

    pub fn dim(&self) -> usize {
        self.spectrum.dim()
    }

    pub fn info(&self) -> &SymMatrix {
        self.spectrum.info()
    }

    pub fn spectrum(&self) -> &InfoSpectrum {
        &self.spectrum
    }

    pub fn info_inverse(&self) -> &SymMatrix {
        self.spectrum.inverse()
    }

    pub fn restriction(&self) -> Option<&LinearRestriction> {
        self.restriction.as_ref()
    }

    pub fn beta_true(&self) -> &DVector<f64> {
        &self.beta_true
    }

    pub fn tolerance(&self) -> &Tolerance {
        self.spectrum.tolerance()
    }

    /// The matrix A, present iff a restriction is attached.
    pub fn a(&self) -> Option<&SymMatrix> {
        self.a.as_ref()
    }

    pub fn restriction_violated(&self) -> bool {
        self.violated
    }

    pub(crate) fn require_a(&self, who: &str) -> Result<&SymMatrix> {
        self.a
            .as_ref()
            .ok_or_else(|| Error::MissingRestriction(who.to_string()))
    }

    /// ACA, the RMLE covariance. Equal to A algebraically; evaluated as the
    /// literal product.
    pub fn aca(&self) -> Result<SymMatrix> {
        let a = self.require_a("RMLE")?;
        SymMatrix::new(a.as_matrix() * self.info().as_matrix() * a.as_matrix())
    }
}

/// A = C⁻¹ − C⁻¹H′(HC⁻¹H′)⁻¹HC⁻¹ for positive definite C.
pub fn a_matrix(info: &SymMatrix, restriction: &LinearRestriction) -> Result<SymMatrix> {
    let spectrum = InfoSpectrum::new(info, &Tolerance::default())?;
    restricted_dispersion(&spectrum, restriction)
}

/// Evaluates A as N(N′CN)⁻¹N′ with N an orthonormal basis of null(H). This is
/// the same matrix; the null-space form keeps rounding relative to ‖A‖ rather
/// than ‖C⁻¹‖, so the rank stays m − q when C is badly conditioned.
fn restricted_dispersion(
    spectrum: &InfoSpectrum,
    restriction: &LinearRestriction,
) -> Result<SymMatrix> {
    let m = spectrum.dim();
    let q = restriction.matrix().nrows();
    if restriction.width() != m {
        return Err(Error::DimensionMismatch(format!(
            "restriction width {} against {m} coefficients",
            restriction.width()
        )));
    }
    // QR of [H′ | I]: the first q columns of Q span ℜ(H′), the rest null(H)
    let mut stacked = DMatrix::zeros(m, q + m);
    stacked
        .columns_mut(0, q)
        .copy_from(&restriction.matrix().transpose());
    stacked.columns_mut(q, m).fill_with_identity();
    let qr = stacked.qr();
    let r = qr.r();
    let lead = r.view((0, 0), (q, q)).diagonal();
    let scale = lead.amax();
    if scale == 0.0
        || lead
            .iter()
            .any(|v| v.abs() <= spectrum.tolerance().rank_cut * scale)
    {
        return Err(Error::SingularRestrictionGram);
    }
    if q == m {
        return Ok(SymMatrix::zeros(m));
    }
    let basis = qr.q().columns(q, m - q).into_owned();
    let reduced = basis.transpose() * spectrum.info().as_matrix() * &basis;
    let inv = reduced
        .cholesky()
        .ok_or(Error::SingularRestrictionGram)?
        .inverse();
    let a = &basis * inv * basis.transpose();
    SymMatrix::new((&a + a.transpose()) * 0.5)
}

fn assemble(
    spec: EstimatorSpec,
    cov: SymMatrix,
    bias: DVector<f64>,
    violated: bool,
) -> Result<RiskReport> {
    let mmse = cov.add(&SymMatrix::outer(&bias)?)?;
    let mse = cov.trace() + bias.dot(&bias);
    Ok(RiskReport {
        spec,
        cov,
        bias,
        mmse,
        mse,
        restriction_violated: violated,
    })
}

pub fn risk(scenario: &RiskScenario, spec: EstimatorSpec) -> Result<RiskReport> {
    let m = scenario.dim();
    let beta = scenario.beta_true();
    let spectrum = scenario.spectrum();
    let d = spec.d.unwrap_or(1.0);
    let restricted = spec.kind.is_restricted();
    let violated = restricted && scenario.restriction_violated();
    let restriction_bias = if restricted {
        scenario.require_a(spec.kind.name())?;
        scenario
            .restriction_bias
            .clone()
            .unwrap_or_else(|| DVector::zeros(m))
    } else {
        DVector::zeros(m)
    };

    match spec.kind {
        EstimatorKind::Mle => assemble(spec, spectrum.inverse().clone(), DVector::zeros(m), false),
        EstimatorKind::Rmle => assemble(spec, scenario.aca()?, restriction_bias, violated),
        EstimatorKind::Le | EstimatorKind::Aule => {
            let op = shrinkage(spectrum, spec.kind, d);
            let cov = spectrum.inverse().congruence(op.as_matrix())?;
            let bias = op.as_matrix() * beta - beta;
            assemble(spec, cov, bias, false)
        }
        EstimatorKind::Rle | EstimatorKind::Raule => {
            let op = shrinkage(spectrum, spec.kind, d);
            let a = scenario.require_a(spec.kind.name())?;
            let cov = a.congruence(op.as_matrix())?;
            let bias = op.as_matrix() * beta - beta + op.as_matrix() * restriction_bias;
            assemble(spec, cov, bias, violated)
        }
    }
}

fn shrinkage(spectrum: &InfoSpectrum, kind: EstimatorKind, d: f64) -> SymMatrix {
    match kind {
        EstimatorKind::Le | EstimatorKind::Rle => spectrum.liu_matrix(d),
        _ => spectrum.ld_matrix(d),
    }
}

/// Eigen-coordinates of a restricted scenario: λ (descending eigenvalues of
/// C), the diagonal of T′AT and α = T′β.
#[derive(Debug, Clone)]
pub struct SpectralTerms {
    pub lambda: DVector<f64>,
    pub a_diag: DVector<f64>,
    pub alpha: DVector<f64>,
}

pub fn spectral_risk_terms(scenario: &RiskScenario) -> Result<SpectralTerms> {
    let a = scenario.require_a("spectral terms")?;
    let decomp = scenario.spectrum().decomp();
    let t = &decomp.basis;
    let tat = t.transpose() * a.as_matrix() * t;
    Ok(SpectralTerms {
        lambda: decomp.eigenvalues.clone(),
        a_diag: tat.diagonal(),
        alpha: t.transpose() * scenario.beta_true(),
    })
}

/// Per-coordinate RAULE shrinkage l_i = (λ_i + d)(λ_i + 2 − d)/(λ_i + 1)².
pub fn raule_factor(lambda: f64, d: f64) -> f64 {
    (lambda + d) * (lambda + 2.0 - d) / ((lambda + 1.0) * (lambda + 1.0))
}

/// MSE(RAULE) = Σ l_i² a_ii + (1−d)⁴ α_i² / (λ_i + 1)⁴, valid when the truth
/// satisfies the restriction.
pub fn raule_mse_spectral(terms: &SpectralTerms, d: f64) -> f64 {
    let shrink4 = (1.0 - d).powi(4);
    (0..terms.lambda.len())
        .map(|i| {
            let l = terms.lambda[i];
            let f = raule_factor(l, d);
            f * f * terms.a_diag[i] + shrink4 * terms.alpha[i].powi(2) / (l + 1.0).powi(4)
        })
        .sum()
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub d: f64,
    pub report: RiskReport,
}

/// One risk report per (d, kind); d-independent kinds repeat across the grid.
pub fn d_sweep(
    scenario: &RiskScenario,
    kinds: &[EstimatorKind],
    d_grid: &[f64],
) -> Result<Vec<SweepRow>> {
    if let Some(bad) = d_grid.iter().find(|d| !(0.0..=1.0).contains(*d)) {
        return Err(Error::InvalidParameter(format!(
            "d-grid value {bad} outside [0, 1]"
        )));
    }
    let mut rows = Vec::with_capacity(kinds.len() * d_grid.len());
    for &d in d_grid {
        for &kind in kinds {
            let report = risk(scenario, EstimatorSpec::at(kind, d)?)?;
            rows.push(SweepRow { d, report });
        }
    }
    Ok(rows)
}
