//! Closed-form MLE, RMLE, LE, RLE, AULE and RAULE.
//!
//! All shrinkage operators are functions of C and are evaluated through its
//! spectral decomposition, never by inverting C + I twice:
//!
//! * Liu:                 F_d = (C+I)⁻¹(C+dI) = I − (1−d)(C+I)⁻¹
//! * almost unbiased Liu: L_d = I − (1−d)²(C+I)⁻²
//!
//! Written this way both collapse to the identity exactly at d = 1.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{sym_eigen, SpectralDecomp, SymMatrix, Tolerance};
use crate::model::{FittedLogit, LinearRestriction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EstimatorKind {
    Mle,
    Rmle,
    Le,
    Rle,
    Aule,
    Raule,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 6] = [
        EstimatorKind::Mle,
        EstimatorKind::Rmle,
        EstimatorKind::Le,
        EstimatorKind::Rle,
        EstimatorKind::Aule,
        EstimatorKind::Raule,
    ];

    /// The four estimators compared in the simulation tables, in table order.
    pub const TABLE: [EstimatorKind; 4] = [
        EstimatorKind::Mle,
        EstimatorKind::Aule,
        EstimatorKind::Rmle,
        EstimatorKind::Raule,
    ];

    pub fn is_restricted(self) -> bool {
        matches!(
            self,
            EstimatorKind::Rmle | EstimatorKind::Rle | EstimatorKind::Raule
        )
    }

    pub fn uses_d(self) -> bool {
        !matches!(self, EstimatorKind::Mle | EstimatorKind::Rmle)
    }

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Mle => "MLE",
            EstimatorKind::Rmle => "RMLE",
            EstimatorKind::Le => "LE",
            EstimatorKind::Rle => "RLE",
            EstimatorKind::Aule => "AULE",
            EstimatorKind::Raule => "RAULE",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EstimatorKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown estimator {s:?}")))
    }
}

/// An estimator kind plus its biasing parameter when it has one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorSpec {
    pub kind: EstimatorKind,
    pub d: Option<f64>,
}

impl EstimatorSpec {
    /// `d` must be present, and in [0, 1], exactly for the Liu-type kinds.
    pub fn new(kind: EstimatorKind, d: Option<f64>) -> Result<Self> {
        match (kind.uses_d(), d) {
            (true, Some(d)) if (0.0..=1.0).contains(&d) => Ok(EstimatorSpec { kind, d: Some(d) }),
            (true, Some(d)) => Err(Error::InvalidParameter(format!(
                "biasing parameter d must lie in [0, 1], got {d}"
            ))),
            (true, None) => Err(Error::InvalidParameter(format!(
                "{kind} needs a biasing parameter d"
            ))),
            (false, None) => Ok(EstimatorSpec { kind, d: None }),
            (false, Some(_)) => Err(Error::InvalidParameter(format!(
                "{kind} takes no biasing parameter"
            ))),
        }
    }

    /// Like [`EstimatorSpec::new`] but drops `d` for kinds that ignore it.
    pub fn at(kind: EstimatorKind, d: f64) -> Result<Self> {
        Self::new(kind, kind.uses_d().then_some(d))
    }

    pub fn mle() -> Self {
        EstimatorSpec {
            kind: EstimatorKind::Mle,
            d: None,
        }
    }

    pub fn rmle() -> Self {
        EstimatorSpec {
            kind: EstimatorKind::Rmle,
            d: None,
        }
    }

    fn d_or_one(&self) -> f64 {
        self.d.unwrap_or(1.0)
    }
}

impl fmt::Display for EstimatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.d {
            Some(d) => write!(f, "{}(d={d})", self.kind),
            None => write!(f, "{}", self.kind),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub spec: EstimatorSpec,
    pub beta: DVector<f64>,
}

/// Spectral data of a positive definite information matrix C, shared by the
/// estimators and the risk formulas.
#[derive(Debug, Clone)]
pub struct InfoSpectrum {
    info: SymMatrix,
    decomp: SpectralDecomp,
    inverse: SymMatrix,
    tol: Tolerance,
}

impl InfoSpectrum {
    pub fn new(info: &SymMatrix, tol: &Tolerance) -> Result<Self> {
        let decomp = sym_eigen(info);
        let inverse = decomp.pd_inverse(tol).ok_or(Error::SingularInformation)?;
        Ok(InfoSpectrum {
            info: info.clone(),
            decomp,
            inverse,
            tol: *tol,
        })
    }

    pub fn info(&self) -> &SymMatrix {
        &self.info
    }

    pub fn decomp(&self) -> &SpectralDecomp {
        &self.decomp
    }

    pub fn inverse(&self) -> &SymMatrix {
        &self.inverse
    }

    pub fn tolerance(&self) -> &Tolerance {
        &self.tol
    }

    pub fn dim(&self) -> usize {
        self.info.dim()
    }

    /// F_d = (C+I)⁻¹(C+dI).
    pub fn liu_matrix(&self, d: f64) -> SymMatrix {
        let resolvent = self.decomp.map(|l| 1.0 / (l + 1.0));
        identity_minus(&resolvent, 1.0 - d)
    }

    /// L_d = I − (1−d)²(C+I)⁻².
    pub fn ld_matrix(&self, d: f64) -> SymMatrix {
        let resolvent_sq = self.decomp.map(|l| 1.0 / ((l + 1.0) * (l + 1.0)));
        identity_minus(&resolvent_sq, (1.0 - d) * (1.0 - d))
    }

    /// C^{-1/2}.
    pub fn inverse_sqrt(&self) -> SymMatrix {
        self.decomp.map(|l| 1.0 / l.sqrt())
    }

    /// β − C⁻¹H′(HC⁻¹H′)⁻¹(Hβ − h).
    pub fn restricted(
        &self,
        beta: &DVector<f64>,
        restriction: &LinearRestriction,
    ) -> Result<DVector<f64>> {
        let correction = self.restriction_correction(restriction)?;
        let resid = restriction.residual(beta)?;
        Ok(beta - correction * resid)
    }

    /// C⁻¹H′(HC⁻¹H′)⁻¹, the map from restriction residuals to RMLE corrections.
    pub fn restriction_correction(&self, restriction: &LinearRestriction) -> Result<DMatrix<f64>> {
        if restriction.width() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "restriction width {} against {} coefficients",
                restriction.width(),
                self.dim()
            )));
        }
        let h = restriction.matrix();
        let cinv_ht = self.inverse.as_matrix() * h.transpose();
        let gram = SymMatrix::new(h * &cinv_ht)?;
        let gram_inv = sym_eigen(&gram)
            .pd_inverse(&self.tol)
            .ok_or(Error::SingularRestrictionGram)?;
        Ok(cinv_ht * gram_inv.as_matrix())
    }
}

fn identity_minus(m: &SymMatrix, factor: f64) -> SymMatrix {
    let n = m.dim();
    let out = DMatrix::identity(n, n) - m.as_matrix() * factor;
    SymMatrix::new(out).expect("finite shrinkage operator")
}

/// L_d = I − (1−d)²(C+I)⁻² for PSD `c`.
pub fn ld_matrix(c: &SymMatrix, d: f64) -> Result<SymMatrix> {
    if !(0.0..=1.0).contains(&d) {
        return Err(Error::InvalidParameter(format!(
            "biasing parameter d must lie in [0, 1], got {d}"
        )));
    }
    let decomp = sym_eigen(c);
    let resolvent_sq = decomp.map(|l| 1.0 / ((l + 1.0) * (l + 1.0)));
    Ok(identity_minus(&resolvent_sq, (1.0 - d) * (1.0 - d)))
}

/// Evaluates `spec` from the MLE and spectrum of C.
pub fn estimate_from(
    spectrum: &InfoSpectrum,
    beta_mle: &DVector<f64>,
    spec: EstimatorSpec,
    restriction: Option<&LinearRestriction>,
) -> Result<Estimate> {
    if beta_mle.len() != spectrum.dim() {
        return Err(Error::DimensionMismatch(format!(
            "coefficient length {} against {}x{} information",
            beta_mle.len(),
            spectrum.dim(),
            spectrum.dim()
        )));
    }
    let base = if spec.kind.is_restricted() {
        let r = restriction.ok_or_else(|| Error::MissingRestriction(spec.kind.to_string()))?;
        spectrum.restricted(beta_mle, r)?
    } else {
        beta_mle.clone()
    };
    let d = spec.d_or_one();
    let beta = match spec.kind {
        EstimatorKind::Mle | EstimatorKind::Rmle => base,
        EstimatorKind::Le | EstimatorKind::Rle => spectrum.liu_matrix(d).as_matrix() * base,
        EstimatorKind::Aule | EstimatorKind::Raule => spectrum.ld_matrix(d).as_matrix() * base,
    };
    Ok(Estimate { spec, beta })
}

pub fn estimate(
    fit: &FittedLogit,
    spec: EstimatorSpec,
    restriction: Option<&LinearRestriction>,
) -> Result<Estimate> {
    let spectrum = InfoSpectrum::new(&fit.info, &Tolerance::default())?;
    estimate_from(&spectrum, &fit.beta_mle, spec, restriction)
}

/// `H·β − h` for an estimate.
pub fn residual(restriction: &LinearRestriction, est: &Estimate) -> Result<DVector<f64>> {
    restriction.residual(&est.beta)
}
