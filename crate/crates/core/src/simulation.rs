//! Monte Carlo harness for empirical MSE tables.
//!
//! Random streams: every run starts from `ChaCha8Rng::seed_from_u64(seed)`.
//! Stream 0 draws β, stream 1 draws the fixed design (when requested), and
//! replication `r` uses stream `r + 2` for its design and response. The
//! design is drawn row-major: for row i, the p normals z_i1..z_ip, and then
//! the response draws y_1..y_n. Replications run on the current rayon pool
//! and are reduced in replication order, so results do not depend on the
//! thread count.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{estimate_from, EstimatorKind, EstimatorSpec, InfoSpectrum};
use crate::model::{irls_fit, Dataset, FitOptions, LinearRestriction};

pub const DEFAULT_D_GRID: [f64; 10] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.99];
pub const SUITE_NS: [usize; 3] = [50, 100, 200];
pub const SUITE_PS: [usize; 2] = [4, 8];
pub const SUITE_RHOS: [f64; 3] = [0.9, 0.99, 0.999];

const BETA_STREAM: u64 = 0;
const DESIGN_STREAM: u64 = 1;
const REPLICATION_STREAM_OFFSET: u64 = 2;
const PROJECTION_REDRAWS: usize = 10;

/// `H₁`, the two-row restriction used with four predictors.
pub fn h1() -> LinearRestriction {
    LinearRestriction::homogeneous(DMatrix::from_row_slice(
        2,
        4,
        &[1.0, 0.0, -2.0, 1.0, 1.0, -1.0, 1.0, -1.0],
    ))
    .expect("H1 has full row rank")
}

/// `H₂`, the two-row restriction used with eight predictors.
pub fn h2() -> LinearRestriction {
    LinearRestriction::homogeneous(DMatrix::from_row_slice(
        2,
        8,
        &[
            1.0, 0.0, -2.0, 1.0, -3.0, 1.0, 1.0, 1.0, //
            1.0, 1.0, 0.0, 1.0, -3.0, 1.0, -2.0, 1.0,
        ],
    ))
    .expect("H2 has full row rank")
}

/// The suite's restriction for `p` predictors.
pub fn standard_restriction(p: usize) -> Result<LinearRestriction> {
    match p {
        4 => Ok(h1()),
        8 => Ok(h2()),
        _ => Err(Error::InvalidParameter(format!(
            "no standard restriction for p = {p} (expected 4 or 8)"
        ))),
    }
}

/// How the true coefficient vector is chosen. Both give ‖β‖ = 1.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum BetaDesign {
    /// β = (1, …, 1)′/√p.
    #[default]
    Equal,
    /// Normalized standard normal draw, optionally projected onto null(H).
    Random { project: bool },
}

/// Correlation level γ maps to the generator coefficient √γ, so that
/// off-diagonal population correlations of the design equal γ.
pub fn design_coefficient(gamma: f64) -> f64 {
    gamma.sqrt()
}

/// x_ij = √(1 − ρ²) z_ij + ρ z_ip, with z drawn row-major.
pub fn gen_design<R: Rng + ?Sized>(n: usize, p: usize, rho: f64, rng: &mut R) -> DMatrix<f64> {
    let scale = (1.0 - rho * rho).sqrt();
    let mut x = DMatrix::zeros(n, p);
    let mut z = vec![0.0; p];
    for i in 0..n {
        for zj in z.iter_mut() {
            *zj = rng.sample(StandardNormal);
        }
        let common = z[p - 1];
        for j in 0..p {
            x[(i, j)] = scale * z[j] + rho * common;
        }
    }
    x
}

fn null_projector(h: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let gram = h * h.transpose();
    let inv = gram.try_inverse().ok_or(Error::SingularRestrictionGram)?;
    let m = h.ncols();
    Ok(DMatrix::identity(m, m) - h.transpose() * inv * h)
}

pub fn gen_beta<R: Rng + ?Sized>(
    p: usize,
    restriction: Option<&LinearRestriction>,
    design: BetaDesign,
    rng: &mut R,
) -> Result<DVector<f64>> {
    if let Some(r) = restriction {
        if r.width() != p {
            return Err(Error::DimensionMismatch(format!(
                "restriction width {} against p = {p}",
                r.width()
            )));
        }
    }
    match design {
        BetaDesign::Equal => Ok(DVector::from_element(p, 1.0 / (p as f64).sqrt())),
        BetaDesign::Random { project: false } => {
            let v = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
            Ok(v.normalize())
        }
        BetaDesign::Random { project: true } => {
            let r = restriction.ok_or_else(|| {
                Error::MissingRestriction("projected beta needs a restriction".into())
            })?;
            let proj = null_projector(r.matrix())?;
            for _ in 0..PROJECTION_REDRAWS {
                let v = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
                let pv = &proj * v;
                let norm = pv.norm();
                if norm >= 1e-8 {
                    return Ok(pv / norm);
                }
            }
            Err(Error::DegenerateProjection(PROJECTION_REDRAWS))
        }
    }
}

/// y_i ~ Bernoulli(π_i), π_i = 1/(1 + exp(−x_i′β)); one uniform per row.
pub fn gen_response<R: Rng + ?Sized>(
    x: &DMatrix<f64>,
    beta: &DVector<f64>,
    rng: &mut R,
) -> Result<DVector<f64>> {
    if x.ncols() != beta.len() {
        return Err(Error::DimensionMismatch(format!(
            "design has {} columns, beta has {} entries",
            x.ncols(),
            beta.len()
        )));
    }
    let eta = x * beta;
    Ok(eta.map(|e| {
        let pi = 1.0 / (1.0 + (-e).exp());
        let u: f64 = rng.random();
        if u < pi {
            1.0
        } else {
            0.0
        }
    }))
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub n: usize,
    pub p: usize,
    /// Correlation level γ of the tables; see [`design_coefficient`].
    pub rho: f64,
    pub d_grid: Vec<f64>,
    pub reps: usize,
    pub seed: u64,
    pub restriction: LinearRestriction,
    pub beta_design: BetaDesign,
    /// Draw X once from stream 1 instead of once per replication.
    pub fixed_design: bool,
    pub estimator_kinds: Vec<EstimatorKind>,
    pub fit: FitOptions,
}

impl SimulationConfig {
    /// Table-style config: H₁/H₂ restriction, default grid, the four table estimators.
    pub fn table(n: usize, p: usize, rho: f64, reps: usize, seed: u64) -> Result<Self> {
        let config = SimulationConfig {
            n,
            p,
            rho,
            d_grid: DEFAULT_D_GRID.to_vec(),
            reps,
            seed,
            restriction: standard_restriction(p)?,
            beta_design: BetaDesign::Equal,
            fixed_design: false,
            estimator_kinds: EstimatorKind::TABLE.to_vec(),
            fit: FitOptions::default(),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.reps == 0 {
            return bad("reps must be at least 1".into());
        }
        if self.p < 2 {
            return bad(format!("p must be at least 2, got {}", self.p));
        }
        if self.n <= self.p {
            return bad(format!("n = {} must exceed p = {}", self.n, self.p));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return bad(format!("rho must lie in [0, 1), got {}", self.rho));
        }
        if self.restriction.width() != self.p {
            return Err(Error::DimensionMismatch(format!(
                "restriction width {} against p = {}",
                self.restriction.width(),
                self.p
            )));
        }
        if self.estimator_kinds.is_empty() {
            return bad("no estimators requested".into());
        }
        if self.d_grid.is_empty() && self.estimator_kinds.iter().any(|k| k.uses_d()) {
            return bad("empty d grid".into());
        }
        for &d in &self.d_grid {
            if !(0.0..=1.0).contains(&d) {
                return bad(format!("d must lie in [0, 1], got {d}"));
            }
        }
        self.fit.validate()
    }

    /// One spec per result cell: d-free kinds once, the others per grid value.
    pub fn cell_specs(&self) -> Result<Vec<EstimatorSpec>> {
        let mut specs = Vec::new();
        for &kind in &self.estimator_kinds {
            if kind.uses_d() {
                for &d in &self.d_grid {
                    specs.push(EstimatorSpec::at(kind, d)?);
                }
            } else {
                specs.push(EstimatorSpec::new(kind, None)?);
            }
        }
        Ok(specs)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimCell {
    pub spec: EstimatorSpec,
    pub mse: f64,
    /// Monte Carlo standard error of `mse`; NaN with a single replication.
    pub se: f64,
    pub completed: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub config: SimulationConfig,
    pub beta: DVector<f64>,
    pub cells: Vec<SimCell>,
    pub skipped: usize,
}

impl SimulationResult {
    /// Cell lookup; `d` is ignored for kinds that do not use it.
    pub fn cell(&self, kind: EstimatorKind, d: f64) -> Option<&SimCell> {
        self.cells
            .iter()
            .find(|c| c.spec.kind == kind && (!kind.uses_d() || c.spec.d.is_some_and(|cd| cd == d)))
    }

    pub fn mse(&self, kind: EstimatorKind, d: f64) -> Option<f64> {
        self.cell(kind, d).map(|c| c.mse)
    }
}

fn replicate(
    config: &SimulationConfig,
    specs: &[EstimatorSpec],
    beta: &DVector<f64>,
    fixed_x: Option<&DMatrix<f64>>,
    coef: f64,
    r: usize,
) -> Option<Vec<f64>> {
    let mut rng = stream(config.seed, REPLICATION_STREAM_OFFSET + r as u64);
    let x = match fixed_x {
        Some(x) => x.clone(),
        None => gen_design(config.n, config.p, coef, &mut rng),
    };
    let y = gen_response(&x, beta, &mut rng).ok()?;
    let data = Dataset::new(x, y, false).ok()?;
    let fit = irls_fit(&data, &config.fit).ok()?;
    let spectrum = InfoSpectrum::new(&fit.info, &config.fit.tolerance).ok()?;
    specs
        .iter()
        .map(|&spec| {
            estimate_from(&spectrum, &fit.beta_mle, spec, Some(&config.restriction))
                .ok()
                .map(|est| (&est.beta - beta).norm_squared())
        })
        .collect()
}

pub fn run_simulation(config: &SimulationConfig) -> Result<SimulationResult> {
    config.validate()?;
    let specs = config.cell_specs()?;
    let beta = gen_beta(
        config.p,
        Some(&config.restriction),
        config.beta_design,
        &mut stream(config.seed, BETA_STREAM),
    )?;
    let coef = design_coefficient(config.rho);
    let fixed_x = config.fixed_design.then(|| {
        gen_design(
            config.n,
            config.p,
            coef,
            &mut stream(config.seed, DESIGN_STREAM),
        )
    });

    let slots: Vec<Option<Vec<f64>>> = (0..config.reps)
        .into_par_iter()
        .map(|r| replicate(config, &specs, &beta, fixed_x.as_ref(), coef, r))
        .collect();

    let done: Vec<&Vec<f64>> = slots.iter().flatten().collect();
    let completed = done.len();
    let skipped = config.reps - completed;
    if completed == 0 {
        return Err(Error::AllReplicationsFailed(format!(
            "n = {}, p = {}, rho = {}, reps = {}",
            config.n, config.p, config.rho, config.reps
        )));
    }

    let k = completed as f64;
    let cells = specs
        .iter()
        .enumerate()
        .map(|(j, &spec)| {
            let mse = done.iter().map(|v| v[j]).sum::<f64>() / k;
            let ss = done.iter().map(|v| (v[j] - mse).powi(2)).sum::<f64>();
            let se = if completed > 1 {
                (ss / (k - 1.0)).sqrt() / k.sqrt()
            } else {
                f64::NAN
            };
            SimCell {
                spec,
                mse,
                se,
                completed,
            }
        })
        .collect();

    Ok(SimulationResult {
        config: config.clone(),
        beta,
        cells,
        skipped,
    })
}

/// One table of the suite: fixed (n, p), one block per correlation level.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteTable {
    pub n: usize,
    pub p: usize,
    pub blocks: Vec<SimulationResult>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteGrid {
    pub ns: Vec<usize>,
    pub ps: Vec<usize>,
    pub rhos: Vec<f64>,
    pub d_grid: Vec<f64>,
    pub reps: usize,
}

impl SuiteGrid {
    pub fn standard(reps: usize) -> Self {
        SuiteGrid {
            ns: SUITE_NS.to_vec(),
            ps: SUITE_PS.to_vec(),
            rhos: SUITE_RHOS.to_vec(),
            d_grid: DEFAULT_D_GRID.to_vec(),
            reps,
        }
    }
}

/// Tables ordered p-major then n. Every block reuses `base_seed`, so the
/// correlation levels within a table share their random numbers.
pub fn table_suite(base_seed: u64, grid: &SuiteGrid) -> Result<Vec<SuiteTable>> {
    let mut tables = Vec::new();
    for &p in &grid.ps {
        for &n in &grid.ns {
            let mut blocks = Vec::new();
            for &rho in &grid.rhos {
                let mut config = SimulationConfig::table(n, p, rho, grid.reps, base_seed)?;
                config.d_grid = grid.d_grid.clone();
                blocks.push(run_simulation(&config)?);
            }
            tables.push(SuiteTable { n, p, blocks });
        }
    }
    Ok(tables)
}
