#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use raule::{LinearRestriction, RiskScenario, SymMatrix};

pub fn normal_matrix<R: Rng>(rng: &mut R, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

pub fn normal_vector<R: Rng>(rng: &mut R, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// Haar-ish orthogonal matrix from the QR factor of a Gaussian matrix.
pub fn random_orthogonal<R: Rng>(rng: &mut R, m: usize) -> DMatrix<f64> {
    normal_matrix(rng, m, m).qr().q()
}

/// Q diag(λ) Q′ with the given eigenvalues.
pub fn with_spectrum<R: Rng>(rng: &mut R, eigenvalues: &[f64]) -> SymMatrix {
    let q = random_orthogonal(rng, eigenvalues.len());
    let d = DMatrix::from_diagonal(&DVector::from_column_slice(eigenvalues));
    SymMatrix::new(&q * d * q.transpose()).unwrap()
}

/// SPD matrix with eigenvalues log-uniform in [10^lo, 10^hi].
pub fn random_spd<R: Rng>(rng: &mut R, m: usize, lo: f64, hi: f64) -> SymMatrix {
    let eig: Vec<f64> = (0..m)
        .map(|_| 10f64.powf(rng.random_range(lo..=hi)))
        .collect();
    with_spectrum(rng, &eig)
}

/// SPD matrix whose condition number is exactly `kappa`.
pub fn spd_with_condition<R: Rng>(rng: &mut R, m: usize, kappa: f64) -> SymMatrix {
    let mut eig: Vec<f64> = (0..m)
        .map(|_| kappa.powf(rng.random_range(0.0..=1.0)))
        .collect();
    eig[0] = 1.0;
    if m > 1 {
        eig[1] = kappa;
    }
    with_spectrum(rng, &eig)
}

pub fn random_restriction<R: Rng>(rng: &mut R, q: usize, m: usize) -> LinearRestriction {
    loop {
        if let Ok(r) = LinearRestriction::homogeneous(normal_matrix(rng, q, m)) {
            return r;
        }
    }
}

/// Projection of v onto null(H).
pub fn project_null(h: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
    let gram = (h * h.transpose()).try_inverse().unwrap();
    v - h.transpose() * (gram * (h * v))
}

fn scenario_on<R: Rng>(
    rng: &mut R,
    info: SymMatrix,
    restriction: LinearRestriction,
) -> RiskScenario {
    let m = info.dim();
    let raw = project_null(restriction.matrix(), &normal_vector(rng, m));
    let scale = 10f64.powf(rng.random_range(-1.5..=1.5));
    let beta = raw.normalize() * scale;
    RiskScenario::new(info, Some(restriction), beta).unwrap()
}

/// Restricted scenario with m in 2..=8, q in 1..=min(3, m-1), spectrum in
/// [1e-2, 1e2] and a truth on the restriction with log-uniform norm.
pub fn random_restricted_scenario<R: Rng>(rng: &mut R) -> RiskScenario {
    let m = rng.random_range(2..=8);
    let q = rng.random_range(1..=3.min(m - 1));
    let info = random_spd(rng, m, -2.0, 2.0);
    let restriction = random_restriction(rng, q, m);
    scenario_on(rng, info, restriction)
}

/// As `random_restricted_scenario`, but the rows of H span q eigenvectors
/// of C, so null(H) is an invariant subspace of C.
pub fn random_aligned_scenario<R: Rng>(rng: &mut R) -> RiskScenario {
    let m = rng.random_range(2..=8);
    let q = rng.random_range(1..=3.min(m - 1));
    let eig: Vec<f64> = (0..m)
        .map(|_| 10f64.powf(rng.random_range(-2.0..=2.0)))
        .collect();
    let v = random_orthogonal(rng, m);
    let d = DMatrix::from_diagonal(&DVector::from_column_slice(&eig));
    let info = SymMatrix::new(&v * d * v.transpose()).unwrap();
    let picked = rand::seq::index::sample(rng, m, q);
    let basis = DMatrix::from_fn(m, q, |i, k| v[(i, picked.index(k))]);
    let restriction = loop {
        let mix = normal_matrix(rng, q, q);
        if let Ok(r) = LinearRestriction::homogeneous(&mix * basis.transpose()) {
            break r;
        }
    };
    scenario_on(rng, info, restriction)
}
