//! Property tests and independent oracles for the numerical core.

mod common;

use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use raule::dataset::{correlation_matrix, read_csv, write_csv, CsvOptions, LabeledDataset};
use raule::estimators::estimate_from;
use raule::linalg::{moore_penrose, sym_eigen};
use raule::model::Dataset;
use raule::risk::{raule_mse_spectral, risk, spectral_risk_terms};
use raule::simulation::{gen_design, gen_response, run_simulation, SimulationConfig};
use raule::{irls_fit, EstimatorKind, EstimatorSpec, FitOptions, InfoSpectrum, Tolerance};

use common::*;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn logistic(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

/// Correlated data whose fit converges without touching the probability clamp.
fn mixed_data(seed: u64, n: usize, m: usize, coef: f64) -> Dataset {
    let mut r = rng(seed);
    loop {
        let x = gen_design(n, m, coef, &mut r);
        let beta = normal_vector(&mut r, m) * 0.5;
        let y = gen_response(&x, &beta, &mut r).unwrap();
        if let Ok(data) = Dataset::new(x, y, false) {
            if irls_fit(&data, &FitOptions::default()).is_ok_and(|f| f.clamped_rows == 0) {
                return data;
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn penrose_conditions_hold(seed in any::<u64>(), m in 1usize..8, deficiency in 0usize..4) {
        let mut r = rng(seed);
        let rank = m.saturating_sub(deficiency);
        let eig: Vec<f64> = (0..m)
            .map(|k| if k < rank { r.random_range(-10.0..10.0) } else { 0.0 })
            .collect();
        let a = with_spectrum(&mut r, &eig);
        let p = moore_penrose(&a, &Tolerance::default());
        let (a, p) = (a.as_matrix(), p.as_matrix());
        let scale = a.norm().max(1.0) * p.norm().max(1.0);
        prop_assert!((a * p * a - a).amax() <= 1e-10 * scale);
        prop_assert!((p * a * p - p).amax() <= 1e-10 * scale);
        prop_assert!(((a * p).transpose() - a * p).amax() <= 1e-10 * scale);
        prop_assert!(((p * a).transpose() - p * a).amax() <= 1e-10 * scale);
    }

    #[test]
    fn eigen_decomposition_reconstructs(seed in any::<u64>(), m in 1usize..9) {
        let mut r = rng(seed);
        let b = normal_matrix(&mut r, m, m);
        let s = raule::SymMatrix::new(&b + b.transpose()).unwrap();
        let back = sym_eigen(&s).reconstruct();
        prop_assert!((back.as_matrix() - s.as_matrix()).amax() <= 1e-12 * s.as_matrix().norm().max(1.0));
    }

    #[test]
    fn raule_spectral_mse_matches_trace_form(seed in any::<u64>(), d in 0.0f64..=1.0) {
        let s = random_restricted_scenario(&mut rng(seed));
        let terms = spectral_risk_terms(&s).unwrap();
        let spectral = raule_mse_spectral(&terms, d);
        let direct = risk(&s, EstimatorSpec::at(EstimatorKind::Raule, d).unwrap()).unwrap().mse;
        prop_assert!((spectral - direct).abs() <= 1e-9 * direct.abs().max(1e-12));
    }

    #[test]
    fn correlation_ignores_affine_rescaling(seed in any::<u64>(), m in 2usize..6) {
        let mut r = rng(seed);
        let x = gen_design(50, m, 0.7, &mut r);
        let mut y = x.clone();
        for j in 0..m {
            let scale = 10f64.powf(r.random_range(-3.0..3.0));
            let shift = r.random_range(-100.0..100.0);
            y.column_mut(j).apply(|v| *v = *v * scale + shift);
        }
        let a = correlation_matrix(&x).unwrap();
        let b = correlation_matrix(&y).unwrap();
        prop_assert!((a.as_matrix() - b.as_matrix()).amax() <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn irls_is_invariant_to_duplicating_rows(seed in any::<u64>(), m in 2usize..5) {
        let data = mixed_data(seed, 60, m, 0.5);
        let opts = FitOptions::default();
        let once = irls_fit(&data, &opts).unwrap();
        let x2 = DMatrix::from_fn(2 * data.n(), m, |i, j| data.x()[(i % data.n(), j)]);
        let y2 = DVector::from_fn(2 * data.n(), |i, _| data.y()[i % data.n()]);
        let twice = irls_fit(&Dataset::new(x2, y2, false).unwrap(), &opts).unwrap();
        prop_assert!((&once.beta_mle - &twice.beta_mle).amax() <= 1e-7 * once.beta_mle.amax().max(1.0));
        let doubled = once.info.as_matrix() * 2.0;
        prop_assert!((twice.info.as_matrix() - doubled).amax() <= 1e-6 * once.info.as_matrix().amax());
    }

    #[test]
    fn csv_round_trip(seed in any::<u64>(), m in 1usize..5) {
        let data = mixed_data(seed, 20, m, 0.3);
        let labeled = LabeledDataset {
            data,
            response_name: "y".into(),
            column_names: (1..=m).map(|j| format!("x{j}")).collect(),
        };
        let mut buf = Vec::new();
        write_csv(&mut buf, &labeled).unwrap();
        let back = read_csv(buf.as_slice(), &CsvOptions::default()).unwrap();
        prop_assert_eq!(back, labeled);
    }
}

#[test]
fn simulation_is_deterministic() {
    let config = SimulationConfig::table(60, 4, 0.9, 30, 11).unwrap();
    let a = run_simulation(&config).unwrap();
    let b = run_simulation(&config).unwrap();
    assert_eq!(a.beta, b.beta);
    assert_eq!(a.skipped, b.skipped);
    for (x, y) in a.cells.iter().zip(&b.cells) {
        assert_eq!(x.mse.to_bits(), y.mse.to_bits());
        assert_eq!(x.se.to_bits(), y.se.to_bits());
    }
}

/// Newton–Raphson on the log-likelihood, written out without the library.
fn newton_oracle(x: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    let m = x.ncols();
    let mut beta = DVector::zeros(m);
    for _ in 0..100 {
        let p = (x * &beta).map(logistic);
        let grad = x.transpose() * (y - &p);
        let w = p.map(|v| v * (1.0 - v));
        let hess = x.transpose() * DMatrix::from_diagonal(&w) * x;
        let step = hess.lu().solve(&grad).unwrap();
        beta += &step;
        if step.amax() < 1e-14 {
            break;
        }
    }
    beta
}

#[test]
fn irls_agrees_with_newton_on_a_small_problem() {
    let x = DMatrix::from_row_slice(
        6,
        2,
        &[1.0, 0.3, 1.0, -1.2, 1.0, 0.8, 1.0, 2.1, 1.0, -0.4, 1.0, 1.5],
    );
    let y = DVector::from_column_slice(&[0.0, 0.0, 1.0, 1.0, 1.0, 0.0]);
    let fit = irls_fit(
        &Dataset::new(x.clone(), y.clone(), true).unwrap(),
        &FitOptions::default(),
    )
    .unwrap();
    let oracle = newton_oracle(&x, &y);
    for i in 0..2 {
        assert_relative_eq!(fit.beta_mle[i], oracle[i], max_relative = 1e-8);
    }
    assert_eq!(fit.clamped_rows, 0);
}

/// At n = 200 the MLE is close to its linearization, so its Monte Carlo MSE
/// on a fixed design should sit near tr(I(β)⁻¹).
#[test]
fn mle_mse_tracks_inverse_information() {
    let mut r = rng(200);
    let (n, p) = (200, 4);
    let x = gen_design(n, p, 0.9f64.sqrt(), &mut r);
    let beta = DVector::from_element(p, 1.0 / (p as f64).sqrt());
    let w = (&x * &beta).map(|t| {
        let q = logistic(t);
        q * (1.0 - q)
    });
    let info = x.transpose() * DMatrix::from_diagonal(&w) * &x;
    let expected = info.try_inverse().unwrap().trace();

    let reps = 2000;
    let mut total = 0.0;
    let mut used = 0;
    for _ in 0..reps {
        let y = gen_response(&x, &beta, &mut r).unwrap();
        let Ok(data) = Dataset::new(x.clone(), y, false) else {
            continue;
        };
        let Ok(fit) = irls_fit(&data, &FitOptions::default()) else {
            continue;
        };
        total += (&fit.beta_mle - &beta).norm_squared();
        used += 1;
    }
    let mse = total / used as f64;
    assert!(used > reps * 9 / 10);
    assert!(
        (mse - expected).abs() <= 0.15 * expected,
        "Monte Carlo {mse} against linearized {expected}"
    );
}

#[test]
fn rmle_satisfies_the_restriction() {
    let data = mixed_data(5, 120, 4, 0.8);
    let fit = irls_fit(&data, &FitOptions::default()).unwrap();
    let spectrum = InfoSpectrum::new(&fit.info, &Tolerance::default()).unwrap();
    let r = raule::simulation::h1();
    let est = estimate_from(&spectrum, &fit.beta_mle, EstimatorSpec::rmle(), Some(&r)).unwrap();
    let resid = r.residual(&est.beta).unwrap();
    assert!(resid.amax() < 1e-10, "{resid}");
}
