//! The application workflow on the synthetic municipalities data:
//! diagnostics, fit, plug-in risk of every estimator over d.
//!
//!     cargo run --example municipalities_walkthrough

use std::path::Path;

use nalgebra::DMatrix;
use raule::dataset::{diagnostics, load_csv, CsvOptions, KappaBasis};
use raule::estimators::estimate_from;
use raule::risk::{d_sweep, risk};
use raule::{
    irls_fit, EstimatorKind, EstimatorSpec, FitOptions, InfoSpectrum, LinearRestriction,
    RiskScenario,
};

fn main() -> raule::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/municipalities_synthetic.csv");
    let labeled = load_csv(&path, &CsvOptions::default())?;
    let diag = diagnostics(&labeled.data, KappaBasis::Correlation)?;
    println!("n = {}, kappa = {:.2}", labeled.data.n(), diag.kappa);

    let opts = FitOptions::default();
    let fit = irls_fit(&labeled.data, &opts)?;
    let restriction = LinearRestriction::homogeneous(DMatrix::from_row_slice(
        2,
        4,
        &[1.0, -1.0, 0.0, 0.0, 0.0, 1.0, -1.0, 0.0],
    ))?;
    let spectrum = InfoSpectrum::new(&fit.info, &opts.tolerance)?;
    let rmle = spectrum.restricted(&fit.beta_mle, &restriction)?;

    // plug-in truth: the restricted fit
    let scenario = RiskScenario::new(fit.info.clone(), Some(restriction.clone()), rmle.clone())?;
    let mle_mse = risk(&scenario, EstimatorSpec::mle())?.mse;
    let rmle_mse = risk(&scenario, EstimatorSpec::rmle())?.mse;
    println!("MLE  {:?}  mse {mle_mse:.4}", fit.beta_mle.as_slice());
    println!("RMLE {:?}  mse {rmle_mse:.4}", rmle.as_slice());
    println!();

    let grid: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).chain([0.99]).collect();
    let kinds = [EstimatorKind::Aule, EstimatorKind::Raule];
    for kind in kinds {
        println!("{kind}");
        for row in d_sweep(&scenario, &[kind], &grid)? {
            let est = estimate_from(
                &spectrum,
                &fit.beta_mle,
                EstimatorSpec::at(kind, row.d)?,
                Some(&restriction),
            )?;
            let coefs: Vec<String> = est.beta.iter().map(|b| format!("{b:>9.4}")).collect();
            println!(
                "  d = {:<5} {}  mse {:>10.4}",
                row.d,
                coefs.join(" "),
                row.report.mse
            );
        }
    }
    Ok(())
}
