//! Fit the logistic MLE on the bundled data and print every estimator.
//!
//!     cargo run --example fit_and_estimate -- [d]

use std::path::Path;

use nalgebra::DMatrix;
use raule::dataset::{load_csv, CsvOptions};
use raule::estimators::estimate_from;
use raule::{irls_fit, EstimatorKind, EstimatorSpec, FitOptions, InfoSpectrum, LinearRestriction};

fn main() -> raule::Result<()> {
    let d: f64 = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("d must be a number"))
        .unwrap_or(0.5);
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/municipalities_synthetic.csv");
    let labeled = load_csv(&path, &CsvOptions::default())?;
    let fit = irls_fit(&labeled.data, &FitOptions::default())?;
    println!(
        "IRLS converged in {} iterations (last step {:.2e})",
        fit.iterations, fit.final_step
    );

    // first three coefficients equal
    let restriction = LinearRestriction::homogeneous(DMatrix::from_row_slice(
        2,
        4,
        &[1.0, -1.0, 0.0, 0.0, 0.0, 1.0, -1.0, 0.0],
    ))?;
    let spectrum = InfoSpectrum::new(&fit.info, &FitOptions::default().tolerance)?;

    print!("{:<14}", "");
    for name in &labeled.column_names {
        print!("{name:>15}");
    }
    println!();
    for kind in EstimatorKind::ALL {
        let spec = EstimatorSpec::at(kind, d)?;
        let est = estimate_from(&spectrum, &fit.beta_mle, spec, Some(&restriction))?;
        print!("{:<14}", spec.to_string());
        for b in est.beta.iter() {
            print!("{b:>15.6}");
        }
        println!();
    }
    Ok(())
}
