//! Correlation matrix and condition number of a CSV file's predictors.
//!
//!     cargo run --example collinearity_diagnostics -- [file.csv]

use std::path::PathBuf;

use raule::dataset::{diagnostics, load_csv, CsvOptions, KappaBasis};

fn main() -> raule::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/municipalities_synthetic.csv")
        });
    let labeled = load_csv(&path, &CsvOptions::default())?;
    let report = diagnostics(&labeled.data, KappaBasis::Correlation)?;

    let names = labeled.predictor_names();
    print!("{:<15}", "");
    for n in names {
        print!("{n:>15}");
    }
    println!();
    for (i, n) in names.iter().enumerate() {
        print!("{n:<15}");
        for j in 0..names.len() {
            print!("{:>15.4}", report.correlation[(i, j)]);
        }
        println!();
    }
    println!("eigenvalues {:?}", report.eigenvalues);
    println!("kappa (correlation) = {:.3}", report.kappa);
    let raw = diagnostics(&labeled.data, KappaBasis::CrossProduct)?;
    println!("kappa (raw X'X)     = {:.3}", raw.kappa);
    Ok(())
}
