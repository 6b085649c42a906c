//! Regenerate `data/municipalities_synthetic.csv`.
//!
//! Four standardized predictors, n = 83, whose sample correlation matrix is
//! set exactly to the target collinear structure; the binary response comes
//! from a logistic model without intercept.
//!
//!     cargo run --example generate_synthetic_data -- [out.csv] [seed]

use std::path::PathBuf;

use raule::dataset::{save_csv, synthetic_municipalities, MUNICIPALITIES_SEED};

fn main() -> raule::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/municipalities_synthetic.csv")
    });
    let seed = args
        .next()
        .map_or(MUNICIPALITIES_SEED, |s| s.parse().expect("seed"));
    let data = synthetic_municipalities(seed)?;
    save_csv(&out, &data)?;
    let ones = data.data.y().iter().filter(|&&v| v == 1.0).count();
    println!(
        "wrote {} rows ({ones} ones) to {}",
        data.data.n(),
        out.display()
    );
    Ok(())
}
