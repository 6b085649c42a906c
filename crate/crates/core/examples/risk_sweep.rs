//! Exact MSE of each estimator over a grid of d for a fixed scenario, plus a
//! plot-data file with one (d, mse) column pair per estimator.
//!
//!     cargo run --example risk_sweep -- [plot.csv]

use nalgebra::{DMatrix, DVector};
use raule::risk::d_sweep;
use raule::{EstimatorKind, LinearRestriction, RiskScenario, SymMatrix};

fn main() -> raule::Result<()> {
    // ill-conditioned information matrix, kappa^2 around 1e4
    let info = SymMatrix::from_row_slice(
        3,
        &[
            10.0, 9.9, 9.8, //
            9.9, 10.0, 9.9, //
            9.8, 9.9, 10.0,
        ],
    )?;
    let restriction =
        LinearRestriction::homogeneous(DMatrix::from_row_slice(1, 3, &[1.0, -2.0, 1.0]))?;
    let beta = DVector::from_column_slice(&[1.0, 1.0, 1.0]).normalize();
    let scenario = RiskScenario::new(info, Some(restriction), beta)?;

    let kinds = EstimatorKind::TABLE;
    let grid: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
    let rows = d_sweep(&scenario, &kinds, &grid)?;

    print!("{:>6}", "d");
    for k in kinds {
        print!("{:>12}", k.name());
    }
    println!();
    for chunk in rows.chunks(kinds.len()) {
        print!("{:>6.2}", chunk[0].d);
        for r in chunk {
            print!("{:>12.5}", r.report.mse);
        }
        println!();
    }

    if let Some(path) = std::env::args().nth(1) {
        let mut out = String::new();
        let header: Vec<String> = kinds
            .iter()
            .flat_map(|k| [format!("d_{}", k.name()), format!("mse_{}", k.name())])
            .collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for chunk in rows.chunks(kinds.len()) {
            let line: Vec<String> = chunk
                .iter()
                .flat_map(|r| [r.d.to_string(), r.report.mse.to_string()])
                .collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        std::fs::write(&path, out)?;
        println!("plot data written to {path}");
    }
    Ok(())
}
