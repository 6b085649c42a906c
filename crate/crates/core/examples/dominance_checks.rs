//! Evaluate every dominance condition next to the matching direct MSE check.
//!
//!     cargo run --example dominance_checks

use nalgebra::{DMatrix, DVector};
use raule::dominance::check_all;
use raule::{LinearRestriction, RiskScenario, SymMatrix};

fn report(label: &str, scenario: &RiskScenario, d: f64) -> raule::Result<()> {
    println!("{label}, d = {d}");
    println!(
        "  {:<5} {:>10} {:>10} {:>12} {:>12} {:>10}",
        "", "applies", "condition", "lhs", "rhs", "direct"
    );
    for v in check_all(scenario, d)? {
        println!(
            "  {:<5} {:>10} {:>10} {:>12.5} {:>12.5} {:>10}",
            v.theorem.id(),
            v.applicable,
            v.condition_holds,
            v.lhs,
            v.rhs,
            v.delta_psd
        );
    }
    println!();
    Ok(())
}

fn main() -> raule::Result<()> {
    let info = SymMatrix::from_diagonal(&[4.0, 1.0])?;
    let h = LinearRestriction::homogeneous(DMatrix::from_row_slice(1, 2, &[1.0, 0.0]))?;

    let small = RiskScenario::new(
        info.clone(),
        Some(h.clone()),
        DVector::from_column_slice(&[0.0, 1.0]),
    )?;
    report("small coefficients", &small, 0.2)?;

    // the scalar inequality holds here while RAULE loses to RMLE
    let large = RiskScenario::new(info, Some(h), DVector::from_column_slice(&[0.0, 10.0]))?;
    report("large coefficients", &large, 0.2)?;
    Ok(())
}
