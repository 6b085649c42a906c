//! One Monte Carlo cell: n = 200, four predictors, correlation 0.9.
//!
//!     cargo run --release --example monte_carlo -- [reps] [seed] [threads]

use raule::simulation::{run_simulation, SimulationConfig};
use raule::EstimatorKind;

fn main() -> raule::Result<()> {
    let mut args = std::env::args().skip(1);
    let reps: usize = args.next().map_or(2000, |s| s.parse().expect("reps"));
    let seed: u64 = args.next().map_or(2016, |s| s.parse().expect("seed"));
    if let Some(t) = args.next() {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t.parse().expect("threads"))
            .build_global()
            .expect("global pool");
    }

    let config = SimulationConfig::table(200, 4, 0.9, reps, seed)?;
    let res = run_simulation(&config)?;
    println!("beta = {:?}", res.beta.as_slice());
    println!("{} replications, {} skipped", reps, res.skipped);
    print!("{:<7}", "");
    for d in &config.d_grid {
        print!("{d:>9}");
    }
    println!();
    for kind in EstimatorKind::TABLE {
        print!("{:<7}", kind.name());
        for &d in &config.d_grid {
            print!("{:>9.4}", res.mse(kind, d).expect("cell"));
        }
        println!();
    }
    let mle = res.cell(EstimatorKind::Mle, 0.0).expect("cell");
    println!("MLE standard error {:.4}", mle.se);
    Ok(())
}
