//! All six (n, p) tables at three correlation levels.
//!
//!     cargo run --release --example table_suite -- [reps] [seed]

use raule::simulation::{table_suite, SuiteGrid};
use raule::EstimatorKind;

fn main() -> raule::Result<()> {
    let mut args = std::env::args().skip(1);
    let reps: usize = args.next().map_or(200, |s| s.parse().expect("reps"));
    let seed: u64 = args.next().map_or(2016, |s| s.parse().expect("seed"));
    let grid = SuiteGrid::standard(reps);

    for table in table_suite(seed, &grid)? {
        println!("n = {}, p = {}", table.n, table.p);
        for block in &table.blocks {
            println!("  gamma = {} (skipped {})", block.config.rho, block.skipped);
            for kind in EstimatorKind::TABLE {
                print!("    {:<6}", kind.name());
                for &d in &grid.d_grid {
                    print!("{:>11.4}", block.mse(kind, d).expect("cell"));
                }
                println!();
            }
        }
        println!();
    }
    Ok(())
}
