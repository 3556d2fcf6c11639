//! Mesh refinement study on the fifteen-hill initial condition with the
//! reference coefficients.
//!
//! ```text
//! cargo run --release --example convergence_study -- [levels]
//! ```
//!
//! Four levels (h/L = 0.02 down to 0.0025) take a few minutes; pass 5 to add
//! the h/L = 0.00125 level.

use cdr_solver::convergence::{run_study, StudyConfig};
use cdr_solver::{Conditioning, InitialCondition};

fn main() -> cdr_solver::Result<()> {
    let levels = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("levels must be an integer"))
        .unwrap_or(4);
    let cfg = StudyConfig {
        levels,
        ..Default::default()
    };
    let ic = InitialCondition::reference(cfg.length);

    println!(
        "Mesh convergence study: {} levels from {}x{} nodes",
        levels, cfg.base_nodes, cfg.base_nodes
    );
    let report = run_study(&ic, Conditioning::reference(), &cfg)?;
    print!("{}", report.to_table());

    println!();
    report.write_csv(std::io::stdout().lock())?;
    Ok(())
}
