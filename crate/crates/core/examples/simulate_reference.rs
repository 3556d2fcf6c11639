//! Solves the reference problem on a 51x51 grid and reports controller
//! statistics together with a few probe values of the final state.
//!
//! ```text
//! cargo run --release --example simulate_reference -- [nodes] [field.csv]
//! ```

use cdr_solver::cli::write_field_csv;
use cdr_solver::integrator::integrate_field;
use cdr_solver::{
    CoefficientFields, Conditioning, GridSpec, InitialCondition, RhsWorkspace, StepperConfig,
};

fn main() -> cdr_solver::Result<()> {
    let mut args = std::env::args().skip(1);
    let nodes = args
        .next()
        .map(|s| s.parse().expect("nodes must be an integer"))
        .unwrap_or(51);
    let csv = args.next();

    let grid = GridSpec::new(nodes, 20.0)?;
    let coeff = CoefficientFields::evaluate(grid, Conditioning::reference())?;
    let ws = RhsWorkspace::new(&coeff);
    let u0 = InitialCondition::reference(grid.length()).render(grid);

    let cfg = StepperConfig::default();
    let (u, stats) = integrate_field(&u0, &ws, &cfg, true)?;

    println!("grid {nodes}x{nodes}, h = {}", grid.h());
    println!(
        "steps: {} accepted, {} rejected, average dt {:.5}",
        stats.steps_accepted,
        stats.steps_rejected,
        stats.avg_dt()
    );
    let smallest = stats
        .log
        .iter()
        .filter(|r| r.accepted)
        .map(|r| r.dt)
        .fold(f64::INFINITY, f64::min);
    let largest = stats
        .log
        .iter()
        .filter(|r| r.accepted)
        .map(|r| r.dt)
        .fold(0.0, f64::max);
    println!("accepted dt range: [{smallest:.3e}, {largest:.3e}]");
    println!("u(0):   min {:.4}  max {:.4}", u0.min(), u0.max());
    println!("u(T):   min {:.4}  max {:.4}", u.min(), u.max());

    let mid = nodes / 2;
    for (i, j) in [(mid, mid), (nodes / 4, mid), (mid, 3 * nodes / 4)] {
        let (x, y) = (grid.coord(i), grid.coord(j));
        println!("u({x:5.2}, {y:5.2}) = {:.6}", u.get(i, j));
    }

    if let Some(path) = csv {
        write_field_csv(path.as_ref(), &u)?;
        println!("final field written to {path}");
    }
    Ok(())
}
