//! Draws random hill initial conditions from a seed and renders them.
//!
//! ```text
//! cargo run --example initial_conditions -- [seed]
//! ```

use cdr_solver::rng::{derive_seed, Stream, TAG_INITIAL};
use cdr_solver::stencil::neumann_residual;
use cdr_solver::{GridSpec, InitialCondition};

fn main() -> cdr_solver::Result<()> {
    let master: u64 = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("seed must be an integer"))
        .unwrap_or(0);
    let grid = GridSpec::new(256, 20.0)?;

    let reference = InitialCondition::reference(grid.length());
    let field = reference.render(grid);
    println!(
        "reference: {} hills, max {:.4}, wall residual {:e}",
        reference.hills.len(),
        field.max(),
        neumann_residual(&field)
    );

    for k in 0..3 {
        let seed = derive_seed(master, TAG_INITIAL, k);
        let ic = InitialCondition::sample(&mut Stream::new(seed), grid.length());
        let field = ic.render(grid);
        println!(
            "\nsample {k} (seed {seed:#018x}): {} hills, max {:.4}",
            ic.hills.len(),
            field.max()
        );
        println!("      H        x        y        a");
        for hill in &ic.hills {
            println!(
                "  {:7.4}  {:7.3}  {:7.3}  {:7.3}",
                hill.height, hill.x_center, hill.y_center, hill.radius
            );
        }
    }
    Ok(())
}
