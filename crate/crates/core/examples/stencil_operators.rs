//! Finite-difference operators and the wall closure on small fields.
//!
//! ```text
//! cargo run --example stencil_operators
//! ```

use cdr_solver::stencil::neumann_residual;
use cdr_solver::{apply_boundary_closure, fd_apply, FdOperator, GridSpec, ScalarField};

fn main() -> cdr_solver::Result<()> {
    let grid = GridSpec::new(11, 20.0)?;
    let q = ScalarField::from_fn(grid, |x, y| {
        1.0 + 0.5 * x - y + 0.25 * x * x + x * y - 0.1 * y * y
    });
    let (i, j) = (4, 7);
    let (x, y) = (grid.coord(i), grid.coord(j));
    let exact = [0.5 + 0.5 * x + y, -1.0 + x - 0.2 * y, 0.5, -0.2, 1.0];
    println!("quadratic at ({x}, {y}):");
    for (op, want) in FdOperator::ALL.into_iter().zip(exact) {
        let got = fd_apply(&q, op, i, j)?;
        println!("  {op:?}: {got:+.12} (exact {want:+.12})");
    }

    let mut ramp = ScalarField::from_fn(grid, |x, y| (x * 0.3).sin() + (y * 0.2).cos());
    println!(
        "\nwall residual before closure: {:.4}",
        neumann_residual(&ramp)
    );
    apply_boundary_closure(&mut ramp);
    println!(
        "wall residual after closure:  {:e}",
        neumann_residual(&ramp)
    );
    Ok(())
}
