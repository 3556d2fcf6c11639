//! Runs the solver on user-supplied coefficient fields: anisotropic
//! diffusion with a rotating drift and no reaction.
//!
//! ```text
//! cargo run --release --example custom_coefficients
//! ```

use cdr_solver::coefficients::Reaction;
use cdr_solver::{
    integrate_to, CoefficientFields, GridSpec, RhsWorkspace, ScalarField, StepperConfig,
};

fn main() -> cdr_solver::Result<()> {
    let grid = GridSpec::new(81, 20.0)?;
    let l = grid.length();
    let coeff = CoefficientFields::new(
        ScalarField::constant(grid, 0.8),
        ScalarField::constant(grid, 0.2),
        ScalarField::constant(grid, 0.3),
        ScalarField::from_fn(grid, |_, y| y / l - 0.5),
        ScalarField::from_fn(grid, |x, _| 0.5 - x / l),
        Reaction::None,
    )?;
    let ws = RhsWorkspace::new(&coeff);
    let u0 = ScalarField::from_fn(grid, |x, y| {
        (-((x - 7.0).powi(2) + (y - 10.0).powi(2)) / 2.0).exp()
    });
    let mass = |u: &ScalarField| u.values().iter().sum::<f64>() * grid.h() * grid.h();

    let cfg = StepperConfig {
        final_time: 5.0,
        ..Default::default()
    };
    let (u, stats) = integrate_to(&u0, &ws, &cfg)?;
    println!(
        "{} steps, average dt {:.4}",
        stats.steps_accepted,
        stats.avg_dt()
    );
    println!("peak {:.4} -> {:.4}", u0.max(), u.max());
    println!("discrete mass {:.4} -> {:.4}", mass(&u0), mass(&u));
    Ok(())
}
