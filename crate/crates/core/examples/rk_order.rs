//! Order of the embedded RKF2(3) pair on u' = -u: the third-order solution
//! has local error O(dt^4), the embedded estimate scales like dt^3.
//!
//! ```text
//! cargo run --example rk_order
//! ```

use cdr_solver::integrator::{PlainOde, Rkf23};

fn main() -> cdr_solver::Result<()> {
    let decay = PlainOde::new(1, |u: &[f64], out: &mut [f64]| out[0] = -u[0]);
    let mut rk = Rkf23::new(1);

    println!(
        "{:>10}  {:>12}  {:>12}  {:>6}  {:>6}",
        "dt", "local err", "estimate", "p_sol", "p_est"
    );
    let mut previous: Option<(f64, f64, f64)> = None;
    for k in 0..=8 {
        let dt = 10f64.powf(-1.0 - 0.25 * k as f64);
        let estimate = rk.step(&decay, &[1.0], dt)?;
        let local = (rk.solution()[0] - (-dt).exp()).abs();
        let (p_sol, p_est) = match previous {
            Some((dt0, l0, e0)) => {
                let r = (dt0 / dt).ln();
                ((l0 / local).ln() / r, (e0 / estimate).ln() / r)
            }
            None => (f64::NAN, f64::NAN),
        };
        println!("{dt:10.3e}  {local:12.4e}  {estimate:12.4e}  {p_sol:6.3}  {p_est:6.3}");
        previous = Some((dt, local, estimate));
    }
    Ok(())
}
