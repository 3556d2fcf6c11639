//! Embedded Runge-Kutta-Fehlberg 2(3) time stepping with stage-wise
//! boundary closure and a clamped step-size controller.
//!
//! Butcher tableau:
//!
//! ```text
//!   0  |
//!   1  |  1
//!  1/2 | 1/4  1/4
//! -----+---------------
//!      | 1/2  1/2   0     (second order, error reference)
//!      | 1/6  1/6  2/3    (third order, propagated)
//! ```

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::stencil::{close_boundary, RhsWorkspace};

/// An ODE system produced by semi-discretization.
pub trait SemiDiscreteSystem {
    fn len(&self) -> usize;

    /// Writes the right-hand side of every integrated unknown into `out`.
    fn rhs(&self, u: &[f64], out: &mut [f64]) -> Result<()>;

    /// Recomputes derived (boundary) unknowns from integrated ones.
    fn close(&self, u: &mut [f64]);

    /// Max-norm of `a - b` over the integrated unknowns.
    fn error_norm(&self, a: &[f64], b: &[f64]) -> f64;
}

/// The convection-diffusion-reaction grid system: interior nodes are
/// integrated, boundary nodes follow from the Neumann closure.
impl SemiDiscreteSystem for RhsWorkspace {
    fn len(&self) -> usize {
        self.grid().len()
    }

    fn rhs(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        self.eval_into(u, out)
    }

    fn close(&self, u: &mut [f64]) {
        close_boundary(u, self.grid().n());
    }

    fn error_norm(&self, a: &[f64], b: &[f64]) -> f64 {
        let n = self.grid().n();
        let mut worst = 0.0f64;
        for i in 1..n - 1 {
            let row = i * n;
            for j in 1..n - 1 {
                worst = worst.max((a[row + j] - b[row + j]).abs());
            }
        }
        worst
    }
}

/// A boundary-free ODE `u' = f(u)` on a flat vector.
pub struct PlainOde<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64], &mut [f64])> PlainOde<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&[f64], &mut [f64])> SemiDiscreteSystem for PlainOde<F> {
    fn len(&self) -> usize {
        self.dim
    }

    fn rhs(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        (self.f)(u, out);
        Ok(())
    }

    fn close(&self, _u: &mut [f64]) {}

    fn error_norm(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepperConfig {
    /// Local error tolerance on the max-norm estimate.
    pub tol: f64,
    pub safety: f64,
    pub growth_max: f64,
    pub growth_min: f64,
    pub exponent: f64,
    /// Step tried first.
    pub dt_init: f64,
    pub final_time: f64,
    /// Abort threshold for the step size; `None` means `1e-12 * final_time`.
    pub dt_min: Option<f64>,
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            safety: 0.9,
            growth_max: 2.0,
            growth_min: 0.3,
            exponent: 1.0 / 3.0,
            dt_init: 1e-4,
            final_time: 1.5,
            dt_min: None,
        }
    }
}

impl StepperConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.tol > 0.0) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if !(self.safety > 0.0 && self.safety < 1.0) {
            return bad(format!("safety must lie in (0, 1), got {}", self.safety));
        }
        if !(0.0 < self.growth_min && self.growth_min < 1.0 && 1.0 < self.growth_max) {
            return bad(format!(
                "need 0 < growth_min < 1 < growth_max, got {} and {}",
                self.growth_min, self.growth_max
            ));
        }
        if !(self.exponent > 0.0) {
            return bad(format!("exponent must be positive, got {}", self.exponent));
        }
        if !(self.dt_init > 0.0) {
            return bad(format!("dt_init must be positive, got {}", self.dt_init));
        }
        if !(self.final_time > 0.0 && self.final_time.is_finite()) {
            return bad(format!(
                "final time must be positive, got {}",
                self.final_time
            ));
        }
        Ok(())
    }

    pub fn dt_min(&self) -> f64 {
        self.dt_min.unwrap_or(1e-12 * self.final_time)
    }
}

/// Next step size from the current one and its error estimate:
/// `safety * dt * clamp((tol / err)^exponent, growth_min, growth_max)`.
/// A zero error estimate takes the maximal growth.
pub fn propose_dt(dt: f64, err_inf: f64, cfg: &StepperConfig) -> f64 {
    let ratio = if err_inf == 0.0 {
        cfg.growth_max
    } else {
        (cfg.tol / err_inf)
            .powf(cfg.exponent)
            .clamp(cfg.growth_min, cfg.growth_max)
    };
    cfg.safety * dt * ratio
}

/// Reusable stage buffers.
pub struct Rkf23 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    stage: Vec<f64>,
    high: Vec<f64>,
}

impl Rkf23 {
    pub fn new(len: usize) -> Self {
        Self {
            k1: vec![0.0; len],
            k2: vec![0.0; len],
            k3: vec![0.0; len],
            stage: vec![0.0; len],
            high: vec![0.0; len],
        }
    }

    /// Third-order solution of the last [`Rkf23::step`].
    pub fn solution(&self) -> &[f64] {
        &self.high
    }

    /// Stage derivatives `(k1, k2, k3)` of the last step.
    pub fn stages(&self) -> (&[f64], &[f64], &[f64]) {
        (&self.k1, &self.k2, &self.k3)
    }

    /// Advances `u` (already closed) by `dt`. The closed third-order result
    /// is left in [`Rkf23::solution`]; the return value is the max-norm of
    /// its difference to the second-order result.
    pub fn step<S: SemiDiscreteSystem + ?Sized>(
        &mut self,
        system: &S,
        u: &[f64],
        dt: f64,
    ) -> Result<f64> {
        let Self {
            k1,
            k2,
            k3,
            stage,
            high,
        } = self;

        system.rhs(u, k1)?;

        for (s, (&u, &a)) in stage.iter_mut().zip(u.iter().zip(k1.iter())) {
            *s = u + dt * a;
        }
        system.close(stage);
        system.rhs(stage, k2)?;

        for (s, (&u, (&a, &b))) in stage.iter_mut().zip(u.iter().zip(k1.iter().zip(k2.iter()))) {
            *s = u + dt * (0.25 * a + 0.25 * b);
        }
        system.close(stage);
        system.rhs(stage, k3)?;

        // `stage` now holds the second-order result.
        let sixth = 1.0 / 6.0;
        let two_thirds = 2.0 / 3.0;
        for (k, &um) in u.iter().enumerate() {
            let (a, b, c) = (k1[k], k2[k], k3[k]);
            high[k] = um + dt * (sixth * a + sixth * b + two_thirds * c);
            stage[k] = um + dt * (0.5 * a + 0.5 * b);
        }
        system.close(high);

        let err = system.error_norm(stage, high);
        if !err.is_finite() || high.iter().any(|v| !v.is_finite()) {
            return Err(Error::StepFailed {
                stage: "solution update",
                dt,
            });
        }
        Ok(err)
    }
}

/// One embedded step on a grid field.
#[derive(Debug, Clone)]
pub struct StepResult {
    /// Third-order solution, boundary closed.
    pub solution: ScalarField,
    pub err_inf: f64,
    pub dt_used: f64,
    /// Whether the controller keeps this step (`propose_dt(dt) >= dt`).
    pub accepted: bool,
}

pub fn rkf23_step(
    u: &ScalarField,
    dt: f64,
    ws: &RhsWorkspace,
    cfg: &StepperConfig,
) -> Result<StepResult> {
    if u.grid() != ws.grid() {
        return Err(Error::ShapeMismatch(
            "field and workspace grids differ".into(),
        ));
    }
    let mut rk = Rkf23::new(u.values().len());
    let err_inf = rk.step(ws, u.values(), dt)?;
    Ok(StepResult {
        solution: ScalarField::from_values(*u.grid(), rk.high)?,
        err_inf,
        dt_used: dt,
        accepted: propose_dt(dt, err_inf, cfg) >= dt,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    /// Time at the start of the attempt.
    pub t: f64,
    pub dt: f64,
    pub err_inf: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    pub dt_sum: f64,
    pub final_time: f64,
    #[serde(skip)]
    pub log: Vec<StepRecord>,
}

impl RunStats {
    pub fn avg_dt(&self) -> f64 {
        if self.steps_accepted == 0 {
            0.0
        } else {
            self.dt_sum / self.steps_accepted as f64
        }
    }
}

/// Writes a step log as CSV (`step,t,dt,err_inf,accepted`).
pub fn write_step_log(mut w: impl Write, log: &[StepRecord]) -> std::io::Result<()> {
    writeln!(w, "step,t,dt,err_inf,accepted")?;
    for r in log {
        writeln!(
            w,
            "{},{:e},{:e},{:e},{}",
            r.step,
            r.t,
            r.dt,
            r.err_inf,
            u8::from(r.accepted)
        )?;
    }
    Ok(())
}

/// Integrates `u` in place from `t = 0` to `cfg.final_time`.
///
/// A step of size `dt` is kept when the proposed size is at least `dt`;
/// otherwise it is recomputed with the proposal until kept. The proposal
/// of the last attempt always seeds the next one. The last step is
/// shortened to land on the final time exactly.
pub fn integrate<S: SemiDiscreteSystem + ?Sized>(
    system: &S,
    u: &mut Vec<f64>,
    cfg: &StepperConfig,
    record_log: bool,
) -> Result<RunStats> {
    cfg.validate()?;
    let final_time = cfg.final_time;
    let dt_min = cfg.dt_min();
    let mut rk = Rkf23::new(system.len());
    let mut stats = RunStats::default();
    let mut t = 0.0;
    let mut dt = cfg.dt_init;
    let mut attempt = 0;

    system.close(u);
    while t < final_time {
        let remaining = final_time - t;
        let last = dt >= remaining;
        let dt_try = if last { remaining } else { dt };
        let err = rk.step(system, u, dt_try)?;
        let dt_next = propose_dt(dt_try, err, cfg);
        let accepted = dt_next >= dt_try;
        if record_log {
            stats.log.push(StepRecord {
                step: attempt,
                t,
                dt: dt_try,
                err_inf: err,
                accepted,
            });
        }
        attempt += 1;
        if accepted {
            std::mem::swap(u, &mut rk.high);
            t = if last { final_time } else { t + dt_try };
            stats.steps_accepted += 1;
            stats.dt_sum += dt_try;
        } else {
            stats.steps_rejected += 1;
            if dt_next < dt_min {
                return Err(Error::StepUnderflow {
                    t,
                    dt: dt_next,
                    dt_min,
                });
            }
        }
        dt = dt_next;
    }
    stats.final_time = t;
    Ok(stats)
}

/// Integrates a grid field to the configured final time.
pub fn integrate_to(
    u0: &ScalarField,
    ws: &RhsWorkspace,
    cfg: &StepperConfig,
) -> Result<(ScalarField, RunStats)> {
    integrate_field(u0, ws, cfg, false)
}

pub fn integrate_field(
    u0: &ScalarField,
    ws: &RhsWorkspace,
    cfg: &StepperConfig,
    record_log: bool,
) -> Result<(ScalarField, RunStats)> {
    if u0.grid() != ws.grid() {
        return Err(Error::ShapeMismatch(
            "field and workspace grids differ".into(),
        ));
    }
    let mut u = u0.values().to_vec();
    let stats = integrate(ws, &mut u, cfg, record_log)?;
    Ok((ScalarField::from_values(*u0.grid(), u)?, stats))
}
