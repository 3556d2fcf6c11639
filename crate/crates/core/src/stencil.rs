//! Central finite differences, the semi-discrete right-hand side, and the
//! second-order zero-Neumann boundary closure.

use rayon::prelude::*;

use crate::coefficients::{CoefficientFields, Reaction};
use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField};

/// Grids with at least this many nodes per axis evaluate rows in parallel.
const PARALLEL_MIN_NODES: usize = 96;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdOperator {
    Dx,
    Dy,
    Dxx,
    Dyy,
    Dxy,
}

impl FdOperator {
    pub const ALL: [FdOperator; 5] = [Self::Dx, Self::Dy, Self::Dxx, Self::Dyy, Self::Dxy];

    /// Applies the stencil centered at flat index `k` of a row-major `n`-wide
    /// array. The caller guarantees `k` is interior.
    #[inline]
    fn eval(self, q: &[f64], n: usize, k: usize, h: f64) -> f64 {
        match self {
            Self::Dx => (q[k + n] - q[k - n]) / (2.0 * h),
            Self::Dy => (q[k + 1] - q[k - 1]) / (2.0 * h),
            Self::Dxx => (q[k + n] - 2.0 * q[k] + q[k - n]) / (h * h),
            Self::Dyy => (q[k + 1] - 2.0 * q[k] + q[k - 1]) / (h * h),
            Self::Dxy => {
                (q[k + n + 1] - q[k + n - 1] - q[k - n + 1] + q[k - n - 1]) / (4.0 * h * h)
            }
        }
    }
}

/// Central-difference value of `op` applied to `field` at interior node `(i, j)`.
pub fn fd_apply(field: &ScalarField, op: FdOperator, i: usize, j: usize) -> Result<f64> {
    let grid = field.grid();
    if !grid.is_interior(i, j) {
        return Err(Error::OutsideInterior {
            i,
            j,
            max: grid.n() - 2,
        });
    }
    Ok(op.eval(field.values(), grid.n(), grid.index(i, j), grid.h()))
}

/// Overwrites the boundary nodes of a row-major `n x n` array so that the
/// one-sided second-order normal derivative vanishes on every edge.
///
/// The `y`-edges (`j = 0`, `j = n-1`) are set first for `i = 1..n-2`, then
/// the `x`-edges (`i = 0`, `i = n-1`) for all `j`, so corners are closed from
/// the already closed boundary columns.
pub fn close_boundary(u: &mut [f64], n: usize) {
    debug_assert_eq!(u.len(), n * n);
    // Solving -1.5 u0 + 2 u1 - 0.5 u2 = 0 gives u0 = u1 + (u1 - u2) / 3,
    // which reproduces constants exactly.
    let extend = |near: f64, far: f64| near + (near - far) / 3.0;
    for i in 1..n - 1 {
        let row = &mut u[i * n..(i + 1) * n];
        row[0] = extend(row[1], row[2]);
        row[n - 1] = extend(row[n - 2], row[n - 3]);
    }
    for j in 0..n {
        u[j] = extend(u[n + j], u[2 * n + j]);
        u[(n - 1) * n + j] = extend(u[(n - 2) * n + j], u[(n - 3) * n + j]);
    }
}

pub fn apply_boundary_closure(u: &mut ScalarField) {
    let n = u.grid().n();
    close_boundary(u.values_mut(), n);
}

/// Largest absolute one-sided normal derivative over the boundary nodes
/// covered by the closure stencils.
pub fn neumann_residual(u: &ScalarField) -> f64 {
    let grid = u.grid();
    let (n, h) = (grid.n(), grid.h());
    let q = |i, j| u.get(i, j);
    let one_sided = |a: f64, b: f64, c: f64| ((-1.5 * a + 2.0 * b - 0.5 * c) / h).abs();
    let mut worst = 0.0f64;
    for i in 1..n - 1 {
        worst = worst.max(one_sided(q(i, 0), q(i, 1), q(i, 2)));
        worst = worst.max(one_sided(q(i, n - 1), q(i, n - 2), q(i, n - 3)));
    }
    for j in 0..n {
        worst = worst.max(one_sided(q(0, j), q(1, j), q(2, j)));
        worst = worst.max(one_sided(q(n - 1, j), q(n - 2, j), q(n - 3, j)));
    }
    worst
}

/// Time-independent per-node factors of the semi-discrete operator,
/// computed once per (grid, coefficients).
///
/// With the chain-rule form of the model the right-hand side at an interior
/// node is
///
/// ```text
/// F = sink*u + drift_x*Dx(u) + drift_y*Dy(u)
///   + d11*Dxx(u) + 2 d12*Dxy(u) + d22*Dyy(u) + f(u)
/// sink    = -(Dx(v1) + Dy(v2))
/// drift_x = Dx(d11) + Dy(d12) - v1
/// drift_y = Dx(d12) + Dy(d22) - v2
/// ```
///
/// where the coefficient derivatives are central differences of the
/// node-sampled coefficients.
#[derive(Debug, Clone)]
pub struct RhsWorkspace {
    grid: GridSpec,
    sink: Vec<f64>,
    drift_x: Vec<f64>,
    drift_y: Vec<f64>,
    d11: Vec<f64>,
    d12_twice: Vec<f64>,
    d22: Vec<f64>,
    reaction: Reaction,
}

impl RhsWorkspace {
    pub fn new(coeff: &CoefficientFields) -> Self {
        let grid = *coeff.grid();
        let (n, h) = (grid.n(), grid.h());
        let len = grid.len();
        let mut sink = vec![0.0; len];
        let mut drift_x = vec![0.0; len];
        let mut drift_y = vec![0.0; len];
        let d = |op: FdOperator, f: &ScalarField, k: usize| op.eval(f.values(), n, k, h);
        for i in 1..n - 1 {
            for j in 1..n - 1 {
                let k = grid.index(i, j);
                sink[k] = -(d(FdOperator::Dx, &coeff.v1, k) + d(FdOperator::Dy, &coeff.v2, k));
                drift_x[k] = d(FdOperator::Dx, &coeff.d11, k) + d(FdOperator::Dy, &coeff.d12, k)
                    - coeff.v1.values()[k];
                drift_y[k] = d(FdOperator::Dx, &coeff.d12, k) + d(FdOperator::Dy, &coeff.d22, k)
                    - coeff.v2.values()[k];
            }
        }
        Self {
            grid,
            sink,
            drift_x,
            drift_y,
            d11: coeff.d11.values().to_vec(),
            d12_twice: coeff.d12.values().iter().map(|v| 2.0 * v).collect(),
            d22: coeff.d22.values().to_vec(),
            reaction: coeff.reaction,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// The precomputed `-(Dx v1 + Dy v2)` factor (zero on the boundary).
    pub fn sink(&self) -> &[f64] {
        &self.sink
    }

    /// Evaluates `F` at every interior node of `u` into `out`. Boundary
    /// entries of `out` are left untouched.
    pub fn eval_into(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        let n = self.grid.n();
        assert_eq!(u.len(), self.grid.len());
        assert_eq!(out.len(), self.grid.len());

        let interior = &mut out[n..(n - 1) * n];
        let bad = if n >= PARALLEL_MIN_NODES {
            interior
                .par_chunks_mut(n)
                .enumerate()
                .map(|(r, row)| self.eval_row(u, r + 1, row))
                .reduce(|| false, |a, b| a | b)
        } else {
            interior
                .chunks_mut(n)
                .enumerate()
                .fold(false, |acc, (r, row)| self.eval_row(u, r + 1, row) | acc)
        };
        if bad {
            return Err(self.diagnose(u, out));
        }
        Ok(())
    }

    /// Fills interior entries of row `i`; returns true if any value is not finite.
    #[inline]
    fn eval_row(&self, u: &[f64], i: usize, out_row: &mut [f64]) -> bool {
        let n = self.grid.n();
        let h = self.grid.h();
        let (inv_2h, inv_h2, inv_4h2) = (0.5 / h, 1.0 / (h * h), 0.25 / (h * h));
        let base = i * n;
        let um = &u[base - n..base];
        let uc = &u[base..base + n];
        let up = &u[base + n..base + 2 * n];
        let sink = &self.sink[base..base + n];
        let ax = &self.drift_x[base..base + n];
        let ay = &self.drift_y[base..base + n];
        let d11 = &self.d11[base..base + n];
        let d12 = &self.d12_twice[base..base + n];
        let d22 = &self.d22[base..base + n];
        let mut bad = false;
        for j in 1..n - 1 {
            let c = uc[j];
            let ux = (up[j] - um[j]) * inv_2h;
            let uy = (uc[j + 1] - uc[j - 1]) * inv_2h;
            let uxx = (up[j] - 2.0 * c + um[j]) * inv_h2;
            let uyy = (uc[j + 1] - 2.0 * c + uc[j - 1]) * inv_h2;
            let uxy = (up[j + 1] - up[j - 1] - um[j + 1] + um[j - 1]) * inv_4h2;
            let f = sink[j] * c
                + ax[j] * ux
                + ay[j] * uy
                + d11[j] * uxx
                + d12[j] * uxy
                + d22[j] * uyy
                + self.reaction.eval(c);
            bad |= !f.is_finite();
            out_row[j] = f;
        }
        bad
    }

    fn diagnose(&self, u: &[f64], out: &[f64]) -> Error {
        let (n, h) = (self.grid.n(), self.grid.h());
        for i in 1..n - 1 {
            for j in 1..n - 1 {
                let k = i * n + j;
                if out[k].is_finite() {
                    continue;
                }
                let d = |op: FdOperator| op.eval(u, n, k, h);
                let terms: [(&'static str, f64); 7] = [
                    ("u", u[k]),
                    ("convection-x", self.drift_x[k] * d(FdOperator::Dx)),
                    ("convection-y", self.drift_y[k] * d(FdOperator::Dy)),
                    ("diffusion-xx", self.d11[k] * d(FdOperator::Dxx)),
                    ("diffusion-xy", self.d12_twice[k] * d(FdOperator::Dxy)),
                    ("diffusion-yy", self.d22[k] * d(FdOperator::Dyy)),
                    ("reaction", self.reaction.eval(u[k])),
                ];
                let term = terms
                    .iter()
                    .find(|(_, v)| !v.is_finite())
                    .map_or("sum", |(name, _)| name);
                return Error::NonFinite { i, j, term };
            }
        }
        Error::NonFinite {
            i: 0,
            j: 0,
            term: "sum",
        }
    }
}

/// Semi-discrete right-hand side at every interior node; boundary entries
/// of the result are zero.
pub fn rhs_interior(u: &ScalarField, ws: &RhsWorkspace) -> Result<ScalarField> {
    if u.grid() != ws.grid() {
        return Err(Error::ShapeMismatch(
            "field and workspace grids differ".into(),
        ));
    }
    let mut out = ScalarField::zeros(*u.grid());
    ws.eval_into(u.values(), out.values_mut())?;
    Ok(out)
}
