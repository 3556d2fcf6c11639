//! The conditioning vector and the parameterized coefficient family
//! (velocity `v`, diffusion matrix `D`, logistic reaction `f`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField};
use crate::rng::Stream;

/// Four scalars that select one member of the coefficient family:
///
/// ```text
/// v1  = 3 - c1 * y/L
/// v2  = c2 - 2 * x/L
/// d11 = c3/2 + 4 (x/L - 1/2)^2 + 4 (y/L - 1/2)^2
/// d12 = 1/10 +   (x/L - 1/2)^2 + 2 (y/L - 1/2)^2
/// d22 = 1/4  + 4 (x/L - 1/2)^2 + 2 (y/L - 1/2)^2
/// f(u) = u (c4 - u) / 2
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conditioning {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
}

/// Inclusive sampling ranges for `c1..c4`.
pub const SAMPLING_BOX: [(f64, f64); 4] = [(0.0, 6.0), (-1.0, 3.0), (1.0, 9.0), (1.0, 3.0)];

/// Growth rate of the logistic reaction used by the whole family.
pub const GROWTH_RATE: f64 = 0.5;

impl Conditioning {
    pub const fn new(c1: f64, c2: f64, c3: f64, c4: f64) -> Self {
        Self { c1, c2, c3, c4 }
    }

    /// The fixed coefficient set used for the mesh convergence study
    /// (`v1 = 3 - 6y/L`, `v2 = 3 - 2x/L`, `d11 = 1/2 + ...`, `f = u(2-u)/2`).
    pub const fn reference() -> Self {
        Self::new(6.0, 3.0, 1.0, 2.0)
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.c1, self.c2, self.c3, self.c4]
    }

    pub fn from_array(c: [f64; 4]) -> Self {
        Self::new(c[0], c[1], c[2], c[3])
    }

    /// Draws `c1, c2, c3, c4` (in that order) uniformly from [`SAMPLING_BOX`].
    pub fn sample(stream: &mut Stream) -> Self {
        let mut c = [0.0; 4];
        for (slot, (lo, hi)) in c.iter_mut().zip(SAMPLING_BOX) {
            *slot = lo + (hi - lo) * stream.next_unit();
        }
        Self::from_array(c)
    }

    pub fn in_sampling_box(&self) -> bool {
        self.to_array()
            .iter()
            .zip(SAMPLING_BOX)
            .all(|(&c, (lo, hi))| (lo..=hi).contains(&c))
    }

    pub fn reaction(&self) -> ReactionParams {
        ReactionParams {
            f0: GROWTH_RATE,
            f1: self.c4,
        }
    }
}

/// Logistic reaction `f(u) = f0 * u * (f1 - u)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReactionParams {
    pub f0: f64,
    pub f1: f64,
}

impl ReactionParams {
    pub fn new(f0: f64, f1: f64) -> Result<Self> {
        if !(f0 > 0.0 && f1 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "reaction rates must be positive, got f0={f0}, f1={f1}"
            )));
        }
        Ok(Self { f0, f1 })
    }
}

#[inline]
pub fn reaction(u: f64, p: ReactionParams) -> f64 {
    p.f0 * u * (p.f1 - u)
}

/// Reaction term of the model. `None` switches the source off, which is
/// only used for manufactured test problems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reaction {
    None,
    Logistic(ReactionParams),
}

impl Reaction {
    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        match *self {
            Reaction::None => 0.0,
            Reaction::Logistic(p) => reaction(u, p),
        }
    }
}

/// Coefficients sampled at every grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientFields {
    pub d11: ScalarField,
    pub d12: ScalarField,
    pub d22: ScalarField,
    pub v1: ScalarField,
    pub v2: ScalarField,
    pub reaction: Reaction,
}

impl CoefficientFields {
    /// Assembles arbitrary node-sampled coefficients, checking shapes and
    /// positive definiteness of `D`.
    pub fn new(
        d11: ScalarField,
        d12: ScalarField,
        d22: ScalarField,
        v1: ScalarField,
        v2: ScalarField,
        reaction: Reaction,
    ) -> Result<Self> {
        for other in [&d12, &d22, &v1, &v2] {
            d11.check_same_grid(other)?;
        }
        let fields = Self {
            d11,
            d12,
            d22,
            v1,
            v2,
            reaction,
        };
        fields.check_positive_definite()?;
        Ok(fields)
    }

    /// Evaluates the family member selected by `c` at every node of `grid`.
    pub fn evaluate(grid: GridSpec, c: Conditioning) -> Result<Self> {
        let l = grid.length();
        let sx = |x: f64| {
            let s = x / l - 0.5;
            s * s
        };
        let d11 = ScalarField::from_fn(grid, |x, y| 0.5 * c.c3 + 4.0 * sx(x) + 4.0 * sx(y));
        let d12 = ScalarField::from_fn(grid, |x, y| 0.1 + sx(x) + 2.0 * sx(y));
        let d22 = ScalarField::from_fn(grid, |x, y| 0.25 + 4.0 * sx(x) + 2.0 * sx(y));
        let v1 = ScalarField::from_fn(grid, |_, y| 3.0 - c.c1 * y / l);
        let v2 = ScalarField::from_fn(grid, |x, _| c.c2 - 2.0 * x / l);
        let reaction = Reaction::Logistic(ReactionParams::new(GROWTH_RATE, c.c4)?);
        Self::new(d11, d12, d22, v1, v2, reaction)
    }

    pub fn grid(&self) -> &GridSpec {
        self.d11.grid()
    }

    fn check_positive_definite(&self) -> Result<()> {
        let grid = *self.grid();
        for i in 0..grid.n() {
            for j in 0..grid.n() {
                let (d11, d12, d22) = (self.d11.get(i, j), self.d12.get(i, j), self.d22.get(i, j));
                if !(d11 > 0.0 && d22 > 0.0 && d11 * d22 - d12 * d12 > 0.0) {
                    return Err(Error::NotPositiveDefinite {
                        i,
                        j,
                        d11,
                        d12,
                        d22,
                    });
                }
            }
        }
        Ok(())
    }
}
