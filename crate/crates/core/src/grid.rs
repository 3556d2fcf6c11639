//! Uniform node grids on the square `[0, L]^2` and fields sampled on them.
//!
//! Storage is row-major with `x` as the outer index: node `(i, j)` lives at
//! `i * n + j`, where `i` indexes `x` and `j` indexes `y`.

use crate::error::{Error, Result};

/// Smallest node count per axis: one-sided boundary stencils need three
/// nodes and the interior must be non-empty.
pub const MIN_NODES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    n: usize,
    length: f64,
    h: f64,
}

impl GridSpec {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < MIN_NODES {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_NODES} nodes per axis, got {n}"
            )));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "domain length must be positive, got {length}"
            )));
        }
        Ok(Self {
            n,
            length,
            h: length / (n - 1) as f64,
        })
    }

    /// Nodes per axis.
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn length(&self) -> f64 {
        self.length
    }

    /// Node spacing `L / (n - 1)`.
    #[inline]
    pub fn h(&self) -> f64 {
        self.h
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n + j
    }

    #[inline]
    pub fn coord(&self, k: usize) -> f64 {
        k as f64 * self.h
    }

    pub fn is_interior(&self, i: usize, j: usize) -> bool {
        (1..self.n - 1).contains(&i) && (1..self.n - 1).contains(&j)
    }

    /// The grid obtained by halving the spacing (`2n - 1` nodes).
    pub fn refined(&self) -> Self {
        Self::new(2 * self.n - 1, self.length).expect("refining a valid grid")
    }
}

/// Node values on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: GridSpec, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.len()],
        }
    }

    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {}x{} grid",
                values.len(),
                grid.n(),
                grid.n()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(x, y)` at every node.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = grid.n();
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..n {
            let x = grid.coord(i);
            for j in 0..n {
                values.push(f(x, grid.coord(j)));
            }
        }
        Self { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let k = self.grid.index(i, j);
        self.values[k] = value;
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub(crate) fn check_same_grid(&self, other: &ScalarField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} field vs {}x{} field",
                self.grid.n(),
                self.grid.n(),
                other.grid.n(),
                other.grid.n()
            )));
        }
        Ok(())
    }
}
