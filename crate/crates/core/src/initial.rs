//! Initial conditions built from compactly supported, once-differentiable
//! radial hills.

use std::path::Path;

use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField};
use crate::rng::Stream;

/// Hill parameters of the fixed initial condition used by the mesh study.
pub const REFERENCE_HILLS_CSV: &str = include_str!("../fixtures/reference_hills.csv");

/// Radial profile `g(r) = 2H/a^3 (r - a)^2 (r + a/2)` on `[0, a)`, zero
/// beyond. `g(0) = H` and `g(a) = g'(a) = 0`.
#[inline]
pub fn hill_profile(r: f64, height: f64, radius: f64) -> f64 {
    if r >= radius {
        return 0.0;
    }
    let d = r - radius;
    2.0 * height / (radius * radius * radius) * d * d * (r + 0.5 * radius)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HillParams {
    pub height: f64,
    pub radius: f64,
    pub x_center: f64,
    pub y_center: f64,
}

/// Distance from `(x, y)` to the nearest edge of `[0, L]^2`.
fn edge_distance(x: f64, y: f64, length: f64) -> f64 {
    x.min(length - x).min(y).min(length - y)
}

impl HillParams {
    /// Builds a hill whose radius interpolates between `L/10` (at
    /// `unit_radius = 0`) and the distance from the center to the nearest
    /// edge (at `unit_radius = 1`).
    pub fn from_unit_radius(
        height: f64,
        x_center: f64,
        y_center: f64,
        unit_radius: f64,
        length: f64,
    ) -> Result<Self> {
        let lo = length / 10.0;
        let hi = edge_distance(x_center, y_center, length);
        let hill = Self {
            height,
            radius: lo + unit_radius * (hi - lo),
            x_center,
            y_center,
        };
        hill.validate(length)?;
        Ok(hill)
    }

    pub fn validate(&self, length: f64) -> Result<()> {
        let lo = length / 10.0;
        let hi = edge_distance(self.x_center, self.y_center, length);
        if !(self.height > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "hill height must be positive, got {}",
                self.height
            )));
        }
        if !(self.radius >= lo && self.radius <= hi) {
            return Err(Error::InvalidParameter(format!(
                "hill radius {} outside [{lo}, {hi}] for center ({}, {})",
                self.radius, self.x_center, self.y_center
            )));
        }
        Ok(())
    }

    pub fn radius_bounds(&self, length: f64) -> (f64, f64) {
        (
            length / 10.0,
            edge_distance(self.x_center, self.y_center, length),
        )
    }
}

#[inline]
pub fn hill_bump(x: f64, y: f64, hill: &HillParams) -> f64 {
    let r = (x - hill.x_center).hypot(y - hill.y_center);
    hill_profile(r, hill.height, hill.radius)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct InitialCondition {
    pub hills: Vec<HillParams>,
}

#[derive(Deserialize)]
struct HillRow {
    #[allow(dead_code)]
    i: usize,
    #[serde(rename = "H")]
    height: f64,
    x_max: f64,
    y_max: f64,
    #[serde(rename = "R")]
    unit_radius: f64,
}

impl InitialCondition {
    /// Samples a hill sum: the count in `5..=15`, then for each hill its
    /// height in `(0, 1)`, center in `[L/5, 4L/5]^2` and unit radius in
    /// `[0, 1]`, drawn in exactly that order.
    pub fn sample(stream: &mut Stream, length: f64) -> Self {
        let count = stream.next_int_inclusive(5, 15);
        let (lo, hi) = (length / 5.0, 4.0 * length / 5.0);
        let hills = (0..count)
            .map(|_| {
                let height = stream.next_open_unit();
                let x = lo + (hi - lo) * stream.next_unit();
                let y = lo + (hi - lo) * stream.next_unit();
                let unit = stream.next_unit();
                HillParams::from_unit_radius(height, x, y, unit, length)
                    .expect("sampled centers keep the radius interval non-empty")
            })
            .collect();
        Self { hills }
    }

    /// Parses rows of `i,H,x_max,y_max,R` (with header).
    pub fn from_csv_reader(reader: impl std::io::Read, length: f64) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut hills = Vec::new();
        for row in rdr.deserialize() {
            let row: HillRow = row?;
            hills.push(HillParams::from_unit_radius(
                row.height,
                row.x_max,
                row.y_max,
                row.unit_radius,
                length,
            )?);
        }
        Ok(Self { hills })
    }

    pub fn from_csv_file(path: &Path, length: f64) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(file, length).map_err(|e| Error::Fixture {
            path: path.to_owned(),
            message: e.to_string(),
        })
    }

    /// The fifteen-hill initial condition of the mesh convergence study.
    pub fn reference(length: f64) -> Self {
        Self::from_csv_reader(REFERENCE_HILLS_CSV.as_bytes(), length)
            .expect("embedded fixture is valid")
    }

    /// Evaluates the hill sum at every node.
    pub fn render(&self, grid: GridSpec) -> ScalarField {
        let n = grid.n();
        let mut values = vec![0.0; grid.len()];
        values.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            let x = grid.coord(i);
            for hill in &self.hills {
                if (x - hill.x_center).abs() >= hill.radius {
                    continue;
                }
                for (j, v) in row.iter_mut().enumerate() {
                    *v += hill_bump(x, grid.coord(j), hill);
                }
            }
        });
        ScalarField::from_values(grid, values).expect("sized from grid")
    }
}

pub fn render_ic(ic: &InitialCondition, grid: GridSpec) -> ScalarField {
    ic.render(grid)
}

pub fn sample_ic(stream: &mut Stream, grid: &GridSpec) -> InitialCondition {
    InitialCondition::sample(stream, grid.length())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_values() {
        assert!((hill_profile(0.0, 0.7, 3.0) - 0.7).abs() < 1e-15);
        assert_eq!(hill_profile(3.0, 0.7, 3.0), 0.0);
        assert_eq!(hill_profile(5.0, 0.7, 3.0), 0.0);
        assert!((hill_profile(1.5, 0.7, 3.0) - 0.35).abs() < 1e-15);
    }

    #[test]
    fn profile_is_c1_at_support_edge() {
        let (h, a) = (1.0, 2.0);
        let eps = 1e-6;
        let slope = (hill_profile(a, h, a) - hill_profile(a - eps, h, a)) / eps;
        assert!(slope.abs() < 1e-5);
    }

    #[test]
    fn bump_center_and_support() {
        let hill = HillParams {
            height: 0.8,
            radius: 2.0,
            x_center: 10.0,
            y_center: 10.0,
        };
        assert!((hill_bump(10.0, 10.0, &hill) - 0.8).abs() < 1e-15);
        assert_eq!(hill_bump(12.0, 10.0, &hill), 0.0);
        assert_eq!(hill_bump(11.5, 11.5, &hill), 0.0);
        assert!((hill_bump(10.0, 11.0, &hill) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn radius_endpoints() {
        let lo = HillParams::from_unit_radius(1.0, 7.0, 9.0, 0.0, 20.0).unwrap();
        assert_eq!(lo.radius, 2.0);
        let hi = HillParams::from_unit_radius(1.0, 10.0, 10.0, 1.0, 20.0).unwrap();
        assert_eq!(hi.radius, 10.0);
        assert!(HillParams::from_unit_radius(1.0, 10.0, 10.0, 1.5, 20.0).is_err());
    }

    #[test]
    fn sampling_is_deterministic_and_bounded() {
        let a = InitialCondition::sample(&mut Stream::new(99), 20.0);
        let b = InitialCondition::sample(&mut Stream::new(99), 20.0);
        assert_eq!(a, b);
        for seed in 0..10_000u64 {
            let ic = InitialCondition::sample(&mut Stream::new(seed), 20.0);
            assert!((5..=15).contains(&ic.hills.len()));
            for hill in &ic.hills {
                let (lo, hi) = hill.radius_bounds(20.0);
                assert!(hill.radius >= lo && hill.radius <= hi);
                assert!(hill.height > 0.0 && hill.height < 1.0);
                assert!((4.0..=16.0).contains(&hill.x_center));
                assert!((4.0..=16.0).contains(&hill.y_center));
            }
        }
    }

    #[test]
    fn reference_fixture_renders_inside_domain() {
        let grid = GridSpec::new(51, 20.0).unwrap();
        let ic = InitialCondition::reference(20.0);
        assert_eq!(ic.hills.len(), 15);
        assert_eq!(ic.hills[1].radius, 2.0);
        let u = ic.render(grid);
        let total: f64 = ic.hills.iter().map(|h| h.height).sum();
        assert!(u.min() >= 0.0);
        assert!(u.max() <= total);
        assert!(u.max() > 0.5);
        for k in 0..grid.n() {
            for (i, j) in [(0, k), (grid.n() - 1, k), (k, 0), (k, grid.n() - 1)] {
                assert_eq!(u.get(i, j), 0.0);
            }
        }
    }

    #[test]
    fn empty_and_single_hill() {
        let grid = GridSpec::new(21, 20.0).unwrap();
        let zero = InitialCondition::default().render(grid);
        assert!(zero.values().iter().all(|&v| v == 0.0));

        let on_node = InitialCondition {
            hills: vec![HillParams {
                height: 1.0,
                radius: 3.0,
                x_center: 10.0,
                y_center: 10.0,
            }],
        };
        assert_eq!(on_node.render(grid).max(), 1.0);
        let off_node = InitialCondition {
            hills: vec![HillParams {
                height: 1.0,
                radius: 3.0,
                x_center: 10.5,
                y_center: 9.7,
            }],
        };
        assert!(off_node.render(grid).max() < 1.0);
    }

    #[test]
    fn rendering_is_additive() {
        let grid = GridSpec::new(33, 20.0).unwrap();
        let a = InitialCondition::sample(&mut Stream::new(1), 20.0);
        let b = InitialCondition::sample(&mut Stream::new(2), 20.0);
        let mut both = a.clone();
        both.hills.extend(b.hills.iter().copied());
        let (ra, rb, rab) = (a.render(grid), b.render(grid), both.render(grid));
        for k in 0..grid.len() {
            assert!((ra.values()[k] + rb.values()[k] - rab.values()[k]).abs() < 1e-14);
        }
    }
}
