//! Mesh refinement study: nested grids, discrete norms, and the
//! experimental order of convergence.

use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::coefficients::{CoefficientFields, Conditioning};
use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField};
use crate::initial::InitialCondition;
use crate::integrator::{integrate_to, StepperConfig};
use crate::stencil::RhsWorkspace;

/// Grids whose spacing halves from one level to the next, so every coarse
/// node coincides with a fine node.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshSequence {
    grids: Vec<GridSpec>,
}

impl MeshSequence {
    pub fn new(base: GridSpec, levels: usize) -> Self {
        let mut grids = vec![base];
        for _ in 1..levels {
            let next = grids.last().unwrap().refined();
            grids.push(next);
        }
        Self { grids }
    }

    pub fn grids(&self) -> &[GridSpec] {
        &self.grids
    }
}

/// Samples `fine` at the nodes of `coarse`; requires the grids to be nested
/// (`n_fine - 1` a multiple of `n_coarse - 1`, equal lengths).
pub fn restrict(fine: &ScalarField, coarse: GridSpec) -> Result<ScalarField> {
    let fg = fine.grid();
    let (nf, nc) = (fg.n(), coarse.n());
    if fg.length() != coarse.length() || nf < nc || (nf - 1) % (nc - 1) != 0 {
        return Err(Error::ShapeMismatch(format!(
            "{nf}-node grid is not a refinement of a {nc}-node grid"
        )));
    }
    let stride = (nf - 1) / (nc - 1);
    let mut values = Vec::with_capacity(coarse.len());
    for i in 0..nc {
        for j in 0..nc {
            values.push(fine.get(stride * i, stride * j));
        }
    }
    ScalarField::from_values(coarse, values)
}

/// Coarse value `(i, j)` is fine value `(2i, 2j)`; the fine grid must have
/// exactly `2n - 1` nodes.
pub fn restrict_fine_to_coarse(fine: &ScalarField, coarse: GridSpec) -> Result<ScalarField> {
    if fine.grid().n() != 2 * coarse.n() - 1 {
        return Err(Error::ShapeMismatch(format!(
            "expected {} fine nodes for a {}-node coarse grid, got {}",
            2 * coarse.n() - 1,
            coarse.n(),
            fine.grid().n()
        )));
    }
    restrict(fine, coarse)
}

/// Root-mean-square and maximum of `a - b`.
pub fn diff_norms(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::ShapeMismatch(format!(
            "{} vs {} values",
            a.len(),
            b.len()
        )));
    }
    let (sum_sq, max) = a.iter().zip(b).fold((0.0, 0.0f64), |(s, m), (x, y)| {
        let d = x - y;
        (s + d * d, m.max(d.abs()))
    });
    Ok(((sum_sq / a.len() as f64).sqrt(), max))
}

pub fn grid_norms(a: &ScalarField, b: &ScalarField) -> Result<(f64, f64)> {
    a.check_same_grid(b)?;
    diff_norms(a.values(), b.values())
}

/// `log2(e_coarse / e_fine)`.
pub fn eoc(e_coarse: f64, e_fine: f64) -> Result<f64> {
    for e in [e_coarse, e_fine] {
        if !(e > 0.0) {
            return Err(Error::NonPositiveError(e));
        }
    }
    Ok((e_coarse / e_fine).log2())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyConfig {
    pub base_nodes: usize,
    pub levels: usize,
    pub length: f64,
    pub stepper: StepperConfig,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            base_nodes: 51,
            levels: 4,
            length: 20.0,
            stepper: StepperConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub nodes: usize,
    pub h: f64,
    pub h_over_l: f64,
    /// Norms of `U^h - U^{h/2}` (absent on the finest level).
    pub diff_l2: Option<f64>,
    pub diff_linf: Option<f64>,
    /// Convergence order from this and the next difference.
    pub eoc_l2: Option<f64>,
    pub eoc_linf: Option<f64>,
    /// Errors relative to the finest level restricted to this grid.
    pub rel_l2: f64,
    pub rel_linf: f64,
    pub avg_dt: f64,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub levels: Vec<LevelReport>,
}

/// Solves the same problem on every level of a mesh sequence and compares
/// successive solutions.
pub fn run_study(ic: &InitialCondition, c: Conditioning, cfg: &StudyConfig) -> Result<StudyReport> {
    if cfg.levels < 3 {
        return Err(Error::InvalidParameter(format!(
            "a convergence study needs at least 3 levels, got {}",
            cfg.levels
        )));
    }
    let base = GridSpec::new(cfg.base_nodes, cfg.length)?;
    let meshes = MeshSequence::new(base, cfg.levels);

    let mut solutions = Vec::with_capacity(cfg.levels);
    let mut timings = Vec::with_capacity(cfg.levels);
    for &grid in meshes.grids() {
        let start = Instant::now();
        let ws = RhsWorkspace::new(&CoefficientFields::evaluate(grid, c)?);
        let (u, stats) = integrate_to(&ic.render(grid), &ws, &cfg.stepper)?;
        timings.push(start.elapsed().as_secs_f64());
        solutions.push((u, stats));
    }

    let diffs = solutions
        .windows(2)
        .map(|pair| {
            let coarse = &pair[0].0;
            grid_norms(
                coarse,
                &restrict_fine_to_coarse(&pair[1].0, *coarse.grid())?,
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let reference = &solutions.last().unwrap().0;
    let mut levels = Vec::with_capacity(cfg.levels);
    for (k, ((u, stats), wall)) in solutions.iter().zip(&timings).enumerate() {
        let grid = *u.grid();
        let r = restrict(reference, grid)?;
        let (err_l2, err_linf) = grid_norms(u, &r)?;
        let zero = ScalarField::zeros(grid);
        let (ref_l2, ref_linf) = grid_norms(&r, &zero)?;
        let (eoc_l2, eoc_linf) = match (diffs.get(k), diffs.get(k + 1)) {
            (Some(a), Some(b)) => (Some(eoc(a.0, b.0)?), Some(eoc(a.1, b.1)?)),
            _ => (None, None),
        };
        levels.push(LevelReport {
            nodes: grid.n(),
            h: grid.h(),
            h_over_l: grid.h() / grid.length(),
            diff_l2: diffs.get(k).map(|d| d.0),
            diff_linf: diffs.get(k).map(|d| d.1),
            eoc_l2,
            eoc_linf,
            rel_l2: err_l2 / ref_l2,
            rel_linf: err_linf / ref_linf,
            avg_dt: stats.avg_dt(),
            steps_accepted: stats.steps_accepted,
            steps_rejected: stats.steps_rejected,
            wall_seconds: *wall,
        });
    }
    Ok(StudyReport { levels })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

impl StudyReport {
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(
            w,
            "nodes,h,h_over_l,diff_l2,diff_linf,eoc_l2,eoc_linf,rel_l2,rel_linf,avg_dt,steps_accepted,steps_rejected,wall_seconds"
        )?;
        for l in &self.levels {
            writeln!(
                w,
                "{},{:e},{:e},{},{},{},{},{:e},{:e},{:e},{},{},{:.3}",
                l.nodes,
                l.h,
                l.h_over_l,
                opt(l.diff_l2),
                opt(l.diff_linf),
                opt(l.eoc_l2),
                opt(l.eoc_linf),
                l.rel_l2,
                l.rel_linf,
                l.avg_dt,
                l.steps_accepted,
                l.steps_rejected,
                l.wall_seconds
            )?;
        }
        Ok(())
    }

    /// `(h, ||U^h - U^{h/2}||)` pairs for a log-log plot.
    pub fn write_loglog(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "h,diff_l2,diff_linf")?;
        for l in &self.levels {
            if let (Some(a), Some(b)) = (l.diff_l2, l.diff_linf) {
                writeln!(w, "{:e},{a:e},{b:e}", l.h)?;
            }
        }
        Ok(())
    }

    /// Human-readable table.
    pub fn to_table(&self) -> String {
        let mut s = String::from(
            "   h/L    |  ||.||_2   | ||.||_inf  | EOC_2  | EOC_inf |  rel_2    | rel_inf   |  avg dt   | time [s]\n",
        );
        let fmt = |v: Option<f64>, p: usize| v.map_or("/".to_string(), |x| format!("{x:.p$}"));
        for l in &self.levels {
            s.push_str(&format!(
                "{:9.5} | {:>10} | {:>10} | {:>6} | {:>7} | {:.3e} | {:.3e} | {:.3e} | {:.2}\n",
                l.h_over_l,
                fmt(l.diff_l2, 6),
                fmt(l.diff_linf, 6),
                fmt(l.eoc_l2, 4),
                fmt(l.eoc_linf, 4),
                l.rel_l2,
                l.rel_linf,
                l.avg_dt,
                l.wall_seconds
            ));
        }
        s
    }
}
