//! Reproducible generation of (initial field, final field, conditioning)
//! pairs: a randomly sampled training set and a factorial test set.

pub mod format;

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coefficients::{CoefficientFields, Conditioning};
use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField};
use crate::initial::InitialCondition;
use crate::integrator::{integrate_to, StepperConfig};
use crate::rng::{self, Stream};
use crate::stencil::RhsWorkspace;

use format::{
    DType, Dataset, DatasetKind, FactorialShape, Failure, Manifest, RecordMeta, SamplePair,
    SolveSummary, LAYOUT,
};

/// Averages each `factor x factor` block of nodes; block `(I, J)` covers
/// fine indices `[fI, fI+f-1] x [fJ, fJ+f-1]`.
pub fn coarse_grain(fine: &ScalarField, factor: usize) -> Result<ScalarField> {
    let n = fine.grid().n();
    if factor == 0 || !n.is_multiple_of(factor) {
        return Err(Error::ShapeMismatch(format!(
            "{n} nodes per axis are not divisible by {factor}"
        )));
    }
    let nc = n / factor;
    let coarse = GridSpec::new(nc, fine.grid().length())?;
    let scale = 1.0 / (factor * factor) as f64;
    let mut values = Vec::with_capacity(nc * nc);
    for bi in 0..nc {
        for bj in 0..nc {
            let mut sum = 0.0;
            for i in factor * bi..factor * (bi + 1) {
                for j in factor * bj..factor * (bj + 1) {
                    sum += fine.get(i, j);
                }
            }
            values.push(sum * scale);
        }
    }
    ScalarField::from_values(coarse, values)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetConfig {
    /// Solver nodes per axis.
    pub fine_nodes: usize,
    /// Block size of the downsampling (stored nodes = fine_nodes / coarsen).
    pub coarsen: usize,
    pub length: f64,
    pub stepper: StepperConfig,
    pub dtype: DType,
    /// Worker threads; `None` uses every core.
    pub jobs: Option<usize>,
    /// Print a progress line to stderr every ~1% of samples.
    #[serde(default)]
    pub progress: bool,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            fine_nodes: 256,
            coarsen: 4,
            length: 20.0,
            stepper: StepperConfig::default(),
            dtype: DType::F32,
            jobs: None,
            progress: false,
        }
    }
}

impl DatasetConfig {
    pub fn validate(&self) -> Result<()> {
        GridSpec::new(self.fine_nodes, self.length)?;
        self.stepper.validate()?;
        if self.coarsen == 0 || !self.fine_nodes.is_multiple_of(self.coarsen) {
            return Err(Error::InvalidParameter(format!(
                "fine grid of {} nodes cannot be coarsened by {}",
                self.fine_nodes, self.coarsen
            )));
        }
        if self.jobs == Some(0) {
            return Err(Error::InvalidParameter("jobs must be at least 1".into()));
        }
        Ok(())
    }

    fn manifest(&self, kind: DatasetKind, master_seed: u64) -> Manifest {
        Manifest {
            format_version: format::FORMAT_VERSION,
            kind,
            dtype: self.dtype,
            layout: LAYOUT.into(),
            fine_nodes: self.fine_nodes,
            stored_nodes: self.fine_nodes / self.coarsen,
            downsample: if self.coarsen == 1 {
                "none".into()
            } else {
                format!("block-mean-{0}x{0}", self.coarsen)
            },
            length: self.length,
            final_time: self.stepper.final_time,
            tol: self.stepper.tol,
            dt_init: self.stepper.dt_init,
            prng: rng::ALGORITHM_ID.into(),
            master_seed: Some(master_seed),
            factorial: None,
            records: vec![],
            failures: vec![],
            payload_bytes: 0,
            payload_sha256: String::new(),
        }
    }

    fn run<T: Send>(&self, work: impl FnOnce() -> T + Send) -> Result<T> {
        match self.jobs {
            None => Ok(work()),
            Some(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| Error::InvalidParameter(e.to_string()))?;
                Ok(pool.install(work))
            }
        }
    }
}

/// Solves one pair from its two stream seeds.
pub fn solve_sample(seed_ic: u64, seed_c: u64, cfg: &DatasetConfig) -> Result<SamplePair> {
    let grid = GridSpec::new(cfg.fine_nodes, cfg.length)?;
    let ic = InitialCondition::sample(&mut Stream::new(seed_ic), cfg.length);
    let c = Conditioning::sample(&mut Stream::new(seed_c));
    let u0 = ic.render(grid);
    let ws = RhsWorkspace::new(&CoefficientFields::evaluate(grid, c)?);
    let (um, stats) = integrate_to(&u0, &ws, &cfg.stepper)?;
    Ok(SamplePair {
        x0: coarse_grain(&u0, cfg.coarsen)?,
        xm: coarse_grain(&um, cfg.coarsen)?,
        c,
        seed_ic,
        seed_c,
        k1: None,
        k2: None,
        stats: SolveSummary {
            steps_accepted: stats.steps_accepted,
            steps_rejected: stats.steps_rejected,
            avg_dt: stats.avg_dt(),
        },
    })
}

/// Regenerates a stored record from the seeds in its manifest entry.
pub fn regenerate(meta: &RecordMeta, cfg: &DatasetConfig) -> Result<SamplePair> {
    let mut s = solve_sample(meta.seed_ic, meta.seed_c, cfg)?;
    s.k1 = meta.k1;
    s.k2 = meta.k2;
    Ok(s)
}

/// Solver settings a manifest was produced with.
pub fn config_from_manifest(m: &Manifest) -> DatasetConfig {
    DatasetConfig {
        fine_nodes: m.fine_nodes,
        coarsen: m.fine_nodes / m.stored_nodes.max(1),
        length: m.length,
        stepper: StepperConfig {
            tol: m.tol,
            dt_init: m.dt_init,
            final_time: m.final_time,
            ..StepperConfig::default()
        },
        dtype: m.dtype,
        jobs: None,
        progress: false,
    }
}

struct Job {
    seed_ic: u64,
    seed_c: u64,
    k1: Option<usize>,
    k2: Option<usize>,
}

fn solve_all(jobs: Vec<Job>, cfg: &DatasetConfig) -> Result<(Vec<SamplePair>, Vec<Failure>)> {
    let total = jobs.len();
    let done = AtomicUsize::new(0);
    let step = (total / 100).max(1);
    let results: Vec<_> = cfg.run(|| {
        jobs.into_par_iter()
            .map(|job| {
                let result = solve_sample(job.seed_ic, job.seed_c, cfg);
                let finished = done.fetch_add(1, Ordering::Relaxed) + 1;
                if cfg.progress && (finished.is_multiple_of(step) || finished == total) {
                    eprintln!("solved {finished}/{total}");
                }
                (job, result)
            })
            .collect()
    })?;

    let mut samples = Vec::with_capacity(total);
    let mut failures = Vec::new();
    for (job, result) in results {
        match result {
            Ok(mut s) => {
                s.k1 = job.k1;
                s.k2 = job.k2;
                samples.push(s);
            }
            Err(e) => {
                eprintln!(
                    "sample (seed_ic={}, seed_c={}) failed: {e}",
                    job.seed_ic, job.seed_c
                );
                failures.push(Failure {
                    seed_ic: job.seed_ic,
                    seed_c: job.seed_c,
                    k1: job.k1,
                    k2: job.k2,
                    reason: e.to_string(),
                });
            }
        }
    }
    if failures.len() * 100 > total {
        return Err(Error::TooManyFailures {
            failed: failures.len(),
            total,
        });
    }
    Ok((samples, failures))
}

/// `n` independent pairs; pair `k` draws its initial condition and its
/// conditioning from child streams `k` of `seed`.
pub fn gen_training_set(n: usize, seed: u64, cfg: &DatasetConfig) -> Result<Dataset> {
    cfg.validate()?;
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let jobs = (0..n as u64)
        .map(|k| Job {
            seed_ic: rng::derive_seed(seed, rng::TAG_INITIAL, k),
            seed_c: rng::derive_seed(seed, rng::TAG_CONDITIONING, k),
            k1: None,
            k2: None,
        })
        .collect();
    let (samples, failures) = solve_all(jobs, cfg)?;
    let mut manifest = cfg.manifest(DatasetKind::Train, seed);
    manifest.failures = failures;
    Ok(Dataset::assemble(manifest, samples))
}

/// Every combination of `n_ic` initial conditions with `n_c` conditioning
/// vectors. Record `(k1, k2)` sits at position `k1 * n_c + k2` unless
/// earlier solves failed.
pub fn gen_test_set(n_ic: usize, n_c: usize, seed: u64, cfg: &DatasetConfig) -> Result<Dataset> {
    cfg.validate()?;
    if n_ic == 0 || n_c == 0 {
        return Err(Error::InvalidParameter(
            "need at least one group per factor".into(),
        ));
    }
    let mut jobs = Vec::with_capacity(n_ic * n_c);
    for k1 in 0..n_ic {
        for k2 in 0..n_c {
            jobs.push(Job {
                seed_ic: rng::derive_seed(seed, rng::TAG_INITIAL, k1 as u64),
                seed_c: rng::derive_seed(seed, rng::TAG_CONDITIONING, k2 as u64),
                k1: Some(k1),
                k2: Some(k2),
            });
        }
    }
    let (samples, failures) = solve_all(jobs, cfg)?;
    let mut manifest = cfg.manifest(DatasetKind::FactorialTest, seed);
    manifest.factorial = Some(FactorialShape { n_ic, n_c });
    manifest.failures = failures;
    Ok(Dataset::assemble(manifest, samples))
}
