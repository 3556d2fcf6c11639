//! Command-line front end: `simulate`, `convergence`, `gen-train`,
//! `gen-test`, `inspect` and `export-field`.
//!
//! Every subcommand accepts `--config FILE` (JSON object using the long
//! flag names with `_` instead of `-`); flags given on the command line
//! override file values. The resolved configuration is echoed to stderr.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::coefficients::{CoefficientFields, Conditioning};
use crate::convergence::{run_study, StudyConfig};
use crate::dataset::format::{
    DType, Dataset, DatasetKind, FormatError, Manifest, SamplePair, SolveSummary, LAYOUT,
};
use crate::dataset::{gen_test_set, gen_training_set, DatasetConfig};
use crate::error::Error;
use crate::grid::{GridSpec, ScalarField};
use crate::initial::InitialCondition;
use crate::integrator::{integrate_field, write_step_log, StepperConfig};
use crate::rng::{self, Stream};
use crate::stencil::RhsWorkspace;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_FORMAT: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "cdr",
    version,
    about = "Convection-diffusion-reaction solver, mesh study and dataset generator",
    after_help = "Exit codes: 0 ok, 1 I/O error, 2 configuration error, 3 solver failure, 4 dataset format error."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one initial condition to the final time.
    Simulate(SimulateArgs),
    /// Mesh refinement study on nested grids.
    Convergence(ConvergenceArgs),
    /// Generate randomly sampled training pairs.
    GenTrain(GenTrainArgs),
    /// Generate the factorial test set (every IC with every conditioning).
    GenTest(GenTestArgs),
    /// Summarize a dataset file.
    Inspect(InspectArgs),
    /// Write one stored field of a dataset as CSV.
    ExportField(ExportArgs),
}

#[derive(Debug, Args, Default, Clone)]
pub struct SolverArgs {
    /// JSON config file; command-line flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Domain edge length L [default: 20]
    #[arg(long)]
    pub length: Option<f64>,
    /// Final time T [default: 1.5]
    #[arg(long)]
    pub final_time: Option<f64>,
    /// Local error tolerance of the step controller [default: 1e-6]
    #[arg(long)]
    pub tol: Option<f64>,
    /// First trial time step [default: 1e-4]
    #[arg(long)]
    pub dt_init: Option<f64>,
}

#[derive(Debug, Args, Default, Clone)]
pub struct ProblemArgs {
    /// Sample the initial condition from this seed (default: fixed fifteen-hill fixture).
    #[arg(long, conflicts_with = "ic_file")]
    pub ic_seed: Option<u64>,
    /// CSV file of hills with columns i,H,x_max,y_max,R.
    #[arg(long)]
    pub ic_file: Option<PathBuf>,
    /// Conditioning vector "c1,c2,c3,c4" [default: reference preset 6,3,1,2]
    #[arg(long, value_parser = parse_conditioning, allow_hyphen_values = true)]
    pub c: Option<Conditioning>,
    /// Named coefficient preset: "reference" (alias "table3").
    #[arg(long, conflicts_with = "c")]
    pub preset: Option<String>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Nodes per axis [default: 51]
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Output dataset file holding the initial and final field.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the accept/reject step log as CSV.
    #[arg(long)]
    pub step_log: Option<PathBuf>,
    /// Also write the final field as CSV (i,j,x,y,u).
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Store float64 instead of float32.
    #[arg(long)]
    pub f64: bool,
}

#[derive(Debug, Args)]
pub struct ConvergenceArgs {
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Nodes per axis on the coarsest level [default: 51]
    #[arg(long)]
    pub base_nodes: Option<usize>,
    /// Number of levels, at least 3 [default: 4]
    #[arg(long)]
    pub levels: Option<usize>,
    /// Add the fifth (h/L = 0.00125) level; slow.
    #[arg(long)]
    pub fifth_level: bool,
    /// Directory for convergence.csv and loglog.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Default, Clone)]
pub struct DatasetArgs {
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Master seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Solver nodes per axis [default: 256]
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Block-mean downsampling factor [default: 4]
    #[arg(long)]
    pub coarsen: Option<usize>,
    /// Worker threads [default: all cores]
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Store float64 instead of float32.
    #[arg(long)]
    pub f64: bool,
}

#[derive(Debug, Args)]
pub struct GenTrainArgs {
    #[command(flatten)]
    pub dataset: DatasetArgs,
    /// Number of pairs [default: 10000]
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GenTestArgs {
    #[command(flatten)]
    pub dataset: DatasetArgs,
    /// Number of initial conditions [default: 50]
    #[arg(long)]
    pub nic: Option<usize>,
    /// Number of conditioning vectors [default: 50]
    #[arg(long)]
    pub nc: Option<usize>,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    pub path: PathBuf,
    /// Print every record.
    #[arg(long)]
    pub records: bool,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    pub path: PathBuf,
    /// Record position in the file [default: 0]
    #[arg(long, default_value_t = 0)]
    pub record: usize,
    /// Which field to export.
    #[arg(long, value_parser = ["x0", "xm"], default_value = "xm")]
    pub field: String,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_conditioning(s: &str) -> Result<Conditioning, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    let c: [f64; 4] = parts
        .try_into()
        .map_err(|v: Vec<f64>| format!("expected 4 comma-separated values, got {}", v.len()))?;
    Ok(Conditioning::from_array(c))
}

/// Keys accepted in `--config` files.
#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub length: Option<f64>,
    pub final_time: Option<f64>,
    pub tol: Option<f64>,
    pub dt_init: Option<f64>,
    pub ic_seed: Option<u64>,
    pub ic_file: Option<PathBuf>,
    pub c: Option<[f64; 4]>,
    pub preset: Option<String>,
    pub nodes: Option<usize>,
    pub base_nodes: Option<usize>,
    pub levels: Option<usize>,
    pub out: Option<PathBuf>,
    pub step_log: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub seed: Option<u64>,
    pub coarsen: Option<usize>,
    pub jobs: Option<usize>,
    pub n: Option<usize>,
    pub nic: Option<usize>,
    pub nc: Option<usize>,
    pub f64: Option<bool>,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidGrid(_)
            | Error::InvalidParameter(_)
            | Error::NotPositiveDefinite { .. }
            | Error::Fixture { .. }
            | Error::Csv(_) => EXIT_CONFIG,
            Error::Format(_) => EXIT_FORMAT,
            Error::Io(_) => EXIT_IO,
            _ => EXIT_SOLVER,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        Self {
            code: EXIT_FORMAT,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self {
            code: EXIT_IO,
            message: e.to_string(),
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn load_file_config(path: &Option<PathBuf>) -> CliResult<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("invalid config {}: {e}", path.display())))
}

fn echo<T: Serialize>(what: &str, value: &T) {
    eprintln!(
        "{what}: {}",
        serde_json::to_string(value).unwrap_or_else(|_| "<unserializable>".into())
    );
}

fn stepper(args: &SolverArgs, file: &FileConfig) -> CliResult<(f64, StepperConfig)> {
    let length = args.length.or(file.length).unwrap_or(20.0);
    let defaults = StepperConfig::default();
    let cfg = StepperConfig {
        tol: args.tol.or(file.tol).unwrap_or(defaults.tol),
        dt_init: args.dt_init.or(file.dt_init).unwrap_or(defaults.dt_init),
        final_time: args
            .final_time
            .or(file.final_time)
            .unwrap_or(defaults.final_time),
        ..defaults
    };
    cfg.validate()?;
    if !(length > 0.0) {
        return Err(CliError::config(format!(
            "length must be positive, got {length}"
        )));
    }
    Ok((length, cfg))
}

#[derive(Debug, Serialize)]
struct ResolvedProblem {
    ic: String,
    c: Conditioning,
}

fn problem(
    args: &ProblemArgs,
    file: &FileConfig,
    length: f64,
) -> CliResult<(InitialCondition, Conditioning, Option<u64>, ResolvedProblem)> {
    let ic_seed = args.ic_seed.or(file.ic_seed);
    let ic_file = args.ic_file.clone().or_else(|| file.ic_file.clone());
    let (ic, label) = match (ic_seed, ic_file) {
        (Some(_), Some(_)) => {
            return Err(CliError::config(
                "give either an IC seed or an IC file, not both",
            ))
        }
        (Some(seed), None) => (
            InitialCondition::sample(&mut Stream::new(seed), length),
            format!("sampled from seed {seed}"),
        ),
        (None, Some(path)) => (
            InitialCondition::from_csv_file(&path, length)?,
            format!("file {}", path.display()),
        ),
        (None, None) => (
            InitialCondition::reference(length),
            "reference fixture".to_string(),
        ),
    };
    let c = match (
        args.c.or(file.c.map(Conditioning::from_array)),
        args.preset.as_ref().or(file.preset.as_ref()),
    ) {
        (Some(_), Some(_)) => {
            return Err(CliError::config("give either --c or --preset, not both"))
        }
        (Some(c), None) => c,
        (None, Some(p)) if p == "reference" || p == "table3" => Conditioning::reference(),
        (None, Some(p)) => return Err(CliError::config(format!("unknown preset {p:?}"))),
        (None, None) => Conditioning::reference(),
    };
    Ok((ic, c, ic_seed, ResolvedProblem { ic: label, c }))
}

fn simulate(args: SimulateArgs) -> CliResult {
    let file = load_file_config(&args.solver.config)?;
    let (length, cfg) = stepper(&args.solver, &file)?;
    let (ic, c, ic_seed, resolved) = problem(&args.problem, &file, length)?;
    let nodes = args.nodes.or(file.nodes).unwrap_or(51);
    let out = args
        .out
        .or(file.out)
        .ok_or_else(|| CliError::config("missing output path (--out)"))?;
    let step_log = args.step_log.or(file.step_log);
    let csv = args.csv.or(file.csv);
    let dtype = if args.f64 || file.f64.unwrap_or(false) {
        DType::F64
    } else {
        DType::F32
    };
    let grid = GridSpec::new(nodes, length)?;
    echo(
        "resolved config",
        &serde_json::json!({
            "command": "simulate", "nodes": nodes, "length": length, "stepper": cfg,
            "problem": resolved, "out": out, "dtype": dtype,
        }),
    );

    let ws = RhsWorkspace::new(&CoefficientFields::evaluate(grid, c)?);
    let u0 = ic.render(grid);
    let (um, stats) = integrate_field(&u0, &ws, &cfg, step_log.is_some())?;

    let manifest = Manifest {
        format_version: crate::dataset::format::FORMAT_VERSION,
        kind: DatasetKind::Simulation,
        dtype,
        layout: LAYOUT.into(),
        fine_nodes: nodes,
        stored_nodes: nodes,
        downsample: "none".into(),
        length,
        final_time: cfg.final_time,
        tol: cfg.tol,
        dt_init: cfg.dt_init,
        prng: rng::ALGORITHM_ID.into(),
        master_seed: None,
        factorial: None,
        records: vec![],
        failures: vec![],
        payload_bytes: 0,
        payload_sha256: String::new(),
    };
    let summary = SolveSummary {
        steps_accepted: stats.steps_accepted,
        steps_rejected: stats.steps_rejected,
        avg_dt: stats.avg_dt(),
    };
    let pair = SamplePair {
        x0: u0,
        xm: um.clone(),
        c,
        seed_ic: ic_seed.unwrap_or(0),
        seed_c: 0,
        k1: None,
        k2: None,
        stats: summary,
    };
    Dataset::assemble(manifest, vec![pair]).write_file(&out)?;
    if let Some(path) = step_log {
        write_step_log(std::io::BufWriter::new(fs::File::create(path)?), &stats.log)?;
    }
    if let Some(path) = csv {
        write_field_csv(&path, &um)?;
    }
    println!(
        "{}",
        serde_json::json!({
            "final_time": stats.final_time,
            "steps_accepted": stats.steps_accepted,
            "steps_rejected": stats.steps_rejected,
            "avg_dt": stats.avg_dt(),
            "min": um.min(),
            "max": um.max(),
        })
    );
    Ok(())
}

fn convergence(args: ConvergenceArgs) -> CliResult {
    let file = load_file_config(&args.solver.config)?;
    let (length, stepper) = stepper(&args.solver, &file)?;
    let (ic, c, _, resolved) = problem(&args.problem, &file, length)?;
    let mut levels = args.levels.or(file.levels).unwrap_or(4);
    if args.fifth_level {
        levels = levels.max(5);
    }
    let cfg = StudyConfig {
        base_nodes: args.base_nodes.or(file.base_nodes).unwrap_or(51),
        levels,
        length,
        stepper,
    };
    let out = args.out.or(file.out);
    echo(
        "resolved config",
        &serde_json::json!({ "command": "convergence", "study": cfg, "problem": resolved, "out": out }),
    );
    let report = run_study(&ic, c, &cfg)?;
    print!("{}", report.to_table());
    if let Some(dir) = out {
        fs::create_dir_all(&dir)?;
        report.write_csv(fs::File::create(dir.join("convergence.csv"))?)?;
        report.write_loglog(fs::File::create(dir.join("loglog.csv"))?)?;
    }
    Ok(())
}

fn dataset_config(
    args: &DatasetArgs,
    file: &FileConfig,
) -> CliResult<(DatasetConfig, u64, PathBuf)> {
    let (length, stepper) = stepper(&args.solver, file)?;
    let cfg = DatasetConfig {
        fine_nodes: args.nodes.or(file.nodes).unwrap_or(256),
        coarsen: args.coarsen.or(file.coarsen).unwrap_or(4),
        length,
        stepper,
        dtype: if args.f64 || file.f64.unwrap_or(false) {
            DType::F64
        } else {
            DType::F32
        },
        jobs: args.jobs.or(file.jobs),
        progress: true,
    };
    cfg.validate()?;
    let out = args
        .out
        .clone()
        .or_else(|| file.out.clone())
        .ok_or_else(|| CliError::config("missing output directory (--out)"))?;
    Ok((cfg, args.seed.or(file.seed).unwrap_or(0), out))
}

fn write_dataset(ds: &Dataset, dir: &Path, stem: &str) -> CliResult {
    fs::create_dir_all(dir)?;
    ds.write_file(&dir.join(format!("{stem}.cdr")))?;
    let manifest = serde_json::to_string_pretty(&ds.manifest).expect("manifest serializes");
    fs::write(dir.join(format!("{stem}.manifest.json")), manifest + "\n")?;
    println!(
        "wrote {} records ({} failed) to {}",
        ds.samples.len(),
        ds.manifest.failures.len(),
        dir.join(format!("{stem}.cdr")).display()
    );
    Ok(())
}

fn gen_train(args: GenTrainArgs) -> CliResult {
    let file = load_file_config(&args.dataset.solver.config)?;
    let (cfg, seed, out) = dataset_config(&args.dataset, &file)?;
    let n = args.n.or(file.n).unwrap_or(10_000);
    echo(
        "resolved config",
        &serde_json::json!({ "command": "gen-train", "n": n, "seed": seed, "dataset": cfg, "out": out }),
    );
    let ds = gen_training_set(n, seed, &cfg)?;
    write_dataset(&ds, &out, "train")
}

fn gen_test(args: GenTestArgs) -> CliResult {
    let file = load_file_config(&args.dataset.solver.config)?;
    let (cfg, seed, out) = dataset_config(&args.dataset, &file)?;
    let n_ic = args.nic.or(file.nic).unwrap_or(50);
    let n_c = args.nc.or(file.nc).unwrap_or(50);
    echo(
        "resolved config",
        &serde_json::json!({
            "command": "gen-test", "nic": n_ic, "nc": n_c, "seed": seed, "dataset": cfg, "out": out,
        }),
    );
    let ds = gen_test_set(n_ic, n_c, seed, &cfg)?;
    write_dataset(&ds, &out, "test")
}

fn read_dataset(path: &Path) -> CliResult<Dataset> {
    let bytes = fs::read(path)?;
    Ok(Dataset::from_bytes(&bytes)?)
}

fn inspect(args: InspectArgs) -> CliResult {
    let ds = read_dataset(&args.path)?;
    let m = &ds.manifest;
    let mut out = std::io::stdout().lock();
    writeln!(out, "file:        {}", args.path.display())?;
    writeln!(out, "kind:        {:?}", m.kind)?;
    writeln!(out, "records:     {}", ds.samples.len())?;
    writeln!(out, "failures:    {}", m.failures.len())?;
    writeln!(
        out,
        "grid:        solver {0}x{0}, stored {1}x{1} ({2}), dtype {3:?}",
        m.fine_nodes, m.stored_nodes, m.downsample, m.dtype
    )?;
    writeln!(
        out,
        "problem:     L={} T={} tol={:e} dt_init={:e}",
        m.length, m.final_time, m.tol, m.dt_init
    )?;
    if let Some(f) = m.factorial {
        writeln!(
            out,
            "factorial:   {} initial conditions x {} conditionings",
            f.n_ic, f.n_c
        )?;
    }
    if ds.samples.is_empty() {
        return Ok(());
    }

    let mut c_min = [f64::INFINITY; 4];
    let mut c_max = [f64::NEG_INFINITY; 4];
    for s in &ds.samples {
        for (k, v) in s.c.to_array().into_iter().enumerate() {
            c_min[k] = c_min[k].min(v);
            c_max[k] = c_max[k].max(v);
        }
    }
    for k in 0..4 {
        let (lo, hi) = crate::coefficients::SAMPLING_BOX[k];
        let inside = c_min[k] >= lo && c_max[k] <= hi;
        writeln!(
            out,
            "c{}:          min {:.6} max {:.6}  box [{lo}, {hi}] {}",
            k + 1,
            c_min[k],
            c_max[k],
            if inside { "ok" } else { "OUTSIDE" }
        )?;
    }
    let range = |f: fn(&SamplePair) -> &ScalarField| {
        ds.samples
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
                (lo.min(f(s).min()), hi.max(f(s).max()))
            })
    };
    let (a, b) = range(|s| &s.x0);
    writeln!(out, "x0 range:    [{a:.6e}, {b:.6e}]")?;
    let (a, b) = range(|s| &s.xm);
    writeln!(out, "xm range:    [{a:.6e}, {b:.6e}]")?;
    if args.records {
        writeln!(
            out,
            "index,k1,k2,c1,c2,c3,c4,x0_min,x0_max,xm_min,xm_max,avg_dt"
        )?;
        for (meta, s) in m.records.iter().zip(&ds.samples) {
            let k = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{},{},{},{:e},{:e},{:e},{:e},{:e}",
                meta.index,
                k(meta.k1),
                k(meta.k2),
                s.c.c1,
                s.c.c2,
                s.c.c3,
                s.c.c4,
                s.x0.min(),
                s.x0.max(),
                s.xm.min(),
                s.xm.max(),
                s.stats.avg_dt
            )?;
        }
    }
    Ok(())
}

/// Writes `i,j,x,y,u` rows.
pub fn write_field_csv(path: &Path, field: &ScalarField) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(fs::File::create(path)?);
    let g = field.grid();
    writeln!(w, "i,j,x,y,u")?;
    for i in 0..g.n() {
        for j in 0..g.n() {
            writeln!(
                w,
                "{i},{j},{},{},{:e}",
                g.coord(i),
                g.coord(j),
                field.get(i, j)
            )?;
        }
    }
    w.flush()
}

fn export_field(args: ExportArgs) -> CliResult {
    let ds = read_dataset(&args.path)?;
    let sample = ds.samples.get(args.record).ok_or_else(|| {
        CliError::config(format!(
            "record {} out of range ({} records)",
            args.record,
            ds.samples.len()
        ))
    })?;
    let field = if args.field == "x0" {
        &sample.x0
    } else {
        &sample.xm
    };
    write_field_csv(&args.out, field)?;
    Ok(())
}

pub fn execute(cli: Cli) -> CliResult {
    match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Convergence(a) => convergence(a),
        Command::GenTrain(a) => gen_train(a),
        Command::GenTest(a) => gen_test(a),
        Command::Inspect(a) => inspect(a),
        Command::ExportField(a) => export_field(a),
    }
}

/// Parses `args` (including the program name) and runs the command;
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
