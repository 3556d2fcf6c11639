use std::path::Path;
use std::process::{Command, Output};

use cdr_solver::dataset::format::Dataset;
use cdr_solver::Conditioning;
use tempfile::TempDir;

fn cdr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cdr"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_owned()
}

#[test]
fn simulate_reference_problem() {
    let dir = TempDir::new().unwrap();
    let out = path(dir.path(), "ref.cdr");
    let log = path(dir.path(), "steps.csv");
    let field = path(dir.path(), "xm.csv");
    let run = cdr(&[
        "simulate",
        "--preset",
        "reference",
        "--nodes",
        "51",
        "--out",
        &out,
        "--step-log",
        &log,
        "--csv",
        &field,
    ]);
    assert_eq!(
        run.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    let stats: serde_json::Value = serde_json::from_str(stdout(&run).trim()).unwrap();
    assert_eq!(stats["final_time"], 1.5);
    let avg_dt = stats["avg_dt"].as_f64().unwrap();
    assert!((avg_dt / 0.00688 - 1.0).abs() <= 0.3, "avg dt {avg_dt}");

    let ds = Dataset::read_file(Path::new(&out)).unwrap();
    assert_eq!(ds.samples.len(), 1);
    assert_eq!(ds.manifest.stored_nodes, 51);
    assert_eq!(ds.samples[0].c, Conditioning::reference());

    let log = std::fs::read_to_string(&log).unwrap();
    let accepted = log.lines().skip(1).filter(|l| l.ends_with(",1")).count();
    assert_eq!(accepted as u64, stats["steps_accepted"].as_u64().unwrap());
    let rows = std::fs::read_to_string(&field).unwrap().lines().count();
    assert!(rows > 51);
}

#[test]
fn simulate_seeded_ic_with_explicit_conditioning() {
    let dir = TempDir::new().unwrap();
    let out = path(dir.path(), "seeded.cdr");
    let run = cdr(&[
        "simulate",
        "--ic-seed",
        "3",
        "--c",
        "0,0,1,1",
        "--nodes",
        "41",
        "--out",
        &out,
    ]);
    assert_eq!(
        run.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    let ds = Dataset::read_file(Path::new(&out)).unwrap();
    assert_eq!(ds.samples[0].c, Conditioning::new(0.0, 0.0, 1.0, 1.0));
    assert_eq!(ds.samples[0].seed_ic, 3);
}

#[test]
fn preset_alias_selects_the_reference_coefficients() {
    let dir = TempDir::new().unwrap();
    let out = path(dir.path(), "alias.cdr");
    let run = cdr(&[
        "simulate",
        "--preset",
        "table3",
        "--nodes",
        "21",
        "--final-time",
        "0.1",
        "--out",
        &out,
    ]);
    assert_eq!(
        run.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    let ds = Dataset::read_file(Path::new(&out)).unwrap();
    assert_eq!(ds.samples[0].c, Conditioning::reference());
    assert_eq!(
        cdr(&["simulate", "--preset", "other", "--out", &out])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn missing_output_path_is_a_config_error() {
    let run = cdr(&["simulate", "--preset", "reference"]);
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn bad_conditioning_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let out = path(dir.path(), "x.cdr");
    let run = cdr(&["simulate", "--c", "1,2,3", "--out", &out]);
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn gen_test_then_inspect() {
    let dir = TempDir::new().unwrap();
    let d = dir.path().to_str().unwrap();
    let run = cdr(&[
        "gen-test", "--nic", "2", "--nc", "3", "--seed", "7", "--nodes", "40", "--out", d,
    ]);
    assert_eq!(
        run.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    assert!(dir.path().join("test.manifest.json").exists());

    let file = path(dir.path(), "test.cdr");
    let info = cdr(&["inspect", &file]);
    assert_eq!(info.status.code(), Some(0));
    let text = stdout(&info);
    assert!(
        text.lines()
            .any(|l| l.starts_with("records:") && l.ends_with(" 6")),
        "{text}"
    );
    assert!(
        text.contains("2 initial conditions x 3 conditionings"),
        "{text}"
    );

    let records = cdr(&["inspect", &file, "--records"]);
    assert!(
        stdout(&records)
            .lines()
            .filter(|l| !l.trim().is_empty())
            .count()
            > 6
    );

    let exported = path(dir.path(), "x0.csv");
    let export = cdr(&[
        "export-field",
        &file,
        "--record",
        "4",
        "--field",
        "x0",
        "--out",
        &exported,
    ]);
    assert_eq!(export.status.code(), Some(0));
    assert!(std::fs::read_to_string(&exported).unwrap().lines().count() >= 100);
}

#[test]
fn gen_train_is_reproducible_and_inside_the_box() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let run = cdr(&[
            "gen-train",
            "--n",
            "10",
            "--seed",
            "11",
            "--nodes",
            "40",
            "--out",
            d.to_str().unwrap(),
        ]);
        assert_eq!(
            run.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&run.stderr)
        );
    }
    let bytes_a = std::fs::read(a.join("train.cdr")).unwrap();
    assert_eq!(bytes_a, std::fs::read(b.join("train.cdr")).unwrap());

    let ds = Dataset::from_bytes(&bytes_a).unwrap();
    assert_eq!(ds.samples.len(), 10);
    assert!(ds.samples.iter().all(|s| s.c.in_sampling_box()));
    let info = stdout(&cdr(&["inspect", a.join("train.cdr").to_str().unwrap()]));
    assert_eq!(info.matches("ok").count(), 4, "{info}");
}

#[test]
fn corrupted_files_are_format_errors() {
    let dir = TempDir::new().unwrap();
    let d = dir.path().to_str().unwrap();
    let run = cdr(&["gen-train", "--n", "2", "--nodes", "20", "--out", d]);
    assert_eq!(run.status.code(), Some(0));
    let bytes = std::fs::read(dir.path().join("train.cdr")).unwrap();

    let truncated = path(dir.path(), "short.cdr");
    std::fs::write(&truncated, &bytes[..bytes.len() - 7]).unwrap();
    assert_eq!(cdr(&["inspect", &truncated]).status.code(), Some(4));

    let mut bad = bytes.clone();
    bad[1] = b'?';
    let bad_magic = path(dir.path(), "magic.cdr");
    std::fs::write(&bad_magic, bad).unwrap();
    assert_eq!(cdr(&["inspect", &bad_magic]).status.code(), Some(4));

    let missing = path(dir.path(), "missing.cdr");
    assert_eq!(cdr(&["inspect", &missing]).status.code(), Some(1));
}

#[test]
fn convergence_writes_tables() {
    let dir = TempDir::new().unwrap();
    let d = dir.path().to_str().unwrap();
    let run = cdr(&[
        "convergence",
        "--base-nodes",
        "11",
        "--levels",
        "3",
        "--final-time",
        "0.3",
        "--out",
        d,
    ]);
    assert_eq!(
        run.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    let table = std::fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    assert_eq!(table.lines().count(), 4);
    assert!(dir.path().join("loglog.csv").exists());
}

#[test]
fn config_file_values_are_overridden_by_flags() {
    let dir = TempDir::new().unwrap();
    let cfg = path(dir.path(), "cfg.json");
    std::fs::write(&cfg, r#"{"final_time": 0.2, "nodes": 21}"#).unwrap();
    let out = path(dir.path(), "o.cdr");
    let run = cdr(&[
        "simulate",
        "--config",
        &cfg,
        "--final-time",
        "0.1",
        "--preset",
        "reference",
        "--out",
        &out,
    ]);
    assert_eq!(
        run.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    let ds = Dataset::read_file(Path::new(&out)).unwrap();
    assert_eq!(ds.manifest.final_time, 0.1);
    assert_eq!(ds.manifest.stored_nodes, 21);
}
