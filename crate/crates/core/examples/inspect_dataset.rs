//! Prints the manifest of a dataset file and per-record statistics.
//!
//! ```text
//! cargo run --example inspect_dataset -- data.cdr
//! ```

use cdr_solver::dataset::format::Dataset;

fn main() -> cdr_solver::Result<()> {
    let path = std::env::args()
        .nth(1)
        .expect("usage: inspect_dataset FILE");
    let ds = Dataset::read_file(path.as_ref())?;
    let m = &ds.manifest;
    println!(
        "{:?} dataset, {} records, {:?}, stored {}x{}",
        m.kind,
        m.records.len(),
        m.dtype,
        m.stored_nodes,
        m.stored_nodes
    );
    println!("prng {}, master seed {:?}", m.prng, m.master_seed);
    println!(
        "{:>5}  {:>30}  {:>9}  {:>9}  {:>6}",
        "index", "c", "max x0", "max xm", "steps"
    );
    for (meta, s) in m.records.iter().zip(&ds.samples) {
        let c = meta.c.map(|v| format!("{v:.3}")).join(",");
        println!(
            "{:5}  {c:>30}  {:9.4}  {:9.4}  {:6}",
            meta.index,
            s.x0.max(),
            s.xm.max(),
            s.stats.steps_accepted
        );
    }
    Ok(())
}
