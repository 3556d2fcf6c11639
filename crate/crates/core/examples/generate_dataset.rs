//! Builds a small factorial test set, writes it, reads it back and
//! regenerates one record from its stored seeds.
//!
//! ```text
//! cargo run --release --example generate_dataset -- [out.cdr]
//! ```
//!
//! Uses a 64-node solver grid so it finishes in seconds; the production
//! setting is 256 nodes coarsened to 64.

use cdr_solver::dataset::format::{write_sample, Dataset};
use cdr_solver::dataset::{config_from_manifest, gen_test_set, regenerate, DatasetConfig};

fn main() -> cdr_solver::Result<()> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "factorial_small.cdr".into());
    let cfg = DatasetConfig {
        fine_nodes: 64,
        ..Default::default()
    };

    let ds = gen_test_set(3, 4, 42, &cfg)?;
    ds.write_file(out.as_ref())?;
    println!(
        "wrote {} records ({} payload bytes) to {out}",
        ds.samples.len(),
        ds.manifest.payload_bytes
    );

    let back = Dataset::read_file(out.as_ref())?;
    assert_eq!(back, ds);
    println!(
        "read back: checksum {}",
        &back.manifest.payload_sha256[..16]
    );

    let pos = back
        .manifest
        .factorial_position(2, 1)
        .expect("record exists");
    let meta = &back.manifest.records[pos];
    let again = regenerate(meta, &config_from_manifest(&back.manifest))?;
    let (mut stored, mut fresh) = (Vec::new(), Vec::new());
    write_sample(&back.samples[pos], back.manifest.dtype, &mut stored);
    write_sample(&again, back.manifest.dtype, &mut fresh);
    println!(
        "record (2, 1): c = {:?}, regenerated identically: {}",
        meta.c,
        stored == fresh
    );
    Ok(())
}
