//! Binary container for sample pairs.
//!
//! ```text
//! offset  size  content
//! 0       4     magic "CDR1"
//! 4       4     format version, u32 little-endian
//! 8       8     manifest length m, u64 little-endian
//! 16      m     manifest, UTF-8 JSON
//! 16+m    ...   payload: per record, X0 then XM, each n*n values,
//!               row-major (index i*n + j, i along x), little-endian
//!               f32 or f64 as named by the manifest `dtype`
//! ```
//!
//! The manifest carries the SHA-256 of the payload and the byte offset of
//! every record relative to the payload start.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::coefficients::Conditioning;
use crate::grid::{GridSpec, ScalarField};

pub const MAGIC: [u8; 4] = *b"CDR1";
pub const FORMAT_VERSION: u32 = 1;
pub const LAYOUT: &str = "row-major, x outer: value (i, j) at i*n + j";
const HEADER_LEN: usize = 16;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("not a dataset file (bad magic {0:?})")]
    BadMagic([u8; 4]),
    #[error("unsupported format version {0} (expected {FORMAT_VERSION})")]
    UnsupportedVersion(u32),
    #[error("truncated: needed {needed} bytes, found {found}")]
    Truncated { needed: usize, found: usize },
    #[error("payload checksum mismatch")]
    Checksum,
    #[error("malformed manifest: {0}")]
    Manifest(#[from] serde_json::Error),
    #[error("inconsistent dataset: {0}")]
    Inconsistent(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DType {
    F32,
    F64,
}

impl DType {
    pub fn size(self) -> usize {
        match self {
            DType::F32 => 4,
            DType::F64 => 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    Train,
    FactorialTest,
    Simulation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    pub avg_dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordMeta {
    pub index: usize,
    pub seed_ic: u64,
    pub seed_c: u64,
    pub c: [f64; 4],
    /// Initial-condition group (factorial sets only, zero-based).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub k1: Option<usize>,
    /// Conditioning group (factorial sets only, zero-based).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub k2: Option<usize>,
    /// Byte offset of X0 within the payload.
    pub offset: u64,
    pub stats: SolveSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub seed_ic: u64,
    pub seed_c: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub k1: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub k2: Option<usize>,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorialShape {
    pub n_ic: usize,
    pub n_c: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub kind: DatasetKind,
    pub dtype: DType,
    pub layout: String,
    /// Solver grid nodes per axis.
    pub fine_nodes: usize,
    /// Stored field nodes per axis.
    pub stored_nodes: usize,
    /// Downsampling operator from the solver grid to the stored grid.
    pub downsample: String,
    pub length: f64,
    pub final_time: f64,
    pub tol: f64,
    pub dt_init: f64,
    pub prng: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub master_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub factorial: Option<FactorialShape>,
    pub records: Vec<RecordMeta>,
    #[serde(default)]
    pub failures: Vec<Failure>,
    pub payload_bytes: u64,
    pub payload_sha256: String,
}

impl Manifest {
    /// Bytes of one stored record (X0 and XM).
    pub fn record_bytes(&self) -> usize {
        2 * self.stored_nodes * self.stored_nodes * self.dtype.size()
    }

    /// Record position for factorial group `(k1, k2)`.
    pub fn factorial_position(&self, k1: usize, k2: usize) -> Option<usize> {
        self.records
            .iter()
            .position(|r| r.k1 == Some(k1) && r.k2 == Some(k2))
    }
}

/// One stored pair of initial and final fields.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePair {
    pub x0: ScalarField,
    pub xm: ScalarField,
    pub c: Conditioning,
    pub seed_ic: u64,
    pub seed_c: u64,
    pub k1: Option<usize>,
    pub k2: Option<usize>,
    pub stats: SolveSummary,
}

fn push_values(out: &mut Vec<u8>, values: &[f64], dtype: DType) {
    match dtype {
        DType::F32 => values
            .iter()
            .for_each(|&v| out.extend_from_slice(&(v as f32).to_le_bytes())),
        DType::F64 => values
            .iter()
            .for_each(|&v| out.extend_from_slice(&v.to_le_bytes())),
    }
}

fn read_values(bytes: &[u8], dtype: DType) -> Vec<f64> {
    match dtype {
        DType::F32 => bytes
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
            .collect(),
        DType::F64 => bytes
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect(),
    }
}

/// Appends the payload bytes of one record.
pub fn write_sample(sample: &SamplePair, dtype: DType, out: &mut Vec<u8>) {
    push_values(out, sample.x0.values(), dtype);
    push_values(out, sample.xm.values(), dtype);
}

/// Decodes one record whose payload starts at `bytes[0]`.
pub fn read_sample(
    bytes: &[u8],
    meta: &RecordMeta,
    grid: GridSpec,
    dtype: DType,
) -> Result<SamplePair, FormatError> {
    let field_bytes = grid.len() * dtype.size();
    if bytes.len() < 2 * field_bytes {
        return Err(FormatError::Truncated {
            needed: 2 * field_bytes,
            found: bytes.len(),
        });
    }
    let field =
        |b: &[u8]| ScalarField::from_values(grid, read_values(b, dtype)).expect("sized from grid");
    Ok(SamplePair {
        x0: field(&bytes[..field_bytes]),
        xm: field(&bytes[field_bytes..2 * field_bytes]),
        c: Conditioning::from_array(meta.c),
        seed_ic: meta.seed_ic,
        seed_c: meta.seed_c,
        k1: meta.k1,
        k2: meta.k2,
        stats: meta.stats,
    })
}

/// A manifest with its decoded records.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub manifest: Manifest,
    pub samples: Vec<SamplePair>,
}

impl Dataset {
    /// Builds the manifest record list, offsets and checksum from `samples`;
    /// `template` supplies everything else. Field values are rounded to the
    /// storage dtype so the in-memory dataset equals what a reader sees.
    pub fn assemble(mut template: Manifest, mut samples: Vec<SamplePair>) -> Self {
        if template.dtype == DType::F32 {
            for s in &mut samples {
                for v in
                    s.x0.values_mut()
                        .iter_mut()
                        .chain(s.xm.values_mut().iter_mut())
                {
                    *v = *v as f32 as f64;
                }
            }
        }
        let mut payload = Vec::new();
        template.records = samples
            .iter()
            .enumerate()
            .map(|(index, s)| {
                let offset = payload.len() as u64;
                write_sample(s, template.dtype, &mut payload);
                RecordMeta {
                    index,
                    seed_ic: s.seed_ic,
                    seed_c: s.seed_c,
                    c: s.c.to_array(),
                    k1: s.k1,
                    k2: s.k2,
                    offset,
                    stats: s.stats,
                }
            })
            .collect();
        template.format_version = FORMAT_VERSION;
        template.payload_bytes = payload.len() as u64;
        template.payload_sha256 = hex::encode(Sha256::digest(&payload));
        Self {
            manifest: template,
            samples,
        }
    }

    pub fn stored_grid(&self) -> GridSpec {
        stored_grid(&self.manifest).expect("validated manifest")
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let manifest = serde_json::to_vec_pretty(&self.manifest).expect("manifest serializes");
        let mut out =
            Vec::with_capacity(HEADER_LEN + manifest.len() + self.manifest.payload_bytes as usize);
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(manifest.len() as u64).to_le_bytes());
        out.extend_from_slice(&manifest);
        for s in &self.samples {
            write_sample(s, self.manifest.dtype, &mut out);
        }
        out
    }

    /// Reads only the manifest (header and JSON chunk).
    pub fn read_manifest(bytes: &[u8]) -> Result<(Manifest, usize), FormatError> {
        if bytes.len() < HEADER_LEN {
            return Err(FormatError::Truncated {
                needed: HEADER_LEN,
                found: bytes.len(),
            });
        }
        let magic: [u8; 4] = bytes[0..4].try_into().unwrap();
        if magic != MAGIC {
            return Err(FormatError::BadMagic(magic));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(FormatError::UnsupportedVersion(version));
        }
        let len = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
        let end = HEADER_LEN
            .checked_add(len)
            .filter(|&e| e <= bytes.len())
            .ok_or(FormatError::Truncated {
                needed: HEADER_LEN.saturating_add(len),
                found: bytes.len(),
            })?;
        let manifest: Manifest = serde_json::from_slice(&bytes[HEADER_LEN..end])?;
        if manifest.format_version != version {
            return Err(FormatError::Inconsistent(format!(
                "header version {version} but manifest version {}",
                manifest.format_version
            )));
        }
        Ok((manifest, end))
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, FormatError> {
        let (manifest, start) = Self::read_manifest(bytes)?;
        let payload = &bytes[start..];
        let expected = manifest.records.len() * manifest.record_bytes();
        if manifest.payload_bytes as usize != expected {
            return Err(FormatError::Inconsistent(format!(
                "{} records need {expected} payload bytes, manifest says {}",
                manifest.records.len(),
                manifest.payload_bytes
            )));
        }
        if payload.len() < expected {
            return Err(FormatError::Truncated {
                needed: start + expected,
                found: bytes.len(),
            });
        }
        if payload.len() > expected {
            return Err(FormatError::Inconsistent(format!(
                "{} trailing bytes after payload",
                payload.len() - expected
            )));
        }
        if hex::encode(Sha256::digest(payload)) != manifest.payload_sha256 {
            return Err(FormatError::Checksum);
        }
        let grid = stored_grid(&manifest)?;
        let samples = manifest
            .records
            .iter()
            .map(|meta| {
                let offset = meta.offset as usize;
                if offset + manifest.record_bytes() > payload.len() {
                    return Err(FormatError::Inconsistent(format!(
                        "record {} offset {offset} past payload end",
                        meta.index
                    )));
                }
                read_sample(&payload[offset..], meta, grid, manifest.dtype)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { manifest, samples })
    }

    pub fn write_file(&self, path: &std::path::Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_bytes())
    }

    pub fn read_file(path: &std::path::Path) -> crate::Result<Self> {
        let bytes = std::fs::read(path)?;
        Ok(Self::from_bytes(&bytes)?)
    }
}

/// Nominal grid of the stored fields: `stored_nodes` nodes spanning the
/// domain length.
fn stored_grid(manifest: &Manifest) -> Result<GridSpec, FormatError> {
    GridSpec::new(manifest.stored_nodes, manifest.length)
        .map_err(|e| FormatError::Inconsistent(e.to_string()))
}
