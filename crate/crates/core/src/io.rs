//! Shared on-disk field format.
//!
//! A stored object is a pair of files: `<base>.bin` holding little-endian
//! float64 samples, row-major over the axes and component-major for vector
//! data, and `<base>.json` holding the header
//! `{dim, n_per_axis, length, components, time_index, kind, seed}`.
//! Round-trips are bit-exact. Noise paths reuse the same layout with
//! `kind = "brownian"` (a single axis of time samples) or `kind = "q_wiener"`
//! (one vector frame per time node).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fields::{FieldError, GridSpec, ScalarField, VectorField};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed header {path}: {source}")]
    Header {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("payload of {path} holds {got} samples, header implies {expected}")]
    PayloadSize { path: PathBuf, expected: usize, got: usize },
    #[error("field data invalid: {0}")]
    Field(#[from] FieldError),
    #[error("header of {path} does not describe a {wanted}")]
    WrongKind { path: PathBuf, wanted: &'static str },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FieldHeader {
    pub dim: usize,
    pub n_per_axis: usize,
    pub length: f64,
    pub components: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl FieldHeader {
    fn sample_count(&self) -> usize {
        self.n_per_axis.pow(self.dim as u32) * self.components
    }
}

fn write_payload(path: &Path, samples: impl Iterator<Item = f64>) -> Result<(), IoError> {
    let mut buf = Vec::new();
    for v in samples {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let mut file = fs::File::create(path).map_err(|e| IoError::Io { path: path.into(), source: e })?;
    file.write_all(&buf).map_err(|e| IoError::Io { path: path.into(), source: e })
}

fn read_payload(path: &Path, expected: usize) -> Result<Vec<f64>, IoError> {
    let bytes = fs::read(path).map_err(|e| IoError::Io { path: path.into(), source: e })?;
    if bytes.len() != expected * 8 {
        return Err(IoError::PayloadSize { path: path.into(), expected, got: bytes.len() / 8 });
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

fn write_header(base: &Path, header: &FieldHeader) -> Result<(), IoError> {
    let path = base.with_extension("json");
    let text = serde_json::to_string_pretty(header)
        .map_err(|e| IoError::Header { path: path.clone(), source: e })?;
    fs::write(&path, text).map_err(|e| IoError::Io { path, source: e })
}

fn read_header(base: &Path) -> Result<FieldHeader, IoError> {
    let path = base.with_extension("json");
    let text = fs::read_to_string(&path).map_err(|e| IoError::Io { path: path.clone(), source: e })?;
    serde_json::from_str(&text).map_err(|e| IoError::Header { path, source: e })
}

/// Write a scalar field as `<base>.bin` + `<base>.json`.
pub fn write_scalar(base: &Path, f: &ScalarField, time_index: Option<usize>) -> Result<(), IoError> {
    let grid = f.grid();
    let header = FieldHeader {
        dim: grid.dim(),
        n_per_axis: grid.n_per_axis(),
        length: grid.length(),
        components: 1,
        time_index,
        kind: Some("scalar".into()),
        seed: None,
    };
    write_header(base, &header)?;
    write_payload(&base.with_extension("bin"), f.values().iter().copied())
}

/// Write a vector field, component-major.
pub fn write_vector(base: &Path, v: &VectorField, time_index: Option<usize>) -> Result<(), IoError> {
    let grid = v.grid();
    let header = FieldHeader {
        dim: grid.dim(),
        n_per_axis: grid.n_per_axis(),
        length: grid.length(),
        components: v.dim(),
        time_index,
        kind: Some("vector".into()),
        seed: None,
    };
    write_header(base, &header)?;
    let samples = v.components().iter().flat_map(|c| c.values().iter().copied());
    write_payload(&base.with_extension("bin"), samples)
}

pub fn read_scalar(base: &Path) -> Result<(ScalarField, FieldHeader), IoError> {
    let header = read_header(base)?;
    if header.components != 1 {
        return Err(IoError::WrongKind { path: base.into(), wanted: "scalar field" });
    }
    let grid = GridSpec::new(header.dim, header.n_per_axis, header.length)?;
    let values = read_payload(&base.with_extension("bin"), header.sample_count())?;
    Ok((ScalarField::from_values(grid, values)?, header))
}

pub fn read_vector(base: &Path) -> Result<(VectorField, FieldHeader), IoError> {
    let header = read_header(base)?;
    let grid = GridSpec::new(header.dim, header.n_per_axis, header.length)?;
    if header.components != grid.dim() {
        return Err(IoError::WrongKind { path: base.into(), wanted: "vector field" });
    }
    let values = read_payload(&base.with_extension("bin"), header.sample_count())?;
    let points = grid.points();
    let components = (0..header.components)
        .map(|c| ScalarField::from_values(grid, values[c * points..(c + 1) * points].to_vec()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((VectorField::from_components(components)?, header))
}

/// Persist a raw sample path (e.g. Brownian increments summed to nodes) as a
/// single time axis; `length` carries the time horizon.
pub fn write_samples(
    base: &Path,
    samples: &[f64],
    horizon: f64,
    kind: &str,
    seed: Option<u64>,
) -> Result<(), IoError> {
    let header = FieldHeader {
        dim: 1,
        n_per_axis: samples.len(),
        length: horizon,
        components: 1,
        time_index: None,
        kind: Some(kind.into()),
        seed,
    };
    write_header(base, &header)?;
    write_payload(&base.with_extension("bin"), samples.iter().copied())
}

pub fn read_samples(base: &Path, kind: &str) -> Result<(Vec<f64>, FieldHeader), IoError> {
    let header = read_header(base)?;
    if header.kind.as_deref() != Some(kind) || header.dim != 1 {
        return Err(IoError::WrongKind { path: base.into(), wanted: "sample path" });
    }
    let values = read_payload(&base.with_extension("bin"), header.n_per_axis)?;
    Ok((values, header))
}
