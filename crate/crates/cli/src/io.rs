//! Instance JSON and trace JSONL.
//!
//! An instance file is one object:
//! `{"n": 2, "m": 1, "b": 1.0, "values": [..], "demands": [[..], [..]]}`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use jdp_pack_core::instance::Violation;
use jdp_pack_core::{InstanceParts, PackingInstance, RoundRecord};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("malformed instance JSON at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid instance: {0}")]
    Invalid(#[from] Violation),
    #[error("cannot encode JSON: {0}")]
    Encode(#[from] serde_json::Error),
}

pub fn parse_instance(text: &str) -> Result<PackingInstance, IoError> {
    let parts: InstanceParts = serde_json::from_str(text).map_err(|e| IoError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    Ok(PackingInstance::try_from(parts)?)
}

pub fn load_instance(path: &Path) -> Result<PackingInstance, IoError> {
    let text = std::fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.into(),
        source,
    })?;
    parse_instance(&text)
}

pub fn instance_to_json(instance: &PackingInstance) -> Result<String, IoError> {
    Ok(serde_json::to_string(&instance.to_parts())?)
}

pub fn save_instance(path: &Path, instance: &PackingInstance) -> Result<(), IoError> {
    let text = instance_to_json(instance)?;
    std::fs::write(path, text + "\n").map_err(|source| IoError::Write {
        path: path.into(),
        source,
    })
}

/// One JSON object per round.
pub fn write_trace(path: &Path, trace: &[RoundRecord]) -> Result<(), IoError> {
    let wrap = |source| IoError::Write {
        path: path.into(),
        source,
    };
    let mut out = BufWriter::new(File::create(path).map_err(wrap)?);
    for round in trace {
        serde_json::to_writer(&mut out, round)?;
        out.write_all(b"\n").map_err(wrap)?;
    }
    out.flush().map_err(wrap)
}

pub fn read_trace(path: &Path) -> Result<Vec<RoundRecord>, IoError> {
    let text = std::fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.into(),
        source,
    })?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(IoError::from))
        .collect()
}
