//! Dataset parsers (face-to-face contacts, airline on-time records), the JSON
//! interchange format and dataset manifests.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::model::ModelError;

pub mod contacts;
pub mod flights;
pub mod interchange;
pub mod manifest;

pub use contacts::{parse_contacts, parse_contacts_str, ContactOptions, ContactRecord, FriendshipMode, Gender};
pub use flights::{
    parse_flights, parse_flights_files, parse_flights_reader, FlightColumns, FlightOptions, FlightRecord,
};
pub use interchange::{
    read_interchange, read_interchange_str, read_interchange_unvalidated, read_interchange_unvalidated_str,
    write_interchange, write_interchange_string, FORMAT_VERSION,
};
pub use manifest::{DatasetKind, DatasetManifest};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{line}: malformed line: {reason}")]
    MalformedLine { file: String, line: usize, reason: String },
    #[error("{file}:{line}: unknown student id {id}")]
    UnknownStudentId { file: String, line: usize, id: String },
    #[error("{file}: missing column {column}")]
    MissingColumn { file: String, column: String },
    #[error("{file}:{line}: malformed time {value:?}")]
    MalformedTime { file: String, line: usize, value: String },
    #[error("{file}: {source}")]
    Csv {
        file: String,
        #[source]
        source: csv::Error,
    },
    #[error("{file}: no usable records")]
    NoRecords { file: String },
    #[error("unsupported interchange format version {found} (expected {expected})")]
    FormatVersionMismatch { found: String, expected: u32 },
    #[error("checksum mismatch: header says {expected}, content hashes to {found}")]
    ChecksumMismatch { expected: String, found: String },
    #[error("schema error at {path}: {reason}")]
    SchemaError { path: String, reason: String },
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl IngestError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        IngestError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// What to do with a row that fails to parse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorPolicy {
    #[default]
    Fail,
    /// Drop the row, count it and keep its message in the report.
    Skip,
}

/// Row accounting for one input file: `accepted + Σ dropped = total`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct FileReport {
    pub file: String,
    pub total: usize,
    pub accepted: usize,
    pub dropped: BTreeMap<String, usize>,
    /// First messages of skipped malformed rows.
    pub messages: Vec<String>,
}

impl FileReport {
    const MAX_MESSAGES: usize = 20;

    pub fn new(file: impl Into<String>) -> Self {
        FileReport {
            file: file.into(),
            ..Default::default()
        }
    }

    pub fn drop_row(&mut self, reason: &str) {
        *self.dropped.entry(reason.to_string()).or_default() += 1;
    }

    pub(crate) fn skip(&mut self, policy: ErrorPolicy, err: IngestError) -> Result<(), IngestError> {
        match policy {
            ErrorPolicy::Fail => Err(err),
            ErrorPolicy::Skip => {
                self.drop_row("malformed");
                if self.messages.len() < Self::MAX_MESSAGES {
                    self.messages.push(err.to_string());
                }
                Ok(())
            }
        }
    }

    pub fn dropped_total(&self) -> usize {
        self.dropped.values().sum()
    }

    pub fn is_balanced(&self) -> bool {
        self.accepted + self.dropped_total() == self.total
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub files: Vec<FileReport>,
}

impl IngestReport {
    pub fn is_balanced(&self) -> bool {
        self.files.iter().all(FileReport::is_balanced)
    }
}

pub(crate) fn read_text(path: &Path) -> Result<String, IngestError> {
    std::fs::read_to_string(path).map_err(|e| IngestError::io(path, e))
}

pub(crate) fn file_label(path: &Path) -> String {
    path.file_name()
        .map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned())
}

/// Ticks per second at `resolution`; the resolution must divide one second.
pub fn ticks_per_second(resolution: crate::time::Resolution) -> Result<i64, IngestError> {
    const NANOS: u64 = 1_000_000_000;
    if resolution.0 == 0 || !NANOS.is_multiple_of(resolution.0) {
        return Err(IngestError::Manifest(format!(
            "tick resolution of {} ns does not divide one second",
            resolution.0
        )));
    }
    Ok((NANOS / resolution.0) as i64)
}
