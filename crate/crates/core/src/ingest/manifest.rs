//! Dataset manifests: which files to read and how.
//!
//! Relative paths are resolved against the manifest's directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::contacts::{parse_contacts, ContactOptions};
use super::flights::{parse_flights_files, FlightOptions};
use super::interchange::read_interchange;
use super::{IngestError, IngestReport};
use crate::model::MultilayerStreamGraph;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DatasetKind {
    Contacts {
        contacts: PathBuf,
        metadata: PathBuf,
        #[serde(default)]
        friendship: Option<PathBuf>,
        #[serde(default)]
        facebook: Option<PathBuf>,
        #[serde(default)]
        options: ContactOptions,
    },
    Flights {
        files: Vec<PathBuf>,
        #[serde(default)]
        options: FlightOptions,
    },
    Interchange {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub dataset: DatasetKind,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl DatasetManifest {
    pub fn interchange(path: impl Into<PathBuf>) -> Self {
        DatasetManifest {
            dataset: DatasetKind::Interchange { path: path.into() },
            base_dir: PathBuf::new(),
        }
    }

    pub fn with_base_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.base_dir = dir.into();
        self
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Every referenced file, resolved.
    pub fn files(&self) -> Vec<PathBuf> {
        let raw: Vec<&PathBuf> = match &self.dataset {
            DatasetKind::Contacts {
                contacts,
                metadata,
                friendship,
                facebook,
                ..
            } => [Some(contacts), Some(metadata), friendship.as_ref(), facebook.as_ref()]
                .into_iter()
                .flatten()
                .collect(),
            DatasetKind::Flights { files, .. } => files.iter().collect(),
            DatasetKind::Interchange { path } => vec![path],
        };
        raw.into_iter().map(|p| self.resolve(p)).collect()
    }

    pub fn check_files(&self) -> Result<(), IngestError> {
        if let DatasetKind::Flights { files, .. } = &self.dataset {
            if files.is_empty() {
                return Err(IngestError::Manifest("flights dataset lists no files".into()));
            }
        }
        for f in self.files() {
            if !f.is_file() {
                return Err(IngestError::io(
                    &f,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
                ));
            }
        }
        Ok(())
    }

    pub fn load(&self) -> Result<(MultilayerStreamGraph, IngestReport), IngestError> {
        self.check_files()?;
        match &self.dataset {
            DatasetKind::Contacts {
                contacts,
                metadata,
                friendship,
                facebook,
                options,
            } => parse_contacts(
                &self.resolve(contacts),
                &self.resolve(metadata),
                friendship.as_ref().map(|p| self.resolve(p)).as_deref(),
                facebook.as_ref().map(|p| self.resolve(p)).as_deref(),
                options,
            ),
            DatasetKind::Flights { files, options } => {
                let paths: Vec<PathBuf> = files.iter().map(|p| self.resolve(p)).collect();
                parse_flights_files(&paths, options)
            }
            DatasetKind::Interchange { path } => Ok((read_interchange(&self.resolve(path))?, IngestReport::default())),
        }
    }
}
