//! Record-file persistence: append-only JSONL records, a JSON manifest
//! beside the record file, and tolerant loading.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::phenomena::PhenomenonClass;
use crate::prompting::{ParsedResponse, StrategyKind};

use super::ExperimentConfig;

#[derive(Debug, Error)]
pub enum RecordFileError {
    #[error("cannot open {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write record: {0}")]
    Write(#[source] std::io::Error),
    #[error("cannot serialize record: {0}")]
    Serialize(#[source] serde_json::Error),
}

/// One API call's provenance, from design coordinates to parse outcome.
/// Field order here is the field order on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub run_id: String,
    pub model_id: String,
    pub phenomenon_class: PhenomenonClass,
    pub strategy: StrategyKind,
    pub repetition: u32,
    pub timestamp: DateTime<Utc>,
    pub raw_text: String,
    pub parsed: ParsedResponse,
}

impl EvaluationRecord {
    /// The design coordinates that must be unique within a record file.
    pub fn key(&self) -> RecordKey {
        RecordKey {
            model_id: self.model_id.clone(),
            phenomenon_class: self.phenomenon_class,
            strategy: self.strategy,
            repetition: self.repetition,
            run_id: self.run_id.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct RecordKey {
    pub model_id: String,
    pub phenomenon_class: PhenomenonClass,
    pub strategy: StrategyKind,
    pub repetition: u32,
    pub run_id: String,
}

/// A line that failed to parse as a record, with its 1-based line number.
#[derive(Debug, Clone, PartialEq)]
pub struct CorruptLine {
    pub line: usize,
    pub message: String,
}

/// Result of loading a record file: parseable records plus corrupt lines.
#[derive(Debug, Default)]
pub struct LoadedRecords {
    pub records: Vec<EvaluationRecord>,
    pub corrupt: Vec<CorruptLine>,
}

impl LoadedRecords {
    /// Gross count: every line that was attempted.
    pub fn gross(&self) -> usize {
        self.records.len() + self.corrupt.len()
    }
}

/// Load a JSONL record file, reporting corrupt lines by number and
/// processing the remainder.
pub fn load_records(path: &Path) -> Result<LoadedRecords, RecordFileError> {
    let file = File::open(path).map_err(|source| RecordFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let reader = BufReader::new(file);
    let mut loaded = LoadedRecords::default();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| RecordFileError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<EvaluationRecord>(&line) {
            Ok(record) => loaded.records.push(record),
            Err(e) => loaded.corrupt.push(CorruptLine {
                line: idx + 1,
                message: e.to_string(),
            }),
        }
    }
    Ok(loaded)
}

/// Streaming JSONL writer; one record per line, flushed per record so an
/// interrupted run keeps everything already written.
pub struct RecordWriter {
    inner: BufWriter<File>,
    written: usize,
}

impl RecordWriter {
    pub fn create(path: &Path) -> Result<Self, RecordFileError> {
        Self::open(path, false)
    }

    pub fn append(path: &Path) -> Result<Self, RecordFileError> {
        Self::open(path, true)
    }

    fn open(path: &Path, append: bool) -> Result<Self, RecordFileError> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent).map_err(|source| RecordFileError::Io {
                    path: parent.display().to_string(),
                    source,
                })?;
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .write(true)
            .append(append)
            .truncate(!append)
            .open(path)
            .map_err(|source| RecordFileError::Io {
                path: path.display().to_string(),
                source,
            })?;
        Ok(Self {
            inner: BufWriter::new(file),
            written: 0,
        })
    }

    pub fn write_record(&mut self, record: &EvaluationRecord) -> Result<(), RecordFileError> {
        let line = serde_json::to_string(record).map_err(RecordFileError::Serialize)?;
        self.inner
            .write_all(line.as_bytes())
            .and_then(|_| self.inner.write_all(b"\n"))
            .and_then(|_| self.inner.flush())
            .map_err(RecordFileError::Write)?;
        self.written += 1;
        Ok(())
    }

    pub fn written(&self) -> usize {
        self.written
    }
}

/// Completion count for one design cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellCount {
    pub model_id: String,
    pub phenomenon_class: PhenomenonClass,
    pub strategy: StrategyKind,
    pub count: usize,
}

/// Run provenance written beside the record file once the run finishes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub config: ExperimentConfig,
    pub backend_kind: String,
    pub started_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
    pub toolkit_version: String,
    pub records_total: usize,
    pub invalid_total: usize,
    pub cell_counts: Vec<CellCount>,
    /// Failure-reason histogram over records with `parsed.valid = false`.
    pub exclusion_summary: BTreeMap<String, usize>,
}

/// Manifest path for a record file: the record path with `.manifest.json`
/// appended.
pub fn manifest_path(record_path: &Path) -> PathBuf {
    let mut name = record_path.as_os_str().to_os_string();
    name.push(".manifest.json");
    PathBuf::from(name)
}

pub fn write_manifest(record_path: &Path, manifest: &RunManifest) -> Result<(), RecordFileError> {
    let path = manifest_path(record_path);
    let body = serde_json::to_string_pretty(manifest).map_err(RecordFileError::Serialize)?;
    fs::write(&path, body).map_err(|source| RecordFileError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_manifest(record_path: &Path) -> Result<Option<RunManifest>, RecordFileError> {
    let path = manifest_path(record_path);
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&path).map_err(|source| RecordFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let manifest = serde_json::from_str(&text).map_err(RecordFileError::Serialize)?;
    Ok(Some(manifest))
}
