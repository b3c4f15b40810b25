//! Design-matrix execution: one completion per (model, phenomenon,
//! strategy, repetition) tuple, persisted as append-only JSONL with a
//! manifest written last.
//!
//! Cell executions run concurrently up to the configured in-flight cap;
//! a single writer appends records in deterministic design order through a
//! bounded reorder buffer, so mock runs with the same seed produce
//! byte-identical files and an interrupted run loses at most one in-flight
//! window of records.

pub mod records;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;

use chrono::{DateTime, Duration as ChronoDuration, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{
    BackendConfig, BackendError, BackendErrorKind, BackendKind, CellCoordinates, CompletionBackend,
    CompletionRequest,
};
use crate::phenomena::{anchor_statement, default_bank, load_bank, BankError, Phenomenon};
use crate::prompting::{parse_response, render_prompt, StrategyKind};
use records::{
    load_manifest, load_records, write_manifest, CellCount, EvaluationRecord, RecordFileError,
    RecordWriter, RunManifest,
};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("cannot read config {path}: {source}")]
    ConfigIo {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {source}")]
    ConfigParse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("config does not match the existing record file: {0}")]
    ConfigMismatch(String),
    #[error(transparent)]
    Bank(#[from] BankError),
    #[error(transparent)]
    Records(#[from] RecordFileError),
    #[error("backend failure affecting the whole run: {0}")]
    FatalBackend(BackendError),
}

/// The experiment design: models × phenomena × strategies × repetitions,
/// plus sampling parameters and backend selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub models: Vec<String>,
    pub strategies: Vec<StrategyKind>,
    pub repetitions: u32,
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    pub run_date: NaiveDate,
    #[serde(default)]
    pub run_id: Option<String>,
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
    /// Optional stimulus file; the embedded bank is used when absent.
    #[serde(default)]
    pub bank_path: Option<PathBuf>,
    #[serde(default)]
    pub response_format_hint: Option<String>,
    pub backend: BackendConfig,
}

fn default_max_tokens() -> u32 {
    200
}

fn default_concurrency() -> usize {
    4
}

impl ExperimentConfig {
    /// The reference design: four models, all strategies, five repetitions,
    /// temperature 0.7, against the deterministic mock. 300 calls total
    /// with the embedded bank.
    pub fn reference_default() -> Self {
        Self {
            models: vec![
                "gpt-4o".into(),
                "gpt-4-turbo".into(),
                "gpt-3.5-turbo".into(),
                "gpt-4o-mini".into(),
            ],
            strategies: StrategyKind::ALL.to_vec(),
            repetitions: 5,
            temperature: 0.7,
            max_tokens: default_max_tokens(),
            run_date: NaiveDate::from_ymd_opt(2026, 4, 30).expect("valid date"),
            run_id: None,
            concurrency: default_concurrency(),
            bank_path: None,
            response_format_hint: None,
            backend: BackendConfig::Mock { seed: 42 },
        }
    }

    pub fn validate(&self) -> Result<(), RunError> {
        if self.models.is_empty() {
            return Err(RunError::InvalidConfig("models must be non-empty".into()));
        }
        if self.strategies.is_empty() {
            return Err(RunError::InvalidConfig(
                "strategies must be non-empty".into(),
            ));
        }
        if self.repetitions < 1 {
            return Err(RunError::InvalidConfig(
                "repetitions must be at least 1".into(),
            ));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(RunError::InvalidConfig(format!(
                "temperature {} outside [0,2]",
                self.temperature
            )));
        }
        if self.concurrency == 0 {
            return Err(RunError::InvalidConfig(
                "concurrency must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = fs::read_to_string(path).map_err(|source| RunError::ConfigIo {
            path: path.display().to_string(),
            source,
        })?;
        let config: Self = serde_json::from_str(&text).map_err(|source| RunError::ConfigParse {
            path: path.display().to_string(),
            source,
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn bank(&self) -> Result<Vec<Phenomenon>, RunError> {
        match &self.bank_path {
            Some(path) => Ok(load_bank(path)?),
            None => Ok(default_bank()),
        }
    }

    /// The run id actually stamped into records: the configured one, else
    /// "mock-<seed>" for deterministic mock runs, else one derived from the
    /// start instant.
    fn resolve_run_id(&self, started_at: DateTime<Utc>) -> String {
        if let Some(id) = &self.run_id {
            return id.clone();
        }
        match &self.backend {
            BackendConfig::Mock { seed } => format!("mock-{seed}"),
            BackendConfig::Http { .. } => {
                format!("run-{}", started_at.format("%Y%m%dT%H%M%S%.3fZ"))
            }
        }
    }

    fn deterministic_timestamps(&self) -> bool {
        matches!(self.backend, BackendConfig::Mock { .. })
    }
}

/// One unit of work: a design tuple plus its canonical sequence index.
#[derive(Debug, Clone)]
struct WorkItem {
    index: usize,
    model_id: String,
    phenomenon: Phenomenon,
    strategy: StrategyKind,
    repetition: u32,
}

/// Design tuples in canonical order: model-major, then phenomenon, then
/// strategy, then repetition.
fn plan(config: &ExperimentConfig, bank: &[Phenomenon]) -> Vec<WorkItem> {
    let mut items = Vec::new();
    let mut index = 0;
    for model_id in &config.models {
        for phenomenon in bank {
            for strategy in &config.strategies {
                for repetition in 1..=config.repetitions {
                    items.push(WorkItem {
                        index,
                        model_id: model_id.clone(),
                        phenomenon: phenomenon.clone(),
                        strategy: *strategy,
                        repetition,
                    });
                    index += 1;
                }
            }
        }
    }
    items
}

type DesignTuple = (String, crate::phenomena::PhenomenonClass, StrategyKind, u32);

fn tuple_of(item: &WorkItem) -> DesignTuple {
    (
        item.model_id.clone(),
        item.phenomenon.class,
        item.strategy,
        item.repetition,
    )
}

/// Progress callback payload: the record just persisted plus running
/// counts.
pub struct RunProgress<'a> {
    pub record: &'a EvaluationRecord,
    pub completed: usize,
    pub total: usize,
}

pub type ProgressFn<'a> = dyn FnMut(RunProgress<'_>) + 'a;

/// Execute the full design matrix against `backend`, appending records to
/// `out_path` and writing the manifest beside it once complete.
///
/// Every attempt yields exactly one record: backend failures that survive
/// the retry policy are recorded with `parsed.valid = false`. The only
/// fatal backend condition is an authentication failure, which by nature
/// affects every remaining cell; the partial record file is left in place
/// and can be resumed.
pub fn run_experiment(
    config: &ExperimentConfig,
    bank: &[Phenomenon],
    backend: &dyn CompletionBackend,
    out_path: &Path,
    progress: Option<&mut ProgressFn<'_>>,
) -> Result<RunManifest, RunError> {
    config.validate()?;
    let items = plan(config, bank);
    let writer = RecordWriter::create(out_path)?;
    execute(config, items, backend, writer, out_path, progress)
}

/// Issue completions only for design tuples missing from an existing
/// record file. A complete file is a no-op; a missing file starts a fresh
/// run. The config must match the file's manifest (or, for manifest-less
/// partial files, every existing record must belong to the configured
/// design).
pub fn resume_run(
    config: &ExperimentConfig,
    bank: &[Phenomenon],
    backend: &dyn CompletionBackend,
    out_path: &Path,
    progress: Option<&mut ProgressFn<'_>>,
) -> Result<RunManifest, RunError> {
    config.validate()?;
    if !out_path.exists() {
        return run_experiment(config, bank, backend, out_path, progress);
    }
    let existing = load_records(out_path)?;
    check_config_compatibility(config, bank, out_path, &existing.records)?;

    let all_items = plan(config, bank);
    let present: BTreeSet<DesignTuple> = existing
        .records
        .iter()
        .map(|r| {
            (
                r.model_id.clone(),
                r.phenomenon_class,
                r.strategy,
                r.repetition,
            )
        })
        .collect();
    let missing: Vec<WorkItem> = all_items
        .into_iter()
        .filter(|item| !present.contains(&tuple_of(item)))
        .collect();

    let writer = RecordWriter::append(out_path)?;
    execute(config, missing, backend, writer, out_path, progress)
}

fn check_config_compatibility(
    config: &ExperimentConfig,
    bank: &[Phenomenon],
    out_path: &Path,
    existing: &[EvaluationRecord],
) -> Result<(), RunError> {
    if let Some(manifest) = load_manifest(out_path)? {
        let previous = &manifest.config;
        if previous.models != config.models {
            return Err(RunError::ConfigMismatch(format!(
                "model list changed: {:?} vs {:?}",
                previous.models, config.models
            )));
        }
        if previous.strategies != config.strategies {
            return Err(RunError::ConfigMismatch("strategy list changed".into()));
        }
        if previous.repetitions != config.repetitions {
            return Err(RunError::ConfigMismatch(format!(
                "repetitions changed: {} vs {}",
                previous.repetitions, config.repetitions
            )));
        }
        if previous.run_date != config.run_date {
            return Err(RunError::ConfigMismatch("run date changed".into()));
        }
        if previous.backend != config.backend {
            return Err(RunError::ConfigMismatch("backend selection changed".into()));
        }
        return Ok(());
    }
    // No manifest (interrupted run): every existing record must belong to
    // the configured design.
    let classes: BTreeSet<_> = bank.iter().map(|p| p.class).collect();
    for record in existing {
        if !config.models.contains(&record.model_id) {
            return Err(RunError::ConfigMismatch(format!(
                "record file mentions model {:?} not in the config",
                record.model_id
            )));
        }
        if !config.strategies.contains(&record.strategy) {
            return Err(RunError::ConfigMismatch(format!(
                "record file mentions strategy {} not in the config",
                record.strategy
            )));
        }
        if !classes.contains(&record.phenomenon_class) {
            return Err(RunError::ConfigMismatch(format!(
                "record file mentions phenomenon {} not in the bank",
                record.phenomenon_class
            )));
        }
        if record.repetition > config.repetitions {
            return Err(RunError::ConfigMismatch(format!(
                "record file repetition {} exceeds configured {}",
                record.repetition, config.repetitions
            )));
        }
    }
    Ok(())
}

fn execute(
    config: &ExperimentConfig,
    items: Vec<WorkItem>,
    backend: &dyn CompletionBackend,
    mut writer: RecordWriter,
    out_path: &Path,
    mut progress: Option<&mut ProgressFn<'_>>,
) -> Result<RunManifest, RunError> {
    let started_at = Utc::now();
    let run_id = config.resolve_run_id(started_at);
    let total = items.len();
    let workers = config.concurrency.min(total.max(1));

    let next = AtomicUsize::new(0);
    let abort = AtomicBool::new(false);
    let (tx, rx) = mpsc::channel::<(usize, Result<EvaluationRecord, BackendError>)>();

    std::thread::scope(|scope| -> Result<(), RunError> {
        for _ in 0..workers {
            let tx = tx.clone();
            let items = &items;
            let next = &next;
            let abort = &abort;
            let run_id = &run_id;
            scope.spawn(move || loop {
                if abort.load(Ordering::Relaxed) {
                    break;
                }
                let slot = next.fetch_add(1, Ordering::Relaxed);
                if slot >= items.len() {
                    break;
                }
                let outcome = execute_item(config, backend, &items[slot], run_id);
                if tx.send((slot, outcome)).is_err() {
                    break;
                }
            });
        }
        drop(tx);

        // Single writer: reorder completions into canonical design order.
        // The buffer holds at most one in-flight window.
        let mut pending: BTreeMap<usize, Result<EvaluationRecord, BackendError>> = BTreeMap::new();
        let mut next_to_write = 0usize;
        for (slot, outcome) in &rx {
            pending.insert(slot, outcome);
            while let Some(outcome) = pending.remove(&next_to_write) {
                next_to_write += 1;
                match outcome {
                    Ok(record) => {
                        let result = writer.write_record(&record);
                        if let Err(e) = result {
                            abort.store(true, Ordering::Relaxed);
                            return Err(RunError::Records(e));
                        }
                        if let Some(cb) = progress.as_deref_mut() {
                            cb(RunProgress {
                                record: &record,
                                completed: writer.written(),
                                total,
                            });
                        }
                    }
                    Err(backend_error) => {
                        abort.store(true, Ordering::Relaxed);
                        return Err(RunError::FatalBackend(backend_error));
                    }
                }
            }
        }
        Ok(())
    })?;

    let finished_at = Utc::now();
    let manifest = build_manifest(config, out_path, run_id, started_at, finished_at, backend)?;
    write_manifest(out_path, &manifest)?;
    Ok(manifest)
}

fn execute_item(
    config: &ExperimentConfig,
    backend: &dyn CompletionBackend,
    item: &WorkItem,
    run_id: &str,
) -> Result<EvaluationRecord, BackendError> {
    let statement = anchor_statement(&item.phenomenon, config.run_date);
    let prompt = render_prompt(item.strategy, &statement);
    let request = CompletionRequest {
        model_id: item.model_id.clone(),
        system: prompt.system,
        user: prompt.user,
        temperature: config.temperature,
        max_tokens: config.max_tokens,
        response_format_hint: config.response_format_hint.clone(),
        cell: Some(CellCoordinates {
            phenomenon_class: item.phenomenon.class,
            strategy: item.strategy,
            repetition: item.repetition,
        }),
    };
    let timestamp = if config.deterministic_timestamps() {
        config
            .run_date
            .and_hms_opt(0, 0, 0)
            .expect("midnight exists")
            .and_utc()
            + ChronoDuration::seconds(item.index as i64)
    } else {
        Utc::now()
    };
    let (raw_text, parsed) = match backend.complete(&request) {
        Ok(result) => {
            let parsed = parse_response(item.strategy, &result.raw_text);
            (result.raw_text, parsed)
        }
        Err(error) if error.kind == BackendErrorKind::AuthFailure => {
            // Affects every remaining cell; abort the run.
            return Err(error);
        }
        Err(error) => {
            let mut parsed = parse_response(item.strategy, "");
            parsed.failure_reason = Some(format!("backend failure: {error}"));
            (String::new(), parsed)
        }
    };
    Ok(EvaluationRecord {
        run_id: run_id.to_string(),
        model_id: item.model_id.clone(),
        phenomenon_class: item.phenomenon.class,
        strategy: item.strategy,
        repetition: item.repetition,
        timestamp,
        raw_text,
        parsed,
    })
}

fn build_manifest(
    config: &ExperimentConfig,
    out_path: &Path,
    run_id: String,
    started_at: DateTime<Utc>,
    finished_at: DateTime<Utc>,
    backend: &dyn CompletionBackend,
) -> Result<RunManifest, RunError> {
    let loaded = load_records(out_path)?;
    let mut cell_counts: BTreeMap<
        (String, crate::phenomena::PhenomenonClass, StrategyKind),
        usize,
    > = BTreeMap::new();
    let mut invalid_total = 0usize;
    let mut exclusion_summary: BTreeMap<String, usize> = BTreeMap::new();
    for record in &loaded.records {
        *cell_counts
            .entry((
                record.model_id.clone(),
                record.phenomenon_class,
                record.strategy,
            ))
            .or_insert(0) += 1;
        if !record.parsed.valid {
            invalid_total += 1;
            let reason = record
                .parsed
                .failure_reason
                .clone()
                .unwrap_or_else(|| "invalid (no reason recorded)".into());
            *exclusion_summary.entry(reason).or_insert(0) += 1;
        }
    }
    Ok(RunManifest {
        run_id,
        config: config.clone(),
        backend_kind: match backend.kind() {
            BackendKind::Mock => "mock".into(),
            BackendKind::Http => "http".into(),
        },
        started_at,
        finished_at,
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        records_total: loaded.records.len(),
        invalid_total,
        cell_counts: cell_counts
            .into_iter()
            .map(
                |((model_id, phenomenon_class, strategy), count)| CellCount {
                    model_id,
                    phenomenon_class,
                    strategy,
                    count,
                },
            )
            .collect(),
        exclusion_summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_default_covers_the_design() {
        let config = ExperimentConfig::reference_default();
        config.validate().unwrap();
        let bank = config.bank().unwrap();
        let items = plan(&config, &bank);
        assert_eq!(items.len(), 300);
        // Model-major order: the first block belongs to the first model.
        assert!(items[..75].iter().all(|i| i.model_id == "gpt-4o"));
        assert_eq!(items[0].repetition, 1);
        assert_eq!(items[1].repetition, 2);
    }

    #[test]
    fn unit_design_has_one_item() {
        let mut config = ExperimentConfig::reference_default();
        config.models = vec!["m".into()];
        config.strategies = vec![StrategyKind::Neutrosophic];
        config.repetitions = 1;
        let bank = vec![default_bank().remove(0)];
        assert_eq!(plan(&config, &bank).len(), 1);
    }

    #[test]
    fn config_validation_rejects_bad_values() {
        let mut config = ExperimentConfig::reference_default();
        config.repetitions = 0;
        assert!(config.validate().is_err());

        let mut config = ExperimentConfig::reference_default();
        config.models.clear();
        assert!(config.validate().is_err());

        let mut config = ExperimentConfig::reference_default();
        config.temperature = 2.5;
        assert!(config.validate().is_err());
    }

    #[test]
    fn run_id_resolution() {
        let mut config = ExperimentConfig::reference_default();
        let now = Utc::now();
        assert_eq!(config.resolve_run_id(now), "mock-42");
        config.run_id = Some("custom".into());
        assert_eq!(config.resolve_run_id(now), "custom");
    }
}
