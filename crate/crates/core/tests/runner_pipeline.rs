//! End-to-end runner behavior against the deterministic mock: record-count
//! conservation, failure-as-data, resume semantics, and exclusion
//! soundness.

use std::sync::atomic::{AtomicUsize, Ordering};

use neutro_core::backend::{
    BackendError, BackendErrorKind, BackendKind, CompletionBackend, CompletionRequest,
    CompletionResult, MockBackend, MockProfile,
};
use neutro_core::dataset::validate_and_filter;
use neutro_core::phenomena::PhenomenonClass;
use neutro_core::prompting::StrategyKind;
use neutro_core::runner::records::{load_manifest, load_records};
use neutro_core::runner::{resume_run, run_experiment, ExperimentConfig, RunError};

struct CountingBackend {
    inner: MockBackend,
    calls: AtomicUsize,
}

impl CountingBackend {
    fn new(seed: u64) -> Self {
        Self {
            inner: MockBackend::new(MockProfile::reference_means(), seed),
            calls: AtomicUsize::new(0),
        }
    }

    fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }
}

impl CompletionBackend for CountingBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, BackendError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.complete(request)
    }

    fn kind(&self) -> BackendKind {
        BackendKind::Mock
    }
}

/// Emits unparseable text for one (class, strategy) cell, valid responses
/// elsewhere.
struct MalformedCellBackend {
    inner: MockBackend,
    class: PhenomenonClass,
    strategy: StrategyKind,
}

impl CompletionBackend for MalformedCellBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, BackendError> {
        let mut result = self.inner.complete(request)?;
        if let Some(cell) = request.cell {
            if cell.phenomenon_class == self.class && cell.strategy == self.strategy {
                result.raw_text = "I would rather write an essay about it.".into();
            }
        }
        Ok(result)
    }

    fn kind(&self) -> BackendKind {
        BackendKind::Mock
    }
}

struct AuthFailingBackend;

impl CompletionBackend for AuthFailingBackend {
    fn complete(&self, _request: &CompletionRequest) -> Result<CompletionResult, BackendError> {
        Err(BackendError::new(BackendErrorKind::AuthFailure, "bad key"))
    }

    fn kind(&self) -> BackendKind {
        BackendKind::Http
    }
}

fn mock_config() -> ExperimentConfig {
    ExperimentConfig::reference_default()
}

#[test]
fn full_run_emits_the_whole_design() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("records.jsonl");
    let config = mock_config();
    let bank = config.bank().unwrap();
    let backend = CountingBackend::new(42);

    let manifest = run_experiment(&config, &bank, &backend, &out, None).unwrap();
    assert_eq!(backend.calls(), 300);
    assert_eq!(manifest.records_total, 300);
    assert_eq!(manifest.invalid_total, 0);
    assert_eq!(manifest.run_id, "mock-42");
    assert_eq!(manifest.backend_kind, "mock");
    // Completion counts sum to records emitted.
    let cell_sum: usize = manifest.cell_counts.iter().map(|c| c.count).sum();
    assert_eq!(cell_sum, 300);
    assert_eq!(manifest.cell_counts.len(), 60);
    assert!(manifest.cell_counts.iter().all(|c| c.count == 5));

    let loaded = load_records(&out).unwrap();
    assert!(loaded.corrupt.is_empty());
    assert_eq!(loaded.records.len(), 300);
    for strategy in StrategyKind::ALL {
        let n = loaded
            .records
            .iter()
            .filter(|r| r.strategy == strategy)
            .count();
        assert_eq!(n, 100, "{strategy}");
    }
    assert!(loaded.records.iter().all(|r| r.parsed.valid));

    // Records arrive in canonical design order.
    let first = &loaded.records[0];
    assert_eq!(first.model_id, "gpt-4o");
    assert_eq!(first.repetition, 1);
    let manifest_on_disk = load_manifest(&out).unwrap().unwrap();
    assert_eq!(manifest_on_disk.records_total, 300);
}

#[test]
fn unit_design_emits_one_record() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("one.jsonl");
    let mut config = mock_config();
    config.models = vec!["gpt-4o".into()];
    config.strategies = vec![StrategyKind::Neutrosophic];
    config.repetitions = 1;
    let bank = vec![config.bank().unwrap().remove(0)];
    let backend = CountingBackend::new(1);
    let manifest = run_experiment(&config, &bank, &backend, &out, None).unwrap();
    assert_eq!(manifest.records_total, 1);
    assert_eq!(backend.calls(), 1);
}

#[test]
fn malformed_cell_records_failure_as_data() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("records.jsonl");
    let config = mock_config();
    let bank = config.bank().unwrap();
    let backend = MalformedCellBackend {
        inner: MockBackend::new(MockProfile::reference_means(), 42),
        class: PhenomenonClass::Vagueness,
        strategy: StrategyKind::Neutrosophic,
    };

    let manifest = run_experiment(&config, &bank, &backend, &out, None).unwrap();
    assert_eq!(manifest.records_total, 300);
    assert_eq!(manifest.invalid_total, 20); // 4 models x 5 repetitions
    let loaded = load_records(&out).unwrap();
    let poisoned: Vec<_> = loaded
        .records
        .iter()
        .filter(|r| {
            r.phenomenon_class == PhenomenonClass::Vagueness
                && r.strategy == StrategyKind::Neutrosophic
        })
        .collect();
    assert_eq!(poisoned.len(), 20);
    assert!(poisoned.iter().all(|r| !r.parsed.valid));
    assert!(poisoned.iter().all(|r| r.parsed.failure_reason.is_some()));
}

#[test]
fn auth_failure_aborts_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("records.jsonl");
    let config = mock_config();
    let bank = config.bank().unwrap();
    let err = run_experiment(&config, &bank, &AuthFailingBackend, &out, None).unwrap_err();
    assert!(matches!(err, RunError::FatalBackend(_)));
    // The partial file is resumable with a working backend.
    let backend = CountingBackend::new(42);
    let manifest = resume_run(&config, &bank, &backend, &out, None).unwrap();
    assert_eq!(manifest.records_total, 300);
}

#[test]
fn resume_on_complete_file_is_a_no_op() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("records.jsonl");
    let config = mock_config();
    let bank = config.bank().unwrap();
    run_experiment(&config, &bank, &CountingBackend::new(42), &out, None).unwrap();

    let backend = CountingBackend::new(42);
    let manifest = resume_run(&config, &bank, &backend, &out, None).unwrap();
    assert_eq!(backend.calls(), 0);
    assert_eq!(manifest.records_total, 300);
}

#[test]
fn resume_on_missing_file_starts_fresh() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("records.jsonl");
    let config = mock_config();
    let bank = config.bank().unwrap();
    let backend = CountingBackend::new(42);
    let manifest = resume_run(&config, &bank, &backend, &out, None).unwrap();
    assert_eq!(manifest.records_total, 300);
    assert_eq!(backend.calls(), 300);
}

#[test]
fn resume_fills_exactly_the_missing_tuples() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("records.jsonl");
    let config = mock_config();
    let bank = config.bank().unwrap();
    run_experiment(&config, &bank, &CountingBackend::new(42), &out, None).unwrap();
    let complete = std::fs::read(&out).unwrap();

    // Drop the last 10 lines and the manifest, simulating a crash.
    let text = String::from_utf8(complete.clone()).unwrap();
    let kept: Vec<&str> = text.lines().take(290).collect();
    std::fs::write(&out, format!("{}\n", kept.join("\n"))).unwrap();
    std::fs::remove_file(neutro_core::runner::records::manifest_path(&out)).unwrap();

    let backend = CountingBackend::new(42);
    let manifest = resume_run(&config, &bank, &backend, &out, None).unwrap();
    assert_eq!(backend.calls(), 10);
    assert_eq!(manifest.records_total, 300);
    // Deterministic timestamps and draws: the resumed file matches the
    // uninterrupted one byte for byte.
    assert_eq!(std::fs::read(&out).unwrap(), complete);
}

#[test]
fn resume_rejects_mismatched_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("records.jsonl");
    let config = mock_config();
    let bank = config.bank().unwrap();
    run_experiment(&config, &bank, &CountingBackend::new(42), &out, None).unwrap();

    let mut other = config.clone();
    other.models = vec!["some-other-model".into()];
    let err = resume_run(&other, &bank, &CountingBackend::new(42), &out, None).unwrap_err();
    assert!(matches!(err, RunError::ConfigMismatch(_)), "{err}");

    // Manifest-less mismatch detection: keep the records, drop the
    // manifest.
    std::fs::remove_file(neutro_core::runner::records::manifest_path(&out)).unwrap();
    let err = resume_run(&other, &bank, &CountingBackend::new(42), &out, None).unwrap_err();
    assert!(matches!(err, RunError::ConfigMismatch(_)), "{err}");
}

#[test]
fn simplex_strategy_descriptive_means_sum_to_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("records.jsonl");
    let config = mock_config();
    let bank = config.bank().unwrap();
    run_experiment(&config, &bank, &CountingBackend::new(42), &out, None).unwrap();

    let loaded = load_records(&out).unwrap();
    let (dataset, _) = validate_and_filter(&loaded);
    let rows = neutro_core::stats::descriptive_by_group(
        &dataset,
        StrategyKind::Probabilistic,
        neutro_core::stats::Grouping::Phenomenon,
        neutro_core::stats::SdConvention::Sample,
    )
    .unwrap();
    for row in rows {
        let mean_sum = row.t.mean + row.i.mean + row.f.mean;
        assert!(
            (mean_sum - 1.0).abs() <= 0.01,
            "{}: mean sum {mean_sum}",
            row.key
        );
    }
}

#[test]
fn custom_stimulus_file_drives_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let bank_path = dir.path().join("bank.json");
    // Two stimuli only: one per class used.
    let bank_json = serde_json::json!([
        {
            "class": "vagueness",
            "statement": "The water is warm.",
            "date_anchor": null,
            "note": "graded predicate"
        },
        {
            "class": "future_contingency",
            "statement": "It will snow in Oslo tomorrow.",
            "date_anchor": "2027-01-15",
            "note": "open future"
        }
    ]);
    std::fs::write(
        &bank_path,
        serde_json::to_string_pretty(&bank_json).unwrap(),
    )
    .unwrap();

    let mut config = mock_config();
    config.models = vec!["gpt-4o".into()];
    config.strategies = vec![StrategyKind::Neutrosophic];
    config.repetitions = 2;
    config.bank_path = Some(bank_path);
    let bank = config.bank().unwrap();
    assert_eq!(bank.len(), 2);

    let out = dir.path().join("records.jsonl");
    run_experiment(&config, &bank, &CountingBackend::new(3), &out, None).unwrap();
    let loaded = load_records(&out).unwrap();
    assert_eq!(loaded.records.len(), 4);
    let classes: std::collections::BTreeSet<_> =
        loaded.records.iter().map(|r| r.phenomenon_class).collect();
    assert_eq!(classes.len(), 2);
    assert!(classes.contains(&PhenomenonClass::FutureContingency));
}

#[test]
fn validate_and_filter_accounts_for_every_record() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("records.jsonl");
    let mut config = mock_config();
    config.repetitions = 2;
    let bank = config.bank().unwrap();
    let backend = MalformedCellBackend {
        inner: MockBackend::new(MockProfile::reference_means(), 7),
        class: PhenomenonClass::LogicalParadox,
        strategy: StrategyKind::Probabilistic,
    };
    run_experiment(&config, &bank, &backend, &out, None).unwrap();

    // Corrupt one valid line on disk as well (the first record is the
    // unconstrained strategy, untouched by the poisoned cell).
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    lines[0] = "{ truncated".into();
    std::fs::write(&out, format!("{}\n", lines.join("\n"))).unwrap();

    let loaded = load_records(&out).unwrap();
    let (dataset, report) = validate_and_filter(&loaded);
    assert_eq!(report.gross, 120);
    assert_eq!(dataset.len() + report.entries.len(), report.gross);
    assert_eq!(dataset.len(), report.net);
    assert!(report.entries.iter().all(|e| !e.reason.is_empty()));
    // 8 backend-poisoned records (4 models x 2 reps) + 1 corrupt line.
    assert_eq!(report.entries.len(), 9);
}
