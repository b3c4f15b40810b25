//! Validated records grouped into (strategy, model, phenomenon) cells,
//! plus the exclusion accounting that keeps every loaded record in exactly
//! one of the two buckets.

use std::collections::{BTreeMap, BTreeSet};

use crate::phenomena::PhenomenonClass;
use crate::prompting::StrategyKind;
use crate::runner::records::{EvaluationRecord, LoadedRecords};
use crate::svns::{derive_strategy3_triplet, Triplet};

/// One analysis cell: a strategy evaluated by one model on one phenomenon.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct CellKey {
    pub strategy: StrategyKind,
    pub model_id: String,
    pub phenomenon_class: PhenomenonClass,
}

/// One validated evaluation inside a cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub run_id: String,
    pub repetition: u32,
    pub triplet: Triplet,
    pub p_yes: Option<f64>,
    pub p_no: Option<f64>,
    pub sum_deviation: Option<f64>,
}

/// One observation matched across two strategies.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedRow {
    pub run_id: String,
    pub model_id: String,
    pub phenomenon_class: PhenomenonClass,
    pub repetition: u32,
    pub first: Triplet,
    pub second: Triplet,
}

/// Why a record (or line) was excluded from analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct Exclusion {
    /// 1-based line number for file-level corruption, when known.
    pub line: Option<usize>,
    pub model_id: Option<String>,
    pub phenomenon_class: Option<PhenomenonClass>,
    pub strategy: Option<StrategyKind>,
    pub repetition: Option<u32>,
    pub reason: String,
}

/// Exclusion accounting: every attempted record lands either in the
/// dataset or here, never both, never neither.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct ExclusionReport {
    pub entries: Vec<Exclusion>,
    pub gross: usize,
    pub net: usize,
}

impl ExclusionReport {
    /// Failure-reason histogram.
    pub fn summary(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for e in &self.entries {
            *counts.entry(e.reason.clone()).or_insert(0) += 1;
        }
        counts
    }
}

/// Valid records grouped by (strategy, model, phenomenon). Immutable after
/// construction; iteration order is deterministic.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Dataset {
    cells: BTreeMap<CellKey, Vec<Observation>>,
    run_ids: BTreeSet<String>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.cells.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn run_ids(&self) -> impl Iterator<Item = &str> {
        self.run_ids.iter().map(String::as_str)
    }

    pub fn cells(&self) -> impl Iterator<Item = (&CellKey, &[Observation])> {
        self.cells.iter().map(|(k, v)| (k, v.as_slice()))
    }

    /// Strategies with at least one valid record.
    pub fn strategies(&self) -> BTreeSet<StrategyKind> {
        self.cells.keys().map(|k| k.strategy).collect()
    }

    /// Every model seen in the dataset, across all strategies.
    pub fn models(&self) -> BTreeSet<String> {
        self.cells.keys().map(|k| k.model_id.clone()).collect()
    }

    /// Every phenomenon class seen in the dataset, across all strategies.
    pub fn classes(&self) -> BTreeSet<PhenomenonClass> {
        self.cells.keys().map(|k| k.phenomenon_class).collect()
    }

    pub fn observations(
        &self,
        strategy: StrategyKind,
    ) -> impl Iterator<Item = (&CellKey, &Observation)> {
        self.cells
            .iter()
            .filter(move |(k, _)| k.strategy == strategy)
            .flat_map(|(k, v)| v.iter().map(move |o| (k, o)))
    }

    pub fn triplets(&self, strategy: StrategyKind) -> Vec<Triplet> {
        self.observations(strategy)
            .map(|(_, o)| o.triplet)
            .collect()
    }

    pub fn triplets_for_class(
        &self,
        strategy: StrategyKind,
        class: PhenomenonClass,
    ) -> Vec<Triplet> {
        self.observations(strategy)
            .filter(|(k, _)| k.phenomenon_class == class)
            .map(|(_, o)| o.triplet)
            .collect()
    }

    pub fn triplets_for_model(&self, strategy: StrategyKind, model_id: &str) -> Vec<Triplet> {
        self.observations(strategy)
            .filter(|(k, _)| k.model_id == model_id)
            .map(|(_, o)| o.triplet)
            .collect()
    }

    /// Observations paired across two strategies on identical
    /// (run, model, phenomenon, repetition) coordinates, in deterministic
    /// order.
    pub fn paired(&self, a: StrategyKind, b: StrategyKind) -> Vec<(Triplet, Triplet)> {
        self.paired_rows(a, b)
            .into_iter()
            .map(|row| (row.first, row.second))
            .collect()
    }

    /// As [`Dataset::paired`], keeping the pair coordinates.
    pub fn paired_rows(&self, a: StrategyKind, b: StrategyKind) -> Vec<PairedRow> {
        let index_b: BTreeMap<(String, String, PhenomenonClass, u32), Triplet> = self
            .observations(b)
            .map(|(k, o)| {
                (
                    (
                        o.run_id.clone(),
                        k.model_id.clone(),
                        k.phenomenon_class,
                        o.repetition,
                    ),
                    o.triplet,
                )
            })
            .collect();
        self.observations(a)
            .filter_map(|(k, o)| {
                index_b
                    .get(&(
                        o.run_id.clone(),
                        k.model_id.clone(),
                        k.phenomenon_class,
                        o.repetition,
                    ))
                    .map(|tb| PairedRow {
                        run_id: o.run_id.clone(),
                        model_id: k.model_id.clone(),
                        phenomenon_class: k.phenomenon_class,
                        repetition: o.repetition,
                        first: o.triplet,
                        second: *tb,
                    })
            })
            .collect()
    }

    fn insert(&mut self, key: CellKey, observation: Observation) {
        self.run_ids.insert(observation.run_id.clone());
        self.cells.entry(key).or_default().push(observation);
    }
}

/// Split loaded records into a [`Dataset`] of valid observations and an
/// [`ExclusionReport`] covering everything else (invalid records, corrupt
/// lines, duplicate design coordinates).
pub fn validate_and_filter(loaded: &LoadedRecords) -> (Dataset, ExclusionReport) {
    let mut dataset = Dataset::default();
    let mut report = ExclusionReport {
        gross: loaded.gross(),
        ..Default::default()
    };

    for corrupt in &loaded.corrupt {
        report.entries.push(Exclusion {
            line: Some(corrupt.line),
            model_id: None,
            phenomenon_class: None,
            strategy: None,
            repetition: None,
            reason: format!("corrupt line: {}", corrupt.message),
        });
    }

    let mut seen = BTreeSet::new();
    for record in &loaded.records {
        if !seen.insert(record.key()) {
            report
                .entries
                .push(exclusion_for(record, "duplicate design coordinates"));
            continue;
        }
        match validate_record(record) {
            Ok(observation) => dataset.insert(
                CellKey {
                    strategy: record.strategy,
                    model_id: record.model_id.clone(),
                    phenomenon_class: record.phenomenon_class,
                },
                observation,
            ),
            Err(reason) => report.entries.push(exclusion_for(record, &reason)),
        }
    }
    report.net = dataset.len();
    (dataset, report)
}

fn exclusion_for(record: &EvaluationRecord, reason: &str) -> Exclusion {
    Exclusion {
        line: None,
        model_id: Some(record.model_id.clone()),
        phenomenon_class: Some(record.phenomenon_class),
        strategy: Some(record.strategy),
        repetition: Some(record.repetition),
        reason: reason.to_string(),
    }
}

/// Re-derive the analysis payload from a persisted record. Raw probability
/// pairs are preferred over stored triplets for the entropy strategy, so
/// files carrying either encoding load identically.
fn validate_record(record: &EvaluationRecord) -> Result<Observation, String> {
    let parsed = &record.parsed;
    if !parsed.valid {
        return Err(parsed
            .failure_reason
            .clone()
            .unwrap_or_else(|| "invalid (no reason recorded)".to_string()));
    }
    if parsed.strategy != record.strategy {
        return Err(format!(
            "record strategy {} disagrees with parsed strategy {}",
            record.strategy, parsed.strategy
        ));
    }
    let triplet = match record.strategy {
        StrategyKind::Neutrosophic | StrategyKind::Probabilistic => parsed
            .triplet
            .ok_or_else(|| "valid record carries no triplet".to_string())?,
        StrategyKind::EntropyDerived => match (parsed.p_yes, parsed.p_no) {
            (Some(p_yes), Some(p_no)) => derive_strategy3_triplet(p_yes, p_no)
                .map_err(|e| format!("probability pair fails derivation: {e}"))?,
            _ => parsed.triplet.ok_or_else(|| {
                "valid record carries neither probabilities nor triplet".to_string()
            })?,
        },
    };
    Ok(Observation {
        run_id: record.run_id.clone(),
        repetition: record.repetition,
        triplet,
        p_yes: parsed.p_yes,
        p_no: parsed.p_no,
        sum_deviation: parsed.sum_deviation,
    })
}
