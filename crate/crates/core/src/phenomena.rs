//! The stimulus bank: five linguistic phenomena spanning paradox,
//! ignorance, vagueness, ethical contradiction, and future contingency.
//!
//! The bank is data-driven — it loads from a plain JSON stimulus file so
//! replications can extend it — and the canonical five-item bank ships
//! embedded.

use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BankError {
    #[error("statement must be non-empty")]
    EmptyStatement,
    #[error("{class:?} requires a date anchor: {expected}")]
    DateAnchorMismatch {
        class: PhenomenonClass,
        expected: &'static str,
    },
    #[error("failed to read stimulus file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to parse stimulus file {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

/// The five phenomenon classes. Serialized identifiers are stable and used
/// as-is in record files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhenomenonClass {
    LogicalParadox,
    EpistemicIgnorance,
    Vagueness,
    EthicalContradiction,
    FutureContingency,
}

impl PhenomenonClass {
    pub const ALL: [PhenomenonClass; 5] = [
        PhenomenonClass::LogicalParadox,
        PhenomenonClass::EpistemicIgnorance,
        PhenomenonClass::Vagueness,
        PhenomenonClass::EthicalContradiction,
        PhenomenonClass::FutureContingency,
    ];

    /// Stable identifier used in persisted records and config files.
    pub fn id(self) -> &'static str {
        match self {
            PhenomenonClass::LogicalParadox => "logical_paradox",
            PhenomenonClass::EpistemicIgnorance => "epistemic_ignorance",
            PhenomenonClass::Vagueness => "vagueness",
            PhenomenonClass::EthicalContradiction => "ethical_contradiction",
            PhenomenonClass::FutureContingency => "future_contingency",
        }
    }

    /// Row label used in report tables.
    pub fn display_label(self) -> &'static str {
        match self {
            PhenomenonClass::FutureContingency => "Contingency (Future)",
            PhenomenonClass::EthicalContradiction => "Contradiction (Ethical)",
            PhenomenonClass::EpistemicIgnorance => "Ignorance (Epistemic)",
            PhenomenonClass::LogicalParadox => "Paradox (Logical)",
            PhenomenonClass::Vagueness => "Vagueness (Fuzzy)",
        }
    }

    /// Classes in report-table row order (alphabetical by display label).
    pub fn table_order() -> [PhenomenonClass; 5] {
        [
            PhenomenonClass::FutureContingency,
            PhenomenonClass::EthicalContradiction,
            PhenomenonClass::EpistemicIgnorance,
            PhenomenonClass::LogicalParadox,
            PhenomenonClass::Vagueness,
        ]
    }
}

impl std::fmt::Display for PhenomenonClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id())
    }
}

/// One stimulus: a statement with its class, an optional calendar anchor
/// (future contingency only), and a note on the component signature the
/// class is expected to elicit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Phenomenon {
    pub class: PhenomenonClass,
    pub statement: String,
    pub date_anchor: Option<NaiveDate>,
    #[serde(rename = "note")]
    pub predicted_signature: String,
}

impl Phenomenon {
    pub fn new(
        class: PhenomenonClass,
        statement: impl Into<String>,
        date_anchor: Option<NaiveDate>,
        predicted_signature: impl Into<String>,
    ) -> Result<Self, BankError> {
        let statement = statement.into();
        if statement.is_empty() {
            return Err(BankError::EmptyStatement);
        }
        let wants_anchor = class == PhenomenonClass::FutureContingency;
        if wants_anchor != date_anchor.is_some() {
            return Err(BankError::DateAnchorMismatch {
                class,
                expected: if wants_anchor {
                    "future contingencies carry an anchor date"
                } else {
                    "only future contingencies carry an anchor date"
                },
            });
        }
        Ok(Self {
            class,
            statement,
            date_anchor,
            predicted_signature: predicted_signature.into(),
        })
    }
}

fn anchor(date: NaiveDate) -> Option<NaiveDate> {
    Some(date)
}

/// The canonical five-stimulus bank, one phenomenon per class.
pub fn default_bank() -> Vec<Phenomenon> {
    let contingency_anchor = NaiveDate::from_ymd_opt(2026, 5, 1).expect("valid date");
    vec![
        Phenomenon::new(
            PhenomenonClass::LogicalParadox,
            "This sentence is false.",
            None,
            "high I with simultaneous nonzero T and F; hyper-truth very likely",
        )
        .expect("embedded stimulus is valid"),
        Phenomenon::new(
            PhenomenonClass::EpistemicIgnorance,
            "The number of stars in the universe is even.",
            None,
            "very high I, moderate F, low T; hyper-truth moderately likely",
        )
        .expect("embedded stimulus is valid"),
        Phenomenon::new(
            PhenomenonClass::Vagueness,
            "John is 1.75 meters tall, therefore John is tall.",
            None,
            "high T, moderate I; hyper-truth moderately likely",
        )
        .expect("embedded stimulus is valid"),
        Phenomenon::new(
            PhenomenonClass::EthicalContradiction,
            "Lying to save an innocent life is morally right and wrong at the same time.",
            None,
            "high T and high F together; hyper-truth most likely of the bank",
        )
        .expect("embedded stimulus is valid"),
        Phenomenon::new(
            PhenomenonClass::FutureContingency,
            "It will rain in New York tomorrow.",
            anchor(contingency_anchor),
            "moderate T, high I, moderate F; hyper-truth likely",
        )
        .expect("embedded stimulus is valid"),
    ]
}

/// Resolve the stimulus text a model should actually see.
///
/// Future contingencies are referentially fixed by rendering an explicit
/// ISO date: a literal "tomorrow" is replaced with "on <date>", otherwise
/// the date is appended. The anchor date is the phenomenon's own if set,
/// else the day after `run_date` (the reading "tomorrow" had on the day the
/// call was made). Every other class returns its statement unchanged.
pub fn anchor_statement(p: &Phenomenon, run_date: NaiveDate) -> String {
    if p.class != PhenomenonClass::FutureContingency {
        return p.statement.clone();
    }
    let date = p
        .date_anchor
        .unwrap_or_else(|| run_date.succ_opt().unwrap_or(run_date));
    let iso = date.format("%Y-%m-%d").to_string();
    if p.statement.contains("tomorrow") {
        p.statement.replace("tomorrow", &format!("on {iso}"))
    } else {
        format!("{} (The date in question is {iso}.)", p.statement)
    }
}

/// Load a bank from a stimulus file: a JSON array of objects with fields
/// `class`, `statement`, `date_anchor` (nullable), and `note`.
pub fn load_bank(path: &Path) -> Result<Vec<Phenomenon>, BankError> {
    let text = fs::read_to_string(path).map_err(|source| BankError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let raw: Vec<Phenomenon> = serde_json::from_str(&text).map_err(|source| BankError::Parse {
        path: path.display().to_string(),
        source,
    })?;
    // Re-validate through the constructor so file-sourced stimuli honor the
    // same invariants as embedded ones.
    raw.into_iter()
        .map(|p| Phenomenon::new(p.class, p.statement, p.date_anchor, p.predicted_signature))
        .collect()
}

/// Serialize a bank to the stimulus-file JSON shape.
pub fn bank_to_json(bank: &[Phenomenon]) -> String {
    serde_json::to_string_pretty(bank).expect("bank serialization cannot fail")
}
