//! Report bundles and their emission as markdown tables (mirroring the
//! Mean ± SD layout of the reference analysis) and full-precision CSV,
//! including the per-record plot data files.

pub mod verify;

pub use verify::{
    render_verification, verify_against_reference, VerificationOutcome, VerificationTarget,
};

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::dataset::{Dataset, ExclusionReport};
use crate::phenomena::PhenomenonClass;
use crate::prompting::StrategyKind;
use crate::stats::{
    chi_square_independence, correlation_matrix, descriptive_by_group, hypertruth_table,
    shift_table, ChiSquareResult, CorrelationMatrix, DescriptiveRow, FisherResult, Grouping,
    HypertruthTable, SdConvention, ShiftRow, CORRELATION_VARIABLES,
};
use crate::svns::{hypertruth_rate, HypertruthRate};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Stats(#[from] crate::stats::StatsError),
    #[error("dataset contains no valid records")]
    EmptyDataset,
    #[error(
        "records look mock-generated (run id {0:?}); pass the non-reference-data \
         acknowledgement to verify anyway"
    )]
    NonReferenceData(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv emission failed: {0}")]
    Csv(#[from] csv::Error),
}

/// Emission formats for `analyze`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Markdown,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "md" | "markdown" => Ok(OutputFormat::Markdown),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(format!("unknown format {other:?} (expected md or csv)")),
        }
    }
}

/// Every table the analysis derives from one dataset, plus notes for the
/// parts that were not computable from the records at hand.
#[derive(Debug, Clone)]
pub struct ReportBundle {
    pub run_ids: Vec<String>,
    pub gross: usize,
    pub net: usize,
    pub descriptive_phenomenon: Vec<DescriptiveRow>,
    pub descriptive_model: Vec<DescriptiveRow>,
    pub hypertruth: HypertruthTable,
    pub s2_hypertruth: Option<HypertruthRate>,
    pub chi_square: Option<ChiSquareResult>,
    pub fisher_one_vs_rest: Vec<(PhenomenonClass, FisherResult)>,
    pub shifts: Option<Vec<ShiftRow>>,
    pub correlations: Option<CorrelationMatrix>,
    pub exclusion_summary: BTreeMap<String, usize>,
    pub notes: Vec<String>,
}

impl ReportBundle {
    pub fn build(dataset: &Dataset, exclusions: &ExclusionReport) -> Result<Self, ReportError> {
        if dataset.is_empty() {
            return Err(ReportError::EmptyDataset);
        }
        let mut notes = Vec::new();

        let descriptive_phenomenon = descriptive_by_group(
            dataset,
            StrategyKind::Neutrosophic,
            Grouping::Phenomenon,
            SdConvention::Sample,
        )?;
        let descriptive_model = descriptive_by_group(
            dataset,
            StrategyKind::Neutrosophic,
            Grouping::Model,
            SdConvention::Sample,
        )?;
        let hypertruth = hypertruth_table(dataset, StrategyKind::Neutrosophic)?;

        let s2_triplets = dataset.triplets(StrategyKind::Probabilistic);
        let s2_hypertruth = hypertruth_rate(&s2_triplets).ok();
        if s2_hypertruth.is_none() {
            notes.push("no simplex-strategy records; structural-zero check skipped".into());
        }

        let counts: Vec<Vec<u64>> = hypertruth
            .rows
            .iter()
            .map(|(_, r)| vec![r.k as u64, (r.n - r.k) as u64])
            .collect();
        let chi_square = match chi_square_independence(&counts) {
            Ok(result) => Some(result),
            Err(e) => {
                notes.push(format!("chi-square not computable: {e}"));
                None
            }
        };

        let pooled = hypertruth.pooled;
        let mut fisher_one_vs_rest = Vec::new();
        for (class, rate) in &hypertruth.rows {
            let rest_k = (pooled.k - rate.k) as u64;
            let rest_n = (pooled.n - rate.n) as u64;
            let table = [
                [rate.k as u64, (rate.n - rate.k) as u64],
                [rest_k, rest_n - rest_k],
            ];
            match crate::stats::fisher_exact(table) {
                Ok(result) => fisher_one_vs_rest.push((*class, result)),
                Err(e) => notes.push(format!("fisher test for {class} not computable: {e}")),
            }
        }

        let shifts = match shift_table(dataset) {
            Ok(rows) => Some(rows),
            Err(e) => {
                notes.push(format!("strategy shifts not computable: {e}"));
                None
            }
        };
        let correlations = match correlation_matrix(dataset) {
            Ok(matrix) => Some(matrix),
            Err(e) => {
                notes.push(format!("correlations not computable: {e}"));
                None
            }
        };

        Ok(Self {
            run_ids: dataset.run_ids().map(str::to_string).collect(),
            gross: exclusions.gross,
            net: exclusions.net,
            descriptive_phenomenon,
            descriptive_model,
            hypertruth,
            s2_hypertruth,
            chi_square,
            fisher_one_vs_rest,
            shifts,
            correlations,
            exclusion_summary: exclusions.summary(),
            notes,
        })
    }

    /// Write one file per table per requested format into `out_dir`;
    /// returns the paths written. Deterministic: the same bundle and
    /// dataset produce byte-identical files.
    pub fn emit(
        &self,
        dataset: &Dataset,
        out_dir: &Path,
        formats: &[OutputFormat],
    ) -> Result<Vec<PathBuf>, ReportError> {
        fs::create_dir_all(out_dir).map_err(|source| ReportError::Io {
            path: out_dir.display().to_string(),
            source,
        })?;
        let mut written = Vec::new();
        let mut write = |name: &str, content: String| -> Result<(), ReportError> {
            let path = out_dir.join(name);
            fs::write(&path, content).map_err(|source| ReportError::Io {
                path: path.display().to_string(),
                source,
            })?;
            written.push(path);
            Ok(())
        };

        if formats.contains(&OutputFormat::Markdown) {
            write(
                "descriptive_phenomenon.md",
                self.markdown_descriptive_phenomenon(),
            )?;
            write("descriptive_model.md", self.markdown_descriptive_model())?;
            write("hypertruth.md", self.markdown_hypertruth())?;
            write("tests.md", self.markdown_tests())?;
            if let Some(shifts) = &self.shifts {
                write("shifts.md", markdown_shifts(shifts))?;
            }
            if let Some(matrix) = &self.correlations {
                write("correlations.md", markdown_correlations(matrix))?;
            }
            write("exclusions.md", self.markdown_exclusions())?;
        }
        if formats.contains(&OutputFormat::Csv) {
            write(
                "descriptive_phenomenon.csv",
                csv_descriptive(&self.descriptive_phenomenon)?,
            )?;
            write(
                "descriptive_model.csv",
                csv_descriptive(&self.descriptive_model)?,
            )?;
            write("hypertruth.csv", self.csv_hypertruth()?)?;
            write("tests.csv", self.csv_tests()?)?;
            if let Some(shifts) = &self.shifts {
                write("shifts.csv", csv_shifts(shifts)?)?;
            }
            if let Some(matrix) = &self.correlations {
                write("correlations.csv", csv_correlations(matrix)?)?;
            }
            write("exclusions.csv", self.csv_exclusions()?)?;
            // Plot data: the per-record values behind the figures.
            write("components.csv", csv_components(dataset)?)?;
            if let Some(shifts) = &self.shifts {
                write("strategy_means.csv", csv_strategy_means(shifts)?)?;
            }
            write("correlation_pairs.csv", csv_correlation_pairs(dataset)?)?;
        }
        write("bundle.json", self.summary_json())?;
        Ok(written)
    }

    fn summary_json(&self) -> String {
        let value = serde_json::json!({
            "run_ids": self.run_ids,
            "gross": self.gross,
            "net": self.net,
            "strategies": {
                "s1_records": self.hypertruth.pooled.n,
                "s2_records": self.s2_hypertruth.map(|r| r.n),
            },
            "notes": self.notes,
        });
        serde_json::to_string_pretty(&value).expect("json serialization cannot fail")
    }

    fn markdown_descriptive_phenomenon(&self) -> String {
        markdown_descriptive(
            "Components by phenomenon (unconstrained strategy)",
            "Phenomenon",
            &self.descriptive_phenomenon,
        )
    }

    fn markdown_descriptive_model(&self) -> String {
        markdown_descriptive(
            "Per-model summary across phenomena (unconstrained strategy)",
            "Model",
            &self.descriptive_model,
        )
    }

    fn markdown_hypertruth(&self) -> String {
        let mut out = String::from("# Hyper-truth rate by phenomenon\n\n");
        out.push_str("| Phenomenon | Hyper-truth cases (k) | Total (n) | Rate (k/n) |\n");
        out.push_str("|---|---|---|---|\n");
        for (class, rate) in &self.hypertruth.rows {
            out.push_str(&format!(
                "| {} | {} | {} | {:.1}% |\n",
                class.display_label(),
                rate.k,
                rate.n,
                rate.rate * 100.0
            ));
        }
        let pooled = self.hypertruth.pooled;
        out.push_str(&format!(
            "| **Total** | **{}** | **{}** | **{:.1}%** |\n",
            pooled.k,
            pooled.n,
            pooled.rate * 100.0
        ));
        let w = self.hypertruth.wilson;
        out.push_str(&format!(
            "\n95% Wilson score interval on the pooled rate (z = {}): [{:.3}, {:.3}]\n",
            w.z, w.low, w.high
        ));
        if let Some(s2) = self.s2_hypertruth {
            out.push_str(&format!(
                "\nSimplex-strategy hyper-truth rate (structurally zero): {}/{} = {:.3}\n",
                s2.k, s2.n, s2.rate
            ));
        }
        out
    }

    fn markdown_tests(&self) -> String {
        let mut out = String::from("# Association tests\n\n");
        match &self.chi_square {
            Some(c) => out.push_str(&format!(
                "Pearson chi-square of phenomenon x hyper-truth: chi2 = {:.2}, df = {}, p = {:.3}\n\n",
                c.statistic, c.df, c.p_value
            )),
            None => out.push_str("Chi-square: not computable from these records.\n\n"),
        }
        out.push_str("## One-vs-rest Fisher exact tests\n\n");
        out.push_str("| Phenomenon | Odds ratio | p (two-sided) |\n|---|---|---|\n");
        for (class, fisher) in &self.fisher_one_vs_rest {
            out.push_str(&format!(
                "| {} | {} | {:.4} |\n",
                class.display_label(),
                format_odds_ratio(fisher.odds_ratio),
                fisher.p_value
            ));
        }
        out
    }

    fn markdown_exclusions(&self) -> String {
        let mut out = String::from("# Exclusion summary\n\n");
        out.push_str(&format!(
            "Gross records: {}; valid (net): {}; excluded: {}\n\n",
            self.gross,
            self.net,
            self.gross - self.net
        ));
        if self.exclusion_summary.is_empty() {
            out.push_str("No exclusions.\n");
        } else {
            out.push_str("| Reason | Count |\n|---|---|\n");
            for (reason, count) in &self.exclusion_summary {
                out.push_str(&format!("| {reason} | {count} |\n"));
            }
        }
        if !self.notes.is_empty() {
            out.push_str("\n## Notes\n\n");
            for note in &self.notes {
                out.push_str(&format!("- {note}\n"));
            }
        }
        out
    }

    fn csv_hypertruth(&self) -> Result<String, ReportError> {
        let mut w = csv_writer();
        w.write_record(["phenomenon", "k", "n", "rate", "wilson_low", "wilson_high"])?;
        for (class, rate) in &self.hypertruth.rows {
            w.write_record([
                class.id().to_string(),
                rate.k.to_string(),
                rate.n.to_string(),
                rate.rate.to_string(),
                String::new(),
                String::new(),
            ])?;
        }
        let pooled = self.hypertruth.pooled;
        let wilson = self.hypertruth.wilson;
        w.write_record([
            "total".to_string(),
            pooled.k.to_string(),
            pooled.n.to_string(),
            pooled.rate.to_string(),
            wilson.low.to_string(),
            wilson.high.to_string(),
        ])?;
        finish_csv(w)
    }

    fn csv_tests(&self) -> Result<String, ReportError> {
        let mut w = csv_writer();
        w.write_record([
            "test",
            "phenomenon",
            "statistic",
            "df",
            "odds_ratio",
            "p_value",
        ])?;
        if let Some(c) = &self.chi_square {
            w.write_record([
                "chi_square".to_string(),
                String::new(),
                c.statistic.to_string(),
                c.df.to_string(),
                String::new(),
                c.p_value.to_string(),
            ])?;
        }
        for (class, fisher) in &self.fisher_one_vs_rest {
            w.write_record([
                "fisher_one_vs_rest".to_string(),
                class.id().to_string(),
                String::new(),
                String::new(),
                fisher.odds_ratio.to_string(),
                fisher.p_value.to_string(),
            ])?;
        }
        finish_csv(w)
    }

    fn csv_exclusions(&self) -> Result<String, ReportError> {
        let mut w = csv_writer();
        w.write_record(["reason", "count"])?;
        for (reason, count) in &self.exclusion_summary {
            w.write_record([reason.clone(), count.to_string()])?;
        }
        finish_csv(w)
    }
}

fn format_odds_ratio(or: f64) -> String {
    if or.is_infinite() {
        "inf".to_string()
    } else {
        format!("{or:.2}")
    }
}

fn markdown_descriptive(title: &str, key_header: &str, rows: &[DescriptiveRow]) -> String {
    let mut out = format!("# {title}\n\n");
    out.push_str(&format!(
        "| {key_header} | Truth (T) | Indeterminacy (I) | Falsity (F) | Sum (T+I+F) | n |\n"
    ));
    out.push_str("|---|---|---|---|---|---|\n");
    for row in rows {
        out.push_str(&format!(
            "| {} | {:.3} ± {:.3} | {:.3} ± {:.3} | {:.3} ± {:.3} | {:.3} ± {:.3} | {} |\n",
            row.key,
            row.t.mean,
            row.t.sd,
            row.i.mean,
            row.i.sd,
            row.f.mean,
            row.f.sd,
            row.sum.mean,
            row.sum.sd,
            row.n
        ));
    }
    out
}

fn markdown_shifts(rows: &[ShiftRow]) -> String {
    let mut out = String::from("# Strategy shifts per phenomenon\n\n");
    out.push_str("| Phenomenon | S1 T | S2 T | dT | S1 I | S2 I | dI |\n");
    out.push_str("|---|---|---|---|---|---|---|\n");
    for row in rows {
        out.push_str(&format!(
            "| {} | {:.3} | {:.3} | {:+.3} | {:.3} | {:.3} | {:+.3} |\n",
            row.class.display_label(),
            row.s1_t,
            row.s2_t,
            row.delta_t,
            row.s1_i,
            row.s2_i,
            row.delta_i
        ));
    }
    out
}

fn markdown_correlations(matrix: &CorrelationMatrix) -> String {
    let mut out = String::from("# Component correlations (paired records)\n\n");
    out.push_str(&format!("Pairs: {}\n\n", matrix.n_pairs));
    out.push_str("| |");
    for v in CORRELATION_VARIABLES {
        out.push_str(&format!(" {v} |"));
    }
    out.push('\n');
    out.push_str("|---|");
    for _ in CORRELATION_VARIABLES {
        out.push_str("---|");
    }
    out.push('\n');
    for (i, v) in CORRELATION_VARIABLES.iter().enumerate() {
        out.push_str(&format!("| {v} |"));
        for j in 0..CORRELATION_VARIABLES.len() {
            match matrix.entries[i][j] {
                Some(r) => out.push_str(&format!(" {r:.2} |")),
                None => out.push_str("  |"),
            }
        }
        out.push('\n');
    }
    out.push_str("\nHighlighted coefficients:\n\n");
    for (a, b) in [
        ("s1_t", "s1_i"),
        ("s1_f", "s1_sum"),
        ("s1_t", "s2_t"),
        ("s1_f", "s2_f"),
    ] {
        match matrix.get(a, b) {
            Some(r) => out.push_str(&format!("- r({a}, {b}) = {r:.2}\n")),
            None => out.push_str(&format!("- r({a}, {b}): not computable (zero variance)\n")),
        }
    }
    out
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::Writer::from_writer(Vec::new())
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String, ReportError> {
    let bytes = w.into_inner().expect("in-memory csv flush cannot fail");
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn csv_descriptive(rows: &[DescriptiveRow]) -> Result<String, ReportError> {
    let mut w = csv_writer();
    w.write_record([
        "group", "n", "t_mean", "t_sd", "i_mean", "i_sd", "f_mean", "f_sd", "sum_mean", "sum_sd",
    ])?;
    for row in rows {
        w.write_record([
            row.key.to_string(),
            row.n.to_string(),
            row.t.mean.to_string(),
            row.t.sd.to_string(),
            row.i.mean.to_string(),
            row.i.sd.to_string(),
            row.f.mean.to_string(),
            row.f.sd.to_string(),
            row.sum.mean.to_string(),
            row.sum.sd.to_string(),
        ])?;
    }
    finish_csv(w)
}

fn csv_shifts(rows: &[ShiftRow]) -> Result<String, ReportError> {
    let mut w = csv_writer();
    w.write_record([
        "phenomenon",
        "s1_t",
        "s2_t",
        "delta_t",
        "s1_i",
        "s2_i",
        "delta_i",
        "n_s1",
        "n_s2",
    ])?;
    for row in rows {
        w.write_record([
            row.class.id().to_string(),
            row.s1_t.to_string(),
            row.s2_t.to_string(),
            row.delta_t.to_string(),
            row.s1_i.to_string(),
            row.s2_i.to_string(),
            row.delta_i.to_string(),
            row.n_s1.to_string(),
            row.n_s2.to_string(),
        ])?;
    }
    finish_csv(w)
}

fn csv_correlations(matrix: &CorrelationMatrix) -> Result<String, ReportError> {
    let mut w = csv_writer();
    let mut header = vec!["variable".to_string()];
    header.extend(CORRELATION_VARIABLES.iter().map(|v| v.to_string()));
    w.write_record(&header)?;
    for (i, v) in CORRELATION_VARIABLES.iter().enumerate() {
        let mut record = vec![v.to_string()];
        for j in 0..CORRELATION_VARIABLES.len() {
            record.push(match matrix.entries[i][j] {
                Some(r) => r.to_string(),
                None => String::new(),
            });
        }
        w.write_record(&record)?;
    }
    finish_csv(w)
}

/// Per-record component values: the data behind the distribution figures.
fn csv_components(dataset: &Dataset) -> Result<String, ReportError> {
    let mut w = csv_writer();
    w.write_record([
        "strategy",
        "model",
        "phenomenon",
        "run_id",
        "repetition",
        "t",
        "i",
        "f",
        "sum",
        "p_yes",
        "p_no",
        "sum_deviation",
    ])?;
    for strategy in StrategyKind::ALL {
        for (key, obs) in dataset.observations(strategy) {
            let t = obs.triplet;
            w.write_record([
                strategy.id().to_string(),
                key.model_id.clone(),
                key.phenomenon_class.id().to_string(),
                obs.run_id.clone(),
                obs.repetition.to_string(),
                t.t().to_string(),
                t.i().to_string(),
                t.f().to_string(),
                t.sum().to_string(),
                obs.p_yes.map(|v| v.to_string()).unwrap_or_default(),
                obs.p_no.map(|v| v.to_string()).unwrap_or_default(),
                obs.sum_deviation.map(|v| v.to_string()).unwrap_or_default(),
            ])?;
        }
    }
    finish_csv(w)
}

/// Mean T and I per phenomenon under both triplet strategies: the data
/// behind the strategy-comparison figure.
fn csv_strategy_means(shifts: &[ShiftRow]) -> Result<String, ReportError> {
    let mut w = csv_writer();
    w.write_record(["phenomenon", "component", "s1_mean", "s2_mean", "delta"])?;
    for row in shifts {
        w.write_record([
            row.class.id().to_string(),
            "T".to_string(),
            row.s1_t.to_string(),
            row.s2_t.to_string(),
            row.delta_t.to_string(),
        ])?;
        w.write_record([
            row.class.id().to_string(),
            "I".to_string(),
            row.s1_i.to_string(),
            row.s2_i.to_string(),
            row.delta_i.to_string(),
        ])?;
    }
    finish_csv(w)
}

/// Paired S1/S2 component values: the data behind the correlation figure.
fn csv_correlation_pairs(dataset: &Dataset) -> Result<String, ReportError> {
    let mut w = csv_writer();
    w.write_record([
        "model",
        "phenomenon",
        "run_id",
        "repetition",
        "s1_t",
        "s1_i",
        "s1_f",
        "s1_sum",
        "s2_t",
        "s2_i",
        "s2_f",
        "s2_sum",
    ])?;
    for pair in dataset.paired_rows(StrategyKind::Neutrosophic, StrategyKind::Probabilistic) {
        w.write_record([
            pair.model_id.clone(),
            pair.phenomenon_class.id().to_string(),
            pair.run_id.clone(),
            pair.repetition.to_string(),
            pair.first.t().to_string(),
            pair.first.i().to_string(),
            pair.first.f().to_string(),
            pair.first.sum().to_string(),
            pair.second.t().to_string(),
            pair.second.i().to_string(),
            pair.second.f().to_string(),
            pair.second.sum().to_string(),
        ])?;
    }
    finish_csv(w)
}

#[cfg(test)]
pub(crate) mod test_fixtures {
    use chrono::{TimeZone, Utc};

    use crate::dataset::{validate_and_filter, Dataset};
    use crate::phenomena::PhenomenonClass;
    use crate::prompting::{parse_response, StrategyKind};
    use crate::runner::records::{EvaluationRecord, LoadedRecords};

    pub(crate) fn record(
        run_id: &str,
        model: &str,
        class: PhenomenonClass,
        strategy: StrategyKind,
        repetition: u32,
        raw: String,
    ) -> EvaluationRecord {
        EvaluationRecord {
            run_id: run_id.into(),
            model_id: model.into(),
            phenomenon_class: class,
            strategy,
            repetition,
            timestamp: Utc.with_ymd_and_hms(2026, 4, 30, 0, 0, 0).unwrap(),
            parsed: parse_response(strategy, &raw),
            raw_text: raw,
        }
    }

    /// A synthetic dataset engineered to reproduce the reference
    /// hyper-truth counts exactly: per phenomenon, k of 20 evaluations are
    /// hyper-truth (4 models x 5 repetitions), 66 of 100 pooled. Component
    /// values are arbitrary, so mean/SD targets do not match; count-derived
    /// targets (counts, chi-square, Fisher) do.
    pub(crate) fn counts_engineered_records(run_id: &str) -> Vec<EvaluationRecord> {
        let ks = [
            (PhenomenonClass::FutureContingency, 14usize),
            (PhenomenonClass::EthicalContradiction, 19),
            (PhenomenonClass::EpistemicIgnorance, 11),
            (PhenomenonClass::LogicalParadox, 10),
            (PhenomenonClass::Vagueness, 12),
        ];
        let models = ["gpt-3.5-turbo", "gpt-4-turbo", "gpt-4o", "gpt-4o-mini"];
        let mut records = Vec::new();
        for (class, k) in ks {
            let mut emitted = 0usize;
            for model in models {
                for rep in 1..=5u32 {
                    let raw = if emitted < k {
                        "{\"T\": 0.8, \"I\": 0.9, \"F\": 0.7}".to_string()
                    } else {
                        "{\"T\": 0.1, \"I\": 0.2, \"F\": 0.3}".to_string()
                    };
                    records.push(record(
                        run_id,
                        model,
                        class,
                        StrategyKind::Neutrosophic,
                        rep,
                        raw,
                    ));
                    emitted += 1;
                }
            }
        }
        records
    }

    pub(crate) fn counts_engineered_dataset(run_id: &str) -> Dataset {
        let (dataset, report) = validate_and_filter(&LoadedRecords {
            records: counts_engineered_records(run_id),
            corrupt: vec![],
        });
        assert_eq!(report.entries.len(), 0);
        dataset
    }
}
