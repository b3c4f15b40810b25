//! Epistemic-auditing toolkit for language-model APIs.
//!
//! The crate elicits neutrosophic (T, I, F) evaluations of a fixed stimulus
//! bank under three prompting strategies, detects hyper-truth states
//! (component sums above 1), persists raw evaluation records as JSONL, and
//! reproduces the full statistical analysis — descriptive tables, Wilson
//! score interval, chi-square and Fisher exact tests, strategy shifts, and
//! component correlations — from those records.
//!
//! Modules map onto the pipeline stages:
//!
//! * [`svns`] — the neutrosophic value types and pure operations on them;
//! * [`phenomena`] — the five-stimulus bank and date anchoring;
//! * [`prompting`] — prompt rendering and strict response parsing;
//! * [`backend`] — completion backends (HTTP client and deterministic mock);
//! * [`runner`] — design-matrix execution, persistence, resume;
//! * [`dataset`] — record validation and grouping into analysis cells;
//! * [`stats`] — the statistical engine;
//! * [`report`] — report bundles, table emission, and reference verification.

pub mod backend;
pub mod dataset;
pub mod phenomena;
pub mod prompting;
pub mod report;
pub mod runner;
pub mod stats;
pub mod svns;
