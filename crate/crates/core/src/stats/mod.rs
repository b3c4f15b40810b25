//! The statistical engine: descriptive summaries, the Wilson score
//! interval, contingency tests, correlations, and the derived tables the
//! reports are built from.
//!
//! Everything is computed in double precision; rounding is a presentation
//! concern left to the report layer. Pure functions over immutable
//! datasets.

pub mod contingency;
pub mod special;

pub use contingency::{chi_square_independence, fisher_exact, ChiSquareResult, FisherResult};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;
use crate::phenomena::PhenomenonClass;
use crate::prompting::StrategyKind;
use crate::svns::{hypertruth_rate, strategy_shift, Component, HypertruthRate, Triplet};

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("no valid records for strategy {0}")]
    EmptyStrategy(StrategyKind),
    #[error("group {0} has no valid records for the requested strategy")]
    EmptyGroup(String),
    #[error("k = {k} exceeds n = {n}")]
    CountsInverted { k: usize, n: usize },
    #[error("n must be at least 1")]
    ZeroSample,
    #[error("z must be positive, got {0}")]
    NonPositiveZ(f64),
    #[error("contingency table must be rectangular and at least 2x2")]
    MalformedTable,
    #[error("a row or column marginal is zero")]
    ZeroMarginal,
    #[error("degenerate 2x2 table: a marginal is zero")]
    DegenerateMarginal,
    #[error("input lengths differ: {x} vs {y}")]
    LengthMismatch { x: usize, y: usize },
    #[error("need at least two observations")]
    TooFewObservations,
    #[error("zero variance in input")]
    ZeroVariance,
    #[error("phenomenon {class} lacks valid records for strategy {strategy}")]
    MissingStrategy {
        class: PhenomenonClass,
        strategy: StrategyKind,
    },
    #[error("no records paired across the two strategies")]
    NoPairs,
}

/// Standard-deviation denominator convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SdConvention {
    /// n − 1 denominator (the default throughout the toolkit).
    Sample,
    /// n denominator.
    Population,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

pub fn mean_sd(values: &[f64], convention: SdConvention) -> MeanSd {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let denominator = match convention {
        SdConvention::Sample => (n - 1).max(1) as f64,
        SdConvention::Population => n as f64,
    };
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    MeanSd {
        mean,
        sd: (ss / denominator).sqrt(),
    }
}

/// What the descriptive rows are keyed by.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grouping {
    Phenomenon,
    Model,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GroupKey {
    Phenomenon(PhenomenonClass),
    Model(String),
}

impl std::fmt::Display for GroupKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GroupKey::Phenomenon(class) => f.write_str(class.display_label()),
            GroupKey::Model(model) => f.write_str(model),
        }
    }
}

/// One descriptive row: mean and SD per component plus the component sum.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptiveRow {
    pub key: GroupKey,
    pub n: usize,
    pub t: MeanSd,
    pub i: MeanSd,
    pub f: MeanSd,
    pub sum: MeanSd,
}

/// Descriptive statistics for one strategy, grouped by phenomenon or by
/// model. Group keys are every key present in the dataset (any strategy),
/// so a group that exists but lacks records for `strategy` is an error
/// naming the group.
pub fn descriptive_by_group(
    dataset: &Dataset,
    strategy: StrategyKind,
    grouping: Grouping,
    convention: SdConvention,
) -> Result<Vec<DescriptiveRow>, StatsError> {
    if dataset.triplets(strategy).is_empty() {
        return Err(StatsError::EmptyStrategy(strategy));
    }
    let groups: Vec<(GroupKey, Vec<Triplet>)> = match grouping {
        Grouping::Phenomenon => PhenomenonClass::table_order()
            .into_iter()
            .filter(|class| dataset.classes().contains(class))
            .map(|class| {
                (
                    GroupKey::Phenomenon(class),
                    dataset.triplets_for_class(strategy, class),
                )
            })
            .collect(),
        Grouping::Model => dataset
            .models()
            .into_iter()
            .map(|model| {
                let triplets = dataset.triplets_for_model(strategy, &model);
                (GroupKey::Model(model), triplets)
            })
            .collect(),
    };
    groups
        .into_iter()
        .map(|(key, triplets)| {
            if triplets.is_empty() {
                return Err(StatsError::EmptyGroup(key.to_string()));
            }
            Ok(describe(key, &triplets, convention))
        })
        .collect()
}

fn describe(key: GroupKey, triplets: &[Triplet], convention: SdConvention) -> DescriptiveRow {
    let pick = |f: fn(&Triplet) -> f64| -> Vec<f64> { triplets.iter().map(f).collect() };
    DescriptiveRow {
        key,
        n: triplets.len(),
        t: mean_sd(&pick(Triplet::t), convention),
        i: mean_sd(&pick(Triplet::i), convention),
        f: mean_sd(&pick(Triplet::f), convention),
        sum: mean_sd(&pick(Triplet::sum), convention),
    }
}

/// Wilson score confidence interval for a binomial proportion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilsonInterval {
    pub k: usize,
    pub n: usize,
    pub z: f64,
    pub low: f64,
    pub high: f64,
}

/// Wilson score interval: centre `(p̂ + z²/2n) / (1 + z²/n)`, half-width
/// `z·sqrt(p̂(1−p̂)/n + z²/4n²) / (1 + z²/n)`, bounds clamped to [0,1].
pub fn wilson_interval(k: usize, n: usize, z: f64) -> Result<WilsonInterval, StatsError> {
    if n == 0 {
        return Err(StatsError::ZeroSample);
    }
    if k > n {
        return Err(StatsError::CountsInverted { k, n });
    }
    if !z.is_finite() || z <= 0.0 {
        return Err(StatsError::NonPositiveZ(z));
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half_width = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    // The interval always contains p̂; the min/max recover that invariant
    // at the boundaries where rounding can lose it by one ulp.
    Ok(WilsonInterval {
        k,
        n,
        z,
        low: (center - half_width).clamp(0.0, 1.0).min(p),
        high: (center + half_width).clamp(0.0, 1.0).max(p),
    })
}

/// Sample Pearson correlation coefficient.
pub fn pearson_correlation(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch {
            x: x.len(),
            y: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(StatsError::TooFewObservations);
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// One strategy-shift row: the per-component means feeding each shift and
/// the shifts themselves, for the truth and indeterminacy components.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftRow {
    pub class: PhenomenonClass,
    pub s1_t: f64,
    pub s2_t: f64,
    pub delta_t: f64,
    pub s1_i: f64,
    pub s2_i: f64,
    pub delta_i: f64,
    pub n_s1: usize,
    pub n_s2: usize,
}

/// Per-phenomenon strategy shifts between the unconstrained and simplex
/// strategies.
pub fn shift_table(dataset: &Dataset) -> Result<Vec<ShiftRow>, StatsError> {
    let classes: Vec<PhenomenonClass> = PhenomenonClass::table_order()
        .into_iter()
        .filter(|c| dataset.classes().contains(c))
        .collect();
    if classes.is_empty() {
        return Err(StatsError::EmptyStrategy(StrategyKind::Neutrosophic));
    }
    classes
        .into_iter()
        .map(|class| {
            let s1 = dataset.triplets_for_class(StrategyKind::Neutrosophic, class);
            let s2 = dataset.triplets_for_class(StrategyKind::Probabilistic, class);
            if s1.is_empty() {
                return Err(StatsError::MissingStrategy {
                    class,
                    strategy: StrategyKind::Neutrosophic,
                });
            }
            if s2.is_empty() {
                return Err(StatsError::MissingStrategy {
                    class,
                    strategy: StrategyKind::Probabilistic,
                });
            }
            let column = |triplets: &[Triplet], c: Component| -> Vec<f64> {
                triplets.iter().map(|t| t.component(c)).collect()
            };
            let s1_t = column(&s1, Component::Truth);
            let s2_t = column(&s2, Component::Truth);
            let s1_i = column(&s1, Component::Indeterminacy);
            let s2_i = column(&s2, Component::Indeterminacy);
            Ok(ShiftRow {
                class,
                s1_t: crate::svns::mean(&s1_t),
                s2_t: crate::svns::mean(&s2_t),
                delta_t: strategy_shift(&s1_t, &s2_t).expect("non-empty checked"),
                s1_i: crate::svns::mean(&s1_i),
                s2_i: crate::svns::mean(&s2_i),
                delta_i: strategy_shift(&s1_i, &s2_i).expect("non-empty checked"),
                n_s1: s1.len(),
                n_s2: s2.len(),
            })
        })
        .collect()
}

/// Hyper-truth rates per phenomenon plus the pooled row and its Wilson
/// interval.
#[derive(Debug, Clone, PartialEq)]
pub struct HypertruthTable {
    pub strategy: StrategyKind,
    pub rows: Vec<(PhenomenonClass, HypertruthRate)>,
    pub pooled: HypertruthRate,
    pub wilson: WilsonInterval,
}

/// Wilson z for the 95% interval reported in the tables.
pub const WILSON_Z_95: f64 = 1.96;

pub fn hypertruth_table(
    dataset: &Dataset,
    strategy: StrategyKind,
) -> Result<HypertruthTable, StatsError> {
    let all = dataset.triplets(strategy);
    if all.is_empty() {
        return Err(StatsError::EmptyStrategy(strategy));
    }
    let rows = PhenomenonClass::table_order()
        .into_iter()
        .filter_map(|class| {
            let triplets = dataset.triplets_for_class(strategy, class);
            hypertruth_rate(&triplets).ok().map(|rate| (class, rate))
        })
        .collect();
    let pooled = hypertruth_rate(&all).expect("non-empty checked");
    let wilson = wilson_interval(pooled.k, pooled.n, WILSON_Z_95)?;
    Ok(HypertruthTable {
        strategy,
        rows,
        pooled,
        wilson,
    })
}

/// Variables of the paired-strategy correlation matrix, in matrix order.
pub const CORRELATION_VARIABLES: [&str; 8] = [
    "s1_t", "s1_i", "s1_f", "s1_sum", "s2_t", "s2_i", "s2_f", "s2_sum",
];

/// Correlation matrix over paired unconstrained/simplex observations.
/// Entries are `None` where a column has zero variance.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub n_pairs: usize,
    pub entries: [[Option<f64>; 8]; 8],
}

impl CorrelationMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let ia = CORRELATION_VARIABLES.iter().position(|v| *v == a)?;
        let ib = CORRELATION_VARIABLES.iter().position(|v| *v == b)?;
        self.entries[ia][ib]
    }
}

/// Build the 8×8 correlation matrix among components and sums of both
/// triplet strategies, over records paired on (run, model, phenomenon,
/// repetition).
pub fn correlation_matrix(dataset: &Dataset) -> Result<CorrelationMatrix, StatsError> {
    let pairs = dataset.paired(StrategyKind::Neutrosophic, StrategyKind::Probabilistic);
    if pairs.len() < 2 {
        return Err(StatsError::NoPairs);
    }
    let columns: Vec<Vec<f64>> = (0..8)
        .map(|idx| {
            pairs
                .iter()
                .map(|(s1, s2)| match idx {
                    0 => s1.t(),
                    1 => s1.i(),
                    2 => s1.f(),
                    3 => s1.sum(),
                    4 => s2.t(),
                    5 => s2.i(),
                    6 => s2.f(),
                    _ => s2.sum(),
                })
                .collect()
        })
        .collect();
    let mut entries = [[None; 8]; 8];
    for a in 0..8 {
        for b in 0..8 {
            entries[a][b] = pearson_correlation(&columns[a], &columns[b]).ok();
        }
    }
    Ok(CorrelationMatrix {
        n_pairs: pairs.len(),
        entries,
    })
}
