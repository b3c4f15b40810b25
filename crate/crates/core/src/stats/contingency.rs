//! Contingency-table tests: Pearson chi-square of independence and the
//! Fisher exact test.

use serde::{Deserialize, Serialize};

use super::special::{gamma_q, ln_binomial};
use super::StatsError;

/// Pearson chi-square test result. The p-value is the upper-tail
/// probability at (rows−1)(cols−1) degrees of freedom, computed via the
/// regularized upper incomplete gamma function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Uncorrected Pearson chi-square test of independence on an R×C count
/// table (R, C ≥ 2). Expected counts come from the row/column marginals;
/// any zero marginal is an error because it forces zero expected cells.
pub fn chi_square_independence(counts: &[Vec<u64>]) -> Result<ChiSquareResult, StatsError> {
    let rows = counts.len();
    if rows < 2 {
        return Err(StatsError::MalformedTable);
    }
    let cols = counts[0].len();
    if cols < 2 || counts.iter().any(|row| row.len() != cols) {
        return Err(StatsError::MalformedTable);
    }

    let row_sums: Vec<u64> = counts.iter().map(|row| row.iter().sum()).collect();
    let col_sums: Vec<u64> = (0..cols)
        .map(|j| counts.iter().map(|row| row[j]).sum())
        .collect();
    let total: u64 = row_sums.iter().sum();
    if total == 0 || row_sums.contains(&0) || col_sums.contains(&0) {
        return Err(StatsError::ZeroMarginal);
    }

    let mut statistic = 0.0;
    for (i, row) in counts.iter().enumerate() {
        for (j, &observed) in row.iter().enumerate() {
            let expected = row_sums[i] as f64 * col_sums[j] as f64 / total as f64;
            let diff = observed as f64 - expected;
            statistic += diff * diff / expected;
        }
    }
    let df = (rows - 1) * (cols - 1);
    let p_value = gamma_q(df as f64 / 2.0, statistic / 2.0);
    Ok(ChiSquareResult {
        statistic,
        df,
        p_value,
    })
}

/// Fisher exact test result on a 2×2 table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherResult {
    pub table: [[u64; 2]; 2],
    /// Cross-product odds ratio a·d / b·c; infinite when b·c = 0.
    pub odds_ratio: f64,
    pub p_value: f64,
}

/// Relative slack admitting tables whose point probability ties the
/// observed one up to floating error.
const FISHER_RELATIVE_TOLERANCE: f64 = 1e-7;

/// Two-sided Fisher exact test under the point-probability criterion: the
/// p-value sums the hypergeometric probabilities of every table with the
/// same marginals whose point probability does not exceed the observed
/// table's. Terms are computed in log space.
pub fn fisher_exact(table: [[u64; 2]; 2]) -> Result<FisherResult, StatsError> {
    let [[a, b], [c, d]] = table;
    let row1 = a + b;
    let row2 = c + d;
    let col1 = a + c;
    let col2 = b + d;
    if row1 == 0 || row2 == 0 || col1 == 0 || col2 == 0 {
        return Err(StatsError::DegenerateMarginal);
    }
    let total = row1 + row2;

    let odds_ratio = if b * c == 0 {
        f64::INFINITY
    } else {
        (a as f64 * d as f64) / (b as f64 * c as f64)
    };

    // Support of the (1,1) cell under fixed marginals.
    let lo = col1.saturating_sub(row2);
    let hi = row1.min(col1);
    let ln_denominator = ln_binomial(total, col1);
    let ln_point =
        |x: u64| -> f64 { ln_binomial(row1, x) + ln_binomial(row2, col1 - x) - ln_denominator };

    let ln_observed = ln_point(a);
    let cutoff = ln_observed + FISHER_RELATIVE_TOLERANCE.ln_1p();
    let mut p_value = 0.0;
    for x in lo..=hi {
        let lp = ln_point(x);
        if lp <= cutoff {
            p_value += lp.exp();
        }
    }
    Ok(FisherResult {
        table,
        odds_ratio,
        p_value: p_value.min(1.0),
    })
}
