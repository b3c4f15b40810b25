//! Prompt rendering for the three elicitation strategies and strict
//! parsing of model responses.
//!
//! The templates are fixed text with a single `{statement}` slot. Parsing
//! is total: any input text yields a [`ParsedResponse`], with failures
//! recorded as data rather than raised.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::svns::{derive_strategy3_triplet, Triplet, SIMPLEX_API_TOLERANCE};

/// The three elicitation strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    /// S1: three independent degrees, no sum constraint.
    Neutrosophic,
    /// S2: three mutually exclusive probabilities summing to 1.
    Probabilistic,
    /// S3: a binary probability pair; indeterminacy derived via entropy.
    EntropyDerived,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 3] = [
        StrategyKind::Neutrosophic,
        StrategyKind::Probabilistic,
        StrategyKind::EntropyDerived,
    ];

    pub fn id(self) -> &'static str {
        match self {
            StrategyKind::Neutrosophic => "neutrosophic",
            StrategyKind::Probabilistic => "probabilistic",
            StrategyKind::EntropyDerived => "entropy_derived",
        }
    }

    /// Short label used in tables and progress output.
    pub fn short(self) -> &'static str {
        match self {
            StrategyKind::Neutrosophic => "S1",
            StrategyKind::Probabilistic => "S2",
            StrategyKind::EntropyDerived => "S3",
        }
    }
}

impl std::fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id())
    }
}

/// A rendered system/user prompt pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptPair {
    pub system: String,
    pub user: String,
}

const S1_SYSTEM: &str = "You are an expert in Neutrosophic Logic. You evaluate statements using \
three INDEPENDENT dimensions: Truth (T), Indeterminacy (I), and Falsity (F), each on [0.0, 1.0]. \
These dimensions are NOT constrained to sum to 1.0. A statement can be simultaneously partially \
true AND partially false AND partially indeterminate. Respond with ONLY a JSON object, no other \
text.";

const S1_USER: &str = "Evaluate this statement on three independent dimensions: Statement: \
{statement} --- Truth (T): To what degree is this statement true? [0.0 to 1.0]; Indeterminacy \
(I): To what degree is the truth value unknown, undetermined, or inherently uncertain? [0.0 to \
1.0]; Falsity (F): To what degree is this statement false? [0.0 to 1.0]. T, I, and F are \
independent. They need NOT sum to 1.0. Respond with ONLY: {\"T\": <value>, \"I\": <value>, \
\"F\": <value>}.";

const S2_SYSTEM: &str = "You are a probabilistic classifier. You assign probabilities to three \
mutually exclusive categories that MUST sum to exactly 1.0. Respond with ONLY a JSON object, no \
other text.";

const S2_USER: &str = "Classify this statement into three mutually exclusive categories whose \
probabilities sum to 1.0: Statement: {statement} --- T (True): Probability the statement is \
true; I (Uncertain): Probability the truth value is unknown or undetermined; F (False): \
Probability the statement is false. CONSTRAINT: T + I + F must equal 1.0. Respond with ONLY: \
{\"T\": <value>, \"I\": <value>, \"F\": <value>}.";

const S3_SYSTEM: &str = "You are a binary truth estimator. You estimate the probability that a \
statement is true (YES) versus false (NO). The two probabilities must sum to 1.0. Respond with \
ONLY a JSON object, no other text.";

const S3_USER: &str = "Estimate the probability that this statement is true versus false: \
Statement: {statement} --- P_yes: Probability the statement is true, in the closed interval \
[0.0, 1.0]; P_no: Probability the statement is false, in the closed interval [0.0, 1.0]. \
CONSTRAINT: P_yes + P_no must equal 1.0. Respond with ONLY: {\"P_yes\": <value>, \"P_no\": \
<value>}.";

/// Render the prompt pair for a strategy with the statement substituted
/// into the user template's single `{statement}` slot.
pub fn render_prompt(strategy: StrategyKind, statement: &str) -> PromptPair {
    let (system, user_template) = match strategy {
        StrategyKind::Neutrosophic => (S1_SYSTEM, S1_USER),
        StrategyKind::Probabilistic => (S2_SYSTEM, S2_USER),
        StrategyKind::EntropyDerived => (S3_SYSTEM, S3_USER),
    };
    PromptPair {
        system: system.to_string(),
        user: user_template.replace("{statement}", statement),
    }
}

/// Outcome of parsing one raw model response.
///
/// `valid` is true iff every required numeric field parsed and lies in
/// `[0,1]` (and, for the entropy strategy, the probability pair sums to 1
/// within the API tolerance, which the derived triplet requires). For the
/// probabilistic strategy the deviation of the sum from 1 is recorded as a
/// quality metric and is never an exclusion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedResponse {
    pub strategy: StrategyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub triplet: Option<Triplet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_yes: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_no: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sum_deviation: Option<f64>,
    pub valid: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure_reason: Option<String>,
}

impl ParsedResponse {
    fn failure(strategy: StrategyKind, reason: impl Into<String>) -> Self {
        Self {
            strategy,
            triplet: None,
            p_yes: None,
            p_no: None,
            sum_deviation: None,
            valid: false,
            failure_reason: Some(reason.into()),
        }
    }

    /// Re-serialize the parsed values to the canonical wire shape the model
    /// was asked for. Only meaningful for valid responses.
    pub fn canonical_json(&self) -> Option<String> {
        if !self.valid {
            return None;
        }
        match self.strategy {
            StrategyKind::Neutrosophic | StrategyKind::Probabilistic => {
                let t = self.triplet.as_ref()?;
                Some(format!(
                    "{{\"T\": {}, \"I\": {}, \"F\": {}}}",
                    t.t(),
                    t.i(),
                    t.f()
                ))
            }
            StrategyKind::EntropyDerived => Some(format!(
                "{{\"P_yes\": {}, \"P_no\": {}}}",
                self.p_yes?, self.p_no?
            )),
        }
    }
}

/// Parse a raw response for the given strategy. Total over arbitrary text:
/// malformed input produces `valid = false` with a failure reason, never an
/// error or panic.
///
/// Extraction is lenient — a JSON object wrapped in markdown code fences or
/// surrounded by prose is accepted — but the validity rules apply strictly
/// to the extracted object: exact case-sensitive field names, JSON numbers
/// (integers 0 and 1 count), each in `[0,1]`.
pub fn parse_response(strategy: StrategyKind, raw: &str) -> ParsedResponse {
    let object = match extract_json_object(raw) {
        Some(v) => v,
        None => return ParsedResponse::failure(strategy, "no JSON object found in response"),
    };
    match strategy {
        StrategyKind::Neutrosophic | StrategyKind::Probabilistic => {
            let (t, i, f) = match (
                numeric_field(&object, "T"),
                numeric_field(&object, "I"),
                numeric_field(&object, "F"),
            ) {
                (Ok(t), Ok(i), Ok(f)) => (t, i, f),
                (t, i, f) => {
                    let reason = [t.err(), i.err(), f.err()]
                        .into_iter()
                        .flatten()
                        .collect::<Vec<_>>()
                        .join("; ");
                    return ParsedResponse::failure(strategy, reason);
                }
            };
            let triplet = match Triplet::new(t, i, f) {
                Ok(tr) => tr,
                Err(e) => {
                    return ParsedResponse::failure(strategy, format!("range violation: {e}"))
                }
            };
            let sum_deviation = match strategy {
                StrategyKind::Probabilistic => Some((triplet.sum() - 1.0).abs()),
                _ => None,
            };
            ParsedResponse {
                strategy,
                triplet: Some(triplet),
                p_yes: None,
                p_no: None,
                sum_deviation,
                valid: true,
                failure_reason: None,
            }
        }
        StrategyKind::EntropyDerived => {
            let (p_yes, p_no) = match (
                numeric_field(&object, "P_yes"),
                numeric_field(&object, "P_no"),
            ) {
                (Ok(y), Ok(n)) => (y, n),
                (y, n) => {
                    let reason = [y.err(), n.err()]
                        .into_iter()
                        .flatten()
                        .collect::<Vec<_>>()
                        .join("; ");
                    return ParsedResponse::failure(strategy, reason);
                }
            };
            if !(0.0..=1.0).contains(&p_yes) {
                return ParsedResponse::failure(
                    strategy,
                    format!("range violation: P_yes = {p_yes}"),
                );
            }
            if !(0.0..=1.0).contains(&p_no) {
                return ParsedResponse::failure(
                    strategy,
                    format!("range violation: P_no = {p_no}"),
                );
            }
            let sum_deviation = (p_yes + p_no - 1.0).abs();
            match derive_strategy3_triplet(p_yes, p_no) {
                Ok(triplet) => ParsedResponse {
                    strategy,
                    triplet: Some(triplet),
                    p_yes: Some(p_yes),
                    p_no: Some(p_no),
                    sum_deviation: Some(sum_deviation),
                    valid: true,
                    failure_reason: None,
                },
                Err(_) => ParsedResponse {
                    strategy,
                    triplet: None,
                    p_yes: Some(p_yes),
                    p_no: Some(p_no),
                    sum_deviation: Some(sum_deviation),
                    valid: false,
                    failure_reason: Some(format!(
                        "sum constraint violation: P_yes + P_no = {} deviates from 1 by more than {}",
                        p_yes + p_no,
                        SIMPLEX_API_TOLERANCE
                    )),
                },
            }
        }
    }
}

fn numeric_field(object: &Value, name: &str) -> Result<f64, String> {
    match object.get(name) {
        None => Err(format!("missing field {name:?}")),
        Some(Value::Number(n)) => n
            .as_f64()
            .ok_or_else(|| format!("field {name:?} is not representable as a float")),
        Some(other) => Err(format!("field {name:?} is not a number: {other}")),
    }
}

/// Extract the first parseable JSON object from free text. Tolerates
/// leading/trailing prose and markdown code fences. Single left-to-right
/// scan per candidate brace, bounded by the input length.
fn extract_json_object(raw: &str) -> Option<Value> {
    let trimmed = raw.trim();
    if let Ok(v @ Value::Object(_)) = serde_json::from_str::<Value>(trimmed) {
        return Some(v);
    }
    let bytes = trimmed.as_bytes();
    let mut start = 0;
    while let Some(offset) = trimmed[start..].find('{') {
        let open = start + offset;
        if let Some(end) = balanced_object_end(bytes, open) {
            if let Ok(v @ Value::Object(_)) = serde_json::from_str::<Value>(&trimmed[open..=end]) {
                return Some(v);
            }
        }
        start = open + 1;
    }
    None
}

/// Index of the brace closing the object opened at `open`, honoring JSON
/// string and escape rules; None if the braces never balance.
fn balanced_object_end(bytes: &[u8], open: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (idx, &b) in bytes.iter().enumerate().skip(open) {
        if in_string {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == b'"' {
                in_string = false;
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth = depth.saturating_sub(1);
                if depth == 0 {
                    return Some(idx);
                }
            }
            _ => {}
        }
    }
    None
}
