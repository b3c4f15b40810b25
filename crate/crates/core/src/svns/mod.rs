//! Single-valued neutrosophic values and the operations defined on them.
//!
//! A [`Triplet`] carries independent truth, indeterminacy, and falsity
//! degrees in `[0,1]` with an unconstrained sum in `[0,3]`. A triplet whose
//! sum strictly exceeds 1 exhibits *hyper-truth*. [`SimplexTriplet`] is the
//! constrained variant whose components sum to 1, which makes hyper-truth
//! structurally impossible. All types are immutable values and all
//! operations are pure.

pub mod plithogenic;

pub use plithogenic::{Aggregator, PlithogenicStructure};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Sum tolerance for simplex values constructed programmatically.
pub const SIMPLEX_EXACT_TOLERANCE: f64 = 1e-9;
/// Sum tolerance for simplex-constrained values coming back from model
/// APIs, which typically carry two decimal places.
pub const SIMPLEX_API_TOLERANCE: f64 = 0.01;
/// Absorbs binary representation error when a decimal deviation lands
/// exactly on the tolerance (e.g. 0.5 + 0.51).
const TOLERANCE_SLACK: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum SvnsError {
    #[error("{component} degree {value} outside [0,1]")]
    OutOfRange { component: &'static str, value: f64 },
    #[error("component sum {sum} deviates from 1 by {deviation} (tolerance {tolerance})")]
    SumConstraint {
        sum: f64,
        deviation: f64,
        tolerance: f64,
    },
    #[error("probability {0} outside [0,1]")]
    ProbabilityOutOfRange(f64),
    #[error("empty collection")]
    EmptyCollection,
    #[error("unknown element {0:?}")]
    UnknownElement(String),
    #[error("contradiction degree {value} for ({a:?}, {b:?}) outside [0,1]")]
    ContradictionOutOfRange { a: String, b: String, value: f64 },
    #[error("contradiction({v:?}, {v:?}) must be 0, got {value}")]
    ContradictionDiagonal { v: String, value: f64 },
    #[error("membership missing for ({element:?}, {attribute_value:?})")]
    MembershipIncomplete {
        element: String,
        attribute_value: String,
    },
    #[error("dominant attribute {0:?} not among the attribute values")]
    UnknownDominant(String),
    #[error("duplicate attribute value {0:?}")]
    DuplicateAttributeValue(String),
}

/// A neutrosophic component axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Component {
    Truth,
    Indeterminacy,
    Falsity,
}

impl Component {
    pub const ALL: [Component; 3] = [
        Component::Truth,
        Component::Indeterminacy,
        Component::Falsity,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Component::Truth => "T",
            Component::Indeterminacy => "I",
            Component::Falsity => "F",
        }
    }
}

/// One neutrosophic evaluation: truth, indeterminacy, and falsity degrees,
/// each in `[0,1]`, with no constraint on the sum.
///
/// Deserialization routes through [`Triplet::new`], so persisted values are
/// re-validated on load.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTriplet")]
pub struct Triplet {
    t: f64,
    i: f64,
    f: f64,
}

#[derive(Deserialize)]
struct RawTriplet {
    t: f64,
    i: f64,
    f: f64,
}

impl TryFrom<RawTriplet> for Triplet {
    type Error = SvnsError;

    fn try_from(raw: RawTriplet) -> Result<Self, Self::Error> {
        Triplet::new(raw.t, raw.i, raw.f)
    }
}

impl Triplet {
    pub fn new(t: f64, i: f64, f: f64) -> Result<Self, SvnsError> {
        check_unit("truth", t)?;
        check_unit("indeterminacy", i)?;
        check_unit("falsity", f)?;
        Ok(Self { t, i, f })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn i(&self) -> f64 {
        self.i
    }

    pub fn f(&self) -> f64 {
        self.f
    }

    pub fn component(&self, c: Component) -> f64 {
        match c {
            Component::Truth => self.t,
            Component::Indeterminacy => self.i,
            Component::Falsity => self.f,
        }
    }

    /// Component sum `t + i + f`, in `[0,3]`.
    pub fn sum(&self) -> f64 {
        scalar_projection(self)
    }
}

fn check_unit(component: &'static str, value: f64) -> Result<(), SvnsError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(SvnsError::OutOfRange { component, value })
    }
}

/// A triplet constrained to the probability simplex: components sum to 1
/// within the stated tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimplexTriplet(Triplet);

impl SimplexTriplet {
    /// Construct from exact inputs; the sum must equal 1 within
    /// [`SIMPLEX_EXACT_TOLERANCE`].
    pub fn new(t: f64, i: f64, f: f64) -> Result<Self, SvnsError> {
        Self::with_tolerance(t, i, f, SIMPLEX_EXACT_TOLERANCE)
    }

    /// Construct from API-returned values; the sum must equal 1 within
    /// [`SIMPLEX_API_TOLERANCE`].
    pub fn from_response(t: f64, i: f64, f: f64) -> Result<Self, SvnsError> {
        Self::with_tolerance(t, i, f, SIMPLEX_API_TOLERANCE)
    }

    pub fn with_tolerance(t: f64, i: f64, f: f64, tolerance: f64) -> Result<Self, SvnsError> {
        let inner = Triplet::new(t, i, f)?;
        let sum = inner.sum();
        let deviation = (sum - 1.0).abs();
        if deviation > tolerance + TOLERANCE_SLACK {
            return Err(SvnsError::SumConstraint {
                sum,
                deviation,
                tolerance,
            });
        }
        Ok(Self(inner))
    }

    /// Draw a point uniformly from the standard 2-simplex. The falsity
    /// component is computed as `1 - (t + i)` in the same association order
    /// used by [`scalar_projection`], so the floating-point sum never
    /// exceeds 1 and the drawn point can never register as hyper-truth.
    pub fn sample_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let a: f64 = rng.gen();
        let b: f64 = rng.gen();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let t = lo;
        let i = hi - lo;
        let partial = (t + i).min(1.0);
        let f = 1.0 - partial;
        Self(Triplet { t, i, f })
    }

    pub fn as_triplet(&self) -> &Triplet {
        &self.0
    }

    pub fn into_triplet(self) -> Triplet {
        self.0
    }
}

/// True iff the evaluation exhibits hyper-truth: `t + i + f > 1`, strict.
/// Raw floating comparison, no epsilon: a sum of exactly 1 is not
/// hyper-truth.
pub fn is_hypertruth(e: &Triplet) -> bool {
    scalar_projection(e) > 1.0
}

/// The scalar projection `t + i + f`. Non-injective: distinct triplets can
/// share a projection, so the scalar suffices for hyper-truth detection but
/// not for discriminating epistemic regimes.
pub fn scalar_projection(e: &Triplet) -> f64 {
    (e.t + e.i) + e.f
}

/// Binary Shannon entropy `-[p·log2(p) + (1-p)·log2(1-p)]` with the
/// convention `0·log2(0) = 0`, so the endpoints map to 0.
pub fn binary_entropy(p: f64) -> Result<f64, SvnsError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(SvnsError::ProbabilityOutOfRange(p));
    }
    Ok(-(xlog2x(p) + xlog2x(1.0 - p)))
}

fn xlog2x(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.log2()
    }
}

/// Build the entropy-derived triplet `(p_yes, H(p_yes), p_no)` from a binary
/// probability pair. The pair must satisfy `p_yes + p_no = 1` within
/// [`SIMPLEX_API_TOLERANCE`].
pub fn derive_strategy3_triplet(p_yes: f64, p_no: f64) -> Result<Triplet, SvnsError> {
    if !(0.0..=1.0).contains(&p_yes) {
        return Err(SvnsError::ProbabilityOutOfRange(p_yes));
    }
    if !(0.0..=1.0).contains(&p_no) {
        return Err(SvnsError::ProbabilityOutOfRange(p_no));
    }
    let sum = p_yes + p_no;
    let deviation = (sum - 1.0).abs();
    if deviation > SIMPLEX_API_TOLERANCE + TOLERANCE_SLACK {
        return Err(SvnsError::SumConstraint {
            sum,
            deviation,
            tolerance: SIMPLEX_API_TOLERANCE,
        });
    }
    let entropy = binary_entropy(p_yes)?;
    Triplet::new(p_yes, entropy, p_no)
}

/// Hyper-truth count and empirical rate over a set of evaluations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypertruthRate {
    pub k: usize,
    pub n: usize,
    pub rate: f64,
}

/// Empirical hyper-truth proportion: the fraction of evaluations whose
/// component sum strictly exceeds 1.
pub fn hypertruth_rate(evaluations: &[Triplet]) -> Result<HypertruthRate, SvnsError> {
    if evaluations.is_empty() {
        return Err(SvnsError::EmptyCollection);
    }
    let k = evaluations.iter().filter(|e| is_hypertruth(e)).count();
    let n = evaluations.len();
    Ok(HypertruthRate {
        k,
        n,
        rate: k as f64 / n as f64,
    })
}

/// Strategy shift for one component: `mean(s1_values) - mean(s2_values)`.
/// Positive values mean the simplex constraint suppresses the component.
pub fn strategy_shift(s1_values: &[f64], s2_values: &[f64]) -> Result<f64, SvnsError> {
    if s1_values.is_empty() || s2_values.is_empty() {
        return Err(SvnsError::EmptyCollection);
    }
    Ok(mean(s1_values) - mean(s2_values))
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}
