//! Deterministic offline backend.
//!
//! Responses are valid JSON for the requested strategy, sampled from
//! truncated normal distributions keyed by the design cell, the repetition,
//! and the backend seed. The sampling rule, in full: each component is
//! drawn from `Normal(mean, sd)` and clamped into `[0,1]` (a zero `sd`
//! yields the mean exactly); simplex-strategy draws are renormalized to sum
//! to 1 before emission; binary-strategy draws produce `p_yes` from the
//! first component's parameters and `p_no = 1 - p_yes`. The RNG stream is
//! seeded from `(seed, model, cell, repetition)` alone, so outputs are
//! independent of call order and concurrency.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::phenomena::PhenomenonClass;
use crate::prompting::StrategyKind;

use super::{BackendError, BackendKind, CompletionBackend, CompletionRequest, CompletionResult};

/// Distribution parameters for one design cell.
///
/// For the two triplet strategies all three component slots are used; for
/// the entropy-derived strategy only the first slot parametrizes `p_yes`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellDistribution {
    pub mean: [f64; 3],
    pub sd: [f64; 3],
}

impl CellDistribution {
    pub fn exact(t: f64, i: f64, f: f64) -> Self {
        Self {
            mean: [t, i, f],
            sd: [0.0; 3],
        }
    }

    pub fn spread(mean: [f64; 3], sd: [f64; 3]) -> Self {
        Self { mean, sd }
    }
}

/// Per-cell distribution parameters covering the design matrix.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MockProfile {
    cells: BTreeMap<(PhenomenonClass, StrategyKind), CellDistribution>,
}

impl MockProfile {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_cell(
        mut self,
        class: PhenomenonClass,
        strategy: StrategyKind,
        dist: CellDistribution,
    ) -> Self {
        self.cells.insert((class, strategy), dist);
        self
    }

    pub fn cell(
        &self,
        class: PhenomenonClass,
        strategy: StrategyKind,
    ) -> Option<&CellDistribution> {
        self.cells.get(&(class, strategy))
    }

    /// One distribution for every (class, strategy) pair.
    pub fn uniform(dist: CellDistribution) -> Self {
        let mut profile = Self::new();
        for class in PhenomenonClass::ALL {
            for strategy in StrategyKind::ALL {
                profile.cells.insert((class, strategy), dist);
            }
        }
        profile
    }

    /// The embedded full-coverage profile. Unconstrained-strategy cells
    /// carry the per-phenomenon component means and SDs of the reference
    /// analysis; simplex-strategy cells carry the reference strategy-
    /// comparison means (falsity as the simplex remainder) with a common
    /// spread; binary-strategy cells use mid-range probabilities.
    pub fn reference_means() -> Self {
        use PhenomenonClass::*;
        use StrategyKind::*;

        let mut profile = Self::new();
        let s1: [(PhenomenonClass, [f64; 3], [f64; 3]); 5] = [
            (LogicalParadox, [0.120, 0.865, 0.370], [0.207, 0.230, 0.421]),
            (
                EpistemicIgnorance,
                [0.160, 0.865, 0.280],
                [0.216, 0.201, 0.324],
            ),
            (Vagueness, [0.562, 0.345, 0.242], [0.118, 0.139, 0.127]),
            (
                EthicalContradiction,
                [0.605, 0.530, 0.470],
                [0.110, 0.187, 0.113],
            ),
            (
                FutureContingency,
                [0.450, 0.475, 0.305],
                [0.119, 0.129, 0.147],
            ),
        ];
        for (class, mean, sd) in s1 {
            profile
                .cells
                .insert((class, Neutrosophic), CellDistribution::spread(mean, sd));
        }

        let s2: [(PhenomenonClass, [f64; 3]); 5] = [
            (LogicalParadox, [0.000, 0.900, 0.100]),
            (EpistemicIgnorance, [0.231, 0.482, 0.287]),
            (Vagueness, [0.450, 0.305, 0.245]),
            (EthicalContradiction, [0.338, 0.515, 0.147]),
            (FutureContingency, [0.355, 0.470, 0.175]),
        ];
        for (class, mean) in s2 {
            profile.cells.insert(
                (class, Probabilistic),
                CellDistribution::spread(mean, [0.08; 3]),
            );
        }

        let s3: [(PhenomenonClass, f64, f64); 5] = [
            (LogicalParadox, 0.50, 0.10),
            (EpistemicIgnorance, 0.50, 0.05),
            (Vagueness, 0.80, 0.10),
            (EthicalContradiction, 0.50, 0.15),
            (FutureContingency, 0.40, 0.10),
        ];
        for (class, mean, sd) in s3 {
            profile.cells.insert(
                (class, EntropyDerived),
                CellDistribution::spread([mean, 0.0, 0.0], [sd, 0.0, 0.0]),
            );
        }
        profile
    }
}

/// The deterministic mock backend. Stateless: every response is a pure
/// function of (profile, seed, request).
#[derive(Debug, Clone)]
pub struct MockBackend {
    profile: MockProfile,
    seed: u64,
}

impl MockBackend {
    pub fn new(profile: MockProfile, seed: u64) -> Self {
        Self { profile, seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn rng_for(&self, request: &CompletionRequest) -> ChaCha8Rng {
        let cell = request.cell.expect("checked by caller");
        let mut h = Fnv1a::new();
        h.write_u64(self.seed);
        h.write_str(&request.model_id);
        h.write_str(cell.phenomenon_class.id());
        h.write_str(cell.strategy.id());
        h.write_u64(u64::from(cell.repetition));
        ChaCha8Rng::seed_from_u64(h.finish())
    }
}

impl CompletionBackend for MockBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, BackendError> {
        request.validate()?;
        let cell = request.cell.ok_or_else(|| {
            BackendError::invalid_request("mock backend needs cell coordinates on the request")
        })?;
        let dist = self
            .profile
            .cell(cell.phenomenon_class, cell.strategy)
            .ok_or_else(|| {
                BackendError::invalid_request(format!(
                    "profile does not cover cell ({}, {})",
                    cell.phenomenon_class, cell.strategy
                ))
            })?;
        let mut rng = self.rng_for(request);
        let raw_text = match cell.strategy {
            StrategyKind::Neutrosophic => {
                let [t, i, f] = draw_components(&mut rng, dist);
                format!("{{\"T\": {t}, \"I\": {i}, \"F\": {f}}}")
            }
            StrategyKind::Probabilistic => {
                let [t, i, f] = draw_components(&mut rng, dist);
                let (t, i, f) = simplex_components(t, i, f);
                format!("{{\"T\": {t}, \"I\": {i}, \"F\": {f}}}")
            }
            StrategyKind::EntropyDerived => {
                let p_yes = draw_clamped(&mut rng, dist.mean[0], dist.sd[0]);
                let p_no = 1.0 - p_yes;
                format!("{{\"P_yes\": {p_yes}, \"P_no\": {p_no}}}")
            }
        };
        Ok(CompletionResult {
            raw_text,
            model_id: request.model_id.clone(),
            latency_ms: 0,
            attempt_count: 1,
        })
    }

    fn kind(&self) -> BackendKind {
        BackendKind::Mock
    }
}

/// Renormalize a draw onto the simplex. The falsity slot is recomputed as
/// `1 - (t + i)` in the association order the sum check uses, so the
/// emitted components can never re-sum to more than 1 in floating point.
fn simplex_components(t0: f64, i0: f64, f0: f64) -> (f64, f64, f64) {
    let sum = t0 + i0 + f0;
    let (t, mut i) = if sum > 0.0 {
        (t0 / sum, i0 / sum)
    } else {
        (1.0 / 3.0, 1.0 / 3.0)
    };
    let mut f = 1.0 - (t + i);
    if f < 0.0 {
        i = 1.0 - t;
        f = 1.0 - (t + i);
    }
    (t, i, f)
}

fn draw_components(rng: &mut ChaCha8Rng, dist: &CellDistribution) -> [f64; 3] {
    [
        draw_clamped(rng, dist.mean[0], dist.sd[0]),
        draw_clamped(rng, dist.mean[1], dist.sd[1]),
        draw_clamped(rng, dist.mean[2], dist.sd[2]),
    ]
}

fn draw_clamped(rng: &mut ChaCha8Rng, mean: f64, sd: f64) -> f64 {
    if sd <= 0.0 {
        return mean.clamp(0.0, 1.0);
    }
    let normal = Normal::new(mean, sd).expect("finite parameters");
    normal.sample(rng).clamp(0.0, 1.0)
}

/// FNV-1a, used instead of the std hasher so seeds stay stable across
/// toolchain versions.
struct Fnv1a(u64);

impl Fnv1a {
    fn new() -> Self {
        Self(0xcbf2_9ce4_8422_2325)
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= u64::from(b);
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }

    fn write_str(&mut self, s: &str) {
        self.write(s.as_bytes());
        self.write(&[0xff]);
    }

    fn write_u64(&mut self, v: u64) {
        self.write(&v.to_le_bytes());
        self.write(&[0xff]);
    }

    fn finish(&self) -> u64 {
        self.0
    }
}
