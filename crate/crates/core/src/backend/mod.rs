//! Completion backends behind one interface: a chat-completions HTTP
//! client and a deterministic offline mock.
//!
//! A backend must be safely usable from multiple concurrent requesters.
//! The only shared mutable state lives inside the HTTP rate limiter, which
//! synchronizes itself.

pub mod http;
pub mod mock;

pub use http::HttpBackend;
pub use mock::{CellDistribution, MockBackend, MockProfile};

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::phenomena::PhenomenonClass;
use crate::prompting::StrategyKind;

/// Default name of the environment variable holding the API credential.
/// Credentials are never read from config files, so run manifests stay
/// shareable.
pub const DEFAULT_API_KEY_ENV: &str = "LLM_API_KEY";

/// Design-cell coordinates attached to a request. The HTTP backend ignores
/// them; the mock keys its deterministic sampling on them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellCoordinates {
    pub phenomenon_class: PhenomenonClass,
    pub strategy: StrategyKind,
    pub repetition: u32,
}

/// One completion request: a system/user message pair plus sampling
/// parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct CompletionRequest {
    pub model_id: String,
    pub system: String,
    pub user: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub response_format_hint: Option<String>,
    pub cell: Option<CellCoordinates>,
}

impl CompletionRequest {
    pub fn validate(&self) -> Result<(), BackendError> {
        if self.model_id.is_empty() {
            return Err(BackendError::invalid_request("model_id is empty"));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(BackendError::invalid_request(format!(
                "temperature {} outside [0,2]",
                self.temperature
            )));
        }
        Ok(())
    }
}

/// One completion outcome: the assistant text plus call provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct CompletionResult {
    pub raw_text: String,
    pub model_id: String,
    pub latency_ms: u64,
    pub attempt_count: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendErrorKind {
    Network,
    RateLimited,
    AuthFailure,
    ServerError,
    Timeout,
    /// The request itself cannot be served (e.g. a mock asked for a cell
    /// its profile does not cover). Never retryable.
    InvalidRequest,
}

impl BackendErrorKind {
    pub fn retryable(self) -> bool {
        matches!(
            self,
            BackendErrorKind::Network
                | BackendErrorKind::RateLimited
                | BackendErrorKind::ServerError
                | BackendErrorKind::Timeout
        )
    }
}

/// A typed backend failure. `retryable` is derived from the kind:
/// rate limits, network faults, timeouts, and server errors retry;
/// authentication failures and invalid requests do not.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{kind:?}: {detail} (after {attempts} attempt(s))")]
pub struct BackendError {
    pub kind: BackendErrorKind,
    pub detail: String,
    pub retryable: bool,
    pub attempts: u32,
}

impl BackendError {
    pub fn new(kind: BackendErrorKind, detail: impl Into<String>) -> Self {
        Self {
            kind,
            detail: detail.into(),
            retryable: kind.retryable(),
            attempts: 1,
        }
    }

    pub fn invalid_request(detail: impl Into<String>) -> Self {
        Self::new(BackendErrorKind::InvalidRequest, detail)
    }

    fn with_attempts(mut self, attempts: u32) -> Self {
        self.attempts = attempts;
        self
    }
}

/// Identifies the backend family, mostly for provenance stamping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendKind {
    Mock,
    Http,
}

/// A completion backend. Implementations must be usable from any number of
/// concurrent requesters.
pub trait CompletionBackend: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, BackendError>;

    fn kind(&self) -> BackendKind;
}

/// Exponential backoff: `base_delay * factor^(attempt-1)` between retries,
/// at most `max_attempts` total attempts.
#[derive(Debug, Clone, PartialEq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
    pub factor: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 5,
            base_delay: Duration::from_secs(1),
            factor: 2.0,
        }
    }
}

impl RetryPolicy {
    pub fn delay_before(&self, next_attempt: u32) -> Duration {
        let exponent = next_attempt.saturating_sub(2);
        let scale = self.factor.powi(exponent as i32);
        self.base_delay.mul_f64(scale)
    }
}

/// Run `op` under the retry policy. Only retryable errors are retried; the
/// final error carries the total attempt count, as does a success.
pub fn with_retries<T>(
    policy: &RetryPolicy,
    mut op: impl FnMut(u32) -> Result<T, BackendError>,
) -> Result<(T, u32), BackendError> {
    let max = policy.max_attempts.max(1);
    for attempt in 1..=max {
        match op(attempt) {
            Ok(value) => return Ok((value, attempt)),
            Err(e) if e.retryable && attempt < max => {
                std::thread::sleep(policy.delay_before(attempt + 1));
            }
            Err(e) => return Err(e.with_attempts(attempt)),
        }
    }
    unreachable!("loop returns on the final attempt")
}

/// Backend selection and parameters, as written in experiment config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendConfig {
    Mock {
        seed: u64,
    },
    Http {
        endpoint: String,
        #[serde(default = "default_api_key_env")]
        api_key_env: String,
        #[serde(default = "default_timeout_s")]
        timeout_s: f64,
        /// Requests per second across all in-flight workers; `null`
        /// disables the limiter.
        #[serde(default = "default_rate_limit")]
        rate_limit_per_s: Option<f64>,
    },
}

fn default_api_key_env() -> String {
    DEFAULT_API_KEY_ENV.to_string()
}

fn default_timeout_s() -> f64 {
    30.0
}

fn default_rate_limit() -> Option<f64> {
    Some(2.0)
}

impl BackendConfig {
    pub fn kind_label(&self) -> &'static str {
        match self {
            BackendConfig::Mock { .. } => "mock",
            BackendConfig::Http { .. } => "http",
        }
    }

    /// Instantiate the configured backend. The mock uses the embedded
    /// reference profile; callers needing a custom profile construct
    /// [`MockBackend`] directly.
    pub fn build(&self) -> Result<Box<dyn CompletionBackend>, BackendError> {
        match self {
            BackendConfig::Mock { seed } => Ok(Box::new(MockBackend::new(
                MockProfile::reference_means(),
                *seed,
            ))),
            BackendConfig::Http {
                endpoint,
                api_key_env,
                timeout_s,
                rate_limit_per_s,
            } => {
                let backend = HttpBackend::from_env(
                    endpoint.clone(),
                    api_key_env,
                    Duration::from_secs_f64(*timeout_s),
                    *rate_limit_per_s,
                    RetryPolicy::default(),
                )?;
                Ok(Box::new(backend))
            }
        }
    }
}
