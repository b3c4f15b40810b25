//! Chat-completions HTTP backend.
//!
//! Issues one POST per request carrying the model id, temperature, and a
//! two-message array (system, user), and returns the first assistant
//! message's text content. Retryable failures back off exponentially; the
//! credential comes from an environment variable so config files stay free
//! of secrets.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde_json::{json, Value};

use super::{
    with_retries, BackendError, BackendErrorKind, BackendKind, CompletionBackend,
    CompletionRequest, CompletionResult, RetryPolicy,
};

/// Minimum-interval rate limiter shared by all requesters of one backend.
#[derive(Debug)]
pub struct RateLimiter {
    interval: Duration,
    next_free: Mutex<Instant>,
}

impl RateLimiter {
    pub fn per_second(rate: f64) -> Option<Self> {
        if rate <= 0.0 {
            return None;
        }
        Some(Self {
            interval: Duration::from_secs_f64(1.0 / rate),
            next_free: Mutex::new(Instant::now()),
        })
    }

    /// Block until a slot is available.
    pub fn acquire(&self) {
        let wait = {
            let mut next = self.next_free.lock().expect("limiter poisoned");
            let now = Instant::now();
            let start = (*next).max(now);
            *next = start + self.interval;
            start.saturating_duration_since(now)
        };
        if !wait.is_zero() {
            std::thread::sleep(wait);
        }
    }
}

#[derive(Debug)]
pub struct HttpBackend {
    client: reqwest::blocking::Client,
    endpoint: String,
    api_key: String,
    retry: RetryPolicy,
    limiter: Option<RateLimiter>,
}

impl HttpBackend {
    /// Build a backend reading the credential from `api_key_env`.
    pub fn from_env(
        endpoint: String,
        api_key_env: &str,
        timeout: Duration,
        rate_limit_per_s: Option<f64>,
        retry: RetryPolicy,
    ) -> Result<Self, BackendError> {
        let api_key = std::env::var(api_key_env).map_err(|_| {
            BackendError::new(
                BackendErrorKind::AuthFailure,
                format!("credential environment variable {api_key_env} is not set"),
            )
        })?;
        Self::new(endpoint, api_key, timeout, rate_limit_per_s, retry)
    }

    pub fn new(
        endpoint: String,
        api_key: String,
        timeout: Duration,
        rate_limit_per_s: Option<f64>,
        retry: RetryPolicy,
    ) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| BackendError::new(BackendErrorKind::Network, e.to_string()))?;
        Ok(Self {
            client,
            endpoint,
            api_key,
            retry,
            limiter: rate_limit_per_s.and_then(RateLimiter::per_second),
        })
    }

    fn attempt(&self, request: &CompletionRequest) -> Result<String, BackendError> {
        if let Some(limiter) = &self.limiter {
            limiter.acquire();
        }
        let mut body = json!({
            "model": request.model_id,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": request.user},
            ],
        });
        if let Some(hint) = &request.response_format_hint {
            body["response_format"] = json!({ "type": hint });
        }
        let response = self
            .client
            .post(&self.endpoint)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(classify_transport_error)?;

        let status = response.status();
        let text = response
            .text()
            .map_err(|e| BackendError::new(BackendErrorKind::Network, e.to_string()))?;
        if let Some(error) = classify_status(status.as_u16(), &text) {
            return Err(error);
        }
        extract_assistant_text(&text)
    }
}

impl CompletionBackend for HttpBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, BackendError> {
        request.validate()?;
        let started = Instant::now();
        let (raw_text, attempt_count) =
            with_retries(&self.retry, |_attempt| self.attempt(request))?;
        Ok(CompletionResult {
            raw_text,
            model_id: request.model_id.clone(),
            latency_ms: started.elapsed().as_millis() as u64,
            attempt_count,
        })
    }

    fn kind(&self) -> BackendKind {
        BackendKind::Http
    }
}

fn classify_transport_error(e: reqwest::Error) -> BackendError {
    if e.is_timeout() {
        BackendError::new(BackendErrorKind::Timeout, e.to_string())
    } else {
        BackendError::new(BackendErrorKind::Network, e.to_string())
    }
}

fn classify_status(status: u16, body: &str) -> Option<BackendError> {
    let detail = || {
        format!(
            "HTTP {status}: {}",
            body.chars().take(200).collect::<String>()
        )
    };
    match status {
        200..=299 => None,
        401 | 403 => Some(BackendError::new(BackendErrorKind::AuthFailure, detail())),
        429 => Some(BackendError::new(BackendErrorKind::RateLimited, detail())),
        500..=599 => Some(BackendError::new(BackendErrorKind::ServerError, detail())),
        _ => Some(BackendError::new(
            BackendErrorKind::InvalidRequest,
            detail(),
        )),
    }
}

fn extract_assistant_text(body: &str) -> Result<String, BackendError> {
    let value: Value = serde_json::from_str(body).map_err(|e| {
        BackendError::new(
            BackendErrorKind::ServerError,
            format!("response body is not JSON: {e}"),
        )
    })?;
    value["choices"][0]["message"]["content"]
        .as_str()
        .map(str::to_string)
        .ok_or_else(|| {
            BackendError::new(
                BackendErrorKind::ServerError,
                "response carries no choices[0].message.content",
            )
        })
}
