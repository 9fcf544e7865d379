//! Pluggable completion providers.

use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Environment variable holding the API key for [`HttpProvider`].
pub const API_KEY_ENV: &str = "VOICELENS_LLM_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub model_name: String,
    pub temperature: f64,
    pub prompt_text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionResponse {
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProviderError {
    /// The provider cannot serve any request (bad credentials, unreachable
    /// configuration). Aborts a run.
    #[error("provider unavailable: {0}")]
    Unavailable(String),
    /// Worth retrying (rate limit, timeout, 5xx).
    #[error("transient provider error: {0}")]
    Transient(String),
    /// The request itself was refused.
    #[error("request rejected: {0}")]
    Rejected(String),
}

/// A completion backend. Implementations must be safe to call from several
/// threads at once.
pub trait Provider: Send + Sync {
    fn id(&self) -> &str;
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, ProviderError>;
}

impl<P: Provider + ?Sized> Provider for &P {
    fn id(&self) -> &str {
        (**self).id()
    }

    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, ProviderError> {
        (**self).complete(request)
    }
}

impl<P: Provider + ?Sized> Provider for Box<P> {
    fn id(&self) -> &str {
        (**self).id()
    }

    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, ProviderError> {
        (**self).complete(request)
    }
}

/// OpenAI-compatible chat-completions client. The whole prompt is sent as a
/// single user message.
pub struct HttpProvider {
    endpoint: String,
    api_key: String,
    client: reqwest::blocking::Client,
}

impl HttpProvider {
    pub const DEFAULT_ENDPOINT: &'static str = "https://api.openai.com/v1/chat/completions";

    /// Reads the API key from [`API_KEY_ENV`].
    pub fn from_env(endpoint: Option<&str>, timeout: Duration) -> Result<Self, ProviderError> {
        let api_key = std::env::var(API_KEY_ENV)
            .map_err(|_| ProviderError::Unavailable(format!("{API_KEY_ENV} is not set")))?;
        Self::new(endpoint.unwrap_or(Self::DEFAULT_ENDPOINT), api_key, timeout)
    }

    pub fn new(endpoint: &str, api_key: String, timeout: Duration) -> Result<Self, ProviderError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| ProviderError::Unavailable(e.to_string()))?;
        Ok(HttpProvider {
            endpoint: endpoint.to_string(),
            api_key,
            client,
        })
    }
}

impl Provider for HttpProvider {
    fn id(&self) -> &str {
        "http"
    }

    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, ProviderError> {
        let body = serde_json::json!({
            "model": request.model_name,
            "temperature": request.temperature,
            "messages": [{ "role": "user", "content": request.prompt_text }],
        });
        let resp = self
            .client
            .post(&self.endpoint)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| ProviderError::Transient(e.to_string()))?;
        let status = resp.status();
        let text = resp
            .text()
            .map_err(|e| ProviderError::Transient(e.to_string()))?;
        if status.as_u16() == 401 || status.as_u16() == 403 || status.as_u16() == 404 {
            return Err(ProviderError::Unavailable(format!("{status}: {text}")));
        }
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(ProviderError::Transient(format!("{status}: {text}")));
        }
        if !status.is_success() {
            return Err(ProviderError::Rejected(format!("{status}: {text}")));
        }
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| ProviderError::Transient(format!("bad response body: {e}")))?;
        let content = value
            .pointer("/choices/0/message/content")
            .and_then(|c| c.as_str())
            .ok_or_else(|| ProviderError::Transient("response has no message content".into()))?;
        Ok(CompletionResponse {
            text: content.to_string(),
        })
    }
}

/// Caps in-flight requests and spaces request starts by a minimum interval.
pub struct Throttled<P> {
    inner: P,
    max_in_flight: usize,
    min_interval: Duration,
    in_flight: Mutex<usize>,
    freed: Condvar,
    last_start: Mutex<Option<Instant>>,
}

impl<P: Provider> Throttled<P> {
    pub fn new(inner: P, max_in_flight: usize, min_interval: Duration) -> Self {
        Throttled {
            inner,
            max_in_flight: max_in_flight.max(1),
            min_interval,
            in_flight: Mutex::new(0),
            freed: Condvar::new(),
            last_start: Mutex::new(None),
        }
    }

    fn acquire(&self) {
        let mut n = self.in_flight.lock().expect("throttle lock");
        while *n >= self.max_in_flight {
            n = self.freed.wait(n).expect("throttle lock");
        }
        *n += 1;
        drop(n);
        if !self.min_interval.is_zero() {
            let mut last = self.last_start.lock().expect("throttle lock");
            if let Some(t) = *last {
                let elapsed = t.elapsed();
                if elapsed < self.min_interval {
                    std::thread::sleep(self.min_interval - elapsed);
                }
            }
            *last = Some(Instant::now());
        }
    }

    fn release(&self) {
        let mut n = self.in_flight.lock().expect("throttle lock");
        *n -= 1;
        self.freed.notify_one();
    }
}

impl<P: Provider> Provider for Throttled<P> {
    fn id(&self) -> &str {
        self.inner.id()
    }

    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, ProviderError> {
        self.acquire();
        let out = self.inner.complete(request);
        self.release();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    struct Slow {
        current: AtomicUsize,
        peak: AtomicUsize,
    }

    impl Provider for Slow {
        fn id(&self) -> &str {
            "slow"
        }

        fn complete(&self, _: &CompletionRequest) -> Result<CompletionResponse, ProviderError> {
            let now = self.current.fetch_add(1, Ordering::SeqCst) + 1;
            self.peak.fetch_max(now, Ordering::SeqCst);
            std::thread::sleep(Duration::from_millis(20));
            self.current.fetch_sub(1, Ordering::SeqCst);
            Ok(CompletionResponse { text: "{}".into() })
        }
    }

    #[test]
    fn throttle_caps_concurrency() {
        let p = Arc::new(Throttled::new(
            Slow {
                current: AtomicUsize::new(0),
                peak: AtomicUsize::new(0),
            },
            2,
            Duration::ZERO,
        ));
        let req = CompletionRequest {
            model_name: "m".into(),
            temperature: 0.0,
            prompt_text: "x".into(),
        };
        std::thread::scope(|s| {
            for _ in 0..8 {
                let p = Arc::clone(&p);
                let req = req.clone();
                s.spawn(move || p.complete(&req).unwrap());
            }
        });
        assert!(p.inner.peak.load(Ordering::SeqCst) <= 2);
    }

    #[test]
    fn missing_api_key_is_unavailable() {
        if std::env::var(API_KEY_ENV).is_ok() {
            return;
        }
        assert!(matches!(
            HttpProvider::from_env(None, Duration::from_secs(1)),
            Err(ProviderError::Unavailable(_))
        ));
    }
}
