//! Chat-completion access with an on-disk response cache, a bound on
//! in-flight requests and retries for transport failures.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use ideograph_core::chat::RequestError;
use ideograph_core::{ChatBackend, ChatRequest, ChatResponse};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io;

/// What a provider hands back before caching.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reply {
    pub text: String,
    #[serde(default)]
    pub provider_meta: BTreeMap<String, serde_json::Value>,
}

impl Reply {
    pub fn text(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            provider_meta: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProviderError {
    /// Connection-level failure; the only kind that is retried.
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("provider returned an error: {0}")]
    Api(String),
    #[error("credential missing: environment variable {0} is not set")]
    Credential(String),
    #[error("malformed provider response: {0}")]
    Malformed(String),
}

/// A chat-completion adapter. Implementations must be usable from several
/// worker threads at once.
pub trait Provider: Send + Sync {
    /// Stable identifier that becomes part of every cache key.
    fn id(&self) -> String;

    fn call(&self, request: &ChatRequest) -> Result<Reply, ProviderError>;
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error(transparent)]
    Request(#[from] RequestError),
    #[error("{source} (after {attempts} attempts)")]
    Provider {
        source: ProviderError,
        attempts: usize,
    },
    #[error("cache: {0}")]
    Cache(String),
}

/// SHA-256 over the canonical JSON of provider id and request.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CacheKey(pub String);

#[derive(Serialize)]
struct KeyMaterial<'a> {
    provider: &'a str,
    request: &'a ChatRequest,
}

impl CacheKey {
    pub fn new(provider: &str, request: &ChatRequest) -> Self {
        let canonical = serde_json::to_vec(&KeyMaterial { provider, request })
            .expect("requests always serialize");
        CacheKey(io::sha256_hex(&canonical))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: CacheKey,
    pub provider: String,
    pub request: ChatRequest,
    pub response: Reply,
    pub timestamp: String,
}

/// One JSON file per cache key.
#[derive(Debug, Clone)]
pub struct ResponseCache {
    dir: PathBuf,
}

impl ResponseCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, key: &CacheKey) -> PathBuf {
        self.dir.join(format!("{}.json", key.as_str()))
    }

    pub fn get(&self, key: &CacheKey) -> Result<Option<CacheEntry>, GatewayError> {
        let path = self.path(key);
        match fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text)
                .map(Some)
                .map_err(|e| GatewayError::Cache(format!("{}: {e}", path.display()))),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(GatewayError::Cache(format!("{}: {e}", path.display()))),
        }
    }

    pub fn put(&self, entry: &CacheEntry) -> Result<(), GatewayError> {
        io::write_json(&self.path(&entry.key), entry)
            .map_err(|e| GatewayError::Cache(format!("{e:#}")))
    }
}

/// Counting semaphore over a mutex and condvar.
#[derive(Debug)]
pub struct Semaphore {
    permits: Mutex<usize>,
    available: Condvar,
}

pub struct Permit<'a>(&'a Semaphore);

impl Semaphore {
    pub fn new(permits: usize) -> Self {
        Self {
            permits: Mutex::new(permits.max(1)),
            available: Condvar::new(),
        }
    }

    pub fn acquire(&self) -> Permit<'_> {
        let mut n = self.permits.lock().unwrap_or_else(|e| e.into_inner());
        while *n == 0 {
            n = self.available.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut n = self.0.permits.lock().unwrap_or_else(|e| e.into_inner());
        *n += 1;
        self.0.available.notify_one();
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub retry_limit: usize,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            retry_limit: 3,
            base_delay: Duration::from_millis(500),
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `attempt` (1-based): base · 2^(attempt-1).
    pub fn delay(&self, attempt: usize) -> Duration {
        self.base_delay * 2u32.saturating_pow(attempt.saturating_sub(1) as u32)
    }
}

pub struct Gateway {
    provider: Arc<dyn Provider>,
    cache: Option<ResponseCache>,
    retry: RetryPolicy,
    limiter: Semaphore,
    provider_calls: AtomicUsize,
    cache_hits: AtomicUsize,
}

impl Gateway {
    pub fn new(
        provider: Arc<dyn Provider>,
        cache: Option<ResponseCache>,
        retry: RetryPolicy,
        max_in_flight: usize,
    ) -> Self {
        Self {
            provider,
            cache,
            retry,
            limiter: Semaphore::new(max_in_flight),
            provider_calls: AtomicUsize::new(0),
            cache_hits: AtomicUsize::new(0),
        }
    }

    pub fn provider_id(&self) -> String {
        self.provider.id()
    }

    /// Attempts made against the provider so far, retries included.
    pub fn provider_calls(&self) -> usize {
        self.provider_calls.load(Ordering::SeqCst)
    }

    pub fn cache_hits(&self) -> usize {
        self.cache_hits.load(Ordering::SeqCst)
    }

    fn call_with_retries(&self, request: &ChatRequest) -> Result<Reply, GatewayError> {
        let mut attempt = 0;
        loop {
            attempt += 1;
            let result = {
                let _permit = self.limiter.acquire();
                self.provider_calls.fetch_add(1, Ordering::SeqCst);
                self.provider.call(request)
            };
            match result {
                Ok(reply) => return Ok(reply),
                Err(ProviderError::Transport(msg)) if attempt <= self.retry.retry_limit => {
                    let delay = self.retry.delay(attempt);
                    log::warn!("transport failure ({msg}); retry {attempt} in {delay:?}");
                    std::thread::sleep(delay);
                }
                Err(source) => {
                    return Err(GatewayError::Provider {
                        source,
                        attempts: attempt,
                    })
                }
            }
        }
    }
}

impl ChatBackend for Gateway {
    type Error = GatewayError;

    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        request.validate()?;
        let provider = self.provider.id();
        let key = CacheKey::new(&provider, request);
        if let Some(cache) = &self.cache {
            if let Some(entry) = cache.get(&key)? {
                self.cache_hits.fetch_add(1, Ordering::SeqCst);
                return Ok(ChatResponse {
                    text: entry.response.text,
                    provider_meta: entry.response.provider_meta,
                    cached: true,
                });
            }
        }
        let reply = self.call_with_retries(request)?;
        if let Some(cache) = &self.cache {
            cache.put(&CacheEntry {
                key,
                provider,
                request: request.clone(),
                response: reply.clone(),
                timestamp: chrono::Utc::now().to_rfc3339(),
            })?;
        }
        Ok(ChatResponse {
            text: reply.text,
            provider_meta: reply.provider_meta,
            cached: false,
        })
    }
}
