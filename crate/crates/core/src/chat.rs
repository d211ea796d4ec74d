//! Chat-completion request/response types, the backend seam used by the
//! encoders and predictors, and numeric score parsing.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<Message>,
    /// Provider-specific decoding knobs, passed through verbatim. Empty means
    /// provider defaults.
    #[serde(default)]
    pub params: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RequestError {
    #[error("chat request has no messages")]
    NoMessages,
    #[error("message {0} has empty content")]
    EmptyContent(usize),
}

impl ChatRequest {
    /// Single user-message request with default decoding parameters.
    pub fn user(model: &str, content: String) -> Self {
        Self {
            model: model.into(),
            messages: alloc::vec![Message {
                role: Role::User,
                content,
            }],
            params: BTreeMap::new(),
        }
    }

    pub fn validate(&self) -> Result<(), RequestError> {
        if self.messages.is_empty() {
            return Err(RequestError::NoMessages);
        }
        if let Some(i) = self.messages.iter().position(|m| m.content.is_empty()) {
            return Err(RequestError::EmptyContent(i));
        }
        Ok(())
    }

    /// Content of the last user message, or the empty string.
    pub fn last_user_content(&self) -> &str {
        self.messages
            .iter()
            .rev()
            .find(|m| m.role == Role::User)
            .map(|m| m.content.as_str())
            .unwrap_or("")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub text: String,
    #[serde(default)]
    pub provider_meta: BTreeMap<String, serde_json::Value>,
    #[serde(default)]
    pub cached: bool,
}

/// Anything that can answer a chat request: a live provider, a cache in
/// front of one, or a deterministic stub.
pub trait ChatBackend {
    type Error;

    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, Self::Error>;
}

impl<B: ChatBackend + ?Sized> ChatBackend for &B {
    type Error = B::Error;

    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, Self::Error> {
        (**self).complete(request)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no number found in completion {0:?}")]
pub struct NoNumberFound(pub String);

/// Extracts the first decimal number (optional sign, digits, optional
/// fraction) from `text` and clamps it into `[lo, hi]`.
pub fn parse_score(text: &str, lo: f64, hi: f64) -> Result<f64, NoNumberFound> {
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let digit_at = |j: usize| bytes.get(j).is_some_and(u8::is_ascii_digit);
        let starts_number = digit_at(i) || (bytes[i] == b'.' && digit_at(i + 1));
        if !starts_number {
            i += 1;
            continue;
        }
        let negative = i > 0 && bytes[i - 1] == b'-';
        let mut end = i;
        while digit_at(end) {
            end += 1;
        }
        if end < bytes.len() && bytes[end] == b'.' && digit_at(end + 1) {
            end += 1;
            while digit_at(end) {
                end += 1;
            }
        }
        let value: f64 = text[i..end]
            .parse()
            .map_err(|_| NoNumberFound(text.into()))?;
        let value = if negative { -value } else { value };
        return Ok(value.clamp(lo, hi));
    }
    Err(NoNumberFound(text.into()))
}
