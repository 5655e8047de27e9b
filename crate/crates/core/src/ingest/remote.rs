//! Client for completions-style endpoints that echo the prompt with per-token
//! log-probabilities.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::Deserialize;
use serde_json::json;

use crate::error::{FractalError, Result};
use crate::series::LogBase;

use super::{utf8_token_bytes, Document};

pub const API_KEY_ENV: &str = "FRACTAL_SCORER_API_KEY";
pub const ENDPOINT_ENV: &str = "FRACTAL_SCORER_URL";

const BODY_EXCERPT: usize = 200;

#[derive(Debug, Clone)]
pub struct ScoringConfig {
    pub endpoint: String,
    pub api_key: Option<String>,
    pub model: String,
    pub max_attempts: u32,
    pub initial_backoff: Duration,
    /// Requests per second across all threads; `None` disables the limiter.
    pub requests_per_second: Option<f64>,
    pub token_cap: usize,
    pub timeout: Duration,
}

impl ScoringConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            api_key: None,
            model: model.into(),
            max_attempts: 3,
            initial_backoff: Duration::from_millis(500),
            requests_per_second: None,
            token_cap: 8192,
            timeout: Duration::from_secs(120),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreOutcome {
    pub document: Document,
    /// Attempts beyond the first.
    pub retries: u32,
    /// Positions the server returned without a log-probability (usually the first token).
    pub dropped_positions: usize,
}

#[derive(Deserialize)]
struct CompletionResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    logprobs: Option<ChoiceLogprobs>,
}

#[derive(Deserialize)]
struct ChoiceLogprobs {
    tokens: Vec<String>,
    token_logprobs: Vec<Option<f64>>,
}

pub struct ScoringClient {
    config: ScoringConfig,
    agent: ureq::Agent,
    next_slot: Mutex<Option<Instant>>,
}

impl std::fmt::Debug for ScoringClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScoringClient")
            .field("endpoint", &self.config.endpoint)
            .field("model", &self.config.model)
            .finish()
    }
}

enum Attempt {
    Done(String),
    Transient(u16, String),
}

impl ScoringClient {
    pub fn new(config: ScoringConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(config.timeout))
            .build()
            .into();
        Self {
            config,
            agent,
            next_slot: Mutex::new(None),
        }
    }

    pub fn config(&self) -> &ScoringConfig {
        &self.config
    }

    fn wait_for_slot(&self) {
        let Some(rps) = self.config.requests_per_second.filter(|r| *r > 0.0) else {
            return;
        };
        let interval = Duration::from_secs_f64(1.0 / rps);
        let wait = {
            let mut slot = self.next_slot.lock().expect("rate limiter poisoned");
            let now = Instant::now();
            let start = slot.map_or(now, |s| s.max(now));
            *slot = Some(start + interval);
            start - now
        };
        if !wait.is_zero() {
            std::thread::sleep(wait);
        }
    }

    fn attempt(&self, body: &serde_json::Value) -> Result<Attempt> {
        self.wait_for_slot();
        let mut req = self.agent.post(&self.config.endpoint);
        if let Some(key) = &self.config.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = match req.send_json(body) {
            Ok(r) => r,
            Err(e) => return Ok(Attempt::Transient(0, e.to_string())),
        };
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| FractalError::Protocol(format!("reading response body: {e}")))?;
        match status {
            200..=299 => Ok(Attempt::Done(text)),
            408 | 429 | 500..=599 => Ok(Attempt::Transient(status, text)),
            _ => Err(FractalError::Scoring {
                status,
                body: excerpt(&text),
            }),
        }
    }

    /// Scores one document: a single POST, retried with exponential backoff on
    /// transient failures.
    pub fn score(&self, doc_id: &str, domain: &str, text: &str) -> Result<ScoreOutcome> {
        let body = json!({
            "model": self.config.model,
            "prompt": text,
            "max_tokens": 0,
            "echo": true,
            "logprobs": 1,
        });
        let mut backoff = self.config.initial_backoff;
        let attempts = self.config.max_attempts.max(1);
        let mut last = (0u16, String::new());
        for attempt in 0..attempts {
            match self.attempt(&body)? {
                Attempt::Done(text) => {
                    let (document, dropped) = self.parse(doc_id, domain, &text)?;
                    return Ok(ScoreOutcome {
                        document,
                        retries: attempt,
                        dropped_positions: dropped,
                    });
                }
                Attempt::Transient(status, text) => {
                    log::warn!(
                        "scoring {doc_id}: attempt {} failed with status {status}",
                        attempt + 1
                    );
                    last = (status, text);
                    if attempt + 1 < attempts {
                        std::thread::sleep(backoff);
                        backoff *= 2;
                    }
                }
            }
        }
        Err(FractalError::Scoring {
            status: last.0,
            body: excerpt(&last.1),
        })
    }

    fn parse(&self, doc_id: &str, domain: &str, text: &str) -> Result<(Document, usize)> {
        let resp: CompletionResponse = serde_json::from_str(text)
            .map_err(|e| FractalError::Protocol(format!("unexpected response shape: {e}")))?;
        let lp = resp
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.logprobs)
            .ok_or_else(|| FractalError::Protocol("response carries no logprobs".into()))?;
        if lp.tokens.len() != lp.token_logprobs.len() {
            return Err(FractalError::Protocol(format!(
                "{} tokens but {} log-probabilities",
                lp.tokens.len(),
                lp.token_logprobs.len()
            )));
        }
        let mut tokens = Vec::new();
        let mut logprobs = Vec::new();
        let mut dropped = 0;
        for (tok, value) in lp.tokens.into_iter().zip(lp.token_logprobs) {
            match value {
                Some(v) => {
                    tokens.push(tok);
                    logprobs.push(v);
                }
                None => dropped += 1,
            }
        }
        tokens.truncate(self.config.token_cap);
        logprobs.truncate(self.config.token_cap);
        let bytes = tokens.iter().map(|t| utf8_token_bytes(t)).collect();
        let document = Document::new(
            doc_id,
            domain,
            tokens,
            logprobs,
            Some(bytes),
            LogBase::Natural,
        )
        .map_err(|e| FractalError::Protocol(e.to_string()))?;
        Ok((document, dropped))
    }
}

fn excerpt(text: &str) -> String {
    text.chars().take(BODY_EXCERPT).collect()
}
