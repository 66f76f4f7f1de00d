//! Batch inference against a chat-completions endpoint.
//!
//! Every request is cached on disk under the SHA-256 of its JSON body, so a
//! rerun only goes to the network for prompts it has not seen. Results are
//! appended to the output file as they arrive; a rerun keeps the samples
//! already answered there and only retries the rest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::Duration;

use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::dataset::SampleRecord;
use crate::error::{Error, IoContext, Result};
use crate::files::{append_jsonl, create_dir, read_jsonl, sha256_hex, to_json, write_jsonl};
use crate::scoring::ResponseRecord;

fn default_api_key_env() -> String {
    "OPENAI_API_KEY".into()
}

fn default_backoff_ms() -> u64 {
    500
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GatewayConfig {
    /// Base URL up to and excluding `/chat/completions`.
    pub base_url: String,
    pub model_name: String,
    pub max_concurrency: usize,
    pub timeout_secs: u64,
    pub max_retries: u32,
    #[serde(default)]
    pub temperature: f64,
    pub cache_dir: PathBuf,
    /// First retry delay; doubles on every further attempt.
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
    #[serde(default = "default_api_key_env")]
    pub api_key_env: String,
}

impl GatewayConfig {
    pub fn new(
        base_url: impl Into<String>,
        model_name: impl Into<String>,
        cache_dir: impl Into<PathBuf>,
    ) -> Self {
        GatewayConfig {
            base_url: base_url.into(),
            model_name: model_name.into(),
            max_concurrency: 4,
            timeout_secs: 120,
            max_retries: 3,
            temperature: 0.0,
            cache_dir: cache_dir.into(),
            backoff_ms: default_backoff_ms(),
            api_key_env: default_api_key_env(),
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.base_url.starts_with("http://") || self.base_url.starts_with("https://")) {
            out.push(format!(
                "base_url: {:?} is not an http(s) URL",
                self.base_url
            ));
        }
        if self.model_name.is_empty() {
            out.push("model_name: must not be empty".into());
        }
        if self.max_concurrency == 0 {
            out.push("max_concurrency: must be at least 1".into());
        }
        if self.timeout_secs == 0 {
            out.push("timeout_secs: must be at least 1".into());
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            out.push(format!(
                "temperature: {} must be a non-negative number",
                self.temperature
            ));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub temperature: f64,
    pub messages: Vec<ChatMessage>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: Content,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Content {
    Text(String),
    Parts(Vec<Part>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Part {
    Text { text: String },
    ImageUrl { image_url: ImageUrl },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageUrl {
    pub url: String,
}

impl ChatRequest {
    pub fn cache_key(&self) -> String {
        sha256_hex(to_json(self).as_bytes())
    }
}

/// Request for one sample. Image samples carry the PNG, read relative to
/// `base_dir`, as a data URL next to the prompt text.
pub fn build_request(
    sample: &SampleRecord,
    base_dir: &Path,
    cfg: &GatewayConfig,
) -> Result<ChatRequest> {
    let content = match &sample.image {
        None => Content::Text(sample.prompt.clone()),
        Some(rel) => {
            let path = base_dir.join(rel);
            let bytes = fs::read(&path).at(&path)?;
            let b64 = base64::engine::general_purpose::STANDARD.encode(bytes);
            Content::Parts(vec![
                Part::ImageUrl {
                    image_url: ImageUrl {
                        url: format!("data:image/png;base64,{b64}"),
                    },
                },
                Part::Text {
                    text: sample.prompt.clone(),
                },
            ])
        }
    };
    Ok(ChatRequest {
        model: cfg.model_name.clone(),
        temperature: cfg.temperature,
        messages: vec![ChatMessage {
            role: "user".into(),
            content,
        }],
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum BackendError {
    #[error("transient: {0}")]
    Transient(String),
    #[error("{0}")]
    Fatal(String),
}

/// Anything that can answer a chat request with the raw response JSON.
pub trait ChatBackend: Sync {
    fn complete(&self, req: &ChatRequest) -> std::result::Result<Value, BackendError>;
}

pub struct HttpBackend {
    agent: ureq::Agent,
    endpoint: String,
    api_key: Option<String>,
}

impl HttpBackend {
    pub fn new(cfg: &GatewayConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(cfg.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        HttpBackend {
            agent,
            endpoint: format!("{}/chat/completions", cfg.base_url.trim_end_matches('/')),
            api_key: std::env::var(&cfg.api_key_env)
                .ok()
                .filter(|k| !k.is_empty()),
        }
    }
}

impl ChatBackend for HttpBackend {
    fn complete(&self, req: &ChatRequest) -> std::result::Result<Value, BackendError> {
        let mut call = self.agent.post(&self.endpoint);
        if let Some(key) = &self.api_key {
            call = call.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = call
            .send_json(req)
            .map_err(|e| BackendError::Transient(e.to_string()))?;
        let status = resp.status().as_u16();
        let body = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| BackendError::Transient(e.to_string()))?;
        match status {
            200..=299 => serde_json::from_str(&body)
                .map_err(|e| BackendError::Fatal(format!("response is not JSON: {e}"))),
            408 | 429 | 500..=599 => Err(BackendError::Transient(format!("HTTP {status}: {body}"))),
            _ => Err(BackendError::Fatal(format!("HTTP {status}: {body}"))),
        }
    }
}

/// `choices[0].message.content` of a chat-completions response.
pub fn response_text(raw: &Value) -> Option<String> {
    raw.pointer("/choices/0/message/content")?
        .as_str()
        .map(str::to_string)
}

/// Raw responses keyed by request hash, one JSON file each.
pub struct ResponseCache {
    dir: PathBuf,
}

impl ResponseCache {
    pub fn open(dir: &Path) -> Result<Self> {
        create_dir(dir)?;
        Ok(ResponseCache { dir: dir.into() })
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Option<Value> {
        let text = fs::read_to_string(self.path(key)).ok()?;
        serde_json::from_str(&text).ok()
    }

    /// Writes through a temporary file and a rename so readers never see a
    /// partial entry.
    pub fn put(&self, key: &str, raw: &Value) -> Result<()> {
        let tmp = self
            .dir
            .join(format!(".{key}.{:?}.tmp", std::thread::current().id()));
        fs::write(&tmp, to_json(raw)).at(&tmp)?;
        fs::rename(&tmp, self.path(key)).at(self.path(key))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub total: usize,
    /// Already answered in the output file before this run.
    pub resumed: usize,
    pub cached: usize,
    pub fetched: usize,
    pub errored: usize,
    pub network_calls: usize,
}

enum Source {
    Cache,
    Network,
    Failed,
}

struct Outcome {
    record: ResponseRecord,
    source: Source,
    calls: usize,
}

fn with_retries(
    backend: &dyn ChatBackend,
    req: &ChatRequest,
    cfg: &GatewayConfig,
) -> (std::result::Result<Value, BackendError>, usize) {
    let mut calls = 0;
    loop {
        calls += 1;
        match backend.complete(req) {
            Err(BackendError::Transient(msg)) => {
                if calls > cfg.max_retries as usize {
                    return (Err(BackendError::Transient(msg)), calls);
                }
                let delay = cfg.backoff_ms.saturating_mul(1 << (calls - 1).min(16));
                std::thread::sleep(Duration::from_millis(delay));
            }
            other => return (other, calls),
        }
    }
}

fn process(
    sample: &SampleRecord,
    base_dir: &Path,
    cfg: &GatewayConfig,
    cache: &ResponseCache,
    backend: &dyn ChatBackend,
) -> Outcome {
    let failed = |msg: String, calls| Outcome {
        record: ResponseRecord {
            id: sample.id.clone(),
            response: None,
            error: Some(msg),
        },
        source: Source::Failed,
        calls,
    };
    let req = match build_request(sample, base_dir, cfg) {
        Ok(r) => r,
        Err(e) => return failed(e.to_string(), 0),
    };
    let key = req.cache_key();
    let (raw, source, calls) = match cache.get(&key) {
        Some(raw) => (raw, Source::Cache, 0),
        None => match with_retries(backend, &req, cfg) {
            (Ok(raw), calls) => {
                if let Err(e) = cache.put(&key, &raw) {
                    return failed(e.to_string(), calls);
                }
                (raw, Source::Network, calls)
            }
            (Err(e), calls) => return failed(e.to_string(), calls),
        },
    };
    match response_text(&raw) {
        Some(text) => Outcome {
            record: ResponseRecord {
                id: sample.id.clone(),
                response: Some(text),
                error: None,
            },
            source,
            calls,
        },
        None => failed("response has no choices[0].message.content".into(), calls),
    }
}

/// Answers every sample and writes `out` with one line per input id, in
/// input order.
pub fn run_batch(
    samples: &[SampleRecord],
    base_dir: &Path,
    cfg: &GatewayConfig,
    backend: &dyn ChatBackend,
    out: &Path,
) -> Result<BatchSummary> {
    let problems = cfg.violations();
    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }
    let mut seen = std::collections::BTreeSet::new();
    if let Some(dup) = samples.iter().find(|s| !seen.insert(s.id.as_str())) {
        return Err(Error::Config(vec![format!(
            "eval: duplicate sample id {:?}",
            dup.id
        )]));
    }
    let cache = ResponseCache::open(&cfg.cache_dir)?;

    let mut done: BTreeMap<String, ResponseRecord> = BTreeMap::new();
    if out.exists() {
        for r in read_jsonl::<ResponseRecord>(out)? {
            if r.error.is_none() && r.response.is_some() && seen.contains(r.id.as_str()) {
                done.insert(r.id.clone(), r);
            }
        }
    }
    let mut summary = BatchSummary {
        total: samples.len(),
        resumed: done.len(),
        ..BatchSummary::default()
    };
    let pending: Vec<&SampleRecord> = samples
        .iter()
        .filter(|s| !done.contains_key(&s.id))
        .collect();

    if let Some(parent) = out.parent() {
        create_dir(parent)?;
    }
    let mut progress = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(out)
        .at(out)?;
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<Outcome>();
    let workers = cfg.max_concurrency.min(pending.len()).max(1);
    let mut fresh: BTreeMap<String, ResponseRecord> = BTreeMap::new();
    std::thread::scope(|scope| -> Result<()> {
        for _ in 0..workers {
            let tx = tx.clone();
            let (next, pending, cache) = (&next, &pending, &cache);
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(sample) = pending.get(i) else { break };
                if tx
                    .send(process(sample, base_dir, cfg, cache, backend))
                    .is_err()
                {
                    break;
                }
            });
        }
        drop(tx);
        for o in rx {
            summary.network_calls += o.calls;
            match o.source {
                Source::Cache => summary.cached += 1,
                Source::Network => summary.fetched += 1,
                Source::Failed => summary.errored += 1,
            }
            append_jsonl(&mut progress, out, &o.record)?;
            fresh.insert(o.record.id.clone(), o.record);
        }
        Ok(())
    })?;
    drop(progress);

    let ordered: Vec<&ResponseRecord> = samples
        .iter()
        .map(|s| {
            done.get(&s.id)
                .or_else(|| fresh.get(&s.id))
                .expect("every sample answered")
        })
        .collect();
    write_jsonl(out, ordered)?;
    Ok(summary)
}
