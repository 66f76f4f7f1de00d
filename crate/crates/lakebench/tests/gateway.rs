use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use lakebench::core::fixtures::golden_map;
use lakebench::core::formats::FormatKind;
use lakebench::core::SampleMeta;
use lakebench::dataset::SampleRecord;
use lakebench::files::read_jsonl;
use lakebench::gateway::{
    build_request, run_batch, BackendError, ChatBackend, ChatRequest, Content, GatewayConfig,
    HttpBackend, Part,
};
use lakebench::scoring::ResponseRecord;
use serde_json::{json, Value};

fn sample(id: &str, prompt: &str) -> SampleRecord {
    SampleRecord {
        id: id.into(),
        input_format: FormatKind::Grid,
        cot_format: None,
        prompt: prompt.into(),
        image: None,
        target: None,
        meta: SampleMeta {
            split: "t".into(),
            size: 3,
            d_inf: 1,
            optimal_length: 1,
        },
    }
}

fn samples(n: usize) -> Vec<SampleRecord> {
    (0..n)
        .map(|i| sample(&format!("s{i:03}"), &format!("prompt {i}")))
        .collect()
}

fn config(dir: &Path) -> GatewayConfig {
    let mut cfg = GatewayConfig::new("http://127.0.0.1:9", "mock-model", dir.join("cache"));
    cfg.backoff_ms = 1;
    cfg.max_retries = 2;
    cfg.max_concurrency = 8;
    cfg
}

fn reply(text: &str) -> Value {
    json!({ "choices": [ { "message": { "role": "assistant", "content": text } } ] })
}

fn prompt_of(req: &ChatRequest) -> String {
    match &req.messages[0].content {
        Content::Text(t) => t.clone(),
        Content::Parts(parts) => parts
            .iter()
            .find_map(|p| match p {
                Part::Text { text } => Some(text.clone()),
                _ => None,
            })
            .unwrap(),
    }
}

/// Echoes the prompt back; fails for prompts listed in `failing`.
#[derive(Default)]
struct Echo {
    calls: AtomicUsize,
    failing: BTreeSet<String>,
    fatal: bool,
}

impl ChatBackend for Echo {
    fn complete(&self, req: &ChatRequest) -> Result<Value, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let prompt = prompt_of(req);
        if self.failing.contains(&prompt) {
            return Err(if self.fatal {
                BackendError::Fatal("HTTP 400".into())
            } else {
                BackendError::Transient("HTTP 500".into())
            });
        }
        Ok(reply(&format!("echo: {prompt}")))
    }
}

#[test]
fn output_ids_are_a_bijection_in_input_order() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path());
    let input = samples(97);
    let out = dir.path().join("responses.jsonl");
    let backend = Echo::default();
    let summary = run_batch(&input, dir.path(), &cfg, &backend, &out).unwrap();
    assert_eq!(summary.fetched, 97);
    assert_eq!(summary.network_calls, 97);
    let records: Vec<ResponseRecord> = read_jsonl(&out).unwrap();
    let ids: Vec<&str> = records.iter().map(|r| r.id.as_str()).collect();
    let expected: Vec<&str> = input.iter().map(|s| s.id.as_str()).collect();
    assert_eq!(ids, expected);
    for (r, s) in records.iter().zip(&input) {
        assert_eq!(
            r.response.as_deref(),
            Some(format!("echo: {}", s.prompt).as_str())
        );
    }
}

#[test]
fn cached_rerun_makes_no_calls() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path());
    let input = samples(20);
    let first = Echo::default();
    run_batch(
        &input,
        dir.path(),
        &cfg,
        &first,
        &dir.path().join("a.jsonl"),
    )
    .unwrap();
    assert_eq!(first.calls.load(Ordering::SeqCst), 20);

    let second = Echo::default();
    let out_b = dir.path().join("b.jsonl");
    let summary = run_batch(&input, dir.path(), &cfg, &second, &out_b).unwrap();
    assert_eq!(second.calls.load(Ordering::SeqCst), 0);
    assert_eq!(summary.cached, 20);
    assert_eq!(
        std::fs::read(dir.path().join("a.jsonl")).unwrap(),
        std::fs::read(out_b).unwrap()
    );
}

#[test]
fn cache_key_tracks_prompt_and_model() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path());
    let key =
        |s: &SampleRecord, c: &GatewayConfig| build_request(s, dir.path(), c).unwrap().cache_key();
    let a = sample("x", "p");
    assert_eq!(key(&a, &cfg), key(&sample("other-id", "p"), &cfg));
    assert_ne!(key(&a, &cfg), key(&sample("x", "q"), &cfg));
    let mut other_model = cfg.clone();
    other_model.model_name = "another".into();
    assert_ne!(key(&a, &cfg), key(&a, &other_model));
}

#[test]
fn transient_failures_retry_then_record_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path());
    let input = vec![sample("bad", "boom"), sample("good", "fine")];
    let backend = Echo {
        failing: BTreeSet::from(["boom".to_string()]),
        ..Echo::default()
    };
    let out = dir.path().join("r.jsonl");
    let summary = run_batch(&input, dir.path(), &cfg, &backend, &out).unwrap();
    // 1 + max_retries attempts for the failing sample, one for the other.
    assert_eq!(backend.calls.load(Ordering::SeqCst), 3 + 1);
    assert_eq!(summary.errored, 1);
    assert_eq!(summary.fetched, 1);
    let records: Vec<ResponseRecord> = read_jsonl(&out).unwrap();
    assert_eq!(records[0].id, "bad");
    assert!(records[0].response.is_none());
    assert!(records[0].error.as_deref().unwrap().contains("500"));
    assert_eq!(records[1].response.as_deref(), Some("echo: fine"));
}

#[test]
fn fatal_errors_are_not_retried() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path());
    let backend = Echo {
        failing: BTreeSet::from(["boom".to_string()]),
        fatal: true,
        ..Echo::default()
    };
    let summary = run_batch(
        &[sample("bad", "boom")],
        dir.path(),
        &cfg,
        &backend,
        &dir.path().join("r.jsonl"),
    )
    .unwrap();
    assert_eq!(backend.calls.load(Ordering::SeqCst), 1);
    assert_eq!(summary.errored, 1);
}

#[test]
fn resume_retries_only_errored_samples() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path());
    let input = samples(10);
    let out = dir.path().join("r.jsonl");
    let flaky = Echo {
        failing: BTreeSet::from(["prompt 3".to_string(), "prompt 7".to_string()]),
        ..Echo::default()
    };
    let first = run_batch(&input, dir.path(), &cfg, &flaky, &out).unwrap();
    assert_eq!(first.errored, 2);

    // A fresh cache proves the successful samples come from the output file.
    cfg.cache_dir = dir.path().join("cache2");
    let healthy = Echo::default();
    let second = run_batch(&input, dir.path(), &cfg, &healthy, &out).unwrap();
    assert_eq!(second.resumed, 8);
    assert_eq!(healthy.calls.load(Ordering::SeqCst), 2);
    let records: Vec<ResponseRecord> = read_jsonl(&out).unwrap();
    assert_eq!(records.len(), 10);
    assert!(records.iter().all(|r| r.error.is_none()));
}

#[test]
fn duplicate_ids_and_bad_config_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path());
    let out = dir.path().join("r.jsonl");
    let dup = vec![sample("a", "1"), sample("a", "2")];
    assert!(run_batch(&dup, dir.path(), &cfg, &Echo::default(), &out).is_err());

    let mut bad = cfg.clone();
    bad.base_url = "ftp://x".into();
    bad.max_concurrency = 0;
    bad.model_name.clear();
    match run_batch(&samples(1), dir.path(), &bad, &Echo::default(), &out) {
        Err(lakebench::Error::Config(v)) => assert_eq!(v.len(), 3, "{v:?}"),
        other => panic!("expected config error, got {other:?}"),
    }
}

#[test]
fn image_samples_send_a_data_url() {
    let dir = tempfile::tempdir().unwrap();
    let png = lakebench::image::map_png(&golden_map(), &Default::default()).unwrap();
    std::fs::create_dir_all(dir.path().join("images")).unwrap();
    std::fs::write(dir.path().join("images/golden.png"), &png).unwrap();
    let mut s = sample("golden", "look");
    s.input_format = FormatKind::Image;
    s.image = Some("images/golden.png".into());
    let req = build_request(&s, dir.path(), &config(dir.path())).unwrap();
    let Content::Parts(parts) = &req.messages[0].content else {
        panic!("expected parts")
    };
    let Part::ImageUrl { image_url } = &parts[0] else {
        panic!("image first")
    };
    assert!(image_url.url.starts_with("data:image/png;base64,iVBOR"));
    let body = serde_json::to_value(&req).unwrap();
    assert_eq!(body["messages"][0]["content"][0]["type"], "image_url");
    assert_eq!(body["messages"][0]["content"][1]["type"], "text");
}

/// Minimal HTTP server: the first `fail_first` requests get a 503, the rest
/// an echo of the last user message.
fn serve(listener: TcpListener, fail_first: usize, seen: &Mutex<Vec<(String, Value)>>) {
    let mut served = 0;
    for stream in listener.incoming() {
        let mut stream = stream.unwrap();
        let mut reader = BufReader::new(stream.try_clone().unwrap());
        let mut request_line = String::new();
        reader.read_line(&mut request_line).unwrap();
        let mut len = 0;
        let mut auth = String::new();
        loop {
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            let line = line.trim_end();
            if line.is_empty() {
                break;
            }
            let lower = line.to_ascii_lowercase();
            if let Some(v) = lower.strip_prefix("content-length:") {
                len = v.trim().parse().unwrap();
            }
            if lower.starts_with("authorization:") {
                auth = line["authorization:".len()..].trim().to_string();
            }
        }
        let mut body = vec![0; len];
        reader.read_exact(&mut body).unwrap();
        let body: Value = serde_json::from_slice(&body).unwrap();
        let (status, payload) = if served < fail_first {
            ("503 Service Unavailable", json!({ "error": "busy" }))
        } else {
            let prompt = body["messages"][0]["content"]
                .as_str()
                .unwrap_or("")
                .to_string();
            ("200 OK", reply(&format!("echo: {prompt}")))
        };
        seen.lock()
            .unwrap()
            .push((format!("{} {auth}", request_line.trim_end()), body));
        let payload = payload.to_string();
        write!(
            stream,
            "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
            payload.len()
        )
        .unwrap();
        served += 1;
        if served == fail_first + 1 {
            break;
        }
    }
}

#[test]
fn http_backend_speaks_chat_completions() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let port = listener.local_addr().unwrap().port();
    let seen = Mutex::new(Vec::new());
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path());
    cfg.base_url = format!("http://127.0.0.1:{port}/v1/");
    cfg.api_key_env = "LAKEBENCH_TEST_KEY_FOR_HTTP".into();
    std::env::set_var(&cfg.api_key_env, "sk-test");
    cfg.max_concurrency = 1;
    let out = dir.path().join("r.jsonl");
    std::thread::scope(|s| {
        s.spawn(|| serve(listener, 2, &seen));
        let backend = HttpBackend::new(&cfg);
        let summary =
            run_batch(&[sample("only", "hello")], dir.path(), &cfg, &backend, &out).unwrap();
        assert_eq!(summary.network_calls, 3);
        assert_eq!(summary.fetched, 1);
    });
    let records: Vec<ResponseRecord> = read_jsonl(&out).unwrap();
    assert_eq!(records[0].response.as_deref(), Some("echo: hello"));
    let seen = seen.into_inner().unwrap();
    assert_eq!(seen.len(), 3);
    let (line, body) = &seen[2];
    assert!(
        line.starts_with("POST /v1/chat/completions HTTP/1.1"),
        "{line}"
    );
    assert!(line.ends_with("Bearer sk-test"), "{line}");
    assert_eq!(body["model"], "mock-model");
    assert_eq!(body["temperature"], 0.0);
    assert_eq!(body["messages"][0]["role"], "user");
}
