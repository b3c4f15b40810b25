//! HTTP backend behavior against a local scripted server: happy path,
//! retry classification, and record-file substitutability with the mock.

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use neutro_core::backend::{
    BackendErrorKind, CellCoordinates, CompletionBackend, CompletionRequest, HttpBackend,
    MockBackend, MockProfile, RetryPolicy,
};
use neutro_core::phenomena::PhenomenonClass;
use neutro_core::prompting::{render_prompt, StrategyKind};
use neutro_core::runner::records::load_records;
use neutro_core::runner::{run_experiment, ExperimentConfig};

/// Serves scripted (status, body) responses, one connection each, then
/// repeats the last one forever. Counts requests served.
fn scripted_server(responses: Vec<(u16, String)>) -> (String, Arc<AtomicUsize>) {
    let listener = TcpListener::bind("127.0.0.1:0").expect("bind local listener");
    let addr = listener.local_addr().unwrap();
    let hits = Arc::new(AtomicUsize::new(0));
    let hits_clone = Arc::clone(&hits);
    thread::spawn(move || {
        let mut queue = responses.into_iter();
        let mut last: Option<(u16, String)> = None;
        for stream in listener.incoming() {
            let mut stream = match stream {
                Ok(s) => s,
                Err(_) => break,
            };
            hits_clone.fetch_add(1, Ordering::SeqCst);
            read_request(&mut stream);
            let (status, body) = queue
                .next()
                .or_else(|| last.clone())
                .unwrap_or((200, assistant_body("{\"T\": 0.5, \"I\": 0.4, \"F\": 0.3}")));
            last = Some((status, body.clone()));
            let response = format!(
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
            let _ = stream.write_all(response.as_bytes());
        }
    });
    (format!("http://{addr}/v1/chat/completions"), hits)
}

fn read_request(stream: &mut std::net::TcpStream) {
    stream
        .set_read_timeout(Some(Duration::from_secs(5)))
        .unwrap();
    let mut buffer = Vec::new();
    let mut chunk = [0u8; 1024];
    let mut content_length = 0usize;
    let mut header_end = None;
    loop {
        match stream.read(&mut chunk) {
            Ok(0) => break,
            Ok(n) => {
                buffer.extend_from_slice(&chunk[..n]);
                if header_end.is_none() {
                    if let Some(pos) = find_header_end(&buffer) {
                        header_end = Some(pos);
                        let headers = String::from_utf8_lossy(&buffer[..pos]);
                        for line in headers.lines() {
                            if let Some(value) = line
                                .to_ascii_lowercase()
                                .strip_prefix("content-length:")
                                .map(str::trim)
                                .map(str::to_string)
                            {
                                content_length = value.parse().unwrap_or(0);
                            }
                        }
                    }
                }
                if let Some(pos) = header_end {
                    if buffer.len() >= pos + 4 + content_length {
                        break;
                    }
                }
            }
            Err(_) => break,
        }
    }
}

fn find_header_end(buffer: &[u8]) -> Option<usize> {
    buffer.windows(4).position(|w| w == b"\r\n\r\n")
}

fn assistant_body(content: &str) -> String {
    serde_json::json!({
        "choices": [{"message": {"role": "assistant", "content": content}}]
    })
    .to_string()
}

fn fast_retry() -> RetryPolicy {
    RetryPolicy {
        max_attempts: 5,
        base_delay: Duration::from_millis(1),
        factor: 2.0,
    }
}

fn backend_for(endpoint: String) -> HttpBackend {
    HttpBackend::new(
        endpoint,
        "test-key".into(),
        Duration::from_secs(5),
        None,
        fast_retry(),
    )
    .unwrap()
}

fn sample_request() -> CompletionRequest {
    let pair = render_prompt(StrategyKind::Neutrosophic, "This sentence is false.");
    CompletionRequest {
        model_id: "gpt-4o".into(),
        system: pair.system,
        user: pair.user,
        temperature: 0.7,
        max_tokens: 200,
        response_format_hint: None,
        cell: Some(CellCoordinates {
            phenomenon_class: PhenomenonClass::LogicalParadox,
            strategy: StrategyKind::Neutrosophic,
            repetition: 1,
        }),
    }
}

#[test]
fn happy_path_returns_assistant_text() {
    let (endpoint, hits) = scripted_server(vec![(
        200,
        assistant_body("{\"T\": 0.8, \"I\": 0.9, \"F\": 0.7}"),
    )]);
    let backend = backend_for(endpoint);
    let result = backend.complete(&sample_request()).unwrap();
    assert_eq!(result.raw_text, "{\"T\": 0.8, \"I\": 0.9, \"F\": 0.7}");
    assert_eq!(result.attempt_count, 1);
    assert_eq!(hits.load(Ordering::SeqCst), 1);
}

#[test]
fn transient_errors_are_retried_until_success() {
    let (endpoint, hits) = scripted_server(vec![
        (500, "{\"error\": \"boom\"}".into()),
        (429, "{\"error\": \"slow down\"}".into()),
        (200, assistant_body("{\"T\": 0.1, \"I\": 0.2, \"F\": 0.3}")),
    ]);
    let backend = backend_for(endpoint);
    let result = backend.complete(&sample_request()).unwrap();
    assert_eq!(result.attempt_count, 3);
    assert_eq!(hits.load(Ordering::SeqCst), 3);
}

#[test]
fn auth_failure_is_not_retried() {
    let (endpoint, hits) = scripted_server(vec![(401, "{\"error\": \"bad key\"}".into())]);
    let backend = backend_for(endpoint);
    let err = backend.complete(&sample_request()).unwrap_err();
    assert_eq!(err.kind, BackendErrorKind::AuthFailure);
    assert!(!err.retryable);
    assert_eq!(err.attempts, 1);
    assert_eq!(hits.load(Ordering::SeqCst), 1);
}

#[test]
fn retry_exhaustion_surfaces_the_final_error() {
    let (endpoint, hits) = scripted_server(vec![(500, "{\"error\": \"down\"}".into())]);
    let backend = backend_for(endpoint);
    let err = backend.complete(&sample_request()).unwrap_err();
    assert_eq!(err.kind, BackendErrorKind::ServerError);
    assert_eq!(err.attempts, 5);
    assert_eq!(hits.load(Ordering::SeqCst), 5);
}

#[test]
fn record_files_are_structurally_identical_across_backends() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = ExperimentConfig::reference_default();
    config.models = vec!["gpt-4o".into()];
    config.strategies = vec![StrategyKind::Neutrosophic];
    config.repetitions = 2;
    config.run_id = Some("substitutability".into());
    let bank = config.bank().unwrap();

    let mock_path = dir.path().join("mock.jsonl");
    let mock = MockBackend::new(MockProfile::reference_means(), 42);
    run_experiment(&config, &bank, &mock, &mock_path, None).unwrap();

    let (endpoint, _) = scripted_server(vec![]);
    let http = backend_for(endpoint);
    let http_path = dir.path().join("http.jsonl");
    run_experiment(&config, &bank, &http, &http_path, None).unwrap();

    let mock_records = load_records(&mock_path).unwrap().records;
    let http_records = load_records(&http_path).unwrap().records;
    assert_eq!(mock_records.len(), http_records.len());
    let keys = |records: &[neutro_core::runner::records::EvaluationRecord]| -> BTreeSet<_> {
        records
            .iter()
            .map(|r| {
                (
                    r.model_id.clone(),
                    r.phenomenon_class,
                    r.strategy,
                    r.repetition,
                )
            })
            .collect()
    };
    assert_eq!(keys(&mock_records), keys(&http_records));
    assert!(http_records.iter().all(|r| r.parsed.valid));
    assert!(mock_records.iter().all(|r| r.parsed.valid));
    // Same schema on disk: identical JSON keys per line.
    let field_names = |path: &std::path::Path| -> BTreeSet<String> {
        let text = std::fs::read_to_string(path).unwrap();
        let value: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        value.as_object().unwrap().keys().cloned().collect()
    };
    assert_eq!(field_names(&mock_path), field_names(&http_path));
}
