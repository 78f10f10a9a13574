use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;

use metaevolve::llm::{HttpClient, LlmClient, LlmConfig, LlmError, LlmRequest};

/// Serves one canned (status, body) per connection, in order, and keeps the
/// request bodies it received.
fn stub(replies: Vec<(u16, String)>) -> (String, Arc<Mutex<Vec<String>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = Arc::clone(&seen);
    thread::spawn(move || {
        for (status, body) in replies {
            let Ok((stream, _)) = listener.accept() else { return };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line == "\r\n" || line.is_empty() {
                    break;
                }
                let lower = line.to_ascii_lowercase();
                if let Some(v) = lower.strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
            }
            let mut buf = vec![0; len];
            reader.read_exact(&mut buf).unwrap();
            log.lock().unwrap().push(String::from_utf8(buf).unwrap());
            let mut stream = stream;
            let _ = write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
        }
    });
    (format!("http://{addr}/v1"), seen)
}

fn ok_body(text: &str) -> String {
    serde_json::json!({
        "choices": [{"message": {"role": "assistant", "content": text}}],
        "usage": {"prompt_tokens": 11, "completion_tokens": 3}
    })
    .to_string()
}

fn client(endpoint: String) -> HttpClient {
    let config = LlmConfig {
        endpoint,
        model: "test-model".into(),
        backoff_ms: 5,
        timeout_secs: 10,
        ..LlmConfig::default()
    };
    HttpClient::new(config, "k").unwrap()
}

#[test]
fn returns_content() {
    let (url, seen) = stub(vec![(200, ok_body("hello"))]);
    let c = client(url);
    let r = c.complete(&c.request("role", "task")).unwrap();
    assert_eq!(r.text, "hello");
    assert_eq!(r.usage.unwrap().completion_tokens, 3);
    let sent: serde_json::Value = serde_json::from_str(&seen.lock().unwrap()[0]).unwrap();
    assert_eq!(sent["model"], "test-model");
    assert_eq!(sent["messages"][0]["content"], "role");
    assert_eq!(sent["max_tokens"], 4096);
}

#[test]
fn retries_rate_limits() {
    let (url, seen) = stub(vec![
        (429, "{}".into()),
        (429, "{}".into()),
        (200, ok_body("third time")),
    ]);
    let c = client(url);
    let r = c.complete(&LlmRequest::new("m", "s", "u")).unwrap();
    assert_eq!(r.text, "third time");
    assert_eq!(seen.lock().unwrap().len(), 3);
    // two backoffs of 5 and 10 ms
    assert!(r.latency_ms >= 15);
}

#[test]
fn gives_up_after_retries() {
    let (url, seen) = stub(vec![(503, "{}".into()); 4]);
    match client(url).complete(&LlmRequest::new("m", "s", "u")) {
        Err(LlmError::Transport { attempts, .. }) => assert_eq!(attempts, 4),
        other => panic!("{other:?}"),
    }
    assert_eq!(seen.lock().unwrap().len(), 4);
}

#[test]
fn credentials_are_not_retried() {
    let (url, seen) = stub(vec![(401, "{}".into()), (200, ok_body("no"))]);
    assert!(matches!(
        client(url).complete(&LlmRequest::new("m", "s", "u")),
        Err(LlmError::Credential { status: 401 })
    ));
    assert_eq!(seen.lock().unwrap().len(), 1);
}

#[test]
fn malformed_body_is_protocol_error() {
    let (url, _) = stub(vec![(200, "<html>oops</html>".into())]);
    match client(url).complete(&LlmRequest::new("m", "s", "u")) {
        Err(LlmError::Protocol { excerpt, .. }) => assert_eq!(excerpt, "<html>oops</html>"),
        other => panic!("{other:?}"),
    }
    let (url, _) = stub(vec![(200, r#"{"choices": []}"#.into())]);
    assert!(matches!(
        client(url).complete(&LlmRequest::new("m", "s", "u")),
        Err(LlmError::Protocol { .. })
    ));
}

#[test]
fn connection_refused_is_transport_error() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let c = client(format!("http://127.0.0.1:{port}"));
    assert!(matches!(
        c.complete(&LlmRequest::new("m", "s", "u")),
        Err(LlmError::Transport { attempts: 4, .. })
    ));
}
