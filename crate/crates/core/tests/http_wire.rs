//! Wire-format checks for the HTTP providers against a scripted local server.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::mpsc;
use std::thread;

use serde_json::{json, Value};
use stylecast_core::describe::{DescribeProvider, DescribeRequest, HttpDescriber, HttpTranscriber, TranscribeProvider, VideoMeta};
use stylecast_core::embed::{EmbedProvider, HttpEmbedder};
use stylecast_core::generate::{GenerateProvider, HttpGenerator};
use stylecast_core::provider::{ChatMessage, ChatRequest, ContentPart, HttpEndpoint, HttpJsonClient, ProviderError, RetryPolicy};
use stylecast_core::select::{HttpJudge, JudgeProvider};
use stylecast_core::sentiment::{HttpSentiment, SentimentProvider};
use stylecast_core::{Language, Sentiment};

struct Seen {
    headers: Vec<(String, String)>,
    body: Value,
}

impl Seen {
    fn header(&self, name: &str) -> Option<&str> {
        self.headers.iter().find(|(k, _)| k == name).map(|(_, v)| v.as_str())
    }
}

/// Serves `replies` in order, one per connection, and reports each request.
fn serve(replies: Vec<(u16, String)>) -> (String, mpsc::Receiver<Seen>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1", listener.local_addr().unwrap());
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for (status, reply) in replies {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            let mut headers = Vec::new();
            loop {
                line.clear();
                reader.read_line(&mut line).unwrap();
                let l = line.trim_end();
                if l.is_empty() {
                    break;
                }
                let (k, v) = l.split_once(':').unwrap();
                headers.push((k.trim().to_ascii_lowercase(), v.trim().to_string()));
            }
            let len: usize = headers.iter().find(|(k, _)| k == "content-length").map_or(0, |(_, v)| v.parse().unwrap());
            let mut body = vec![0; len];
            reader.read_exact(&mut body).unwrap();
            tx.send(Seen { headers, body: serde_json::from_slice(&body).unwrap_or(Value::Null) }).unwrap();
            let mut out = stream;
            write!(
                out,
                "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{reply}",
                reply.len()
            )
            .unwrap();
        }
    });
    (url, rx)
}

fn client(url: &str, key_env: Option<&str>) -> HttpJsonClient {
    let endpoint = HttpEndpoint {
        endpoint: url.to_string(),
        model: "m-1".into(),
        api_key_env: key_env.map(str::to_string),
        timeout_s: 10,
    };
    HttpJsonClient::new(endpoint, None).unwrap()
}

fn ok(v: Value) -> (u16, String) {
    (200, v.to_string())
}

fn chat() -> ChatRequest {
    ChatRequest { model: "m-1".into(), messages: vec![ChatMessage::text("user", "hello")] }
}

#[test]
fn embed_posts_model_and_input() {
    let (url, rx) = serve(vec![ok(json!({"embedding": [0.5, -1.0, 2.0]}))]);
    let v = HttpEmbedder::new(client(&url, None)).embed("a cat").unwrap();
    assert_eq!(v, vec![0.5, -1.0, 2.0]);
    let seen = rx.recv().unwrap();
    assert_eq!(seen.body, json!({"model": "m-1", "input": "a cat"}));
    assert_eq!(seen.header("content-type"), Some("application/json"));
    assert_eq!(seen.header("authorization"), None);
}

#[test]
fn empty_embedding_is_malformed() {
    let (url, _rx) = serve(vec![ok(json!({"embedding": []}))]);
    let err = HttpEmbedder::new(client(&url, None)).embed("x").unwrap_err();
    assert!(matches!(err, ProviderError::Malformed(_)), "{err:?}");
}

#[test]
fn sentiment_reads_label() {
    let (url, rx) = serve(vec![ok(json!({"label": "negative"}))]);
    let s = HttpSentiment::new(client(&url, None)).classify("so sad").unwrap();
    assert_eq!(s, Sentiment::Negative);
    assert_eq!(rx.recv().unwrap().body, json!({"model": "m-1", "input": "so sad"}));
}

#[test]
fn generate_and_judge_send_chat_and_read_text() {
    let (url, rx) = serve(vec![ok(json!({"text": "a comment"})), ok(json!({"text": "{\"struct\": 1}"}))]);
    assert_eq!(HttpGenerator::new(client(&url, None)).generate(&chat()).unwrap(), "a comment");
    assert_eq!(HttpJudge::new(client(&url, None)).judge(&chat()).unwrap(), "{\"struct\": 1}");
    let wire = json!({"model": "m-1", "messages": [{"role": "user", "content": [{"type": "text", "text": "hello"}]}]});
    assert_eq!(rx.recv().unwrap().body, wire);
    assert_eq!(rx.recv().unwrap().body, wire);
}

#[test]
fn describe_inlines_frames_from_the_asset_root() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir_all(dir.path().join("v/frames")).unwrap();
    std::fs::write(dir.path().join("v/frames/frame_000000.jpg"), b"\xff\xd8jpeg").unwrap();
    let (url, rx) = serve(vec![ok(json!({"text": "A cat jumps."}))]);
    let payload = ChatRequest {
        model: "m-1".into(),
        messages: vec![ChatMessage {
            role: "user".into(),
            content: vec![
                ContentPart::Text { text: "describe".into() },
                ContentPart::Image { path: "v/frames/frame_000000.jpg".into() },
            ],
        }],
    };
    let request = DescribeRequest {
        transcript: vec![],
        frame_paths: vec!["v/frames/frame_000000.jpg".into()],
        meta: VideoMeta::default(),
        language: Language::En,
        max_frames: 32,
    };
    let d = HttpDescriber::new(client(&url, None).with_asset_root(dir.path()));
    assert_eq!(d.describe(&request, &payload).unwrap(), "A cat jumps.");
    let seen = rx.recv().unwrap();
    let image = &seen.body["messages"][0]["content"][1];
    assert_eq!(image["type"], "image");
    assert_eq!(image["path"], "v/frames/frame_000000.jpg");
    assert_eq!(image["data_base64"], "/9hqcGVn");
}

#[test]
fn transcribe_uploads_media() {
    let dir = tempfile::tempdir().unwrap();
    let media = dir.path().join("video.mp4");
    std::fs::write(&media, b"abc").unwrap();
    let (url, rx) = serve(vec![ok(json!({"segments": [{"start_s": 0.0, "end_s": 1.5, "text": "hi"}]}))]);
    let segs = HttpTranscriber::new(client(&url, None)).transcribe(&media).unwrap();
    assert_eq!((segs.len(), segs[0].end_s, segs[0].text.as_str()), (1, 1.5, "hi"));
    let seen = rx.recv().unwrap();
    assert_eq!(seen.body, json!({"model": "m-1", "media": {"filename": "video.mp4", "data_base64": "YWJj"}}));
}

#[test]
fn bearer_token_comes_from_the_named_env_var() {
    std::env::set_var("STYLECAST_WIRE_TEST_KEY", "sekrit");
    let (url, rx) = serve(vec![ok(json!({"label": "positive"})), ok(json!({"label": "positive"}))]);
    HttpSentiment::new(client(&url, Some("STYLECAST_WIRE_TEST_KEY"))).classify("x").unwrap();
    assert_eq!(rx.recv().unwrap().header("authorization"), Some("Bearer sekrit"));
    HttpSentiment::new(client(&url, Some("STYLECAST_WIRE_TEST_UNSET"))).classify("x").unwrap();
    assert_eq!(rx.recv().unwrap().header("authorization"), None);
}

#[test]
fn server_errors_are_retried_and_client_errors_are_not() {
    let (url, rx) = serve(vec![
        (503, "busy".into()),
        (500, "oops".into()),
        ok(json!({"embedding": [1.0]})),
        (400, "bad request".into()),
    ]);
    let e = HttpEmbedder::new(client(&url, None));
    let policy = RetryPolicy { max_retries: 2, backoff_ms: 0 };
    let (res, retries) = policy.run(|_| e.embed("x"));
    assert_eq!((res.unwrap(), retries), (vec![1.0], 2));
    let (res, retries) = policy.run(|_| e.embed("x"));
    assert_eq!(res.unwrap_err(), ProviderError::Http { status: 400, body: "bad request".into() });
    assert_eq!(retries, 0);
    assert_eq!(rx.iter().count(), 4);
}

#[test]
fn unreachable_endpoint_is_unavailable() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let err = HttpEmbedder::new(client(&format!("http://127.0.0.1:{port}/"), None)).embed("x").unwrap_err();
    assert!(matches!(err, ProviderError::Unavailable(_)), "{err:?}");
    assert!(err.is_retryable());
}
