use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use gridres::cve::{CveError, CveSource, CveStore, NvdClient};

/// Serves the canned responses in order, one per connection, and records
/// each request head.
struct MockNvd {
    url: String,
    requests: Arc<Mutex<Vec<String>>>,
}

fn mock(responses: Vec<String>) -> MockNvd {
    let listener = TcpListener::bind("127.0.0.1:0").expect("bind mock");
    let url = format!("http://{}/rest/json/cves/2.0", listener.local_addr().unwrap());
    let requests = Arc::new(Mutex::new(Vec::new()));
    let seen = Arc::clone(&requests);
    thread::spawn(move || {
        for response in responses {
            let Ok((stream, _)) = listener.accept() else { return };
            let mut reader = BufReader::new(stream);
            let mut head = String::new();
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
                    break;
                }
                head.push_str(&line);
            }
            seen.lock().unwrap().push(head);
            let mut stream = reader.into_inner();
            let _ = stream.write_all(response.as_bytes());
        }
    });
    MockNvd { url, requests }
}

fn http(status: &str, headers: &[&str], body: &str) -> String {
    let mut text = format!("HTTP/1.1 {status}\r\nContent-Type: application/json\r\nConnection: close\r\n");
    for h in headers {
        text.push_str(h);
        text.push_str("\r\n");
    }
    text.push_str(&format!("Content-Length: {}\r\n\r\n{body}", body.len()));
    text
}

fn nvd_body(id: &str, vector: &str, base: f64) -> String {
    serde_json::json!({
        "resultsPerPage": 1,
        "totalResults": 1,
        "vulnerabilities": [{
            "cve": {
                "id": id,
                "descriptions": [{"lang": "en", "value": "test record"}],
                "metrics": {"cvssMetricV31": [{
                    "source": "nvd@nist.gov",
                    "type": "Primary",
                    "cvssData": {"version": "3.1", "vectorString": vector, "baseScore": base}
                }]}
            }
        }]
    })
    .to_string()
}

const ID: &str = "CVE-2031-0042";
const VECTOR: &str = "CVSS:3.1/AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H";

#[test]
fn fetches_and_parses_record() {
    let server = mock(vec![http("200 OK", &[], &nvd_body(ID, VECTOR, 9.8))]);
    let mut client = NvdClient::new(&server.url).with_api_key("secret-key");
    let record = client.fetch(ID).unwrap();
    assert_eq!(record.cve_id, ID);
    assert_eq!(record.base_score(), Some(9.8));
    assert_eq!(record.source, CveSource::Remote);
    assert_eq!(record.description, "test record");

    let head = server.requests.lock().unwrap()[0].to_ascii_lowercase();
    assert!(
        head.starts_with(&format!("get /rest/json/cves/2.0?cveid={}", ID.to_ascii_lowercase())),
        "{head}"
    );
    assert!(head.contains("apikey: secret-key"), "{head}");
}

#[test]
fn not_found_and_empty_results() {
    let server = mock(vec![
        http("404 Not Found", &[], ""),
        http(
            "200 OK",
            &[],
            r#"{"resultsPerPage": 0, "totalResults": 0, "vulnerabilities": []}"#,
        ),
    ]);
    let mut client = NvdClient::new(&server.url);
    assert!(matches!(client.fetch(ID), Err(CveError::NotFound(_))));
    assert!(matches!(client.fetch(ID), Err(CveError::NotFound(_))));
}

#[test]
fn record_without_v31_metrics() {
    let body = serde_json::json!({
        "vulnerabilities": [{"cve": {"id": ID, "metrics": {"cvssMetricV2": []}}}]
    })
    .to_string();
    let server = mock(vec![http("200 OK", &[], &body)]);
    let mut client = NvdClient::new(&server.url);
    assert!(matches!(client.fetch(ID), Err(CveError::MissingCvssV31(_))));
}

#[test]
fn rate_limit_reports_retry_after() {
    let server = mock(vec![
        http("429 Too Many Requests", &["Retry-After: 7"], ""),
        http("403 Forbidden", &[], ""),
        http("500 Internal Server Error", &[], ""),
    ]);
    let mut client = NvdClient::new(&server.url);
    match client.fetch(ID) {
        Err(CveError::RateLimited { retry_after }) => assert_eq!(retry_after, Duration::from_secs(7)),
        other => panic!("expected rate limit, got {other:?}"),
    }
    assert!(matches!(client.fetch(ID), Err(CveError::RateLimited { .. })));
    assert!(matches!(client.fetch(ID), Err(CveError::Remote(_))));
}

#[test]
fn malformed_id_never_hits_the_network() {
    let server = mock(vec![]);
    let mut client = NvdClient::new(&server.url);
    assert!(matches!(client.fetch("CVE-12"), Err(CveError::MalformedId(_))));
    assert!(server.requests.lock().unwrap().is_empty());
}

#[test]
fn unreachable_host_is_a_remote_error() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/", listener.local_addr().unwrap());
    drop(listener);
    let mut client = NvdClient::new(url);
    assert!(matches!(client.fetch(ID), Err(CveError::Remote(_))));
}

#[test]
fn client_spaces_requests() {
    let body = nvd_body(ID, VECTOR, 9.8);
    let server = mock(vec![http("200 OK", &[], &body), http("200 OK", &[], &body)]);
    let mut client = NvdClient::new(&server.url).with_min_interval(Duration::from_millis(300));
    let start = Instant::now();
    client.fetch(ID).unwrap();
    client.fetch(ID).unwrap();
    assert!(start.elapsed() >= Duration::from_millis(300));
}

#[test]
fn store_retries_after_rate_limit_and_caches() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache.json");
    let server = mock(vec![
        http("429 Too Many Requests", &["Retry-After: 0"], ""),
        http("200 OK", &[], &nvd_body(ID, VECTOR, 9.8)),
    ]);
    let store = CveStore::empty()
        .with_cache_file(&cache)
        .unwrap()
        .with_remote(NvdClient::new(&server.url));
    let record = store.lookup(ID).unwrap();
    assert_eq!(record.base_score(), Some(9.8));
    assert_eq!(server.requests.lock().unwrap().len(), 2);

    // the cache file now answers without any server
    let cached: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&cache).unwrap()).unwrap();
    assert!(cached[ID]["fetched_at_unix"].as_u64().unwrap() > 0);
    let reopened = CveStore::empty().with_cache_file(&cache).unwrap();
    assert_eq!(reopened.lookup(ID).unwrap(), record);

    // a second lookup is served from memory
    store.lookup(ID).unwrap();
    assert_eq!(server.requests.lock().unwrap().len(), 2);
}

#[test]
fn store_gives_up_after_retry_budget() {
    let limited = http("503 Service Unavailable", &["Retry-After: 0"], "");
    let server = mock(vec![limited.clone(), limited.clone(), limited]);
    let store = CveStore::empty()
        .with_remote(NvdClient::new(&server.url))
        .with_rate_limit_retries(1);
    assert!(matches!(store.lookup(ID), Err(CveError::RateLimited { .. })));
    assert_eq!(server.requests.lock().unwrap().len(), 2);
}

#[test]
fn user_records_win_over_remote_and_bundled() {
    let dir = tempfile::tempdir().unwrap();
    let records = dir.path().join("mine.json");
    std::fs::write(
        &records,
        format!(
            r#"[{{"cve_id": "{ID}", "vector": "AV:L/AC:L/PR:L/UI:N/S:U/C:L/I:N/A:N"}},
                {{"cve_id": "CVE-2017-7921", "published_base": 4.2}}]"#
        ),
    )
    .unwrap();
    let server = mock(vec![http("200 OK", &[], &nvd_body(ID, VECTOR, 9.8))]);
    let mut store = CveStore::offline().with_remote(NvdClient::new(&server.url));
    assert_eq!(store.import_records(&records).unwrap(), 2);

    let mine = store.lookup(ID).unwrap();
    assert_eq!(mine.source, CveSource::User);
    assert_eq!(mine.base_score(), Some(3.3));
    assert_eq!(store.lookup("CVE-2017-7921").unwrap().base_score(), Some(4.2));
    assert_eq!(store.lookup("CVE-2020-10937").unwrap().source, CveSource::Bundled);
    assert!(server.requests.lock().unwrap().is_empty());
}

#[test]
fn import_counts_and_rejects() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.json");
    let records: Vec<serde_json::Value> = (1..=5)
        .map(|i| serde_json::json!({"cve_id": format!("CVE-2040-{i:04}"), "published_base": i as f64}))
        .collect();
    std::fs::write(&good, serde_json::to_string(&records).unwrap()).unwrap();
    let mut store = CveStore::empty();
    assert_eq!(store.import_records(&good).unwrap(), 5);
    assert_eq!(store.lookup("CVE-2040-0003").unwrap().base_score(), Some(3.0));

    let inconsistent = dir.path().join("bad.json");
    std::fs::write(
        &inconsistent,
        r#"[{"cve_id": "CVE-2040-0009", "vector": "AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H", "published_base": 5.0}]"#,
    )
    .unwrap();
    assert!(matches!(
        CveStore::empty().import_records(&inconsistent),
        Err(CveError::Validation { index: 0, .. })
    ));
    assert!(matches!(
        CveStore::empty().import_records(dir.path().join("absent.json")),
        Err(CveError::File { .. })
    ));
}
