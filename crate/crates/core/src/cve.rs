//! CVE record store: bundled seed records, user imports, an on-disk cache
//! and an optional NVD CVE API 2.0 client.
//!
//! Lookup order is user imports, then cache, then bundled seed records,
//! then the remote API (when enabled). Remote results are written to the
//! cache and never replace user-imported records.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cvss::{parse_vector, CvssError, CvssVector};

pub const NVD_API_URL: &str = "https://services.nvd.nist.gov/rest/json/cves/2.0";
pub const NVD_API_KEY_ENV: &str = "NVD_API_KEY";

/// Seed records shipped with the crate.
pub const CVE_SEED_JSON: &str = include_str!("../data/cve_seed.json");

#[derive(Debug, Error)]
pub enum CveError {
    #[error("malformed CVE id `{0}`")]
    MalformedId(String),
    #[error("{0} not found")]
    NotFound(String),
    #[error("rate limited by remote service, retry after {retry_after:?}")]
    RateLimited { retry_after: Duration },
    #[error("remote request failed: {0}")]
    Remote(String),
    #[error("{0} has no CVSS v3.1 data")]
    MissingCvssV31(String),
    #[error("record {index}: {message}")]
    Validation { index: usize, message: String },
    #[error("invalid CVSS vector: {0}")]
    Vector(#[from] CvssError),
    #[error("{path}: {message}")]
    File { path: String, message: String },
}

impl CveError {
    pub fn is_retriable(&self) -> bool {
        matches!(self, CveError::RateLimited { .. })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CveSource {
    Bundled,
    Remote,
    #[default]
    User,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CveRecord {
    pub cve_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vector: Option<CvssVector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub published_base: Option<f64>,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub source: CveSource,
}

impl CveRecord {
    /// Base score, recomputed from the vector when present.
    pub fn base_score(&self) -> Option<f64> {
        self.vector.map(|v| v.score().base).or(self.published_base)
    }

    pub fn validate(&self) -> Result<(), String> {
        if !is_valid_cve_id(&self.cve_id) {
            return Err(format!("malformed CVE id `{}`", self.cve_id));
        }
        match (self.vector, self.published_base) {
            (None, None) => Err(format!("{} has neither vector nor published_base", self.cve_id)),
            (Some(v), Some(published)) if !same_one_decimal(v.score().base, published) => Err(format!(
                "{}: vector scores {} but published_base is {published}",
                self.cve_id,
                v.score().base
            )),
            (_, Some(p)) if !(0.0..=10.0).contains(&p) => {
                Err(format!("{}: published_base {p} outside [0, 10]", self.cve_id))
            }
            _ => Ok(()),
        }
    }
}

fn same_one_decimal(a: f64, b: f64) -> bool {
    (a * 10.0).round() == (b * 10.0).round()
}

/// `CVE-YYYY-NNNN` with at least four sequence digits.
pub fn is_valid_cve_id(id: &str) -> bool {
    let mut parts = id.split('-');
    matches!(
        (parts.next(), parts.next(), parts.next(), parts.next()),
        (Some("CVE"), Some(year), Some(seq), None)
            if year.len() == 4
                && year.bytes().all(|b| b.is_ascii_digit())
                && seq.len() >= 4
                && seq.bytes().all(|b| b.is_ascii_digit())
    )
}

fn parse_records(text: &str, origin: &str) -> Result<Vec<CveRecord>, CveError> {
    let raw: Vec<serde_json::Value> = serde_json::from_str(text).map_err(|e| CveError::File {
        path: origin.to_string(),
        message: e.to_string(),
    })?;
    raw.into_iter()
        .enumerate()
        .map(|(index, value)| {
            let record: CveRecord = serde_json::from_value(value).map_err(|e| CveError::Validation {
                index,
                message: e.to_string(),
            })?;
            record
                .validate()
                .map_err(|message| CveError::Validation { index, message })?;
            Ok(record)
        })
        .collect()
}

pub fn bundled_records() -> Vec<CveRecord> {
    parse_records(CVE_SEED_JSON, "cve_seed.json").expect("bundled CVE seed file is valid")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CacheEntry {
    record: CveRecord,
    fetched_at_unix: u64,
}

/// Record lookup with layered sources. Cache writes go through one lock.
pub struct CveStore {
    user: BTreeMap<String, CveRecord>,
    bundled: BTreeMap<String, CveRecord>,
    cache: Mutex<BTreeMap<String, CacheEntry>>,
    cache_path: Option<PathBuf>,
    remote: Option<Mutex<NvdClient>>,
    max_rate_limit_retries: u32,
}

impl Default for CveStore {
    fn default() -> Self {
        Self::offline()
    }
}

impl CveStore {
    /// Bundled records only, no cache file, no network.
    pub fn offline() -> Self {
        CveStore {
            user: BTreeMap::new(),
            bundled: bundled_records().into_iter().map(|r| (r.cve_id.clone(), r)).collect(),
            cache: Mutex::new(BTreeMap::new()),
            cache_path: None,
            remote: None,
            max_rate_limit_retries: 2,
        }
    }

    /// Empty store with no bundled records.
    pub fn empty() -> Self {
        CveStore {
            bundled: BTreeMap::new(),
            ..Self::offline()
        }
    }

    /// Attach a JSON cache file, loading it if it exists.
    pub fn with_cache_file(mut self, path: impl Into<PathBuf>) -> Result<Self, CveError> {
        let path = path.into();
        if path.exists() {
            let text = std::fs::read_to_string(&path).map_err(|e| CveError::File {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            let entries: BTreeMap<String, CacheEntry> = serde_json::from_str(&text).map_err(|e| CveError::File {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            *self.cache.get_mut().expect("cache lock") = entries;
        }
        self.cache_path = Some(path);
        Ok(self)
    }

    pub fn with_remote(mut self, client: NvdClient) -> Self {
        self.remote = Some(Mutex::new(client));
        self
    }

    pub fn with_rate_limit_retries(mut self, retries: u32) -> Self {
        self.max_rate_limit_retries = retries;
        self
    }

    /// Merge a JSON array of records as user imports. Returns the count imported.
    pub fn import_records(&mut self, path: impl AsRef<Path>) -> Result<usize, CveError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| CveError::File {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        self.import_json(&text, &path.display().to_string())
    }

    pub fn import_json(&mut self, text: &str, origin: &str) -> Result<usize, CveError> {
        let records = parse_records(text, origin)?;
        let count = records.len();
        for mut record in records {
            record.source = CveSource::User;
            self.user.insert(record.cve_id.clone(), record);
        }
        Ok(count)
    }

    pub fn lookup(&self, cve_id: &str) -> Result<CveRecord, CveError> {
        if !is_valid_cve_id(cve_id) {
            return Err(CveError::MalformedId(cve_id.to_string()));
        }
        if let Some(r) = self.user.get(cve_id) {
            return Ok(r.clone());
        }
        if let Some(e) = self.cache.lock().expect("cache lock").get(cve_id) {
            return Ok(e.record.clone());
        }
        if let Some(r) = self.bundled.get(cve_id) {
            return Ok(r.clone());
        }
        let Some(remote) = &self.remote else {
            return Err(CveError::NotFound(cve_id.to_string()));
        };

        let mut attempts = 0;
        let record = loop {
            let result = remote.lock().expect("client lock").fetch(cve_id);
            match result {
                Err(CveError::RateLimited { retry_after }) if attempts < self.max_rate_limit_retries => {
                    attempts += 1;
                    std::thread::sleep(retry_after.min(Duration::from_secs(30)));
                }
                other => break other?,
            }
        };

        self.store_in_cache(record.clone())?;
        Ok(record)
    }

    fn store_in_cache(&self, record: CveRecord) -> Result<(), CveError> {
        let mut cache = self.cache.lock().expect("cache lock");
        let fetched_at_unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        cache.insert(
            record.cve_id.clone(),
            CacheEntry {
                record,
                fetched_at_unix,
            },
        );
        if let Some(path) = &self.cache_path {
            let text = serde_json::to_string_pretty(&*cache).expect("cache serializes");
            std::fs::write(path, text).map_err(|e| CveError::File {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
        }
        Ok(())
    }
}

/// Blocking NVD CVE API 2.0 client with a minimum spacing between requests.
pub struct NvdClient {
    agent: ureq::Agent,
    base_url: String,
    api_key: Option<String>,
    min_interval: Duration,
    last_request: Option<Instant>,
}

impl NvdClient {
    /// Public endpoint, API key from `NVD_API_KEY` when set.
    pub fn from_env() -> Self {
        let mut client = Self::new(NVD_API_URL);
        client.api_key = std::env::var(NVD_API_KEY_ENV).ok().filter(|k| !k.is_empty());
        // NVD allows 5 requests / 30 s without a key and 50 / 30 s with one
        client.min_interval = if client.api_key.is_some() {
            Duration::from_millis(600)
        } else {
            Duration::from_secs(6)
        };
        client
    }

    pub fn new(base_url: impl Into<String>) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(30)))
            .build()
            .into();
        NvdClient {
            agent,
            base_url: base_url.into(),
            api_key: None,
            min_interval: Duration::ZERO,
            last_request: None,
        }
    }

    pub fn with_api_key(mut self, key: impl Into<String>) -> Self {
        self.api_key = Some(key.into());
        self
    }

    pub fn with_min_interval(mut self, interval: Duration) -> Self {
        self.min_interval = interval;
        self
    }

    pub fn fetch(&mut self, cve_id: &str) -> Result<CveRecord, CveError> {
        if !is_valid_cve_id(cve_id) {
            return Err(CveError::MalformedId(cve_id.to_string()));
        }
        if let Some(last) = self.last_request {
            let wait = self.min_interval.saturating_sub(last.elapsed());
            if !wait.is_zero() {
                std::thread::sleep(wait);
            }
        }
        self.last_request = Some(Instant::now());

        let url = format!("{}?cveId={}", self.base_url, cve_id);
        let mut request = self.agent.get(&url);
        if let Some(key) = &self.api_key {
            request = request.header("apiKey", key);
        }
        let mut response = request.call().map_err(|e| CveError::Remote(e.to_string()))?;

        let status = response.status().as_u16();
        match status {
            200 => {}
            404 => return Err(CveError::NotFound(cve_id.to_string())),
            403 | 429 | 503 => {
                let retry_after = response
                    .headers()
                    .get("retry-after")
                    .and_then(|v| v.to_str().ok())
                    .and_then(|v| v.trim().parse::<u64>().ok())
                    .map(Duration::from_secs)
                    .unwrap_or(Duration::from_secs(30));
                return Err(CveError::RateLimited { retry_after });
            }
            other => return Err(CveError::Remote(format!("HTTP {other}"))),
        }

        let body = response
            .body_mut()
            .read_to_string()
            .map_err(|e| CveError::Remote(e.to_string()))?;
        parse_nvd_response(&body, cve_id)
    }
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct NvdResponse {
    #[serde(default)]
    vulnerabilities: Vec<NvdVulnerability>,
}

#[derive(Deserialize)]
struct NvdVulnerability {
    cve: NvdCve,
}

#[derive(Deserialize)]
struct NvdCve {
    id: String,
    #[serde(default)]
    descriptions: Vec<NvdDescription>,
    #[serde(default)]
    metrics: NvdMetrics,
}

#[derive(Deserialize)]
struct NvdDescription {
    lang: String,
    value: String,
}

#[derive(Deserialize, Default)]
#[serde(rename_all = "camelCase")]
struct NvdMetrics {
    #[serde(default)]
    cvss_metric_v31: Vec<NvdCvssMetric>,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct NvdCvssMetric {
    #[serde(rename = "type", default)]
    kind: String,
    cvss_data: NvdCvssData,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct NvdCvssData {
    vector_string: String,
    base_score: f64,
}

/// Extract a record from an NVD 2.0 `cves` response body.
pub fn parse_nvd_response(body: &str, cve_id: &str) -> Result<CveRecord, CveError> {
    let response: NvdResponse =
        serde_json::from_str(body).map_err(|e| CveError::Remote(format!("bad NVD response: {e}")))?;
    let cve = response
        .vulnerabilities
        .into_iter()
        .map(|v| v.cve)
        .find(|c| c.id == cve_id)
        .ok_or_else(|| CveError::NotFound(cve_id.to_string()))?;

    let metrics = cve.metrics.cvss_metric_v31;
    let metric = metrics
        .iter()
        .find(|m| m.kind == "Primary")
        .or_else(|| metrics.first())
        .ok_or_else(|| CveError::MissingCvssV31(cve_id.to_string()))?;
    let vector = parse_vector(&metric.cvss_data.vector_string)?;

    let description = cve
        .descriptions
        .iter()
        .find(|d| d.lang == "en")
        .or_else(|| cve.descriptions.first())
        .map(|d| d.value.clone())
        .unwrap_or_default();

    let record = CveRecord {
        cve_id: cve.id,
        vector: Some(vector),
        published_base: Some(metric.cvss_data.base_score),
        description,
        source: CveSource::Remote,
    };
    record.validate().map_err(CveError::Remote)?;
    Ok(record)
}
