//! Attack scenario files.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cvss::CvssVector;
use crate::network::AttackAction;
use crate::service::ServicePolicy;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to parse {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("scenario `{name}`: {message}")]
    Invalid { name: String, message: String },
}

/// Where the scenario's CVSS vector comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CvssSource {
    Cve(String),
    Vector(CvssVector),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub attack: AttackAction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cve: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cvss_vector: Option<CvssVector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<ServicePolicy>,
}

impl Scenario {
    pub fn cvss_source(&self) -> Result<CvssSource, ScenarioError> {
        match (&self.cve, &self.cvss_vector) {
            (Some(id), None) => Ok(CvssSource::Cve(id.clone())),
            (None, Some(v)) => Ok(CvssSource::Vector(*v)),
            (Some(_), Some(_)) => Err(self.invalid("give either `cve` or `cvss_vector`, not both")),
            (None, None) => Err(self.invalid("one of `cve` or `cvss_vector` is required")),
        }
    }

    fn invalid(&self, message: &str) -> ScenarioError {
        ScenarioError::Invalid {
            name: self.name.clone(),
            message: message.to_string(),
        }
    }
}

pub fn parse_scenario(text: &str, origin: &str) -> Result<Scenario, ScenarioError> {
    let scenario: Scenario = serde_json::from_str(text).map_err(|source| ScenarioError::Parse {
        path: origin.to_string(),
        source,
    })?;
    scenario.cvss_source()?;
    Ok(scenario)
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario(&text, &path.display().to_string())
}

/// The four bundled case studies, in order.
pub fn bundled_scenarios() -> Vec<Scenario> {
    [
        include_str!("../data/scenarios/case1.json"),
        include_str!("../data/scenarios/case2.json"),
        include_str!("../data/scenarios/case3.json"),
        include_str!("../data/scenarios/case4.json"),
    ]
    .iter()
    .enumerate()
    .map(|(i, text)| parse_scenario(text, &format!("case{}.json", i + 1)).expect("bundled scenario"))
    .collect()
}
