//! CVSS v3.1 base metrics: vector parsing, base-score equations and the
//! qualitative severity scale.
//!
//! Only the Base metric group is modelled. Temporal and Environmental
//! metrics are rejected by the parser.
//!
//! Reference: <https://www.first.org/cvss/v3.1/specification-document>

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub const VECTOR_PREFIX: &str = "CVSS:3.1";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CvssError {
    #[error("missing metric {0}")]
    MissingMetric(&'static str),
    #[error("duplicate metric in token `{0}`")]
    DuplicateMetric(String),
    #[error("illegal value in token `{0}`")]
    IllegalValue(String),
    #[error("unknown metric in token `{0}`")]
    UnknownMetric(String),
    #[error("malformed token `{0}`")]
    MalformedToken(String),
    #[error("unsupported version prefix `{0}`")]
    UnsupportedVersion(String),
    #[error("score {0} outside [0, 10]")]
    ScoreOutOfRange(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AttackVector {
    Network,
    Adjacent,
    Local,
    Physical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AttackComplexity {
    Low,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PrivilegesRequired {
    None,
    Low,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UserInteraction {
    None,
    Required,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scope {
    Unchanged,
    Changed,
}

/// Confidentiality, Integrity and Availability impact level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ImpactLevel {
    None,
    Low,
    High,
}

impl AttackVector {
    pub const ALL: [Self; 4] = [Self::Network, Self::Adjacent, Self::Local, Self::Physical];

    pub fn weight(self) -> f64 {
        match self {
            Self::Network => 0.85,
            Self::Adjacent => 0.62,
            Self::Local => 0.55,
            Self::Physical => 0.2,
        }
    }

    fn code(self) -> char {
        match self {
            Self::Network => 'N',
            Self::Adjacent => 'A',
            Self::Local => 'L',
            Self::Physical => 'P',
        }
    }
}

impl AttackComplexity {
    pub const ALL: [Self; 2] = [Self::Low, Self::High];

    pub fn weight(self) -> f64 {
        match self {
            Self::Low => 0.77,
            Self::High => 0.44,
        }
    }

    fn code(self) -> char {
        match self {
            Self::Low => 'L',
            Self::High => 'H',
        }
    }
}

impl PrivilegesRequired {
    pub const ALL: [Self; 3] = [Self::None, Self::Low, Self::High];

    /// PR weight depends on scope: Low and High weigh more when scope changes.
    pub fn weight(self, scope: Scope) -> f64 {
        match (self, scope) {
            (Self::None, _) => 0.85,
            (Self::Low, Scope::Unchanged) => 0.62,
            (Self::Low, Scope::Changed) => 0.68,
            (Self::High, Scope::Unchanged) => 0.27,
            (Self::High, Scope::Changed) => 0.50,
        }
    }

    fn code(self) -> char {
        match self {
            Self::None => 'N',
            Self::Low => 'L',
            Self::High => 'H',
        }
    }
}

impl UserInteraction {
    pub const ALL: [Self; 2] = [Self::None, Self::Required];

    pub fn weight(self) -> f64 {
        match self {
            Self::None => 0.85,
            Self::Required => 0.62,
        }
    }

    fn code(self) -> char {
        match self {
            Self::None => 'N',
            Self::Required => 'R',
        }
    }
}

impl Scope {
    pub const ALL: [Self; 2] = [Self::Unchanged, Self::Changed];

    fn code(self) -> char {
        match self {
            Self::Unchanged => 'U',
            Self::Changed => 'C',
        }
    }
}

impl ImpactLevel {
    pub const ALL: [Self; 3] = [Self::None, Self::Low, Self::High];

    pub fn weight(self) -> f64 {
        match self {
            Self::None => 0.0,
            Self::Low => 0.22,
            Self::High => 0.56,
        }
    }

    fn code(self) -> char {
        match self {
            Self::None => 'N',
            Self::Low => 'L',
            Self::High => 'H',
        }
    }
}

/// The eight CVSS v3.1 base metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CvssVector {
    pub attack_vector: AttackVector,
    pub attack_complexity: AttackComplexity,
    pub privileges_required: PrivilegesRequired,
    pub user_interaction: UserInteraction,
    pub scope: Scope,
    pub confidentiality: ImpactLevel,
    pub integrity: ImpactLevel,
    pub availability: ImpactLevel,
}

const METRIC_KEYS: [&str; 8] = ["AV", "AC", "PR", "UI", "S", "C", "I", "A"];

/// Parse a base vector string such as `CVSS:3.1/AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H`.
///
/// The version prefix is optional and metrics may appear in any order.
/// Keys are case-insensitive; values are upper-cased before matching.
pub fn parse_vector(text: &str) -> Result<CvssVector, CvssError> {
    let mut slots: [Option<char>; 8] = [None; 8];

    for token in text.trim().split('/') {
        if token.is_empty() {
            return Err(CvssError::MalformedToken(token.to_string()));
        }
        let Some((key, value)) = token.split_once(':') else {
            return Err(CvssError::MalformedToken(token.to_string()));
        };
        let key = key.trim().to_ascii_uppercase();
        let value = value.trim().to_ascii_uppercase();

        if key == "CVSS" {
            if value != "3.1" {
                return Err(CvssError::UnsupportedVersion(token.to_string()));
            }
            continue;
        }

        let Some(slot) = METRIC_KEYS.iter().position(|k| *k == key) else {
            return Err(CvssError::UnknownMetric(token.to_string()));
        };
        let mut chars = value.chars();
        let (Some(code), None) = (chars.next(), chars.next()) else {
            return Err(CvssError::IllegalValue(token.to_string()));
        };
        if !legal_code(slot, code) {
            return Err(CvssError::IllegalValue(token.to_string()));
        }
        if slots[slot].is_some() {
            return Err(CvssError::DuplicateMetric(token.to_string()));
        }
        slots[slot] = Some(code);
    }

    let get = |i: usize| slots[i].ok_or(CvssError::MissingMetric(METRIC_KEYS[i]));
    let impact = |c: char| match c {
        'H' => ImpactLevel::High,
        'L' => ImpactLevel::Low,
        _ => ImpactLevel::None,
    };

    Ok(CvssVector {
        attack_vector: match get(0)? {
            'N' => AttackVector::Network,
            'A' => AttackVector::Adjacent,
            'L' => AttackVector::Local,
            _ => AttackVector::Physical,
        },
        attack_complexity: match get(1)? {
            'L' => AttackComplexity::Low,
            _ => AttackComplexity::High,
        },
        privileges_required: match get(2)? {
            'N' => PrivilegesRequired::None,
            'L' => PrivilegesRequired::Low,
            _ => PrivilegesRequired::High,
        },
        user_interaction: match get(3)? {
            'N' => UserInteraction::None,
            _ => UserInteraction::Required,
        },
        scope: match get(4)? {
            'U' => Scope::Unchanged,
            _ => Scope::Changed,
        },
        confidentiality: impact(get(5)?),
        integrity: impact(get(6)?),
        availability: impact(get(7)?),
    })
}

fn legal_code(slot: usize, code: char) -> bool {
    let legal: &[char] = match slot {
        0 => &['N', 'A', 'L', 'P'],
        1 => &['L', 'H'],
        2 => &['N', 'L', 'H'],
        3 => &['N', 'R'],
        4 => &['U', 'C'],
        _ => &['H', 'L', 'N'],
    };
    legal.contains(&code)
}

impl CvssVector {
    /// Every base vector, in a fixed nested order (3888 entries).
    pub fn all() -> impl Iterator<Item = CvssVector> {
        let mut out = Vec::with_capacity(3888);
        for av in AttackVector::ALL {
            for ac in AttackComplexity::ALL {
                for pr in PrivilegesRequired::ALL {
                    for ui in UserInteraction::ALL {
                        for s in Scope::ALL {
                            for c in ImpactLevel::ALL {
                                for i in ImpactLevel::ALL {
                                    for a in ImpactLevel::ALL {
                                        out.push(CvssVector {
                                            attack_vector: av,
                                            attack_complexity: ac,
                                            privileges_required: pr,
                                            user_interaction: ui,
                                            scope: s,
                                            confidentiality: c,
                                            integrity: i,
                                            availability: a,
                                        });
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        out.into_iter()
    }

    pub fn score(&self) -> CvssScore {
        base_score(self)
    }
}

impl fmt::Display for CvssVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{VECTOR_PREFIX}/AV:{}/AC:{}/PR:{}/UI:{}/S:{}/C:{}/I:{}/A:{}",
            self.attack_vector.code(),
            self.attack_complexity.code(),
            self.privileges_required.code(),
            self.user_interaction.code(),
            self.scope.code(),
            self.confidentiality.code(),
            self.integrity.code(),
            self.availability.code(),
        )
    }
}

impl FromStr for CvssVector {
    type Err = CvssError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_vector(s)
    }
}

impl Serialize for CvssVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CvssVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        parse_vector(&text).map_err(serde::de::Error::custom)
    }
}

/// Qualitative severity rating.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SeverityRating {
    None,
    Low,
    Medium,
    High,
    Critical,
}

impl SeverityRating {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::None => "None",
            Self::Low => "Low",
            Self::Medium => "Medium",
            Self::High => "High",
            Self::Critical => "Critical",
        }
    }
}

impl fmt::Display for SeverityRating {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Map a base score onto the severity bands.
///
/// Scores are one-decimal values, so band edges are compared at 0.05 offsets
/// to stay robust to representation error (e.g. 6.9 vs 6.8999999).
pub fn severity(base: f64) -> Result<SeverityRating, CvssError> {
    if !(0.0..=10.0).contains(&base) || base.is_nan() {
        return Err(CvssError::ScoreOutOfRange(base));
    }
    Ok(if base < 0.05 {
        SeverityRating::None
    } else if base < 3.95 {
        SeverityRating::Low
    } else if base < 6.95 {
        SeverityRating::Medium
    } else if base < 8.95 {
        SeverityRating::High
    } else {
        SeverityRating::Critical
    })
}

/// Smallest one-decimal number not below `x`, using the integer technique
/// that avoids floating-point artefacts such as `roundup(4.000000000000001)`.
pub fn roundup(x: f64) -> f64 {
    let scaled = (x * 100_000.0).round() as i64;
    if scaled % 10_000 == 0 {
        scaled as f64 / 100_000.0
    } else {
        (scaled.div_euclid(10_000) + 1) as f64 / 10.0
    }
}

/// Computed base score together with its sub-scores.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvssScore {
    pub iss: f64,
    pub impact: f64,
    pub exploitability: f64,
    pub base: f64,
    pub severity: SeverityRating,
}

pub fn base_score(v: &CvssVector) -> CvssScore {
    let iss = 1.0 - (1.0 - v.confidentiality.weight()) * (1.0 - v.integrity.weight()) * (1.0 - v.availability.weight());

    let impact = match v.scope {
        Scope::Unchanged => 6.42 * iss,
        Scope::Changed => 7.52 * (iss - 0.029) - 3.25 * pow15(iss - 0.02),
    };

    let exploitability = 8.22
        * v.attack_vector.weight()
        * v.attack_complexity.weight()
        * v.privileges_required.weight(v.scope)
        * v.user_interaction.weight();

    let base = if impact <= 0.0 {
        0.0
    } else {
        match v.scope {
            Scope::Unchanged => roundup((impact + exploitability).min(10.0)),
            Scope::Changed => roundup((1.08 * (impact + exploitability)).min(10.0)),
        }
    };

    CvssScore {
        iss,
        impact,
        exploitability,
        base,
        // base is always within [0, 10] by construction
        severity: severity(base).unwrap_or(SeverityRating::Critical),
    }
}

/// x^15 by repeated squaring (x^8 * x^4 * x^2 * x) so the result does not
/// depend on the platform `powi`/`powf` implementation.
fn pow15(x: f64) -> f64 {
    let x2 = x * x;
    let x4 = x2 * x2;
    let x8 = x4 * x4;
    x8 * x4 * x2 * x
}
