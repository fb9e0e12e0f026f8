//! Composite resilience score, CVSS gating and tie-switch restoration search.
//!
//! Each of the five terms (λ2, 1/L, 1/C_AB, 1/D, E_CL) is divided by its
//! standard-mode value and clamped to [0, 1]; R is the mean of the five.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cve::{CveError, CveStore};
use crate::cvss::{CvssScore, CvssVector, SeverityRating};
use crate::graph::{metric_vector, GraphError, GraphView, MetricVector};
use crate::network::{Network, NetworkError};
use crate::scenario::{CvssSource, Scenario, ScenarioError};
use crate::service::{evaluate_service, ServicePolicy, ServiceResult};

/// Base score at which an attack is evaluated (start of the High band).
pub const DEFAULT_GATE_THRESHOLD: f64 = 7.0;

/// r values closer than this are treated as equal when ranking restoration plans.
const SCORE_EPSILON: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ResilienceError {
    #[error("network is not in standard mode: {0}")]
    NotStandardMode(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Cve(#[from] CveError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("scenario `{0}` was not gated; no trajectory")]
    NotGated(String),
}

/// Which vertices the topological metrics are computed over.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricPolicy {
    /// Every surviving bus; fragmentation drives L and D to infinity.
    #[default]
    FullGraph,
    /// Only the component holding the grid source.
    GridComponent,
}

impl MetricPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::FullGraph => "full-graph",
            Self::GridComponent => "grid-component",
        }
    }
}

impl fmt::Display for MetricPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full-graph" => Ok(Self::FullGraph),
            "grid-component" => Ok(Self::GridComponent),
            _ => Err(format!("unknown metric policy `{s}`")),
        }
    }
}

/// Tunables shared by every evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConfig {
    pub policy: ServicePolicy,
    pub metric_policy: MetricPolicy,
    pub gate_threshold: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            policy: ServicePolicy::default(),
            metric_policy: MetricPolicy::default(),
            gate_threshold: DEFAULT_GATE_THRESHOLD,
        }
    }
}

/// Standard-mode values every term is normalised against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceVector {
    pub metrics: MetricVector,
    pub e_cl: f64,
}

pub fn baseline_reference(network: &Network) -> Result<ReferenceVector, ResilienceError> {
    if !network.disabled_buses.is_empty() {
        return Err(ResilienceError::NotStandardMode("buses are disabled".into()));
    }
    if network.lines.iter().any(|l| !l.in_service()) {
        return Err(ResilienceError::NotStandardMode("lines are disabled".into()));
    }
    if let Some(sw) = network.tie_switches.iter().find(|s| s.is_closed()) {
        return Err(ResilienceError::NotStandardMode(format!(
            "tie switch {} is closed",
            sw.id
        )));
    }
    let graph = network.graph_view();
    if !graph.is_connected() {
        return Err(ResilienceError::NotStandardMode("network is disconnected".into()));
    }
    let metrics = metric_vector(&graph, 1.0)?;
    if metrics.as_array().iter().any(|&x| x.is_nan() || x <= 0.0) {
        return Err(ResilienceError::NotStandardMode(
            "baseline metrics must all be positive".into(),
        ));
    }
    let service = evaluate_service(network, ServicePolicy::GridOnly);
    Ok(ReferenceVector {
        metrics,
        e_cl: service.e_cl,
    })
}

/// The five normalised, clamped terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResilienceTerms {
    pub lambda2: f64,
    pub avg_path_inv: f64,
    pub betweenness_inv: f64,
    pub diameter_inv: f64,
    pub e_cl: f64,
}

impl ResilienceTerms {
    pub fn as_array(&self) -> [f64; 5] {
        [
            self.lambda2,
            self.avg_path_inv,
            self.betweenness_inv,
            self.diameter_inv,
            self.e_cl,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResilienceScore {
    pub r: f64,
    pub terms: ResilienceTerms,
    /// Un-normalised metric vector of the evaluated network.
    pub metrics: MetricVector,
    pub e_cl: f64,
}

fn ratio(current: f64, baseline: f64) -> f64 {
    (current / baseline).clamp(0.0, 1.0)
}

fn metric_graph(network: &Network, policy: MetricPolicy) -> GraphView {
    let graph = network.graph_view();
    match policy {
        MetricPolicy::FullGraph => graph,
        MetricPolicy::GridComponent => match graph.index_of(network.grid_source_bus) {
            Some(source) => {
                let component = graph
                    .components()
                    .into_iter()
                    .find(|c| c.contains(&source))
                    .unwrap_or_default();
                graph.induced(&component.iter().map(|&i| graph.vertex(i)).collect())
            }
            None => GraphView::from_edges([], []).expect("empty graph"),
        },
    }
}

/// Score a network and return the service evaluation used for E_CL.
pub fn score_with_service(
    network: &Network,
    reference: &ReferenceVector,
    config: &EvalConfig,
) -> (ResilienceScore, ServiceResult) {
    let service = evaluate_service(network, config.policy);
    let graph = metric_graph(network, config.metric_policy);

    // fewer than two surviving vertices: no structure left to score
    let metrics = metric_vector(&graph, reference.metrics.betweenness_inv).unwrap_or(MetricVector {
        lambda2: 0.0,
        avg_path_inv: 0.0,
        betweenness_inv: 0.0,
        diameter_inv: 0.0,
    });

    let base = &reference.metrics;
    let terms = ResilienceTerms {
        lambda2: ratio(metrics.lambda2, base.lambda2),
        avg_path_inv: ratio(metrics.avg_path_inv, base.avg_path_inv),
        betweenness_inv: ratio(metrics.betweenness_inv, base.betweenness_inv),
        diameter_inv: ratio(metrics.diameter_inv, base.diameter_inv),
        e_cl: ratio(service.e_cl, reference.e_cl),
    };
    let r = terms.as_array().iter().sum::<f64>() / 5.0;

    (
        ResilienceScore {
            r,
            terms,
            metrics,
            e_cl: service.e_cl,
        },
        service,
    )
}

pub fn resilience_score(network: &Network, reference: &ReferenceVector, config: &EvalConfig) -> ResilienceScore {
    score_with_service(network, reference, config).0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackAssessment {
    pub scenario: String,
    pub cve: Option<String>,
    pub vector: CvssVector,
    #[serde(skip)]
    pub cvss: CvssScore,
    pub severity: SeverityRating,
    pub policy: ServicePolicy,
    pub gated: bool,
    pub pre_attack_r: f64,
    pub attack_r: Option<ResilienceScore>,
    pub service: ServiceResult,
    #[serde(skip)]
    pub attacked_network: Option<Network>,
}

/// Resolve the scenario's CVSS vector to a score; gate on severity; when
/// gated, apply the attack and score the damaged network.
pub fn evaluate_attack(
    network: &Network,
    scenario: &Scenario,
    store: &CveStore,
    config: &EvalConfig,
) -> Result<AttackAssessment, ResilienceError> {
    let (cve, vector) = match scenario.cvss_source()? {
        CvssSource::Cve(id) => {
            let record = store.lookup(&id)?;
            let vector = record.vector.ok_or_else(|| ScenarioError::Invalid {
                name: scenario.name.clone(),
                message: format!("{id} has no CVSS vector to score"),
            })?;
            (Some(id), vector)
        }
        CvssSource::Vector(v) => (None, v),
    };
    let cvss = vector.score();

    // validate the attack against the network even when it will not be applied
    let attacked = network.apply_attack(&scenario.attack)?;
    let reference = baseline_reference(network)?;

    let config = EvalConfig {
        policy: scenario.policy.unwrap_or(config.policy),
        ..*config
    };
    let gated = cvss.base >= config.gate_threshold - SCORE_EPSILON;

    let (attack_r, service, attacked_network) = if gated {
        let (score, service) = score_with_service(&attacked, &reference, &config);
        (Some(score), service, Some(attacked))
    } else {
        (None, evaluate_service(network, config.policy), None)
    };

    Ok(AttackAssessment {
        scenario: scenario.name.clone(),
        cve,
        vector,
        cvss,
        severity: cvss.severity,
        policy: config.policy,
        gated,
        pre_attack_r: 1.0,
        attack_r,
        service,
        attacked_network,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestorationPlan {
    pub closed_switches: Vec<String>,
    pub post_r: ResilienceScore,
    pub post_service: ServiceResult,
}

/// Exhaustive search over subsets of closable open tie switches.
///
/// Ranking: highest E_CL, then most buses connected to the grid source,
/// then fewest switches, then highest R, then the lexicographically
/// smallest sorted id list.
pub fn plan_restoration(
    attacked: &Network,
    reference: &ReferenceVector,
    config: &EvalConfig,
) -> Result<RestorationPlan, ResilienceError> {
    let candidates: Vec<String> = attacked
        .open_switches()
        .into_iter()
        .filter(|id| {
            attacked
                .switch(id)
                .is_some_and(|s| attacked.is_active(s.from_bus) && attacked.is_active(s.to_bus))
        })
        .collect();
    assert!(
        candidates.len() < 20,
        "subset search is exponential in the switch count"
    );

    let mut best: Option<RestorationPlan> = None;
    for mask in 0u32..(1 << candidates.len()) {
        let chosen: Vec<String> = candidates
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, id)| id.clone())
            .collect();
        let network = attacked.close_switches(&chosen)?;
        let (post_r, post_service) = score_with_service(&network, reference, config);
        let plan = RestorationPlan {
            closed_switches: chosen,
            post_r,
            post_service,
        };
        best = match best {
            Some(current) if rank(&current, &plan) != Ordering::Less => Some(current),
            _ => Some(plan),
        };
    }
    Ok(best.expect("the empty closure is always a candidate"))
}

impl RestorationPlan {
    /// Buses in the island that holds the grid source.
    pub fn energized_buses(&self) -> usize {
        self.post_service
            .islands
            .iter()
            .find(|i| i.has_grid_source)
            .map_or(0, |i| i.buses.len())
    }
}

/// `Greater` when `a` is the better plan.
fn rank(a: &RestorationPlan, b: &RestorationPlan) -> Ordering {
    let by_score = |x: f64, y: f64| {
        if (x - y).abs() <= SCORE_EPSILON {
            Ordering::Equal
        } else {
            x.total_cmp(&y)
        }
    };
    by_score(a.post_r.e_cl, b.post_r.e_cl)
        .then_with(|| a.energized_buses().cmp(&b.energized_buses()))
        .then_with(|| b.closed_switches.len().cmp(&a.closed_switches.len()))
        .then_with(|| by_score(a.post_r.r, b.post_r.r))
        .then_with(|| b.closed_switches.cmp(&a.closed_switches))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    PreAttack,
    PostAttack,
    PostRestoration,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::PreAttack => "pre-attack",
            Self::PostAttack => "post-attack",
            Self::PostRestoration => "post-restoration",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub phase: Phase,
    pub r: f64,
}

pub fn resilience_trajectory(
    assessment: &AttackAssessment,
    plan: &RestorationPlan,
) -> Result<Vec<TrajectoryPoint>, ResilienceError> {
    let attack = assessment
        .attack_r
        .as_ref()
        .filter(|_| assessment.gated)
        .ok_or_else(|| ResilienceError::NotGated(assessment.scenario.clone()))?;
    Ok(vec![
        TrajectoryPoint {
            phase: Phase::PreAttack,
            r: assessment.pre_attack_r,
        },
        TrajectoryPoint {
            phase: Phase::PostAttack,
            r: attack.r,
        },
        TrajectoryPoint {
            phase: Phase::PostRestoration,
            r: plan.post_r.r,
        },
    ])
}
