//! Cyber-attack resilience assessment for radial power distribution feeders.
//!
//! A network is modelled as an undirected graph of buses. Attacks disable
//! buses or lines; their severity comes from a CVSS v3.1 base score. When the
//! score is High or Critical the damaged network is scored on four
//! topological metrics and on the share of critical load still served, and
//! tie switches are searched for the closure set that best restores service.

pub mod cli;
pub mod cve;
pub mod cvss;
pub mod eigen;
pub mod graph;
pub mod network;
pub mod report;
pub mod resilience;
pub mod scenario;
pub mod service;

pub use cvss::{base_score, parse_vector, CvssScore, CvssVector, SeverityRating};
pub use graph::{GraphView, MetricVector};
pub use network::{build_modified_ieee33, load_network, AttackAction, Network};
pub use resilience::{
    baseline_reference, evaluate_attack, plan_restoration, resilience_score, resilience_trajectory, EvalConfig,
    MetricPolicy,
};
pub use service::{evaluate_service, ServicePolicy, ServiceResult};
