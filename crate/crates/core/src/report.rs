//! Run reports: the JSON document and CSV projections written by the CLI.
//!
//! Resilience values, terms and metrics are rounded to four decimals on
//! output so reports are stable byte-for-byte; computation stays at full
//! precision.

use std::collections::BTreeMap;

use serde::{Serialize, Serializer};

use crate::cvss::{CvssScore, CvssVector, SeverityRating};
use crate::graph::MetricVector;
use crate::network::{BusId, Network};
use crate::resilience::{
    AttackAssessment, MetricPolicy, Phase, ResilienceScore, ResilienceTerms, RestorationPlan, TrajectoryPoint,
};
use crate::service::{ServicePolicy, ServiceResult};

fn round4(x: f64) -> f64 {
    let r = (x * 10_000.0).round() / 10_000.0;
    // avoid "-0.0" in output
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn ser4<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(round4(*x))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvssBlock {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cve: Option<String>,
    pub vector: String,
    pub base: f64,
    pub severity: SeverityRating,
    #[serde(serialize_with = "ser4")]
    pub iss: f64,
    #[serde(serialize_with = "ser4")]
    pub impact: f64,
    #[serde(serialize_with = "ser4")]
    pub exploitability: f64,
}

impl CvssBlock {
    pub fn new(cve: Option<String>, vector: &CvssVector, score: &CvssScore) -> Self {
        CvssBlock {
            cve,
            vector: vector.to_string(),
            base: score.base,
            severity: score.severity,
            iss: score.iss,
            impact: score.impact,
            exploitability: score.exploitability,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsBlock {
    #[serde(serialize_with = "ser4")]
    pub lambda2: f64,
    #[serde(serialize_with = "ser4")]
    pub avg_path_inv: f64,
    #[serde(serialize_with = "ser4")]
    pub betweenness_inv: f64,
    #[serde(serialize_with = "ser4")]
    pub diameter_inv: f64,
}

impl From<&MetricVector> for MetricsBlock {
    fn from(m: &MetricVector) -> Self {
        MetricsBlock {
            lambda2: m.lambda2,
            avg_path_inv: m.avg_path_inv,
            betweenness_inv: m.betweenness_inv,
            diameter_inv: m.diameter_inv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermsBlock {
    #[serde(serialize_with = "ser4")]
    pub lambda2: f64,
    #[serde(serialize_with = "ser4")]
    pub avg_path_inv: f64,
    #[serde(serialize_with = "ser4")]
    pub betweenness_inv: f64,
    #[serde(serialize_with = "ser4")]
    pub diameter_inv: f64,
    #[serde(serialize_with = "ser4")]
    pub e_cl: f64,
}

impl From<&ResilienceTerms> for TermsBlock {
    fn from(t: &ResilienceTerms) -> Self {
        TermsBlock {
            lambda2: t.lambda2,
            avg_path_inv: t.avg_path_inv,
            betweenness_inv: t.betweenness_inv,
            diameter_inv: t.diameter_inv,
            e_cl: t.e_cl,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ServiceRow {
    pub id: String,
    pub bus: BusId,
    pub demand_kw: f64,
    pub served: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseReport {
    pub phase: Phase,
    #[serde(serialize_with = "ser4")]
    pub r: f64,
    #[serde(serialize_with = "ser4")]
    pub e_cl: f64,
    pub terms: TermsBlock,
    pub metrics: MetricsBlock,
    pub islands: usize,
    pub service: Vec<ServiceRow>,
}

impl PhaseReport {
    fn new(phase: Phase, score: &ResilienceScore, service: &ServiceResult, network: &Network) -> Self {
        let mut rows: Vec<ServiceRow> = network
            .critical_loads
            .iter()
            .map(|c| ServiceRow {
                id: c.id.clone(),
                bus: c.bus,
                demand_kw: c.demand_p,
                served: service.served.get(&c.id).copied().unwrap_or(false),
            })
            .collect();
        rows.sort_by(|a, b| a.id.cmp(&b.id));
        PhaseReport {
            phase,
            r: score.r,
            e_cl: score.e_cl,
            terms: (&score.terms).into(),
            metrics: (&score.metrics).into(),
            islands: service.islands.len(),
            service: rows,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestorationBlock {
    pub closed_switches: Vec<String>,
    #[serde(serialize_with = "ser4")]
    pub r: f64,
    #[serde(serialize_with = "ser4")]
    pub e_cl: f64,
    pub full_service: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub phase: Phase,
    #[serde(serialize_with = "ser4")]
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub policy: ServicePolicy,
    pub metric_policy: MetricPolicy,
    pub cvss: CvssBlock,
    pub gated: bool,
    pub phases: Vec<PhaseReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restoration: Option<RestorationBlock>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub trajectory: Vec<TrajectoryRow>,
}

/// Phase of the network at each step, used to build the service tables.
pub struct PhaseInputs<'a> {
    pub base: &'a Network,
    pub pre_attack: (&'a ResilienceScore, &'a ServiceResult),
    pub restored: Option<(&'a Network, &'a RestorationPlan, &'a [TrajectoryPoint])>,
}

impl RunReport {
    pub fn build(assessment: &AttackAssessment, metric_policy: MetricPolicy, inputs: PhaseInputs<'_>) -> Self {
        let mut phases = vec![PhaseReport::new(
            Phase::PreAttack,
            inputs.pre_attack.0,
            inputs.pre_attack.1,
            inputs.base,
        )];
        if let (Some(attack), Some(attacked)) = (&assessment.attack_r, &assessment.attacked_network) {
            phases.push(PhaseReport::new(
                Phase::PostAttack,
                attack,
                &assessment.service,
                attacked,
            ));
        }

        let mut restoration = None;
        let mut trajectory = Vec::new();
        if let Some((restored, plan, points)) = inputs.restored {
            phases.push(PhaseReport::new(
                Phase::PostRestoration,
                &plan.post_r,
                &plan.post_service,
                restored,
            ));
            restoration = Some(RestorationBlock {
                closed_switches: plan.closed_switches.clone(),
                r: plan.post_r.r,
                e_cl: plan.post_r.e_cl,
                full_service: plan.post_r.e_cl >= 1.0,
            });
            trajectory = points
                .iter()
                .map(|p| TrajectoryRow { phase: p.phase, r: p.r })
                .collect();
        }

        RunReport {
            scenario: assessment.scenario.clone(),
            policy: assessment.policy,
            metric_policy,
            cvss: CvssBlock::new(assessment.cve.clone(), &assessment.vector, &assessment.cvss),
            gated: assessment.gated,
            phases,
            restoration,
            trajectory,
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }

    /// `phase,r` rows for plotting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("phase,r\n");
        let rows: Vec<(Phase, f64)> = if self.trajectory.is_empty() {
            self.phases.iter().map(|p| (p.phase, p.r)).collect()
        } else {
            self.trajectory.iter().map(|t| (t.phase, t.r)).collect()
        };
        for (phase, r) in rows {
            out.push_str(&format!("{},{:.4}\n", phase.as_str(), r));
        }
        out
    }
}

/// One row of the batch summary table.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub scenario: String,
    pub cvss_base: f64,
    pub severity: SeverityRating,
    pub gated: bool,
    pub attack_r: Option<f64>,
    pub restored_r: Option<f64>,
    pub restored_e_cl: Option<f64>,
    pub switches: Vec<String>,
}

impl From<&RunReport> for SummaryRow {
    fn from(report: &RunReport) -> Self {
        let attack = report.phases.iter().find(|p| p.phase == Phase::PostAttack);
        SummaryRow {
            scenario: report.scenario.clone(),
            cvss_base: report.cvss.base,
            severity: report.cvss.severity,
            gated: report.gated,
            attack_r: attack.map(|p| p.r),
            restored_r: report.restoration.as_ref().map(|r| r.r),
            restored_e_cl: report.restoration.as_ref().map(|r| r.e_cl),
            switches: report
                .restoration
                .as_ref()
                .map(|r| r.closed_switches.clone())
                .unwrap_or_default(),
        }
    }
}

pub const SUMMARY_HEADER: &str = "scenario,cvss_base,severity,gated,attack_r,restored_r,restored_e_cl,switches";

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let opt = |x: Option<f64>| x.map(|v| format!("{v:.4}")).unwrap_or_default();
    let mut out = format!("{SUMMARY_HEADER}\n");
    for row in rows {
        out.push_str(&format!(
            "{},{:.1},{},{},{},{},{},{}\n",
            row.scenario,
            row.cvss_base,
            row.severity,
            row.gated,
            opt(row.attack_r),
            opt(row.restored_r),
            opt(row.restored_e_cl),
            row.switches.join(";"),
        ));
    }
    out
}

/// Served flags keyed by critical load id, for quick inspection in tests.
pub fn served_map(phase: &PhaseReport) -> BTreeMap<&str, bool> {
    phase.service.iter().map(|r| (r.id.as_str(), r.served)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding() {
        assert_eq!(round4(0.920634920), 0.9206);
        assert_eq!(round4(-0.00001), 0.0);
        assert_eq!(round4(1.0), 1.0);
        assert_eq!(
            serde_json::to_string(&TrajectoryRow {
                phase: Phase::PreAttack,
                r: 1.0 / 3.0
            })
            .unwrap(),
            r#"{"phase":"pre-attack","r":0.3333}"#
        );
    }

    #[test]
    fn summary_formatting() {
        let rows = vec![SummaryRow {
            scenario: "case1".into(),
            cvss_base: 7.5,
            severity: SeverityRating::High,
            gated: true,
            attack_r: Some(0.38412),
            restored_r: Some(0.9),
            restored_e_cl: Some(1.0),
            switches: vec!["SW3".into()],
        }];
        assert_eq!(
            summary_csv(&rows),
            format!("{SUMMARY_HEADER}\ncase1,7.5,High,true,0.3841,0.9000,1.0000,SW3\n")
        );
    }
}
