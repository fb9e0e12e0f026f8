//! Critical-load service after islanding, and the critical-load-served ratio.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::network::{Island, Network};

/// How a non-grid island decides which of its critical loads it can serve.
///
/// The grid island always serves every member critical load.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ServicePolicy {
    /// Islands without the grid source serve nothing.
    GridOnly,
    /// All-or-nothing: the island is served iff its DER capacity covers the
    /// whole island load (base loads plus critical demand).
    #[default]
    DerCapacity,
    /// Non-critical load is shed; critical loads are picked up in ascending
    /// demand order (ties by id) while their cumulative demand fits the DER capacity.
    CriticalPriority,
}

impl ServicePolicy {
    pub const ALL: [ServicePolicy; 3] = [Self::GridOnly, Self::DerCapacity, Self::CriticalPriority];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::GridOnly => "grid-only",
            Self::DerCapacity => "der-capacity",
            Self::CriticalPriority => "critical-priority",
        }
    }
}

impl fmt::Display for ServicePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ServicePolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown service policy `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ServiceResult {
    pub served: BTreeMap<String, bool>,
    pub e_cl: f64,
    pub islands: Vec<Island>,
}

impl ServiceResult {
    pub fn served_demand(&self, network: &Network) -> f64 {
        network
            .critical_loads
            .iter()
            .filter(|c| self.served.get(&c.id).copied().unwrap_or(false))
            .map(|c| c.demand_p)
            .sum()
    }
}

pub fn evaluate_service(network: &Network, policy: ServicePolicy) -> ServiceResult {
    let islands = network.partition_islands();
    let demand: BTreeMap<&str, f64> = network
        .critical_loads
        .iter()
        .map(|c| (c.id.as_str(), c.demand_p))
        .collect();

    // loads on disabled buses belong to no island and stay unserved
    let mut served: BTreeMap<String, bool> = network.critical_loads.iter().map(|c| (c.id.clone(), false)).collect();

    for island in &islands {
        let members = island.critical_loads.iter();
        if island.has_grid_source {
            members.for_each(|id| {
                served.insert(id.clone(), true);
            });
            continue;
        }
        match policy {
            ServicePolicy::GridOnly => {}
            ServicePolicy::DerCapacity => {
                if island.der_capacity_p >= island.total_load_p {
                    members.for_each(|id| {
                        served.insert(id.clone(), true);
                    });
                }
            }
            ServicePolicy::CriticalPriority => {
                let mut order: Vec<(&str, f64)> = members.map(|id| (id.as_str(), demand[id.as_str()])).collect();
                order.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(b.0)));
                let mut used = 0.0;
                for (id, p) in order {
                    if used + p > island.der_capacity_p {
                        break;
                    }
                    used += p;
                    served.insert(id.to_string(), true);
                }
            }
        }
    }

    let total = demand.values().fold(0.0, |acc, p| acc + p);
    let served_p = demand
        .iter()
        .filter(|(id, _)| served[**id])
        .fold(0.0, |acc, (_, p)| acc + p);
    let e_cl = if total > 0.0 { served_p / total } else { 1.0 };

    ServiceResult { served, e_cl, islands }
}
