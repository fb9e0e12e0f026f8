//! Physical network model: buses, lines, DERs, critical loads and tie
//! switches, plus the pure state transitions used by the scenarios
//! (attack application, switch closure, island decomposition).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::GraphView;

pub type BusId = u32;

#[derive(Debug, Error)]
pub enum NetworkError {
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
    #[error("invalid network: {0}")]
    Invariant(String),
    #[error("unknown bus {0}")]
    UnknownBus(BusId),
    #[error("unknown line {0}")]
    UnknownLine(LineKey),
    #[error("unknown tie switch {0}")]
    UnknownSwitch(String),
    #[error("tie switch {switch} has disabled endpoint bus {bus}")]
    SwitchEndpointDisabled { switch: String, bus: BusId },
}

/// Unordered bus pair identifying a line. Always stored as (low, high).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LineKey(BusId, BusId);

impl LineKey {
    pub fn new(a: BusId, b: BusId) -> Self {
        if a <= b {
            LineKey(a, b)
        } else {
            LineKey(b, a)
        }
    }

    pub fn ends(self) -> (BusId, BusId) {
        (self.0, self.1)
    }
}

impl fmt::Display for LineKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.0, self.1)
    }
}

impl Serialize for LineKey {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.0, self.1].serialize(s)
    }
}

impl<'de> Deserialize<'de> for LineKey {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [a, b] = <[BusId; 2]>::deserialize(d)?;
        Ok(LineKey::new(a, b))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: BusId,
    #[serde(rename = "p_kw")]
    pub base_load_p: f64,
    #[serde(rename = "q_kvar")]
    pub base_load_q: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LineStatus {
    #[default]
    InService,
    Disabled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    #[serde(rename = "from")]
    pub from_bus: BusId,
    #[serde(rename = "to")]
    pub to_bus: BusId,
    #[serde(default, skip_serializing_if = "is_in_service")]
    pub status: LineStatus,
}

fn is_in_service(s: &LineStatus) -> bool {
    *s == LineStatus::InService
}

impl Line {
    pub fn key(&self) -> LineKey {
        LineKey::new(self.from_bus, self.to_bus)
    }

    pub fn in_service(&self) -> bool {
        self.status == LineStatus::InService
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Der {
    pub id: String,
    pub bus: BusId,
    #[serde(rename = "p_kw")]
    pub capacity_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalLoad {
    pub id: String,
    pub bus: BusId,
    #[serde(rename = "p_kw")]
    pub demand_p: f64,
    #[serde(rename = "q_kvar")]
    pub demand_q: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SwitchState {
    #[default]
    Open,
    Closed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TieSwitch {
    pub id: String,
    #[serde(rename = "from")]
    pub from_bus: BusId,
    #[serde(rename = "to")]
    pub to_bus: BusId,
    #[serde(default, skip_serializing_if = "is_open")]
    pub state: SwitchState,
}

fn is_open(s: &SwitchState) -> bool {
    *s == SwitchState::Open
}

impl TieSwitch {
    pub fn is_closed(&self) -> bool {
        self.state == SwitchState::Closed
    }
}

/// A distribution network. Disabled buses are dropped from `buses` and
/// remembered in `disabled_buses` so DERs and critical loads located on
/// them stay resolvable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub buses: Vec<Bus>,
    pub lines: Vec<Line>,
    pub ders: Vec<Der>,
    pub critical_loads: Vec<CriticalLoad>,
    pub tie_switches: Vec<TieSwitch>,
    pub grid_source_bus: BusId,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub disabled_buses: BTreeSet<BusId>,
}

/// Elements taken out of service by an attack.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackAction {
    #[serde(default)]
    pub disabled_buses: BTreeSet<BusId>,
    #[serde(default)]
    pub disabled_lines: BTreeSet<LineKey>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cve_ref: Option<String>,
}

impl AttackAction {
    pub fn is_empty(&self) -> bool {
        self.disabled_buses.is_empty() && self.disabled_lines.is_empty()
    }
}

/// Connected component of the graph view with its aggregated supply and demand.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Island {
    pub buses: BTreeSet<BusId>,
    pub has_grid_source: bool,
    pub der_capacity_p: f64,
    pub total_load_p: f64,
    pub critical_loads: BTreeSet<String>,
}

const IEEE33_LOADS: [(f64, f64); 33] = [
    (0.0, 0.0),
    (100.0, 60.0),
    (90.0, 40.0),
    (120.0, 80.0),
    (60.0, 30.0),
    (60.0, 20.0),
    (200.0, 100.0),
    (200.0, 100.0),
    (60.0, 20.0),
    (60.0, 20.0),
    (45.0, 30.0),
    (60.0, 35.0),
    (60.0, 35.0),
    (120.0, 80.0),
    (60.0, 10.0),
    (60.0, 20.0),
    (60.0, 20.0),
    (90.0, 40.0),
    (90.0, 40.0),
    (90.0, 40.0),
    (90.0, 40.0),
    (90.0, 40.0),
    (90.0, 50.0),
    (420.0, 200.0),
    (420.0, 200.0),
    (60.0, 25.0),
    (60.0, 25.0),
    (60.0, 20.0),
    (120.0, 70.0),
    (200.0, 600.0),
    (150.0, 70.0),
    (210.0, 100.0),
    (60.0, 40.0),
];

/// The 33-bus radial feeder (Baran & Wu base loads) with four DERs, four
/// critical loads and four normally-open tie switches.
pub fn build_modified_ieee33() -> Network {
    let buses = IEEE33_LOADS
        .iter()
        .enumerate()
        .map(|(i, &(p, q))| Bus {
            id: i as BusId + 1,
            base_load_p: p,
            base_load_q: q,
        })
        .collect();

    let mut pairs: Vec<(BusId, BusId)> = (1..18).map(|i| (i, i + 1)).collect();
    pairs.extend([(2, 19), (19, 20), (20, 21), (21, 22)]);
    pairs.extend([(3, 23), (23, 24), (24, 25)]);
    pairs.push((6, 26));
    pairs.extend((26..33).map(|i| (i, i + 1)));

    let lines = pairs
        .into_iter()
        .map(|(a, b)| Line {
            from_bus: a,
            to_bus: b,
            status: LineStatus::InService,
        })
        .collect();

    let ders = [(5, 720.0), (18, 800.0), (21, 760.0), (29, 800.0)]
        .into_iter()
        .enumerate()
        .map(|(i, (bus, p))| Der {
            id: format!("DER-{}", i + 1),
            bus,
            capacity_p: p,
        })
        .collect();

    let critical_loads = [
        (7, 200.0, 100.0),
        (14, 120.0, 80.0),
        (24, 1420.0, 200.0),
        (31, 150.0, 70.0),
    ]
    .into_iter()
    .enumerate()
    .map(|(i, (bus, p, q))| CriticalLoad {
        id: format!("CL-{}", i + 1),
        bus,
        demand_p: p,
        demand_q: q,
    })
    .collect();

    let tie_switches = [(12, 21), (9, 15), (18, 33), (25, 29)]
        .into_iter()
        .enumerate()
        .map(|(i, (a, b))| TieSwitch {
            id: format!("SW{}", i + 1),
            from_bus: a,
            to_bus: b,
            state: SwitchState::Open,
        })
        .collect();

    Network {
        buses,
        lines,
        ders,
        critical_loads,
        tie_switches,
        grid_source_bus: 1,
        disabled_buses: BTreeSet::new(),
    }
}

/// JSON of the bundled 33-bus system, identical to [`build_modified_ieee33`].
pub const IEEE33_JSON: &str = include_str!("../data/ieee33.json");

pub fn load_network(path: impl AsRef<Path>) -> Result<Network, NetworkError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| NetworkError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_network(&text, &path.display().to_string())
}

/// Parse and validate a network document. `origin` is used in error messages.
pub fn parse_network(text: &str, origin: &str) -> Result<Network, NetworkError> {
    let network: Network = serde_json::from_str(text).map_err(|source| NetworkError::Parse {
        path: origin.to_string(),
        source,
    })?;
    network.validate()?;
    Ok(network)
}

impl Network {
    pub fn validate(&self) -> Result<(), NetworkError> {
        let fail = |msg: String| Err(NetworkError::Invariant(msg));

        let mut ids = BTreeSet::new();
        for bus in &self.buses {
            if !ids.insert(bus.id) {
                return fail(format!("duplicate bus id {}", bus.id));
            }
            if self.disabled_buses.contains(&bus.id) {
                return fail(format!("bus {} is both active and disabled", bus.id));
            }
            if !(bus.base_load_p >= 0.0 && bus.base_load_q >= 0.0) {
                return fail(format!("bus {} has a negative load", bus.id));
            }
        }
        let known = |b: BusId| ids.contains(&b) || self.disabled_buses.contains(&b);

        let mut pairs = BTreeSet::new();
        for line in &self.lines {
            if line.from_bus == line.to_bus {
                return fail(format!("line {} is a self-loop", line.key()));
            }
            for b in [line.from_bus, line.to_bus] {
                if !ids.contains(&b) {
                    return fail(format!("line {} references missing bus {b}", line.key()));
                }
            }
            if !pairs.insert(line.key()) {
                return fail(format!("duplicate line {}", line.key()));
            }
        }

        let mut der_ids = BTreeSet::new();
        for der in &self.ders {
            if !der_ids.insert(der.id.as_str()) {
                return fail(format!("duplicate DER id {}", der.id));
            }
            if !known(der.bus) {
                return fail(format!("DER {} references missing bus {}", der.id, der.bus));
            }
            if der.capacity_p.is_nan() || der.capacity_p <= 0.0 {
                return fail(format!("DER {} capacity must be positive", der.id));
            }
        }

        let mut cl_ids = BTreeSet::new();
        for cl in &self.critical_loads {
            if !cl_ids.insert(cl.id.as_str()) {
                return fail(format!("duplicate critical load id {}", cl.id));
            }
            if !known(cl.bus) {
                return fail(format!("critical load {} references missing bus {}", cl.id, cl.bus));
            }
            if cl.demand_p.is_nan() || cl.demand_p <= 0.0 {
                return fail(format!("critical load {} demand must be positive", cl.id));
            }
            if cl.demand_q.is_nan() || cl.demand_q < 0.0 {
                return fail(format!("critical load {} reactive demand is negative", cl.id));
            }
        }

        let mut sw_ids = BTreeSet::new();
        for sw in &self.tie_switches {
            if !sw_ids.insert(sw.id.as_str()) {
                return fail(format!("duplicate tie switch id {}", sw.id));
            }
            if sw.from_bus == sw.to_bus {
                return fail(format!("tie switch {} connects bus {} to itself", sw.id, sw.from_bus));
            }
            for b in [sw.from_bus, sw.to_bus] {
                if !known(b) {
                    return fail(format!("tie switch {} references missing bus {b}", sw.id));
                }
            }
        }

        if !known(self.grid_source_bus) {
            return fail(format!("grid source bus {} does not exist", self.grid_source_bus));
        }
        Ok(())
    }

    pub fn bus(&self, id: BusId) -> Option<&Bus> {
        self.buses.iter().find(|b| b.id == id)
    }

    pub fn is_active(&self, id: BusId) -> bool {
        self.bus(id).is_some()
    }

    pub fn switch(&self, id: &str) -> Option<&TieSwitch> {
        self.tie_switches.iter().find(|s| s.id == id)
    }

    pub fn total_critical_demand(&self) -> f64 {
        self.critical_loads.iter().map(|c| c.demand_p).sum()
    }

    /// Ids of tie switches currently open, sorted.
    pub fn open_switches(&self) -> Vec<String> {
        let mut ids: Vec<String> = self
            .tie_switches
            .iter()
            .filter(|s| !s.is_closed())
            .map(|s| s.id.clone())
            .collect();
        ids.sort();
        ids
    }

    /// Intact and unswitched: no disabled buses or lines, every tie switch open.
    pub fn is_standard_mode(&self) -> bool {
        self.disabled_buses.is_empty()
            && self.lines.iter().all(Line::in_service)
            && self.tie_switches.iter().all(|s| !s.is_closed())
    }

    pub fn apply_attack(&self, action: &AttackAction) -> Result<Network, NetworkError> {
        for &b in &action.disabled_buses {
            if !self.is_active(b) {
                return Err(NetworkError::UnknownBus(b));
            }
        }
        for key in &action.disabled_lines {
            if !self.lines.iter().any(|l| l.key() == *key) {
                return Err(NetworkError::UnknownLine(*key));
            }
        }

        let down = &action.disabled_buses;
        let mut next = self.clone();
        next.buses.retain(|b| !down.contains(&b.id));
        next.lines
            .retain(|l| !down.contains(&l.from_bus) && !down.contains(&l.to_bus));
        for line in &mut next.lines {
            if action.disabled_lines.contains(&line.key()) {
                line.status = LineStatus::Disabled;
            }
        }
        for sw in &mut next.tie_switches {
            if down.contains(&sw.from_bus) || down.contains(&sw.to_bus) {
                sw.state = SwitchState::Open;
            }
        }
        next.disabled_buses.extend(down.iter().copied());
        Ok(next)
    }

    pub fn close_switches<S: AsRef<str>>(&self, switch_ids: &[S]) -> Result<Network, NetworkError> {
        let mut next = self.clone();
        for id in switch_ids {
            let id = id.as_ref();
            let sw = next
                .tie_switches
                .iter_mut()
                .find(|s| s.id == id)
                .ok_or_else(|| NetworkError::UnknownSwitch(id.to_string()))?;
            for bus in [sw.from_bus, sw.to_bus] {
                if self.disabled_buses.contains(&bus) {
                    return Err(NetworkError::SwitchEndpointDisabled {
                        switch: id.to_string(),
                        bus,
                    });
                }
            }
            sw.state = SwitchState::Closed;
        }
        Ok(next)
    }

    /// Undirected simple graph over active buses: in-service lines plus closed switches.
    pub fn graph_view(&self) -> GraphView {
        let vertices: Vec<BusId> = self.buses.iter().map(|b| b.id).collect();
        let lines = self
            .lines
            .iter()
            .filter(|l| l.in_service())
            .map(|l| (l.from_bus, l.to_bus));
        let switches = self
            .tie_switches
            .iter()
            .filter(|s| s.is_closed() && self.is_active(s.from_bus) && self.is_active(s.to_bus))
            .map(|s| (s.from_bus, s.to_bus));
        GraphView::from_edges(vertices, lines.chain(switches)).expect("validated network yields a simple graph")
    }

    pub fn partition_islands(&self) -> Vec<Island> {
        let graph = self.graph_view();
        let load: BTreeMap<BusId, f64> = self.buses.iter().map(|b| (b.id, b.base_load_p)).collect();

        graph
            .components()
            .into_iter()
            .map(|component| {
                let buses: BTreeSet<BusId> = component.iter().map(|&i| graph.vertex(i)).collect();
                let der_capacity_p = self
                    .ders
                    .iter()
                    .filter(|d| buses.contains(&d.bus))
                    .fold(0.0, |acc, d| acc + d.capacity_p);
                let member_cls: Vec<&CriticalLoad> =
                    self.critical_loads.iter().filter(|c| buses.contains(&c.bus)).collect();
                let total_load_p = buses.iter().fold(0.0, |acc, b| acc + load[b])
                    + member_cls.iter().fold(0.0, |acc, c| acc + c.demand_p);
                Island {
                    has_grid_source: buses.contains(&self.grid_source_bus),
                    critical_loads: member_cls.iter().map(|c| c.id.clone()).collect(),
                    buses,
                    der_capacity_p,
                    total_load_p,
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn attack(buses: &[BusId], lines: &[(BusId, BusId)]) -> AttackAction {
        AttackAction {
            disabled_buses: buses.iter().copied().collect(),
            disabled_lines: lines.iter().map(|&(a, b)| LineKey::new(a, b)).collect(),
            cve_ref: None,
        }
    }

    fn grid_island(net: &Network) -> Island {
        net.partition_islands().into_iter().find(|i| i.has_grid_source).unwrap()
    }

    fn range(a: BusId, b: BusId) -> BTreeSet<BusId> {
        (a..=b).collect()
    }

    #[test]
    fn bundled_system_shape() {
        let net = build_modified_ieee33();
        net.validate().unwrap();
        assert_eq!(net.buses.len(), 33);
        assert_eq!(net.lines.iter().filter(|l| l.in_service()).count(), 32);
        assert_eq!(net.ders.len(), 4);
        assert_eq!(net.critical_loads.len(), 4);
        assert_eq!(net.open_switches().len(), 4);
        assert_eq!(net.total_critical_demand(), 1890.0);
        assert_eq!(net.buses.iter().map(|b| b.base_load_p).sum::<f64>(), 3715.0);
        assert_eq!(net.buses.iter().map(|b| b.base_load_q).sum::<f64>(), 2300.0);
        let islands = net.partition_islands();
        assert_eq!(islands.len(), 1);
        assert!(islands[0].has_grid_source);
        assert_eq!(islands[0].critical_loads.len(), 4);
        assert!(net.is_standard_mode());
    }

    #[test]
    fn bundled_json_matches_builder() {
        let parsed = parse_network(IEEE33_JSON, "ieee33.json").unwrap();
        assert_eq!(parsed, build_modified_ieee33());
    }

    #[test]
    fn validation_rejects_duplicate_bus() {
        let mut net = build_modified_ieee33();
        net.buses.push(net.buses[3].clone());
        let err = net.validate().unwrap_err().to_string();
        assert!(err.contains("duplicate bus id 4"), "{err}");
    }

    #[test]
    fn validation_rejects_missing_bus_reference() {
        let mut net = build_modified_ieee33();
        net.lines.push(Line {
            from_bus: 3,
            to_bus: 99,
            status: LineStatus::InService,
        });
        let err = net.validate().unwrap_err().to_string();
        assert!(err.contains("missing bus 99"), "{err}");
    }

    #[test]
    fn validation_rules() {
        let base = build_modified_ieee33();
        type Mutation = Box<dyn Fn(&mut Network)>;
        let cases: Vec<(Mutation, &str)> = vec![
            (Box::new(|n| n.buses[0].base_load_p = -1.0), "negative load"),
            (Box::new(|n| n.lines[0].to_bus = n.lines[0].from_bus), "self-loop"),
            (
                Box::new(|n| {
                    n.lines.push(Line {
                        from_bus: 2,
                        to_bus: 1,
                        status: LineStatus::InService,
                    })
                }),
                "duplicate line",
            ),
            (Box::new(|n| n.ders[0].capacity_p = 0.0), "capacity must be positive"),
            (
                Box::new(|n| n.critical_loads[0].demand_p = 0.0),
                "demand must be positive",
            ),
            (
                Box::new(|n| n.critical_loads[1].id = "CL-1".into()),
                "duplicate critical load",
            ),
            (Box::new(|n| n.tie_switches[0].to_bus = 12), "to itself"),
            (Box::new(|n| n.grid_source_bus = 40), "grid source"),
        ];
        for (mutate, needle) in cases {
            let mut net = base.clone();
            mutate(&mut net);
            let err = net.validate().unwrap_err().to_string();
            assert!(err.contains(needle), "{err} should mention {needle}");
        }
    }

    #[test]
    fn parse_error_has_location() {
        let err = parse_network("{\"buses\": [ {\"id\": 1} ]}", "bad.json").unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("bad.json") && msg.contains("p_kw") && msg.contains("line 1"),
            "{msg}"
        );
    }

    #[test]
    fn disable_bus_30() {
        let net = build_modified_ieee33();
        let hit = net.apply_attack(&attack(&[30], &[])).unwrap();
        assert_eq!(hit.buses.len(), 32);
        assert!(!hit.lines.iter().any(|l| l.key() == LineKey::new(29, 30)));
        assert!(!hit.lines.iter().any(|l| l.key() == LineKey::new(30, 31)));
        let grid = grid_island(&hit);
        assert!(range(31, 33).iter().all(|b| !grid.buses.contains(b)));
        // input untouched
        assert_eq!(net, build_modified_ieee33());

        let islands = hit.partition_islands();
        assert_eq!(islands.len(), 2);
        let orphan = islands.iter().find(|i| !i.has_grid_source).unwrap();
        assert_eq!(orphan.buses, range(31, 33));
        assert_eq!(orphan.der_capacity_p, 0.0);
        assert_eq!(orphan.critical_loads, BTreeSet::from(["CL-4".to_string()]));
    }

    #[test]
    fn disable_line_6_7() {
        let hit = build_modified_ieee33().apply_attack(&attack(&[], &[(7, 6)])).unwrap();
        let grid = grid_island(&hit);
        assert!(range(7, 18).iter().all(|b| !grid.buses.contains(b)));
        assert_eq!(hit.graph_view().components().len(), 2);
        let cut = hit
            .partition_islands()
            .into_iter()
            .find(|i| !i.has_grid_source)
            .unwrap();
        assert_eq!(cut.buses, range(7, 18));
        assert_eq!(cut.total_load_p, 1075.0 + 320.0);
        assert_eq!(cut.der_capacity_p, 800.0);
    }

    #[test]
    fn disable_line_11_12() {
        let hit = build_modified_ieee33().apply_attack(&attack(&[], &[(11, 12)])).unwrap();
        let cut = hit
            .partition_islands()
            .into_iter()
            .find(|i| !i.has_grid_source)
            .unwrap();
        assert_eq!(cut.buses, range(12, 18));
        assert_eq!(cut.der_capacity_p, 800.0);
        assert_eq!(cut.critical_loads, BTreeSet::from(["CL-2".to_string()]));
        assert_eq!(cut.total_load_p, 630.0);
    }

    #[test]
    fn empty_attack_is_identity() {
        let net = build_modified_ieee33();
        assert_eq!(net.apply_attack(&AttackAction::default()).unwrap(), net);
        assert_eq!(net.close_switches::<&str>(&[]).unwrap(), net);
    }

    #[test]
    fn attack_rejects_unknown_elements() {
        let net = build_modified_ieee33();
        assert!(matches!(
            net.apply_attack(&attack(&[99], &[])),
            Err(NetworkError::UnknownBus(99))
        ));
        assert!(matches!(
            net.apply_attack(&attack(&[], &[(1, 3)])),
            Err(NetworkError::UnknownLine(_))
        ));
    }

    #[test]
    fn closing_sw3_reconnects_case1() {
        let hit = build_modified_ieee33().apply_attack(&attack(&[30], &[])).unwrap();
        let restored = hit.close_switches(&["SW3"]).unwrap();
        let grid = grid_island(&restored);
        assert!(range(31, 33).iter().all(|b| grid.buses.contains(b)));
        assert_eq!(restored.partition_islands().len(), 1);
    }

    #[test]
    fn case4_needs_sw1_and_sw4() {
        let hit = build_modified_ieee33()
            .apply_attack(&attack(&[], &[(3, 23), (5, 6)]))
            .unwrap();
        let restored = hit.close_switches(&["SW1", "SW4"]).unwrap();
        assert_eq!(grid_island(&restored).critical_loads.len(), 4);
        let partial = hit.close_switches(&["SW1"]).unwrap();
        assert_eq!(grid_island(&partial).critical_loads.len(), 3);
    }

    #[test]
    fn close_switch_errors() {
        let net = build_modified_ieee33();
        assert!(matches!(
            net.close_switches(&["SW9"]),
            Err(NetworkError::UnknownSwitch(_))
        ));
        let hit = net.apply_attack(&attack(&[33], &[])).unwrap();
        assert!(matches!(
            hit.close_switches(&["SW3"]),
            Err(NetworkError::SwitchEndpointDisabled { bus: 33, .. })
        ));
    }

    #[test]
    fn closing_one_switch_adds_one_cycle() {
        let g = build_modified_ieee33().close_switches(&["SW1"]).unwrap().graph_view();
        assert_eq!(g.len(), 33);
        assert_eq!(g.edge_count(), 33);
        // connected graph with |E| = |V| has exactly one independent cycle
        assert!(g.is_connected());
    }

    #[test]
    fn intact_graph_is_a_tree() {
        let g = build_modified_ieee33().graph_view();
        assert_eq!(g.len(), 33);
        assert_eq!(g.edge_count(), 32);
        assert!(g.is_connected());
    }

    #[test]
    fn disabled_critical_load_bus_drops_out_of_islands() {
        let hit = build_modified_ieee33().apply_attack(&attack(&[24], &[])).unwrap();
        hit.validate().unwrap();
        let all: BTreeSet<String> = hit
            .partition_islands()
            .into_iter()
            .flat_map(|i| i.critical_loads)
            .collect();
        assert!(!all.contains("CL-3"));
        assert_eq!(hit.total_critical_demand(), 1890.0);
    }
}
