#![allow(dead_code)]

use std::collections::BTreeMap;

use gridres::network::{AttackAction, BusId, LineKey, Network};
use rand::seq::index::sample;
use rand::Rng;

/// Attack built from indices into the network's bus and line lists.
pub fn attack_from_indices(net: &Network, buses: &[usize], lines: &[usize]) -> AttackAction {
    AttackAction {
        disabled_buses: buses.iter().map(|&i| net.buses[i % net.buses.len()].id).collect(),
        disabled_lines: lines.iter().map(|&i| net.lines[i % net.lines.len()].key()).collect(),
        cve_ref: None,
    }
}

/// Up to two disabled buses and up to four disabled lines, drawn uniformly.
pub fn random_attack<R: Rng>(rng: &mut R, net: &Network) -> AttackAction {
    let nb = rng.gen_range(0..=2);
    let nl = rng.gen_range(if nb == 0 { 1 } else { 0 }..=4);
    let buses = sample(rng, net.buses.len(), nb).into_vec();
    let lines = sample(rng, net.lines.len(), nl).into_vec();
    attack_from_indices(net, &buses, &lines)
}

/// Rename every bus through `map`; switch, DER and load ids are untouched.
pub fn relabel(net: &Network, map: &BTreeMap<BusId, BusId>) -> Network {
    let mut out = net.clone();
    for b in &mut out.buses {
        b.id = map[&b.id];
    }
    for l in &mut out.lines {
        l.from_bus = map[&l.from_bus];
        l.to_bus = map[&l.to_bus];
    }
    for d in &mut out.ders {
        d.bus = map[&d.bus];
    }
    for c in &mut out.critical_loads {
        c.bus = map[&c.bus];
    }
    for s in &mut out.tie_switches {
        s.from_bus = map[&s.from_bus];
        s.to_bus = map[&s.to_bus];
    }
    out.grid_source_bus = map[&out.grid_source_bus];
    out.disabled_buses = out.disabled_buses.iter().map(|b| map[b]).collect();
    out
}

pub fn relabel_attack(attack: &AttackAction, map: &BTreeMap<BusId, BusId>) -> AttackAction {
    AttackAction {
        disabled_buses: attack.disabled_buses.iter().map(|b| map[b]).collect(),
        disabled_lines: attack
            .disabled_lines
            .iter()
            .map(|k| {
                let (a, b) = k.ends();
                LineKey::new(map[&a], map[&b])
            })
            .collect(),
        cve_ref: attack.cve_ref.clone(),
    }
}
