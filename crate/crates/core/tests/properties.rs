mod common;

use std::collections::BTreeMap;

use gridres::network::{build_modified_ieee33, BusId, Network};
use gridres::resilience::{baseline_reference, plan_restoration, resilience_score, EvalConfig, MetricPolicy};
use gridres::service::{evaluate_service, ServicePolicy};
use proptest::prelude::*;

use common::{attack_from_indices, relabel, relabel_attack};

fn attacked(buses: &[usize], lines: &[usize]) -> Network {
    let net = build_modified_ieee33();
    net.apply_attack(&attack_from_indices(&net, buses, lines)).unwrap()
}

fn grid_component_size(net: &Network) -> usize {
    net.partition_islands()
        .iter()
        .find(|i| i.has_grid_source)
        .map_or(0, |i| i.buses.len())
}

fn subsets(ids: &[String]) -> Vec<Vec<String>> {
    (0u32..1 << ids.len())
        .map(|m| {
            ids.iter()
                .enumerate()
                .filter(|(i, _)| m & (1 << i) != 0)
                .map(|(_, s)| s.clone())
                .collect()
        })
        .collect()
}

fn closable(net: &Network) -> Vec<String> {
    net.open_switches()
        .into_iter()
        .filter(|id| {
            let s = net.switch(id).unwrap();
            net.is_active(s.from_bus) && net.is_active(s.to_bus)
        })
        .collect()
}

prop_compose! {
    fn attack_indices()(
        buses in prop::collection::vec(0usize..33, 0..=2),
        lines in prop::collection::vec(0usize..32, 0..=4),
    ) -> (Vec<usize>, Vec<usize>) {
        (buses, lines)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn policies_are_ordered((buses, lines) in attack_indices()) {
        let net = attacked(&buses, &lines);
        let [g, d, c] = ServicePolicy::ALL.map(|p| evaluate_service(&net, p).e_cl);
        prop_assert!(g <= d && d <= c, "{g} {d} {c}");
        prop_assert!((0.0..=1.0).contains(&g) && (0.0..=1.0).contains(&c));
    }

    #[test]
    fn closing_switches_never_shrinks_the_grid_island((buses, lines) in attack_indices()) {
        let net = attacked(&buses, &lines);
        let ids = closable(&net);
        let sizes: BTreeMap<Vec<String>, usize> = subsets(&ids)
            .into_iter()
            .map(|s| {
                let size = grid_component_size(&net.close_switches(&s).unwrap());
                (s, size)
            })
            .collect();
        for (set, size) in &sizes {
            for extra in ids.iter().filter(|id| !set.contains(id)) {
                let mut bigger = set.clone();
                bigger.push(extra.clone());
                bigger.sort();
                prop_assert!(sizes[&bigger] >= *size, "{set:?} + {extra}");
            }
        }
    }

    #[test]
    fn grid_only_service_is_monotone_in_switches((buses, lines) in attack_indices()) {
        let net = attacked(&buses, &lines);
        let ids = closable(&net);
        let before = evaluate_service(&net, ServicePolicy::GridOnly).e_cl;
        let after = evaluate_service(&net.close_switches(&ids).unwrap(), ServicePolicy::GridOnly).e_cl;
        prop_assert!(after >= before);
    }

    #[test]
    fn scores_stay_in_unit_interval((buses, lines) in attack_indices()) {
        let reference = baseline_reference(&build_modified_ieee33()).unwrap();
        let net = attacked(&buses, &lines);
        for metric_policy in [MetricPolicy::FullGraph, MetricPolicy::GridComponent] {
            let cfg = EvalConfig { metric_policy, ..EvalConfig::default() };
            let s = resilience_score(&net, &reference, &cfg);
            prop_assert!((0.0..=1.0).contains(&s.r));
            prop_assert!(s.terms.as_array().iter().all(|t| (0.0..=1.0).contains(t)));
        }
    }

    #[test]
    fn restoration_is_best_in_service((buses, lines) in attack_indices()) {
        let reference = baseline_reference(&build_modified_ieee33()).unwrap();
        let net = attacked(&buses, &lines);
        let cfg = EvalConfig::default();
        let plan = plan_restoration(&net, &reference, &cfg).unwrap();
        let before = resilience_score(&net, &reference, &cfg);
        prop_assert!(plan.post_r.e_cl >= before.e_cl);
        for set in subsets(&closable(&net)) {
            let e = evaluate_service(&net.close_switches(&set).unwrap(), cfg.policy).e_cl;
            prop_assert!(e <= plan.post_r.e_cl + 1e-12);
        }
    }

    #[test]
    fn bus_relabelling_changes_nothing(
        (buses, lines) in attack_indices(),
        perm in Just((1..=33u32).collect::<Vec<BusId>>()).prop_shuffle(),
    ) {
        let net = build_modified_ieee33();
        let map: BTreeMap<BusId, BusId> = (1..=33u32).zip(perm.iter().map(|p| p * 7 + 100)).collect();
        let renamed = relabel(&net, &map);
        renamed.validate().unwrap();

        let attack = attack_from_indices(&net, &buses, &lines);
        let hit = net.apply_attack(&attack).unwrap();
        let hit_renamed = renamed.apply_attack(&relabel_attack(&attack, &map)).unwrap();

        let cfg = EvalConfig::default();
        let a = resilience_score(&hit, &baseline_reference(&net).unwrap(), &cfg);
        let b = resilience_score(&hit_renamed, &baseline_reference(&renamed).unwrap(), &cfg);
        prop_assert_eq!(a.e_cl, b.e_cl);
        prop_assert!((a.r - b.r).abs() < 1e-9, "{} vs {}", a.r, b.r);
        for policy in ServicePolicy::ALL {
            prop_assert_eq!(
                evaluate_service(&hit, policy).served,
                evaluate_service(&hit_renamed, policy).served
            );
        }
    }
}
