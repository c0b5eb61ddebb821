mod common;

use std::collections::BTreeSet;

use neuromap_core::fabric::{FabricConfig, RouterLevel};
use neuromap_core::netmodel::{remove_neurons, NetworkModel};
use neuromap_core::placer::{
    assign_cores, compile, compute_distance_map, distance_from_count, extra_hardware_neurons,
    CoreAssignment,
};
use proptest::prelude::*;

use common::{canonical, is_mutual_clique, network};

#[test]
fn distance_formula_table() {
    // floor(n/e)+1 written out by hand for n = 4
    let expected = [(1, 5), (2, 3), (3, 2), (4, 2), (5, 1), (8, 1)];
    for (e, d) in expected {
        assert_eq!(distance_from_count(4, e), d, "e = {e}");
    }
    assert_eq!(distance_from_count(4, 0), -1);
}

#[test]
fn canonical_size_four_uses_populations() {
    let net = canonical();
    let a = assign_cores(&net, 4);
    let expected: Vec<Vec<usize>> = (0..4).map(|p| (4 * p..4 * p + 4).collect()).collect();
    assert_eq!(a.cores(), expected.as_slice());
    assert_eq!(extra_hardware_neurons(&a), 0);
}

#[test]
fn canonical_size_three_needs_eight_cores() {
    let net = canonical();
    let a = assign_cores(&net, 3);
    assert_eq!(a.num_cores(), 8);
    assert_eq!(extra_hardware_neurons(&a), 8);
    let sizes: Vec<usize> = a.cores().iter().map(Vec::len).collect();
    assert_eq!(sizes.iter().filter(|&&s| s == 3).count(), 4);
    assert_eq!(sizes.iter().filter(|&&s| s == 1).count(), 4);
    // the singletons share no mutual connection, so no two of them can merge
    let singles: Vec<usize> = a
        .cores()
        .iter()
        .filter(|c| c.len() == 1)
        .map(|c| c[0])
        .collect();
    for (i, &x) in singles.iter().enumerate() {
        for &y in &singles[i + 1..] {
            assert!(
                !is_mutual_clique(&net, &[x, y]),
                "{x} and {y} could share a core"
            );
        }
    }
}

#[test]
fn canonical_minus_one_needs_four_cores() {
    for victim in 0..16 {
        let net = remove_neurons(&canonical(), &BTreeSet::from([victim])).unwrap();
        let a = assign_cores(&net, 4);
        assert_eq!(extra_hardware_neurons(&a), 1, "victim {victim}");
    }
}

#[test]
fn canonical_distance_map() {
    let net = canonical();
    let a = assign_cores(&net, 4);
    let dm = compute_distance_map(&net, &a);
    // populations 1 apart exchange 2 edges, 2 or 3 apart exchange 1
    for i in 0..4usize {
        for j in 0..4usize {
            let expect = match i.abs_diff(j) {
                0 => 0,
                1 => 3,
                _ => 5,
            };
            assert_eq!(dm.distance(i, j), expect, "({i}, {j})");
        }
    }
}

#[test]
fn canonical_compiles_cleanly() {
    let c = compile(&canonical(), &FabricConfig::default()).unwrap();
    let p = &c.placement;
    assert_eq!(p.depth, RouterLevel::R2);
    assert!(p.unplaceable.is_empty());
    assert_eq!(p.extra_neurons, 0);
    assert!(p.spurious_in_core.is_empty());
    assert_eq!(p.num_connections(), 66);
}

#[test]
fn zero_budget_leaves_only_broadcast() {
    let cfg = FabricConfig {
        fanin_budget: Some(0),
        programmable_per_core: 0,
        ..FabricConfig::default()
    };
    let net = canonical();
    let p = compile(&net, &cfg).unwrap().placement;
    let inter = net.edges().iter().filter(|&&(s, d)| s / 4 != d / 4).count();
    assert_eq!(p.unplaceable.len(), inter);
    assert!(p.placed.iter().all(|&(_, l)| l == RouterLevel::R0));
    assert_eq!(p.placed.len(), 48);
}

#[test]
fn one_way_edge_inside_a_core_is_spurious_in_reverse() {
    let net = NetworkModel::new(2, [(0, 1)]).unwrap();
    let a = CoreAssignment::from_cores(2, 2, vec![vec![0, 1]]).unwrap();
    let cfg = FabricConfig::default().with_core_size(2);
    let p = neuromap_core::placer::compile_with_assignment(&net, &a, &cfg)
        .unwrap()
        .placement;
    assert_eq!(p.spurious_in_core, vec![(1, 0)]);
    assert_eq!(p.placed, vec![((0, 1), RouterLevel::R0)]);
}

#[test]
fn too_many_cores_is_an_error() {
    let net = NetworkModel::new(17, []).unwrap();
    let err = compile(&net, &FabricConfig::default().with_core_size(1)).unwrap_err();
    assert!(err.to_string().contains("fabric too small"), "{err}");
}

fn fabric_for(core_size: usize) -> FabricConfig {
    FabricConfig::default().with_core_size(core_size)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn cores_are_cliques_and_cover_everything(net in network(12), size in 1usize..=4) {
        let a = assign_cores(&net, size);
        let mut seen = BTreeSet::new();
        for core in a.cores() {
            prop_assert!(core.len() <= size);
            prop_assert!(is_mutual_clique(&net, core));
            for &v in core {
                prop_assert!(seen.insert(v));
            }
        }
        prop_assert_eq!(seen.len(), net.num_neurons());
        prop_assert_eq!(extra_hardware_neurons(&a), a.num_cores() * size - net.num_neurons());
    }

    #[test]
    fn distance_map_matches_edge_counts(net in network(12), size in 1usize..=4) {
        let a = assign_cores(&net, size);
        let dm = compute_distance_map(&net, &a);
        for i in 0..a.num_cores() {
            for j in 0..a.num_cores() {
                let e = net
                    .edges()
                    .iter()
                    .filter(|&&(s, d)| a.core_of(s) == j && a.core_of(d) == i)
                    .count();
                let expect = if i == j { 0 } else { size.checked_div(e).map_or(-1, |q| q as i64 + 1) };
                prop_assert_eq!(dm.distance(i, j), expect);
            }
        }
    }

    #[test]
    fn placement_partitions_edges_within_budget(net in network(12), size in 1usize..=4) {
        let cfg = fabric_for(size);
        let p = compile(&net, &cfg).unwrap().placement;
        let mut all: Vec<_> = p.placed.iter().map(|&(e, _)| e).collect();
        all.extend(&p.programmable);
        all.extend(&p.unplaceable);
        all.sort_unstable();
        let edges: Vec<_> = net.edges().iter().copied().collect();
        prop_assert_eq!(all, edges);
        let budget = cfg.effective_fanin_budget();
        prop_assert!(p.fanin_used.iter().all(|&f| f <= budget));
        for &((s, d), level) in &p.placed {
            let same_core = p.assignment.core_of(s) == p.assignment.core_of(d);
            prop_assert_eq!(same_core, level == RouterLevel::R0);
        }
    }

    #[test]
    fn compile_is_deterministic(net in network(10), size in 1usize..=4) {
        let cfg = fabric_for(size);
        prop_assert_eq!(compile(&net, &cfg).unwrap(), compile(&net, &cfg).unwrap());
    }
}
