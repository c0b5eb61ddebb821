#![allow(dead_code)]

use neuromap_core::netmodel::{build_canonical, DecayProfile, NetworkModel};
use proptest::prelude::*;

pub fn canonical() -> NetworkModel {
    build_canonical(4, 4, &DecayProfile::exponential(4, 4), 0).unwrap()
}

/// Random network: each unordered pair is absent, one-way either direction,
/// or mutual.
pub fn network(max_neurons: usize) -> impl Strategy<Value = NetworkModel> {
    (1..=max_neurons).prop_flat_map(|n| {
        let pairs = n * (n - 1) / 2;
        prop::collection::vec(0u8..6, pairs).prop_map(move |kinds| {
            let mut edges = Vec::new();
            let mut it = kinds.into_iter();
            for a in 0..n {
                for b in a + 1..n {
                    match it.next().unwrap() {
                        1 => edges.push((a, b)),
                        2 => edges.push((b, a)),
                        3..=5 => edges.extend([(a, b), (b, a)]),
                        _ => {}
                    }
                }
            }
            NetworkModel::new(n, edges).unwrap()
        })
    })
}

/// Direct mutual-edge clique check, independent of the clique module.
pub fn is_mutual_clique(net: &NetworkModel, members: &[usize]) -> bool {
    members.iter().all(|&a| {
        members
            .iter()
            .all(|&b| a == b || (net.has_edge(a, b) && net.has_edge(b, a)))
    })
}
