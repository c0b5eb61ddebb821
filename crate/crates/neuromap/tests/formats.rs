use std::collections::BTreeMap;

use neuromap::formats::{
    from_bits, load_network, read_json, to_bits, to_json, FabricFile, NetworkFile, PlacementFile,
    TablesFile,
};
use neuromap::manifest::RunManifest;
use neuromap_core::fabric::synthesize_tables;
use neuromap_core::netmodel::{build_canonical, DecayProfile};
use neuromap_core::placer::compile;
use neuromap_core::{EdgeSign, FabricConfig, NetworkModel};
use proptest::prelude::*;

fn network(max: usize) -> impl Strategy<Value = NetworkModel> {
    (1..=max).prop_flat_map(|n| {
        (
            prop::collection::vec(0u8..5, n * (n - 1) / 2),
            prop::collection::vec(any::<bool>(), n * (n - 1)),
        )
            .prop_map(move |(kinds, inhib)| {
                let mut edges = Vec::new();
                let mut it = kinds.into_iter();
                for a in 0..n {
                    for b in a + 1..n {
                        match it.next().unwrap() {
                            1 => edges.push((a, b)),
                            2 => edges.push((b, a)),
                            3 | 4 => edges.extend([(a, b), (b, a)]),
                            _ => {}
                        }
                    }
                }
                let signs: BTreeMap<_, _> = edges
                    .iter()
                    .zip(&inhib)
                    .map(|(&e, &i)| {
                        (
                            e,
                            if i {
                                EdgeSign::Inhibitory
                            } else {
                                EdgeSign::Excitatory
                            },
                        )
                    })
                    .collect();
                NetworkModel::new(n, edges)
                    .unwrap()
                    .with_signs(signs)
                    .unwrap()
            })
    })
}

fn reparse<T: serde::de::DeserializeOwned>(text: &str) -> T {
    serde_json::from_str(text).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn network_round_trip(net in network(12)) {
        let file = NetworkFile::from_model(&net, Some(RunManifest::new("test")));
        let text = to_json(&file);
        let back: NetworkFile = reparse(&text);
        prop_assert_eq!(&back.to_model().unwrap(), &net);
        prop_assert_eq!(to_json(&back), text);
    }

    #[test]
    fn placement_and_tables_round_trip(net in network(14), size in 1usize..=4) {
        let cfg = FabricConfig::default().with_core_size(size);
        let compiled = compile(&net, &cfg).unwrap();
        let p = &compiled.placement;
        let pf = PlacementFile::new(RunManifest::new("test"), &cfg, p, compiled.distance_map.matrix());
        let text = to_json(&pf);
        let back: PlacementFile = reparse(&text);
        prop_assert_eq!(&back.to_placement().unwrap(), p);
        prop_assert_eq!(to_json(&back), text);

        let tables = synthesize_tables(p, &cfg, true).unwrap();
        let tf = TablesFile::new(RunManifest::new("test"), &tables);
        let text = to_json(&tf);
        let back: TablesFile = reparse(&text);
        prop_assert_eq!(&back.to_tables().unwrap(), &tables);
        prop_assert_eq!(to_json(&back), text);
    }

    #[test]
    fn bit_strings_round_trip(width in 1usize..=8, raw in any::<u8>()) {
        let value = if width == 8 { raw } else { raw % (1 << width) };
        let bits = to_bits(value, width);
        prop_assert_eq!(bits.len(), width);
        prop_assert_eq!(from_bits(&bits).unwrap(), value);
    }
}

#[test]
fn canonical_file_keeps_populations() {
    let net = build_canonical(4, 4, &DecayProfile::exponential(4, 4), 0).unwrap();
    let file = NetworkFile::from_model(&net, None);
    assert_eq!(file.populations.as_ref().unwrap().len(), 4);
    assert!(!to_json(&file).contains("manifest"));
}

#[test]
fn minimal_network_file() {
    let file: NetworkFile = reparse(r#"{"neurons": 3, "edges": [[0, 1], [1, 2]]}"#);
    let net = file.to_model().unwrap();
    assert_eq!(net.num_edges(), 2);
    assert!(net.populations().is_none());
}

fn load_err(text: &str) -> String {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("net.json");
    std::fs::write(&path, text).unwrap();
    format!("{:#}", load_network(&path).unwrap_err())
}

#[test]
fn malformed_network_errors_point_at_the_problem() {
    assert!(load_err("{\"neurons\": 2,\n \"edges\": [[0, 1]").contains("line 2"));
    assert!(load_err(r#"{"neurons": 2, "edges": [[0, 5]]}"#).contains("edges[0]"));
    assert!(load_err(r#"{"neurons": 2, "edges": [[0, 1], [1, 1]]}"#).contains("edges[1]"));
    assert!(load_err(r#"{"neurons": 2, "edges": [], "extra": 1}"#).contains("extra"));
    assert!(
        load_err(r#"{"neurons": 2, "edges": [[0, 1]], "signs": {"0-1": "mod"}}"#).contains("exc")
    );
    assert!(
        load_err(r#"{"neurons": 2, "edges": [[0, 1]], "signs": {"0_1": "exc"}}"#)
            .contains("src-dst")
    );
}

#[test]
fn fabric_file_fields_default_individually() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fabric.json");
    std::fs::write(&path, r#"{"r2_rows": 3, "fanin_budget": 10}"#).unwrap();
    let f: FabricFile = read_json(&path).unwrap();
    let cfg = FabricConfig::from(&f);
    assert_eq!(cfg.r2_rows, 3);
    assert_eq!(cfg.fanin_budget, Some(10));
    assert_eq!(cfg.core_size, 4);
}

#[test]
fn corrupted_row_width_is_rejected() {
    let net = build_canonical(4, 4, &DecayProfile::exponential(4, 4), 0).unwrap();
    let cfg = FabricConfig::default();
    let p = compile(&net, &cfg).unwrap().placement;
    let tables = synthesize_tables(&p, &cfg, false).unwrap();
    let mut tf = TablesFile::new(RunManifest::new("test"), &tables);
    tf.neurons[3].r2_rows[1] = "011".into();
    let msg = format!("{:#}", tf.to_tables().unwrap_err());
    assert!(msg.contains("neurons[3].r2_rows[1]"), "{msg}");
}
