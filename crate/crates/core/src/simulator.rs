//! Spike delivery through the synthesized router tree, and placement
//! validation against the model graph.
//!
//! A spike leaves its core through R0, which broadcasts it to the core-mates.
//! It then climbs to the core's R1 router, which forwards it to every sibling
//! core, and to R2, which forwards it to every other R1 router and on to its
//! cores. Each router rewrites the packet's distance field to the number of
//! router links left before the destination core. On arrival at a core the
//! packet only carries the source's part index (half for R1 traffic, fourth
//! for R2 traffic); the input port it arrived on selects the receiver's row.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fabric::{part_of, FabricTopology, RouterLevel, RoutingTables, R1_PARTS, R2_PARTS};
use crate::netmodel::{Edge, NetworkModel};
use crate::placer::PlacementResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum RouterId {
    /// The crossbar of a core.
    R0(usize),
    R1(usize),
    R2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hop {
    pub router: RouterId,
    /// Router links left before the destination core.
    pub distance_field: usize,
    /// Row-addressing bits the packet carries out of this router.
    pub address_bits: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Route {
    Hierarchical(RouterLevel),
    Programmable,
}

/// One delivered spike and the routers it touched.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEntry {
    pub receiver: usize,
    pub route: Route,
    pub hops: Vec<Hop>,
}

impl TraceEntry {
    pub fn hop_count(&self) -> usize {
        self.hops.len()
    }
}

/// Bits needed to name one of `parts` parts.
fn selector_bits(parts: usize) -> usize {
    (usize::BITS - (parts.max(1) - 1).leading_zeros()) as usize
}

/// Replays spikes over a fixed set of routing tables.
#[derive(Debug, Clone)]
pub struct Simulator<'a> {
    tables: &'a RoutingTables,
    topology: FabricTopology,
}

impl<'a> Simulator<'a> {
    pub fn new(tables: &'a RoutingTables) -> Self {
        Self {
            tables,
            topology: tables.topology(),
        }
    }

    pub fn topology(&self) -> &FabricTopology {
        &self.topology
    }

    fn check_source(&self, source: usize) -> Result<()> {
        let neurons = self.tables.num_neurons();
        if source >= neurons {
            return Err(Error::NeuronOutOfRange {
                neuron: source,
                neurons,
            });
        }
        Ok(())
    }

    /// Every delivery of a spike from `source`, ordered by receiver then route.
    pub fn trace(&self, source: usize) -> Result<Vec<TraceEntry>> {
        self.check_source(source)?;
        let t = self.tables;
        let cfg = t.config();
        let n = cfg.core_size;
        let (src_core, src_slot) = t.locate(source);
        let src_cluster = self.topology.cluster_of(src_core);
        let mut out = Vec::new();

        let r0 = Hop {
            router: RouterId::R0(src_core),
            distance_field: 0,
            address_bits: 0,
        };
        for &m in &t.cores()[src_core].neurons {
            if m != source && t.rows(m).r0 {
                out.push(TraceEntry {
                    receiver: m,
                    route: Route::Hierarchical(RouterLevel::R0),
                    hops: alloc::vec![r0],
                });
            }
        }

        let r1_part = part_of(src_slot, n, R1_PARTS);
        let up_r1 = Hop {
            router: RouterId::R1(src_cluster),
            distance_field: 1,
            address_bits: selector_bits(R1_PARTS),
        };
        for &core in self.topology.cores_in(src_cluster) {
            let Some(row) = self.topology.sibling_slot(core, src_core) else {
                continue;
            };
            let down = Hop {
                router: RouterId::R0(core),
                distance_field: 0,
                address_bits: 0,
            };
            for (slot, &m) in t.cores()[core].neurons.iter().enumerate() {
                if accepts(
                    &t.rows(m).r1,
                    row,
                    part_of(slot, n, R1_PARTS),
                    r1_part,
                    R1_PARTS,
                ) {
                    out.push(TraceEntry {
                        receiver: m,
                        route: Route::Hierarchical(RouterLevel::R1),
                        hops: alloc::vec![up_r1, down],
                    });
                }
            }
        }

        let r2_part = part_of(src_slot, n, R2_PARTS);
        let bits = selector_bits(R2_PARTS);
        let up = Hop {
            router: RouterId::R1(src_cluster),
            distance_field: 3,
            address_bits: bits,
        };
        let top = Hop {
            router: RouterId::R2,
            distance_field: 2,
            address_bits: bits,
        };
        for (cluster, cores) in self.topology.clusters() {
            if cluster == src_cluster {
                continue;
            }
            let across = Hop {
                router: RouterId::R1(cluster),
                distance_field: 1,
                address_bits: bits,
            };
            for &core in cores {
                let Some(row) = self.topology.cluster_slot(core, src_core) else {
                    continue;
                };
                let down = Hop {
                    router: RouterId::R0(core),
                    distance_field: 0,
                    address_bits: 0,
                };
                for (slot, &m) in t.cores()[core].neurons.iter().enumerate() {
                    if accepts(
                        &t.rows(m).r2,
                        row,
                        part_of(slot, n, R2_PARTS),
                        r2_part,
                        R2_PARTS,
                    ) {
                        out.push(TraceEntry {
                            receiver: m,
                            route: Route::Hierarchical(RouterLevel::R2),
                            hops: alloc::vec![up, top, across, down],
                        });
                    }
                }
            }
        }

        for &(s, d) in t.programmable() {
            if s == source {
                out.push(TraceEntry {
                    receiver: d,
                    route: Route::Programmable,
                    hops: self.programmable_path(src_core, t.locate(d).0),
                });
            }
        }
        out.sort_by_key(|e| (e.receiver, e.route));
        Ok(out)
    }

    // Programmable synapses match the exact source id at the receiver, so the
    // packet needs no row addressing on its way there.
    fn programmable_path(&self, src_core: usize, dst_core: usize) -> Vec<Hop> {
        let hop = |router, distance_field| Hop {
            router,
            distance_field,
            address_bits: 0,
        };
        let (a, b) = (
            self.topology.cluster_of(src_core),
            self.topology.cluster_of(dst_core),
        );
        if src_core == dst_core {
            alloc::vec![hop(RouterId::R0(dst_core), 0)]
        } else if a == b {
            alloc::vec![hop(RouterId::R1(a), 1), hop(RouterId::R0(dst_core), 0)]
        } else {
            alloc::vec![
                hop(RouterId::R1(a), 3),
                hop(RouterId::R2, 2),
                hop(RouterId::R1(b), 1),
                hop(RouterId::R0(dst_core), 0),
            ]
        }
    }

    /// Neurons that receive a spike from `source`.
    pub fn deliver(&self, source: usize) -> Result<BTreeSet<usize>> {
        Ok(self
            .trace(source)?
            .into_iter()
            .map(|e| e.receiver)
            .collect())
    }
}

fn accepts(rows: &[u8], row: usize, dst_part: usize, src_part: usize, parts: usize) -> bool {
    match rows.get(row) {
        None | Some(0) => false,
        Some(&code) => (dst_part + code as usize - 1) % parts == src_part,
    }
}

/// Receivers of a spike from `source`.
pub fn deliver(tables: &RoutingTables, source: usize) -> Result<BTreeSet<usize>> {
    Simulator::new(tables).deliver(source)
}

pub fn trace(tables: &RoutingTables, source: usize) -> Result<Vec<TraceEntry>> {
    Simulator::new(tables).trace(source)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SourceSummary {
    pub source: usize,
    pub covered: usize,
    pub missing: usize,
    pub spurious: usize,
}

/// Simulation outcome checked against the model.
///
/// `covered` and `missing` partition the realized connections (placed in the
/// hierarchy or on a programmable synapse); unplaceable connections are in
/// neither. `spurious` lists deliveries without a model connection.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DeliveryReport {
    pub covered: Vec<Edge>,
    pub missing: Vec<Edge>,
    pub spurious: Vec<Edge>,
    pub per_source: Vec<SourceSummary>,
}

impl DeliveryReport {
    pub fn is_complete(&self) -> bool {
        self.missing.is_empty()
    }
}

/// Simulates every neuron and classifies each delivery.
pub fn validate(
    placement: &PlacementResult,
    tables: &RoutingTables,
    net: &NetworkModel,
) -> Result<DeliveryReport> {
    let num = net.num_neurons();
    if tables.num_neurons() != num || placement.assignment.num_neurons() != num {
        return Err(Error::InconsistentTables(format!(
            "network has {num} neurons, placement {}, tables {}",
            placement.assignment.num_neurons(),
            tables.num_neurons()
        )));
    }
    for v in 0..num {
        let placed = (
            placement.assignment.core_of(v),
            placement.assignment.slot_of(v),
        );
        if tables.locate(v) != placed {
            return Err(Error::InconsistentTables(format!(
                "neuron {v} sits at core/slot {:?} in the tables but {placed:?} in the placement",
                tables.locate(v)
            )));
        }
    }
    let mut realized: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for &(s, d) in placement
        .placed
        .iter()
        .map(|(e, _)| e)
        .chain(&placement.programmable)
    {
        realized.entry(s).or_default().insert(d);
    }

    let sim = Simulator::new(tables);
    let mut report = DeliveryReport::default();
    for source in 0..num {
        let received = sim.deliver(source)?;
        let mut summary = SourceSummary {
            source,
            ..SourceSummary::default()
        };
        if let Some(targets) = realized.get(&source) {
            for &d in targets {
                if received.contains(&d) {
                    report.covered.push((source, d));
                    summary.covered += 1;
                } else {
                    report.missing.push((source, d));
                    summary.missing += 1;
                }
            }
        }
        for &d in &received {
            if !net.has_edge(source, d) {
                report.spurious.push((source, d));
                summary.spurious += 1;
            }
        }
        report.per_source.push(summary);
    }
    Ok(report)
}
