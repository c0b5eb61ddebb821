//! Three-step placement: clique-based core assignment, the inter-core
//! distance map, and closest-first connection placement.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::clique::{all_vertices, best_capped_clique, SupportGraph};
use crate::error::{Error, Result};
use crate::fabric::{
    code_fits, part_of, row_code, row_sources, FabricConfig, FabricTopology, RouterLevel, R1_PARTS,
    R2_PARTS,
};
use crate::netmodel::{inter_cluster_counts, Edge, NetworkModel};

/// Neuron -> (core, slot) mapping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoreAssignment {
    core_size: usize,
    cores: Vec<Vec<usize>>,
    core_of: Vec<usize>,
    slot_of: Vec<usize>,
}

impl CoreAssignment {
    /// `cores[c]` lists the neurons of core `c` in slot order.
    pub fn from_cores(
        num_neurons: usize,
        core_size: usize,
        cores: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if core_size == 0 {
            return Err(Error::InvalidAssignment(
                "core size must be at least 1".into(),
            ));
        }
        let mut core_of = vec![usize::MAX; num_neurons];
        let mut slot_of = vec![usize::MAX; num_neurons];
        for (c, members) in cores.iter().enumerate() {
            if members.is_empty() || members.len() > core_size {
                return Err(Error::InvalidAssignment(format!(
                    "core {c} holds {} neurons, core size is {core_size}",
                    members.len()
                )));
            }
            for (slot, &n) in members.iter().enumerate() {
                if n >= num_neurons {
                    return Err(Error::UnknownNeuron(n));
                }
                if core_of[n] != usize::MAX {
                    return Err(Error::InvalidAssignment(format!(
                        "neuron {n} assigned to more than one core"
                    )));
                }
                core_of[n] = c;
                slot_of[n] = slot;
            }
        }
        if let Some(n) = core_of.iter().position(|&c| c == usize::MAX) {
            return Err(Error::Unassigned(n));
        }
        Ok(Self {
            core_size,
            cores,
            core_of,
            slot_of,
        })
    }

    pub fn core_size(&self) -> usize {
        self.core_size
    }

    pub fn num_cores(&self) -> usize {
        self.cores.len()
    }

    pub fn num_neurons(&self) -> usize {
        self.core_of.len()
    }

    pub fn cores(&self) -> &[Vec<usize>] {
        &self.cores
    }

    pub fn members(&self, core: usize) -> &[usize] {
        &self.cores[core]
    }

    pub fn core_of(&self, neuron: usize) -> usize {
        self.core_of[neuron]
    }

    pub fn slot_of(&self, neuron: usize) -> usize {
        self.slot_of[neuron]
    }

    /// `core_of` for every neuron, usable as a cluster grouping.
    pub fn grouping(&self) -> &[usize] {
        &self.core_of
    }
}

/// Groups neurons into cores by repeatedly extracting the best clique of at
/// most `core_size` neurons from the mutual-connection graph.
///
/// Leftover partial cores are merged afterwards when their union is still a
/// clique that fits in one core.
///
/// # Panics
///
/// If `core_size` is zero.
pub fn assign_cores(net: &NetworkModel, core_size: usize) -> CoreAssignment {
    assert!(core_size > 0, "core size must be at least 1");
    let g = SupportGraph::from_network(net);
    let mut alive = all_vertices(&g);
    let mut cores: Vec<Vec<usize>> = Vec::new();
    while !alive.is_clear() {
        let clique = best_capped_clique(&g, &alive, core_size);
        for &v in &clique {
            alive.set(v, false);
        }
        cores.push(clique);
    }
    merge_partial_cores(&g, &mut cores, core_size);
    CoreAssignment::from_cores(net.num_neurons(), core_size, cores)
        .expect("clique extraction covers every neuron exactly once")
}

fn merge_partial_cores(g: &SupportGraph, cores: &mut Vec<Vec<usize>>, core_size: usize) {
    let mut i = 0;
    while i < cores.len() {
        let mut j = i + 1;
        while j < cores.len() {
            if cores[i].len() + cores[j].len() <= core_size {
                let mut union = cores[i].clone();
                union.extend_from_slice(&cores[j]);
                union.sort_unstable();
                if g.is_clique(&union) {
                    cores[i] = union;
                    cores.remove(j);
                    continue;
                }
            }
            j += 1;
        }
        i += 1;
    }
}

/// Allocated neuron slots not used by the model.
pub fn extra_hardware_neurons(assignment: &CoreAssignment) -> usize {
    assignment.num_cores() * assignment.core_size() - assignment.num_neurons()
}

/// Inter-core quasi-metric.
///
/// `received(i, j)` counts connections core `i` receives from core `j`;
/// `distance(i, j)` is 0 on the diagonal, -1 without connections and
/// `core_size / received + 1` otherwise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMap {
    core_size: usize,
    received: Vec<Vec<usize>>,
    dist: Vec<Vec<i64>>,
}

impl DistanceMap {
    pub fn from_received(core_size: usize, received: Vec<Vec<usize>>) -> Self {
        let dist = received
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(j, &e)| {
                        if i == j {
                            0
                        } else {
                            distance_from_count(core_size, e)
                        }
                    })
                    .collect()
            })
            .collect();
        Self {
            core_size,
            received,
            dist,
        }
    }

    pub fn core_size(&self) -> usize {
        self.core_size
    }

    pub fn num_cores(&self) -> usize {
        self.dist.len()
    }

    pub fn distance(&self, i: usize, j: usize) -> i64 {
        self.dist[i][j]
    }

    pub fn received(&self, i: usize, j: usize) -> usize {
        self.received[i][j]
    }

    pub fn matrix(&self) -> &[Vec<i64>] {
        &self.dist
    }

    /// Ordered `(receiver, sender)` core pairs that share connections.
    pub fn connected_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.num_cores();
        (0..n)
            .flat_map(move |i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| i != j && self.received[i][j] > 0)
    }
}

/// Distance between distinct cores given `n` neurons per core and `e`
/// connections between them.
pub fn distance_from_count(n: usize, e: usize) -> i64 {
    n.checked_div(e).map_or(-1, |q| q as i64 + 1)
}

pub fn compute_distance_map(net: &NetworkModel, assignment: &CoreAssignment) -> DistanceMap {
    let k = assignment.num_cores();
    let counts =
        inter_cluster_counts(net, assignment.grouping()).expect("assignment covers every neuron");
    // counts[a][b] is a -> b; received[i][j] is j -> i
    let received = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| counts.get(j).and_then(|r| r.get(i)).copied().unwrap_or(0))
                .collect()
        })
        .collect();
    DistanceMap::from_received(assignment.core_size(), received)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LayoutStrategy {
    /// Closest-first merging of connected cores into R1 clusters.
    Greedy,
    /// One core per R1 router, round robin.
    Spread,
    /// Cores fill R1 routers in id order.
    Sequential,
}

impl LayoutStrategy {
    pub fn name(self) -> &'static str {
        match self {
            LayoutStrategy::Greedy => "greedy",
            LayoutStrategy::Spread => "spread",
            LayoutStrategy::Sequential => "sequential",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub strategy: LayoutStrategy,
    pub topology: FabricTopology,
}

/// Greedy R1 grouping: walk connected core pairs by ascending distance (ties by
/// pair) and merge their groups while the union fits under one R1 router.
/// Merges are never undone. Returns groups ordered by smallest core id.
pub fn greedy_r1_groups(dm: &DistanceMap, cores_per_r1: usize) -> Vec<Vec<usize>> {
    let k = dm.num_cores();
    let mut group: Vec<usize> = (0..k).collect();
    let mut members: Vec<Vec<usize>> = (0..k).map(|c| vec![c]).collect();
    let mut pairs: Vec<(i64, usize, usize)> = dm
        .connected_pairs()
        .map(|(i, j)| (dm.distance(i, j), i, j))
        .collect();
    pairs.sort_unstable();
    for (_, i, j) in pairs {
        let (gi, gj) = (group[i], group[j]);
        if gi == gj || members[gi].len() + members[gj].len() > cores_per_r1 {
            continue;
        }
        let (keep, gone) = (gi.min(gj), gi.max(gj));
        let moved = core::mem::take(&mut members[gone]);
        for &c in &moved {
            group[c] = keep;
        }
        members[keep].extend(moved);
        members[keep].sort_unstable();
    }
    members.into_iter().filter(|m| !m.is_empty()).collect()
}

/// Candidate core layouts, deduplicated, in preference order.
pub fn candidate_layouts(dm: &DistanceMap, cfg: &FabricConfig) -> Result<Vec<Layout>> {
    let k = dm.num_cores();
    if k > cfg.max_cores() {
        return Err(Error::FabricTooSmall {
            required: k,
            available: cfg.max_cores(),
        });
    }
    let m = cfg.cores_per_r1;
    let mut out: Vec<Layout> = Vec::new();
    let mut push = |strategy, placements: Vec<(usize, usize)>| -> Result<()> {
        let topology = FabricTopology::new(cfg, &placements)?;
        if !out.iter().any(|l| l.topology == topology) {
            out.push(Layout { strategy, topology });
        }
        Ok(())
    };

    // first-fit decreasing of the greedy groups into R1 routers
    let mut groups = greedy_r1_groups(dm, m);
    groups.sort_by_key(|g| (core::cmp::Reverse(g.len()), g[0]));
    let mut routers: Vec<Vec<usize>> = Vec::new();
    for g in groups {
        match routers.iter_mut().find(|r| r.len() + g.len() <= m) {
            Some(r) => r.extend(g),
            None => routers.push(g),
        }
    }
    if routers.len() <= cfg.r1_per_r2 {
        let mut placements = vec![(0, 0); k];
        for (cluster, cores) in routers.iter_mut().enumerate() {
            cores.sort_unstable();
            for (position, &c) in cores.iter().enumerate() {
                placements[c] = (cluster, position);
            }
        }
        push(LayoutStrategy::Greedy, placements)?;
    }

    let spread_routers = k.min(cfg.r1_per_r2).max(1);
    push(
        LayoutStrategy::Spread,
        (0..k)
            .map(|c| (c % spread_routers, c / spread_routers))
            .collect(),
    )?;
    push(
        LayoutStrategy::Sequential,
        (0..k).map(|c| (c / m, c % m)).collect(),
    )?;
    Ok(out)
}

/// Deepest router level any connected core pair needs under `topology`.
pub fn required_depth(dm: &DistanceMap, topology: &FabricTopology) -> RouterLevel {
    let mut depth = RouterLevel::R0;
    for (i, j) in dm.connected_pairs() {
        if !topology.shares_r1(i, j) {
            return RouterLevel::R2;
        }
        depth = RouterLevel::R1;
    }
    depth
}

/// Outcome of connection placement.
///
/// `placed`, `programmable` and `unplaceable` partition the model's
/// connections; each list is sorted by connection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlacementResult {
    pub assignment: CoreAssignment,
    pub layout: Layout,
    pub depth: RouterLevel,
    pub placed: Vec<(Edge, RouterLevel)>,
    pub programmable: Vec<Edge>,
    pub unplaceable: Vec<Edge>,
    pub fanin_used: Vec<usize>,
    pub extra_neurons: usize,
    pub spurious_in_core: Vec<Edge>,
}

impl PlacementResult {
    pub fn num_connections(&self) -> usize {
        self.placed.len() + self.programmable.len() + self.unplaceable.len()
    }

    /// Fan-in value -> number of neurons using exactly that much.
    pub fn fanin_histogram(&self) -> BTreeMap<usize, usize> {
        let mut h = BTreeMap::new();
        for &f in &self.fanin_used {
            *h.entry(f).or_insert(0) += 1;
        }
        h
    }

    pub fn level_of(&self, edge: Edge) -> Option<RouterLevel> {
        self.placed
            .binary_search_by_key(&edge, |&(e, _)| e)
            .ok()
            .map(|i| self.placed[i].1)
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Disposition {
    Routed(RouterLevel),
    Programmable,
    Unplaceable,
}

struct PlacementState<'a> {
    net: &'a NetworkModel,
    assignment: &'a CoreAssignment,
    topology: &'a FabricTopology,
    cfg: &'a FabricConfig,
    budget: usize,
    r1: Vec<Vec<u8>>,
    r2: Vec<Vec<u8>>,
    fanin: Vec<usize>,
    decided: BTreeMap<Edge, Disposition>,
}

impl PlacementState<'_> {
    /// Tries to serve `u -> v` with a hierarchical row. On success every model
    /// connection the row admits is marked routed.
    fn route(&mut self, u: usize, v: usize) -> bool {
        let a = self.assignment.core_of(u);
        let b = self.assignment.core_of(v);
        let n = self.assignment.core_size();
        let (level, row, parts) = if self.topology.shares_r1(a, b) {
            (RouterLevel::R1, self.topology.sibling_slot(b, a), R1_PARTS)
        } else {
            (RouterLevel::R2, self.topology.cluster_slot(b, a), R2_PARTS)
        };
        let Some(row) = row else { return false };
        if row >= self.cfg.rows(level) {
            return false;
        }
        let src_part = part_of(self.assignment.slot_of(u), n, parts);
        let code = row_code(
            src_part,
            part_of(self.assignment.slot_of(v), n, parts),
            parts,
        );
        if !code_fits(code, self.cfg.row_bits(level)) {
            return false;
        }
        let current = match level {
            RouterLevel::R1 => self.r1[v][row],
            _ => self.r2[v][row],
        };
        if current != 0 && current != code {
            return false;
        }
        let group = row_sources(
            self.topology,
            self.assignment.cores(),
            n,
            level,
            a,
            src_part,
        );
        if group.iter().any(|&w| !self.net.has_edge(w, v)) {
            return false;
        }
        let fresh: Vec<Edge> = group
            .iter()
            .map(|&w| (w, v))
            .filter(|e| !self.decided.contains_key(e))
            .collect();
        if self.fanin[v] + fresh.len() > self.budget {
            return false;
        }
        match level {
            RouterLevel::R1 => self.r1[v][row] = code,
            _ => self.r2[v][row] = code,
        }
        self.fanin[v] += fresh.len();
        for e in fresh {
            self.decided.insert(e, Disposition::Routed(level));
        }
        true
    }
}

/// Places every connection, closest core pairs first.
///
/// Intra-core connections ride the R0 broadcast for free. Inter-core
/// connections take a row at R1 (same R1 router) or R2 and one unit of the
/// receiver's fan-in budget; when the row cannot express the connection
/// without over-delivery, or the budget is spent, the receiving core's
/// programmable synapses are used, and after those the connection is flagged
/// unplaceable.
pub fn place_connections(
    net: &NetworkModel,
    assignment: &CoreAssignment,
    dm: &DistanceMap,
    layout: &Layout,
    cfg: &FabricConfig,
) -> PlacementResult {
    let num_neurons = net.num_neurons();
    let mut state = PlacementState {
        net,
        assignment,
        topology: &layout.topology,
        cfg,
        budget: cfg.effective_fanin_budget(),
        r1: vec![vec![0; cfg.r1_rows]; num_neurons],
        r2: vec![vec![0; cfg.r2_rows]; num_neurons],
        fanin: vec![0; num_neurons],
        decided: BTreeMap::new(),
    };

    let mut by_pair: BTreeMap<(usize, usize), Vec<Edge>> = BTreeMap::new();
    let mut broadcast_cores = BTreeSet::new();
    for &(u, v) in net.edges() {
        let (a, b) = (assignment.core_of(u), assignment.core_of(v));
        if a == b {
            state
                .decided
                .insert((u, v), Disposition::Routed(RouterLevel::R0));
            broadcast_cores.insert(a);
        } else {
            by_pair.entry((b, a)).or_default().push((u, v));
        }
    }

    let mut spurious_in_core = Vec::new();
    for &c in &broadcast_cores {
        for &u in assignment.members(c) {
            for &v in assignment.members(c) {
                if u != v && !net.has_edge(u, v) {
                    spurious_in_core.push((u, v));
                }
            }
        }
    }
    spurious_in_core.sort_unstable();

    let mut pool = vec![cfg.programmable_per_core; assignment.num_cores()];
    let mut order: Vec<(usize, usize)> = by_pair.keys().copied().collect();
    order.sort_by_key(|&(i, j)| (dm.distance(i, j), i, j));
    for (i, j) in order {
        for &(u, v) in &by_pair[&(i, j)] {
            if state.decided.contains_key(&(u, v)) || state.route(u, v) {
                continue;
            }
            let fallback = if pool[i] > 0 {
                pool[i] -= 1;
                Disposition::Programmable
            } else {
                Disposition::Unplaceable
            };
            state.decided.insert((u, v), fallback);
        }
    }

    let mut placed = Vec::new();
    let mut programmable = Vec::new();
    let mut unplaceable = Vec::new();
    for (&e, &d) in &state.decided {
        match d {
            Disposition::Routed(level) => placed.push((e, level)),
            Disposition::Programmable => programmable.push(e),
            Disposition::Unplaceable => unplaceable.push(e),
        }
    }
    PlacementResult {
        assignment: assignment.clone(),
        layout: layout.clone(),
        depth: required_depth(dm, &layout.topology),
        placed,
        programmable,
        unplaceable,
        fanin_used: state.fanin,
        extra_neurons: extra_hardware_neurons(assignment),
        spurious_in_core,
    }
}

/// Full placement pipeline with the layout choice made.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Compilation {
    pub distance_map: DistanceMap,
    pub placement: PlacementResult,
    /// Layout candidates that were placed and compared.
    pub layouts_considered: usize,
}

/// Assigns cores, builds the distance map and places connections under every
/// candidate layout, keeping the one with fewest unplaceable connections, then
/// fewest programmable synapses, then shallowest depth.
pub fn compile(net: &NetworkModel, cfg: &FabricConfig) -> Result<Compilation> {
    cfg.validate()?;
    let assignment = assign_cores(net, cfg.core_size);
    compile_with_assignment(net, &assignment, cfg)
}

pub fn compile_with_assignment(
    net: &NetworkModel,
    assignment: &CoreAssignment,
    cfg: &FabricConfig,
) -> Result<Compilation> {
    cfg.validate()?;
    if assignment.core_size() != cfg.core_size {
        return Err(Error::InvalidAssignment(format!(
            "assignment uses core size {}, fabric has {}",
            assignment.core_size(),
            cfg.core_size
        )));
    }
    if assignment.num_neurons() != net.num_neurons() {
        return Err(Error::InvalidAssignment(format!(
            "assignment covers {} neurons, network has {}",
            assignment.num_neurons(),
            net.num_neurons()
        )));
    }
    let dm = compute_distance_map(net, assignment);
    let layouts = candidate_layouts(&dm, cfg)?;
    let considered = layouts.len();
    let best = layouts
        .iter()
        .map(|layout| place_connections(net, assignment, &dm, layout, cfg))
        .enumerate()
        .min_by_key(|(i, p)| (p.unplaceable.len(), p.programmable.len(), p.depth, *i))
        .map(|(_, p)| p)
        .expect("at least the spread layout exists");
    Ok(Compilation {
        distance_map: dm,
        placement: best,
        layouts_considered: considered,
    })
}
