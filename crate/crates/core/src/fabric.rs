//! Hardware target model: router tree, routing-row geometry, fan-in ceiling
//! and routing-table synthesis.
//!
//! # Row scheme
//!
//! Routing memory lives at the receiving neuron. Besides the R0 bit (accept
//! every spike broadcast inside the own core), a neuron owns `r1_rows` rows of
//! `r1_row_bits` bits and `r2_rows` rows of `r2_row_bits` bits.
//!
//! * R1 row `k` listens to the sibling core in sibling slot `k`, i.e. the
//!   `k`-th other position under the same R1 router.
//! * R2 row `k` listens to the R1 cluster in cluster slot `k`, i.e. the `k`-th
//!   other R1 router under R2.
//! * A row value of 0 means "off". A value `c > 0` accepts spikes from the
//!   source neurons whose part (half at R1, fourth at R2) equals the
//!   receiver's own part shifted by `c - 1`, modulo the number of parts.
//!   With one-bit R1 rows only the aligned half can be selected.
//!
//! Parts are contiguous slot ranges: part `p` of `P` covers slots
//! `[p*n/P, (p+1)*n/P)` with integer division.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::netmodel::Edge;
use crate::placer::PlacementResult;

/// Parts a core is divided into for R1 addressing.
pub const R1_PARTS: usize = 2;
/// Parts a core is divided into for R2 addressing.
pub const R2_PARTS: usize = 4;
/// Widest supported routing row.
pub const MAX_ROW_BITS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RouterLevel {
    R0,
    R1,
    R2,
}

impl RouterLevel {
    pub fn depth(self) -> usize {
        match self {
            RouterLevel::R0 => 0,
            RouterLevel::R1 => 1,
            RouterLevel::R2 => 2,
        }
    }

    pub fn from_depth(depth: usize) -> Result<Self> {
        match depth {
            0 => Ok(RouterLevel::R0),
            1 => Ok(RouterLevel::R1),
            2 => Ok(RouterLevel::R2),
            d => Err(Error::InvalidDepth(d)),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RouterLevel::R0 => "R0",
            RouterLevel::R1 => "R1",
            RouterLevel::R2 => "R2",
        }
    }
}

impl core::fmt::Display for RouterLevel {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

/// Parameterized hardware target.
///
/// `fanin_budget: None` means the budget equals [`fanin_capacity`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FabricConfig {
    pub core_size: usize,
    pub cores_per_r1: usize,
    pub r1_per_r2: usize,
    pub fanin_budget: Option<usize>,
    pub programmable_per_core: usize,
    pub r1_rows: usize,
    pub r1_row_bits: usize,
    pub r2_rows: usize,
    pub r2_row_bits: usize,
}

impl Default for FabricConfig {
    fn default() -> Self {
        Self {
            core_size: 4,
            cores_per_r1: 4,
            r1_per_r2: 4,
            fanin_budget: None,
            programmable_per_core: 2,
            r1_rows: 2,
            r1_row_bits: 1,
            r2_rows: 4,
            r2_row_bits: 2,
        }
    }
}

impl FabricConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("core_size", self.core_size),
            ("cores_per_r1", self.cores_per_r1),
            ("r1_per_r2", self.r1_per_r2),
            ("r1_rows", self.r1_rows),
            ("r1_row_bits", self.r1_row_bits),
            ("r2_rows", self.r2_rows),
            ("r2_row_bits", self.r2_row_bits),
        ];
        for (name, value) in counts {
            if value == 0 {
                return Err(Error::InvalidFabric(format!("{name} must be at least 1")));
            }
        }
        for (name, bits) in [
            ("r1_row_bits", self.r1_row_bits),
            ("r2_row_bits", self.r2_row_bits),
        ] {
            if bits > MAX_ROW_BITS {
                return Err(Error::InvalidFabric(format!(
                    "{name} = {bits} exceeds the supported maximum of {MAX_ROW_BITS}"
                )));
            }
        }
        let capacity = fanin_capacity(self);
        if let Some(budget) = self.fanin_budget {
            if budget > capacity {
                return Err(Error::InvalidFabric(format!(
                    "fanin_budget {budget} exceeds the architectural capacity {capacity}"
                )));
            }
        }
        Ok(())
    }

    pub fn with_core_size(&self, core_size: usize) -> Self {
        Self {
            core_size,
            ..self.clone()
        }
    }

    pub fn effective_fanin_budget(&self) -> usize {
        self.fanin_budget.unwrap_or_else(|| fanin_capacity(self))
    }

    pub fn max_cores(&self) -> usize {
        self.cores_per_r1 * self.r1_per_r2
    }

    pub fn rows(&self, level: RouterLevel) -> usize {
        match level {
            RouterLevel::R0 => 1,
            RouterLevel::R1 => self.r1_rows,
            RouterLevel::R2 => self.r2_rows,
        }
    }

    pub fn row_bits(&self, level: RouterLevel) -> usize {
        match level {
            RouterLevel::R0 => 1,
            RouterLevel::R1 => self.r1_row_bits,
            RouterLevel::R2 => self.r2_row_bits,
        }
    }
}

/// Architectural fan-in ceiling: every core-mate, half of each R1 sibling,
/// and a fourth of each core reachable through R2.
pub fn fanin_capacity(cfg: &FabricConfig) -> usize {
    let n = cfg.core_size;
    n.saturating_sub(1)
        + cfg.cores_per_r1.saturating_sub(1) * (n / 2)
        + cfg.r1_per_r2.saturating_sub(1) * cfg.cores_per_r1 * (n / 4)
}

/// Routing bits per neuron for a network routed up to `depth`, R0 bit included.
pub fn memory_bits_per_neuron(cfg: &FabricConfig, depth: usize) -> Result<usize> {
    Ok(1 + routing_row_bits(cfg, depth)?)
}

/// Bits held in R1/R2 rows only, excluding the R0 bit.
pub fn routing_row_bits(cfg: &FabricConfig, depth: usize) -> Result<usize> {
    let r1 = cfg.r1_rows * cfg.r1_row_bits;
    let r2 = cfg.r2_rows * cfg.r2_row_bits;
    match RouterLevel::from_depth(depth)? {
        RouterLevel::R0 => Ok(0),
        RouterLevel::R1 => Ok(r1),
        RouterLevel::R2 => Ok(r1 + r2),
    }
}

/// Part index (half, fourth, ...) of a slot in a core of `core_size` slots.
pub fn part_of(slot: usize, core_size: usize, parts: usize) -> usize {
    ((slot + 1) * parts - 1) / core_size
}

/// Row value selecting source part `src_part` for a receiver in `dst_part`.
pub fn row_code(src_part: usize, dst_part: usize, parts: usize) -> u8 {
    (((src_part + parts - dst_part) % parts) + 1) as u8
}

/// Bits needed to hold `code`.
pub fn code_bits(code: u8) -> usize {
    (u8::BITS - code.leading_zeros()) as usize
}

pub fn code_fits(code: u8, width: usize) -> bool {
    code_bits(code) <= width
}

/// Physical location of every core: R1 cluster and position under it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FabricTopology {
    cores_per_r1: usize,
    r1_per_r2: usize,
    cluster_of: Vec<usize>,
    position_of: Vec<usize>,
    clusters: Vec<Vec<usize>>,
}

impl FabricTopology {
    /// `placements[core] = (r1_cluster, position)`.
    pub fn new(cfg: &FabricConfig, placements: &[(usize, usize)]) -> Result<Self> {
        if placements.len() > cfg.max_cores() {
            return Err(Error::FabricTooSmall {
                required: placements.len(),
                available: cfg.max_cores(),
            });
        }
        let mut clusters: Vec<Vec<usize>> = vec![Vec::new(); cfg.r1_per_r2];
        let mut taken = BTreeSet::new();
        for (core, &(cluster, position)) in placements.iter().enumerate() {
            if cluster >= cfg.r1_per_r2 || position >= cfg.cores_per_r1 {
                return Err(Error::InvalidFabric(format!(
                    "core {core} placed at cluster {cluster}, position {position} outside the {}x{} tree",
                    cfg.r1_per_r2, cfg.cores_per_r1
                )));
            }
            if !taken.insert((cluster, position)) {
                return Err(Error::InvalidFabric(format!(
                    "two cores share cluster {cluster}, position {position}"
                )));
            }
            clusters[cluster].push(core);
        }
        let position_of: Vec<usize> = placements.iter().map(|p| p.1).collect();
        for members in &mut clusters {
            members.sort_by_key(|&c| position_of[c]);
        }
        while clusters.last().is_some_and(|c| c.is_empty()) {
            clusters.pop();
        }
        Ok(Self {
            cores_per_r1: cfg.cores_per_r1,
            r1_per_r2: cfg.r1_per_r2,
            cluster_of: placements.iter().map(|p| p.0).collect(),
            position_of,
            clusters,
        })
    }

    pub fn num_cores(&self) -> usize {
        self.cluster_of.len()
    }

    /// R1 routers with at least one core below them.
    pub fn num_r1(&self) -> usize {
        self.clusters.iter().filter(|c| !c.is_empty()).count()
    }

    pub fn cores_per_r1(&self) -> usize {
        self.cores_per_r1
    }

    pub fn r1_per_r2(&self) -> usize {
        self.r1_per_r2
    }

    pub fn cluster_of(&self, core: usize) -> usize {
        self.cluster_of[core]
    }

    pub fn position_of(&self, core: usize) -> usize {
        self.position_of[core]
    }

    /// Cores under an R1 router, ordered by position.
    pub fn cores_in(&self, cluster: usize) -> &[usize] {
        self.clusters.get(cluster).map_or(&[], Vec::as_slice)
    }

    pub fn clusters(&self) -> impl Iterator<Item = (usize, &[usize])> {
        self.clusters
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_empty())
            .map(|(i, c)| (i, c.as_slice()))
    }

    pub fn shares_r1(&self, a: usize, b: usize) -> bool {
        self.cluster_of[a] == self.cluster_of[b]
    }

    /// Slot of `src` among the R1 siblings of `dst` (other positions under the
    /// same R1 router, in position order).
    pub fn sibling_slot(&self, dst: usize, src: usize) -> Option<usize> {
        if dst == src || !self.shares_r1(dst, src) {
            return None;
        }
        Some(skip_own(self.position_of[src], self.position_of[dst]))
    }

    /// Slot of `src`'s R1 cluster among the R1 clusters other than `dst`'s.
    pub fn cluster_slot(&self, dst: usize, src: usize) -> Option<usize> {
        if self.shares_r1(dst, src) {
            return None;
        }
        Some(skip_own(self.cluster_of[src], self.cluster_of[dst]))
    }

    pub fn placements(&self) -> Vec<(usize, usize)> {
        self.cluster_of
            .iter()
            .copied()
            .zip(self.position_of.iter().copied())
            .collect()
    }
}

fn skip_own(other: usize, own: usize) -> usize {
    if other < own {
        other
    } else {
        other - 1
    }
}

/// Packs `num_cores` cores sequentially: core `i` sits at position
/// `i % cores_per_r1` under R1 router `i / cores_per_r1`.
pub fn build_fabric(cfg: &FabricConfig, num_cores: usize) -> Result<FabricTopology> {
    let available = cfg.max_cores();
    if num_cores > available {
        return Err(Error::FabricTooSmall {
            required: num_cores,
            available,
        });
    }
    let placements: Vec<_> = (0..num_cores)
        .map(|i| (i / cfg.cores_per_r1, i % cfg.cores_per_r1))
        .collect();
    FabricTopology::new(cfg, &placements)
}

/// Per-neuron routing rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeuronRows {
    pub r0: bool,
    pub r1: Vec<u8>,
    pub r2: Vec<u8>,
}

impl NeuronRows {
    pub fn empty(cfg: &FabricConfig) -> Self {
        Self {
            r0: false,
            r1: vec![0; cfg.r1_rows],
            r2: vec![0; cfg.r2_rows],
        }
    }

    pub fn is_all_zero(&self) -> bool {
        !self.r0 && self.r1.iter().chain(&self.r2).all(|&v| v == 0)
    }
}

/// A core's place in the router tree and its neurons in slot order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoreEntry {
    pub r1_cluster: usize,
    pub position: usize,
    pub neurons: Vec<usize>,
}

/// Compiled routing state: rows for every model neuron, core layout, and the
/// exact source->destination list served by programmable synapses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoutingTables {
    config: FabricConfig,
    cores: Vec<CoreEntry>,
    neurons: Vec<NeuronRows>,
    programmable: Vec<Edge>,
    locator: Vec<(usize, usize)>,
}

impl RoutingTables {
    pub fn new(
        config: FabricConfig,
        cores: Vec<CoreEntry>,
        neurons: Vec<NeuronRows>,
        programmable: Vec<Edge>,
    ) -> Result<Self> {
        config.validate()?;
        let bad = |msg: alloc::string::String| Err(Error::InconsistentTables(msg));
        let mut locator = vec![(usize::MAX, usize::MAX); neurons.len()];
        for (c, core) in cores.iter().enumerate() {
            if core.neurons.is_empty() || core.neurons.len() > config.core_size {
                return bad(format!(
                    "core {c} holds {} neurons, core size is {}",
                    core.neurons.len(),
                    config.core_size
                ));
            }
            for (slot, &n) in core.neurons.iter().enumerate() {
                if n >= neurons.len() {
                    return bad(format!("core {c} lists unknown neuron {n}"));
                }
                if locator[n].0 != usize::MAX {
                    return bad(format!("neuron {n} placed in more than one core"));
                }
                locator[n] = (c, slot);
            }
        }
        if let Some(n) = locator.iter().position(|l| l.0 == usize::MAX) {
            return bad(format!("neuron {n} is not placed in any core"));
        }
        for (n, rows) in neurons.iter().enumerate() {
            for (level, values) in [(RouterLevel::R1, &rows.r1), (RouterLevel::R2, &rows.r2)] {
                if values.len() != config.rows(level) {
                    return bad(format!(
                        "neuron {n} has {} {level} rows, expected {}",
                        values.len(),
                        config.rows(level)
                    ));
                }
                if let Some(&v) = values
                    .iter()
                    .find(|&&v| !code_fits(v, config.row_bits(level)))
                {
                    return bad(format!(
                        "neuron {n} {level} row value {v} is wider than {} bits",
                        config.row_bits(level)
                    ));
                }
            }
        }
        for &(s, d) in &programmable {
            if s >= neurons.len() || d >= neurons.len() || s == d {
                return bad(format!("invalid programmable synapse {s}->{d}"));
            }
        }
        let placements: Vec<_> = cores.iter().map(|c| (c.r1_cluster, c.position)).collect();
        FabricTopology::new(&config, &placements)?;
        Ok(Self {
            config,
            cores,
            neurons,
            programmable,
            locator,
        })
    }

    pub fn config(&self) -> &FabricConfig {
        &self.config
    }

    pub fn cores(&self) -> &[CoreEntry] {
        &self.cores
    }

    pub fn num_neurons(&self) -> usize {
        self.neurons.len()
    }

    pub fn rows(&self, neuron: usize) -> &NeuronRows {
        &self.neurons[neuron]
    }

    pub fn neuron_rows(&self) -> &[NeuronRows] {
        &self.neurons
    }

    pub fn programmable(&self) -> &[Edge] {
        &self.programmable
    }

    /// `(core, slot)` of a neuron.
    pub fn locate(&self, neuron: usize) -> (usize, usize) {
        self.locator[neuron]
    }

    pub fn topology(&self) -> FabricTopology {
        let placements: Vec<_> = self
            .cores
            .iter()
            .map(|c| (c.r1_cluster, c.position))
            .collect();
        FabricTopology::new(&self.config, &placements).expect("validated on construction")
    }

    /// Mutable row access, for fault injection and hand-built tables.
    pub fn rows_mut(&mut self, neuron: usize) -> &mut NeuronRows {
        &mut self.neurons[neuron]
    }
}

/// Source neurons a receiver accepts through one row setting.
pub(crate) fn row_sources(
    topology: &FabricTopology,
    cores: &[Vec<usize>],
    core_size: usize,
    level: RouterLevel,
    source_core: usize,
    part: usize,
) -> Vec<usize> {
    let (parts, source_cores): (usize, Vec<usize>) = match level {
        RouterLevel::R0 => return cores[source_core].clone(),
        RouterLevel::R1 => (R1_PARTS, vec![source_core]),
        RouterLevel::R2 => (
            R2_PARTS,
            topology.cores_in(topology.cluster_of(source_core)).to_vec(),
        ),
    };
    source_cores
        .iter()
        .flat_map(|&c| {
            cores[c]
                .iter()
                .enumerate()
                .filter(move |(slot, _)| part_of(*slot, core_size, parts) == part)
                .map(|(_, &n)| n)
        })
        .collect()
}

/// Turns a placement into routing rows.
///
/// Fails if unplaceable connections remain and `allow_partial` is not set, or
/// if the placement asks for a row setting the hierarchy cannot hold.
pub fn synthesize_tables(
    placement: &PlacementResult,
    cfg: &FabricConfig,
    allow_partial: bool,
) -> Result<RoutingTables> {
    if !allow_partial && !placement.unplaceable.is_empty() {
        return Err(Error::Unplaceable(placement.unplaceable.len()));
    }
    let assignment = &placement.assignment;
    let topology = &placement.layout.topology;
    let n = assignment.core_size();
    let num_neurons = assignment.num_neurons();
    let mut rows = vec![NeuronRows::empty(cfg); num_neurons];

    for &((src, dst), level) in &placement.placed {
        let (a, slot_s) = (assignment.core_of(src), assignment.slot_of(src));
        let (b, slot_d) = (assignment.core_of(dst), assignment.slot_of(dst));
        let collision = |reason| Error::RowCollision { src, dst, reason };
        let (row, parts, values) = match level {
            RouterLevel::R0 => {
                if a != b {
                    return Err(collision("R0 connection crosses cores"));
                }
                for &m in assignment.members(b) {
                    rows[m].r0 = true;
                }
                continue;
            }
            RouterLevel::R1 => (
                topology.sibling_slot(b, a).ok_or_else(|| {
                    collision("R1 connection between cores of different R1 routers")
                })?,
                R1_PARTS,
                &mut rows[dst].r1,
            ),
            RouterLevel::R2 => (
                topology
                    .cluster_slot(b, a)
                    .ok_or_else(|| collision("R2 connection inside one R1 router"))?,
                R2_PARTS,
                &mut rows[dst].r2,
            ),
        };
        if row >= values.len() {
            return Err(collision("source slot has no routing row"));
        }
        let code = row_code(part_of(slot_s, n, parts), part_of(slot_d, n, parts), parts);
        if !code_fits(code, cfg.row_bits(level)) {
            return Err(collision("part offset does not fit the row width"));
        }
        match values[row] {
            0 => values[row] = code,
            v if v == code => {}
            _ => return Err(collision("row already selects a different part")),
        }
    }

    // Every source a row admits must be a model connection into that neuron.
    let model: BTreeSet<Edge> = placement
        .placed
        .iter()
        .map(|&(e, _)| e)
        .chain(placement.programmable.iter().copied())
        .chain(placement.unplaceable.iter().copied())
        .collect();
    let cores: Vec<Vec<usize>> = (0..assignment.num_cores())
        .map(|c| assignment.members(c).to_vec())
        .collect();
    for (dst, dst_rows) in rows.iter().enumerate().take(num_neurons) {
        let b = assignment.core_of(dst);
        let slot_d = assignment.slot_of(dst);
        for a in 0..assignment.num_cores() {
            for (level, parts) in [(RouterLevel::R1, R1_PARTS), (RouterLevel::R2, R2_PARTS)] {
                let slot = match level {
                    RouterLevel::R1 => topology.sibling_slot(b, a),
                    _ => topology.cluster_slot(b, a),
                };
                let Some(row) = slot else { continue };
                let values = if level == RouterLevel::R1 {
                    &dst_rows.r1
                } else {
                    &dst_rows.r2
                };
                let code = values.get(row).copied().unwrap_or(0);
                if code == 0 {
                    continue;
                }
                let part = (part_of(slot_d, n, parts) + code as usize - 1) % parts;
                for src in row_sources(topology, &cores, n, level, a, part) {
                    if !model.contains(&(src, dst)) {
                        return Err(Error::RowCollision {
                            src,
                            dst,
                            reason: "row would over-deliver beyond its half/fourth granularity",
                        });
                    }
                }
            }
        }
    }

    let core_entries = cores
        .into_iter()
        .enumerate()
        .map(|(c, neurons)| CoreEntry {
            r1_cluster: topology.cluster_of(c),
            position: topology.position_of(c),
            neurons,
        })
        .collect();
    RoutingTables::new(
        cfg.clone(),
        core_entries,
        rows,
        placement.programmable.clone(),
    )
}
