//! Spiking network graphs, the canonical small-world generator and
//! connectivity matrices.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Directed connection `(source, destination)`.
pub type Edge = (usize, usize);

/// Sign of a connection. Carried as metadata only; placement never reads it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeSign {
    Excitatory,
    Inhibitory,
}

/// Directed neuron graph with dense ids `0..num_neurons`.
///
/// Optional population labels group neurons; `labels` keeps the id each
/// neuron had before renormalization (identity for freshly built networks).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkModel {
    num_neurons: usize,
    edges: BTreeSet<Edge>,
    populations: Option<Vec<Vec<usize>>>,
    signs: BTreeMap<Edge, EdgeSign>,
    labels: Vec<usize>,
}

impl NetworkModel {
    pub fn new(num_neurons: usize, edges: impl IntoIterator<Item = Edge>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (src, dst) in edges {
            if src >= num_neurons {
                return Err(Error::UnknownNeuron(src));
            }
            if dst >= num_neurons {
                return Err(Error::UnknownNeuron(dst));
            }
            if src == dst {
                return Err(Error::SelfEdge(src));
            }
            set.insert((src, dst));
        }
        Ok(Self {
            num_neurons,
            edges: set,
            populations: None,
            signs: BTreeMap::new(),
            labels: (0..num_neurons).collect(),
        })
    }

    /// Attaches population membership lists. Populations may be empty, but a
    /// neuron may belong to at most one.
    pub fn with_populations(mut self, populations: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; self.num_neurons];
        let mut normalized = Vec::with_capacity(populations.len());
        for members in populations {
            let mut members = members;
            members.sort_unstable();
            for &n in &members {
                if n >= self.num_neurons {
                    return Err(Error::UnknownNeuron(n));
                }
                if seen[n] {
                    return Err(Error::InvalidNetwork(format!(
                        "neuron {n} appears in more than one population"
                    )));
                }
                seen[n] = true;
            }
            normalized.push(members);
        }
        self.populations = Some(normalized);
        Ok(self)
    }

    pub fn with_signs(mut self, signs: BTreeMap<Edge, EdgeSign>) -> Result<Self> {
        for &(src, dst) in signs.keys() {
            if !self.edges.contains(&(src, dst)) {
                return Err(Error::InvalidNetwork(format!(
                    "sign given for missing connection {src}-{dst}"
                )));
            }
        }
        self.signs = signs;
        Ok(self)
    }

    /// Replaces the original-id side map.
    pub fn with_labels(mut self, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != self.num_neurons {
            return Err(Error::InvalidNetwork(format!(
                "{} labels for {} neurons",
                labels.len(),
                self.num_neurons
            )));
        }
        let distinct: BTreeSet<_> = labels.iter().collect();
        if distinct.len() != labels.len() {
            return Err(Error::InvalidNetwork("duplicate neuron labels".into()));
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn num_neurons(&self) -> usize {
        self.num_neurons
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &BTreeSet<Edge> {
        &self.edges
    }

    pub fn has_edge(&self, src: usize, dst: usize) -> bool {
        self.edges.contains(&(src, dst))
    }

    pub fn populations(&self) -> Option<&[Vec<usize>]> {
        self.populations.as_deref()
    }

    pub fn population_of(&self, neuron: usize) -> Option<usize> {
        self.populations
            .as_ref()?
            .iter()
            .position(|members| members.binary_search(&neuron).is_ok())
    }

    pub fn signs(&self) -> &BTreeMap<Edge, EdgeSign> {
        &self.signs
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn has_identity_labels(&self) -> bool {
        self.labels.iter().enumerate().all(|(i, &l)| i == l)
    }

    pub fn out_degree(&self, neuron: usize) -> usize {
        self.edges.range((neuron, 0)..=(neuron, usize::MAX)).count()
    }

    pub fn in_degree(&self, neuron: usize) -> usize {
        self.edges.iter().filter(|&&(_, dst)| dst == neuron).count()
    }
}

/// Number of inter-population connections per ordered population pair, as a
/// function of population distance `d = |p - q|`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DecayProfile {
    counts: BTreeMap<usize, usize>,
}

impl DecayProfile {
    /// Distances must be at least 1 and counts non-increasing in distance;
    /// missing distances count as zero.
    pub fn new(counts: BTreeMap<usize, usize>) -> Result<Self> {
        if counts.contains_key(&0) {
            return Err(Error::InvalidProfile(
                "distance 0 is not an inter-population distance".into(),
            ));
        }
        let max_d = counts.keys().next_back().copied().unwrap_or(0);
        let mut prev = usize::MAX;
        for d in 1..=max_d {
            let c = counts.get(&d).copied().unwrap_or(0);
            if c > prev {
                return Err(Error::InvalidProfile(format!(
                    "count {c} at distance {d} exceeds count {prev} at distance {}",
                    d - 1
                )));
            }
            prev = c;
        }
        Ok(Self { counts })
    }

    /// `c(d) = ceil(pop_size / 2^d)` for every distance present in a line of
    /// `num_populations` populations.
    pub fn exponential(pop_size: usize, num_populations: usize) -> Self {
        let counts = (1..num_populations)
            .map(|d| {
                let denom = 1usize.checked_shl(d as u32).unwrap_or(usize::MAX);
                (d, pop_size.div_ceil(denom))
            })
            .collect();
        Self { counts }
    }

    pub fn count(&self, distance: usize) -> usize {
        self.counts.get(&distance).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &BTreeMap<usize, usize> {
        &self.counts
    }
}

/// Builds the canonical network: `num_populations` all-to-all populations on a
/// line, with `profile.count(d)` connections in each direction between
/// populations `d` apart.
///
/// Inter-population endpoints follow a round robin: the `t`-th connection from
/// population `p` to `q` joins local index `(o + t) mod s` of `p` to local index
/// `(o + t + t / s) mod s` of `q`, where `o = seed mod s`. The first `s` pairs
/// are therefore index-aligned, and the first `s^2` are all distinct.
pub fn build_canonical(
    num_populations: usize,
    pop_size: usize,
    profile: &DecayProfile,
    seed: u64,
) -> Result<NetworkModel> {
    if num_populations == 0 || pop_size == 0 {
        return Err(Error::InvalidNetwork(
            "population count and size must be positive".into(),
        ));
    }
    for (&d, &c) in profile.counts() {
        if c > 0 && d >= num_populations {
            return Err(Error::InvalidProfile(format!(
                "distance {d} carries {c} connections but only {num_populations} populations exist"
            )));
        }
        if c > pop_size * pop_size {
            return Err(Error::InvalidProfile(format!(
                "distance {d} asks for {c} connections per pair, at most {} possible",
                pop_size * pop_size
            )));
        }
    }

    let n = num_populations * pop_size;
    let offset = (seed % pop_size as u64) as usize;
    let mut edges = Vec::new();
    for p in 0..num_populations {
        let base = p * pop_size;
        for i in 0..pop_size {
            for j in 0..pop_size {
                if i != j {
                    edges.push((base + i, base + j));
                }
            }
        }
    }
    for p in 0..num_populations {
        for q in 0..num_populations {
            if p == q {
                continue;
            }
            let count = profile.count(p.abs_diff(q));
            for t in 0..count {
                let src = p * pop_size + (offset + t) % pop_size;
                let dst = q * pop_size + (offset + t + t / pop_size) % pop_size;
                edges.push((src, dst));
            }
        }
    }
    let populations = (0..num_populations)
        .map(|p| (p * pop_size..(p + 1) * pop_size).collect())
        .collect();
    NetworkModel::new(n, edges)?.with_populations(populations)
}

/// Removes `victims` and renumbers the survivors densely, preserving their
/// relative order, population membership, signs and original labels.
pub fn remove_neurons(net: &NetworkModel, victims: &BTreeSet<usize>) -> Result<NetworkModel> {
    if let Some(&bad) = victims.iter().find(|&&v| v >= net.num_neurons) {
        return Err(Error::UnknownNeuron(bad));
    }
    let mut remap = vec![None; net.num_neurons];
    let mut next = 0;
    for (old, slot) in remap.iter_mut().enumerate() {
        if !victims.contains(&old) {
            *slot = Some(next);
            next += 1;
        }
    }
    let map_edge = |&(s, d): &Edge| Some((remap[s]?, remap[d]?));
    let edges: Vec<Edge> = net.edges.iter().filter_map(map_edge).collect();
    let mut out = NetworkModel::new(next, edges)?;
    if let Some(pops) = &net.populations {
        let pops = pops
            .iter()
            .map(|members| members.iter().filter_map(|&m| remap[m]).collect())
            .collect();
        out = out.with_populations(pops)?;
    }
    out.signs = net
        .signs
        .iter()
        .filter_map(|(e, &s)| Some((map_edge(e)?, s)))
        .collect();
    out.labels = net
        .labels
        .iter()
        .enumerate()
        .filter(|(old, _)| remap[*old].is_some())
        .map(|(_, &l)| l)
        .collect();
    Ok(out)
}

/// `m[i][j] == 1` iff `i -> j` is a connection.
pub fn adjacency_matrix(net: &NetworkModel) -> Vec<Vec<u8>> {
    let mut m = vec![vec![0u8; net.num_neurons]; net.num_neurons];
    for &(s, d) in &net.edges {
        m[s][d] = 1;
    }
    m
}

/// `c[a][b]` counts connections from cluster `a` into cluster `b`.
/// `grouping[n]` is the cluster of neuron `n`; clusters are `0..=max`.
pub fn inter_cluster_counts(net: &NetworkModel, grouping: &[usize]) -> Result<Vec<Vec<usize>>> {
    if grouping.len() < net.num_neurons {
        return Err(Error::Unassigned(grouping.len()));
    }
    let clusters = grouping[..net.num_neurons]
        .iter()
        .max()
        .map_or(0, |&m| m + 1);
    let mut c = vec![vec![0usize; clusters]; clusters];
    for &(s, d) in &net.edges {
        c[grouping[s]][grouping[d]] += 1;
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn canonical() -> NetworkModel {
        build_canonical(4, 4, &DecayProfile::exponential(4, 4), 0).unwrap()
    }

    #[test]
    fn default_profile_for_four_by_four() {
        let p = DecayProfile::exponential(4, 4);
        assert_eq!(p.count(1), 2);
        assert_eq!(p.count(2), 1);
        assert_eq!(p.count(3), 1);
        assert_eq!(p.count(4), 0);
    }

    #[test]
    fn increasing_profile_rejected() {
        let counts = [(1, 1), (2, 2)].into_iter().collect();
        assert!(matches!(
            DecayProfile::new(counts),
            Err(Error::InvalidProfile(_))
        ));
        let gap = [(1, 1), (3, 1)].into_iter().collect();
        assert!(DecayProfile::new(gap).is_err());
    }

    #[test]
    fn profile_beyond_population_span_is_reported() {
        let counts = [(1, 1), (2, 1)].into_iter().collect();
        let p = DecayProfile::new(counts).unwrap();
        let err = build_canonical(2, 3, &p, 0).unwrap_err();
        assert!(matches!(err, Error::InvalidProfile(_)));
        // zero counts past the span are fine
        let zero = DecayProfile::new([(1, 1), (2, 0)].into_iter().collect()).unwrap();
        assert!(build_canonical(2, 3, &zero, 0).is_ok());
    }

    #[test]
    fn single_neuron_has_no_edges() {
        let net = build_canonical(1, 1, &DecayProfile::exponential(1, 1), 7).unwrap();
        assert_eq!(net.num_neurons(), 1);
        assert_eq!(net.num_edges(), 0);
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn canonical_population_blocks_are_complete() {
        let net = canonical();
        assert_eq!(net.num_neurons(), 16);
        let m = adjacency_matrix(&net);
        for p in 0..4 {
            let mut intra = 0;
            for i in 4 * p..4 * p + 4 {
                for j in 4 * p..4 * p + 4 {
                    if i == j {
                        assert_eq!(m[i][j], 0);
                    } else {
                        assert_eq!(m[i][j], 1);
                        intra += 1;
                    }
                }
            }
            assert_eq!(intra, 12);
        }
    }

    #[test]
    fn self_edges_and_unknown_ids_rejected() {
        assert_eq!(NetworkModel::new(2, [(1, 1)]), Err(Error::SelfEdge(1)));
        assert_eq!(NetworkModel::new(2, [(0, 2)]), Err(Error::UnknownNeuron(2)));
    }

    #[test]
    fn removal_of_unknown_neuron_names_it() {
        let net = canonical();
        let err = remove_neurons(&net, &[3, 99].into_iter().collect()).unwrap_err();
        assert_eq!(err, Error::UnknownNeuron(99));
    }

    #[test]
    fn removal_keeps_populations_and_labels() {
        let net = canonical();
        let out = remove_neurons(&net, &[0].into_iter().collect()).unwrap();
        assert_eq!(out.num_neurons(), 15);
        let pops = out.populations().unwrap();
        assert_eq!(pops[0], vec![0, 1, 2]);
        assert_eq!(pops[1], vec![3, 4, 5, 6]);
        assert_eq!(out.labels()[0], 1);
        assert!(!out.has_identity_labels());
    }

    #[test]
    fn empty_removal_is_identity() {
        let net = canonical();
        assert_eq!(remove_neurons(&net, &BTreeSet::new()).unwrap(), net);
    }

    #[test]
    fn single_cluster_counts_every_edge() {
        let net = canonical();
        let c = inter_cluster_counts(&net, &[0; 16]).unwrap();
        assert_eq!(c, vec![vec![net.num_edges()]]);
    }

    #[test]
    fn missing_cluster_assignment_is_an_error() {
        let net = canonical();
        assert_eq!(
            inter_cluster_counts(&net, &[0; 10]),
            Err(Error::Unassigned(10))
        );
    }

    #[test]
    fn signs_must_reference_edges() {
        let net = NetworkModel::new(2, [(0, 1)]).unwrap();
        let ok = [((0, 1), EdgeSign::Inhibitory)].into_iter().collect();
        assert!(net.clone().with_signs(ok).is_ok());
        let bad = [((1, 0), EdgeSign::Excitatory)].into_iter().collect();
        assert!(net.with_signs(bad).is_err());
    }
}
