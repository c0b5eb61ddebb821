//! Deviation sweep over neuron removals and an exhaustive placement oracle.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::clique::SupportGraph;
use crate::error::{Error, Result};
use crate::fabric::{memory_bits_per_neuron, FabricConfig, RouterLevel};
use crate::netmodel::{remove_neurons, NetworkModel};
use crate::placer::{compile, compile_with_assignment, CoreAssignment};
use crate::report::Mean;

/// Largest network the exhaustive oracle accepts.
pub const ORACLE_NEURON_LIMIT: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Enumeration {
    /// Every victim combination.
    All,
    /// At most `count` distinct combinations drawn with `seed`.
    Sampled { count: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepSpec {
    pub removals: Vec<usize>,
    pub core_sizes: Vec<usize>,
    pub enumeration: Enumeration,
}

impl SweepSpec {
    pub fn validate(&self, num_neurons: usize) -> Result<()> {
        if let Some(&k) = self.removals.iter().find(|&&k| k >= num_neurons && k > 0) {
            return Err(Error::InvalidSweep(format!(
                "cannot remove {k} of {num_neurons} neurons"
            )));
        }
        if self.core_sizes.contains(&0) {
            return Err(Error::InvalidSweep("core sizes must be at least 1".into()));
        }
        Ok(())
    }
}

/// `C(n, k)`, or `None` on overflow.
pub fn binomial(n: usize, k: usize) -> Option<usize> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    usize::try_from(acc).ok()
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut c: Vec<usize> = (0..k).collect();
    loop {
        out.push(c.clone());
        let Some(i) = (0..k).rev().find(|&i| c[i] < n - k + i) else {
            return out;
        };
        c[i] += 1;
        for j in i + 1..k {
            c[j] = c[j - 1] + 1;
        }
    }
}

/// The `rank`-th `k`-subset of `0..n` in lexicographic order.
pub fn unrank_combination(n: usize, k: usize, mut rank: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(k);
    let mut next = 0;
    for remaining in (1..=k).rev() {
        loop {
            let with = binomial(n - next - 1, remaining - 1).unwrap_or(usize::MAX);
            if rank < with {
                break;
            }
            rank -= with;
            next += 1;
        }
        out.push(next);
        next += 1;
    }
    out
}

/// Victim sets for removing `k` of `n` neurons, in lexicographic order.
pub fn victim_sets(n: usize, k: usize, enumeration: Enumeration) -> Result<Vec<Vec<usize>>> {
    let total = binomial(n, k)
        .ok_or_else(|| Error::InvalidSweep(format!("C({n}, {k}) does not fit in memory")))?;
    match enumeration {
        Enumeration::Sampled { count, seed } if count < total => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut ranks = index::sample(&mut rng, total, count).into_vec();
            ranks.sort_unstable();
            Ok(ranks
                .into_iter()
                .map(|r| unrank_combination(n, k, r))
                .collect())
        }
        _ => Ok(combinations(n, k)),
    }
}

/// Metrics of one compiled sweep instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceRow {
    pub k: usize,
    pub core_size: usize,
    pub victims: Vec<usize>,
    pub num_neurons: usize,
    pub num_cores: usize,
    pub depth: RouterLevel,
    pub extra_neurons: usize,
    pub programmable: usize,
    pub unplaceable: usize,
    pub total_bits: usize,
}

/// Aggregate over all instances of one `(k, core_size)` pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepCell {
    pub k: usize,
    pub core_size: usize,
    pub samples: u64,
    pub extra_sum: u64,
    pub unplaceable_sum: u64,
    pub total_bits_sum: u64,
}

impl SweepCell {
    pub fn mean_extra(&self) -> Mean {
        Mean::new(self.extra_sum, self.samples)
    }

    pub fn mean_unplaceable(&self) -> Mean {
        Mean::new(self.unplaceable_sum, self.samples)
    }

    pub fn mean_total_bits(&self) -> Mean {
        Mean::new(self.total_bits_sum, self.samples)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepResult {
    /// Ordered by `k`, then core size.
    pub cells: Vec<SweepCell>,
    /// Ordered by `k`, victims, then core size.
    pub rows: Vec<InstanceRow>,
}

impl SweepResult {
    pub fn cell(&self, k: usize, core_size: usize) -> Option<&SweepCell> {
        self.cells
            .iter()
            .find(|c| c.k == k && c.core_size == core_size)
    }
}

/// One unit of sweep work: a removal count and its victim set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepJob {
    pub k: usize,
    pub victims: Vec<usize>,
}

/// Every `(k, victims)` pair named by a [`SweepSpec`].
pub fn sweep_jobs(base: &NetworkModel, spec: &SweepSpec) -> Result<Vec<SweepJob>> {
    spec.validate(base.num_neurons())?;
    let removals: BTreeSet<usize> = spec.removals.iter().copied().collect();
    let mut jobs = Vec::new();
    for k in removals {
        for victims in victim_sets(base.num_neurons(), k, spec.enumeration)? {
            jobs.push(SweepJob { k, victims });
        }
    }
    Ok(jobs)
}

/// Compiles the base network minus `victims` with the given core size.
pub fn evaluate_instance(
    base: &NetworkModel,
    job: &SweepJob,
    template: &FabricConfig,
    core_size: usize,
) -> Result<InstanceRow> {
    let victims: BTreeSet<usize> = job.victims.iter().copied().collect();
    let net = remove_neurons(base, &victims)?;
    let cfg = template.with_core_size(core_size);
    let compiled = compile(&net, &cfg)?;
    let p = &compiled.placement;
    let num_cores = p.assignment.num_cores();
    Ok(InstanceRow {
        k: job.k,
        core_size,
        victims: job.victims.clone(),
        num_neurons: net.num_neurons(),
        num_cores,
        depth: p.depth,
        extra_neurons: p.extra_neurons,
        programmable: p.programmable.len(),
        unplaceable: p.unplaceable.len(),
        total_bits: memory_bits_per_neuron(&cfg, p.depth.depth())? * num_cores * core_size,
    })
}

/// Sums rows into one cell per `(k, core_size)` of the spec. The result does
/// not depend on row order.
pub fn aggregate(spec: &SweepSpec, rows: &[InstanceRow]) -> Vec<SweepCell> {
    let ks: BTreeSet<usize> = spec.removals.iter().copied().collect();
    let sizes: BTreeSet<usize> = spec.core_sizes.iter().copied().collect();
    let mut cells = Vec::new();
    for &k in &ks {
        for &core_size in &sizes {
            let mut cell = SweepCell {
                k,
                core_size,
                samples: 0,
                extra_sum: 0,
                unplaceable_sum: 0,
                total_bits_sum: 0,
            };
            for r in rows.iter().filter(|r| r.k == k && r.core_size == core_size) {
                cell.samples += 1;
                cell.extra_sum += r.extra_neurons as u64;
                cell.unplaceable_sum += r.unplaceable as u64;
                cell.total_bits_sum += r.total_bits as u64;
            }
            cells.push(cell);
        }
    }
    cells
}

/// Sorts rows into the canonical sweep order.
pub fn sort_rows(rows: &mut [InstanceRow]) {
    rows.sort_by(|a, b| (a.k, &a.victims, a.core_size).cmp(&(b.k, &b.victims, b.core_size)));
}

/// Removes every victim combination of every `k` from `base` and compiles
/// the result for each core size.
pub fn deviation_sweep(
    base: &NetworkModel,
    spec: &SweepSpec,
    template: &FabricConfig,
) -> Result<SweepResult> {
    let sizes: BTreeSet<usize> = spec.core_sizes.iter().copied().collect();
    let mut rows = Vec::new();
    for job in sweep_jobs(base, spec)? {
        for &size in &sizes {
            rows.push(evaluate_instance(base, &job, template, size)?);
        }
    }
    sort_rows(&mut rows);
    Ok(SweepResult {
        cells: aggregate(spec, &rows),
        rows,
    })
}

/// Best placement found by exhaustive search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    pub num_cores: usize,
    pub extra_neurons: usize,
    pub unplaceable: usize,
    /// Clique partitions with the minimum core count that were compiled.
    pub partitions_evaluated: usize,
    pub assignment: CoreAssignment,
}

/// Minimum extra neurons over every partition of the neurons into cliques of
/// at most `cfg.core_size`, then minimum unplaceable connections over the
/// partitions reaching that minimum, placed with the regular placement rules.
pub fn exhaustive_oracle(net: &NetworkModel, cfg: &FabricConfig) -> Result<OracleResult> {
    cfg.validate()?;
    let n = net.num_neurons();
    if n > ORACLE_NEURON_LIMIT {
        return Err(Error::OracleTooLarge {
            neurons: n,
            limit: ORACLE_NEURON_LIMIT,
        });
    }
    let search = PartitionSearch {
        g: SupportGraph::from_network(net),
        cap: cfg.core_size,
        n,
    };
    let mut best = n.max(1);
    let mut blocks = Vec::new();
    search.min_cores(0, &mut blocks, &mut best);
    let min_cores = if n == 0 { 0 } else { best };

    let mut found: Option<OracleResult> = None;
    let mut evaluated = 0;
    let mut error = None;
    search.each_partition(0, &mut Vec::new(), min_cores, &mut |cores| {
        evaluated += 1;
        let result = CoreAssignment::from_cores(n, cfg.core_size, cores.to_vec())
            .and_then(|a| compile_with_assignment(net, &a, cfg).map(|c| (a, c)));
        let (assignment, compiled) = match result {
            Ok(ok) => ok,
            Err(e) => {
                error = Some(e);
                return false;
            }
        };
        let unplaceable = compiled.placement.unplaceable.len();
        if found.as_ref().is_none_or(|f| unplaceable < f.unplaceable) {
            found = Some(OracleResult {
                num_cores: min_cores,
                extra_neurons: min_cores * cfg.core_size - n,
                unplaceable,
                partitions_evaluated: 0,
                assignment,
            });
        }
        unplaceable > 0
    });
    if let Some(e) = error {
        return Err(e);
    }
    let mut result = found.ok_or_else(|| Error::InvalidNetwork("network has no neurons".into()))?;
    result.partitions_evaluated = evaluated;
    Ok(result)
}

struct PartitionSearch {
    g: SupportGraph,
    cap: usize,
    n: usize,
}

impl PartitionSearch {
    fn fits(&self, block: &[usize], v: usize) -> bool {
        block.len() < self.cap && block.iter().all(|&u| self.g.is_adjacent(u, v))
    }

    // Neurons are placed in id order, each into an existing block or a new
    // one, so every set partition is produced exactly once.
    fn min_cores(&self, v: usize, blocks: &mut Vec<Vec<usize>>, best: &mut usize) {
        if v < self.n && blocks.len() + self.must_open(v, blocks) >= *best {
            return;
        }
        if v == self.n {
            *best = (*best).min(blocks.len());
            return;
        }
        for i in 0..blocks.len() {
            if self.fits(&blocks[i], v) {
                blocks[i].push(v);
                self.min_cores(v + 1, blocks, best);
                blocks[i].pop();
            }
        }
        blocks.push(vec![v]);
        self.min_cores(v + 1, blocks, best);
        blocks.pop();
    }

    // Blocks that must still be opened once open blocks are filled up.
    fn must_open(&self, v: usize, blocks: &[Vec<usize>]) -> usize {
        let room: usize = blocks.iter().map(|b| self.cap - b.len()).sum();
        (self.n - v).saturating_sub(room).div_ceil(self.cap)
    }

    /// Calls `visit` on every partition with exactly `target` blocks until it
    /// returns false. Returns false once stopped.
    fn each_partition(
        &self,
        v: usize,
        blocks: &mut Vec<Vec<usize>>,
        target: usize,
        visit: &mut dyn FnMut(&[Vec<usize>]) -> bool,
    ) -> bool {
        if v == self.n {
            return blocks.len() != target || visit(blocks);
        }
        if blocks.len() + self.must_open(v, blocks) > target {
            return true;
        }
        for i in 0..blocks.len() {
            if self.fits(&blocks[i], v) {
                blocks[i].push(v);
                let go_on = self.each_partition(v + 1, blocks, target, visit);
                blocks[i].pop();
                if !go_on {
                    return false;
                }
            }
        }
        if blocks.len() < target {
            blocks.push(vec![v]);
            let go_on = self.each_partition(v + 1, blocks, target, visit);
            blocks.pop();
            return go_on;
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(16, 3), Some(560));
        assert_eq!(binomial(16, 0), Some(1));
        assert_eq!(binomial(3, 5), Some(0));
    }

    #[test]
    fn combinations_match_binomial_and_unrank() {
        for n in 0..8 {
            for k in 0..=n {
                let all = combinations(n, k);
                assert_eq!(all.len(), binomial(n, k).unwrap());
                for (r, c) in all.iter().enumerate() {
                    assert_eq!(&unrank_combination(n, k, r), c);
                }
            }
        }
    }

    #[test]
    fn sampling_is_a_reproducible_subset() {
        let mode = Enumeration::Sampled { count: 10, seed: 7 };
        let a = victim_sets(16, 3, mode).unwrap();
        assert_eq!(a, victim_sets(16, 3, mode).unwrap());
        assert_eq!(a.len(), 10);
        let all = combinations(16, 3);
        assert!(a.iter().all(|c| all.contains(c)));
    }

    #[test]
    fn oracle_small_cases() {
        let pair = NetworkModel::new(2, [(0, 1), (1, 0)]).unwrap();
        let cfg = FabricConfig::default().with_core_size(2);
        let r = exhaustive_oracle(&pair, &cfg).unwrap();
        assert_eq!((r.extra_neurons, r.unplaceable), (0, 0));

        let tri = NetworkModel::new(3, [(0, 1), (1, 0), (1, 2), (2, 1), (0, 2), (2, 0)]).unwrap();
        let r = exhaustive_oracle(&tri, &cfg).unwrap();
        assert_eq!((r.num_cores, r.extra_neurons), (2, 1));
    }

    #[test]
    fn oracle_rejects_large_networks() {
        let net = NetworkModel::new(17, []).unwrap();
        assert_eq!(
            exhaustive_oracle(&net, &FabricConfig::default().with_core_size(1)).unwrap_err(),
            Error::OracleTooLarge {
                neurons: 17,
                limit: 16
            }
        );
    }
}
