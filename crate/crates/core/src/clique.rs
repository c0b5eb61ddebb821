//! Capped maximum-clique extraction on the undirected support graph.

use alloc::vec::Vec;

use fixedbitset::FixedBitSet;

use crate::netmodel::NetworkModel;

/// Remaining-vertex count up to which clique search is exact.
pub const EXACT_SEARCH_LIMIT: usize = 64;

/// Undirected graph where `u ~ v` iff both `u -> v` and `v -> u` exist.
#[derive(Debug, Clone)]
pub struct SupportGraph {
    adj: Vec<FixedBitSet>,
}

impl SupportGraph {
    pub fn from_network(net: &NetworkModel) -> Self {
        let n = net.num_neurons();
        let mut adj = alloc::vec![FixedBitSet::with_capacity(n); n];
        for &(s, d) in net.edges() {
            if s < d && net.has_edge(d, s) {
                adj[s].insert(d);
                adj[d].insert(s);
            }
        }
        Self { adj }
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn is_adjacent(&self, u: usize, v: usize) -> bool {
        self.adj[u].contains(v)
    }

    pub fn neighbors(&self, v: usize) -> &FixedBitSet {
        &self.adj[v]
    }

    pub fn is_clique(&self, vertices: &[usize]) -> bool {
        vertices
            .iter()
            .enumerate()
            .all(|(i, &u)| vertices[i + 1..].iter().all(|&v| self.is_adjacent(u, v)))
    }

    fn full_set(&self) -> FixedBitSet {
        let mut s = FixedBitSet::with_capacity(self.len());
        s.insert_range(..);
        s
    }
}

/// Best clique of size at most `cap` among `alive` vertices: exact search when
/// at most [`EXACT_SEARCH_LIMIT`] vertices remain, greedy otherwise.
pub fn best_capped_clique(g: &SupportGraph, alive: &FixedBitSet, cap: usize) -> Vec<usize> {
    if alive.count_ones(..) <= EXACT_SEARCH_LIMIT {
        exact_capped_clique(g, alive, cap)
    } else {
        greedy_capped_clique(g, alive, cap)
    }
}

/// Largest clique of size at most `cap` within `alive`. Among equally large
/// ones it takes the clique holding the member with the fewest alive
/// neighbors, then the lexicographically smallest sorted vertex list.
pub fn exact_capped_clique(g: &SupportGraph, alive: &FixedBitSet, cap: usize) -> Vec<usize> {
    if cap == 0 || alive.is_clear() {
        return Vec::new();
    }
    let degree: Vec<usize> = (0..g.len())
        .map(|v| {
            if alive.contains(v) {
                g.adj[v].intersection_count(alive)
            } else {
                0
            }
        })
        .collect();
    let max_degree = alive.ones().map(|v| degree[v]).max().unwrap_or(0);
    let upper = cap.min(max_degree + 1).min(color_bound(g, alive));
    for target in (1..=upper).rev() {
        let mut search = Search {
            g,
            degree: &degree,
            target,
            chosen: Vec::with_capacity(target),
            best: None,
        };
        search.extend(alive.clone(), usize::MAX);
        if let Some((_, clique)) = search.best {
            return clique;
        }
    }
    unreachable!("a non-empty vertex set always holds a 1-clique")
}

struct Search<'a> {
    g: &'a SupportGraph,
    degree: &'a [usize],
    target: usize,
    chosen: Vec<usize>,
    best: Option<(usize, Vec<usize>)>,
}

impl Search<'_> {
    // Depth-first over increasing vertex ids, so among cliques with the same
    // key the first one found is lexicographically smallest. `cand` only ever
    // holds vertices above the last chosen one.
    fn extend(&mut self, mut cand: FixedBitSet, min_degree: usize) {
        if self.chosen.len() == self.target {
            if self.best.as_ref().is_none_or(|(b, _)| min_degree < *b) {
                self.best = Some((min_degree, self.chosen.clone()));
            }
            return;
        }
        let need = self.target - self.chosen.len();
        if cand.count_ones(..) < need || color_bound(self.g, &cand) < need {
            return;
        }
        let order: Vec<usize> = cand.ones().collect();
        for v in order {
            if let Some((b, _)) = self.best {
                let reachable = cand
                    .ones()
                    .map(|w| self.degree[w])
                    .min()
                    .unwrap_or(usize::MAX);
                if min_degree.min(reachable) >= b {
                    return;
                }
            }
            let mut next = cand.clone();
            next.intersect_with(&self.g.adj[v]);
            next.remove_range(..v + 1);
            self.chosen.push(v);
            self.extend(next, min_degree.min(self.degree[v]));
            self.chosen.pop();
            cand.set(v, false);
            if cand.count_ones(..) < need {
                break;
            }
        }
    }
}

/// Number of colors used by a sequential greedy coloring; bounds clique size.
fn color_bound(g: &SupportGraph, set: &FixedBitSet) -> usize {
    let mut classes: Vec<FixedBitSet> = Vec::new();
    for v in set.ones() {
        match classes.iter_mut().find(|c| c.is_disjoint(&g.adj[v])) {
            Some(c) => c.grow_and_insert(v),
            None => {
                let mut c = FixedBitSet::with_capacity(g.len());
                c.insert(v);
                classes.push(c);
            }
        }
    }
    classes.len()
}

/// Degeneracy-ordered greedy clique: each vertex seeds a clique grown from its
/// later neighbors, always adding the candidate with most candidate neighbors.
pub fn greedy_capped_clique(g: &SupportGraph, alive: &FixedBitSet, cap: usize) -> Vec<usize> {
    if cap == 0 || alive.is_clear() {
        return Vec::new();
    }
    let order = degeneracy_order(g, alive);
    let mut later = alive.clone();
    let mut best: Vec<usize> = Vec::new();
    for &v in &order {
        later.set(v, false);
        let mut cand = g.adj[v].clone();
        cand.intersect_with(&later);
        let mut clique = alloc::vec![v];
        while clique.len() < cap {
            let pick = cand
                .ones()
                .map(|w| (g.adj[w].intersection_count(&cand), w))
                .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
            let Some((_, w)) = pick else { break };
            clique.push(w);
            cand.intersect_with(&g.adj[w]);
        }
        clique.sort_unstable();
        if clique.len() > best.len() || (clique.len() == best.len() && clique < best) {
            best = clique;
        }
    }
    best
}

// Smallest-last ordering: repeatedly remove a minimum-degree vertex.
fn degeneracy_order(g: &SupportGraph, alive: &FixedBitSet) -> Vec<usize> {
    let mut rest = alive.clone();
    let mut order = Vec::with_capacity(rest.count_ones(..));
    while let Some(v) = rest
        .ones()
        .min_by_key(|&v| (g.adj[v].intersection_count(&rest), v))
    {
        rest.set(v, false);
        order.push(v);
    }
    order
}

/// Vertex set containing every vertex of `g`.
pub fn all_vertices(g: &SupportGraph) -> FixedBitSet {
    g.full_set()
}
