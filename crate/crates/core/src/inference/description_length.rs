//! Description length of the flat microcanonical block model.
//!
//! `Σ = −ln P(A|e,b) − ln P(e) − ln P(b)` with
//!
//! * `−ln P(A|e,b) = Σ_{r<s} ln C(n_r n_s, e_rs) + Σ_r ln C(n_r(n_r−1)/2, e_rr/2)`
//! * `−ln P(e) = ln (( B(B+1)/2 ; E ))`
//! * `−ln P(b) = ln N! − Σ_r ln n_r! + ln C(N−1, B−1) + ln N`
//!
//! All values are in nats.

use serde::{Deserialize, Serialize};

use super::combinatorics::{ln_binom, ln_fact, ln_multiset};
use super::{BipartiteGraph, Partition};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DescriptionLength {
    /// `−ln P(A|e,b)`
    pub adjacency: f64,
    /// `−ln P(e)`
    pub edge_counts: f64,
    /// `−ln P(b)`
    pub partition: f64,
}

impl DescriptionLength {
    pub fn total(&self) -> f64 {
        self.adjacency + self.edge_counts + self.partition
    }
}

pub(crate) fn edge_count_term(groups: usize, edges: u64) -> f64 {
    let pairs = (groups * (groups + 1) / 2) as u64;
    ln_multiset(pairs, edges)
}

pub(crate) fn partition_term_without_sizes(n: usize, groups: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as u64;
    ln_fact(n) + ln_binom(n - 1, groups as u64 - 1) + (n as f64).ln()
}

pub fn description_length(graph: &BipartiteGraph, partition: &Partition) -> DescriptionLength {
    debug_assert!(partition.check_consistency(graph).is_ok());
    let occupied: Vec<usize> = partition.occupied_groups().collect();

    let mut adjacency = 0.0;
    for (i, &r) in occupied.iter().enumerate() {
        let nr = partition.size(r) as u64;
        let err = partition.block_edges(r, r);
        if err > 0 {
            adjacency += ln_binom(nr * (nr - 1) / 2, err / 2);
        }
        for &s in &occupied[i + 1..] {
            let ers = partition.block_edges(r, s);
            if ers > 0 {
                adjacency += ln_binom(nr * partition.size(s) as u64, ers);
            }
        }
    }

    let b = partition.num_groups();
    let edge_counts = edge_count_term(b, graph.num_edges() as u64);

    let mut part = partition_term_without_sizes(graph.num_vertices(), b);
    for &r in &occupied {
        part -= ln_fact(partition.size(r) as u64);
    }

    DescriptionLength {
        adjacency,
        edge_counts,
        partition: part,
    }
}

/// Change in description length when moving `v` from its group to
/// `target`. `neighbor_groups` are `(group, count)` pairs for `v`'s
/// neighbors. Relies on type purity, so neighbors never share a group with
/// `v`.
pub(crate) fn move_delta(
    graph: &BipartiteGraph,
    partition: &Partition,
    v: usize,
    target: usize,
    neighbor_groups: &[(usize, u64)],
) -> f64 {
    let from = partition.label(v);
    if from == target {
        return 0.0;
    }
    let n_from = partition.size(from) as u64;
    let n_to = partition.size(target) as u64;
    let other = match graph.kind(v) {
        crate::graph::VertexKind::Opinion => crate::graph::VertexKind::Respondent,
        crate::graph::VertexKind::Respondent => crate::graph::VertexKind::Opinion,
    };

    let mut delta = 0.0;
    // Pairs with every occupied group on the other side; the count k is
    // the number of v's neighbors there.
    for t in partition.groups_of(other) {
        let nt = partition.size(t) as u64;
        let k = neighbor_groups
            .iter()
            .find(|(g, _)| *g == t)
            .map_or(0, |(_, c)| *c);
        let e_from = partition.block_edges(from, t);
        let e_to = partition.block_edges(target, t);
        if e_from > 0 {
            delta += ln_binom((n_from - 1) * nt, e_from - k) - ln_binom(n_from * nt, e_from);
        }
        if e_to + k > 0 {
            delta += ln_binom((n_to + 1) * nt, e_to + k) - ln_binom(n_to * nt, e_to);
        }
    }

    let b = partition.num_groups();
    let b_after = b - usize::from(n_from == 1) + usize::from(n_to == 0);
    if b_after != b {
        let e = graph.num_edges() as u64;
        let n = graph.num_vertices();
        delta += edge_count_term(b_after, e) - edge_count_term(b, e);
        delta += partition_term_without_sizes(n, b_after) - partition_term_without_sizes(n, b);
    }
    // −ln n_from! − ln n_to!  ->  −ln (n_from−1)! − ln (n_to+1)!
    delta += (n_from as f64).ln() - ((n_to + 1) as f64).ln();
    delta
}
