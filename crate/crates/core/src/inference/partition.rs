use serde::{Deserialize, Serialize};

use super::BipartiteGraph;
use crate::error::{GosError, Result};
use crate::graph::VertexKind;

/// Group assignment for every vertex plus the block statistics the
/// description length needs.
///
/// Block edge counts follow the usual convention: `e_rs` for `r != s` counts
/// edges between the groups, `e_rr` is twice the internal edge count. Type
/// purity (no group mixing opinions and respondents) is enforced, so `e_rr`
/// stays zero on bipartite input.
#[derive(Clone, Debug)]
pub struct Partition {
    labels: Vec<usize>,
    label_space: usize,
    sizes: Vec<usize>,
    kinds: Vec<Option<VertexKind>>,
    block_edges: Vec<u64>,
    occupied: usize,
    occupied_by_kind: [usize; 2],
}

fn kind_slot(k: VertexKind) -> usize {
    match k {
        VertexKind::Opinion => 0,
        VertexKind::Respondent => 1,
    }
}

/// Compact serialized form.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionRecord {
    pub label_space: usize,
    pub labels: Vec<usize>,
}

impl PartialEq for Partition {
    fn eq(&self, other: &Self) -> bool {
        self.label_space == other.label_space && self.labels == other.labels
    }
}

impl Partition {
    pub fn new(graph: &BipartiteGraph, labels: Vec<usize>, label_space: usize) -> Result<Self> {
        if labels.len() != graph.num_vertices() {
            return Err(GosError::PartitionMismatch(format!(
                "{} labels for {} vertices",
                labels.len(),
                graph.num_vertices()
            )));
        }
        let mut kinds: Vec<Option<VertexKind>> = vec![None; label_space];
        let mut sizes = vec![0usize; label_space];
        for (v, &l) in labels.iter().enumerate() {
            if l >= label_space {
                return Err(GosError::LabelOutOfRange {
                    label: l,
                    label_space,
                });
            }
            let k = graph.kind(v);
            match kinds[l] {
                Some(existing) if existing != k => {
                    return Err(GosError::PartitionMismatch(format!(
                        "group {l} mixes opinion and respondent vertices"
                    )))
                }
                _ => kinds[l] = Some(k),
            }
            sizes[l] += 1;
        }
        let mut block_edges = vec![0u64; label_space * label_space];
        for v in 0..graph.num_vertices() {
            let lv = labels[v];
            for &u in graph.neighbors(v) {
                block_edges[lv * label_space + labels[u]] += 1;
            }
        }
        let mut occupied_by_kind = [0usize; 2];
        for k in kinds.iter().flatten() {
            occupied_by_kind[kind_slot(*k)] += 1;
        }
        Ok(Partition {
            occupied: sizes.iter().filter(|&&n| n > 0).count(),
            labels,
            label_space,
            sizes,
            kinds,
            block_edges,
            occupied_by_kind,
        })
    }

    pub fn from_record(graph: &BipartiteGraph, record: &PartitionRecord) -> Result<Self> {
        Partition::new(graph, record.labels.clone(), record.label_space)
    }

    pub fn to_record(&self) -> PartitionRecord {
        PartitionRecord {
            label_space: self.label_space,
            labels: self.labels.clone(),
        }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, v: usize) -> usize {
        self.labels[v]
    }

    pub fn label_space(&self) -> usize {
        self.label_space
    }

    pub fn num_vertices(&self) -> usize {
        self.labels.len()
    }

    pub fn size(&self, group: usize) -> usize {
        self.sizes[group]
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// `e_rs` between two groups (twice the internal count when `r == s`).
    pub fn block_edges(&self, r: usize, s: usize) -> u64 {
        self.block_edges[r * self.label_space + s]
    }

    pub fn group_kind(&self, group: usize) -> Option<VertexKind> {
        self.kinds[group]
    }

    /// Number of occupied groups, `B`.
    pub fn num_groups(&self) -> usize {
        self.occupied
    }

    pub fn num_groups_of(&self, kind: VertexKind) -> usize {
        self.occupied_by_kind[kind_slot(kind)]
    }

    pub fn num_empty(&self) -> usize {
        self.label_space - self.occupied
    }

    pub fn occupied_groups(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.label_space).filter(|&g| self.sizes[g] > 0)
    }

    pub fn groups_of(&self, kind: VertexKind) -> impl Iterator<Item = usize> + '_ {
        (0..self.label_space).filter(move |&g| self.kinds[g] == Some(kind))
    }

    /// The `j`-th empty label in index order.
    pub(crate) fn nth_empty(&self, j: usize) -> usize {
        (0..self.label_space)
            .filter(|&g| self.sizes[g] == 0)
            .nth(j)
            .expect("j < num_empty")
    }

    /// The `j`-th occupied group of `kind` in index order.
    pub(crate) fn nth_of_kind(&self, kind: VertexKind, j: usize) -> usize {
        self.groups_of(kind).nth(j).expect("j < num_groups_of(kind)")
    }

    /// Moves `v` to `target`. `neighbor_groups` lists `(group, count)` for
    /// the groups of `v`'s neighbors.
    pub(crate) fn move_vertex(
        &mut self,
        graph: &BipartiteGraph,
        v: usize,
        target: usize,
        neighbor_groups: &[(usize, u64)],
    ) {
        let from = self.labels[v];
        if from == target {
            return;
        }
        let kind = graph.kind(v);
        debug_assert!(self.kinds[target].is_none() || self.kinds[target] == Some(kind));
        let l = self.label_space;
        for &(t, k) in neighbor_groups {
            self.block_edges[from * l + t] -= k;
            self.block_edges[t * l + from] -= k;
            self.block_edges[target * l + t] += k;
            self.block_edges[t * l + target] += k;
        }
        self.sizes[from] -= 1;
        if self.sizes[from] == 0 {
            self.kinds[from] = None;
            self.occupied -= 1;
            self.occupied_by_kind[kind_slot(kind)] -= 1;
        }
        if self.sizes[target] == 0 {
            self.kinds[target] = Some(kind);
            self.occupied += 1;
            self.occupied_by_kind[kind_slot(kind)] += 1;
        }
        self.sizes[target] += 1;
        self.labels[v] = target;
    }

    /// Recomputes every cached statistic from the labels and compares.
    pub fn check_consistency(&self, graph: &BipartiteGraph) -> Result<()> {
        let fresh = Partition::new(graph, self.labels.clone(), self.label_space)?;
        if fresh.sizes != self.sizes
            || fresh.kinds != self.kinds
            || fresh.block_edges != self.block_edges
            || fresh.occupied != self.occupied
            || fresh.occupied_by_kind != self.occupied_by_kind
        {
            return Err(GosError::Invariant(
                "cached block statistics disagree with a full scan".into(),
            ));
        }
        Ok(())
    }

    /// Labels renumbered by first appearance, so that two partitions into
    /// the same vertex sets compare equal.
    pub fn canonical_labels(&self) -> Vec<usize> {
        canonicalize(&self.labels)
    }
}

pub fn canonicalize(labels: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .map(|l| {
            let next = map.len();
            *map.entry(*l).or_insert(next)
        })
        .collect()
}
