use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Partition;
use crate::annotation::{AnnotationSet, SemanticGroup};
use crate::graph::{OpinionGraph, VertexKind};

/// Display names for occupied groups, keyed by group index.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupNames(pub BTreeMap<usize, String>);

impl GroupNames {
    pub fn get(&self, group: usize) -> Option<&str> {
        self.0.get(&group).map(String::as_str)
    }

    /// Name for `group`, falling back to `group-<index>`.
    pub fn name(&self, group: usize) -> String {
        self.get(group)
            .map(str::to_string)
            .unwrap_or_else(|| format!("group-{group}"))
    }
}

/// Names opinion groups after the majority annotation among their members
/// (ties go to the earlier group code; groups without annotations become
/// `unlabeled-<i>`) and respondent groups `A`, `B`, ... by decreasing size.
pub fn name_groups(
    graph: &OpinionGraph,
    partition: &Partition,
    annotations: &AnnotationSet,
) -> GroupNames {
    let mut names = BTreeMap::new();
    let mut used: BTreeMap<String, usize> = BTreeMap::new();
    let mut unlabeled = 0;

    let mut votes: BTreeMap<usize, [usize; 10]> = BTreeMap::new();
    for (i, o) in graph.opinions().iter().enumerate() {
        let tally = votes.entry(partition.label(i)).or_insert([0; 10]);
        for (_, g) in annotations.labels_of(&o.id) {
            tally[g.index()] += 1;
        }
    }

    for group in partition.groups_of(VertexKind::Opinion) {
        let tally = votes.get(&group).copied().unwrap_or([0; 10]);
        let top = tally.iter().copied().max().unwrap_or(0);
        let base = if top == 0 {
            let n = format!("unlabeled-{unlabeled}");
            unlabeled += 1;
            n
        } else {
            let winner = SemanticGroup::ALL
                .into_iter()
                .find(|g| tally[g.index()] == top)
                .expect("some group reaches the maximum");
            winner.display_name().to_string()
        };
        let count = used.entry(base.clone()).or_insert(0);
        *count += 1;
        let name = if *count == 1 {
            base
        } else {
            format!("{base} ({count})")
        };
        names.insert(group, name);
    }

    let mut resp: Vec<usize> = partition.groups_of(VertexKind::Respondent).collect();
    resp.sort_by_key(|&g| (std::cmp::Reverse(partition.size(g)), g));
    for (i, g) in resp.into_iter().enumerate() {
        let name = if i < 26 {
            char::from(b'A' + i as u8).to_string()
        } else {
            format!("R{i}")
        };
        names.insert(g, name);
    }
    GroupNames(names)
}
