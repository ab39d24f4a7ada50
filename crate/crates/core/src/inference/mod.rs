//! Nonparametric stochastic-block-model clustering of opinion graphs.

mod combinatorics;
mod description_length;
mod io;
mod mcmc;
mod naming;
mod partition;
mod prior;

pub use combinatorics::{ln_binom, ln_fact, ln_multiset};
pub use description_length::{description_length, DescriptionLength};
pub use io::{read_partition_csv, write_partition_csv, PartitionFile};
pub use mcmc::{
    infer, mcmc_sweep, posterior_score, random_init, Acceptance, Chain, InferenceConfig,
    InferenceReport, InferenceResult, RestartReport,
};
pub use naming::{name_groups, GroupNames};
pub use partition::{canonicalize, Partition, PartitionRecord};
pub use prior::LogPrior;

use std::collections::HashSet;

use crate::error::{GosError, Result};
use crate::graph::VertexKind;

/// Immutable adjacency view of a bipartite graph. Opinions are vertices
/// `0..n_opinions`, respondents `n_opinions..n_opinions + n_respondents`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BipartiteGraph {
    n_opinions: usize,
    n_respondents: usize,
    adjacency: Vec<Vec<usize>>,
    n_edges: usize,
}

impl BipartiteGraph {
    /// Builds from `(opinion index, respondent index)` pairs.
    pub fn from_edges(
        n_opinions: usize,
        n_respondents: usize,
        edges: &[(usize, usize)],
    ) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); n_opinions + n_respondents];
        let mut seen = HashSet::with_capacity(edges.len());
        for &(o, r) in edges {
            if o >= n_opinions || r >= n_respondents {
                return Err(GosError::Invariant(format!("edge ({o}, {r}) out of range")));
            }
            if !seen.insert((o, r)) {
                return Err(GosError::Invariant(format!("duplicate edge ({o}, {r})")));
            }
            adjacency[o].push(n_opinions + r);
            adjacency[n_opinions + r].push(o);
        }
        Ok(BipartiteGraph {
            n_opinions,
            n_respondents,
            adjacency,
            n_edges: edges.len(),
        })
    }

    pub fn num_opinions(&self) -> usize {
        self.n_opinions
    }

    pub fn num_respondents(&self) -> usize {
        self.n_respondents
    }

    pub fn num_vertices(&self) -> usize {
        self.n_opinions + self.n_respondents
    }

    pub fn num_edges(&self) -> usize {
        self.n_edges
    }

    #[inline]
    pub fn kind(&self, v: usize) -> VertexKind {
        if v < self.n_opinions {
            VertexKind::Opinion
        } else {
            VertexKind::Respondent
        }
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }
}
