//! The bipartite opinion graph and its growth operations.
//!
//! Opinion and respondent vertices share one monotone sequence counter, so
//! the interleaved creation order is recoverable from `created_at` alone.

mod io;

pub use io::{GraphDocument, EdgeRecord};

use std::collections::{HashMap, HashSet};
use std::fmt;

use log::debug;
use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GosError, Result};
use crate::inference::BipartiteGraph;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OpinionId(pub String);

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RespondentId(pub String);

impl fmt::Display for OpinionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for RespondentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for OpinionId {
    fn from(s: &str) -> Self {
        OpinionId(s.to_string())
    }
}

impl From<&str> for RespondentId {
    fn from(s: &str) -> Self {
        RespondentId(s.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Origin {
    Seed,
    Respondent { respondent: RespondentId },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Opinion {
    pub id: OpinionId,
    pub text: String,
    pub origin: Origin,
    pub created_at: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Respondent {
    pub id: RespondentId,
    pub created_at: u64,
    /// Opinions that were shown to the respondent, in issue order.
    pub menu: Vec<OpinionId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SurveyConfig {
    pub min_menu: usize,
    pub max_menu: usize,
    pub allow_new_opinions: bool,
    pub max_new_opinions_per_respondent: usize,
}

impl Default for SurveyConfig {
    fn default() -> Self {
        SurveyConfig {
            min_menu: 8,
            max_menu: 24,
            allow_new_opinions: true,
            max_new_opinions_per_respondent: 3,
        }
    }
}

impl SurveyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_menu == 0 || self.min_menu > self.max_menu {
            return Err(GosError::InvalidConfig(format!(
                "need 1 <= min_menu <= max_menu, got min_menu={} max_menu={}",
                self.min_menu, self.max_menu
            )));
        }
        Ok(())
    }

    /// Clamps a requested menu size into `[min_menu, max_menu]`.
    pub fn clamp_menu(&self, n: usize) -> usize {
        let clamped = n.clamp(self.min_menu, self.max_menu);
        if clamped != n {
            debug!("menu request of {n} clamped to {clamped}");
        }
        clamped
    }
}

/// Which side of the bipartite graph a vertex lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VertexKind {
    Opinion,
    Respondent,
}

impl VertexKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VertexKind::Opinion => "opinion",
            VertexKind::Respondent => "respondent",
        }
    }
}

#[derive(Clone, Debug)]
pub struct OpinionGraph {
    config: SurveyConfig,
    opinions: Vec<Opinion>,
    respondents: Vec<Respondent>,
    /// (opinion index, respondent index) in insertion order.
    edges: Vec<(usize, usize)>,
    edge_set: HashSet<(usize, usize)>,
    opinion_index: HashMap<OpinionId, usize>,
    respondent_index: HashMap<RespondentId, usize>,
    next_seq: u64,
}

impl PartialEq for OpinionGraph {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config
            && self.opinions == other.opinions
            && self.respondents == other.respondents
            && self.edges == other.edges
    }
}

impl Eq for OpinionGraph {}

impl OpinionGraph {
    /// Creates a survey with the given initial opinions. Duplicate texts are
    /// kept as distinct vertices.
    pub fn new<S: AsRef<str>>(seed_opinions: &[S], config: SurveyConfig) -> Result<Self> {
        config.validate()?;
        let mut graph = OpinionGraph::empty(config);
        for text in seed_opinions {
            graph.push_opinion(text.as_ref().to_string(), Origin::Seed);
        }
        Ok(graph)
    }

    fn empty(config: SurveyConfig) -> Self {
        OpinionGraph {
            config,
            opinions: Vec::new(),
            respondents: Vec::new(),
            edges: Vec::new(),
            edge_set: HashSet::new(),
            opinion_index: HashMap::new(),
            respondent_index: HashMap::new(),
            next_seq: 0,
        }
    }

    pub fn config(&self) -> &SurveyConfig {
        &self.config
    }

    pub fn opinions(&self) -> &[Opinion] {
        &self.opinions
    }

    pub fn respondents(&self) -> &[Respondent] {
        &self.respondents
    }

    pub fn num_opinions(&self) -> usize {
        self.opinions.len()
    }

    pub fn num_respondents(&self) -> usize {
        self.respondents.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.opinions.len() + self.respondents.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edges as (opinion index, respondent index), in insertion order.
    pub fn edge_indices(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edges(&self) -> impl Iterator<Item = (&OpinionId, &RespondentId)> + '_ {
        self.edges
            .iter()
            .map(|&(o, r)| (&self.opinions[o].id, &self.respondents[r].id))
    }

    pub fn opinion_position(&self, id: &OpinionId) -> Option<usize> {
        self.opinion_index.get(id).copied()
    }

    pub fn respondent_position(&self, id: &RespondentId) -> Option<usize> {
        self.respondent_index.get(id).copied()
    }

    pub fn opinion(&self, id: &OpinionId) -> Option<&Opinion> {
        self.opinion_position(id).map(|i| &self.opinions[i])
    }

    pub fn has_edge(&self, opinion: usize, respondent: usize) -> bool {
        self.edge_set.contains(&(opinion, respondent))
    }

    pub fn respondent_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.respondents.len()];
        for &(_, r) in &self.edges {
            deg[r] += 1;
        }
        deg
    }

    pub fn opinion_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.opinions.len()];
        for &(o, _) in &self.edges {
            deg[o] += 1;
        }
        deg
    }

    fn next_seq(&mut self) -> u64 {
        let s = self.next_seq;
        self.next_seq += 1;
        s
    }

    fn fresh_opinion_id(&self) -> OpinionId {
        let mut n = self.opinions.len();
        loop {
            let id = OpinionId(format!("o{n}"));
            if !self.opinion_index.contains_key(&id) && !self.respondent_index.contains_key(&RespondentId(id.0.clone())) {
                return id;
            }
            n += 1;
        }
    }

    fn fresh_respondent_id(&self) -> RespondentId {
        let mut n = self.respondents.len();
        loop {
            let id = RespondentId(format!("r{n}"));
            if !self.respondent_index.contains_key(&id) && !self.opinion_index.contains_key(&OpinionId(id.0.clone())) {
                return id;
            }
            n += 1;
        }
    }

    fn push_opinion(&mut self, text: String, origin: Origin) -> usize {
        let id = self.fresh_opinion_id();
        let created_at = self.next_seq();
        let idx = self.opinions.len();
        self.opinion_index.insert(id.clone(), idx);
        self.opinions.push(Opinion {
            id,
            text,
            origin,
            created_at,
        });
        idx
    }

    fn push_edge(&mut self, opinion: usize, respondent: usize) {
        debug_assert!(!self.edge_set.contains(&(opinion, respondent)));
        self.edge_set.insert((opinion, respondent));
        self.edges.push((opinion, respondent));
    }

    /// Draws a menu of `n` opinions (clamped into the configured range)
    /// uniformly without replacement from the current pool.
    pub fn sample_menu(&self, n: usize, rng_seed: u64) -> Vec<OpinionId> {
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        self.sample_menu_with(&mut rng, n, &[])
    }

    /// Like [`sample_menu`](Self::sample_menu) but with a caller-owned rng
    /// and a set of ids that must not be drawn again.
    pub fn sample_menu_with<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        n: usize,
        exclude: &[OpinionId],
    ) -> Vec<OpinionId> {
        let n = self.config.clamp_menu(n);
        self.draw_uniform(rng, n, exclude)
    }

    /// Uniform draw of up to `n` opinions without replacement, no clamping.
    pub fn draw_uniform<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        n: usize,
        exclude: &[OpinionId],
    ) -> Vec<OpinionId> {
        self.draw_uniform_within(rng, n, self.opinions.len(), exclude)
    }

    /// Like [`draw_uniform`](Self::draw_uniform), restricted to the first
    /// `pool_limit` opinions (the pool as it was at some earlier point).
    pub fn draw_uniform_within<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        n: usize,
        pool_limit: usize,
        exclude: &[OpinionId],
    ) -> Vec<OpinionId> {
        let limit = pool_limit.min(self.opinions.len());
        let pool: Vec<usize> = if exclude.is_empty() {
            (0..limit).collect()
        } else {
            let skip: HashSet<&OpinionId> = exclude.iter().collect();
            (0..limit)
                .filter(|&i| !skip.contains(&self.opinions[i].id))
                .collect()
        };
        let k = n.min(pool.len());
        sample_indices(rng, pool.len(), k)
            .into_iter()
            .map(|i| self.opinions[pool[i]].id.clone())
            .collect()
    }

    /// Checks a response without mutating the graph.
    pub fn check_response(
        &self,
        menu: &[OpinionId],
        selected: &[OpinionId],
        new_texts: &[String],
    ) -> Result<()> {
        if selected.is_empty() && new_texts.is_empty() {
            return Err(GosError::EmptyResponse);
        }
        if !new_texts.is_empty() && !self.config.allow_new_opinions {
            return Err(GosError::NewOpinionsDisabled);
        }
        if new_texts.len() > self.config.max_new_opinions_per_respondent {
            return Err(GosError::TooManyNewOpinions {
                given: new_texts.len(),
                max: self.config.max_new_opinions_per_respondent,
            });
        }
        let mut on_menu = HashSet::with_capacity(menu.len());
        for id in menu {
            if !self.opinion_index.contains_key(id) {
                return Err(GosError::UnknownOpinion(id.0.clone()));
            }
            if !on_menu.insert(id) {
                return Err(GosError::Invariant(format!("menu lists `{id}` twice")));
            }
        }
        let mut seen = HashSet::with_capacity(selected.len());
        for id in selected {
            if !on_menu.contains(id) {
                return Err(GosError::NotOnMenu(id.0.clone()));
            }
            if !seen.insert(id) {
                return Err(GosError::DuplicateSelection(id.0.clone()));
            }
        }
        Ok(())
    }

    /// Records one response: a new respondent vertex, an edge per selected
    /// opinion, and a new opinion vertex plus edge per posted text.
    pub fn submit_response(
        &mut self,
        menu: &[OpinionId],
        selected: &[OpinionId],
        new_texts: &[String],
    ) -> Result<RespondentId> {
        self.check_response(menu, selected, new_texts)?;

        let id = self.fresh_respondent_id();
        let created_at = self.next_seq();
        let r = self.respondents.len();
        self.respondent_index.insert(id.clone(), r);
        self.respondents.push(Respondent {
            id: id.clone(),
            created_at,
            menu: menu.to_vec(),
        });
        for sel in selected {
            let o = self.opinion_index[sel];
            self.push_edge(o, r);
        }
        for text in new_texts {
            let o = self.push_opinion(
                text.clone(),
                Origin::Respondent {
                    respondent: id.clone(),
                },
            );
            self.push_edge(o, r);
        }
        Ok(id)
    }

    /// Full scan of every structural invariant.
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        let mut ids = HashSet::new();
        let mut last_seq: Option<u64> = None;
        for o in &self.opinions {
            if !ids.insert(o.id.0.as_str()) {
                return Err(GosError::Invariant(format!("duplicate vertex id `{}`", o.id)));
            }
            if last_seq.is_some_and(|s| o.created_at <= s) {
                return Err(GosError::Invariant(format!(
                    "opinion `{}` breaks creation order",
                    o.id
                )));
            }
            last_seq = Some(o.created_at);
        }
        last_seq = None;
        for r in &self.respondents {
            if !ids.insert(r.id.0.as_str()) {
                return Err(GosError::Invariant(format!("duplicate vertex id `{}`", r.id)));
            }
            if last_seq.is_some_and(|s| r.created_at <= s) {
                return Err(GosError::Invariant(format!(
                    "respondent `{}` breaks creation order",
                    r.id
                )));
            }
            last_seq = Some(r.created_at);
            let mut menu_ids = HashSet::new();
            for m in &r.menu {
                if !self.opinion_index.contains_key(m) {
                    return Err(GosError::Invariant(format!(
                        "respondent `{}` menu names unknown opinion `{m}`",
                        r.id
                    )));
                }
                if !menu_ids.insert(m) {
                    return Err(GosError::Invariant(format!(
                        "respondent `{}` menu repeats `{m}`",
                        r.id
                    )));
                }
            }
        }
        let mut seqs = HashSet::new();
        for s in self
            .opinions
            .iter()
            .map(|o| o.created_at)
            .chain(self.respondents.iter().map(|r| r.created_at))
        {
            if !seqs.insert(s) {
                return Err(GosError::Invariant(format!("sequence number {s} reused")));
            }
        }

        let mut edge_set = HashSet::new();
        for (i, &(o, r)) in self.edges.iter().enumerate() {
            if o >= self.opinions.len() || r >= self.respondents.len() {
                return Err(GosError::Invariant(format!("edge #{i} has a dangling endpoint")));
            }
            if !edge_set.insert((o, r)) {
                return Err(GosError::Invariant(format!(
                    "edge #{i} ({}, {}) is duplicated",
                    self.opinions[o].id, self.respondents[r].id
                )));
            }
        }
        for (r, d) in self.respondent_degrees().into_iter().enumerate() {
            if d == 0 {
                return Err(GosError::Invariant(format!(
                    "respondent `{}` has no edges",
                    self.respondents[r].id
                )));
            }
        }
        for (oi, o) in self.opinions.iter().enumerate() {
            if let Origin::Respondent { respondent } = &o.origin {
                let Some(ri) = self.respondent_index.get(respondent).copied() else {
                    return Err(GosError::Invariant(format!(
                        "opinion `{}` authored by unknown respondent `{respondent}`",
                        o.id
                    )));
                };
                if !edge_set.contains(&(oi, ri)) {
                    return Err(GosError::Invariant(format!(
                        "opinion `{}` has no edge to its author `{respondent}`",
                        o.id
                    )));
                }
            }
        }
        Ok(())
    }

    /// Number of respondents who authored at least one opinion.
    pub fn num_posting_respondents(&self) -> usize {
        let authors: HashSet<&RespondentId> = self
            .opinions
            .iter()
            .filter_map(|o| match &o.origin {
                Origin::Respondent { respondent } => Some(respondent),
                Origin::Seed => None,
            })
            .collect();
        authors.len()
    }

    /// The graph as it was after its first `n_opinions` opinions and
    /// `n_respondents` respondents were created.
    pub fn prefix(&self, n_opinions: usize, n_respondents: usize) -> Result<OpinionGraph> {
        if n_opinions > self.opinions.len() || n_respondents > self.respondents.len() {
            return Err(GosError::PartitionMismatch(format!(
                "prefix ({n_opinions}, {n_respondents}) exceeds graph size ({}, {})",
                self.opinions.len(),
                self.respondents.len()
            )));
        }
        let mut g = OpinionGraph::empty(self.config.clone());
        g.opinions = self.opinions[..n_opinions].to_vec();
        g.respondents = self.respondents[..n_respondents].to_vec();
        g.edges = self
            .edges
            .iter()
            .copied()
            .filter(|&(o, r)| o < n_opinions && r < n_respondents)
            .collect();
        g.rebuild_indices();
        Ok(g)
    }

    fn rebuild_indices(&mut self) {
        self.opinion_index = self
            .opinions
            .iter()
            .enumerate()
            .map(|(i, o)| (o.id.clone(), i))
            .collect();
        self.respondent_index = self
            .respondents
            .iter()
            .enumerate()
            .map(|(i, r)| (r.id.clone(), i))
            .collect();
        self.edge_set = self.edges.iter().copied().collect();
        self.next_seq = self
            .opinions
            .iter()
            .map(|o| o.created_at + 1)
            .chain(self.respondents.iter().map(|r| r.created_at + 1))
            .max()
            .unwrap_or(0);
    }

    /// Inference view: opinions occupy vertex indices `0..n_opinions`,
    /// respondents follow.
    pub fn bipartite(&self) -> BipartiteGraph {
        BipartiteGraph::from_edges(self.opinions.len(), self.respondents.len(), &self.edges)
            .expect("opinion graph edges are always valid")
    }

    /// Vertex id for an inference-view index.
    pub fn vertex_id(&self, v: usize) -> &str {
        if v < self.opinions.len() {
            &self.opinions[v].id.0
        } else {
            &self.respondents[v - self.opinions.len()].id.0
        }
    }
}
