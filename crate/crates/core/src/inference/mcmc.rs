use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::description_length::{description_length, move_delta};
use super::{BipartiteGraph, LogPrior, Partition};
use crate::annotation::PriorField;
use crate::error::{GosError, Result};
use crate::graph::VertexKind;

/// How proposed moves are accepted.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Acceptance {
    /// Metropolis–Hastings targeting `exp(beta · score)`.
    Metropolis { beta: f64 },
    /// Accept only strict improvements.
    Greedy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InferenceConfig {
    pub sweeps: usize,
    pub restarts: usize,
    pub rng_seed: u64,
    /// Overrides the derived label space when set.
    pub label_space: Option<usize>,
    /// Extra labels on top of the annotation labels.
    pub headroom: usize,
    pub p_new_group: f64,
    pub beta: f64,
    /// Upper bound on the improvement-only sweeps that end each chain.
    pub greedy_sweeps: usize,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        InferenceConfig {
            sweeps: 2000,
            restarts: 10,
            rng_seed: 0,
            label_space: None,
            headroom: 30,
            p_new_group: 0.1,
            beta: 1.0,
            greedy_sweeps: 100,
        }
    }
}

/// Largest annotation label space: 3 annotators × 10 groups.
const FULL_LABEL_SPACE: usize = 30;

impl InferenceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sweeps == 0 || self.restarts == 0 {
            return Err(GosError::InvalidConfig("sweeps and restarts must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.p_new_group) {
            return Err(GosError::InvalidConfig("p_new_group must lie in [0, 1]".into()));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(GosError::InvalidConfig("beta must be positive".into()));
        }
        Ok(())
    }

    /// `L`: the annotation labels plus headroom, unless the annotations
    /// already fill the full 30-label space.
    pub fn resolve_label_space(&self, prior: Option<&PriorField>) -> usize {
        if let Some(l) = self.label_space {
            return l;
        }
        let k = prior.map_or(0, |p| p.num_labels());
        if k == 0 || k < FULL_LABEL_SPACE {
            k + self.headroom
        } else {
            k
        }
    }
}

/// The log posterior of a partition: `−Σ + Σ_v ln π_v(label(v))`.
pub fn posterior_score(
    graph: &BipartiteGraph,
    partition: &Partition,
    prior: Option<&PriorField>,
) -> Result<f64> {
    let lp = LogPrior::new(prior, graph.num_vertices(), partition.label_space())?;
    Ok(score_with(graph, partition, &lp))
}

pub(crate) fn score_with(graph: &BipartiteGraph, partition: &Partition, prior: &LogPrior) -> f64 {
    let mut s = -description_length(graph, partition).total();
    for v in 0..graph.num_vertices() {
        s += prior.get(v, partition.label(v));
    }
    s
}

/// A single Markov chain over type-pure partitions.
pub struct Chain<'a> {
    graph: &'a BipartiteGraph,
    prior: &'a LogPrior,
    partition: Partition,
    score: f64,
    p_new_group: f64,
    scratch: Vec<u64>,
    touched: Vec<(usize, u64)>,
    order: Vec<usize>,
}

impl<'a> Chain<'a> {
    pub fn new(
        graph: &'a BipartiteGraph,
        prior: &'a LogPrior,
        partition: Partition,
        p_new_group: f64,
    ) -> Result<Self> {
        if partition.label_space() != prior.label_space() {
            return Err(GosError::InvalidConfig(format!(
                "partition label space {} differs from prior label space {}",
                partition.label_space(),
                prior.label_space()
            )));
        }
        let score = score_with(graph, &partition, prior);
        Ok(Chain {
            graph,
            prior,
            scratch: vec![0; partition.label_space()],
            touched: Vec::new(),
            order: (0..graph.num_vertices()).collect(),
            partition,
            score,
            p_new_group,
        })
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn into_partition(self) -> Partition {
        self.partition
    }

    pub fn score(&self) -> f64 {
        self.score
    }

    /// Re-derives the score from scratch, dropping accumulated rounding.
    pub fn refresh_score(&mut self) {
        let fresh = score_with(self.graph, &self.partition, self.prior);
        debug_assert!(
            (fresh - self.score).abs() <= 1e-6 * (1.0 + fresh.abs()),
            "score drifted: tracked {} vs fresh {}",
            self.score,
            fresh
        );
        self.score = fresh;
    }

    fn gather_neighbors(&mut self, v: usize) {
        self.touched.clear();
        for &u in self.graph.neighbors(v) {
            let g = self.partition.label(u);
            if self.scratch[g] == 0 {
                self.touched.push((g, 0));
            }
            self.scratch[g] += 1;
        }
        for entry in self.touched.iter_mut() {
            entry.1 = self.scratch[entry.0];
            self.scratch[entry.0] = 0;
        }
    }

    /// One pass over all vertices in random order. Returns the number of
    /// accepted moves.
    pub fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R, acceptance: Acceptance) -> usize {
        let mut order = std::mem::take(&mut self.order);
        order.shuffle(rng);
        let mut accepted = 0;
        for &v in &order {
            if self.step(v, rng, acceptance) {
                accepted += 1;
            }
        }
        self.order = order;
        debug_assert!(self.partition.check_consistency(self.graph).is_ok());
        self.refresh_score();
        accepted
    }

    fn step<R: Rng + ?Sized>(&mut self, v: usize, rng: &mut R, acceptance: Acceptance) -> bool {
        let kind = self.graph.kind(v);
        let from = self.partition.label(v);
        let empties = self.partition.num_empty();
        let same_kind = self.partition.num_groups_of(kind);

        let to_empty = rng.random::<f64>() < self.p_new_group;
        let target = if to_empty {
            if empties == 0 {
                return false;
            }
            self.partition.nth_empty(rng.random_range(0..empties))
        } else {
            self.partition
                .nth_of_kind(kind, rng.random_range(0..same_kind))
        };
        if target == from {
            return false;
        }

        self.gather_neighbors(v);
        let d_dl = move_delta(self.graph, &self.partition, v, target, &self.touched);
        let d_score = -d_dl + self.prior.get(v, target) - self.prior.get(v, from);

        let accept = match acceptance {
            Acceptance::Greedy => d_score > 0.0,
            Acceptance::Metropolis { beta } => {
                let vacates = self.partition.size(from) == 1;
                let fills = to_empty;
                let q_fwd = if fills {
                    self.p_new_group / empties as f64
                } else {
                    (1.0 - self.p_new_group) / same_kind as f64
                };
                let empties_after = empties + usize::from(vacates) - usize::from(fills);
                let same_kind_after = same_kind - usize::from(vacates) + usize::from(fills);
                let q_rev = if vacates {
                    self.p_new_group / empties_after as f64
                } else {
                    (1.0 - self.p_new_group) / same_kind_after as f64
                };
                let log_a = beta * d_score + q_rev.ln() - q_fwd.ln();
                log_a >= 0.0 || rng.random::<f64>().ln() < log_a
            }
        };
        if accept {
            self.partition
                .move_vertex(self.graph, v, target, &self.touched);
            self.score += d_score;
        }
        accept
    }
}

/// One Metropolis–Hastings sweep starting from `partition`.
pub fn mcmc_sweep<R: Rng + ?Sized>(
    graph: &BipartiteGraph,
    partition: Partition,
    prior: Option<&PriorField>,
    config: &InferenceConfig,
    rng: &mut R,
) -> Result<(Partition, usize)> {
    let lp = LogPrior::new(prior, graph.num_vertices(), partition.label_space())?;
    let mut chain = Chain::new(graph, &lp, partition, config.p_new_group)?;
    let accepted = chain.sweep(rng, Acceptance::Metropolis { beta: config.beta });
    Ok((chain.into_partition(), accepted))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartReport {
    pub restart: usize,
    pub best_score: f64,
    pub final_score: f64,
    pub accepted_moves: usize,
    pub greedy_sweeps_run: usize,
    /// Score at the end of every sweep, sampling and greedy phases.
    pub trace: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct InferenceResult {
    pub partition: Partition,
    pub score: f64,
    pub best_restart: usize,
    pub restarts: Vec<RestartReport>,
}

/// Serializable summary of an inference run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InferenceReport {
    pub config: InferenceConfig,
    pub label_space: usize,
    pub num_groups: usize,
    pub score: f64,
    pub best_restart: usize,
    pub restarts: Vec<RestartReport>,
}

impl InferenceResult {
    pub fn report(&self, config: &InferenceConfig) -> InferenceReport {
        InferenceReport {
            config: config.clone(),
            label_space: self.partition.label_space(),
            num_groups: self.partition.num_groups(),
            score: self.score,
            best_restart: self.best_restart,
            restarts: self.restarts.clone(),
        }
    }
}

/// Random type-pure starting point with `min(L, N)` groups split between the
/// two vertex types in proportion to their counts. With a prior field the
/// annotation labels go to the opinion side first.
pub fn random_init<R: Rng + ?Sized>(
    graph: &BipartiteGraph,
    label_space: usize,
    annotation_labels: usize,
    rng: &mut R,
) -> Result<Partition> {
    let n = graph.num_vertices();
    let (no, nr) = (graph.num_opinions(), graph.num_respondents());
    let needed = usize::from(no > 0) + usize::from(nr > 0);
    if label_space < needed {
        return Err(GosError::InvalidConfig(format!(
            "label space {label_space} cannot hold {needed} type-pure groups"
        )));
    }
    let groups = label_space.min(n).max(needed);
    let mut op_groups = if nr == 0 {
        groups
    } else if no == 0 {
        0
    } else {
        ((groups as f64 * no as f64 / n as f64).round() as usize).clamp(1, groups - 1)
    };
    op_groups = op_groups.min(no.max(usize::from(no > 0)));
    let resp_groups = (groups - op_groups).min(nr);

    let mut annotated: Vec<usize> = (0..annotation_labels.min(label_space)).collect();
    let mut rest: Vec<usize> = (annotation_labels.min(label_space)..label_space).collect();
    annotated.shuffle(rng);
    rest.shuffle(rng);
    let mut pool: Vec<usize> = annotated;
    pool.extend(rest);
    // Opinion labels come from the front (annotation labels first), the
    // respondent labels from whatever remains, shuffled again.
    let op_labels: Vec<usize> = pool[..op_groups].to_vec();
    let mut remaining: Vec<usize> = pool[op_groups..].to_vec();
    remaining.shuffle(rng);
    let resp_labels: Vec<usize> = remaining[..resp_groups].to_vec();

    let labels: Vec<usize> = (0..n)
        .map(|v| match graph.kind(v) {
            VertexKind::Opinion => op_labels[rng.random_range(0..op_labels.len())],
            VertexKind::Respondent => resp_labels[rng.random_range(0..resp_labels.len())],
        })
        .collect();
    Partition::new(graph, labels, label_space)
}

fn run_chain(
    graph: &BipartiteGraph,
    prior: &LogPrior,
    annotation_labels: usize,
    config: &InferenceConfig,
    restart: usize,
) -> Result<(Partition, f64, RestartReport)> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    rng.set_stream(restart as u64);
    let init = random_init(graph, prior.label_space(), annotation_labels, &mut rng)?;
    let mut chain = Chain::new(graph, prior, init, config.p_new_group)?;

    let mut best = chain.partition().clone();
    let mut best_score = chain.score();
    let mut trace = Vec::with_capacity(config.sweeps + 1);
    let mut accepted_moves = 0;
    let consider = |chain: &Chain, best: &mut Partition, best_score: &mut f64| {
        if chain.score() > *best_score {
            *best_score = chain.score();
            *best = chain.partition().clone();
        }
    };

    for _ in 0..config.sweeps {
        accepted_moves += chain.sweep(&mut rng, Acceptance::Metropolis { beta: config.beta });
        trace.push(chain.score());
        consider(&chain, &mut best, &mut best_score);
    }

    // Polish the best state seen so far with improvement-only sweeps.
    let final_score = chain.score();
    let mut chain = Chain::new(graph, prior, best.clone(), config.p_new_group)?;
    let mut greedy_sweeps_run = 0;
    for _ in 0..config.greedy_sweeps {
        greedy_sweeps_run += 1;
        let moved = chain.sweep(&mut rng, Acceptance::Greedy);
        accepted_moves += moved;
        trace.push(chain.score());
        consider(&chain, &mut best, &mut best_score);
        if moved == 0 {
            break;
        }
    }

    let report = RestartReport {
        restart,
        best_score,
        final_score,
        accepted_moves,
        greedy_sweeps_run,
        trace,
    };
    Ok((best, best_score, report))
}

/// Best-scoring partition over independent restarts. Deterministic for a
/// fixed configuration, whether or not restarts run in parallel.
pub fn infer(
    graph: &BipartiteGraph,
    prior: Option<&PriorField>,
    config: &InferenceConfig,
) -> Result<InferenceResult> {
    config.validate()?;
    if graph.num_vertices() == 0 {
        return Err(GosError::EmptyGraph);
    }
    let label_space = config.resolve_label_space(prior);
    let lp = LogPrior::new(prior, graph.num_vertices(), label_space)?;
    let annotation_labels = prior.map_or(0, |p| p.num_labels());

    let runs: Vec<Result<(Partition, f64, RestartReport)>> = {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            (0..config.restarts)
                .into_par_iter()
                .map(|i| run_chain(graph, &lp, annotation_labels, config, i))
                .collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            (0..config.restarts)
                .map(|i| run_chain(graph, &lp, annotation_labels, config, i))
                .collect()
        }
    };

    let mut best: Option<(Partition, f64, usize)> = None;
    let mut reports = Vec::with_capacity(config.restarts);
    for run in runs {
        let (p, s, report) = run?;
        let i = report.restart;
        reports.push(report);
        if best.as_ref().is_none_or(|(_, bs, _)| s > *bs) {
            best = Some((p, s, i));
        }
    }
    let (partition, score, best_restart) = best.expect("restarts >= 1");
    Ok(InferenceResult {
        partition,
        score,
        best_restart,
        restarts: reports,
    })
}
