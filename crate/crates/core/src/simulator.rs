//! Synthetic survey runs with planted respondent and opinion groups.
//!
//! Respondents arrive one at a time, are shown a uniformly sampled menu, and
//! select each presented opinion independently with the probability given
//! by the affinity between their group and the opinion's group. This
//! independent-selection behavior is a modeling assumption, not an
//! observation about real respondents.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GosError, Result};
use crate::graph::{OpinionGraph, SurveyConfig};

/// Attempts at redrawing an empty selection before falling back to a post.
const MAX_RESELECT: usize = 1000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantedModel {
    pub opinion_groups: usize,
    pub respondent_groups: usize,
    /// `affinity[r][o]`: probability that a respondent of group `r` selects
    /// a presented opinion of group `o`.
    pub affinity: Vec<Vec<f64>>,
    /// Probability that a respondent posts one new opinion.
    pub p_new: f64,
    pub n_respondents: usize,
    pub menu_size: usize,
    /// Empty means uniform.
    pub respondent_group_prior: Vec<f64>,
    /// `new_opinion_prior[r][o]`: group of an opinion posted by a member of
    /// respondent group `r`. Empty means proportional to `affinity[r]`, so
    /// authors post into groups they tend to select.
    pub new_opinion_prior: Vec<Vec<f64>>,
    pub seed_opinions_per_group: Vec<usize>,
    pub rng_seed: u64,
    pub survey: SurveyConfig,
}

impl Default for PlantedModel {
    fn default() -> Self {
        PlantedModel {
            opinion_groups: 2,
            respondent_groups: 2,
            affinity: vec![vec![0.9, 0.05], vec![0.05, 0.9]],
            p_new: 0.08,
            n_respondents: 300,
            menu_size: 8,
            respondent_group_prior: Vec::new(),
            new_opinion_prior: Vec::new(),
            seed_opinions_per_group: vec![10, 10],
            rng_seed: 0,
            survey: SurveyConfig::default(),
        }
    }
}

fn check_distribution(p: &[f64], len: usize, what: &str) -> Result<()> {
    if p.len() != len {
        return Err(GosError::InvalidModel(format!(
            "{what} has {} entries, expected {len}",
            p.len()
        )));
    }
    if p.iter().any(|&x| !(0.0..=1.0).contains(&x)) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-9
    {
        return Err(GosError::InvalidModel(format!("{what} is not a probability vector")));
    }
    Ok(())
}

fn sample_categorical<R: Rng + ?Sized>(rng: &mut R, p: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &x) in p.iter().enumerate() {
        acc += x;
        if u < acc {
            return i;
        }
    }
    p.iter().rposition(|&x| x > 0.0).unwrap_or(0)
}

impl PlantedModel {
    fn respondent_prior(&self) -> Vec<f64> {
        if self.respondent_group_prior.is_empty() {
            vec![1.0 / self.respondent_groups as f64; self.respondent_groups]
        } else {
            self.respondent_group_prior.clone()
        }
    }

    fn opinion_prior(&self, group: usize) -> Vec<f64> {
        if self.new_opinion_prior.is_empty() {
            let row = &self.affinity[group];
            let total: f64 = row.iter().sum();
            if total > 0.0 {
                row.iter().map(|a| a / total).collect()
            } else {
                vec![1.0 / self.opinion_groups as f64; self.opinion_groups]
            }
        } else {
            self.new_opinion_prior[group].clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.opinion_groups == 0 || self.respondent_groups == 0 {
            return Err(GosError::InvalidModel("need at least one group per side".into()));
        }
        if self.affinity.len() != self.respondent_groups
            || self.affinity.iter().any(|row| row.len() != self.opinion_groups)
        {
            return Err(GosError::InvalidModel(format!(
                "affinity must be {} x {}",
                self.respondent_groups, self.opinion_groups
            )));
        }
        if self.affinity.iter().flatten().any(|&a| !(0.0..=1.0).contains(&a)) {
            return Err(GosError::InvalidModel("affinity entries must lie in [0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.p_new) {
            return Err(GosError::InvalidModel("p_new must lie in [0, 1]".into()));
        }
        check_distribution(&self.respondent_prior(), self.respondent_groups, "respondent_group_prior")?;
        if !self.new_opinion_prior.is_empty() && self.new_opinion_prior.len() != self.respondent_groups {
            return Err(GosError::InvalidModel(format!(
                "new_opinion_prior needs {} rows",
                self.respondent_groups
            )));
        }
        for r in 0..self.respondent_groups {
            check_distribution(&self.opinion_prior(r), self.opinion_groups, "new_opinion_prior row")?;
        }
        if self.seed_opinions_per_group.len() != self.opinion_groups {
            return Err(GosError::InvalidModel(format!(
                "seed_opinions_per_group needs {} entries",
                self.opinion_groups
            )));
        }
        let resp_prior = self.respondent_prior();
        for o in 0..self.opinion_groups {
            let reachable = self.p_new > 0.0
                && (0..self.respondent_groups)
                    .any(|r| resp_prior[r] > 0.0 && self.opinion_prior(r)[o] > 0.0);
            if self.seed_opinions_per_group[o] == 0 && !reachable {
                return Err(GosError::InvalidModel(format!(
                    "opinion group {o} has no seeds and cannot be reached by new posts"
                )));
            }
        }
        self.survey.validate()
    }
}

/// Ground-truth groups of a simulated run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantedLabels {
    pub opinion_groups: Vec<usize>,
    pub respondent_groups: Vec<usize>,
    pub num_opinion_groups: usize,
}

impl PlantedLabels {
    /// One label per vertex in inference order; respondent groups are
    /// offset so the two sides never share a label.
    pub fn vertex_labels(&self) -> Vec<usize> {
        self.opinion_groups
            .iter()
            .copied()
            .chain(
                self.respondent_groups
                    .iter()
                    .map(|g| g + self.num_opinion_groups),
            )
            .collect()
    }

    /// `vertex_id,vertex_type,planted_group`
    pub fn write_csv<W: Write>(&self, graph: &OpinionGraph, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["vertex_id", "vertex_type", "planted_group"])?;
        for (o, g) in graph.opinions().iter().zip(&self.opinion_groups) {
            w.write_record([o.id.0.as_str(), "opinion", &g.to_string()])?;
        }
        for (r, g) in graph.respondents().iter().zip(&self.respondent_groups) {
            w.write_record([r.id.0.as_str(), "respondent", &g.to_string()])?;
        }
        w.flush().map_err(|e| GosError::Csv(e.to_string()))?;
        Ok(())
    }
}

/// Reads the CSV written by [`PlantedLabels::write_csv`]. Every vertex of
/// `graph` must appear exactly once.
pub fn read_planted_csv<R: Read>(graph: &OpinionGraph, input: R) -> Result<PlantedLabels> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let mut opinion_groups = vec![None; graph.num_opinions()];
    let mut respondent_groups = vec![None; graph.num_respondents()];
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() < 3 {
            return Err(GosError::Malformed(format!("line {line}: expected 3 fields")));
        }
        let g: usize = record[2]
            .parse()
            .map_err(|_| GosError::Malformed(format!("line {line}: bad group index")))?;
        let id = &record[0];
        let slot = match &record[1] {
            "opinion" => graph
                .opinion_position(&id.into())
                .map(|i| &mut opinion_groups[i]),
            "respondent" => graph
                .respondent_position(&id.into())
                .map(|i| &mut respondent_groups[i]),
            other => {
                return Err(GosError::Malformed(format!(
                    "line {line}: unknown vertex type `{other}`"
                )))
            }
        }
        .ok_or_else(|| GosError::Malformed(format!("line {line}: unknown vertex `{id}`")))?;
        if slot.replace(g).is_some() {
            return Err(GosError::Malformed(format!("line {line}: vertex `{id}` listed twice")));
        }
    }
    let missing = || GosError::PartitionMismatch("planted labels do not cover every vertex".into());
    let opinion_groups: Vec<usize> = opinion_groups.into_iter().collect::<Option<_>>().ok_or_else(missing)?;
    let respondent_groups: Vec<usize> =
        respondent_groups.into_iter().collect::<Option<_>>().ok_or_else(missing)?;
    Ok(PlantedLabels {
        num_opinion_groups: opinion_groups.iter().max().map_or(0, |m| m + 1),
        opinion_groups,
        respondent_groups,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulationReport {
    /// Respondents whose empty selection was redrawn.
    pub resampled_responses: usize,
    /// Respondents who had to post because nothing could be selected.
    pub forced_posts: usize,
    pub unreachable_groups: Vec<usize>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct Simulation {
    pub graph: OpinionGraph,
    pub planted: PlantedLabels,
    pub report: SimulationReport,
}

pub fn simulate(model: &PlantedModel) -> Result<Simulation> {
    model.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(model.rng_seed);

    let mut seeds = Vec::new();
    let mut opinion_groups = Vec::new();
    for (g, &count) in model.seed_opinions_per_group.iter().enumerate() {
        for i in 0..count {
            seeds.push(format!("seed opinion {i} of group {g}"));
            opinion_groups.push(g);
        }
    }
    let mut graph = OpinionGraph::new(&seeds, model.survey.clone())?;
    let resp_prior = model.respondent_prior();
    let mut respondent_groups = Vec::with_capacity(model.n_respondents);
    let mut report = SimulationReport::default();

    for _ in 0..model.n_respondents {
        let group = sample_categorical(&mut rng, &resp_prior);
        let menu = graph.sample_menu_with(&mut rng, model.menu_size, &[]);
        let mut posts = rng.random::<f64>() < model.p_new;
        let affinity = &model.affinity[group];
        let draw = |rng: &mut ChaCha8Rng| {
            menu.iter()
                .filter(|o| {
                    let og = opinion_groups[graph.opinion_position(o).expect("menu id exists")];
                    rng.random::<f64>() < affinity[og]
                })
                .cloned()
                .collect::<Vec<_>>()
        };
        let mut selected = draw(&mut rng);
        if selected.is_empty() && !posts {
            report.resampled_responses += 1;
            for _ in 0..MAX_RESELECT {
                if menu.is_empty() {
                    break;
                }
                selected = draw(&mut rng);
                if !selected.is_empty() {
                    break;
                }
            }
            if selected.is_empty() {
                posts = true;
                report.forced_posts += 1;
            }
        }
        let mut texts = Vec::new();
        if posts {
            let og = sample_categorical(&mut rng, &model.opinion_prior(group));
            texts.push(format!(
                "synthetic opinion {} (planted group {og})",
                graph.num_opinions()
            ));
            opinion_groups.push(og);
        }
        graph.submit_response(&menu, &selected, &texts)?;
        respondent_groups.push(group);
    }

    for g in 0..model.opinion_groups {
        if !opinion_groups.contains(&g) {
            report.unreachable_groups.push(g);
            report
                .warnings
                .push(format!("opinion group {g} has no opinions after the run"));
        }
    }
    if report.resampled_responses > 0 {
        report.warnings.push(format!(
            "{} empty selections were redrawn; low-affinity respondents are slightly over-connected",
            report.resampled_responses
        ));
    }

    Ok(Simulation {
        graph,
        planted: PlantedLabels {
            opinion_groups,
            respondent_groups,
            num_opinion_groups: model.opinion_groups,
        },
        report,
    })
}

/// Fraction of respondents who posted at least one opinion.
pub fn posting_rate(graph: &OpinionGraph) -> f64 {
    if graph.num_respondents() == 0 {
        return 0.0;
    }
    graph.num_posting_respondents() as f64 / graph.num_respondents() as f64
}
