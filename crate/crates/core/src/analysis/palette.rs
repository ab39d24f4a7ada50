//! Palette diagrams: per-respondent propensity columns, stacked, ordered so
//! that similar columns sit next to each other, with per-column origins that
//! keep band boundaries aligned.

use std::collections::HashSet;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::popularity::check_partition;
use crate::error::{GosError, Result};
use crate::graph::{OpinionGraph, VertexKind};
use crate::inference::{GroupNames, Partition};

/// Per-respondent propensity over opinion groups.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Propensities {
    /// Respondent positions in graph order.
    pub respondents: Vec<usize>,
    /// Opinion group index for each vector component.
    pub groups: Vec<usize>,
    pub vectors: Vec<Vec<f64>>,
}

/// Component `i` for respondent `v` is (edges from `v` into opinion group
/// `i`) / degree(`v`). Edges into `exclude`d groups are dropped before
/// normalizing; respondents left without edges are omitted.
pub fn respondent_propensities(
    graph: &OpinionGraph,
    partition: &Partition,
    exclude: &[usize],
) -> Result<Propensities> {
    check_partition(graph, partition)?;
    let excluded: HashSet<usize> = exclude.iter().copied().collect();
    let groups: Vec<usize> = partition
        .groups_of(VertexKind::Opinion)
        .filter(|g| !excluded.contains(g))
        .collect();
    let mut slot = vec![usize::MAX; partition.label_space()];
    for (i, &g) in groups.iter().enumerate() {
        slot[g] = i;
    }
    let mut counts = vec![vec![0u64; groups.len()]; graph.num_respondents()];
    for &(o, r) in graph.edge_indices() {
        let s = slot[partition.label(o)];
        if s != usize::MAX {
            counts[r][s] += 1;
        }
    }
    let mut respondents = Vec::new();
    let mut vectors = Vec::new();
    for (r, c) in counts.into_iter().enumerate() {
        let total: u64 = c.iter().sum();
        if total == 0 {
            continue;
        }
        respondents.push(r);
        vectors.push(c.iter().map(|&x| x as f64 / total as f64).collect());
    }
    Ok(Propensities {
        respondents,
        groups,
        vectors,
    })
}

pub fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// `J = Σ_j ‖col_j − col_{j+1}‖₁` along `order`.
pub fn palette_objective(vectors: &[Vec<f64>], order: &[usize]) -> f64 {
    order
        .windows(2)
        .map(|w| l1_distance(&vectors[w[0]], &vectors[w[1]]))
        .sum()
}

/// Column ordering and vertical alignment for a palette diagram.
pub trait PaletteStrategy {
    fn order(&self, vectors: &[Vec<f64>]) -> Vec<usize>;
    fn origins(&self, ordered: &[Vec<f64>]) -> Vec<f64>;
}

/// Greedy nearest-neighbour chaining in L1 plus median origin alignment.
#[derive(Clone, Copy, Debug, Default)]
pub struct GreedyMedian;

impl PaletteStrategy for GreedyMedian {
    fn order(&self, vectors: &[Vec<f64>]) -> Vec<usize> {
        palette_order(vectors).order
    }

    fn origins(&self, ordered: &[Vec<f64>]) -> Vec<f64> {
        palette_origins(ordered)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PaletteOrder {
    pub order: Vec<usize>,
    pub objective: f64,
}

/// Starts from the vector with the largest single component, then keeps
/// appending the closest unplaced vector (L1). Ties go to the lower index.
pub fn palette_order(vectors: &[Vec<f64>]) -> PaletteOrder {
    let n = vectors.len();
    if n == 0 {
        return PaletteOrder {
            order: Vec::new(),
            objective: 0.0,
        };
    }
    let peak = |v: &Vec<f64>| v.iter().cloned().fold(f64::MIN, f64::max);
    let mut start = 0;
    for i in 1..n {
        if peak(&vectors[i]) > peak(&vectors[start]) {
            start = i;
        }
    }
    let mut placed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    placed[start] = true;
    order.push(start);
    let mut last = start;
    for _ in 1..n {
        let mut best = usize::MAX;
        let mut best_d = f64::INFINITY;
        for (i, v) in vectors.iter().enumerate() {
            if placed[i] {
                continue;
            }
            let d = l1_distance(&vectors[last], v);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        placed[best] = true;
        order.push(best);
        last = best;
    }
    let objective = palette_objective(vectors, &order);
    PaletteOrder { order, objective }
}

/// Interior stack boundaries `c_1 .. c_{G-1}` of a column.
fn interior_boundaries(col: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(col.len().saturating_sub(1));
    for &x in &col[..col.len().saturating_sub(1)] {
        acc += x;
        out.push(acc);
    }
    out
}

fn median(mut xs: Vec<f64>) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        0.5 * (xs[m - 1] + xs[m])
    }
}

/// Sum of absolute boundary misalignments between two stacked columns when
/// the second is drawn `step` above the first.
pub fn step_misalignment(prev: &[f64], next: &[f64], step: f64) -> f64 {
    interior_boundaries(prev)
        .into_iter()
        .zip(interior_boundaries(next))
        .map(|(a, b)| (a - (b + step)).abs())
        .sum()
}

/// `origin_0 = 0`; each next origin shifts by the median of the interior
/// boundary differences, which minimizes [`step_misalignment`].
pub fn palette_origins(ordered: &[Vec<f64>]) -> Vec<f64> {
    let mut origins = Vec::with_capacity(ordered.len());
    let mut current = 0.0;
    for (j, col) in ordered.iter().enumerate() {
        if j > 0 {
            let prev = interior_boundaries(&ordered[j - 1]);
            let next = interior_boundaries(col);
            let diffs = prev.iter().zip(&next).map(|(a, b)| a - b).collect();
            current += median(diffs);
        }
        origins.push(current);
    }
    origins
}

pub const PALETTE_COLORS: [&str; 12] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7",
    "#9c755f", "#bab0ac", "#86bcb6", "#d37295",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PaletteGroup {
    pub index: usize,
    pub name: String,
    pub color: String,
}

/// Renderable palette diagram document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PaletteLayout {
    /// Respondent ids, left to right.
    pub order: Vec<String>,
    pub groups: Vec<PaletteGroup>,
    /// `columns[j][k]`: propensity of the j-th placed respondent for group k.
    pub columns: Vec<Vec<f64>>,
    pub origins: Vec<f64>,
    pub objective: f64,
}

#[derive(Clone, Debug, Default)]
pub struct PaletteOptions {
    pub exclude_groups: Vec<usize>,
}

pub fn palette_layout(
    graph: &OpinionGraph,
    partition: &Partition,
    names: &GroupNames,
    options: &PaletteOptions,
) -> Result<PaletteLayout> {
    palette_layout_with(graph, partition, names, options, &GreedyMedian)
}

pub fn palette_layout_with<S: PaletteStrategy>(
    graph: &OpinionGraph,
    partition: &Partition,
    names: &GroupNames,
    options: &PaletteOptions,
    strategy: &S,
) -> Result<PaletteLayout> {
    let props = respondent_propensities(graph, partition, &options.exclude_groups)?;
    let order = strategy.order(&props.vectors);
    let columns: Vec<Vec<f64>> = order.iter().map(|&i| props.vectors[i].clone()).collect();
    let origins = strategy.origins(&columns);
    let objective = palette_objective(&props.vectors, &order);
    Ok(PaletteLayout {
        order: order
            .iter()
            .map(|&i| graph.respondents()[props.respondents[i]].id.0.clone())
            .collect(),
        groups: props
            .groups
            .iter()
            .enumerate()
            .map(|(k, &g)| PaletteGroup {
                index: g,
                name: names.name(g),
                color: PALETTE_COLORS[k % PALETTE_COLORS.len()].to_string(),
            })
            .collect(),
        columns,
        origins,
        objective,
    })
}

impl PaletteLayout {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("layout serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let layout: PaletteLayout = serde_json::from_str(text)?;
        if layout.columns.len() != layout.order.len() || layout.origins.len() != layout.order.len()
        {
            return Err(GosError::Malformed(
                "palette layout arrays have different lengths".into(),
            ));
        }
        Ok(layout)
    }

    /// `respondent_id,origin,<group names...>`
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["respondent_id".to_string(), "origin".to_string()];
        header.extend(self.groups.iter().map(|g| g.name.clone()));
        w.write_record(&header)?;
        for ((id, origin), col) in self.order.iter().zip(&self.origins).zip(&self.columns) {
            let mut rec = vec![id.clone(), origin.to_string()];
            rec.extend(col.iter().map(|x| x.to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| GosError::Csv(e.to_string()))?;
        Ok(())
    }
}
