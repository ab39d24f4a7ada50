use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{GosError, Result};
use crate::graph::{OpinionGraph, VertexKind};
use crate::inference::{GroupNames, Partition};

/// Opinion-group × respondent-group edge fractions, normalized per column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopularityMatrix {
    /// Opinion group index per row; `None` for zero padding rows.
    pub row_groups: Vec<Option<usize>>,
    pub col_groups: Vec<usize>,
    pub row_names: Vec<String>,
    pub col_names: Vec<String>,
    pub edge_counts: Vec<Vec<u64>>,
    pub values: Vec<Vec<f64>>,
}

pub(crate) fn check_partition(graph: &OpinionGraph, partition: &Partition) -> Result<()> {
    if partition.num_vertices() != graph.num_vertices() {
        return Err(GosError::PartitionMismatch(format!(
            "partition covers {} vertices, graph has {}",
            partition.num_vertices(),
            graph.num_vertices()
        )));
    }
    Ok(())
}

/// Respondent groups ordered by decreasing size, then index.
pub(crate) fn respondent_group_order(partition: &Partition) -> Vec<usize> {
    let mut cols: Vec<usize> = partition.groups_of(VertexKind::Respondent).collect();
    cols.sort_by_key(|&g| (std::cmp::Reverse(partition.size(g)), g));
    cols
}

/// `value(i, j) = e_ij / Σ_i' e_i'j`. With `pad_to_rows`, zero rows are
/// appended until the matrix has that many rows.
pub fn popularity_matrix(
    graph: &OpinionGraph,
    partition: &Partition,
    names: &GroupNames,
    pad_to_rows: Option<usize>,
) -> Result<PopularityMatrix> {
    check_partition(graph, partition)?;
    let mut row_groups: Vec<Option<usize>> =
        partition.groups_of(VertexKind::Opinion).map(Some).collect();
    let col_groups = respondent_group_order(partition);

    let mut edge_counts: Vec<Vec<u64>> = row_groups
        .iter()
        .map(|r| {
            col_groups
                .iter()
                .map(|&c| partition.block_edges(r.expect("occupied"), c))
                .collect()
        })
        .collect();
    if let Some(target) = pad_to_rows {
        while row_groups.len() < target {
            row_groups.push(None);
            edge_counts.push(vec![0; col_groups.len()]);
        }
    }

    let col_totals: Vec<u64> = (0..col_groups.len())
        .map(|j| edge_counts.iter().map(|row| row[j]).sum())
        .collect();
    if let Some(j) = col_totals.iter().position(|&t| t == 0) {
        return Err(GosError::Invariant(format!(
            "respondent group {} has no edges",
            col_groups[j]
        )));
    }
    let values = edge_counts
        .iter()
        .map(|row| {
            row.iter()
                .zip(&col_totals)
                .map(|(&e, &t)| e as f64 / t as f64)
                .collect()
        })
        .collect();

    let mut empty = 0;
    let row_names = row_groups
        .iter()
        .map(|r| match r {
            Some(g) => names.name(*g),
            None => {
                empty += 1;
                format!("empty-{}", empty - 1)
            }
        })
        .collect();
    let col_names = col_groups.iter().map(|&g| names.name(g)).collect();

    Ok(PopularityMatrix {
        row_groups,
        col_groups,
        row_names,
        col_names,
        edge_counts,
        values,
    })
}

impl PopularityMatrix {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["opinion_group".to_string()];
        header.extend(self.col_names.iter().cloned());
        w.write_record(&header)?;
        for (name, row) in self.row_names.iter().zip(&self.values) {
            let mut rec = vec![name.clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| GosError::Csv(e.to_string()))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{OpinionId, SurveyConfig};

    fn ids(v: &[&str]) -> Vec<OpinionId> {
        v.iter().map(|s| OpinionId::from(*s)).collect()
    }

    /// O1 = {o0, o1, o2}, O2 = {o3}; one respondent group with edges 3 and 1.
    fn hand_graph() -> (OpinionGraph, Partition) {
        let mut g = OpinionGraph::new(&["a", "b", "c", "d"], SurveyConfig::default()).unwrap();
        let menu = ids(&["o0", "o1", "o2", "o3"]);
        g.submit_response(&menu, &ids(&["o0", "o1", "o3"]), &[]).unwrap();
        g.submit_response(&menu, &ids(&["o2"]), &[]).unwrap();
        let p = Partition::new(&g.bipartite(), vec![0, 0, 0, 1, 2, 2], 3).unwrap();
        (g, p)
    }

    #[test]
    fn hand_counts() {
        let (g, p) = hand_graph();
        let m = popularity_matrix(&g, &p, &GroupNames::default(), None).unwrap();
        assert_eq!(m.edge_counts, vec![vec![3], vec![1]]);
        assert_eq!(m.values, vec![vec![0.75], vec![0.25]]);
    }

    #[test]
    fn one_opinion_group_is_all_ones() {
        let (g, _) = hand_graph();
        let p = Partition::new(&g.bipartite(), vec![0, 0, 0, 0, 1, 2], 3).unwrap();
        let m = popularity_matrix(&g, &p, &GroupNames::default(), None).unwrap();
        assert_eq!(m.values, vec![vec![1.0, 1.0]]);
    }

    #[test]
    fn padding_appends_zero_rows() {
        let (g, p) = hand_graph();
        let m = popularity_matrix(&g, &p, &GroupNames::default(), Some(4)).unwrap();
        assert_eq!(m.values.len(), 4);
        assert_eq!(m.values[3], vec![0.0]);
        assert_eq!(m.row_names[2], "empty-0");
        let col: f64 = m.values.iter().map(|r| r[0]).sum();
        assert!((col - 1.0).abs() < 1e-12);
    }

    #[test]
    fn csv_layout() {
        let (g, p) = hand_graph();
        let mut names = GroupNames::default();
        names.0.insert(2, "A".into());
        let m = popularity_matrix(&g, &p, &names, None).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "opinion_group,A\ngroup-0,0.75\ngroup-1,0.25\n");
    }
}
