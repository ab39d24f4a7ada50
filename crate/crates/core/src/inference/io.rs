use std::collections::BTreeMap;
use std::io::{Read, Write};

use super::{GroupNames, Partition};
use crate::error::{GosError, Result};
use crate::graph::OpinionGraph;

/// `vertex_id,vertex_type,group_index,group_name`, one row per vertex in
/// inference order.
pub fn write_partition_csv<W: Write>(
    graph: &OpinionGraph,
    partition: &Partition,
    names: &GroupNames,
    out: W,
) -> Result<()> {
    if partition.num_vertices() != graph.num_vertices() {
        return Err(GosError::PartitionMismatch(format!(
            "partition covers {} vertices, graph has {}",
            partition.num_vertices(),
            graph.num_vertices()
        )));
    }
    let bip = graph.bipartite();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["vertex_id", "vertex_type", "group_index", "group_name"])?;
    for v in 0..graph.num_vertices() {
        let g = partition.label(v);
        w.write_record([
            graph.vertex_id(v),
            bip.kind(v).as_str(),
            &g.to_string(),
            &names.name(g),
        ])?;
    }
    w.flush().map_err(|e| GosError::Csv(e.to_string()))?;
    Ok(())
}

/// A partition read back from CSV together with its group names.
#[derive(Clone, Debug)]
pub struct PartitionFile {
    pub partition: Partition,
    pub names: GroupNames,
}

/// Reads a partition CSV against `graph`. The label space is taken as one
/// past the largest group index. Every vertex must appear exactly once.
pub fn read_partition_csv<R: Read>(graph: &OpinionGraph, input: R) -> Result<PartitionFile> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let n = graph.num_vertices();
    let mut labels: Vec<Option<usize>> = vec![None; n];
    let mut names = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() < 3 {
            return Err(GosError::Malformed(format!("line {line}: expected 4 fields")));
        }
        let id = &record[0];
        let v = match &record[1] {
            "opinion" => graph.opinion_position(&id.into()),
            "respondent" => graph
                .respondent_position(&id.into())
                .map(|r| r + graph.num_opinions()),
            other => {
                return Err(GosError::Malformed(format!(
                    "line {line}: unknown vertex type `{other}`"
                )))
            }
        }
        .ok_or_else(|| GosError::Malformed(format!("line {line}: unknown vertex `{id}`")))?;
        let g: usize = record[2]
            .parse()
            .map_err(|_| GosError::Malformed(format!("line {line}: bad group index")))?;
        if labels[v].replace(g).is_some() {
            return Err(GosError::Malformed(format!("line {line}: vertex `{id}` listed twice")));
        }
        if let Some(name) = record.get(3).filter(|s| !s.is_empty()) {
            names.insert(g, name.to_string());
        }
    }
    let labels: Vec<usize> = labels
        .into_iter()
        .enumerate()
        .map(|(v, l)| {
            l.ok_or_else(|| {
                GosError::PartitionMismatch(format!("vertex `{}` missing", graph.vertex_id(v)))
            })
        })
        .collect::<Result<_>>()?;
    let label_space = labels.iter().max().map_or(1, |m| m + 1);
    let partition = Partition::new(&graph.bipartite(), labels, label_space)?;
    Ok(PartitionFile {
        partition,
        names: GroupNames(names),
    })
}
