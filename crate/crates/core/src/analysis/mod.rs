//! Result artifacts derived from a graph and its partition.

mod palette;
mod popularity;
mod svg;

pub use palette::{
    l1_distance, palette_layout, palette_layout_with, palette_objective, palette_order,
    palette_origins, respondent_propensities, step_misalignment, GreedyMedian, PaletteGroup,
    PaletteLayout, PaletteOptions, PaletteOrder, PaletteStrategy, Propensities, PALETTE_COLORS,
};
pub use popularity::{popularity_matrix, PopularityMatrix};
pub use svg::render_palette_svg;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graph::OpinionGraph;
use crate::inference::{GroupNames, Partition};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSizeRow {
    pub survey: String,
    pub group: usize,
    pub kind: crate::graph::VertexKind,
    pub name: String,
    pub size: usize,
}

/// Group sizes of every occupied group, survey by survey.
pub fn group_size_series(
    surveys: &[(&str, &OpinionGraph, &Partition, &GroupNames)],
) -> Result<Vec<GroupSizeRow>> {
    let mut rows = Vec::new();
    for (survey, graph, partition, names) in surveys {
        popularity::check_partition(graph, partition)?;
        for g in partition.occupied_groups() {
            rows.push(GroupSizeRow {
                survey: survey.to_string(),
                group: g,
                kind: partition.group_kind(g).expect("occupied"),
                name: names.name(g),
                size: partition.size(g),
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{SurveyConfig, VertexKind};

    #[test]
    fn sizes_recount() {
        let mut g1 = OpinionGraph::new(&["a", "b", "c"], SurveyConfig::default()).unwrap();
        let menu: Vec<_> = g1.opinions().iter().map(|o| o.id.clone()).collect();
        g1.submit_response(&menu, &menu[..1], &[]).unwrap();
        let p1 = Partition::new(&g1.bipartite(), vec![0, 0, 1, 2], 3).unwrap();
        let mut g2 = g1.clone();
        g2.submit_response(&menu, &menu[1..], &[]).unwrap();
        let p2 = Partition::new(&g2.bipartite(), vec![0, 0, 0, 1, 1], 2).unwrap();
        let names = GroupNames::default();
        let rows = group_size_series(&[("s1", &g1, &p1, &names), ("s2", &g2, &p2, &names)]).unwrap();

        // recount from the raw labels
        let mut expected = Vec::new();
        for (s, labels, kinds) in [
            ("s1", vec![0, 0, 1, 2], vec![3, 3, 3, 4]),
            ("s2", vec![0, 0, 0, 1, 1], vec![3, 3, 3, 4, 4]),
        ] {
            let max = *labels.iter().max().unwrap();
            for grp in 0..=max {
                let size = labels.iter().filter(|&&l| l == grp).count();
                let k = kinds[labels.iter().position(|&l| l == grp).unwrap()];
                expected.push((s.to_string(), grp, k == 4, size));
            }
        }
        let got: Vec<_> = rows
            .iter()
            .map(|r| (r.survey.clone(), r.group, r.kind == VertexKind::Respondent, r.size))
            .collect();
        assert_eq!(got, expected);
        let s1_total: usize = rows.iter().filter(|r| r.survey == "s1").map(|r| r.size).sum();
        assert_eq!(s1_total, g1.num_vertices());
    }
}
