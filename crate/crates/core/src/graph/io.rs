use std::collections::{HashMap, HashSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{Opinion, OpinionGraph, Respondent, SurveyConfig, VertexKind};
use crate::error::{GosError, Result};

/// An edge as written in the export document: `[opinion_id, respondent_id]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeRecord(pub String, pub String);

/// Serialized form of an [`OpinionGraph`]. Array order is creation order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub config: SurveyConfig,
    pub opinions: Vec<Opinion>,
    pub respondents: Vec<Respondent>,
    pub edges: Vec<EdgeRecord>,
}

impl OpinionGraph {
    pub fn to_document(&self) -> GraphDocument {
        GraphDocument {
            config: self.config.clone(),
            opinions: self.opinions.clone(),
            respondents: self.respondents.clone(),
            edges: self
                .edges
                .iter()
                .map(|&(o, r)| {
                    EdgeRecord(self.opinions[o].id.0.clone(), self.respondents[r].id.0.clone())
                })
                .collect(),
        }
    }

    pub fn from_document(doc: GraphDocument) -> Result<OpinionGraph> {
        let mut kinds: HashMap<&str, (VertexKind, usize)> = HashMap::new();
        for (i, o) in doc.opinions.iter().enumerate() {
            if kinds.insert(&o.id.0, (VertexKind::Opinion, i)).is_some() {
                return Err(GosError::Malformed(format!("opinions[{i}]: duplicate id `{}`", o.id)));
            }
        }
        for (i, r) in doc.respondents.iter().enumerate() {
            if kinds.insert(&r.id.0, (VertexKind::Respondent, i)).is_some() {
                return Err(GosError::Malformed(format!(
                    "respondents[{i}]: duplicate id `{}`",
                    r.id
                )));
            }
        }

        let mut edges = Vec::with_capacity(doc.edges.len());
        let mut seen = HashSet::with_capacity(doc.edges.len());
        for (i, EdgeRecord(a, b)) in doc.edges.iter().enumerate() {
            let lookup = |id: &str| {
                kinds
                    .get(id)
                    .copied()
                    .ok_or_else(|| GosError::Malformed(format!("edges[{i}]: unknown vertex `{id}`")))
            };
            let pair = match (lookup(a)?, lookup(b)?) {
                ((VertexKind::Opinion, o), (VertexKind::Respondent, r))
                | ((VertexKind::Respondent, r), (VertexKind::Opinion, o)) => (o, r),
                ((k, _), _) => {
                    return Err(GosError::Malformed(format!(
                        "edges[{i}]: ({a}, {b}) joins two {} vertices; the graph must be bipartite",
                        k.as_str()
                    )))
                }
            };
            if !seen.insert(pair) {
                return Err(GosError::Malformed(format!("edges[{i}]: duplicate edge ({a}, {b})")));
            }
            edges.push(pair);
        }

        let mut g = OpinionGraph::empty(doc.config);
        g.opinions = doc.opinions;
        g.respondents = doc.respondents;
        g.edges = edges;
        g.rebuild_indices();
        g.validate()
            .map_err(|e| GosError::Malformed(e.to_string()))?;
        Ok(g)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("graph document serializes")
    }

    pub fn from_json(text: &str) -> Result<OpinionGraph> {
        let doc: GraphDocument = serde_json::from_str(text)?;
        OpinionGraph::from_document(doc)
    }

    /// Flat `opinion_id,respondent_id` edge list.
    pub fn write_edge_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["opinion_id", "respondent_id"])?;
        for (o, r) in self.edges() {
            w.write_record([&o.0, &r.0])?;
        }
        w.flush().map_err(|e| GosError::Csv(e.to_string()))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::OpinionId;
    use crate::seeds::INITIAL_OPINIONS;

    fn sample_graph() -> OpinionGraph {
        let mut g = OpinionGraph::new(&INITIAL_OPINIONS, SurveyConfig::default()).unwrap();
        for seed in 0..3u64 {
            let menu = g.sample_menu(8, seed);
            let pick = vec![menu[0].clone(), menu[3].clone()];
            let texts = if seed == 1 { vec!["new".to_string()] } else { vec![] };
            g.submit_response(&menu, &pick, &texts).unwrap();
        }
        g
    }

    #[test]
    fn empty_round_trip() {
        let g = OpinionGraph::new::<&str>(&[], SurveyConfig::default()).unwrap();
        assert_eq!(OpinionGraph::from_json(&g.to_json()).unwrap(), g);
    }

    #[test]
    fn seeded_round_trip_field_by_field() {
        let g = sample_graph();
        let back = OpinionGraph::from_json(&g.to_json()).unwrap();
        assert_eq!(back.config(), g.config());
        assert_eq!(back.opinions(), g.opinions());
        assert_eq!(back.respondents(), g.respondents());
        assert_eq!(back.edge_indices(), g.edge_indices());
        // growth continues with fresh ids after import
        let mut back = back;
        let menu = back.sample_menu(8, 7);
        back.submit_response(&menu, &[], &["x".into()]).unwrap();
        back.validate().unwrap();
    }

    #[test]
    fn opinion_opinion_edge_rejected() {
        let mut doc = sample_graph().to_document();
        doc.edges.push(EdgeRecord("o0".into(), "o1".into()));
        let err = OpinionGraph::from_document(doc).unwrap_err();
        assert!(err.to_string().contains("edges[7]"), "{err}");
        assert!(err.to_string().contains("bipartite"), "{err}");
    }

    #[test]
    fn duplicate_edge_rejected() {
        let mut doc = sample_graph().to_document();
        let dup = doc.edges[0].clone();
        doc.edges.push(EdgeRecord(dup.1.clone(), dup.0.clone()));
        let err = OpinionGraph::from_document(doc).unwrap_err();
        assert!(err.to_string().contains("duplicate edge"), "{err}");
    }

    #[test]
    fn malformed_json_rejected() {
        assert!(OpinionGraph::from_json("{\"opinions\": 3}").is_err());
    }

    #[test]
    fn isolated_respondent_rejected() {
        let mut doc = sample_graph().to_document();
        doc.edges.retain(|e| e.1 != "r2");
        let err = OpinionGraph::from_document(doc).unwrap_err();
        assert!(err.to_string().contains("r2"), "{err}");
    }

    #[test]
    fn edge_csv() {
        let g = sample_graph();
        let mut buf = Vec::new();
        g.write_edge_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "opinion_id,respondent_id");
        assert_eq!(lines.len(), g.num_edges() + 1);
        let (o, r) = g.edges().next().unwrap();
        assert_eq!(lines[1], format!("{o},{r}"));
        let _ = OpinionId::from("o0");
    }
}
