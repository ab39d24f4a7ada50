//! Annotator labels, per-vertex prior fields, and inter-annotator agreement.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{GosError, Result};
use crate::graph::{OpinionGraph, OpinionId};

/// The ten semantic opinion groups annotators choose from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SemanticGroup {
    InfectionRisk,
    SocialPressureFuture,
    Financial,
    Travel,
    GovernmentPolicies,
    MaskShortage,
    MaskDiscomfort,
    OtherIssues,
    NoConcerns,
    Invalid,
}

impl SemanticGroup {
    pub const ALL: [SemanticGroup; 10] = [
        SemanticGroup::InfectionRisk,
        SemanticGroup::SocialPressureFuture,
        SemanticGroup::Financial,
        SemanticGroup::Travel,
        SemanticGroup::GovernmentPolicies,
        SemanticGroup::MaskShortage,
        SemanticGroup::MaskDiscomfort,
        SemanticGroup::OtherIssues,
        SemanticGroup::NoConcerns,
        SemanticGroup::Invalid,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn code(self) -> &'static str {
        match self {
            SemanticGroup::InfectionRisk => "infection_risk",
            SemanticGroup::SocialPressureFuture => "social_pressure_future",
            SemanticGroup::Financial => "financial",
            SemanticGroup::Travel => "travel",
            SemanticGroup::GovernmentPolicies => "government_policies",
            SemanticGroup::MaskShortage => "mask_shortage",
            SemanticGroup::MaskDiscomfort => "mask_discomfort",
            SemanticGroup::OtherIssues => "other_issues",
            SemanticGroup::NoConcerns => "no_concerns",
            SemanticGroup::Invalid => "invalid",
        }
    }

    /// Human-readable name used for group labels in reports.
    pub fn display_name(self) -> &'static str {
        match self {
            SemanticGroup::InfectionRisk => "infection risk",
            SemanticGroup::SocialPressureFuture => "social pressure & future prospect",
            SemanticGroup::Financial => "financial issues",
            SemanticGroup::Travel => "travel",
            SemanticGroup::GovernmentPolicies => "government policies",
            SemanticGroup::MaskShortage => "mask (shortage)",
            SemanticGroup::MaskDiscomfort => "mask (discomfort)",
            SemanticGroup::OtherIssues => "other issues",
            SemanticGroup::NoConcerns => "no concerns",
            SemanticGroup::Invalid => "invalid responses",
        }
    }
}

impl fmt::Display for SemanticGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for SemanticGroup {
    type Err = GosError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        SemanticGroup::ALL
            .into_iter()
            .find(|g| g.code() == s)
            .ok_or_else(|| GosError::Malformed(format!("unknown group code `{s}`")))
    }
}

/// One (opinion, annotator, group) triple.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationEntry {
    pub opinion: OpinionId,
    pub annotator: String,
    pub group: SemanticGroup,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "AnnotationSetRepr", try_from = "AnnotationSetRepr")]
pub struct AnnotationSet {
    /// Annotators in first-seen order.
    annotators: Vec<String>,
    entries: BTreeMap<(OpinionId, usize), SemanticGroup>,
}

#[derive(Serialize, Deserialize)]
struct AnnotationSetRepr {
    annotators: Vec<String>,
    entries: Vec<AnnotationEntry>,
}

impl From<AnnotationSet> for AnnotationSetRepr {
    fn from(set: AnnotationSet) -> Self {
        AnnotationSetRepr {
            entries: set.entries().collect(),
            annotators: set.annotators,
        }
    }
}

impl TryFrom<AnnotationSetRepr> for AnnotationSet {
    type Error = GosError;

    fn try_from(repr: AnnotationSetRepr) -> Result<Self> {
        let mut set = AnnotationSet {
            annotators: repr.annotators,
            entries: BTreeMap::new(),
        };
        for e in repr.entries {
            let a = set.annotator_position(&e.annotator)?;
            set.entries.insert((e.opinion, a), e.group);
        }
        Ok(set)
    }
}

impl AnnotationSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn annotators(&self) -> &[String] {
        &self.annotators
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn annotator_slot(&mut self, annotator: &str) -> usize {
        match self.annotators.iter().position(|a| a == annotator) {
            Some(i) => i,
            None => {
                self.annotators.push(annotator.to_string());
                self.annotators.len() - 1
            }
        }
    }

    fn annotator_position(&self, annotator: &str) -> Result<usize> {
        self.annotators
            .iter()
            .position(|a| a == annotator)
            .ok_or_else(|| GosError::UnknownAnnotator(annotator.to_string()))
    }

    /// Inserts or replaces a label. Returns the previous label, if any.
    pub fn insert(
        &mut self,
        opinion: OpinionId,
        annotator: &str,
        group: SemanticGroup,
    ) -> Option<SemanticGroup> {
        let a = self.annotator_slot(annotator);
        self.entries.insert((opinion, a), group)
    }

    pub fn get(&self, opinion: &OpinionId, annotator: &str) -> Option<SemanticGroup> {
        let a = self.annotators.iter().position(|x| x == annotator)?;
        self.entries.get(&(opinion.clone(), a)).copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = AnnotationEntry> + '_ {
        self.entries.iter().map(|((o, a), g)| AnnotationEntry {
            opinion: o.clone(),
            annotator: self.annotators[*a].clone(),
            group: *g,
        })
    }

    /// Labels attached to one opinion as (annotator position, group).
    pub fn labels_of(&self, opinion: &OpinionId) -> Vec<(usize, SemanticGroup)> {
        self.entries
            .range((opinion.clone(), 0)..=(opinion.clone(), usize::MAX))
            .map(|((_, a), g)| (*a, *g))
            .collect()
    }

    /// Merges `other` into `self`; later entries win.
    pub fn extend(&mut self, other: &AnnotationSet) {
        for e in other.entries() {
            self.insert(e.opinion, &e.annotator, e.group);
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["opinion_id", "annotator_id", "group_code"])?;
        for e in self.entries() {
            w.write_record([e.opinion.0.as_str(), &e.annotator, e.group.code()])?;
        }
        w.flush().map_err(|e| GosError::Csv(e.to_string()))?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedRow {
    /// 1-based line number in the input.
    pub line: u64,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationImport {
    pub set: AnnotationSet,
    pub rejected: Vec<RejectedRow>,
    pub warnings: Vec<String>,
}

/// Parses `opinion_id,annotator_id,group_code` rows. A header row is
/// optional. Rows with unknown group codes, or with opinion ids missing from
/// `graph` when one is given, are rejected and reported; a repeated
/// (opinion, annotator) pair keeps the last row.
pub fn import_annotations<R: Read>(
    input: R,
    graph: Option<&OpinionGraph>,
) -> Result<AnnotationImport> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input);
    let mut out = AnnotationImport::default();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(i as u64 + 1);
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if i == 0 && record.get(0) == Some("opinion_id") {
            continue;
        }
        if record.len() != 3 {
            out.rejected.push(RejectedRow {
                line,
                reason: format!("expected 3 fields, found {}", record.len()),
            });
            continue;
        }
        let opinion = OpinionId(record[0].to_string());
        let annotator = &record[1];
        let group = match record[2].parse::<SemanticGroup>() {
            Ok(g) => g,
            Err(e) => {
                out.rejected.push(RejectedRow {
                    line,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        if let Some(g) = graph {
            if g.opinion_position(&opinion).is_none() {
                out.rejected.push(RejectedRow {
                    line,
                    reason: format!("unknown opinion id `{opinion}`"),
                });
                continue;
            }
        }
        if let Some(prev) = out.set.insert(opinion.clone(), annotator, group) {
            let msg = format!(
                "line {line}: ({opinion}, {annotator}) relabeled {prev} -> {group}; keeping the last row"
            );
            warn!("{msg}");
            out.warnings.push(msg);
        }
    }
    Ok(out)
}

/// Counts opinions labeled `g` by annotator `a` and `h` by annotator `b`.
/// Only opinions labeled by both are counted.
pub fn agreement_matrix(
    annotations: &AnnotationSet,
    annotator_a: &str,
    annotator_b: &str,
) -> Result<[[u64; 10]; 10]> {
    let a = annotations.annotator_position(annotator_a)?;
    let b = annotations.annotator_position(annotator_b)?;
    let mut m = [[0u64; 10]; 10];
    for ((opinion, who), ga) in &annotations.entries {
        if *who != a {
            continue;
        }
        if let Some(gb) = annotations.entries.get(&(opinion.clone(), b)) {
            m[ga.index()][gb.index()] += 1;
        }
    }
    Ok(m)
}

/// Default background probability for labels a vertex does not carry.
pub const DEFAULT_EPSILON: f64 = 1e-6;

/// Per-vertex prior distributions over annotation labels.
///
/// A label is an (annotator, group) pair that occurs at least once, so `K`
/// is at most `annotators × 10`. Rows follow the inference vertex order:
/// opinions first, then respondents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorField {
    label_map: Vec<(String, SemanticGroup)>,
    rows: Vec<Vec<f64>>,
    epsilon: f64,
    n_opinions: usize,
}

impl PriorField {
    pub fn num_labels(&self) -> usize {
        self.label_map.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.rows.len()
    }

    pub fn num_opinions(&self) -> usize {
        self.n_opinions
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn label_map(&self) -> &[(String, SemanticGroup)] {
        &self.label_map
    }

    pub fn row(&self, vertex: usize) -> &[f64] {
        &self.rows[vertex]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Label index for an (annotator, group) pair, if that pair is used.
    pub fn label_index(&self, annotator: &str, group: SemanticGroup) -> Option<usize> {
        self.label_map
            .iter()
            .position(|(a, g)| a == annotator && *g == group)
    }

    /// Dense CSV: `vertex_id` followed by one column per label.
    pub fn write_csv<W: Write>(&self, graph: &OpinionGraph, out: W) -> Result<()> {
        if graph.num_vertices() != self.rows.len() {
            return Err(GosError::PartitionMismatch(format!(
                "prior field has {} rows, graph has {} vertices",
                self.rows.len(),
                graph.num_vertices()
            )));
        }
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["vertex_id".to_string()];
        header.extend(self.label_map.iter().map(|(a, g)| format!("{a}:{g}")));
        w.write_record(&header)?;
        for (v, row) in self.rows.iter().enumerate() {
            let mut rec = vec![graph.vertex_id(v).to_string()];
            rec.extend(row.iter().map(|p| format!("{p:e}")));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| GosError::Csv(e.to_string()))?;
        Ok(())
    }
}

/// Builds the prior field: an opinion carrying `m` of the `K` labels gets
/// `η = (1 − (K − m)·ε) / m` on each of them and `ε` elsewhere; unannotated
/// opinions and all respondents are uniform.
pub fn build_prior_field(
    annotations: &AnnotationSet,
    graph: &OpinionGraph,
    epsilon: f64,
) -> Result<PriorField> {
    let mut used = vec![[false; 10]; annotations.annotators.len()];
    for ((opinion, a), g) in &annotations.entries {
        if graph.opinion_position(opinion).is_none() {
            return Err(GosError::UnknownOpinion(opinion.0.clone()));
        }
        used[*a][g.index()] = true;
    }
    let mut label_map = Vec::new();
    let mut index_of: HashMap<(usize, SemanticGroup), usize> = HashMap::new();
    for (a, groups) in used.iter().enumerate() {
        for g in SemanticGroup::ALL {
            if groups[g.index()] {
                index_of.insert((a, g), label_map.len());
                label_map.push((annotations.annotators[a].clone(), g));
            }
        }
    }
    let k = label_map.len();
    if k > 0 && !(epsilon > 0.0 && epsilon * (k as f64) < 1.0) {
        return Err(GosError::InvalidEpsilon {
            epsilon,
            bound: 1.0 / k as f64,
        });
    }

    let uniform = if k > 0 { vec![1.0 / k as f64; k] } else { Vec::new() };
    let mut rows = Vec::with_capacity(graph.num_vertices());
    for o in graph.opinions() {
        let labels = annotations.labels_of(&o.id);
        if labels.is_empty() {
            rows.push(uniform.clone());
            continue;
        }
        let m = labels.len();
        let eta = (1.0 - (k - m) as f64 * epsilon) / m as f64;
        let mut row = vec![epsilon; k];
        for (a, g) in labels {
            row[index_of[&(a, g)]] = eta;
        }
        rows.push(row);
    }
    rows.extend(std::iter::repeat_n(uniform, graph.num_respondents()));

    Ok(PriorField {
        label_map,
        rows,
        epsilon,
        n_opinions: graph.num_opinions(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::SurveyConfig;
    use proptest::prelude::*;

    fn graph_with(n: usize) -> OpinionGraph {
        let texts: Vec<String> = (0..n).map(|i| format!("op {i}")).collect();
        let mut g = OpinionGraph::new(&texts, SurveyConfig::default()).unwrap();
        let menu = g.sample_menu(8, 0);
        g.submit_response(&menu, &menu[..1], &[]).unwrap();
        g
    }

    fn op(i: usize) -> OpinionId {
        OpinionId(format!("o{i}"))
    }

    /// Every (annotator, group) pair used once so that K = 30.
    fn full_label_space() -> AnnotationSet {
        let mut s = AnnotationSet::new();
        for (a, name) in ["x", "y", "z"].iter().enumerate() {
            for (i, g) in SemanticGroup::ALL.iter().enumerate() {
                s.insert(op(10 + a * 10 + i), name, *g);
            }
        }
        s
    }

    #[test]
    fn codes_round_trip() {
        assert_eq!(SemanticGroup::ALL.len(), 10);
        for g in SemanticGroup::ALL {
            assert_eq!(g.code().parse::<SemanticGroup>().unwrap(), g);
        }
        assert!("covid".parse::<SemanticGroup>().is_err());
    }

    #[test]
    fn unannotated_row_is_uniform() {
        let g = graph_with(40);
        let field = build_prior_field(&full_label_space(), &g, 1e-6).unwrap();
        assert_eq!(field.num_labels(), 30);
        assert!(field.row(0).iter().all(|&p| p == 1.0 / 30.0));
        // the respondent row too
        assert!(field.row(40).iter().all(|&p| p == 1.0 / 30.0));
    }

    #[test]
    fn three_hot_row() {
        let g = graph_with(40);
        let mut s = full_label_space();
        s.insert(op(0), "x", SemanticGroup::Financial);
        s.insert(op(0), "y", SemanticGroup::Financial);
        s.insert(op(0), "z", SemanticGroup::Travel);
        let field = build_prior_field(&s, &g, 1e-6).unwrap();
        let eta = (1.0 - 27.0 * 1e-6) / 3.0;
        let row = field.row(0);
        let hot: Vec<usize> = (0..30).filter(|&k| row[k] == eta).collect();
        assert_eq!(hot.len(), 3);
        assert_eq!(row.iter().filter(|&&p| p == 1e-6).count(), 27);
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(
            field.label_index("z", SemanticGroup::Travel),
            Some(hot[2])
        );
    }

    #[test]
    fn one_hot_row() {
        let g = graph_with(40);
        let mut s = full_label_space();
        s.insert(op(1), "y", SemanticGroup::NoConcerns);
        let field = build_prior_field(&s, &g, 1e-6).unwrap();
        let row = field.row(1);
        let top = row.iter().cloned().fold(0.0, f64::max);
        assert_eq!(top, 1.0 - 29.0 * 1e-6);
        assert_eq!(row.iter().filter(|&&p| p == 1e-6).count(), 29);
    }

    #[test]
    fn unused_labels_shrink_k() {
        let g = graph_with(5);
        let mut s = AnnotationSet::new();
        s.insert(op(0), "x", SemanticGroup::Travel);
        s.insert(op(1), "y", SemanticGroup::Travel);
        s.insert(op(2), "y", SemanticGroup::Financial);
        let field = build_prior_field(&s, &g, 1e-3).unwrap();
        assert_eq!(field.num_labels(), 3);
    }

    #[test]
    fn large_epsilon_rejected() {
        let g = graph_with(5);
        let mut s = AnnotationSet::new();
        s.insert(op(0), "x", SemanticGroup::Travel);
        s.insert(op(1), "x", SemanticGroup::Financial);
        assert!(matches!(
            build_prior_field(&s, &g, 0.5),
            Err(GosError::InvalidEpsilon { .. })
        ));
        assert!(build_prior_field(&s, &g, 0.0).is_err());
        assert!(build_prior_field(&s, &g, 0.49).is_ok());
    }

    #[test]
    fn unknown_opinion_rejected_by_prior() {
        let g = graph_with(5);
        let mut s = AnnotationSet::new();
        s.insert(op(99), "x", SemanticGroup::Travel);
        assert_eq!(
            build_prior_field(&s, &g, 1e-6),
            Err(GosError::UnknownOpinion("o99".into()))
        );
    }

    #[test]
    fn agreement_identical_is_diagonal() {
        let mut s = AnnotationSet::new();
        for (i, g) in SemanticGroup::ALL.iter().enumerate() {
            s.insert(op(i), "a", *g);
            s.insert(op(i), "b", *g);
        }
        let m = agreement_matrix(&s, "a", "b").unwrap();
        for (i, row) in m.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                assert_eq!(c, u64::from(i == j));
            }
        }
    }

    #[test]
    fn agreement_disjoint_is_zero() {
        let mut s = AnnotationSet::new();
        s.insert(op(0), "a", SemanticGroup::Travel);
        s.insert(op(1), "b", SemanticGroup::Travel);
        let m = agreement_matrix(&s, "a", "b").unwrap();
        assert!(m.iter().flatten().all(|&c| c == 0));
        assert!(matches!(
            agreement_matrix(&s, "a", "nobody"),
            Err(GosError::UnknownAnnotator(_))
        ));
    }

    #[test]
    fn agreement_matches_pair_enumeration() {
        use SemanticGroup::*;
        let labels_a = [Travel, Financial, Financial, NoConcerns, Invalid];
        let labels_b = [Travel, Financial, InfectionRisk, NoConcerns, Travel];
        let mut s = AnnotationSet::new();
        for i in 0..5 {
            s.insert(op(i), "a", labels_a[i]);
            s.insert(op(i), "b", labels_b[i]);
        }
        // brute force: every (opinion, opinion) pair, count when they coincide
        let mut oracle = [[0u64; 10]; 10];
        for i in 0..5 {
            for j in 0..5 {
                if i == j {
                    oracle[labels_a[i].index()][labels_b[j].index()] += 1;
                }
            }
        }
        assert_eq!(agreement_matrix(&s, "a", "b").unwrap(), oracle);
        assert_eq!(oracle[Financial.index()][InfectionRisk.index()], 1);
        assert_eq!(oracle[Invalid.index()][Travel.index()], 1);
    }

    #[test]
    fn import_empty() {
        let imp = import_annotations("".as_bytes(), None).unwrap();
        assert!(imp.set.is_empty());
        assert!(imp.rejected.is_empty());
    }

    #[test]
    fn import_three_annotators_one_opinion() {
        let csv = "opinion_id,annotator_id,group_code\no1,a,travel\no1,b,travel\no1,c,financial\n";
        let imp = import_annotations(csv.as_bytes(), None).unwrap();
        assert_eq!(imp.set.annotators().len(), 3);
        assert_eq!(imp.set.labels_of(&op(1)).len(), 3);
    }

    #[test]
    fn import_duplicates_last_wins() {
        let csv = "o1,a,travel\no1,a,financial\no2,a,travel\no1,b,travel\no2,a,invalid\n";
        let imp = import_annotations(csv.as_bytes(), None).unwrap();
        let distinct: std::collections::HashSet<(&str, &str)> = csv
            .lines()
            .map(|l| {
                let mut f = l.split(',');
                (f.next().unwrap(), f.next().unwrap())
            })
            .collect();
        assert_eq!(imp.set.len(), distinct.len());
        assert_eq!(imp.set.get(&op(1), "a"), Some(SemanticGroup::Financial));
        assert_eq!(imp.set.get(&op(2), "a"), Some(SemanticGroup::Invalid));
        assert_eq!(imp.warnings.len(), 2);
    }

    #[test]
    fn import_rejects_unknown_code_and_opinion() {
        let g = graph_with(3);
        let csv = "o1,a,travel\no1,b,vaccines\no9,a,travel\n";
        let imp = import_annotations(csv.as_bytes(), Some(&g)).unwrap();
        assert_eq!(imp.set.len(), 1);
        assert_eq!(imp.rejected.len(), 2);
        assert_eq!(imp.rejected[0].line, 2);
        assert!(imp.rejected[1].reason.contains("o9"));
    }

    #[test]
    fn set_json_keeps_annotator_order() {
        let mut s = AnnotationSet::new();
        s.insert(op(2), "zed", SemanticGroup::Travel);
        s.insert(op(1), "amy", SemanticGroup::Invalid);
        let back: AnnotationSet = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.annotators(), ["zed", "amy"]);
        let bad = r#"{"annotators":[],"entries":[{"opinion":"o1","annotator":"x","group":"travel"}]}"#;
        assert!(serde_json::from_str::<AnnotationSet>(bad).is_err());
    }

    #[test]
    fn prior_csv_shape() {
        let g = graph_with(3);
        let mut s = AnnotationSet::new();
        s.insert(op(0), "a", SemanticGroup::Travel);
        s.insert(op(1), "a", SemanticGroup::Financial);
        let field = build_prior_field(&s, &g, 1e-6).unwrap();
        let mut buf = Vec::new();
        field.write_csv(&g, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "vertex_id,a:financial,a:travel");
        assert_eq!(lines.len(), 1 + 4);
    }

    proptest! {
        #[test]
        fn rows_are_stochastic(
            labels in proptest::collection::vec(proptest::collection::vec(0usize..10, 0..=3), 1..12),
            eps_scale in 0.001f64..0.999,
        ) {
            let g = graph_with(labels.len());
            let mut s = AnnotationSet::new();
            for (i, ls) in labels.iter().enumerate() {
                for (a, &grp) in ls.iter().enumerate() {
                    s.insert(op(i), ["x", "y", "z"][a], SemanticGroup::ALL[grp]);
                }
            }
            let k = {
                let mut used = std::collections::HashSet::new();
                for e in s.entries() { used.insert((e.annotator, e.group)); }
                used.len()
            };
            prop_assume!(k > 0);
            let eps = eps_scale / k as f64;
            let field = build_prior_field(&s, &g, eps).unwrap();
            for (v, row) in field.rows().iter().enumerate() {
                prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
                let max = row.iter().cloned().fold(f64::MIN, f64::max);
                if v < labels.len() && !s.labels_of(&op(v)).is_empty() && s.labels_of(&op(v)).len() < k {
                    prop_assert!(max > eps);
                }
            }
            // identical annotation triples -> identical rows
            for i in 0..labels.len() {
                for j in 0..labels.len() {
                    let li: Vec<_> = s.labels_of(&op(i));
                    let lj: Vec<_> = s.labels_of(&op(j));
                    if li == lj {
                        prop_assert_eq!(field.row(i), field.row(j));
                    }
                }
            }
        }

        #[test]
        fn agreement_transposes(labels in proptest::collection::vec((proptest::option::of(0usize..10), proptest::option::of(0usize..10)), 0..30)) {
            let mut s = AnnotationSet::new();
            s.insert(op(999), "a", SemanticGroup::Travel);
            s.insert(op(998), "b", SemanticGroup::Travel);
            for (i, (la, lb)) in labels.iter().enumerate() {
                if let Some(g) = la { s.insert(op(i), "a", SemanticGroup::ALL[*g]); }
                if let Some(g) = lb { s.insert(op(i), "b", SemanticGroup::ALL[*g]); }
            }
            let ab = agreement_matrix(&s, "a", "b").unwrap();
            let ba = agreement_matrix(&s, "b", "a").unwrap();
            for i in 0..10 { for j in 0..10 { prop_assert_eq!(ab[i][j], ba[j][i]); } }
        }
    }
}
