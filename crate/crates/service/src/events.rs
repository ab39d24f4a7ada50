use gos_core::annotation::AnnotationEntry;
use gos_core::graph::{OpinionId, SurveyConfig};
use gos_core::inference::InferenceConfig;
use serde::{Deserialize, Serialize};

/// One line of the append-only log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurveyEvent {
    pub seq: u64,
    pub survey: String,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    Created {
        name: Option<String>,
        admin_token: String,
        seeds: Vec<String>,
        config: SurveyConfig,
    },
    Response {
        menu: Vec<OpinionId>,
        selected: Vec<OpinionId>,
        new_opinions: Vec<String>,
    },
    AnnotationImport {
        entries: Vec<AnnotationEntry>,
    },
    ClusterRun {
        run: ClusterRun,
    },
}

/// A finished clustering job, pinned to the graph prefix it saw.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterRun {
    pub job_id: String,
    pub config: InferenceConfig,
    pub used_annotations: bool,
    pub epsilon: f64,
    pub n_opinions: usize,
    pub n_respondents: usize,
    pub label_space: usize,
    pub labels: Vec<usize>,
    pub score: f64,
    pub num_groups: usize,
}
