//! Event-sourced survey state: an append-only JSONL log plus an optional
//! snapshot. Every mutation goes through [`Store::commit`], and replaying
//! the log through the same code path rebuilds the state.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use gos_core::annotation::AnnotationSet;
use gos_core::graph::{GraphDocument, OpinionGraph};
use gos_core::inference::Partition;
use gos_core::GosError;
use serde::{Deserialize, Serialize};

use crate::events::{ClusterRun, EventKind, SurveyEvent};

const LOG_FILE: &str = "events.jsonl";
const SNAPSHOT_FILE: &str = "snapshot.json";

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt event log at line {line}: {message}")]
    Corrupt { line: usize, message: String },
    #[error("corrupt snapshot: {0}")]
    Snapshot(String),
    #[error("unknown survey `{0}`")]
    UnknownSurvey(String),
    #[error("survey `{0}` already exists")]
    DuplicateSurvey(String),
    #[error(transparent)]
    Rejected(#[from] GosError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SurveyState {
    pub id: String,
    pub name: Option<String>,
    pub admin_token: String,
    pub graph: OpinionGraph,
    pub annotations: AnnotationSet,
    pub runs: Vec<ClusterRun>,
}

#[derive(Serialize, Deserialize)]
struct SurveySnapshot {
    id: String,
    name: Option<String>,
    admin_token: String,
    graph: GraphDocument,
    annotations: AnnotationSet,
    runs: Vec<ClusterRun>,
}

#[derive(Serialize, Deserialize)]
struct Snapshot {
    seq: u64,
    surveys: Vec<SurveySnapshot>,
}

pub struct Store {
    dir: PathBuf,
    log: File,
    seq: u64,
    surveys: BTreeMap<String, SurveyState>,
    snapshot_every: u64,
}

impl Store {
    /// Opens `dir`, loading the snapshot (if any) and replaying the log
    /// past it. A torn final line, left by a crash mid-append, is dropped.
    pub fn open(dir: &Path, snapshot_every: u64) -> Result<Store, StoreError> {
        std::fs::create_dir_all(dir)?;
        let mut surveys = BTreeMap::new();
        let mut seq = 0;

        let snap_path = dir.join(SNAPSHOT_FILE);
        if snap_path.exists() {
            let text = std::fs::read_to_string(&snap_path)?;
            let snap: Snapshot =
                serde_json::from_str(&text).map_err(|e| StoreError::Snapshot(e.to_string()))?;
            seq = snap.seq;
            for s in snap.surveys {
                let graph = OpinionGraph::from_document(s.graph)
                    .map_err(|e| StoreError::Snapshot(e.to_string()))?;
                surveys.insert(
                    s.id.clone(),
                    SurveyState {
                        id: s.id,
                        name: s.name,
                        admin_token: s.admin_token,
                        graph,
                        annotations: s.annotations,
                        runs: s.runs,
                    },
                );
            }
        }

        let log_path = dir.join(LOG_FILE);
        if log_path.exists() {
            let text = std::fs::read_to_string(&log_path)?;
            let mut offset = 0;
            let mut lines = text.split_inclusive('\n').enumerate().peekable();
            while let Some((i, line)) = lines.next() {
                let is_last = lines.peek().is_none();
                let trimmed = line.trim_end();
                if trimmed.is_empty() {
                    offset += line.len();
                    continue;
                }
                let event: SurveyEvent = match serde_json::from_str(trimmed) {
                    Ok(e) => e,
                    Err(e) if is_last && !line.ends_with('\n') => {
                        tracing::warn!("dropping torn final log line {}: {e}", i + 1);
                        let f = OpenOptions::new().write(true).open(&log_path)?;
                        f.set_len(offset as u64)?;
                        f.sync_all()?;
                        break;
                    }
                    Err(e) => {
                        return Err(StoreError::Corrupt {
                            line: i + 1,
                            message: e.to_string(),
                        })
                    }
                };
                offset += line.len();
                if event.seq <= seq {
                    continue;
                }
                if event.seq != seq + 1 {
                    return Err(StoreError::Corrupt {
                        line: i + 1,
                        message: format!("expected sequence {}, found {}", seq + 1, event.seq),
                    });
                }
                apply(&mut surveys, &event).map_err(|e| StoreError::Corrupt {
                    line: i + 1,
                    message: e.to_string(),
                })?;
                seq = event.seq;
            }
        }

        let log = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&log_path)?;
        Ok(Store {
            dir: dir.to_path_buf(),
            log,
            seq,
            surveys,
            snapshot_every,
        })
    }

    pub fn seq(&self) -> u64 {
        self.seq
    }

    pub fn surveys(&self) -> &BTreeMap<String, SurveyState> {
        &self.surveys
    }

    pub fn survey(&self, id: &str) -> Result<&SurveyState, StoreError> {
        self.surveys
            .get(id)
            .ok_or_else(|| StoreError::UnknownSurvey(id.to_string()))
    }

    /// Validates the event against current state without changing it.
    pub fn check(&self, survey: &str, kind: &EventKind) -> Result<(), StoreError> {
        if let EventKind::Created { seeds, config, .. } = kind {
            if self.surveys.contains_key(survey) {
                return Err(StoreError::DuplicateSurvey(survey.to_string()));
            }
            OpinionGraph::new(seeds, config.clone())?;
            return Ok(());
        }
        let state = self.survey(survey)?;
        match kind {
            EventKind::Created { .. } => unreachable!(),
            EventKind::Response {
                menu,
                selected,
                new_opinions,
            } => state.graph.check_response(menu, selected, new_opinions)?,
            EventKind::AnnotationImport { entries } => {
                for e in entries {
                    if state.graph.opinion_position(&e.opinion).is_none() {
                        return Err(GosError::UnknownOpinion(e.opinion.0.clone()).into());
                    }
                }
            }
            EventKind::ClusterRun { run } => check_run(&state.graph, run)?,
        }
        Ok(())
    }

    /// Validates, appends durably, then applies. Returns the event's
    /// sequence number.
    pub fn commit(&mut self, survey: &str, kind: EventKind) -> Result<u64, StoreError> {
        self.check(survey, &kind)?;
        let event = SurveyEvent {
            seq: self.seq + 1,
            survey: survey.to_string(),
            kind,
        };
        let mut line = serde_json::to_string(&event).expect("events serialize");
        line.push('\n');
        self.log.write_all(line.as_bytes())?;
        self.log.sync_data()?;
        apply(&mut self.surveys, &event).expect("checked event applies");
        self.seq = event.seq;
        if self.snapshot_every > 0 && self.seq % self.snapshot_every == 0 {
            if let Err(e) = self.write_snapshot() {
                tracing::warn!("snapshot failed: {e}");
            }
        }
        Ok(self.seq)
    }

    pub fn write_snapshot(&self) -> Result<(), StoreError> {
        let snap = Snapshot {
            seq: self.seq,
            surveys: self
                .surveys
                .values()
                .map(|s| SurveySnapshot {
                    id: s.id.clone(),
                    name: s.name.clone(),
                    admin_token: s.admin_token.clone(),
                    graph: s.graph.to_document(),
                    annotations: s.annotations.clone(),
                    runs: s.runs.clone(),
                })
                .collect(),
        };
        let tmp = self.dir.join(format!("{SNAPSHOT_FILE}.tmp"));
        let mut f = File::create(&tmp)?;
        f.write_all(serde_json::to_string(&snap).expect("snapshot serializes").as_bytes())?;
        f.sync_all()?;
        std::fs::rename(tmp, self.dir.join(SNAPSHOT_FILE))?;
        Ok(())
    }
}

fn check_run(graph: &OpinionGraph, run: &ClusterRun) -> Result<(), GosError> {
    let prefix = graph.prefix(run.n_opinions, run.n_respondents)?;
    Partition::new(&prefix.bipartite(), run.labels.clone(), run.label_space)?;
    Ok(())
}

fn apply(surveys: &mut BTreeMap<String, SurveyState>, event: &SurveyEvent) -> Result<(), StoreError> {
    if let EventKind::Created {
        name,
        admin_token,
        seeds,
        config,
    } = &event.kind
    {
        if surveys.contains_key(&event.survey) {
            return Err(StoreError::DuplicateSurvey(event.survey.clone()));
        }
        let graph = OpinionGraph::new(seeds, config.clone())?;
        surveys.insert(
            event.survey.clone(),
            SurveyState {
                id: event.survey.clone(),
                name: name.clone(),
                admin_token: admin_token.clone(),
                graph,
                annotations: AnnotationSet::new(),
                runs: Vec::new(),
            },
        );
        return Ok(());
    }
    let state = surveys
        .get_mut(&event.survey)
        .ok_or_else(|| StoreError::UnknownSurvey(event.survey.clone()))?;
    match &event.kind {
        EventKind::Created { .. } => unreachable!(),
        EventKind::Response {
            menu,
            selected,
            new_opinions,
        } => {
            state.graph.submit_response(menu, selected, new_opinions)?;
        }
        EventKind::AnnotationImport { entries } => {
            for e in entries {
                state
                    .annotations
                    .insert(e.opinion.clone(), &e.annotator, e.group);
            }
        }
        EventKind::ClusterRun { run } => {
            check_run(&state.graph, run)?;
            state.runs.push(run.clone());
        }
    }
    Ok(())
}
