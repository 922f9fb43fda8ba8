//! Labeled task instances for the five control-flow tasks, generated from a
//! process-model corpus.

mod dedup;
mod gen;

pub use dedup::{dedup, LanguageIndex};
pub use gen::{
    gen_asad, gen_discovery, gen_snap, gen_tsad, generate_corpus, CorpusTasks, GenConfig,
    ModelSkip, SkipReason,
};

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{Activity, Dfg, ProcessTree, Trace};

/// The five semantics-aware mining tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TaskKind {
    #[serde(rename = "T-SAD")]
    TSad,
    #[serde(rename = "A-SAD")]
    ASad,
    #[serde(rename = "S-NAP")]
    SNap,
    #[serde(rename = "S-DFD")]
    SDfd,
    #[serde(rename = "S-PTD")]
    SPtd,
}

impl TaskKind {
    pub const ALL: [TaskKind; 5] = [
        TaskKind::TSad,
        TaskKind::ASad,
        TaskKind::SNap,
        TaskKind::SDfd,
        TaskKind::SPtd,
    ];

    /// Lowercase name used for file names and CLI arguments.
    pub fn slug(self) -> &'static str {
        match self {
            TaskKind::TSad => "t-sad",
            TaskKind::ASad => "a-sad",
            TaskKind::SNap => "s-nap",
            TaskKind::SDfd => "s-dfd",
            TaskKind::SPtd => "s-ptd",
        }
    }

    pub fn from_slug(slug: &str) -> Option<TaskKind> {
        TaskKind::ALL.into_iter().find(|t| t.slug() == slug)
    }

    pub fn group(self) -> GroupKind {
        match self {
            TaskKind::TSad | TaskKind::ASad => GroupKind::Anomaly,
            TaskKind::SNap => GroupKind::Prediction,
            TaskKind::SDfd | TaskKind::SPtd => GroupKind::Discovery,
        }
    }

    /// True for the generation tasks whose answer is a model, not a label.
    pub fn is_discovery(self) -> bool {
        matches!(self, TaskKind::SDfd | TaskKind::SPtd)
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            TaskKind::TSad => "T-SAD",
            TaskKind::ASad => "A-SAD",
            TaskKind::SNap => "S-NAP",
            TaskKind::SDfd => "S-DFD",
            TaskKind::SPtd => "S-PTD",
        };
        f.write_str(name)
    }
}

/// The three task groups used for leave-one-group-out evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupKind {
    Anomaly,
    Prediction,
    Discovery,
}

impl GroupKind {
    pub const ALL: [GroupKind; 3] = [
        GroupKind::Anomaly,
        GroupKind::Prediction,
        GroupKind::Discovery,
    ];

    pub fn tasks(self) -> &'static [TaskKind] {
        match self {
            GroupKind::Anomaly => &[TaskKind::TSad, TaskKind::ASad],
            GroupKind::Prediction => &[TaskKind::SNap],
            GroupKind::Discovery => &[TaskKind::SDfd, TaskKind::SPtd],
        }
    }

    pub fn slug(self) -> &'static str {
        match self {
            GroupKind::Anomaly => "anomaly",
            GroupKind::Prediction => "prediction",
            GroupKind::Discovery => "discovery",
        }
    }

    pub fn from_slug(slug: &str) -> Option<GroupKind> {
        GroupKind::ALL.into_iter().find(|g| g.slug() == slug)
    }
}

impl fmt::Display for GroupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

/// Classification label for the anomaly tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnomalyLabel {
    Valid,
    Anomalous,
}

/// Task-specific input content.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TaskPayload {
    /// Full trace to classify (trace anomaly detection).
    Trace { trace: Trace },
    /// Eventually-follows pair to classify (activity anomaly detection).
    Pair { earlier: Activity, later: Activity },
    /// Incomplete trace to continue (next-activity prediction).
    Prefix { prefix: Trace },
    /// Discovery tasks receive only the activity set.
    ActivitiesOnly,
}

/// Task-specific gold output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TaskGold {
    Label { label: AnomalyLabel },
    Next { activity: Activity },
    Dfg { dfg: Dfg },
    Tree { tree: ProcessTree },
}

/// One labeled instance of one task, tied to its source model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskInstance {
    pub kind: TaskKind,
    pub model_id: String,
    pub activity_set: BTreeSet<Activity>,
    pub payload: TaskPayload,
    pub gold: TaskGold,
    pub seed: u64,
}

impl TaskInstance {
    /// Stable digest of the payload, used for deterministic file ordering.
    pub fn payload_digest(&self) -> String {
        digest_json(&self.payload)
    }

    pub fn gold_digest(&self) -> String {
        digest_json(&self.gold)
    }

    /// Deterministic sort key: model id, then payload, then gold.
    pub fn sort_key(&self) -> (String, String, String) {
        (
            self.model_id.clone(),
            self.payload_digest(),
            self.gold_digest(),
        )
    }
}

fn digest_json<T: Serialize>(value: &T) -> String {
    use sha2::{Digest, Sha256};
    let json = serde_json::to_vec(value).expect("serializable value");
    hex::encode(Sha256::digest(&json))
}
