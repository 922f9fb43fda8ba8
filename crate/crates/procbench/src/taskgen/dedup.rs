//! Task-specific deduplication rules.

use std::collections::{BTreeMap, BTreeSet};

use crate::model::Trace;

use super::{TaskInstance, TaskKind, TaskPayload};

/// Bounded languages per model, used to drop next-activity prefixes that are
/// already complete traces.
#[derive(Debug, Default, Clone)]
pub struct LanguageIndex {
    map: BTreeMap<String, BTreeSet<Trace>>,
}

impl LanguageIndex {
    pub fn new() -> Self {
        LanguageIndex::default()
    }

    pub fn insert(&mut self, model_id: String, language: BTreeSet<Trace>) {
        self.map.insert(model_id, language);
    }

    pub fn language(&self, model_id: &str) -> Option<&BTreeSet<Trace>> {
        self.map.get(model_id)
    }

    pub fn is_complete_trace(&self, model_id: &str, trace: &Trace) -> bool {
        self.map
            .get(model_id)
            .is_some_and(|lang| lang.contains(trace))
    }

    pub fn model_ids(&self) -> impl Iterator<Item = &str> {
        self.map.keys().map(String::as_str)
    }
}

/// Removes duplicate instances of one task. The key depends on the task:
///
/// - trace anomaly: (activity set, trace)
/// - activity anomaly: (activity set, pair)
/// - next activity: (activity set, prefix, gold), after dropping prefixes
///   that equal a complete trace of the source model's bounded language;
///   distinct golds for the same prefix all survive
/// - discovery: (activity set)
///
/// First occurrence wins under a deterministic sort by model id then payload.
pub fn dedup(instances: Vec<TaskInstance>, languages: &LanguageIndex) -> Vec<TaskInstance> {
    let mut sorted = instances;
    sorted.sort_by_cached_key(TaskInstance::sort_key);

    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut out = Vec::with_capacity(sorted.len());
    for instance in sorted {
        if instance.kind == TaskKind::SNap {
            if let TaskPayload::Prefix { prefix } = &instance.payload {
                if languages.is_complete_trace(&instance.model_id, prefix) {
                    continue;
                }
            }
        }
        if seen.insert(dedup_key(&instance)) {
            out.push(instance);
        }
    }
    out
}

fn dedup_key(instance: &TaskInstance) -> String {
    let key = match instance.kind {
        TaskKind::TSad | TaskKind::ASad => {
            serde_json::json!([instance.activity_set, instance.payload])
        }
        TaskKind::SNap => {
            serde_json::json!([instance.activity_set, instance.payload, instance.gold])
        }
        TaskKind::SDfd | TaskKind::SPtd => serde_json::json!([instance.activity_set]),
    };
    key.to_string()
}
