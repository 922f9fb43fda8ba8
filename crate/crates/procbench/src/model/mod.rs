//! Process-model core: activities, traces, event logs, trees, DFGs, footprints.

mod corpus;
mod dfg;
mod footprint;
mod language;
mod parse;
mod tree;

pub use corpus::{read_corpus, read_corpus_file, CorpusError, CorpusModel};
pub use dfg::{dfg_of_log, Dfg};
pub use footprint::{footprint_of_dfg, footprint_of_tree, FootprintMatrix, Relation};
pub use language::{enumerate_language, LanguageError, LanguageLimits};
pub use parse::{parse_tree, parse_tree_prefix, ParseError};
pub use tree::ProcessTree;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// A named process step. Labels compare by exact string equality.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Activity(String);

/// Error for activity labels that are empty after trimming.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("activity label is empty")]
pub struct EmptyLabel;

impl Activity {
    pub fn new(label: impl Into<String>) -> Result<Self, EmptyLabel> {
        let label = label.into();
        if label.trim().is_empty() {
            return Err(EmptyLabel);
        }
        Ok(Activity(label))
    }

    pub fn label(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Activity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One process execution: an ordered sequence of activities.
///
/// Order and duplicates are preserved; the empty trace is the playout of a
/// silent-only tree.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Trace(Vec<Activity>);

impl Trace {
    pub fn new(steps: Vec<Activity>) -> Self {
        Trace(steps)
    }

    pub fn steps(&self) -> &[Activity] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Activity> {
        self.0.iter()
    }

    /// The distinct activities occurring in this trace.
    pub fn activities(&self) -> BTreeSet<Activity> {
        self.0.iter().cloned().collect()
    }

    /// The strict prefix of the first `len` steps.
    pub fn prefix(&self, len: usize) -> Trace {
        Trace(self.0[..len].to_vec())
    }
}

impl FromIterator<Activity> for Trace {
    fn from_iter<I: IntoIterator<Item = Activity>>(iter: I) -> Self {
        Trace(iter.into_iter().collect())
    }
}

/// A multiset of traces over a shared alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventLog {
    traces: Vec<Trace>,
    alphabet: BTreeSet<Activity>,
}

impl EventLog {
    /// Builds a log; the alphabet is the union of activities in `traces`.
    pub fn new(traces: Vec<Trace>) -> Self {
        let alphabet = traces.iter().flat_map(|t| t.iter().cloned()).collect();
        EventLog { traces, alphabet }
    }

    pub fn traces(&self) -> &[Trace] {
        &self.traces
    }

    pub fn alphabet(&self) -> &BTreeSet<Activity> {
        &self.alphabet
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    pub fn contains(&self, trace: &Trace) -> bool {
        self.traces.contains(trace)
    }
}

/// An eventually-follows pair: `earlier` occurs before `later` in some trace,
/// not necessarily adjacently.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EfPair {
    pub earlier: Activity,
    pub later: Activity,
}

/// All eventually-follows pairs of a trace, deduplicated as a set.
pub fn ef_pairs(trace: &Trace) -> BTreeSet<EfPair> {
    let steps = trace.steps();
    let mut pairs = BTreeSet::new();
    for i in 0..steps.len() {
        for j in i + 1..steps.len() {
            pairs.insert(EfPair {
                earlier: steps[i].clone(),
                later: steps[j].clone(),
            });
        }
    }
    pairs
}
