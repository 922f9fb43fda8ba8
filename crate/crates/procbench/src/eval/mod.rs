//! Scoring: output parsing, macro F1, footprint-based fitness, reports.

mod fitness;
mod metrics;
mod parse;
mod reference;
mod report;

pub use fitness::{dfg_fitness, footprint_match_fraction, tree_fitness};
pub use metrics::{macro_f1, ClassScore};
pub use parse::{output_kind, parse_output, parse_value, OutputKind};
pub use reference::{reference_entries, references_for, ReferenceEntry};
pub use report::{
    evaluate_fold, render_report_text, EvalOptions, FoldReport, ResponseLine, TaskReport,
};

use crate::model::{Activity, Dfg, ProcessTree, Trace};
use crate::taskgen::TaskKind;

/// A model output after task-specific parsing. Unparseable responses keep
/// the raw text for auditing.
#[derive(Debug, Clone, PartialEq)]
pub enum ParsedValue {
    Bool(bool),
    Activity(Activity),
    Trace(Trace),
    Dfg(Dfg),
    Tree(ProcessTree),
    Unparseable(String),
}

impl ParsedValue {
    pub fn is_unparseable(&self) -> bool {
        matches!(self, ParsedValue::Unparseable(_))
    }
}

/// Parsed output paired with the task it was parsed for.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedOutput {
    pub task: TaskKind,
    pub value: ParsedValue,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("golds and predictions differ in length: {golds} vs {preds}")]
    LengthMismatch { golds: usize, preds: usize },
    #[error("the class set is empty")]
    EmptyClasses,
    #[error("instance id mismatch between fold and responses: {0}")]
    InstanceIdMismatch(String),
    #[error("gold output of instance {instance_id} does not parse as {task} output")]
    GoldUnparseable { task: TaskKind, instance_id: String },
    #[error("gold model playout failed: {0}")]
    GoldPlayout(#[from] crate::model::LanguageError),
}
