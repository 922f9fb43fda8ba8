//! Task-specific parsing of raw model outputs.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use regex::Regex;

use crate::instructions::VariantTag;
use crate::model::{parse_tree, parse_tree_prefix, Activity, Dfg, Trace};
use crate::taskgen::TaskKind;

use super::{ParsedOutput, ParsedValue};

/// The output grammar an instance expects, determined by task and variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputKind {
    Bool,
    Activity,
    Trace,
    Dfg,
    Tree,
}

/// Which grammar the outputs of a (task, variant) combination follow.
pub fn output_kind(task: TaskKind, variant: VariantTag) -> OutputKind {
    match (task, variant) {
        (TaskKind::TSad, VariantTag::Normal) => OutputKind::Bool,
        (TaskKind::TSad, _) => OutputKind::Trace,
        (TaskKind::ASad, VariantTag::Normal) => OutputKind::Bool,
        (TaskKind::ASad, _) => OutputKind::Activity,
        (TaskKind::SNap, VariantTag::PositiveInversion) => OutputKind::Trace,
        (TaskKind::SNap, _) => OutputKind::Activity,
        (TaskKind::SDfd, _) => OutputKind::Dfg,
        (TaskKind::SPtd, _) => OutputKind::Tree,
    }
}

/// Parses a raw response under the task's canonical (normal-variant) output
/// grammar. `activity_set` is required for the next-activity task, whose
/// grammar is label lookup against the instance's activity set.
pub fn parse_output(
    task: TaskKind,
    raw: &str,
    activity_set: Option<&BTreeSet<Activity>>,
) -> ParsedOutput {
    ParsedOutput {
        task,
        value: parse_value(output_kind(task, VariantTag::Normal), raw, activity_set),
    }
}

/// Parses a raw response under one output grammar. Never fails: anything
/// unrecognizable becomes [`ParsedValue::Unparseable`] with the raw text.
pub fn parse_value(
    kind: OutputKind,
    raw: &str,
    activity_set: Option<&BTreeSet<Activity>>,
) -> ParsedValue {
    match kind {
        OutputKind::Bool => parse_bool(raw),
        OutputKind::Activity => parse_activity(raw, activity_set),
        OutputKind::Trace => parse_trace_text(raw),
        OutputKind::Dfg => parse_dfg(raw),
        OutputKind::Tree => parse_tree_text(raw),
    }
}

fn bool_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\b(true|false)\b").expect("valid regex"))
}

/// Case-insensitive True/False word match; ambiguous or absent labels are
/// unparseable.
fn parse_bool(raw: &str) -> ParsedValue {
    let mut seen_true = false;
    let mut seen_false = false;
    for found in bool_regex().find_iter(raw) {
        match found.as_str().to_ascii_lowercase().as_str() {
            "true" => seen_true = true,
            _ => seen_false = true,
        }
    }
    match (seen_true, seen_false) {
        (true, false) => ParsedValue::Bool(true),
        (false, true) => ParsedValue::Bool(false),
        _ => ParsedValue::Unparseable(raw.to_string()),
    }
}

/// Longest exact activity-label match against the instance's activity set;
/// equally long matches resolve to the lexicographically first label.
fn parse_activity(raw: &str, activity_set: Option<&BTreeSet<Activity>>) -> ParsedValue {
    let Some(set) = activity_set else {
        return ParsedValue::Unparseable(raw.to_string());
    };
    let mut best: Option<&Activity> = None;
    for activity in set {
        if raw.contains(activity.label()) {
            let better = match best {
                None => true,
                Some(current) => activity.label().len() > current.label().len(),
            };
            if better {
                best = Some(activity);
            }
        }
    }
    match best {
        Some(activity) => ParsedValue::Activity(activity.clone()),
        None => ParsedValue::Unparseable(raw.to_string()),
    }
}

fn quoted_label_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"'((?:[^'\\]|\\.)*)'").expect("valid regex"))
}

fn unescape(escaped: &str) -> String {
    let mut out = String::with_capacity(escaped.len());
    let mut chars = escaped.chars();
    while let Some(ch) = chars.next() {
        if ch == '\\' {
            if let Some(next) = chars.next() {
                out.push(next);
            }
        } else {
            out.push(ch);
        }
    }
    out
}

/// Comma-separated quoted labels in order; `(empty)` denotes the empty trace.
fn parse_trace_text(raw: &str) -> ParsedValue {
    if raw.trim() == "(empty)" {
        return ParsedValue::Trace(Trace::default());
    }
    let steps: Vec<Activity> = quoted_label_regex()
        .captures_iter(raw)
        .filter_map(|cap| Activity::new(unescape(&cap[1])).ok())
        .collect();
    if steps.is_empty() {
        ParsedValue::Unparseable(raw.to_string())
    } else {
        ParsedValue::Trace(Trace::new(steps))
    }
}

fn edge_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"'((?:[^'\\]|\\.)*)'\s*->\s*'((?:[^'\\]|\\.)*)'").expect("valid regex")
    })
}

/// Line-wise `'x' -> 'y'` extraction; `(none)` denotes the empty relation.
fn parse_dfg(raw: &str) -> ParsedValue {
    let mut edges = BTreeSet::new();
    for line in raw.lines() {
        for cap in edge_regex().captures_iter(line) {
            let from = Activity::new(unescape(&cap[1]));
            let to = Activity::new(unescape(&cap[2]));
            if let (Ok(from), Ok(to)) = (from, to) {
                edges.insert((from, to));
            }
        }
    }
    if edges.is_empty() {
        if raw.contains("(none)") {
            ParsedValue::Dfg(Dfg::default())
        } else {
            ParsedValue::Unparseable(raw.to_string())
        }
    } else {
        ParsedValue::Dfg(Dfg::from_edges(edges))
    }
}

/// Whole-text tree parse, then a scan for an embedded tree expression.
fn parse_tree_text(raw: &str) -> ParsedValue {
    if let Ok(tree) = parse_tree(raw.trim()) {
        return ParsedValue::Tree(tree);
    }
    let mut candidates: Vec<usize> = Vec::new();
    for token in ["->(", "X(", "+(", "*(", "tau", "'"] {
        let mut from = 0;
        while let Some(pos) = raw[from..].find(token) {
            candidates.push(from + pos);
            from += pos + 1;
            if candidates.len() > 256 {
                break;
            }
        }
    }
    candidates.sort_unstable();
    candidates.dedup();
    let mut best: Option<(usize, crate::model::ProcessTree)> = None;
    for start in candidates {
        if let Ok((tree, consumed)) = parse_tree_prefix(&raw[start..]) {
            if best.as_ref().is_none_or(|(len, _)| consumed > *len) {
                best = Some((consumed, tree));
            }
        }
    }
    match best {
        Some((_, tree)) => ParsedValue::Tree(tree),
        None => ParsedValue::Unparseable(raw.to_string()),
    }
}
