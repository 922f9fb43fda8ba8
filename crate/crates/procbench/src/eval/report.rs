//! Fold evaluation: joining responses to test instances, scoring per task,
//! and rendering machine- and human-readable reports.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::instructions::InstructionInstance;
use crate::model::LanguageLimits;
use crate::taskgen::{GroupKind, TaskKind};

use super::metrics::{macro_f1, ClassScore};
use super::parse::{output_kind, parse_value, OutputKind};
use super::reference::{references_for, ReferenceEntry};
use super::{dfg_fitness, tree_fitness, EvalError, ParsedValue};
use crate::instructions::VariantTag;

/// One line of a response file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseLine {
    pub instance_id: String,
    pub raw_output: String,
}

#[derive(Debug, Clone, Copy)]
pub struct EvalOptions {
    pub limits: LanguageLimits,
    /// A task whose parse-failure rate exceeds this marks the report.
    pub parse_failure_threshold: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            limits: LanguageLimits::default(),
            parse_failure_threshold: 0.2,
        }
    }
}

/// Scores for one task of one fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskReport {
    pub task: TaskKind,
    pub metric: String,
    pub value: f64,
    pub instances: usize,
    pub parse_failures: usize,
    pub parse_failure_rate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_class: Option<BTreeMap<String, ClassScore>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_instance_fitness: Option<Vec<f64>>,
    pub references: Vec<ReferenceEntry>,
}

/// Full evaluation report for one fold and one backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub held_out: GroupKind,
    pub backend: String,
    pub seed: u64,
    pub loop_redo_bound: u32,
    pub parse_failure_threshold: f64,
    pub threshold_exceeded: bool,
    /// Scoring conventions this report was produced under.
    pub notes: Vec<String>,
    pub tasks: BTreeMap<TaskKind, TaskReport>,
}

/// Scores every test instance against its response. Each instance needs
/// exactly one response; a missing one counts as unparseable, an unknown or
/// duplicated instance id is an error.
pub fn evaluate_fold(
    test: &[InstructionInstance],
    responses: &[ResponseLine],
    held_out: GroupKind,
    backend: &str,
    seed: u64,
    opts: &EvalOptions,
) -> Result<FoldReport, EvalError> {
    let known_ids: BTreeSet<&str> = test.iter().map(|i| i.instance_id.as_str()).collect();
    let mut by_id: BTreeMap<&str, &str> = BTreeMap::new();
    for response in responses {
        if !known_ids.contains(response.instance_id.as_str()) {
            return Err(EvalError::InstanceIdMismatch(format!(
                "response for unknown instance {}",
                response.instance_id
            )));
        }
        if by_id
            .insert(response.instance_id.as_str(), response.raw_output.as_str())
            .is_some()
        {
            return Err(EvalError::InstanceIdMismatch(format!(
                "duplicate response for instance {}",
                response.instance_id
            )));
        }
    }

    let mut by_task: BTreeMap<TaskKind, Vec<&InstructionInstance>> = BTreeMap::new();
    for instance in test {
        by_task.entry(instance.task).or_default().push(instance);
    }

    let mut tasks = BTreeMap::new();
    for (task, instances) in by_task {
        let report = match task {
            TaskKind::TSad | TaskKind::ASad => {
                score_classification(task, &instances, &by_id, Classes::Fixed)?
            }
            TaskKind::SNap => score_classification(task, &instances, &by_id, Classes::FromGolds)?,
            TaskKind::SDfd | TaskKind::SPtd => {
                score_discovery(task, &instances, &by_id, opts.limits)?
            }
        };
        tasks.insert(task, report);
    }

    let threshold_exceeded = tasks
        .values()
        .any(|t| t.parse_failure_rate > opts.parse_failure_threshold);
    Ok(FoldReport {
        held_out,
        backend: backend.to_string(),
        seed,
        loop_redo_bound: opts.limits.loop_redo_bound,
        parse_failure_threshold: opts.parse_failure_threshold,
        threshold_exceeded,
        notes: vec![
            "footprint fitness: fraction of off-diagonal activity pairs of the gold \
             alphabet whose behavioral relation (precedes/follows/parallel/unrelated) \
             matches between gold and discovered model"
                .into(),
            "trees are footprinted by bounded playout with the loop redo bound above"
                .into(),
            "discovery scores average per-instance fitness uniformly across instances"
                .into(),
            "next-activity classes are the labels occurring as golds in this test split"
                .into(),
        ],
        tasks,
    })
}

enum Classes {
    /// True/False for the anomaly tasks.
    Fixed,
    /// All labels occurring as golds, for next-activity prediction.
    FromGolds,
}

fn score_classification(
    task: TaskKind,
    instances: &[&InstructionInstance],
    by_id: &BTreeMap<&str, &str>,
    class_rule: Classes,
) -> Result<TaskReport, EvalError> {
    let mut golds = Vec::with_capacity(instances.len());
    let mut preds = Vec::with_capacity(instances.len());
    let mut parse_failures = 0usize;

    for instance in instances {
        golds.push(instance.output.clone());
        let raw = by_id.get(instance.instance_id.as_str()).copied();
        let pred = match raw {
            None => None,
            Some(raw) => {
                let kind = output_kind(task, VariantTag::Normal);
                match parse_value(kind, raw, Some(&instance.activity_set)) {
                    ParsedValue::Bool(true) => Some("True".to_string()),
                    ParsedValue::Bool(false) => Some("False".to_string()),
                    ParsedValue::Activity(a) => Some(a.label().to_string()),
                    _ => None,
                }
            }
        };
        if pred.is_none() {
            parse_failures += 1;
        }
        preds.push(pred);
    }

    let classes: BTreeSet<String> = match class_rule {
        Classes::Fixed => ["True", "False"].iter().map(|s| s.to_string()).collect(),
        Classes::FromGolds => golds.iter().cloned().collect(),
    };
    let (value, per_class) = macro_f1(&golds, &preds, &classes)?;
    Ok(TaskReport {
        task,
        metric: "macro_f1".into(),
        value,
        instances: instances.len(),
        parse_failures,
        parse_failure_rate: rate(parse_failures, instances.len()),
        per_class: Some(per_class),
        per_instance_fitness: None,
        references: references_for(task),
    })
}

fn score_discovery(
    task: TaskKind,
    instances: &[&InstructionInstance],
    by_id: &BTreeMap<&str, &str>,
    limits: LanguageLimits,
) -> Result<TaskReport, EvalError> {
    let kind = output_kind(task, VariantTag::Normal);
    let mut fitness = Vec::with_capacity(instances.len());
    let mut parse_failures = 0usize;

    for instance in instances {
        let gold = parse_value(kind, &instance.output, Some(&instance.activity_set));
        let raw = by_id.get(instance.instance_id.as_str()).copied().unwrap_or("");
        let discovered = parse_value(kind, raw, Some(&instance.activity_set));
        if discovered.is_unparseable() {
            parse_failures += 1;
        }
        let score = match (kind, &gold) {
            (OutputKind::Dfg, ParsedValue::Dfg(gold_dfg)) => {
                let discovered = match &discovered {
                    ParsedValue::Dfg(d) => Some(d),
                    _ => None,
                };
                dfg_fitness(gold_dfg, &instance.activity_set, discovered)
            }
            (OutputKind::Tree, ParsedValue::Tree(gold_tree)) => {
                let discovered = match &discovered {
                    ParsedValue::Tree(t) => Some(t),
                    _ => None,
                };
                tree_fitness(gold_tree, &instance.activity_set, discovered, limits)?
            }
            _ => {
                return Err(EvalError::GoldUnparseable {
                    task,
                    instance_id: instance.instance_id.clone(),
                })
            }
        };
        fitness.push(score);
    }

    let value = if fitness.is_empty() {
        0.0
    } else {
        fitness.iter().sum::<f64>() / fitness.len() as f64
    };
    Ok(TaskReport {
        task,
        metric: "footprint_fitness".into(),
        value,
        instances: instances.len(),
        parse_failures,
        parse_failure_rate: rate(parse_failures, instances.len()),
        per_class: None,
        per_instance_fitness: Some(fitness),
        references: references_for(task),
    })
}

fn rate(failures: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        failures as f64 / total as f64
    }
}

/// Plain-text table with reference annotations.
pub fn render_report_text(report: &FoldReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "fold: {}    backend: {}    seed: {}\n",
        report.held_out, report.backend, report.seed
    ));
    out.push_str(&format!(
        "loop redo bound: {}    parse-failure threshold: {:.2}{}\n",
        report.loop_redo_bound,
        report.parse_failure_threshold,
        if report.threshold_exceeded {
            "    THRESHOLD EXCEEDED"
        } else {
            ""
        }
    ));
    for note in &report.notes {
        out.push_str(&format!("note: {note}\n"));
    }
    out.push('\n');
    out.push_str(&format!(
        "{:<8} {:<18} {:>7} {:>12} {:>8}\n",
        "task", "metric", "score", "parse-fail", "n"
    ));
    out.push_str(&"-".repeat(58));
    out.push('\n');
    for task_report in report.tasks.values() {
        out.push_str(&format!(
            "{:<8} {:<18} {:>7.3} {:>11.1}% {:>8}\n",
            task_report.task.to_string(),
            task_report.metric,
            task_report.value,
            task_report.parse_failure_rate * 100.0,
            task_report.instances
        ));
        let refs = task_report
            .references
            .iter()
            .map(|r| format!("{} {:.3}", r.model, r.score))
            .collect::<Vec<_>>()
            .join(" | ");
        out.push_str(&format!("         reference: {refs}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instructions::Instruction;
    use crate::model::Activity;

    fn act(s: &str) -> Activity {
        Activity::new(s).unwrap()
    }

    fn instance(task: TaskKind, id: &str, output: &str) -> InstructionInstance {
        InstructionInstance {
            task,
            variant: VariantTag::Normal,
            template_id: 1,
            model_id: "m".into(),
            instance_id: id.into(),
            activity_set: [act("a"), act("b"), act("c")].into_iter().collect(),
            instruction: Instruction {
                formulation: "f".into(),
                context: "c".into(),
            },
            output: output.into(),
            seed: 0,
        }
    }

    fn respond(pairs: &[(&str, &str)]) -> Vec<ResponseLine> {
        pairs
            .iter()
            .map(|(id, raw)| ResponseLine {
                instance_id: id.to_string(),
                raw_output: raw.to_string(),
            })
            .collect()
    }

    #[test]
    fn echoed_golds_score_perfectly_with_no_parse_failures() {
        let test = vec![
            instance(TaskKind::TSad, "i1", "True"),
            instance(TaskKind::TSad, "i2", "False"),
            instance(TaskKind::SNap, "i3", "b"),
            instance(TaskKind::SDfd, "i4", "'a' -> 'b'\n'b' -> 'c'"),
            instance(TaskKind::SPtd, "i5", "->( 'a', 'b', 'c' )"),
        ];
        let responses = respond(&[
            ("i1", "True"),
            ("i2", "False"),
            ("i3", "b"),
            ("i4", "'a' -> 'b'\n'b' -> 'c'"),
            ("i5", "->( 'a', 'b', 'c' )"),
        ]);
        let report = evaluate_fold(
            &test,
            &responses,
            GroupKind::Anomaly,
            "oracle",
            7,
            &EvalOptions::default(),
        )
        .unwrap();
        for task_report in report.tasks.values() {
            assert!(
                (task_report.value - 1.0).abs() < 1e-12,
                "{}: {}",
                task_report.task,
                task_report.value
            );
            assert_eq!(task_report.parse_failures, 0);
        }
        assert!(!report.threshold_exceeded);
    }

    #[test]
    fn missing_responses_become_unparseable() {
        let test = vec![
            instance(TaskKind::TSad, "i1", "True"),
            instance(TaskKind::TSad, "i2", "False"),
        ];
        let report = evaluate_fold(
            &test,
            &respond(&[("i1", "True")]),
            GroupKind::Anomaly,
            "x",
            7,
            &EvalOptions::default(),
        )
        .unwrap();
        let tsad = &report.tasks[&TaskKind::TSad];
        assert_eq!(tsad.parse_failures, 1);
        assert!((tsad.parse_failure_rate - 0.5).abs() < 1e-12);
        assert!(report.threshold_exceeded);
    }

    #[test]
    fn unknown_and_duplicate_response_ids_are_errors() {
        let test = vec![instance(TaskKind::TSad, "i1", "True")];
        assert!(matches!(
            evaluate_fold(
                &test,
                &respond(&[("zz", "True")]),
                GroupKind::Anomaly,
                "x",
                7,
                &EvalOptions::default()
            ),
            Err(EvalError::InstanceIdMismatch(_))
        ));
        assert!(matches!(
            evaluate_fold(
                &test,
                &respond(&[("i1", "True"), ("i1", "False")]),
                GroupKind::Anomaly,
                "x",
                7,
                &EvalOptions::default()
            ),
            Err(EvalError::InstanceIdMismatch(_))
        ));
    }

    #[test]
    fn constant_true_on_balanced_labels_scores_one_third() {
        let mut test = Vec::new();
        let mut responses = Vec::new();
        for i in 0..100 {
            let output = if i % 2 == 0 { "True" } else { "False" };
            test.push(instance(TaskKind::TSad, &format!("i{i}"), output));
            responses.push(ResponseLine {
                instance_id: format!("i{i}"),
                raw_output: "True".into(),
            });
        }
        let report = evaluate_fold(
            &test,
            &responses,
            GroupKind::Anomaly,
            "constant",
            7,
            &EvalOptions::default(),
        )
        .unwrap();
        let value = report.tasks[&TaskKind::TSad].value;
        assert!((value - 1.0 / 3.0).abs() < 1e-6, "got {value}");
    }

    #[test]
    fn reference_scores_are_annotated() {
        let test = vec![instance(TaskKind::ASad, "i1", "True")];
        let report = evaluate_fold(
            &test,
            &respond(&[("i1", "True")]),
            GroupKind::Anomaly,
            "oracle",
            7,
            &EvalOptions::default(),
        )
        .unwrap();
        let refs = &report.tasks[&TaskKind::ASad].references;
        assert!(refs
            .iter()
            .any(|r| r.model == "Mistral Large 2 IT" && (r.score - 0.679).abs() < 1e-9));
        let text = render_report_text(&report);
        assert!(text.contains("0.679"));
    }

    #[test]
    fn report_json_round_trips() {
        let test = vec![instance(TaskKind::SPtd, "i1", "->( 'a', 'b', 'c' )")];
        let report = evaluate_fold(
            &test,
            &respond(&[("i1", "tau")]),
            GroupKind::Discovery,
            "x",
            7,
            &EvalOptions::default(),
        )
        .unwrap();
        let json = serde_json::to_string_pretty(&report).unwrap();
        let back: FoldReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
    }
}
