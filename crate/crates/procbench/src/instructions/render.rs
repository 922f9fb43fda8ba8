//! Text rendering for contexts and outputs, including objective inversions.

use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::model::{Activity, Dfg};
use crate::taskgen::{AnomalyLabel, TaskGold, TaskInstance, TaskKind, TaskPayload};

use super::templates::{placeholder_names, Formulation};
use super::{InstructionError, VariantTag};

/// Canonical trace text: `'a', 'b', 'c'`, or `(empty)` for no steps.
pub fn render_trace_text(steps: &[Activity]) -> String {
    if steps.is_empty() {
        return "(empty)".to_string();
    }
    steps
        .iter()
        .map(|a| format!("'{}'", a.label().replace('\\', "\\\\").replace('\'', "\\'")))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Sorted, quoted activity set: `'a', 'b'`.
pub fn render_activity_set(set: &BTreeSet<Activity>) -> String {
    let steps: Vec<Activity> = set.iter().cloned().collect();
    render_trace_text(&steps)
}

/// Directly-follows pairs, one `'x' -> 'y'` per line; `(none)` when empty.
pub fn render_dfg_edges(edges: &BTreeSet<(Activity, Activity)>) -> String {
    if edges.is_empty() {
        return "(none)".to_string();
    }
    edges
        .iter()
        .map(|(x, y)| {
            format!(
                "{} -> {}",
                render_trace_text(std::slice::from_ref(x)),
                render_trace_text(std::slice::from_ref(y))
            )
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn render_label(label: AnomalyLabel) -> String {
    match label {
        AnomalyLabel::Valid => "True".to_string(),
        AnomalyLabel::Anomalous => "False".to_string(),
    }
}

/// The rendered pieces of one instruction instance.
#[derive(Debug, Clone)]
pub(crate) struct Rendered {
    pub formulation: String,
    pub context: String,
    pub output: String,
}

/// Whether a formulation can express this instance. The negative-instruction
/// formulations of the next-activity task (ids 7 and 8) need at least two
/// observed steps so one earlier step can be withheld.
pub(crate) fn template_applicable(formulation: &Formulation, instance: &TaskInstance) -> bool {
    if formulation.task == TaskKind::SNap
        && formulation.variant == VariantTag::Normal
        && formulation.template_id >= 7
    {
        if let TaskPayload::Prefix { prefix } = &instance.payload {
            return prefix.len() >= 2;
        }
    }
    true
}

/// Context parts: labeled payload lines, skipped when the formulation embeds
/// them, followed by the activity set.
struct ContextBuilder {
    lines: Vec<String>,
}

impl ContextBuilder {
    fn new() -> Self {
        ContextBuilder { lines: Vec::new() }
    }

    fn part(&mut self, embedded: bool, label: &str, value: String) {
        if !embedded {
            self.lines.push(format!("{label}: {value}"));
        }
    }

    fn finish(mut self, activity_set: &BTreeSet<Activity>) -> String {
        self.lines
            .push(format!("Possible activities: {}", render_activity_set(activity_set)));
        self.lines.join("\n")
    }
}

fn substitute(
    formulation: &Formulation,
    substitutions: &[(&str, &str)],
) -> Result<(String, BTreeSet<String>), InstructionError> {
    let mut text = formulation.text_with_constraint();
    let mut used = BTreeSet::new();
    for (name, value) in substitutions {
        let token = format!("{{{name}}}");
        if text.contains(token.as_str()) {
            text = text.replace(token.as_str(), value);
            used.insert((*name).to_string());
        }
    }
    for name in placeholder_names(&text) {
        if substitutions.iter().any(|(n, _)| *n == name) {
            continue; // a substituted value happened to contain braces
        }
        return Err(InstructionError::UnresolvedPlaceholder {
            task: formulation.task,
            variant: formulation.variant,
            template_id: formulation.template_id,
            name,
        });
    }
    Ok((text, used))
}

/// Renders formulation, context, and output for one instance under the given
/// variant. `invalid_next` supplies the verified candidates for the negative
/// inversion of the next-activity task.
pub(crate) fn render_instance(
    instance: &TaskInstance,
    formulation: &Formulation,
    variant: VariantTag,
    invalid_next: Option<&[Activity]>,
    rng: &mut ChaCha8Rng,
) -> Result<Rendered, InstructionError> {
    let mut ctx = ContextBuilder::new();
    match (instance.kind, variant) {
        (TaskKind::TSad, VariantTag::Normal) => {
            let TaskPayload::Trace { trace } = &instance.payload else {
                unreachable!("trace payload for trace anomaly task")
            };
            let TaskGold::Label { label } = instance.gold else {
                unreachable!("label gold for trace anomaly task")
            };
            let trace_text = render_trace_text(trace.steps());
            let (text, used) = substitute(formulation, &[("trace", &trace_text)])?;
            ctx.part(used.contains("trace"), "Trace", trace_text);
            Ok(Rendered {
                formulation: text,
                context: ctx.finish(&instance.activity_set),
                output: render_label(label),
            })
        }
        (TaskKind::TSad, _) => {
            let TaskPayload::Trace { trace } = &instance.payload else {
                unreachable!("trace payload for trace anomaly task")
            };
            let (text, _) = substitute(formulation, &[])?;
            ctx.part(false, "Target length", format!("{} steps", trace.len()));
            Ok(Rendered {
                formulation: text,
                context: ctx.finish(&instance.activity_set),
                output: render_trace_text(trace.steps()),
            })
        }
        (TaskKind::ASad, VariantTag::Normal) => {
            let TaskPayload::Pair { earlier, later } = &instance.payload else {
                unreachable!("pair payload for activity anomaly task")
            };
            let TaskGold::Label { label } = instance.gold else {
                unreachable!("label gold for activity anomaly task")
            };
            let (text, used) =
                substitute(formulation, &[("act1", earlier.label()), ("act2", later.label())])?;
            ctx.part(used.contains("act1"), "First activity", earlier.label().into());
            ctx.part(used.contains("act2"), "Second activity", later.label().into());
            Ok(Rendered {
                formulation: text,
                context: ctx.finish(&instance.activity_set),
                output: render_label(label),
            })
        }
        (TaskKind::ASad, _) => {
            let TaskPayload::Pair { earlier, later } = &instance.payload else {
                unreachable!("pair payload for activity anomaly task")
            };
            let (text, used) = substitute(formulation, &[("act1", earlier.label())])?;
            ctx.part(used.contains("act1"), "Given activity", earlier.label().into());
            Ok(Rendered {
                formulation: text,
                context: ctx.finish(&instance.activity_set),
                output: later.label().to_string(),
            })
        }
        (TaskKind::SNap, VariantTag::Normal) => {
            let TaskPayload::Prefix { prefix } = &instance.payload else {
                unreachable!("prefix payload for next-activity task")
            };
            if formulation.template_id >= 7 {
                // Negative instruction: withhold one step before the last
                // observed one; the model must name it.
                debug_assert!(prefix.len() >= 2, "guarded by template_applicable");
                let removed_idx = rng.gen_range(0..prefix.len() - 1);
                let mut shown: Vec<Activity> = prefix.steps().to_vec();
                let removed = shown.remove(removed_idx);
                let (text, _) = substitute(formulation, &[])?;
                ctx.part(
                    false,
                    "Observed sequence (one step missing)",
                    render_trace_text(&shown),
                );
                return Ok(Rendered {
                    formulation: text,
                    context: ctx.finish(&instance.activity_set),
                    output: removed.label().to_string(),
                });
            }
            let TaskGold::Next { activity } = &instance.gold else {
                unreachable!("next gold for next-activity task")
            };
            let prefix_text = render_trace_text(prefix.steps());
            let (text, used) = substitute(formulation, &[("prefix", &prefix_text)])?;
            ctx.part(used.contains("prefix"), "Sequence so far", prefix_text);
            Ok(Rendered {
                formulation: text,
                context: ctx.finish(&instance.activity_set),
                output: activity.label().to_string(),
            })
        }
        (TaskKind::SNap, VariantTag::PositiveInversion) => {
            let TaskPayload::Prefix { prefix } = &instance.payload else {
                unreachable!("prefix payload for next-activity task")
            };
            let TaskGold::Next { activity } = &instance.gold else {
                unreachable!("next gold for next-activity task")
            };
            let (text, used) = substitute(formulation, &[("later", activity.label())])?;
            ctx.part(used.contains("later"), "Known next activity", activity.label().into());
            ctx.part(false, "Preceding steps", prefix.len().to_string());
            Ok(Rendered {
                formulation: text,
                context: ctx.finish(&instance.activity_set),
                output: render_trace_text(prefix.steps()),
            })
        }
        (TaskKind::SNap, VariantTag::NegativeInversion) => {
            let TaskPayload::Prefix { prefix } = &instance.payload else {
                unreachable!("prefix payload for next-activity task")
            };
            let candidates = invalid_next.expect("candidates checked before variant draw");
            let chosen = &candidates[rng.gen_range(0..candidates.len())];
            let prefix_text = render_trace_text(prefix.steps());
            let (text, used) = substitute(formulation, &[("prefix", &prefix_text)])?;
            ctx.part(used.contains("prefix"), "Sequence so far", prefix_text);
            Ok(Rendered {
                formulation: text,
                context: ctx.finish(&instance.activity_set),
                output: chosen.label().to_string(),
            })
        }
        (TaskKind::SDfd, VariantTag::Normal) => {
            let TaskGold::Dfg { dfg } = &instance.gold else {
                unreachable!("dfg gold for dfg discovery task")
            };
            let (text, _) = substitute(formulation, &[])?;
            Ok(Rendered {
                formulation: text,
                context: ctx.finish(&instance.activity_set),
                output: render_dfg_edges(dfg.edges()),
            })
        }
        (TaskKind::SDfd, _) => {
            let TaskGold::Dfg { dfg } = &instance.gold else {
                unreachable!("dfg gold for dfg discovery task")
            };
            let (text, _) = substitute(formulation, &[])?;
            Ok(Rendered {
                formulation: text,
                context: ctx.finish(&instance.activity_set),
                output: render_dfg_edges(&forbidden_pairs(dfg, &instance.activity_set)),
            })
        }
        (TaskKind::SPtd, _) => {
            let TaskGold::Tree { tree } = &instance.gold else {
                unreachable!("tree gold for tree discovery task")
            };
            let (text, _) = substitute(formulation, &[])?;
            Ok(Rendered {
                formulation: text,
                context: ctx.finish(&instance.activity_set),
                output: tree.serialize(),
            })
        }
    }
}

/// Ordered pairs over the activity set that the DFG does not allow,
/// diagonal included: what must not directly follow what.
fn forbidden_pairs(
    dfg: &Dfg,
    activity_set: &BTreeSet<Activity>,
) -> BTreeSet<(Activity, Activity)> {
    let mut out = BTreeSet::new();
    for x in activity_set {
        for y in activity_set {
            if !dfg.has_edge(x, y) {
                out.insert((x.clone(), y.clone()));
            }
        }
    }
    out
}

/// Verified wrong-next-step candidates: alphabet activities never observed as
/// the next activity after this exact prefix anywhere in the dataset.
pub(crate) fn invalid_next_candidates(
    activity_set: &BTreeSet<Activity>,
    valid_next: &BTreeSet<Activity>,
) -> Vec<Activity> {
    activity_set.difference(valid_next).cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_tree;
    use crate::rng;

    fn act(s: &str) -> Activity {
        Activity::new(s).unwrap()
    }

    #[test]
    fn trace_text_quotes_and_joins() {
        assert_eq!(render_trace_text(&[act("a"), act("b c")]), "'a', 'b c'");
        assert_eq!(render_trace_text(&[]), "(empty)");
    }

    #[test]
    fn dfg_edges_render_one_pair_per_line() {
        let edges: BTreeSet<_> = [(act("a"), act("b")), (act("b"), act("c"))]
            .into_iter()
            .collect();
        assert_eq!(render_dfg_edges(&edges), "'a' -> 'b'\n'b' -> 'c'");
        assert_eq!(render_dfg_edges(&BTreeSet::new()), "(none)");
    }

    #[test]
    fn forbidden_pairs_complement_the_dfg_over_the_alphabet() {
        let tree = parse_tree("->( 'a', 'b' )").unwrap();
        let log = crate::model::enumerate_language(&tree, Default::default()).unwrap();
        let dfg = crate::model::dfg_of_log(&log);
        let pairs = forbidden_pairs(&dfg, &tree.alphabet());
        // a->b is allowed; the other three ordered pairs are not.
        assert_eq!(pairs.len(), 3);
        assert!(!pairs.contains(&(act("a"), act("b"))));
        assert!(pairs.contains(&(act("b"), act("a"))));
        assert!(pairs.contains(&(act("a"), act("a"))));
    }

    #[test]
    fn substitution_reports_unresolved_placeholders() {
        let formulation = Formulation {
            task: TaskKind::TSad,
            variant: VariantTag::Normal,
            template_id: 1,
            template: "check {trace} {constraint}".into(),
            output_constraint: "True or False".into(),
        };
        let err = substitute(&formulation, &[]).unwrap_err();
        assert!(matches!(err, InstructionError::UnresolvedPlaceholder { name, .. } if name == "trace"));
    }

    #[test]
    fn invalid_next_excludes_all_known_golds() {
        let set: BTreeSet<_> = [act("a"), act("b"), act("c")].into_iter().collect();
        let valid: BTreeSet<_> = [act("b")].into_iter().collect();
        assert_eq!(invalid_next_candidates(&set, &valid), vec![act("a"), act("c")]);
    }

    #[test]
    fn missing_step_formulation_withholds_an_earlier_step() {
        let banks = super::super::TemplateBank::builtin();
        let bank = banks.bank(TaskKind::SNap, VariantTag::Normal).unwrap();
        let formulation = bank.iter().find(|f| f.template_id == 7).unwrap();
        let instance = TaskInstance {
            kind: TaskKind::SNap,
            model_id: "m".into(),
            activity_set: [act("a"), act("b"), act("c"), act("d")].into_iter().collect(),
            payload: TaskPayload::Prefix {
                prefix: [act("a"), act("b"), act("c")].into_iter().collect(),
            },
            gold: TaskGold::Next { activity: act("d") },
            seed: 0,
        };
        let mut rng = rng::stream(3, &["t"]);
        let rendered = render_instance(&instance, formulation, VariantTag::Normal, None, &mut rng)
            .unwrap();
        // The last observed step stays; one of the earlier two is withheld
        // and becomes the expected output.
        assert!(["a", "b"].contains(&rendered.output.as_str()));
        assert!(rendered.context.contains("one step missing"));
        assert!(!rendered
            .context
            .lines()
            .next()
            .unwrap()
            .contains(&format!("'{}'", rendered.output)));
    }
}
