//! Compilation of task instances into instruction instances at configured
//! variant proportions.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::model::Activity;
use crate::rng;
use crate::taskgen::{AnomalyLabel, TaskGold, TaskInstance, TaskKind, TaskPayload};

use super::render::{invalid_next_candidates, render_instance, template_applicable};
use super::templates::{Formulation, TemplateBank};
use super::{Instruction, InstructionError, InstructionInstance, MixConfig, VariantTag};

/// Compiles task instances into instruction instances.
///
/// Variant assignment is a seeded per-instance draw against the configured
/// proportions. For the anomaly tasks the inversion direction follows the
/// instance label (valid sources invert positively, anomalous ones
/// negatively), so their configured inversion shares are met jointly; for
/// the next-activity task the two directions are drawn per configuration,
/// falling back to a positive inversion when no wrong-next-step candidate
/// exists. Output is sorted by (task, model id, instance id) and is
/// byte-stable for a fixed (input, seed, configuration).
pub fn compile(
    instances: &[TaskInstance],
    bank: &TemplateBank,
    mix: &MixConfig,
    seed: u64,
) -> Result<Vec<InstructionInstance>, InstructionError> {
    mix.validate()?;
    let valid_next = snap_valid_next_index(instances);

    let mut compiled = instances
        .par_iter()
        .map(|instance| compile_one(instance, bank, mix, seed, &valid_next))
        .collect::<Result<Vec<_>, _>>()?;
    compiled.sort_by(|a, b| {
        (a.task, &a.model_id, &a.instance_id).cmp(&(b.task, &b.model_id, &b.instance_id))
    });
    Ok(compiled)
}

/// Valid next activities per (activity set, prefix) across the whole dataset;
/// the complement of this set is safe to present as a wrong next step.
fn snap_valid_next_index(instances: &[TaskInstance]) -> BTreeMap<String, BTreeSet<Activity>> {
    let mut index: BTreeMap<String, BTreeSet<Activity>> = BTreeMap::new();
    for instance in instances {
        if instance.kind != TaskKind::SNap {
            continue;
        }
        let (TaskPayload::Prefix { .. }, TaskGold::Next { activity }) =
            (&instance.payload, &instance.gold)
        else {
            continue;
        };
        index
            .entry(snap_key(instance))
            .or_default()
            .insert(activity.clone());
    }
    index
}

fn snap_key(instance: &TaskInstance) -> String {
    serde_json::json!([instance.activity_set, instance.payload]).to_string()
}

fn compile_one(
    instance: &TaskInstance,
    bank: &TemplateBank,
    mix: &MixConfig,
    seed: u64,
    valid_next: &BTreeMap<String, BTreeSet<Activity>>,
) -> Result<InstructionInstance, InstructionError> {
    // Content-derived stream: compilation does not depend on instance order.
    let mut rng = rng::stream(
        seed,
        &[
            "compile",
            instance.kind.slug(),
            &instance.model_id,
            &instance.payload_digest(),
            &instance.gold_digest(),
        ],
    );

    let candidates: Option<Vec<Activity>> = match instance.kind {
        TaskKind::SNap => {
            let empty = BTreeSet::new();
            let known = valid_next.get(&snap_key(instance)).unwrap_or(&empty);
            Some(invalid_next_candidates(&instance.activity_set, known))
        }
        _ => None,
    };
    let has_candidates = candidates.as_ref().is_some_and(|c| !c.is_empty());

    let variant = draw_variant(instance, mix, has_candidates, &mut rng);
    let formulation = select_applicable(bank, instance, variant, &mut rng)?;
    let rendered = render_instance(
        instance,
        formulation,
        variant,
        candidates.as_deref(),
        &mut rng,
    )?;

    let instance_id = instance_digest(
        instance.kind,
        variant,
        formulation.template_id,
        &instance.model_id,
        &rendered.formulation,
        &rendered.context,
        &rendered.output,
    );
    Ok(InstructionInstance {
        task: instance.kind,
        variant,
        template_id: formulation.template_id,
        model_id: instance.model_id.clone(),
        instance_id,
        activity_set: instance.activity_set.clone(),
        instruction: Instruction {
            formulation: rendered.formulation,
            context: rendered.context,
        },
        output: rendered.output,
        seed,
    })
}

fn draw_variant(
    instance: &TaskInstance,
    mix: &MixConfig,
    has_neg_candidates: bool,
    rng: &mut ChaCha8Rng,
) -> VariantTag {
    let shares = mix.mix_for(instance.kind);
    let u: f64 = rng.gen_range(0.0..100.0);
    match instance.kind {
        TaskKind::TSad | TaskKind::ASad => {
            if u < shares.normal {
                VariantTag::Normal
            } else {
                match instance.gold {
                    TaskGold::Label {
                        label: AnomalyLabel::Valid,
                    } => VariantTag::PositiveInversion,
                    _ => VariantTag::NegativeInversion,
                }
            }
        }
        TaskKind::SNap => {
            if u < shares.normal {
                VariantTag::Normal
            } else if u < shares.normal + shares.negative_inversion {
                if has_neg_candidates {
                    VariantTag::NegativeInversion
                } else {
                    VariantTag::PositiveInversion
                }
            } else {
                VariantTag::PositiveInversion
            }
        }
        TaskKind::SDfd => {
            if u < shares.normal {
                VariantTag::Normal
            } else {
                VariantTag::NegativeInversion
            }
        }
        TaskKind::SPtd => VariantTag::Normal,
    }
}

fn select_applicable<'a>(
    bank: &'a TemplateBank,
    instance: &TaskInstance,
    variant: VariantTag,
    rng: &mut ChaCha8Rng,
) -> Result<&'a Formulation, InstructionError> {
    let templates = bank.bank(instance.kind, variant)?;
    let applicable: Vec<&Formulation> = templates
        .iter()
        .filter(|f| template_applicable(f, instance))
        .collect();
    debug_assert!(!applicable.is_empty(), "core templates are always applicable");
    Ok(applicable[rng.gen_range(0..applicable.len())])
}

fn instance_digest(
    task: TaskKind,
    variant: VariantTag,
    template_id: u8,
    model_id: &str,
    formulation: &str,
    context: &str,
    output: &str,
) -> String {
    let mut hasher = Sha256::new();
    for part in [
        task.slug(),
        variant.slug(),
        &template_id.to_string(),
        model_id,
        formulation,
        context,
        output,
    ] {
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part.as_bytes());
    }
    hex::encode(&hasher.finalize()[..8])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_tree, Trace};
    use crate::taskgen::{gen_asad, gen_snap, gen_tsad, GenConfig};

    fn act(s: &str) -> Activity {
        Activity::new(s).unwrap()
    }

    fn bank() -> TemplateBank {
        TemplateBank::builtin()
    }

    fn sample_instances() -> Vec<TaskInstance> {
        let tree = parse_tree("->( 'a', X( 'b', 'c' ), +( 'd', 'e' ) )").unwrap();
        let cfg = GenConfig::default();
        let mut all = gen_tsad(&tree, "m1", 5, &cfg).unwrap();
        all.extend(gen_asad(&tree, "m1", 5, &cfg).unwrap());
        all.extend(gen_snap(&tree, "m1", 5, &cfg).unwrap());
        all
    }

    #[test]
    fn compilation_is_deterministic() {
        let instances = sample_instances();
        let a = compile(&instances, &bank(), &MixConfig::default(), 11).unwrap();
        let b = compile(&instances, &bank(), &MixConfig::default(), 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn compilation_is_input_order_independent() {
        let mut instances = sample_instances();
        let a = compile(&instances, &bank(), &MixConfig::default(), 11).unwrap();
        instances.reverse();
        let b = compile(&instances, &bank(), &MixConfig::default(), 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn formulation_and_context_are_never_empty() {
        let compiled = compile(&sample_instances(), &bank(), &MixConfig::default(), 11).unwrap();
        assert!(!compiled.is_empty());
        for inst in &compiled {
            assert!(!inst.instruction.formulation.is_empty());
            assert!(!inst.instruction.context.is_empty());
            assert!(!inst.output.is_empty());
            assert!(!inst.instruction.formulation.contains('{'));
        }
    }

    #[test]
    fn anomaly_inversion_direction_follows_the_label() {
        let compiled = compile(&sample_instances(), &bank(), &MixConfig::default(), 11).unwrap();
        for inst in compiled {
            if inst.task == TaskKind::TSad && inst.variant == VariantTag::PositiveInversion {
                // Positive inversions come from valid traces: the output must
                // be a trace, not a True/False label.
                assert!(inst.output.contains('\'') || inst.output == "(empty)");
            }
        }
    }

    #[test]
    fn snap_negative_inversion_output_is_never_a_known_next_step() {
        // The prefix <a> is known to continue with b or c, so a wrong next
        // step drawn for it must be a or d.
        let activity_set: BTreeSet<Activity> =
            ["a", "b", "c", "d"].iter().map(|l| act(l)).collect();
        let mk = |gold: &str| TaskInstance {
            kind: TaskKind::SNap,
            model_id: "m".into(),
            activity_set: activity_set.clone(),
            payload: TaskPayload::Prefix {
                prefix: Trace::new(vec![act("a")]),
            },
            gold: TaskGold::Next {
                activity: act(gold),
            },
            seed: 0,
        };
        let instances = vec![mk("b"), mk("c")];
        let mix = MixConfig {
            s_nap: super::super::VariantMix {
                normal: 0.0,
                negative_inversion: 100.0,
                positive_inversion: 0.0,
            },
            ..MixConfig::default()
        };
        let compiled = compile(&instances, &bank(), &mix, 3).unwrap();
        assert_eq!(compiled.len(), 2);
        for inst in compiled {
            assert_eq!(inst.variant, VariantTag::NegativeInversion);
            assert!(["a", "d"].contains(&inst.output.as_str()), "got {}", inst.output);
        }
    }

    #[test]
    fn asad_inversions_complete_the_pair_with_its_second_activity() {
        let activity_set: BTreeSet<Activity> =
            ["a", "b", "c"].iter().map(|l| act(l)).collect();
        let mk = |label, i: usize| TaskInstance {
            kind: TaskKind::ASad,
            model_id: format!("m{i}"),
            activity_set: activity_set.clone(),
            payload: TaskPayload::Pair {
                earlier: act("a"),
                later: act("b"),
            },
            gold: TaskGold::Label { label },
            seed: 0,
        };
        let instances: Vec<TaskInstance> = (0..40)
            .map(|i| {
                mk(
                    if i % 2 == 0 {
                        crate::taskgen::AnomalyLabel::Valid
                    } else {
                        crate::taskgen::AnomalyLabel::Anomalous
                    },
                    i,
                )
            })
            .collect();
        let mix = MixConfig {
            a_sad: super::super::VariantMix {
                normal: 0.0,
                negative_inversion: 50.0,
                positive_inversion: 50.0,
            },
            ..MixConfig::default()
        };
        let compiled = compile(&instances, &bank(), &mix, 8).unwrap();
        let mut saw_positive = false;
        let mut saw_negative = false;
        for inst in compiled {
            // Whatever the direction, the answer completes the pair.
            assert_eq!(inst.output, "b");
            match inst.variant {
                VariantTag::PositiveInversion => saw_positive = true,
                VariantTag::NegativeInversion => saw_negative = true,
                VariantTag::Normal => panic!("all instances were drawn for inversion"),
            }
        }
        assert!(saw_positive && saw_negative);
    }

    #[test]
    fn snap_inversion_directions_are_roughly_even_over_seeded_draws() {
        // 10,000 synthetic prefixes at 50/50 inversion shares.
        let activity_set: BTreeSet<Activity> =
            ["a", "b", "c", "d"].iter().map(|l| act(l)).collect();
        let instances: Vec<TaskInstance> = (0..10_000)
            .map(|i| TaskInstance {
                kind: TaskKind::SNap,
                model_id: format!("m{i}"),
                activity_set: activity_set.clone(),
                payload: TaskPayload::Prefix {
                    prefix: Trace::new(vec![act("a"), act(&format!("b{i}"))]),
                },
                gold: TaskGold::Next { activity: act("c") },
                seed: 0,
            })
            .collect();
        let mix = MixConfig {
            s_nap: super::super::VariantMix {
                normal: 0.0,
                negative_inversion: 50.0,
                positive_inversion: 50.0,
            },
            ..MixConfig::default()
        };
        let compiled = compile(&instances, &bank(), &mix, 99).unwrap();
        let negative = compiled
            .iter()
            .filter(|i| i.variant == VariantTag::NegativeInversion)
            .count() as f64;
        let share = negative / compiled.len() as f64;
        assert!((share - 0.5).abs() < 0.02, "negative share {share}");
    }

    #[test]
    fn all_templates_occur_over_enough_instances() {
        let activity_set: BTreeSet<Activity> =
            ["a", "b", "c"].iter().map(|l| act(l)).collect();
        let instances: Vec<TaskInstance> = (0..600)
            .map(|i| TaskInstance {
                kind: TaskKind::SNap,
                model_id: format!("m{i}"),
                activity_set: activity_set.clone(),
                payload: TaskPayload::Prefix {
                    prefix: Trace::new(vec![act("a"), act(&format!("x{i}"))]),
                },
                gold: TaskGold::Next { activity: act("b") },
                seed: 0,
            })
            .collect();
        let compiled = compile(&instances, &bank(), &MixConfig::default(), 4).unwrap();
        let normal_templates: BTreeSet<u8> = compiled
            .iter()
            .filter(|i| i.variant == VariantTag::Normal)
            .map(|i| i.template_id)
            .collect();
        assert_eq!(normal_templates.len(), 8, "all eight formulations occur");
    }
}
