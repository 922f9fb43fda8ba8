//! Instruction-task instances: task instances enriched with natural-language
//! formulations, objective inversions, and controlled variant proportions.

mod compile;
mod render;
mod templates;

pub use compile::compile;
pub use render::{render_activity_set, render_dfg_edges, render_trace_text};
pub use templates::{select_formulation, Formulation, TemplateBank};

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::Activity;
use crate::taskgen::TaskKind;

/// How an instance's objective relates to its source task instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantTag {
    Normal,
    NegativeInversion,
    PositiveInversion,
}

impl VariantTag {
    pub const ALL: [VariantTag; 3] = [
        VariantTag::Normal,
        VariantTag::NegativeInversion,
        VariantTag::PositiveInversion,
    ];

    /// The variants a task admits: tree discovery has no meaningful
    /// inversion, DFG discovery only a negative one.
    pub fn allowed_for(task: TaskKind) -> &'static [VariantTag] {
        match task {
            TaskKind::SPtd => &[VariantTag::Normal],
            TaskKind::SDfd => &[VariantTag::Normal, VariantTag::NegativeInversion],
            _ => &VariantTag::ALL,
        }
    }

    pub fn slug(self) -> &'static str {
        match self {
            VariantTag::Normal => "normal",
            VariantTag::NegativeInversion => "negative_inversion",
            VariantTag::PositiveInversion => "positive_inversion",
        }
    }
}

impl fmt::Display for VariantTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

/// The instruction half of an instance: formulation text plus context text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instruction {
    pub formulation: String,
    pub context: String,
}

/// One compiled instruction-task instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstructionInstance {
    pub task: TaskKind,
    pub variant: VariantTag,
    pub template_id: u8,
    pub model_id: String,
    pub instance_id: String,
    pub activity_set: BTreeSet<Activity>,
    pub instruction: Instruction,
    pub output: String,
    pub seed: u64,
}

/// Variant percentages for one task; must sum to 100.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantMix {
    pub normal: f64,
    pub negative_inversion: f64,
    pub positive_inversion: f64,
}

impl VariantMix {
    pub fn share(&self, variant: VariantTag) -> f64 {
        match variant {
            VariantTag::Normal => self.normal,
            VariantTag::NegativeInversion => self.negative_inversion,
            VariantTag::PositiveInversion => self.positive_inversion,
        }
    }
}

fn standard_mix() -> VariantMix {
    VariantMix {
        normal: 80.0,
        negative_inversion: 10.0,
        positive_inversion: 10.0,
    }
}

fn dfg_discovery_mix() -> VariantMix {
    VariantMix {
        normal: 80.0,
        negative_inversion: 20.0,
        positive_inversion: 0.0,
    }
}

fn tree_discovery_mix() -> VariantMix {
    VariantMix {
        normal: 100.0,
        negative_inversion: 0.0,
        positive_inversion: 0.0,
    }
}

/// Per-task variant proportions. The default is 80/10/10 for the
/// classification and prediction tasks, 80/20/0 for DFG discovery, and
/// 100/0/0 for tree discovery.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixConfig {
    #[serde(rename = "t-sad", default = "standard_mix")]
    pub t_sad: VariantMix,
    #[serde(rename = "a-sad", default = "standard_mix")]
    pub a_sad: VariantMix,
    #[serde(rename = "s-nap", default = "standard_mix")]
    pub s_nap: VariantMix,
    #[serde(rename = "s-dfd", default = "dfg_discovery_mix")]
    pub s_dfd: VariantMix,
    #[serde(rename = "s-ptd", default = "tree_discovery_mix")]
    pub s_ptd: VariantMix,
}

impl Default for MixConfig {
    fn default() -> Self {
        MixConfig {
            t_sad: standard_mix(),
            a_sad: standard_mix(),
            s_nap: standard_mix(),
            s_dfd: dfg_discovery_mix(),
            s_ptd: tree_discovery_mix(),
        }
    }
}

impl MixConfig {
    pub fn mix_for(&self, task: TaskKind) -> VariantMix {
        match task {
            TaskKind::TSad => self.t_sad,
            TaskKind::ASad => self.a_sad,
            TaskKind::SNap => self.s_nap,
            TaskKind::SDfd => self.s_dfd,
            TaskKind::SPtd => self.s_ptd,
        }
    }

    /// Checks that each task's shares sum to 100, disallowed variants are 0,
    /// and the anomaly tasks use symmetric inversion shares (the inversion
    /// direction there is determined by the instance label, so asymmetric
    /// shares could not be honored).
    pub fn validate(&self) -> Result<(), InstructionError> {
        for task in TaskKind::ALL {
            let mix = self.mix_for(task);
            let parts = [
                mix.normal,
                mix.negative_inversion,
                mix.positive_inversion,
            ];
            if parts.iter().any(|p| !(0.0..=100.0).contains(p)) {
                return Err(InstructionError::InvalidProportions(format!(
                    "{task}: shares must lie in [0, 100]"
                )));
            }
            let sum: f64 = parts.iter().sum();
            if (sum - 100.0).abs() > 1e-9 {
                return Err(InstructionError::InvalidProportions(format!(
                    "{task}: shares sum to {sum}, expected 100"
                )));
            }
            for variant in VariantTag::ALL {
                if !VariantTag::allowed_for(task).contains(&variant) && mix.share(variant) != 0.0 {
                    return Err(InstructionError::InvalidProportions(format!(
                        "{task}: variant {variant} is not allowed and must be 0"
                    )));
                }
            }
            if matches!(task, TaskKind::TSad | TaskKind::ASad)
                && (mix.negative_inversion - mix.positive_inversion).abs() > 1e-9
            {
                return Err(InstructionError::InvalidProportions(format!(
                    "{task}: negative and positive inversion shares must be equal"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InstructionError {
    #[error("no template bank for ({task}, {variant})")]
    MissingBank { task: TaskKind, variant: VariantTag },
    #[error("invalid proportions: {0}")]
    InvalidProportions(String),
    #[error("template bank {0}: {1}")]
    BankFormat(String, String),
    #[error("template ({task}, {variant}, {template_id}) left placeholder {{{name}}} unresolved")]
    UnresolvedPlaceholder {
        task: TaskKind,
        variant: VariantTag,
        template_id: u8,
        name: String,
    },
}
