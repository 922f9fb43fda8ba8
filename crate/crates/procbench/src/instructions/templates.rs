//! Formulation template banks, one plain-text asset file per (task, variant).

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::taskgen::TaskKind;

use super::{InstructionError, VariantTag};

/// One task formulation: template text with placeholders plus the output
/// constraint substituted for `{constraint}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Formulation {
    pub task: TaskKind,
    pub variant: VariantTag,
    pub template_id: u8,
    pub template: String,
    pub output_constraint: String,
}

impl Formulation {
    /// The formulation text with the output constraint spliced in; payload
    /// placeholders remain for the renderer.
    pub fn text_with_constraint(&self) -> String {
        self.template.replace("{constraint}", &self.output_constraint)
    }
}

/// All template banks, keyed by (task, variant). Disallowed combinations
/// have no bank.
#[derive(Debug, Clone)]
pub struct TemplateBank {
    banks: BTreeMap<(TaskKind, VariantTag), Vec<Formulation>>,
}

/// Six core formulations per bank; the next-activity normal bank carries two
/// extra negative-instruction formulations (ids 7 and 8).
const EMBEDDED: &[(TaskKind, VariantTag, usize, &str)] = &[
    (TaskKind::TSad, VariantTag::Normal, 6, include_str!("../../assets/templates/t-sad.normal.txt")),
    (TaskKind::TSad, VariantTag::NegativeInversion, 6, include_str!("../../assets/templates/t-sad.negative_inversion.txt")),
    (TaskKind::TSad, VariantTag::PositiveInversion, 6, include_str!("../../assets/templates/t-sad.positive_inversion.txt")),
    (TaskKind::ASad, VariantTag::Normal, 6, include_str!("../../assets/templates/a-sad.normal.txt")),
    (TaskKind::ASad, VariantTag::NegativeInversion, 6, include_str!("../../assets/templates/a-sad.negative_inversion.txt")),
    (TaskKind::ASad, VariantTag::PositiveInversion, 6, include_str!("../../assets/templates/a-sad.positive_inversion.txt")),
    (TaskKind::SNap, VariantTag::Normal, 8, include_str!("../../assets/templates/s-nap.normal.txt")),
    (TaskKind::SNap, VariantTag::NegativeInversion, 6, include_str!("../../assets/templates/s-nap.negative_inversion.txt")),
    (TaskKind::SNap, VariantTag::PositiveInversion, 6, include_str!("../../assets/templates/s-nap.positive_inversion.txt")),
    (TaskKind::SDfd, VariantTag::Normal, 6, include_str!("../../assets/templates/s-dfd.normal.txt")),
    (TaskKind::SDfd, VariantTag::NegativeInversion, 6, include_str!("../../assets/templates/s-dfd.negative_inversion.txt")),
    (TaskKind::SPtd, VariantTag::Normal, 6, include_str!("../../assets/templates/s-ptd.normal.txt")),
];

/// Placeholders each bank's templates may use, besides `{constraint}`.
fn allowed_placeholders(task: TaskKind, variant: VariantTag) -> &'static [&'static str] {
    match (task, variant) {
        (TaskKind::TSad, VariantTag::Normal) => &["trace"],
        (TaskKind::TSad, _) => &[],
        (TaskKind::ASad, VariantTag::Normal) => &["act1", "act2"],
        (TaskKind::ASad, _) => &["act1"],
        (TaskKind::SNap, VariantTag::Normal) => &["prefix"],
        (TaskKind::SNap, VariantTag::NegativeInversion) => &["prefix"],
        (TaskKind::SNap, VariantTag::PositiveInversion) => &["later"],
        (TaskKind::SDfd, _) | (TaskKind::SPtd, _) => &[],
    }
}

impl TemplateBank {
    /// The banks shipped with the toolchain.
    pub fn builtin() -> Self {
        let mut banks = BTreeMap::new();
        for (task, variant, expected, text) in EMBEDDED {
            let name = format!("{}.{}", task.slug(), variant.slug());
            let bank = parse_bank(*task, *variant, text)
                .unwrap_or_else(|e| panic!("embedded bank {name}: {e}"));
            assert_eq!(
                bank.len(),
                *expected,
                "embedded bank {name} must have {expected} templates"
            );
            banks.insert((*task, *variant), bank);
        }
        TemplateBank { banks }
    }

    pub fn bank(
        &self,
        task: TaskKind,
        variant: VariantTag,
    ) -> Result<&[Formulation], InstructionError> {
        self.banks
            .get(&(task, variant))
            .map(Vec::as_slice)
            .ok_or(InstructionError::MissingBank { task, variant })
    }
}

/// Uniform draw from the (task, variant) bank; deterministic under a seeded
/// generator. Fails for variant combinations a task does not admit.
pub fn select_formulation<'a>(
    bank: &'a TemplateBank,
    task: TaskKind,
    variant: VariantTag,
    rng: &mut ChaCha8Rng,
) -> Result<&'a Formulation, InstructionError> {
    let templates = bank.bank(task, variant)?;
    Ok(&templates[rng.gen_range(0..templates.len())])
}

/// Parses a bank file: blocks start with `## <id>`, template lines follow,
/// and a final `=> <constraint>` line closes each block.
fn parse_bank(
    task: TaskKind,
    variant: VariantTag,
    text: &str,
) -> Result<Vec<Formulation>, String> {
    let mut out: Vec<Formulation> = Vec::new();
    let mut current: Option<(u8, Vec<String>, Option<String>)> = None;

    let finish = |entry: Option<(u8, Vec<String>, Option<String>)>,
                      out: &mut Vec<Formulation>|
     -> Result<(), String> {
        if let Some((id, lines, constraint)) = entry {
            let template = lines.join(" ").trim().to_string();
            let constraint = constraint.ok_or(format!("template {id} has no => constraint"))?;
            if template.is_empty() {
                return Err(format!("template {id} is empty"));
            }
            if !template.contains("{constraint}") {
                return Err(format!("template {id} lacks the {{constraint}} placeholder"));
            }
            for name in placeholder_names(&template) {
                if name != "constraint"
                    && !allowed_placeholders(task, variant).contains(&name.as_str())
                {
                    return Err(format!("template {id} uses unknown placeholder {{{name}}}"));
                }
            }
            out.push(Formulation {
                task,
                variant,
                template_id: id,
                template,
                output_constraint: constraint,
            });
        }
        Ok(())
    };

    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("## ") {
            finish(current.take(), &mut out)?;
            let id: u8 = rest
                .trim()
                .parse()
                .map_err(|_| format!("bad template header {line:?}"))?;
            current = Some((id, Vec::new(), None));
        } else if let Some(rest) = line.strip_prefix("=> ") {
            match current.as_mut() {
                Some((_, _, constraint @ None)) => *constraint = Some(rest.trim().to_string()),
                Some((id, _, Some(_))) => {
                    return Err(format!("template {id} has two constraint lines"))
                }
                None => return Err("constraint line before first template".into()),
            }
        } else if !line.trim().is_empty() {
            match current.as_mut() {
                Some((_, lines, None)) => lines.push(line.trim().to_string()),
                Some((id, _, Some(_))) => {
                    return Err(format!("template {id} has text after its constraint"))
                }
                None => return Err("text before first template header".into()),
            }
        }
    }
    finish(current.take(), &mut out)?;

    for (idx, formulation) in out.iter().enumerate() {
        if formulation.template_id as usize != idx + 1 {
            return Err(format!(
                "template ids must be contiguous from 1, found {} at position {}",
                formulation.template_id,
                idx + 1
            ));
        }
    }
    if out.is_empty() {
        return Err("bank has no templates".into());
    }
    Ok(out)
}

/// Names of `{...}` placeholders occurring in a template.
pub(crate) fn placeholder_names(template: &str) -> Vec<String> {
    let mut names = Vec::new();
    let mut rest = template;
    while let Some(start) = rest.find('{') {
        rest = &rest[start + 1..];
        if let Some(end) = rest.find('}') {
            names.push(rest[..end].to_string());
            rest = &rest[end + 1..];
        } else {
            break;
        }
    }
    names
}
