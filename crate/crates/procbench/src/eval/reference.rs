//! Published reference scores shipped for report annotation. The toolchain
//! does not reproduce these numbers; they ground local results.

use serde::{Deserialize, Serialize};

use crate::taskgen::TaskKind;

/// One published (model, task) score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceEntry {
    pub model: String,
    pub task: TaskKind,
    pub metric: String,
    pub score: f64,
}

fn entry(model: &str, task: TaskKind, score: f64) -> ReferenceEntry {
    let metric = if task.is_discovery() {
        "footprint_fitness"
    } else {
        "macro_f1"
    };
    ReferenceEntry {
        model: model.to_string(),
        task,
        metric: metric.to_string(),
        score,
    }
}

/// All shipped reference scores: large instruction-tuned models against
/// their untuned bases, plus task-specific fine-tuned smaller models.
pub fn reference_entries() -> Vec<ReferenceEntry> {
    use TaskKind::*;
    let mut out = Vec::new();

    // Untuned vs. instruction-tuned large models.
    for (task, llama_base, llama_it, mistral_base, mistral_it) in [
        (ASad, 0.594, 0.562, 0.421, 0.679),
        (TSad, 0.558, 0.480, 0.347, 0.620),
        (SNap, 0.525, 0.651, 0.624, 0.868),
        (SDfd, 0.630, 0.714, 0.658, 0.770),
        (SPtd, 0.621, 0.697, 0.649, 0.763),
    ] {
        out.push(entry("Llama 3 70B Base", task, llama_base));
        out.push(entry("Llama 3 70B IT", task, llama_it));
        out.push(entry("Mistral Large 2 Base", task, mistral_base));
        out.push(entry("Mistral Large 2 IT", task, mistral_it));
    }

    // Task-specific fine-tuned smaller models. The encoder has no text
    // generation, hence no discovery scores.
    for (task, roberta, mistral_7b, llama_8b) in [
        (TSad, Some(0.77), 0.79, 0.79),
        (ASad, Some(0.85), 0.88, 0.88),
        (SNap, Some(0.63), 0.68, 0.69),
        (SDfd, None, 0.81, 0.80),
        (SPtd, None, 0.84, 0.83),
    ] {
        if let Some(score) = roberta {
            out.push(entry("RoBERTa FT", task, score));
        }
        out.push(entry("Mistral 7B FT", task, mistral_7b));
        out.push(entry("Llama 8B FT", task, llama_8b));
    }
    out
}

/// Reference scores for one task, in shipping order.
pub fn references_for(task: TaskKind) -> Vec<ReferenceEntry> {
    reference_entries()
        .into_iter()
        .filter(|e| e.task == task)
        .collect()
}
