//! Per-model instance generation, including anomaly injection.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::model::{
    dfg_of_log, ef_pairs, enumerate_language, Activity, CorpusModel, EventLog, LanguageLimits,
    ProcessTree, Trace,
};
use crate::rng;

use super::dedup::{dedup, LanguageIndex};
use super::{AnomalyLabel, TaskGold, TaskInstance, TaskKind, TaskPayload};

/// Knobs for instance generation.
#[derive(Debug, Clone, Copy)]
pub struct GenConfig {
    pub limits: LanguageLimits,
    /// At most this many traces per model feed the trace-based tasks,
    /// drawn by seeded shuffle of the enumerated language.
    pub trace_sample_cap: usize,
    /// Attempts per anomaly before giving up on a source trace.
    pub anomaly_attempts: u32,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            limits: LanguageLimits::default(),
            trace_sample_cap: 50,
            anomaly_attempts: 20,
        }
    }
}

/// Why a model contributed no instances for a task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SkipReason {
    TooFewActivities,
    LanguageTooLarge { cap: usize },
    NoVerifiableAnomaly,
    NoAnomalousPair,
}

/// Skip signal: the model is left out of the named task's dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, thiserror::Error)]
#[error("model {model_id} skipped for {task}: {reason:?}")]
pub struct ModelSkip {
    pub model_id: String,
    pub task: TaskKind,
    pub reason: SkipReason,
}

fn skip(model_id: &str, task: TaskKind, reason: SkipReason) -> ModelSkip {
    ModelSkip {
        model_id: model_id.to_string(),
        task,
        reason,
    }
}

struct ModelContext {
    alphabet: BTreeSet<Activity>,
    log: EventLog,
    language: BTreeSet<Trace>,
    model_seed: u64,
}

fn prepare(
    tree: &ProcessTree,
    model_id: &str,
    seed: u64,
    task: TaskKind,
    limits: LanguageLimits,
    need_two_activities: bool,
) -> Result<ModelContext, ModelSkip> {
    let alphabet = tree.alphabet();
    if need_two_activities && alphabet.len() < 2 {
        return Err(skip(model_id, task, SkipReason::TooFewActivities));
    }
    let log = enumerate_language(tree, limits)
        .map_err(|_| skip(model_id, task, SkipReason::LanguageTooLarge { cap: limits.max_traces }))?;
    let language: BTreeSet<Trace> = log.traces().iter().cloned().collect();
    Ok(ModelContext {
        alphabet,
        log,
        language,
        model_seed: rng::derived_seed(seed, &[model_id]),
    })
}

/// Deterministic sample: seeded shuffle of the sorted language, then cut.
fn sample_traces(language: &BTreeSet<Trace>, cap: usize, rng: &mut ChaCha8Rng) -> Vec<Trace> {
    let mut traces: Vec<Trace> = language.iter().cloned().collect();
    traces.shuffle(rng);
    traces.truncate(cap);
    traces
}

/// Trace anomaly detection: valid traces from the bounded language paired
/// with perturbed traces verified to fall outside it, balanced per model.
pub fn gen_tsad(
    tree: &ProcessTree,
    model_id: &str,
    seed: u64,
    cfg: &GenConfig,
) -> Result<Vec<TaskInstance>, ModelSkip> {
    let ctx = prepare(tree, model_id, seed, TaskKind::TSad, cfg.limits, true)?;
    let mut rng = rng::stream(seed, &["gen", "t-sad", model_id]);
    let valids = sample_traces(&ctx.language, cfg.trace_sample_cap, &mut rng);
    let alphabet: Vec<Activity> = ctx.alphabet.iter().cloned().collect();

    let mut anomalies = Vec::new();
    let mut produced = BTreeSet::new();
    for source in &valids {
        if let Some(bad) = perturb_outside_language(
            source,
            &alphabet,
            &ctx.language,
            &mut produced,
            cfg.anomaly_attempts,
            &mut rng,
        ) {
            anomalies.push(bad);
        }
    }

    let count = valids.len().min(anomalies.len());
    if count == 0 {
        return Err(skip(model_id, TaskKind::TSad, SkipReason::NoVerifiableAnomaly));
    }

    let mut out = Vec::with_capacity(count * 2);
    for (trace, label) in valids
        .into_iter()
        .take(count)
        .map(|t| (t, AnomalyLabel::Valid))
        .chain(
            anomalies
                .into_iter()
                .take(count)
                .map(|t| (t, AnomalyLabel::Anomalous)),
        )
    {
        out.push(TaskInstance {
            kind: TaskKind::TSad,
            model_id: model_id.to_string(),
            activity_set: ctx.alphabet.clone(),
            payload: TaskPayload::Trace { trace },
            gold: TaskGold::Label { label },
            seed: ctx.model_seed,
        });
    }
    Ok(out)
}

/// One perturbation: swap two positions, delete one step, or insert one
/// alphabet activity, chosen uniformly among the operators applicable to the
/// source length. Retries until the result leaves the bounded language.
fn perturb_outside_language(
    source: &Trace,
    alphabet: &[Activity],
    language: &BTreeSet<Trace>,
    produced: &mut BTreeSet<Trace>,
    attempts: u32,
    rng: &mut ChaCha8Rng,
) -> Option<Trace> {
    #[derive(Clone, Copy)]
    enum Op {
        Swap,
        Delete,
        Insert,
    }

    let len = source.len();
    let mut ops: Vec<Op> = vec![Op::Insert];
    if len >= 1 {
        ops.push(Op::Delete);
    }
    if len >= 2 {
        ops.push(Op::Swap);
    }

    for _ in 0..attempts {
        let mut steps: Vec<Activity> = source.steps().to_vec();
        match ops[rng.gen_range(0..ops.len())] {
            Op::Swap => {
                let i = rng.gen_range(0..len);
                let mut j = rng.gen_range(0..len - 1);
                if j >= i {
                    j += 1;
                }
                steps.swap(i, j);
            }
            Op::Delete => {
                steps.remove(rng.gen_range(0..len));
            }
            Op::Insert => {
                let activity = alphabet[rng.gen_range(0..alphabet.len())].clone();
                steps.insert(rng.gen_range(0..=len), activity);
            }
        }
        let candidate = Trace::new(steps);
        if !language.contains(&candidate) && produced.insert(candidate.clone()) {
            return Some(candidate);
        }
    }
    None
}

/// Activity anomaly detection: eventually-follows pairs from the bounded
/// language against reversed pairs that occur in no trace, balanced per model.
pub fn gen_asad(
    tree: &ProcessTree,
    model_id: &str,
    seed: u64,
    cfg: &GenConfig,
) -> Result<Vec<TaskInstance>, ModelSkip> {
    let ctx = prepare(tree, model_id, seed, TaskKind::ASad, cfg.limits, true)?;

    let mut valid_pairs: BTreeSet<(Activity, Activity)> = BTreeSet::new();
    for trace in ctx.log.traces() {
        for pair in ef_pairs(trace) {
            valid_pairs.insert((pair.earlier, pair.later));
        }
    }
    let anomalous_pairs: BTreeSet<(Activity, Activity)> = valid_pairs
        .iter()
        .filter(|(x, y)| !valid_pairs.contains(&(y.clone(), x.clone())))
        .map(|(x, y)| (y.clone(), x.clone()))
        .collect();

    if anomalous_pairs.is_empty() {
        return Err(skip(model_id, TaskKind::ASad, SkipReason::NoAnomalousPair));
    }

    let count = valid_pairs.len().min(anomalous_pairs.len());
    let mut rng = rng::stream(seed, &["gen", "a-sad", model_id]);
    let mut valid: Vec<_> = valid_pairs.into_iter().collect();
    valid.shuffle(&mut rng);
    valid.truncate(count);
    let mut anomalous: Vec<_> = anomalous_pairs.into_iter().collect();
    anomalous.shuffle(&mut rng);
    anomalous.truncate(count);

    let mut out = Vec::with_capacity(count * 2);
    for (pairs, label) in [
        (valid, AnomalyLabel::Valid),
        (anomalous, AnomalyLabel::Anomalous),
    ] {
        for (earlier, later) in pairs {
            out.push(TaskInstance {
                kind: TaskKind::ASad,
                model_id: model_id.to_string(),
                activity_set: ctx.alphabet.clone(),
                payload: TaskPayload::Pair { earlier, later },
                gold: TaskGold::Label { label },
                seed: ctx.model_seed,
            });
        }
    }
    Ok(out)
}

/// Next-activity prediction: every strict prefix of every sampled trace,
/// labeled with the activity that follows it.
pub fn gen_snap(
    tree: &ProcessTree,
    model_id: &str,
    seed: u64,
    cfg: &GenConfig,
) -> Result<Vec<TaskInstance>, ModelSkip> {
    let ctx = prepare(tree, model_id, seed, TaskKind::SNap, cfg.limits, true)?;
    let mut rng = rng::stream(seed, &["gen", "s-nap", model_id]);
    let traces = sample_traces(&ctx.language, cfg.trace_sample_cap, &mut rng);

    let mut out = Vec::new();
    for trace in &traces {
        for end in 1..trace.len() {
            out.push(TaskInstance {
                kind: TaskKind::SNap,
                model_id: model_id.to_string(),
                activity_set: ctx.alphabet.clone(),
                payload: TaskPayload::Prefix {
                    prefix: trace.prefix(end),
                },
                gold: TaskGold::Next {
                    activity: trace.steps()[end].clone(),
                },
                seed: ctx.model_seed,
            });
        }
    }
    Ok(out)
}

/// Discovery: one DFG instance and one tree instance per model, both keyed by
/// the activity set alone.
pub fn gen_discovery(
    tree: &ProcessTree,
    model_id: &str,
    seed: u64,
    limits: LanguageLimits,
) -> Result<(TaskInstance, TaskInstance), ModelSkip> {
    let ctx = prepare(tree, model_id, seed, TaskKind::SDfd, limits, false)?;
    let dfg = dfg_of_log(&ctx.log);
    let sdfd = TaskInstance {
        kind: TaskKind::SDfd,
        model_id: model_id.to_string(),
        activity_set: ctx.alphabet.clone(),
        payload: TaskPayload::ActivitiesOnly,
        gold: TaskGold::Dfg { dfg },
        seed: ctx.model_seed,
    };
    let sptd = TaskInstance {
        kind: TaskKind::SPtd,
        model_id: model_id.to_string(),
        activity_set: ctx.alphabet,
        payload: TaskPayload::ActivitiesOnly,
        gold: TaskGold::Tree { tree: tree.clone() },
        seed: ctx.model_seed,
    };
    Ok((sdfd, sptd))
}

/// Deduplicated datasets for a whole corpus, plus the skip log and the
/// bounded languages the instances were derived from.
#[derive(Debug)]
pub struct CorpusTasks {
    pub tsad: Vec<TaskInstance>,
    pub asad: Vec<TaskInstance>,
    pub snap: Vec<TaskInstance>,
    pub sdfd: Vec<TaskInstance>,
    pub sptd: Vec<TaskInstance>,
    pub skips: Vec<ModelSkip>,
    pub languages: LanguageIndex,
}

impl CorpusTasks {
    pub fn by_kind(&self, kind: TaskKind) -> &[TaskInstance] {
        match kind {
            TaskKind::TSad => &self.tsad,
            TaskKind::ASad => &self.asad,
            TaskKind::SNap => &self.snap,
            TaskKind::SDfd => &self.sdfd,
            TaskKind::SPtd => &self.sptd,
        }
    }
}

/// Runs all five generators over the corpus (models in parallel), then
/// deduplicates each task dataset. Deterministic for a fixed (corpus, seed).
pub fn generate_corpus(models: &[CorpusModel], cfg: &GenConfig, seed: u64) -> CorpusTasks {
    struct PerModel {
        tsad: Result<Vec<TaskInstance>, ModelSkip>,
        asad: Result<Vec<TaskInstance>, ModelSkip>,
        snap: Result<Vec<TaskInstance>, ModelSkip>,
        discovery: Result<(TaskInstance, TaskInstance), ModelSkip>,
        language: Option<(String, BTreeSet<Trace>)>,
    }

    let per_model: Vec<PerModel> = models
        .par_iter()
        .map(|model| {
            let language = enumerate_language(&model.tree, cfg.limits)
                .ok()
                .map(|log| {
                    (
                        model.id.clone(),
                        log.traces().iter().cloned().collect::<BTreeSet<Trace>>(),
                    )
                });
            PerModel {
                tsad: gen_tsad(&model.tree, &model.id, seed, cfg),
                asad: gen_asad(&model.tree, &model.id, seed, cfg),
                snap: gen_snap(&model.tree, &model.id, seed, cfg),
                discovery: gen_discovery(&model.tree, &model.id, seed, cfg.limits),
                language,
            }
        })
        .collect();

    let mut tsad = Vec::new();
    let mut asad = Vec::new();
    let mut snap = Vec::new();
    let mut sdfd = Vec::new();
    let mut sptd = Vec::new();
    let mut skips = Vec::new();
    let mut languages = LanguageIndex::new();

    for result in per_model {
        match result.tsad {
            Ok(instances) => tsad.extend(instances),
            Err(s) => skips.push(s),
        }
        match result.asad {
            Ok(instances) => asad.extend(instances),
            Err(s) => skips.push(s),
        }
        match result.snap {
            Ok(instances) => snap.extend(instances),
            Err(s) => skips.push(s),
        }
        match result.discovery {
            Ok((d, p)) => {
                sdfd.push(d);
                sptd.push(p);
            }
            Err(s) => {
                skips.push(ModelSkip {
                    task: TaskKind::SPtd,
                    ..s.clone()
                });
                skips.push(s);
            }
        }
        if let Some((id, set)) = result.language {
            languages.insert(id, set);
        }
    }

    CorpusTasks {
        tsad: dedup(tsad, &languages),
        asad: dedup(asad, &languages),
        snap: dedup(snap, &languages),
        sdfd: dedup(sdfd, &languages),
        sptd: dedup(sptd, &languages),
        skips,
        languages,
    }
}
