//! Model-level data splits and leave-one-group-out fold construction with
//! examples-proportional mixing.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::instructions::{InstructionInstance, VariantTag};
use crate::rng;
use crate::taskgen::{GroupKind, TaskKind};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FoldError {
    #[error("need at least {minimum} models to split, found {found}")]
    TooFewModels { found: usize, minimum: usize },
    #[error("dataset for {task} is missing")]
    MissingDataset { task: TaskKind },
    #[error("training pool for {task} is empty")]
    EmptyPool { task: TaskKind },
    #[error("invalid mixing policy: {0}")]
    InvalidPolicy(String),
    #[error("fold {held_out}: {detail}")]
    Leakage { held_out: GroupKind, detail: String },
}

/// Which split a source model belongs to. All instances of a model inherit
/// its bucket across all five tasks, so no model can leak between splits
/// through a different task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitBucket {
    Train,
    Validation,
    Test,
}

/// Deterministic model-to-bucket assignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitAssignment {
    buckets: BTreeMap<String, SplitBucket>,
}

impl SplitAssignment {
    pub fn bucket(&self, model_id: &str) -> Option<SplitBucket> {
        self.buckets.get(model_id).copied()
    }

    pub fn models_in(&self, bucket: SplitBucket) -> Vec<String> {
        self.buckets
            .iter()
            .filter(|(_, b)| **b == bucket)
            .map(|(id, _)| id.clone())
            .collect()
    }

    pub fn len(&self) -> usize {
        self.buckets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buckets.is_empty()
    }
}

/// Splits models 70/20/10 by seeded shuffle. Fractional shares are floored;
/// leftover models go to train first, then validation.
pub fn split_models(
    model_ids: &BTreeSet<String>,
    seed: u64,
) -> Result<SplitAssignment, FoldError> {
    const MINIMUM: usize = 10;
    let n = model_ids.len();
    if n < MINIMUM {
        return Err(FoldError::TooFewModels {
            found: n,
            minimum: MINIMUM,
        });
    }

    let mut ids: Vec<&String> = model_ids.iter().collect();
    let mut rng = rng::stream(seed, &["split-models"]);
    ids.shuffle(&mut rng);

    let mut train = (n * 70) / 100;
    let mut validation = (n * 20) / 100;
    let test = (n * 10) / 100;
    let leftover = n - train - validation - test;
    if leftover >= 1 {
        train += 1;
    }
    if leftover >= 2 {
        validation += 1;
    }

    let mut buckets = BTreeMap::new();
    for (idx, id) in ids.into_iter().enumerate() {
        let bucket = if idx < train {
            SplitBucket::Train
        } else if idx < train + validation {
            SplitBucket::Validation
        } else {
            SplitBucket::Test
        };
        buckets.insert(id.clone(), bucket);
    }
    Ok(SplitAssignment { buckets })
}

/// Per-task contribution caps for examples-proportional mixing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixingPolicy {
    /// Cap on samples contributed by each task.
    pub default_cap: usize,
    /// Raised next-activity cap when the discovery group is held out, so the
    /// single prediction task balances the two anomaly tasks.
    pub snap_cap_discovery_heldout: usize,
}

impl Default for MixingPolicy {
    fn default() -> Self {
        MixingPolicy {
            default_cap: 30_000,
            snap_cap_discovery_heldout: 60_000,
        }
    }
}

impl MixingPolicy {
    pub fn cap_for(&self, task: TaskKind, held_out: GroupKind) -> usize {
        if task == TaskKind::SNap && held_out == GroupKind::Discovery {
            self.snap_cap_discovery_heldout
        } else {
            self.default_cap
        }
    }

    pub fn validate(&self) -> Result<(), FoldError> {
        if self.default_cap == 0 || self.snap_cap_discovery_heldout == 0 {
            return Err(FoldError::InvalidPolicy("caps must be positive".into()));
        }
        Ok(())
    }
}

/// Sampling record for one task's contribution to a training mix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixEntry {
    pub pool_size: usize,
    pub cap: usize,
    pub sampled: usize,
    /// Percentage of the mixed training set.
    pub share: f64,
    pub variant_counts: BTreeMap<VariantTag, usize>,
}

/// Draws min(pool, cap) instances per task by seeded uniform sampling
/// without replacement and records counts and shares.
pub fn sample_mixed(
    pools: BTreeMap<TaskKind, Vec<InstructionInstance>>,
    held_out: GroupKind,
    policy: &MixingPolicy,
    seed: u64,
) -> Result<(Vec<InstructionInstance>, BTreeMap<TaskKind, MixEntry>), FoldError> {
    policy.validate()?;
    for (task, pool) in &pools {
        if pool.is_empty() {
            return Err(FoldError::EmptyPool { task: *task });
        }
    }

    let mut sampled_all = Vec::new();
    let mut entries = BTreeMap::new();
    for (task, mut pool) in pools {
        let cap = policy.cap_for(task, held_out);
        let pool_size = pool.len();
        let take = pool_size.min(cap);
        let mut rng = rng::stream(seed, &["mix", held_out.slug(), task.slug()]);
        pool.shuffle(&mut rng);
        pool.truncate(take);
        let mut variant_counts: BTreeMap<VariantTag, usize> = BTreeMap::new();
        for instance in &pool {
            *variant_counts.entry(instance.variant).or_insert(0) += 1;
        }
        entries.insert(
            task,
            MixEntry {
                pool_size,
                cap,
                sampled: take,
                share: 0.0,
                variant_counts,
            },
        );
        sampled_all.extend(pool);
    }

    let total = sampled_all.len() as f64;
    for entry in entries.values_mut() {
        entry.share = 100.0 * entry.sampled as f64 / total;
    }
    sampled_all.sort_by(|a, b| {
        (a.task, &a.model_id, &a.instance_id).cmp(&(b.task, &b.model_id, &b.instance_id))
    });
    Ok((sampled_all, entries))
}

/// Everything written into `manifest.json` of one fold directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldManifest {
    pub held_out: GroupKind,
    pub seed: u64,
    pub tool_version: String,
    /// Effective cap per in-fold task.
    pub caps: BTreeMap<TaskKind, usize>,
    pub train: BTreeMap<TaskKind, MixEntry>,
    pub validation_counts: BTreeMap<TaskKind, usize>,
    pub test_counts: BTreeMap<TaskKind, usize>,
    /// Sorted model ids per split, for leakage auditing.
    pub train_model_ids: Vec<String>,
    pub validation_model_ids: Vec<String>,
    pub test_model_ids: Vec<String>,
    /// Digests of the instruction dataset files this fold was built from.
    pub input_digests: BTreeMap<String, String>,
    /// Split buckets are assigned per source model jointly across all five
    /// tasks (strictest no-leakage reading); evaluation splits keep only
    /// normal-variant instances because inverted objectives have different
    /// output grammars than the task metrics score.
    pub notes: Vec<String>,
}

/// One leave-one-group-out fold.
#[derive(Debug, Clone)]
pub struct Fold {
    pub held_out: GroupKind,
    pub train: Vec<InstructionInstance>,
    pub validation: Vec<InstructionInstance>,
    pub test: Vec<InstructionInstance>,
    pub manifest: FoldManifest,
}

/// Builds one fold: training data is mixed from the in-fold tasks' train
/// splits; validation and test are the held-out tasks' splits, unsampled and
/// restricted to normal-variant instances.
pub fn build_fold(
    held_out: GroupKind,
    datasets: &BTreeMap<TaskKind, Vec<InstructionInstance>>,
    assignment: &SplitAssignment,
    policy: &MixingPolicy,
    seed: u64,
) -> Result<Fold, FoldError> {
    for task in TaskKind::ALL {
        if !datasets.contains_key(&task) {
            return Err(FoldError::MissingDataset { task });
        }
    }

    let mut train_pools: BTreeMap<TaskKind, Vec<InstructionInstance>> = BTreeMap::new();
    let mut validation = Vec::new();
    let mut test = Vec::new();
    let held_out_tasks = held_out.tasks();

    for (task, instances) in datasets {
        let in_fold = !held_out_tasks.contains(task);
        for instance in instances {
            match assignment.bucket(&instance.model_id) {
                Some(SplitBucket::Train) if in_fold => train_pools
                    .entry(*task)
                    .or_default()
                    .push(instance.clone()),
                Some(SplitBucket::Validation) if !in_fold => {
                    if instance.variant == VariantTag::Normal {
                        validation.push(instance.clone());
                    }
                }
                Some(SplitBucket::Test) if !in_fold => {
                    if instance.variant == VariantTag::Normal {
                        test.push(instance.clone());
                    }
                }
                _ => {}
            }
        }
    }
    for task in TaskKind::ALL {
        if !held_out_tasks.contains(&task) {
            train_pools.entry(task).or_default();
        }
    }

    let caps: BTreeMap<TaskKind, usize> = train_pools
        .keys()
        .map(|t| (*t, policy.cap_for(*t, held_out)))
        .collect();
    let (train, entries) = sample_mixed(train_pools, held_out, policy, seed)?;

    let sort_key = |i: &InstructionInstance| (i.task, i.model_id.clone(), i.instance_id.clone());
    validation.sort_by_key(sort_key);
    test.sort_by_key(sort_key);

    let manifest = FoldManifest {
        held_out,
        seed,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        caps,
        train: entries,
        validation_counts: count_by_task(&validation),
        test_counts: count_by_task(&test),
        train_model_ids: distinct_models(&train),
        validation_model_ids: distinct_models(&validation),
        test_model_ids: distinct_models(&test),
        input_digests: BTreeMap::new(),
        notes: vec![
            "split buckets are assigned per source model jointly across all five tasks".into(),
            "validation and test keep normal-variant instances only".into(),
        ],
    };

    let fold = Fold {
        held_out,
        train,
        validation,
        test,
        manifest,
    };
    verify_fold_leakage(&fold)?;
    Ok(fold)
}

fn count_by_task(instances: &[InstructionInstance]) -> BTreeMap<TaskKind, usize> {
    let mut counts = BTreeMap::new();
    for instance in instances {
        *counts.entry(instance.task).or_insert(0) += 1;
    }
    counts
}

fn distinct_models(instances: &[InstructionInstance]) -> Vec<String> {
    let set: BTreeSet<String> = instances.iter().map(|i| i.model_id.clone()).collect();
    set.into_iter().collect()
}

fn verify_fold_leakage(fold: &Fold) -> Result<(), FoldError> {
    let train: BTreeSet<&String> = fold.manifest.train_model_ids.iter().collect();
    let test: BTreeSet<&String> = fold.manifest.test_model_ids.iter().collect();
    let overlap: Vec<&&String> = train.intersection(&test).collect();
    if !overlap.is_empty() {
        return Err(FoldError::Leakage {
            held_out: fold.held_out,
            detail: format!("{} models shared between train and test", overlap.len()),
        });
    }
    let held_out_tasks = fold.held_out.tasks();
    if fold
        .train
        .iter()
        .any(|i| held_out_tasks.contains(&i.task))
    {
        return Err(FoldError::Leakage {
            held_out: fold.held_out,
            detail: "train contains instances of a held-out task".into(),
        });
    }
    Ok(())
}

/// Cross-fold audit over manifests: no model id shared between any train and
/// test split, and no held-out task contributing training data.
pub fn check_leakage(manifests: &[FoldManifest]) -> Result<(), FoldError> {
    for manifest in manifests {
        let train: BTreeSet<&String> = manifest.train_model_ids.iter().collect();
        let test: BTreeSet<&String> = manifest.test_model_ids.iter().collect();
        let shared = train.intersection(&test).count();
        if shared != 0 {
            return Err(FoldError::Leakage {
                held_out: manifest.held_out,
                detail: format!("{shared} model ids appear in both train and test"),
            });
        }
        for task in manifest.held_out.tasks() {
            if manifest.train.contains_key(task) {
                return Err(FoldError::Leakage {
                    held_out: manifest.held_out,
                    detail: format!("held-out task {task} contributes training data"),
                });
            }
        }
    }
    Ok(())
}
