//! The pipeline stages behind the CLI subcommands. Each stage reads the
//! previous stage's artifacts, writes its own plus a manifest, and is
//! idempotent for identical inputs.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use anyhow::{bail, Context};

use crate::config::PipelineConfig;
use crate::eval::{evaluate_fold, render_report_text, FoldReport, ResponseLine};
use crate::folds::{build_fold, check_leakage, split_models, FoldManifest};
use crate::gateway::run_batch_blocking;
use crate::instructions::{compile, InstructionInstance, TemplateBank, VariantTag};
use crate::jsonl::{read_jsonl, write_jsonl};
use crate::manifest::{sha256_bytes, sha256_file, stale_input_warnings, StageManifest};
use crate::model::read_corpus;
use crate::taskgen::{generate_corpus, GroupKind, TaskInstance, TaskKind};

/// The bundled toy corpus used by `--toy` runs and smoke tests.
pub const TOY_CORPUS: &str = include_str!("../assets/toy_corpus.tsv");

pub fn tasks_dir(cfg: &PipelineConfig) -> PathBuf {
    cfg.output_root.join("tasks")
}

pub fn instructions_dir(cfg: &PipelineConfig) -> PathBuf {
    cfg.output_root.join("instructions")
}

pub fn folds_dir(cfg: &PipelineConfig) -> PathBuf {
    cfg.output_root.join("folds")
}

pub fn fold_dir(cfg: &PipelineConfig, group: GroupKind) -> PathBuf {
    folds_dir(cfg).join(format!("fold-{}", group.slug()))
}

pub fn responses_path(cfg: &PipelineConfig, group: GroupKind, backend: &str) -> PathBuf {
    cfg.output_root
        .join("responses")
        .join(format!("{}.{}.jsonl", group.slug(), backend))
}

pub fn report_path(cfg: &PipelineConfig, group: GroupKind, backend: &str) -> PathBuf {
    cfg.output_root
        .join("reports")
        .join(format!("{}.{}.report.json", group.slug(), backend))
}

pub fn cache_dir(cfg: &PipelineConfig) -> PathBuf {
    cfg.output_root.join("cache")
}

/// What a stage did, for CLI reporting.
#[derive(Debug)]
pub struct StageOutcome {
    pub manifest: StageManifest,
    pub warnings: Vec<String>,
}

/// Generates the five deduplicated task datasets from the corpus.
pub fn stage_gen_tasks(cfg: &PipelineConfig, use_toy: bool) -> anyhow::Result<StageOutcome> {
    let (corpus_text, corpus_name) = if use_toy {
        (TOY_CORPUS.to_string(), "builtin-toy-corpus".to_string())
    } else {
        let text = std::fs::read_to_string(&cfg.corpus)
            .with_context(|| format!("reading corpus {}", cfg.corpus.display()))?;
        (text, cfg.corpus.display().to_string())
    };
    let models = read_corpus(&corpus_text).context("parsing corpus")?;
    let tasks = generate_corpus(&models, &cfg.gen_config(), cfg.seed);

    let dir = tasks_dir(cfg);
    let mut manifest = StageManifest::new("gen-tasks", cfg.seed, cfg.params_digest());
    manifest
        .inputs
        .insert("corpus".into(), sha256_bytes(corpus_text.as_bytes()));
    manifest.notes.push(format!("corpus: {corpus_name}"));
    manifest
        .counts
        .insert("models".into(), models.len() as u64);

    for task in TaskKind::ALL {
        let instances = tasks.by_kind(task);
        let file = format!("{}.jsonl", task.slug());
        let path = dir.join(&file);
        write_jsonl(&path, instances)?;
        manifest.outputs.insert(file, sha256_file(&path)?);
        manifest
            .counts
            .insert(task.slug().into(), instances.len() as u64);
    }
    manifest
        .counts
        .insert("skips".into(), tasks.skips.len() as u64);
    manifest.details = serde_json::json!({ "skips": tasks.skips });

    let warnings = tasks
        .skips
        .iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>();
    manifest.write(&dir.join("manifest.json"))?;
    Ok(StageOutcome { manifest, warnings })
}

fn read_task_datasets(cfg: &PipelineConfig) -> anyhow::Result<BTreeMap<TaskKind, Vec<TaskInstance>>> {
    let dir = tasks_dir(cfg);
    let mut datasets = BTreeMap::new();
    for task in TaskKind::ALL {
        let path = dir.join(format!("{}.jsonl", task.slug()));
        let instances: Vec<TaskInstance> = read_jsonl(&path)
            .with_context(|| format!("reading {}; run gen-tasks first", path.display()))?;
        datasets.insert(task, instances);
    }
    Ok(datasets)
}

/// Compiles the instruction dataset, one file per task.
pub fn stage_build_instructions(cfg: &PipelineConfig) -> anyhow::Result<StageOutcome> {
    let warnings = stale_input_warnings(&tasks_dir(cfg).join("manifest.json"), &tasks_dir(cfg));
    let datasets = read_task_datasets(cfg)?;
    let bank = TemplateBank::builtin();

    let dir = instructions_dir(cfg);
    let mut manifest = StageManifest::new("build-instructions", cfg.seed, cfg.params_digest());
    let mut variant_details = BTreeMap::new();

    for (task, instances) in &datasets {
        let compiled = compile(instances, &bank, &cfg.proportions, cfg.seed)?;
        let file = format!("{}.jsonl", task.slug());
        let path = dir.join(&file);
        write_jsonl(&path, &compiled)?;

        let input_file = format!("{}.jsonl", task.slug());
        manifest.inputs.insert(
            input_file.clone(),
            sha256_file(&tasks_dir(cfg).join(&input_file))?,
        );
        manifest.outputs.insert(file, sha256_file(&path)?);
        manifest
            .counts
            .insert(task.slug().into(), compiled.len() as u64);

        let mut by_variant: BTreeMap<VariantTag, usize> = BTreeMap::new();
        for instance in &compiled {
            *by_variant.entry(instance.variant).or_insert(0) += 1;
        }
        let total = compiled.len().max(1) as f64;
        let shares: BTreeMap<String, f64> = by_variant
            .iter()
            .map(|(v, n)| (v.slug().to_string(), 100.0 * *n as f64 / total))
            .collect();
        variant_details.insert(
            task.slug().to_string(),
            serde_json::json!({ "counts": by_variant, "shares": shares }),
        );
    }
    manifest.details = serde_json::json!({ "variants": variant_details });
    manifest.write(&dir.join("manifest.json"))?;
    Ok(StageOutcome { manifest, warnings })
}

fn read_instruction_datasets(
    cfg: &PipelineConfig,
) -> anyhow::Result<BTreeMap<TaskKind, Vec<InstructionInstance>>> {
    let dir = instructions_dir(cfg);
    let mut datasets = BTreeMap::new();
    for task in TaskKind::ALL {
        let path = dir.join(format!("{}.jsonl", task.slug()));
        let instances: Vec<InstructionInstance> = read_jsonl(&path).with_context(|| {
            format!("reading {}; run build-instructions first", path.display())
        })?;
        datasets.insert(task, instances);
    }
    Ok(datasets)
}

/// Builds the requested folds (all three when `held_out` is `None`).
pub fn stage_make_folds(
    cfg: &PipelineConfig,
    held_out: Option<GroupKind>,
) -> anyhow::Result<StageOutcome> {
    let warnings = stale_input_warnings(
        &instructions_dir(cfg).join("manifest.json"),
        &instructions_dir(cfg),
    );
    let datasets = read_instruction_datasets(cfg)?;

    let mut input_digests = BTreeMap::new();
    for task in TaskKind::ALL {
        let file = format!("{}.jsonl", task.slug());
        input_digests.insert(file.clone(), sha256_file(&instructions_dir(cfg).join(&file))?);
    }

    let universe: BTreeSet<String> = datasets
        .values()
        .flat_map(|instances| instances.iter().map(|i| i.model_id.clone()))
        .collect();
    let assignment = split_models(&universe, cfg.seed)?;

    let groups: Vec<GroupKind> = match held_out {
        Some(group) => vec![group],
        None => GroupKind::ALL.to_vec(),
    };

    let mut stage_manifest = StageManifest::new("make-folds", cfg.seed, cfg.params_digest());
    stage_manifest.inputs = input_digests.clone();
    let mut manifests: Vec<FoldManifest> = Vec::new();

    for group in groups {
        let mut fold = build_fold(group, &datasets, &assignment, &cfg.mixing, cfg.seed)?;
        fold.manifest.input_digests = input_digests.clone();
        let dir = fold_dir(cfg, group);
        write_jsonl(&dir.join("train.jsonl"), &fold.train)?;
        write_jsonl(&dir.join("validation.jsonl"), &fold.validation)?;
        write_jsonl(&dir.join("test.jsonl"), &fold.test)?;
        let manifest_path = dir.join("manifest.json");
        std::fs::write(
            &manifest_path,
            serde_json::to_vec_pretty(&fold.manifest).expect("serializable manifest"),
        )?;

        for file in ["train.jsonl", "validation.jsonl", "test.jsonl"] {
            let relative = format!("fold-{}/{}", group.slug(), file);
            stage_manifest
                .outputs
                .insert(relative, sha256_file(&dir.join(file))?);
        }
        stage_manifest.counts.insert(
            format!("fold-{}-train", group.slug()),
            fold.train.len() as u64,
        );
        stage_manifest.counts.insert(
            format!("fold-{}-test", group.slug()),
            fold.test.len() as u64,
        );
        manifests.push(fold.manifest);
    }

    check_leakage(&manifests)?;
    stage_manifest
        .notes
        .push("leakage audit passed: no model id shared between any train and test".into());
    stage_manifest.write(&folds_dir(cfg).join("manifest.json"))?;
    Ok(StageOutcome {
        manifest: stage_manifest,
        warnings,
    })
}

pub fn read_fold_test(
    cfg: &PipelineConfig,
    group: GroupKind,
) -> anyhow::Result<Vec<InstructionInstance>> {
    let path = fold_dir(cfg, group).join("test.jsonl");
    read_jsonl(&path).with_context(|| format!("reading {}; run make-folds first", path.display()))
}

/// Runs the fold's test split against a named backend and writes the
/// response file.
pub fn stage_run_inference(
    cfg: &PipelineConfig,
    group: GroupKind,
    backend_id: &str,
) -> anyhow::Result<StageOutcome> {
    let test = read_fold_test(cfg, group)?;
    let Some(backend_config) = cfg.backend(backend_id) else {
        bail!("backend {backend_id} is not configured");
    };
    let records = run_batch_blocking(
        &test,
        backend_id,
        &backend_config,
        &cache_dir(cfg),
        cfg.seed,
    )?;

    let path = responses_path(cfg, group, backend_id);
    write_jsonl(&path, &records)?;

    let mut manifest = StageManifest::new("run-inference", cfg.seed, cfg.params_digest());
    manifest.inputs.insert(
        "test.jsonl".into(),
        sha256_file(&fold_dir(cfg, group).join("test.jsonl"))?,
    );
    manifest.notes.push(format!("fold: {group}"));
    manifest.notes.push(format!("backend: {backend_id}"));
    manifest
        .counts
        .insert("responses".into(), records.len() as u64);
    manifest.counts.insert(
        "cached".into(),
        records.iter().filter(|r| r.cached).count() as u64,
    );
    let errors = records.iter().filter(|r| r.error.is_some()).count();
    manifest.counts.insert("errors".into(), errors as u64);
    manifest.write(&path.with_extension("manifest.json"))?;

    let warnings = if errors == records.len() && !records.is_empty() {
        vec![format!("every request to backend {backend_id} failed")]
    } else {
        Vec::new()
    };
    Ok(StageOutcome { manifest, warnings })
}

/// Scores one fold's responses and writes the JSON and text reports.
pub fn stage_evaluate(
    cfg: &PipelineConfig,
    group: GroupKind,
    backend_id: &str,
    responses_override: Option<PathBuf>,
) -> anyhow::Result<(FoldReport, PathBuf)> {
    let test = read_fold_test(cfg, group)?;
    let responses_file = responses_override.unwrap_or_else(|| responses_path(cfg, group, backend_id));
    let responses: Vec<ResponseLine> = read_jsonl(&responses_file).with_context(|| {
        format!(
            "reading {}; run run-inference first",
            responses_file.display()
        )
    })?;

    let report = evaluate_fold(
        &test,
        &responses,
        group,
        backend_id,
        cfg.seed,
        &cfg.eval_options(),
    )?;

    let json_path = report_path(cfg, group, backend_id);
    if let Some(parent) = json_path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let tmp = json_path.with_extension("json.tmp");
    std::fs::write(&tmp, serde_json::to_vec_pretty(&report).expect("serializable report"))?;
    std::fs::rename(&tmp, &json_path)?;
    std::fs::write(
        json_path.with_extension("txt"),
        render_report_text(&report),
    )?;
    Ok((report, json_path))
}

/// Renders every stored report (optionally one backend's) as text.
pub fn stage_report(cfg: &PipelineConfig, backend: Option<&str>) -> anyhow::Result<String> {
    let dir = cfg.output_root.join("reports");
    let mut reports: Vec<FoldReport> = Vec::new();
    let entries = std::fs::read_dir(&dir)
        .with_context(|| format!("reading {}; run evaluate first", dir.display()))?;
    for entry in entries {
        let path = entry?.path();
        if path.file_name().is_some_and(|n| {
            n.to_string_lossy().ends_with(".report.json")
        }) {
            let report: FoldReport = serde_json::from_str(&std::fs::read_to_string(&path)?)
                .with_context(|| format!("parsing {}", path.display()))?;
            if backend.is_none_or(|b| report.backend == b) {
                reports.push(report);
            }
        }
    }
    if reports.is_empty() {
        bail!("no reports found under {}", dir.display());
    }
    reports.sort_by_key(|r| (r.held_out, r.backend.clone()));
    Ok(reports
        .iter()
        .map(render_report_text)
        .collect::<Vec<_>>()
        .join("\n"))
}

/// Variant shares per task as recorded by `build-instructions`.
pub fn variant_shares(manifest: &StageManifest) -> BTreeMap<String, BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    let Some(map) = manifest
        .details
        .get("variants")
        .and_then(|v| v.as_object())
    else {
        return out;
    };
    for (task, value) in map {
        if let Some(shares) = value.get("shares").and_then(|s| s.as_object()) {
            let inner: BTreeMap<String, f64> = shares
                .iter()
                .filter_map(|(k, v)| v.as_f64().map(|f| (k.clone(), f)))
                .collect();
            out.insert(task.clone(), inner);
        }
    }
    out
}

