//! Property tests for the model core, generators, and metrics.

mod support;

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

use procbench::eval::{dfg_fitness, footprint_match_fraction, macro_f1};
use procbench::model::{
    dfg_of_log, ef_pairs, enumerate_language, footprint_of_dfg, parse_tree, Activity, Dfg,
    EventLog, LanguageLimits, ProcessTree, Relation, Trace,
};
use procbench::rng;
use procbench::taskgen::{
    dedup, gen_snap, gen_tsad, AnomalyLabel, GenConfig, LanguageIndex, TaskGold, TaskInstance,
    TaskKind, TaskPayload,
};

use support::{act, labels_of, oracle_language, random_dfg, random_tree};

// ---------------------------------------------------------------------------
// Process-tree strategies

fn leaf_strategy() -> impl Strategy<Value = ProcessTree> {
    prop_oneof![
        8 => prop::sample::select(vec!["a", "b", "c", "check invoice", "it's ok", r"path\sep"])
            .prop_map(|label| ProcessTree::Leaf(Activity::new(label).unwrap())),
        1 => Just(ProcessTree::Silent),
    ]
}

fn tree_strategy() -> impl Strategy<Value = ProcessTree> {
    leaf_strategy().prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 1..=3).prop_map(ProcessTree::Sequence),
            prop::collection::vec(inner.clone(), 1..=3).prop_map(ProcessTree::Choice),
            prop::collection::vec(inner.clone(), 1..=3).prop_map(ProcessTree::Parallel),
            (inner.clone(), inner).prop_map(|(d, r)| ProcessTree::Loop(Box::new(d), Box::new(r))),
        ]
    })
}

proptest! {
    #[test]
    fn parse_of_serialize_is_identity(tree in tree_strategy()) {
        let text = tree.serialize();
        let parsed = parse_tree(&text).expect("canonical text parses");
        prop_assert_eq!(parsed, tree);
    }

    #[test]
    fn footprint_matrices_are_antisymmetric(edge_bits in prop::collection::vec(any::<bool>(), 36)) {
        let labels = ["a", "b", "c", "d", "e", "f"];
        let alphabet: BTreeSet<Activity> = labels.iter().map(|l| act(l)).collect();
        let mut edges = BTreeSet::new();
        for (index, bit) in edge_bits.iter().enumerate() {
            if *bit {
                let from = labels[index / 6];
                let to = labels[index % 6];
                edges.insert((act(from), act(to)));
            }
        }
        let matrix = footprint_of_dfg(&Dfg::from_edges(edges), &alphabet);
        for row in 0..matrix.size() {
            for col in 0..matrix.size() {
                let forward = matrix.relation_at(row, col);
                let backward = matrix.relation_at(col, row);
                let mirrored = match forward {
                    Relation::Precedes => Relation::Follows,
                    Relation::Follows => Relation::Precedes,
                    symmetric => symmetric,
                };
                prop_assert_eq!(backward, mirrored);
            }
        }
    }

    #[test]
    fn dfg_of_log_ignores_trace_order(
        traces in prop::collection::vec(prop::collection::vec(0usize..5, 0..6), 0..8),
        seed in any::<u64>(),
    ) {
        let labels = ["a", "b", "c", "d", "e"];
        let as_traces: Vec<Trace> = traces
            .iter()
            .map(|t| t.iter().map(|i| act(labels[*i])).collect())
            .collect();
        let mut shuffled = as_traces.clone();
        shuffled.shuffle(&mut rng::stream(seed, &["shuffle"]));
        prop_assert_eq!(
            dfg_of_log(&EventLog::new(as_traces)),
            dfg_of_log(&EventLog::new(shuffled))
        );
    }

    #[test]
    fn ef_pairs_cover_adjacent_pairs_and_respect_the_bound(
        steps in prop::collection::vec(0usize..6, 0..10)
    ) {
        let labels = ["a", "b", "c", "d", "e", "f"];
        let t: Trace = steps.iter().map(|i| act(labels[*i])).collect();
        let pairs = ef_pairs(&t);
        for window in t.steps().windows(2) {
            prop_assert!(pairs
                .iter()
                .any(|p| p.earlier == window[0] && p.later == window[1]));
        }
        let distinct = t.activities().len();
        if distinct == t.len() {
            prop_assert!(pairs.len() <= distinct * distinct.saturating_sub(1) / 2);
        }
    }

    #[test]
    fn macro_f1_matches_a_naive_direct_count(
        golds in prop::collection::vec(0usize..4, 1..60),
        preds in prop::collection::vec(prop::option::weighted(0.85, 0usize..5), 1..60),
    ) {
        let n = golds.len().min(preds.len());
        let labels = ["w", "x", "y", "z", "unseen"];
        let golds: Vec<String> = golds[..n].iter().map(|i| labels[*i].to_string()).collect();
        let preds: Vec<Option<String>> =
            preds[..n].iter().map(|p| p.map(|i| labels[i].to_string())).collect();
        let classes: BTreeSet<String> = ["w", "x", "y", "z"].iter().map(|s| s.to_string()).collect();

        let (value, _) = macro_f1(&golds, &preds, &classes).unwrap();
        prop_assert!((value - naive_macro_f1(&golds, &preds, &classes)).abs() < 1e-12);
    }

    #[test]
    fn macro_f1_is_invariant_under_order_and_renaming(
        pairs in prop::collection::vec((0usize..3, prop::option::weighted(0.9, 0usize..3)), 1..50),
        seed in any::<u64>(),
    ) {
        let labels = ["x", "y", "z"];
        let renamed = ["xx", "yy", "zz"];
        let classes: BTreeSet<String> = labels.iter().map(|s| s.to_string()).collect();
        let golds: Vec<String> = pairs.iter().map(|(g, _)| labels[*g].to_string()).collect();
        let preds: Vec<Option<String>> =
            pairs.iter().map(|(_, p)| p.map(|i| labels[i].to_string())).collect();
        let (value, _) = macro_f1(&golds, &preds, &classes).unwrap();

        let mut order: Vec<usize> = (0..pairs.len()).collect();
        order.shuffle(&mut rng::stream(seed, &["order"]));
        let golds_shuffled: Vec<String> = order.iter().map(|i| golds[*i].clone()).collect();
        let preds_shuffled: Vec<Option<String>> = order.iter().map(|i| preds[*i].clone()).collect();
        let (shuffled_value, _) = macro_f1(&golds_shuffled, &preds_shuffled, &classes).unwrap();
        prop_assert!((value - shuffled_value).abs() < 1e-12);

        let rename = |s: &String| {
            renamed[labels.iter().position(|l| l == s).unwrap()].to_string()
        };
        let renamed_classes: BTreeSet<String> = renamed.iter().map(|s| s.to_string()).collect();
        let renamed_golds: Vec<String> = golds.iter().map(rename).collect();
        let renamed_preds: Vec<Option<String>> =
            preds.iter().map(|p| p.as_ref().map(rename)).collect();
        let (renamed_value, _) = macro_f1(&renamed_golds, &renamed_preds, &renamed_classes).unwrap();
        prop_assert!((value - renamed_value).abs() < 1e-12);
    }
}

fn naive_macro_f1(golds: &[String], preds: &[Option<String>], classes: &BTreeSet<String>) -> f64 {
    let mut total = 0.0;
    for class in classes {
        let mut tp = 0.0;
        let mut fp = 0.0;
        let mut fn_ = 0.0;
        for (g, p) in golds.iter().zip(preds) {
            let predicted = p.as_deref() == Some(class.as_str());
            let is_gold = g == class;
            if predicted && is_gold {
                tp += 1.0;
            }
            if predicted && !is_gold {
                fp += 1.0;
            }
            if !predicted && is_gold {
                fn_ += 1.0;
            }
        }
        let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
        let recall = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
        total += if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
    }
    total / classes.len() as f64
}

// ---------------------------------------------------------------------------
// Seeded sweeps against the independent oracle

fn limits() -> LanguageLimits {
    LanguageLimits {
        loop_redo_bound: 2,
        max_traces: 2_000,
    }
}

#[test]
fn enumeration_agrees_with_the_brute_force_oracle() {
    let mut checked = 0;
    for case in 0..150u32 {
        let mut stream = rng::stream(2024, &["lang-oracle", &case.to_string()]);
        let tree = random_tree(&mut stream, 3);
        let Ok(log) = enumerate_language(&tree, limits()) else {
            continue;
        };
        let oracle: BTreeSet<Vec<String>> = oracle_language(&tree, 2);
        let ours: BTreeSet<Vec<String>> = log.traces().iter().map(labels_of).collect();
        assert_eq!(ours, oracle, "language mismatch for {}", tree.serialize());
        checked += 1;
    }
    assert!(checked > 100, "only {checked} trees were enumerable");
}

#[test]
fn fitness_is_bounded_reflexive_and_monotone_under_edge_removal() {
    for case in 0..300u32 {
        let mut stream = rng::stream(7, &["fitness", &case.to_string()]);
        let (gold, alphabet) = random_dfg(&mut stream);
        let (discovered, _) = random_dfg(&mut stream);

        assert_eq!(dfg_fitness(&gold, &alphabet, Some(&gold)), 1.0);
        let base = dfg_fitness(&gold, &alphabet, Some(&discovered));
        assert!((0.0..=1.0).contains(&base));

        // Remove one discovered edge that also exists in the gold model.
        let shared: Vec<_> = discovered
            .edges()
            .intersection(gold.edges())
            .cloned()
            .collect();
        if let Some(edge) = shared.first() {
            let mut reduced = discovered.edges().clone();
            reduced.remove(edge);
            let smaller = dfg_fitness(&gold, &alphabet, Some(&Dfg::from_edges(reduced)));
            assert!(
                smaller <= base + 1e-12,
                "removing correct edge {edge:?} raised fitness {base} -> {smaller}"
            );
        }
    }
}

#[test]
fn footprints_of_identical_random_trees_match() {
    let mut checked = 0;
    for case in 0..200u32 {
        let mut stream = rng::stream(99, &["tree-fitness", &case.to_string()]);
        let tree = random_tree(&mut stream, 3);
        let alphabet = tree.alphabet();
        if alphabet.is_empty() {
            continue;
        }
        let Ok(matrix) = procbench::model::footprint_of_tree(&tree, &alphabet, limits()) else {
            continue;
        };
        assert_eq!(footprint_match_fraction(&matrix, &matrix), 1.0);
        checked += 1;
    }
    assert!(checked > 120);
}

// ---------------------------------------------------------------------------
// Generator counts derived from the oracle

#[test]
fn snap_prefix_count_matches_exhaustive_prefix_enumeration() {
    // Languages below the sample cap keep every trace, so the raw instance
    // count must equal the sum of strict prefix counts over the language.
    let corpus = [
        "->( 'a', X( 'b', 'c' ), 'd' )",
        "->( 'register claim', +( 'check damage', 'check policy' ), 'settle claim' )",
        "*( ->( 'scan form', 'file form' ), 'request correction' )",
    ];
    for (index, text) in corpus.iter().enumerate() {
        let tree = parse_tree(text).unwrap();
        let cfg = GenConfig::default();
        let instances = gen_snap(&tree, &format!("m{index}"), 11, &cfg).unwrap();
        let language = oracle_language(&tree, cfg.limits.loop_redo_bound);
        assert!(language.len() <= cfg.trace_sample_cap);
        let expected: usize = language.iter().map(|t| t.len().saturating_sub(1)).sum();
        assert_eq!(instances.len(), expected, "prefix count for {text}");
    }
}

#[test]
fn tsad_instances_verify_against_the_oracle_and_balance_exactly() {
    let corpus = [
        "->( 'a', X( 'b', 'c' ), 'd' )",
        "->( 'register claim', +( 'check damage', 'check policy' ), 'settle claim' )",
        "*( ->( 'scan form', 'file form' ), 'request correction' )",
    ];
    let mut totals = BTreeMap::new();
    for (index, text) in corpus.iter().enumerate() {
        let tree = parse_tree(text).unwrap();
        let instances = gen_tsad(&tree, &format!("m{index}"), 11, &GenConfig::default()).unwrap();
        let language = oracle_language(&tree, 2);
        let mut valid = 0;
        let mut anomalous = 0;
        for instance in &instances {
            let TaskPayload::Trace { trace } = &instance.payload else {
                panic!("trace payload expected")
            };
            match instance.gold {
                TaskGold::Label {
                    label: AnomalyLabel::Valid,
                } => {
                    valid += 1;
                    assert!(language.contains(&labels_of(trace)));
                }
                _ => {
                    anomalous += 1;
                    assert!(!language.contains(&labels_of(trace)));
                }
            }
        }
        assert_eq!(valid, anomalous);
        totals.insert(index, instances.len());
    }
    // Frozen totals for this corpus and seed: languages have 2, 2, and 3
    // traces, all perturbable, so every model contributes 2 * |language|.
    assert_eq!(totals.values().sum::<usize>(), 2 * (2 + 2 + 3));
}

#[test]
fn dedup_is_idempotent_on_generated_data() {
    let tree = parse_tree("->( 'a', X( 'b', 'c' ), +( 'd', 'e' ) )").unwrap();
    let mut all = gen_snap(&tree, "m1", 3, &GenConfig::default()).unwrap();
    all.extend(gen_snap(&tree, "m2", 4, &GenConfig::default()).unwrap());
    let mut index = LanguageIndex::new();
    for id in ["m1", "m2"] {
        index.insert(
            id.to_string(),
            enumerate_language(&tree, LanguageLimits::default())
                .unwrap()
                .traces()
                .iter()
                .cloned()
                .collect(),
        );
    }
    let once = dedup(all, &index);
    let twice = dedup(once.clone(), &index);
    assert_eq!(once, twice);
}

proptest! {
    #[test]
    fn dedup_idempotence_on_random_instances(
        entries in prop::collection::vec((0usize..3, 0usize..4, 0usize..3), 0..40)
    ) {
        let labels = ["a", "b", "c", "d"];
        let instances: Vec<TaskInstance> = entries
            .iter()
            .map(|(model, step, gold)| TaskInstance {
                kind: TaskKind::SNap,
                model_id: format!("m{model}"),
                activity_set: labels.iter().map(|l| act(l)).collect(),
                payload: TaskPayload::Prefix {
                    prefix: Trace::new(vec![act(labels[*step])]),
                },
                gold: TaskGold::Next {
                    activity: act(labels[*gold]),
                },
                seed: 0,
            })
            .collect();
        let index = LanguageIndex::new();
        let once = dedup(instances, &index);
        let twice = dedup(once.clone(), &index);
        prop_assert_eq!(once, twice);
    }
}

#[test]
fn random_dfgs_have_consistent_relations_with_edges() {
    // Relation definitions against raw edge membership, on random graphs.
    for case in 0..100u32 {
        let mut stream = rng::stream(5, &["relations", &case.to_string()]);
        let (dfg, alphabet) = random_dfg(&mut stream);
        let matrix = footprint_of_dfg(&dfg, &alphabet);
        let ordered: Vec<Activity> = alphabet.iter().cloned().collect();
        for x in &ordered {
            for y in &ordered {
                let expected = match (dfg.has_edge(x, y), dfg.has_edge(y, x)) {
                    (true, true) => Relation::Parallel,
                    (true, false) => Relation::Precedes,
                    (false, true) => Relation::Follows,
                    (false, false) => Relation::Unrelated,
                };
                assert_eq!(matrix.relation(x, y), Some(expected));
            }
        }
    }
}

#[test]
fn random_backend_coin_is_fair_enough() {
    let mut trues = 0u32;
    for i in 0..10_000u32 {
        let mut stream = rng::stream(3, &["coin", &i.to_string()]);
        if stream.gen_bool(0.5) {
            trues += 1;
        }
    }
    let share = trues as f64 / 10_000.0;
    assert!((share - 0.5).abs() < 0.02);
}
