//! Shared test support: an independent brute-force language oracle and
//! random model generators. The oracle deliberately re-implements playout
//! from scratch (plain vectors, naive recursion) so it shares nothing with
//! the library's enumeration path.

#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use procbench::model::{Activity, Dfg, ProcessTree, Trace};

pub fn act(label: &str) -> Activity {
    Activity::new(label).unwrap()
}

pub fn trace(labels: &[&str]) -> Trace {
    labels.iter().map(|l| act(l)).collect()
}

pub fn labels_of(t: &Trace) -> Vec<String> {
    t.iter().map(|a| a.label().to_string()).collect()
}

/// Every interleaving of two label sequences, by naive recursion.
fn interleavings(left: &[String], right: &[String]) -> Vec<Vec<String>> {
    if left.is_empty() {
        return vec![right.to_vec()];
    }
    if right.is_empty() {
        return vec![left.to_vec()];
    }
    let mut out = Vec::new();
    for mut merged in interleavings(&left[1..], right) {
        merged.insert(0, left[0].clone());
        out.push(merged);
    }
    for mut merged in interleavings(left, &right[1..]) {
        merged.insert(0, right[0].clone());
        out.push(merged);
    }
    out
}

fn cross_concat(prefixes: &[Vec<String>], suffixes: &[Vec<String>]) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    for p in prefixes {
        for s in suffixes {
            let mut joined = p.clone();
            joined.extend(s.iter().cloned());
            out.push(joined);
        }
    }
    out
}

/// Brute-force enumeration of the bounded language as label sequences:
/// the reference acceptor for everything the generators emit.
pub fn oracle_language(tree: &ProcessTree, redo_bound: u32) -> BTreeSet<Vec<String>> {
    fn walk(tree: &ProcessTree, redo_bound: u32) -> Vec<Vec<String>> {
        match tree {
            ProcessTree::Leaf(a) => vec![vec![a.label().to_string()]],
            ProcessTree::Silent => vec![vec![]],
            ProcessTree::Choice(children) => {
                let mut out = Vec::new();
                for child in children {
                    out.extend(walk(child, redo_bound));
                }
                out
            }
            ProcessTree::Sequence(children) => {
                let mut acc: Vec<Vec<String>> = vec![vec![]];
                for child in children {
                    acc = cross_concat(&acc, &walk(child, redo_bound));
                }
                acc
            }
            ProcessTree::Parallel(children) => {
                let mut acc: Vec<Vec<String>> = vec![vec![]];
                for child in children {
                    let child_traces = walk(child, redo_bound);
                    let mut next = Vec::new();
                    for a in &acc {
                        for c in &child_traces {
                            next.extend(interleavings(a, c));
                        }
                    }
                    acc = next;
                }
                acc
            }
            ProcessTree::Loop(do_part, redo_part) => {
                let body = walk(do_part, redo_bound);
                let redo = walk(redo_part, redo_bound);
                let mut out = body.clone();
                let mut tails = body.clone();
                for _ in 0..redo_bound {
                    tails = cross_concat(&cross_concat(&tails, &redo), &body);
                    out.extend(tails.clone());
                }
                out
            }
        }
    }
    walk(tree, redo_bound).into_iter().collect()
}

pub fn oracle_accepts(language: &BTreeSet<Vec<String>>, t: &Trace) -> bool {
    language.contains(&labels_of(t))
}

/// Eventually-follows pairs over the whole oracle language.
pub fn oracle_ef_pairs(language: &BTreeSet<Vec<String>>) -> BTreeSet<(String, String)> {
    let mut pairs = BTreeSet::new();
    for t in language {
        for i in 0..t.len() {
            for j in i + 1..t.len() {
                pairs.insert((t[i].clone(), t[j].clone()));
            }
        }
    }
    pairs
}

/// True when `prefix ++ [next]` starts some trace of the language.
pub fn oracle_continues(language: &BTreeSet<Vec<String>>, prefix: &Trace, next: &Activity) -> bool {
    let mut extended = labels_of(prefix);
    extended.push(next.label().to_string());
    language
        .iter()
        .any(|t| t.len() >= extended.len() && t[..extended.len()] == extended[..])
}

const LABEL_POOL: [&str; 8] = [
    "register request",
    "check documents",
    "approve request",
    "reject request",
    "notify customer",
    "archive case",
    "escalate case",
    "update records",
];

/// Random process tree: depth at most `max_depth`, activities drawn from an
/// eight-label pool.
pub fn random_tree(rng: &mut ChaCha8Rng, max_depth: u32) -> ProcessTree {
    if max_depth == 0 || rng.gen_bool(0.35) {
        return if rng.gen_bool(0.12) {
            ProcessTree::Silent
        } else {
            ProcessTree::Leaf(act(LABEL_POOL[rng.gen_range(0..LABEL_POOL.len())]))
        };
    }
    random_operator_tree(rng, max_depth)
}

/// Random tree whose root is always an operator, so most samples have the
/// two or more activities the generators need.
pub fn random_model_tree(rng: &mut ChaCha8Rng, max_depth: u32) -> ProcessTree {
    random_operator_tree(rng, max_depth.max(1))
}

fn random_operator_tree(rng: &mut ChaCha8Rng, max_depth: u32) -> ProcessTree {
    match rng.gen_range(0..4) {
        0 => {
            let n = rng.gen_range(2..=3);
            ProcessTree::Sequence((0..n).map(|_| random_tree(rng, max_depth - 1)).collect())
        }
        1 => {
            let n = rng.gen_range(2..=3);
            ProcessTree::Choice((0..n).map(|_| random_tree(rng, max_depth - 1)).collect())
        }
        2 => ProcessTree::Parallel(vec![
            random_tree(rng, max_depth - 1),
            random_tree(rng, max_depth - 1),
        ]),
        _ => ProcessTree::Loop(
            Box::new(random_tree(rng, max_depth - 1)),
            Box::new(random_tree(rng, max_depth - 1)),
        ),
    }
}

/// Random DFG over 2..=8 activities with a coin per ordered pair.
pub fn random_dfg(rng: &mut ChaCha8Rng) -> (Dfg, BTreeSet<Activity>) {
    let n = rng.gen_range(2..=LABEL_POOL.len());
    let nodes: BTreeSet<Activity> = LABEL_POOL[..n].iter().map(|l| act(l)).collect();
    let mut edges = BTreeSet::new();
    for x in &nodes {
        for y in &nodes {
            if rng.gen_bool(0.25) {
                edges.insert((x.clone(), y.clone()));
            }
        }
    }
    (Dfg::new(nodes.clone(), edges), nodes)
}
