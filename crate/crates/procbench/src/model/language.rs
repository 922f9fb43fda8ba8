//! Bounded playout of process trees into event logs.

use std::collections::BTreeSet;

use super::{EventLog, ProcessTree, Trace};

/// Bounds on playout: how often loop redo-parts may fire and how many traces
/// a language may hold before enumeration aborts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LanguageLimits {
    pub loop_redo_bound: u32,
    pub max_traces: usize,
}

impl Default for LanguageLimits {
    fn default() -> Self {
        LanguageLimits {
            loop_redo_bound: 2,
            max_traces: 5_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LanguageError {
    #[error("language exceeds the configured cap of {cap} traces")]
    TooLarge { cap: usize },
}

type TraceSet = BTreeSet<Trace>;

/// Enumerates every trace the tree can produce when each loop executes its
/// redo-part at most `limits.loop_redo_bound` times.
///
/// Traces come back deduplicated and in lexicographic label order.
pub fn enumerate_language(
    tree: &ProcessTree,
    limits: LanguageLimits,
) -> Result<EventLog, LanguageError> {
    let set = language_set(tree, &limits)?;
    Ok(EventLog::new(set.into_iter().collect()))
}

fn language_set(tree: &ProcessTree, limits: &LanguageLimits) -> Result<TraceSet, LanguageError> {
    let cap = limits.max_traces;
    match tree {
        ProcessTree::Leaf(a) => Ok([Trace::new(vec![a.clone()])].into_iter().collect()),
        ProcessTree::Silent => Ok([Trace::default()].into_iter().collect()),
        ProcessTree::Choice(cs) => {
            let mut out = TraceSet::new();
            for c in cs {
                for t in language_set(c, limits)? {
                    out.insert(t);
                    check_cap(&out, cap)?;
                }
            }
            Ok(out)
        }
        ProcessTree::Sequence(cs) => {
            let mut acc: TraceSet = [Trace::default()].into_iter().collect();
            for c in cs {
                acc = concat_product(&acc, &language_set(c, limits)?, cap)?;
            }
            Ok(acc)
        }
        ProcessTree::Parallel(cs) => {
            let mut acc: TraceSet = [Trace::default()].into_iter().collect();
            for c in cs {
                acc = shuffle_product(&acc, &language_set(c, limits)?, cap)?;
            }
            Ok(acc)
        }
        ProcessTree::Loop(do_part, redo_part) => {
            let base = language_set(do_part, limits)?;
            let round = concat_product(&language_set(redo_part, limits)?, &base, cap)?;
            let mut out = base.clone();
            check_cap(&out, cap)?;
            let mut tails = base;
            for _ in 0..limits.loop_redo_bound {
                tails = concat_product(&tails, &round, cap)?;
                for t in &tails {
                    out.insert(t.clone());
                }
                check_cap(&out, cap)?;
            }
            Ok(out)
        }
    }
}

fn check_cap(set: &TraceSet, cap: usize) -> Result<(), LanguageError> {
    if set.len() > cap {
        Err(LanguageError::TooLarge { cap })
    } else {
        Ok(())
    }
}

fn concat_product(left: &TraceSet, right: &TraceSet, cap: usize) -> Result<TraceSet, LanguageError> {
    let mut out = TraceSet::new();
    for l in left {
        for r in right {
            let joined: Trace = l.iter().chain(r.iter()).cloned().collect();
            out.insert(joined);
            check_cap(&out, cap)?;
        }
    }
    Ok(out)
}

fn shuffle_product(
    left: &TraceSet,
    right: &TraceSet,
    cap: usize,
) -> Result<TraceSet, LanguageError> {
    let mut out = TraceSet::new();
    for l in left {
        for r in right {
            interleave_into(l.steps(), r.steps(), &mut out, cap)?;
        }
    }
    Ok(out)
}

/// Inserts every interleaving of `left` and `right` into `out`, aborting as
/// soon as the set outgrows the cap.
fn interleave_into(
    left: &[super::Activity],
    right: &[super::Activity],
    out: &mut TraceSet,
    cap: usize,
) -> Result<(), LanguageError> {
    // Worklist of partial merges: (consumed-from-left, consumed-from-right, steps so far).
    let mut work = vec![(0usize, 0usize, Vec::with_capacity(left.len() + right.len()))];
    while let Some((i, j, steps)) = work.pop() {
        if i == left.len() && j == right.len() {
            out.insert(Trace::new(steps));
            check_cap(out, cap)?;
            continue;
        }
        if i < left.len() {
            let mut next = steps.clone();
            next.push(left[i].clone());
            work.push((i + 1, j, next));
        }
        if j < right.len() {
            let mut next = steps;
            next.push(right[j].clone());
            work.push((i, j + 1, next));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_tree, Activity};

    fn limits(bound: u32) -> LanguageLimits {
        LanguageLimits {
            loop_redo_bound: bound,
            max_traces: 5_000,
        }
    }

    fn trace(labels: &[&str]) -> Trace {
        labels
            .iter()
            .map(|l| Activity::new(*l).unwrap())
            .collect()
    }

    fn traces_of(text: &str, bound: u32) -> Vec<Trace> {
        enumerate_language(&parse_tree(text).unwrap(), limits(bound))
            .unwrap()
            .traces()
            .to_vec()
    }

    #[test]
    fn sequence_of_choice_yields_both_branches() {
        let got = traces_of("->( 'a', X( 'b', 'c' ) )", 2);
        assert_eq!(got, vec![trace(&["a", "b"]), trace(&["a", "c"])]);
    }

    #[test]
    fn silent_tree_yields_the_empty_trace() {
        let got = traces_of("tau", 2);
        assert_eq!(got, vec![Trace::default()]);
    }

    #[test]
    fn loop_with_bound_one_unrolls_once() {
        let got = traces_of("*( 'a', 'b' )", 1);
        assert_eq!(got, vec![trace(&["a"]), trace(&["a", "b", "a"])]);
    }

    #[test]
    fn parallel_generates_all_interleavings() {
        let got = traces_of("+( 'a', 'b' )", 2);
        assert_eq!(got, vec![trace(&["a", "b"]), trace(&["b", "a"])]);
    }

    #[test]
    fn cap_aborts_oversized_languages() {
        let tree = parse_tree("+( 'a', 'b', 'c', 'd', 'e', 'f', 'g' )").unwrap();
        let err = enumerate_language(
            &tree,
            LanguageLimits {
                loop_redo_bound: 2,
                max_traces: 100,
            },
        )
        .unwrap_err();
        assert_eq!(err, LanguageError::TooLarge { cap: 100 });
    }

    #[test]
    fn loop_bound_zero_suppresses_redo_activities() {
        let got = traces_of("*( 'a', 'b' )", 0);
        assert_eq!(got, vec![trace(&["a"])]);
    }
}
