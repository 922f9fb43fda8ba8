//! Macro F1 over an explicit class set.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::EvalError;

/// Per-class counts and derived scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// How often the class occurs as gold.
    pub gold_count: usize,
    /// How often it was predicted.
    pub predicted_count: usize,
    /// True positives.
    pub correct: usize,
}

/// Unweighted mean of per-class F1 scores over `classes`.
///
/// A prediction of `None` (unparseable or missing) matches no class: it
/// costs the gold class recall and contributes no true positive anywhere.
/// Precision, recall, and F1 are 0 where their denominators vanish.
pub fn macro_f1(
    golds: &[String],
    preds: &[Option<String>],
    classes: &BTreeSet<String>,
) -> Result<(f64, BTreeMap<String, ClassScore>), EvalError> {
    if golds.len() != preds.len() {
        return Err(EvalError::LengthMismatch {
            golds: golds.len(),
            preds: preds.len(),
        });
    }
    if classes.is_empty() {
        return Err(EvalError::EmptyClasses);
    }

    let mut per_class: BTreeMap<String, ClassScore> = classes
        .iter()
        .map(|c| {
            (
                c.clone(),
                ClassScore {
                    precision: 0.0,
                    recall: 0.0,
                    f1: 0.0,
                    gold_count: 0,
                    predicted_count: 0,
                    correct: 0,
                },
            )
        })
        .collect();

    for (gold, pred) in golds.iter().zip(preds) {
        if let Some(score) = per_class.get_mut(gold) {
            score.gold_count += 1;
        }
        if let Some(pred) = pred {
            if let Some(score) = per_class.get_mut(pred) {
                score.predicted_count += 1;
                if pred == gold {
                    score.correct += 1;
                }
            }
        }
    }

    let mut sum = 0.0;
    for score in per_class.values_mut() {
        score.precision = ratio(score.correct, score.predicted_count);
        score.recall = ratio(score.correct, score.gold_count);
        score.f1 = if score.precision + score.recall > 0.0 {
            2.0 * score.precision * score.recall / (score.precision + score.recall)
        } else {
            0.0
        };
        sum += score.f1;
    }
    Ok((sum / classes.len() as f64, per_class))
}

fn ratio(numerator: usize, denominator: usize) -> f64 {
    if denominator == 0 {
        0.0
    } else {
        numerator as f64 / denominator as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn classes(names: &[&str]) -> BTreeSet<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn strs(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn somes(names: &[&str]) -> Vec<Option<String>> {
        names.iter().map(|s| Some(s.to_string())).collect()
    }

    #[test]
    fn all_correct_binary_scores_one() {
        let golds = strs(&["True", "False", "True"]);
        let preds = somes(&["True", "False", "True"]);
        let (value, _) = macro_f1(&golds, &preds, &classes(&["True", "False"])).unwrap();
        assert!((value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_true_on_balanced_binary_scores_one_third() {
        let golds: Vec<String> = (0..1000)
            .map(|i| if i % 2 == 0 { "True" } else { "False" }.to_string())
            .collect();
        let preds: Vec<Option<String>> = (0..1000).map(|_| Some("True".to_string())).collect();
        let (value, per_class) = macro_f1(&golds, &preds, &classes(&["True", "False"])).unwrap();
        // True: precision 1/2, recall 1 => F1 = 2/3; False: F1 = 0.
        assert!((value - 1.0 / 3.0).abs() < 1e-12);
        assert!((per_class["True"].f1 - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(per_class["False"].f1, 0.0);
    }

    #[test]
    fn unparseable_costs_recall_but_never_counts_as_a_positive() {
        let golds = strs(&["True", "True"]);
        let preds = vec![Some("True".to_string()), None];
        let (_, per_class) = macro_f1(&golds, &preds, &classes(&["True", "False"])).unwrap();
        assert_eq!(per_class["True"].correct, 1);
        assert_eq!(per_class["True"].gold_count, 2);
        assert!((per_class["True"].recall - 0.5).abs() < 1e-12);
        assert!((per_class["True"].precision - 1.0).abs() < 1e-12);
        assert_eq!(per_class["False"].predicted_count, 0);
    }

    #[test]
    fn predicted_but_never_gold_labels_do_not_join_the_class_set() {
        let golds = strs(&["a", "b"]);
        let preds = somes(&["a", "z"]);
        let (value, per_class) = macro_f1(&golds, &preds, &classes(&["a", "b"])).unwrap();
        assert_eq!(per_class.len(), 2);
        // a is perfect, b has recall 0.
        assert!((value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        assert!(matches!(
            macro_f1(&strs(&["a"]), &somes(&["a", "b"]), &classes(&["a"])),
            Err(EvalError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn empty_class_set_is_an_error() {
        assert!(matches!(
            macro_f1(&strs(&["a"]), &somes(&["a"]), &BTreeSet::new()),
            Err(EvalError::EmptyClasses)
        ));
    }
}
