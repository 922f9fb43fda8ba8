//! Footprint-based fitness between a gold model and a discovered one.

use std::collections::BTreeSet;

use crate::model::{
    footprint_of_dfg, footprint_of_tree, Activity, Dfg, FootprintMatrix, LanguageError,
    LanguageLimits, ProcessTree,
};

/// Fraction of off-diagonal activity pairs with identical behavioral
/// relations. Both matrices must range over the same alphabet. A
/// single-activity alphabet has no off-diagonal pairs and counts as a
/// perfect match.
pub fn footprint_match_fraction(gold: &FootprintMatrix, discovered: &FootprintMatrix) -> f64 {
    debug_assert_eq!(gold.alphabet(), discovered.alphabet());
    let n = gold.size();
    if n <= 1 {
        return 1.0;
    }
    let mut matching = 0usize;
    let mut total = 0usize;
    for row in 0..n {
        for col in row + 1..n {
            total += 1;
            if gold.relation_at(row, col) == discovered.relation_at(row, col) {
                matching += 1;
            }
        }
    }
    matching as f64 / total as f64
}

/// Fitness of a discovered DFG against a gold DFG over the gold alphabet.
/// Discovered activities outside the alphabet are ignored; gold activities
/// the discovered graph never touches stay unrelated to everything. An
/// unparseable discovery (`None`) scores 0.
pub fn dfg_fitness(gold: &Dfg, alphabet: &BTreeSet<Activity>, discovered: Option<&Dfg>) -> f64 {
    let Some(discovered) = discovered else {
        return 0.0;
    };
    let gold_matrix = footprint_of_dfg(gold, alphabet);
    let discovered_matrix = footprint_of_dfg(discovered, alphabet);
    footprint_match_fraction(&gold_matrix, &discovered_matrix)
}

/// Fitness of a discovered process tree against a gold tree, both rendered
/// into footprints by bounded playout over the gold alphabet. A discovered
/// tree whose playout exceeds the trace cap scores 0, like an unparseable
/// one; a failing gold playout is an error, since gold models were
/// enumerable at generation time.
pub fn tree_fitness(
    gold: &ProcessTree,
    alphabet: &BTreeSet<Activity>,
    discovered: Option<&ProcessTree>,
    limits: LanguageLimits,
) -> Result<f64, LanguageError> {
    let gold_matrix = footprint_of_tree(gold, alphabet, limits)?;
    let Some(discovered) = discovered else {
        return Ok(0.0);
    };
    let Ok(discovered_matrix) = footprint_of_tree(discovered, alphabet, limits) else {
        return Ok(0.0);
    };
    Ok(footprint_match_fraction(&gold_matrix, &discovered_matrix))
}
