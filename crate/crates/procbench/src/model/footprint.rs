//! Footprint matrices: pairwise behavioral relations between activities.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{dfg_of_log, enumerate_language, Activity, Dfg, LanguageError, LanguageLimits, ProcessTree};

/// How two activities relate under the directly-follows relation `>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// x > y and not y > x.
    Precedes,
    /// y > x and not x > y.
    Follows,
    /// Both x > y and y > x.
    Parallel,
    /// Neither direction.
    Unrelated,
}

/// A square matrix of [`Relation`]s over an ordered alphabet, defined for all
/// pairs including the diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FootprintMatrix {
    alphabet: Vec<Activity>,
    cells: Vec<Relation>,
}

impl FootprintMatrix {
    pub fn alphabet(&self) -> &[Activity] {
        &self.alphabet
    }

    pub fn size(&self) -> usize {
        self.alphabet.len()
    }

    pub fn relation_at(&self, row: usize, col: usize) -> Relation {
        self.cells[row * self.alphabet.len() + col]
    }

    pub fn relation(&self, x: &Activity, y: &Activity) -> Option<Relation> {
        let row = self.alphabet.iter().position(|a| a == x)?;
        let col = self.alphabet.iter().position(|a| a == y)?;
        Some(self.relation_at(row, col))
    }
}

/// Classifies every activity pair of `alphabet` from the directly-follows
/// edges of `dfg`. Edges with an endpoint outside the alphabet are ignored.
pub fn footprint_of_dfg(dfg: &Dfg, alphabet: &BTreeSet<Activity>) -> FootprintMatrix {
    let alphabet: Vec<Activity> = alphabet.iter().cloned().collect();
    let n = alphabet.len();
    let mut cells = vec![Relation::Unrelated; n * n];
    for (i, x) in alphabet.iter().enumerate() {
        for (j, y) in alphabet.iter().enumerate() {
            let forward = dfg.has_edge(x, y);
            let backward = dfg.has_edge(y, x);
            cells[i * n + j] = match (forward, backward) {
                (true, true) => Relation::Parallel,
                (true, false) => Relation::Precedes,
                (false, true) => Relation::Follows,
                (false, false) => Relation::Unrelated,
            };
        }
    }
    FootprintMatrix { alphabet, cells }
}

/// Footprint of a process tree via bounded playout: language, then DFG, then
/// matrix over the given alphabet.
pub fn footprint_of_tree(
    tree: &ProcessTree,
    alphabet: &BTreeSet<Activity>,
    limits: LanguageLimits,
) -> Result<FootprintMatrix, LanguageError> {
    let log = enumerate_language(tree, limits)?;
    Ok(footprint_of_dfg(&dfg_of_log(&log), alphabet))
}
