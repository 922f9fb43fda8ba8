//! Corpus files: one process tree per line, `model-id<TAB>tree-text`.

use std::collections::BTreeSet;
use std::path::Path;

use super::{parse_tree, ParseError, ProcessTree};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusModel {
    pub id: String,
    pub tree: ProcessTree,
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("line {line}: missing tab separator between model id and tree")]
    MissingTab { line: usize },
    #[error("line {line}: empty model id")]
    EmptyId { line: usize },
    #[error("line {line}: duplicate model id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: {source}")]
    Tree {
        line: usize,
        #[source]
        source: ParseError,
    },
    #[error("reading corpus: {0}")]
    Io(#[from] std::io::Error),
}

/// Parses corpus text. Blank lines are skipped; model ids must be unique.
pub fn read_corpus(text: &str) -> Result<Vec<CorpusModel>, CorpusError> {
    let mut models = Vec::new();
    let mut seen = BTreeSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let (id, tree_text) = raw
            .split_once('\t')
            .ok_or(CorpusError::MissingTab { line })?;
        let id = id.trim();
        if id.is_empty() {
            return Err(CorpusError::EmptyId { line });
        }
        if !seen.insert(id.to_string()) {
            return Err(CorpusError::DuplicateId {
                line,
                id: id.to_string(),
            });
        }
        let tree = parse_tree(tree_text).map_err(|source| CorpusError::Tree { line, source })?;
        models.push(CorpusModel {
            id: id.to_string(),
            tree,
        });
    }
    Ok(models)
}

pub fn read_corpus_file(path: &Path) -> Result<Vec<CorpusModel>, CorpusError> {
    read_corpus(&std::fs::read_to_string(path)?)
}
