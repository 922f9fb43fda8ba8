//! Runs the book's code snippets as doctests so the guide stays in sync with
//! the library.

#[doc = include_str!("../../../book/src/introduction.md")]
pub struct Introduction;

#[doc = include_str!("../../../book/src/process-models.md")]
pub struct ProcessModels;

#[doc = include_str!("../../../book/src/tasks.md")]
pub struct Tasks;

#[doc = include_str!("../../../book/src/instructions.md")]
pub struct Instructions;

#[doc = include_str!("../../../book/src/folds.md")]
pub struct Folds;

#[doc = include_str!("../../../book/src/inference.md")]
pub struct Inference;

#[doc = include_str!("../../../book/src/evaluation.md")]
pub struct Evaluation;

#[doc = include_str!("../../../book/src/pipeline.md")]
pub struct Pipeline;
