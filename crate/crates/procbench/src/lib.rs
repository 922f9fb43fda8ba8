//! Benchmark toolchain for semantics-aware process mining with language
//! models.
//!
//! The crate turns a corpus of process trees into labeled instances for five
//! control-flow tasks, compiles them into an instruction dataset with
//! controlled variation, builds leave-one-group-out folds, runs inference
//! against pluggable backends, and scores outputs with macro F1 and
//! footprint-based fitness.
//!
//! See the book under `book/` for a guided tour, or the `procbench` binary
//! for the pipeline CLI.

pub mod config;
pub mod eval;
pub mod folds;
pub mod gateway;
pub mod instructions;
pub mod jsonl;
pub mod manifest;
pub mod model;
pub mod pipeline;
pub mod rng;
pub mod taskgen;

#[cfg(doctest)]
mod book;
