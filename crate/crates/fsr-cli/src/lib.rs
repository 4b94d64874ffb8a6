//! File formats, result documents, benchmarks, and the `fsr` binary for the
//! `fsr-core` pruning engine.

pub mod bench;
pub mod cli;
pub mod document;
pub mod tensor;
