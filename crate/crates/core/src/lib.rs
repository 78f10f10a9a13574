//! Constrained evolutionary optimization with update rules written in a
//! small vector DSL and designed by an LLM in an outer meta-training loop.

pub mod bench;
pub mod constraint;
pub mod engine;
pub mod llm;
pub mod meta;
pub mod problems;
pub mod rng;
pub mod ruledsl;
