//! Coverage-driven unit test generation for a small C dialect.

pub mod cfg;
pub mod coverage;
pub mod dataflow;
pub mod engine;
pub mod frontend;
pub mod memmodel;
pub mod pipeline;
pub mod solver;
pub mod testgen;
