//! Design-model to test-script toolchain: ingest class and sequence models,
//! compile them to predicate/transition nets, explore the nets and derive
//! model-level tests and test-script skeletons.

pub mod bridge;
pub mod codegen;
pub mod expr;
pub mod fixtures;
pub mod ingest;
pub mod model;
pub mod netgen;
pub mod petri;
pub mod pipeline;
pub mod pnml;
pub mod sim;
pub mod testgen;
#[cfg(any(test, feature = "testkit"))]
pub mod testkit;
