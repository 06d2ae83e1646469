//! Recovering the condensation of a linear non-Gaussian cyclic SCM.

pub mod error;
pub mod graph;
pub mod harness;
pub mod io;
pub mod ica;
pub mod lattice;
pub mod linalg;
pub mod metrics;
pub mod recover;
pub mod rng;
pub mod scm;

pub use error::{Error, Result};
pub use graph::{condense, tarjan_scc, Condensation, DirectedGraph, Partition};
pub use recover::{recover_condensation, RecoveryConfig, RecoveryResult, SelectionMode};
pub use scm::{generate_scm, GeneratorConfig, Noise, NoiseFamily, Regime, SampleMatrix, ScmSpec, WeightedAdjacency};
