//! Gray-box optimization with the Gene-pool Optimal Mixing Evolutionary
//! Algorithm (GOMEA).
//!
//! The crate covers additively decomposable problems with partial
//! evaluations ([`graybox`]), Max-Cut instances ([`maxcut`]), linkage tree
//! models ([`linkage`]), grouping of linkage sets into independent batches by
//! graph coloring ([`scheduling`]), a serial and a batch-parallel engine
//! ([`engine`]), and the interleaved multi-start scheme ([`ims`]).
//!
//! All fitness-carrying types are generic over [`Fitness`]; use `i64` for
//! integer weights (exact comparisons) and `f64` otherwise.

pub mod engine;
pub mod error;
pub mod graybox;
pub mod ims;
pub mod linkage;
pub mod maxcut;
pub mod rng;
pub mod scalar;
pub mod scheduling;
pub mod trace;

pub use error::{Error, Result};
pub use graybox::{
    apply_partial, build_vig, full_evaluate, partial_evaluate, EvaluatedSolution, Genotype, GrayBoxProblem,
    PartialEvaluation, Vig,
};
pub use linkage::{learn_tree_upgma, validate_fos, Fos, SimilarityMatrix};
pub use maxcut::{MaxCutInstance, WeightScheme};
pub use rng::RngStream;
pub use scalar::Fitness;
pub use scheduling::{build_lmig, welsh_powell, ColorGroups, Lmig};

/// Integer-weighted problem with exact fitness arithmetic.
pub type IntProblem = GrayBoxProblem<i64>;
/// Real-weighted problem.
pub type RealProblem = GrayBoxProblem<f64>;
pub type IntSolution = EvaluatedSolution<i64>;
pub type RealSolution = EvaluatedSolution<f64>;
pub type IntMaxCut = MaxCutInstance<i64>;
pub type RealMaxCut = MaxCutInstance<f64>;
