//! Accelerated power methods for the limiting probability distribution of
//! higher-order Markov chains, `x = Px^{m-1}` on the probability simplex,
//! and for multilinear PageRank.
//!
//! - [`tensor`]: transition tensors, contractions, simplex projection.
//! - [`conditions`]: `delta_m`, `eta_m` and the derived convergence bounds.
//! - [`solvers`]: HOPM, GEAP, RHOPM, HOPMM-I/II and QEHOPM.
//! - [`pagerank`]: the damped operator and a random instance generator.
//! - [`bench`], [`fixtures`]: reference tensors and experiment campaigns.

// `!(a > b)` comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod conditions;
pub mod error;
pub mod fixtures;
pub mod io;
pub mod pagerank;
pub mod solvers;
pub mod tensor;

pub use conditions::{condition_report, delta_m, ConditionReport};
pub use error::{Error, Result};
pub use pagerank::{gen_random_tensor, pagerank_apply, solve_pagerank, PageRankProblem};
pub use solvers::{
    quadratic_extrapolation, solve, ExtrapolationCoeffs, FixedPointMap, Method, SolveReport,
    SolverConfig,
};
pub use tensor::{proj, ContractionMatrix, ProbVector, StochasticTensor};
