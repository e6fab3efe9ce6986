//! Nonnegative tensor rank workbench.
//!
//! Dense tensors and rank-one decompositions, multi-start alternating solvers for
//! best (nonnegative) rank-`r` approximation with first-order optimality checks,
//! certified nonnegative-rank bounds, identifiability and defectivity tests, and the
//! support-pattern (cell) layer over nonnegative decompositions.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, Monte Carlo
//! experiments and the command-line front end live in the `nnrank` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod assignment;
pub mod cells;
pub mod decomposition;
mod error;
pub mod identifiability;
pub mod kkt;
pub mod linalg;
pub mod nnls;
pub mod poly;
pub mod rank;
pub mod rng;
pub mod solvers;
pub mod tensor;

pub use cells::{CellPattern, Uni23Screen};
pub use decomposition::{Decomposition, MatchResult, Mode, RankOneTerm};
pub use error::{Error, Result};
pub use identifiability::{GenericRankReport, IdentifiabilityReport, UniquenessVerdict, Verdict};
pub use kkt::KktReport;
pub use rank::RankEstimate;
pub use solvers::{ApproximationResult, SolverConfig};
pub use tensor::{Shape, Tensor};
