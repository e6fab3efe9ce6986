//! File formats, seeded Monte Carlo experiments and report output on top of
//! `nnrank-core`.

pub mod experiments;
pub mod io;
pub mod output;

pub use nnrank_core as core;
