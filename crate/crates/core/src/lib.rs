//! Low cpsd-rank approximation of completely positive semidefinite matrices.
//!
//! Given a target `M = (⟨A_i, A_j⟩)` together with its psd witness
//! `A_1, …, A_n`, [`pipeline::approximate`] builds an entrywise `ε`-close
//! matrix `N` and an explicit witness for it whose side is bounded in terms of
//! `n`, `ε`, `ℓ = max_i tr(A_i)` and `L = max_i M_ii` only:
//!
//! 1. every factor is replaced by a sparse convex combination of rank-one
//!    atoms ([`caratheodory`]), then optionally compressed ([`gram`]);
//! 2. the eigenvectors of all factors are pushed through a single
//!    Johnson–Lindenstrauss map ([`jl`]).
//!
//! Work over factors and point pairs runs on rayon when the `parallel`
//! feature is enabled (the default). Results are identical either way.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod caratheodory;
pub mod error;
pub mod exec;
pub mod generators;
pub mod gram;
pub mod instance;
pub mod jl;
pub mod linalg;
pub mod pipeline;
pub mod rng;
pub mod tol;

pub use error::{Error, Result};
pub use exec::Exec;
pub use gram::GramRep;
pub use instance::CpsdInstance;
pub use linalg::SymMatrix;
pub use pipeline::{approximate, approximate_cp, ApproxParams, ApproxReport, Mode};
