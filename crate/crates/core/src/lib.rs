//! Cascading-failure analysis for power grids.
//!
//! The crate covers the full analysis path: a DC power-flow cascade
//! simulator over [`grid::GridNetwork`]s, the dual (line id, failed
//! generation) sequence representation with input/target masks, a small
//! reverse-mode autodiff engine and the encoder-only sequence model built
//! on it, attention extraction into initiative/passive correlation
//! matrices with greedy coverage ranking, and the graph-theoretic
//! baseline rankers (betweenness, current-flow betweenness, LODF).
//!
//! Everything here is pure computation over owned buffers; file formats
//! and the command-line driver live in the companion `gridcascade` crate.
//! The crate is `no_std`-compatible (`alloc` required): build with
//! `--no-default-features --features libm` to drop the standard library.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod attention;
pub mod baselines;
pub mod cascade;
pub mod dual;
pub mod eval;
pub mod flow;
pub mod grid;
pub mod model;
pub mod nn;

mod seed;

pub use seed::{derive_seed, seeded_rng};
