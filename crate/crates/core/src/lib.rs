//! Counterattack success modelling on soccer tracking data.
//!
//! This crate holds the pure algorithmic pieces: domain types for tracking and
//! event streams, rule-based counterattack detection, frame-to-graph
//! conversion, a crystal-graph-convolution binary classifier with exact
//! reverse-mode gradients, evaluation metrics, permutation feature importance
//! and what-if trajectory search. It is `no_std` (with `alloc`) when the
//! default `std` feature is disabled; file formats, the CLI and the HTTP
//! service live in the `counter-gnn` crate.

#![cfg_attr(not(any(test, feature = "std")), no_std)]
#![cfg_attr(test, allow(clippy::approx_constant))]

extern crate alloc;

pub mod detector;
pub mod error;
pub mod eval;
pub mod gnn;
pub mod graph;
pub mod importance;
pub(crate) mod math;
pub mod synth;
pub mod tracking;
pub mod whatif;

pub use error::{Error, Result};
