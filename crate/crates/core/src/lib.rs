//! Pointing-jitter fading for narrow-beam terahertz links.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beam;
pub mod commands;
pub mod dsp;
pub mod error;
pub mod io;
pub mod misalignment;
pub mod motion;
pub mod plot;
pub mod quadrature;
pub mod rng;
pub mod scenario;
pub mod signal;
pub mod special;
pub mod stats;

pub use error::{Error, Result};

/// Book chapters, compiled so their snippets stay in step with the API.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/beam.md")]
    mod beam {}
    #[doc = include_str!("../../../book/src/misalignment.md")]
    mod misalignment {}
    #[doc = include_str!("../../../book/src/motion.md")]
    mod motion {}
    #[doc = include_str!("../../../book/src/signal.md")]
    mod signal {}
    #[doc = include_str!("../../../book/src/statistics.md")]
    mod statistics {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
