//! Phase-space quantum optics of high-harmonic generation.
//!
//! The crate models a quantum light field driving high-harmonic generation
//! in a one-band solid, using the diagonal coherent-state mixture built from
//! the Husimi function of the driving state. It provides the special
//! functions, phase-plane quadrature, field observables, the one-band
//! emission model, and the closed-form error analysis of the approximation.

pub mod app_hhg;
pub mod cli;
pub mod config;
pub mod error;
pub mod observables;
pub mod oneband;
pub mod phase_space;
pub mod quadrature;
pub mod specfun;

pub use error::{Error, Result};

// Keep the guide's code samples compiling: every chapter is attached as a
// doctest-only module so `cargo test` runs the snippets embedded in the book.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/phase-space.md")]
    mod phase_space {}
    #[doc = include_str!("../../../book/src/observables.md")]
    mod observables {}
    #[doc = include_str!("../../../book/src/oneband.md")]
    mod oneband {}
    #[doc = include_str!("../../../book/src/error-analysis.md")]
    mod error_analysis {}
    #[doc = include_str!("../../../book/src/wigner.md")]
    mod wigner {}
}
