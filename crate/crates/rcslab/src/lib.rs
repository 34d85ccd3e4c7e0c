//! rcslab: a desk-scale laboratory for random circuit sampling.
//!
//! The crate simulates small quantum circuits exactly, draws them from
//! Haar-based gate ensembles (including perturbed and Taylor-truncated
//! families whose entries are polynomials in the perturbation strength),
//! runs worst-to-average-case reductions by polynomial interpolation and
//! error-correcting decoding, and scores sample sets with cross-entropy,
//! heavy-output, and distribution-shape measures.

extern crate openblas_src;

pub mod circuit;
pub mod dist;
pub mod ensemble;
pub mod error;
pub mod field;
pub mod hp;
pub mod perm;
pub mod poly;
pub mod reduction;
pub mod rng;
pub mod sim;
pub mod stats;

mod util;

pub use error::{Error, Result};

/// Compile and run every Rust snippet in the guide as a doctest, so the
/// book cannot drift from the crate: `cargo test --doc` exercises it.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/circuits.md")]
    mod circuits {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/ensembles.md")]
    mod ensembles {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
    #[doc = include_str!("../../../book/src/counterexamples.md")]
    mod counterexamples {}
    #[doc = include_str!("../../../book/src/reduction.md")]
    mod reduction {}
    #[doc = include_str!("../../../book/src/permanents.md")]
    mod permanents {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
