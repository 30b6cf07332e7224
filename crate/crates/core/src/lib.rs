//! Analytic samplers.
//!
//! A Boltzmann sampler for a combinatorial class draws an object `α` with
//! probability `z^|α| / A(z)`, which requires the generating-function value
//! `A(z)`. An *analytic sampler* accepts any value `a` in the region
//! `a ≥ φ(z, a)` above the curve of `A` instead, and pays for the
//! approximation with an explicit failure event of probability
//! `1 − A(z)/a`. Conditioned on success, outputs of each size are still
//! exactly uniform.
//!
//! The crate is organised as:
//!
//! - [`spec`]: the specification DSL, its AST and well-foundedness checks;
//! - [`grammar`]: the validated, compiled form used everywhere else;
//! - [`oracle`]: φ evaluation, validity checks, exact coefficients,
//!   generating-function values and failure rates;
//! - [`sampler`]: random draws, the generic sampler with its failure
//!   channel, size targeting, Cayley trees and canonical output;
//! - [`tuning`]: locating the singularity of simply generated trees by
//!   maximising `y/Φ(y)`, and the bisection baseline;
//! - [`otter`]: the level-truncated pipeline for Otter trees;
//! - [`stats`]: goodness-of-fit helpers used to check exactness.
//!
//! ```
//! use anasamp::{Coordinates, Grammar, Sampler, seeded_rng};
//!
//! let g = Grammar::parse("B = atom + atom*B*B;").unwrap();
//! // (0.4, 0.6) lies above the curve b = z + z·b²
//! let coords = Coordinates::new(0.4).with_value("B", 0.6);
//! let sampler = Sampler::new(&g, &coords).unwrap();
//! let mut rng = seeded_rng(7);
//! let draw = sampler.sample_with_retry("B", &mut rng, 1_000, 10_000).unwrap();
//! assert_eq!(draw.tree.size() % 2, 1);
//! ```

// `!(x > 0.0)` style checks are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod grammar;
pub mod oracle;
pub mod otter;
pub mod sampler;
pub mod spec;
pub mod stats;
pub mod tuning;

pub use grammar::{ClassId, Grammar, GrammarError};
pub use oracle::{check_validity, Coordinates, GfResult, Validity, Violation};
pub use sampler::{seeded_rng, Outcome, RandomSource, SampleError, Sampler, TermTree};
pub use spec::{parse_spec, validate_spec, CombSpec, Expr};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/specifications.md")]
    mod specifications {}
    #[doc = include_str!("../../../book/src/validity.md")]
    mod validity {}
    #[doc = include_str!("../../../book/src/sampling.md")]
    mod sampling {}
    #[doc = include_str!("../../../book/src/cayley.md")]
    mod cayley {}
    #[doc = include_str!("../../../book/src/tuning.md")]
    mod tuning {}
    #[doc = include_str!("../../../book/src/otter.md")]
    mod otter {}
    #[doc = include_str!("../../../book/src/exactness.md")]
    mod exactness {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../README.md")]
    mod readme {}
}
