//! A numerical laboratory for PAC-Bayes analysis of threshold learning on
//! the finite line `{1, ..., n}`.
//!
//! The crate builds the objects of the PAC-Bayes lower-bound argument for
//! one-dimensional thresholds and checks them on small domains: Gibbs
//! learners, equivalence-types and homogeneity, sensitive indices, the
//! binary-search events behind the KL certificate, and Monte-Carlo
//! experiments showing the KL-versus-loss trade-off.

pub mod combinatorics;
pub mod domain;
pub mod error;
pub mod harness;
pub mod homogeneity;
pub mod learners;
pub mod pacbayes;
pub mod seeding;
pub mod sensitivity;

pub use error::{LabError, Result};
