//! A one-dimensional hidden-variable model of a qubit, together with the
//! numerical verification machinery around it: the generalized two-delta
//! model family, a full-sphere patch extension, a non-Markovianity
//! detector, symplectic group checks, and round-off resource analysis.

pub mod base_model;
pub mod error;
pub mod family;
pub mod geometry;
pub mod group_checks;
pub mod markov;
pub mod patch;
pub mod resource;
pub mod rng;

pub use error::{Error, Result};
