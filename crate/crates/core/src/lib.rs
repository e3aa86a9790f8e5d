//! Classical communication-assisted models of a planar EPR-Bohm experiment.
//!
//! Alice and Bob share one or two random directions in the plane and Alice
//! may send Bob a single bit (or a few bits) per trial. Depending on how the
//! bit is chosen, the resulting correlation function ranges from the linear
//! local law through cosine-like curves up to the algebraic CHSH maximum.
//!
//! The crate is organized bottom-up:
//!
//! - [`math`]: angle newtypes, sign and step conventions, planar resultants.
//! - [`protocols`]: per-trial Alice/Bob state machines.
//! - [`analytics`]: closed-form correlation laws and integral oracles.
//! - [`montecarlo`]: seeded, thread-count independent estimation.
//! - [`bell`]: the CHSH functional and bound classification.
//! - [`report`]: CSV and SVG output.
//! - [`verify`]: the identity and reproduction checks behind `bellcomm verify`.

pub mod analytics;
pub mod bell;
mod error;
pub mod math;
pub mod montecarlo;
pub mod protocols;
pub mod quadrature;
pub mod report;
pub mod verify;

pub use error::{Error, Result};
