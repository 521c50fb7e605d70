//! Confidential discrimination of geometrically uniform quantum states.
//!
//! The pipeline builds an Abelian-symmetric state set, solves for an optimal
//! inconclusive measurement, lifts it to a projective measurement on a
//! `2MR`-dimensional extension, and distributes that measurement over `N`
//! observers so that no coalition of `N-1` of them learns anything about the
//! transmitted message while the receiver recovers the optimal statistics.

pub mod config;
pub mod dilation;
pub mod error;
pub mod measurement;
pub mod numerics;
pub mod pipeline;
pub mod protocol;
pub mod report;
pub mod sim;
pub mod states;
pub mod symmetry;

pub use error::{Error, Result};
