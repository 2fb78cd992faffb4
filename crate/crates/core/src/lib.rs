//! Gaussian-space analysis toolkit: Hermite expansions and tensors, exact
//! polynomial algebra, the half-space verifier simulation, the assignment
//! decoder and concentration experiments.

pub mod conclab;
pub mod decoder;
pub mod error;
pub mod functions;
pub mod geom;
pub mod hermite;
pub mod poly;
pub mod rng;
pub mod sni;
pub mod ugsim;
pub mod stats;

pub use error::{Error, Result};
