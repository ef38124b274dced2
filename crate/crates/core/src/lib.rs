//! Photon-count statistics for two U(1)-invariant optical sources observed by
//! an array of `M` photodetectors.
//!
//! The crate is organised along the physics:
//!
//! * [`sources`] builds single-mode states (number, binomial, Poissonian,
//!   super-Poissonian, thermal, mixtures) and two-mode source pairs.
//! * [`detectors`] holds the 2x2 detector matrices, the mean-field
//!   trajectory and the isometric dilation used by the exact Fock engine.
//! * [`engines`] evaluates joint count distributions `P(n_1, ..., n_M)`.
//! * [`scaling`] implements binomial thinning of sources against rescaled
//!   detectors.
//! * [`analysis`] extracts marginals, conditionals, phase estimates, peak
//!   manifolds and samples.
//!
//! Probabilities are carried in the log domain wherever magnitudes can leave
//! the range of `f64`.

pub mod analysis;
pub mod detectors;
pub mod engines;
pub mod error;
pub mod logmath;
pub mod quadrature;
pub mod scaling;
pub mod sources;

pub use error::{Error, Result};
