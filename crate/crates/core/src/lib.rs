//! Simulation and certification of the entanglement dimensionality (Schmidt
//! number) of bipartite d-level quantum states from Haar-randomized
//! measurements.
//!
//! The crate covers the full pipeline: qudit linear algebra and su(d)
//! generator bases ([`qudit`]), the cross-correlation matrix and its
//! trace-norm criterion ([`correlation`]), seeded Haar/phase sampling and the
//! dephasing ensemble model ([`sampling`]), randomized-correlator simulation
//! and moment estimation with uncertainties ([`randmeas`]), Schmidt-number
//! boundary curves in the moment plane ([`boundary`]), MUB chi-square
//! tomography ([`tomography`]), the two-basis DFT witness ([`witness`]),
//! dataset/config schemas ([`io`]), and the end-to-end experiment pipeline
//! ([`pipeline`]).

pub mod boundary;
pub mod correlation;
mod error;
pub mod io;
pub mod matrix;
pub mod pipeline;
pub mod qudit;
pub mod randmeas;
pub mod sampling;
pub mod tomography;
pub mod witness;

pub use error::{Error, Result};
pub use matrix::ComplexMatrix;
pub use qudit::{DensityMatrix, SuBasis, Unitary};
