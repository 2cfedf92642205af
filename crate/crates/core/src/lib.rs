//! Numerical laboratory for the discrete Gaussian free field.
//!
//! The crate discretises planar domains on a square lattice, assembles and
//! factorises the Dirichlet Laplacian, draws exact GFF samples, and runs
//! Monte-Carlo checks of the field's structural properties: circle and
//! harmonic averages, the domain Markov decomposition, the identification of
//! the two-point function with the Green's function, Wick moments, conformal
//! invariance, and the one-dimensional Brownian-bridge characterisation.
//!
//! Module map:
//!
//! - [`domain`]: lattice domains and point sets
//! - [`laplace`]: Dirichlet operator, Green's columns, harmonic extension and measure
//! - [`sampler`]: exact sampling, pairings, circle/harmonic/mollified averages
//! - [`markov`]: domain Markov decomposition and its checks
//! - [`kernels`]: two- and four-point kernel estimation, coupling fits, log bounds
//! - [`conformal`]: closed-form conformal maps and invariance experiments
//! - [`bridge1d`]: the one-dimensional harness suite
//! - [`experiment`]: configuration, execution and reporting of named experiments
//!
//! See the `examples/` directory of this crate for one runnable program per capability.

pub mod bridge1d;
pub mod conformal;
pub mod domain;
pub mod error;
pub mod experiment;
pub mod io;
pub mod kernels;
pub mod laplace;
pub mod markov;
pub mod sampler;
pub mod stats;

/// Continuum point in the complex plane.
pub type Point = num_complex::Complex64;

pub use domain::{DomainSpec, GridPoint, LatticeDomain, PointSet, Shape};
pub use error::{Error, Result};
pub use laplace::{BoundaryData, DirichletOperator, ScalarField};
pub use sampler::{GffSampler, LinearFunctional, MollifierSpec, TestFunction};
