//! Numerical laboratory for quantitative stochastic homogenization.
//!
//! Random two-phase media are built from a Poisson point process on the torus
//! `[-L/2, L/2)^d`; the periodic corrector problem is solved on a cell-centred
//! finite-volume grid and the periodized effective coefficient is assembled
//! from face fluxes. The `experiments` module drives Monte Carlo studies of
//! its fluctuations.

// `!(x > 0.0)` style checks are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cell_solver;
pub mod ensemble;
pub mod error;
pub mod experiments;
pub mod homogenize;
pub mod records;
pub mod stats;
pub mod torus_grid;

pub use cell_solver::{CoefficientField, CorrectorSolution, Direction, SolverConfig};
pub use ensemble::{EllipticityParams, PointConfiguration, RngStream, Substream};
pub use error::{HomogError, Result};
pub use torus_grid::{FaceField, ScalarField, TorusGrid};
