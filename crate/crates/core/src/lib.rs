//! Volume mutual information and dominantly truthful multi-task peer prediction.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, plotting output and
//! the command-line tool live in the `vmi-tools` companion crate.
//!
//! Layout:
//!
//! - [`joint`]: joint distributions, column-stochastic matrices, the
//!   informativeness order and the binary `(s, t, p)` chart.
//! - [`poly`]: sparse multivariate polynomials with exact rational coefficients
//!   and simplex integrals.
//! - [`measures`]: DMI, Shannon/quadratic MI, f- and Bregman families.
//! - [`vmi`]: densities, symbolic and numeric volume MI, Dirichlet family.
//! - [`estimator`]: unbiased finite-sample estimators of polynomial MI.
//! - [`mechanism`]: payment mechanisms, agent simulation, truthfulness audits.
//! - [`optimizer`]: effort-incentive optimisation and equilibrium search.
//! - [`contour`]: slice grids and marching squares.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

mod error;
pub mod scalar;
pub mod matrix;
pub mod joint;
pub mod lp;
pub mod poly;
pub mod quadrature;
pub mod measures;
pub mod vmi;
pub mod estimator;
pub mod mechanism;
pub mod optimizer;
pub mod contour;
pub mod rng;

pub use error::{Error, Result};
pub use joint::{ColumnStochastic, JointDistribution, StpCoords};
pub use matrix::Matrix;
pub use poly::MultiPoly;
pub use scalar::{Rational, Scalar};
