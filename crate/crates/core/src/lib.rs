//! Hierarchical B-spline de Rham complexes in two dimensions.
//!
//! Bottom-up: [`splines1d`] builds univariate bases, [`tpcomplex`] the
//! tensor-product form spaces and incidence matrices, [`hierarchy`] the
//! multilevel active sets and differential matrices. [`topology`] and
//! [`exactness`] decide whether a hierarchical complex is exact, while
//! [`assembly`] and [`eigensolve`] run the Maxwell and Stokes experiments.

pub mod assembly;
pub mod eigensolve;
pub mod exactness;
pub mod hierarchy;
pub mod meshspec;
pub mod par;
pub mod quadrature;
pub mod sparse;
pub mod splines1d;
pub mod topology;
pub mod tpcomplex;

pub use sparse::{Rational, RealSparseMatrix, SignedSparseMatrix};
