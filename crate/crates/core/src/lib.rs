//! Weakly coupled eigenvalues and resonances of one-dimensional massive
//! Dirac operators `D_m - eps V`, computed by three independent methods and
//! compared with closed-form weak-coupling expansions.

pub mod asymptotics;
pub mod birman_schwinger;
pub mod error;
pub mod grid;
pub mod harness;
pub mod linalg;
pub mod minmax;
pub mod moments;
pub mod potentials;
pub mod quadrature;
pub mod resolvent;
pub mod solvers;

pub use error::{Error, Result};
