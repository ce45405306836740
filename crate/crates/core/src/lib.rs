//! Sparse functional programs solved through their Lagrangian duals.

pub mod cli;
pub mod config;
pub mod desk;
pub mod domain;
pub mod dual;
pub mod error;
pub mod experiments;
pub mod fda;
pub mod io;
pub mod properties;
pub mod quadrature;
pub mod scalar;
pub mod spectral;

pub use error::{Result, SfpError};
