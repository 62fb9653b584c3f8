//! Toolkit for linear-optical interferometers: realization of unitaries as
//! beam-splitter networks, characterization from photon-count data, and
//! SU(n) representation machinery (boson-realized basis states,
//! D-functions, immanants).

pub mod error;
pub mod harness;
pub mod characterization;
pub mod cli;
pub mod csd;
pub mod matrix;
pub mod photonic;
pub mod sun;
pub mod immanant;

pub use error::{Error, Result};
pub use matrix::{ComplexMatrix, UnitaryMatrix, C64};
