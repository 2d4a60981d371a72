//! Pseudospectral simulator for a Boussinesq-type water-wave system over
//! strongly varying bathymetry, together with numerical checks of the energy
//! estimates that control it.

pub mod bathymetry;
pub mod config;
pub mod energy;
pub mod error;
pub mod experiment;
pub mod fields;
pub mod operators;
pub mod params;
pub mod solver;
pub mod timestepper;
pub mod verify;

pub use error::{Error, Result};
