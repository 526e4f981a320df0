//! Batch pipeline for turning electrochemical impedance spectra of Li-ion
//! cells into runnable equivalent-circuit models.
//!
//! The stages mirror the processing order used on measured data:
//!
//! 1. [`spectrum`] / [`ocv`] / [`profile`] — file formats and replicate
//!    averaging for the three input kinds (impedance spectra, open-circuit
//!    voltage curves, current profiles).
//! 2. [`kk`] — linear consistency check that gates everything downstream.
//! 3. [`preprocess`] — removal of the high-frequency inductive branch and
//!    extraction of the ohmic resistance.
//! 4. [`drt`] — regularized deconvolution of the spectrum into a
//!    distribution of relaxation times.
//! 5. [`peaks`] — peak detection, Gaussian decomposition and attribution of
//!    peaks to physical processes.
//! 6. [`ecm`] — per-temperature parameter trends, the diffusion ladder and
//!    the serializable cell model.
//! 7. [`sim`] — discrete-time state-space simulation of the model under a
//!    current profile, plus error metrics against reference data.
//!
//! [`synthetic`] generates a self-consistent synthetic data set from a known
//! model so the whole chain can be exercised end to end without lab data.

pub mod dataset;
pub mod drt;
pub mod ecm;
pub mod error;
pub mod kk;
pub mod numeric;
pub mod ocv;
pub mod peaks;
pub mod preprocess;
pub mod profile;
pub mod sim;
pub mod spectrum;
pub mod synthetic;
mod table;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
