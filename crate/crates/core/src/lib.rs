//! Quantum model of a three-resonator cascode HEMT amplifier.
//!
//! Pipeline: [`circuit`] parameters and capacitance matrix, [`quantization`]
//! into a ladder-operator ledger, open-system evolution in [`evolve`] (Fock
//! space via [`fock`], or Gaussian moment flow), correlation metrics in
//! [`gaussian`], and frequency-domain gain in [`langevin`].

pub mod circuit;
pub mod error;
pub mod evolve;
pub mod fock;
pub mod gaussian;
pub mod langevin;
pub mod ode;
pub mod quantization;
pub mod sparse;
pub mod units;

pub use error::{QsimError, Result};
