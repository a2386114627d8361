//! Simulation and error-budget toolkit for heralded cluster-state generation
//! with Rydberg-blockaded atomic ensembles.
//!
//! * [`state`] – sparse hybrid ensemble/Fock states, density operators.
//! * [`optics`] – beam splitters, phase plates, gated photodetection.
//! * [`ensemble`] – the blockade-restricted qudit, logical gates, absorption.
//! * [`protocol`] – the two-ensemble entangler, the four-ensemble GHZ
//!   interferometer and cluster linking.
//! * [`budget`] – closed-form error budget.
//! * [`growth`] – cluster-growth Monte Carlo and its Markov-chain oracle.
//! * [`cli`] – configuration, dispatch and output for the `blockade` binary.

pub mod budget;
pub mod cli;
pub mod ensemble;
pub mod error;
pub mod growth;
pub mod optics;
pub mod protocol;
pub mod sampling;
pub mod state;

pub use error::{Error, Result};
