//! Numerical workbench for the wiretap channel with causal state information
//! at both terminals: information measures, bound evaluators, grid
//! optimizers, a block-Markov coding simulator and an exact small-scale
//! oracle.

pub mod channel;
pub mod error;
pub mod formats;
pub mod info;
pub mod optimizer;
pub mod oracle;
pub mod simulator;

pub use error::{Error, Result};
pub use info::{Alphabet, Bits, CondPmf, JointPmf};
