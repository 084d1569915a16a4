//! Tensor-network stabilizer codes with exact maximum-likelihood decoding.
//!
//! Qubit, leg and node indices are 0-based throughout the API; text and file
//! formats use 1-based numbering.

pub mod bits;
pub mod compose;
pub mod decoder;
pub mod error;
pub mod experiments;
pub mod gf2;
pub mod holographic;
pub mod noise;
pub mod pauli;
pub mod stabilizer;
pub mod threshold;

pub use compose::{contract_codes, distinguishable, TensorNetworkCode};
pub use decoder::{DecodeOutcome, Decoder, LogicalAssignment};

pub use error::{Error, Result};
pub use noise::NoiseModel;
pub use pauli::{Pauli, PauliString};
pub use stabilizer::{LogicalClass, StabilizerCode, Syndrome};
