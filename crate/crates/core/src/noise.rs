use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::PauliString;

/// Independent single-qubit Pauli noise: `probs[i][a]` for a in I, X, Y, Z.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    probs: Vec<[f64; 4]>,
}

impl NoiseModel {
    pub fn new(probs: Vec<[f64; 4]>) -> Result<Self> {
        for (i, q) in probs.iter().enumerate() {
            let sum: f64 = q.iter().sum();
            if q.iter().any(|&v| !(v >= 0.0)) || (sum - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "qubit {i}: {q:?} is not a probability vector"
                )));
            }
        }
        Ok(NoiseModel { probs })
    }

    pub fn depolarizing(p: f64, n: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("p = {p} outside [0, 1]")));
        }
        Ok(NoiseModel {
            probs: vec![[1.0 - p, p / 3.0, p / 3.0, p / 3.0]; n],
        })
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn qubit(&self, i: usize) -> &[f64; 4] {
        &self.probs[i]
    }

    pub fn probability(&self, e: &PauliString) -> f64 {
        assert_eq!(e.len(), self.probs.len());
        (0..e.len())
            .map(|i| self.probs[i][e.get(i) as usize])
            .product()
    }
}
