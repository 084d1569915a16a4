//! Exhaustive reference computations with hard size guards.

use super::{LogicalClass, StabilizerCode, Syndrome};
use crate::error::{Error, Result};
use crate::noise::NoiseModel;
use crate::pauli::PauliString;

/// Sum of prob(E(s) S L) over the whole stabilizer group.
pub fn chi_oracle(
    code: &StabilizerCode,
    l: &LogicalClass,
    s: &Syndrome,
    noise: &NoiseModel,
) -> Result<f64> {
    const LIMIT: usize = 26;
    let r = code.num_stabilizers();
    if r > LIMIT {
        return Err(Error::SizeGuard {
            what: "stabilizer group enumeration",
            size: r,
            limit: LIMIT,
        });
    }
    if noise.len() != code.n {
        return Err(Error::LengthMismatch {
            expected: code.n,
            got: noise.len(),
        });
    }
    let mut cur = code.pure_error(s)?;
    cur.mul_assign(&code.logical_operator(l)?);
    let mut total = noise.probability(&cur);
    // Gray-code walk over all 2^r stabilizer products.
    for g in 1u64..(1u64 << r) {
        let flip = g.trailing_zeros() as usize;
        cur.mul_assign(&code.stabilizers[flip]);
        total += noise.probability(&cur);
    }
    Ok(total)
}

/// chi(L, s) for every syndrome index and class index by enumerating all 4^n errors.
pub fn exhaustive_chi_table(code: &StabilizerCode, noise: &NoiseModel) -> Result<Vec<Vec<f64>>> {
    const LIMIT: usize = 10;
    if code.n > LIMIT {
        return Err(Error::SizeGuard {
            what: "exhaustive error enumeration qubits",
            size: code.n,
            limit: LIMIT,
        });
    }
    if noise.len() != code.n {
        return Err(Error::LengthMismatch {
            expected: code.n,
            got: noise.len(),
        });
    }
    let r = code.num_stabilizers();
    let mut table = vec![vec![0.0; 1 << (2 * code.k)]; 1 << r];
    for idx in 0..(1usize << (2 * code.n)) {
        let labels: Vec<u8> = (0..code.n).map(|q| ((idx >> (2 * q)) & 3) as u8).collect();
        let e = PauliString::from_labels(&labels);
        let s = code.syndrome(&e)?;
        let mut rest = e.clone();
        rest.mul_assign(&code.pure_error(&s)?);
        let class = code.logical_class(&rest)?;
        let sidx: usize = s
            .bits()
            .iter()
            .enumerate()
            .map(|(i, &b)| (b as usize) << i)
            .sum();
        table[sidx][class.index()] += noise.probability(&e);
    }
    Ok(table)
}

/// Exact failure probability of the optimal decoder, 1 - sum_s max_L chi(L, s).
pub fn exact_ml_failure(code: &StabilizerCode, noise: &NoiseModel) -> Result<f64> {
    let table = exhaustive_chi_table(code, noise)?;
    let success: f64 = table
        .iter()
        .map(|row| row.iter().cloned().fold(0.0, f64::max))
        .sum();
    Ok(1.0 - success)
}
