//! Phaseless Pauli operators in the binary symplectic representation.

use std::fmt;
use std::str::FromStr;

use crate::bits;
use crate::error::{Error, Result};

/// Single-qubit Pauli class with the global labels I=0, X=1, Y=2, Z=3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Pauli {
    I = 0,
    X = 1,
    Y = 2,
    Z = 3,
}

// (x, z) bits packed as x | z << 1, indexed by label.
const LABEL_BITS: [u8; 4] = [0b00, 0b01, 0b11, 0b10];
const BITS_LABEL: [u8; 4] = [0, 1, 3, 2];

/// Product table on labels (phases dropped).
pub const LABEL_MUL: [[u8; 4]; 4] = {
    let mut t = [[0u8; 4]; 4];
    let mut a = 0;
    while a < 4 {
        let mut b = 0;
        while b < 4 {
            t[a][b] = BITS_LABEL[(LABEL_BITS[a] ^ LABEL_BITS[b]) as usize];
            b += 1;
        }
        a += 1;
    }
    t
};

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn from_label(label: u8) -> Pauli {
        Pauli::ALL[(label & 3) as usize]
    }

    pub fn label(self) -> u8 {
        self as u8
    }

    pub fn from_bits(x: bool, z: bool) -> Pauli {
        Pauli::from_label(BITS_LABEL[(x as usize) | ((z as usize) << 1)])
    }

    pub fn x_bit(self) -> bool {
        LABEL_BITS[self as usize] & 1 != 0
    }

    pub fn z_bit(self) -> bool {
        LABEL_BITS[self as usize] & 2 != 0
    }

    pub fn mul(self, other: Pauli) -> Pauli {
        Pauli::from_label(LABEL_MUL[self as usize][other as usize])
    }

    pub fn symbol(self) -> char {
        ['I', 'X', 'Y', 'Z'][self as usize]
    }

    pub fn from_symbol(c: char) -> Result<Pauli> {
        match c {
            'I' => Ok(Pauli::I),
            'X' => Ok(Pauli::X),
            'Y' => Ok(Pauli::Y),
            'Z' => Ok(Pauli::Z),
            _ => Err(Error::BadSymbol(c)),
        }
    }
}

/// An n-qubit Pauli operator without phase, stored as packed x and z words.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: usize,
    x: Vec<u64>,
    z: Vec<u64>,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        let w = bits::words(n);
        PauliString {
            n,
            x: vec![0; w],
            z: vec![0; w],
        }
    }

    /// Builds from raw words; bits past `n` must be clear.
    pub fn from_words(n: usize, x: Vec<u64>, z: Vec<u64>) -> Self {
        debug_assert_eq!(x.len(), bits::words(n));
        debug_assert_eq!(z.len(), bits::words(n));
        PauliString { n, x, z }
    }

    pub fn from_labels(labels: &[u8]) -> Self {
        let mut p = PauliString::identity(labels.len());
        for (i, &l) in labels.iter().enumerate() {
            p.set(i, Pauli::from_label(l));
        }
        p
    }

    pub fn single(n: usize, qubit: usize, pauli: Pauli) -> Self {
        let mut p = PauliString::identity(n);
        p.set(qubit, pauli);
        p
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn x_words(&self) -> &[u64] {
        &self.x
    }

    pub fn z_words(&self) -> &[u64] {
        &self.z
    }

    pub fn get(&self, i: usize) -> Pauli {
        Pauli::from_bits(bits::get(&self.x, i), bits::get(&self.z, i))
    }

    pub fn set(&mut self, i: usize, p: Pauli) {
        assert!(i < self.n, "qubit {i} out of range for {} qubits", self.n);
        bits::put(&mut self.x, i, p.x_bit());
        bits::put(&mut self.z, i, p.z_bit());
    }

    pub fn labels(&self) -> Vec<u8> {
        (0..self.n).map(|i| self.get(i).label()).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.x.iter().chain(self.z.iter()).all(|&w| w == 0)
    }

    pub fn weight(&self) -> usize {
        self.x
            .iter()
            .zip(&self.z)
            .map(|(a, b)| (a | b).count_ones() as usize)
            .sum()
    }

    fn check_len(&self, other: &PauliString) -> Result<()> {
        if self.n != other.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        Ok(())
    }

    pub fn multiply(&self, other: &PauliString) -> Result<PauliString> {
        self.check_len(other)?;
        let mut out = self.clone();
        out.mul_assign(other);
        Ok(out)
    }

    /// In-place product; panics on a length mismatch.
    pub fn mul_assign(&mut self, other: &PauliString) {
        assert_eq!(self.n, other.n, "Pauli length mismatch");
        bits::xor_into(&mut self.x, &other.x);
        bits::xor_into(&mut self.z, &other.z);
    }

    pub fn commutes(&self, other: &PauliString) -> Result<bool> {
        self.check_len(other)?;
        Ok(!self.anticommutes(other))
    }

    /// Symplectic form; panics on a length mismatch.
    pub fn anticommutes(&self, other: &PauliString) -> bool {
        assert_eq!(self.n, other.n, "Pauli length mismatch");
        let mut acc = 0u32;
        for i in 0..self.x.len() {
            acc ^= ((self.x[i] & other.z[i]) ^ (self.z[i] & other.x[i])).count_ones();
        }
        acc & 1 == 1
    }

    fn check_legs(legs: &[usize], n: usize) -> Result<()> {
        let mut seen = vec![false; n];
        for &l in legs {
            if l >= n {
                return Err(Error::IndexOutOfRange { index: l, len: n });
            }
            if seen[l] {
                return Err(Error::DuplicateIndex(l));
            }
            seen[l] = true;
        }
        Ok(())
    }

    /// Sub-operator on `legs` (0-based), in the given leg order.
    pub fn restrict(&self, legs: &[usize]) -> Result<PauliString> {
        Self::check_legs(legs, self.n)?;
        let mut out = PauliString::identity(legs.len());
        for (j, &l) in legs.iter().enumerate() {
            out.set(j, self.get(l));
        }
        Ok(out)
    }

    /// Places `self` on `legs` (0-based) of an n-qubit identity.
    pub fn embed(&self, legs: &[usize], n: usize) -> Result<PauliString> {
        if legs.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: legs.len(),
            });
        }
        Self::check_legs(legs, n)?;
        let mut out = PauliString::identity(n);
        for (j, &l) in legs.iter().enumerate() {
            out.set(l, self.get(j));
        }
        Ok(out)
    }

    /// Operator on `n` qubits whose first `self.n` qubits are `self` and the rest `tail`.
    pub fn concat(&self, tail: &PauliString) -> PauliString {
        let n = self.n + tail.n;
        let mut x = self.x.clone();
        let mut z = self.z.clone();
        x.resize(bits::words(n), 0);
        z.resize(bits::words(n), 0);
        bits::copy_range(&tail.x, 0, &mut x, self.n, tail.n);
        bits::copy_range(&tail.z, 0, &mut z, self.n, tail.n);
        PauliString { n, x, z }
    }

    /// Drops the qubits flagged in `drop`, keeping the remaining order.
    pub fn remove_qubits(&self, drop: &[bool]) -> PauliString {
        assert_eq!(drop.len(), self.n);
        let keep = drop.iter().filter(|&&d| !d).count();
        let mut out = PauliString::identity(keep);
        let mut dst = 0;
        let mut i = 0;
        while i < self.n {
            if drop[i] {
                i += 1;
                continue;
            }
            let start = i;
            while i < self.n && !drop[i] {
                i += 1;
            }
            bits::copy_range(&self.x, start, &mut out.x, dst, i - start);
            bits::copy_range(&self.z, start, &mut out.z, dst, i - start);
            dst += i - start;
        }
        out
    }

    /// Swaps X and Z on every qubit.
    pub fn swap_xz(&self) -> PauliString {
        PauliString {
            n: self.n,
            x: self.z.clone(),
            z: self.x.clone(),
        }
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let labels = s
            .chars()
            .map(|c| Pauli::from_symbol(c).map(Pauli::label))
            .collect::<Result<Vec<_>>>()?;
        Ok(PauliString::from_labels(&labels))
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            write!(f, "{}", self.get(i).symbol())?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({self})")
    }
}

impl serde::Serialize for PauliString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for PauliString {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
