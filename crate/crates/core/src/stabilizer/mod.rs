//! Stabilizer codes as explicit generator sets.

mod oracle;

pub use oracle::{chi_oracle, exact_ml_failure, exhaustive_chi_table};

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bits;
use crate::error::{Error, Result};
use crate::gf2;
use crate::pauli::{Pauli, PauliString};

/// Syndrome bits; bit i set means stabilizer i measured -1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Syndrome {
    bits: Vec<bool>,
}

impl Syndrome {
    pub fn zero(len: usize) -> Self {
        Syndrome {
            bits: vec![false; len],
        }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Syndrome { bits }
    }

    /// Syndrome whose bits are the binary digits of `index`, bit 0 first.
    pub fn from_index(index: u64, len: usize) -> Self {
        Syndrome {
            bits: (0..len).map(|i| (index >> i) & 1 == 1).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn is_zero(&self) -> bool {
        self.bits.iter().all(|b| !b)
    }

    pub fn parse(text: &str) -> Result<Self> {
        text.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::InvalidArgument(format!("bad syndrome digit {c:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Syndrome::from_bits)
    }
}

impl fmt::Display for Syndrome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            write!(f, "{}", if b { '1' } else { '0' })?;
        }
        Ok(())
    }
}

/// One Pauli class label per logical qubit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LogicalClass {
    pub labels: Vec<Pauli>,
}

impl LogicalClass {
    pub fn identity(k: usize) -> Self {
        LogicalClass {
            labels: vec![Pauli::I; k],
        }
    }

    pub fn new(labels: Vec<Pauli>) -> Self {
        LogicalClass { labels }
    }

    /// Base-4 digits of `index`, logical qubit 0 least significant.
    pub fn from_index(index: usize, k: usize) -> Self {
        LogicalClass {
            labels: (0..k)
                .map(|a| Pauli::from_label(((index >> (2 * a)) & 3) as u8))
                .collect(),
        }
    }

    pub fn index(&self) -> usize {
        self.labels
            .iter()
            .enumerate()
            .map(|(a, p)| (p.label() as usize) << (2 * a))
            .sum()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

impl fmt::Display for LogicalClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.labels {
            write!(f, "{}", p.symbol())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabilizerCode {
    pub n: usize,
    pub k: usize,
    pub stabilizers: Vec<PauliString>,
    pub pure_errors: Vec<PauliString>,
    pub logical_x: Vec<PauliString>,
    pub logical_z: Vec<PauliString>,
}

/// A failed invariant reported by [`StabilizerCode::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Shape(String),
    StabilizersAnticommute(usize, usize),
    PureErrorPairing {
        pure_error: usize,
        stabilizer: usize,
    },
    LogicalVsStabilizer {
        logical: String,
        stabilizer: usize,
    },
    LogicalPairing {
        a: String,
        b: String,
    },
    DependentStabilizers {
        rank: usize,
    },
    NotGenerating {
        rank: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Shape(s) => write!(f, "shape: {s}"),
            Violation::StabilizersAnticommute(i, j) => {
                write!(f, "stabilizers S{} and S{} anticommute", i + 1, j + 1)
            }
            Violation::PureErrorPairing {
                pure_error,
                stabilizer,
            } => write!(
                f,
                "pure error E{} has the wrong commutation with S{}",
                pure_error + 1,
                stabilizer + 1
            ),
            Violation::LogicalVsStabilizer {
                logical,
                stabilizer,
            } => {
                write!(f, "logical {logical} anticommutes with S{}", stabilizer + 1)
            }
            Violation::LogicalPairing { a, b } => {
                write!(f, "logicals {a} and {b} have the wrong commutation")
            }
            Violation::DependentStabilizers { rank } => {
                write!(f, "stabilizers are dependent (rank {rank})")
            }
            Violation::NotGenerating { rank } => {
                write!(f, "operators span only rank {rank} of the Pauli group")
            }
        }
    }
}

impl StabilizerCode {
    pub fn new(
        n: usize,
        stabilizers: Vec<PauliString>,
        pure_errors: Vec<PauliString>,
        logical_x: Vec<PauliString>,
        logical_z: Vec<PauliString>,
    ) -> Result<Self> {
        let k = logical_x.len();
        let all = stabilizers
            .iter()
            .chain(&pure_errors)
            .chain(&logical_x)
            .chain(&logical_z);
        for p in all {
            if p.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    got: p.len(),
                });
            }
        }
        if logical_z.len() != k
            || stabilizers.len() + k != n
            || pure_errors.len() != stabilizers.len()
        {
            return Err(Error::InvalidCode(format!(
                "counts: {} stabilizers, {} pure errors, {} X and {} Z logicals on {n} qubits",
                stabilizers.len(),
                pure_errors.len(),
                logical_x.len(),
                logical_z.len()
            )));
        }
        Ok(StabilizerCode {
            n,
            k,
            stabilizers,
            pure_errors,
            logical_x,
            logical_z,
        })
    }

    /// Builds a code from stabilizers and logicals, deriving canonical generators
    /// and a matching set of pure errors.
    pub fn from_generators(
        n: usize,
        stabilizers: &[PauliString],
        logical_x: &[PauliString],
        logical_z: &[PauliString],
    ) -> Result<Self> {
        let k = logical_x.len();
        if logical_z.len() != k {
            return Err(Error::InvalidCode("unequal logical X and Z counts".into()));
        }
        for p in stabilizers.iter().chain(logical_x).chain(logical_z) {
            if p.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    got: p.len(),
                });
            }
        }
        let cols = 2 * n;
        let mut srows: Vec<Vec<u64>> = stabilizers.iter().map(gf2::pauli_row).collect();
        let pivots = gf2::rref(&mut srows, cols, None);
        let r = pivots.len();
        if r + k != n {
            return Err(Error::InvalidCode(format!(
                "stabilizer rank {r} with {k} logicals on {n} qubits"
            )));
        }
        srows.truncate(r);
        let reduce = |p: &PauliString| {
            let mut row = gf2::pauli_row(p);
            gf2::reduce(&mut row, &srows, &pivots);
            gf2::row_pauli(&row, n)
        };
        let lx: Vec<PauliString> = logical_x.iter().map(reduce).collect();
        let lz: Vec<PauliString> = logical_z.iter().map(reduce).collect();
        let stabs: Vec<PauliString> = srows.iter().map(|row| gf2::row_pauli(row, n)).collect();
        let pure = derive_pure_errors(n, &stabs, &lx, &lz)?;
        Ok(StabilizerCode {
            n,
            k,
            stabilizers: stabs,
            pure_errors: pure,
            logical_x: lx,
            logical_z: lz,
        })
    }

    pub fn steane() -> Self {
        let p = |s: &str| s.parse::<PauliString>().expect("static operator");
        let s = ["XXIXXII", "IXXXIIX", "XIXXIXI"].map(p);
        let e = ["IIZZIII", "ZIIZIII", "IZIZIII"].map(p);
        let stabilizers = s
            .iter()
            .cloned()
            .chain(s.iter().map(PauliString::swap_xz))
            .collect();
        let pure_errors = e
            .iter()
            .cloned()
            .chain(e.iter().map(PauliString::swap_xz))
            .collect();
        StabilizerCode {
            n: 7,
            k: 1,
            stabilizers,
            pure_errors,
            logical_x: vec![p("XXXXXXX")],
            logical_z: vec![p("ZZZZZZZ")],
        }
    }

    /// The one-qubit code with no stabilizers.
    pub fn trivial() -> Self {
        StabilizerCode {
            n: 1,
            k: 1,
            stabilizers: vec![],
            pure_errors: vec![],
            logical_x: vec!["X".parse().unwrap()],
            logical_z: vec!["Z".parse().unwrap()],
        }
    }

    pub fn num_stabilizers(&self) -> usize {
        self.stabilizers.len()
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let n = self.n;
        let r = self.stabilizers.len();
        let lens_ok = self
            .stabilizers
            .iter()
            .chain(&self.pure_errors)
            .chain(&self.logical_x)
            .chain(&self.logical_z)
            .all(|p| p.len() == n);
        if !lens_ok {
            out.push(Violation::Shape("operator length differs from n".into()));
        }
        if r + self.k != n
            || self.pure_errors.len() != r
            || self.logical_x.len() != self.k
            || self.logical_z.len() != self.k
        {
            out.push(Violation::Shape(format!(
                "n={n}, k={}, {} stabilizers, {} pure errors, {}/{} logicals",
                self.k,
                r,
                self.pure_errors.len(),
                self.logical_x.len(),
                self.logical_z.len()
            )));
        }
        if !out.is_empty() {
            return out;
        }
        let s = &self.stabilizers;
        let e = &self.pure_errors;
        for i in 0..r {
            for j in i + 1..r {
                if s[i].anticommutes(&s[j]) {
                    out.push(Violation::StabilizersAnticommute(i, j));
                }
            }
            for j in 0..r {
                if e[i].anticommutes(&s[j]) != (i == j) {
                    out.push(Violation::PureErrorPairing {
                        pure_error: i,
                        stabilizer: j,
                    });
                }
            }
        }
        let logicals: Vec<(String, &PauliString)> = self
            .logical_x
            .iter()
            .enumerate()
            .map(|(a, p)| (format!("X{}", a + 1), p))
            .chain(
                self.logical_z
                    .iter()
                    .enumerate()
                    .map(|(a, p)| (format!("Z{}", a + 1), p)),
            )
            .collect();
        for (name, l) in &logicals {
            for (j, sj) in s.iter().enumerate() {
                if l.anticommutes(sj) {
                    out.push(Violation::LogicalVsStabilizer {
                        logical: name.clone(),
                        stabilizer: j,
                    });
                }
            }
        }
        for a in 0..logicals.len() {
            for b in a + 1..logicals.len() {
                let want = b == a + self.k;
                if logicals[a].1.anticommutes(logicals[b].1) != want {
                    out.push(Violation::LogicalPairing {
                        a: logicals[a].0.clone(),
                        b: logicals[b].0.clone(),
                    });
                }
            }
        }
        let srows: Vec<Vec<u64>> = s.iter().map(gf2::pauli_row).collect();
        let rank = gf2::rank(&srows, 2 * n);
        if rank != r {
            out.push(Violation::DependentStabilizers { rank });
        }
        let all: Vec<Vec<u64>> = s
            .iter()
            .chain(e)
            .chain(&self.logical_x)
            .chain(&self.logical_z)
            .map(gf2::pauli_row)
            .collect();
        let rank = gf2::rank(&all, 2 * n);
        if rank != 2 * n {
            out.push(Violation::NotGenerating { rank });
        }
        out
    }

    /// Pairs of pure errors that anticommute. The built-in Steane rows contain such pairs;
    /// derived codes never do.
    pub fn anticommuting_pure_errors(&self) -> Vec<(usize, usize)> {
        let e = &self.pure_errors;
        let mut out = Vec::new();
        for i in 0..e.len() {
            for j in i + 1..e.len() {
                if e[i].anticommutes(&e[j]) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    fn check_len(&self, p: &PauliString) -> Result<()> {
        if p.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: p.len(),
            });
        }
        Ok(())
    }

    pub fn syndrome(&self, e: &PauliString) -> Result<Syndrome> {
        self.check_len(e)?;
        Ok(Syndrome::from_bits(
            self.stabilizers.iter().map(|s| s.anticommutes(e)).collect(),
        ))
    }

    pub fn pure_error(&self, s: &Syndrome) -> Result<PauliString> {
        if s.len() != self.stabilizers.len() {
            return Err(Error::LengthMismatch {
                expected: self.stabilizers.len(),
                got: s.len(),
            });
        }
        let mut e = PauliString::identity(self.n);
        for (i, &b) in s.bits().iter().enumerate() {
            if b {
                e.mul_assign(&self.pure_errors[i]);
            }
        }
        Ok(e)
    }

    /// Logical class of an operator with zero syndrome.
    pub fn logical_class(&self, p: &PauliString) -> Result<LogicalClass> {
        self.check_len(p)?;
        if self.stabilizers.iter().any(|s| s.anticommutes(p)) {
            return Err(Error::NonzeroSyndrome);
        }
        Ok(self.logical_class_unchecked(p))
    }

    /// Class from the logical anticommutation pattern, without the syndrome check.
    pub fn logical_class_unchecked(&self, p: &PauliString) -> LogicalClass {
        LogicalClass::new(
            (0..self.k)
                .map(|a| {
                    Pauli::from_bits(
                        p.anticommutes(&self.logical_z[a]),
                        p.anticommutes(&self.logical_x[a]),
                    )
                })
                .collect(),
        )
    }

    /// Representative operator of a logical class.
    pub fn logical_operator(&self, l: &LogicalClass) -> Result<PauliString> {
        if l.len() != self.k {
            return Err(Error::LengthMismatch {
                expected: self.k,
                got: l.len(),
            });
        }
        let mut out = PauliString::identity(self.n);
        for (a, &p) in l.labels.iter().enumerate() {
            if p.x_bit() {
                out.mul_assign(&self.logical_x[a]);
            }
            if p.z_bit() {
                out.mul_assign(&self.logical_z[a]);
            }
        }
        Ok(out)
    }

    /// Brute-force minimum weight of a nontrivial logical operator.
    pub fn distance_bruteforce(&self) -> Result<usize> {
        const LIMIT: usize = 14;
        if self.n > LIMIT {
            return Err(Error::SizeGuard {
                what: "distance enumeration qubits",
                size: self.n,
                limit: LIMIT,
            });
        }
        let n = self.n;
        for w in 1..=n {
            let mut support: Vec<usize> = (0..w).collect();
            loop {
                let total = 3usize.pow(w as u32);
                for code in 0..total {
                    let mut p = PauliString::identity(n);
                    let mut c = code;
                    for &q in &support {
                        p.set(q, Pauli::from_label((c % 3) as u8 + 1));
                        c /= 3;
                    }
                    if self.stabilizers.iter().all(|s| !s.anticommutes(&p))
                        && self
                            .logical_class_unchecked(&p)
                            .labels
                            .iter()
                            .any(|&l| l != Pauli::I)
                    {
                        return Ok(w);
                    }
                }
                if !next_combination(&mut support, n) {
                    break;
                }
            }
        }
        Err(Error::InvalidCode("no nontrivial logical operator".into()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: StabilizerCode = serde_json::from_str(text)?;
        let code = StabilizerCode::new(
            raw.n,
            raw.stabilizers,
            raw.pure_errors,
            raw.logical_x,
            raw.logical_z,
        )?;
        if code.k != raw.k {
            return Err(Error::InvalidCode(format!(
                "k = {} but {} logical pairs",
                raw.k, code.k
            )));
        }
        Ok(code)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

fn next_combination(c: &mut [usize], n: usize) -> bool {
    let w = c.len();
    let mut i = w;
    while i > 0 {
        i -= 1;
        if c[i] < n - w + i {
            c[i] += 1;
            for j in i + 1..w {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Pure errors paired with `stabs`, commuting with each other and with all logicals.
fn derive_pure_errors(
    n: usize,
    stabs: &[PauliString],
    lx: &[PauliString],
    lz: &[PauliString],
) -> Result<Vec<PauliString>> {
    let r = stabs.len();
    // Constraint rows: dot(E, swap(P)) is the symplectic form <E, P>.
    let mut m: Vec<Vec<u64>> = stabs
        .iter()
        .chain(lx)
        .chain(lz)
        .map(gf2::swapped_row)
        .collect();
    let rows = m.len();
    let mut t: Vec<Vec<u64>> = (0..rows)
        .map(|i| {
            let mut row = vec![0u64; bits::words(rows)];
            bits::put(&mut row, i, true);
            row
        })
        .collect();
    let pivots = gf2::rref(&mut m, 2 * n, Some(&mut t));
    if pivots.len() != rows {
        return Err(Error::InvalidCode(
            "stabilizers and logicals are not independent".into(),
        ));
    }
    let mut pure: Vec<PauliString> = (0..r)
        .map(|i| {
            let mut row = vec![0u64; bits::words(2 * n)];
            for (tr, &c) in t.iter().zip(&pivots) {
                if bits::get(tr, i) {
                    bits::put(&mut row, c, true);
                }
            }
            gf2::row_pauli(&row, n)
        })
        .collect();
    for i in 0..r {
        for j in 0..i {
            if pure[i].anticommutes(&pure[j]) {
                pure[i].mul_assign(&stabs[j]);
            }
        }
    }
    Ok(pure)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn steane_rows() {
        let c = StabilizerCode::steane();
        assert_eq!((c.n, c.k), (7, 1));
        assert_eq!(c.stabilizers[0], p("XXIXXII"));
        assert_eq!(c.stabilizers[3], p("ZZIZZII"));
        assert_eq!(c.pure_errors[1], p("ZIIZIII"));
        assert_eq!(c.pure_errors[4], p("XIIXIII"));
        assert!(c.validate().is_empty(), "{:?}", c.validate());
    }

    #[test]
    fn validate_catches_broken_codes() {
        let mut c = StabilizerCode::steane();
        c.stabilizers[0] = p("XIIIIII");
        let v = c.validate();
        assert!(
            v.iter()
                .any(|x| matches!(x, Violation::StabilizersAnticommute(0, _))),
            "{v:?}"
        );

        let mut c = StabilizerCode::steane();
        c.pure_errors[0] = c.pure_errors[1].clone();
        let v = c.validate();
        assert!(
            v.iter()
                .any(|x| matches!(x, Violation::PureErrorPairing { pure_error: 0, .. })),
            "{v:?}"
        );
    }

    #[test]
    fn syndrome_examples() {
        let c = StabilizerCode::steane();
        assert!(c.syndrome(&PauliString::identity(7)).unwrap().is_zero());
        assert_eq!(c.syndrome(&p("IIXIIII")).unwrap().to_string(), "000011");
        assert_eq!(c.syndrome(&c.pure_errors[1]).unwrap().to_string(), "010000");
        assert!(c.syndrome(&p("XX")).is_err());
    }

    #[test]
    fn pure_error_examples() {
        let c = StabilizerCode::steane();
        assert!(c.pure_error(&Syndrome::zero(6)).unwrap().is_identity());
        assert_eq!(
            c.pure_error(&Syndrome::parse("100000").unwrap()).unwrap(),
            p("IIZZIII")
        );
        assert_eq!(
            c.pure_error(&Syndrome::parse("011000").unwrap()).unwrap(),
            p("ZZIIIII")
        );
        for idx in 0..64 {
            let s = Syndrome::from_index(idx, 6);
            assert_eq!(c.syndrome(&c.pure_error(&s).unwrap()).unwrap(), s);
        }
    }

    #[test]
    fn logical_class_examples() {
        let c = StabilizerCode::steane();
        assert_eq!(c.logical_class(&p("XXXXXXX")).unwrap().to_string(), "X");
        assert_eq!(c.logical_class(&p("ZZZZZZZ")).unwrap().to_string(), "Z");
        assert_eq!(c.logical_class(&p("YYYYYYY")).unwrap().to_string(), "Y");
        for s in &c.stabilizers {
            assert_eq!(c.logical_class(s).unwrap().to_string(), "I");
        }
        let xs = c.logical_x[0].multiply(&c.stabilizers[1]).unwrap();
        assert_eq!(c.logical_class(&xs).unwrap().to_string(), "X");
        assert!(matches!(
            c.logical_class(&p("XIIIIII")),
            Err(Error::NonzeroSyndrome)
        ));
    }

    #[test]
    fn distances() {
        assert_eq!(StabilizerCode::steane().distance_bruteforce().unwrap(), 3);
        assert_eq!(StabilizerCode::trivial().distance_bruteforce().unwrap(), 1);
    }

    #[test]
    fn from_generators_reproduces_steane_group() {
        let s = StabilizerCode::steane();
        let c =
            StabilizerCode::from_generators(7, &s.stabilizers, &s.logical_x, &s.logical_z).unwrap();
        assert!(c.validate().is_empty(), "{:?}", c.validate());
        assert!(c.anticommuting_pure_errors().is_empty());
        for pe in &c.pure_errors {
            assert!(!pe.anticommutes(&c.logical_x[0]) && !pe.anticommutes(&c.logical_z[0]));
        }
        let a: Vec<Vec<u64>> = s.stabilizers.iter().map(gf2::pauli_row).collect();
        let mut both = a.clone();
        both.extend(c.stabilizers.iter().map(gf2::pauli_row));
        assert_eq!(gf2::rank(&both, 14), 6);
    }

    #[test]
    fn code_json_round_trip() {
        let c = StabilizerCode::steane();
        let back = StabilizerCode::from_json(&c.to_json().unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn class_index_round_trip() {
        for i in 0..64 {
            assert_eq!(LogicalClass::from_index(i, 3).index(), i);
        }
    }
}
