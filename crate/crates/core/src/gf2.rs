//! Dense GF(2) elimination on packed rows.

use crate::bits;
use crate::pauli::PauliString;

/// Symplectic row `[x | z]` of a Pauli operator, 2n bits.
pub fn pauli_row(p: &PauliString) -> Vec<u64> {
    let n = p.len();
    let mut row = vec![0u64; bits::words(2 * n)];
    bits::copy_range(p.x_words(), 0, &mut row, 0, n);
    bits::copy_range(p.z_words(), 0, &mut row, n, n);
    row
}

pub fn row_pauli(row: &[u64], n: usize) -> PauliString {
    let mut x = vec![0u64; bits::words(n)];
    let mut z = vec![0u64; bits::words(n)];
    bits::copy_range(row, 0, &mut x, 0, n);
    bits::copy_range(row, n, &mut z, 0, n);
    PauliString::from_words(n, x, z)
}

/// Row `[z | x]`: dot products against it give the symplectic form.
pub fn swapped_row(p: &PauliString) -> Vec<u64> {
    pauli_row(&p.swap_xz())
}

/// Reduces `rows` (each `cols` bits wide) to reduced row-echelon form in place.
/// Zero rows are moved to the end; returns the pivot column of each leading row.
/// If `track` is given, the same row operations are applied to it.
pub fn rref(rows: &mut [Vec<u64>], cols: usize, mut track: Option<&mut [Vec<u64>]>) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows.len() {
            break;
        }
        let Some(p) = (r..rows.len()).find(|&i| bits::get(&rows[i], c)) else {
            continue;
        };
        rows.swap(r, p);
        if let Some(t) = track.as_deref_mut() {
            t.swap(r, p);
        }
        let pivot_row = rows[r].clone();
        let word = c >> 6;
        let (head, tail) = rows.split_at_mut(r);
        for (off, row) in head.iter_mut().chain(tail[1..].iter_mut()).enumerate() {
            if bits::get(row, c) {
                // only words from the pivot's word onward can be nonzero in the pivot row
                for w in word..row.len() {
                    row[w] ^= pivot_row[w];
                }
                if let Some(t) = track.as_deref_mut() {
                    let i = if off < r { off } else { off + 1 };
                    let src = t[r].clone();
                    bits::xor_into(&mut t[i], &src);
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(rows: &[Vec<u64>], cols: usize) -> usize {
    let mut m = rows.to_vec();
    rref(&mut m, cols, None).len()
}

/// Clears the pivot columns of `row` using an RREF basis with the given pivots.
pub fn reduce(row: &mut [u64], basis: &[Vec<u64>], pivots: &[usize]) {
    for (b, &c) in basis.iter().zip(pivots) {
        if bits::get(row, c) {
            bits::xor_into(row, b);
        }
    }
}

/// Dot product over GF(2).
pub fn dot(a: &[u64], b: &[u64]) -> bool {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x & y).count_ones())
        .sum::<u32>()
        & 1
        == 1
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(s: &str) -> Vec<u64> {
        let mut r = vec![0u64; bits::words(s.len())];
        for (i, c) in s.chars().enumerate() {
            bits::put(&mut r, i, c == '1');
        }
        r
    }

    #[test]
    fn rref_small() {
        let mut m = vec![row("1100"), row("0110"), row("1010"), row("0001")];
        let piv = rref(&mut m, 4, None);
        assert_eq!(piv, vec![0, 1, 3]);
        assert_eq!(m[0], row("1010"));
        assert_eq!(m[1], row("0110"));
        assert_eq!(m[2], row("0001"));
        assert_eq!(m[3], row("0000"));
    }

    #[test]
    fn tracking_records_combinations() {
        let orig = vec![row("1101"), row("0111"), row("1110")];
        let mut m = orig.clone();
        let mut t: Vec<Vec<u64>> = (0..3)
            .map(|i| {
                let mut r = vec![0u64; 1];
                bits::put(&mut r, i, true);
                r
            })
            .collect();
        rref(&mut m, 4, Some(&mut t));
        for (reduced, comb) in m.iter().zip(&t) {
            let mut acc = vec![0u64; 1];
            for i in bits::ones(comb) {
                bits::xor_into(&mut acc, &orig[i]);
            }
            assert_eq!(&acc, reduced);
        }
    }

    #[test]
    fn pauli_row_round_trip() {
        let p: PauliString = "XYZI".repeat(20).parse().unwrap();
        assert_eq!(row_pauli(&pauli_row(&p), p.len()), p);
    }
}
