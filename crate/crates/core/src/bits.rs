//! Packed bit-vector helpers over `u64` words.

pub fn words(n: usize) -> usize {
    n.div_ceil(64)
}

#[inline]
pub fn get(w: &[u64], i: usize) -> bool {
    (w[i >> 6] >> (i & 63)) & 1 == 1
}

#[inline]
pub fn put(w: &mut [u64], i: usize, v: bool) {
    let m = 1u64 << (i & 63);
    if v {
        w[i >> 6] |= m;
    } else {
        w[i >> 6] &= !m;
    }
}

#[inline]
pub fn flip(w: &mut [u64], i: usize) {
    w[i >> 6] ^= 1u64 << (i & 63);
}

#[inline]
pub fn xor_into(dst: &mut [u64], src: &[u64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= s;
    }
}

/// Reads `len <= 64` bits starting at bit `at`.
#[inline]
fn read(w: &[u64], at: usize, len: usize) -> u64 {
    let (q, r) = (at >> 6, at & 63);
    let mut v = w[q] >> r;
    if r != 0 && r + len > 64 {
        v |= w[q + 1] << (64 - r);
    }
    if len < 64 {
        v &= (1u64 << len) - 1;
    }
    v
}

/// Overwrites `len <= 64` bits at bit `at` with the low bits of `v`.
#[inline]
fn write(w: &mut [u64], at: usize, len: usize, v: u64) {
    let (q, r) = (at >> 6, at & 63);
    let mask = if len == 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    };
    w[q] = (w[q] & !(mask << r)) | ((v & mask) << r);
    if r != 0 && r + len > 64 {
        let spill = r + len - 64;
        let m2 = (1u64 << spill) - 1;
        w[q + 1] = (w[q + 1] & !m2) | ((v & mask) >> (64 - r));
    }
}

/// Copies `len` bits from `src[src_at..]` into `dst[dst_at..]`.
pub fn copy_range(src: &[u64], src_at: usize, dst: &mut [u64], dst_at: usize, len: usize) {
    let mut done = 0;
    while done < len {
        let chunk = (len - done).min(64);
        let v = read(src, src_at + done, chunk);
        write(dst, dst_at + done, chunk, v);
        done += chunk;
    }
}

pub fn ones(w: &[u64]) -> impl Iterator<Item = usize> + '_ {
    w.iter().enumerate().flat_map(|(q, &word)| {
        let mut rest = word;
        std::iter::from_fn(move || {
            if rest == 0 {
                return None;
            }
            let b = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            Some(q * 64 + b)
        })
    })
}
