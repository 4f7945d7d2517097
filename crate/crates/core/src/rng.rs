//! Counter-based sampling: the stream of sample `i` depends only on `(seed, i)`.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform point of `[0,1)^k` as 64-bit fixed-point fractions with 53 random bits.
pub fn fixed_point(seed: u64, index: u64, out: &mut [u64]) {
    let mut rng = stream(seed, index);
    for x in out.iter_mut() {
        *x = rng.next_u64() & !((1u64 << 11) - 1);
    }
}

/// The same point as floats; exact since only 53 bits are set.
pub fn to_unit(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub fn uniform_point(seed: u64, index: u64, out: &mut [f64]) {
    let mut buf = vec![0u64; out.len()];
    fixed_point(seed, index, &mut buf);
    for (o, b) in out.iter_mut().zip(buf) {
        *o = to_unit(b);
    }
}

/// Point `index` of the additive recurrence with multipliers `1/phi_k^j` (the R_k sequence).
pub fn low_discrepancy(index: u64, dim: usize) -> Vec<f64> {
    // phi_k solves x^{k+1} = x + 1.
    let mut g = 2.0f64;
    for _ in 0..64 {
        g = (1.0 + g).powf(1.0 / (dim as f64 + 1.0));
    }
    (1..=dim)
        .map(|j| (0.5 + (index + 1) as f64 * g.powi(-(j as i32))).fract())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_keyed_by_index() {
        let mut a = [0u64; 3];
        let mut b = [0u64; 3];
        fixed_point(42, 7, &mut a);
        fixed_point(42, 7, &mut b);
        assert_eq!(a, b);
        fixed_point(42, 8, &mut b);
        assert_ne!(a, b);
        fixed_point(43, 7, &mut b);
        assert_ne!(a, b);
    }

    #[test]
    fn float_conversion_is_exact() {
        let mut a = [0u64; 4];
        fixed_point(1, 2, &mut a);
        for x in a {
            let f = to_unit(x);
            assert!((0.0..1.0).contains(&f));
            assert_eq!((f * 2f64.powi(64)) as u64, x);
        }
    }

    #[test]
    fn low_discrepancy_is_spread() {
        let pts: Vec<f64> = (0..64).map(|i| low_discrepancy(i, 1)[0]).collect();
        for k in 0..8 {
            let lo = k as f64 / 8.0;
            let c = pts.iter().filter(|&&x| x >= lo && x < lo + 0.125).count();
            assert!((6..=10).contains(&c), "bin {k}: {c}");
        }
    }
}
