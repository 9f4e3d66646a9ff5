//! Small integer helpers shared by the type algebra and the bound rules.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

/// Prime factorization by trial division, primes ascending.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    if n < 2 {
        return out;
    }
    for p in [2u64, 3, 5] {
        if n.is_multiple_of(p) {
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
    }
    // 6k +- 1 wheel
    let mut p = 7u64;
    let mut step = [4u64, 2, 4, 2, 4, 6, 2, 6].iter().cycle();
    while p.saturating_mul(p) <= n {
        if n.is_multiple_of(p) {
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += step.next().unwrap();
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Exponent of the prime `p` in `n` (n > 0).
pub fn valuation(mut n: u64, p: u64) -> u32 {
    let mut e = 0;
    while n.is_multiple_of(p) {
        n /= p;
        e += 1;
    }
    e
}

/// Largest `m` with `m^k <= n`.
pub fn iroot(n: &BigUint, k: u32) -> BigUint {
    assert!(k >= 1);
    if n.is_zero() || k == 1 {
        return n.clone();
    }
    // Start from a floating estimate and correct in both directions.
    let mut m = match n.to_f64() {
        Some(f) if f.is_finite() => BigUint::from(f.powf(1.0 / k as f64).floor().max(0.0) as u128),
        _ => n.nth_root(k),
    };
    while m.pow(k) > *n {
        m -= 1u32;
    }
    loop {
        let next = &m + BigUint::one();
        if next.pow(k) <= *n {
            m = next;
        } else {
            break;
        }
    }
    m
}

/// `u64` convenience around [`iroot`].
pub fn iroot_u64(n: u64, k: u32) -> u64 {
    iroot(&BigUint::from(n), k)
        .to_u64()
        .expect("root of a u64 fits in u64")
}

/// `sum_{i=0}^{k} m^i`, the geometric threshold `(m^{k+1}-1)/(m-1)` without the division.
pub fn geometric_sum(m: &BigUint, k: u32) -> BigUint {
    let mut acc = BigUint::zero();
    let mut pw = BigUint::one();
    for _ in 0..=k {
        acc += &pw;
        pw *= m;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorize_small() {
        assert_eq!(factorize(1), vec![]);
        assert_eq!(factorize(2), vec![(2, 1)]);
        assert_eq!(factorize(840), vec![(2, 3), (3, 1), (5, 1), (7, 1)]);
        assert_eq!(factorize(1_000_003), vec![(1_000_003, 1)]);
        assert_eq!(factorize(49 * 121 * 169), vec![(7, 2), (11, 2), (13, 2)]);
    }

    #[test]
    fn factorize_reconstructs() {
        for n in 1..5000u64 {
            let back: u64 = factorize(n).iter().map(|&(p, e)| p.pow(e)).product();
            assert_eq!(back, n);
        }
    }

    #[test]
    fn integer_roots() {
        assert_eq!(iroot_u64(23, 3), 2);
        assert_eq!(iroot_u64(27, 3), 3);
        assert_eq!(iroot_u64(26, 3), 2);
        assert_eq!(iroot_u64(1_000_000, 3), 100);
        assert_eq!(iroot_u64(999_999, 3), 99);
        assert_eq!(iroot_u64(7, 2), 2);
        assert_eq!(iroot_u64(5, 1), 5);
        assert_eq!(iroot_u64(1, 4), 1);
        let big = BigUint::from(10u32).pow(60) - 1u32;
        assert_eq!(iroot(&big, 3), BigUint::from(10u32).pow(20) - 1u32);
    }

    #[test]
    fn geometric() {
        assert_eq!(geometric_sum(&BigUint::from(2u32), 3), BigUint::from(15u32));
        assert_eq!(geometric_sum(&BigUint::from(1u32), 3), BigUint::from(4u32));
    }
}
