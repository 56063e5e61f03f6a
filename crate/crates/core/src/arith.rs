//! Small integer helpers: gcd, trial-division factorization, Möbius,
//! Jordan totient, modular reduction, integer powers.

use num_integer::Integer;

pub fn gcd(a: i64, b: i64) -> i64 {
    a.gcd(&b)
}

pub fn gcd3(a: i64, b: i64, c: i64) -> i64 {
    gcd(gcd(a, b), c)
}

/// Nonnegative residue of `x` modulo `q` (q > 0).
#[inline]
pub fn modq(x: i128, q: i64) -> i64 {
    x.rem_euclid(q as i128) as i64
}

/// Prime factorization by trial division, as `(p, e)` pairs with p ascending.
pub fn factorize(mut q: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= q {
        if q.is_multiple_of(p) {
            let mut e = 0;
            while q.is_multiple_of(p) {
                q /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if q > 1 {
        out.push((q, 1));
    }
    out
}

pub fn is_prime(p: u64) -> bool {
    p >= 2 && factorize(p) == [(p, 1)]
}

pub fn mobius(q: u64) -> i64 {
    let f = factorize(q);
    if f.iter().any(|&(_, e)| e > 1) {
        0
    } else if f.len().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

pub fn divisors(q: u64) -> Vec<u64> {
    let mut ds = vec![1u64];
    for (p, e) in factorize(q) {
        let cur = ds.clone();
        let mut pk = 1;
        for _ in 0..e {
            pk *= p;
            ds.extend(cur.iter().map(|d| d * pk));
        }
    }
    ds.sort_unstable();
    ds
}

/// Number of pairs `(a3, a2)` modulo `q` with `gcd(q, a3, a2) = 1`.
pub fn jordan2(q: u64) -> u64 {
    let mut j = q * q;
    for (p, _) in factorize(q) {
        j = j / (p * p) * (p * p - 1);
    }
    j
}

/// `p`-adic valuation of a nonzero integer.
pub fn valuation(mut x: i128, p: u64) -> u32 {
    debug_assert!(x != 0);
    let p = p as i128;
    let mut v = 0;
    while x % p == 0 {
        x /= p;
        v += 1;
    }
    v
}

/// `base^exp` as u128, `None` on overflow.
pub fn checked_pow(base: u64, exp: u32) -> Option<u128> {
    (base as u128).checked_pow(exp)
}

/// Distance from `x` to the nearest integer.
pub fn dist_to_int(x: f64) -> f64 {
    (x - x.round()).abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorize_small() {
        assert_eq!(factorize(1), vec![]);
        assert_eq!(factorize(12), vec![(2, 2), (3, 1)]);
        assert_eq!(factorize(97), vec![(97, 1)]);
        assert_eq!(factorize(1000), vec![(2, 3), (5, 3)]);
    }

    #[test]
    fn jordan_matches_count() {
        for q in 1..30u64 {
            let mut c = 0;
            for a in 0..q as i64 {
                for b in 0..q as i64 {
                    if gcd3(q as i64, a, b) == 1 {
                        c += 1;
                    }
                }
            }
            assert_eq!(jordan2(q), c, "q={q}");
        }
    }

    #[test]
    fn mobius_values() {
        assert_eq!(mobius(1), 1);
        assert_eq!(mobius(6), 1);
        assert_eq!(mobius(4), 0);
        assert_eq!(mobius(30), -1);
        assert_eq!(divisors(12), vec![1, 2, 3, 4, 6, 12]);
    }
}
