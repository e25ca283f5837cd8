//! Exact arithmetic: machine-word modular integers, the prime field `F_p`
//! and its extensions `F_{p^k}`.

mod ext;
pub mod poly;

pub use ext::{ext_field, ExtField, FieldElement};

use crate::error::{Error, Result};

/// Largest characteristic supported. Field representatives are stored as
/// `u32` and products are accumulated in `u64` without intermediate
/// reduction, which stays exact for `p < 2^16` and degrees below ~10^6.
pub const MAX_CHARACTERISTIC: u64 = 65_521;

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

pub fn lcm(a: u64, b: u64) -> u64 {
    if a == 0 || b == 0 {
        0
    } else {
        a / gcd(a, b) * b
    }
}

pub fn gcd_i64(a: i64, b: i64) -> i64 {
    gcd(a.unsigned_abs(), b.unsigned_abs()) as i64
}

/// Extended Euclid: returns `(g, x, y)` with `a*x + b*y = g >= 0`.
pub fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    let (mut old_r, mut r) = (a, b);
    let (mut old_s, mut s) = (1i128, 0i128);
    let (mut old_t, mut t) = (0i128, 1i128);
    while r != 0 {
        let q = old_r.div_euclid(r);
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
        (old_t, t) = (t, old_t - q * t);
    }
    if old_r < 0 {
        (-old_r, -old_s, -old_t)
    } else {
        (old_r, old_s, old_t)
    }
}

/// Writes a discriminant `d ≡ 0, 1 (mod 4)` as `f^2 d_0` with `d_0`
/// fundamental; returns `(d_0, f)`.
pub fn fundamental_discriminant(d: i64) -> (i64, u64) {
    let mut core = d;
    let mut f = 1u64;
    for (q, e) in factor(d.unsigned_abs()) {
        let sq = q.pow(e / 2);
        core /= (sq * sq) as i64;
        f *= sq;
    }
    // core is squarefree up to sign
    if core.rem_euclid(4) != 1 {
        core *= 4;
        f /= 2;
    }
    (core, f)
}

/// Inverse of `a` modulo `n`, if it exists.
pub fn mod_inv(a: i64, n: u64) -> Option<u64> {
    if n == 1 {
        return Some(0);
    }
    let (g, x, _) = ext_gcd(a.rem_euclid(n as i64) as i128, n as i128);
    if g != 1 {
        return None;
    }
    Some(x.rem_euclid(n as i128) as u64)
}

pub fn mod_pow(base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let m128 = m as u128;
    let mut b = (base % m) as u128;
    let mut acc: u128 = 1;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m128;
        }
        b = b * b % m128;
        exp >>= 1;
    }
    acc as u64
}

/// Deterministic Miller-Rabin, exact for every `u64`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for small in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(small) {
            return n == small;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = mod_pow(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = ((x as u128 * x as u128) % n as u128) as u64;
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Prime factorisation by trial division, as `(prime, exponent)` pairs in
/// increasing order.
pub fn factor(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            let mut e = 0;
            while n.is_multiple_of(d) {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Returns `(ell, k)` when `n = ell^k` is a prime power.
pub fn prime_power(n: u64) -> Option<(u64, u32)> {
    match factor(n).as_slice() {
        [(l, k)] => Some((*l, *k)),
        _ => None,
    }
}

pub fn isqrt(n: u64) -> u64 {
    if n < 2 {
        return n;
    }
    let mut x = (n as f64).sqrt() as u64;
    while x * x > n {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= n {
        x += 1;
    }
    x
}

/// Kronecker symbol `(d | n)` for `n > 0`.
pub fn kronecker(d: i64, n: u64) -> i32 {
    let mut result = 1i32;
    let mut n = n;
    let a = d;
    if n == 0 {
        return if a.unsigned_abs() == 1 { 1 } else { 0 };
    }
    while n.is_multiple_of(2) {
        n /= 2;
        match a.rem_euclid(8) {
            0 | 2 | 4 | 6 => return 0,
            3 | 5 => result = -result,
            _ => {}
        }
    }
    if n == 1 {
        return result;
    }
    // Jacobi symbol for odd n.
    let mut a = a.rem_euclid(n as i64) as u64;
    while a != 0 {
        while a.is_multiple_of(2) {
            a /= 2;
            if matches!(n % 8, 3 | 5) {
                result = -result;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            result = -result;
        }
        a %= n;
    }
    if n == 1 {
        result
    } else {
        0
    }
}

/// The prime field `F_p` with `3 < p < 2^16`, operating on canonical
/// representatives in `[0, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrimeField {
    p: u64,
}

impl PrimeField {
    pub fn new(p: u64) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if p <= 3 {
            return Err(Error::SmallCharacteristic(p));
        }
        if p > MAX_CHARACTERISTIC {
            return Err(Error::cap(
                format!("characteristic {p}"),
                MAX_CHARACTERISTIC,
            ));
        }
        Ok(PrimeField { p })
    }

    #[inline]
    pub fn p(&self) -> u64 {
        self.p
    }

    #[inline]
    pub fn reduce(&self, x: i64) -> u64 {
        x.rem_euclid(self.p as i64) as u64
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        (a + b) % self.p
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        (a + self.p - b) % self.p
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        (self.p - a) % self.p
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        a * b % self.p
    }

    pub fn pow(&self, a: u64, e: u64) -> u64 {
        mod_pow(a, e, self.p)
    }

    pub fn inv(&self, a: u64) -> Result<u64> {
        if a.is_multiple_of(self.p) {
            return Err(Error::ZeroInverse);
        }
        Ok(mod_inv(a as i64, self.p).expect("nonzero residue mod a prime is invertible"))
    }

    /// Legendre symbol as `-1`, `0` or `1`.
    pub fn legendre(&self, a: u64) -> i32 {
        let a = a % self.p;
        if a == 0 {
            return 0;
        }
        if self.pow(a, (self.p - 1) / 2) == 1 {
            1
        } else {
            -1
        }
    }

    /// Both square roots of `a`, smaller first, via Tonelli-Shanks.
    /// Zero yields `(0, 0)`; non-squares yield `None`.
    pub fn sqrt(&self, a: u64) -> Option<(u64, u64)> {
        let p = self.p;
        let a = a % p;
        if a == 0 {
            return Some((0, 0));
        }
        if self.legendre(a) != 1 {
            return None;
        }
        let mut q = p - 1;
        let mut s = 0u32;
        while q.is_multiple_of(2) {
            q /= 2;
            s += 1;
        }
        let z = (2..p).find(|&z| self.legendre(z) == -1)?;
        let mut m = s;
        let mut c = self.pow(z, q);
        let mut t = self.pow(a, q);
        let mut r = self.pow(a, q.div_ceil(2));
        while t != 1 {
            let mut i = 0;
            let mut t2 = t;
            while t2 != 1 {
                t2 = self.mul(t2, t2);
                i += 1;
            }
            let b = self.pow(c, 1 << (m - i - 1));
            m = i;
            c = self.mul(b, b);
            t = self.mul(t, c);
            r = self.mul(r, b);
        }
        let other = self.neg(r);
        Some((r.min(other), r.max(other)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fundamental_discriminants_by_largest_square() {
        // the fundamental part is d / f^2 for the largest f keeping d / f^2 a
        // discriminant
        for d in -400i64..=-3 {
            if !matches!(d.rem_euclid(4), 0 | 1) {
                continue;
            }
            let f = (1..=20u64)
                .rev()
                .find(|f| {
                    let q = (f * f) as i64;
                    d % q == 0 && matches!((d / q).rem_euclid(4), 0 | 1)
                })
                .unwrap();
            assert_eq!(fundamental_discriminant(d), (d / (f * f) as i64, f), "d={d}");
        }
        assert_eq!(fundamental_discriminant(-24), (-24, 1));
        assert_eq!(fundamental_discriminant(-16), (-4, 2));
        assert_eq!(fundamental_discriminant(-72), (-8, 3));
    }

    #[test]
    fn inverse_examples() {
        let f5 = PrimeField::new(5).unwrap();
        assert_eq!(f5.inv(1).unwrap(), 1);
        let f13 = PrimeField::new(13).unwrap();
        assert_eq!(f13.inv(4).unwrap(), 10);
        let f7 = PrimeField::new(7).unwrap();
        assert_eq!(f7.inv(0), Err(Error::ZeroInverse));
    }

    #[test]
    fn sqrt_matches_square_table() {
        let f7 = PrimeField::new(7).unwrap();
        assert_eq!(f7.sqrt(0), Some((0, 0)));
        assert_eq!(f7.sqrt(2), Some((3, 4)));
        assert_eq!(f7.sqrt(3), None);
        for p in [5u64, 7, 11, 13, 17, 41, 97, 113, 257] {
            let f = PrimeField::new(p).unwrap();
            for a in 0..p {
                let roots: Vec<u64> = (0..p).filter(|r| r * r % p == a).collect();
                match f.sqrt(a) {
                    None => assert!(roots.is_empty(), "p={p} a={a}"),
                    Some((r, s)) => {
                        assert!(roots.contains(&r) && roots.contains(&s));
                        assert!(r + s == p || r == 0);
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_small_and_composite_moduli() {
        assert_eq!(PrimeField::new(2), Err(Error::SmallCharacteristic(2)));
        assert_eq!(PrimeField::new(3), Err(Error::SmallCharacteristic(3)));
        assert_eq!(PrimeField::new(9), Err(Error::NotPrime(9)));
    }

    #[test]
    fn primality_and_factoring() {
        let primes: Vec<u64> = (0..60).filter(|&n| is_prime(n)).collect();
        assert_eq!(
            primes,
            vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59]
        );
        assert!(is_prime(1_000_000_007));
        assert!(!is_prime(3_215_031_751));
        assert_eq!(factor(360), vec![(2, 3), (3, 2), (5, 1)]);
        assert_eq!(prime_power(27), Some((3, 3)));
        assert_eq!(prime_power(12), None);
    }

    #[test]
    fn kronecker_agrees_with_residue_tables() {
        for l in [3u64, 5, 7, 11, 13, 47] {
            for d in -60i64..0 {
                let r = d.rem_euclid(l as i64) as u64;
                let expected = if r == 0 {
                    0
                } else if (1..l).any(|x| x * x % l == r) {
                    1
                } else {
                    -1
                };
                assert_eq!(kronecker(d, l), expected, "d={d} l={l}");
            }
        }
        assert_eq!(kronecker(-15, 2), 1);
        assert_eq!(kronecker(-20, 2), 0);
        assert_eq!(kronecker(-19, 2), -1);
    }
}
