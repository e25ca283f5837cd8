//! Elliptic curves `y^2 = x^3 + Ax + B` over `F_p`, their base changes to
//! `F_{p^m}`, point counting and torsion.

mod point;
mod torsion;
mod weil;

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::{BigInt, BigUint};
use num_traits::{Signed, ToPrimitive};
use serde::Serialize;

pub use point::{CurveOver, Point};
pub use torsion::{
    mult_image_of_torsion, preimage_image_check, ImageReport, PreimageReport, Sylow, TorsionBasis,
    TorsionSubgroup,
};

use crate::arith::{ext_field, factor, lcm, mod_pow, PrimeField};
use crate::error::{Error, Result};

/// Default upper bound on the degree of an ambient extension `F_{p^m}`.
pub const DEFAULT_DEGREE_CAP: usize = 128;

/// Largest field size `p^m` for which points are listed exhaustively.
pub const ENUMERATION_CAP: u64 = 100_000_000;

/// A nonsingular curve `y^2 = x^3 + Ax + B` over `F_p`, `p > 3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Curve {
    p: u64,
    a: u64,
    b: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PointCount {
    pub order: u64,
    pub trace: i64,
}

impl Curve {
    pub fn new(p: u64, a: i64, b: i64) -> Result<Self> {
        let f = PrimeField::new(p)?;
        let (a, b) = (f.reduce(a), f.reduce(b));
        let disc = f.add(f.mul(4, f.pow(a, 3)), f.mul(27, f.mul(b, b)));
        if disc == 0 {
            return Err(Error::SingularCurve { p });
        }
        Ok(Curve { p, a, b })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn a(&self) -> u64 {
        self.a
    }

    pub fn b(&self) -> u64 {
        self.b
    }

    pub fn field(&self) -> PrimeField {
        PrimeField::new(self.p).expect("validated at construction")
    }

    pub fn j_invariant(&self) -> u64 {
        let f = self.field();
        let a3 = f.mul(4, f.pow(self.a, 3));
        let den = f.add(a3, f.mul(27, f.mul(self.b, self.b)));
        f.mul(f.mul(1728, a3), f.inv(den).expect("nonsingular"))
    }

    /// `#E(F_p)` by scanning every `x`, and the trace `p + 1 - #E(F_p)`.
    pub fn count_points(&self) -> PointCount {
        let p = self.p;
        let mut is_square = vec![false; p as usize];
        for y in 0..p {
            is_square[(y * y % p) as usize] = true;
        }
        let mut order = 1u64;
        for x in 0..p {
            let rhs = ((x * x % p + self.a) % p * x + self.b) % p;
            order += match rhs {
                0 => 1,
                r if is_square[r as usize] => 2,
                _ => 0,
            };
        }
        PointCount {
            order,
            trace: p as i64 + 1 - order as i64,
        }
    }

    pub fn trace(&self) -> i64 {
        static CACHE: OnceLock<Mutex<HashMap<Curve, i64>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        if let Some(&t) = cache.lock().unwrap().get(self) {
            return t;
        }
        let t = self.count_points().trace;
        cache.lock().unwrap().insert(*self, t);
        t
    }

    pub fn is_ordinary(&self) -> bool {
        self.trace() % self.p as i64 != 0
    }

    /// `#E(F_{p^k})`.
    pub fn order_over(&self, k: usize) -> BigUint {
        order_over_extension(self.trace(), self.p, k)
    }

    /// Some `u` with `A' = u^4 A` and `B' = u^6 B`, i.e. an isomorphism
    /// `(x, y) -> (u^2 x, u^3 y)` from `self` onto `other` over `F_p`.
    pub fn isomorphism_to(&self, other: &Curve) -> Option<u64> {
        if self.p != other.p {
            return None;
        }
        let f = self.field();
        (1..self.p).find(|&u| {
            let u2 = f.mul(u, u);
            let u4 = f.mul(u2, u2);
            f.mul(u4, self.a) == other.a && f.mul(f.mul(u4, u2), self.b) == other.b
        })
    }

    /// Every `u` giving an isomorphism onto `other`; more than two only
    /// when `j` is 0 or 1728.
    pub fn isomorphisms_to(&self, other: &Curve) -> Vec<u64> {
        if self.p != other.p {
            return Vec::new();
        }
        let f = self.field();
        (1..self.p)
            .filter(|&u| {
                let u2 = f.mul(u, u);
                let u4 = f.mul(u2, u2);
                f.mul(u4, self.a) == other.a && f.mul(f.mul(u4, u2), self.b) == other.b
            })
            .collect()
    }

    pub fn is_isomorphic(&self, other: &Curve) -> bool {
        self.isomorphism_to(other).is_some()
    }

    /// The smallest `(A, B)` in the `F_p`-isomorphism class, together with
    /// `u` such that `self = (u^4 A, u^6 B)`.
    pub fn canonical(&self) -> (Curve, u64) {
        let f = self.field();
        let mut best = (*self, 1u64);
        for u in 1..self.p {
            let u2 = f.mul(u, u);
            let u4 = f.mul(u2, u2);
            let c = Curve {
                p: self.p,
                a: f.mul(u4, self.a),
                b: f.mul(f.mul(u4, u2), self.b),
            };
            if (c.a, c.b) < (best.0.a, best.0.b) {
                // self = (v^4 c.a, v^6 c.b) with v = u^{-1}
                best = (c, f.inv(u).expect("u is a unit"));
            }
        }
        best
    }

    /// The base change to `F_{p^m}`, shared through a global cache.
    pub fn over(&self, m: usize) -> Result<Arc<CurveOver>> {
        static CACHE: OnceLock<Mutex<HashMap<(Curve, usize), Arc<CurveOver>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        if let Some(c) = cache.lock().unwrap().get(&(*self, m)) {
            return Ok(c.clone());
        }
        let field = ext_field(self.p, m)?;
        let c = Arc::new(CurveOver::new(*self, field));
        Ok(cache.lock().unwrap().entry((*self, m)).or_insert(c).clone())
    }

    /// The smallest `m` with `E[n] ⊆ E(F_{p^m})`, searched up to `cap`.
    pub fn full_torsion_degree(&self, n: u64, cap: usize) -> Result<usize> {
        if n == 0 {
            return Err(Error::Precondition("level must be positive".into()));
        }
        if n.is_multiple_of(self.p) {
            return Err(Error::LevelNotCoprime { n, p: self.p });
        }
        let mut m = 1usize;
        for (ell, k) in factor(n) {
            let d = self.prime_power_torsion_degree(ell, k, cap)?;
            m = lcm(m as u64, d as u64) as usize;
            if m > cap {
                return Err(Error::cap(
                    format!("torsion field degree for level {n}"),
                    cap,
                ));
            }
        }
        Ok(m)
    }

    fn prime_power_torsion_degree(&self, ell: u64, k: u32, cap: usize) -> Result<usize> {
        static CACHE: OnceLock<Mutex<HashMap<(Curve, u64, u32), usize>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        if let Some(&d) = cache.lock().unwrap().get(&(*self, ell, k)) {
            return if d <= cap {
                Ok(d)
            } else {
                Err(Error::cap(
                    format!("torsion field degree for level {}", ell.pow(k)),
                    cap,
                ))
            };
        }
        let q = ell.pow(k);
        // the degree for ell^k is a multiple of the degree for ell^(k-1)
        let step = if k > 1 {
            self.prime_power_torsion_degree(ell, k - 1, cap)?
        } else {
            1
        };
        let q2 = BigUint::from(q * q);
        let mut m = step;
        while m <= cap {
            // Weil pairing: E[q] ⊆ E(F_{p^m}) forces q | p^m - 1
            if mod_pow(self.p, m as u64, q) == 1 % q
                && (self.order_over(m) % &q2) == BigUint::from(0u32)
            {
                let c = self.over(m)?;
                if c.sylow(ell).min_exponent() >= k {
                    cache.lock().unwrap().insert((*self, ell, k), m);
                    return Ok(m);
                }
            }
            m += step;
        }
        Err(Error::cap(
            format!("torsion field degree for level {q}"),
            cap,
        ))
    }

    /// A basis of `E[n]` over the smallest extension containing it.
    pub fn torsion_basis(&self, n: u64, cap: usize) -> Result<TorsionBasis> {
        let m = self.full_torsion_degree(n, cap)?;
        self.over(m)?.torsion_basis(n)
    }
}

/// Bases of `E[n]` and `E'[n]` over one field containing both.
pub fn torsion_bases_over_common_field(
    e: &Curve,
    e2: &Curve,
    n: u64,
    cap: usize,
) -> Result<(TorsionBasis, TorsionBasis)> {
    let m = lcm(
        e.full_torsion_degree(n, cap)? as u64,
        e2.full_torsion_degree(n, cap)? as u64,
    ) as usize;
    if m > cap {
        return Err(Error::cap(
            format!("common torsion field for level {n}"),
            cap,
        ));
    }
    Ok((e.over(m)?.torsion_basis(n)?, e2.over(m)?.torsion_basis(n)?))
}

/// `p^k + 1 - t_k` with `t_0 = 2`, `t_1 = a` and
/// `t_j = a t_{j-1} - p t_{j-2}`.
pub fn order_over_extension(trace: i64, p: u64, k: usize) -> BigUint {
    let (a, pb) = (BigInt::from(trace), BigInt::from(p));
    let (mut t0, mut t1) = (BigInt::from(2), a.clone());
    for _ in 1..k {
        let t2 = &a * &t1 - &pb * &t0;
        t0 = t1;
        t1 = t2;
    }
    let tk = if k == 0 { t0 } else { t1 };
    let order: BigInt = pb.pow(k as u32) + 1 - tk;
    debug_assert!(!order.is_negative());
    order
        .to_biguint()
        .expect("Hasse bound keeps the order positive")
}

/// Trace `t_k` of the `p^k`-power Frobenius as a machine integer.
pub fn trace_over_extension(trace: i64, p: u64, k: usize) -> BigInt {
    let (a, pb) = (BigInt::from(trace), BigInt::from(p));
    let (mut t0, mut t1) = (BigInt::from(2), a.clone());
    if k == 0 {
        return t0;
    }
    for _ in 1..k {
        let t2 = &a * &t1 - &pb * &t0;
        t0 = t1;
        t1 = t2;
    }
    t1
}

/// Every nonsingular curve over `F_p`, grouped into `F_p`-isomorphism
/// classes. Each class is listed under its smallest `(A, B)`.
pub fn isomorphism_classes(p: u64) -> Result<Vec<(Curve, Vec<Curve>)>> {
    let f = PrimeField::new(p)?;
    let mut seen = vec![false; (p * p) as usize];
    let mut out = Vec::new();
    for a in 0..p {
        for b in 0..p {
            if seen[(a * p + b) as usize] {
                continue;
            }
            let Ok(rep) = Curve::new(p, a as i64, b as i64) else {
                seen[(a * p + b) as usize] = true;
                continue;
            };
            let mut members = Vec::new();
            for u in 1..p {
                let u2 = f.mul(u, u);
                let u4 = f.mul(u2, u2);
                let (a2, b2) = (f.mul(u4, a), f.mul(f.mul(u4, u2), b));
                let slot = (a2 * p + b2) as usize;
                if !seen[slot] {
                    seen[slot] = true;
                    members.push(Curve { p, a: a2, b: b2 });
                }
            }
            members.sort();
            out.push((rep, members));
        }
    }
    Ok(out)
}

pub(crate) fn ordinary_or_err(c: &Curve) -> Result<()> {
    if c.is_ordinary() {
        Ok(())
    } else {
        Err(Error::Supersingular { trace: c.trace() })
    }
}

pub(crate) fn big_to_u64(x: &BigUint) -> Option<u64> {
    x.to_u64()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_counts() {
        let e = Curve::new(5, 1, 0).unwrap();
        assert_eq!(e.count_points(), PointCount { order: 4, trace: 2 });
        let e = Curve::new(5, 0, 1).unwrap();
        assert_eq!(e.count_points(), PointCount { order: 6, trace: 0 });
        assert!(!e.is_ordinary());
        assert_eq!(order_over_extension(2, 5, 1), BigUint::from(4u32));
        assert_eq!(order_over_extension(2, 5, 2), BigUint::from(32u32));
    }

    #[test]
    fn singular_curves_rejected() {
        assert_eq!(Curve::new(5, 0, 0), Err(Error::SingularCurve { p: 5 }));
        assert!(Curve::new(2, 1, 1).is_err());
    }

    #[test]
    fn classes_partition_nonsingular_pairs() {
        for p in [5u64, 7, 11, 13] {
            let classes = isomorphism_classes(p).unwrap();
            let total: usize = classes.iter().map(|(_, m)| m.len()).sum();
            let nonsingular = (0..p)
                .flat_map(|a| (0..p).map(move |b| (a, b)))
                .filter(|&(a, b)| Curve::new(p, a as i64, b as i64).is_ok())
                .count();
            assert_eq!(total, nonsingular);
            for (rep, members) in &classes {
                assert_eq!(rep.canonical().0, *rep);
                for m in members {
                    assert_eq!(m.count_points(), rep.count_points());
                    let (c, u) = m.canonical();
                    assert_eq!(c, *rep);
                    let f = c.field();
                    let u2 = f.mul(u, u);
                    assert_eq!(f.mul(f.mul(u2, u2), c.a()), m.a());
                    assert_eq!(f.mul(f.pow(u, 6), c.b()), m.b());
                }
            }
        }
    }

    #[test]
    fn hasse_bound_holds() {
        for p in [5u64, 7, 11, 13, 101] {
            for a in 0..p.min(20) {
                for b in 0..p.min(20) {
                    if let Ok(e) = Curve::new(p, a as i64, b as i64) {
                        let t = e.trace();
                        assert!((t * t) as u64 <= 4 * p);
                        assert_eq!(
                            order_over_extension(t, p, 1),
                            BigUint::from(e.count_points().order)
                        );
                    }
                }
            }
        }
    }
}
