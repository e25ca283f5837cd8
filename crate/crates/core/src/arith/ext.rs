use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigUint;
use num_traits::One;
use rand::Rng;

use super::poly::{self, Poly};
use super::{is_prime, MAX_CHARACTERISTIC};
use crate::error::{Error, Result};

/// An element of `F_{p^k}`, stored as the fully reduced residue of degree
/// `< k` (exactly `k` coefficients, lowest degree first). Equality is
/// representative equality.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldElement(Vec<u32>);

impl FieldElement {
    pub fn coeffs(&self) -> &[u32] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    /// The value in `F_p` when the element lies in the prime field.
    pub fn as_prime(&self) -> Option<u64> {
        if self.0[1..].iter().all(|&c| c == 0) {
            Some(self.0[0] as u64)
        } else {
            None
        }
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(c) = self.as_prime() {
            write!(f, "{c}")
        } else {
            write!(f, "{:?}", self.0)
        }
    }
}

struct SqrtData {
    two_adicity: u32,
    odd_part: BigUint,
    root_of_unity: FieldElement,
}

/// The field `F_{p^k} = F_p[x]/(f)` for the lexicographically smallest monic
/// irreducible `f` of degree `k`, ordering candidates by the coefficient
/// tuple `(c_{k-1}, ..., c_0)`. For `k = 1` the modulus is `x`.
pub struct ExtField {
    p: u64,
    k: usize,
    modulus: Poly,
    /// `x^k = sum c_j x^j` in the quotient.
    tail: Vec<(usize, u64)>,
    /// images of `x^i` under `y -> y^p`
    frob_rows: Vec<Vec<u32>>,
    order: BigUint,
    sqrt_data: OnceLock<SqrtData>,
}

impl fmt::Debug for ExtField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}^{} mod {:?}", self.p, self.k, self.modulus)
    }
}

impl PartialEq for ExtField {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.modulus == other.modulus
    }
}

impl Eq for ExtField {}

/// Shared, cached instance of `F_{p^k}`.
pub fn ext_field(p: u64, k: usize) -> Result<Arc<ExtField>> {
    static CACHE: OnceLock<Mutex<HashMap<(u64, usize), Arc<ExtField>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(f) = cache.lock().unwrap().get(&(p, k)) {
        return Ok(f.clone());
    }
    let field = Arc::new(ExtField::new(p, k)?);
    Ok(cache.lock().unwrap().entry((p, k)).or_insert(field).clone())
}

fn smallest_irreducible(p: u64, k: usize) -> Poly {
    if k == 1 {
        return vec![0, 1];
    }
    let mut digits = vec![0u32; k];
    loop {
        // constant term zero means x divides the candidate
        if digits[0] != 0 {
            let mut f: Poly = digits.clone();
            f.push(1);
            if poly::is_irreducible(&f, p) {
                return f;
            }
        }
        // increment with c_0 least significant
        let mut i = 0;
        loop {
            digits[i] += 1;
            if (digits[i] as u64) < p {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}

impl ExtField {
    pub fn new(p: u64, k: usize) -> Result<Self> {
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
        if k == 0 {
            return Err(Error::ZeroDegree);
        }
        Ok(Self::with_modulus(p, smallest_irreducible(p, k)))
    }

    fn with_modulus(p: u64, modulus: Poly) -> Self {
        let k = modulus.len() - 1;
        let tail = modulus[..k]
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(j, &c)| (j, (p - c as u64) % p))
            .collect();
        let mut field = ExtField {
            p,
            k,
            modulus,
            tail,
            frob_rows: Vec::new(),
            order: BigUint::from(p).pow(k as u32),
            sqrt_data: OnceLock::new(),
        };
        let mut rows = Vec::with_capacity(k);
        rows.push(field.one().0);
        if k > 1 {
            let xp = poly::powmod(&[0, 1], p, &field.modulus, p);
            let xp = field.from_poly(&xp);
            let mut cur = field.one();
            for _ in 1..k {
                cur = field.mul(&cur, &xp);
                rows.push(cur.0.clone());
            }
        }
        field.frob_rows = rows;
        field
    }

    pub fn characteristic(&self) -> u64 {
        self.p
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    /// Number of elements `p^k`.
    pub fn order(&self) -> &BigUint {
        &self.order
    }

    /// Number of elements when it fits in a `u64`.
    pub fn size(&self) -> Option<u64> {
        u64::try_from(&self.order).ok()
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement(vec![0; self.k])
    }

    pub fn one(&self) -> FieldElement {
        self.from_u64(1)
    }

    pub fn from_u64(&self, c: u64) -> FieldElement {
        let mut v = vec![0; self.k];
        v[0] = (c % self.p) as u32;
        FieldElement(v)
    }

    pub fn from_i64(&self, c: i64) -> FieldElement {
        self.from_u64(c.rem_euclid(self.p as i64) as u64)
    }

    /// Reduces an arbitrary polynomial in the generator.
    pub fn from_poly(&self, coeffs: &[u32]) -> FieldElement {
        let reduced: Vec<u32> = coeffs.iter().map(|&c| (c as u64 % self.p) as u32).collect();
        let mut r = poly::rem(&reduced, &self.modulus, self.p);
        r.resize(self.k, 0);
        FieldElement(r)
    }

    /// The element whose base-`p` digits (lowest coefficient first) are `index`.
    pub fn element_at(&self, mut index: u64) -> FieldElement {
        let mut v = vec![0; self.k];
        for c in v.iter_mut() {
            *c = (index % self.p) as u32;
            index /= self.p;
        }
        FieldElement(v)
    }

    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> FieldElement {
        FieldElement(
            (0..self.k)
                .map(|_| rng.gen_range(0..self.p) as u32)
                .collect(),
        )
    }

    /// The generator `x` of the extension (equal to `0` when `k = 1`).
    pub fn generator(&self) -> FieldElement {
        self.from_poly(&[0, 1])
    }

    pub fn add(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        let p = self.p as u32;
        FieldElement(
            a.0.iter()
                .zip(&b.0)
                .map(|(&x, &y)| {
                    let s = x + y;
                    if s >= p {
                        s - p
                    } else {
                        s
                    }
                })
                .collect(),
        )
    }

    pub fn sub(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        let p = self.p as u32;
        FieldElement(
            a.0.iter()
                .zip(&b.0)
                .map(|(&x, &y)| if x >= y { x - y } else { x + p - y })
                .collect(),
        )
    }

    pub fn neg(&self, a: &FieldElement) -> FieldElement {
        let p = self.p as u32;
        FieldElement(
            a.0.iter()
                .map(|&x| if x == 0 { 0 } else { p - x })
                .collect(),
        )
    }

    pub fn scale(&self, a: &FieldElement, c: u64) -> FieldElement {
        let c = c % self.p;
        FieldElement(
            a.0.iter()
                .map(|&x| (x as u64 * c % self.p) as u32)
                .collect(),
        )
    }

    fn reduce_wide(&self, mut acc: Vec<u64>) -> FieldElement {
        let k = self.k;
        let p = self.p;
        for i in (k..acc.len()).rev() {
            let c = acc[i] % p;
            if c == 0 {
                continue;
            }
            for &(j, t) in &self.tail {
                acc[i - k + j] += c * t;
            }
        }
        acc.truncate(k);
        FieldElement(acc.into_iter().map(|c| (c % p) as u32).collect())
    }

    pub fn mul(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        let k = self.k;
        if k == 1 {
            return FieldElement(vec![(a.0[0] as u64 * b.0[0] as u64 % self.p) as u32]);
        }
        let mut acc = vec![0u64; 2 * k - 1];
        for (i, &x) in a.0.iter().enumerate() {
            if x == 0 {
                continue;
            }
            let x = x as u64;
            for (slot, &y) in acc[i..i + k].iter_mut().zip(&b.0) {
                *slot += x * y as u64;
            }
        }
        self.reduce_wide(acc)
    }

    pub fn square(&self, a: &FieldElement) -> FieldElement {
        self.mul(a, a)
    }

    pub fn inv(&self, a: &FieldElement) -> Result<FieldElement> {
        if a.is_zero() {
            return Err(Error::ZeroInverse);
        }
        if self.k == 1 {
            let v = super::mod_inv(a.0[0] as i64, self.p).ok_or(Error::ZeroInverse)?;
            return Ok(FieldElement(vec![v as u32]));
        }
        let mut a_poly = a.0.clone();
        poly::trim(&mut a_poly);
        let inv = poly::inverse_mod(&a_poly, &self.modulus, self.p)
            .ok_or_else(|| Error::Internal("modulus is not irreducible".into()))?;
        let mut v = inv;
        v.resize(self.k, 0);
        Ok(FieldElement(v))
    }

    pub fn div(&self, a: &FieldElement, b: &FieldElement) -> Result<FieldElement> {
        Ok(self.mul(a, &self.inv(b)?))
    }

    pub fn pow_u64(&self, a: &FieldElement, mut e: u64) -> FieldElement {
        let mut acc = self.one();
        let mut base = a.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            e >>= 1;
            if e > 0 {
                base = self.square(&base);
            }
        }
        acc
    }

    pub fn pow(&self, a: &FieldElement, e: &BigUint) -> FieldElement {
        let mut acc = self.one();
        for i in (0..e.bits()).rev() {
            acc = self.square(&acc);
            if e.bit(i) {
                acc = self.mul(&acc, a);
            }
        }
        acc
    }

    /// The absolute Frobenius `y -> y^p`.
    pub fn frobenius(&self, a: &FieldElement) -> FieldElement {
        if self.k == 1 {
            return a.clone();
        }
        let mut acc = vec![0u64; self.k];
        for (row, &c) in self.frob_rows.iter().zip(&a.0) {
            if c == 0 {
                continue;
            }
            let c = c as u64;
            for (slot, &r) in acc.iter_mut().zip(row) {
                *slot += c * r as u64;
            }
        }
        FieldElement(acc.into_iter().map(|c| (c % self.p) as u32).collect())
    }

    pub fn frobenius_pow(&self, a: &FieldElement, times: usize) -> FieldElement {
        let mut out = a.clone();
        for _ in 0..times % self.k {
            out = self.frobenius(&out);
        }
        out
    }

    /// Norm down to `F_p`, the product of all Galois conjugates.
    pub fn norm(&self, a: &FieldElement) -> u64 {
        let mut acc = a.clone();
        let mut conj = a.clone();
        for _ in 1..self.k {
            conj = self.frobenius(&conj);
            acc = self.mul(&acc, &conj);
        }
        acc.as_prime().expect("norm lies in the prime field")
    }

    pub fn is_square(&self, a: &FieldElement) -> bool {
        if a.is_zero() {
            return true;
        }
        let n = self.norm(a);
        super::mod_pow(n, (self.p - 1) / 2, self.p) == 1
    }

    fn sqrt_data(&self) -> &SqrtData {
        self.sqrt_data.get_or_init(|| {
            let q1: BigUint = &self.order - 1u32;
            let two_adicity = q1.trailing_zeros().expect("q - 1 is nonzero") as u32;
            let odd_part = &q1 >> two_adicity;
            let z = (1u64..)
                .map(|i| self.element_at(i))
                .find(|z| !self.is_square(z))
                .expect("a non-square exists in an odd-order field");
            let root_of_unity = self.pow(&z, &odd_part);
            SqrtData {
                two_adicity,
                odd_part,
                root_of_unity,
            }
        })
    }

    /// A square root of `a` by Tonelli-Shanks, or `None` for non-squares.
    /// The other root is its negative.
    pub fn sqrt(&self, a: &FieldElement) -> Option<FieldElement> {
        if a.is_zero() {
            return Some(self.zero());
        }
        if !self.is_square(a) {
            return None;
        }
        let data = self.sqrt_data();
        let one = self.one();
        let mut m = data.two_adicity;
        let mut c = data.root_of_unity.clone();
        let mut t = self.pow(a, &data.odd_part);
        let half: BigUint = (&data.odd_part + BigUint::one()) >> 1;
        let mut r = self.pow(a, &half);
        while t != one {
            let mut i = 0;
            let mut t2 = t.clone();
            while t2 != one {
                t2 = self.square(&t2);
                i += 1;
            }
            let mut b = c.clone();
            for _ in 0..(m - i - 1) {
                b = self.square(&b);
            }
            m = i;
            c = self.square(&b);
            t = self.mul(&t, &c);
            r = self.mul(&r, &b);
        }
        debug_assert_eq!(&self.square(&r), a);
        Some(r)
    }

    /// Iterates over every element; only sensible for small fields.
    pub fn elements(&self) -> impl Iterator<Item = FieldElement> + '_ {
        let size = self.size().expect("field too large to enumerate");
        (0..size).map(move |i| self.element_at(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn naive_pow(f: &ExtField, a: &FieldElement, e: u64) -> FieldElement {
        let mut acc = f.one();
        for _ in 0..e {
            acc = f.mul(&acc, a);
        }
        acc
    }

    #[test]
    fn degree_one_is_passthrough() {
        let f = ExtField::new(5, 1).unwrap();
        assert_eq!(f.modulus(), &[0, 1]);
        assert_eq!(f.size(), Some(5));
        let a = f.from_u64(3);
        assert_eq!(f.mul(&a, &a), f.from_u64(4));
    }

    #[test]
    fn f25_modulus_is_first_irreducible() {
        let f = ExtField::new(5, 2).unwrap();
        assert_eq!(f.modulus(), &[2, 0, 1]);
        // oracle: x^2 + 2 has no root in F_5, while x^2 and x^2 + 1 do
        assert!((0..5u64).all(|x| (x * x + 2) % 5 != 0));
        assert!((0..5u64).any(|x| (x * x + 1) % 5 == 0));
    }

    #[test]
    fn rejects_small_characteristic() {
        assert_eq!(
            ExtField::new(2, 3).unwrap_err(),
            Error::SmallCharacteristic(2)
        );
        assert_eq!(ExtField::new(5, 0).unwrap_err(), Error::ZeroDegree);
    }

    #[test]
    fn frobenius_fixes_prime_field_and_has_order_k() {
        let f = ExtField::new(5, 2).unwrap();
        let g = f.generator();
        let g5 = f.frobenius(&g);
        assert_eq!(g5, naive_pow(&f, &g, 5));
        assert_eq!(f.frobenius(&g5), g);
        for c in 0..5 {
            assert_eq!(f.frobenius(&f.from_u64(c)), f.from_u64(c));
        }
        let f3 = ExtField::new(7, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let x = f3.random(&mut rng);
            assert_eq!(f3.frobenius(&x), naive_pow(&f3, &x, 7));
            assert_eq!(f3.frobenius_pow(&x, 3), x);
        }
    }

    #[test]
    fn every_element_satisfies_x_to_the_q() {
        for (p, k) in [(5u64, 2usize), (5, 3), (5, 4), (7, 3)] {
            let f = ExtField::new(p, k).unwrap();
            let q = f.order().clone();
            for x in f.elements() {
                assert_eq!(f.pow(&x, &q), x);
            }
        }
    }

    #[test]
    fn field_axioms_on_random_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (p, k) in [(7u64, 1usize), (11, 2), (13, 5), (101, 4)] {
            let f = ExtField::new(p, k).unwrap();
            for _ in 0..50 {
                let (a, b, c) = (f.random(&mut rng), f.random(&mut rng), f.random(&mut rng));
                assert_eq!(f.mul(&f.mul(&a, &b), &c), f.mul(&a, &f.mul(&b, &c)));
                assert_eq!(
                    f.mul(&a, &f.add(&b, &c)),
                    f.add(&f.mul(&a, &b), &f.mul(&a, &c))
                );
                assert_eq!(
                    f.frobenius(&f.add(&a, &b)),
                    f.add(&f.frobenius(&a), &f.frobenius(&b))
                );
                assert_eq!(
                    f.frobenius(&f.mul(&a, &b)),
                    f.mul(&f.frobenius(&a), &f.frobenius(&b))
                );
                if !a.is_zero() {
                    let ai = f.inv(&a).unwrap();
                    assert_eq!(f.mul(&a, &ai), f.one());
                }
            }
        }
    }

    #[test]
    fn sqrt_in_extension() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (p, k) in [(5u64, 2usize), (13, 3), (17, 4), (7, 6)] {
            let f = ExtField::new(p, k).unwrap();
            for _ in 0..30 {
                let x = f.random(&mut rng);
                let sq = f.square(&x);
                let r = f.sqrt(&sq).unwrap();
                assert!(r == x || r == f.neg(&x));
            }
            let squares = (0..200)
                .filter(|_| f.is_square(&f.random(&mut rng)))
                .count();
            assert!(squares > 50 && squares < 150);
        }
    }
}
