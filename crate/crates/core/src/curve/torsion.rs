use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{CurveOver, Point, DEFAULT_DEGREE_CAP};
use crate::arith::{factor, gcd, mod_inv, ExtField};
use crate::error::{Error, Result};
use crate::linalg::Mat2;

/// The `ell`-primary part of `E(F_{p^m})` as a direct sum of at most two
/// cyclic groups, largest first: `gens[i] = (generator, exponent)`.
#[derive(Clone, Debug)]
pub struct Sylow {
    pub ell: u64,
    pub exponent: u32,
    pub gens: Vec<(Point, u32)>,
}

impl Sylow {
    pub fn max_exponent(&self) -> u32 {
        self.gens.first().map_or(0, |g| g.1)
    }

    pub fn min_exponent(&self) -> u32 {
        if self.gens.len() == 2 {
            self.gens[1].1
        } else {
            0
        }
    }
}

fn seed(parts: &[u64]) -> u64 {
    parts.iter().fold(0x9e37_79b9_7f4a_7c15u64, |h, &x| {
        (h ^ x).wrapping_mul(0x1000_0000_01b3).rotate_left(29)
    })
}

/// The isomorphism `(x, y) -> (u^2 x, u^3 y)`.
fn scale_point(f: &ExtField, pt: &Point, u: u64) -> Point {
    match pt {
        Point::Identity => Point::Identity,
        Point::Affine { x, y } => {
            let u2 = u * u % f.characteristic();
            Point::Affine {
                x: f.scale(x, u2),
                y: f.scale(y, u2 * u % f.characteristic()),
            }
        }
    }
}

impl CurveOver {
    /// Smallest `j` with `ell^j P = O`, for `P` in the `ell`-primary part.
    fn ell_exponent(&self, pt: &Point, ell: u64) -> u32 {
        let mut j = 0;
        let mut cur = pt.clone();
        while !cur.is_identity() {
            cur = self.mul_u64(&cur, ell);
            j += 1;
        }
        j
    }

    /// Discrete logarithm of `s` to the base `g`, where `g` has order
    /// `ell^b`. Returns `None` when `s` is not in `<g>`.
    pub fn dlog_cyclic(&self, g: &Point, ell: u64, b: u32, s: &Point) -> Option<u64> {
        if b == 0 {
            return s.is_identity().then_some(0);
        }
        let g0 = self.mul_u64(g, ell.pow(b - 1));
        let mut table = HashMap::new();
        let mut cur = Point::Identity;
        for k in 0..ell {
            table.insert(cur.clone(), k);
            cur = self.add(&cur, &g0);
        }
        let mut x = 0u64;
        for i in 0..b {
            let rest = self.sub(s, &self.mul_u64(g, x));
            let probe = self.mul_u64(&rest, ell.pow(b - 1 - i));
            let digit = *table.get(&probe)?;
            x += digit * ell.pow(i);
        }
        (self.mul_u64(g, x) == *s).then_some(x)
    }

    /// The `ell`-Sylow subgroup as `<P> + <Q>`, found by random sampling and
    /// certified by `#<P> * #<Q> = ell^{v_ell(#E)}` with `<P> ∩ <Q> = 0`.
    pub fn sylow(&self, ell: u64) -> Sylow {
        if let Some(s) = self.sylow_cache().lock().unwrap().get(&ell) {
            return s.clone();
        }
        let s = self.sylow_uncached(ell);
        self.sylow_cache().lock().unwrap().insert(ell, s.clone());
        s
    }

    fn sylow_uncached(&self, ell: u64) -> Sylow {
        let (canon, u) = self.curve().canonical();
        if canon != *self.curve() {
            // transport from the class representative
            let c = canon.over(self.degree()).expect("same field");
            let s = c.sylow(ell);
            let f = self.field();
            return Sylow {
                ell,
                exponent: s.exponent,
                gens: s
                    .gens
                    .iter()
                    .map(|(g, k)| (scale_point(f, g, u), *k))
                    .collect(),
            };
        }
        let n = self.order().clone();
        let ell_big = BigUint::from(ell);
        let mut e = 0u32;
        let mut cofactor = n.clone();
        while (&cofactor % &ell_big).is_zero() {
            cofactor /= &ell_big;
            e += 1;
        }
        if e == 0 {
            return Sylow {
                ell,
                exponent: 0,
                gens: Vec::new(),
            };
        }
        let c = self.curve();
        let mut rng =
            ChaCha8Rng::seed_from_u64(seed(&[c.p(), c.a(), c.b(), self.degree() as u64, ell]));
        let mut big: Option<(Point, u32)> = None;
        let mut small: Option<(Point, u32)> = None;
        for _ in 0..100_000 {
            let t = self.mul_big(&self.random_point(&mut rng), &cofactor);
            let j = self.ell_exponent(&t, ell);
            if j == 0 {
                continue;
            }
            let (pg, b) = match &big {
                Some((pg, b)) if j <= *b => (pg.clone(), *b),
                _ => {
                    big = Some((t, j));
                    small = None;
                    if j == e {
                        break;
                    }
                    continue;
                }
            };
            // smallest i with ell^i T in <P>
            let mut s = t.clone();
            let mut found = None;
            for i in 0..=j {
                if let Some(x) = self.dlog_cyclic(&pg, ell, b, &s) {
                    found = Some((i, x));
                    break;
                }
                s = self.mul_u64(&s, ell);
            }
            let (i, x) = found.expect("ell^j T = O lies in <P>");
            let li = ell.pow(i);
            if i == 0 || x % li != 0 {
                continue;
            }
            if small.as_ref().is_none_or(|(_, a)| i > *a) {
                let q = self.sub(&t, &self.mul_u64(&pg, x / li));
                small = Some((q, i));
            }
            if b + small.as_ref().map_or(0, |s| s.1) == e {
                break;
            }
        }
        let mut gens: Vec<(Point, u32)> = big.into_iter().chain(small).collect();
        let total: u32 = gens.iter().map(|g| g.1).sum();
        assert_eq!(total, e, "Sylow decomposition did not converge");
        gens.sort_by_key(|g| std::cmp::Reverse(g.1));
        Sylow {
            ell,
            exponent: e,
            gens,
        }
    }

    /// A basis of `E[n]`, which must be rational over this field. Each
    /// prime-power part comes from the Sylow decomposition and the parts
    /// are summed.
    pub fn torsion_basis(self: &Arc<Self>, n: u64) -> Result<TorsionBasis> {
        if let Some(c) = self.basis_cache().lock().unwrap().get(&n) {
            return Ok(TorsionBasis {
                curve: self.clone(),
                n,
                p: c.p.clone(),
                q: c.q.clone(),
                parts: c.parts.clone(),
            });
        }
        let basis = self.torsion_basis_uncached(n)?;
        self.basis_cache().lock().unwrap().insert(
            n,
            CachedBasis {
                p: basis.p.clone(),
                q: basis.q.clone(),
                parts: basis.parts.clone(),
            },
        );
        Ok(basis)
    }

    fn torsion_basis_uncached(self: &Arc<Self>, n: u64) -> Result<TorsionBasis> {
        let p = self.curve().p();
        if n == 0 {
            return Err(Error::Precondition("level must be positive".into()));
        }
        if n.is_multiple_of(p) {
            return Err(Error::LevelNotCoprime { n, p });
        }
        let (mut bp, mut bq) = (Point::Identity, Point::Identity);
        for (ell, k) in factor(n) {
            let s = self.sylow(ell);
            if s.min_exponent() < k {
                let need = self
                    .curve()
                    .full_torsion_degree(n, DEFAULT_DEGREE_CAP)
                    .unwrap_or(0);
                return Err(Error::AmbientTooSmall {
                    have: self.degree(),
                    need,
                    level: n,
                });
            }
            let (g1, b) = &s.gens[0];
            let (g2, a) = &s.gens[1];
            bp = self.add(&bp, &self.mul_u64(g1, ell.pow(b - k)));
            bq = self.add(&bq, &self.mul_u64(g2, ell.pow(a - k)));
        }
        TorsionBasis::new(self.clone(), n, bp, bq)
    }
}

#[derive(Clone, Debug)]
pub(crate) struct BasisPart {
    ell: u64,
    k: u32,
    modulus: u64,
    p: Point,
    q: Point,
    table: HashMap<Point, (u64, u64)>,
}

/// An ordered basis `(P, Q)` of `E[n]` over an ambient field containing it.
#[derive(Clone, Debug)]
pub struct TorsionBasis {
    curve: Arc<CurveOver>,
    n: u64,
    p: Point,
    q: Point,
    parts: Arc<Vec<BasisPart>>,
}

/// The standard basis of `E[n]` with its lookup tables, kept per ambient
/// curve so repeated requests skip the rebuild.
#[derive(Clone, Debug)]
pub(crate) struct CachedBasis {
    p: Point,
    q: Point,
    parts: Arc<Vec<BasisPart>>,
}

impl TorsionBasis {
    /// Validates `(P, Q)` as a basis of `E[n]`: both are killed by `n` and
    /// for each `ell | n` the `ell^2` combinations of the order-`ell`
    /// multiples are distinct.
    pub fn new(curve: Arc<CurveOver>, n: u64, p: Point, q: Point) -> Result<Self> {
        if !curve.contains(&p) || !curve.contains(&q) {
            return Err(Error::PointNotOnCurve);
        }
        if !curve.mul_u64(&p, n).is_identity() || !curve.mul_u64(&q, n).is_identity() {
            return Err(Error::Precondition(format!(
                "basis points are not {n}-torsion"
            )));
        }
        let mut parts = Vec::new();
        for (ell, k) in factor(n) {
            let modulus = ell.pow(k);
            let cof = n / modulus;
            let pp = curve.mul_u64(&p, cof);
            let qq = curve.mul_u64(&q, cof);
            let p0 = curve.mul_u64(&pp, modulus / ell);
            let q0 = curve.mul_u64(&qq, modulus / ell);
            let mut table = HashMap::new();
            let mut row = Point::Identity;
            for u in 0..ell {
                let mut cur = row.clone();
                for v in 0..ell {
                    table.insert(cur.clone(), (u, v));
                    cur = curve.add(&cur, &q0);
                }
                row = curve.add(&row, &p0);
            }
            if table.len() as u64 != ell * ell {
                return Err(Error::Precondition(format!(
                    "points are dependent modulo {ell}"
                )));
            }
            parts.push(BasisPart {
                ell,
                k,
                modulus,
                p: pp,
                q: qq,
                table,
            });
        }
        Ok(TorsionBasis {
            curve,
            n,
            p,
            q,
            parts: Arc::new(parts),
        })
    }

    pub fn level(&self) -> u64 {
        self.n
    }

    pub fn p(&self) -> &Point {
        &self.p
    }

    pub fn q(&self) -> &Point {
        &self.q
    }

    pub fn curve(&self) -> &Arc<CurveOver> {
        &self.curve
    }

    pub fn degree(&self) -> usize {
        self.curve.degree()
    }

    /// `iP + jQ`.
    pub fn combine(&self, i: u64, j: u64) -> Point {
        let c = &self.curve;
        c.add(
            &c.mul_u64(&self.p, i % self.n),
            &c.mul_u64(&self.q, j % self.n),
        )
    }

    /// Coordinates `(i, j)` with `S = iP + jQ`, or `None` if `S` is not in
    /// `E[n]`.
    pub fn try_dlog(&self, s: &Point) -> Option<[u64; 2]> {
        let c = &self.curve;
        if !c.mul_u64(s, self.n).is_identity() {
            return None;
        }
        let mut residues = Vec::new();
        for part in self.parts.iter() {
            let cof = self.n / part.modulus;
            let target = c.mul_u64(s, cof);
            let (mut x, mut y) = (0u64, 0u64);
            for i in 0..part.k {
                let rest = c.sub(
                    &target,
                    &c.add(&c.mul_u64(&part.p, x), &c.mul_u64(&part.q, y)),
                );
                let probe = c.mul_u64(&rest, part.modulus / part.ell.pow(i + 1));
                let &(u, v) = part.table.get(&probe)?;
                x += u * part.ell.pow(i);
                y += v * part.ell.pow(i);
            }
            // target = x (cof P) + y (cof Q), so the true coordinates are
            // congruent to (x, y) modulo ell^k
            residues.push((part.modulus, x, y));
        }
        let (i, j) = crt_pairs(&residues);
        debug_assert_eq!(self.combine(i, j), *s);
        Some([i, j])
    }

    pub fn dlog(&self, s: &Point) -> Result<[u64; 2]> {
        self.try_dlog(s).ok_or_else(|| {
            Error::Internal(format!(
                "point is not in the span of the level-{} basis",
                self.n
            ))
        })
    }

    /// Matrix of an endomorphism-like map on `E[n]`, columns the
    /// coordinates of the images of `P` and `Q` in `target`.
    pub fn matrix_of<F: Fn(&Point) -> Point>(&self, target: &TorsionBasis, f: F) -> Result<Mat2> {
        if target.n != self.n {
            return Err(Error::Precondition("bases at different levels".into()));
        }
        let c0 = target.dlog(&f(&self.p))?;
        let c1 = target.dlog(&f(&self.q))?;
        Ok(Mat2::from_columns(self.n, c0, c1))
    }

    /// The basis `((n/d) P, (n/d) Q)` of `E[d]` for `d | n`.
    pub fn reduce_to(&self, d: u64) -> Result<TorsionBasis> {
        if d == 0 || !self.n.is_multiple_of(d) {
            return Err(Error::Precondition(format!(
                "{d} does not divide {}",
                self.n
            )));
        }
        let c = &self.curve;
        let m = self.n / d;
        TorsionBasis::new(c.clone(), d, c.mul_u64(&self.p, m), c.mul_u64(&self.q, m))
    }

    /// All `n^2` points, indexed by `i * n + j` for `iP + jQ`.
    pub fn elements(&self) -> Vec<Point> {
        let c = &self.curve;
        let mut out = Vec::with_capacity((self.n * self.n) as usize);
        let mut row = Point::Identity;
        for _ in 0..self.n {
            let mut cur = row.clone();
            for _ in 0..self.n {
                out.push(cur.clone());
                cur = c.add(&cur, &self.q);
            }
            row = c.add(&row, &self.p);
        }
        out
    }

    pub fn as_subgroup(&self) -> TorsionSubgroup {
        TorsionSubgroup::new(
            self.curve.clone(),
            self.n,
            vec![self.p.clone(), self.q.clone()],
        )
    }
}

fn crt_pairs(residues: &[(u64, u64, u64)]) -> (u64, u64) {
    let (mut m, mut i, mut j) = (1u64, 0u64, 0u64);
    for &(q, x, y) in residues {
        let inv = mod_inv(m as i64, q).expect("coprime moduli");
        let lift = |acc: u64, r: u64| -> u64 {
            let t = ((r + q - acc % q) % q) as u128 * inv as u128 % q as u128;
            acc + m * t as u64
        };
        i = lift(i, x);
        j = lift(j, y);
        m *= q;
    }
    (i, j)
}

/// A subgroup of `E[n]` given by generators over a fixed ambient field;
/// membership and order come from the closure.
#[derive(Clone, Debug)]
pub struct TorsionSubgroup {
    curve: Arc<CurveOver>,
    level: u64,
    generators: Vec<Point>,
}

impl Serialize for TorsionSubgroup {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("TorsionSubgroup", 3)?;
        st.serialize_field("level", &self.level)?;
        st.serialize_field("field_degree", &self.curve.degree())?;
        st.serialize_field("generators", &self.generators)?;
        st.end()
    }
}

impl TorsionSubgroup {
    pub fn new(curve: Arc<CurveOver>, level: u64, generators: Vec<Point>) -> Self {
        TorsionSubgroup {
            curve,
            level,
            generators,
        }
    }

    pub fn trivial(curve: Arc<CurveOver>, level: u64) -> Self {
        TorsionSubgroup::new(curve, level, Vec::new())
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    pub fn generators(&self) -> &[Point] {
        &self.generators
    }

    pub fn curve(&self) -> &Arc<CurveOver> {
        &self.curve
    }

    /// Every element, built one generator at a time.
    pub fn elements(&self) -> HashSet<Point> {
        let c = &self.curve;
        let mut set: HashSet<Point> = HashSet::from([Point::Identity]);
        for g in &self.generators {
            if set.contains(g) {
                continue;
            }
            let mut next = set.clone();
            let mut shift = g.clone();
            while !set.contains(&shift) {
                for s in &set {
                    next.insert(c.add(s, &shift));
                }
                shift = c.add(&shift, g);
            }
            set = next;
        }
        set
    }

    pub fn order(&self) -> u64 {
        self.elements().len() as u64
    }

    pub fn contains(&self, pt: &Point) -> bool {
        self.elements().contains(pt)
    }

    pub fn same_points(&self, other: &TorsionSubgroup) -> bool {
        self.elements() == other.elements()
    }

    /// Invariant check: every generator is killed by the level and the
    /// order divides `level^2`.
    pub fn is_well_formed(&self) -> bool {
        let c = &self.curve;
        self.generators
            .iter()
            .all(|g| c.contains(g) && c.mul_u64(g, self.level).is_identity())
            && (self.level * self.level).is_multiple_of(self.order())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ImageReport {
    pub n: u64,
    pub r: u64,
    pub n1: u64,
    pub image_order: u64,
    pub equals_expected: bool,
    #[serde(skip)]
    pub image: Option<TorsionSubgroup>,
}

/// `r * E[n]` computed pointwise and compared with `E[n / gcd(n, r)]`.
pub fn mult_image_of_torsion(basis: &TorsionBasis, r: u64) -> ImageReport {
    let n = basis.level();
    let c = basis.curve();
    let n1 = n / gcd(n, r);
    let image: HashSet<Point> = basis.elements().iter().map(|pt| c.mul_u64(pt, r)).collect();
    let expected = TorsionSubgroup::new(
        c.clone(),
        n1,
        vec![c.mul_u64(basis.p(), n / n1), c.mul_u64(basis.q(), n / n1)],
    );
    let equals_expected = image == expected.elements();
    ImageReport {
        n,
        r,
        n1,
        image_order: image.len() as u64,
        equals_expected,
        image: Some(TorsionSubgroup::new(
            c.clone(),
            n1,
            vec![c.mul_u64(basis.p(), r), c.mul_u64(basis.q(), r)],
        )),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PreimageReport {
    pub m: u64,
    pub w_order: u64,
    pub preimage_order: u64,
    pub order_formula_holds: bool,
    pub image_equals_w: bool,
    pub contains_m_torsion: bool,
}

impl PreimageReport {
    pub fn passed(&self) -> bool {
        self.order_formula_holds && self.image_equals_w && self.contains_m_torsion
    }
}

/// Computes `m^{-1} W = {x in E[nm] : m x in W}` from a basis of `E[nm]`
/// and checks its order, its image under `m` and that it contains `E[m]`.
pub fn preimage_image_check(
    basis_nm: &TorsionBasis,
    w: &TorsionSubgroup,
    m: u64,
) -> Result<PreimageReport> {
    let c = basis_nm.curve();
    if m == 0 || !basis_nm.level().is_multiple_of(m) || basis_nm.level() / m != w.level() {
        return Err(Error::Precondition(format!(
            "basis level {} is not {} * {m}",
            basis_nm.level(),
            w.level()
        )));
    }
    if !Arc::ptr_eq(c, w.curve()) && c.field() != w.curve().field() {
        return Err(Error::Precondition(
            "subgroup lives over another field".into(),
        ));
    }
    let w_points = w.elements();
    let preimage: Vec<Point> = basis_nm
        .elements()
        .into_iter()
        .filter(|x| w_points.contains(&c.mul_u64(x, m)))
        .collect();
    let image: HashSet<Point> = preimage.iter().map(|x| c.mul_u64(x, m)).collect();
    let pre_set: HashSet<&Point> = preimage.iter().collect();
    let n = w.level();
    let e_m = TorsionSubgroup::new(
        c.clone(),
        m,
        vec![c.mul_u64(basis_nm.p(), n), c.mul_u64(basis_nm.q(), n)],
    );
    let contains_m_torsion = e_m.elements().iter().all(|x| pre_set.contains(x));
    let w_order = w_points.len() as u64;
    Ok(PreimageReport {
        m,
        w_order,
        preimage_order: preimage.len() as u64,
        order_formula_holds: preimage.len() as u64 == w_order * m * m,
        image_equals_w: image == w_points,
        contains_m_torsion,
    })
}
