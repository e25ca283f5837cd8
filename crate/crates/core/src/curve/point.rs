use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_bigint::BigUint;
use rand::Rng;
use serde::ser::SerializeStruct;
use serde::Serialize;

use super::torsion::{CachedBasis, Sylow};
use super::{Curve, ENUMERATION_CAP};
use crate::arith::{factor, ExtField, FieldElement};
use crate::error::{Error, Result};

/// A point of a curve over some `F_{p^m}`. Points do not carry their curve;
/// every operation goes through a [`CurveOver`].
#[derive(Clone, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub enum Point {
    Identity,
    Affine { x: FieldElement, y: FieldElement },
}

impl Point {
    pub fn is_identity(&self) -> bool {
        matches!(self, Point::Identity)
    }

    pub fn x(&self) -> Option<&FieldElement> {
        match self {
            Point::Identity => None,
            Point::Affine { x, .. } => Some(x),
        }
    }

    pub fn y(&self) -> Option<&FieldElement> {
        match self {
            Point::Identity => None,
            Point::Affine { y, .. } => Some(y),
        }
    }
}

impl Serialize for Point {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Point::Identity => s.serialize_str("O"),
            Point::Affine { x, y } => {
                let mut st = s.serialize_struct("Point", 2)?;
                st.serialize_field("x", x.coeffs())?;
                st.serialize_field("y", y.coeffs())?;
                st.end()
            }
        }
    }
}

/// A curve over `F_p` viewed over the extension `F_{p^m}`.
pub struct CurveOver {
    curve: Curve,
    field: Arc<ExtField>,
    a: FieldElement,
    b: FieldElement,
    order: BigUint,
    sylow: Mutex<HashMap<u64, Sylow>>,
    bases: Mutex<HashMap<u64, CachedBasis>>,
}

impl std::fmt::Debug for CurveOver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?} over {:?}", self.curve, self.field)
    }
}

// Jacobian coordinates (X : Y : Z) for (X/Z^2, Y/Z^3); Z = 0 is the identity.
struct Jac {
    x: FieldElement,
    y: FieldElement,
    z: FieldElement,
}

impl CurveOver {
    pub(crate) fn new(curve: Curve, field: Arc<ExtField>) -> Self {
        let a = field.from_u64(curve.a());
        let b = field.from_u64(curve.b());
        let order = curve.order_over(field.degree());
        CurveOver {
            curve,
            field,
            a,
            b,
            order,
            sylow: Mutex::new(HashMap::new()),
            bases: Mutex::new(HashMap::new()),
        }
    }

    pub fn curve(&self) -> &Curve {
        &self.curve
    }

    pub fn field(&self) -> &Arc<ExtField> {
        &self.field
    }

    pub fn degree(&self) -> usize {
        self.field.degree()
    }

    /// `#E(F_{p^m})`.
    pub fn order(&self) -> &BigUint {
        &self.order
    }

    pub fn rhs(&self, x: &FieldElement) -> FieldElement {
        let f = &self.field;
        let x2 = f.square(x);
        let t = f.add(&x2, &self.a);
        f.add(&f.mul(&t, x), &self.b)
    }

    pub fn contains(&self, pt: &Point) -> bool {
        match pt {
            Point::Identity => true,
            Point::Affine { x, y } => {
                x.coeffs().len() == self.degree() && self.field.square(y) == self.rhs(x)
            }
        }
    }

    /// The point with the given coordinates, checked against the equation.
    pub fn point(&self, x: FieldElement, y: FieldElement) -> Result<Point> {
        let pt = Point::Affine { x, y };
        if self.contains(&pt) {
            Ok(pt)
        } else {
            Err(Error::PointNotOnCurve)
        }
    }

    pub fn neg(&self, pt: &Point) -> Point {
        match pt {
            Point::Identity => Point::Identity,
            Point::Affine { x, y } => Point::Affine {
                x: x.clone(),
                y: self.field.neg(y),
            },
        }
    }

    pub fn add(&self, p1: &Point, p2: &Point) -> Point {
        let f = &self.field;
        let (x1, y1, x2, y2) = match (p1, p2) {
            (Point::Identity, _) => return p2.clone(),
            (_, Point::Identity) => return p1.clone(),
            (Point::Affine { x: x1, y: y1 }, Point::Affine { x: x2, y: y2 }) => (x1, y1, x2, y2),
        };
        let lambda = if x1 == x2 {
            if y1 != y2 || y1.is_zero() {
                return Point::Identity;
            }
            let num = f.add(&f.scale(&f.square(x1), 3), &self.a);
            f.div(&num, &f.scale(y1, 2)).expect("y is nonzero")
        } else {
            f.div(&f.sub(y2, y1), &f.sub(x2, x1)).expect("distinct x")
        };
        let x3 = f.sub(&f.sub(&f.square(&lambda), x1), x2);
        let y3 = f.sub(&f.mul(&lambda, &f.sub(x1, &x3)), y1);
        Point::Affine { x: x3, y: y3 }
    }

    pub fn double(&self, pt: &Point) -> Point {
        self.add(pt, pt)
    }

    pub fn sub(&self, p1: &Point, p2: &Point) -> Point {
        self.add(p1, &self.neg(p2))
    }

    /// `k * P` for a signed machine integer.
    pub fn mul(&self, pt: &Point, k: i64) -> Point {
        let r = self.mul_big(pt, &BigUint::from(k.unsigned_abs()));
        if k < 0 {
            self.neg(&r)
        } else {
            r
        }
    }

    pub fn mul_u64(&self, pt: &Point, k: u64) -> Point {
        self.mul_big(pt, &BigUint::from(k))
    }

    /// `k * P`, by double-and-add in Jacobian coordinates.
    pub fn mul_big(&self, pt: &Point, k: &BigUint) -> Point {
        let (px, py) = match pt {
            Point::Identity => return Point::Identity,
            Point::Affine { x, y } => (x, y),
        };
        let bits = k.bits();
        if bits == 0 {
            return Point::Identity;
        }
        let f = &self.field;
        let mut acc = Jac {
            x: px.clone(),
            y: py.clone(),
            z: f.one(),
        };
        for i in (0..bits - 1).rev() {
            acc = self.jac_double(&acc);
            if k.bit(i) {
                acc = self.jac_add_affine(&acc, px, py);
            }
        }
        self.to_affine(&acc)
    }

    fn to_affine(&self, j: &Jac) -> Point {
        let f = &self.field;
        if j.z.is_zero() {
            return Point::Identity;
        }
        let zi = f.inv(&j.z).expect("z is nonzero");
        let zi2 = f.square(&zi);
        Point::Affine {
            x: f.mul(&j.x, &zi2),
            y: f.mul(&j.y, &f.mul(&zi2, &zi)),
        }
    }

    fn jac_double(&self, j: &Jac) -> Jac {
        let f = &self.field;
        if j.z.is_zero() || j.y.is_zero() {
            return Jac {
                x: f.one(),
                y: f.one(),
                z: f.zero(),
            };
        }
        let xx = f.square(&j.x);
        let yy = f.square(&j.y);
        let yyyy = f.square(&yy);
        let zz = f.square(&j.z);
        let s = f.scale(&f.mul(&j.x, &yy), 4);
        let m = f.add(&f.scale(&xx, 3), &f.mul(&self.a, &f.square(&zz)));
        let x3 = f.sub(&f.square(&m), &f.scale(&s, 2));
        let y3 = f.sub(&f.mul(&m, &f.sub(&s, &x3)), &f.scale(&yyyy, 8));
        let z3 = f.scale(&f.mul(&j.y, &j.z), 2);
        Jac {
            x: x3,
            y: y3,
            z: z3,
        }
    }

    fn jac_add_affine(&self, j: &Jac, x2: &FieldElement, y2: &FieldElement) -> Jac {
        let f = &self.field;
        if j.z.is_zero() {
            return Jac {
                x: x2.clone(),
                y: y2.clone(),
                z: f.one(),
            };
        }
        let z1z1 = f.square(&j.z);
        let u2 = f.mul(x2, &z1z1);
        let s2 = f.mul(y2, &f.mul(&j.z, &z1z1));
        let h = f.sub(&u2, &j.x);
        let r = f.sub(&s2, &j.y);
        if h.is_zero() {
            if r.is_zero() {
                return self.jac_double(j);
            }
            return Jac {
                x: f.one(),
                y: f.one(),
                z: f.zero(),
            };
        }
        let hh = f.square(&h);
        let hhh = f.mul(&h, &hh);
        let v = f.mul(&j.x, &hh);
        let x3 = f.sub(&f.sub(&f.square(&r), &hhh), &f.scale(&v, 2));
        let y3 = f.sub(&f.mul(&r, &f.sub(&v, &x3)), &f.mul(&j.y, &hhh));
        let z3 = f.mul(&j.z, &h);
        Jac {
            x: x3,
            y: y3,
            z: z3,
        }
    }

    /// The `p`-power Frobenius `(x, y) -> (x^p, y^p)`.
    pub fn frobenius(&self, pt: &Point) -> Point {
        match pt {
            Point::Identity => Point::Identity,
            Point::Affine { x, y } => Point::Affine {
                x: self.field.frobenius(x),
                y: self.field.frobenius(y),
            },
        }
    }

    pub fn frobenius_pow(&self, pt: &Point, k: usize) -> Point {
        (0..k).fold(pt.clone(), |acc, _| self.frobenius(&acc))
    }

    /// A uniformly random affine point, never the identity.
    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let f = &self.field;
        loop {
            let x = f.random(rng);
            let rhs = self.rhs(&x);
            if let Some(y) = f.sqrt(&rhs) {
                let y = if rng.gen::<bool>() { f.neg(&y) } else { y };
                return Point::Affine { x, y };
            }
        }
    }

    /// Every point of `E(F_{p^m})`, identity first.
    pub fn points(&self) -> Result<Vec<Point>> {
        let q = self
            .field
            .size()
            .filter(|&q| q <= ENUMERATION_CAP)
            .ok_or_else(|| {
                Error::cap(format!("enumeration of {:?}", self.field), ENUMERATION_CAP)
            })?;
        let f = &self.field;
        let mut roots: HashMap<FieldElement, Vec<FieldElement>> = HashMap::new();
        for y in f.elements() {
            roots.entry(f.square(&y)).or_default().push(y);
        }
        let mut out = Vec::with_capacity(q as usize + 1);
        out.push(Point::Identity);
        for x in f.elements() {
            if let Some(ys) = roots.get(&self.rhs(&x)) {
                for y in ys {
                    out.push(Point::Affine {
                        x: x.clone(),
                        y: y.clone(),
                    });
                }
            }
        }
        Ok(out)
    }

    /// Order of a point whose order is known to divide `n`.
    pub fn point_order(&self, pt: &Point, n: u64) -> u64 {
        let mut ord = n;
        for (ell, _) in factor(n) {
            while ord.is_multiple_of(ell) && self.mul_u64(pt, ord / ell).is_identity() {
                ord /= ell;
            }
        }
        ord
    }

    /// Invariant factors `(d1, d2)` of `E(F_{p^m})`, `d1 | d2`.
    pub fn group_structure(&self) -> Result<(u64, u64)> {
        let q = self.field.size().filter(|&q| q <= ENUMERATION_CAP);
        let n = q
            .and_then(|_| super::big_to_u64(&self.order))
            .ok_or_else(|| {
                Error::cap(
                    format!("group structure over {:?}", self.field),
                    ENUMERATION_CAP,
                )
            })?;
        let (mut d1, mut d2) = (1u64, 1u64);
        for (ell, _) in factor(n) {
            let s = self.sylow(ell);
            d1 *= ell.pow(s.min_exponent());
            d2 *= ell.pow(s.max_exponent());
        }
        debug_assert_eq!(d1 * d2, n);
        Ok((d1, d2))
    }

    pub(crate) fn sylow_cache(&self) -> &Mutex<HashMap<u64, Sylow>> {
        &self.sylow
    }

    pub(crate) fn basis_cache(&self) -> &Mutex<HashMap<u64, CachedBasis>> {
        &self.bases
    }
}
