use std::sync::Arc;

use serde::Serialize;

use crate::arith::poly::{self, Poly};
use crate::arith::{ExtField, FieldElement};
use crate::curve::{Curve, CurveOver, Point, TorsionSubgroup};
use crate::error::{Error, Result};

// Polynomials with coefficients in an extension, low degree first.
type APoly = Vec<FieldElement>;

fn amul(f: &ExtField, a: &APoly, b: &APoly) -> APoly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![f.zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] = f.add(&out[i + j], &f.mul(x, y));
        }
    }
    out
}

fn aadd(f: &ExtField, a: &APoly, b: &APoly) -> APoly {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| match (a.get(i), b.get(i)) {
            (Some(x), Some(y)) => f.add(x, y),
            (Some(x), None) | (None, Some(x)) => x.clone(),
            (None, None) => unreachable!(),
        })
        .collect()
}

/// `a / (x - r)`, assuming the division is exact.
fn adiv_linear(f: &ExtField, a: &APoly, r: &FieldElement) -> APoly {
    let n = a.len();
    let mut out = vec![f.zero(); n - 1];
    let mut carry = f.zero();
    for i in (1..n).rev() {
        carry = f.add(&a[i], &f.mul(&carry, r));
        out[i - 1] = carry.clone();
    }
    out
}

fn to_prime(a: &APoly) -> Result<Poly> {
    let mut out = a
        .iter()
        .map(|c| c.as_prime().map(|v| v as u32))
        .collect::<Option<Poly>>()
        .ok_or(Error::NotGaloisStable)?;
    poly::trim(&mut out);
    Ok(out)
}

fn horner(f: &ExtField, a: &[u32], x: &FieldElement) -> FieldElement {
    let mut acc = f.zero();
    for &c in a.iter().rev() {
        acc = f.add(&f.mul(&acc, x), &f.from_u64(c as u64));
    }
    acc
}

/// A separable isogeny with an explicit kernel, optionally followed by an
/// isomorphism `(x, y) -> (u^2 x, u^3 y)` of the codomain.
///
/// The map is stored as rational functions over `F_p`: with kernel
/// polynomial `h`, `X = N(x) / h(x)^2` and `Y = y X'(x) = y M(x) / h(x)^3`,
/// so it can be evaluated on points over any extension.
#[derive(Clone, Debug)]
pub struct Isogeny {
    domain: Curve,
    codomain: Curve,
    degree: u64,
    kernel: TorsionSubgroup,
    h: Poly,
    nx: Poly,
    ny: Poly,
    post: u64,
}

impl Serialize for Isogeny {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Isogeny", 6)?;
        st.serialize_field("domain", &self.domain)?;
        st.serialize_field("codomain", &self.codomain)?;
        st.serialize_field("degree", &self.degree)?;
        st.serialize_field("kernel_polynomial", &self.h)?;
        st.serialize_field("kernel", &self.kernel)?;
        st.serialize_field("scaling", &self.post)?;
        st.end()
    }
}

/// The quotient of `E` by a finite Frobenius-stable subgroup, by Vélu's
/// formulas.
pub fn velu(e: &Curve, kernel: &TorsionSubgroup) -> Result<Isogeny> {
    let c = kernel.curve();
    if c.curve() != e {
        return Err(Error::Precondition(
            "kernel lives on a different curve".into(),
        ));
    }
    let elems = kernel.elements();
    if elems.iter().any(|q| !elems.contains(&c.frobenius(q))) {
        return Err(Error::NotGaloisStable);
    }
    let f = c.field();
    let a = f.from_u64(e.a());
    let mut v = f.zero();
    let mut w = f.zero();
    // one representative of each pair {Q, -Q}, with its (x, v_Q, u_Q)
    let mut data: Vec<(FieldElement, FieldElement, FieldElement)> = Vec::new();
    for q in &elems {
        let Point::Affine { x, y } = q else { continue };
        let neg = c.neg(q);
        let two_torsion = y.is_zero();
        if !two_torsion && neg < *q {
            continue;
        }
        let gx = f.add(&f.scale(&f.square(x), 3), &a);
        let (vq, uq) = if two_torsion {
            (gx, f.zero())
        } else {
            (f.scale(&gx, 2), f.scale(&f.square(y), 4))
        };
        v = f.add(&v, &vq);
        w = f.add(&w, &f.add(&uq, &f.mul(x, &vq)));
        data.push((x.clone(), vq, uq));
    }
    let a2 = f.sub(&a, &f.scale(&v, 5));
    let b2 = f.sub(&f.from_u64(e.b()), &f.scale(&w, 7));
    let (Some(a2), Some(b2)) = (a2.as_prime(), b2.as_prime()) else {
        return Err(Error::NotGaloisStable);
    };
    let codomain = Curve::new(e.p(), a2 as i64, b2 as i64)?;

    // h = prod (x - x_Q); N = x h^2 + sum (v_Q (x - x_Q) + u_Q) (h / (x - x_Q))^2
    let mut h: APoly = vec![f.one()];
    for (x, _, _) in &data {
        h = amul(f, &h, &vec![f.neg(x), f.one()]);
    }
    let h2 = amul(f, &h, &h);
    let mut n = amul(f, &vec![f.zero(), f.one()], &h2);
    for (x, vq, uq) in &data {
        let hq = adiv_linear(f, &h, x);
        let lin = vec![f.sub(uq, &f.mul(vq, x)), vq.clone()];
        n = aadd(f, &n, &amul(f, &lin, &amul(f, &hq, &hq)));
    }
    let p = e.p();
    let h = to_prime(&h)?;
    let nx = to_prime(&n)?;
    // Y = y (N' h - 2 N h') / h^3
    let ny = poly::sub(
        &poly::mul(&poly::derivative(&nx, p), &h, p),
        &poly::scale(&poly::mul(&nx, &poly::derivative(&h, p), p), 2, p),
        p,
    );
    Ok(Isogeny {
        domain: *e,
        codomain,
        degree: elems.len() as u64,
        kernel: kernel.clone(),
        h,
        nx,
        ny,
        post: 1,
    })
}

impl Isogeny {
    pub fn identity(e: &Curve) -> Result<Self> {
        velu(e, &TorsionSubgroup::trivial(e.over(1)?, 1))
    }

    pub fn domain(&self) -> &Curve {
        &self.domain
    }

    pub fn codomain(&self) -> &Curve {
        &self.codomain
    }

    pub fn degree(&self) -> u64 {
        self.degree
    }

    pub fn kernel(&self) -> &TorsionSubgroup {
        &self.kernel
    }

    pub fn kernel_polynomial(&self) -> &Poly {
        &self.h
    }

    pub fn scaling(&self) -> u64 {
        self.post
    }

    /// Follows the isogeny by the isomorphism with parameter `u` onto
    /// `(u^4 A, u^6 B)`.
    pub fn then_scaling(&self, u: u64) -> Result<Isogeny> {
        let f = self.domain.field();
        let u2 = f.mul(u, u);
        let u4 = f.mul(u2, u2);
        let target = Curve::new(
            self.domain.p(),
            f.mul(u4, self.codomain.a()) as i64,
            f.mul(f.mul(u4, u2), self.codomain.b()) as i64,
        )?;
        Ok(Isogeny {
            codomain: target,
            post: f.mul(self.post, u),
            ..self.clone()
        })
    }

    /// Every way of landing on `target` by composing with an isomorphism.
    pub fn onto(&self, target: &Curve) -> Vec<Isogeny> {
        self.codomain
            .isomorphisms_to(target)
            .into_iter()
            .filter_map(|u| self.then_scaling(u).ok())
            .collect()
    }

    /// The image of a point of `E(F_{p^m})`, on the codomain over the same
    /// field.
    pub fn eval(&self, over: &CurveOver, pt: &Point) -> Point {
        let Point::Affine { x, y } = pt else {
            return Point::Identity;
        };
        let f = over.field();
        let hx = horner(f, &self.h, x);
        if hx.is_zero() {
            return Point::Identity;
        }
        let hinv = f.inv(&hx).expect("nonzero");
        let h2 = f.square(&hinv);
        let h3 = f.mul(&h2, &hinv);
        let mut xx = f.mul(&horner(f, &self.nx, x), &h2);
        let mut yy = f.mul(y, &f.mul(&horner(f, &self.ny, x), &h3));
        if self.post != 1 {
            let u = f.from_u64(self.post);
            let u2 = f.square(&u);
            xx = f.mul(&xx, &u2);
            yy = f.mul(&yy, &f.mul(&u2, &u));
        }
        Point::Affine { x: xx, y: yy }
    }

    /// The codomain base-changed to the same field as `over`.
    pub fn codomain_over(&self, over: &CurveOver) -> Result<Arc<CurveOver>> {
        self.codomain.over(over.degree())
    }
}
