use super::point::{CurveOver, Point};
use super::torsion::TorsionBasis;
use crate::arith::FieldElement;
use crate::error::{Error, Result};

impl CurveOver {
    /// `l_{T1,T2}(S) / v_{T1+T2}(S)`, the Miller step function.
    fn miller_step(&self, t1: &Point, t2: &Point, s: &Point) -> Result<FieldElement> {
        let f = self.field();
        let (Point::Affine { x: x1, y: y1 }, Point::Affine { x: xs, y: ys }) = (t1, s) else {
            return Err(Error::Precondition("Miller step at the identity".into()));
        };
        let sum = self.add(t1, t2);
        let Point::Affine { x: x2, y: y2 } = t2 else {
            return Err(Error::Precondition("Miller step at the identity".into()));
        };
        let line = if sum.is_identity() {
            f.sub(xs, x1)
        } else {
            let lambda = if x1 == x2 {
                let num = f.add(&f.scale(&f.square(x1), 3), &f.from_u64(self.curve().a()));
                f.div(&num, &f.scale(y1, 2))?
            } else {
                f.div(&f.sub(y2, y1), &f.sub(x2, x1))?
            };
            f.sub(&f.sub(ys, y1), &f.mul(&lambda, &f.sub(xs, x1)))
        };
        let vert = match &sum {
            Point::Identity => f.one(),
            Point::Affine { x, .. } => f.sub(xs, x),
        };
        if line.is_zero() || vert.is_zero() {
            return Err(Error::Precondition(
                "Miller function evaluated on its divisor".into(),
            ));
        }
        f.div(&line, &vert)
    }

    /// `f_{n,P}(S)` with divisor `n(P) - n(O)`.
    fn miller(&self, n: u64, p: &Point, s: &Point) -> Result<FieldElement> {
        let f = self.field();
        let mut acc = f.one();
        let mut t = p.clone();
        for i in (0..63 - n.leading_zeros()).rev() {
            acc = f.mul(&f.square(&acc), &self.miller_step(&t, &t, s)?);
            t = self.double(&t);
            if (n >> i) & 1 == 1 {
                acc = f.mul(&acc, &self.miller_step(&t, p, s)?);
                t = self.add(&t, p);
            }
        }
        Ok(acc)
    }

    /// The Weil pairing `e_n(P, Q)` for independent points of `E[n]`.
    pub fn weil_pairing(&self, n: u64, p: &Point, q: &Point) -> Result<FieldElement> {
        if n == 1 {
            return Ok(self.field().one());
        }
        let f = self.field();
        let v = f.div(&self.miller(n, p, q)?, &self.miller(n, q, p)?)?;
        Ok(if n % 2 == 1 { f.neg(&v) } else { v })
    }
}

impl TorsionBasis {
    /// `e_n(P, Q)`, a primitive `n`-th root of unity.
    pub fn weil_value(&self) -> Result<FieldElement> {
        self.curve().weil_pairing(self.level(), self.p(), self.q())
    }
}
