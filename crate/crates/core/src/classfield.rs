//! Imaginary quadratic orders: reduced binary quadratic forms, ideals in
//! Hermite normal form and the dictionary between them.
//!
//! The order of discriminant `D < 0` is `Z[w]` with `w = (s + sqrt D) / 2`,
//! `s = D mod 2`, so `w^2 = s w + (D - s) / 4`. Elements are integer pairs
//! `(x, y)` meaning `x + y w`.

use std::fmt;

use serde::Serialize;

use crate::arith::{ext_gcd, fundamental_discriminant, gcd_i64, is_prime, isqrt, kronecker};
use crate::error::{Error, Result};

pub type Element = (i64, i64);

fn check_discriminant(d: i64) -> Result<()> {
    if d >= 0 || !matches!(d.rem_euclid(4), 0 | 1) {
        return Err(Error::InvalidDiscriminant(d));
    }
    Ok(())
}

fn sigma(d: i64) -> i64 {
    d.rem_euclid(2)
}

/// `N(x + y w) = x^2 + s x y + (s - D) / 4 y^2`.
pub fn element_norm(d: i64, (x, y): Element) -> i64 {
    let s = sigma(d);
    x * x + s * x * y + (s - d) / 4 * y * y
}

pub fn element_mul(d: i64, (x1, y1): Element, (x2, y2): Element) -> Element {
    let s = sigma(d);
    (
        x1 * x2 + y1 * y2 * (d - s) / 4,
        x1 * y2 + x2 * y1 + s * y1 * y2,
    )
}

/// A primitive positive definite form `a x^2 + b x y + c y^2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct QuadForm {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl fmt::Display for QuadForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.a, self.b, self.c)
    }
}

impl QuadForm {
    pub fn new(a: i64, b: i64, c: i64) -> Result<Self> {
        let f = QuadForm { a, b, c };
        check_discriminant(f.discriminant())?;
        if a <= 0 {
            return Err(Error::Precondition(format!("form {f} is not positive definite")));
        }
        if gcd_i64(gcd_i64(a, b), c) != 1 {
            return Err(Error::Precondition(format!("form {f} is not primitive")));
        }
        Ok(f)
    }

    /// The form of discriminant `d` with the given `a, b`.
    pub fn from_ab(d: i64, a: i64, b: i64) -> Result<Self> {
        let num = b * b - d;
        if a <= 0 || num % (4 * a) != 0 {
            return Err(Error::Precondition(format!("no form ({a}, {b}, _) of discriminant {d}")));
        }
        QuadForm::new(a, b, num / (4 * a))
    }

    pub fn discriminant(&self) -> i64 {
        self.b * self.b - 4 * self.a * self.c
    }

    pub fn principal(d: i64) -> Result<Self> {
        check_discriminant(d)?;
        let s = sigma(d);
        QuadForm::new(1, s, (s - d) / 4)
    }

    pub fn eval(&self, x: i64, y: i64) -> i64 {
        self.a * x * x + self.b * x * y + self.c * y * y
    }

    pub fn is_reduced(&self) -> bool {
        let QuadForm { a, b, c } = *self;
        b.abs() <= a && a <= c && !((b.abs() == a || a == c) && b < 0)
    }

    pub fn reduce(&self) -> QuadForm {
        let d = self.discriminant();
        let (mut a, mut b, mut c) = (self.a, self.b, self.c);
        loop {
            if !(-a < b && b <= a) {
                let r = (a - b).div_euclid(2 * a);
                b += 2 * a * r;
                c = (b * b - d) / (4 * a);
            }
            if a > c {
                (a, b, c) = (c, -b, a);
                continue;
            }
            if a == c && b < 0 {
                b = -b;
            }
            return QuadForm { a, b, c };
        }
    }

    pub fn inverse(&self) -> QuadForm {
        QuadForm {
            a: self.a,
            b: -self.b,
            c: self.c,
        }
        .reduce()
    }

    /// Dirichlet composition, reduced.
    pub fn compose(&self, other: &QuadForm) -> Result<QuadForm> {
        let d = self.discriminant();
        if other.discriminant() != d {
            return Err(Error::MixedOrders(d, other.discriminant()));
        }
        let (f1, f2) = if self.a > other.a { (other, self) } else { (self, other) };
        let (a1, b1) = (f1.a as i128, f1.b as i128);
        let (a2, b2, c2) = (f2.a as i128, f2.b as i128, f2.c as i128);
        let s = (b1 + b2) / 2;
        let n = b2 - s;
        let (y1, dd) = if a2 % a1 == 0 {
            (0, a1)
        } else {
            let (g, u, _) = ext_gcd(a2, a1);
            (u, g)
        };
        let (x2, y2, d1) = if s % dd == 0 {
            (0, -1, dd)
        } else {
            let (g, x, y) = ext_gcd(s, dd);
            (x, -y, g)
        };
        let v1 = a1 / d1;
        let v2 = a2 / d1;
        let r = (y1 * y2 * n - x2 * c2).rem_euclid(v1);
        let b3 = b2 + 2 * v2 * r;
        let a3 = v1 * v2;
        let c3 = (b3 * b3 - d as i128) / (4 * a3);
        Ok(QuadForm {
            a: a3 as i64,
            b: b3 as i64,
            c: c3 as i64,
        }
        .reduce())
    }

    pub fn pow(&self, mut k: u64) -> Result<QuadForm> {
        let mut acc = QuadForm::principal(self.discriminant())?;
        let mut base = *self;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.compose(&base)?;
            }
            base = base.compose(&base)?;
            k >>= 1;
        }
        Ok(acc)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassGroup {
    pub discriminant: i64,
    pub fundamental: bool,
    pub forms: Vec<QuadForm>,
    pub class_number: usize,
}

/// Every reduced primitive form of discriminant `d`, sorted.
pub fn class_group(d: i64) -> Result<ClassGroup> {
    check_discriminant(d)?;
    let mut forms = Vec::new();
    let amax = isqrt((-d / 3) as u64) as i64;
    for a in 1..=amax {
        for b in -a + 1..=a {
            if (b - d).rem_euclid(2) != 0 || (b * b - d) % (4 * a) != 0 {
                continue;
            }
            let c = (b * b - d) / (4 * a);
            let f = QuadForm { a, b, c };
            if f.is_reduced() && gcd_i64(gcd_i64(a, b), c) == 1 {
                forms.push(f);
            }
        }
    }
    forms.sort();
    Ok(ClassGroup {
        discriminant: d,
        fundamental: fundamental_discriminant(d).1 == 1,
        class_number: forms.len(),
        forms,
    })
}

/// An ideal with Z-basis `a` and `b + c w` (`a, c > 0`, `0 <= b < a`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct QuadIdeal {
    pub discriminant: i64,
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl fmt::Display for QuadIdeal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {} + {}w]", self.a, self.b, self.c)
    }
}

/// Hermite normal form of the lattice spanned by the given elements.
fn hnf(gens: &[Element]) -> Option<(i64, i64, i64)> {
    let mut v: Vec<(i128, i128)> = gens.iter().map(|&(x, y)| (x as i128, y as i128)).collect();
    // Euclid on the second coordinates
    loop {
        let nz: Vec<usize> = (0..v.len()).filter(|&i| v[i].1 != 0).collect();
        if nz.len() <= 1 {
            break;
        }
        let p = *nz.iter().min_by_key(|&&i| v[i].1.abs()).unwrap();
        for &i in &nz {
            if i != p {
                let q = v[i].1.div_euclid(v[p].1);
                v[i] = (v[i].0 - q * v[p].0, v[i].1 - q * v[p].1);
            }
        }
    }
    let piv = v.iter().position(|e| e.1 != 0)?;
    let (mut bx, mut c) = v[piv];
    let a = v
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != piv)
        .fold(0i128, |g, (_, e)| ext_gcd(g, e.0).0.abs());
    if a == 0 {
        return None;
    }
    if c < 0 {
        bx = -bx;
        c = -c;
    }
    Some((a as i64, bx.rem_euclid(a) as i64, c as i64))
}

impl QuadIdeal {
    /// The lattice spanned by `gens`, if it is an ideal of full rank.
    pub fn from_generators(d: i64, gens: &[Element]) -> Result<Self> {
        check_discriminant(d)?;
        let (a, b, c) = hnf(gens).ok_or_else(|| Error::NotAnIdeal("lattice of rank < 2".into()))?;
        let id = QuadIdeal {
            discriminant: d,
            a,
            b,
            c,
        };
        if !id.is_closed() {
            return Err(Error::NotAnIdeal(id.to_string()));
        }
        Ok(id)
    }

    pub fn new(d: i64, a: i64, b: i64, c: i64) -> Result<Self> {
        if a <= 0 || c <= 0 || !(0..a).contains(&b) {
            return Err(Error::NotAnIdeal(format!("[{a}, {b} + {c}w] is not in normal form")));
        }
        QuadIdeal::from_generators(d, &[(a, 0), (b, c)])
    }

    pub fn unit(d: i64) -> Result<Self> {
        QuadIdeal::new(d, 1, 0, 1)
    }

    /// The principal ideal `(x + y w)`.
    pub fn principal(d: i64, g: Element) -> Result<Self> {
        let w = (0, 1);
        QuadIdeal::from_generators(d, &[g, element_mul(d, g, w)])
    }

    pub fn basis(&self) -> [Element; 2] {
        [(self.a, 0), (self.b, self.c)]
    }

    pub fn norm(&self) -> i64 {
        self.a * self.c
    }

    pub fn contains(&self, (x, y): Element) -> bool {
        if y % self.c != 0 {
            return false;
        }
        (x - (y / self.c) * self.b) % self.a == 0
    }

    fn is_closed(&self) -> bool {
        let w = (0, 1);
        self.basis()
            .iter()
            .all(|&e| self.contains(element_mul(self.discriminant, e, w)))
    }

    pub fn mul(&self, other: &QuadIdeal) -> Result<QuadIdeal> {
        let d = self.discriminant;
        if other.discriminant != d {
            return Err(Error::MixedOrders(d, other.discriminant));
        }
        let mut gens = Vec::with_capacity(4);
        for x in self.basis() {
            for y in other.basis() {
                gens.push(element_mul(d, x, y));
            }
        }
        QuadIdeal::from_generators(d, &gens)
    }

    pub fn conjugate(&self) -> QuadIdeal {
        // conj(w) = s - w
        let s = sigma(self.discriminant);
        let conj = |(x, y): Element| (x + s * y, -y);
        QuadIdeal::from_generators(self.discriminant, &[conj((self.a, 0)), conj((self.b, self.c))])
            .expect("conjugate of an ideal")
    }

    /// The largest integer `c` with `I ⊆ cO`, and `I / c`.
    pub fn content(&self) -> (i64, QuadIdeal) {
        let g = gcd_i64(gcd_i64(self.a, self.b), self.c);
        (
            g,
            QuadIdeal {
                a: self.a / g,
                b: self.b / g,
                c: self.c / g,
                ..*self
            },
        )
    }

    /// `N(x alpha + y beta) / N(I)` as a form in the basis coordinates, for
    /// a primitive ideal `[a, (B + sqrt D) / 2]`: `(a, B, (B^2 - D) / 4a)`.
    pub fn form(&self) -> QuadForm {
        let (_, prim) = self.content();
        let bb = 2 * prim.b + sigma(self.discriminant);
        let c = (bb * bb - self.discriminant) / (4 * prim.a);
        QuadForm { a: prim.a, b: bb, c }
    }

    /// Elements `x alpha + y beta` with `N / N(I) <= bound`, smallest norm
    /// first and then by a fixed order on coordinates.
    pub fn elements_up_to(&self, bound: i64) -> Vec<Element> {
        let f = self.form();
        let dabs = -self.discriminant;
        let (g, prim) = self.content();
        // f(x, y) <= R forces y^2 <= 4aR/|D| and x^2 <= 4cR/|D|
        let ymax = isqrt((4 * f.a * bound / dabs) as u64) as i64 + 1;
        let xmax = isqrt((4 * f.c * bound / dabs) as u64) as i64 + 1;
        let [al, be] = prim.basis();
        let mut out: Vec<(i64, Element)> = Vec::new();
        for y in -ymax..=ymax {
            for x in -xmax..=xmax {
                let v = f.eval(x, y);
                if v == 0 || v > bound {
                    continue;
                }
                let e = (g * (x * al.0 + y * be.0), g * (x * al.1 + y * be.1));
                out.push((v, e));
            }
        }
        out.sort_by_key(|&(v, (x, y))| (v, y.abs(), x.abs(), x < 0, y < 0));
        out.into_iter().map(|(_, e)| e).collect()
    }

    /// The first element of `self` (in [`Self::elements_up_to`] order)
    /// satisfying `pred`, widening the search until one is found.
    fn find_element(&self, pred: impl Fn(Element) -> bool) -> Result<Element> {
        let mut bound = 4;
        while bound < 1 << 24 {
            if let Some(e) = self.elements_up_to(bound).into_iter().find(|&e| pred(e)) {
                return Ok(e);
            }
            bound *= 4;
        }
        Err(Error::Internal(format!("no suitable element found in {self}")))
    }
}

/// Every ideal of the given norm, sorted.
pub fn ideals_of_norm(d: i64, n: i64) -> Result<Vec<QuadIdeal>> {
    check_discriminant(d)?;
    let mut out = Vec::new();
    for c in (1..=n).filter(|c| n % c == 0) {
        let a = n / c;
        for b in 0..a {
            if let Ok(i) = QuadIdeal::new(d, a, b, c) {
                out.push(i);
            }
        }
    }
    out.sort();
    Ok(out)
}

/// The ideal class of a reduced form: `(a, b, c) -> [a, (b + sqrt D) / 2]`.
pub fn ideal_of_form(f: &QuadForm) -> Result<QuadIdeal> {
    let d = f.discriminant();
    QuadIdeal::new(d, f.a, ((f.b - sigma(d)) / 2).rem_euclid(f.a), 1)
}

pub fn ideal_mul(i: &QuadIdeal, j: &QuadIdeal) -> Result<QuadIdeal> {
    i.mul(j)
}

pub fn ideal_norm(i: &QuadIdeal) -> i64 {
    i.norm()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitKind {
    Inert,
    Ramified,
    Split,
}

#[derive(Clone, Debug, Serialize)]
pub struct Splitting {
    pub ell: u64,
    pub kind: SplitKind,
    pub kronecker: i32,
    /// The prime ideals of norm `ell` (none when inert).
    pub primes: Vec<QuadIdeal>,
}

/// How `ell` factors in the order, from the Kronecker symbol `(D | ell)`.
pub fn splitting_type(ell: u64, d: i64) -> Result<Splitting> {
    check_discriminant(d)?;
    if !is_prime(ell) {
        return Err(Error::NotPrime(ell));
    }
    let k = kronecker(d, ell);
    let kind = match k {
        -1 => SplitKind::Inert,
        0 => SplitKind::Ramified,
        _ => SplitKind::Split,
    };
    let primes = if kind == SplitKind::Inert {
        Vec::new()
    } else {
        ideals_of_norm(d, ell as i64)?
    };
    Ok(Splitting {
        ell,
        kind,
        kronecker: k,
        primes,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Principality {
    pub principal: bool,
    pub reduced_form: QuadForm,
    pub generator: Option<Element>,
}

/// Whether the ideal is principal: its form reduces to the principal form,
/// and then a generator is found among elements of norm `N(I)`.
pub fn is_principal(i: &QuadIdeal) -> Result<Principality> {
    let d = i.discriminant;
    let reduced = i.form().reduce();
    let principal = reduced == QuadForm::principal(d)?;
    let generator = if principal {
        let n = i.norm();
        let g = i
            .elements_up_to(1)
            .into_iter()
            .find(|&e| element_norm(d, e) == n && QuadIdeal::principal(d, e).ok() == Some(*i));
        if g.is_none() {
            return Err(Error::Internal(format!("principal {i} has no generator of norm {n}")));
        }
        g
    } else {
        None
    };
    Ok(Principality {
        principal,
        reduced_form: reduced,
        generator,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Principal,
    Inert,
    Ramified,
    Split,
}

#[derive(Clone, Debug, Serialize)]
pub struct CoprimeIndex {
    pub ideal: QuadIdeal,
    pub ell: u64,
    pub branch: Branch,
    pub element: Element,
    pub element_norm: i64,
    /// `[b : cO] = N(c) / N(b)`.
    pub index: i64,
}

/// A nonzero `c` in `b` with `[b : cO]` prime to `ell`.
pub fn coprime_index_element(b: &QuadIdeal, ell: u64) -> Result<CoprimeIndex> {
    let d = b.discriminant;
    let sp = splitting_type(ell, d)?;
    let pr = is_principal(b)?;
    let (branch, c) = if let Some(g) = pr.generator {
        (Branch::Principal, g)
    } else {
        match sp.kind {
            SplitKind::Inert => {
                let lb = b.mul(&QuadIdeal::principal(d, (ell as i64, 0))?)?;
                (Branch::Inert, b.find_element(|e| !lb.contains(e))?)
            }
            SplitKind::Ramified => {
                let lb = b.mul(&sp.primes[0])?;
                (Branch::Ramified, b.find_element(|e| !lb.contains(e))?)
            }
            SplitKind::Split => {
                let l1b = b.mul(&sp.primes[0])?;
                let l2b = b.mul(&sp.primes[1])?;
                let c1 = l1b.find_element(|e| !l2b.contains(e))?;
                let c2 = l2b.find_element(|e| !l1b.contains(e))?;
                let c = (c1.0 + c2.0, c1.1 + c2.1);
                if l1b.contains(c) || l2b.contains(c) {
                    return Err(Error::Internal("c1 + c2 lies in a prime multiple of b".into()));
                }
                (Branch::Split, c)
            }
        }
    };
    if !b.contains(c) || c == (0, 0) {
        return Err(Error::Internal(format!("{c:?} is not a nonzero element of {b}")));
    }
    let nc = element_norm(d, c);
    if nc % b.norm() != 0 {
        return Err(Error::Internal("N(c) is not divisible by N(b)".into()));
    }
    let index = nc / b.norm();
    if index % ell as i64 == 0 {
        return Err(Error::Internal(format!(
            "index {index} of c = {c:?} in {b} is divisible by {ell}"
        )));
    }
    Ok(CoprimeIndex {
        ideal: *b,
        ell,
        branch,
        element: c,
        element_norm: nc,
        index,
    })
}
