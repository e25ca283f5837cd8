//! Linear algebra over `Z/n`: 2x2 matrices, diagonalisation of integer
//! matrices by unimodular transforms, and finite submodules of `(Z/n)^k`.

use serde::Serialize;

use crate::arith::{gcd, mod_inv};

#[inline]
fn md(x: i128, n: u64) -> u64 {
    x.rem_euclid(n as i128) as u64
}

/// A 2x2 matrix over `Z/n`, row-major `[[a, b], [c, d]]`, acting on
/// column vectors of coordinates.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Mat2 {
    n: u64,
    e: [u64; 4],
}

impl Serialize for Mat2 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [[self.e[0], self.e[1]], [self.e[2], self.e[3]]].serialize(s)
    }
}

impl Mat2 {
    pub fn new(n: u64, entries: [i64; 4]) -> Self {
        assert!(n >= 1, "modulus must be positive");
        Mat2 {
            n,
            e: entries.map(|x| md(x as i128, n)),
        }
    }

    pub fn from_columns(n: u64, c0: [u64; 2], c1: [u64; 2]) -> Self {
        Mat2::new(n, [c0[0] as i64, c1[0] as i64, c0[1] as i64, c1[1] as i64])
    }

    pub fn identity(n: u64) -> Self {
        Mat2::scalar(n, 1)
    }

    pub fn zero(n: u64) -> Self {
        Mat2::scalar(n, 0)
    }

    pub fn scalar(n: u64, c: i64) -> Self {
        Mat2::new(n, [c, 0, 0, c])
    }

    /// Companion matrix of `T^2 - t T + d`.
    pub fn companion(n: u64, t: i64, d: i64) -> Self {
        Mat2::new(n, [0, -d, 1, t])
    }

    pub fn modulus(&self) -> u64 {
        self.n
    }

    pub fn entries(&self) -> [u64; 4] {
        self.e
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.e[2 * i + j]
    }

    pub fn column(&self, j: usize) -> [u64; 2] {
        [self.e[j], self.e[2 + j]]
    }

    pub fn is_zero(&self) -> bool {
        self.e.iter().all(|&x| x == 0)
    }

    pub fn add(&self, o: &Mat2) -> Mat2 {
        debug_assert_eq!(self.n, o.n);
        let mut e = [0; 4];
        for i in 0..4 {
            e[i] = md(self.e[i] as i128 + o.e[i] as i128, self.n);
        }
        Mat2 { n: self.n, e }
    }

    pub fn sub(&self, o: &Mat2) -> Mat2 {
        self.add(&o.scale(-1))
    }

    pub fn scale(&self, c: i64) -> Mat2 {
        Mat2 {
            n: self.n,
            e: self.e.map(|x| md(x as i128 * c as i128, self.n)),
        }
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        debug_assert_eq!(self.n, o.n);
        let [a, b, c, d] = self.e.map(|x| x as i128);
        let [w, x, y, z] = o.e.map(|x| x as i128);
        let n = self.n;
        Mat2 {
            n,
            e: [
                md(a * w + b * y, n),
                md(a * x + b * z, n),
                md(c * w + d * y, n),
                md(c * x + d * z, n),
            ],
        }
    }

    pub fn apply(&self, v: [u64; 2]) -> [u64; 2] {
        let [a, b, c, d] = self.e.map(|x| x as i128);
        [
            md(a * v[0] as i128 + b * v[1] as i128, self.n),
            md(c * v[0] as i128 + d * v[1] as i128, self.n),
        ]
    }

    pub fn pow(&self, mut k: u64) -> Mat2 {
        let mut acc = Mat2::identity(self.n);
        let mut base = *self;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            k >>= 1;
        }
        acc
    }

    pub fn det(&self) -> u64 {
        let [a, b, c, d] = self.e.map(|x| x as i128);
        md(a * d - b * c, self.n)
    }

    pub fn trace(&self) -> u64 {
        md(self.e[0] as i128 + self.e[3] as i128, self.n)
    }

    pub fn transpose(&self) -> Mat2 {
        let [a, b, c, d] = self.e;
        Mat2 {
            n: self.n,
            e: [a, c, b, d],
        }
    }

    /// Adjugate, so that `M * adj(M) = det(M) I`.
    pub fn adjugate(&self) -> Mat2 {
        let [a, b, c, d] = self.e.map(|x| x as i64);
        Mat2::new(self.n, [d, -b, -c, a])
    }

    pub fn is_invertible(&self) -> bool {
        gcd(self.det(), self.n) == 1
    }

    pub fn inverse(&self) -> Option<Mat2> {
        let inv = mod_inv(self.det() as i64, self.n)?;
        Some(self.adjugate().scale(inv as i64))
    }

    /// Entrywise reduction to a divisor `d` of the modulus.
    pub fn reduce(&self, d: u64) -> Mat2 {
        assert!(self.n.is_multiple_of(d), "{d} does not divide {}", self.n);
        Mat2 {
            n: d,
            e: self.e.map(|x| x % d),
        }
    }

    /// Multiplicative order in `GL_2(Z/n)`; `None` when not invertible.
    pub fn order(&self) -> Option<u64> {
        if !self.is_invertible() {
            return None;
        }
        let id = Mat2::identity(self.n);
        let mut acc = *self;
        let mut k = 1u64;
        while acc != id {
            acc = acc.mul(self);
            k += 1;
        }
        Some(k)
    }

    /// All `n^4` matrices, for brute-force checks at small moduli.
    pub fn all(n: u64) -> impl Iterator<Item = Mat2> {
        (0..n.pow(4)).map(move |mut i| {
            let mut e = [0u64; 4];
            for slot in e.iter_mut() {
                *slot = i % n;
                i /= n;
            }
            Mat2 { n, e }
        })
    }
}

/// Dense integer matrix stored row-major, entries kept reduced mod `n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZnMatrix {
    pub n: u64,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<u64>,
}

impl ZnMatrix {
    pub fn new(n: u64, rows: usize, cols: usize, entries: &[i64]) -> Self {
        assert_eq!(entries.len(), rows * cols);
        ZnMatrix {
            n,
            rows,
            cols,
            data: entries.iter().map(|&x| md(x as i128, n)).collect(),
        }
    }

    pub fn identity(n: u64, k: usize) -> Self {
        let mut m = ZnMatrix::new(n, k, k, &vec![0; k * k]);
        for i in 0..k {
            m.data[i * k + i] = 1 % n;
        }
        m
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(n: u64, dim: usize, cols: &[Vec<u64>]) -> Self {
        let mut m = ZnMatrix::new(n, dim, cols.len(), &vec![0; dim * cols.len()]);
        for (j, c) in cols.iter().enumerate() {
            assert_eq!(c.len(), dim);
            for i in 0..dim {
                m.data[i * cols.len() + j] = c[i] % n;
            }
        }
        m
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> u64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: u64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn column(&self, j: usize) -> Vec<u64> {
        (0..self.rows).map(|i| self.at(i, j)).collect()
    }

    pub fn mul_vec(&self, v: &[u64]) -> Vec<u64> {
        (0..self.rows)
            .map(|i| {
                let s: i128 = (0..self.cols)
                    .map(|j| self.at(i, j) as i128 * v[j] as i128)
                    .sum();
                md(s, self.n)
            })
            .collect()
    }

    // new_r1 = x r1 + y r2, new_r2 = u r1 + v r2
    fn row_combine(&mut self, r1: usize, r2: usize, [x, y, u, v]: [i128; 4]) {
        for j in 0..self.cols {
            let a = self.at(r1, j) as i128;
            let b = self.at(r2, j) as i128;
            self.set(r1, j, md(x * a + y * b, self.n));
            self.set(r2, j, md(u * a + v * b, self.n));
        }
    }

    fn col_combine(&mut self, c1: usize, c2: usize, [x, y, u, v]: [i128; 4]) {
        for i in 0..self.rows {
            let a = self.at(i, c1) as i128;
            let b = self.at(i, c2) as i128;
            self.set(i, c1, md(x * a + y * b, self.n));
            self.set(i, c2, md(u * a + v * b, self.n));
        }
    }
}

/// `left * A * right = diag(d)` over `Z/n`, with `left_inv = left^{-1}`.
/// The diagonal entries need not form a divisibility chain; only their
/// gcds with `n` matter for the module structure.
#[derive(Clone, Debug)]
pub struct Diagonal {
    pub d: Vec<u64>,
    pub left: ZnMatrix,
    pub left_inv: ZnMatrix,
    pub right: ZnMatrix,
}

/// Bezout transform sending `(a, b)` to `(gcd, 0)`, with its inverse.
fn bezout(a: u64, b: u64) -> ([i128; 4], [i128; 4]) {
    if a != 0 && b.is_multiple_of(a) {
        let q = (b / a) as i128;
        return ([1, 0, -q, 1], [1, 0, q, 1]);
    }
    let (g, x, y) = crate::arith::ext_gcd(a as i128, b as i128);
    let (ap, bp) = (a as i128 / g, b as i128 / g);
    // [[x, y], [-bp, ap]] has determinant 1
    ([x, y, -bp, ap], [ap, -y, bp, x])
}

pub fn diagonalize(a: &ZnMatrix) -> Diagonal {
    let n = a.n;
    let (m, k) = (a.rows, a.cols);
    let mut w = a.clone();
    let mut left = ZnMatrix::identity(n, m);
    let mut left_inv = ZnMatrix::identity(n, m);
    let mut right = ZnMatrix::identity(n, k);
    let mut d = Vec::new();
    for t in 0..m.min(k) {
        // choose the entry with the smallest gcd against n as pivot
        let mut best: Option<(u64, usize, usize)> = None;
        for i in t..m {
            for j in t..k {
                let v = w.at(i, j);
                if v != 0 {
                    let g = gcd(v, n);
                    if best.is_none_or(|(bg, _, _)| g < bg) {
                        best = Some((g, i, j));
                    }
                }
            }
        }
        let Some((_, pi, pj)) = best else {
            d.extend(std::iter::repeat_n(0, m.min(k) - t));
            break;
        };
        if pi != t {
            let swap = [0, 1, 1, 0];
            w.row_combine(t, pi, swap);
            left.row_combine(t, pi, swap);
            left_inv.col_combine(t, pi, swap);
        }
        if pj != t {
            let swap = [0, 1, 1, 0];
            w.col_combine(t, pj, swap);
            right.col_combine(t, pj, swap);
        }
        loop {
            let mut changed = false;
            for i in t + 1..m {
                let b = w.at(i, t);
                if b == 0 {
                    continue;
                }
                let (f, [p, q, r, s]) = bezout(w.at(t, t), b);
                w.row_combine(t, i, f);
                left.row_combine(t, i, f);
                // right-multiplying by the inverse combines columns by its transpose
                left_inv.col_combine(t, i, [p, r, q, s]);
                changed = true;
            }
            for j in t + 1..k {
                let b = w.at(t, j);
                if b == 0 {
                    continue;
                }
                let (f, _) = bezout(w.at(t, t), b);
                w.col_combine(t, j, f);
                right.col_combine(t, j, f);
                changed = true;
            }
            if !changed {
                break;
            }
        }
        d.push(w.at(t, t));
    }
    Diagonal {
        d,
        left,
        left_inv,
        right,
    }
}

/// A submodule of `(Z/n)^dim`, stored as a direct sum of cyclic pieces.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Submodule {
    pub n: u64,
    pub dim: usize,
    /// `(generator, additive order)`; the module is their direct sum.
    pub cyclic: Vec<(Vec<u64>, u64)>,
}

impl Submodule {
    /// The span of `gens`.
    pub fn span(n: u64, dim: usize, gens: &[Vec<u64>]) -> Self {
        if gens.is_empty() {
            return Submodule {
                n,
                dim,
                cyclic: Vec::new(),
            };
        }
        let g = ZnMatrix::from_columns(n, dim, gens);
        let diag = diagonalize(&g);
        let mut cyclic = Vec::new();
        for (i, &di) in diag.d.iter().enumerate() {
            let order = n / gcd(di, n);
            if order > 1 {
                let v: Vec<u64> = diag
                    .left_inv
                    .column(i)
                    .iter()
                    .map(|&x| md(x as i128 * di as i128, n))
                    .collect();
                cyclic.push((v, order));
            }
        }
        Submodule { n, dim, cyclic }
    }

    /// Solutions `x` of `A x = 0` over `Z/n`.
    pub fn kernel(a: &ZnMatrix) -> Self {
        let n = a.n;
        let diag = diagonalize(a);
        let mut cyclic = Vec::new();
        for i in 0..a.cols {
            let di = diag.d.get(i).copied().unwrap_or(0);
            let order = gcd(di, n);
            if order > 1 {
                let step = n / order;
                let v = diag
                    .right
                    .column(i)
                    .iter()
                    .map(|&x| md(x as i128 * step as i128, n))
                    .collect();
                cyclic.push((v, order));
            }
        }
        Submodule {
            n,
            dim: a.cols,
            cyclic,
        }
    }

    pub fn generators(&self) -> Vec<Vec<u64>> {
        self.cyclic.iter().map(|(g, _)| g.clone()).collect()
    }

    pub fn cardinality(&self) -> u128 {
        self.cyclic.iter().map(|&(_, o)| o as u128).product()
    }

    pub fn contains(&self, v: &[u64]) -> bool {
        if self.cyclic.is_empty() {
            return v.iter().all(|&x| x % self.n == 0);
        }
        let g = ZnMatrix::from_columns(self.n, self.dim, &self.generators());
        let diag = diagonalize(&g);
        let w = diag.left.mul_vec(v);
        w.iter().enumerate().all(|(i, &wi)| match diag.d.get(i) {
            Some(&di) => wi % gcd(di, self.n) == 0,
            None => wi == 0,
        })
    }

    pub fn is_submodule_of(&self, other: &Submodule) -> bool {
        self.cyclic.iter().all(|(g, _)| other.contains(g))
    }

    /// Every element, for small modules.
    pub fn elements(&self) -> Vec<Vec<u64>> {
        let mut out = vec![vec![0u64; self.dim]];
        for (g, o) in &self.cyclic {
            let mut next = Vec::with_capacity(out.len() * *o as usize);
            for base in &out {
                for c in 0..*o {
                    next.push(
                        base.iter()
                            .zip(g)
                            .map(|(&b, &x)| md(b as i128 + c as i128 * x as i128, self.n))
                            .collect(),
                    );
                }
            }
            out = next;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mat2_basics() {
        let m = Mat2::new(12, [1, 2, 3, 5]);
        assert_eq!(m.det(), 11);
        let inv = m.inverse().unwrap();
        assert_eq!(m.mul(&inv), Mat2::identity(12));
        assert!(Mat2::new(12, [2, 0, 0, 1]).inverse().is_none());
        let c = Mat2::companion(7, 3, 5);
        assert_eq!((c.trace(), c.det()), (3, 5));
        assert_eq!(Mat2::new(5, [0, -1, 1, 0]).order(), Some(4));
    }

    #[test]
    fn kernel_matches_brute_force() {
        let n = 12u64;
        let a = ZnMatrix::new(n, 2, 3, &[2, 4, 6, 3, 0, 9]);
        let k = Submodule::kernel(&a);
        let mut count = 0u128;
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    let v = vec![x, y, z];
                    let zero = a.mul_vec(&v).iter().all(|&c| c == 0);
                    if zero {
                        count += 1;
                    }
                    assert_eq!(k.contains(&v), zero, "{v:?}");
                }
            }
        }
        assert_eq!(k.cardinality(), count);
    }

    #[test]
    fn span_matches_closure() {
        let n = 8u64;
        let gens = vec![vec![2, 4], vec![4, 6]];
        let s = Submodule::span(n, 2, &gens);
        let mut closure = std::collections::HashSet::new();
        for i in 0..n {
            for j in 0..n {
                closure.insert(vec![(2 * i + 4 * j) % n, (4 * i + 6 * j) % n]);
            }
        }
        assert_eq!(s.cardinality(), closure.len() as u128);
        let elems: std::collections::HashSet<_> = s.elements().into_iter().collect();
        assert_eq!(elems, closure);
        for x in 0..n {
            for y in 0..n {
                assert_eq!(s.contains(&[x, y]), closure.contains(&vec![x, y]));
            }
        }
    }

    fn mm(a: &ZnMatrix, b: &ZnMatrix) -> ZnMatrix {
        let mut out = ZnMatrix::new(a.n, a.rows, b.cols, &vec![0; a.rows * b.cols]);
        for i in 0..a.rows {
            for j in 0..b.cols {
                let s: u128 = (0..a.cols)
                    .map(|k| a.at(i, k) as u128 * b.at(k, j) as u128)
                    .sum();
                out.set(i, j, (s % a.n as u128) as u64);
            }
        }
        out
    }

    proptest::proptest! {
        #[test]
        fn diagonalization_factors(
            n in 2u64..60,
            rows in 1usize..5,
            cols in 1usize..5,
            seed in proptest::collection::vec(0i64..1000, 16),
        ) {
            let a = ZnMatrix::new(n, rows, cols, &seed[..rows * cols]);
            let dg = diagonalize(&a);
            proptest::prop_assert_eq!(mm(&dg.left, &dg.left_inv), ZnMatrix::identity(n, rows));
            let prod = mm(&mm(&dg.left, &a), &dg.right);
            for i in 0..rows {
                for j in 0..cols {
                    let want = if i == j { dg.d[i] % n } else { 0 };
                    proptest::prop_assert_eq!(prod.at(i, j), want);
                }
            }
        }

        #[test]
        fn span_is_closure(
            n in 2u64..9,
            gens in proptest::collection::vec(proptest::collection::vec(0u64..9, 3), 1..4),
        ) {
            let s = Submodule::span(n, 3, &gens);
            let mut closure = std::collections::HashSet::new();
            closure.insert(vec![0u64; 3]);
            loop {
                let mut grown = closure.clone();
                for v in &closure {
                    for g in &gens {
                        grown.insert(v.iter().zip(g).map(|(a, b)| (a + b) % n).collect::<Vec<_>>());
                    }
                }
                if grown.len() == closure.len() {
                    break;
                }
                closure = grown;
            }
            proptest::prop_assert_eq!(s.cardinality(), closure.len() as u128);
            for v in &closure {
                proptest::prop_assert!(s.contains(v));
            }
            let elems: std::collections::HashSet<_> = s.elements().into_iter().collect();
            proptest::prop_assert_eq!(elems, closure);
        }
    }
}
