//! A finite symplectic model `(Z/n)^{2g}` of a polarization kernel with its
//! alternating form, and graph subgroups of integer matrices acting on
//! powers of it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::arith::isqrt;
use crate::error::{Error, Result};
use crate::linalg::{Submodule, ZnMatrix};

/// `(Z/n)^{2g}` with `e(v, w) = sum_i (v_{2i} w_{2i+1} - v_{2i+1} w_{2i})`,
/// read as the exponent of a fixed primitive `n`-th root of unity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SymplecticModule {
    n: u64,
    g: usize,
}

impl SymplecticModule {
    pub fn new(n: u64, g: usize) -> Result<Self> {
        if n == 0 || g == 0 {
            return Err(Error::Precondition("modulus and genus must be positive".into()));
        }
        Ok(SymplecticModule { n, g })
    }

    pub fn modulus(&self) -> u64 {
        self.n
    }

    pub fn genus(&self) -> usize {
        self.g
    }

    pub fn rank(&self) -> usize {
        2 * self.g
    }

    /// Number of elements, `n^{2g}`, if it fits.
    pub fn cardinality(&self) -> Option<u128> {
        (self.n as u128).checked_pow(self.rank() as u32)
    }

    /// `K^r` with the product form.
    pub fn power(&self, r: usize) -> SymplecticModule {
        SymplecticModule {
            n: self.n,
            g: self.g * r,
        }
    }

    pub fn pair(&self, v: &[u64], w: &[u64]) -> u64 {
        let n = self.n as u128;
        if n * n * (2 * self.g as u128) < 1 << 62 {
            let mut s = 0i64;
            for i in 0..self.g {
                s += v[2 * i] as i64 * w[2 * i + 1] as i64 - v[2 * i + 1] as i64 * w[2 * i] as i64;
            }
            return s.rem_euclid(self.n as i64) as u64;
        }
        let mut s = 0i128;
        for i in 0..self.g {
            s += v[2 * i] as i128 * w[2 * i + 1] as i128 - v[2 * i + 1] as i128 * w[2 * i] as i128;
        }
        s.rem_euclid(self.n as i128) as u64
    }

    /// The Gram matrix of the form in the standard basis.
    pub fn form_matrix(&self) -> Vec<Vec<i64>> {
        let r = self.rank();
        let mut m = vec![vec![0i64; r]; r];
        for i in 0..self.g {
            m[2 * i][2 * i + 1] = 1;
            m[2 * i + 1][2 * i] = -1;
        }
        m
    }

    /// The form matrix is invertible over `Z/n`.
    pub fn is_nondegenerate(&self) -> bool {
        let r = self.rank();
        let flat: Vec<i64> = self.form_matrix().concat();
        let k = Submodule::kernel(&ZnMatrix::new(self.n, r, r, &flat));
        k.cardinality() == 1
    }

    pub fn element(&self, mut index: u128) -> Vec<u64> {
        (0..self.rank())
            .map(|_| {
                let c = (index % self.n as u128) as u64;
                index /= self.n as u128;
                c
            })
            .collect()
    }

    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<u64> {
        (0..self.rank()).map(|_| rng.gen_range(0..self.n)).collect()
    }

    /// `e(v, v) = 0` on every element when there are at most `limit`,
    /// else on `samples` random ones. Returns the number checked.
    pub fn check_alternating(&self, limit: u128, samples: usize, seed: u64) -> Result<u64> {
        let mut checked = 0u64;
        let mut check = |v: Vec<u64>| {
            checked += 1;
            if self.pair(&v, &v) != 0 {
                return Err(Error::Internal(format!("e(v, v) != 0 at {v:?}")));
            }
            Ok(())
        };
        match self.cardinality() {
            Some(c) if c <= limit => (0..c).try_for_each(|i| check(self.element(i)))?,
            _ => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..samples).try_for_each(|_| check(self.random_element(&mut rng)))?
            }
        }
        Ok(checked)
    }
}

/// The smallest `a >= 0` with `a^2 ≡ -1 (mod n)`.
pub fn sqrt_minus_one(n: u64) -> Option<u64> {
    if n == 0 {
        return None;
    }
    (0..n).find(|&a| (a as u128 * a as u128 + 1).is_multiple_of(n as u128))
}

/// All `(a, b, c, d)` with `a >= b >= c >= d >= 0` and squares summing to
/// `s`, lexicographically decreasing.
pub fn four_square_representations(s: u64) -> Vec<[u64; 4]> {
    let mut out = Vec::new();
    for a in (0..=isqrt(s)).rev() {
        let r1 = s - a * a;
        for b in (0..=isqrt(r1).min(a)).rev() {
            let r2 = r1 - b * b;
            for c in (0..=isqrt(r2).min(b)).rev() {
                let r3 = r2 - c * c;
                let d = isqrt(r3);
                if d * d == r3 && d <= c {
                    out.push([a, b, c, d]);
                }
            }
        }
    }
    out
}

/// A quadruple with `s = a^2 + b^2 + c^2 + d^2 ≡ -1 (mod n)`, `s > 0`,
/// taking the smallest such `s` and then the lexicographically largest
/// sorted quadruple (so `n = 5` gives `(2, 0, 0, 0)`).
pub fn four_square_neg_one(n: u64) -> Result<QuaternionMatrix> {
    if n == 0 {
        return Err(Error::Precondition("n must be positive".into()));
    }
    // s = n - 1 for n >= 2, and s = 1 for n = 1
    let mut s = if n == 1 { 1 } else { n - 1 };
    loop {
        if let Some(q) = four_square_representations(s).first() {
            let m = QuaternionMatrix::new(q[0] as i64, q[1] as i64, q[2] as i64, q[3] as i64);
            debug_assert_eq!(m.s() % n, (n - 1) % n);
            return Ok(m);
        }
        s += n;
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QuaternionMatrix {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
    pub matrix: [[i64; 4]; 4],
}

impl QuaternionMatrix {
    /// Right multiplication by `a + bi + cj + dk` in the basis
    /// `(1, i, j, k)`.
    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Self {
        let matrix = [
            [a, -b, -c, -d],
            [b, a, d, -c],
            [c, -d, a, b],
            [d, c, -b, a],
        ];
        QuaternionMatrix { a, b, c, d, matrix }
    }

    pub fn s(&self) -> u64 {
        (self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d) as u64
    }

    pub fn rows(&self) -> Vec<Vec<i64>> {
        self.matrix.iter().map(|r| r.to_vec()).collect()
    }

    pub fn transpose_times_self(&self) -> [[i64; 4]; 4] {
        let m = &self.matrix;
        let mut out = [[0i64; 4]; 4];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = (0..4).map(|k| m[k][i] * m[k][j]).sum();
            }
        }
        out
    }

    pub fn square(&self) -> [[i64; 4]; 4] {
        let m = &self.matrix;
        let mut out = [[0i64; 4]; 4];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = (0..4).map(|k| m[i][k] * m[k][j]).sum();
            }
        }
        out
    }

    /// `I^T I = s I_4` exactly.
    pub fn is_scaled_orthogonal(&self) -> bool {
        let s = self.s() as i64;
        let p = self.transpose_times_self();
        (0..4).all(|i| (0..4).all(|j| p[i][j] == if i == j { s } else { 0 }))
    }

    pub fn determinant(&self) -> i128 {
        det4(&self.matrix)
    }
}

fn det4(m: &[[i64; 4]; 4]) -> i128 {
    // cofactor expansion along the first row
    let minor = |skip: usize| -> i128 {
        let cols: Vec<usize> = (0..4).filter(|&c| c != skip).collect();
        let g = |r: usize, c: usize| m[r][cols[c]] as i128;
        g(1, 0) * (g(2, 1) * g(3, 2) - g(2, 2) * g(3, 1))
            - g(1, 1) * (g(2, 0) * g(3, 2) - g(2, 2) * g(3, 0))
            + g(1, 2) * (g(2, 0) * g(3, 1) - g(2, 1) * g(3, 0))
    };
    (0..4)
        .map(|j| {
            let s = if j % 2 == 0 { 1 } else { -1 };
            s * m[0][j] as i128 * minor(j)
        })
        .sum()
}

/// An `r x r` integer matrix acting on `K^r`, each entry a multiplication.
fn apply_block(u: &[Vec<i64>], k: &SymplecticModule, x: &[u64]) -> Vec<u64> {
    let r = u.len();
    let d = k.rank();
    let n = k.modulus();
    let mut out = vec![0u64; r * d];
    for i in 0..r {
        let row: Vec<u128> = u[i].iter().map(|&c| c.rem_euclid(n as i64) as u128).collect();
        for t in 0..d {
            let mut acc = 0u128;
            for j in 0..r {
                acc += row[j] * x[j * d + t] as u128;
            }
            out[i * d + t] = (acc % n as u128) as u64;
        }
    }
    out
}

fn transpose(u: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let r = u.len();
    (0..r).map(|i| (0..r).map(|j| u[j][i]).collect()).collect()
}

/// How many pairs to check and how.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CheckBudget {
    /// Check every pair literally when `#K^r` is at most this.
    pub all_pairs_limit: u128,
    /// Check every element against a basis (all pairs by linearity) when
    /// `#K^r` is at most this.
    pub exhaustive_limit: u128,
    pub samples: usize,
    pub seed: u64,
}

impl Default for CheckBudget {
    fn default() -> Self {
        CheckBudget {
            all_pairs_limit: 1 << 8,
            exhaustive_limit: 7u128.pow(8),
            samples: 10_000,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CheckMode {
    AllPairs,
    AgainstBasis,
    Sampled,
}

#[derive(Clone, Debug, Serialize)]
pub struct IsotropyReport {
    pub modulus: u64,
    pub rank: usize,
    pub mode: CheckMode,
    pub pairs_checked: u64,
    /// Pairs `(x, y)` in `K^r` with `e(x, y) + e(Ux, Uy) != 0`.
    pub violations: Vec<(Vec<u64>, Vec<u64>)>,
    pub adjoint_checked: u64,
    /// `(x, y)` with `e(Ux, y) != e(x, U^T y)`.
    pub adjoint_violations: Vec<(Vec<u64>, Vec<u64>)>,
}

impl IsotropyReport {
    pub fn isotropic(&self) -> bool {
        self.violations.is_empty()
    }
}

const MAX_RECORDED: usize = 8;

/// Checks whether the graph `{(x, Ux)}` of an `r x r` integer matrix on
/// `K^r` is isotropic for the product form on `K^r x K^r`, and the adjoint
/// rule `e(Ux, y) = e(x, U^T y)` on the same pairs.
pub fn graph_isotropy(u: &[Vec<i64>], k: &SymplecticModule, budget: &CheckBudget) -> IsotropyReport {
    let r = u.len();
    let kr = k.power(r);
    let ut = transpose(u);
    let n = k.modulus();
    let dim = kr.rank();
    let mut report = IsotropyReport {
        modulus: n,
        rank: dim,
        mode: CheckMode::Sampled,
        pairs_checked: 0,
        violations: Vec::new(),
        adjoint_checked: 0,
        adjoint_violations: Vec::new(),
    };
    // y comes with its images U y and U^T y
    let check = |x: &[u64], ux: &[u64], y: &[u64], uy: &[u64], uty: &[u64], rep: &mut IsotropyReport| {
        rep.pairs_checked += 1;
        if !(kr.pair(x, y) + kr.pair(ux, uy)).is_multiple_of(n) && rep.violations.len() < MAX_RECORDED {
            rep.violations.push((x.to_vec(), y.to_vec()));
        }
        rep.adjoint_checked += 1;
        if kr.pair(ux, y) != kr.pair(x, uty) && rep.adjoint_violations.len() < MAX_RECORDED {
            rep.adjoint_violations.push((x.to_vec(), y.to_vec()));
        }
    };
    let with_images = |y: Vec<u64>| {
        let uy = apply_block(u, k, &y);
        let uty = apply_block(&ut, k, &y);
        (y, uy, uty)
    };
    // odometer over K^r
    // returns the highest coordinate touched
    let next = |v: &mut [u64]| -> Option<usize> {
        for (i, c) in v.iter_mut().enumerate() {
            *c += 1;
            if *c < n {
                return Some(i);
            }
            *c = 0;
        }
        None
    };
    let size = kr.cardinality();
    match size {
        Some(c) if c <= budget.all_pairs_limit => {
            report.mode = CheckMode::AllPairs;
            let all: Vec<_> = (0..c).map(|i| with_images(kr.element(i))).collect();
            for (x, ux, _) in &all {
                for (y, uy, uty) in &all {
                    check(x, ux, y, uy, uty, &mut report);
                }
            }
        }
        Some(c) if c <= budget.exhaustive_limit => {
            // every x against a basis covers every pair by linearity in y
            report.mode = CheckMode::AgainstBasis;
            let basis: Vec<_> = (0..dim)
                .map(|i| with_images((0..dim).map(|j| (i == j) as u64).collect()))
                .collect();
            let mut x = vec![0u64; dim];
            let mut ux = vec![0u64; dim];
            loop {
                for (y, uy, uty) in &basis {
                    check(&x, &ux, y, uy, uty, &mut report);
                }
                // bumping coordinate i, with or without wrapping, adds U e_i
                let Some(top) = next(&mut x) else { break };
                for (_, ue, _) in &basis[..=top] {
                    for (a, b) in ux.iter_mut().zip(ue) {
                        *a = (*a + b) % n;
                    }
                }
            }
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
            for _ in 0..budget.samples {
                let x = kr.random_element(&mut rng);
                let ux = apply_block(u, k, &x);
                let (y, uy, uty) = with_images(kr.random_element(&mut rng));
                check(&x, &ux, &y, &uy, &uty, &mut report);
            }
        }
    }
    report
}

/// Isotropy of the graph of the quaternion matrix on `K^4`.
pub fn graph_isotropy_check(
    q: &QuaternionMatrix,
    k: &SymplecticModule,
    budget: &CheckBudget,
) -> IsotropyReport {
    graph_isotropy(&q.rows(), k, budget)
}

#[derive(Clone, Debug, Serialize)]
pub struct OrderReport {
    pub kernel_order: u128,
    /// `#V`, computed as the size of the span of `(e_j, I e_j)`.
    pub graph_order: u128,
    pub graph_order_squared: u128,
    /// `(#K)^8`, standing in for the degree of the eightfold polarization.
    pub degree_stand_in: u128,
    pub holds: bool,
}

/// `#V = (#K)^4` for the graph `V` of `I` on `K^4`, and
/// `#V^2 = (#K)^8`.
pub fn order_condition_check(q: &QuaternionMatrix, k: &SymplecticModule) -> Result<OrderReport> {
    let u = q.rows();
    let d = k.rank();
    let dim = 4 * d;
    let gens: Vec<Vec<u64>> = (0..dim)
        .map(|j| {
            let e: Vec<u64> = (0..dim).map(|i| (i == j) as u64).collect();
            let mut v = e.clone();
            v.extend(apply_block(&u, k, &e));
            v
        })
        .collect();
    let span = Submodule::span(k.modulus(), 2 * dim, &gens);
    let kernel_order = k
        .cardinality()
        .ok_or_else(|| Error::cap("kernel order", "u128"))?;
    let graph_order = span.cardinality();
    let k4 = kernel_order
        .checked_pow(4)
        .ok_or_else(|| Error::cap("(#K)^4", "u128"))?;
    let graph_order_squared = graph_order
        .checked_mul(graph_order)
        .ok_or_else(|| Error::cap("#V^2", "u128"))?;
    let degree_stand_in = k4
        .checked_mul(k4)
        .ok_or_else(|| Error::cap("(#K)^8", "u128"))?;
    Ok(OrderReport {
        kernel_order,
        graph_order,
        graph_order_squared,
        degree_stand_in,
        holds: graph_order == k4 && graph_order_squared == degree_stand_in,
    })
}
