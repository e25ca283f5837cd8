//! Frobenius acting on torsion as matrices over `Z/n`, the modules of
//! Frobenius-equivariant maps between torsion levels, and the unit root
//! governing the ordinary `p`-part.

use serde::Serialize;

use crate::arith::{factor, gcd, mod_inv};
use crate::curve::{ordinary_or_err, Curve, TorsionBasis};
use crate::error::{Error, Result};
use crate::linalg::{Mat2, Submodule, ZnMatrix};

/// How a Frobenius matrix was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Discrete logarithms of Frobenius images of explicit basis points.
    Points,
    /// The characteristic polynomial is separable modulo `ell`, so the
    /// torsion is a cyclic `Z[F]`-module and Frobenius acts by the
    /// companion matrix in a basis `(v, Fv)`.
    Cyclic,
}

/// Frobenius on `E[n]` in a chosen basis. For composite `n` each
/// prime-power part carries its own method; the matrix is their CRT
/// combination.
#[derive(Clone, Debug, Serialize)]
pub struct FrobeniusMatrix {
    pub level: u64,
    pub matrix: Mat2,
    pub parts: Vec<(u64, Method)>,
    #[serde(skip)]
    pub basis: Option<TorsionBasis>,
}

impl FrobeniusMatrix {
    pub fn method(&self) -> Method {
        if self.parts.iter().all(|&(_, m)| m == Method::Points) {
            Method::Points
        } else {
            Method::Cyclic
        }
    }

    /// `F^2 - tF + p = 0` over `Z/n`.
    pub fn satisfies_char_poly(&self, trace: i64, p: u64) -> bool {
        let f = &self.matrix;
        let n = self.level;
        f.mul(f)
            .sub(&f.scale(trace))
            .add(&Mat2::scalar(n, (p % n) as i64))
            .is_zero()
    }
}

/// Frobenius matrix in an explicit torsion basis.
pub fn frobenius_matrix_from_basis(basis: &TorsionBasis) -> Result<FrobeniusMatrix> {
    let c = basis.curve().clone();
    let e = c.curve();
    let matrix = basis.matrix_of(basis, |pt| c.frobenius(pt))?;
    let n = basis.level();
    let out = FrobeniusMatrix {
        level: n,
        matrix,
        parts: factor(n)
            .into_iter()
            .map(|(l, k)| (l.pow(k), Method::Points))
            .collect(),
        basis: Some(basis.clone()),
    };
    if !out.satisfies_char_poly(e.trace(), e.p()) {
        return Err(Error::Internal(format!(
            "Frobenius matrix at level {n} violates its characteristic polynomial"
        )));
    }
    Ok(out)
}

/// `ell` does not divide `t^2 - 4p`.
pub fn separable_mod(trace: i64, p: u64, ell: u64) -> bool {
    let disc = trace as i128 * trace as i128 - 4 * p as i128;
    disc.rem_euclid(ell as i128) != 0
}

/// Frobenius on `E[n]`. Prime-power parts whose torsion field fits in
/// `cap` are computed from points; larger parts fall back to the companion
/// matrix when the characteristic polynomial is separable modulo `ell`.
pub fn frobenius_matrix(e: &Curve, n: u64, cap: usize) -> Result<FrobeniusMatrix> {
    if n.is_multiple_of(e.p()) {
        return Err(Error::LevelNotCoprime { n, p: e.p() });
    }
    match e.torsion_basis(n, cap) {
        Ok(b) => return frobenius_matrix_from_basis(&b),
        Err(Error::CapExceeded { .. }) if n > 1 => {}
        Err(err) => return Err(err),
    }
    let mut parts = Vec::new();
    let mut pieces = Vec::new();
    for (ell, k) in factor(n) {
        let q = ell.pow(k);
        match e.torsion_basis(q, cap) {
            Ok(b) => {
                pieces.push(frobenius_matrix_from_basis(&b)?.matrix);
                parts.push((q, Method::Points));
            }
            Err(Error::CapExceeded { .. }) if separable_mod(e.trace(), e.p(), ell) => {
                pieces.push(Mat2::companion(q, e.trace(), e.p() as i64));
                parts.push((q, Method::Cyclic));
            }
            Err(err) => return Err(err),
        }
    }
    Ok(FrobeniusMatrix {
        level: n,
        matrix: crt_mat(&pieces),
        parts,
        basis: None,
    })
}

/// Combines matrices over pairwise coprime moduli.
pub fn crt_mat(pieces: &[Mat2]) -> Mat2 {
    let n: u64 = pieces.iter().map(|m| m.modulus()).product();
    let mut out = Mat2::zero(n);
    for m in pieces {
        let q = m.modulus();
        let rest = n / q;
        let idem = rest as i128 * mod_inv(rest as i64, q).expect("coprime moduli") as i128;
        let idem = idem.rem_euclid(n as i128) as i64;
        let lifted = Mat2::new(n, m.entries().map(|x| x as i64));
        out = out.add(&lifted.scale(idem));
    }
    out
}

/// The `Z/n`-module `{M : M F = F' M}` of Frobenius-equivariant maps
/// `E[n] -> E'[n]`, with matrices flattened row-major as vectors of
/// `(Z/n)^4`.
#[derive(Clone, Debug)]
pub struct IntertwinerModule {
    pub level: u64,
    pub source: Mat2,
    pub target: Mat2,
    pub module: Submodule,
}

fn flatten(m: &Mat2) -> Vec<u64> {
    m.entries().to_vec()
}

fn unflatten(n: u64, v: &[u64]) -> Mat2 {
    Mat2::new(n, [v[0] as i64, v[1] as i64, v[2] as i64, v[3] as i64])
}

impl IntertwinerModule {
    /// Solves `M F = F' M` as four linear equations over `Z/n`.
    pub fn solve(f: &Mat2, f2: &Mat2) -> Self {
        let n = f.modulus();
        assert_eq!(n, f2.modulus(), "matrices over different moduli");
        // coefficient of m_rc in equation (i, j): [r = i] F_cj - F'_ir [c = j]
        let mut rows = Vec::with_capacity(16);
        for i in 0..2 {
            for j in 0..2 {
                for r in 0..2 {
                    for c in 0..2 {
                        let mut v = 0i64;
                        if r == i {
                            v += f.get(c, j) as i64;
                        }
                        if c == j {
                            v -= f2.get(i, r) as i64;
                        }
                        rows.push(v);
                    }
                }
            }
        }
        let a = ZnMatrix::new(n, 4, 4, &rows);
        IntertwinerModule {
            level: n,
            source: *f,
            target: *f2,
            module: Submodule::kernel(&a),
        }
    }

    pub fn cardinality(&self) -> u128 {
        self.module.cardinality()
    }

    pub fn generators(&self) -> Vec<Mat2> {
        self.module
            .generators()
            .iter()
            .map(|g| unflatten(self.level, g))
            .collect()
    }

    pub fn contains(&self, m: &Mat2) -> bool {
        m.modulus() == self.level && self.module.contains(&flatten(m))
    }

    pub fn intertwines(&self, m: &Mat2) -> bool {
        m.mul(&self.source) == self.target.mul(m)
    }

    /// Every element; only for small modules.
    pub fn elements(&self) -> Vec<Mat2> {
        self.module
            .elements()
            .iter()
            .map(|v| unflatten(self.level, v))
            .collect()
    }

    /// The image under reduction to a divisor `d` of the level.
    pub fn reduce(&self, d: u64) -> Submodule {
        let gens: Vec<Vec<u64>> = self
            .module
            .generators()
            .iter()
            .map(|g| g.iter().map(|x| x % d).collect())
            .collect();
        Submodule::span(d, 4, &gens)
    }

    /// An invertible element, if one exists. Invertibility only depends on
    /// the reduction modulo each prime `ell | n`, where the image is a small
    /// `F_ell`-space that is searched exhaustively.
    pub fn invertible_element(&self) -> Option<Mat2> {
        let n = self.level;
        if self.contains(&Mat2::identity(n)) {
            return Some(Mat2::identity(n));
        }
        let gens = self.module.generators();
        let mut pieces = Vec::new();
        for (ell, k) in factor(n) {
            let q = ell.pow(k);
            let reduced: Vec<Vec<u64>> = gens
                .iter()
                .map(|g| g.iter().map(|x| x % ell).collect())
                .collect();
            let span = Submodule::span(ell, 4, &reduced);
            let basis = span.generators();
            // coefficients in the mod-ell basis, lifted along the span
            // decomposition back to the generators mod q
            let coeffs = lift_coefficients(&gens, &basis, ell)?;
            let total = ell.checked_pow(basis.len() as u32)?;
            let mut found = None;
            for idx in 1..total {
                let mut t = idx;
                let mut combo = vec![0u64; 4];
                for b in &basis {
                    let c = t % ell;
                    t /= ell;
                    for (s, &x) in combo.iter_mut().zip(b) {
                        *s = (*s + c * x) % ell;
                    }
                }
                let m = unflatten(ell, &combo);
                if m.det() != 0 {
                    found = Some(idx);
                    break;
                }
            }
            let idx = found?;
            // same combination of the lifted generators, modulo q
            let mut t = idx;
            let mut lift = vec![0u64; 4];
            for row in &coeffs {
                let c = t % ell;
                t /= ell;
                for (gi, &w) in row.iter().enumerate() {
                    for (s, &x) in lift.iter_mut().zip(&gens[gi]) {
                        *s = ((*s as u128 + c as u128 * w as u128 * (x % q) as u128) % q as u128)
                            as u64;
                    }
                }
            }
            let m = unflatten(q, &lift);
            debug_assert!(m.is_invertible());
            pieces.push(m);
        }
        let w = crt_mat(&pieces);
        debug_assert!(self.contains(&w) && w.is_invertible());
        Some(w)
    }
}

/// Expresses every vector of `basis` (over `F_ell`) as an integer
/// combination of `gens` reduced mod `ell`, by brute force over small
/// coefficient vectors when needed.
fn lift_coefficients(gens: &[Vec<u64>], basis: &[Vec<u64>], ell: u64) -> Option<Vec<Vec<u64>>> {
    // Solve G c = b over F_ell with Gaussian elimination on the 4 x r system.
    let r = gens.len();
    let mut out = Vec::new();
    for b in basis {
        let mut rows: Vec<Vec<u64>> = (0..4)
            .map(|i| {
                let mut row: Vec<u64> = gens.iter().map(|g| g[i] % ell).collect();
                row.push(b[i] % ell);
                row
            })
            .collect();
        let mut pivots = Vec::new();
        let mut rank = 0;
        for col in 0..r {
            let Some(pr) = (rank..4).find(|&i| rows[i][col] != 0) else {
                continue;
            };
            rows.swap(rank, pr);
            let inv = mod_inv(rows[rank][col] as i64, ell)?;
            for x in rows[rank].iter_mut() {
                *x = *x * inv % ell;
            }
            for i in 0..4 {
                if i != rank && rows[i][col] != 0 {
                    let f = rows[i][col];
                    for j in 0..=r {
                        rows[i][j] = (rows[i][j] + ell * ell - f * rows[rank][j] % ell) % ell;
                    }
                }
            }
            pivots.push(col);
            rank += 1;
        }
        if rows[rank..].iter().any(|row| row[r] != 0) {
            return None;
        }
        let mut c = vec![0u64; r];
        for (i, &col) in pivots.iter().enumerate() {
            c[col] = rows[i][r];
        }
        out.push(c);
    }
    Some(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct GaloisIsomorphism {
    pub level: u64,
    pub isomorphic: bool,
    pub witness: Option<Mat2>,
    pub frobenius: [Mat2; 2],
    pub method: Method,
}

/// Whether `E[n]` and `E'[n]` are isomorphic Galois modules, with an
/// invertible intertwiner as witness.
pub fn galois_isomorphic(e: &Curve, e2: &Curve, n: u64, cap: usize) -> Result<GaloisIsomorphism> {
    let f = frobenius_matrix(e, n, cap)?;
    let f2 = frobenius_matrix(e2, n, cap)?;
    let method = if f.method() == Method::Points && f2.method() == Method::Points {
        Method::Points
    } else {
        Method::Cyclic
    };
    Ok(galois_isomorphic_matrices(&f.matrix, &f2.matrix, method))
}

pub fn galois_isomorphic_matrices(f: &Mat2, f2: &Mat2, method: Method) -> GaloisIsomorphism {
    let module = IntertwinerModule::solve(f, f2);
    let witness = module.invertible_element();
    GaloisIsomorphism {
        level: f.modulus(),
        isomorphic: witness.is_some(),
        witness,
        frobenius: [*f, *f2],
        method,
    }
}

/// The intertwiner module at level `n` for two ordinary curves.
pub fn intertwiners(e: &Curve, e2: &Curve, n: u64, cap: usize) -> Result<IntertwinerModule> {
    ordinary_or_err(e)?;
    ordinary_or_err(e2)?;
    let f = frobenius_matrix(e, n, cap)?;
    let f2 = frobenius_matrix(e2, n, cap)?;
    Ok(IntertwinerModule::solve(&f.matrix, &f2.matrix))
}

/// Images of higher levels inside level `ell^i`.
#[derive(Clone, Debug, Serialize)]
pub struct LevelChain {
    pub level: u64,
    /// `#image` of the level-`ell^(i+j)` module reduced to level `ell^i`,
    /// for `j = 0, 1, ...`.
    pub image_sizes: Vec<u128>,
    pub stabilized_size: u128,
    /// Smallest `j` from which the images no longer change.
    pub offset: usize,
    #[serde(skip)]
    pub stabilized: Submodule,
}

#[derive(Clone, Debug, Serialize)]
pub struct TowerReport {
    pub ell: u64,
    pub depth: u32,
    pub frobenius: Vec<[Mat2; 2]>,
    pub module_sizes: Vec<u128>,
    pub chains: Vec<LevelChain>,
    #[serde(skip)]
    pub modules: Vec<IntertwinerModule>,
}

/// Frobenius matrices on `E[ell^i]` for `i = 1..=depth`, in bases obtained
/// from one top-level basis by multiplication, so that reduction between
/// levels is entrywise.
pub fn frobenius_tower(
    e: &Curve,
    ell: u64,
    depth: u32,
    cap: usize,
) -> Result<Vec<FrobeniusMatrix>> {
    let top = frobenius_matrix(e, ell.pow(depth), cap)?;
    let mut out = Vec::new();
    for i in 1..=depth {
        let q = ell.pow(i);
        out.push(FrobeniusMatrix {
            level: q,
            matrix: top.matrix.reduce(q),
            parts: vec![(q, top.method())],
            basis: match &top.basis {
                Some(b) => Some(b.reduce_to(q)?),
                None => None,
            },
        });
    }
    Ok(out)
}

pub fn level_tower_stabilization(
    e: &Curve,
    e2: &Curve,
    ell: u64,
    depth: u32,
    cap: usize,
) -> Result<TowerReport> {
    if ell == e.p() {
        return Err(Error::LevelNotCoprime { n: ell, p: e.p() });
    }
    if depth == 0 {
        return Err(Error::Precondition("tower depth must be positive".into()));
    }
    ordinary_or_err(e)?;
    ordinary_or_err(e2)?;
    let t1 = frobenius_tower(e, ell, depth, cap)?;
    let t2 = frobenius_tower(e2, ell, depth, cap)?;
    let m1: Vec<Mat2> = t1.iter().map(|f| f.matrix).collect();
    let m2: Vec<Mat2> = t2.iter().map(|f| f.matrix).collect();
    Ok(tower_from_matrices(ell, &m1, &m2))
}

/// The tower report for Frobenius matrices at levels `ell, ..., ell^depth`
/// whose bases are compatible under reduction.
pub fn tower_from_matrices(ell: u64, t1: &[Mat2], t2: &[Mat2]) -> TowerReport {
    assert_eq!(t1.len(), t2.len(), "towers of different depth");
    let depth = t1.len() as u32;
    let modules: Vec<IntertwinerModule> = t1
        .iter()
        .zip(t2)
        .map(|(a, b)| IntertwinerModule::solve(a, b))
        .collect();
    let mut chains = Vec::new();
    for i in 1..=depth {
        let q = ell.pow(i);
        let images: Vec<Submodule> = modules[(i - 1) as usize..]
            .iter()
            .map(|m| m.reduce(q))
            .collect();
        let last = images.last().expect("nonempty").clone();
        let offset = images
            .iter()
            .rposition(|s| s.cardinality() != last.cardinality() || !s.is_submodule_of(&last))
            .map_or(0, |k| k + 1);
        chains.push(LevelChain {
            level: q,
            image_sizes: images.iter().map(|s| s.cardinality()).collect(),
            stabilized_size: last.cardinality(),
            offset,
            stabilized: last,
        });
    }
    TowerReport {
        ell,
        depth,
        frobenius: t1.iter().zip(t2).map(|(a, b)| [*a, *b]).collect(),
        module_sizes: modules.iter().map(|m| m.cardinality()).collect(),
        chains,
        modules,
    }
}

/// The root `u` of `T^2 - aT + p` modulo `p^nu` with `u ≡ a (mod p)`,
/// lifted by Newton iteration.
pub fn unit_root(a: i64, p: u64, nu: u32) -> Result<u64> {
    if a.rem_euclid(p as i64) == 0 {
        return Err(Error::Supersingular { trace: a });
    }
    if nu == 0 {
        return Err(Error::Precondition("precision must be positive".into()));
    }
    let modulus = p
        .checked_pow(nu)
        .filter(|&m| m < 1 << 62)
        .ok_or_else(|| Error::cap(format!("precision p^{nu}"), "2^62"))?;
    let m = modulus as i128;
    let f = |u: i128| (u * u - a as i128 * u + p as i128).rem_euclid(m);
    let mut u = (a as i128).rem_euclid(p as i128);
    while f(u) != 0 {
        let d = (2 * u - a as i128).rem_euclid(m);
        let dinv = mod_inv((d % m) as i64, modulus).expect("derivative is a unit") as i128;
        u = (u - f(u) * dinv % m).rem_euclid(m);
    }
    Ok(u as u64)
}

#[derive(Clone, Debug, Serialize)]
pub struct PPartReport {
    pub isomorphic: bool,
    pub precision: u32,
    pub unit_roots: [u64; 2],
}

/// Compares the ordinary `p`-parts through their unit roots mod `p^nu`.
pub fn p_part_isomorphic(e: &Curve, e2: &Curve, nu: u32) -> Result<PPartReport> {
    if e.p() != e2.p() {
        return Err(Error::Precondition("curves over different fields".into()));
    }
    ordinary_or_err(e)?;
    ordinary_or_err(e2)?;
    let u1 = unit_root(e.trace(), e.p(), nu)?;
    let u2 = unit_root(e2.trace(), e.p(), nu)?;
    Ok(PPartReport {
        isomorphic: e.trace() == e2.trace(),
        precision: nu,
        unit_roots: [u1, u2],
    })
}

/// `u^2 - au + p ≡ 0 (mod p^nu)`.
pub fn is_unit_root(u: u64, a: i64, p: u64, nu: u32) -> bool {
    let m = p.pow(nu) as i128;
    let u = u as i128;
    (u * u - a as i128 * u + p as i128).rem_euclid(m) == 0 && gcd(u as u64, p) == 1
}
