use std::sync::{Arc, Mutex};

use serde::Serialize;

use super::kernels::cyclic_kernels;
use super::velu::Isogeny;
use crate::arith::{factor, fundamental_discriminant, gcd, isqrt, lcm, mod_inv};
use crate::curve::{
    ordinary_or_err, torsion_bases_over_common_field, Curve, CurveOver, Point, TorsionBasis,
};
use crate::error::{Error, Result};
use crate::galois::{frobenius_matrix_from_basis, tower_from_matrices, TowerReport};
use crate::linalg::{Mat2, Submodule, ZnMatrix};

/// Anything that maps points of one curve to another over every extension.
pub trait TorsionMap {
    fn source(&self) -> &Curve;
    fn target(&self) -> &Curve;
    /// Image of a point of `source(F_{p^m})`, on `target` over the same
    /// field.
    fn map_point(&self, over: &CurveOver, pt: &Point) -> Result<Point>;
    fn map_degree(&self) -> Result<u64>;
}

impl TorsionMap for Isogeny {
    fn source(&self) -> &Curve {
        self.domain()
    }
    fn target(&self) -> &Curve {
        self.codomain()
    }
    fn map_point(&self, over: &CurveOver, pt: &Point) -> Result<Point> {
        Ok(self.eval(over, pt))
    }
    fn map_degree(&self) -> Result<u64> {
        Ok(self.degree())
    }
}

/// `pi^k ∘ phi` for a Vélu isogeny `phi` and the Frobenius `pi` of its
/// codomain.
#[derive(Clone, Debug, Serialize)]
pub struct Morphism {
    pub isogeny: Isogeny,
    pub frobenius: u32,
}

impl Morphism {
    pub fn degree(&self) -> u64 {
        self.isogeny.degree() * self.isogeny.domain().p().pow(self.frobenius)
    }

    fn is_identity(&self) -> bool {
        self.frobenius == 0
            && self.isogeny.degree() == 1
            && self.isogeny.scaling() == 1
            && self.isogeny.domain() == self.isogeny.codomain()
    }
}

impl TorsionMap for Morphism {
    fn source(&self) -> &Curve {
        self.isogeny.domain()
    }
    fn target(&self) -> &Curve {
        self.isogeny.codomain()
    }
    fn map_point(&self, over: &CurveOver, pt: &Point) -> Result<Point> {
        let img = self.isogeny.eval(over, pt);
        let cod = self.isogeny.codomain_over(over)?;
        Ok(cod.frobenius_pow(&img, self.frobenius as usize))
    }
    fn map_degree(&self) -> Result<u64> {
        Ok(self.degree())
    }
}

/// The matrix of `u: E[n] -> E'[n]` in the given bases, which must live
/// over one field.
pub fn action_in_bases<T: TorsionMap + ?Sized>(
    u: &T,
    src: &TorsionBasis,
    dst: &TorsionBasis,
) -> Result<Mat2> {
    let n = src.level();
    if dst.level() != n || src.degree() != dst.degree() {
        return Err(Error::Precondition(
            "bases at different levels or fields".into(),
        ));
    }
    let c = src.curve();
    let a = dst.dlog(&u.map_point(c, src.p())?)?;
    let b = dst.dlog(&u.map_point(c, src.q())?)?;
    Ok(Mat2::from_columns(n, a, b))
}

/// The matrix of `u` on `n`-torsion, in bases over the smallest field
/// containing both torsion groups.
pub fn action_matrix<T: TorsionMap + ?Sized>(
    u: &T,
    n: u64,
    cap: usize,
) -> Result<(Mat2, TorsionBasis, TorsionBasis)> {
    let (src, dst) = torsion_bases_over_common_field(u.source(), u.target(), n, cap)?;
    let m = action_in_bases(u, &src, &dst)?;
    Ok((m, src, dst))
}

#[derive(Clone, Debug, Serialize)]
pub struct CoprimeReport {
    pub n: u64,
    pub degree: u64,
    pub matrix: Mat2,
    pub determinant: u64,
    pub invertible: bool,
    pub coprime: bool,
    /// `invertible == coprime`.
    pub holds: bool,
}

/// The induced map on `n`-torsion is invertible exactly when the degree is
/// prime to `n`; both sides are computed and reported.
pub fn coprime_iso_check<T: TorsionMap + ?Sized>(
    u: &T,
    n: u64,
    cap: usize,
) -> Result<CoprimeReport> {
    let degree = u.map_degree()?;
    let (matrix, _, _) = action_matrix(u, n, cap)?;
    let invertible = matrix.is_invertible();
    let coprime = gcd(degree, n) == 1;
    Ok(CoprimeReport {
        n,
        degree,
        matrix,
        determinant: matrix.det(),
        invertible,
        coprime,
        holds: invertible == coprime,
    })
}

/// Torsion data at one measuring level: bases of `E[n]`, `E'[n]` over a
/// common field and the action of every lattice generator.
#[derive(Clone, Debug)]
pub struct LevelMeasurement {
    pub n: u64,
    pub src: TorsionBasis,
    pub dst: TorsionBasis,
    pub actions: Vec<Mat2>,
    /// `c` with `e'(P', Q') = e(P, Q)^c`, so that `deg u ≡ c det(u_n)`.
    pub scale: u64,
}

impl LevelMeasurement {
    pub fn normalized_det(&self, a: &Mat2) -> u64 {
        ((a.det() as u128 * self.scale as u128) % self.n as u128) as u64
    }
}

/// The exponent `c` with `e_{E'}(P', Q') = e_E(P, Q)^c` for bases over one
/// field; `det(u_n) c ≡ deg u (mod n)` for every `u: E -> E'`.
pub fn pairing_scale(src: &TorsionBasis, dst: &TorsionBasis) -> Result<u64> {
    let n = src.level();
    let f = src.curve().field();
    let w = src.weil_value()?;
    let w2 = dst.weil_value()?;
    let mut acc = f.one();
    for c in 0..n {
        if acc == w2 {
            return Ok(c);
        }
        acc = f.mul(&acc, &w);
    }
    Err(Error::Internal(
        "Weil pairings of the two bases are not comparable".into(),
    ))
}

#[derive(Clone, Debug, Serialize)]
pub struct SaturationCheck {
    pub k: u64,
    /// Basis combinations (mod `k`) acting as zero on `E[k]`, hence
    /// divisible by `k` in `Hom(E, E')`.
    pub divisible: Vec<Vec<u64>>,
}

/// A sublattice of `Hom(E, E')` generated by isogenies found by kernel
/// search and their Frobenius composites, with the degree form.
///
/// Gram entries follow the convention `<u, v> = deg(u + v) - deg u - deg v`,
/// so the diagonal holds `2 deg`.
#[derive(Debug)]
pub struct HomLattice {
    domain: Curve,
    codomain: Curve,
    cap: usize,
    generators: Vec<Morphism>,
    generator_gram: Vec<Vec<i64>>,
    basis: Vec<Vec<i64>>,
    gram: Vec<Vec<i64>>,
    searched_degrees: Vec<u64>,
    skipped_degrees: Vec<u64>,
    saturation: Vec<SaturationCheck>,
    levels: Mutex<LevelState>,
}

#[derive(Debug, Default)]
struct LevelState {
    done: Vec<LevelMeasurement>,
}

const MEASURE_PRIMES: [u64; 18] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61,
];
const MEASURE_LIMIT: u64 = 64;

impl Serialize for HomLattice {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        #[derive(Serialize)]
        struct Gen<'a> {
            degree: u64,
            frobenius: u32,
            kernel_polynomial: &'a [u32],
            scaling: u64,
        }
        let gens: Vec<Gen> = self
            .generators
            .iter()
            .map(|g| Gen {
                degree: g.degree(),
                frobenius: g.frobenius,
                kernel_polynomial: g.isogeny.kernel_polynomial(),
                scaling: g.isogeny.scaling(),
            })
            .collect();
        let mut st = s.serialize_struct("HomLattice", 10)?;
        st.serialize_field("domain", &self.domain)?;
        st.serialize_field("codomain", &self.codomain)?;
        st.serialize_field("rank", &self.rank())?;
        st.serialize_field("generators", &gens)?;
        st.serialize_field("basis", &self.basis)?;
        st.serialize_field("gram", &self.gram)?;
        st.serialize_field("determinant", &self.determinant())?;
        st.serialize_field("index_bound", &self.index_bound())?;
        st.serialize_field("saturation", &self.saturation)?;
        st.serialize_field("skipped_degrees", &self.skipped_degrees)?;
        st.end()
    }
}

fn det_i128(m: &[Vec<i128>]) -> i128 {
    // Bareiss elimination, exact over the integers
    let n = m.len();
    if n == 0 {
        return 1;
    }
    let mut a: Vec<Vec<i128>> = m.to_vec();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if a[k][k] == 0 {
            let Some(r) = (k + 1..n).find(|&r| a[r][k] != 0) else {
                return 0;
            };
            a.swap(k, r);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    sign * a[n - 1][n - 1]
}

fn sub_gram(g: &[Vec<i64>], idx: &[usize]) -> Vec<Vec<i128>> {
    idx.iter()
        .map(|&i| idx.iter().map(|&j| g[i][j] as i128).collect())
        .collect()
}

/// Combines residues modulo pairwise coprime moduli into `[0, M)`.
fn crt(residues: &[(u64, u64)]) -> (u128, u128) {
    let mut x = 0u128;
    let mut m = 1u128;
    for &(n, r) in residues {
        // x + m t ≡ r (mod n)
        let inv = mod_inv((m % n as u128) as i64, n).expect("coprime moduli") as u128;
        let t = ((r as u128 + n as u128 - x % n as u128) % n as u128) * inv % n as u128;
        x += m * t;
        m *= n as u128;
    }
    (x, m)
}

fn quad(g: &[Vec<i64>], c: &[i64]) -> i128 {
    let mut s = 0i128;
    for (i, &ci) in c.iter().enumerate() {
        for (j, &cj) in c.iter().enumerate() {
            s += ci as i128 * cj as i128 * g[i][j] as i128;
        }
    }
    s
}

fn bilinear(g: &[Vec<i64>], a: &[i64], b: &[i64]) -> i128 {
    let mut s = 0i128;
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            s += ai as i128 * bj as i128 * g[i][j] as i128;
        }
    }
    s
}

/// The lattice spanned by all cyclic Frobenius-stable kernels of order at
/// most `degree_bound` whose quotient is isomorphic to `E'`, each composed
/// with every isomorphism onto `E'`, together with their composites with
/// the Frobenius of `E'`.
pub fn hom_lattice(
    e: &Curve,
    e2: &Curve,
    degree_bound: u64,
    cap: usize,
) -> Result<Arc<HomLattice>> {
    if e.p() != e2.p() {
        return Err(Error::Precondition("curves over different fields".into()));
    }
    ordinary_or_err(e)?;
    ordinary_or_err(e2)?;
    let p = e.p();
    let mut generators = Vec::new();
    let mut searched = Vec::new();
    let mut skipped = Vec::new();
    if e.trace() == e2.trace() {
        for d in 1..=degree_bound {
            if d % p == 0 {
                continue;
            }
            let kernels = match cyclic_kernels(e, d, cap) {
                Ok(k) => k,
                Err(Error::CapExceeded { .. }) => {
                    skipped.push(d);
                    continue;
                }
                Err(err) => return Err(err),
            };
            searched.push(d);
            for k in kernels {
                let phi = super::velu(e, &k)?;
                for psi in phi.onto(e2) {
                    generators.push(Morphism {
                        isogeny: psi.clone(),
                        frobenius: 0,
                    });
                    generators.push(Morphism {
                        isogeny: psi,
                        frobenius: 1,
                    });
                }
            }
        }
    }
    let mut lat = HomLattice {
        domain: *e,
        codomain: *e2,
        cap,
        generators,
        generator_gram: Vec::new(),
        basis: Vec::new(),
        gram: Vec::new(),
        searched_degrees: searched,
        skipped_degrees: skipped,
        saturation: Vec::new(),
        levels: Mutex::new(LevelState::default()),
    };
    if lat.generators.is_empty() {
        return Ok(Arc::new(lat));
    }
    lat.compute_generator_gram()?;
    lat.extract_basis()?;
    lat.check_saturation()?;
    Ok(Arc::new(lat))
}

impl HomLattice {
    pub fn domain(&self) -> &Curve {
        &self.domain
    }

    pub fn codomain(&self) -> &Curve {
        &self.codomain
    }

    pub fn generators(&self) -> &[Morphism] {
        &self.generators
    }

    pub fn generator_gram(&self) -> &[Vec<i64>] {
        &self.generator_gram
    }

    /// Basis vectors as integer combinations of the generators.
    pub fn basis(&self) -> &[Vec<i64>] {
        &self.basis
    }

    pub fn gram(&self) -> &[Vec<i64>] {
        &self.gram
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn searched_degrees(&self) -> &[u64] {
        &self.searched_degrees
    }

    pub fn skipped_degrees(&self) -> &[u64] {
        &self.skipped_degrees
    }

    pub fn saturation(&self) -> &[SaturationCheck] {
        &self.saturation
    }

    pub fn determinant(&self) -> i128 {
        det_i128(
            &self
                .gram
                .iter()
                .map(|r| r.iter().map(|&x| x as i128).collect())
                .collect::<Vec<_>>(),
        )
    }

    /// `sqrt(det / |d_0|)` for the fundamental discriminant `d_0` of
    /// `t^2 - 4p`: the index of this lattice over a lattice of
    /// discriminant `d_0`, when the quotient is a square.
    pub fn index_bound(&self) -> Option<u64> {
        if self.rank() != 2 {
            return None;
        }
        let t = self.domain.trace();
        let (d0, _) = fundamental_discriminant(t * t - 4 * self.domain.p() as i64);
        let det = self.determinant();
        let d0 = d0.unsigned_abs() as i128;
        if det % d0 != 0 {
            return None;
        }
        let q = (det / d0) as u64;
        let r = isqrt(q);
        (r * r == q).then_some(r)
    }

    fn compute_generator_gram(&mut self) -> Result<()> {
        let k = self.generators.len();
        let degs: Vec<u64> = self.generators.iter().map(|g| g.degree()).collect();
        let max = *degs.iter().max().unwrap() as u128;
        // |<u, v>| <= 2 sqrt(deg u deg v)
        self.ensure_levels(4 * max + 2)?;
        let state = self.levels.lock().unwrap();
        for lv in &state.done {
            for (i, a) in lv.actions.iter().enumerate() {
                if lv.normalized_det(a) != degs[i] % lv.n {
                    return Err(Error::Internal(format!(
                        "determinant of a generator on E[{}] disagrees with its degree",
                        lv.n
                    )));
                }
            }
        }
        let mut g = vec![vec![0i64; k]; k];
        for i in 0..k {
            g[i][i] = 2 * degs[i] as i64;
            for j in 0..i {
                let residues: Vec<(u64, u64)> = state
                    .done
                    .iter()
                    .map(|lv| {
                        let (a, b) = (&lv.actions[i], &lv.actions[j]);
                        let n = lv.n;
                        let d = |m: &Mat2| lv.normalized_det(m);
                        (n, (d(&a.add(b)) + 2 * n - d(a) - d(b)) % n)
                    })
                    .collect();
                let (x, m) = crt(&residues);
                let v = if x > m / 2 {
                    x as i128 - m as i128
                } else {
                    x as i128
                };
                g[i][j] = v as i64;
                g[j][i] = v as i64;
            }
        }
        drop(state);
        self.generator_gram = g;
        Ok(())
    }

    fn extract_basis(&mut self) -> Result<()> {
        let g = &self.generator_gram;
        let k = g.len();
        let mut chosen: Vec<usize> = Vec::new();
        for i in 0..k {
            let mut trial = chosen.clone();
            trial.push(i);
            if det_i128(&sub_gram(g, &trial)) != 0 {
                chosen = trial;
            }
        }
        let r = chosen.len();
        let gbb = sub_gram(g, &chosen);
        let d = det_i128(&gbb);
        // rows X_i with D g_i = sum_j X_ij b_j
        let mut x: Vec<Vec<i128>> = Vec::with_capacity(k);
        for i in 0..k {
            let mut row = Vec::with_capacity(r);
            for j in 0..r {
                let mut m = gbb.clone();
                for (l, &bl) in chosen.iter().enumerate() {
                    m[l][j] = g[bl][i] as i128;
                }
                row.push(det_i128(&m));
            }
            // the norm of D g_i - sum X_ij b_j must vanish
            let mut norm = d * d * g[i][i] as i128;
            for j in 0..r {
                norm -= 2 * d * row[j] * g[chosen[j]][i] as i128;
                for l in 0..r {
                    norm += row[j] * row[l] * g[chosen[j]][chosen[l]] as i128;
                }
            }
            if norm != 0 {
                return Err(Error::Internal(
                    "generator outside the span of the chosen basis".into(),
                ));
            }
            x.push(row);
        }
        // row Hermite reduction of X, tracking the unimodular transform
        let mut u: Vec<Vec<i128>> = (0..k)
            .map(|i| (0..k).map(|j| (i == j) as i128).collect())
            .collect();
        for col in 0..r {
            let Some(piv) = (col..k).find(|&i| x[i][col] != 0) else {
                return Err(Error::Internal("rank drop in Hermite reduction".into()));
            };
            x.swap(col, piv);
            u.swap(col, piv);
            for i in col + 1..k {
                if x[i][col] == 0 {
                    continue;
                }
                let (a, b) = (x[col][col], x[i][col]);
                let (gg, s, t) = crate::arith::ext_gcd(a, b);
                let (a1, b1) = (a / gg, b / gg);
                for (m, _) in [(&mut x, 0), (&mut u, 1)] {
                    let (rc, ri) = (m[col].clone(), m[i].clone());
                    m[col] = rc.iter().zip(&ri).map(|(p, q)| s * p + t * q).collect();
                    m[i] = rc.iter().zip(&ri).map(|(p, q)| -b1 * p + a1 * q).collect();
                }
            }
        }
        let mut basis: Vec<Vec<i64>> = u[..r]
            .iter()
            .map(|row| row.iter().map(|&v| v as i64).collect())
            .collect();
        let gram_of = |b: &Vec<Vec<i64>>| -> Vec<Vec<i64>> {
            b.iter()
                .map(|x| b.iter().map(|y| bilinear(g, x, y) as i64).collect())
                .collect()
        };
        if r == 2 {
            // Lagrange reduction
            loop {
                let gm = gram_of(&basis);
                if gm[1][1] < gm[0][0] {
                    basis.swap(0, 1);
                    continue;
                }
                if 2 * gm[0][1].abs() <= gm[0][0] {
                    break;
                }
                let mu = (gm[0][1] as f64 / gm[0][0] as f64).round() as i64;
                let b0 = basis[0].clone();
                for (x, y) in basis[1].iter_mut().zip(&b0) {
                    *x -= mu * y;
                }
            }
        }
        self.gram = gram_of(&basis);
        self.basis = basis;
        Ok(())
    }

    fn check_saturation(&mut self) -> Result<()> {
        let p = self.domain.p();
        let mut out = Vec::new();
        for k in [2u64, 3, 5, 7] {
            if k == p {
                continue;
            }
            let (src, dst) =
                match torsion_bases_over_common_field(&self.domain, &self.codomain, k, self.cap) {
                    Ok(b) => b,
                    Err(Error::CapExceeded { .. }) => continue,
                    Err(err) => return Err(err),
                };
            let gen_actions: Vec<Mat2> = self
                .generators
                .iter()
                .map(|g| action_in_bases(g, &src, &dst))
                .collect::<Result<_>>()?;
            let basis_actions: Vec<Mat2> = self
                .basis
                .iter()
                .map(|c| combine_actions(k, &gen_actions, c))
                .collect();
            let r = self.basis.len() as u32;
            let mut divisible = Vec::new();
            for idx in 1..k.pow(r) {
                let mut t = idx;
                let mut coeffs = Vec::new();
                let mut acc = Mat2::zero(k);
                for b in &basis_actions {
                    let c = t % k;
                    t /= k;
                    acc = acc.add(&b.scale(c as i64));
                    coeffs.push(c);
                }
                if acc.is_zero() {
                    divisible.push(coeffs);
                }
            }
            out.push(SaturationCheck { k, divisible });
        }
        self.saturation = out;
        Ok(())
    }

    /// Adds measuring levels until their product exceeds `bound`, each time
    /// taking the prime power (raising an existing level where possible)
    /// whose torsion field is smallest.
    fn ensure_levels(&self, bound: u128) -> Result<u128> {
        let mut state = self.levels.lock().unwrap();
        let p = self.domain.p();
        loop {
            let m: u128 = state.done.iter().map(|l| l.n as u128).product();
            if m > bound {
                return Ok(m);
            }
            let mut best: Option<(usize, u64, u64)> = None;
            for &ell in MEASURE_PRIMES.iter().filter(|&&l| l != p) {
                let current = state
                    .done
                    .iter()
                    .find(|l| l.n % ell == 0)
                    .map_or(1, |l| l.n);
                let q = current * ell;
                if q > MEASURE_LIMIT {
                    continue;
                }
                let deg = |c: &Curve| c.full_torsion_degree(q, self.cap);
                let d = match (deg(&self.domain), deg(&self.codomain)) {
                    (Ok(a), Ok(b)) => lcm(a as u64, b as u64) as usize,
                    (Err(Error::CapExceeded { .. }), _) | (_, Err(Error::CapExceeded { .. })) => {
                        continue
                    }
                    (Err(err), _) | (_, Err(err)) => return Err(err),
                };
                if d <= self.cap && best.is_none_or(|(bd, _, _)| d < bd) {
                    best = Some((d, ell, q));
                }
            }
            let Some((_, ell, q)) = best else {
                return Err(Error::cap(
                    format!("measuring modulus above {bound}"),
                    format!("prime powers up to {MEASURE_LIMIT} within degree {}", self.cap),
                ));
            };
            let (src, dst) =
                torsion_bases_over_common_field(&self.domain, &self.codomain, q, self.cap)?;
            let actions = self
                .generators
                .iter()
                .map(|g| action_in_bases(g, &src, &dst))
                .collect::<Result<Vec<_>>>()?;
            let scale = pairing_scale(&src, &dst)?;
            state.done.retain(|l| l.n % ell != 0);
            state.done.push(LevelMeasurement {
                n: q,
                src,
                dst,
                actions,
                scale,
            });
        }
    }

    /// Snapshot of the measuring levels computed so far.
    pub fn levels(&self) -> Vec<LevelMeasurement> {
        self.levels.lock().unwrap().done.clone()
    }
}

fn combine_actions(n: u64, actions: &[Mat2], coeffs: &[i64]) -> Mat2 {
    let mut acc = Mat2::zero(n);
    for (a, &c) in actions.iter().zip(coeffs) {
        if c != 0 {
            acc = acc.add(&a.reduce(n).scale(c));
        }
    }
    acc
}

/// An integer combination of the generators of a [`HomLattice`],
/// evaluated pointwise.
#[derive(Clone, Debug)]
pub struct HomElement {
    lattice: Arc<HomLattice>,
    coeffs: Vec<i64>,
}

impl Serialize for HomElement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("HomElement", 2)?;
        st.serialize_field("generator_coefficients", &self.coeffs)?;
        st.serialize_field("basis_coordinates", &self.basis_coordinates().ok())?;
        st.end()
    }
}

pub trait LatticeHandle {
    fn generator(&self, i: usize) -> HomElement;
    fn from_generators(&self, coeffs: Vec<i64>) -> HomElement;
    fn from_basis(&self, coords: &[i64]) -> HomElement;
    fn zero(&self) -> HomElement;
    fn identity(&self) -> Option<HomElement>;
}

impl LatticeHandle for Arc<HomLattice> {
    fn generator(&self, i: usize) -> HomElement {
        let mut c = vec![0; self.generators.len()];
        c[i] = 1;
        self.from_generators(c)
    }

    fn from_generators(&self, coeffs: Vec<i64>) -> HomElement {
        assert_eq!(coeffs.len(), self.generators.len());
        HomElement {
            lattice: self.clone(),
            coeffs,
        }
    }

    fn from_basis(&self, coords: &[i64]) -> HomElement {
        let mut c = vec![0i64; self.generators.len()];
        for (b, &x) in self.basis.iter().zip(coords) {
            for (ci, bi) in c.iter_mut().zip(b) {
                *ci += x * bi;
            }
        }
        self.from_generators(c)
    }

    fn zero(&self) -> HomElement {
        self.from_generators(vec![0; self.generators.len()])
    }

    fn identity(&self) -> Option<HomElement> {
        let i = self.generators.iter().position(|g| g.is_identity())?;
        Some(self.generator(i))
    }
}

impl HomElement {
    pub fn lattice(&self) -> &Arc<HomLattice> {
        &self.lattice
    }

    pub fn coefficients(&self) -> &[i64] {
        &self.coeffs
    }

    fn zip(&self, other: &HomElement, f: impl Fn(i64, i64) -> i64) -> HomElement {
        assert!(
            Arc::ptr_eq(&self.lattice, &other.lattice),
            "elements of different lattices"
        );
        HomElement {
            lattice: self.lattice.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn add(&self, other: &HomElement) -> HomElement {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &HomElement) -> HomElement {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, k: i64) -> HomElement {
        HomElement {
            lattice: self.lattice.clone(),
            coeffs: self.coeffs.iter().map(|&a| a * k).collect(),
        }
    }

    /// `<u, u>` in the diagonal-`2 deg` convention, i.e. twice the degree
    /// predicted by the Gram matrix.
    pub fn gram_value(&self) -> i128 {
        quad(&self.lattice.generator_gram, &self.coeffs)
    }

    pub fn pairing(&self, other: &HomElement) -> i128 {
        bilinear(&self.lattice.generator_gram, &self.coeffs, &other.coeffs)
    }

    /// Coordinates in the lattice basis.
    pub fn basis_coordinates(&self) -> Result<Vec<i64>> {
        let lat = &self.lattice;
        let r = lat.basis.len();
        if r == 0 {
            return Ok(Vec::new());
        }
        let g: Vec<Vec<i128>> = lat
            .gram
            .iter()
            .map(|row| row.iter().map(|&x| x as i128).collect())
            .collect();
        let d = det_i128(&g);
        let rhs: Vec<i128> = lat
            .basis
            .iter()
            .map(|b| bilinear(&lat.generator_gram, b, &self.coeffs))
            .collect();
        let mut out = Vec::with_capacity(r);
        for j in 0..r {
            let mut m = g.clone();
            for (l, row) in m.iter_mut().enumerate() {
                row[j] = rhs[l];
            }
            let num = det_i128(&m);
            if num % d != 0 {
                return Err(Error::Internal(
                    "element outside the lattice basis span".into(),
                ));
            }
            out.push((num / d) as i64);
        }
        Ok(out)
    }

    /// The action on the `i`-th measuring level.
    fn level_action(&self, lv: &LevelMeasurement) -> Mat2 {
        combine_actions(lv.n, &lv.actions, &self.coeffs)
    }
}

impl TorsionMap for HomElement {
    fn source(&self) -> &Curve {
        &self.lattice.domain
    }
    fn target(&self) -> &Curve {
        &self.lattice.codomain
    }
    fn map_point(&self, over: &CurveOver, pt: &Point) -> Result<Point> {
        let cod = self.lattice.codomain.over(over.degree())?;
        let mut acc = Point::Identity;
        for (g, &c) in self.lattice.generators.iter().zip(&self.coeffs) {
            if c != 0 {
                let img = g.map_point(over, pt)?;
                acc = cod.add(&acc, &cod.mul(&img, c));
            }
        }
        Ok(acc)
    }
    fn map_degree(&self) -> Result<u64> {
        let r = degree_of_hom(self)?;
        if !r.consistent {
            return Err(Error::Internal(
                "measured degree disagrees with the degree form".into(),
            ));
        }
        u64::try_from(r.degree).map_err(|_| Error::cap("degree", "u64"))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelReading {
    pub n: u64,
    /// The normalized determinant, `deg u mod n`.
    pub determinant: u64,
    pub kernel_size: u128,
}

#[derive(Clone, Debug, Serialize)]
pub struct DegreeReport {
    pub degree: u128,
    pub gram_prediction: u128,
    pub modulus: u128,
    pub readings: Vec<LevelReading>,
    /// `#(ker u ∩ E[M])`, the part of the degree seen by torsion.
    pub kernel_order: u128,
    pub consistent: bool,
}

/// The degree of `u`, read off from determinants of its torsion action at
/// levels whose product `M` exceeds the Gram prediction, with the kernel
/// sizes on each level as a cross-check: `#(ker u ∩ E[ell^e])` must equal
/// the `ell`-part of the degree whenever that part divides `ell^e`.
pub fn degree_of_hom(u: &HomElement) -> Result<DegreeReport> {
    let lat = &u.lattice;
    let g = u.gram_value();
    if g < 0 || g % 2 != 0 {
        return Err(Error::Internal(
            "degree form is not even and nonnegative".into(),
        ));
    }
    let predicted = (g / 2) as u128;
    if lat.generators.is_empty() {
        return Ok(DegreeReport {
            degree: 0,
            gram_prediction: 0,
            modulus: 1,
            readings: Vec::new(),
            kernel_order: 1,
            consistent: true,
        });
    }
    lat.ensure_levels(predicted)?;
    let state = lat.levels.lock().unwrap();
    let mut readings = Vec::new();
    let mut residues = Vec::new();
    let mut used = 1u128;
    for lv in &state.done {
        if used > predicted {
            break;
        }
        used *= lv.n as u128;
        let a = u.level_action(lv);
        let kernel = Submodule::kernel(&ZnMatrix::new(lv.n, 2, 2, &a.entries().map(|x| x as i64)));
        readings.push(LevelReading {
            n: lv.n,
            determinant: lv.normalized_det(&a),
            kernel_size: kernel.cardinality(),
        });
        residues.push((lv.n, lv.normalized_det(&a)));
    }
    let (degree, m) = crt(&residues);
    let mut consistent = degree == predicted;
    for r in &readings {
        let (ell, e) = factor(r.n)[0];
        let mut v = 0u32;
        let mut d = degree;
        while d > 0 && d % ell as u128 == 0 {
            d /= ell as u128;
            v += 1;
        }
        if degree == 0 {
            consistent &= r.kernel_size == (r.n as u128).pow(2);
        } else if v <= e {
            consistent &= r.kernel_size == (ell as u128).pow(v);
        }
    }
    Ok(DegreeReport {
        degree,
        gram_prediction: predicted,
        modulus: m,
        kernel_order: readings.iter().map(|r| r.kernel_size).product(),
        readings,
        consistent,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CrtReport {
    pub n: u64,
    pub element: HomElement,
    pub coordinates: Vec<i64>,
    pub degree: DegreeReport,
    pub checks: Vec<CoprimeReport>,
}

/// Combines, for each prime `ell | n`, an element of degree prime to
/// `ell` into one element `u` with `u ≡ v_ell` modulo `ell` times the
/// lattice; `u` then has degree prime to `n` and induces isomorphisms on
/// every `ell^k`-torsion part of `E[n]`.
pub fn crt_combine(candidates: &[(u64, HomElement)], n: u64) -> Result<CrtReport> {
    let Some((_, first)) = candidates.first() else {
        return Err(Error::MissingPrime(n));
    };
    let lat = first.lattice.clone();
    if candidates
        .iter()
        .any(|(_, v)| !Arc::ptr_eq(&v.lattice, &lat))
    {
        return Err(Error::Precondition(
            "candidates from different lattices".into(),
        ));
    }
    let primes: Vec<(u64, u32)> = factor(n);
    let mut coords_per_prime = Vec::new();
    for &(ell, _) in &primes {
        let Some((_, v)) = candidates.iter().find(|(l, _)| *l == ell) else {
            return Err(Error::MissingPrime(ell));
        };
        let deg = v.map_degree()?;
        if deg % ell == 0 {
            return Err(Error::Precondition(format!(
                "candidate for {ell} has degree {deg}, divisible by {ell}"
            )));
        }
        coords_per_prime.push((ell, v.basis_coordinates()?));
    }
    let r = lat.rank();
    let radical: u64 = primes.iter().map(|&(l, _)| l).product();
    let mut coords: Vec<i64> = (0..r)
        .map(|j| {
            let res: Vec<(u64, u64)> = coords_per_prime
                .iter()
                .map(|(l, c)| (*l, c[j].rem_euclid(*l as i64) as u64))
                .collect();
            let (x, m) = crt(&res);
            let x = x as i64;
            if x > m as i64 / 2 {
                x - m as i64
            } else {
                x
            }
        })
        .collect();
    // smallest degree among nearby lifts
    let gram = &lat.gram;
    let mut best = coords.clone();
    let mut best_q = quad(gram, &best);
    let shifts: Vec<Vec<i64>> = (0..3i64.pow(r as u32))
        .map(|mut t| {
            (0..r)
                .map(|_| {
                    let s = t % 3 - 1;
                    t /= 3;
                    s
                })
                .collect()
        })
        .collect();
    for s in &shifts {
        let cand: Vec<i64> = coords
            .iter()
            .zip(s)
            .map(|(&c, &z)| c + z * radical as i64)
            .collect();
        let q = quad(gram, &cand);
        if q < best_q {
            best_q = q;
            best = cand;
        }
    }
    coords = best;
    let u = lat.from_basis(&coords);
    let degree = degree_of_hom(&u)?;
    if !degree.consistent || gcd((degree.degree % n as u128) as u64, n) != 1 {
        return Err(Error::Internal(format!(
            "combined element has degree {} not prime to {n}",
            degree.degree
        )));
    }
    let mut checks = Vec::new();
    let levels: Vec<u64> = match lat.domain.full_torsion_degree(n, lat.cap) {
        Ok(_) => vec![n],
        Err(_) => primes.iter().map(|&(l, k)| l.pow(k)).collect(),
    };
    for q in levels {
        let rep = coprime_iso_check(&u, q, lat.cap)?;
        if !rep.invertible {
            return Err(Error::Internal(format!(
                "combined element is not invertible on E[{q}]"
            )));
        }
        checks.push(rep);
    }
    Ok(CrtReport {
        n,
        element: u,
        coordinates: coords,
        degree,
        checks,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct HomTowerReport {
    pub tower: TowerReport,
    /// Action of each lattice generator on `E[ell^depth]`, in the bases
    /// used for the tower.
    pub actions: Vec<Mat2>,
    /// `(level, generator)` pairs whose reduced action misses the
    /// stabilized image at that level.
    pub missing: Vec<(u64, usize)>,
}

impl HomTowerReport {
    pub fn contains_all(&self) -> bool {
        self.missing.is_empty()
    }
}

/// The intertwiner tower of `E[ell^i] -> E'[ell^i]`, `i <= depth`, in point
/// bases over a common field, together with a check that every generator
/// of the lattice acts inside the stabilized images.
pub fn hom_tower(lattice: &HomLattice, ell: u64, depth: u32, cap: usize) -> Result<HomTowerReport> {
    let (e, e2) = (lattice.domain(), lattice.codomain());
    if ell == e.p() {
        return Err(Error::LevelNotCoprime { n: ell, p: e.p() });
    }
    if depth == 0 {
        return Err(Error::Precondition("tower depth must be positive".into()));
    }
    let top = ell.pow(depth);
    let (src, dst) = torsion_bases_over_common_field(e, e2, top, cap)?;
    let f1 = frobenius_matrix_from_basis(&src)?.matrix;
    let f2 = frobenius_matrix_from_basis(&dst)?.matrix;
    let levels: Vec<u64> = (1..=depth).map(|i| ell.pow(i)).collect();
    let t1: Vec<Mat2> = levels.iter().map(|&q| f1.reduce(q)).collect();
    let t2: Vec<Mat2> = levels.iter().map(|&q| f2.reduce(q)).collect();
    let tower = tower_from_matrices(ell, &t1, &t2);
    let actions = lattice
        .generators()
        .iter()
        .map(|g| action_in_bases(g, &src, &dst))
        .collect::<Result<Vec<_>>>()?;
    let mut missing = Vec::new();
    for chain in &tower.chains {
        for (k, a) in actions.iter().enumerate() {
            let v = a.reduce(chain.level).entries().to_vec();
            if !chain.stabilized.contains(&v) {
                missing.push((chain.level, k));
            }
        }
    }
    Ok(HomTowerReport {
        tower,
        actions,
        missing,
    })
}
