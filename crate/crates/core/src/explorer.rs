//! Searching the curves over one prime field for ordinary pairs that are
//! not isomorphic even over the algebraic closure, yet whose torsion is
//! Galois-isomorphic at every tested level.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::arith::{factor, is_prime, prime_power, MAX_CHARACTERISTIC};
use crate::curve::{isomorphism_classes, Curve, DEFAULT_DEGREE_CAP};
use crate::error::{Error, Result};
use crate::galois::{frobenius_matrix, galois_isomorphic, is_unit_root, unit_root, Method};
use crate::isogeny::{
    coprime_iso_check, crt_combine, cyclic_kernels, hom_lattice, velu, CrtReport, Isogeny,
    LatticeHandle,
};
use crate::linalg::Mat2;

/// Largest characteristic the explorer enumerates.
pub const EXPLORER_P_CAP: u64 = 2_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CurveRep {
    pub a: u64,
    pub b: u64,
    pub j: u64,
    /// Index of the `F_p`-isomorphism class in [`isomorphism_classes`]
    /// order.
    pub class_id: usize,
    /// Number of `(A, B)` in the class.
    pub class_size: usize,
}

/// The `F_p`-isomorphism classes sharing one trace.
#[derive(Clone, Debug, Serialize)]
pub struct IsogenyClassReport {
    pub p: u64,
    pub trace: i64,
    pub ordinary: bool,
    pub curves: Vec<CurveRep>,
}

impl IsogenyClassReport {
    pub fn curve(&self, i: usize) -> Curve {
        let c = &self.curves[i];
        Curve::new(self.p, c.a as i64, c.b as i64).expect("enumerated curves are nonsingular")
    }

    /// Number of distinct `j`-invariants.
    pub fn j_count(&self) -> usize {
        let mut js: Vec<u64> = self.curves.iter().map(|c| c.j).collect();
        js.sort();
        js.dedup();
        js.len()
    }

    pub fn total_curves(&self) -> usize {
        self.curves.iter().map(|c| c.class_size).sum()
    }
}

fn check_p(p: u64) -> Result<()> {
    if p < 5 || !is_prime(p) {
        return Err(Error::Precondition(format!("p = {p} must be a prime >= 5")));
    }
    if p > EXPLORER_P_CAP.min(MAX_CHARACTERISTIC) {
        return Err(Error::cap(format!("curve enumeration over F_{p}"), EXPLORER_P_CAP));
    }
    Ok(())
}

/// Every nonsingular curve over `F_p`, grouped by isomorphism class and
/// then by trace (ascending).
pub fn enumerate_curves(p: u64) -> Result<Vec<IsogenyClassReport>> {
    check_p(p)?;
    let mut by_trace: BTreeMap<i64, Vec<CurveRep>> = BTreeMap::new();
    for (id, (rep, members)) in isomorphism_classes(p)?.into_iter().enumerate() {
        by_trace.entry(rep.trace()).or_default().push(CurveRep {
            a: rep.a(),
            b: rep.b(),
            j: rep.j_invariant(),
            class_id: id,
            class_size: members.len(),
        });
    }
    Ok(by_trace
        .into_iter()
        .map(|(trace, curves)| IsogenyClassReport {
            p,
            trace,
            ordinary: trace % p as i64 != 0,
            curves,
        })
        .collect())
}

/// Parameters of the twin search.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TwinParams {
    /// Every prime power `ell^k <= level_bound` with `ell != p` is tested.
    pub level_bound: u64,
    /// Unit roots are compared modulo `p^p_precision`.
    pub p_precision: u32,
    /// Largest degree tried when looking for an isogeny of degree prime
    /// to `ell`.
    pub degree_bound: u64,
    /// Group structures are compared over `F_{p^k}`, `k <= extensions`.
    pub extensions: usize,
    pub cap: usize,
}

impl Default for TwinParams {
    fn default() -> Self {
        TwinParams {
            level_bound: 32,
            p_precision: 3,
            degree_bound: 12,
            extensions: 3,
            cap: DEFAULT_DEGREE_CAP,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurveEntry {
    pub a: u64,
    pub b: u64,
    pub j: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelEntry {
    pub modulus: u64,
    /// Frobenius on `E[n]` and `E'[n]`, as row-major 2x2 matrices.
    pub frobenius: [[[u64; 2]; 2]; 2],
    /// An invertible `W` with `W F = F' W`.
    pub witness: [[u64; 2]; 2],
    pub method: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PPartEntry {
    pub precision: u32,
    pub unit_root: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IsogenyEntry {
    pub ell: u64,
    pub degree: u64,
    /// Kernel polynomial, constant term first.
    pub kernel: Vec<u32>,
    /// The codomain isomorphism `(x, y) -> (u^2 x, u^3 y)` applied last.
    pub scaling: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwinCertificate {
    pub p: u64,
    pub curves: [CurveEntry; 2],
    pub trace: i64,
    pub levels: Vec<LevelEntry>,
    pub p_part: PPartEntry,
    pub isogenies: Vec<IsogenyEntry>,
    /// `k -> [[d1, d2] of E, [d1, d2] of E']` for `E(F_{p^k})`.
    pub group_structures: BTreeMap<String, [[u64; 2]; 2]>,
}

impl TwinCertificate {
    pub fn domain(&self) -> Result<Curve> {
        let c = self.curves[0];
        Curve::new(self.p, c.a as i64, c.b as i64)
    }

    pub fn codomain(&self) -> Result<Curve> {
        let c = self.curves[1];
        Curve::new(self.p, c.a as i64, c.b as i64)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }
}

fn rows(m: &Mat2) -> [[u64; 2]; 2] {
    let e = m.entries();
    [[e[0], e[1]], [e[2], e[3]]]
}

fn mat(n: u64, r: &[[u64; 2]; 2]) -> Mat2 {
    Mat2::new(n, [r[0][0], r[0][1], r[1][0], r[1][1]].map(|x| x as i64))
}

/// Prime powers `ell^k <= bound` with `ell != p`, ascending.
pub fn tested_levels(p: u64, bound: u64) -> Vec<u64> {
    (2..=bound)
        .filter(|&n| prime_power(n).is_some_and(|(ell, _)| ell != p))
        .collect()
}

/// Primes `ell <= bound`, `ell != p`.
pub fn tested_primes(p: u64, bound: u64) -> Vec<u64> {
    (2..=bound).filter(|&l| is_prime(l) && l != p).collect()
}

fn same_trace_ordinary(e: &Curve, e2: &Curve) -> Result<()> {
    if e.p() != e2.p() {
        return Err(Error::Precondition("curves over different fields".into()));
    }
    if e.trace() != e2.trace() {
        return Err(Error::Precondition(format!(
            "traces differ ({} and {})",
            e.trace(),
            e2.trace()
        )));
    }
    if !e.is_ordinary() || !e2.is_ordinary() {
        return Err(Error::Supersingular { trace: e.trace() });
    }
    Ok(())
}

/// An isogeny `E -> E'` defined over `F_p` whose degree is at most
/// `degree_bound` and prime to `ell`, from a cyclic rational kernel.
pub fn verify_coprime_isogeny(
    e: &Curve,
    e2: &Curve,
    ell: u64,
    degree_bound: u64,
    cap: usize,
) -> Result<Isogeny> {
    same_trace_ordinary(e, e2)?;
    for d in (1..=degree_bound).filter(|d| d % ell != 0 && d % e.p() != 0) {
        let kernels = match cyclic_kernels(e, d, cap) {
            Ok(k) => k,
            Err(Error::CapExceeded { .. }) => continue,
            Err(err) => return Err(err),
        };
        for k in kernels {
            if let Some(phi) = velu(e, &k)?.onto(e2).into_iter().next() {
                return Ok(phi);
            }
        }
    }
    Err(Error::NotFound(format!(
        "no isogeny of degree <= {degree_bound} prime to {ell}"
    )))
}

/// Why a candidate pair was rejected.
#[derive(Clone, Debug, Serialize)]
pub struct Rejection {
    pub curves: [CurveEntry; 2],
    pub reason: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct TwinSearch {
    pub p: u64,
    pub candidates: usize,
    pub rejections: Vec<Rejection>,
    pub certificate: Option<TwinCertificate>,
}

fn entry(e: &Curve) -> CurveEntry {
    CurveEntry {
        a: e.a(),
        b: e.b(),
        j: e.j_invariant(),
    }
}

fn group_structure(e: &Curve, k: usize) -> Result<[u64; 2]> {
    let (d1, d2) = e.over(k)?.group_structure()?;
    Ok([d1, d2])
}

/// Tries to certify one pair. `Ok(Err(reason))` is a clean rejection.
fn certify(e: &Curve, e2: &Curve, params: &TwinParams) -> Result<std::result::Result<TwinCertificate, String>> {
    let p = e.p();
    let mut levels = Vec::new();
    for n in tested_levels(p, params.level_bound) {
        let g = galois_isomorphic(e, e2, n, params.cap)?;
        let Some(w) = g.witness else {
            return Ok(Err(format!("torsion not isomorphic at level {n}")));
        };
        levels.push(LevelEntry {
            modulus: n,
            frobenius: [rows(&g.frobenius[0]), rows(&g.frobenius[1])],
            witness: rows(&w),
            method: match g.method {
                Method::Points => "points".into(),
                Method::Cyclic => "cyclic".into(),
            },
        });
    }
    let u1 = unit_root(e.trace(), p, params.p_precision)?;
    let u2 = unit_root(e2.trace(), p, params.p_precision)?;
    if u1 != u2 {
        return Ok(Err("unit roots differ".into()));
    }
    let mut group_structures = BTreeMap::new();
    for k in 1..=params.extensions {
        let g = [group_structure(e, k)?, group_structure(e2, k)?];
        if g[0] != g[1] {
            return Ok(Err(format!("groups differ over F_(p^{k})")));
        }
        group_structures.insert(k.to_string(), g);
    }
    let mut isogenies = Vec::new();
    for ell in tested_primes(p, params.level_bound) {
        let phi = match verify_coprime_isogeny(e, e2, ell, params.degree_bound, params.cap) {
            Ok(phi) => phi,
            Err(Error::NotFound(msg)) => return Ok(Err(msg)),
            Err(err) => return Err(err),
        };
        isogenies.push(IsogenyEntry {
            ell,
            degree: phi.degree(),
            kernel: phi.kernel_polynomial().clone(),
            scaling: phi.scaling(),
        });
    }
    Ok(Ok(TwinCertificate {
        p,
        curves: [entry(e), entry(e2)],
        trace: e.trace(),
        levels,
        p_part: PPartEntry {
            precision: params.p_precision,
            unit_root: u1,
        },
        isogenies,
        group_structures,
    }))
}

/// Candidate pairs: ordinary curves of equal trace with distinct `j`, one
/// representative per `j` (the first isomorphism class met), in
/// enumeration order.
pub fn candidate_pairs(p: u64) -> Result<Vec<(Curve, Curve)>> {
    let mut out = Vec::new();
    for class in enumerate_curves(p)? {
        if !class.ordinary {
            continue;
        }
        let mut reps: Vec<Curve> = Vec::new();
        for i in 0..class.curves.len() {
            let c = class.curve(i);
            if reps.iter().all(|r| r.j_invariant() != c.j_invariant()) {
                reps.push(c);
            }
        }
        for i in 0..reps.len() {
            for j in i + 1..reps.len() {
                out.push((reps[i], reps[j]));
            }
        }
    }
    Ok(out)
}

/// The first certified pair over `F_p`, with every rejection recorded.
/// Pairs whose levels exceed the extension cap are skipped; if nothing is
/// certified and some pair was skipped, the cap error is returned.
pub fn twin_search(p: u64, params: &TwinParams) -> Result<TwinSearch> {
    let pairs = candidate_pairs(p)?;
    let mut rejections = Vec::new();
    let mut capped = None;
    for (e, e2) in &pairs {
        match certify(e, e2, params) {
            Ok(Ok(cert)) => {
                return Ok(TwinSearch {
                    p,
                    candidates: pairs.len(),
                    rejections,
                    certificate: Some(cert),
                });
            }
            Ok(Err(reason)) => rejections.push(Rejection {
                curves: [entry(e), entry(e2)],
                reason,
            }),
            Err(err @ (Error::CapExceeded { .. } | Error::AmbientTooSmall { .. })) => {
                rejections.push(Rejection {
                    curves: [entry(e), entry(e2)],
                    reason: err.to_string(),
                });
                capped.get_or_insert(err);
            }
            Err(err) => return Err(err),
        }
    }
    if let Some(err) = capped {
        return Err(err);
    }
    Ok(TwinSearch {
        p,
        candidates: pairs.len(),
        rejections,
        certificate: None,
    })
}

pub fn find_twin_pair(p: u64, level_bound: u64, p_precision: u32) -> Result<Option<TwinCertificate>> {
    let params = TwinParams {
        level_bound,
        p_precision,
        ..TwinParams::default()
    };
    Ok(twin_search(p, &params)?.certificate)
}

/// The smallest prime `5 <= p <= p_max` admitting a certificate. Primes
/// whose search hits the extension cap are passed over.
pub fn smallest_twin_pair(p_max: u64, params: &TwinParams) -> Result<Option<TwinCertificate>> {
    for p in (5..=p_max).filter(|&p| is_prime(p)) {
        match twin_search(p, params) {
            Ok(TwinSearch {
                certificate: Some(c),
                ..
            }) => return Ok(Some(c)),
            Ok(_) | Err(Error::CapExceeded { .. }) | Err(Error::AmbientTooSmall { .. }) => {}
            Err(err) => return Err(err),
        }
    }
    Ok(None)
}

/// Outcome of checking a certificate from scratch.
#[derive(Clone, Debug, Serialize)]
pub struct Verification {
    pub failures: Vec<String>,
    pub levels_checked: usize,
    /// `(ell, how)`: checked on `E[ell]` ("torsion") or on the kernel.
    pub isogeny_checks: Vec<(u64, String)>,
}

impl Verification {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Rebuilds an isogeny from its kernel polynomial by searching the rational
/// cyclic kernels of that degree.
fn rebuild_isogeny(e: &Curve, e2: &Curve, entry: &IsogenyEntry, cap: usize) -> Result<Option<Isogeny>> {
    for k in cyclic_kernels(e, entry.degree, cap)? {
        let phi = velu(e, &k)?;
        if phi.kernel_polynomial() == &entry.kernel {
            let phi = phi.then_scaling(entry.scaling)?;
            return Ok((phi.codomain() == e2).then_some(phi));
        }
    }
    Ok(None)
}

/// Re-checks every claim of a certificate: the curves, every witness by
/// matrix multiplication against recomputed Frobenius matrices, the unit
/// root, each isogeny on its kernel and on `ell`-torsion, and the group
/// structures.
pub fn verify_certificate(cert: &TwinCertificate, params: &TwinParams) -> Result<Verification> {
    let mut failures = Vec::new();
    let mut isogeny_checks = Vec::new();
    let mut fail = |m: String| failures.push(m);
    let (e, e2) = (cert.domain()?, cert.codomain()?);
    let p = cert.p;
    for (c, entry) in [(e, cert.curves[0]), (e2, cert.curves[1])] {
        if c.j_invariant() != entry.j {
            fail(format!("stored j of ({}, {}) is wrong", entry.a, entry.b));
        }
        if c.trace() != cert.trace {
            fail(format!("trace of ({}, {}) is {}", entry.a, entry.b, c.trace()));
        }
        if !c.is_ordinary() {
            fail("supersingular curve".into());
        }
    }
    if e.j_invariant() == e2.j_invariant() {
        fail("equal j-invariants".into());
    }
    if e.is_isomorphic(&e2) {
        fail("curves are isomorphic over F_p".into());
    }
    let expected = tested_levels(p, params.level_bound);
    let stored: Vec<u64> = cert.levels.iter().map(|l| l.modulus).collect();
    if stored != expected {
        fail(format!("levels {stored:?} differ from {expected:?}"));
    }
    for l in &cert.levels {
        let n = l.modulus;
        let f = mat(n, &l.frobenius[0]);
        let f2 = mat(n, &l.frobenius[1]);
        let w = mat(n, &l.witness);
        if !w.is_invertible() {
            fail(format!("witness at {n} is not invertible"));
        }
        if w.mul(&f) != f2.mul(&w) {
            fail(format!("witness at {n} does not intertwine"));
        }
        let g1 = frobenius_matrix(&e, n, params.cap)?;
        let g2 = frobenius_matrix(&e2, n, params.cap)?;
        if g1.matrix != f || g2.matrix != f2 {
            fail(format!("recomputed Frobenius at {n} differs"));
        }
        for (g, c) in [(&g1, &e), (&g2, &e2)] {
            if !g.satisfies_char_poly(c.trace(), p) {
                fail(format!("Frobenius at {n} violates its characteristic polynomial"));
            }
        }
    }
    let u = cert.p_part.unit_root;
    let nu = cert.p_part.precision;
    for c in [&e, &e2] {
        if !is_unit_root(u, c.trace(), p, nu) || unit_root(c.trace(), p, nu)? != u {
            fail("unit root does not check".into());
        }
    }
    let primes = tested_primes(p, params.level_bound);
    let stored: Vec<u64> = cert.isogenies.iter().map(|i| i.ell).collect();
    if stored != primes {
        fail(format!("isogeny primes {stored:?} differ from {primes:?}"));
    }
    for entry in &cert.isogenies {
        if entry.degree % entry.ell == 0 {
            fail(format!("isogeny for {} has degree {}", entry.ell, entry.degree));
        }
        let Some(phi) = rebuild_isogeny(&e, &e2, entry, params.cap)? else {
            fail(format!("isogeny for {} does not rebuild onto E'", entry.ell));
            continue;
        };
        let k = phi.kernel();
        let over = k.curve().clone();
        if !k.elements().iter().all(|pt| phi.eval(&over, pt).is_identity()) {
            fail(format!("isogeny for {} does not kill its kernel", entry.ell));
        }
        // on E[ell] directly when it fits the cap, else through the kernel:
        // the map is injective on E[ell] iff the kernel has no point of
        // order ell
        let injective = match coprime_iso_check(&phi, entry.ell, params.cap) {
            Ok(r) => {
                isogeny_checks.push((entry.ell, "torsion".to_string()));
                r.holds && r.invertible
            }
            Err(Error::CapExceeded { .. }) => {
                isogeny_checks.push((entry.ell, "kernel".to_string()));
                k.elements().len() as u64 == entry.degree
                    && !k.elements().iter().any(|pt| {
                        !pt.is_identity() && over.mul_u64(pt, entry.ell).is_identity()
                    })
            }
            Err(err) => return Err(err),
        };
        if !injective {
            fail(format!("isogeny for {} is not invertible on E[{}]", entry.ell, entry.ell));
        }
    }
    for k in 1..=params.extensions {
        let g = [group_structure(&e, k)?, group_structure(&e2, k)?];
        if cert.group_structures.get(&k.to_string()) != Some(&g) || g[0] != g[1] {
            fail(format!("group structures over F_(p^{k}) do not check"));
        }
    }
    Ok(Verification {
        failures,
        levels_checked: cert.levels.len(),
        isogeny_checks,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelScan {
    pub traces: [i64; 2],
    /// Levels `n <= bound`, `p` not dividing `n`, where the torsion is
    /// Galois-isomorphic.
    pub isomorphic_levels: Vec<u64>,
    /// Levels that could not be decided within the extension cap.
    pub undecided_levels: Vec<u64>,
    /// `4 sqrt(p)`: an isomorphic level above it forces equal traces.
    pub threshold: f64,
    pub forcing_level: Option<u64>,
    /// Every isomorphic level `n` has `a ≡ a' (mod n)`, and a forcing level
    /// implies `a = a'`.
    pub consistent: bool,
}

/// Scans levels up to `bound` for Galois-isomorphic torsion.
pub fn infinite_levels_imply_isogeny_check(
    e: &Curve,
    e2: &Curve,
    bound: u64,
    cap: usize,
) -> Result<LevelScan> {
    if e.p() != e2.p() {
        return Err(Error::Precondition("curves over different fields".into()));
    }
    let p = e.p();
    let traces = [e.trace(), e2.trace()];
    let threshold = 4.0 * (p as f64).sqrt();
    let mut isomorphic_levels = Vec::new();
    let mut undecided_levels = Vec::new();
    for n in (2..=bound).filter(|n| n % p != 0) {
        match galois_isomorphic(e, e2, n, cap) {
            Ok(g) if g.isomorphic => isomorphic_levels.push(n),
            Ok(_) => {}
            Err(Error::CapExceeded { .. } | Error::AmbientTooSmall { .. }) => undecided_levels.push(n),
            Err(err) => return Err(err),
        }
    }
    // n > 4 sqrt p, i.e. n^2 > 16 p
    let forcing_level = isomorphic_levels
        .iter()
        .copied()
        .find(|&n| n * n > 16 * p);
    let congruent = isomorphic_levels
        .iter()
        .all(|&n| (traces[0] - traces[1]).rem_euclid(n as i64) == 0);
    let consistent = congruent && (forcing_level.is_none() || traces[0] == traces[1]);
    Ok(LevelScan {
        traces,
        isomorphic_levels,
        undecided_levels,
        threshold,
        forcing_level,
        consistent,
    })
}

/// Feeds the certificate's isogenies for the primes of `n` into
/// [`crt_combine`], inside the lattice of maps of degree at most the
/// largest of them.
pub fn certificate_composite(cert: &TwinCertificate, n: u64, cap: usize) -> Result<CrtReport> {
    let (e, e2) = (cert.domain()?, cert.codomain()?);
    let mut entries = Vec::new();
    for (ell, _) in factor(n) {
        let entry = cert
            .isogenies
            .iter()
            .find(|i| i.ell == ell)
            .ok_or(Error::MissingPrime(ell))?;
        entries.push(entry);
    }
    let bound = entries.iter().map(|i| i.degree).max().unwrap_or(1);
    let lattice = hom_lattice(&e, &e2, bound, cap)?;
    let mut candidates = Vec::new();
    for entry in entries {
        let k = lattice
            .generators()
            .iter()
            .position(|g| {
                g.frobenius == 0
                    && g.isogeny.kernel_polynomial() == &entry.kernel
                    && g.isogeny.scaling() == entry.scaling
            })
            .ok_or_else(|| {
                Error::Internal(format!("isogeny for {} is not a lattice generator", entry.ell))
            })?;
        candidates.push((entry.ell, lattice.generator(k)));
    }
    crt_combine(&candidates, n)
}
