use proptest::prelude::*;

use tatekit::curve::{isomorphism_classes, Curve, DEFAULT_DEGREE_CAP};
use tatekit::galois::{
    frobenius_matrix, frobenius_matrix_from_basis, galois_isomorphic, galois_isomorphic_matrices,
    intertwiners, is_unit_root, level_tower_stabilization, p_part_isomorphic, unit_root,
    IntertwinerModule, Method,
};
use tatekit::linalg::Mat2;
use tatekit::Error;

const CAP: usize = DEFAULT_DEGREE_CAP;

type M = [u64; 4];

fn mul(n: u64, x: M, y: M) -> M {
    [
        (x[0] * y[0] + x[1] * y[2]) % n,
        (x[0] * y[1] + x[1] * y[3]) % n,
        (x[2] * y[0] + x[3] * y[2]) % n,
        (x[2] * y[1] + x[3] * y[3]) % n,
    ]
}

fn det(n: u64, x: M) -> u64 {
    (x[0] * x[3] % n + n * n - x[1] * x[2] % n) % n
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Every M with M F = F' M, by scanning all n^4 matrices.
fn brute_intertwiners(n: u64, f: M, g: M) -> Vec<M> {
    let mut out = Vec::new();
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let m = [a, b, c, d];
                    if mul(n, m, f) == mul(n, g, m) {
                        out.push(m);
                    }
                }
            }
        }
    }
    out
}

fn reps(p: u64) -> Vec<Curve> {
    isomorphism_classes(p)
        .unwrap()
        .into_iter()
        .map(|(r, _)| r)
        .collect()
}

fn fm(e: &Curve, n: u64) -> Mat2 {
    frobenius_matrix(e, n, CAP).unwrap().matrix
}

#[test]
fn rational_torsion_gives_identity() {
    // y^2 = x^3 - x over F_5 has all three roots 0, 1, 4 rational
    let e = Curve::new(5, -1, 0).unwrap();
    assert_eq!(e.full_torsion_degree(2, CAP).unwrap(), 1);
    assert_eq!(fm(&e, 2), Mat2::identity(2));
    for p in [5u64, 7, 11, 13] {
        for e in reps(p) {
            for n in 2..=6u64 {
                if n % p != 0 && e.full_torsion_degree(n, CAP).unwrap() == 1 {
                    assert_eq!(fm(&e, n), Mat2::identity(n), "{e:?} n={n}");
                }
            }
        }
    }
}

#[test]
fn frobenius_matrices_match_points_and_char_poly() {
    for p in [5u64, 7, 11, 13] {
        for e in reps(p) {
            let t = e.trace();
            for n in 2..=12u64 {
                if n % p == 0 {
                    continue;
                }
                let f = frobenius_matrix(&e, n, CAP).unwrap();
                assert_eq!(f.method(), Method::Points);
                let m = f.matrix;
                // trace and determinant
                assert_eq!(m.trace() as i64, t.rem_euclid(n as i64), "{e:?} n={n}");
                assert_eq!(m.det(), p % n);
                assert!(f.satisfies_char_poly(t, p));
                // columns are the coordinates of Frobenius images
                let b = f.basis.as_ref().unwrap();
                let c = b.curve();
                let [a0, c0] = m.column(0);
                let [a1, c1] = m.column(1);
                assert_eq!(c.frobenius(b.p()), b.combine(a0, c0));
                assert_eq!(c.frobenius(b.q()), b.combine(a1, c1));
                // the matrix order is the degree of the torsion field
                assert_eq!(
                    m.order().unwrap() as usize,
                    e.full_torsion_degree(n, CAP).unwrap(),
                    "{e:?} n={n}"
                );
            }
        }
    }
}

#[test]
fn reduction_between_levels_is_entrywise() {
    for e in reps(7).into_iter().take(8) {
        let top = e.torsion_basis(12, CAP).unwrap();
        let f12 = frobenius_matrix_from_basis(&top).unwrap().matrix;
        for d in [1u64, 2, 3, 4, 6] {
            let low = top.reduce_to(d).unwrap();
            let fd = frobenius_matrix_from_basis(&low).unwrap().matrix;
            assert_eq!(fd, f12.reduce(d), "{e:?} d={d}");
        }
    }
}

#[test]
fn intertwiner_counts_match_brute_force() {
    for p in [5u64, 7, 11, 13] {
        let rs = reps(p);
        for n in 2..=8u64 {
            if n % p == 0 {
                continue;
            }
            let mats: Vec<Mat2> = rs.iter().map(|e| fm(e, n)).collect();
            for f in &mats {
                for g in &mats {
                    let module = IntertwinerModule::solve(f, g);
                    let brute = brute_intertwiners(n, f.entries(), g.entries());
                    assert_eq!(module.cardinality(), brute.len() as u128, "p={p} n={n}");
                    for gen in module.generators() {
                        assert!(module.intertwines(&gen));
                    }
                    if n <= 4 {
                        for m in &brute {
                            assert!(module.contains(&Mat2::new(n, m.map(|x| x as i64))));
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn intertwiner_counts_up_to_sixteen() {
    let rs = reps(11);
    let picks = [&rs[0], &rs[3], &rs[7]];
    for n in 9..=16u64 {
        if n == 11 {
            continue;
        }
        for &e in &picks {
            for &e2 in &picks {
                let module = intertwiners(e, e2, n, CAP);
                let (f, g) = match module {
                    Ok(ref m) => (m.source, m.target),
                    Err(Error::Supersingular { .. }) => (fm(e, n), fm(e2, n)),
                    Err(err) => panic!("{err}"),
                };
                let module = IntertwinerModule::solve(&f, &g);
                let brute = brute_intertwiners(n, f.entries(), g.entries());
                assert_eq!(module.cardinality(), brute.len() as u128, "n={n}");
            }
        }
    }
}

#[test]
fn self_intertwiners_contain_scalars_and_frobenius() {
    for e in reps(13).into_iter().filter(|e| e.is_ordinary()) {
        for n in [2u64, 3, 4, 5, 6] {
            let m = intertwiners(&e, &e, n, CAP).unwrap();
            assert!(m.contains(&Mat2::identity(n)));
            assert!(m.contains(&m.source));
            let g = galois_isomorphic(&e, &e, n, CAP).unwrap();
            assert!(g.isomorphic);
            assert_eq!(g.witness, Some(Mat2::identity(n)));
        }
    }
}

#[test]
fn supersingular_curves_are_flagged() {
    let e = Curve::new(5, 0, 1).unwrap();
    assert_eq!(e.trace(), 0);
    assert!(matches!(
        intertwiners(&e, &e, 2, CAP),
        Err(Error::Supersingular { .. })
    ));
    assert!(matches!(
        p_part_isomorphic(&e, &e, 2),
        Err(Error::Supersingular { .. })
    ));
}

#[test]
fn galois_isomorphism_matches_invertible_scan() {
    for p in [5u64, 7, 13] {
        let rs: Vec<Curve> = reps(p).into_iter().filter(|e| e.is_ordinary()).collect();
        for n in [2u64, 3, 4, 6] {
            if n % p == 0 {
                continue;
            }
            for e in &rs {
                for e2 in &rs {
                    let f = fm(e, n);
                    let g = fm(e2, n);
                    let brute = brute_intertwiners(n, f.entries(), g.entries());
                    let expect = brute.iter().any(|&m| gcd(det(n, m), n) == 1);
                    let res = galois_isomorphic_matrices(&f, &g, Method::Points);
                    assert_eq!(res.isomorphic, expect, "p={p} n={n} {e:?} {e2:?}");
                    if let Some(w) = res.witness {
                        assert!(w.is_invertible());
                        assert_eq!(w.mul(&f), g.mul(&w));
                        // symmetry: the inverse witnesses the reverse direction
                        let back = galois_isomorphic_matrices(&g, &f, Method::Points);
                        assert!(back.isomorphic);
                        let wi = w.inverse().unwrap();
                        assert_eq!(wi.mul(&g), f.mul(&wi));
                    }
                    // different characteristic polynomials mod n rule it out
                    let tn = (e.trace() - e2.trace()).rem_euclid(n as i64);
                    if tn != 0 {
                        assert!(!res.isomorphic);
                    }
                }
            }
        }
    }
}

#[test]
fn large_level_isomorphism_forces_equal_traces() {
    for p in [5u64, 7] {
        let rs: Vec<Curve> = reps(p).into_iter().filter(|e| e.is_ordinary()).collect();
        let bound = (4.0 * (p as f64).sqrt()).floor() as u64;
        for n in (bound + 1)..=(bound + 3) {
            if n % p == 0 {
                continue;
            }
            for e in &rs {
                for e2 in &rs {
                    let Ok(g) = galois_isomorphic(e, e2, n, CAP) else {
                        continue;
                    };
                    if g.isomorphic {
                        assert_eq!(e.trace(), e2.trace());
                    }
                }
            }
        }
    }
}

#[test]
fn tower_reports() {
    for e in reps(7).into_iter().filter(|e| e.is_ordinary()).take(6) {
        let r = level_tower_stabilization(&e, &e, 2, 3, CAP).unwrap();
        assert_eq!(r.chains.len(), 3);
        for (i, ch) in r.chains.iter().enumerate() {
            let q = 2u64.pow(i as u32 + 1);
            let f = r.frobenius[i][0];
            let flat = |m: &Mat2| m.entries().to_vec();
            assert!(ch.stabilized.contains(&flat(&Mat2::identity(q))));
            assert!(ch.stabilized.contains(&flat(&f)));
            assert_eq!(ch.image_sizes.len(), 3 - i);
            // images only shrink when going up the tower
            for w in ch.image_sizes.windows(2) {
                assert!(w[1] <= w[0]);
            }
            assert!(ch.offset < ch.image_sizes.len());
        }
        // reduction is additive
        for i in 1..3 {
            let hi = &r.modules[i];
            let q = 2u64.pow(i as u32);
            let elems = hi.elements();
            for a in elems.iter().take(40) {
                for b in elems.iter().take(40) {
                    assert_eq!(a.add(b).reduce(q), a.reduce(q).add(&b.reduce(q)));
                }
            }
        }
    }
}

#[test]
fn tower_lower_levels_come_from_the_top_basis() {
    let e = reps(11).into_iter().find(|e| e.is_ordinary()).unwrap();
    let r = level_tower_stabilization(&e, &e, 2, 4, CAP).unwrap();
    let top = e.torsion_basis(16, CAP).unwrap();
    for i in 1..=4u32 {
        let q = 2u64.pow(i);
        let b = top.reduce_to(q).unwrap();
        let f = frobenius_matrix_from_basis(&b).unwrap().matrix;
        assert_eq!(f, r.frobenius[i as usize - 1][0]);
    }
}

#[test]
fn unit_roots() {
    // exhaustive root scan mod 25
    let roots: Vec<u64> = (0..25u64)
        .filter(|u| (u * u + 5 + 25 * 2 - 2 * u) % 25 == 0 && u % 5 == 2)
        .collect();
    assert_eq!(roots, vec![12]);
    assert_eq!(unit_root(2, 5, 2).unwrap(), 12);
    assert_eq!(unit_root(2, 5, 1).unwrap(), 2);
    assert_eq!(unit_root(-3, 7, 1).unwrap(), 4);
}

#[test]
fn p_parts() {
    let p = 13;
    let rs: Vec<Curve> = reps(p).into_iter().filter(|e| e.is_ordinary()).collect();
    for e in &rs {
        for e2 in &rs {
            let r = p_part_isomorphic(e, e2, 3).unwrap();
            assert_eq!(r.isomorphic, e.trace() == e2.trace());
            if r.isomorphic {
                assert_eq!(r.unit_roots[0], r.unit_roots[1]);
            }
            if (e.trace() - e2.trace()) % p as i64 != 0 {
                assert_ne!(r.unit_roots[0] % p, r.unit_roots[1] % p);
            }
        }
    }
}

proptest! {
    #[test]
    fn unit_root_solves_the_quadratic(pi in 0usize..6, a in -20i64..20, nu in 1u32..8) {
        let p = [5u64, 7, 11, 13, 101, 65521][pi];
        prop_assume!(a.rem_euclid(p as i64) != 0);
        prop_assume!(p.checked_pow(nu).is_some_and(|m| m < 1 << 62));
        let u = unit_root(a, p, nu).unwrap();
        prop_assert!(is_unit_root(u, a, p, nu));
        prop_assert_eq!(u % p, a.rem_euclid(p as i64) as u64);
    }

    #[test]
    fn intertwiners_form_a_module(
        n in 2u64..40,
        f in proptest::array::uniform4(0i64..40),
        g in proptest::array::uniform4(0i64..40),
        c in proptest::collection::vec(0i64..40, 4),
    ) {
        let f = Mat2::new(n, f);
        let g = Mat2::new(n, g);
        let m = IntertwinerModule::solve(&f, &g);
        let gens = m.generators();
        let mut acc = Mat2::zero(n);
        for (k, gen) in gens.iter().enumerate() {
            prop_assert!(m.intertwines(gen));
            acc = acc.add(&gen.scale(c[k % c.len()]));
        }
        prop_assert!(m.intertwines(&acc));
        prop_assert!(m.contains(&acc));
    }
}

#[test]
fn cyclic_route_agrees_with_points() {
    for e in reps(13).into_iter().filter(|e| e.is_ordinary()) {
        for n in [3u64, 5, 7] {
            let deg = e.full_torsion_degree(n, CAP).unwrap();
            if deg == 1 || !tatekit::galois::separable_mod(e.trace(), 13, n) {
                continue;
            }
            let small = frobenius_matrix(&e, n, deg - 1).unwrap();
            assert_eq!(small.method(), Method::Cyclic);
            assert!(small.satisfies_char_poly(e.trace(), 13));
            let full = fm(&e, n);
            let g = galois_isomorphic_matrices(&full, &small.matrix, Method::Cyclic);
            assert!(g.isomorphic, "{e:?} n={n}");
        }
    }
}
