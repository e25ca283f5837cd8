use std::collections::{HashMap, HashSet};

use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tatekit::arith::ext_field;
use tatekit::curve::{
    mult_image_of_torsion, order_over_extension, preimage_image_check, Curve, Point,
    TorsionSubgroup, DEFAULT_DEGREE_CAP,
};

// Independent affine group law over F_p on plain integers.
type P2 = Option<(u64, u64)>;

fn inv(a: u64, p: u64) -> u64 {
    (1..p).find(|x| a * x % p == 1).unwrap()
}

fn oracle_add(p: u64, a: u64, s: P2, t: P2) -> P2 {
    let (Some((x1, y1)), Some((x2, y2))) = (s, t) else {
        return s.or(t);
    };
    let l = if x1 == x2 {
        if (y1 + y2) % p == 0 {
            return None;
        }
        (3 * x1 * x1 + a) % p * inv(2 * y1 % p, p) % p
    } else {
        (y2 + p - y1) % p * inv((x2 + p - x1) % p, p) % p
    };
    let x3 = (l * l % p + 2 * p - x1 - x2) % p;
    let y3 = (l * ((x1 + p - x3) % p) % p + p - y1) % p;
    Some((x3, y3))
}

fn oracle_points(p: u64, a: u64, b: u64) -> Vec<P2> {
    let mut out = vec![None];
    for x in 0..p {
        for y in 0..p {
            if y * y % p == (x * x % p * x + a * x + b) % p {
                out.push(Some((x, y)));
            }
        }
    }
    out
}

fn to_oracle(pt: &Point) -> P2 {
    match pt {
        Point::Identity => None,
        Point::Affine { x, y } => Some((x.as_prime().unwrap(), y.as_prime().unwrap())),
    }
}

/// Invariant factors from element orders: d2 is the exponent.
fn oracle_structure(orders: &[u64]) -> (u64, u64) {
    let n = orders.len() as u64;
    let exp = orders
        .iter()
        .fold(1u64, |acc, &o| tatekit::arith::lcm(acc, o));
    (n / exp, exp)
}

fn all_curves(p: u64) -> Vec<Curve> {
    let mut v = Vec::new();
    for a in 0..p {
        for b in 0..p {
            if let Ok(c) = Curve::new(p, a as i64, b as i64) {
                v.push(c);
            }
        }
    }
    v
}

#[test]
fn addition_matches_cayley_table_over_f7() {
    for e in all_curves(7) {
        let c = e.over(1).unwrap();
        let pts = c.points().unwrap();
        assert_eq!(pts.len() as u64, e.count_points().order);
        let listed: HashSet<P2> = pts.iter().map(to_oracle).collect();
        let oracle: HashSet<P2> = oracle_points(7, e.a(), e.b()).into_iter().collect();
        assert_eq!(listed, oracle);
        for s in &pts {
            for t in &pts {
                let got = to_oracle(&c.add(s, t));
                let want = oracle_add(7, e.a(), to_oracle(s), to_oracle(t));
                assert_eq!(got, want);
            }
        }
    }
}

#[test]
fn group_axioms_exhaustive_small_primes() {
    for p in [5u64, 7, 11, 13] {
        for e in all_curves(p).into_iter().step_by(3) {
            let c = e.over(1).unwrap();
            let pts = c.points().unwrap();
            for s in &pts {
                assert!(c.add(s, &c.neg(s)).is_identity());
                assert_eq!(c.add(s, &Point::Identity), *s);
                for t in &pts {
                    let st = c.add(s, t);
                    assert!(c.contains(&st));
                    assert_eq!(st, c.add(t, s));
                    for u in pts.iter().step_by(4) {
                        assert_eq!(c.add(&st, u), c.add(s, &c.add(t, u)));
                    }
                }
            }
        }
    }
}

#[test]
fn two_torsion_point_doubles_to_identity() {
    let e = Curve::new(5, 1, 0).unwrap();
    let c = e.over(1).unwrap();
    let f = c.field().clone();
    let o = c.point(f.zero(), f.zero()).unwrap();
    assert!(c.double(&o).is_identity());
}

#[test]
fn scalar_multiplication_matches_repeated_addition() {
    let e = Curve::new(101, 3, 7).unwrap();
    let c = e.over(3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..5 {
        let pt = c.random_point(&mut rng);
        let mut acc = Point::Identity;
        for k in 0..40i64 {
            assert_eq!(c.mul(&pt, k), acc);
            assert_eq!(c.mul(&pt, -k), c.neg(&acc));
            acc = c.add(&acc, &pt);
        }
        assert!(c.mul_big(&pt, c.order()).is_identity());
    }
}

#[test]
fn extension_orders_match_enumeration() {
    let e = Curve::new(5, 1, 0).unwrap();
    for k in 1..=3 {
        let c = e.over(k).unwrap();
        let n = c.points().unwrap().len();
        assert_eq!(order_over_extension(2, 5, k), BigUint::from(n));
    }
    assert_eq!(e.order_over(2), BigUint::from(32u32));
    for e in all_curves(7).into_iter().step_by(5) {
        let n = e.over(2).unwrap().points().unwrap().len();
        assert_eq!(e.order_over(2), BigUint::from(n));
    }
}

#[test]
fn group_structure_matches_element_orders() {
    let mut cases: Vec<(Curve, usize)> = Vec::new();
    for p in [5u64, 7, 11, 13] {
        cases.extend(all_curves(p).into_iter().map(|e| (e, 1)));
    }
    cases.extend(all_curves(5).into_iter().step_by(2).map(|e| (e, 2)));
    for (e, k) in cases {
        let c = e.over(k).unwrap();
        let pts = c.points().unwrap();
        let n = pts.len() as u64;
        let orders: Vec<u64> = pts.iter().map(|pt| c.point_order(pt, n)).collect();
        let (d1, d2) = c.group_structure().unwrap();
        assert_eq!((d1, d2), oracle_structure(&orders), "{e:?} over degree {k}");
        let q = e.p().pow(k as u32);
        assert_eq!(d2 % d1, 0);
        assert_eq!((q - 1) % d1, 0);
    }
    let (d1, d2) = Curve::new(5, 1, 0)
        .unwrap()
        .over(1)
        .unwrap()
        .group_structure()
        .unwrap();
    assert_eq!((d1, d2), (2, 2));
}

#[test]
fn prime_order_groups_are_cyclic() {
    for e in all_curves(13) {
        let n = e.count_points().order;
        if tatekit::arith::is_prime(n) {
            assert_eq!(e.over(1).unwrap().group_structure().unwrap(), (1, n));
        }
    }
}

#[test]
fn torsion_degree_small_levels() {
    for e in all_curves(11) {
        assert_eq!(e.full_torsion_degree(1, DEFAULT_DEGREE_CAP).unwrap(), 1);
        let roots = (0..11u64)
            .filter(|&x| (x * x * x + e.a() * x + e.b()) % 11 == 0)
            .count();
        let m = e.full_torsion_degree(2, DEFAULT_DEGREE_CAP).unwrap();
        assert_eq!(m == 1, roots == 3);
    }
    // y^2 = x^3 + x over F_5 at level 4, certified by the group structure
    let e = Curve::new(5, 1, 0).unwrap();
    let m = e.full_torsion_degree(4, DEFAULT_DEGREE_CAP).unwrap();
    for k in 1..=m {
        let (d1, d2) = e.over(k).unwrap().group_structure().unwrap();
        assert_eq!(d1 % 4 == 0 && d2 % 4 == 0, k == m, "degree {k}");
    }
}

#[test]
fn three_torsion_basis_matches_enumeration() {
    for e in all_curves(5) {
        let basis = e.torsion_basis(3, DEFAULT_DEGREE_CAP).unwrap();
        let c = basis.curve().clone();
        let f = c.field().clone();
        if f.size().unwrap() > 400_000 {
            continue;
        }
        // roots of the 3-division polynomial 3x^4 + 6Ax^2 + 12Bx - A^2
        let (a, b) = (f.from_u64(e.a()), f.from_u64(e.b()));
        let mut enumerated: HashSet<Point> = HashSet::from([Point::Identity]);
        for x in f.elements() {
            let x2 = f.square(&x);
            let mut v = f.scale(&f.square(&x2), 3);
            v = f.add(&v, &f.scale(&f.mul(&a, &x2), 6));
            v = f.add(&v, &f.scale(&f.mul(&b, &x), 12));
            v = f.sub(&v, &f.square(&a));
            if v.is_zero() {
                let y = f.sqrt(&c.rhs(&x)).expect("full 3-torsion is rational");
                enumerated.insert(Point::Affine {
                    x: x.clone(),
                    y: f.neg(&y),
                });
                enumerated.insert(Point::Affine { x, y });
            }
        }
        assert_eq!(enumerated.len(), 9, "{e:?}");
        let spanned: HashSet<Point> = basis.elements().into_iter().collect();
        assert_eq!(spanned, enumerated);
    }
}

#[test]
fn basis_coordinates_are_injective() {
    let e = Curve::new(13, 2, 5).unwrap();
    for n in 2..=12u64 {
        let Ok(basis) = e.torsion_basis(n, DEFAULT_DEGREE_CAP) else {
            continue;
        };
        let elems = basis.elements();
        let distinct: HashSet<&Point> = elems.iter().collect();
        assert_eq!(distinct.len() as u64, n * n, "level {n}");
        assert!(basis.curve().mul_u64(basis.p(), n).is_identity());
        for (idx, pt) in elems.iter().enumerate() {
            let (i, j) = (idx as u64 / n, idx as u64 % n);
            assert_eq!(basis.dlog(pt).unwrap(), [i, j]);
        }
    }
}

#[test]
fn transported_bases_stay_valid_across_isomorphism_class() {
    let e = all_curves(11)
        .into_iter()
        .find(|e| e.canonical().0 != *e)
        .unwrap();
    let basis = e.torsion_basis(5, DEFAULT_DEGREE_CAP).unwrap();
    let c = basis.curve();
    assert!(c.contains(basis.p()) && c.contains(basis.q()));
    assert_eq!(basis.elements().iter().collect::<HashSet<_>>().len(), 25);
}

#[test]
fn multiplication_images_of_torsion() {
    let e = Curve::new(13, 1, 2).unwrap();
    let m = e.full_torsion_degree(12, DEFAULT_DEGREE_CAP).unwrap();
    let c = e.over(m).unwrap();
    let basis = c.torsion_basis(12).unwrap();
    let rep = mult_image_of_torsion(&basis, 8);
    assert_eq!(rep.n1, 3);
    assert!(rep.equals_expected);
    assert_eq!(rep.image_order, 9);
    for n in 1..=12u64 {
        if 12 % n != 0 {
            continue;
        }
        let b = basis.reduce_to(n).unwrap();
        for r in 1..=12u64 {
            let rep = mult_image_of_torsion(&b, r);
            assert!(rep.equals_expected, "n={n} r={r}");
        }
        assert_eq!(mult_image_of_torsion(&b, 1).image_order, n * n);
        assert_eq!(mult_image_of_torsion(&b, n).image_order, 1);
    }
}

#[test]
fn preimage_examples() {
    let e = Curve::new(7, 3, 1).unwrap();
    let m = e.full_torsion_degree(6, DEFAULT_DEGREE_CAP).unwrap();
    let c = e.over(m).unwrap();
    let b6 = c.torsion_basis(6).unwrap();
    let b3 = b6.reduce_to(3).unwrap();
    // W = E[3], m = 2
    let rep = preimage_image_check(&b6, &b3.as_subgroup(), 2).unwrap();
    assert!(rep.passed());
    assert_eq!(rep.preimage_order, 36);
    // W = <P> of order 3
    let w = TorsionSubgroup::new(c.clone(), 3, vec![b3.p().clone()]);
    let rep = preimage_image_check(&b6, &w, 2).unwrap();
    assert!(rep.passed());
    assert_eq!(rep.preimage_order, 12);
    // W = {O}
    let b2 = c.torsion_basis(2).unwrap();
    let rep = preimage_image_check(&b2, &TorsionSubgroup::trivial(c.clone(), 1), 2).unwrap();
    assert!(rep.passed());
    assert_eq!(rep.preimage_order, 4);
}

#[test]
fn random_points_lie_on_curve_in_large_extensions() {
    let e = Curve::new(13, 1, 1).unwrap();
    let c = e.over(40).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut seen = HashMap::new();
    for _ in 0..4 {
        let pt = c.random_point(&mut rng);
        assert!(c.contains(&pt));
        assert!(c.mul_big(&pt, c.order()).is_identity());
        *seen.entry(pt).or_insert(0) += 1;
    }
    assert_eq!(ext_field(13, 40).unwrap().degree(), 40);
}

#[test]
fn weil_pairing_is_bilinear_alternating_and_primitive() {
    for (p, a, b) in [(7u64, 1i64, 3i64), (11, 1, 1), (13, 2, 5)] {
        let e = Curve::new(p, a, b).unwrap();
        for n in [2u64, 3, 4, 5] {
            if n % p == 0 {
                continue;
            }
            let Ok(basis) = e.torsion_basis(n, DEFAULT_DEGREE_CAP) else {
                continue;
            };
            let c = basis.curve().clone();
            let f = c.field().clone();
            let w = basis.weil_value().unwrap();
            let one = f.one();
            assert_eq!(f.pow_u64(&w, n), one);
            for d in 1..n {
                if n % d == 0 {
                    assert_ne!(f.pow_u64(&w, d), one, "e_{n} not primitive");
                }
            }
            // e(iP + jQ, kP + lQ) = w^(il - jk)
            for (i, j, k, l) in [(1u64, 1u64, 0u64, 1u64), (2, 1, 1, 1), (1, 0, 1, 2)] {
                let s = basis.combine(i % n, j % n);
                let t = basis.combine(k % n, l % n);
                let det = ((i * l + n * n) - j * k) % n;
                if det == 0 {
                    continue;
                }
                let v = c.weil_pairing(n, &s, &t).unwrap();
                assert_eq!(v, f.pow_u64(&w, det), "p={p} n={n}");
                let back = c.weil_pairing(n, &t, &s).unwrap();
                assert_eq!(f.mul(&v, &back), one);
            }
        }
    }
}
