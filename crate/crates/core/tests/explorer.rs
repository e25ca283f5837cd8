use std::collections::HashSet;

use tatekit::arith::gcd;
use tatekit::curve::{Curve, DEFAULT_DEGREE_CAP};
use tatekit::explorer::{
    candidate_pairs, certificate_composite, enumerate_curves, find_twin_pair,
    infinite_levels_imply_isogeny_check, tested_levels, twin_search, verify_certificate,
    verify_coprime_isogeny, TwinParams,
};
use tatekit::isogeny::{coprime_iso_check, TorsionMap};
use tatekit::Error;

const CAP: usize = DEFAULT_DEGREE_CAP;

fn singular_pairs(p: u64) -> u64 {
    let mut n = 0;
    for a in 0..p {
        for b in 0..p {
            if (4 * a * a % p * a + 27 * b * b).is_multiple_of(p) {
                n += 1;
            }
        }
    }
    n
}

/// Affine points plus infinity, by brute force over `F_p`.
fn brute_count(p: u64, a: u64, b: u64) -> u64 {
    let mut n = 1;
    for x in 0..p {
        for y in 0..p {
            if (y * y) % p == (x * x % p * x + a * x + b) % p {
                n += 1;
            }
        }
    }
    n
}

#[test]
fn curves_over_five() {
    let classes = enumerate_curves(5).unwrap();
    let total: usize = classes.iter().map(|c| c.total_curves()).sum();
    assert_eq!(total as u64, 25 - singular_pairs(5));
    assert_eq!(total, 20);
    for c in &classes {
        assert!(c.trace.abs() <= 4);
        assert!(c.trace * c.trace <= 4 * 5);
    }
}

#[test]
fn enumeration_partitions_the_curves() {
    for p in [5u64, 7, 11, 13] {
        let classes = enumerate_curves(p).unwrap();
        let total: usize = classes.iter().map(|c| c.total_curves()).sum();
        assert_eq!(total as u64, p * p - singular_pairs(p), "p={p}");
        let mut ids = HashSet::new();
        for c in &classes {
            assert_eq!(c.ordinary, c.trace % p as i64 != 0);
            for (i, rep) in c.curves.iter().enumerate() {
                assert!(ids.insert(rep.class_id));
                assert_eq!(p as i64 + 1 - brute_count(p, rep.a, rep.b) as i64, c.trace);
                // representatives pairwise non-isomorphic
                for other in &c.curves[i + 1..] {
                    let e = Curve::new(p, rep.a as i64, rep.b as i64).unwrap();
                    let e2 = Curve::new(p, other.a as i64, other.b as i64).unwrap();
                    assert!(!e.is_isomorphic(&e2));
                }
            }
        }
    }
}

#[test]
fn explorer_preconditions() {
    assert!(matches!(enumerate_curves(3), Err(Error::Precondition(_))));
    assert!(matches!(enumerate_curves(9), Err(Error::Precondition(_))));
    assert!(matches!(enumerate_curves(2003), Err(Error::CapExceeded { .. })));
}

#[test]
fn no_twins_over_five() {
    let s = twin_search(5, &TwinParams::default()).unwrap();
    assert!(s.certificate.is_none());
    assert_eq!(s.rejections.len(), s.candidates);
    assert_eq!(find_twin_pair(5, 32, 3).unwrap(), None);
}

#[test]
fn candidate_pairs_have_distinct_j_and_equal_trace() {
    for p in [7u64, 11, 13] {
        for (e, e2) in candidate_pairs(p).unwrap() {
            assert_ne!(e.j_invariant(), e2.j_invariant());
            assert_eq!(e.trace(), e2.trace());
            assert!(e.is_ordinary());
        }
    }
}

#[test]
fn twin_certificate_over_seven() {
    let cert = find_twin_pair(7, 32, 3).unwrap().expect("a pair over F_7");
    // frozen from the exhaustive search
    assert_eq!((cert.curves[0].a, cert.curves[0].b), (1, 4));
    assert_eq!((cert.curves[1].a, cert.curves[1].b), (3, 4));
    assert_eq!(cert.trace, -2);
    assert_ne!(cert.curves[0].j, cert.curves[1].j);
    assert_eq!(
        cert.levels.iter().map(|l| l.modulus).collect::<Vec<_>>(),
        tested_levels(7, 32)
    );
    assert_eq!(cert.isogenies[0].ell, 2);
    assert_eq!(cert.isogenies[0].degree % 2, 1);
    for k in ["1", "2", "3"] {
        let g = cert.group_structures[k];
        assert_eq!(g[0], g[1]);
    }
    // the unit root solves T^2 + 2T + 7 modulo 7^3
    let u = cert.p_part.unit_root as i64;
    assert_eq!((u * u + 2 * u + 7) % 343, 0);
    assert_ne!(u % 7, 0);
    let v = verify_certificate(&cert, &TwinParams::default()).unwrap();
    assert!(v.passed(), "{:?}", v.failures);
}

#[test]
fn certificate_json_is_deterministic_and_round_trips() {
    let a = find_twin_pair(7, 32, 3).unwrap().unwrap().to_json();
    let b = find_twin_pair(7, 32, 3).unwrap().unwrap().to_json();
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    for key in ["p", "curves", "trace", "levels", "p_part", "isogenies", "group_structures"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    for key in ["modulus", "frobenius", "witness"] {
        assert!(v["levels"][0].get(key).is_some());
    }
    for key in ["ell", "degree", "kernel"] {
        assert!(v["isogenies"][0].get(key).is_some());
    }
    for key in ["precision", "unit_root"] {
        assert!(v["p_part"].get(key).is_some());
    }
    let back: tatekit::explorer::TwinCertificate = serde_json::from_str(&a).unwrap();
    assert_eq!(back.to_json(), a);
}

#[test]
fn tampered_certificates_fail_verification() {
    let params = TwinParams::default();
    let cert = find_twin_pair(7, 32, 3).unwrap().unwrap();

    let mut bad = cert.clone();
    bad.levels[1].witness[0][0] += 1;
    assert!(!verify_certificate(&bad, &params).unwrap().passed());

    let mut bad = cert.clone();
    bad.isogenies[0].kernel[0] = (bad.isogenies[0].kernel[0] + 1) % 7;
    assert!(!verify_certificate(&bad, &params).unwrap().passed());

    let mut bad = cert.clone();
    bad.p_part.unit_root = (bad.p_part.unit_root + 49) % 343;
    assert!(!verify_certificate(&bad, &params).unwrap().passed());

    let mut bad = cert.clone();
    bad.group_structures.get_mut("2").unwrap()[1] = [1, 1];
    assert!(!verify_certificate(&bad, &params).unwrap().passed());

    let mut bad = cert;
    bad.levels.pop();
    assert!(!verify_certificate(&bad, &params).unwrap().passed());
}

#[test]
fn every_certified_pair_has_equal_group_structures() {
    let params = TwinParams {
        level_bound: 16,
        ..TwinParams::default()
    };
    for p in [7u64, 11, 13] {
        let cert = twin_search(p, &params).unwrap().certificate.unwrap();
        let (e, e2) = (cert.domain().unwrap(), cert.codomain().unwrap());
        for k in 1..=3 {
            assert_eq!(e.order_over(k), e2.order_over(k));
            let g1 = e.over(k).unwrap().group_structure().unwrap();
            let g2 = e2.over(k).unwrap().group_structure().unwrap();
            assert_eq!(g1, g2, "p={p} k={k}");
        }
        assert!(verify_certificate(&cert, &params).unwrap().passed());
    }
}

#[test]
fn coprime_isogeny_search() {
    let e = Curve::new(7, 1, 4).unwrap();
    let phi = verify_coprime_isogeny(&e, &e, 2, 12, CAP).unwrap();
    assert_eq!(phi.degree(), 1);
    let e2 = Curve::new(7, 3, 4).unwrap();
    let phi = verify_coprime_isogeny(&e, &e2, 2, 12, CAP).unwrap();
    assert_eq!(phi.degree() % 2, 1);
    assert_eq!(phi.codomain(), &e2);
    let r = coprime_iso_check(&phi, 2, CAP).unwrap();
    assert!(r.invertible && r.holds);
    // the only odd degree below 2 is 1, and the curves are not isomorphic
    assert!(matches!(
        verify_coprime_isogeny(&e, &e2, 2, 2, CAP),
        Err(Error::NotFound(_))
    ));
    let other = Curve::new(7, 0, 1).unwrap();
    assert!(matches!(
        verify_coprime_isogeny(&e, &other, 2, 12, CAP),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn per_prime_isogenies_combine_for_210() {
    let cert = find_twin_pair(11, 32, 3).unwrap().unwrap();
    let r = certificate_composite(&cert, 210, CAP).unwrap();
    let deg = r.element.map_degree().unwrap();
    assert_eq!(deg as u128, r.degree.degree);
    assert_eq!(gcd(deg, 210), 1);
    assert!(r.checks.iter().all(|c| c.invertible && c.holds));
}

#[test]
fn level_scans() {
    let e = Curve::new(7, 1, 4).unwrap();
    let s = infinite_levels_imply_isogeny_check(&e, &e, 20, CAP).unwrap();
    let all: Vec<u64> = (2..=20).filter(|n| n % 7 != 0).collect();
    assert_eq!(s.isomorphic_levels, all);
    assert!(s.consistent && s.forcing_level.is_some());

    let e2 = Curve::new(7, 3, 4).unwrap();
    let s = infinite_levels_imply_isogeny_check(&e, &e2, 20, CAP).unwrap();
    assert_eq!(s.traces[0], s.traces[1]);
    assert!(s.consistent);

    // different traces: no isomorphic level beyond |a - a'|
    for (a, b) in [(0i64, 1i64), (0, 2), (1, 1), (0, 5)] {
        let f = Curve::new(7, a, b).unwrap();
        if f.trace() == e.trace() {
            continue;
        }
        let s = infinite_levels_imply_isogeny_check(&e, &f, 20, CAP).unwrap();
        let gap = (s.traces[0] - s.traces[1]).unsigned_abs();
        assert!(s.isomorphic_levels.iter().all(|&n| n <= gap), "{:?}", s);
        assert!(s.forcing_level.is_none());
        assert!(s.consistent);
    }
}
