use crate::arith::{gcd, lcm};
use crate::curve::{Curve, TorsionSubgroup};
use crate::error::Result;
use crate::galois::frobenius_matrix_from_basis;
use crate::linalg::Mat2;

/// Sublattices `d Z^2 ⊆ L ⊆ Z^2` of index `d^2 / order`, in Hermite form:
/// `L` is spanned by `(a, 0)` and `(b, c)` with `a, c | d`, `0 <= b < a`
/// and `a | b d / c`. These are exactly the subgroups of `(Z/d)^2` of the
/// given order.
pub fn subgroup_lattices(d: u64, order: u64) -> Vec<[u64; 3]> {
    let mut out = Vec::new();
    if d == 0 || !(d * d).is_multiple_of(order) {
        return out;
    }
    let index = d * d / order;
    for a in (1..=d).filter(|a| d.is_multiple_of(*a)) {
        if !index.is_multiple_of(a) {
            continue;
        }
        let c = index / a;
        if !d.is_multiple_of(c) {
            continue;
        }
        for b in 0..a {
            if (b * (d / c)).is_multiple_of(a) {
                out.push([a, b, c]);
            }
        }
    }
    out
}

fn in_lattice([a, b, c]: [u64; 3], d: u64, v: [u64; 2]) -> bool {
    let (x, y) = (v[0] % d, v[1] % d);
    if y % c != 0 {
        return false;
    }
    let t = (b as u128 * (y / c) as u128 % a as u128) as u64;
    (x + a - t % a).is_multiple_of(a)
}

fn vec_order(v: [u64; 2], d: u64) -> u64 {
    d / gcd(gcd(v[0] % d, v[1] % d), d)
}

/// Every Frobenius-stable subgroup of `E` of the given order, found as a
/// Frobenius-stable subgroup of `E[order]` in coordinates. With
/// `cyclic_only`, only cyclic ones.
pub fn stable_subgroups(
    e: &Curve,
    order: u64,
    cyclic_only: bool,
    cap: usize,
) -> Result<Vec<TorsionSubgroup>> {
    let d = order;
    if d == 1 {
        return Ok(vec![TorsionSubgroup::trivial(e.over(1)?, 1)]);
    }
    let basis = e.torsion_basis(d, cap)?;
    let f: Mat2 = frobenius_matrix_from_basis(&basis)?.matrix;
    let mut out = Vec::new();
    for lat in subgroup_lattices(d, order) {
        let [a, b, c] = lat;
        let g1 = [a % d, 0];
        let g2 = [b % d, c % d];
        if cyclic_only && lcm(vec_order(g1, d), vec_order(g2, d)) != order {
            continue;
        }
        if !in_lattice(lat, d, f.apply(g1)) || !in_lattice(lat, d, f.apply(g2)) {
            continue;
        }
        let gens = [g1, g2]
            .iter()
            .filter(|g| vec_order(**g, d) > 1)
            .map(|g| basis.combine(g[0], g[1]))
            .collect();
        out.push(TorsionSubgroup::new(basis.curve().clone(), d, gens));
    }
    Ok(out)
}

pub fn cyclic_kernels(e: &Curve, order: u64, cap: usize) -> Result<Vec<TorsionSubgroup>> {
    stable_subgroups(e, order, true, cap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn lattices_enumerate_subgroups() {
        // compare with closures of all generator pairs in (Z/d)^2
        for d in 1..=8u64 {
            let mut seen: HashSet<Vec<(u64, u64)>> = HashSet::new();
            for g in 0..d * d {
                for h in 0..d * d {
                    let (g, h) = ((g / d, g % d), (h / d, h % d));
                    let mut set: Vec<(u64, u64)> = (0..d)
                        .flat_map(|i| {
                            (0..d).map(move |j| ((i * g.0 + j * h.0) % d, (i * g.1 + j * h.1) % d))
                        })
                        .collect();
                    set.sort();
                    set.dedup();
                    seen.insert(set);
                }
            }
            let total: usize = (1..=d * d)
                .filter(|o| (d * d) % o == 0)
                .map(|o| subgroup_lattices(d, o).len())
                .sum();
            assert_eq!(total, seen.len(), "d={d}");
            for o in 1..=d * d {
                if (d * d) % o != 0 {
                    continue;
                }
                for lat in subgroup_lattices(d, o) {
                    let members = (0..d)
                        .flat_map(|x| (0..d).map(move |y| [x, y]))
                        .filter(|v| in_lattice(lat, d, *v))
                        .count() as u64;
                    assert_eq!(members, o);
                }
            }
        }
    }
}
