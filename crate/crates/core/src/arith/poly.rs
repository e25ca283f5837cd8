//! Dense univariate polynomials over `F_p`, coefficients stored lowest
//! degree first. The zero polynomial is the empty vector.

pub type Poly = Vec<u32>;

pub fn trim(a: &mut Poly) {
    while a.last() == Some(&0) {
        a.pop();
    }
}

pub fn degree(a: &[u32]) -> Option<usize> {
    a.iter().rposition(|&c| c != 0)
}

fn inv_mod(a: u64, p: u64) -> u64 {
    super::mod_inv(a as i64, p).expect("leading coefficient invertible")
}

pub fn add(a: &[u32], b: &[u32], p: u64) -> Poly {
    let n = a.len().max(b.len());
    let mut out: Poly = (0..n)
        .map(|i| {
            let x = *a.get(i).unwrap_or(&0) as u64 + *b.get(i).unwrap_or(&0) as u64;
            (x % p) as u32
        })
        .collect();
    trim(&mut out);
    out
}

pub fn sub(a: &[u32], b: &[u32], p: u64) -> Poly {
    let n = a.len().max(b.len());
    let mut out: Poly = (0..n)
        .map(|i| {
            let x = *a.get(i).unwrap_or(&0) as u64 + p - *b.get(i).unwrap_or(&0) as u64;
            (x % p) as u32
        })
        .collect();
    trim(&mut out);
    out
}

pub fn scale(a: &[u32], c: u64, p: u64) -> Poly {
    let mut out: Poly = a.iter().map(|&x| (x as u64 * c % p) as u32).collect();
    trim(&mut out);
    out
}

pub fn mul(a: &[u32], b: &[u32], p: u64) -> Poly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut acc = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            acc[i + j] += x as u64 * y as u64;
        }
        if i % 1024 == 1023 {
            acc.iter_mut().for_each(|c| *c %= p);
        }
    }
    let mut out: Poly = acc.into_iter().map(|c| (c % p) as u32).collect();
    trim(&mut out);
    out
}

/// Quotient and remainder of `a` by nonzero `b`.
pub fn divrem(a: &[u32], b: &[u32], p: u64) -> (Poly, Poly) {
    let db = degree(b).expect("division by the zero polynomial");
    let lead_inv = inv_mod(b[db] as u64, p);
    let mut r: Vec<u64> = a.iter().map(|&c| c as u64).collect();
    let Some(da) = degree(a) else {
        return (Vec::new(), Vec::new());
    };
    if da < db {
        let mut r: Poly = a.to_vec();
        trim(&mut r);
        return (Vec::new(), r);
    }
    let mut q = vec![0u32; da - db + 1];
    for i in (db..=da).rev() {
        let c = r[i] % p;
        if c == 0 {
            continue;
        }
        let f = c * lead_inv % p;
        q[i - db] = f as u32;
        for (j, &bj) in b[..=db].iter().enumerate() {
            r[i - db + j] = (r[i - db + j] + (p - f) * bj as u64) % p;
        }
    }
    let mut r: Poly = r.into_iter().take(db).map(|c| (c % p) as u32).collect();
    trim(&mut r);
    trim(&mut q);
    (q, r)
}

pub fn rem(a: &[u32], b: &[u32], p: u64) -> Poly {
    divrem(a, b, p).1
}

pub fn monic(a: &[u32], p: u64) -> Poly {
    match degree(a) {
        None => Vec::new(),
        Some(d) => scale(a, inv_mod(a[d] as u64, p), p),
    }
}

/// Monic greatest common divisor.
pub fn gcd(a: &[u32], b: &[u32], p: u64) -> Poly {
    let mut x: Poly = a.to_vec();
    let mut y: Poly = b.to_vec();
    trim(&mut x);
    trim(&mut y);
    while !y.is_empty() {
        let r = rem(&x, &y, p);
        x = y;
        y = r;
    }
    monic(&x, p)
}

/// Inverse of `a` modulo `m`, if `gcd(a, m) = 1`.
pub fn inverse_mod(a: &[u32], m: &[u32], p: u64) -> Option<Poly> {
    let mut r0: Poly = m.to_vec();
    let mut r1 = rem(a, m, p);
    let mut s0: Poly = Vec::new();
    let mut s1: Poly = vec![1];
    trim(&mut r0);
    while !r1.is_empty() {
        let (q, r) = divrem(&r0, &r1, p);
        let s = sub(&s0, &mul(&q, &s1, p), p);
        r0 = std::mem::replace(&mut r1, r);
        s0 = std::mem::replace(&mut s1, s);
    }
    if degree(&r0) != Some(0) {
        return None;
    }
    let c = inv_mod(r0[0] as u64, p);
    Some(rem(&scale(&s0, c, p), m, p))
}

pub fn mulmod(a: &[u32], b: &[u32], m: &[u32], p: u64) -> Poly {
    rem(&mul(a, b, p), m, p)
}

pub fn powmod(a: &[u32], mut e: u64, m: &[u32], p: u64) -> Poly {
    let mut base = rem(a, m, p);
    let mut acc: Poly = rem(&[1], m, p);
    while e > 0 {
        if e & 1 == 1 {
            acc = mulmod(&acc, &base, m, p);
        }
        base = mulmod(&base, &base, m, p);
        e >>= 1;
    }
    acc
}

pub fn derivative(a: &[u32], p: u64) -> Poly {
    let mut out: Poly = a
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &c)| ((i as u64 % p) * c as u64 % p) as u32)
        .collect();
    trim(&mut out);
    out
}

pub fn eval(a: &[u32], x: u64, p: u64) -> u64 {
    a.iter()
        .rev()
        .fold(0u64, |acc, &c| (acc * x + c as u64) % p)
}

/// Ben-Or irreducibility test for a monic polynomial of degree >= 1.
pub fn is_irreducible(f: &[u32], p: u64) -> bool {
    let Some(k) = degree(f) else {
        return false;
    };
    if k == 1 {
        return true;
    }
    // cheap rejection: a root in F_p
    if (0..p).any(|x| eval(f, x, p) == 0) {
        return false;
    }
    let x: Poly = vec![0, 1];
    let mut h = x.clone();
    for _ in 1..=k / 2 {
        h = powmod(&h, p, f, p);
        let g = gcd(&sub(&h, &x, p), f, p);
        if degree(&g) != Some(0) {
            return false;
        }
    }
    true
}
