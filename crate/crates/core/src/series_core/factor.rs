//! Polynomial factorization over ℚ and ℚ(i).
//!
//! Over ℤ: Cantor–Zassenhaus modulo a small prime, multifactor Hensel
//! lifting and subset recombination. Over ℚ(i): Trager's norm method on top
//! of the rational factorizer.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::field::FieldElem;
use super::gaussian::primes_up_to;
use super::poly::Polynomial;
use crate::error::{Error, Result};

/// `f = unit · Π factors[k].0 ^ factors[k].1` with monic irreducible factors,
/// sorted by degree then by canonical text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Factorization {
    pub unit: FieldElem,
    pub factors: Vec<(Polynomial, u32)>,
}

impl Factorization {
    pub fn expand(&self) -> Polynomial {
        let mut acc = Polynomial::constant(self.unit.clone());
        for (p, e) in &self.factors {
            acc = &acc * &p.pow(*e);
        }
        acc
    }

    fn sort(&mut self) {
        self.factors.sort_by(|a, b| a.0.deg().cmp(&b.0.deg()).then_with(|| a.0.key().cmp(&b.0.key())));
    }
}

/// Squarefree decomposition of a nonzero polynomial: monic pairwise coprime
/// parts `(s_k, k)` with `monic(f) = Π s_k^k`.
pub fn squarefree_decomposition(f: &Polynomial) -> Vec<(Polynomial, u32)> {
    let a = f.monic();
    if a.deg() == 0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut c = Polynomial::gcd(&a, &a.derivative());
    let mut w = a.exact_div(&c).expect("gcd divides");
    let mut k = 1u32;
    while c.deg() > 0 {
        let y = Polynomial::gcd(&w, &c);
        let z = w.exact_div(&y).expect("gcd divides");
        if z.deg() > 0 {
            out.push((z.monic(), k));
        }
        k += 1;
        c = c.exact_div(&y).expect("gcd divides");
        w = y;
    }
    if w.deg() > 0 {
        out.push((w.monic(), k));
    }
    out
}

/// Factorization over ℚ(i).
pub fn factor(f: &Polynomial) -> Result<Factorization> {
    if f.is_zero() {
        return Err(Error::InvalidParameter("cannot factor the zero polynomial".into()));
    }
    let mut out = Factorization {
        unit: f.lc(),
        factors: Vec::new(),
    };
    for (part, mult) in squarefree_decomposition(f) {
        let pieces = if part.is_real() {
            let mut v = Vec::new();
            for q in factor_squarefree_rational(&part)? {
                v.extend(trager(&q)?);
            }
            v
        } else {
            trager(&part)?
        };
        out.factors.extend(pieces.into_iter().map(|p| (p, mult)));
    }
    out.sort();
    Ok(out)
}

/// Factorization over ℚ of a polynomial with rational coefficients.
pub fn factor_rational(f: &Polynomial) -> Result<Factorization> {
    if !f.is_real() {
        return Err(Error::InvalidParameter("factor_rational needs rational coefficients".into()));
    }
    if f.is_zero() {
        return Err(Error::InvalidParameter("cannot factor the zero polynomial".into()));
    }
    let mut out = Factorization {
        unit: f.lc(),
        factors: Vec::new(),
    };
    for (part, mult) in squarefree_decomposition(f) {
        for q in factor_squarefree_rational(&part)? {
            out.factors.push((q, mult));
        }
    }
    out.sort();
    Ok(out)
}

/// Irreducible factors over ℚ(i) of a monic squarefree polynomial.
fn trager(g: &Polynomial) -> Result<Vec<Polynomial>> {
    if g.deg() <= 1 {
        return Ok(vec![g.monic()]);
    }
    for step in 0i64..64 {
        let s = if step % 2 == 0 { -(step / 2) } else { step / 2 + 1 };
        let shift = FieldElem::gaussian(0, s);
        let gs = g.substitute_shift(&-&shift);
        let norm = &gs * &gs.conj();
        if Polynomial::gcd(&norm, &norm.derivative()).deg() > 0 {
            continue;
        }
        let norm_factors = factor_squarefree_rational(&norm)?;
        if norm_factors.len() == 1 {
            return Ok(vec![g.monic()]);
        }
        let mut out = Vec::new();
        for nf in norm_factors {
            let h = Polynomial::gcd(&gs, &nf);
            if h.deg() > 0 {
                out.push(h.substitute_shift(&shift).monic());
            }
        }
        return Ok(out);
    }
    Err(Error::Invariant("no squarefree norm found within 64 shifts".into()))
}

/// Monic irreducible factors over ℚ of a squarefree rational polynomial.
fn factor_squarefree_rational(f: &Polynomial) -> Result<Vec<Polynomial>> {
    if f.deg() == 0 {
        return Ok(Vec::new());
    }
    if f.deg() == 1 {
        return Ok(vec![f.monic()]);
    }
    let z = to_primitive_integer(f);
    let mut out: Vec<Polynomial> = factor_squarefree_z(&z)?
        .into_iter()
        .map(|g| from_integer(&g).monic())
        .collect();
    out.sort_by(|a, b| a.deg().cmp(&b.deg()).then_with(|| a.key().cmp(&b.key())));
    Ok(out)
}

type ZPoly = Vec<BigInt>;

fn to_primitive_integer(f: &Polynomial) -> ZPoly {
    let den = f
        .coeffs()
        .iter()
        .fold(BigInt::one(), |acc, c| acc.lcm(c.re.denom()));
    let mut z: ZPoly = f
        .coeffs()
        .iter()
        .map(|c| (&c.re * BigRational::from_integer(den.clone())).to_integer())
        .collect();
    let content = z.iter().fold(BigInt::zero(), |acc, c| acc.gcd(c));
    for c in z.iter_mut() {
        *c /= &content;
    }
    if z.last().is_some_and(|c| c.is_negative()) {
        for c in z.iter_mut() {
            *c = -&*c;
        }
    }
    z
}

fn from_integer(z: &ZPoly) -> Polynomial {
    Polynomial::new(z.iter().map(|c| FieldElem::from_bigint(c.clone())).collect())
}

fn z_trim(mut a: ZPoly) -> ZPoly {
    while a.last().is_some_and(|c| c.is_zero()) {
        a.pop();
    }
    a
}

fn z_mul(a: &ZPoly, b: &ZPoly) -> ZPoly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    z_trim(out)
}

fn z_primitive(a: &ZPoly) -> ZPoly {
    let content = a.iter().fold(BigInt::zero(), |acc, c| acc.gcd(c));
    let mut out: ZPoly = a.iter().map(|c| c / &content).collect();
    if out.last().is_some_and(|c| c.is_negative()) {
        for c in out.iter_mut() {
            *c = -&*c;
        }
    }
    out
}

/// Exact quotient in ℤ[x], if `b` divides `a`.
fn z_exact_div(a: &ZPoly, b: &ZPoly) -> Option<ZPoly> {
    if b.len() > a.len() {
        return None;
    }
    let lc = b.last().unwrap();
    let mut rem = a.clone();
    let mut quot = vec![BigInt::zero(); a.len() - b.len() + 1];
    for k in (0..quot.len()).rev() {
        let top = &rem[k + b.len() - 1];
        if top.is_zero() {
            continue;
        }
        let (q, r) = top.div_rem(lc);
        if !r.is_zero() {
            return None;
        }
        for (j, d) in b.iter().enumerate() {
            rem[k + j] -= &q * d;
        }
        quot[k] = q;
    }
    rem.iter().all(|c| c.is_zero()).then(|| z_trim(quot))
}

fn sym_mod(c: &BigInt, m: &BigInt) -> BigInt {
    let r = c.mod_floor(m);
    if &r * 2 > *m {
        r - m
    } else {
        r
    }
}

fn modinv_big(a: &BigInt, m: &BigInt) -> BigInt {
    let e = a.mod_floor(m).extended_gcd(m);
    debug_assert!(e.gcd.is_one());
    e.x.mod_floor(m)
}

/// Arithmetic in 𝔽_p[x] for odd primes `p < 2³¹`.
mod zp {
    use num_bigint::BigInt;
    use num_traits::Zero;

    pub type P = Vec<u64>;

    pub fn trim(mut a: P) -> P {
        while a.last() == Some(&0) {
            a.pop();
        }
        a
    }

    pub fn inv(a: u64, p: u64) -> u64 {
        pow(a, p - 2, p)
    }

    pub fn pow(mut a: u64, mut e: u64, p: u64) -> u64 {
        let mut acc = 1u64;
        a %= p;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * a % p;
            }
            a = a * a % p;
            e >>= 1;
        }
        acc
    }

    pub fn sub(a: &P, b: &P, p: u64) -> P {
        let n = a.len().max(b.len());
        let mut out = vec![0; n];
        for (k, o) in out.iter_mut().enumerate() {
            let x = a.get(k).copied().unwrap_or(0);
            let y = b.get(k).copied().unwrap_or(0);
            *o = (x + p - y) % p;
        }
        trim(out)
    }

    pub fn add(a: &P, b: &P, p: u64) -> P {
        let n = a.len().max(b.len());
        let mut out = vec![0; n];
        for (k, o) in out.iter_mut().enumerate() {
            *o = (a.get(k).copied().unwrap_or(0) + b.get(k).copied().unwrap_or(0)) % p;
        }
        trim(out)
    }

    pub fn mul(a: &P, b: &P, p: u64) -> P {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let mut out = vec![0u64; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                out[i + j] = (out[i + j] + x * y) % p;
            }
        }
        trim(out)
    }

    pub fn divrem(a: &P, b: &P, p: u64) -> (P, P) {
        let db = b.len() - 1;
        if a.len() < b.len() {
            return (Vec::new(), a.clone());
        }
        let il = inv(b[db], p);
        let mut rem = a.clone();
        let mut quot = vec![0u64; a.len() - db];
        for k in (0..quot.len()).rev() {
            let c = rem[k + db] * il % p;
            if c == 0 {
                continue;
            }
            for (j, &d) in b.iter().enumerate() {
                rem[k + j] = (rem[k + j] + p - c * d % p) % p;
            }
            quot[k] = c;
        }
        rem.truncate(db);
        (trim(quot), trim(rem))
    }

    pub fn monic(a: &P, p: u64) -> P {
        match a.last() {
            None => Vec::new(),
            Some(&l) => {
                let il = inv(l, p);
                a.iter().map(|&c| c * il % p).collect()
            }
        }
    }

    pub fn gcd(a: &P, b: &P, p: u64) -> P {
        let (mut a, mut b) = (a.clone(), b.clone());
        while !b.is_empty() {
            let r = divrem(&a, &b, p).1;
            a = b;
            b = r;
        }
        monic(&a, p)
    }

    /// `(g, s, t)` with `s·a + t·b = g` monic.
    pub fn xgcd(a: &P, b: &P, p: u64) -> (P, P, P) {
        let (mut r0, mut r1) = (a.clone(), b.clone());
        let (mut s0, mut s1) = (vec![1u64], Vec::new());
        let (mut t0, mut t1) = (Vec::new(), vec![1u64]);
        while !r1.is_empty() {
            let (q, r) = divrem(&r0, &r1, p);
            r0 = std::mem::replace(&mut r1, r);
            let s = sub(&s0, &mul(&q, &s1, p), p);
            s0 = std::mem::replace(&mut s1, s);
            let t = sub(&t0, &mul(&q, &t1, p), p);
            t0 = std::mem::replace(&mut t1, t);
        }
        let il = inv(*r0.last().unwrap(), p);
        let sc = |v: &P| trim(v.iter().map(|&c| c * il % p).collect());
        (sc(&r0), sc(&s0), sc(&t0))
    }

    pub fn powmod(base: &P, e: &BigInt, m: &P, p: u64) -> P {
        let mut acc = vec![1u64];
        let mut b = divrem(base, m, p).1;
        if e.is_zero() {
            return divrem(&acc, m, p).1;
        }
        let bits = e.bits();
        for k in 0..bits {
            if e.bit(k) {
                acc = divrem(&mul(&acc, &b, p), m, p).1;
            }
            if k + 1 < bits {
                b = divrem(&mul(&b, &b, p), m, p).1;
            }
        }
        acc
    }

    pub fn derivative(a: &P, p: u64) -> P {
        trim(a.iter().enumerate().skip(1).map(|(k, &c)| (k as u64 % p) * c % p).collect())
    }
}

fn reduce_mod_p(f: &ZPoly, p: u64) -> zp::P {
    let pb = BigInt::from(p);
    zp::trim(f.iter().map(|c| c.mod_floor(&pb).to_u64().unwrap()).collect())
}

/// Distinct-degree then equal-degree factorization of a monic squarefree
/// polynomial over 𝔽_p.
fn factor_mod_p(f: &zp::P, p: u64, rng: &mut ChaCha8Rng) -> Vec<zp::P> {
    let x: zp::P = vec![0, 1];
    let mut rest = f.clone();
    let mut h = x.clone();
    let mut d = 1usize;
    let mut out = Vec::new();
    let pb = BigInt::from(p);
    while rest.len() > 2 * d {
        h = zp::powmod(&h, &pb, &rest, p);
        let g = zp::gcd(&zp::sub(&h, &x, p), &rest, p);
        if g.len() > 1 {
            equal_degree(&g, d, p, rng, &mut out);
            rest = zp::divrem(&rest, &g, p).0;
            h = zp::divrem(&h, &rest, p).1;
        }
        d += 1;
    }
    if rest.len() > 1 {
        out.push(zp::monic(&rest, p));
    }
    out
}

fn equal_degree(g: &zp::P, d: usize, p: u64, rng: &mut ChaCha8Rng, out: &mut Vec<zp::P>) {
    let n = g.len() - 1;
    if n == d {
        out.push(zp::monic(g, p));
        return;
    }
    let e = (BigInt::from(p).pow(d as u32) - 1u32) / 2u32;
    loop {
        let a: zp::P = zp::trim((0..n).map(|_| rng.gen_range(0..p)).collect());
        if a.len() < 2 {
            continue;
        }
        let b = zp::sub(&zp::powmod(&a, &e, g, p), &vec![1], p);
        let h = zp::gcd(&b, g, p);
        if h.len() > 1 && h.len() < g.len() {
            let other = zp::divrem(g, &h, p).0;
            equal_degree(&h, d, p, rng, out);
            equal_degree(&other, d, p, rng, out);
            return;
        }
    }
}

fn zp_to_z(a: &zp::P) -> ZPoly {
    a.iter().map(|&c| BigInt::from(c)).collect()
}

/// Lifts `f ≡ G₀·H₀ (mod p)` with `G₀` monic to `f ≡ G·H (mod m)`.
fn hensel_pair(f: &ZPoly, g0: &zp::P, h0: &zp::P, p: u64, m: &BigInt) -> (ZPoly, ZPoly) {
    let pb = BigInt::from(p);
    let (_, s, t) = zp::xgcd(g0, h0, p);
    let mut g = zp_to_z(g0);
    let mut h = zp_to_z(h0);
    let hd = h.len() - 1;
    h[hd] = f.last().unwrap().mod_floor(m);
    let mut cur = pb.clone();
    while &cur < m {
        let gh = z_mul(&g, &h);
        let n = f.len().max(gh.len());
        let mut e: ZPoly = (0..n)
            .map(|k| {
                let a = f.get(k).cloned().unwrap_or_default();
                let b = gh.get(k).cloned().unwrap_or_default();
                (a - b).mod_floor(m)
            })
            .collect();
        for c in e.iter_mut() {
            debug_assert!((&*c % &cur).is_zero());
            *c = (&*c / &cur).mod_floor(&pb);
        }
        let e = reduce_mod_p(&e, p);
        let te = zp::mul(&t, &e, p);
        let (q, r) = zp::divrem(&te, g0, p);
        let dh = zp::add(&zp::mul(&s, &e, p), &zp::mul(&q, h0, p), p);
        for (k, c) in r.iter().enumerate() {
            g[k] = (&g[k] + &cur * c).mod_floor(m);
        }
        for (k, c) in dh.iter().enumerate() {
            if k < h.len() {
                h[k] = (&h[k] + &cur * c).mod_floor(m);
            }
        }
        cur *= &pb;
    }
    (g, h)
}

fn lift_all(f: &ZPoly, facs: &[zp::P], p: u64, m: &BigInt) -> Vec<ZPoly> {
    if facs.len() == 1 {
        let il = modinv_big(f.last().unwrap(), m);
        return vec![f.iter().map(|c| (c * &il).mod_floor(m)).collect()];
    }
    let mid = facs.len() / 2;
    let g0 = facs[..mid]
        .iter()
        .fold(vec![1u64], |acc, q| zp::mul(&acc, q, p));
    let fp = reduce_mod_p(f, p);
    let h0 = zp::divrem(&fp, &g0, p).0;
    let (g, h) = hensel_pair(f, &g0, &h0, p, m);
    let mut out = lift_all(&g, &facs[..mid], p, m);
    out.extend(lift_all(&h, &facs[mid..], p, m));
    out
}

fn next_subset(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Irreducible factors over ℤ of a squarefree primitive polynomial with
/// positive leading coefficient.
fn factor_squarefree_z(f: &ZPoly) -> Result<Vec<ZPoly>> {
    let n = f.len() - 1;
    if n <= 1 {
        return Ok(vec![f.clone()]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let lc = f.last().unwrap().clone();
    let mut best: Option<(u64, Vec<zp::P>)> = None;
    let mut tried = 0;
    for p in primes_up_to(1 << 12).into_iter().skip(1) {
        if (&lc % p).is_zero() {
            continue;
        }
        let fp = reduce_mod_p(f, p);
        if zp::gcd(&fp, &zp::derivative(&fp, p), p).len() > 1 {
            continue;
        }
        let facs = factor_mod_p(&zp::monic(&fp, p), p, &mut rng);
        if facs.len() == 1 {
            return Ok(vec![f.clone()]);
        }
        if best.as_ref().is_none_or(|b| facs.len() < b.1.len()) {
            best = Some((p, facs));
        }
        tried += 1;
        if tried == 5 {
            break;
        }
    }
    let (p, facs) = best.ok_or_else(|| Error::Invariant("no good reduction prime found".into()))?;

    let maxc = f.iter().map(|c| c.abs()).max().unwrap();
    let bound = BigInt::from(2).pow(n as u32) * BigInt::from(n + 1) * maxc * &lc * 2;
    let pb = BigInt::from(p);
    let mut m = pb.clone();
    while m <= bound {
        m *= &pb;
    }
    let mut lifted = lift_all(f, &facs, p, &m);

    let mut rest = f.clone();
    let mut out = Vec::new();
    let mut s = 1;
    while 2 * s <= lifted.len() {
        let mut idx: Vec<usize> = (0..s).collect();
        let mut found = false;
        loop {
            let lc_rest = rest.last().unwrap().clone();
            let mut g: ZPoly = vec![lc_rest];
            for &i in &idx {
                g = z_mul(&g, &lifted[i]).iter().map(|c| c.mod_floor(&m)).collect();
            }
            let g = z_primitive(&z_trim(g.iter().map(|c| sym_mod(c, &m)).collect()));
            if let Some(q) = z_exact_div(&rest, &g) {
                out.push(g);
                rest = q;
                for &i in idx.iter().rev() {
                    lifted.remove(i);
                }
                found = true;
                break;
            }
            if !next_subset(&mut idx, lifted.len()) {
                break;
            }
        }
        if !found {
            s += 1;
        }
    }
    if rest.len() > 1 {
        out.push(z_primitive(&rest));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(s: &str) -> Polynomial {
        super::super::parse::parse_polynomial(s, "x").unwrap()
    }

    fn names(f: &Factorization) -> Vec<(String, u32)> {
        f.factors.iter().map(|(p, e)| (p.to_string(), *e)).collect()
    }

    #[test]
    fn squarefree_parts() {
        let f = poly("(x-1)^3*(x+2)^2*(x-5)");
        let parts = squarefree_decomposition(&f);
        assert_eq!(parts.len(), 3);
        assert_eq!(parts[2], (poly("x-1"), 3));
    }

    #[test]
    fn over_rationals() {
        let f = poly("(x^2+1)*(x^2-2)*(3*x+1)^2*(x^4+x+1)");
        let fac = factor_rational(&f).unwrap();
        assert_eq!(fac.expand(), f);
        assert_eq!(fac.factors.len(), 4);
        let swinnerton_dyer = poly("x^4-10*x^2+1");
        assert_eq!(factor_rational(&swinnerton_dyer).unwrap().factors.len(), 1);
    }

    #[test]
    fn over_gaussian_rationals() {
        let f = poly("x^2+1");
        let fac = factor(&f).unwrap();
        assert_eq!(names(&fac), vec![("x+i".into(), 1), ("x-i".into(), 1)]);
        let g = poly("(x-2*i)^2*(x^2+x+1)*(x-1/2)");
        let fac = factor(&g).unwrap();
        assert_eq!(fac.expand(), g);
        assert_eq!(fac.factors.len(), 3);
        let h = poly("x^4+4");
        let fac = factor(&h).unwrap();
        assert_eq!(fac.factors.len(), 4);
        assert_eq!(fac.expand(), h);
    }
}
