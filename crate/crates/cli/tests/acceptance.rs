//! Acceptance suite: one PASS/FAIL line per criterion. Expected values are
//! recomputed here by independent oracles (dense series arithmetic, direct
//! products, pointwise evaluation, and eliminations with a different pivot
//! order or over a prime field).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use difftk::criteria::{decide_certificate, shift_divisor, verify_certificate, Certificate, Decision, Verification};
use difftk::operators::{Case, Operator, OperatorPair, Role};
use difftk::relation_finder::{
    find_relation, sigma_dimension_profile, sigma_probe, FnSource, RelationOutcome, RelationPolynomial, RelationQuery,
    SeriesSource,
};
use difftk::series_core::{Expansion, FieldElem, Polynomial, RationalFunction, TruncatedPuiseux};
use difftk::special_functions::{
    basic_hypergeometric, mahler_power_sum, q_factorial, q_pochhammer, thue_morse_product, NamedSeries,
};
use difftk::systems::{residual_check, solve_order1, Residual};
use difftk::Error;
use difftk_cli::{cmd_independence, Command, ExperimentConfig};

const SEED: u64 = 20261018;

struct Outcome {
    pass: bool,
    detail: String,
    /// Deterministic transcript of everything computed.
    report: String,
}

// ---------------------------------------------------------------- oracles

type Dense = Vec<FieldElem>;

fn fe(n: i64) -> FieldElem {
    FieldElem::from_int(n)
}

fn zero() -> FieldElem {
    FieldElem::zero()
}

/// `(d·re, d·im)` over the lcm `d` of all denominators.
fn dense_integral(a: &[FieldElem]) -> (Vec<(BigInt, BigInt)>, BigInt) {
    let mut d = BigInt::one();
    for c in a {
        d = d.lcm(c.re.denom()).lcm(c.im.denom());
    }
    let lift = |r: &BigRational| r.numer() * (&d / r.denom());
    (a.iter().map(|c| (lift(&c.re), lift(&c.im))).collect(), d)
}

/// Schoolbook product over ℤ[i] after clearing denominators.
fn dense_mul(a: &Dense, b: &Dense, n: usize) -> Dense {
    let (ai, da) = dense_integral(a);
    let (bi, db) = dense_integral(b);
    let mut re = vec![BigInt::zero(); n];
    let mut im = vec![BigInt::zero(); n];
    for (i, (ar, aim)) in ai.iter().enumerate().take(n) {
        if ar.is_zero() && aim.is_zero() {
            continue;
        }
        for (j, (br, bim)) in bi.iter().enumerate().take(n - i) {
            re[i + j] += ar * br - aim * bim;
            im[i + j] += ar * bim + aim * br;
        }
    }
    let d = da * db;
    re.into_iter()
        .zip(im)
        .map(|(r, i)| FieldElem::new(BigRational::new(r, d.clone()), BigRational::new(i, d.clone())))
        .collect()
}

fn dense_one(n: usize) -> Dense {
    let mut v = vec![zero(); n];
    v[0] = FieldElem::one();
    v
}

fn dense_pow(a: &Dense, e: u32, n: usize) -> Dense {
    (0..e).fold(dense_one(n), |acc, _| dense_mul(&acc, a, n))
}

/// `a(x^p)`.
fn dense_mahler(a: &Dense, p: usize, n: usize) -> Dense {
    let mut c = vec![zero(); n];
    for (i, x) in a.iter().enumerate() {
        if i * p < n {
            c[i * p] = x.clone();
        }
    }
    c
}

fn dense_shift_up(a: &Dense, k: usize, n: usize) -> Dense {
    let mut c = vec![zero(); n];
    let m = n.saturating_sub(k);
    c[k.min(n)..].clone_from_slice(&a[..m]);
    c
}

fn dense_poly_times(p: &Polynomial, a: &Dense, n: usize) -> Dense {
    let mut c = vec![zero(); n];
    for (k, pk) in p.coeffs().iter().enumerate() {
        if pk.is_zero() || k >= n {
            continue;
        }
        for i in 0..n - k {
            c[i + k] = &c[i + k] + &(pk * &a[i]);
        }
    }
    c
}

fn oracle_power_sum(p: u64, n: usize) -> Dense {
    let mut v = vec![zero(); n];
    let mut k = 1u64;
    while (k as usize) < n {
        v[k as usize] = FieldElem::one();
        k *= p;
    }
    v
}

/// `∏(1 − x^{pᵏ})`: nonzero exactly on base-p digits in {0, 1}.
fn oracle_thue_morse(p: u64, n: usize) -> Dense {
    (0..n as u64)
        .map(|mut m| {
            let mut ones = 0;
            while m > 0 {
                match m % p {
                    0 => {}
                    1 => ones += 1,
                    _ => return zero(),
                }
                m /= p;
            }
            fe(if ones % 2 == 0 { 1 } else { -1 })
        })
        .collect()
}

/// Coefficients straight from the defining sum, `r + 1` upper parameters.
fn oracle_hypergeometric(alphas: &[FieldElem], betas: &[FieldElem], q: &FieldElem, n: usize) -> Dense {
    let one = FieldElem::one();
    let qp: Vec<FieldElem> = (0..=n as u64).map(|i| q.pow_u(i)).collect();
    // prefix products (a; q)_m for m < n
    let poch = |a: &FieldElem| -> Dense {
        let mut v = vec![one.clone()];
        for i in 0..n.saturating_sub(1) {
            let next = v.last().unwrap() * &(&one - &(a * &qp[i]));
            v.push(next);
        }
        v
    };
    let mut qfact = vec![one.clone()];
    for i in 1..n {
        let t = (&one - &qp[i]).checked_div(&(&one - q)).unwrap();
        let next = qfact.last().unwrap() * &t;
        qfact.push(next);
    }
    let ups: Vec<Dense> = alphas.iter().map(poch).collect();
    let downs: Vec<Dense> = betas.iter().map(poch).collect();
    let e = betas.len() as i64 + 1 - alphas.len() as i64;
    (0..n)
        .map(|m| {
            let mut c = one.clone();
            for u in &ups {
                c = &c * &u[m];
            }
            for d in &downs {
                c = c.checked_div(&d[m]).unwrap();
            }
            let sign = if m % 2 == 0 { one.clone() } else { -&one };
            let tw = (&sign * &q.pow_u((m * m.saturating_sub(1) / 2) as u64)).pow(e).unwrap();
            (&c * &tw).checked_div(&qfact[m]).unwrap()
        })
        .collect()
}

fn to_dense(s: &TruncatedPuiseux, n: usize) -> Dense {
    assert_eq!(s.ramification(), 1);
    (0..n as i64).map(|i| s.coeff_at(i)).collect()
}

/// Evaluates a relation on dense series.
fn oracle_eval_relation(rel: &RelationPolynomial, ys: &[Dense], n: usize) -> Dense {
    let top = rel.terms.iter().flat_map(|(alpha, _)| alpha.iter().copied()).max().unwrap_or(0);
    let powers: Vec<Vec<Dense>> = ys
        .iter()
        .map(|y| {
            let mut ps = vec![dense_one(n)];
            for _ in 0..top {
                let next = dense_mul(ps.last().unwrap(), y, n);
                ps.push(next);
            }
            ps
        })
        .collect();
    let mut acc = vec![zero(); n];
    for (alpha, p) in &rel.terms {
        let mut m = dense_one(n);
        for (ps, e) in powers.iter().zip(alpha) {
            if *e > 0 {
                m = dense_mul(&m, &ps[*e as usize], n);
            }
        }
        let t = dense_poly_times(p, &m, n);
        for (a, b) in acc.iter_mut().zip(&t) {
            *a = &*a + b;
        }
    }
    acc
}

/// Incremental elimination over ℚ(i) pivoting on the last nonzero row;
/// `true` marks columns dependent on their predecessors.
fn oracle_dependent_columns(cols: &[Dense]) -> Vec<bool> {
    let mut basis: Vec<(usize, Dense)> = Vec::new();
    cols.iter()
        .map(|c| {
            let mut v = c.clone();
            for (piv, b) in &basis {
                if v[*piv].is_zero() {
                    continue;
                }
                let f = v[*piv].checked_div(&b[*piv]).unwrap();
                for (x, y) in v.iter_mut().zip(b) {
                    if !y.is_zero() {
                        *x = &*x - &(&f * y);
                    }
                }
            }
            match v.iter().rposition(|x| !x.is_zero()) {
                Some(piv) => {
                    basis.push((piv, v));
                    false
                }
                None => true,
            }
        })
        .collect()
}

const PRIME: u64 = (1 << 61) - 1;

fn mod_prime(c: &FieldElem) -> u64 {
    let r = c.as_rational().expect("real entries");
    let p = BigInt::from(PRIME);
    let num = ((r.numer() % &p) + &p) % &p;
    let den = ((r.denom() % &p) + &p) % &p;
    let inv = den.modpow(&(&p - 2u32), &p);
    ((num * inv) % &p).to_u64().unwrap()
}

fn mulmod(a: u64, b: u64) -> u64 {
    ((a as u128 * b as u128) % PRIME as u128) as u64
}

/// Rank over `𝔽_p`; full rank there certifies full rank over ℚ.
fn oracle_rank_mod_p(cols: &[Dense]) -> usize {
    let mut m: Vec<Vec<u64>> = cols.iter().map(|c| c.iter().map(mod_prime).collect()).collect();
    let rows = m.first().map_or(0, |c| c.len());
    let mut rank = 0;
    for r in 0..rows {
        let Some(pc) = (rank..m.len()).find(|&j| m[j][r] != 0) else {
            continue;
        };
        m.swap(rank, pc);
        let inv = {
            let p = BigInt::from(PRIME);
            BigInt::from(m[rank][r]).modpow(&(&p - 2u32), &p).to_u64().unwrap()
        };
        for j in rank + 1..m.len() {
            if m[j][r] == 0 {
                continue;
            }
            let f = mulmod(m[j][r], inv);
            let (head, tail) = m.split_at_mut(j);
            for (x, y) in tail[0].iter_mut().zip(&head[rank]) {
                *x = (*x + PRIME - mulmod(f, *y)) % PRIME;
            }
        }
        rank += 1;
        if rank == m.len() {
            break;
        }
    }
    rank
}

/// `x^k·Y^α` columns with `α` in graded order.
fn oracle_columns(ys: &[Dense], alphas: &[Vec<u32>], dx: u32, n: usize) -> Vec<Dense> {
    let mut out = Vec::new();
    for alpha in alphas {
        let mut m = dense_one(n);
        for (y, e) in ys.iter().zip(alpha) {
            m = dense_mul(&m, &dense_pow(y, *e, n), n);
        }
        for k in 0..=dx {
            out.push(dense_shift_up(&m, k as usize, n));
        }
    }
    out
}

fn oracle_monomials(m: usize, d: u32, homogeneous: bool) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let total = (d as usize + 1).pow(m as u32);
    for code in 0..total {
        let mut c = code;
        let a: Vec<u32> = (0..m)
            .map(|_| {
                let e = (c % (d as usize + 1)) as u32;
                c /= d as usize + 1;
                e
            })
            .collect();
        let s: u32 = a.iter().sum();
        if s <= d && (!homogeneous || s == d) {
            out.push(a);
        }
    }
    out.sort_by(|a, b| a.iter().sum::<u32>().cmp(&b.iter().sum::<u32>()).then_with(|| a.cmp(b)));
    out
}

// ---------------------------------------------------------------- sampling

fn rand_rat(rng: &mut ChaCha8Rng, max: i64) -> FieldElem {
    FieldElem::from_ratio(rng.gen_range(-max..=max), rng.gen_range(1..=3))
}

fn rand_nonzero(rng: &mut ChaCha8Rng, max: i64, gaussian: bool) -> FieldElem {
    loop {
        let re = rand_rat(rng, max);
        let c = if gaussian && rng.gen_bool(0.5) {
            &re + &(&rand_rat(rng, max) * &FieldElem::i())
        } else {
            re
        };
        if !c.is_zero() {
            return c;
        }
    }
}

fn rand_poly(rng: &mut ChaCha8Rng, deg: usize, gaussian: bool) -> Polynomial {
    loop {
        let coeffs: Vec<FieldElem> = (0..=deg)
            .map(|_| {
                if rng.gen_bool(0.7) {
                    rand_nonzero(rng, 4, gaussian)
                } else {
                    zero()
                }
            })
            .collect();
        let p = Polynomial::new(coeffs);
        if !p.is_zero() {
            return p;
        }
    }
}

fn rand_ratfunc(rng: &mut ChaCha8Rng, deg: usize, gaussian: bool) -> RationalFunction {
    let dn = rng.gen_range(0..=deg);
    let num = rand_poly(rng, dn, gaussian);
    let dd = rng.gen_range(0..=deg);
    let den = rand_poly(rng, dd, gaussian);
    RationalFunction::new(num, den).unwrap()
}

fn sample_points() -> Vec<FieldElem> {
    ["2/3", "5/7", "-3/4", "3+i", "1/2-2*i", "7/5", "-11/3+i/2"]
        .iter()
        .map(|s| s.parse().unwrap())
        .collect()
}

// ---------------------------------------------------------------- criteria

fn criterion_1() -> Outcome {
    let cfg = ExperimentConfig::new(Command::Independence)
        .with_pair(Case::Mahler, "2", "3")
        .with_inputs(["power_sum:2", "power_sum:3"]);
    let cfg = ExperimentConfig {
        bounds: difftk_cli::BoundsConfig {
            d: 4,
            dx: 8,
            n: 300,
            ..cfg.bounds
        },
        ..cfg
    };
    let t0 = Instant::now();
    let rep = cmd_independence(&cfg).expect("pipeline runs");
    let elapsed = t0.elapsed();
    let n = 300;
    let f = oracle_power_sum(2, n);
    let g = oracle_power_sum(3, n);
    let cols = oracle_columns(&[f, g], &oracle_monomials(2, 4, false), 8, n);
    let rank = oracle_rank_mod_p(&cols);
    let pass = rep.verdict == "no_relation_at_bound" && rank == cols.len() && elapsed < Duration::from_secs(120);
    Outcome {
        pass,
        detail: format!(
            "verdict {}, oracle rank mod p {rank}/{} columns, {} ms",
            rep.verdict,
            cols.len(),
            elapsed.as_millis()
        ),
        report: rep.render(),
    }
}

enum Base {
    PowerSum(u64),
    ThueMorse(u64),
    Phi(FieldElem),
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 2);
    let n = 60i64;
    let q = fe(2);
    let mut report = String::new();
    let mut failures = 0;
    for case in 0..50 {
        let base = match rng.gen_range(0..5) {
            0 => Base::PowerSum(2),
            1 => Base::PowerSum(3),
            2 => Base::ThueMorse(2),
            3 => Base::ThueMorse(3),
            _ => Base::Phi(rand_nonzero(&mut rng, 5, true)),
        };
        let named: NamedSeries = match &base {
            Base::PowerSum(p) => mahler_power_sum(*p, n).unwrap(),
            Base::ThueMorse(p) => thue_morse_product(*p, n).unwrap(),
            Base::Phi(a) => basic_hypergeometric(std::slice::from_ref(a), &[], &q, n).unwrap(),
        };
        let deg = rng.gen_range(1..=3usize);
        let coeffs: Vec<Polynomial> = (0..=deg)
            .map(|k| {
                if k == deg {
                    Polynomial::constant(rand_nonzero(&mut rng, 4, false))
                } else {
                    rand_poly(&mut rng, 1, true)
                }
            })
            .collect();
        let gen_coeffs = coeffs.clone();
        let gen_named = named.clone();
        let g = FnSource {
            label: "planted".into(),
            generate: move |order: i64| {
                let f = gen_named.expand(order)?;
                let mut acc = TruncatedPuiseux::zero(order);
                for c in gen_coeffs.iter().rev() {
                    let cs = TruncatedPuiseux::from_rational(&RationalFunction::from_poly(c.clone()), order);
                    acc = acc.mul(&f).add(&cs);
                }
                Ok(acc)
            },
        };
        let out = find_relation(&[&named, &g], &RelationQuery::new(3, 1, n)).unwrap();
        let ok = match &out {
            RelationOutcome::Relation(r) => {
                let m = 2 * n as usize;
                let f = match &base {
                    Base::PowerSum(p) => oracle_power_sum(*p, m),
                    Base::ThueMorse(p) => oracle_thue_morse(*p, m),
                    Base::Phi(a) => oracle_hypergeometric(std::slice::from_ref(a), &[], &q, m),
                };
                let mut gd = vec![zero(); m];
                for c in coeffs.iter().rev() {
                    gd = dense_mul(&gd, &f, m);
                    gd = (0..m).map(|i| &gd[i] + &c.coeff(i)).collect();
                }
                let res = oracle_eval_relation(&r.polynomial, &[f, gd], m);
                r.verified_order == 2 * n && r.extended && res.iter().all(|c| c.is_zero())
            }
            _ => false,
        };
        if !ok {
            failures += 1;
        }
        let shown = match &out {
            RelationOutcome::Relation(r) => r.polynomial.to_string(),
            other => format!("{other:?}"),
        };
        writeln!(report, "{case}: {} ok={ok} {shown}", named.provenance).unwrap();
    }
    Outcome {
        pass: failures == 0,
        detail: format!("{} of 50 planted relations recovered and verified at 2N", 50 - failures),
        report,
    }
}

fn criterion_3() -> Outcome {
    let n = 400i64;
    let f = mahler_power_sum(2, n).unwrap();
    let q = RelationQuery::linear(5, n);
    let p3 = OperatorPair::mahler(2, 3).unwrap();
    let none = sigma_probe(&f, &p3, 2, &q, None).unwrap();
    let p2 = OperatorPair::mahler(3, 2).unwrap();
    let found = sigma_probe(&f, &p2, 2, &q, None).unwrap();

    let nu = n as usize;
    let fd = oracle_power_sum(2, nu);
    let twists3: Vec<Dense> = [1, 3, 9].iter().map(|p| dense_mahler(&fd, *p, nu)).collect();
    let alphas = oracle_monomials(3, 1, true);
    let cols3 = oracle_columns(&twists3, &alphas, 5, nu);
    let rank3 = oracle_rank_mod_p(&cols3);

    let expected: BTreeMap<Vec<u32>, Polynomial> = [
        (vec![1, 0, 0], Polynomial::x()),
        (vec![0, 1, 0], Polynomial::from_ints(&[-1, -1])),
        (vec![0, 0, 1], Polynomial::one()),
    ]
    .into_iter()
    .collect();
    let found_ok = match &found {
        RelationOutcome::Relation(r) => {
            let m = 2 * nu;
            let fd = oracle_power_sum(2, m);
            let tw: Vec<Dense> = [1, 2, 4].iter().map(|p| dense_mahler(&fd, *p, m)).collect();
            let got: BTreeMap<Vec<u32>, Polynomial> = r.polynomial.terms.iter().cloned().collect();
            got == expected && oracle_eval_relation(&r.polynomial, &tw, m).iter().all(|c| c.is_zero())
        }
        _ => false,
    };
    let none_ok = matches!(none, RelationOutcome::NoRelationAtBound(_)) && rank3 == cols3.len();
    let shown = |o: &RelationOutcome| match o {
        RelationOutcome::Relation(r) => r.polynomial.to_string(),
        other => format!("{other:?}"),
    };
    Outcome {
        pass: none_ok && found_ok,
        detail: format!(
            "3-Mahler: {} (oracle rank {rank3}/{}); 2-Mahler: {}",
            shown(&none),
            cols3.len(),
            shown(&found)
        ),
        report: format!("{}\n{}\n{rank3}\n", shown(&none), shown(&found)),
    }
}

/// `a(x₀) = c·x₀ⁿ·b(op(x₀))/b(x₀)` at sample points, with `x₀ = t₀^j`.
fn oracle_certificate(a: &RationalFunction, cert: &Certificate, op: &Operator) -> bool {
    let j = cert.b.ramification;
    let mut checked = 0;
    for t0 in sample_points() {
        let x0 = t0.pow_u(j);
        let t1 = match op {
            Operator::Shift(h) => {
                assert_eq!(j, 1);
                &t0 + h
            }
            Operator::Scale(q) => {
                assert_eq!(j, 1);
                q * &t0
            }
            Operator::Mahler(p) => t0.pow_u(*p),
        };
        let (Ok(av), Ok(b0), Ok(b1)) = (a.eval(&x0), cert.b.func.eval(&t0), cert.b.func.eval(&t1)) else {
            continue;
        };
        if b0.is_zero() {
            continue;
        }
        let jn = &cert.n * num_rational::BigRational::from_integer(BigInt::from(j));
        assert!(jn.is_integer());
        let xn = t0.pow(jn.to_integer().to_i64().unwrap()).unwrap();
        let rhs = (&(&cert.c * &xn) * &b1).checked_div(&b0).unwrap();
        if av != rhs {
            return false;
        }
        checked += 1;
    }
    checked >= 3
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 4);
    let pairs = [
        (Case::Shift, vec![OperatorPair::shift(fe(1), FieldElem::i()).unwrap()]),
        (
            Case::QScale,
            vec![
                OperatorPair::q_scale(fe(2), fe(3)).unwrap(),
                OperatorPair::q_scale("(3+4*i)/5".parse().unwrap(), fe(2)).unwrap(),
            ],
        ),
        (Case::Mahler, vec![OperatorPair::mahler(2, 3).unwrap(), OperatorPair::mahler(3, 2).unwrap()]),
    ];
    let mut report = String::new();
    let mut pass = true;
    let mut details = Vec::new();
    for (case, ps) in &pairs {
        let (mut certs, mut inconclusive, mut bad) = (0, 0, 0);
        for k in 0..100 {
            let pair = &ps[k % ps.len()];
            let op = pair.phi().clone();
            let b = rand_ratfunc(&mut rng, 2, true);
            let c = rand_nonzero(&mut rng, 5, true);
            let n = if *case == Case::QScale { rng.gen_range(-2..=2) } else { 0 };
            let a = &(&op.apply_rational(&b) / &b) * &RationalFunction::x_pow(n).scale(&c);
            let d = decide_certificate(&a, pair, Role::Phi).unwrap();
            match &d {
                Decision::Certificate { certificate } => {
                    let v = verify_certificate(&a, certificate, pair, Role::Phi).unwrap();
                    if matches!(v, Verification::Valid) && oracle_certificate(&a, certificate, &op) {
                        certs += 1;
                    } else {
                        bad += 1;
                    }
                }
                Decision::Inconclusive { .. } => inconclusive += 1,
                Decision::NoCertificate { .. } => bad += 1,
            }
            writeln!(report, "{case} {k}: a = {a} -> {}", serde_json::to_string(&d).unwrap()).unwrap();
        }
        let ok = match case {
            Case::QScale => certs >= 95 && certs + inconclusive == 100 && bad == 0,
            _ => certs == 100,
        };
        pass &= ok;
        details.push(format!("{case} {certs}/100 (inconclusive {inconclusive})"));
    }
    Outcome {
        pass,
        detail: details.join(", "),
        report,
    }
}

/// Root classes modulo `h·ℤ` of a product of linear factors.
fn oracle_divisor(roots: &[(FieldElem, i64)], h: &FieldElem) -> Vec<(FieldElem, i64)> {
    let mut classes: Vec<(FieldElem, i64)> = Vec::new();
    for (r, m) in roots {
        match classes
            .iter_mut()
            .find(|(s, _)| (r - s).checked_div(h).unwrap().as_integer().is_some())
        {
            Some(c) => c.1 += m,
            None => classes.push((r.clone(), *m)),
        }
    }
    classes.retain(|(_, m)| *m != 0);
    classes
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 5);
    let hs: Vec<FieldElem> = vec![fe(1), FieldElem::from_ratio(1, 2), FieldElem::i()];
    let mut report = String::new();
    let mut failures = 0;
    for k in 0..200 {
        let h = &hs[k % hs.len()];
        let mut roots = Vec::new();
        let build = |rng: &mut ChaCha8Rng, roots: &mut Vec<(FieldElem, i64)>| {
            let mut f = RationalFunction::from_int(1);
            for _ in 0..rng.gen_range(1..=4) {
                // roots clustered so that classes collide
                let r = &FieldElem::from_ratio(rng.gen_range(-3..=3), rng.gen_range(1..=2))
                    + &(&FieldElem::i() * &fe(rng.gen_range(-1..=1)));
                let m = if rng.gen_bool(0.5) { 1 } else { -1 };
                let lin = RationalFunction::from_poly(Polynomial::new(vec![-&r, FieldElem::one()]));
                f = if m > 0 { &f * &lin } else { &f / &lin };
                roots.push((r, m));
            }
            if rng.gen_bool(0.3) {
                f = &f * &"x^2+2".parse().unwrap();
            }
            f
        };
        let f = build(&mut rng, &mut roots);
        let g = build(&mut rng, &mut roots);
        let df = shift_divisor(&f, h).unwrap();
        let dg = shift_divisor(&g, h).unwrap();
        let dfg = shift_divisor(&(&f * &g), h).unwrap();
        let b = rand_ratfunc(&mut rng, 3, true);
        let phi_b = &b.substitute_shift(h) / &b;
        let law = dfg == df.add(&dg) && shift_divisor(&phi_b, h).unwrap().is_zero();
        // linear classes of f·g against the brute grouping of its roots
        let brute = oracle_divisor(&roots, h);
        let linear: Vec<_> = dfg
            .classes
            .iter()
            .filter(|c| c.multiplicity != 0 && c.class_rep.deg() == 1)
            .collect();
        let oracle_ok = linear.len() == brute.len()
            && linear.iter().all(|c| {
                let s = (-&c.class_rep.coeff(0)).checked_div(&c.class_rep.coeff(1)).unwrap();
                brute.iter().any(|(r, m)| {
                    *m == c.multiplicity && (&s - r).checked_div(h).unwrap().as_integer().is_some()
                })
            });
        if !(law && oracle_ok) {
            failures += 1;
        }
        writeln!(report, "{k}: h={h} f={f} g={g} law={law} oracle={oracle_ok}").unwrap();
    }
    Outcome {
        pass: failures == 0,
        detail: format!("{} of 200 instances satisfy both laws and the brute grouping", 200 - failures),
        report,
    }
}

fn point_image(op: &Operator, x0: &FieldElem) -> FieldElem {
    match op {
        Operator::Shift(h) => x0 + h,
        Operator::Scale(q) => q * x0,
        Operator::Mahler(p) => x0.pow_u(*p),
    }
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 6);
    let pairs = [
        OperatorPair::shift(FieldElem::from_ratio(1, 2), FieldElem::i()).unwrap(),
        OperatorPair::q_scale(fe(2), "1/3+i".parse().unwrap()).unwrap(),
        OperatorPair::mahler(2, 3).unwrap(),
    ];
    let points = sample_points();
    let mut failures = 0;
    let mut report = String::new();
    for k in 0..1000 {
        let pair = &pairs[k % 3];
        let (phi, sigma) = (pair.phi(), pair.sigma());
        let f = rand_ratfunc(&mut rng, 3, true);
        let g = rand_ratfunc(&mut rng, 3, true);
        let commute = phi.apply_rational(&sigma.apply_rational(&f)) == sigma.apply_rational(&phi.apply_rational(&f));
        let mult = phi.apply_rational(&(&f * &g)) == &phi.apply_rational(&f) * &phi.apply_rational(&g);
        let add = phi.apply_rational(&(&f + &g)) == &phi.apply_rational(&f) + &phi.apply_rational(&g);
        let inverse = match phi {
            Operator::Shift(h) => Operator::Shift(-h).apply_rational(&phi.apply_rational(&f)) == f,
            Operator::Scale(q) => Operator::Scale(q.inv().unwrap()).apply_rational(&phi.apply_rational(&f)) == f,
            Operator::Mahler(_) => true,
        };
        let x0 = &points[k % points.len()];
        let pointwise = match (phi.apply_rational(&f).eval(x0), f.eval(&point_image(phi, x0))) {
            (Ok(u), Ok(v)) => u == v,
            (Err(_), Err(_)) => true,
            _ => false,
        };
        let ok = commute && mult && add && inverse && pointwise;
        if !ok {
            failures += 1;
            writeln!(report, "{k}: f={f} g={g} fails").unwrap();
        }
    }
    writeln!(report, "failures {failures}").unwrap();
    Outcome {
        pass: failures == 0,
        detail: format!("{} of 1000 instances satisfy every law", 1000 - failures),
        report,
    }
}

/// `(q^n − a₀)·y_n = b_n + Σ_{j≥1} a_j·y_{n−j}`; the first `n` where the
/// left factor vanishes with a nonzero right side is the resonance.
fn oracle_q_recursion(q: &FieldElem, a: &Polynomial, b: &Polynomial, n: usize) -> Result<Dense, usize> {
    let mut y: Dense = Vec::with_capacity(n);
    for m in 0..n {
        let mut rhs = b.coeff(m);
        for j in 1..=m {
            rhs = &rhs + &(&a.coeff(j) * &y[m - j]);
        }
        let lhs = &q.pow_u(m as u64) - &a.coeff(0);
        if lhs.is_zero() {
            if !rhs.is_zero() {
                return Err(m);
            }
            y.push(zero());
        } else {
            y.push(rhs.checked_div(&lhs).unwrap());
        }
    }
    Ok(y)
}

/// Coefficients of `r` at exponents `lo..hi` of the local variable (`x` at
/// zero, `t = 1/x` at infinity), by naive long division.
fn oracle_laurent(r: &RationalFunction, at_infinity: bool, lo: i64, hi: i64) -> Vec<FieldElem> {
    if r.is_zero() {
        return vec![zero(); (hi - lo) as usize];
    }
    let (mut num, mut den, mut s) = (r.num().coeffs().to_vec(), r.den().coeffs().to_vec(), 0i64);
    if at_infinity {
        s = den.len() as i64 - num.len() as i64;
        num.reverse();
        den.reverse();
    }
    let on = num.iter().position(|c| !c.is_zero()).unwrap();
    let od = den.iter().position(|c| !c.is_zero()).unwrap();
    s += on as i64 - od as i64;
    let (num, den) = (&num[on..], &den[od..]);
    let len = (hi - s).max(0) as usize;
    let mut ser: Vec<FieldElem> = Vec::with_capacity(len);
    for j in 0..len {
        let mut acc = num.get(j).cloned().unwrap_or_else(zero);
        for k in 1..=j.min(den.len() - 1) {
            acc = &acc - &(&den[k] * &ser[j - k]);
        }
        ser.push(acc.checked_div(&den[0]).unwrap());
    }
    (lo..hi)
        .map(|m| if m >= s { ser[(m - s) as usize].clone() } else { zero() })
        .collect()
}

/// Lowest exponent and coefficient of `r` at the locus.
fn oracle_lead(r: &RationalFunction, at_infinity: bool) -> (i64, FieldElem) {
    let w = oracle_laurent(r, at_infinity, -40, 40);
    let k = w.iter().position(|c| !c.is_zero()).unwrap();
    (k as i64 - 40, w[k].clone())
}

/// A reported resonance at `e` for `φ(y) = a·y + b` is genuine: `e` is a
/// root of the indicial coefficient of `L = φ − a`, and the dense linear
/// system for a Laurent solution of valuation near `e` is inconsistent.
fn oracle_resonance(op: &Operator, a: &RationalFunction, b: &RationalFunction, e: i64) -> bool {
    let at_inf = matches!(op, Operator::Shift(_));
    let (va, lead) = oracle_lead(a, at_inf);
    let indicial = match op {
        Operator::Scale(q) => va == 0 && q.pow(e).unwrap() == lead,
        Operator::Shift(h) => {
            let beta = oracle_laurent(a, true, 1, 2).remove(0);
            va == 0 && lead == fe(1) && &fe(e) * h == -&beta
        }
        Operator::Mahler(_) => false,
    };
    if !indicial || b.is_zero() {
        return false;
    }
    let vb = oracle_lead(b, at_inf).0;
    let (lo, hi) = (e.min(vb) - 4, e + 12);
    let n = (hi - lo) as usize;
    let a_ser = oracle_laurent(a, at_inf, 0, n as i64);
    let mut cols: Vec<Dense> = (lo..hi)
        .map(|k| {
            let mut col = vec![zero(); n];
            let at = |m: i64| (m - lo) as usize;
            match op {
                Operator::Scale(q) => col[at(k)] = q.pow(k).unwrap(),
                Operator::Shift(h) => {
                    // t^k·(1 + h·t)^{−k}
                    let mut c = fe(1);
                    for j in 0..hi - k {
                        col[at(k + j)] = c.clone();
                        c = &(&c * &(&fe(-k - j) * h)) / &fe(j + 1);
                    }
                }
                Operator::Mahler(_) => unreachable!(),
            }
            for j in 0..(hi - k) as usize {
                col[at(k) + j] = &col[at(k) + j] - &a_ser[j];
            }
            col
        })
        .collect();
    cols.push(oracle_laurent(b, at_inf, lo, hi));
    !*oracle_dependent_columns(&cols).last().unwrap()
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 7);
    let order = 16i64;
    let pairs = [
        (Case::Shift, OperatorPair::shift(fe(1), FieldElem::i()).unwrap()),
        (Case::QScale, OperatorPair::q_scale(fe(2), fe(3)).unwrap()),
        (Case::Mahler, OperatorPair::mahler(2, 3).unwrap()),
    ];
    let mut report = String::new();
    // controls: y(2x) = 2y + 3x is obstructed at 1, y(2x) = 2y + 3x² is not
    let q2 = Operator::Scale(fe(2));
    let rf = |s: &str| s.parse::<RationalFunction>().unwrap();
    let controls = oracle_resonance(&q2, &rf("2"), &rf("3*x"), 1) && !oracle_resonance(&q2, &rf("2"), &rf("3*x^2"), 1);
    writeln!(report, "resonance oracle controls {controls}").unwrap();
    let mut pass = controls;
    let mut details = Vec::new();
    for (case, pair) in &pairs {
        let (mut solved, mut refused, mut bad, mut resonances) = (0, 0, 0, 0);
        for k in 0..200 {
            let resonance_probe = *case == Case::QScale && k % 3 == 0;
            let (a, b) = if resonance_probe {
                let e = rng.gen_range(0..=4u32);
                let tail = rand_poly(&mut rng, 2, true).shift_up(1);
                let a = (&Polynomial::one() + &tail).scale(&fe(2).pow_u(e as u64));
                let b = Polynomial::new(
                    (0..8)
                        .map(|_| if rng.gen_bool(0.6) { rand_nonzero(&mut rng, 4, true) } else { zero() })
                        .collect(),
                );
                (RationalFunction::from_poly(a), RationalFunction::from_poly(b))
            } else {
                let a = match case {
                    // integer indicial exponent at infinity
                    Case::Shift if rng.gen_bool(0.5) => {
                        let r = FieldElem::from_ratio(rng.gen_range(-3..=3), rng.gen_range(1..=2));
                        let s = &r + &fe(rng.gen_range(-2..=2));
                        let lin = |c: &FieldElem| RationalFunction::from_poly(Polynomial::new(vec![c.clone(), fe(1)]));
                        (&lin(&s) / &lin(&r)).scale(&rand_nonzero(&mut rng, 3, true))
                    }
                    _ => rand_ratfunc(&mut rng, 2, true),
                };
                let b = if rng.gen_bool(0.5) {
                    RationalFunction::zero()
                } else {
                    rand_ratfunc(&mut rng, 2, true)
                };
                (a, b)
            };
            let out = solve_order1(&a, &b, pair, Role::Phi, order);
            let line = match &out {
                Ok(sol) => {
                    let r = residual_check(&sol.equation, &sol.series, None).unwrap();
                    let mut ok = r.is_zero();
                    if resonance_probe {
                        let oracle = oracle_q_recursion(&fe(2), a.num(), b.num(), order as usize);
                        ok &= match (&oracle, &sol.series) {
                            (Ok(y), Expansion::AtZero(s)) => to_dense(s, order as usize) == *y,
                            _ => false,
                        };
                    }
                    if ok {
                        solved += 1;
                    } else {
                        bad += 1;
                    }
                    format!("solved ok={ok}")
                }
                Err(Error::Resonance { exponent }) => {
                    resonances += 1;
                    let ok = if resonance_probe {
                        oracle_q_recursion(&fe(2), a.num(), b.num(), order as usize)
                            .err()
                            .is_some_and(|m| *exponent == BigRational::from_integer(m.into()))
                    } else {
                        exponent.is_integer()
                            && oracle_resonance(pair.phi(), &a, &b, exponent.to_integer().to_i64().unwrap())
                    };
                    if !ok {
                        bad += 1;
                    }
                    format!("resonance {exponent} ok={ok}")
                }
                Err(Error::NoFormalSolution(_)) if !resonance_probe => {
                    refused += 1;
                    "no formal solution".into()
                }
                Err(e) => {
                    bad += 1;
                    format!("error {e}")
                }
            };
            writeln!(report, "{case} {k}: a={a} b={b} {line}").unwrap();
        }
        pass &= bad == 0 && solved >= 100;
        details.push(format!(
            "{case} solved {solved}, resonance {resonances}, no formal solution {refused}, failures {bad}"
        ));
    }
    Outcome {
        pass,
        detail: details.join("; "),
        report,
    }
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 8);
    let one = FieldElem::one();
    let mut failures = 0;
    let mut report = String::new();
    for k in 0..100 {
        let a = rand_nonzero(&mut rng, 5, true);
        let q = loop {
            let q = rand_nonzero(&mut rng, 5, true);
            if !q.is_root_of_unity() {
                break q;
            }
        };
        let n = rng.gen_range(0..12u64);
        let direct = (0..n).fold(one.clone(), |acc, i| &acc * &(&one - &(&a * &q.pow_u(i))));
        let rec = &q_pochhammer(&a, &q, n) * &(&one - &(&a * &q.pow_u(n)));
        let ok_rec = q_pochhammer(&a, &q, n) == direct && q_pochhammer(&a, &q, n + 1) == rec;
        let lhs = q_factorial(n, &q).unwrap();
        let rhs = q_pochhammer(&q, &q, n).checked_div(&(&one - &q).pow_u(n)).unwrap();
        let ok = ok_rec && lhs == rhs;
        if !ok {
            failures += 1;
        }
        writeln!(report, "{k}: a={a} q={q} n={n} ok={ok}").unwrap();
    }
    let n = 200usize;
    let mut phi_ok = true;
    for q in [fe(2), FieldElem::from_ratio(1, 3)] {
        let (alphas, betas) = (vec![q.clone(), q.pow_u(2)], vec![q.pow_u(3)]);
        let f = basic_hypergeometric(&alphas, &betas, &q, n as i64).unwrap();
        let r = residual_check(&f.equation, &Expansion::AtZero(f.series.clone()), None).unwrap();
        let oracle = oracle_hypergeometric(&alphas, &betas, &q, n);
        // residual straight from the equation's coefficients on oracle data
        let mut direct_zero = true;
        for m in 0..n {
            let mut s = zero();
            for (k, c) in f.equation.coeffs.iter().enumerate() {
                assert!(c.is_polynomial());
                for (j, cj) in c.num().coeffs().iter().enumerate() {
                    if j <= m {
                        s = &s + &(&(cj * &q.pow_u((k * (m - j)) as u64)) * &oracle[m - j]);
                    }
                }
            }
            direct_zero &= s == f.equation.rhs.num().coeff(m);
        }
        let ok = matches!(r, Residual::Zero { .. }) && to_dense(&f.series, n) == oracle && direct_zero;
        writeln!(report, "2phi1 q={q}: residual {r:?} oracle agreement {ok}").unwrap();
        phi_ok &= ok;
    }
    Outcome {
        pass: failures == 0 && phi_ok,
        detail: format!("{} of 100 identity checks; 2phi1 residual zero to N=200: {phi_ok}", 100 - failures),
        report,
    }
}

/// Profile by the oracle elimination, with stage-prefix column order.
fn oracle_profile(twists: &[Dense], d: u32, dx: u32, n: usize) -> Vec<u64> {
    let m = twists.len();
    let stage = |a: &Vec<u32>| a.iter().rposition(|e| *e > 0).unwrap_or(0);
    let mut alphas = oracle_monomials(m, d, false);
    alphas.sort_by_key(|a| stage(a));
    let cols = oracle_columns(twists, &alphas, dx, n);
    let dep = oracle_dependent_columns(&cols);
    let block_dep: Vec<bool> = dep.chunks(dx as usize + 1).map(|c| c.iter().any(|x| *x)).collect();
    (0..m)
        .map(|i| {
            alphas
                .iter()
                .zip(&block_dep)
                .filter(|(a, dep)| stage(a) <= i && !**dep)
                .count() as u64
        })
        .collect()
}

fn criterion_9() -> Outcome {
    let mut report = String::new();
    // Mahler power sum under x -> x^3
    let n = 250usize;
    let f = mahler_power_sum(2, n as i64).unwrap();
    let pair = OperatorPair::mahler(2, 3).unwrap();
    let q = RelationQuery::new(2, 2, n as i64);
    let prof = sigma_dimension_profile(&f, &pair, 3, &q, None).unwrap();
    let fd = oracle_power_sum(2, n);
    let tw: Vec<Dense> = [1, 3, 9, 27].iter().map(|p| dense_mahler(&fd, *p, n)).collect();
    let oracle = oracle_profile(&tw, 2, 2, n);
    let mahler_ok = prof.is_strictly_increasing() && prof.d == oracle;
    writeln!(report, "power sum under x^3: {:?} oracle {:?}", prof.d, oracle).unwrap();

    // rational inputs under q-scaling and shifts
    let mut rational_ok = true;
    // 15 monomials × 3 x-powers = 45 columns need ≥ 57 rows
    let nr = 60usize;
    let qpair = OperatorPair::q_scale(fe(2), fe(3)).unwrap();
    let r: RationalFunction = "(1+2*x)/(1-x)".parse().unwrap();
    let rs = TruncatedPuiseux::from_rational(&r, nr as i64);
    let prof_q = sigma_dimension_profile(&rs, &qpair, 3, &RelationQuery::new(2, 2, nr as i64), None).unwrap();
    let base = {
        // (1 + 2x)/(1 − x) = 1 + 3x + 3x² + …
        let mut v = vec![fe(3); nr];
        v[0] = fe(1);
        v
    };
    let twq: Vec<Dense> = (0..4u64)
        .map(|i| base.iter().enumerate().map(|(k, c)| c * &fe(3).pow_u(i * k as u64)).collect())
        .collect();
    let oracle_q = oracle_profile(&twq, 2, 2, nr);
    let eventually = |d: &[u64]| d.windows(2).last().is_some_and(|w| w[0] == w[1]);
    rational_ok &= prof_q.d == oracle_q && eventually(&prof_q.d);
    writeln!(report, "rational under q: {:?} oracle {:?}", prof_q.d, oracle_q).unwrap();

    let spair = OperatorPair::shift(fe(1), fe(2)).unwrap();
    let rinf: RationalFunction = "x/(x+1)".parse().unwrap();
    let t_series = difftk::series_core::AtInfinitySeries::from_rational(&rinf, nr as i64).as_t_series().clone();
    let prof_s = sigma_dimension_profile(&t_series, &spair, 3, &RelationQuery::new(2, 2, nr as i64), None).unwrap();
    // x/(x + 1 + 2i) in t = 1/x: Σ (−(1+2i))^k t^k
    let tws: Vec<Dense> = (0..4i64)
        .map(|i| (0..nr).map(|k| (-&fe(1 + 2 * i)).pow_u(k as u64)).collect())
        .collect();
    let oracle_s = oracle_profile(&tws, 2, 2, nr);
    rational_ok &= prof_s.d == oracle_s && eventually(&prof_s.d);
    writeln!(report, "rational under shift: {:?} oracle {:?}", prof_s.d, oracle_s).unwrap();

    Outcome {
        pass: mahler_ok && rational_ok,
        detail: format!(
            "power sum under x^3 {:?}; rational under q {:?}; rational under shift {:?}",
            prof.d, prof_q.d, prof_s.d
        ),
        report,
    }
}

/// Written to the process stdout directly so the lines survive output capture.
fn emit_line(line: String) {
    use std::io::Write as _;
    let mut out = std::io::stdout().lock();
    writeln!(out, "{line}").unwrap();
    out.flush().unwrap();
}

#[test]
fn acceptance() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("independence of the base-2 and base-3 power sums at D=4, Dx=8, N=300", criterion_1),
        ("planted relation recovery", criterion_2),
        ("Mahler linear search", criterion_3),
        ("certificate round trip", criterion_4),
        ("divisor calculus", criterion_5),
        ("operator laws", criterion_6),
        ("order-one solver soundness and resonance", criterion_7),
        ("q-special functions", criterion_8),
        ("sigma-dimension profiles", criterion_9),
    ];
    // ACCEPTANCE_ONLY=2,7 restricts the run (and the determinism rerun)
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|v| v.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let criteria: Vec<(usize, &str, fn() -> Outcome)> = criteria
        .into_iter()
        .enumerate()
        .map(|(i, (name, run))| (i + 1, name, run))
        .filter(|(i, _, _)| only.as_ref().is_none_or(|o| o.contains(i)))
        .collect();
    let mut all = true;
    let mut reports = Vec::new();
    for (i, name, run) in &criteria {
        let t0 = Instant::now();
        let o = run();
        emit_line(format!(
            "{} [{}] {name}: {} ({} ms)",
            if o.pass { "PASS" } else { "FAIL" },
            i,
            o.detail,
            t0.elapsed().as_millis()
        ));
        all &= o.pass;
        reports.push(o.report);
    }
    let rerun: Vec<String> = criteria.iter().map(|(_, _, run)| run().report).collect();
    let identical = rerun.iter().zip(&reports).filter(|(a, b)| a == b).count();
    let det = identical == criteria.len();
    emit_line(format!(
        "{} [10] determinism: {identical} of {} criterion reports byte-identical on rerun",
        if det { "PASS" } else { "FAIL" },
        criteria.len()
    ));
    all &= det;
    assert!(all, "acceptance criteria failed");
}
