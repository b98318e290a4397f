//! Independent oracles and the randomized property suites, shared by the
//! property tests and the acceptance run.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use proptest::collection::vec;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

use torchar::characterizer::{characterize, CharacterizeOptions, Tower};
use torchar::lattice::{snf, IntMatrix};
use torchar::quasiconvex::char_window;
use torchar::torus::{char_norm, eval_char, QuadSurd};
use torchar::verifier::{tail_profile, Verdict};
use torchar::{CharSet, Character, CircleValue, Metric, NormValue, TorusPoint};

pub const PROPERTY_CASES: u32 = 1000;

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

pub fn point(coords: &[BigRational]) -> TorusPoint {
    TorusPoint::from_rationals(coords).unwrap()
}

pub fn scalar(k: i64) -> Character {
    Character::from_i64(&[k])
}

/// `||r||` for a real rational `r`.
pub fn norm_oracle(r: &BigRational) -> BigRational {
    let f = r - r.floor();
    let g = BigRational::one() - &f;
    if f < g {
        f
    } else {
        g
    }
}

/// `||k a / q||` as `(min(r, q - r), q)` with `r = k a mod q`.
pub fn residue_norm(k: i128, a: i128, q: i128) -> (i128, i128) {
    let r = (k % q * (a % q)).rem_euclid(q);
    (r.min(q - r), q)
}

/// `num / den > 1/4`.
pub fn beats_quarter((num, den): (i128, i128)) -> bool {
    4 * num > den
}

/// `num / den <= 2^-(n+2)`.
pub fn within_window((num, den): (i128, i128), n: u32) -> bool {
    BigInt::from(num) << (n + 2) <= BigInt::from(den)
}

pub fn exact(v: &NormValue) -> BigRational {
    match v {
        NormValue::Exact(r) => r.clone(),
        other => panic!("expected an exact value, got {other}"),
    }
}

pub fn runner(cases: u32, seed: u64) -> TestRunner {
    let mut bytes = [0u8; 32];
    bytes[..8].copy_from_slice(&seed.to_le_bytes());
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    TestRunner::new_with_rng(config, TestRng::from_seed(RngAlgorithm::ChaCha, &bytes))
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), TestCaseError> {
    if cond {
        Ok(())
    } else {
        Err(TestCaseError::fail(msg()))
    }
}

fn lib<T>(r: torchar::Result<T>) -> Result<T, TestCaseError> {
    r.map_err(|e| TestCaseError::fail(e.to_string()))
}

fn finish<V: std::fmt::Debug>(r: Result<(), proptest::test_runner::TestError<V>>) -> Result<(), String> {
    r.map_err(|e| e.to_string())
}

fn rational() -> impl Strategy<Value = BigRational> {
    (1i64..=1000).prop_flat_map(|q| (0..q).prop_map(move |a| rat(a, q)))
}

// ---------------------------------------------------------------- metrics

fn metric_oracle(metric: Metric, x: &[BigRational], y: &[BigRational]) -> BigRational {
    let per: Vec<BigRational> = x.iter().zip(y).map(|(a, b)| norm_oracle(&(a - b))).collect();
    match metric {
        Metric::Sup => per.into_iter().max().unwrap(),
        Metric::Weighted => per
            .into_iter()
            .enumerate()
            .map(|(i, v)| v / BigRational::from_integer(BigInt::one() << i))
            .sum(),
    }
}

/// Metric and norm axioms on rational points, checked against a direct
/// formula, plus enclosures of `frac(sqrt n)` against floating point.
pub fn norm_metric_axioms(cases: u32) -> Result<(), String> {
    let strat = (1usize..=3).prop_flat_map(|d| {
        (vec(rational(), d), vec(rational(), d), vec(rational(), d), vec(-50i64..=50, d), vec(-50i64..=50, d), 2u64..2000)
    });
    finish(runner(cases, 1).run(&strat, |(x, y, z, phi, psi, n)| {
        let (px, py, pz) = (point(&x), point(&y), point(&z));
        for metric in [Metric::Sup, Metric::Weighted] {
            let d = |a: &TorusPoint, b: &TorusPoint| lib(metric.distance(a, b)).map(|v| exact(&v));
            let dxy = d(&px, &py)?;
            check(dxy == metric_oracle(metric, &x, &y), || format!("{metric:?} distance {px} {py}"))?;
            check(d(&px, &px)?.is_zero(), || "d(x, x) != 0".into())?;
            check(dxy == d(&py, &px)?, || "asymmetric".into())?;
            check(d(&px, &pz)? <= &dxy + d(&py, &pz)?, || "triangle inequality".into())?;
            let shifted = d(&lib(px.add(&pz))?, &lib(py.add(&pz))?)?;
            check(shifted == dxy, || "not translation invariant".into())?;
            let same = x.iter().zip(&y).all(|(a, b)| (a - b).is_integer());
            check(dxy.is_zero() == same, || "positivity".into())?;
            check(dxy <= rat(1, 1), || "bounded by 1".into())?;
        }
        let (phi, psi) = (Character::from_i64(&phi), Character::from_i64(&psi));
        let cn = |c: &Character, p: &TorusPoint| lib(char_norm(c, p)).map(|v| exact(&v));
        let sum = lib(px.add(&py))?;
        check(cn(&phi, &sum)? <= cn(&phi, &px)? + cn(&phi, &py)?, || "||phi(x+y)|| subadditive".into())?;
        check(cn(&lib(phi.add(&psi))?, &px)? <= cn(&phi, &px)? + cn(&psi, &px)?, || "||(phi+psi)(x)||".into())?;
        check(cn(&phi, &px.neg())? == cn(&phi, &px)?, || "symmetric under negation".into())?;
        let direct = norm_oracle(&lib(phi.dot_rational(&x))?);
        check(cn(&phi, &px)? == direct, || format!("{phi}({px})"))?;

        let s = (n as f64).sqrt();
        if s.fract() != 0.0 {
            let v = CircleValue::quadratic(lib(QuadSurd::frac_sqrt(n))?);
            let norm = lib(torchar::torus::norm(&v))?;
            let f = s.fract().min(1.0 - s.fract());
            let (lo, hi) = (norm.lower().to_f64().unwrap(), norm.upper().to_f64().unwrap());
            check(lo <= f + 1e-12 && f - 1e-12 <= hi && hi - lo < 1e-12, || format!("enclosure of frac(sqrt {n})"))?;
        }
        Ok(())
    }))
}

// -------------------------------------------------------------------- SNF

fn det_i128(m: &[Vec<i128>]) -> i128 {
    match m.len() {
        0 => 1,
        1 => m[0][0],
        n => (0..n)
            .map(|j| {
                let minor: Vec<Vec<i128>> =
                    m[1..].iter().map(|r| r.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, v)| *v).collect()).collect();
                let sign = if j % 2 == 0 { 1 } else { -1 };
                sign * m[0][j] * det_i128(&minor)
            })
            .sum(),
    }
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = subsets(n - 1, k);
    for mut s in subsets(n - 1, k - 1) {
        s.push(n - 1);
        out.push(s);
    }
    out
}

/// gcd of all `k x k` minors, the `k`-th determinantal divisor.
fn determinantal_divisor(m: &[Vec<i64>], k: usize) -> i128 {
    let (rows, cols) = (m.len(), m[0].len());
    let mut g = 0i128;
    for rs in subsets(rows, k) {
        for cs in subsets(cols, k) {
            let minor: Vec<Vec<i128>> = rs.iter().map(|&r| cs.iter().map(|&c| m[r][c] as i128).collect()).collect();
            g = g.gcd(&det_i128(&minor));
        }
    }
    g
}

/// `U M V = D` with unimodular `U`, `V`, a divisibility chain on the
/// diagonal, and the diagonal products equal to the determinantal divisors.
pub fn snf_contracts(cases: u32) -> Result<(), String> {
    let strat = (1usize..=4, 1usize..=4).prop_flat_map(|(r, c)| vec(vec(-30i64..=30, c), r));
    finish(runner(cases, 2).run(&strat, |m| {
        let (rows, cols) = (m.len(), m[0].len());
        let a = lib(IntMatrix::new(rows, cols, m.iter().flatten().map(|&v| BigInt::from(v)).collect()))?;
        let s = snf(&a);
        check(lib(lib(s.u.mul(&a))?.mul(&s.v))? == s.d, || format!("U M V != D for {m:?}"))?;
        check(s.u.is_unimodular() && s.v.is_unimodular(), || "U or V not unimodular".into())?;
        check(lib(s.v.mul(&s.v_inv))? == IntMatrix::identity(cols), || "V V^-1 != I".into())?;
        check(s.d.is_diagonal(), || "D is not diagonal".into())?;
        let diag = s.diagonal();
        check(diag.iter().all(|d| !d.is_negative()), || "negative invariant factor".into())?;
        for w in diag.windows(2) {
            let ok = if w[0].is_zero() { w[1].is_zero() } else { (&w[1] % &w[0]).is_zero() };
            check(ok, || format!("{} does not divide {}", w[0], w[1]))?;
        }
        let mut prod = BigInt::one();
        for (k, d) in diag.iter().enumerate() {
            prod *= d;
            let g = determinantal_divisor(&m, k + 1);
            check(prod == BigInt::from(g), || format!("d_1..d_{} = {prod}, minors give {g}", k + 1))?;
        }
        Ok(())
    }))
}

// --------------------------------------------------------------- profiles

/// Profiles are pointwise subadditive and symmetric, match the direct
/// values, and exact vanishing of the last level passes to sums.
pub fn profile_subadditivity(cases: u32) -> Result<(), String> {
    let nonzero = prop_oneof![-500i64..=-1, 1i64..=500];
    let strat = (vec(vec(nonzero, 1..=3), 1..=5), 1i64..=200, 1i64..=200)
        .prop_flat_map(|(levels, q, r)| (Just(levels), (0..q).prop_map(move |a| rat(a, q)), (0..r).prop_map(move |a| rat(a, r))));
    finish(runner(cases, 3).run(&strat, |(levels, x, y)| {
        let b = lib(CharSet::new(1, levels.iter().map(|l| l.iter().map(|&k| scalar(k)).collect()).collect()))?;
        let n = b.num_levels();
        let (px, py) = (point(std::slice::from_ref(&x)), point(std::slice::from_ref(&y)));
        let sum = lib(px.add(&py))?;
        let profile = |p: &TorusPoint| lib(tail_profile(p, &b, n));
        let (tx, ty, ts, tn) = (profile(&px)?, profile(&py)?, profile(&sum)?, profile(&px.neg())?);
        for i in 0..tx.entries.len() {
            let v = |t: &torchar::verifier::TailProfile| exact(t.entries[i].value.as_ref().unwrap());
            let m = |t: &torchar::verifier::TailProfile| exact(t.entries[i].tail_max.as_ref().unwrap());
            let k = tx.entries[i].phi.coeffs()[0].clone();
            check(v(&tx) == norm_oracle(&(&x * BigRational::from_integer(k))), || format!("entry {i}"))?;
            check(v(&ts) <= v(&tx) + v(&ty), || format!("value subadditivity at {i}"))?;
            check(m(&ts) <= m(&tx) + m(&ty), || format!("tail subadditivity at {i}"))?;
            check(v(&tn) == v(&tx), || format!("negation at {i}"))?;
        }
        // repeated characters are dropped, so the last level may be empty
        let last = tx.entries.last().map(|e| e.level);
        let last_zero = |t: &torchar::verifier::TailProfile| t.entries.iter().filter(|e| Some(e.level) == last).all(|e| e.zero);
        if last_zero(&tx) && last_zero(&ty) {
            check(last_zero(&ts) && ts.verdict == Verdict::MemberSoFar, || "vanishing does not pass to the sum".into())?;
        }
        Ok(())
    }))
}

// ---------------------------------------------------------- window exits

/// First `k` with `Q_k` not dividing `phi`, for `Q_k = f_0 ... f_k`.
fn first_exit(factors: &[u64], phi: i128) -> Option<(usize, i128)> {
    let mut q = 1i128;
    for (k, &f) in factors.iter().enumerate() {
        q *= f as i128;
        if phi % q != 0 {
            return Some((k, q));
        }
    }
    None
}

/// Every fixed nonzero `phi` leaves the windows of a dense rational tower:
/// there is `n` and `e ∈ E_n` with `||phi(e)|| > 2^-(n+2)`. Checked for the
/// characters the pipeline emits on two towers, then for random towers
/// `E_n = <1/(f_0 ... f_n)>` and random `phi`.
pub fn window_exit(cases: u32) -> Result<(), String> {
    for (p, levels) in [(2u64, 8usize), (3, 5)] {
        let opts = CharacterizeOptions { levels, ..Default::default() };
        let tower = Tower::prufer(p).map_err(|e| e.to_string())?;
        let out = characterize(&tower, &opts).map_err(|e| e.to_string())?;
        for (_, phi) in out.charset.iter() {
            let k = phi.coeffs()[0].to_i128().unwrap();
            let (exit, q) = first_exit(&vec![p; 64], k).ok_or("no exit")?;
            let n = exit.max(1);
            let e = rat(1, q as i64);
            let stage = tower.stage(n).map_err(|e| e.to_string())?;
            if !stage.contains(&point(std::slice::from_ref(&e))) || !beats_window(residue_norm(k, 1, q), n as u32) {
                return Err(format!("{phi} from the {p}-adic tower does not exit at level {n}"));
            }
        }
    }
    let strat = (vec(prop_oneof![Just(2u64), Just(3), Just(5)], 40), prop_oneof![-1_000_000_000i64..=-1, 1i64..=1_000_000_000]);
    finish(runner(cases, 4).run(&strat, |(factors, phi)| {
        let (exit, q) = first_exit(&factors, phi as i128).expect("Q_39 exceeds 10^9");
        let n = exit.max(1) as u32;
        let oracle = residue_norm(phi as i128, 1, q);
        check(beats_window(oracle, n), || format!("oracle: {phi} stays in window {n}"))?;
        let e = point(&[BigRational::new(1.into(), BigInt::from(q))]);
        let value = exact(&lib(char_norm(&scalar(phi), &e))?);
        check(value == BigRational::new(oracle.0.into(), oracle.1.into()), || "value".into())?;
        let window = lib(char_window(&[e], n))?;
        check(!lib(window.contains(&scalar(phi)))?, || format!("{phi} reported inside window {n} of 1/{q}"))?;
        Ok(())
    }))
}

fn beats_window(v: (i128, i128), n: u32) -> bool {
    !within_window(v, n)
}

pub type Suite = (&'static str, fn(u32) -> Result<(), String>);

pub const SUITES: [Suite; 4] = [
    ("norm and metric axioms", norm_metric_axioms),
    ("SNF contracts", snf_contracts),
    ("profile subadditivity", profile_subadditivity),
    ("window exits", window_exit),
];

pub fn eval_exact(phi: &Character, x: &TorusPoint) -> BigRational {
    eval_char(phi, x).unwrap().as_rational().unwrap().clone()
}
