//! End-to-end acceptance run: one PASS/FAIL line per criterion, checked
//! against oracles written independently of the library code.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use common::{exact, point, rat, residue_norm, within_window};
use torchar::characterizer::{characterize, verify_certificates, CharacterizeOptions, Tower};
use torchar::classic::{factorial_charset, prufer_charset, witness_scan};
use torchar::fsigma::{check_condition_c, check_refutation, partition_b, refutation_witness, ChainSpec, ConditionC, RefuteBudget};
use torchar::quasiconvex::quasi_hull;
use torchar::torus::QuadSurd;
use torchar::verifier::{
    chain_witness_sequence, monte_carlo_measure, separation_witness, sublevel_measures, tail_profile, SearchBudget, Verdict,
};
use torchar::{CharSet, Character, CircleValue, Precision, TorusPoint};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn reduced(x: &BigRational) -> (i128, i128) {
    (x.numer().to_i128().unwrap(), x.denom().to_i128().unwrap())
}

// 1 ------------------------------------------------------------ factorials

/// Smallest `n` with `q | n!`, by running `n! mod q`.
fn factorial_level(q: u64) -> u64 {
    let mut f = 1 % q;
    let mut n = 1;
    while f != 0 {
        n += 1;
        f = f * n % q;
    }
    n
}

/// `floor(t)` for `t = (a + b sqrt(d)) / c`, `c > 0`, `d` not a square.
fn floor_surd(a: &BigInt, b: &BigInt, d: &BigInt, c: &BigInt) -> BigInt {
    let root = (b * b * d).sqrt();
    let floor_b_sqrt = if b.is_negative() { -root - 1 } else { root };
    (a + floor_b_sqrt).div_floor(c)
}

/// `||k n! x|| >= 1/4` for `x = (a + b sqrt(d)) / c`: the floor of `4 k n! x`
/// is 1 or 2 mod 4 (the value is irrational, so never on the boundary).
fn surd_witness(x: &QuadSurd, k: u64, n: u64) -> bool {
    let m: BigInt = (1..=n).map(BigInt::from).product::<BigInt>() * k * 4;
    let f = floor_surd(&(x.a() * &m), &(x.b() * &m), x.d(), x.c());
    let r = f.mod_floor(&BigInt::from(4));
    r == BigInt::from(1) || r == BigInt::from(2)
}

fn criterion_1() -> Outcome {
    let b = factorial_charset(50).map_err(err)?;
    let fractions: Vec<(i64, i64)> = (1..=50i64).flat_map(|q| (0..q).filter(move |p| p.gcd(&q) == 1).map(move |p| (p, q))).collect();
    let start = Instant::now();
    let profiles = fractions
        .iter()
        .map(|&(p, q)| tail_profile(&point(&[rat(p, q)]), &b, 50))
        .collect::<torchar::Result<Vec<_>>>()
        .map_err(err)?;
    let rational_time = start.elapsed();
    for (&(p, q), profile) in fractions.iter().zip(&profiles) {
        let first = factorial_level(q as u64) as usize;
        ensure(profile.entries.len() == 50 * 51 / 2, || format!("{p}/{q}: prefix length"))?;
        for entry in &profile.entries {
            let phi = entry.phi.coeffs()[0].mod_floor(&BigInt::from(q)).to_i128().unwrap();
            let (num, den) = residue_norm(phi, p as i128, q as i128);
            ensure(exact(entry.value.as_ref().unwrap()) == rat(num as i64, den as i64), || format!("{p}/{q} entry {}", entry.index))?;
            ensure(entry.zero == (num == 0), || format!("{p}/{q} zero flag at entry {}", entry.index))?;
            if entry.level + 1 >= first {
                ensure(entry.zero, || format!("{p}/{q} is not annihilated at level {}", entry.level + 1))?;
            }
        }
        if first > 1 {
            let level = first - 2;
            ensure(
                profile.entries.iter().any(|en| en.level == level && !en.zero),
                || format!("{p}/{q} already vanishes at level {}", level + 1),
            )?;
        }
        ensure(first <= q as usize, || format!("{p}/{q}: level {first} beyond q"))?;
    }
    let count = fractions.len();
    ensure(rational_time < Duration::from_secs(1), || format!("rationals took {}", secs(rational_time)))?;

    let start = Instant::now();
    let panel = [(-1, 1, 2, 1), (-1, 1, 5, 2), (-1, 1, 3, 1)];
    let mut found = Vec::new();
    for (a, b, d, c) in panel {
        let x = QuadSurd::new(a.into(), b.into(), c.into(), d.into()).map_err(err)?;
        let witnesses = witness_scan(&CircleValue::quadratic(x.clone()), 30, &Precision::default()).map_err(err)?;
        for w in &witnesses {
            ensure(w.n <= 30 && w.k >= 1 && w.k <= w.n, || format!("witness {w:?} out of range"))?;
            ensure(w.lower >= rat(1, 4), || format!("witness {w:?} not verified"))?;
            ensure(surd_witness(&x, w.k, w.n), || format!("oracle rejects k = {}, n = {} for {x:?}", w.k, w.n))?;
        }
        ensure(witnesses.len() >= 10, || format!("only {} witnesses for ({a} + sqrt {d})/{c}", witnesses.len()))?;
        found.push(witnesses.len());
    }
    let irrational_time = start.elapsed();
    ensure(irrational_time < Duration::from_secs(5), || format!("irrationals took {}", secs(irrational_time)))?;
    Ok(format!(
        "{count} rationals exact ({}), witnesses {found:?} ({})",
        secs(rational_time),
        secs(irrational_time)
    ))
}

// 2 ------------------------------------------------------------ quasi-hulls

/// `q_m(E)` by brute force: `E` is given by numerators over `q`, characters
/// are tested mod `2q` and candidate points range over `(1/2q) Z / Z`.
fn hull_oracle(nums: &[i128], q: i128, m: u32) -> BTreeSet<(i128, i128)> {
    let big = 2 * q;
    let window: Vec<i128> = (0..big).filter(|&phi| nums.iter().all(|&a| within_window(residue_norm(phi, a, q), m))).collect();
    (0..big)
        .filter(|&a| window.iter().all(|&phi| !common::beats_quarter(residue_norm(phi, a, big))))
        .map(|a| {
            let g = a.gcd(&big);
            (a / g, big / g)
        })
        .collect()
}

fn library_hull(nums: &[i128], q: i128, m: u32) -> Result<BTreeSet<(i128, i128)>, String> {
    let e: Vec<TorusPoint> = nums.iter().map(|&a| point(&[rat(a as i64, q as i64)])).collect();
    let hull = quasi_hull(&e, m).map_err(err)?;
    Ok(hull.hull.iter().map(|p| reduced(&p.rational_coords().unwrap()[0])).collect())
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut sets: Vec<(i128, Vec<i128>)> = Vec::new();
    for q in 1..=30i128 {
        if q <= 12 {
            for mask in 1u32..(1 << q) {
                sets.push((q, (0..q).filter(|a| mask >> a & 1 == 1).collect()));
            }
        } else {
            for a in 0..q {
                for b in a + 1..q {
                    sets.push((q, vec![a, b]));
                }
                sets.push((q, vec![a]));
            }
            let mut rng = StdRng::seed_from_u64(q as u64);
            for _ in 0..200 {
                let e: Vec<i128> = (0..q).filter(|_| rng.gen_bool(0.3)).collect();
                if !e.is_empty() {
                    sets.push((q, e));
                }
            }
        }
    }
    let results = torchar::par::map(&sets, |(q, e)| -> Result<(), String> {
        for m in 0..=3 {
            let got = library_hull(e, *q, m)?;
            let want = hull_oracle(e, *q, m);
            if got != want {
                return Err(format!("q_{m} of {e:?}/{q}: {got:?} != {want:?}"));
            }
        }
        Ok(())
    });
    results.into_iter().collect::<Result<Vec<()>, String>>()?;

    let fifth = library_hull(&[1], 5, 0)?;
    ensure(fifth == BTreeSet::from([(0, 1), (1, 5), (4, 5)]), || format!("q_0({{1/5}}) = {fifth:?}"))?;
    for q in 1..=30i128 {
        let subgroup: Vec<i128> = (0..q).collect();
        let want: BTreeSet<(i128, i128)> = subgroup.iter().map(|&a| (a / a.gcd(&q), q / a.gcd(&q))).collect();
        for m in 0..=3 {
            ensure(library_hull(&subgroup, q, m)? == want, || format!("q_{m} of <1/{q}> is not the subgroup"))?;
        }
    }
    Ok(format!("{} sets x 4 levels match ({})", sets.len(), secs(start.elapsed())))
}

// 3 ---------------------------------------------------------- dyadic tower

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let levels = 12;
    let out = characterize(&Tower::prufer(2).map_err(err)?, &CharacterizeOptions { levels, ..Default::default() }).map_err(err)?;
    let b = &out.charset;
    ensure(b.num_levels() == levels, || format!("{} levels", b.num_levels()))?;
    let checks = verify_certificates(&out.certificates).map_err(err)?;
    ensure(checks.len() == levels, || format!("{} certificates", checks.len()))?;
    let chars: Vec<(usize, i128)> = b.iter().map(|(n, phi)| (n, phi.coeffs()[0].to_i128().unwrap())).collect();

    let mut nondyadic = 0;
    let mut fewest = usize::MAX;
    for q in (3..=99i128).filter(|q| !(*q as u64).is_power_of_two()) {
        for a in (1..q).filter(|a| a.gcd(&q) == 1) {
            let hits = chars.iter().filter(|(_, phi)| common::beats_quarter(residue_norm(*phi, a, q))).count();
            ensure(hits >= 5, || format!("{a}/{q} has {hits} witnesses"))?;
            fewest = fewest.min(hits);
            let profile = tail_profile(&point(&[rat(a as i64, q as i64)]), b, levels).map_err(err)?;
            ensure(matches!(profile.verdict, Verdict::WitnessFound(_)), || format!("{a}/{q}: {:?}", profile.verdict))?;
            nondyadic += 1;
        }
    }

    // a / 2^(l+1) lies in E_l; every later level must keep it within 2^-(n+2)
    let mut dyadic = 0;
    for l in 0..=10u32 {
        let den = 1i128 << (l + 1);
        for a in (1..den).step_by(2) {
            for &(n, phi) in chars.iter().filter(|(n, _)| *n >= l as usize) {
                ensure(within_window(residue_norm(phi, a, den), n as u32), || format!("{phi} moves {a}/{den} at level {n}"))?;
            }
            dyadic += 1;
        }
    }
    let tolerance = b.tolerance().ok_or("no tolerances")?;
    for (n, t) in tolerance.iter().enumerate() {
        ensure(*t == rat(1, 1 << (n + 2)), || format!("tolerance {n}"))?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), || format!("took {}", secs(elapsed)))?;
    Ok(format!(
        "{levels} certificates, {nondyadic} non-dyadics (>= {fewest} witnesses), {dyadic} dyadics bounded ({})",
        secs(elapsed)
    ))
}

// 4 ----------------------------------------------------------- Prüfer 5

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let levels = 5;
    let out = characterize(&Tower::prufer(5).map_err(err)?, &CharacterizeOptions { levels, ..Default::default() }).map_err(err)?;
    verify_certificates(&out.certificates).map_err(err)?;
    let reference = prufer_charset(5, 12).map_err(err)?;
    let mut agree = 0;
    for q in 1..=60i64 {
        let member = {
            let mut r = q;
            while r % 5 == 0 {
                r /= 5;
            }
            r == 1
        };
        for p in (0..q).filter(|p| p.gcd(&q) == 1) {
            let x = point(&[rat(p, q)]);
            let ours = tail_profile(&x, &out.charset, levels).map_err(err)?.verdict;
            let theirs = tail_profile(&x, &reference, 12).map_err(err)?.verdict;
            let (a, b) = (ours == Verdict::MemberSoFar, theirs == Verdict::MemberSoFar);
            ensure(a == b && b == member, || format!("{p}/{q}: pipeline {ours:?}, reference {theirs:?}"))?;
            agree += 1;
        }
    }
    Ok(format!("{agree} rationals agree over {levels} levels ({})", secs(start.elapsed())))
}

// 5 --------------------------------------------------------------- measure

/// Measure of `{x : ||k x|| <= delta for all k}`: the set is constant between
/// consecutive breakpoints `(j +- delta)/k`, so midpoints decide it.
fn measure_oracle(ks: &[BigInt], delta: &BigRational) -> BigRational {
    // intervals between consecutive breakpoints; test their midpoints
    let mut points: Vec<BigRational> = Vec::new();
    for k in ks {
        let kk = BigRational::from_integer(k.clone());
        for j in 0..k.to_i64().unwrap() {
            for s in [BigRational::from_integer(j.into()) - delta, BigRational::from_integer(j.into()) + delta] {
                let t = s / &kk;
                points.push(&t - t.floor());
            }
        }
    }
    points.push(BigRational::zero());
    points.push(rat(1, 1));
    points.sort();
    points.dedup();
    let mut total = BigRational::zero();
    for w in points.windows(2) {
        let mid = (&w[0] + &w[1]) / BigInt::from(2);
        if ks.iter().all(|k| common::norm_oracle(&(&mid * BigRational::from_integer(k.clone()))) <= *delta) {
            total += &w[1] - &w[0];
        }
    }
    total
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let b = factorial_charset(8).map_err(err)?;
    let delta = rat(1, 8);
    let reports = sublevel_measures(&b, 8, &delta).map_err(err)?;
    ensure(reports.len() == 8, || format!("{} reports", reports.len()))?;
    for w in reports.windows(2) {
        ensure(w[1].measure < w[0].measure, || format!("not decreasing at level {}", w[1].levels))?;
    }
    // the oracle is quadratic in the breakpoints; the first four levels suffice
    for r in &reports[..4] {
        let ks: Vec<BigInt> = b.iter().filter(|(n, _)| *n < r.levels).map(|(_, phi)| phi.coeffs()[0].clone()).collect();
        let want = measure_oracle(&ks, &delta);
        ensure(r.measure == want, || format!("level {}: {} != {want}", r.levels, r.measure))?;
    }
    let mut worst = 0.0f64;
    for r in &reports {
        let mc = monte_carlo_measure(&b, r.levels, 0.125, 1_000_000, 7 + r.levels as u64).map_err(err)?;
        let exact = r.measure.to_f64().unwrap();
        let z = (mc.estimate - exact).abs() / mc.std_error.max(1e-12);
        ensure(z <= 3.0, || format!("level {}: estimate {} vs {exact} ({z:.2} SE)", r.levels, mc.estimate))?;
        worst = worst.max(z);
    }
    let last = &reports[7].measure;
    Ok(format!("measures 1/4 .. {last}, Monte Carlo within {worst:.2} SE ({})", secs(start.elapsed())))
}

// 6 ---------------------------------------------------------- separation

/// Words of length `<= n` in a single generator `g` of `T^d`.
fn word_stage(g: &[BigRational], n: i64) -> Vec<Vec<BigRational>> {
    (-n..=n).map(|k| g.iter().map(|c| c * BigRational::from_integer(k.into())).collect()).collect()
}

fn char_value(u: &Character, x: &[BigRational]) -> BigRational {
    let s: BigRational = u.coeffs().iter().zip(x).map(|(k, c)| c * BigRational::from_integer(k.clone())).sum();
    common::norm_oracle(&s)
}

fn check_separation(g: &[BigRational], x: &[BigRational], count: usize) -> Result<(), String> {
    let dim = g.len();
    let tower = Tower::words(dim, vec![point(g)]).map_err(err)?;
    let steps = separation_witness(&tower, &point(x), count, &SearchBudget::default()).map_err(err)?;
    ensure(steps.len() == count, || "missing steps".into())?;
    for s in &steps {
        ensure(char_value(&s.u, x) > rat(1, 4), || format!("step {}: u = {} does not move x", s.n, s.u))?;
        let bound = rat(1, s.n as i64);
        for e in word_stage(g, s.n as i64) {
            ensure(char_value(&s.u, &e) < bound, || format!("step {}: u = {} is large on the stage", s.n, s.u))?;
        }
    }
    Ok(())
}

fn check_chain(gens: &[BigRational], x: &BigRational) -> Result<Vec<i64>, String> {
    let chain: Vec<Vec<TorusPoint>> = gens.iter().map(|g| vec![point(std::slice::from_ref(g))]).collect();
    let steps = chain_witness_sequence(&chain, &point(std::slice::from_ref(x)), &SearchBudget::default()).map_err(err)?;
    ensure(steps.len() == gens.len(), || "missing steps".into())?;
    let mut us = Vec::new();
    for (s, g) in steps.iter().zip(gens) {
        let u = &s.u.coeffs()[0];
        ensure((g * BigRational::from_integer(u.clone())).is_integer(), || format!("u_{} = {u} does not kill F_{}", s.n, s.n))?;
        ensure(common::norm_oracle(&(x * BigRational::from_integer(u.clone()))) >= rat(1, 4), || format!("u_{} = {u}", s.n))?;
        us.push(u.to_i64().unwrap());
    }
    Ok(us)
}

fn in_cyclic(g: &[BigRational], x: &[BigRational]) -> bool {
    let order = g.iter().fold(BigInt::from(1), |acc, c| acc.lcm(c.denom()));
    (0..order.to_i64().unwrap()).any(|k| {
        g.iter().zip(x).all(|(c, y)| (c * BigRational::from_integer(k.into()) - y).is_integer())
    })
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    check_separation(&[rat(1, 3)], &[rat(1, 7)], 6)?;
    let dyadic: Vec<BigRational> = (0..8).map(|n| rat(1, 1 << n)).collect();
    let us = check_chain(&dyadic, &rat(1, 3))?;
    ensure(us.iter().enumerate().all(|(n, u)| u.unsigned_abs() % (1 << n) == 0), || format!("{us:?}"))?;

    let mut rng = StdRng::seed_from_u64(6);
    let (mut separations, mut chains) = (0, 0);
    while separations + chains < 100 {
        if (separations + chains) % 2 == 0 {
            let dim = rng.gen_range(1..=2);
            let g: Vec<BigRational> = (0..dim).map(|_| rat(rng.gen_range(0..40), rng.gen_range(1..=40))).collect();
            let x: Vec<BigRational> = (0..dim).map(|_| rat(rng.gen_range(0..40), rng.gen_range(1..=40))).collect();
            if in_cyclic(&g, &x) {
                continue;
            }
            check_separation(&g, &x, 4).map_err(|m| format!("<{g:?}> vs {x:?}: {m}"))?;
            separations += 1;
        } else {
            let q0 = rng.gen_range(1..=40i64);
            let f = [2i64, 3, 5][rng.gen_range(0..3)];
            let c = rng.gen_range(2..=40i64);
            let x = rat(rng.gen_range(1..c), c);
            let mut r = x.denom().to_i64().unwrap() / x.denom().to_i64().unwrap().gcd(&q0);
            while r % f == 0 {
                r /= f;
            }
            if r == 1 {
                continue; // x lies in some F_n
            }
            let gens: Vec<BigRational> = (0..6).map(|n| rat(1, q0 * f.pow(n))).collect();
            check_chain(&gens, &x).map_err(|m| format!("<1/{q0} {f}^n> vs {x}: {m}"))?;
            chains += 1;
        }
    }
    Ok(format!(
        "worked examples and {separations} separations + {chains} chains verified ({})",
        secs(start.elapsed())
    ))
}

// 7 -------------------------------------------------------------- chains

fn weighted_tail(z: &[BigRational], from: usize) -> BigRational {
    z.iter()
        .enumerate()
        .skip(from)
        .map(|(i, c)| common::norm_oracle(c) / BigRational::from_integer(BigInt::from(1) << i))
        .sum()
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(7);
    for _ in 0..100 {
        let len = rng.gen_range(1..=8);
        let mut q = rng.gen_range(1..=6i64);
        let mut factors = Vec::new();
        let mut gens = vec![point(&[rat(1, q)])];
        for _ in 0..len {
            let f = rng.gen_range(1..=6i64);
            q *= f;
            factors.push(f);
            gens.push(point(&[rat(1, q)]));
        }
        match check_condition_c(&ChainSpec::cyclic(1, gens)).map_err(err)? {
            ConditionC::Holds { indices, .. } => {
                let got: Vec<i64> = indices.iter().map(|i| i.as_ref().unwrap().to_i64().unwrap()).collect();
                ensure(got == factors, || format!("indices {got:?} != {factors:?}"))?;
            }
            refused => return Err(format!("finite-index chain {factors:?} refused: {refused:?}")),
        }
    }
    for l in 1..=10 {
        ensure(
            matches!(check_condition_c(&ChainSpec::coordinate(l)).map_err(err)?, ConditionC::Refused { at: 0, .. }),
            || format!("coordinate chain of length {l} accepted"),
        )?;
    }

    let budget = RefuteBudget::default();
    let mut certified = 0;
    for trial in 0..20 {
        let l = 10;
        let chain = ChainSpec::coordinate(l);
        // level n: characters whose first nonzero coordinate is n
        let levels: Vec<Vec<Character>> = (0..l)
            .map(|n| {
                (0..rng.gen_range(0..=3))
                    .map(|_| {
                        let mut v = vec![0i64; l];
                        v[n] = [-1, 1][rng.gen_range(0..2)] * rng.gen_range(1..=20);
                        for c in v.iter_mut().skip(n + 1) {
                            *c = rng.gen_range(-20..=20);
                        }
                        Character::from_i64(&v)
                    })
                    .collect()
            })
            .collect();
        let b = CharSet::new(l, levels.clone()).map_err(err)?;
        let part = partition_b(&b, &chain).map_err(err)?;
        for n in 0..l {
            let want: BTreeSet<&Character> = levels[n].iter().collect();
            let got: BTreeSet<&Character> = part.levels[n].iter().collect();
            ensure(want == got, || format!("trial {trial}: partition level {n}"))?;
        }

        let refutation = refutation_witness(&chain, &b, l, &budget).map_err(err)?;
        let ys: Vec<Vec<BigRational>> = refutation.ys.iter().map(|y| y.rational_coords().unwrap()).collect();
        ensure(ys.len() == l, || format!("{} points", ys.len()))?;
        let x: Vec<BigRational> = (0..l).map(|i| ys.iter().map(|y| y[i].clone()).sum()).collect();
        for n in 0..l {
            let y = &ys[n];
            ensure(y.iter().skip(n + 1).all(Zero::is_zero) && !y[n].is_integer(), || format!("y_{n} not in F_{} minus F_{n}", n + 1))?;
            let y_dist = weighted_tail(y, n);
            let tail: Vec<BigRational> = (0..l).map(|i| ys[n..].iter().map(|y| y[i].clone()).sum()).collect();
            let x_dist = weighted_tail(&tail, n);
            ensure(y_dist.is_positive() && &x_dist * BigInt::from(2) >= y_dist, || format!("distance at {n}"))?;
            let mut bound = y_dist.clone();
            for later in &ys[n + 1..] {
                bound /= BigInt::from(3);
                ensure(weighted_tail(later, 0) <= bound, || format!("decay of the points after {n}"))?;
            }
            for phi in levels[..=n].iter().flatten() {
                ensure(char_value(phi, y) <= rat(1, 1 << n), || format!("{phi} on y_{n}"))?;
            }
            for phi in &levels[n] {
                ensure(char_value(phi, &x) <= rat(2, 1 << n), || format!("{phi} on x exceeds 2^(1-{n})"))?;
            }
        }
        check_refutation(&chain, &b, &refutation.ys, &budget).map_err(err)?;
        certified += 1;
    }
    Ok(format!("100 finite-index chains accepted, coordinate chains refused, {certified} refutations certified ({})", secs(start.elapsed())))
}

// 8 ------------------------------------------------------------ properties

fn criterion_8() -> Outcome {
    let start = Instant::now();
    for (name, suite) in common::SUITES {
        suite(common::PROPERTY_CASES).map_err(|m| format!("{name}: {m}"))?;
    }
    Ok(format!("{} suites x {} cases ({})", common::SUITES.len(), common::PROPERTY_CASES, secs(start.elapsed())))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("factorial characters: exact zeros and irrational witnesses", criterion_1),
        ("quasi-hulls match the brute-force oracle", criterion_2),
        ("dyadic tower, 12 levels", criterion_3),
        ("5-adic tower agrees with powers of 5", criterion_4),
        ("sublevel measures shrink and match sampling", criterion_5),
        ("separation and chain witnesses", criterion_6),
        ("finite-index test and refutations", criterion_7),
        ("property suites", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
