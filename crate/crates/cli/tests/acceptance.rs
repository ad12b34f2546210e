//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Runs without the libtest harness so the lines are always printed.

use std::collections::HashMap;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use digitmeasure::experiments::CampaignConfig;
use digitmeasure::sources::{sqrt_digits, steinhaus_example_stream, VecStream};
use digitmeasure::{
    build_report, count_word, interval_measure, make_distribution, point_measure, run_campaign, uniform_distribution,
    Base, Digit, DigitDistribution, DigitStream, DigitWord, FiniteExpansion, Rational,
};
use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;

fn r(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

fn dist(base: u64, ps: &[(i64, i64)]) -> DigitDistribution {
    make_distribution(Base::new(base).unwrap(), ps.iter().map(|&(n, d)| r(n, d)).collect()).unwrap()
}

fn weighted_nine() -> DigitDistribution {
    let mut ps = vec![(7, 90); 9];
    ps.push((3, 10));
    dist(10, &ps)
}

fn degenerate(base: u64, digit: usize) -> DigitDistribution {
    let ps: Vec<_> = (0..base as usize).map(|d| if d == digit { (1, 1) } else { (0, 1) }).collect();
    dist(base, &ps)
}

fn fe(base: Base, digits: Vec<Digit>) -> FiniteExpansion {
    FiniteExpansion::from_word(DigitWord::new(base, digits).unwrap())
}

fn random_expansion(rng: &mut StdRng, base: Base, max_depth: usize) -> FiniteExpansion {
    let len = rng.gen_range(0..=max_depth);
    fe(base, (0..len).map(|_| rng.gen_range(0..base.get())).collect())
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn weighted_example() -> Outcome {
    let d = weighted_nine();
    let a = fe(Base::TEN, vec![9]);
    let b = FiniteExpansion::one(Base::TEN);
    let t = Instant::now();
    let m = interval_measure(&a, &b, &d).map_err(|e| e.to_string())?;
    let elapsed = t.elapsed();
    ensure(m == r(3, 10), || format!("got {m}, expected 3/10"))?;
    ensure(elapsed < Duration::from_millis(1), || format!("took {elapsed:?} (limit 1 ms)"))?;
    Ok(format!("measure([9/10, 1]) = {m} in {elapsed:?}"))
}

fn lebesgue_coincidence() -> Outcome {
    let mut rng = StdRng::seed_from_u64(2);
    let u = uniform_distribution(Base::TEN);
    let mut checked = 0;
    while checked < 1000 {
        let a = random_expansion(&mut rng, Base::TEN, 8);
        let b = random_expansion(&mut rng, Base::TEN, 8);
        if a.value() == b.value() {
            continue;
        }
        let (a, b) = if a.value() < b.value() { (a, b) } else { (b, a) };
        let m = interval_measure(&a, &b, &u).map_err(|e| e.to_string())?;
        ensure(m == b.value() - a.value(), || format!("[{}, {}] gave {m}", a.value(), b.value()))?;
        checked += 1;
    }
    Ok(format!("{checked} pairs equal b - a"))
}

/// Exhaustive base-3 check against enumeration of all depth-6 prefix
/// cylinders. Masses are kept as integers over `L^6`, where `L` clears the
/// digit denominators, so the oracle shares no arithmetic with the library.
fn brute_force_oracle() -> Outcome {
    const DEPTH: u32 = 6;
    let base = Base::new(3).unwrap();
    let cells = 3u64.pow(DEPTH);
    let laws = [
        ("uniform", uniform_distribution(base)),
        ("(1/2,1/3,1/6)", dist(3, &[(1, 2), (1, 3), (1, 6)])),
        ("degenerate p0=1", degenerate(3, 0)),
    ];
    // Every finite expansion of depth <= 4 is k/81; plus the endpoint 1.
    let mut endpoints: Vec<(u64, FiniteExpansion)> = (0..81u64)
        .map(|k| {
            let mut digits: Vec<Digit> = (0..4).rev().map(|j| ((k / 3u64.pow(j)) % 3) as Digit).collect();
            while digits.last() == Some(&0) {
                digits.pop();
            }
            (k * 9, fe(base, digits))
        })
        .collect();
    endpoints.push((cells, FiniteExpansion::one(base)));

    let mut pairs = 0;
    for (name, law) in &laws {
        let scale = law
            .probabilities()
            .iter()
            .fold(BigInt::one(), |acc, p| acc.lcm(p.denom()));
        let weights: Vec<u128> = law
            .probabilities()
            .iter()
            .map(|p| (p.numer() * (&scale / p.denom())).try_into().unwrap())
            .collect();
        let total = scale.pow(DEPTH);
        let mass: Vec<u128> = (0..cells)
            .map(|v| (0..DEPTH).map(|j| weights[((v / 3u64.pow(j)) % 3) as usize]).product())
            .collect();
        let top_is_sure = weights[2] == weights.iter().sum::<u128>();
        let zero_is_sure = weights[0] == weights.iter().sum::<u128>();

        for (i, (a, fa)) in endpoints.iter().enumerate() {
            for (b, fb) in &endpoints[i..] {
                let (mut inside, mut straddle, mut touching) = (0u128, 0u128, 0u128);
                for v in 0..cells {
                    let m = mass[v as usize];
                    if *a <= v && v < *b {
                        inside += m;
                    } else if v + 1 == *a || v == *b {
                        straddle += m;
                        // Only the single boundary sequence of the cell lands in [a, b].
                        if (v + 1 == *a && top_is_sure) || (v == *b && zero_is_sure) {
                            touching += m;
                        }
                    }
                }
                let exact = interval_measure(fa, fb, law).map_err(|e| e.to_string())?;
                let scaled = &exact * Rational::from_integer(total.clone());
                ensure(scaled.is_integer(), || format!("{name}: {exact} not on the depth-6 lattice"))?;
                let scaled: u128 = scaled.to_integer().try_into().unwrap();
                let at = || format!("{name}: [{}, {}]", fa.value(), fb.value());
                ensure(inside <= scaled && scaled <= inside + straddle, || {
                    format!("{}: {scaled} outside [{inside}, {}]", at(), inside + straddle)
                })?;
                ensure(straddle != 0 || scaled == inside, || format!("{}: zero straddle but not equal", at()))?;
                ensure(scaled == inside + touching, || format!("{}: {scaled} != {}", at(), inside + touching))?;
                pairs += 1;
            }
        }
    }
    Ok(format!("{pairs} (pair, law) cases inside the sandwich and equal to the refined count"))
}

fn point_masses() -> Outcome {
    let nine = degenerate(10, 9);
    let p1 = point_measure(&Rational::one(), &nine).map_err(|e| e.to_string())?;
    ensure(p1.is_one(), || format!("point_measure(1) = {p1}"))?;
    let m = interval_measure(&FiniteExpansion::zero(Base::TEN), &fe(Base::TEN, vec![9]), &nine)
        .map_err(|e| e.to_string())?;
    ensure(m.is_zero(), || format!("measure([0, 9/10]) = {m}"))?;
    let u = uniform_distribution(Base::TEN);
    let mut rng = StdRng::seed_from_u64(4);
    for _ in 0..100 {
        let d: i64 = rng.gen_range(1..=1_000_000);
        let x = r(rng.gen_range(0..=d), d);
        let p = point_measure(&x, &u).map_err(|e| e.to_string())?;
        ensure(p.is_zero(), || format!("uniform point_measure({x}) = {p}"))?;
    }
    Ok("degenerate atom at 1, empty [0, 9/10], 100 uniform atoms are 0".into())
}

fn additivity() -> Outcome {
    let mut rng = StdRng::seed_from_u64(5);
    let mut laws = Vec::new();
    while laws.len() < 5 {
        let base = Base::new(rng.gen_range(2..=10)).unwrap();
        let weights: Vec<i64> = (0..base.get()).map(|_| rng.gen_range(0..=4)).collect();
        let total: i64 = weights.iter().sum();
        if total == 0 {
            continue;
        }
        laws.push(make_distribution(base, weights.iter().map(|&w| r(w, total)).collect()).unwrap());
    }
    for law in &laws {
        let base = law.base();
        let whole = interval_measure(&FiniteExpansion::zero(base), &FiniteExpansion::one(base), law)
            .map_err(|e| e.to_string())?;
        ensure(whole.is_one(), || format!("base {}: measure([0,1]) = {whole}", base.get()))?;
        let mut triples = 0;
        while triples < 500 {
            let mut pts = [0; 3].map(|_| random_expansion(&mut rng, base, 6));
            pts.sort_by_key(|p| p.value());
            if pts[0].value() == pts[1].value() || pts[1].value() == pts[2].value() {
                continue;
            }
            let [a, m, b] = pts;
            let lhs = interval_measure(&a, &b, law).map_err(|e| e.to_string())?;
            let rhs = interval_measure(&a, &m, law).map_err(|e| e.to_string())?
                + interval_measure(&m, &b, law).map_err(|e| e.to_string())?
                - point_measure(&m.value(), law).map_err(|e| e.to_string())?;
            ensure(lhs == rhs, || {
                format!("{}, {}, {}: {lhs} != {rhs}", a.value(), m.value(), b.value())
            })?;
            triples += 1;
        }
    }
    Ok("5 laws x 500 triples additive; every law normalized".into())
}

fn counting() -> Outcome {
    let mut zeros = VecStream::new(Base::TEN, vec![0; 5]).unwrap();
    let c = count_word(&mut zeros, &DigitWord::parse(Base::TEN, "00").unwrap(), 4).map_err(|e| e.to_string())?;
    ensure(c == 4, || format!("count of 00 in 00000 = {c}"))?;

    const LEN: usize = 10_000;
    const K: usize = 3;
    let n = LEN - K + 1;
    let mut rng = StdRng::seed_from_u64(6);
    for s in 0..100 {
        let base = Base::new(rng.gen_range(2..=10)).unwrap();
        let digits: Vec<Digit> = (0..LEN).map(|_| rng.gen_range(0..base.get())).collect();
        let mut stream = VecStream::new(base, digits.clone()).unwrap();
        let report =
            build_report(&mut stream, n as u64, K, &uniform_distribution(base)).map_err(|e| e.to_string())?;
        let mut naive: HashMap<&[Digit], u64> = HashMap::new();
        for k in 1..=K {
            for i in 0..n {
                *naive.entry(&digits[i..i + k]).or_default() += 1;
            }
        }
        let expected_rows: usize = (1..=K).map(|k| (base.get() as usize).pow(k as u32)).sum();
        ensure(report.rows.len() == expected_rows, || format!("stream {s}: {} rows", report.rows.len()))?;
        for row in &report.rows {
            let want = naive.get(row.word.digits()).copied().unwrap_or(0);
            ensure(row.count == want, || format!("stream {s}, word {}: {} != {want}", row.word, row.count))?;
        }
    }
    Ok("overlap count 4; 100 streams of 10^4 digits match a naive rescan".into())
}

fn campaign(dist: DigitDistribution, samples: u64, max_len: usize, seed: u64) -> Result<u64, String> {
    let config = CampaignConfig {
        dist,
        samples,
        length: 100_000,
        max_len,
        epsilon: r(1, 100),
        seed,
    };
    Ok(run_campaign(&config).map_err(|e| e.to_string())?.normal_count())
}

fn uniform_monte_carlo() -> Outcome {
    let u = uniform_distribution(Base::TEN);
    let k1 = campaign(u.clone(), 200, 1, 7)?;
    let k2 = campaign(u, 200, 2, 7)?;
    ensure(k1 >= 199 && k2 >= 195, || format!("K=1: {k1}/200 (need 199), K=2: {k2}/200 (need 195)"))?;
    Ok(format!("K=1: {k1}/200, K=2: {k2}/200"))
}

fn weighted_monte_carlo() -> Outcome {
    let k1 = campaign(weighted_nine(), 100, 1, 8)?;
    ensure(k1 >= 99, || format!("{k1}/100 (need 99)"))?;
    Ok(format!("{k1}/100"))
}

fn block_example() -> Outcome {
    let first = steinhaus_example_stream(5, Base::TEN)
        .and_then(|mut s| s.take_digits(9))
        .map_err(|e| e.to_string())?;
    ensure(first == [5, 0, 5, 5, 0, 5, 5, 5, 0], || format!("first digits {first:?}"))?;
    let target = degenerate(10, 5);
    let mut devs = Vec::new();
    for n in [100u64, 1_000, 10_000] {
        let mut s = steinhaus_example_stream(5, Base::TEN).map_err(|e| e.to_string())?;
        let report = build_report(&mut s, n, 1, &target).map_err(|e| e.to_string())?;
        devs.push(report.row(&[5]).unwrap().deviation.clone());
    }
    let shown = devs.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(" > ");
    ensure(devs[0] > devs[1] && devs[1] > devs[2], || format!("not decreasing: {shown}"))?;
    ensure(devs[2] <= r(1, 50), || format!("deviation at 10^4 is {}", devs[2]))?;
    Ok(format!("deviation of 5: {shown}"))
}

/// Plain bisection on `x^2 <= n`.
fn bisect_isqrt(n: &BigUint) -> BigUint {
    let (mut lo, mut hi) = (BigUint::zero(), n + 1u32);
    while &hi - &lo > BigUint::one() {
        let mid = (&lo + &hi) >> 1;
        if &mid * &mid <= *n {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn sqrt_two() -> Outcome {
    let oracle = bisect_isqrt(&(BigUint::from(2u32) * BigUint::from(10u32).pow(100))).to_string();
    let expected: Vec<Digit> = oracle[1..51].bytes().map(|c| (c - b'0') as Digit).collect();
    let got = sqrt_digits(&BigUint::from(2u32), Base::TEN)
        .and_then(|mut s| s.take_digits(50))
        .map_err(|e| e.to_string())?;
    ensure(got == expected, || format!("got {got:?}"))?;
    Ok(format!("1.{}", &oracle[1..51]))
}

fn reproducibility() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dist_path = dir.path().join("weighted.dist");
    std::fs::write(&dist_path, "base 10\n7/90 7/90 7/90 7/90 7/90 7/90 7/90 7/90 7/90 3/10\n")
        .map_err(|e| e.to_string())?;
    let run = |name: &str| -> Result<Vec<u8>, String> {
        let out = dir.path().join(name);
        let output = Command::new(env!("CARGO_BIN_EXE_digitmeasure"))
            .args(["--quiet", "montecarlo", "--dist"])
            .arg(&dist_path)
            .args(["--m", "12", "--n", "20000", "--maxk", "2", "--epsilon", "1/50", "--seed", "99", "--out"])
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(output.status.success(), || format!("montecarlo exited with {}", output.status))?;
        std::fs::read(&out).map_err(|e| e.to_string())
    };
    let (a, b) = (run("first.txt")?, run("second.txt")?);
    ensure(!a.is_empty() && a == b, || "result files differ".into())?;
    Ok(format!("two runs wrote identical {}-byte files", a.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome, Option<Duration>); 11] = [
        ("weighted example", weighted_example, None),
        ("lebesgue coincidence", lebesgue_coincidence, Some(Duration::from_secs(5))),
        ("brute-force oracle", brute_force_oracle, Some(Duration::from_secs(30))),
        ("point masses", point_masses, Some(Duration::from_secs(1))),
        ("additivity and normalization", additivity, Some(Duration::from_secs(10))),
        ("counting semantics", counting, Some(Duration::from_secs(10))),
        ("uniform monte carlo", uniform_monte_carlo, Some(Duration::from_secs(120))),
        ("weighted monte carlo", weighted_monte_carlo, Some(Duration::from_secs(60))),
        ("block example", block_example, Some(Duration::from_secs(1))),
        ("sqrt 2 digits", sqrt_two, Some(Duration::from_secs(1))),
        ("reproducibility", reproducibility, None),
    ];
    let mut failures = 0;
    for (i, (name, check, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check().and_then(|detail| {
            let elapsed = start.elapsed();
            match limit {
                Some(limit) if elapsed > *limit => Err(format!("took {elapsed:.2?}, limit {limit:?}")),
                _ => Ok(detail),
            }
        });
        let elapsed = start.elapsed();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{elapsed:.2?}]", i + 1),
            Err(why) => {
                failures += 1;
                println!("criterion {:>2} FAIL  {name}: {why} [{elapsed:.2?}]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
