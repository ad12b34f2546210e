//! Seeded Monte Carlo campaigns: sample sequences from `μ_ρ`, classify each
//! as ε-normal at depth `(n, K)`, and aggregate. The fraction of ε-normal
//! samples is a finite stand-in for "the set of normal sequences has measure 1".

use std::fmt::{self, Write as _};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::alphabet::{parse_rational, Base, Digit, DigitDistribution, Rational};
use crate::error::{Error, Result};
use crate::measure::psi_value;
use crate::normality::{build_report, is_eps_normal, EpsVerdict, NormalityReport};
use crate::rng::derive_seed;
use crate::sources::{rational_digits, sample_stream, DigitStream, Seed, VecStream};
use crate::DigitWord;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CampaignConfig {
    pub dist: DigitDistribution,
    /// Number of sampled sequences `m`.
    pub samples: u64,
    /// Start positions `n` per sequence.
    pub length: u64,
    pub max_len: usize,
    pub epsilon: Rational,
    pub seed: Seed,
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 || self.length == 0 || self.max_len == 0 {
            return Err(Error::InvalidParameter("m, n and K must all be at least 1".into()));
        }
        if !self.epsilon.is_positive() {
            return Err(Error::InvalidParameter(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleVerdict {
    pub index: u64,
    pub seed: Seed,
    pub normal: bool,
    pub max_deviation: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CampaignResult {
    pub config: CampaignConfig,
    /// Ordered by sample index.
    pub samples: Vec<SampleVerdict>,
    /// `(# ε-normal) / m`
    pub fraction: Rational,
}

impl CampaignResult {
    pub fn normal_count(&self) -> u64 {
        self.samples.iter().filter(|s| s.normal).count() as u64
    }

    /// Parses the text produced by `Display`.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = |msg: String| Error::Parse(format!("campaign result: {msg}"));
        let mut header = std::collections::HashMap::new();
        let mut samples = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            if let Some(rest) = line.strip_prefix("sample ") {
                let f: Vec<&str> = rest.split_whitespace().collect();
                let [idx, "seed", seed, "normal", normal, "maxdev", dev] = f.as_slice() else {
                    return Err(bad(format!("malformed sample line {line:?}")));
                };
                samples.push(SampleVerdict {
                    index: idx.parse().map_err(|_| bad(format!("bad index in {line:?}")))?,
                    seed: seed.parse().map_err(|_| bad(format!("bad seed in {line:?}")))?,
                    normal: match *normal {
                        "yes" => true,
                        "no" => false,
                        other => return Err(bad(format!("bad verdict {other:?}"))),
                    },
                    max_deviation: parse_rational(dev)?,
                });
            } else if let Some((k, v)) = line.split_once(':') {
                header.insert(k.trim().to_string(), v.trim().to_string());
            } else {
                return Err(bad(format!("unrecognised line {line:?}")));
            }
        }
        let get = |k: &str| header.get(k).ok_or_else(|| bad(format!("missing `{k}:` line")));
        let num = |k: &str| -> Result<u64> { get(k)?.parse().map_err(|_| bad(format!("bad `{k}` value"))) };
        let base = Base::new(num("base")?)?;
        let dist_text = format!("base {}\n{}", base, get("dist")?);
        let config = CampaignConfig {
            dist: DigitDistribution::parse(&dist_text)?,
            samples: num("m")?,
            length: num("n")?,
            max_len: num("maxk")? as usize,
            epsilon: parse_rational(get("epsilon")?)?,
            seed: num("seed")?,
        };
        let (count, m) = get("fraction")?
            .split_once('/')
            .ok_or_else(|| bad("fraction must be count/m".into()))?;
        let count: u64 = count.parse().map_err(|_| bad("bad fraction".into()))?;
        let m: u64 = m.parse().map_err(|_| bad("bad fraction".into()))?;
        if m != config.samples || samples.len() as u64 != m {
            return Err(bad(format!("expected {} samples, found {}", config.samples, samples.len())));
        }
        let result = CampaignResult {
            fraction: Rational::new(BigInt::from(count), BigInt::from(m)),
            config,
            samples,
        };
        if result.normal_count() != count {
            return Err(bad("fraction disagrees with sample verdicts".into()));
        }
        Ok(result)
    }
}

impl fmt::Display for CampaignResult {
    /// Header block of `key: value` lines, then
    /// `sample <i> seed <s> normal <yes|no> maxdev <n/d>` per sample.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.config;
        writeln!(f, "# digitmeasure campaign v1")?;
        writeln!(f, "base: {}", c.dist.base())?;
        let dist: Vec<String> = c.dist.probabilities().iter().map(|p| p.to_string()).collect();
        writeln!(f, "dist: {}", dist.join(" "))?;
        writeln!(f, "m: {}", c.samples)?;
        writeln!(f, "n: {}", c.length)?;
        writeln!(f, "maxk: {}", c.max_len)?;
        writeln!(f, "epsilon: {}", c.epsilon)?;
        writeln!(f, "seed: {}", c.seed)?;
        writeln!(f, "fraction: {}/{}", self.normal_count(), c.samples)?;
        for s in &self.samples {
            writeln!(
                f,
                "sample {} seed {} normal {} maxdev {}",
                s.index,
                s.seed,
                if s.normal { "yes" } else { "no" },
                s.max_deviation
            )?;
        }
        Ok(())
    }
}

/// Samples `m` sequences in parallel, sample `i` seeded with
/// [`derive_seed`]`(seed, i)`, and classifies each.
pub fn run_campaign(config: &CampaignConfig) -> Result<CampaignResult> {
    config.validate()?;
    let samples = (0..config.samples)
        .into_par_iter()
        .map(|index| {
            let seed = derive_seed(config.seed, index);
            let mut stream = sample_stream(&config.dist, seed);
            let report = build_report(&mut stream, config.length, config.max_len, &config.dist)?;
            let verdict = is_eps_normal(&report, &config.epsilon)?;
            Ok(SampleVerdict {
                index,
                seed,
                normal: verdict.normal,
                max_deviation: report.max_deviation,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let normal = samples.iter().filter(|s| s.normal).count();
    Ok(CampaignResult {
        fraction: Rational::new(BigInt::from(normal), BigInt::from(config.samples)),
        config: config.clone(),
        samples,
    })
}

const CANONICAL_CHECK_DIGITS: usize = 512;

/// Which case of the measure of the normal-number set applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DemoCase {
    /// `ρ({b−1}) = 1`: the set of normal numbers is `λ_ρ`-null.
    A,
    /// `ρ({b−1}) < 1`: the set of normal numbers has `λ_ρ`-measure 1.
    B,
}

#[derive(Clone, Debug)]
pub struct DemoOutcome {
    pub case: DemoCase,
    /// Canonical digits of the sampled number, as classified.
    pub canonical_prefix: Vec<Digit>,
    pub report: NormalityReport,
    pub verdict: EpsVerdict,
    pub text: String,
}

/// Samples a sequence from `μ_ρ`, maps it to a number, re-expands that number
/// canonically (no trailing `(b−1)`s, integer part discarded), and classifies
/// the canonical digits against `ρ`.
pub fn normal_number_demo(
    dist: &DigitDistribution,
    n: u64,
    max_len: usize,
    epsilon: &Rational,
    seed: Seed,
) -> Result<DemoOutcome> {
    if n == 0 || max_len == 0 {
        return Err(Error::InvalidParameter("n and K must be at least 1".into()));
    }
    let base = dist.base();
    let len = n + max_len as u64 - 1;
    let sampled = sample_stream(dist, seed).take_digits(len)?;
    let top = base.top();
    let case = if dist.prob(top).is_one() { DemoCase::A } else { DemoCase::B };

    let mut text = String::new();
    let canonical = match case {
        DemoCase::A => {
            // The sample is (b−1)(b−1)…, whose value is 1 = 1.000…; its
            // canonical fractional digits are all zero.
            debug_assert!(sampled.iter().all(|&d| d == top));
            writeln!(text, "rho({top}) = 1: every sampled sequence is {top},{top},{top},... almost surely").ok();
            writeln!(text, "its value is 1, whose canonical expansion 1.000... has no trailing {top}s").ok();
            writeln!(text, "the only sequence carrying mass is excluded from the canonical representatives,").ok();
            writeln!(text, "so the normal numbers form a null set").ok();
            vec![0; len as usize]
        }
        DemoCase::B => {
            // With ρ(b−1) < 1 a sampled sequence almost surely has infinitely
            // many digits below b−1, so it is its own canonical expansion. The
            // exact round trip is checked on a bounded prefix.
            let check = sampled.len().min(CANONICAL_CHECK_DIGITS);
            let x = psi_value(&DigitWord::new(base, sampled[..check].to_vec())?);
            let round_trip = rational_digits(&x, base)?.take_digits(check as u64)?;
            writeln!(text, "rho({top}) < 1: sampled {len} digits from the product measure").ok();
            writeln!(
                text,
                "canonical re-expansion of the first {check} digits reproduces them: {}",
                yes_no(round_trip == sampled[..check])
            )
            .ok();
            sampled
        }
    };
    let mut stream = VecStream::new(base, canonical.clone())?;
    let report = build_report(&mut stream, n, max_len, dist)?;
    let verdict = is_eps_normal(&report, epsilon)?;
    writeln!(text, "n={n} K={max_len} epsilon={epsilon} maxdev={}", report.max_deviation).ok();
    match case {
        DemoCase::A => writeln!(
            text,
            "normal-number demo: case (a): canonical representative excluded by the no-trailing-{top}s constraint; sample eps-normal: {}",
            yes_no(verdict.normal)
        ),
        DemoCase::B => writeln!(
            text,
            "normal-number demo: case (b), sample ε-normal: {}",
            yes_no(verdict.normal)
        ),
    }
    .ok();
    Ok(DemoOutcome { case, canonical_prefix: canonical, report, verdict, text })
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

impl DemoOutcome {
    pub fn is_zero_deviation(&self) -> bool {
        self.report.max_deviation.is_zero()
    }
}
