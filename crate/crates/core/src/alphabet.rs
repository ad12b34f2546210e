//! Digit alphabets, digit words, exact rationals and digit distributions.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Exact rational number, always in lowest terms with a positive denominator.
pub type Rational = BigRational;

/// A single digit. Always smaller than the base it is used with.
pub type Digit = u32;

/// Number of symbols `b` in the alphabet `{0, …, b−1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Base(u32);

impl Base {
    pub const MAX: u32 = 1 << 16;
    pub const TEN: Base = Base(10);
    pub const TWO: Base = Base(2);

    pub fn new(b: u64) -> Result<Self> {
        if (2..=Self::MAX as u64).contains(&b) {
            Ok(Base(b as u32))
        } else {
            Err(Error::InvalidBase(b))
        }
    }

    pub fn get(self) -> u32 {
        self.0
    }

    /// The largest digit, `b − 1`.
    pub fn top(self) -> Digit {
        self.0 - 1
    }

    pub fn check_digit(self, d: u64) -> Result<Digit> {
        if d < self.0 as u64 {
            Ok(d as Digit)
        } else {
            Err(Error::DigitOutOfRange { digit: d, base: self.0 })
        }
    }

    pub fn ensure_same(self, other: Base) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::BaseMismatch { left: self.0, right: other.0 })
        }
    }

    pub fn as_biguint(self) -> BigUint {
        BigUint::from(self.0)
    }

    /// `b^k` as an exact integer.
    pub fn pow(self, k: usize) -> BigUint {
        num_traits::pow(self.as_biguint(), k)
    }
}

impl fmt::Display for Base {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// A finite, possibly empty, sequence of digits of one base.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DigitWord {
    base: Base,
    digits: Vec<Digit>,
}

impl DigitWord {
    pub fn new(base: Base, digits: Vec<Digit>) -> Result<Self> {
        for &d in &digits {
            base.check_digit(d as u64)?;
        }
        Ok(DigitWord { base, digits })
    }

    pub fn empty(base: Base) -> Self {
        DigitWord { base, digits: Vec::new() }
    }

    /// Parses a word written as ASCII digits (bases up to 10) or as
    /// `.`-separated decimal integers (any base), e.g. `"37"` or `"10.3.7"`.
    pub fn parse(base: Base, s: &str) -> Result<Self> {
        let digits = if s.contains('.') || base.get() > 10 {
            s.split('.')
                .filter(|t| !t.is_empty())
                .map(|t| {
                    t.parse::<u64>()
                        .map_err(|_| Error::Parse(format!("bad digit {t:?} in word {s:?}")))
                })
                .collect::<Result<Vec<_>>>()?
        } else {
            s.chars()
                .map(|c| {
                    c.to_digit(10)
                        .map(u64::from)
                        .ok_or_else(|| Error::Parse(format!("bad digit {c:?} in word {s:?}")))
                })
                .collect::<Result<Vec<_>>>()?
        };
        let digits = digits
            .into_iter()
            .map(|d| base.check_digit(d))
            .collect::<Result<Vec<_>>>()?;
        Ok(DigitWord { base, digits })
    }

    pub(crate) fn from_trusted(base: Base, digits: Vec<Digit>) -> Self {
        debug_assert!(digits.iter().all(|&d| d < base.get()));
        DigitWord { base, digits }
    }

    pub fn base(&self) -> Base {
        self.base
    }

    pub fn digits(&self) -> &[Digit] {
        &self.digits
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn concat(&self, other: &DigitWord) -> Result<DigitWord> {
        self.base.ensure_same(other.base)?;
        let mut digits = self.digits.clone();
        digits.extend_from_slice(&other.digits);
        Ok(DigitWord { base: self.base, digits })
    }

    pub fn into_digits(self) -> Vec<Digit> {
        self.digits
    }
}

impl fmt::Display for DigitWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        format_digits(f, self.base, &self.digits)
    }
}

pub(crate) fn format_digits(f: &mut impl fmt::Write, base: Base, digits: &[Digit]) -> fmt::Result {
    if base.get() <= 10 {
        for d in digits {
            write!(f, "{d}")?;
        }
    } else {
        for (i, d) in digits.iter().enumerate() {
            if i > 0 {
                f.write_char('.')?;
            }
            write!(f, "{d}")?;
        }
    }
    Ok(())
}

/// Parses an exact rational written as `n/d` or as an integer.
///
/// Decimal literals such as `0.1` are rejected.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not an exact rational: {s:?} (expected n/d or an integer)"));
    let int = |t: &str| -> Result<BigInt> {
        let t = t.trim();
        let digits = t.strip_prefix(['-', '+']).unwrap_or(t);
        if digits.is_empty() || !digits.bytes().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        BigInt::from_str(t).map_err(|_| bad())
    };
    match s.split_once('/') {
        Some((n, d)) => {
            let n = int(n)?;
            let d = int(d)?;
            if d.is_zero() {
                return Err(Error::Parse(format!("zero denominator in {s:?}")));
            }
            Ok(Rational::new(n, d))
        }
        None => Ok(Rational::from_integer(int(s)?)),
    }
}

/// Exact probability vector `p_0, …, p_{b−1}` over the digits of a base.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DigitDistribution {
    base: Base,
    probabilities: Vec<Rational>,
}

impl DigitDistribution {
    pub fn base(&self) -> Base {
        self.base
    }

    pub fn probabilities(&self) -> &[Rational] {
        &self.probabilities
    }

    pub fn prob(&self, d: Digit) -> &Rational {
        &self.probabilities[d as usize]
    }

    /// The digit carrying all the mass, if there is one.
    pub fn degenerate_digit(&self) -> Option<Digit> {
        self.probabilities
            .iter()
            .position(|p| p.is_one())
            .map(|d| d as Digit)
    }

    /// Least common multiple of all denominators.
    pub fn common_denominator(&self) -> BigUint {
        self.probabilities.iter().fold(BigUint::one(), |acc, p| {
            let d = p.denom().magnitude();
            acc.lcm(d)
        })
    }

    /// Parses the distribution text format: `base <b>` on the first line,
    /// then `b` whitespace-separated exact rationals, `p_0` first.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty distribution file".into()))?;
        let b = match header.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["base", b] => b
                .parse::<u64>()
                .map_err(|_| Error::Parse(format!("bad base in header {header:?}")))?,
            _ => return Err(Error::Parse(format!("expected `base <b>` header, got {header:?}"))),
        };
        let base = Base::new(b)?;
        let probabilities = lines
            .flat_map(str::split_whitespace)
            .map(parse_rational)
            .collect::<Result<Vec<_>>>()?;
        make_distribution(base, probabilities)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::parse(&text)
    }
}

impl fmt::Display for DigitDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "base {}", self.base)?;
        for (i, p) in self.probabilities.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{p}")?;
        }
        writeln!(f)
    }
}

pub fn make_distribution(base: Base, probabilities: Vec<Rational>) -> Result<DigitDistribution> {
    if probabilities.len() != base.get() as usize {
        return Err(Error::WrongArity {
            expected: base.get() as usize,
            got: probabilities.len(),
        });
    }
    if let Some((digit, p)) = probabilities.iter().enumerate().find(|(_, p)| p.is_negative()) {
        return Err(Error::NegativeMass { digit, value: p.to_string() });
    }
    let total: Rational = probabilities.iter().sum();
    if !total.is_one() {
        return Err(Error::NonUnitMass(total.to_string()));
    }
    Ok(DigitDistribution { base, probabilities })
}

pub fn uniform_distribution(base: Base) -> DigitDistribution {
    let p = Rational::new(BigInt::one(), BigInt::from(base.get()));
    DigitDistribution {
        base,
        probabilities: vec![p; base.get() as usize],
    }
}

/// `∏_j p_{w_j}`; the empty word has probability 1.
pub fn word_probability(dist: &DigitDistribution, word: &DigitWord) -> Result<Rational> {
    dist.base.ensure_same(word.base)?;
    Ok(digits_probability(dist, &word.digits))
}

pub(crate) fn digits_probability(dist: &DigitDistribution, digits: &[Digit]) -> Rational {
    let mut acc = Rational::one();
    for &d in digits {
        let p = dist.prob(d);
        if p.is_zero() {
            return Rational::zero();
        }
        acc *= p;
    }
    acc
}
