//! Digit streams: canonical expansions of rationals, square-root digits,
//! i.i.d. samplers, the block example `a0aa0aaa0…`, and files.

use std::fs::File;
use std::io::{BufReader, Bytes, Read};
use std::path::{Path, PathBuf};

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::alphabet::{Base, Digit, DigitDistribution, Rational};
use crate::error::{Error, Result};
use crate::measure::to_fixed_digits;
use crate::rng::CounterRng;

pub type Seed = u64;

/// Single-consumer producer of base-`b` digits.
pub trait DigitStream {
    fn base(&self) -> Base;

    /// The next digit, or `None` once a finite stream is exhausted.
    fn next_digit(&mut self) -> Result<Option<Digit>>;

    /// Total number of digits, when finite and known up front.
    fn known_len(&self) -> Option<u64> {
        None
    }

    fn description(&self) -> String;

    /// Reads exactly `n` digits or fails with `StreamExhausted`.
    fn take_digits(&mut self, n: u64) -> Result<Vec<Digit>> {
        let mut out = Vec::with_capacity(n.min(1 << 24) as usize);
        while (out.len() as u64) < n {
            match self.next_digit()? {
                Some(d) => out.push(d),
                None => {
                    return Err(Error::StreamExhausted { needed: n, available: out.len() as u64 });
                }
            }
        }
        Ok(out)
    }
}

impl<S: DigitStream + ?Sized> DigitStream for Box<S> {
    fn base(&self) -> Base {
        (**self).base()
    }
    fn next_digit(&mut self) -> Result<Option<Digit>> {
        (**self).next_digit()
    }
    fn known_len(&self) -> Option<u64> {
        (**self).known_len()
    }
    fn description(&self) -> String {
        (**self).description()
    }
}

/// A finite in-memory digit sequence.
#[derive(Clone, Debug)]
pub struct VecStream {
    base: Base,
    digits: Vec<Digit>,
    pos: usize,
}

impl VecStream {
    pub fn new(base: Base, digits: Vec<Digit>) -> Result<Self> {
        for &d in &digits {
            base.check_digit(d as u64)?;
        }
        Ok(VecStream { base, digits, pos: 0 })
    }
}

impl DigitStream for VecStream {
    fn base(&self) -> Base {
        self.base
    }
    fn next_digit(&mut self) -> Result<Option<Digit>> {
        let d = self.digits.get(self.pos).copied();
        self.pos += d.is_some() as usize;
        Ok(d)
    }
    fn known_len(&self) -> Option<u64> {
        Some(self.digits.len() as u64)
    }
    fn description(&self) -> String {
        format!("{} literal digits", self.digits.len())
    }
}

/// Canonical expansion of `x ∈ [0,1)` by exact long division: finite
/// expansions end in zeros, never in `(b−1)`s.
#[derive(Clone, Debug)]
pub struct RationalDigits {
    base: Base,
    b: BigUint,
    den: BigUint,
    rem: BigUint,
    label: String,
}

pub fn rational_digits(x: &Rational, base: Base) -> Result<RationalDigits> {
    if x.is_negative() || *x >= Rational::one() {
        return Err(Error::OutOfRange(x.to_string()));
    }
    Ok(RationalDigits {
        base,
        b: base.as_biguint(),
        den: x.denom().magnitude().clone(),
        rem: x.numer().magnitude().clone(),
        label: format!("rational {x} base {base}"),
    })
}

impl DigitStream for RationalDigits {
    fn base(&self) -> Base {
        self.base
    }
    fn next_digit(&mut self) -> Result<Option<Digit>> {
        let (q, r) = (&self.rem * &self.b).div_rem(&self.den);
        self.rem = r;
        Ok(Some(q.to_u32().expect("quotient below base")))
    }
    fn description(&self) -> String {
        self.label.clone()
    }
}

/// `⌊√n⌋` by Newton's iteration from above.
///
/// Starting at any `x₀ ≥ ⌊√n⌋`, the iterates `x ← (x + n/x)/2` decrease
/// strictly until they reach `⌊√n⌋`, after which the next iterate is not
/// smaller; that first non-decrease is the stopping rule.
pub fn isqrt(n: &BigUint) -> BigUint {
    if n.is_zero() {
        return BigUint::zero();
    }
    // 2^ceil(bits/2) > √n
    let x0 = BigUint::one() << n.bits().div_ceil(2);
    isqrt_from(n, x0)
}

fn isqrt_from(n: &BigUint, mut x: BigUint) -> BigUint {
    debug_assert!(!x.is_zero());
    loop {
        let y = (&x + n / &x) >> 1u32;
        if y >= x {
            return x;
        }
        x = y;
    }
}

/// Fractional digits of `√m`: digit `k` is `isqrt(m · b^{2k}) mod b`.
///
/// Digits are produced in blocks of doubling size. Each block recomputes
/// `s_K = isqrt(m · b^{2K})` for the block end `K`, seeding Newton's iteration
/// with `(s_k + 1)·b^{K−k}` from the previous block end, which is an upper
/// bound on `s_K`.
#[derive(Clone, Debug)]
pub struct SqrtDigits {
    base: Base,
    m: BigUint,
    /// `s_k` for the digits produced so far.
    root: BigUint,
    produced: usize,
    buffer: Vec<Digit>,
    cursor: usize,
}

pub fn sqrt_digits(m: &BigUint, base: Base) -> Result<SqrtDigits> {
    if *m < BigUint::from(2u32) {
        return Err(Error::NotANumber(m.to_string()));
    }
    let root = m.sqrt();
    if &root * &root == *m {
        return Err(Error::PerfectSquare(m.to_string()));
    }
    Ok(SqrtDigits {
        base,
        m: m.clone(),
        root,
        produced: 0,
        buffer: Vec::new(),
        cursor: 0,
    })
}

impl SqrtDigits {
    fn refill(&mut self) {
        let block = self.produced.clamp(32, 1 << 20);
        let target = self.produced + block;
        let scaled = &self.m * self.base.pow(2 * target);
        let guess = (&self.root + 1u32) * self.base.pow(block);
        let root = isqrt_from(&scaled, guess);
        let low = &root % self.base.pow(block);
        self.buffer = to_fixed_digits(&low, self.base, block);
        self.cursor = 0;
        self.root = root;
        self.produced = target;
    }
}

impl DigitStream for SqrtDigits {
    fn base(&self) -> Base {
        self.base
    }
    fn next_digit(&mut self) -> Result<Option<Digit>> {
        if self.cursor == self.buffer.len() {
            self.refill();
        }
        let d = self.buffer[self.cursor];
        self.cursor += 1;
        Ok(Some(d))
    }
    fn description(&self) -> String {
        format!("sqrt({}) base {}", self.m, self.base)
    }
}

/// Inverse-CDF table over the integer range `[0, L)`, `L` the least common
/// multiple of the denominators. Digit `r` owns exactly `p_r · L` integers.
#[derive(Clone, Debug)]
pub struct DigitSampler {
    range: BigUint,
    /// Cumulative upper bounds, `cum[r] = L · Σ_{s≤r} p_s`.
    cumulative: Vec<BigUint>,
    small: Option<(u64, Vec<u64>)>,
}

impl DigitSampler {
    pub fn new(dist: &DigitDistribution) -> Self {
        let range = dist.common_denominator();
        let l = Rational::from_integer(range.clone().into());
        let mut acc = BigUint::zero();
        let cumulative: Vec<BigUint> = dist
            .probabilities()
            .iter()
            .map(|p| {
                let share = (p * &l).to_integer();
                acc += share.magnitude();
                acc.clone()
            })
            .collect();
        debug_assert_eq!(cumulative.last(), Some(&range));
        let small = range.to_u64().map(|r| {
            let cum = cumulative.iter().map(|c| c.to_u64().expect("below range")).collect();
            (r, cum)
        });
        DigitSampler { range, cumulative, small }
    }

    pub fn range(&self) -> &BigUint {
        &self.range
    }

    pub fn cumulative(&self) -> &[BigUint] {
        &self.cumulative
    }

    /// The digit owning integer `u ∈ [0, L)`.
    pub fn digit_for(&self, u: &BigUint) -> Digit {
        self.cumulative.partition_point(|c| c <= u) as Digit
    }

    pub fn draw(&self, rng: &mut CounterRng) -> Digit {
        match &self.small {
            Some((range, cum)) => {
                let u = rng.below_u64(*range);
                cum.partition_point(|&c| c <= u) as Digit
            }
            None => self.digit_for(&rng.below_big(&self.range)),
        }
    }
}

/// I.i.d. digits with law `ρ`, reproducible from the seed.
#[derive(Clone, Debug)]
pub struct SampleStream {
    base: Base,
    sampler: DigitSampler,
    rng: CounterRng,
    seed: Seed,
}

pub fn sample_stream(dist: &DigitDistribution, seed: Seed) -> SampleStream {
    SampleStream {
        base: dist.base(),
        sampler: DigitSampler::new(dist),
        rng: CounterRng::new(seed),
        seed,
    }
}

impl DigitStream for SampleStream {
    fn base(&self) -> Base {
        self.base
    }
    fn next_digit(&mut self) -> Result<Option<Digit>> {
        Ok(Some(self.sampler.draw(&mut self.rng)))
    }
    fn description(&self) -> String {
        format!("i.i.d. sample base {} seed {}", self.base, self.seed)
    }
}

/// `a, 0, a, a, 0, a, a, a, 0, …`: block `i` is `i` copies of `a` then one `0`.
#[derive(Clone, Debug)]
pub struct BlockExampleStream {
    base: Base,
    digit: Digit,
    block: u64,
    offset: u64,
}

pub fn steinhaus_example_stream(a: Digit, base: Base) -> Result<BlockExampleStream> {
    base.check_digit(a as u64)?;
    if a == 0 {
        return Err(Error::DegenerateDigit);
    }
    Ok(BlockExampleStream { base, digit: a, block: 1, offset: 0 })
}

impl DigitStream for BlockExampleStream {
    fn base(&self) -> Base {
        self.base
    }
    fn next_digit(&mut self) -> Result<Option<Digit>> {
        if self.offset == self.block {
            self.block += 1;
            self.offset = 0;
            return Ok(Some(0));
        }
        self.offset += 1;
        Ok(Some(self.digit))
    }
    fn description(&self) -> String {
        format!("blocks of {} separated by 0, base {}", self.digit, self.base)
    }
}

/// Digits read from a file: ASCII digit characters for bases up to 10,
/// whitespace-separated decimal integers above that. Whitespace is ignored.
pub struct FileStream {
    base: Base,
    path: PathBuf,
    bytes: Bytes<BufReader<File>>,
    position: u64,
}

pub fn file_stream(path: &Path, base: Base) -> Result<FileStream> {
    let file = File::open(path).map_err(|source| Error::Io { path: path.to_owned(), source })?;
    Ok(FileStream {
        base,
        path: path.to_owned(),
        bytes: BufReader::new(file).bytes(),
        position: 0,
    })
}

impl FileStream {
    fn next_byte(&mut self) -> Result<Option<u8>> {
        self.bytes
            .next()
            .transpose()
            .map_err(|source| Error::Io { path: self.path.clone(), source })
    }

    fn next_non_space(&mut self) -> Result<Option<u8>> {
        while let Some(c) = self.next_byte()? {
            if !c.is_ascii_whitespace() {
                return Ok(Some(c));
            }
        }
        Ok(None)
    }
}

impl DigitStream for FileStream {
    fn base(&self) -> Base {
        self.base
    }

    fn next_digit(&mut self) -> Result<Option<Digit>> {
        let Some(first) = self.next_non_space()? else {
            return Ok(None);
        };
        self.position += 1;
        let mut token = vec![first];
        if self.base.get() > 10 {
            while let Some(c) = self.next_byte()? {
                if c.is_ascii_whitespace() {
                    break;
                }
                token.push(c);
            }
        }
        let text = String::from_utf8_lossy(&token).into_owned();
        let invalid = || Error::InvalidDigit { position: self.position, token: text.clone() };
        if !token.iter().all(u8::is_ascii_digit) {
            return Err(invalid());
        }
        let d: u64 = text.parse().map_err(|_| invalid())?;
        if d >= self.base.get() as u64 {
            return Err(invalid());
        }
        Ok(Some(d as Digit))
    }

    fn description(&self) -> String {
        format!("file {} base {}", self.path.display(), self.base)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::{make_distribution, parse_rational, uniform_distribution};
    use crate::measure::psi_value;
    use crate::DigitWord;

    fn r(s: &str) -> Rational {
        parse_rational(s).unwrap()
    }

    fn first(stream: &mut impl DigitStream, n: u64) -> Vec<Digit> {
        stream.take_digits(n).unwrap()
    }

    #[test]
    fn rational_examples() {
        assert_eq!(first(&mut rational_digits(&r("1/3"), Base::TEN).unwrap(), 5), [3, 3, 3, 3, 3]);
        assert_eq!(first(&mut rational_digits(&r("1/10"), Base::TEN).unwrap(), 5), [1, 0, 0, 0, 0]);
        assert_eq!(first(&mut rational_digits(&r("1/2"), Base::TWO).unwrap(), 4), [1, 0, 0, 0]);
        assert!(matches!(rational_digits(&r("1"), Base::TEN), Err(Error::OutOfRange(_))));
        assert!(rational_digits(&r("-1/3"), Base::TEN).is_err());
    }

    #[test]
    fn rational_prefix_brackets_value() {
        for x in ["1/7", "3/8", "999/1000", "0", "22/23"] {
            let x = r(x);
            for b in [2u64, 7, 10] {
                let base = Base::new(b).unwrap();
                let digits = first(&mut rational_digits(&x, base).unwrap(), 20);
                for n in 0..=20 {
                    let v = psi_value(&DigitWord::new(base, digits[..n].to_vec()).unwrap());
                    let step = Rational::new(1.into(), base.pow(n).into());
                    assert!(v <= x && x < v + step);
                }
            }
        }
    }

    #[test]
    fn isqrt_floor_guarantee() {
        for n in 0u64..2000 {
            let s = isqrt(&BigUint::from(n)).to_u64().unwrap();
            assert!(s * s <= n && (s + 1) * (s + 1) > n, "n={n}");
        }
        let big = BigUint::from(10u32).pow(101) + 12345u32;
        let s = isqrt(&big);
        assert!(&s * &s <= big && (&s + 1u32) * (&s + 1u32) > big);
    }

    #[test]
    fn sqrt_examples() {
        let two = BigUint::from(2u32);
        assert_eq!(
            first(&mut sqrt_digits(&two, Base::TEN).unwrap(), 10),
            [4, 1, 4, 2, 1, 3, 5, 6, 2, 3]
        );
        assert_eq!(
            first(&mut sqrt_digits(&BigUint::from(3u32), Base::TEN).unwrap(), 5),
            [7, 3, 2, 0, 5]
        );
        assert!(matches!(sqrt_digits(&BigUint::from(4u32), Base::TEN), Err(Error::PerfectSquare(_))));
        assert!(matches!(sqrt_digits(&BigUint::from(1u32), Base::TEN), Err(Error::NotANumber(_))));
        // √2 = 1.0110101000001001111... in binary
        assert_eq!(
            first(&mut sqrt_digits(&two, Base::TWO).unwrap(), 12),
            [0, 1, 1, 0, 1, 0, 1, 0, 0, 0, 0, 0]
        );
    }

    #[test]
    fn sqrt_blocks_match_fresh_isqrt() {
        for (m, b) in [(2u32, 10u64), (7, 3), (1000003, 16), (5, 300)] {
            let base = Base::new(b).unwrap();
            let m = BigUint::from(m);
            let digits = first(&mut sqrt_digits(&m, base).unwrap(), 300);
            for k in [1usize, 2, 31, 32, 33, 95, 96, 97, 299, 300] {
                let s = isqrt(&(&m * base.pow(2 * k)));
                assert_eq!((&s % base.as_biguint()).to_u32().unwrap(), digits[k - 1], "m={m} b={b} k={k}");
            }
        }
    }

    #[test]
    fn sampler_partition_is_exact() {
        let mut ps = vec![r("7/90"); 9];
        ps.push(r("3/10"));
        let dist = make_distribution(Base::TEN, ps).unwrap();
        let sampler = DigitSampler::new(&dist);
        let l = sampler.range().to_u64().unwrap();
        assert_eq!(l, 90);
        let mut counts = [0u64; 10];
        for u in 0..l {
            counts[sampler.digit_for(&BigUint::from(u)) as usize] += 1;
        }
        for (d, &c) in counts.iter().enumerate() {
            assert_eq!(Rational::new(c.into(), l.into()), *dist.prob(d as Digit));
        }
    }

    #[test]
    fn sampler_skips_zero_mass_digits() {
        let dist = make_distribution(
            Base::new(4).unwrap(),
            vec![r("0"), r("1/2"), r("0"), r("1/2")],
        )
        .unwrap();
        let mut s = sample_stream(&dist, 3);
        assert!(first(&mut s, 1000).iter().all(|&d| d == 1 || d == 3));
    }

    #[test]
    fn degenerate_samples() {
        let mut ps = vec![r("0"); 10];
        ps[9] = r("1");
        let d9 = make_distribution(Base::TEN, ps).unwrap();
        assert!(first(&mut sample_stream(&d9, 17), 100).iter().all(|&d| d == 9));
        let mut ps = vec![r("0"); 10];
        ps[0] = r("1");
        let d0 = make_distribution(Base::TEN, ps).unwrap();
        assert!(first(&mut sample_stream(&d0, 99), 100).iter().all(|&d| d == 0));
    }

    #[test]
    fn uniform_sample_frequencies() {
        let u = uniform_distribution(Base::TEN);
        let digits = first(&mut sample_stream(&u, 2024), 100_000);
        let mut counts = [0u32; 10];
        for d in digits {
            counts[d as usize] += 1;
        }
        for c in counts {
            assert!((c as f64 / 1e5 - 0.1).abs() < 0.01, "{counts:?}");
        }
    }

    #[test]
    fn samples_are_reproducible() {
        let u = uniform_distribution(Base::new(7).unwrap());
        let a = first(&mut sample_stream(&u, 5), 500);
        let b = first(&mut sample_stream(&u, 5), 500);
        let c = first(&mut sample_stream(&u, 6), 500);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn block_example() {
        let mut s = steinhaus_example_stream(5, Base::TEN).unwrap();
        let d = first(&mut s, 9);
        assert_eq!(d, [5, 0, 5, 5, 0, 5, 5, 5, 0]);
        assert_eq!(d.iter().filter(|&&x| x == 5).count(), 6);
        assert!(matches!(steinhaus_example_stream(0, Base::TEN), Err(Error::DegenerateDigit)));
        assert!(steinhaus_example_stream(10, Base::TEN).is_err());

        let nines = first(&mut steinhaus_example_stream(9, Base::TEN).unwrap(), 10_000);
        let freq = nines.iter().filter(|&&x| x == 9).count() as f64 / 1e4;
        assert!(freq >= 0.98, "{freq}");
    }

    #[test]
    fn block_example_zero_positions() {
        let digits = first(&mut steinhaus_example_stream(3, Base::new(4).unwrap()).unwrap(), 2000);
        let zeros: Vec<usize> = digits
            .iter()
            .enumerate()
            .filter(|(_, &d)| d == 0)
            .map(|(i, _)| i + 1)
            .collect();
        let expected: Vec<usize> = (1..)
            .map(|m| (1..=m).map(|i| i + 1).sum::<usize>())
            .take_while(|&p| p <= 2000)
            .collect();
        assert_eq!(zeros, expected);
    }

    #[test]
    fn file_examples() {
        let dir = std::env::temp_dir().join(format!("digitmeasure-src-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let write = |name: &str, text: &str| {
            let p = dir.join(name);
            std::fs::write(&p, text).unwrap();
            p
        };

        let p = write("pi.txt", "314\n159\n");
        let mut s = file_stream(&p, Base::TEN).unwrap();
        assert_eq!(first(&mut s, 6), [3, 1, 4, 1, 5, 9]);
        assert_eq!(s.next_digit().unwrap(), None);

        let p = write("bad.txt", "012");
        let mut s = file_stream(&p, Base::TWO).unwrap();
        assert!(matches!(s.take_digits(3), Err(Error::InvalidDigit { position: 3, .. })));

        let p = write("hex.txt", "10 3\t7\n");
        assert_eq!(first(&mut file_stream(&p, Base::new(16).unwrap()).unwrap(), 3), [10, 3, 7]);

        assert!(matches!(file_stream(&dir.join("missing"), Base::TEN), Err(Error::Io { .. })));
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn exhausted_stream() {
        let mut s = VecStream::new(Base::TEN, vec![1, 2]).unwrap();
        assert!(matches!(
            s.take_digits(3),
            Err(Error::StreamExhausted { needed: 3, available: 2 })
        ));
    }
}
