//! Overlapping word counts `S(w, B_k, n)` and normality reports.
//!
//! `S(w, B_k, n)` counts start positions `i ∈ {1, …, n}` with
//! `a_{i+j−1} = b_j` for all `j ≤ k`. Windows starting at `i ≤ n` read up to
//! position `n + k − 1`, so a report over `n` positions and word lengths up to
//! `K` consumes `n + K − 1` digits.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use rayon::prelude::*;

use crate::alphabet::{digits_probability, format_digits, Base, Digit, DigitDistribution, DigitWord, Rational};
use crate::error::{Error, Result};
use crate::sources::DigitStream;

/// Default bound on `Σ_{k≤K} b^k` for dense tables and full reports.
pub const DEFAULT_TABLE_BOUND: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StorageKind {
    Dense,
    Sparse,
}

#[derive(Clone, Debug)]
enum Storage {
    /// `counts[offsets[k−1] + code]` for words of length `k`.
    Dense { offsets: Vec<usize>, counts: Vec<u64> },
    Sparse(HashMap<(usize, u128), u64>),
}

/// Streaming counter of overlapping words of every length `1..=K`.
///
/// Without a start limit it counts every window lying fully inside the
/// consumed digits. With a start limit `n` it counts only windows starting at
/// positions `1..=n`.
#[derive(Clone, Debug)]
pub struct WordCounter {
    base: Base,
    max_len: usize,
    start_limit: Option<u64>,
    consumed: u64,
    /// `codes[k−1]` encodes the last `k` digits, most significant first.
    codes: Vec<u128>,
    tail: VecDeque<Digit>,
    storage: Storage,
}

/// `Σ_{k≤K} b^k`, or `None` on overflow.
fn table_size(base: Base, max_len: usize) -> Option<u64> {
    let b = base.get() as u64;
    let mut pow = 1u64;
    let mut total = 0u64;
    for _ in 0..max_len {
        pow = pow.checked_mul(b)?;
        total = total.checked_add(pow)?;
    }
    Some(total)
}

impl WordCounter {
    /// Picks dense storage when the table fits [`DEFAULT_TABLE_BOUND`].
    pub fn new(base: Base, max_len: usize) -> Result<Self> {
        let kind = match table_size(base, max_len) {
            Some(t) if t <= DEFAULT_TABLE_BOUND => StorageKind::Dense,
            _ => StorageKind::Sparse,
        };
        Self::with_storage(base, max_len, kind)
    }

    pub fn with_storage(base: Base, max_len: usize, kind: StorageKind) -> Result<Self> {
        if max_len == 0 {
            return Err(Error::InvalidParameter("max word length must be at least 1".into()));
        }
        // Word codes are u128.
        if num_traits::checked_pow(u128::from(base.get()), max_len).is_none() {
            return Err(Error::ExplosiveK { base: base.get(), max_len, bound: u64::MAX });
        }
        let storage = match kind {
            StorageKind::Dense => {
                let size = table_size(base, max_len)
                    .filter(|&t| t <= DEFAULT_TABLE_BOUND)
                    .ok_or(Error::ExplosiveK { base: base.get(), max_len, bound: DEFAULT_TABLE_BOUND })?;
                let mut offsets = Vec::with_capacity(max_len);
                let mut off = 0usize;
                let mut pow = 1usize;
                for _ in 0..max_len {
                    offsets.push(off);
                    pow *= base.get() as usize;
                    off += pow;
                }
                debug_assert_eq!(off as u64, size);
                Storage::Dense { offsets, counts: vec![0; size as usize] }
            }
            StorageKind::Sparse => Storage::Sparse(HashMap::new()),
        };
        Ok(WordCounter {
            base,
            max_len,
            start_limit: None,
            consumed: 0,
            codes: vec![0; max_len],
            tail: VecDeque::with_capacity(max_len),
            storage,
        })
    }

    pub fn with_start_limit(mut self, n: u64) -> Self {
        self.start_limit = Some(n);
        self
    }

    pub fn base(&self) -> Base {
        self.base
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn consumed(&self) -> u64 {
        self.consumed
    }

    pub fn storage_kind(&self) -> StorageKind {
        match self.storage {
            Storage::Dense { .. } => StorageKind::Dense,
            Storage::Sparse(_) => StorageKind::Sparse,
        }
    }

    /// The last `min(K−1, consumed)` digits.
    pub fn tail(&self) -> Vec<Digit> {
        self.tail.iter().copied().collect()
    }

    #[inline]
    fn bump(&mut self, k: usize, code: u128, delta: i64) {
        match &mut self.storage {
            Storage::Dense { offsets, counts } => {
                let slot = &mut counts[offsets[k - 1] + code as usize];
                *slot = slot.checked_add_signed(delta).expect("count underflow");
            }
            Storage::Sparse(map) => {
                let slot = map.entry((k, code)).or_insert(0);
                *slot = slot.checked_add_signed(delta).expect("count underflow");
                if *slot == 0 {
                    map.remove(&(k, code));
                }
            }
        }
    }

    pub fn push(&mut self, d: Digit) {
        debug_assert!(d < self.base.get());
        let b = self.base.get() as u128;
        for k in (1..self.max_len).rev() {
            self.codes[k] = self.codes[k - 1] * b + d as u128;
        }
        self.codes[0] = d as u128;
        self.consumed += 1;
        if self.max_len > 1 {
            if self.tail.len() == self.max_len - 1 {
                self.tail.pop_front();
            }
            self.tail.push_back(d);
        }
        let available = self.consumed.min(self.max_len as u64) as usize;
        for k in 1..=available {
            // 1-based start of the window of length k ending here.
            let start = self.consumed - k as u64 + 1;
            if self.start_limit.is_some_and(|n| start > n) {
                continue;
            }
            self.bump(k, self.codes[k - 1], 1);
        }
    }

    pub fn extend_from_slice(&mut self, digits: &[Digit]) {
        for &d in digits {
            self.push(d);
        }
    }

    /// Pulls `count` digits from the stream.
    pub fn consume(&mut self, stream: &mut dyn DigitStream, count: u64) -> Result<()> {
        self.base.ensure_same(stream.base())?;
        for i in 0..count {
            match stream.next_digit()? {
                Some(d) => self.push(d),
                None => return Err(Error::StreamExhausted { needed: count, available: i }),
            }
        }
        Ok(())
    }

    fn encode(&self, word: &[Digit]) -> u128 {
        let b = self.base.get() as u128;
        word.iter().fold(0u128, |acc, &d| acc * b + d as u128)
    }

    /// Occurrences of `word` (length `1..=K`).
    pub fn count(&self, word: &[Digit]) -> u64 {
        let k = word.len();
        assert!((1..=self.max_len).contains(&k), "word length {k} outside 1..={}", self.max_len);
        let code = self.encode(word);
        match &self.storage {
            Storage::Dense { offsets, counts } => counts[offsets[k - 1] + code as usize],
            Storage::Sparse(map) => map.get(&(k, code)).copied().unwrap_or(0),
        }
    }

    /// Nonzero entries as `(length, code, count)`, in no particular order.
    fn entries(&self) -> Vec<(usize, u128, u64)> {
        match &self.storage {
            Storage::Dense { offsets, counts } => {
                let mut out = Vec::new();
                for (k, &off) in offsets.iter().enumerate() {
                    let end = offsets.get(k + 1).copied().unwrap_or(counts.len());
                    for (code, &c) in counts[off..end].iter().enumerate() {
                        if c > 0 {
                            out.push((k + 1, code as u128, c));
                        }
                    }
                }
                out
            }
            Storage::Sparse(map) => map.iter().map(|(&(k, code), &c)| (k, code, c)).collect(),
        }
    }

    /// Adds the counts of `other`.
    pub fn absorb(&mut self, other: &WordCounter) -> Result<()> {
        self.check_compatible(other)?;
        for (k, code, c) in other.entries() {
            self.bump(k, code, c as i64);
        }
        Ok(())
    }

    /// Removes the counts of `other`, which must be dominated by `self`.
    pub fn subtract(&mut self, other: &WordCounter) -> Result<()> {
        self.check_compatible(other)?;
        for (k, code, c) in other.entries() {
            self.bump(k, code, -(c as i64));
        }
        Ok(())
    }

    fn check_compatible(&self, other: &WordCounter) -> Result<()> {
        self.base.ensure_same(other.base)?;
        if self.max_len != other.max_len {
            return Err(Error::InvalidParameter(format!(
                "max word lengths differ: {} vs {}",
                self.max_len, other.max_len
            )));
        }
        Ok(())
    }

    /// True when both counters hold identical counts for every word.
    pub fn same_counts(&self, other: &WordCounter) -> bool {
        let mut a = self.entries();
        let mut b = other.entries();
        a.sort_unstable();
        b.sort_unstable();
        a == b
    }
}

/// Counts windows starting at `1..=n` over `digits` (length `n + K − 1`) by
/// splitting into `chunks` pieces that overlap by `K − 1` digits, counting
/// each in parallel, and removing the double-counted windows that lie fully
/// inside each overlap and past position `n`.
pub fn count_chunked(digits: &[Digit], base: Base, max_len: usize, n: u64, chunks: usize) -> Result<WordCounter> {
    let needed = n + max_len as u64 - 1;
    if (digits.len() as u64) < needed {
        return Err(Error::StreamExhausted { needed, available: digits.len() as u64 });
    }
    let total = needed as usize;
    let digits = &digits[..total];
    let overlap = max_len - 1;
    let chunks = chunks.clamp(1, (n as usize).max(1));
    let step = (n as usize).div_ceil(chunks).max(1);
    let starts: Vec<usize> = (0..n as usize).step_by(step).collect();

    let fresh = || WordCounter::new(base, max_len);
    let counters = starts
        .par_iter()
        .enumerate()
        .map(|(i, &s)| -> Result<(WordCounter, WordCounter)> {
            let next = starts.get(i + 1).copied().unwrap_or(n as usize);
            let mut c = fresh()?;
            c.extend_from_slice(&digits[s..(next + overlap).min(total)]);
            // Windows inside digits[next .. next+K−1] are seen again by the
            // following chunk, or start past n for the last chunk.
            let mut dup = fresh()?;
            dup.extend_from_slice(&digits[next..(next + overlap).min(total)]);
            Ok((c, dup))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut merged = fresh()?.with_start_limit(n);
    for (c, dup) in &counters {
        merged.absorb(c)?;
        merged.subtract(dup)?;
    }
    merged.consumed = needed;
    merged.tail = digits[total - overlap.min(total)..].iter().copied().collect();
    Ok(merged)
}

/// `S(w, r, n)`: occurrences of digit `r` among the first `n` digits.
pub fn count_simple(stream: &mut dyn DigitStream, r: Digit, n: u64) -> Result<u64> {
    stream.base().check_digit(r as u64)?;
    let mut hits = 0;
    for i in 0..n {
        match stream.next_digit()? {
            Some(d) => hits += (d == r) as u64,
            None => return Err(Error::StreamExhausted { needed: n, available: i }),
        }
    }
    Ok(hits)
}

/// `S(w, B_k, n)`: overlapping occurrences of `word` starting at `1..=n`.
/// Reads `n + k − 1` digits.
pub fn count_word(stream: &mut dyn DigitStream, word: &DigitWord, n: u64) -> Result<u64> {
    stream.base().ensure_same(word.base())?;
    let w = word.digits();
    if w.is_empty() {
        return Err(Error::InvalidParameter("word must be nonempty".into()));
    }
    if n == 0 {
        return Ok(0);
    }
    let k = w.len();
    let needed = n + k as u64 - 1;
    let mut window: VecDeque<Digit> = VecDeque::with_capacity(k);
    let mut hits = 0;
    for i in 0..needed {
        let d = stream
            .next_digit()?
            .ok_or(Error::StreamExhausted { needed, available: i })?;
        if window.len() == k {
            window.pop_front();
        }
        window.push_back(d);
        if window.len() == k && window.iter().eq(w.iter()) {
            hits += 1;
        }
    }
    Ok(hits)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReportRow {
    pub word: DigitWord,
    pub count: u64,
    /// `count / n`
    pub frequency: Rational,
    /// `∏_j ρ({b_j})`
    pub target: Rational,
    pub deviation: Rational,
}

impl fmt::Display for ReportRow {
    /// `word<TAB>count<TAB>frequency<TAB>target<TAB>deviation`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}\t{}\t{}",
            self.word, self.count, self.frequency, self.target, self.deviation
        )
    }
}

/// Empirical word frequencies over `n` start positions against the products
/// of target digit probabilities.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormalityReport {
    pub base: Base,
    pub max_len: usize,
    pub n: u64,
    pub target: DigitDistribution,
    /// All `b^k` words for each `k = 1..=K`, lexicographic within a length.
    pub rows: Vec<ReportRow>,
    /// Entry `k−1` is the largest deviation among words of length `k`.
    pub max_deviation_by_len: Vec<Rational>,
    pub max_deviation: Rational,
}

impl NormalityReport {
    pub fn rows_of_len(&self, k: usize) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(move |r| r.word.len() == k)
    }

    pub fn row(&self, word: &[Digit]) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.word.digits() == word)
    }

    /// Builds a report from a counter holding windows starting at `1..=n`.
    pub fn from_counter(counter: &WordCounter, n: u64, target: &DigitDistribution) -> Result<Self> {
        let base = counter.base();
        base.ensure_same(target.base())?;
        if n == 0 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        let max_len = counter.max_len();
        check_report_size(base, max_len)?;
        let n_big = BigInt::from(n);
        let mut rows = Vec::new();
        let mut by_len = Vec::with_capacity(max_len);
        let mut word = Vec::with_capacity(max_len);
        for k in 1..=max_len {
            word.clear();
            word.resize(k, 0);
            let mut worst = Rational::zero();
            loop {
                let count = counter.count(&word);
                let frequency = Rational::new(BigInt::from(count), n_big.clone());
                let target_p = digits_probability(target, &word);
                let deviation = (&frequency - &target_p).abs();
                if deviation > worst {
                    worst = deviation.clone();
                }
                rows.push(ReportRow {
                    word: DigitWord::from_trusted(base, word.clone()),
                    count,
                    frequency,
                    target: target_p,
                    deviation,
                });
                if !increment(&mut word, base) {
                    break;
                }
            }
            by_len.push(worst);
        }
        let max_deviation = by_len.iter().max().cloned().unwrap_or_else(Rational::zero);
        Ok(NormalityReport {
            base,
            max_len,
            n,
            target: target.clone(),
            rows,
            max_deviation_by_len: by_len,
            max_deviation,
        })
    }

    /// Tab-separated table with a header, one row per word, then one
    /// `maxdev k=<k> <rational>` line per length.
    pub fn to_tsv(&self, with_rows: bool) -> String {
        let mut out = String::new();
        if with_rows {
            out.push_str("word\tcount\tfrequency\ttarget\tdeviation\n");
            for r in &self.rows {
                out.push_str(&r.to_string());
                out.push('\n');
            }
        }
        for (k, d) in self.max_deviation_by_len.iter().enumerate() {
            out.push_str(&format!("maxdev k={} {}\n", k + 1, d));
        }
        out
    }
}

/// Lexicographic successor; false after the last word.
fn increment(word: &mut [Digit], base: Base) -> bool {
    for d in word.iter_mut().rev() {
        if *d + 1 < base.get() {
            *d += 1;
            return true;
        }
        *d = 0;
    }
    false
}

fn check_report_size(base: Base, max_len: usize) -> Result<()> {
    match table_size(base, max_len) {
        Some(t) if t <= DEFAULT_TABLE_BOUND => Ok(()),
        _ => Err(Error::ExplosiveK { base: base.get(), max_len, bound: DEFAULT_TABLE_BOUND }),
    }
}

/// Single pass over `n + K − 1` digits filling counts for every length
/// `1..=K`, then a full report against `target`.
pub fn build_report(
    stream: &mut dyn DigitStream,
    n: u64,
    max_len: usize,
    target: &DigitDistribution,
) -> Result<NormalityReport> {
    let base = stream.base();
    base.ensure_same(target.base())?;
    if n == 0 || max_len == 0 {
        return Err(Error::InvalidParameter("n and K must be at least 1".into()));
    }
    check_report_size(base, max_len)?;
    let mut counter = WordCounter::new(base, max_len)?.with_start_limit(n);
    counter.consume(stream, n + max_len as u64 - 1)?;
    NormalityReport::from_counter(&counter, n, target)
}

/// Finite-depth ε-normality verdict.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EpsVerdict {
    pub normal: bool,
    /// The word with the largest deviation above ε, when there is one.
    pub witness: Option<ReportRow>,
    pub epsilon: Rational,
    pub n: u64,
    pub max_len: usize,
}

impl fmt::Display for EpsVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.witness {
            None => write!(f, "eps-normal: yes"),
            Some(w) => {
                write!(f, "eps-normal: no ")?;
                format_digits(f, w.word.base(), w.word.digits())
            }
        }
    }
}

/// True iff every row has deviation at most `epsilon`.
pub fn is_eps_normal(report: &NormalityReport, epsilon: &Rational) -> Result<EpsVerdict> {
    if !epsilon.is_positive() {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    let witness = report
        .rows
        .iter()
        .filter(|r| r.deviation > *epsilon)
        .fold(None::<&ReportRow>, |best, r| match best {
            Some(b) if b.deviation >= r.deviation => Some(b),
            _ => Some(r),
        })
        .cloned();
    Ok(EpsVerdict {
        normal: witness.is_none(),
        witness,
        epsilon: epsilon.clone(),
        n: report.n,
        max_len: report.max_len,
    })
}
