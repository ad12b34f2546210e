//! Product measures of prefix cylinders and their pushforward to `[0,1]`.
//!
//! A sequence `(a_j)` of base-`b` digits evaluates to `Ψ(a) = Σ a_j b^{−j}`.
//! For a digit distribution `ρ`, the pushforward `λ_ρ(E) = μ_ρ(Ψ^{−1}(E))` is
//! computed exactly on closed intervals with finite-expansion endpoints by
//! splitting the preimage into disjoint prefix cylinders plus at most two
//! single sequences (the tails `b_1…b_n 0 0 …` and `a_1…(a_m−1)(b−1)(b−1)…`).

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::alphabet::{digits_probability, format_digits, Base, Digit, DigitDistribution, DigitWord, Rational};
use crate::error::{Error, Result};

/// A subset of the alphabet, used as the constraint at one position.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DigitSubset {
    base: Base,
    members: BTreeSet<Digit>,
}

impl DigitSubset {
    pub fn from_digits(base: Base, digits: impl IntoIterator<Item = Digit>) -> Result<Self> {
        let members = digits
            .into_iter()
            .map(|d| base.check_digit(d as u64))
            .collect::<Result<BTreeSet<_>>>()?;
        Ok(DigitSubset { base, members })
    }

    fn range(base: Base, lo: u64, hi_exclusive: u64) -> Self {
        let hi = hi_exclusive.min(base.get() as u64);
        DigitSubset {
            base,
            members: (lo..hi.max(lo)).map(|d| d as Digit).collect(),
        }
    }

    /// `Ω`
    pub fn full(base: Base) -> Self {
        Self::range(base, 0, base.get() as u64)
    }

    pub fn empty(base: Base) -> Self {
        DigitSubset { base, members: BTreeSet::new() }
    }

    /// `{r}`
    pub fn singleton(base: Base, r: Digit) -> Self {
        Self::range(base, r as u64, r as u64 + 1)
    }

    /// `{>a}`
    pub fn above(base: Base, a: Digit) -> Self {
        Self::range(base, a as u64 + 1, base.get() as u64)
    }

    /// `{<a}`
    pub fn below(base: Base, a: Digit) -> Self {
        Self::range(base, 0, a as u64)
    }

    /// `{≥a}`
    pub fn at_least(base: Base, a: Digit) -> Self {
        Self::range(base, a as u64, base.get() as u64)
    }

    /// `{≤a}`
    pub fn at_most(base: Base, a: Digit) -> Self {
        Self::range(base, 0, a as u64 + 1)
    }

    /// `{>a,<c}`; empty when `c ≤ a + 1`.
    pub fn strictly_between(base: Base, a: Digit, c: Digit) -> Self {
        Self::range(base, a as u64 + 1, c as u64)
    }

    pub fn base(&self) -> Base {
        self.base
    }

    pub fn contains(&self, d: Digit) -> bool {
        self.members.contains(&d)
    }

    pub fn members(&self) -> impl Iterator<Item = Digit> + '_ {
        self.members.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.members.len() == self.base.get() as usize
    }

    pub fn is_disjoint(&self, other: &DigitSubset) -> bool {
        self.members.is_disjoint(&other.members)
    }

    /// `Σ_{d ∈ S} p_d`
    pub fn mass(&self, dist: &DigitDistribution) -> Rational {
        if self.is_full() {
            return Rational::one();
        }
        self.members.iter().map(|&d| dist.prob(d)).sum()
    }
}

impl fmt::Display for DigitSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_full() {
            return f.write_str("Ω");
        }
        f.write_str("{")?;
        for (i, d) in self.members.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{d}")?;
        }
        f.write_str("}")
    }
}

/// Sequences whose first `n` digits lie in the given subsets; all later
/// positions are free. Trailing `Ω` constraints are stripped.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PrefixCylinder {
    base: Base,
    constraints: Vec<DigitSubset>,
}

impl PrefixCylinder {
    pub fn new(base: Base, mut constraints: Vec<DigitSubset>) -> Result<Self> {
        for c in &constraints {
            base.ensure_same(c.base)?;
        }
        while constraints.last().is_some_and(DigitSubset::is_full) {
            constraints.pop();
        }
        Ok(PrefixCylinder { base, constraints })
    }

    /// Fixes `word` as the prefix and then applies `last` at the next position.
    fn prefix_then(word: &[Digit], last: DigitSubset) -> Self {
        let base = last.base;
        let mut constraints: Vec<_> = word.iter().map(|&d| DigitSubset::singleton(base, d)).collect();
        constraints.push(last);
        Self::new(base, constraints).expect("shared base")
    }

    /// All sequences starting with `word`.
    pub fn from_word(word: &DigitWord) -> Self {
        let base = word.base();
        let constraints = word.digits().iter().map(|&d| DigitSubset::singleton(base, d)).collect();
        Self::new(base, constraints).expect("shared base")
    }

    /// A cylinder fixing digit `r` at 1-based `position` only.
    pub fn at_position(base: Base, position: usize, r: Digit) -> Result<Self> {
        if position == 0 {
            return Err(Error::InvalidParameter("positions are 1-based".into()));
        }
        let mut constraints = vec![DigitSubset::full(base); position - 1];
        constraints.push(DigitSubset::from_digits(base, [r])?);
        Self::new(base, constraints)
    }

    pub fn base(&self) -> Base {
        self.base
    }

    pub fn constraints(&self) -> &[DigitSubset] {
        &self.constraints
    }

    /// Whether every sequence with the given prefix lies in the cylinder. The
    /// prefix must be at least as long as the constrained part.
    pub fn contains_prefix(&self, prefix: &[Digit]) -> bool {
        assert!(prefix.len() >= self.constraints.len());
        self.constraints.iter().zip(prefix).all(|(c, &d)| c.contains(d))
    }

    /// Two cylinders are disjoint iff some shared constrained position has
    /// disjoint subsets (an empty subset is disjoint from everything).
    pub fn is_disjoint(&self, other: &PrefixCylinder) -> bool {
        self.constraints.iter().any(DigitSubset::is_empty)
            || other.constraints.iter().any(DigitSubset::is_empty)
            || self
                .constraints
                .iter()
                .zip(&other.constraints)
                .any(|(x, y)| x.is_disjoint(y))
    }
}

impl fmt::Display for PrefixCylinder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.constraints {
            write!(f, "{c}×")?;
        }
        f.write_str("Ω^∞")
    }
}

/// `∏_j μ(constraint_j)`; the unconstrained tail contributes 1.
pub fn cylinder_measure(cyl: &PrefixCylinder, dist: &DigitDistribution) -> Result<Rational> {
    cyl.base.ensure_same(dist.base())?;
    let mut acc = Rational::one();
    for c in &cyl.constraints {
        let m = c.mass(dist);
        if m.is_zero() {
            return Ok(m);
        }
        acc *= m;
    }
    Ok(acc)
}

/// `Σ_j a_j b^{−j}`; the empty word evaluates to 0.
pub fn psi_value(prefix: &DigitWord) -> Rational {
    let (num, den) = digits_value(prefix.base(), prefix.digits());
    Rational::new(num.into(), den.into())
}

fn digits_value(base: Base, digits: &[Digit]) -> (BigUint, BigUint) {
    let b = base.as_biguint();
    let mut num = BigUint::zero();
    for &d in digits {
        num = num * &b + BigUint::from(d);
    }
    (num, base.pow(digits.len()))
}

/// Which infinite tail follows a finite digit prefix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TailKind {
    /// `0, 0, 0, …`
    Zeros,
    /// `b−1, b−1, …`
    Nines,
}

/// An eventually periodic digit sequence `prefix · period^∞`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Expansion {
    pub prefix: DigitWord,
    /// Never empty.
    pub period: DigitWord,
}

impl Expansion {
    pub fn with_tail(prefix: DigitWord, tail: TailKind) -> Self {
        let base = prefix.base();
        let d = match tail {
            TailKind::Zeros => 0,
            TailKind::Nines => base.top(),
        };
        Expansion {
            prefix,
            period: DigitWord::from_trusted(base, vec![d]),
        }
    }

    pub fn base(&self) -> Base {
        self.prefix.base()
    }

    pub fn tail_kind(&self) -> Option<TailKind> {
        match self.period.digits() {
            [0] => Some(TailKind::Zeros),
            [d] if *d == self.base().top() => Some(TailKind::Nines),
            _ => None,
        }
    }

    /// `Ψ` of the whole infinite sequence.
    pub fn value(&self) -> Rational {
        let base = self.base();
        let (pre_num, pre_den) = digits_value(base, self.prefix.digits());
        let (per_num, per_den) = digits_value(base, self.period.digits());
        // prefix/b^n + period / ((b^p − 1) b^n)
        let pre = Rational::new(pre_num.into(), pre_den.clone().into());
        let per = Rational::new(
            per_num.into(),
            BigInt::from(per_den - BigUint::one()) * BigInt::from(pre_den),
        );
        pre + per
    }

    /// `μ_ρ` of this single sequence: `∏ prefix · ∏_{period}^∞`, which is
    /// the prefix product when every period digit has probability 1, else 0.
    pub fn mass(&self, dist: &DigitDistribution) -> Rational {
        if self.period.digits().iter().all(|&d| dist.prob(d).is_one()) {
            digits_probability(dist, self.prefix.digits())
        } else {
            Rational::zero()
        }
    }

    /// The first `n` digits.
    pub fn digits(&self, n: usize) -> Vec<Digit> {
        self.prefix
            .digits()
            .iter()
            .chain(self.period.digits().iter().cycle())
            .take(n)
            .copied()
            .collect()
    }
}

impl fmt::Display for Expansion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.prefix)?;
        format_digits(f, self.base(), self.period.digits())?;
        f.write_str(")^∞")
    }
}

fn check_unit(x: &Rational) -> Result<()> {
    if x.is_negative() || *x > Rational::one() {
        Err(Error::OutOfRange(x.to_string()))
    } else {
        Ok(())
    }
}

/// Eventually periodic expansion of `x ∈ [0,1)` by long division with
/// remainder tracking. Finite expansions come back with period `0`.
pub(crate) fn periodic_expansion(x: &Rational, base: Base) -> Expansion {
    debug_assert!(!x.is_negative() && *x < Rational::one());
    let den = x.denom().magnitude().clone();
    let mut rem = x.numer().magnitude().clone();
    let b = base.as_biguint();
    let mut seen: HashMap<BigUint, usize> = HashMap::new();
    let mut digits = Vec::new();
    let start = loop {
        if let Some(&pos) = seen.get(&rem) {
            break pos;
        }
        seen.insert(rem.clone(), digits.len());
        let (q, r) = (rem * &b).div_rem(&den);
        digits.push(q.to_u32().expect("digit fits"));
        rem = r;
    };
    let period = digits.split_off(start);
    Expansion {
        prefix: DigitWord::from_trusted(base, digits),
        period: DigitWord::from_trusted(base, period),
    }
}

/// All digit sequences that `Ψ` maps to `x`.
///
/// Finite expansions strictly inside `(0,1)` have two preimages (the
/// `ZEROS`-tail form first, then the `NINES`-tail form); every other rational
/// has exactly one.
pub fn dual_representations(x: &Rational, base: Base) -> Result<Vec<Expansion>> {
    check_unit(x)?;
    if x.is_zero() {
        return Ok(vec![Expansion::with_tail(DigitWord::empty(base), TailKind::Zeros)]);
    }
    if x.is_one() {
        return Ok(vec![Expansion::with_tail(DigitWord::empty(base), TailKind::Nines)]);
    }
    let exp = periodic_expansion(x, base);
    if exp.tail_kind() != Some(TailKind::Zeros) {
        return Ok(vec![exp]);
    }
    let mut digits = exp.prefix.digits().to_vec();
    let last = digits.last_mut().expect("nonzero finite expansion has a last digit");
    *last -= 1;
    let nines = Expansion::with_tail(DigitWord::from_trusted(base, digits), TailKind::Nines);
    Ok(vec![exp, nines])
}

/// `λ_ρ({x})`: the summed mass of every preimage sequence of `x`.
pub fn point_measure(x: &Rational, dist: &DigitDistribution) -> Result<Rational> {
    check_unit(x)?;
    // Every preimage has infinitely many digits of probability < 1 unless
    // some digit carries all the mass.
    if dist.degenerate_digit().is_none() {
        return Ok(Rational::zero());
    }
    Ok(dual_representations(x, dist.base())?
        .iter()
        .map(|e| e.mass(dist))
        .sum())
}

/// A number in `[0,1]` with a finite base-`b` expansion: `Σ_{j≤n} a_j b^{−j}`,
/// or the marker for the value 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FiniteExpansion {
    digits: DigitWord,
    one: bool,
}

impl FiniteExpansion {
    pub fn from_word(digits: DigitWord) -> Self {
        FiniteExpansion { digits, one: false }
    }

    pub fn one(base: Base) -> Self {
        FiniteExpansion { digits: DigitWord::empty(base), one: true }
    }

    pub fn zero(base: Base) -> Self {
        Self::from_word(DigitWord::empty(base))
    }

    /// Exact conversion; fails unless `x ∈ [0,1]` has a finite expansion.
    pub fn from_rational(x: &Rational, base: Base) -> Result<Self> {
        check_unit(x)?;
        if x.is_one() {
            return Ok(Self::one(base));
        }
        // Smallest k with den | b^k.
        let b = base.as_biguint();
        let mut den = x.denom().magnitude().clone();
        let mut k = 0usize;
        while !den.is_one() {
            let g = den.gcd(&b);
            if g.is_one() {
                return Err(Error::NotFiniteExpansion(x.to_string(), base.get()));
            }
            den /= g;
            k += 1;
        }
        let scaled = (x * Rational::from_integer(base.pow(k).into())).to_integer();
        let digits = to_fixed_digits(scaled.magnitude(), base, k);
        Ok(Self::from_word(DigitWord::from_trusted(base, digits)))
    }

    /// Parses `0.<digits>` (digits in this base; `.`-separated for bases
    /// above 10 are not supported here), `1`, or an exact rational `n/d`.
    pub fn parse(s: &str, base: Base) -> Result<Self> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("0.") {
            if base.get() > 10 {
                return Err(Error::Parse(format!(
                    "digit-string endpoint {s:?} needs base <= 10; use n/d"
                )));
            }
            return Ok(Self::from_word(DigitWord::parse(base, rest)?));
        }
        Self::from_rational(&crate::alphabet::parse_rational(s)?, base)
    }

    pub fn base(&self) -> Base {
        self.digits.base()
    }

    pub fn is_one(&self) -> bool {
        self.one
    }

    /// The digits `a_1 … a_n` (empty for the value 1).
    pub fn digits(&self) -> &[Digit] {
        self.digits.digits()
    }

    pub fn value(&self) -> Rational {
        if self.one {
            Rational::one()
        } else {
            psi_value(&self.digits)
        }
    }

    fn padded(&self, n: usize) -> Vec<Digit> {
        let mut d = self.digits().to_vec();
        d.resize(n.max(d.len()), 0);
        d
    }
}

impl fmt::Display for FiniteExpansion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.one {
            f.write_str("1")
        } else {
            f.write_str("0.")?;
            if self.digits.is_empty() {
                f.write_str("0")
            } else {
                write!(f, "{}", self.digits)
            }
        }
    }
}

/// `x` written with exactly `width` base-`b` digits, most significant first.
pub(crate) fn to_fixed_digits(x: &BigUint, base: Base, width: usize) -> Vec<Digit> {
    let mut out = if x.is_zero() {
        Vec::new()
    } else if base.get() <= 256 {
        x.to_radix_le(base.get()).into_iter().map(Digit::from).collect()
    } else {
        let b = base.as_biguint();
        let mut v = x.clone();
        let mut le = Vec::new();
        while !v.is_zero() {
            let (q, r) = v.div_rem(&b);
            le.push(r.to_u32().expect("digit fits"));
            v = q;
        }
        le
    };
    assert!(out.len() <= width, "value does not fit in {width} digits");
    out.resize(width, 0);
    out.reverse();
    out
}

/// The disjoint pieces of `Ψ^{−1}([a,b])`, up to the single sequence
/// `a_1…(a_m−1)(b−1)(b−1)…` that sits just below the `a`-prefix cylinder.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntervalDecomposition {
    /// Common padded length `n` of the endpoints.
    pub depth: usize,
    /// 1-based index of the first differing digit.
    pub split_index: usize,
    /// `{a_1}×…×{a_{n0−1}}×{>a_{n0},<b_{n0}}×Ω×⋯`
    pub middle: PrefixCylinder,
    /// `{a_1}×…×{a_{k−1}}×{>a_k}×Ω×⋯` for `k = n0+1 … n`.
    pub left_staircase: Vec<PrefixCylinder>,
    /// `{a_1}×…×{a_n}×Ω×⋯`
    pub lower_prefix: PrefixCylinder,
    /// `{b_1}×…×{b_{k−1}}×{<b_k}×Ω×⋯` for `k = n0+1 … n`.
    pub right_staircase: Vec<PrefixCylinder>,
    /// The single sequence `b_1…b_n 0 0 …`; absent when the right endpoint is 1,
    /// whose only preimage `(b−1)(b−1)…` already lies in the cylinders.
    pub upper_endpoint: Option<Expansion>,
}

impl IntervalDecomposition {
    pub fn cylinders(&self) -> impl Iterator<Item = &PrefixCylinder> {
        std::iter::once(&self.middle)
            .chain(&self.left_staircase)
            .chain(std::iter::once(&self.lower_prefix))
            .chain(&self.right_staircase)
    }
}

pub fn interval_to_cylinders(a: &FiniteExpansion, b: &FiniteExpansion) -> Result<IntervalDecomposition> {
    let base = a.base();
    base.ensure_same(b.base())?;
    if a.value() >= b.value() {
        return Err(Error::EmptyInterval { a: a.to_string(), b: b.to_string() });
    }
    let n = a.digits().len().max(b.digits().len()).max(1);
    let ad = a.padded(n);
    let stair = |from: usize, digits: &[Digit], last: fn(Base, Digit) -> DigitSubset| {
        (from..n)
            .map(|k| PrefixCylinder::prefix_then(&digits[..k], last(base, digits[k])))
            .collect::<Vec<_>>()
    };

    if b.is_one() {
        // Treat the right endpoint as a virtual digit b at position 1.
        return Ok(IntervalDecomposition {
            depth: n,
            split_index: 1,
            middle: PrefixCylinder::prefix_then(&[], DigitSubset::above(base, ad[0])),
            left_staircase: stair(1, &ad, DigitSubset::above),
            lower_prefix: PrefixCylinder::prefix_then(&ad[..n - 1], DigitSubset::singleton(base, ad[n - 1])),
            right_staircase: Vec::new(),
            upper_endpoint: None,
        });
    }

    let bd = b.padded(n);
    let i0 = (0..n).find(|&i| ad[i] != bd[i]).expect("a < b differ somewhere");
    debug_assert!(ad[i0] < bd[i0]);
    Ok(IntervalDecomposition {
        depth: n,
        split_index: i0 + 1,
        middle: PrefixCylinder::prefix_then(&ad[..i0], DigitSubset::strictly_between(base, ad[i0], bd[i0])),
        left_staircase: stair(i0 + 1, &ad, DigitSubset::above),
        lower_prefix: PrefixCylinder::prefix_then(&ad[..n - 1], DigitSubset::singleton(base, ad[n - 1])),
        right_staircase: stair(i0 + 1, &bd, DigitSubset::below),
        upper_endpoint: Some(Expansion::with_tail(DigitWord::from_trusted(base, bd), TailKind::Zeros)),
    })
}

/// Mass of the `NINES`-tail preimage of a finite expansion `a > 0`.
fn lower_nines_mass(a: &FiniteExpansion, dist: &DigitDistribution) -> Result<Rational> {
    let v = a.value();
    if v.is_zero() || v.is_one() {
        return Ok(Rational::zero());
    }
    Ok(dual_representations(&v, a.base())?
        .iter()
        .filter(|e| e.tail_kind() == Some(TailKind::Nines))
        .map(|e| e.mass(dist))
        .sum())
}

/// `λ_ρ([a,b])`, exact.
pub fn interval_measure(a: &FiniteExpansion, b: &FiniteExpansion, dist: &DigitDistribution) -> Result<Rational> {
    a.base().ensure_same(b.base())?;
    a.base().ensure_same(dist.base())?;
    let (va, vb) = (a.value(), b.value());
    if va == vb {
        return point_measure(&va, dist);
    }
    let dec = interval_to_cylinders(a, b)?;
    let mut total = Rational::zero();
    for c in dec.cylinders() {
        total += cylinder_measure(c, dist)?;
    }
    if let Some(e) = &dec.upper_endpoint {
        total += e.mass(dist);
    }
    total += lower_nines_mass(a, dist)?;
    Ok(total)
}

/// Interval measure with either endpoint optionally excluded.
pub fn interval_measure_with_ends(
    a: &FiniteExpansion,
    b: &FiniteExpansion,
    include_a: bool,
    include_b: bool,
    dist: &DigitDistribution,
) -> Result<Rational> {
    let (va, vb) = (a.value(), b.value());
    if va == vb && !(include_a && include_b) {
        return Ok(Rational::zero());
    }
    let mut m = interval_measure(a, b, dist)?;
    if !include_a {
        m -= point_measure(&va, dist)?;
    }
    if !include_b {
        m -= point_measure(&vb, dist)?;
    }
    Ok(m)
}

/// Lower and upper bounds on `λ_ρ([a,b])` for arbitrary rational endpoints,
/// from truncating both endpoints at `depth` digits. The bounds differ by at
/// most the measure of two closed depth-`depth` grid intervals.
pub fn interval_measure_enclosure(
    a: &Rational,
    b: &Rational,
    depth: usize,
    dist: &DigitDistribution,
) -> Result<(Rational, Rational)> {
    check_unit(a)?;
    check_unit(b)?;
    if a > b {
        return Err(Error::EmptyInterval { a: a.to_string(), b: b.to_string() });
    }
    let base = dist.base();
    let (a_lo, a_hi) = grid_bracket(a, base, depth);
    let (b_lo, b_hi) = grid_bracket(b, base, depth);
    let upper = interval_measure(&a_lo, &b_hi, dist)?;
    let lower = if a_hi.value() <= b_lo.value() {
        interval_measure(&a_hi, &b_lo, dist)?
    } else {
        Rational::zero()
    };
    Ok((lower, upper))
}

/// Grid points `lo ≤ x ≤ hi` at spacing `b^{−depth}`, equal when `x` is on the grid.
fn grid_bracket(x: &Rational, base: Base, depth: usize) -> (FiniteExpansion, FiniteExpansion) {
    if x.is_one() {
        return (FiniteExpansion::one(base), FiniteExpansion::one(base));
    }
    let scale = base.pow(depth);
    let scaled = x * Rational::from_integer(scale.clone().into());
    let floor = scaled.floor().to_integer().magnitude().clone();
    let exact = scaled.is_integer();
    let lo = FiniteExpansion::from_word(DigitWord::from_trusted(base, to_fixed_digits(&floor, base, depth)));
    if exact {
        return (lo.clone(), lo);
    }
    let next = floor + 1u32;
    let hi = if next == scale {
        FiniteExpansion::one(base)
    } else {
        FiniteExpansion::from_word(DigitWord::from_trusted(base, to_fixed_digits(&next, base, depth)))
    };
    (lo, hi)
}
