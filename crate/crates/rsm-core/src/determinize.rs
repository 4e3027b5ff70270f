//! Digit-expansion determinization of representations.
//!
//! Any representation with distribution-valued tables on an alphabet of
//! size at most `2^n` becomes deterministic by splitting each look-back
//! event `{L₀ = i}` into countably many events indexed through an
//! injective `F : (ℤ⁺)^{n+1} → ℤ⁺` with `F(i, …) ≥ i`:
//!
//! ```text
//! P(L̂₀ = F(i, i₁, …, iₙ)) = P(L₀ = i) · 2^{-i₁} ⋯ 2^{-iₙ}
//! ```
//!
//! Writing the new symbol as `n` bits, the table value at the split level
//! is the product of binary digits of the chained conditional bit
//! probabilities — always 0 or 1. Two `F` families are provided: prime
//! powers (`B_i = {q_i^k}`), which blow the expected look-back up to
//! infinity, and the doubling sets `B_i⁰ = {4i−1}`,
//! `B_iⁿ = {4t+1, 4t+2 : t ∈ B_iⁿ⁻¹}`, whose dyadically weighted sums stay
//! below `35·i` and hence preserve finite expected look-back up to a
//! factor `35ⁿ`.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::decompose::{RepKind, Representation, TableAssignment, TableFunction};
use crate::error::{Error, Result};
use crate::value::Value;
use crate::words::Word;

/// Prefix of a binary digit expansion `Σ εₖ 2⁻ᵏ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DigitExpansion {
    pub digits: Vec<u8>,
}

impl DigitExpansion {
    /// Value of the prefix as a scalar.
    pub fn partial_value<S: Value>(&self) -> S {
        let mut acc = S::zero();
        for (k, &d) in self.digits.iter().enumerate() {
            if d == 1 {
                acc = acc + S::pow2_neg(k as u32 + 1);
            }
        }
        acc
    }

    /// Digit-wise complement (the sibling branch of a two-way split).
    pub fn complement(&self) -> DigitExpansion {
        DigitExpansion {
            digits: self.digits.iter().map(|d| 1 - d).collect(),
        }
    }
}

/// Canonical binary digits of `q ∈ [0,1]`: all zeros for 0, otherwise the
/// non-terminating expansion (all-ones tail for dyadic values). In a
/// two-way split the `1`-branch takes these digits and the `0`-branch
/// their complement, so exactly one branch owns each digit position.
pub fn canonical_digits<S: Value>(q: &S, depth: usize) -> Result<DigitExpansion> {
    if *q < S::zero() || *q > S::one() {
        return Err(Error::ValueOutsideUnitInterval);
    }
    let mut digits = Vec::with_capacity(depth);
    if q.is_zero() {
        digits.resize(depth, 0);
        return Ok(DigitExpansion { digits });
    }
    // Invariant: r ∈ (0, 1].
    let mut r = q.clone();
    let half = S::ratio(1, 2);
    for _ in 0..depth {
        if r > half {
            digits.push(1);
            r = r.clone() + r - S::one();
        } else {
            digits.push(0);
            r = r.clone() + r;
        }
    }
    Ok(DigitExpansion { digits })
}

/// Index-function family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexFamily {
    /// `B_i = {q_i^k}` over the primes: injective but dyadic-heavy.
    Prime,
    /// The doubling sets with `Σ_j F₁(i,j)·2⁻ʲ ≤ 35·i`.
    Balister,
}

impl IndexFamily {
    pub fn name(&self) -> &'static str {
        match self {
            IndexFamily::Prime => "prime",
            IndexFamily::Balister => "balister",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "prime" => Ok(IndexFamily::Prime),
            "balister" => Ok(IndexFamily::Balister),
            _ => Err(Error::Unsupported(alloc::format!(
                "unknown index-function family `{s}`"
            ))),
        }
    }
}

/// Generator for the doubling sets `B_i = ⋃ₙ B_iⁿ`.
#[derive(Debug, Clone, Copy, Default)]
pub struct BalisterSets;

impl BalisterSets {
    /// `B_iⁿ`, sorted ascending; `|B_iⁿ| = 2ⁿ` and
    /// `B_iⁿ ⊆ [4ⁿ⁺¹(i−1), 4ⁿ⁺¹ i]`.
    pub fn block(i: u64, n: u32) -> Result<Vec<u64>> {
        let mut block = alloc::vec![4u64
            .checked_mul(i)
            .and_then(|v| v.checked_sub(1))
            .ok_or(Error::IndexOverflow)?];
        for _ in 0..n {
            let mut next = Vec::with_capacity(block.len() * 2);
            for t in &block {
                let base = t.checked_mul(4).ok_or(Error::IndexOverflow)?;
                next.push(base + 1);
                next.push(base + 2);
            }
            block = next;
        }
        Ok(block)
    }

    /// The `j`-th smallest element of `B_i` (1-based). Successive blocks
    /// are disjoint increasing runs, so position `j` lives in block
    /// `⌊log₂ j⌋` at offset `j − 2^⌊log₂ j⌋`.
    pub fn element(i: u64, j: u64) -> Result<u64> {
        debug_assert!(j >= 1);
        let m = 63 - j.leading_zeros();
        let offset = (j - (1u64 << m)) as usize;
        let block = Self::block(i, m)?;
        Ok(block[offset])
    }
}

/// `j`-th smallest element of the prime-family set `B_i = {q_i^k}`.
fn prime_element(i: u64, j: u64) -> Result<u64> {
    let q = nth_prime(i)?;
    let mut v: u64 = 1;
    for _ in 0..j {
        v = v.checked_mul(q).ok_or(Error::IndexOverflow)?;
    }
    Ok(v)
}

/// The `n`-th prime (1-based), by sieving; refuses indexes that would
/// require an unreasonable sieve.
pub fn nth_prime(n: u64) -> Result<u64> {
    if n == 0 {
        return Err(Error::Unsupported(String::from("prime index is 1-based")));
    }
    if n > 2_000_000 {
        return Err(Error::Unsupported(alloc::format!(
            "prime index {n} out of the supported sieve range"
        )));
    }
    let n = n as usize;
    // Upper bound on q_n: n(ln n + ln ln n) for n ≥ 6.
    let bound = if n < 6 {
        16usize
    } else {
        let nf = n as f64;
        let ln = crate::value::ln_f64(nf);
        let lnln = crate::value::ln_f64(ln);
        (nf * (ln + lnln)) as usize + 2
    };
    let mut sieve = alloc::vec![true; bound + 1];
    sieve[0] = false;
    if bound >= 1 {
        sieve[1] = false;
    }
    let mut count = 0usize;
    for p in 2..=bound {
        if sieve[p] {
            count += 1;
            if count == n {
                return Ok(p as u64);
            }
            let mut q = p * p;
            while q <= bound {
                sieve[q] = false;
                q += p;
            }
        }
    }
    Err(Error::Unsupported(String::from("prime sieve bound too low")))
}

/// Injective index function `F : (ℤ⁺)^arity → ℤ⁺` with `F(i₀, …) ≥ i₀`,
/// built recursively: `F₁(i, j)` is the `j`-th smallest element of `B_i`
/// and `Fₙ(i₀, …, iₙ)` the `iₙ`-th smallest element of
/// `B_{Fₙ₋₁(i₀, …, iₙ₋₁)}`.
#[derive(Debug, Clone, Copy)]
pub struct IndexFunction {
    pub family: IndexFamily,
    /// Number of arguments (`n+1` for an alphabet of size ≤ 2ⁿ).
    pub arity: usize,
}

impl IndexFunction {
    pub fn new(family: IndexFamily, n: usize) -> Result<Self> {
        if n < 1 {
            return Err(Error::Unsupported(String::from(
                "index function needs arity at least 2",
            )));
        }
        Ok(IndexFunction {
            family,
            arity: n + 1,
        })
    }

    fn element(&self, i: u64, j: u64) -> Result<u64> {
        match self.family {
            IndexFamily::Prime => prime_element(i, j),
            IndexFamily::Balister => BalisterSets::element(i, j),
        }
    }

    /// Numeric evaluation. Prime-family evaluations whose set index
    /// outgrows the sieve range are refused rather than approximated.
    pub fn eval(&self, args: &[u64]) -> Result<u64> {
        if args.len() != self.arity {
            return Err(Error::Unsupported(alloc::format!(
                "index function of arity {} applied to {} arguments",
                self.arity,
                args.len()
            )));
        }
        let mut acc = args[0];
        for &j in &args[1..] {
            acc = self.element(acc, j)?;
        }
        Ok(acc)
    }

    /// Symbolic evaluation: exact structural values that stay comparable
    /// when numeric prime evaluation is out of range.
    pub fn eval_symbolic(&self, args: &[u64]) -> Result<IndexValue> {
        if args.len() != self.arity {
            return Err(Error::Unsupported(String::from("arity mismatch")));
        }
        let mut acc = IndexValue::Exact(args[0]);
        for &j in &args[1..] {
            acc = match self.family {
                IndexFamily::Balister => match acc {
                    IndexValue::Exact(i) => IndexValue::Exact(BalisterSets::element(i, j)?),
                    _ => unreachable!("balister values stay numeric"),
                },
                IndexFamily::Prime => IndexValue::PrimePower {
                    base_index: Box::new(acc),
                    exponent: j,
                },
            };
        }
        Ok(acc)
    }
}

/// Structural value of an index function: either a computed integer or a
/// prime power `q_b^e` addressed by the symbolic index `b`. Structural
/// equality coincides with numeric equality by unique factorisation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum IndexValue {
    Exact(u64),
    PrimePower {
        base_index: Box<IndexValue>,
        exponent: u64,
    },
}

impl IndexValue {
    /// A lower bound on the numeric value (`q_b ≥ b + 1`).
    pub fn lower_bound(&self) -> u64 {
        match self {
            IndexValue::Exact(v) => *v,
            IndexValue::PrimePower { base_index, .. } => {
                base_index.lower_bound().saturating_add(1)
            }
        }
    }
}

/// Weighted sum diagnostics for `Σ_j F₁(i₀, j)·2⁻ʲ`.
#[derive(Debug, Clone)]
pub struct FWeight<S: Value> {
    pub partial: S,
    /// Analytic bound on the uncomputed tail (balister family only).
    pub tail_bound: Option<S>,
    /// `35·i₀`, when the family claims it.
    pub claimed_bound: Option<S>,
    /// Whether `partial + tail ≤ 35·i₀` (balister).
    pub within_bound: Option<bool>,
    /// Raised when the terms do not decay (prime family).
    pub divergent_trend: bool,
}

/// Computes `Σ_{j ≤ depth} F₁(i₀, j)·2⁻ʲ` exactly, plus an analytic tail
/// bound `Σ_m 2^m·4^{m+1}·i₀·2^{-2^m}` over the uncovered blocks for the
/// balister family. For the prime family the value is still computed but
/// flagged: its terms `q^j/2^j` do not tend to zero.
pub fn f_weight<S: Value>(family: IndexFamily, i0: u64, depth: u64) -> Result<FWeight<S>> {
    if depth < 1 {
        return Err(Error::Unsupported(String::from("depth must be ≥ 1")));
    }
    let mut partial = S::zero();
    let f = IndexFunction::new(family, 1)?;
    for j in 1..=depth {
        let el = f.element(i0, j)?;
        partial = partial + S::from_usize(el as usize) * S::pow2_neg(j as u32);
    }
    match family {
        IndexFamily::Balister => {
            // First block not fully covered by positions ≤ depth.
            let m0 = (0..64)
                .find(|&m| (1u64 << (m + 1)) - 1 > depth)
                .unwrap();
            let mut tail = S::zero();
            // Remainder of the partially covered block: elements are at
            // most 4^{m0+1}·i₀ with dyadic weights summing below 2^{-depth}.
            let partial_block_bound = S::from_usize(
                4u64.checked_pow(m0 + 1)
                    .and_then(|v| v.checked_mul(i0))
                    .ok_or(Error::IndexOverflow)? as usize,
            ) * S::pow2_neg(depth as u32);
            tail = tail + partial_block_bound;
            // Full blocks beyond: Σ 2^m · 4^{m+1} i₀ · 2^{-2^m}, truncated
            // once the terms stop mattering; the terms at least halve, so
            // one extra term bounds the remainder.
            let mut m = m0 + 1;
            loop {
                let term = S::from_usize((1u64 << m) as usize)
                    * S::from_usize(4u64.pow(m + 1) as usize)
                    * S::from_usize(i0 as usize)
                    * S::pow2_neg(1u32 << m);
                tail = tail + term.clone();
                m += 1;
                if m > 12 {
                    // remainder bounded by twice the next term
                    let next = S::from_usize((1u64 << m) as usize)
                        * S::from_usize(4u64.pow(m + 1) as usize)
                        * S::from_usize(i0 as usize)
                        * S::pow2_neg(1u32 << m);
                    tail = tail + next.clone() + next;
                    break;
                }
            }
            let claimed = S::from_usize(35) * S::from_usize(i0 as usize);
            let within = partial.clone() + tail.clone() <= claimed;
            Ok(FWeight {
                partial,
                tail_bound: Some(tail),
                claimed_bound: Some(claimed.clone()),
                within_bound: Some(within),
                divergent_trend: false,
            })
        }
        IndexFamily::Prime => Ok(FWeight {
            partial,
            tail_bound: None,
            claimed_bound: None,
            within_bound: None,
            divergent_trend: true,
        }),
    }
}

/// Per-base-level accounting of a determinization.
#[derive(Debug, Clone)]
pub struct DeterminizeAccounting<S: Value> {
    /// `(base look-back i, base mass, assigned mass, truncation gap)`.
    pub per_level: Vec<(u64, S, S, S)>,
    pub residual_out: S,
    pub family: IndexFamily,
    pub digit_depth: u32,
    /// Bit width `n` of the symbol encoding.
    pub bit_width: usize,
}

/// Smallest `n ≥ 1` with `2^n ≥ size`.
pub fn bit_width(size: usize) -> usize {
    let mut n = 1;
    while (1usize << n) < size {
        n += 1;
    }
    n
}

/// Digit-expansion determinization.
///
/// Levels of the input sharing a look-back distance are merged first (the
/// law given `{L₀ = i}` is their mass mixture). Each merged level `(i, q)`
/// splits into `digit_depth^n` deterministic levels keyed by
/// `F(i, i₁, …, iₙ)`; the mass `q·(1 − (1−2^{-digit_depth})^n)` lost per
/// base level joins the residual.
pub fn determinize<S: Value>(
    rep: &Representation<S>,
    family: IndexFamily,
    digit_depth: u32,
    completeness_tol: &S,
) -> Result<(Representation<S>, DeterminizeAccounting<S>)> {
    let size = rep.alphabet.size();
    let n = bit_width(size);
    if size > (1usize << n) {
        return Err(Error::AlphabetTooLarge {
            size,
            capacity: 1 << n,
        });
    }
    if !rep.is_complete(completeness_tol) {
        return Err(Error::IncompleteRepresentation {
            residual: rep.residual.render(),
        });
    }
    let f = IndexFunction::new(family, n)?;
    let merged = rep.merge_levels()?;

    let mut out_levels: Vec<TableFunction<S>> = Vec::new();
    let mut accounting = Vec::new();
    let mut residual = rep.residual.clone();

    for base in &merged.levels {
        let i = base.lookback;
        let q = base.mass.clone();
        let keys: Vec<Word> = match &base.assignment {
            TableAssignment::General(m) => m.keys().cloned().collect(),
            TableAssignment::Deterministic(m) => m.keys().cloned().collect(),
        };

        // Conditional bit digits per word: node index in the implicit
        // binary tree of bit prefixes; digits stored for the 1-branch.
        let mut word_digits: BTreeMap<&Word, Vec<DigitExpansion>> = BTreeMap::new();
        for w in &keys {
            let dist = base.values(w, size)?;
            // For prefix nodes: node id = (level j, prefix bits value).
            let mut digits = Vec::with_capacity((1 << n) - 1);
            for j in 0..n {
                for prefix in 0..(1usize << j) {
                    // P(bit_j = 1 | higher bits = prefix): ratio of symbol
                    // masses under the big-endian encoding.
                    let mut num = S::zero();
                    let mut den = S::zero();
                    for s in 0..size {
                        let high = s >> (n - j);
                        if high != prefix {
                            continue;
                        }
                        let v = dist.get(s).clone();
                        den = den + v.clone();
                        let bit = (s >> (n - 1 - j)) & 1;
                        if bit == 1 {
                            num = num + v;
                        }
                    }
                    let qbit = if den.is_zero() {
                        S::zero()
                    } else {
                        num / den
                    };
                    digits.push(canonical_digits(&qbit, digit_depth as usize)?);
                }
            }
            word_digits.insert(w, digits);
        }

        // Enumerate digit-position tuples.
        let mut tuple = alloc::vec![1u32; n];
        let mut assigned = S::zero();
        loop {
            let mut args = Vec::with_capacity(n + 1);
            args.push(i);
            for &t in &tuple {
                args.push(t as u64);
            }
            let lhat = f.eval(&args)?;
            let exp: u32 = tuple.iter().sum();
            let mass = q.clone() * S::pow2_neg(exp);

            let mut table = BTreeMap::new();
            for w in &keys {
                let digits = &word_digits[w];
                let mut sym = 0usize;
                for (j, &pos) in tuple.iter().enumerate() {
                    let node = (1usize << j) - 1 + sym; // prefix value = sym so far
                    let one_branch = digits[node].digits[(pos - 1) as usize];
                    sym = (sym << 1) | one_branch as usize;
                }
                // Impossible branches carry zero digit weight, so the
                // selected path always lands on a real symbol.
                if sym >= size {
                    return Err(Error::Unsupported(String::from(
                        "digit routing selected a symbol outside the alphabet",
                    )));
                }
                table.insert(w.clone(), sym as u16);
            }
            assigned = assigned + mass.clone();
            out_levels.push(TableFunction {
                lookback: lhat,
                depth: base.depth,
                mass,
                assignment: TableAssignment::Deterministic(table),
            });

            // next tuple
            let mut k = 0;
            loop {
                if k == n {
                    break;
                }
                if tuple[k] < digit_depth {
                    tuple[k] += 1;
                    break;
                }
                tuple[k] = 1;
                k += 1;
            }
            if k == n {
                break;
            }
        }
        let gap = q.clone() - assigned.clone();
        residual = residual + gap.clone();
        accounting.push((i, q, assigned, gap));
    }

    out_levels.sort_by_key(|l| l.lookback);
    let rep_out = Representation {
        alphabet: rep.alphabet.clone(),
        levels: out_levels,
        residual: residual.clone(),
        deterministic: true,
        kind: RepKind::Determinized {
            family: family.name(),
            digit_depth,
        },
        diagnostics: Vec::new(),
        seed_word: rep.seed_word.clone(),
    };
    Ok((
        rep_out,
        DeterminizeAccounting {
            per_level: accounting,
            residual_out: residual,
            family,
            digit_depth,
            bit_width: n,
        },
    ))
}

/// Expected look-back of a determinized representation.
#[derive(Debug, Clone)]
pub struct DetExpectedLookback<S: Value> {
    /// `Σ F·mass` over the emitted levels.
    pub partial: S,
    /// `35ⁿ · E[L]` of the base, for the balister family.
    pub bound: Option<S>,
    pub within_bound: Option<bool>,
    /// The prime family forces an infinite expectation.
    pub infinite_flag: bool,
}

/// Partial expected look-back with the `35ⁿ·E[L₀]` check on the emitted
/// levels (balister); the prime family is flagged infinite.
pub fn det_expected_lookback<S: Value>(
    rep_out: &Representation<S>,
    base: &Representation<S>,
    accounting: &DeterminizeAccounting<S>,
) -> DetExpectedLookback<S> {
    let partial = rep_out
        .levels
        .iter()
        .fold(S::zero(), |acc, l| {
            acc + S::from_usize(l.lookback as usize) * l.mass.clone()
        });
    match accounting.family {
        IndexFamily::Balister => {
            let (base_e, _) = base.expected_lookback(&S::default_tolerance());
            let mut bound = base_e;
            for _ in 0..accounting.bit_width {
                bound = bound * S::from_usize(35);
            }
            let within = partial <= bound;
            DetExpectedLookback {
                partial,
                bound: Some(bound),
                within_bound: Some(within),
                infinite_flag: false,
            }
        }
        IndexFamily::Prime => DetExpectedLookback {
            partial,
            bound: None,
            within_bound: None,
            infinite_flag: true,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::Exact;
    use num_traits::{One, Zero};

    fn exact(n: i64, d: u64) -> Exact {
        Exact::ratio(n, d)
    }

    #[test]
    fn digits_of_zero_half_three_quarters() {
        let z = canonical_digits(&Exact::zero(), 6).unwrap();
        assert_eq!(z.digits, vec![0, 0, 0, 0, 0, 0]);
        // Non-terminating expansion of ½ = Σ_{k≥2} 2⁻ᵏ.
        let h = canonical_digits(&exact(1, 2), 6).unwrap();
        assert_eq!(h.digits, vec![0, 1, 1, 1, 1, 1]);
        // ¾ = ½ + Σ_{k≥3} 2⁻ᵏ.
        let t = canonical_digits(&exact(3, 4), 6).unwrap();
        assert_eq!(t.digits, vec![1, 0, 1, 1, 1, 1]);
        let one = canonical_digits(&Exact::one(), 4).unwrap();
        assert_eq!(one.digits, vec![1, 1, 1, 1]);
        assert!(canonical_digits(&exact(3, 2), 4).is_err());
        assert!(canonical_digits(&exact(-1, 2), 4).is_err());
    }

    #[test]
    fn digit_partial_sums_approach_value() {
        for num in 0..=16i64 {
            let q = exact(num, 16);
            let d = canonical_digits(&q, 32).unwrap();
            let v: Exact = d.partial_value();
            let gap = q - v;
            assert!(gap >= Exact::zero());
            assert!(gap <= Exact::pow2_neg(32));
        }
    }

    #[test]
    fn sibling_complement_is_expansion_of_one_minus_q() {
        // The split assigns digits(q) to the 1-branch and the complement
        // to the 0-branch; together they own every position once, and the
        // complement's value approaches 1 − q.
        for num in 0..=8i64 {
            let q = exact(num, 8);
            let d = canonical_digits(&q, 32).unwrap();
            let c = d.complement();
            for k in 0..32 {
                assert_eq!(d.digits[k] + c.digits[k], 1);
            }
            let cv: Exact = c.partial_value();
            let gap = (Exact::one() - q) - cv;
            assert!(gap >= Exact::zero() && gap <= Exact::pow2_neg(32));
        }
    }

    #[test]
    fn prime_index_values() {
        let f = IndexFunction::new(IndexFamily::Prime, 1).unwrap();
        assert_eq!(f.eval(&[1, 1]).unwrap(), 2);
        assert_eq!(f.eval(&[1, 2]).unwrap(), 4);
        assert_eq!(f.eval(&[2, 1]).unwrap(), 3);
        assert_eq!(f.eval(&[3, 2]).unwrap(), 25);
    }

    #[test]
    fn balister_index_values() {
        // B₁ = {3} ∪ {13,14} ∪ {53,54,57,58} ∪ …
        let f = IndexFunction::new(IndexFamily::Balister, 1).unwrap();
        assert_eq!(f.eval(&[1, 1]).unwrap(), 3);
        assert_eq!(f.eval(&[1, 2]).unwrap(), 13);
        assert_eq!(f.eval(&[1, 3]).unwrap(), 14);
        assert_eq!(f.eval(&[1, 4]).unwrap(), 53);
        assert_eq!(f.eval(&[1, 7]).unwrap(), 58);
        assert_eq!(f.eval(&[2, 1]).unwrap(), 7);
    }

    #[test]
    fn balister_block_shape() {
        for i in 1..=4u64 {
            for n in 0..=5u32 {
                let block = BalisterSets::block(i, n).unwrap();
                assert_eq!(block.len(), 1 << n);
                let lo = 4u64.pow(n + 1) * (i - 1);
                let hi = 4u64.pow(n + 1) * i;
                for &e in &block {
                    assert!(e >= lo && e <= hi, "B_{i}^{n} element {e}");
                }
                // sorted strictly increasing
                for w in block.windows(2) {
                    assert!(w[0] < w[1]);
                }
            }
        }
    }

    #[test]
    fn balister_sets_disjoint() {
        use alloc::collections::BTreeSet;
        let cap = 4096u64; // 4⁶
        let mut seen: BTreeSet<u64> = BTreeSet::new();
        for i in 1..=6u64 {
            for n in 0..=5u32 {
                for e in BalisterSets::block(i, n).unwrap() {
                    if e <= cap {
                        assert!(seen.insert(e), "duplicate element {e}");
                    }
                }
            }
        }
    }

    #[test]
    fn f_weight_balister_below_35() {
        let w: FWeight<Exact> = f_weight(IndexFamily::Balister, 1, 31).unwrap();
        assert_eq!(w.within_bound, Some(true));
        let v = w.partial.to_f64();
        assert!((v - 14.54).abs() < 0.1, "partial = {v}");
        let w2: FWeight<Exact> = f_weight(IndexFamily::Balister, 2, 31).unwrap();
        assert_eq!(w2.within_bound, Some(true));
        assert!(w2.claimed_bound == Some(Exact::from_usize(70)));
    }

    #[test]
    fn f_weight_prime_diverges() {
        let w: FWeight<Exact> = f_weight(IndexFamily::Prime, 1, 20).unwrap();
        assert!(w.divergent_trend);
        // Terms 2ʲ/2ʲ = 1: the partial sum is the depth itself.
        assert_eq!(w.partial, Exact::from_usize(20));
    }

    #[test]
    fn determinize_iid_half() {
        // One general level at look-back 1 with table (½, ½).
        let mut map = BTreeMap::new();
        map.insert(
            Word::empty(),
            crate::measure::Distribution::new(
                vec![exact(1, 2), exact(1, 2)],
                &Exact::default_tolerance(),
            )
            .unwrap(),
        );
        let rep = Representation {
            alphabet: crate::words::Alphabet::binary(),
            levels: alloc::vec![TableFunction {
                lookback: 1,
                depth: 0,
                mass: Exact::one(),
                assignment: TableAssignment::General(map),
            }],
            residual: Exact::zero(),
            deterministic: false,
            kind: RepKind::Manual,
            diagnostics: alloc::vec![],
            seed_word: None,
        };
        let (out, acc) =
            determinize(&rep, IndexFamily::Prime, 20, &Exact::zero()).unwrap();
        // P(L̂ = 2) = ½ → symbol 0 (digits of ½ are 0,1,1,…; the 1-branch
        // owns positions ≥ 2, the complement position 1).
        // P(L̂ = 2ᵏ) = 2⁻ᵏ → symbol 1 for k ≥ 2.
        for l in &out.levels {
            match &l.assignment {
                TableAssignment::Deterministic(t) => {
                    let sym = t[&Word::empty()];
                    if l.lookback == 2 {
                        assert_eq!(l.mass, exact(1, 2));
                        assert_eq!(sym, 0);
                    } else {
                        let k = (l.lookback as f64).log2() as u32;
                        assert_eq!(l.mass, Exact::pow2_neg(k));
                        assert_eq!(sym, 1);
                    }
                }
                _ => panic!("determinized tables must be deterministic"),
            }
        }
        // Mass conservation: gap = (1)·2^{-20}.
        assert_eq!(acc.per_level.len(), 1);
        assert_eq!(acc.per_level[0].3, Exact::pow2_neg(20));
        // Reconstruction within 2^{-20}.
        let mix = out.mixture(&Word::from_symbols(vec![0])).unwrap();
        for sym in 0..2usize {
            let gap = (exact(1, 2) - mix[sym].clone()).abs();
            assert!(gap <= Exact::pow2_neg(20));
        }
    }

    #[test]
    fn determinize_already_deterministic_is_degenerate() {
        use crate::decompose::StopRule;
        use crate::model::catalog;
        let m = catalog::bernoulli::<Exact>(exact(3, 4)).unwrap();
        let rep = crate::decompose::decompose(&m, &StopRule::default()).unwrap();
        let (out, _) = determinize(&rep, IndexFamily::Balister, 16, &Exact::zero()).unwrap();
        // Table values 0/1 expand as all-ones/all-zeros digits: per base
        // level only the tuple (1,) carries mass... and reconstruction is
        // identical up to the truncation dust.
        let w = Word::from_symbols(vec![0, 0]);
        let mix_base = rep.mixture(&w).unwrap();
        let mix_out = out.mixture(&w).unwrap();
        for a in 0..2 {
            let gap = (mix_base[a].clone() - mix_out[a].clone()).abs();
            assert!(gap <= Exact::pow2_neg(15));
        }
        assert!(out.deterministic);
        for l in &out.levels {
            assert!(l.is_deterministic());
        }
    }

    #[test]
    fn symbolic_injectivity_small() {
        // Numeric cross-check of the symbolic representation on a small
        // prime-family domain.
        let f = IndexFunction::new(IndexFamily::Prime, 2).unwrap();
        let mut seen = BTreeMap::new();
        for i in 1..=4u64 {
            for j in 1..=4u64 {
                for k in 1..=4u64 {
                    let sym = f.eval_symbolic(&[i, j, k]).unwrap();
                    let num = f.eval(&[i, j, k]).unwrap();
                    if let Some(prev) = seen.insert(sym.clone(), num) {
                        panic!("symbolic collision with numeric values {prev} vs {num}");
                    }
                    assert!(num >= i);
                    assert!(sym.lower_bound() as u64 >= i);
                }
            }
        }
        // All numeric values distinct too.
        let mut nums: Vec<u64> = seen.values().cloned().collect();
        nums.sort_unstable();
        nums.dedup();
        assert_eq!(nums.len(), 64);
    }
}
