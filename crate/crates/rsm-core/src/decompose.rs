//! Deterministic random-step Markov representations of uniform
//! martingales.
//!
//! The construction peels probability mass off the conditional law level
//! by level. With `P_{k-1}` the leftover after the first `k-1` tables, the
//! general variant picks the next look-back `n_k` so that twice the
//! variation bound sits below `9γ/(10M)` (γ the unassigned mass, `M` the
//! dominating-measure cut), sets
//!
//! ```text
//! r_k = inf_w max_a P_{k-1}(a; w),    p_k = r_k − var(n_k),
//! ```
//!
//! and assigns each word its leftover argmax. The finite-expectation
//! variant instead grows `n_k` as slowly as the budget
//! `min{inf-max leftover, (1 − 1/M²)·r_{k-1}} ≥ 2·var(n)` allows, which
//! bounds the expected look-back by `2M²(1 + Σ var(n))`.
//!
//! Tables are stored by *dependence* depth: a level with look-back `n_k`
//! over an order-`m` model only ever reads `min(n_k, m)` symbols, and
//! storing keys at that depth is what keeps deep levels representable.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::measure::{Distribution, SubMeasure};
use crate::model::Process;
use crate::simulate::LookbackSource;
use crate::value::Value;
use crate::words::{Alphabet, Word};

/// Law of the look-back distance: `(n_k, p_k)` with strictly increasing
/// `n_k` and explicit residual `1 − Σ p_k`.
#[derive(Debug, Clone)]
pub struct LookBackDistribution<S: Value> {
    pub levels: Vec<(u64, S)>,
    pub residual: S,
}

impl<S: Value> LookBackDistribution<S> {
    pub fn is_complete(&self, tol: &S) -> bool {
        self.residual <= *tol
    }

    /// `P(L₀ > n)` including the residual.
    pub fn tail(&self, n: u64) -> S {
        let mut tail = self.residual.clone();
        for (lb, p) in &self.levels {
            if *lb > n {
                tail = tail + p.clone();
            }
        }
        tail
    }

    /// `Σ n_k·p_k` over assigned levels.
    pub fn expected(&self) -> S {
        self.levels.iter().fold(S::zero(), |acc, (n, p)| {
            acc + S::from_usize(*n as usize) * p.clone()
        })
    }
}

/// Table assignment of one level.
#[derive(Debug, Clone, PartialEq)]
pub enum TableAssignment<S: Value> {
    /// Each word maps to a single symbol (normalised table values in {0,1}).
    Deterministic(BTreeMap<Word, u16>),
    /// Each word maps to a distribution of table values.
    General(BTreeMap<Word, Distribution<S>>),
}

/// One level of a representation: given `L₀ = lookback`, the new symbol is
/// drawn from `assignment` applied to the `depth` most recent symbols.
#[derive(Debug, Clone)]
pub struct TableFunction<S: Value> {
    pub lookback: u64,
    /// Dependence depth: how many symbols the table reads (`≤ lookback`).
    pub depth: usize,
    /// Level mass `p_k`.
    pub mass: S,
    pub assignment: TableAssignment<S>,
}

impl<S: Value> TableFunction<S> {
    /// Normalised table values at `w` — the distribution of the new symbol
    /// given this level was drawn.
    pub fn values(&self, w: &Word, size: usize) -> Result<Distribution<S>> {
        let key = w.prefix_checked(self.depth)?;
        match &self.assignment {
            TableAssignment::Deterministic(map) => match map.get(&key) {
                Some(&sym) => Ok(Distribution::point(size, sym as usize)),
                None => Err(Error::TableUndefinedAt {
                    lookback: self.lookback,
                    word: key,
                }),
            },
            TableAssignment::General(map) => match map.get(&key) {
                Some(d) => Ok(d.clone()),
                None => Err(Error::TableUndefinedAt {
                    lookback: self.lookback,
                    word: key,
                }),
            },
        }
    }

    /// `T_k(·; w)`: the values scaled by the level mass; totals `p_k`.
    pub fn sub_measure(&self, w: &Word, size: usize) -> Result<Vec<S>> {
        let d = self.values(w, size)?;
        Ok(d.mass().iter().map(|v| v.clone() * self.mass.clone()).collect())
    }

    pub fn is_deterministic(&self) -> bool {
        match &self.assignment {
            TableAssignment::Deterministic(_) => true,
            TableAssignment::General(map) => map.values().all(|d| {
                d.mass()
                    .iter()
                    .all(|v| v.is_zero() || (v.clone() - S::one()).is_zero())
            }),
        }
    }
}

/// Per-level diagnostics recorded by the constructions.
#[derive(Debug, Clone)]
pub struct LevelDiagnostics<S: Value> {
    /// `r_k`, the inf over words of the max leftover entry.
    pub r: S,
    /// `var(n_k)` used for the mass cut.
    pub var_at_level: S,
    /// Word attaining the inf (exact on finite alphabets).
    pub witness: Word,
    /// Unassigned mass `γ` at selection time.
    pub gamma: S,
    /// Dominating-measure cut `M` (general variant) or `|A|` (finite-
    /// expectation variant).
    pub m_cut: usize,
}

/// How a representation was built.
#[derive(Debug, Clone, PartialEq)]
pub enum RepKind {
    /// General construction (Theorem 1(a)-style).
    GeneralVariant,
    /// Finite-expected-look-back construction (Theorem 1(b)-style).
    FiniteExpectationVariant,
    /// Ratio-condition construction (distribution-valued tables).
    RatioConstruction,
    /// Digit-expansion determinization of another representation.
    Determinized {
        family: &'static str,
        digit_depth: u32,
    },
    /// Assembled by hand (tests, file input).
    Manual,
}

/// A random-step Markov representation: look-back law plus tables, with
/// diagnostics from the construction that produced it.
#[derive(Debug, Clone)]
pub struct Representation<S: Value> {
    pub alphabet: Alphabet,
    pub levels: Vec<TableFunction<S>>,
    pub residual: S,
    /// Whether the representation claims deterministic tables.
    pub deterministic: bool,
    pub kind: RepKind,
    pub diagnostics: Vec<LevelDiagnostics<S>>,
    /// Positive word used to seed simulation histories.
    pub seed_word: Option<Word>,
}

impl<S: Value> Representation<S> {
    pub fn max_lookback(&self) -> u64 {
        self.levels.iter().map(|l| l.lookback).max().unwrap_or(0)
    }

    pub fn max_table_depth(&self) -> usize {
        self.levels.iter().map(|l| l.depth).max().unwrap_or(0)
    }

    pub fn is_complete(&self, tol: &S) -> bool {
        self.residual <= *tol
    }

    /// Look-back law with levels grouped by distance (the law of `L₀`).
    pub fn lookback_distribution(&self) -> LookBackDistribution<S> {
        let mut grouped: BTreeMap<u64, S> = BTreeMap::new();
        for l in &self.levels {
            let e = grouped.entry(l.lookback).or_insert_with(S::zero);
            *e = e.clone() + l.mass.clone();
        }
        LookBackDistribution {
            levels: grouped.into_iter().collect(),
            residual: self.residual.clone(),
        }
    }

    /// `Σ n_k p_k` plus a completeness flag (`false` means a residual tail
    /// is unaccounted for and the true expectation is larger).
    pub fn expected_lookback(&self, tol: &S) -> (S, bool) {
        let e = self.levels.iter().fold(S::zero(), |acc, l| {
            acc + S::from_usize(l.lookback as usize) * l.mass.clone()
        });
        (e, self.is_complete(tol))
    }

    /// `Σ_k T_k(·; w)` as a vector of per-symbol masses; totals `1 − residual`.
    pub fn mixture(&self, w: &Word) -> Result<Vec<S>> {
        let size = self.alphabet.size();
        let mut acc = alloc::vec![S::zero(); size];
        for l in &self.levels {
            let t = l.sub_measure(w, size)?;
            for (a, v) in t.into_iter().enumerate() {
                acc[a] = acc[a].clone() + v;
            }
        }
        Ok(acc)
    }

    /// Merges levels sharing a look-back distance into one level whose
    /// table is the mass-weighted mixture (the law of the process given
    /// `{L₀ = n}` is exactly that mixture).
    pub fn merge_levels(&self) -> Result<Representation<S>> {
        let size = self.alphabet.size();
        let mut by_lookback: BTreeMap<u64, Vec<&TableFunction<S>>> = BTreeMap::new();
        for l in &self.levels {
            by_lookback.entry(l.lookback).or_default().push(l);
        }
        let mut levels = Vec::new();
        for (lb, group) in by_lookback {
            let total = group
                .iter()
                .fold(S::zero(), |acc, l| acc + l.mass.clone());
            if total.is_zero() {
                continue;
            }
            let depth = group.iter().map(|l| l.depth).max().unwrap();
            // Collect the union of keys at the deepest dependence.
            let mut keys: Vec<Word> = Vec::new();
            {
                let mut seen = alloc::collections::BTreeSet::new();
                for l in &group {
                    let table_keys: Vec<Word> = match &l.assignment {
                        TableAssignment::Deterministic(m) => m.keys().cloned().collect(),
                        TableAssignment::General(m) => m.keys().cloned().collect(),
                    };
                    for k in table_keys {
                        // Expand shallower keys to the common depth.
                        if k.len() == depth {
                            if seen.insert(k.clone()) {
                                keys.push(k);
                            }
                        } else {
                            for ext in self.alphabet.words(depth - k.len()) {
                                let mut sym = k.symbols().to_vec();
                                sym.extend_from_slice(ext.symbols());
                                let full = Word::from_symbols(sym);
                                if seen.insert(full.clone()) {
                                    keys.push(full);
                                }
                            }
                        }
                    }
                }
            }
            let mut map = BTreeMap::new();
            for key in keys {
                let mut mix = alloc::vec![S::zero(); size];
                for l in &group {
                    let v = l.values(&key, size)?;
                    for (a, m) in v.mass().iter().enumerate() {
                        mix[a] = mix[a].clone() + m.clone() * l.mass.clone() / total.clone();
                    }
                }
                map.insert(key, Distribution::new(mix, &S::default_tolerance())?);
            }
            levels.push(TableFunction {
                lookback: lb,
                depth,
                mass: total,
                assignment: TableAssignment::General(map),
            });
        }
        Ok(Representation {
            alphabet: self.alphabet.clone(),
            levels,
            residual: self.residual.clone(),
            deterministic: false,
            kind: self.kind.clone(),
            diagnostics: Vec::new(),
            seed_word: self.seed_word.clone(),
        })
    }
}

impl<S: Value> LookbackSource<S> for Representation<S> {
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn levels(&self) -> Vec<(u64, S)> {
        self.levels
            .iter()
            .map(|l| (l.lookback, l.mass.clone()))
            .collect()
    }

    fn residual(&self) -> S {
        self.residual.clone()
    }

    fn table_depth(&self, level: usize) -> usize {
        self.levels[level].depth
    }

    fn table_dist(&self, level: usize, w: &Word) -> Result<Distribution<S>> {
        self.levels[level].values(w, self.alphabet.size())
    }

    fn seed_history(&self, len: usize) -> Word {
        match &self.seed_word {
            Some(w) if w.len() >= len => w.prefix(len),
            _ => Word::from_symbols(alloc::vec![0; len]),
        }
    }
}

/// The leftover measure `P_{k-1}(·; w) = cond(w) − Σ_i T_i(·; w)`.
///
/// Negative entries beyond tolerance mean the supplied tables overdraw
/// the conditional law and are rejected.
pub fn leftover<S: Value, M: Process<S> + ?Sized>(
    model: &M,
    tables: &[TableFunction<S>],
    w: &Word,
) -> Result<SubMeasure<S>> {
    let size = model.alphabet().size();
    let needed = tables.iter().map(|t| t.depth).max().unwrap_or(0);
    if w.len() < needed {
        return Err(Error::WordTooShort {
            needed,
            got: w.len(),
        });
    }
    let mut mass = model.cond(w)?.into_mass();
    for t in tables {
        let sub = t.sub_measure(w, size)?;
        for (a, v) in sub.into_iter().enumerate() {
            mass[a] = mass[a].clone() - v;
        }
    }
    let tol = S::default_tolerance();
    for (a, v) in mass.iter().enumerate() {
        if *v < -tol.clone() {
            return Err(Error::InconsistentTables {
                word: w.clone(),
                symbol: a,
            });
        }
    }
    // Clamp float dust so downstream argmax stays clean.
    let mass = mass
        .into_iter()
        .map(|v| if v < S::zero() { S::zero() } else { v })
        .collect();
    SubMeasure::new(mass, &tol)
}

/// Least `M` such that the dominating measure's tail past its first `M`
/// symbols is strictly below `γ/10`.
pub fn choose_m<S: Value>(dominating: &[S], gamma: &S) -> Result<usize> {
    if *gamma <= S::zero() {
        return Err(Error::Unsupported(String::from(
            "gamma must be positive for the dominating-measure cut",
        )));
    }
    let bound = gamma.clone() * S::ratio(1, 10);
    let mut tail = dominating.iter().fold(S::zero(), |a, b| a + b.clone());
    for m in 1..=dominating.len() {
        tail = tail - dominating[m - 1].clone();
        if tail < bound {
            return Ok(m);
        }
    }
    Ok(dominating.len())
}

/// Stop criteria shared by the constructions.
#[derive(Debug, Clone)]
pub struct StopRule<S: Value> {
    /// Halt once the residual falls to this level.
    pub residual_target: S,
    /// Hard cap on the number of levels.
    pub k_max: usize,
    /// Scan only positive-probability words (default) or all of `A^n`.
    pub all_words: bool,
}

impl<S: Value> Default for StopRule<S> {
    fn default() -> Self {
        StopRule {
            residual_target: S::ratio(1, 1_000_000_000),
            k_max: 64,
            all_words: false,
        }
    }
}

fn scan_words<S: Value, M: Process<S> + ?Sized>(
    model: &M,
    len: usize,
    all_words: bool,
) -> Result<Vec<Word>> {
    model.probe_words(len, !all_words)
}

fn dependence_depth<S: Value, M: Process<S> + ?Sized>(model: &M, n: usize) -> usize {
    match model.order() {
        Some(m) => core::cmp::min(n, m),
        None => n,
    }
}

/// Scans the leftover over words of dependence depth `d`, returning
/// `(r, witness, per-word argmax table)`.
fn leftover_scan<S: Value, M: Process<S> + ?Sized>(
    model: &M,
    tables: &[TableFunction<S>],
    d: usize,
    all_words: bool,
) -> Result<(S, Word, BTreeMap<Word, u16>)> {
    let words = scan_words(model, d, all_words)?;
    if words.is_empty() {
        return Err(Error::Unsupported(String::from("empty word scan")));
    }
    let mut table = BTreeMap::new();
    let mut r: Option<(S, Word)> = None;
    for w in words {
        let p = leftover(model, tables, &w)?;
        let (argmax, max) = p.argmax();
        let max = max.clone();
        table.insert(w.clone(), argmax as u16);
        if r.as_ref().map_or(true, |(best, _)| max < *best) {
            r = Some((max, w));
        }
    }
    let (r, witness) = r.unwrap();
    Ok((r, witness, table))
}

fn counting_measure<S: Value>(size: usize) -> Vec<S> {
    alloc::vec![S::one(); size]
}

fn grow_seed_word<S: Value, M: Process<S> + ?Sized>(model: &M, len: usize) -> Result<Word> {
    let mut w = Word::empty();
    for _ in 0..len {
        let d = model.cond(&w)?;
        let (a, _) = d.argmax();
        w = w.extend_newer(a as u16);
    }
    Ok(w)
}

/// How far past the previous level the look-back probe may reach before
/// declaring that the variation bound does not decay.
const PROBE_LIMIT: usize = 100_000;

/// General deterministic decomposition (part (a)).
///
/// Requires a finite alphabet and a variation bound tending to zero; the
/// dominating measure defaults to the counting measure.
pub fn decompose<S: Value, M: Process<S> + ?Sized>(
    model: &M,
    stop: &StopRule<S>,
) -> Result<Representation<S>> {
    let size = model.alphabet().size();
    let mu = model
        .dominating()
        .unwrap_or_else(|| counting_measure(size));

    let mut tables: Vec<TableFunction<S>> = Vec::new();
    let mut diagnostics = Vec::new();
    let mut gamma = S::one();
    let mut n_prev = 0usize;

    for k in 1..=stop.k_max {
        if gamma <= stop.residual_target {
            break;
        }
        let m_cut = choose_m(&mu, &gamma)?;
        let threshold =
            S::ratio(9, 10) * gamma.clone() / S::from_usize(m_cut) * S::ratio(1, 2);
        // least n > n_prev with var(n) ≤ 9γ/(20M), i.e. 2·var(n) ≤ 9γ/(10M)
        let mut n_k = None;
        for n in (n_prev + 1)..=(n_prev + PROBE_LIMIT) {
            if model.var_bound(n) <= threshold {
                n_k = Some(n);
                break;
            }
        }
        let n_k = n_k.ok_or_else(|| {
            Error::Unsupported(String::from(
                "variation bound does not decay below the level threshold",
            ))
        })?;

        let d = dependence_depth(model, n_k);
        let (r, witness, assignment) = leftover_scan(model, &tables, d, stop.all_words)?;
        let var_nk = model.var_bound(n_k);
        let p = r.clone() - var_nk.clone();
        if p <= S::zero() {
            if gamma > stop.residual_target {
                return Err(Error::NotUniformMartingaleAtResolution { level: k });
            }
            break;
        }
        diagnostics.push(LevelDiagnostics {
            r,
            var_at_level: var_nk,
            witness,
            gamma: gamma.clone(),
            m_cut,
        });
        gamma = gamma - p.clone();
        tables.push(TableFunction {
            lookback: n_k as u64,
            depth: d,
            mass: p,
            assignment: TableAssignment::Deterministic(assignment),
        });
        n_prev = n_k;
    }

    let seed_len = tables.iter().map(|t| t.depth).max().unwrap_or(0);
    let seed = grow_seed_word(model, seed_len)?;
    Ok(Representation {
        alphabet: model.alphabet().clone(),
        levels: tables,
        residual: gamma,
        deterministic: true,
        kind: RepKind::GeneralVariant,
        diagnostics,
        seed_word: Some(seed),
    })
}

/// Finite-expected-look-back decomposition (part (b)).
///
/// Requires summable variation bounds. On completion the expected
/// look-back obeys `Σ n_k p_k ≤ 2M²(1 + Σ_n var(n))` with `M = |A|`.
pub fn decompose_finite_expectation<S: Value, M: Process<S> + ?Sized>(
    model: &M,
    stop: &StopRule<S>,
) -> Result<Representation<S>> {
    let size = model.alphabet().size();
    let var_sum = model.var_sum().ok_or(Error::VariationsNotSummable)?;
    let m2 = S::from_usize(size * size);
    let cap_factor = S::one() - S::one() / m2.clone();

    let mut tables: Vec<TableFunction<S>> = Vec::new();
    let mut diagnostics = Vec::new();
    let mut gamma = S::one();
    let mut r_prev = S::one();
    let mut n_prev = 1usize;

    for k in 1..=stop.k_max {
        if gamma <= stop.residual_target {
            break;
        }
        let cap = cap_factor.clone() * r_prev.clone();
        let mut chosen = None;
        for n in (n_prev + 1)..=(n_prev + PROBE_LIMIT) {
            let d = dependence_depth(model, n);
            let (inf_max, witness, assignment) =
                leftover_scan(model, &tables, d, stop.all_words)?;
            let r = if inf_max < cap { inf_max } else { cap.clone() };
            let var_n = model.var_bound(n);
            if r >= var_n.clone() + var_n.clone() {
                chosen = Some((n, d, r, var_n, witness, assignment));
                break;
            }
        }
        let (n_k, d, r, var_nk, witness, assignment) = chosen.ok_or_else(|| {
            Error::Unsupported(String::from(
                "variation bound does not decay below the level budget",
            ))
        })?;
        let p = r.clone() - var_nk.clone();
        if p <= S::zero() {
            return Err(Error::NotUniformMartingaleAtResolution { level: k });
        }
        diagnostics.push(LevelDiagnostics {
            r: r.clone(),
            var_at_level: var_nk,
            witness,
            gamma: gamma.clone(),
            m_cut: size,
        });
        gamma = gamma - p.clone();
        tables.push(TableFunction {
            lookback: n_k as u64,
            depth: d,
            mass: p,
            assignment: TableAssignment::Deterministic(assignment),
        });
        r_prev = r;
        n_prev = n_k;
    }

    let _ = var_sum;
    let seed_len = tables.iter().map(|t| t.depth).max().unwrap_or(0);
    let seed = grow_seed_word(model, seed_len)?;
    Ok(Representation {
        alphabet: model.alphabet().clone(),
        levels: tables,
        residual: gamma,
        deterministic: true,
        kind: RepKind::FiniteExpectationVariant,
        diagnostics,
        seed_word: Some(seed),
    })
}

/// The finite-expectation bound `2M²(1 + Σ_n var(n))` for a model.
pub fn finite_expectation_bound<S: Value, M: Process<S> + ?Sized>(model: &M) -> Result<S> {
    let var_sum = model.var_sum().ok_or(Error::VariationsNotSummable)?;
    let size = model.alphabet().size();
    Ok(S::ratio(2, 1) * S::from_usize(size * size) * (S::one() + var_sum))
}

/// Verification report for a representation against its model.
#[derive(Debug, Clone)]
pub struct VerifyReport<S: Value> {
    /// Max over scanned words of `Σ_a |cond − mixture|`.
    pub max_gap: S,
    pub residual: S,
    /// Per look-back `n`: (sup TV between full and n-past conditionals,
    /// `P(L₀ > n)`).
    pub tv_lookback: Vec<(u64, S, S)>,
    /// Whether the necessity bound `var(n) ≤ 2·P(L₀ > n)` held at each n.
    pub necessity_ok: bool,
    /// Number of words scanned.
    pub words_scanned: usize,
}

/// Options for [`verify_representation`].
#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub all_words: bool,
    /// Skip the per-`n` TV/look-back sweep (it needs `depth ≥ order`).
    pub check_tv_lookback: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            all_words: false,
            check_tv_lookback: true,
        }
    }
}

/// Checks a representation against its model at a given scan depth:
/// per-word table domination and mixture reconstruction, the determinism
/// claim, and the total-variation/look-back inequality. Any violated
/// inequality is returned as a named failure with its witness word.
pub fn verify_representation<S: Value, M: Process<S> + ?Sized>(
    model: &M,
    rep: &Representation<S>,
    depth: usize,
    options: &VerifyOptions,
) -> Result<VerifyReport<S>> {
    let size = model.alphabet().size();
    let needed = rep.max_table_depth();
    if depth < needed {
        return Err(Error::WordTooShort {
            needed,
            got: depth,
        });
    }
    let tol = S::default_tolerance();

    // Determinism claim.
    if rep.deterministic {
        for l in &rep.levels {
            if !l.is_deterministic() {
                let word = match &l.assignment {
                    TableAssignment::General(m) => {
                        m.keys().next().cloned().unwrap_or_else(Word::empty)
                    }
                    TableAssignment::Deterministic(_) => Word::empty(),
                };
                return Err(Error::NotDeterministic {
                    lookback: l.lookback,
                    word,
                });
            }
        }
    }

    // Scan depth: beyond the model order and the table dependence nothing
    // changes, so the class depth suffices.
    let scan_depth = match model.order() {
        Some(m) => core::cmp::min(depth, core::cmp::max(m, needed)),
        None => depth,
    };
    let words = scan_words(model, scan_depth, options.all_words)?;
    let exact = model.order().map_or(false, |m| scan_depth >= m)
        && model.var_bound_is_exact()
        && S::EXACT;

    // Slack for inexact models: the mixture may sit var(n_k) away from the
    // conditional per level, twice (one for each side of the cut).
    let slack = if exact {
        S::zero()
    } else {
        rep.levels.iter().fold(S::zero(), |acc, l| {
            acc + S::ratio(2, 1) * l.mass.clone() * model.var_bound(l.lookback as usize)
        }) + tol.clone()
    };

    let mut max_gap = S::zero();
    for w in &words {
        let cond = model.cond(w)?;
        let mix = rep.mixture(w)?;
        let mut gap = S::zero();
        for a in 0..size {
            let diff = cond.get(a).clone() - mix[a].clone();
            if diff < -(tol.clone() + slack.clone()) {
                return Err(Error::CheckFailed {
                    invariant: String::from("table-domination"),
                    witness: w.clone(),
                });
            }
            gap = gap + diff.abs();
        }
        if gap > max_gap {
            max_gap = gap.clone();
        }
        // Reconstruction: the undistributed mass must be the residual.
        if (gap.clone() - rep.residual.clone()).abs() > slack.clone() + tol.clone() {
            return Err(Error::CheckFailed {
                invariant: String::from("mixture-reconstruction"),
                witness: w.clone(),
            });
        }
    }

    // TV/look-back inequality and the necessity direction.
    let lookback = rep.lookback_distribution();
    let mut tv_rows = Vec::new();
    let mut necessity_ok = true;
    if options.check_tv_lookback {
        let max_n = rep.max_lookback();
        for n in 1..=max_n {
            if n as usize > scan_depth {
                break;
            }
            let tail = lookback.tail(n);
            let mut sup_tv = S::zero();
            let mut witness = None;
            for w in &words {
                let full = model.cond(w)?;
                let short = model.cond(&w.prefix(n as usize))?;
                let tv = crate::measure::tv_distance(&full, &short)?;
                if tv > sup_tv {
                    sup_tv = tv;
                    witness = Some(w.clone());
                }
            }
            if sup_tv > tail.clone() + slack.clone() + tol.clone() {
                return Err(Error::CheckFailed {
                    invariant: String::from("tv-lookback"),
                    witness: witness.unwrap_or_else(Word::empty),
                });
            }
            // Necessity: var(n) ≤ 2·P(L₀ > n) for complete representations.
            let var_n = crate::model::variation(model, n as usize, scan_depth)?;
            if var_n.value > S::ratio(2, 1) * tail.clone() + slack.clone() + tol.clone() {
                necessity_ok = false;
            }
            tv_rows.push((n, sup_tv, tail));
        }
    }

    Ok(VerifyReport {
        max_gap,
        residual: rep.residual.clone(),
        tv_lookback: tv_rows,
        necessity_ok,
        words_scanned: words.len(),
    })
}

/// One row of the collapse demonstration.
#[derive(Debug, Clone)]
pub struct CollapseRow<S: Value> {
    pub depth: usize,
    /// `inf_w max_a cond(a; w)` over the probe words at this depth.
    pub value: S,
    pub witness: Word,
}

/// Evaluates the first-level obstruction `inf_w max_a P₀(a; w)` at a
/// sequence of depths. A genuine random Markov process keeps this bounded
/// away from zero (any level mass must fit under it at every depth); the
/// bins construction drives it to zero along its witness family.
pub fn demonstrate_collapse<S: Value, M: Process<S> + ?Sized>(
    model: &M,
    depths: &[usize],
) -> Result<Vec<CollapseRow<S>>> {
    let mut rows = Vec::new();
    for &depth in depths {
        let (value, witness, _) = leftover_scan(model, &[], depth, false)?;
        rows.push(CollapseRow {
            depth,
            value,
            witness,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::catalog;
    use crate::value::Exact;
    use num_traits::{One, Zero};

    fn exact(n: i64, d: u64) -> Exact {
        Exact::ratio(n, d)
    }

    #[test]
    fn choose_m_examples() {
        // Counting measure on {0,1}, γ = 1: the tail is empty only at M = |A|.
        let mu = [Exact::one(), Exact::one()];
        assert_eq!(choose_m(&mu, &Exact::one()).unwrap(), 2);

        // μ(k) = 2⁻ᵏ, γ = ½: 2⁻⁵ = 1/32 < 1/20 while 2⁻⁴ = 1/16 ≥ 1/20.
        let mu: Vec<Exact> = (1..=12).map(|k| Exact::pow2_neg(k)).collect();
        assert_eq!(choose_m(&mu, &exact(1, 2)).unwrap(), 5);

        assert!(choose_m(&mu, &Exact::zero()).is_err());
    }

    #[test]
    fn choose_m_uniform_boundary() {
        // Uniform 1/n over n symbols, γ = 1: least M with (n−M)/n < 1/10,
        // checked against brute force.
        for n in 1..40usize {
            let mu = alloc::vec![Exact::one() / Exact::from_usize(n); n];
            let got = choose_m(&mu, &Exact::one()).unwrap();
            let brute = (1..=n)
                .find(|&m| {
                    Exact::from_usize(n - m) / Exact::from_usize(n) < exact(1, 10)
                })
                .unwrap_or(n);
            assert_eq!(got, brute, "n = {n}");
        }
    }

    #[test]
    fn leftover_no_tables_is_cond() {
        let m = catalog::two_state::<Exact>().unwrap();
        let w = Word::from_symbols(vec![0]);
        let p = leftover(&m, &[], &w).unwrap();
        assert_eq!(*p.get(0), exact(9, 10));
        assert_eq!(*p.get(1), exact(1, 10));
    }

    #[test]
    fn leftover_after_half_table() {
        // Bernoulli(½) after a level of mass ½ pointing at symbol 0.
        let m = catalog::bernoulli::<Exact>(exact(1, 2)).unwrap();
        let mut map = BTreeMap::new();
        map.insert(Word::empty(), 0u16);
        let t = TableFunction {
            lookback: 1,
            depth: 0,
            mass: exact(1, 2),
            assignment: TableAssignment::Deterministic(map),
        };
        let p = leftover(&m, &[t], &Word::from_symbols(vec![0])).unwrap();
        assert!(p.get(0).is_zero());
        assert_eq!(*p.get(1), exact(1, 2));
    }

    #[test]
    fn leftover_two_state_level_one() {
        // After the level-1 table (last 0 → 0, last 1 → 1, mass 0.8):
        // leftover at a word ending 0 is (0.1, 0.1).
        let m = catalog::two_state::<Exact>().unwrap();
        let mut map = BTreeMap::new();
        map.insert(Word::from_symbols(vec![0]), 0u16);
        map.insert(Word::from_symbols(vec![1]), 1u16);
        let t = TableFunction {
            lookback: 1,
            depth: 1,
            mass: exact(8, 10),
            assignment: TableAssignment::Deterministic(map),
        };
        let p = leftover(&m, &[t], &Word::from_symbols(vec![0, 1])).unwrap();
        assert_eq!(*p.get(0), exact(1, 10));
        assert_eq!(*p.get(1), exact(1, 10));
    }

    #[test]
    fn leftover_rejects_overdraw() {
        let m = catalog::bernoulli::<Exact>(exact(1, 2)).unwrap();
        let mut map = BTreeMap::new();
        map.insert(Word::empty(), 0u16);
        let t = TableFunction {
            lookback: 1,
            depth: 0,
            mass: exact(3, 4), // exceeds the ½ available at symbol 0
            assignment: TableAssignment::Deterministic(map),
        };
        assert!(matches!(
            leftover(&m, &[t], &Word::from_symbols(vec![0])),
            Err(Error::InconsistentTables { symbol: 0, .. })
        ));
    }

    #[test]
    fn decompose_bernoulli_half() {
        let m = catalog::bernoulli::<Exact>(exact(1, 2)).unwrap();
        let rep = decompose(&m, &StopRule::default()).unwrap();
        assert!(rep.residual.is_zero());
        assert_eq!(rep.levels.len(), 2);
        assert_eq!(rep.levels[0].lookback, 1);
        assert_eq!(rep.levels[0].mass, exact(1, 2));
        assert_eq!(rep.levels[1].lookback, 2);
        assert_eq!(rep.levels[1].mass, exact(1, 2));
        // Tie-break at level 1 picks symbol 0; level 2 the leftover symbol 1.
        match (&rep.levels[0].assignment, &rep.levels[1].assignment) {
            (TableAssignment::Deterministic(t1), TableAssignment::Deterministic(t2)) => {
                assert_eq!(t1[&Word::empty()], 0);
                assert_eq!(t2[&Word::empty()], 1);
            }
            _ => panic!("expected deterministic tables"),
        }
    }

    #[test]
    fn decompose_bernoulli_three_quarters() {
        let m = catalog::bernoulli::<Exact>(exact(3, 4)).unwrap();
        let rep = decompose(&m, &StopRule::default()).unwrap();
        let law = rep.lookback_distribution();
        assert_eq!(law.levels, vec![(1, exact(3, 4)), (2, exact(1, 4))]);
        assert!(law.residual.is_zero());
    }

    #[test]
    fn decompose_two_state_exact_levels() {
        let m = catalog::two_state::<Exact>().unwrap();
        let rep = decompose(&m, &StopRule::default()).unwrap();
        assert!(rep.residual.is_zero());
        let law = rep.lookback_distribution();
        assert_eq!(
            law.levels,
            vec![(1, exact(8, 10)), (2, exact(1, 10)), (3, exact(1, 10))]
        );
        // Level tables: last 0 → 0 / last 1 → 1; all → 0; last 0 → 1 / last 1 → 0.
        let t = |idx: usize, sym: u16| match &rep.levels[idx].assignment {
            TableAssignment::Deterministic(map) => {
                map[&Word::from_symbols(vec![sym])]
            }
            _ => panic!("deterministic expected"),
        };
        assert_eq!(t(0, 0), 0);
        assert_eq!(t(0, 1), 1);
        assert_eq!(t(1, 0), 0);
        assert_eq!(t(1, 1), 0);
        assert_eq!(t(2, 0), 1);
        assert_eq!(t(2, 1), 0);
        // E[L] = 1·0.8 + 2·0.1 + 3·0.1 = 1.3.
        let (e, complete) = rep.expected_lookback(&Exact::zero());
        assert!(complete);
        assert_eq!(e, exact(13, 10));
        // Construction invariants: p_k ≥ var(n_k) and p_k ≥ r_k/2.
        for (l, d) in rep.levels.iter().zip(rep.diagnostics.iter()) {
            assert!(l.mass >= d.var_at_level);
            assert!(l.mass.clone() + l.mass.clone() >= d.r);
        }
    }

    #[test]
    fn decompose_b_bernoulli_three_quarters() {
        let m = catalog::bernoulli::<Exact>(exact(3, 4)).unwrap();
        let rep = decompose_finite_expectation(&m, &StopRule::default()).unwrap();
        let law = rep.lookback_distribution();
        assert_eq!(law.levels, vec![(2, exact(3, 4)), (3, exact(1, 4))]);
        assert!(law.residual.is_zero());
        let (e, _) = rep.expected_lookback(&Exact::zero());
        assert_eq!(e, exact(9, 4)); // 2·¾ + 3·¼
        let bound = finite_expectation_bound(&m).unwrap();
        assert_eq!(bound, exact(8, 1)); // 2·4·(1+0)
        assert!(e <= bound);
    }

    #[test]
    fn decompose_b_requires_summable_variations() {
        let m = crate::model::rwbins::RwBins::<Exact>::new(4).unwrap();
        assert!(matches!(
            decompose_finite_expectation(&m, &StopRule::default()),
            Err(Error::VariationsNotSummable)
        ));
    }

    #[test]
    fn verify_two_state_exact_reconstruction() {
        let m = catalog::two_state::<Exact>().unwrap();
        let rep = decompose(&m, &StopRule::default()).unwrap();
        let report =
            verify_representation(&m, &rep, 3, &VerifyOptions::default()).unwrap();
        assert!(report.max_gap.is_zero());
        // Dropping the last level leaves a gap of exactly its mass.
        let mut truncated = rep.clone();
        truncated.levels.pop();
        truncated.residual = exact(1, 10);
        let report =
            verify_representation(&m, &truncated, 3, &VerifyOptions::default())
                .unwrap();
        assert_eq!(report.max_gap, exact(1, 10));
    }

    #[test]
    fn verify_rejects_tampered_table() {
        let m = catalog::two_state::<Exact>().unwrap();
        let mut rep = decompose(&m, &StopRule::default()).unwrap();
        // Replace a deterministic level with a two-point table while still
        // claiming determinism.
        let mut map = BTreeMap::new();
        let half = Distribution::new(
            vec![exact(1, 2), exact(1, 2)],
            &Exact::default_tolerance(),
        )
        .unwrap();
        map.insert(Word::from_symbols(vec![0]), half.clone());
        map.insert(Word::from_symbols(vec![1]), half);
        rep.levels[2].assignment = TableAssignment::General(map);
        assert!(matches!(
            verify_representation(&m, &rep, 3, &VerifyOptions::default()),
            Err(Error::NotDeterministic { .. })
        ));
    }

    #[test]
    fn verify_rejects_overdrawing_rep() {
        let m = catalog::two_state::<Exact>().unwrap();
        let mut rep = decompose(&m, &StopRule::default()).unwrap();
        // Inflate a level mass: mixture now exceeds cond somewhere.
        rep.levels[0].mass = exact(9, 10);
        rep.residual = Exact::zero() - exact(1, 10);
        assert!(verify_representation(&m, &rep, 3, &VerifyOptions::default()).is_err());
    }

    #[test]
    fn collapse_controls_stay_flat() {
        let iid = catalog::bernoulli::<Exact>(exact(1, 2)).unwrap();
        let rows = demonstrate_collapse(&iid, &[1, 2, 3]).unwrap();
        for r in &rows {
            assert_eq!(r.value, exact(1, 2));
        }
        let m = catalog::two_state::<Exact>().unwrap();
        let rows = demonstrate_collapse(&m, &[1, 2, 3]).unwrap();
        for r in &rows {
            // inf over rows of the row max: min(0.9, 0.8) = 0.8.
            assert_eq!(r.value, exact(8, 10));
        }
    }

    #[test]
    fn collapse_rwbins_decays() {
        let m = crate::model::rwbins::RwBins::<f64>::new(8).unwrap();
        let rows = demonstrate_collapse(&m, &[2, 4, 6]).unwrap();
        assert!(rows[0].value > rows[1].value);
        assert!(rows[1].value > rows[2].value);
        // The witness family value is (2/3)/(depth+2).
        for r in &rows {
            let expect = (2.0 / 3.0) / (r.depth as f64 + 2.0);
            assert!((r.value - expect).abs() < 1e-12, "depth {}", r.depth);
        }
    }

    #[test]
    fn inf_look_back_expectation_grows_with_truncation() {
        // The independent process with |Z_i| = 4^i atoms of mass 2^{-i}/4^i
        // admits deterministic representations, but their expected
        // look-back doubles with every extra layer: each atom needs its
        // own level and the level depths sweep the whole alphabet.
        let mut expectations = Vec::new();
        for i_max in 1..=3usize {
            let t = catalog::inf_look_back::<Exact>(i_max).unwrap();
            let stop = StopRule {
                k_max: 128,
                ..StopRule::default()
            };
            let rep = decompose(&t.model, &stop).unwrap();
            assert!(rep.residual.is_zero());
            let (e, complete) = rep.expected_lookback(&Exact::zero());
            assert!(complete);
            expectations.push(e);
        }
        // Hand sums: Σ k·p_k with atom masses 2⁻ⁱ/4ⁱ renormalised by the
        // retained mass 1 − 2⁻ᴵ.
        assert_eq!(expectations[0], exact(5, 2)); // (1+2+3+4)/4
        assert_eq!(expectations[1], exact(35, 6)); // 10/6 + 200/48
        assert_eq!(expectations[2], exact(25, 2)); // 10/7 + 200/56 + 3360/448
        for pair in expectations.windows(2) {
            assert!(pair[1].clone() >= exact(2, 1) * pair[0].clone());
        }
    }

    #[test]
    fn simulate_rejects_incomplete_representation() {
        use crate::ratio::{default_masses, ratio_decompose};
        use crate::simulate::{simulate, Source};
        let m = catalog::two_state::<Exact>().unwrap();
        let rep = ratio_decompose(&m, &default_masses::<Exact>(5), 4).unwrap();
        assert_eq!(rep.residual, Exact::pow2_neg(5));
        assert!(matches!(
            simulate(&Source::Representation(&rep), 10, 1, 4, &Exact::zero()),
            Err(Error::IncompleteRepresentation { .. })
        ));
    }

    #[test]
    fn simulate_representation_round_trip() {
        use crate::simulate::{simulate, Source};
        let m = catalog::bernoulli::<f64>(0.5).unwrap();
        let rep = decompose(&m, &StopRule::default()).unwrap();
        let path = simulate(
            &Source::Representation(&rep),
            100_000,
            7,
            4,
            &1e-9,
        )
        .unwrap();
        let ones = path.iter().filter(|(s, _)| *s == 1).count() as f64;
        assert!((ones / 1e5 - 0.5).abs() < 3.0 * (0.25f64 / 1e5).sqrt());
        // Look-backs drawn only from the two levels.
        assert!(path.iter().all(|(_, l)| matches!(l, Some(1) | Some(2))));
        let again = simulate(&Source::Representation(&rep), 100_000, 7, 4, &1e-9).unwrap();
        assert_eq!(path, again);
    }
}
