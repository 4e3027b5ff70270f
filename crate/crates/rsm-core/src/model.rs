//! Conditional models: g-function oracles, finite-order Markov chains,
//! variation and ratio coefficients, stationary solving.
//!
//! A [`Process`] answers `P(X₀ = · | n-past = w)` for finite past words and
//! declares an upper bound on the `n`-th variation. Finite-order Markov
//! chains ([`MarkovModel`]) answer exactly at every depth: at depths below
//! the order the conditional is derived from the invariant word measure.

pub mod catalog;
pub mod rwbins;

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::measure::{Distribution, StationaryWordMeasure};
use crate::value::Value;
use crate::words::{Alphabet, Word};

/// Conditional model of a stationary process (its g-function oracle).
pub trait Process<S: Value> {
    fn alphabet(&self) -> &Alphabet;

    /// `P(X₀ = · | n-past = w)` where `n = w.len()`.
    fn cond(&self, w: &Word) -> Result<Distribution<S>>;

    /// Declared upper bound on the n-th variation; non-increasing in `n`.
    fn var_bound(&self, n: usize) -> S;

    /// Whether `var_bound` is the exact variation (true for finite-order
    /// models, false for declared analytic bounds).
    fn var_bound_is_exact(&self) -> bool {
        false
    }

    /// Finite Markov order `m` when known: `var_bound(n) = 0` for `n ≥ m`.
    fn order(&self) -> Option<usize> {
        None
    }

    /// Dominating measure `μ` with `cond(w)[a] ≤ μ[a]` for all `w`, when
    /// declared. Finite alphabets always admit the counting measure.
    fn dominating(&self) -> Option<Vec<S>> {
        None
    }

    /// Upper bound on `Σ_{n≥1} var_bound(n)` when the sum is finite.
    fn var_sum(&self) -> Option<S> {
        self.order().map(|m| {
            let mut s = S::zero();
            for n in 1..m {
                s = s + self.var_bound(n);
            }
            s
        })
    }

    /// Deepest past the oracle can answer for (`None` = any depth).
    fn max_depth(&self) -> Option<usize> {
        None
    }

    /// Words of length `len` to scan when taking suprema/infima. The
    /// default enumerates positive-probability words if `positive_only`,
    /// else all of `A^len`. Models with structured supports may override
    /// with a representative subfamily (suprema become lower estimates).
    fn probe_words(&self, len: usize, positive_only: bool) -> Result<Vec<Word>> {
        if positive_only {
            positive_words(self, len)
        } else {
            Ok(self.alphabet().words(len).collect())
        }
    }

    /// Whether `probe_words` is exhaustive over the requested word set.
    fn probe_exhaustive(&self) -> bool {
        true
    }
}

/// Positive-probability words of a given length, grown newest-first:
/// `P((a, w)) = P(w) · cond(w)[a]`.
pub fn positive_words<S: Value, M: Process<S> + ?Sized>(
    model: &M,
    len: usize,
) -> Result<Vec<Word>> {
    let mut current = alloc::vec![Word::empty()];
    for _ in 0..len {
        let mut next = Vec::new();
        for w in &current {
            let d = model.cond(w)?;
            for (a, m) in d.mass().iter().enumerate() {
                if *m > S::zero() {
                    next.push(w.extend_newer(a as u16));
                }
            }
        }
        current = next;
    }
    Ok(current)
}

/// Finite-order Markov chain specified by its transition rows, together
/// with the derived invariant word measure and exact variations.
#[derive(Debug, Clone)]
pub struct MarkovModel<S: Value> {
    alphabet: Alphabet,
    order: usize,
    rows: BTreeMap<Word, Distribution<S>>,
    /// Invariant measures at depths `0..=order`.
    depth_measures: Vec<StationaryWordMeasure<S>>,
    /// Exact variations `var(0), ..., var(order-1)`.
    variations: Vec<S>,
    dominating: Option<Vec<S>>,
}

impl<S: Value> MarkovModel<S> {
    /// Builds the model and solves for its invariant measure. `rows` must
    /// cover every word of length `order`; each row must be a distribution.
    pub fn new(
        alphabet: Alphabet,
        order: usize,
        rows: BTreeMap<Word, Distribution<S>>,
    ) -> Result<Self> {
        let size = alphabet.size();
        let mut expected = 1usize;
        for _ in 0..order {
            expected = expected.saturating_mul(size);
        }
        if rows.len() != expected {
            return Err(Error::Unsupported(alloc::format!(
                "expected {expected} transition rows, got {}",
                rows.len()
            )));
        }
        for (w, d) in &rows {
            if w.len() != order || d.size() != size {
                return Err(Error::AlphabetMismatch);
            }
        }

        let stationary = solve_stationary(&alphabet, order, &rows)?;
        let mut depth_measures = Vec::with_capacity(order + 1);
        depth_measures.push(stationary);
        while depth_measures.last().unwrap().depth() > 0 {
            let top = depth_measures.last().unwrap();
            let mut mass: BTreeMap<Word, S> = BTreeMap::new();
            for (w, m) in top.support() {
                let key = w.drop_oldest();
                let e = mass.entry(key).or_insert_with(S::zero);
                *e = e.clone() + m.clone();
            }
            let d = top.depth() - 1;
            depth_measures.push(StationaryWordMeasure::new(alphabet.clone(), d, mass)?);
        }
        depth_measures.reverse(); // index = depth

        let variations = exact_variations(&alphabet, order, &rows);

        Ok(MarkovModel {
            alphabet,
            order,
            rows,
            depth_measures,
            variations,
            dominating: None,
        })
    }

    /// Memoryless model: every past yields `dist`.
    pub fn iid(alphabet: Alphabet, dist: Distribution<S>) -> Result<Self> {
        let mut rows = BTreeMap::new();
        rows.insert(Word::empty(), dist);
        MarkovModel::new(alphabet, 0, rows)
    }

    pub fn with_dominating(mut self, mu: Vec<S>) -> Self {
        self.dominating = Some(mu);
        self
    }

    pub fn order_m(&self) -> usize {
        self.order
    }

    pub fn rows(&self) -> &BTreeMap<Word, Distribution<S>> {
        &self.rows
    }

    /// Invariant measure at depth `d ≤ order`.
    pub fn invariant(&self, d: usize) -> &StationaryWordMeasure<S> {
        &self.depth_measures[d]
    }

    /// Invariant measure on words of any depth, grown by the chain rule.
    pub fn invariant_at(&self, depth: usize) -> Result<StationaryWordMeasure<S>> {
        if depth <= self.order {
            return Ok(self.depth_measures[depth].clone());
        }
        let mut mu = self.depth_measures[self.order].clone();
        while mu.depth() < depth {
            // Grow the newer side: P(a·w) = P(w) · cond(w)[a].
            let mut mass: BTreeMap<Word, S> = BTreeMap::new();
            for (w, m) in mu.support() {
                let d = self.cond(w)?;
                for (a, p) in d.mass().iter().enumerate() {
                    if p.is_zero() {
                        continue;
                    }
                    mass.insert(w.extend_newer(a as u16), m.clone() * p.clone());
                }
            }
            mu = StationaryWordMeasure::new(self.alphabet.clone(), mu.depth() + 1, mass)?;
        }
        Ok(mu)
    }
}

impl<S: Value> Process<S> for MarkovModel<S> {
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn cond(&self, w: &Word) -> Result<Distribution<S>> {
        if w.len() >= self.order {
            return Ok(self.rows[&w.prefix(self.order)].clone());
        }
        // Below the order: condition the invariant measure.
        let d = w.len();
        let base = self.depth_measures[d].prob(w);
        if base.is_zero() {
            return Err(Error::ZeroProbabilityPast { word: w.clone() });
        }
        let top = &self.depth_measures[d + 1];
        let mass = (0..self.alphabet.size())
            .map(|a| top.prob(&w.extend_newer(a as u16)) / base.clone())
            .collect();
        Distribution::new(mass, &S::default_tolerance())
    }

    fn var_bound(&self, n: usize) -> S {
        if n >= self.order {
            S::zero()
        } else {
            self.variations[n].clone()
        }
    }

    fn var_bound_is_exact(&self) -> bool {
        true
    }

    fn order(&self) -> Option<usize> {
        Some(self.order)
    }

    fn dominating(&self) -> Option<Vec<S>> {
        self.dominating.clone()
    }
}

/// Exact `var(k)` for `k < order`: group transition rows by their `k` most
/// recent symbols and take the per-symbol spread within each group.
fn exact_variations<S: Value>(
    alphabet: &Alphabet,
    order: usize,
    rows: &BTreeMap<Word, Distribution<S>>,
) -> Vec<S> {
    let size = alphabet.size();
    let mut out = Vec::with_capacity(order);
    for k in 0..order {
        let mut groups: BTreeMap<Word, (Vec<S>, Vec<S>)> = BTreeMap::new();
        for (w, d) in rows {
            let g = w.prefix(k);
            let entry = groups
                .entry(g)
                .or_insert_with(|| (d.mass().to_vec(), d.mass().to_vec()));
            for a in 0..size {
                let v = d.get(a);
                if *v > entry.0[a] {
                    entry.0[a] = v.clone();
                }
                if *v < entry.1[a] {
                    entry.1[a] = v.clone();
                }
            }
        }
        let mut sup = S::zero();
        for (_, (max, min)) in groups {
            for a in 0..size {
                let d = max[a].clone() - min[a].clone();
                if d > sup {
                    sup = d;
                }
            }
        }
        out.push(sup);
    }
    out
}

/// Estimate of the k-th variation.
#[derive(Debug, Clone)]
pub struct VariationEstimate<S: Value> {
    /// Measured supremum (a lower estimate unless `exact`).
    pub value: S,
    /// Whether the measured value is the true variation.
    pub exact: bool,
    /// The model's declared upper bound at this `k`.
    pub declared_bound: S,
}

/// The k-th variation: supremum over symbols and pairs of pasts agreeing on
/// their `k` most recent symbols of the conditional-probability difference.
///
/// Exact for finite-order models once `depth ≥ order`; otherwise a lower
/// estimate measured over the model's probe words at `depth`.
pub fn variation<S: Value, M: Process<S> + ?Sized>(
    model: &M,
    k: usize,
    depth: usize,
) -> Result<VariationEstimate<S>> {
    if depth < k {
        return Err(Error::DepthBelowAgreement { depth, agree: k });
    }
    let declared = model.var_bound(k);
    if let Some(m) = model.order() {
        if k >= m {
            return Ok(VariationEstimate {
                value: S::zero(),
                exact: true,
                declared_bound: declared,
            });
        }
    }
    // Words deeper than the order add nothing for finite-order models.
    let scan_depth = match model.order() {
        Some(m) if depth >= m => m,
        _ => depth,
    };
    let exact = model.order().map_or(false, |m| depth >= m) && model.probe_exhaustive();
    let positive_only = model.order().is_none();
    let words = model.probe_words(scan_depth, positive_only)?;
    let size = model.alphabet().size();

    let mut groups: BTreeMap<Word, (Vec<S>, Vec<S>)> = BTreeMap::new();
    for w in &words {
        let d = model.cond(w)?;
        let g = w.prefix(k);
        let entry = groups
            .entry(g)
            .or_insert_with(|| (d.mass().to_vec(), d.mass().to_vec()));
        for a in 0..size {
            let v = d.get(a);
            if *v > entry.0[a] {
                entry.0[a] = v.clone();
            }
            if *v < entry.1[a] {
                entry.1[a] = v.clone();
            }
        }
    }
    let mut sup = S::zero();
    for (_, (max, min)) in groups {
        for a in 0..size {
            let diff = max[a].clone() - min[a].clone();
            if diff > sup {
                sup = diff;
            }
        }
    }
    Ok(VariationEstimate {
        value: sup,
        exact,
        declared_bound: declared,
    })
}

/// Estimate of Berbee's n-th ratio coefficient `r_n`.
#[derive(Debug, Clone)]
pub struct RatioEstimate<S: Value> {
    /// Supremum of conditional-probability ratios over pasts agreeing on
    /// the `n` most recent symbols (`≥ 1`); `None` when a positive/zero
    /// ratio occurred (`r_n = +∞`).
    pub sup_ratio: Option<S>,
    pub exact: bool,
}

impl<S: Value> RatioEstimate<S> {
    /// `r_n = log(sup ratio)`, `+∞` when flagged infinite.
    pub fn log_value(&self) -> f64 {
        match &self.sup_ratio {
            Some(r) => crate::value::ln_f64(r.to_f64()),
            None => f64::INFINITY,
        }
    }

    pub fn is_infinite(&self) -> bool {
        self.sup_ratio.is_none()
    }

    /// Multiplicative deviation `exp(r_n) − 1 = sup_ratio − 1`.
    pub fn deviation(&self) -> Option<S> {
        self.sup_ratio.as_ref().map(|r| r.clone() - S::one())
    }
}

/// Berbee's n-th coefficient: the log-supremum over a symbol and ordered
/// pairs of pasts agreeing on the `n` most recent symbols of the ratio of
/// conditional probabilities, with the convention `0/0 = 1`.
pub fn ratio_coeff<S: Value, M: Process<S> + ?Sized>(
    model: &M,
    n: usize,
    depth: usize,
) -> Result<RatioEstimate<S>> {
    if depth < n {
        return Err(Error::DepthBelowAgreement { depth, agree: n });
    }
    if let Some(m) = model.order() {
        if n >= m {
            return Ok(RatioEstimate {
                sup_ratio: Some(S::one()),
                exact: true,
            });
        }
    }
    let scan_depth = match model.order() {
        Some(m) if depth >= m => m,
        _ => depth,
    };
    let exact = model.order().map_or(false, |m| depth >= m) && model.probe_exhaustive();
    let positive_only = model.order().is_none();
    let words = model.probe_words(scan_depth, positive_only)?;
    let size = model.alphabet().size();

    // Per group and symbol: max/min over positive entries plus a flag for
    // a zero alongside a positive entry.
    let mut groups: BTreeMap<Word, Vec<(Option<S>, Option<S>, bool)>> = BTreeMap::new();
    for w in &words {
        let d = model.cond(w)?;
        let g = w.prefix(n);
        let entry = groups
            .entry(g)
            .or_insert_with(|| alloc::vec![(None, None, false); size]);
        for a in 0..size {
            let v = d.get(a);
            let slot = &mut entry[a];
            if v.is_zero() {
                slot.2 = true;
            } else {
                if slot.0.as_ref().map_or(true, |m| v > m) {
                    slot.0 = Some(v.clone());
                }
                if slot.1.as_ref().map_or(true, |m| v < m) {
                    slot.1 = Some(v.clone());
                }
            }
        }
    }
    let mut sup = S::one();
    for (_, symbols) in groups {
        for (max, min, saw_zero) in symbols {
            match (max, min, saw_zero) {
                (Some(_), _, true) => {
                    // positive against zero at the same symbol
                    return Ok(RatioEstimate {
                        sup_ratio: None,
                        exact,
                    });
                }
                (Some(max), Some(min), false) => {
                    let r = max / min;
                    if r > sup {
                        sup = r;
                    }
                }
                _ => {} // all-zero symbol: 0/0 = 1 by convention
            }
        }
    }
    Ok(RatioEstimate {
        sup_ratio: Some(sup),
        exact,
    })
}

/// Invariant measure of an order-`m` chain on its positive-recurrent class.
///
/// The transition digraph on `A^m` is analysed first: exactly one closed
/// communicating class must exist, otherwise the invariant measure is not
/// unique and a multiplicity error is raised. Exact backends solve the
/// linear system by Gaussian elimination; the float backend runs a smoothed
/// power iteration on the sparse chain.
pub fn solve_stationary<S: Value>(
    alphabet: &Alphabet,
    order: usize,
    rows: &BTreeMap<Word, Distribution<S>>,
) -> Result<StationaryWordMeasure<S>> {
    if order == 0 {
        let mut mass = BTreeMap::new();
        mass.insert(Word::empty(), S::one());
        return StationaryWordMeasure::new(alphabet.clone(), 0, mass);
    }
    let states: Vec<Word> = rows.keys().cloned().collect();
    let index: BTreeMap<&Word, usize> = states.iter().zip(0..).collect();
    let n = states.len();

    // Successor lists: state w --(prob rows[w][a])--> (a, w) minus oldest.
    let mut succ: Vec<Vec<(usize, S)>> = Vec::with_capacity(n);
    for w in &states {
        let d = &rows[w];
        let mut out = Vec::new();
        for (a, p) in d.mass().iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            let next = w.drop_oldest().extend_newer(a as u16);
            out.push((index[&next], p.clone()));
        }
        succ.push(out);
    }

    let class = unique_closed_class(&succ)?;
    let member: Vec<usize> = (0..n).filter(|i| class[*i]).collect();
    let pos: BTreeMap<usize, usize> = member.iter().cloned().zip(0..).collect();
    let c = member.len();

    let pi = if S::EXACT {
        // (πP − π)_j = 0 for j < c−1 plus Σπ = 1, solved exactly.
        let mut a = alloc::vec![alloc::vec![S::zero(); c + 1]; c];
        for (col, &i) in member.iter().enumerate() {
            for (j, p) in &succ[i] {
                if let Some(&row) = pos.get(j) {
                    a[row][col] = a[row][col].clone() + p.clone();
                }
            }
        }
        for (i, row) in a.iter_mut().enumerate().take(c) {
            row[i] = row[i].clone() - S::one();
        }
        for v in a[c - 1].iter_mut().take(c) {
            *v = S::one();
        }
        a[c - 1][c] = S::one();
        gaussian_solve(a)?
    } else {
        power_iteration(&succ, &member, &pos)
    };

    let mut mass = BTreeMap::new();
    for (k, &i) in member.iter().enumerate() {
        let v = pi[k].clone();
        if v < S::zero() {
            // Exact solves return exact nonnegative values on the closed
            // class; floats may carry sub-tolerance negatives.
            if v.abs() > S::default_tolerance() {
                return Err(Error::NotIrreducible);
            }
            continue;
        }
        if !v.is_zero() {
            mass.insert(states[i].clone(), v);
        }
    }
    StationaryWordMeasure::new(alphabet.clone(), order, mass)
}

/// Exactly one closed communicating class must exist; returns membership.
fn unique_closed_class<S: Value>(succ: &[Vec<(usize, S)>]) -> Result<Vec<bool>> {
    let n = succ.len();
    // Kosaraju: order by finish time, then assign components on the
    // transposed graph. Both passes are iterative.
    let mut visited = alloc::vec![false; n];
    let mut finish: Vec<usize> = Vec::with_capacity(n);
    for start in 0..n {
        if visited[start] {
            continue;
        }
        let mut stack = alloc::vec![(start, 0usize)];
        visited[start] = true;
        while let Some(&mut (v, ref mut i)) = stack.last_mut() {
            if *i < succ[v].len() {
                let w = succ[v][*i].0;
                *i += 1;
                if !visited[w] {
                    visited[w] = true;
                    stack.push((w, 0));
                }
            } else {
                finish.push(v);
                stack.pop();
            }
        }
    }
    let mut rev: Vec<Vec<usize>> = alloc::vec![Vec::new(); n];
    for (v, out) in succ.iter().enumerate() {
        for (w, _) in out {
            rev[*w].push(v);
        }
    }
    let mut comp = alloc::vec![usize::MAX; n];
    let mut ncomp = 0usize;
    for &start in finish.iter().rev() {
        if comp[start] != usize::MAX {
            continue;
        }
        let mut stack = alloc::vec![start];
        comp[start] = ncomp;
        while let Some(v) = stack.pop() {
            for &w in &rev[v] {
                if comp[w] == usize::MAX {
                    comp[w] = ncomp;
                    stack.push(w);
                }
            }
        }
        ncomp += 1;
    }
    // A component is closed if no edge leaves it.
    let mut closed = alloc::vec![true; ncomp];
    for (v, out) in succ.iter().enumerate() {
        for (w, _) in out {
            if comp[v] != comp[*w] {
                closed[comp[v]] = false;
            }
        }
    }
    let closed_count = closed.iter().filter(|c| **c).count();
    if closed_count != 1 {
        return Err(Error::NotIrreducible);
    }
    let target = closed.iter().position(|c| *c).unwrap();
    Ok((0..n).map(|v| comp[v] == target).collect())
}

/// Gaussian elimination with partial pivoting on an augmented `c×(c+1)`
/// system.
fn gaussian_solve<S: Value>(mut a: Vec<Vec<S>>) -> Result<Vec<S>> {
    let c = a.len();
    for col in 0..c {
        let pivot = (col..c)
            .max_by(|&i, &j| {
                a[i][col]
                    .abs()
                    .partial_cmp(&a[j][col].abs())
                    .unwrap_or(core::cmp::Ordering::Equal)
            })
            .unwrap();
        if a[pivot][col].is_zero() {
            return Err(Error::NotIrreducible);
        }
        a.swap(col, pivot);
        let d = a[col][col].clone();
        for v in a[col].iter_mut() {
            *v = v.clone() / d.clone();
        }
        for row in 0..c {
            if row == col || a[row][col].is_zero() {
                continue;
            }
            let f = a[row][col].clone();
            for k in col..=c {
                let sub = f.clone() * a[col][k].clone();
                a[row][k] = a[row][k].clone() - sub;
            }
        }
    }
    Ok(a.into_iter().map(|row| row[row.len() - 1].clone()).collect())
}

/// Smoothed power iteration `π ← π(P+I)/2` until the ℓ¹ step falls below
/// machine-level tolerance; only used by the float backend.
fn power_iteration<S: Value>(
    succ: &[Vec<(usize, S)>],
    member: &[usize],
    pos: &BTreeMap<usize, usize>,
) -> Vec<S> {
    let c = member.len();
    let mut pi = alloc::vec![1.0f64 / c as f64; c];
    let mut next = alloc::vec![0.0f64; c];
    for _ in 0..200_000 {
        for v in next.iter_mut() {
            *v = 0.0;
        }
        for (k, &i) in member.iter().enumerate() {
            let w = pi[k] * 0.5;
            next[k] += w;
            for (j, p) in &succ[i] {
                if let Some(&jj) = pos.get(j) {
                    next[jj] += w * p.to_f64();
                }
            }
        }
        let total: f64 = next.iter().sum();
        let mut step = 0.0f64;
        for k in 0..c {
            next[k] /= total;
            step += (next[k] - pi[k]).abs();
        }
        core::mem::swap(&mut pi, &mut next);
        if step < 1e-15 {
            break;
        }
    }
    pi.into_iter().map(S::from_f64_lossy).collect()
}
