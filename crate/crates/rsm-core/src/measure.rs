//! Distributions, sub-measures and stationary word measures.
//!
//! The recursive construction used throughout extends a stationary measure
//! on length-`n` words to length `n+1`: for every middle word `a` of length
//! `n-1`, couple the conditional law of the newer extension with the
//! conditional law of the older extension. Any coupling works, and a
//! different one may be used for every middle word, so couplings are
//! first-class values here ([`Coupling`]).

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::value::Value;
use crate::words::{Alphabet, Word};

/// Probability distribution on an alphabet, indexed by symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution<S: Value> {
    mass: Vec<S>,
}

impl<S: Value> Distribution<S> {
    /// Validates nonnegativity and total 1 (within `tol`).
    pub fn new(mass: Vec<S>, tol: &S) -> Result<Self> {
        let mut total = S::zero();
        for (i, m) in mass.iter().enumerate() {
            if *m < S::zero() {
                return Err(Error::NegativeMass { index: i });
            }
            total = total + m.clone();
        }
        if (total.clone() - S::one()).abs() > *tol {
            return Err(Error::TotalNotOne {
                total: total.render(),
            });
        }
        Ok(Distribution { mass })
    }

    /// Point mass on one symbol.
    pub fn point(size: usize, sym: usize) -> Self {
        let mut mass = alloc::vec![S::zero(); size];
        mass[sym] = S::one();
        Distribution { mass }
    }

    /// Uniform distribution.
    pub fn uniform(size: usize) -> Self {
        let w = S::one() / S::from_usize(size);
        Distribution {
            mass: alloc::vec![w; size],
        }
    }

    pub fn size(&self) -> usize {
        self.mass.len()
    }

    pub fn mass(&self) -> &[S] {
        &self.mass
    }

    pub fn get(&self, sym: usize) -> &S {
        &self.mass[sym]
    }

    /// Largest entry and its lowest-index maximiser.
    pub fn argmax(&self) -> (usize, &S) {
        let mut best = 0usize;
        for i in 1..self.mass.len() {
            if self.mass[i] > self.mass[best] {
                best = i;
            }
        }
        (best, &self.mass[best])
    }

    pub fn into_mass(self) -> Vec<S> {
        self.mass
    }
}

/// Nonnegative measure with total at most 1 (a leftover after subtracting
/// table levels from a conditional law).
#[derive(Debug, Clone, PartialEq)]
pub struct SubMeasure<S: Value> {
    mass: Vec<S>,
}

impl<S: Value> SubMeasure<S> {
    pub fn new(mass: Vec<S>, tol: &S) -> Result<Self> {
        let mut total = S::zero();
        for (i, m) in mass.iter().enumerate() {
            if *m < -tol.clone() {
                return Err(Error::NegativeMass { index: i });
            }
            total = total + m.clone();
        }
        if total.clone() - S::one() > *tol {
            return Err(Error::TotalAboveOne {
                total: total.render(),
            });
        }
        Ok(SubMeasure { mass })
    }

    pub fn from_distribution(d: Distribution<S>) -> Self {
        SubMeasure { mass: d.mass }
    }

    pub fn mass(&self) -> &[S] {
        &self.mass
    }

    pub fn get(&self, sym: usize) -> &S {
        &self.mass[sym]
    }

    pub fn total(&self) -> S {
        self.mass
            .iter()
            .fold(S::zero(), |acc, m| acc + m.clone())
    }

    /// Largest entry and its lowest-index maximiser.
    pub fn argmax(&self) -> (usize, &S) {
        let mut best = 0usize;
        for i in 1..self.mass.len() {
            if self.mass[i] > self.mass[best] {
                best = i;
            }
        }
        (best, &self.mass[best])
    }
}

/// Total variation distance `½ Σ_a |d1[a] − d2[a]|`.
pub fn tv_distance<S: Value>(d1: &Distribution<S>, d2: &Distribution<S>) -> Result<S> {
    if d1.size() != d2.size() {
        return Err(Error::AlphabetMismatch);
    }
    let mut acc = S::zero();
    for (a, b) in d1.mass.iter().zip(d2.mass.iter()) {
        acc = acc + (a.clone() - b.clone()).abs();
    }
    Ok(acc * S::ratio(1, 2))
}

/// Stationary probability measure on words of a fixed length, stored
/// sparsely (absent words carry zero mass).
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryWordMeasure<S: Value> {
    alphabet: Alphabet,
    depth: usize,
    mass: BTreeMap<Word, S>,
}

impl<S: Value> StationaryWordMeasure<S> {
    /// Builds without the stationarity check (use [`check_stationary`]
    /// afterwards when the source is untrusted). Zero entries are dropped.
    pub fn new(alphabet: Alphabet, depth: usize, mass: BTreeMap<Word, S>) -> Result<Self> {
        let mut total = S::zero();
        for (w, m) in &mass {
            if w.len() != depth {
                return Err(Error::WordTooShort {
                    needed: depth,
                    got: w.len(),
                });
            }
            for &s in w.symbols() {
                alphabet.check_symbol(s as usize)?;
            }
            if *m < S::zero() {
                return Err(Error::NegativeMass { index: 0 });
            }
            total = total + m.clone();
        }
        if (total.clone() - S::one()).abs() > S::default_tolerance() {
            return Err(Error::TotalNotOne {
                total: total.render(),
            });
        }
        let mass = mass.into_iter().filter(|(_, m)| !m.is_zero()).collect();
        Ok(StationaryWordMeasure {
            alphabet,
            depth,
            mass,
        })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn prob(&self, w: &Word) -> S {
        self.mass.get(w).cloned().unwrap_or_else(S::zero)
    }

    pub fn support(&self) -> impl Iterator<Item = (&Word, &S)> {
        self.mass.iter()
    }

    pub fn support_len(&self) -> usize {
        self.mass.len()
    }

    /// Marginal on the `depth-1` most recent symbols (drop the oldest).
    pub fn newer_marginal(&self) -> BTreeMap<Word, S> {
        let mut out: BTreeMap<Word, S> = BTreeMap::new();
        for (w, m) in &self.mass {
            let key = w.drop_oldest();
            let e = out.entry(key).or_insert_with(S::zero);
            *e = e.clone() + m.clone();
        }
        out
    }

    /// Marginal on the `depth-1` oldest symbols (drop the newest).
    pub fn older_marginal(&self) -> BTreeMap<Word, S> {
        let mut out: BTreeMap<Word, S> = BTreeMap::new();
        for (w, m) in &self.mass {
            let key = w.drop_newest();
            let e = out.entry(key).or_insert_with(S::zero);
            *e = e.clone() + m.clone();
        }
        out
    }
}

/// Report from [`check_stationary`].
#[derive(Debug, Clone)]
pub struct StationarityReport<S: Value> {
    /// Max absolute discrepancy between the two boundary marginals.
    pub discrepancy: S,
    pub passed: bool,
}

/// Compares the marginal obtained by dropping the newest symbol against
/// the one obtained by dropping the oldest; a stationary measure has both
/// equal to the depth-(n−1) measure.
pub fn check_stationary<S: Value>(
    mu: &StationaryWordMeasure<S>,
    tol: &S,
) -> StationarityReport<S> {
    if mu.depth() == 0 {
        return StationarityReport {
            discrepancy: S::zero(),
            passed: true,
        };
    }
    let newer = mu.newer_marginal();
    let older = mu.older_marginal();
    let mut disc = S::zero();
    for (w, m) in &newer {
        let other = older.get(w).cloned().unwrap_or_else(S::zero);
        let d = (m.clone() - other).abs();
        if d > disc {
            disc = d;
        }
    }
    for (w, m) in &older {
        if !newer.contains_key(w) {
            let d = m.abs();
            if d > disc {
                disc = d;
            }
        }
    }
    let passed = disc <= *tol;
    StationarityReport {
        discrepancy: disc,
        passed,
    }
}

/// Joint law on (newer symbol, older symbol) used by [`extend_stationary`].
#[derive(Debug, Clone)]
pub struct JointLaw<S: Value> {
    /// `mass[x][y]` = probability of newer symbol `x` and older symbol `y`.
    pub mass: Vec<Vec<S>>,
}

impl<S: Value> JointLaw<S> {
    fn newer_marginal(&self) -> Vec<S> {
        self.mass
            .iter()
            .map(|row| row.iter().fold(S::zero(), |a, b| a + b.clone()))
            .collect()
    }

    fn older_marginal(&self, size: usize) -> Vec<S> {
        let mut out = alloc::vec![S::zero(); size];
        for row in &self.mass {
            for (y, m) in row.iter().enumerate() {
                out[y] = out[y].clone() + m.clone();
            }
        }
        out
    }
}

/// Coupling rule: given the middle word and the two conditional laws,
/// produce a joint law with exactly those marginals.
pub enum Coupling<'a, S: Value> {
    /// Product of the two conditionals.
    Independent,
    /// Maximal coupling: puts `min(p,q)` on the diagonal and spreads the
    /// excesses proportionally off-diagonal.
    Maximal,
    /// Caller-supplied rule, e.g. a transition-kernel coupling. Receives
    /// `(middle word, newer conditional, older conditional)`.
    Custom(&'a dyn Fn(&Word, &Distribution<S>, &Distribution<S>) -> JointLaw<S>),
}

fn couple<S: Value>(
    rule: &Coupling<'_, S>,
    middle: &Word,
    newer: &Distribution<S>,
    older: &Distribution<S>,
) -> JointLaw<S> {
    match rule {
        Coupling::Independent => {
            let mass = newer
                .mass()
                .iter()
                .map(|p| older.mass().iter().map(|q| p.clone() * q.clone()).collect())
                .collect();
            JointLaw { mass }
        }
        Coupling::Maximal => {
            let n = newer.size();
            let mut diag = Vec::with_capacity(n);
            let mut excess_new = Vec::with_capacity(n);
            let mut excess_old = Vec::with_capacity(n);
            let mut leftover = S::zero();
            for i in 0..n {
                let p = newer.get(i).clone();
                let q = older.get(i).clone();
                let m = if p < q { p.clone() } else { q.clone() };
                diag.push(m.clone());
                excess_new.push(p - m.clone());
                excess_old.push(q - m.clone());
                leftover = leftover + excess_new[i].clone();
            }
            let mut mass = alloc::vec![alloc::vec![S::zero(); n]; n];
            for (i, d) in diag.iter().enumerate() {
                mass[i][i] = d.clone();
            }
            if !leftover.is_zero() {
                for x in 0..n {
                    for y in 0..n {
                        let add = excess_new[x].clone() * excess_old[y].clone()
                            / leftover.clone();
                        mass[x][y] = mass[x][y].clone() + add;
                    }
                }
            }
            JointLaw { mass }
        }
        Coupling::Custom(f) => f(middle, newer, older),
    }
}

/// Extends a stationary depth-`n` measure to depth `n+1`; both boundary
/// marginals of the result equal the input (exactly in rational mode).
pub fn extend_stationary<S: Value>(
    mu: &StationaryWordMeasure<S>,
    rule: &Coupling<'_, S>,
) -> Result<StationaryWordMeasure<S>> {
    let tol = S::default_tolerance();
    let report = check_stationary(mu, &tol);
    if !report.passed {
        return Err(Error::NotStationary {
            discrepancy: report.discrepancy.render(),
        });
    }
    if mu.depth() == 0 {
        return Err(Error::Unsupported(alloc::string::String::from(
            "cannot extend a depth-0 measure; start from depth 1",
        )));
    }

    let size = mu.alphabet().size();
    // Group the depth-n support by middle (n−1)-word and build the two
    // conditional extension laws for each group.
    let mut middle_mass: BTreeMap<Word, S> = BTreeMap::new();
    for (w, m) in mu.support() {
        let mid = w.drop_newest();
        let e = middle_mass.entry(mid).or_insert_with(S::zero);
        *e = e.clone() + m.clone();
    }

    let mut out: BTreeMap<Word, S> = BTreeMap::new();
    for (mid, total) in &middle_mass {
        if total.is_zero() {
            continue;
        }
        let mut newer_mass = alloc::vec![S::zero(); size];
        let mut older_mass = alloc::vec![S::zero(); size];
        for x in 0..size {
            let w = mid.extend_newer(x as u16);
            newer_mass[x] = mu.prob(&w) / total.clone();
            let w = mid.extend_older(x as u16);
            older_mass[x] = mu.prob(&w) / total.clone();
        }
        let newer = Distribution { mass: newer_mass };
        let older = Distribution { mass: older_mass };
        let joint = couple(rule, mid, &newer, &older);

        // A coupling is only admissible if its marginals are the two
        // conditionals; reject anything else.
        let tol = S::default_tolerance();
        let jn = joint.newer_marginal();
        let jo = joint.older_marginal(size);
        for x in 0..size {
            if (jn[x].clone() - newer.get(x).clone()).abs() > tol
                || (jo[x].clone() - older.get(x).clone()).abs() > tol
            {
                return Err(Error::CouplingMarginalMismatch { word: mid.clone() });
            }
        }

        for x in 0..size {
            for y in 0..size {
                let m = joint.mass[x][y].clone();
                if m.is_zero() {
                    continue;
                }
                let w = mid.extend_newer(x as u16).extend_older(y as u16);
                let e = out.entry(w).or_insert_with(S::zero);
                *e = e.clone() + total.clone() * m;
            }
        }
    }

    StationaryWordMeasure::new(mu.alphabet().clone(), mu.depth() + 1, out)
}
