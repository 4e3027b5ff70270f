//! The random-walk-with-bins oracle: a uniform martingale that is not a
//! random Markov process.
//!
//! States are pairs `(B, Y)` where `B` runs a biased ±1 walk on the bins
//! (up ⅓, down ⅔, reflecting at 1) and `Y ∈ [1, B+1]` marks a position in
//! the current bin. Positions are independent uniform except for one
//! long-range exclusion: whenever `B₀ = B₋₂ₖ = k`, the new position must
//! differ from the one chosen `2k` steps ago.
//!
//! The measure is built by the recursive coupling on cylinder windows: a
//! window of length `2k+1` whose two end bins both equal `k` triggers the
//! exclusion; every other window couples its endpoints conditionally
//! independently given the interior. Evaluating the recursion on single
//! atoms only needs the measures of contiguous subwindows, which keeps a
//! conditional query at depth `n` at `O(n²)` arithmetic.
//!
//! The oracle is bounded: bins are capped at `max_depth + 2` (the walk is
//! renormalised at the cap) and conditionals answer up to `max_depth`.
//! Probe words are the walk paths with all positions equal to 1 inside a
//! window of bins growing with the probe depth — the witness family of the
//! non-representability argument — so suprema and infima taken over them
//! are estimates, flagged as such.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::measure::Distribution;
use crate::model::Process;
use crate::value::Value;
use crate::words::{Alphabet, Word};

#[derive(Debug, Clone)]
pub struct RwBins<S: Value> {
    alphabet: Alphabet,
    max_depth: usize,
    /// Bin cap; the walk turns around here.
    cap: usize,
    /// `symbol index -> (bin, position)`, both 1-based.
    pairs: Vec<(usize, usize)>,
    /// Truncated walk stationary law over bins 1..=cap.
    walk_pi: Vec<S>,
    /// Mass of the untruncated walk retained by the bin cap.
    retained_mass: S,
}

impl<S: Value> RwBins<S> {
    pub fn new(max_depth: usize) -> Result<Self> {
        if max_depth < 2 {
            return Err(Error::TruncationTooSmall {
                name: String::from("rwbins"),
                minimum: 2,
            });
        }
        let cap = max_depth + 2;
        let mut labels = Vec::new();
        let mut pairs = Vec::new();
        for b in 1..=cap {
            for y in 1..=(b + 1) {
                labels.push(alloc::format!("{b}:{y}"));
                pairs.push((b, y));
            }
        }
        let alphabet = Alphabet::new(labels)?;

        // Birth–death balance: π(b+1)·down(b+1) = π(b)·up(b); the cap's
        // self-loop never crosses a cut, so down is ⅔ throughout.
        let mut pi = alloc::vec![S::one()];
        for b in 1..cap {
            let up = if b == 1 { S::one() } else { S::ratio(1, 3) };
            let down = S::ratio(2, 3);
            let prev = pi.last().unwrap().clone();
            pi.push(prev * up / down);
        }
        let total = pi.iter().fold(S::zero(), |a, b| a + b.clone());
        let walk_pi: Vec<S> = pi.into_iter().map(|p| p / total.clone()).collect();

        // Untruncated: π(1) = ¼, π(i) = 3·2^{-(i+1)} for i ≥ 2.
        let mut retained = S::ratio(1, 4);
        for i in 2..=cap {
            retained = retained + S::ratio(3, 1) * S::pow2_neg((i + 1) as u32);
        }

        Ok(RwBins {
            alphabet,
            max_depth,
            cap,
            pairs,
            walk_pi,
            retained_mass: retained,
        })
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn bin_cap(&self) -> usize {
        self.cap
    }

    pub fn retained_mass(&self) -> S {
        self.retained_mass.clone()
    }

    pub fn symbol_index(&self, bin: usize, pos: usize) -> u16 {
        // offset of bin b is Σ_{b'<b} (b'+1)
        let off = (bin - 1) * (bin + 2) / 2;
        (off + pos - 1) as u16
    }

    pub fn pair_of(&self, sym: u16) -> (usize, usize) {
        self.pairs[sym as usize]
    }

    /// Forward walk kernel `P(next | current)`. The cap turns the cut
    /// up-move into a self-loop, which keeps detailed balance and hence
    /// the interior invariant ratios exactly as in the untruncated walk.
    fn walk(&self, next: usize, current: usize) -> S {
        if current == 1 {
            if next == 2 {
                S::one()
            } else {
                S::zero()
            }
        } else if current == self.cap {
            if next == self.cap - 1 {
                S::ratio(2, 3)
            } else if next == self.cap {
                S::ratio(1, 3)
            } else {
                S::zero()
            }
        } else if next == current + 1 {
            S::ratio(1, 3)
        } else if next == current - 1 {
            S::ratio(2, 3)
        } else {
            S::zero()
        }
    }

    /// Backward walk conditional `P(previous | current)` under π.
    fn walk_rev(&self, previous: usize, current: usize) -> S {
        self.walk_pi[previous - 1].clone() * self.walk(current, previous)
            / self.walk_pi[current - 1].clone()
    }

    /// Measure of the atom window `atoms[start..end]` (oldest first).
    ///
    /// Windows touching `split_end` are cached in `overlay` so a caller
    /// varying only the atom at `split_end − 1` can reuse `memo`.
    fn mu(
        &self,
        atoms: &[(usize, usize)],
        start: usize,
        end: usize,
        memo: &mut Memo<S>,
    ) -> S {
        if let Some(v) = memo.get(start, end) {
            return v;
        }
        let v = self.mu_uncached(atoms, start, end, memo);
        memo.insert(start, end, v.clone());
        v
    }

    fn mu_uncached(
        &self,
        atoms: &[(usize, usize)],
        start: usize,
        end: usize,
        memo: &mut Memo<S>,
    ) -> S {
        let len = end - start;
        let (b1, y1) = atoms[start];
        match len {
            1 => self.walk_pi[b1 - 1].clone() / S::from_usize(b1 + 1),
            2 => {
                let (b2, y2) = atoms[start + 1];
                let _ = (y1, y2);
                self.walk_pi[b1 - 1].clone() * self.walk(b2, b1)
                    / S::from_usize(b1 + 1)
                    / S::from_usize(b2 + 1)
            }
            _ => {
                let (bl, yl) = atoms[end - 1];
                if len % 2 == 1 {
                    let k = (len - 1) / 2;
                    if b1 == k && bl == k {
                        // Exclusion window: end bins both equal k.
                        if y1 == yl {
                            return S::zero();
                        }
                        let mid = self.mu(atoms, start + 1, end - 1, memo);
                        let (b2, _) = atoms[start + 1];
                        let (bp, _) = atoms[end - 2];
                        return self.walk_rev(b1, b2)
                            * mid
                            * self.walk(bl, bp)
                            / S::from_usize(k * k + k);
                    }
                }
                // Generic coupling: µ(window) = µ(head)·µ(tail)/µ(interior).
                let interior = self.mu(atoms, start + 1, end - 1, memo);
                if interior.is_zero() {
                    return S::zero();
                }
                let head = self.mu(atoms, start, end - 1, memo);
                let tail = self.mu(atoms, start + 1, end, memo);
                head * tail / interior
            }
        }
    }

    /// Window probability of a past word (most-recent-first).
    pub fn word_prob(&self, w: &Word) -> S {
        if w.is_empty() {
            return S::one();
        }
        let atoms: Vec<(usize, usize)> = w
            .symbols()
            .iter()
            .rev()
            .map(|&s| self.pair_of(s))
            .collect();
        let mut memo = Memo::new(atoms.len());
        self.mu(&atoms, 0, atoms.len(), &mut memo)
    }
}

/// Two-tier window cache over `(start, end)` windows: entries ending at
/// `split_end` go to a small per-candidate overlay keyed by `start`,
/// everything else to the shared base.
struct Memo<S> {
    base: Vec<Option<S>>,
    overlay: Vec<Option<S>>,
    split_end: usize,
    stride: usize,
}

impl<S: Clone> Memo<S> {
    fn new(len: usize) -> Self {
        Memo {
            base: alloc::vec![None; (len + 1) * (len + 1)],
            overlay: Vec::new(),
            split_end: usize::MAX,
            stride: len + 1,
        }
    }

    fn with_split(len: usize, split_end: usize) -> Self {
        Memo {
            base: alloc::vec![None; (len + 1) * (len + 1)],
            overlay: alloc::vec![None; len + 1],
            split_end,
            stride: len + 1,
        }
    }

    fn clear_overlay(&mut self) {
        for v in self.overlay.iter_mut() {
            *v = None;
        }
    }

    fn get(&self, start: usize, end: usize) -> Option<S> {
        if end == self.split_end {
            self.overlay[start].clone()
        } else {
            self.base[start * self.stride + end].clone()
        }
    }

    fn insert(&mut self, start: usize, end: usize, v: S) {
        if end == self.split_end {
            self.overlay[start] = Some(v);
        } else {
            self.base[start * self.stride + end] = Some(v);
        }
    }
}

impl<S: Value> Process<S> for RwBins<S> {
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn cond(&self, w: &Word) -> Result<Distribution<S>> {
        if w.len() > self.max_depth {
            return Err(Error::Unsupported(alloc::format!(
                "rwbins oracle answers depths up to {}, got {}",
                self.max_depth,
                w.len()
            )));
        }
        let n = w.len();
        let mut atoms: Vec<(usize, usize)> = w
            .symbols()
            .iter()
            .rev()
            .map(|&s| self.pair_of(s))
            .collect();
        atoms.push((1, 1)); // placeholder for the candidate
        let mut memo = Memo::with_split(n + 1, n + 1);

        let base = if n == 0 {
            S::one()
        } else {
            self.mu(&atoms, 0, n, &mut memo)
        };
        if base.is_zero() {
            return Err(Error::ZeroProbabilityPast { word: w.clone() });
        }

        let mut mass = alloc::vec![S::zero(); self.alphabet.size()];
        for sym in 0..self.alphabet.size() {
            let (b, y) = self.pairs[sym];
            // The new bin must be one walk step from the most recent bin.
            if n > 0 {
                let recent = atoms[n - 1].0;
                if self.walk(b, recent).is_zero() {
                    continue;
                }
            }
            atoms[n] = (b, y);
            // Windows not touching the candidate are shared; windows ending
            // at it are recomputed per candidate.
            memo.clear_overlay();
            let joint = self.mu(&atoms, 0, n + 1, &mut memo);
            mass[sym] = joint / base.clone();
        }
        Distribution::new(mass, &S::default_tolerance())
    }

    fn var_bound(&self, n: usize) -> S {
        if n == 0 {
            S::one()
        } else {
            let b = S::ratio(2, 1) / S::from_usize(n);
            if b > S::one() {
                S::one()
            } else {
                b
            }
        }
    }

    fn max_depth(&self) -> Option<usize> {
        Some(self.max_depth)
    }

    fn var_sum(&self) -> Option<S> {
        None // Σ 2/n diverges
    }

    /// Walk paths inside the depth-scaled bin window `[1, len+2]` with all
    /// positions equal to 1 and positive window measure: the witness family
    /// of the non-representability argument.
    fn probe_words(&self, len: usize, _positive_only: bool) -> Result<Vec<Word>> {
        let window = core::cmp::min(self.cap, len + 2);
        let mut paths: Vec<Vec<usize>> = (1..=window).map(|b| alloc::vec![b]).collect();
        while paths.first().map_or(false, |p| p.len() < len) {
            let mut next = Vec::new();
            for p in &paths {
                let newest_existing = *p.last().unwrap();
                // Extend towards the past: the older bin must step to it.
                for older in 1..=window {
                    if !self.walk(newest_existing, older).is_zero() {
                        let mut q = p.clone();
                        q.push(older);
                        next.push(q);
                    }
                }
            }
            paths = next;
        }
        let mut out = Vec::new();
        for p in paths {
            let w = Word::from_symbols(
                p.iter().map(|&b| self.symbol_index(b, 1)).collect(),
            );
            if !self.word_prob(&w).is_zero() {
                out.push(w);
            }
        }
        Ok(out)
    }

    fn probe_exhaustive(&self) -> bool {
        false
    }
}
