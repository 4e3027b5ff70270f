//! Worked example processes used as fixtures throughout.
//!
//! Countable-alphabet processes are truncated to finite alphabets; the
//! retained mass of the untruncated object is recorded exactly so tests
//! can undo the renormalisation.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::measure::Distribution;
use crate::model::rwbins::RwBins;
use crate::model::MarkovModel;
use crate::simulate::LookbackSource;
use crate::value::Value;
use crate::words::{Alphabet, Word};

/// A truncation of a countable-alphabet process.
#[derive(Debug, Clone)]
pub struct Truncated<S: Value, M> {
    pub model: M,
    /// Truncation parameter (alphabet cut-off / oracle depth).
    pub truncation: usize,
    /// Mass of the untruncated object retained by the cut, exactly.
    pub retained_mass: S,
}

/// The running two-state chain with rows (0.9, 0.1) and (0.2, 0.8).
pub fn two_state<S: Value>() -> Result<MarkovModel<S>> {
    let a = Alphabet::binary();
    let tol = S::default_tolerance();
    let mut rows = BTreeMap::new();
    rows.insert(
        Word::from_symbols(alloc::vec![0]),
        Distribution::new(alloc::vec![S::ratio(9, 10), S::ratio(1, 10)], &tol)?,
    );
    rows.insert(
        Word::from_symbols(alloc::vec![1]),
        Distribution::new(alloc::vec![S::ratio(2, 10), S::ratio(8, 10)], &tol)?,
    );
    MarkovModel::new(a, 1, rows)
}

/// Memoryless binary process with mass `p0` on symbol 0.
pub fn bernoulli<S: Value>(p0: S) -> Result<MarkovModel<S>> {
    let tol = S::default_tolerance();
    let dist = Distribution::new(alloc::vec![p0.clone(), S::one() - p0], &tol)?;
    MarkovModel::iid(Alphabet::binary(), dist)
}

/// Markov chain on `{1, …, N}` stepping to 1 or to `n+1`, each with
/// probability ½; its invariant law is `P(X = n) = 2⁻ⁿ` (renormalised by
/// the truncation). No finite dominating measure exists untruncated.
pub fn rmnodom<S: Value>(n_max: usize) -> Result<Truncated<S, MarkovModel<S>>> {
    if n_max < 2 {
        return Err(Error::TruncationTooSmall {
            name: String::from("rmnodom"),
            minimum: 2,
        });
    }
    let labels = (1..=n_max).map(|n| alloc::format!("{n}")).collect();
    let a = Alphabet::new(labels)?;
    let tol = S::default_tolerance();
    let mut rows = BTreeMap::new();
    for n in 1..=n_max {
        let mut mass = alloc::vec![S::zero(); n_max];
        if n < n_max {
            mass[0] = S::ratio(1, 2);
            mass[n] = S::ratio(1, 2); // index n = state n+1
        } else {
            mass[0] = S::one();
        }
        rows.insert(
            Word::from_symbols(alloc::vec![(n - 1) as u16]),
            Distribution::new(mass, &tol)?,
        );
    }
    let model = MarkovModel::new(a, 1, rows)?;
    let retained = S::one() - S::pow2_neg(n_max as u32);
    Ok(Truncated {
        model,
        truncation: n_max,
        retained_mass: retained,
    })
}

/// The 2-step chain on `ℤ⁺` with pair-invariant law `(3/4)·2⁻⁽ᵃ⁺ᵇ⁾` off
/// the diagonal and `(3/4)·2⁻ᵃ(1−2⁻ᵃ)` on it, truncated to `{1, …, N}`
/// with per-row renormalisation.
///
/// The conditional row copies the most recent symbol with probability ½
/// and otherwise draws `c ∝ 2⁻ᶜ⁻¹/(1−2⁻ᵃ)`; this is the unique reading of
/// the chain under which the stated pair law is invariant, and it forces
/// any dominating measure to give every integer mass at least ½.
pub fn two_step<S: Value>(n_max: usize) -> Result<Truncated<S, MarkovModel<S>>> {
    if n_max < 3 {
        return Err(Error::TruncationTooSmall {
            name: String::from("two-step"),
            minimum: 3,
        });
    }
    let labels = (1..=n_max).map(|n| alloc::format!("{n}")).collect();
    let alphabet = Alphabet::new(labels)?;
    let tol = S::default_tolerance();
    let mut rows = BTreeMap::new();
    for a in 1..=n_max {
        // Row for any past with ω₋₁ = a, truncated and renormalised.
        let denom = S::one() - S::pow2_neg(a as u32);
        let mut mass = alloc::vec![S::zero(); n_max];
        for c in 1..=n_max {
            mass[c - 1] = if c == a {
                S::ratio(1, 2)
            } else {
                S::pow2_neg((c + 1) as u32) / denom.clone()
            };
        }
        let total = mass.iter().fold(S::zero(), |acc, m| acc + m.clone());
        let mass: Vec<S> = mass.into_iter().map(|m| m / total.clone()).collect();
        let row = Distribution::new(mass, &tol)?;
        for b in 1..=n_max {
            let w = Word::from_symbols(alloc::vec![(a - 1) as u16, (b - 1) as u16]);
            rows.insert(w, row.clone());
        }
    }
    let model = MarkovModel::new(alphabet, 2, rows)?;

    // Retained pair mass under the paper's law.
    let mut retained = S::zero();
    for a in 1..=n_max {
        for b in 1..=n_max {
            retained = retained + paper_two_step_pair::<S>(a, b);
        }
    }
    Ok(Truncated {
        model,
        truncation: n_max,
        retained_mass: retained,
    })
}

/// The untruncated pair-invariant law of the 2-step chain.
pub fn paper_two_step_pair<S: Value>(a: usize, b: usize) -> S {
    let q = S::ratio(3, 4);
    if a != b {
        q * S::pow2_neg((a + b) as u32)
    } else {
        q * S::pow2_neg(a as u32) * (S::one() - S::pow2_neg(a as u32))
    }
}

/// Symbol indexing for the pair alphabet of [`not_determ`]: `(0,1)` first,
/// then `(n,k)` for `n ≥ 1`, `k ∈ [1, n]`, ordered by `n` then `k`.
pub fn not_determ_index(n: usize, k: usize) -> usize {
    if n == 0 {
        0
    } else {
        1 + n * (n - 1) / 2 + (k - 1)
    }
}

/// Countable-state Markov chain on pairs `(n, k)` whose invariant law is
/// `π(0,1) = ¼`, `π(n,k) = 3/(n·2ⁿ⁺²)`; a Markov (hence random Markov)
/// process with no finite dominating measure and no deterministic
/// representation. Truncated to `n ≤ N` with the top row renormalised.
pub fn not_determ<S: Value>(n_max: usize) -> Result<Truncated<S, MarkovModel<S>>> {
    if n_max < 2 {
        return Err(Error::TruncationTooSmall {
            name: String::from("not-determ"),
            minimum: 2,
        });
    }
    let mut labels = alloc::vec![String::from("0:1")];
    for n in 1..=n_max {
        for k in 1..=n {
            labels.push(alloc::format!("{n}:{k}"));
        }
    }
    let alphabet = Alphabet::new(labels)?;
    let size = alphabet.size();
    let tol = S::default_tolerance();

    let mut rows = BTreeMap::new();
    for n in 0..=n_max {
        let ks = if n == 0 { 1 } else { n };
        for k in 1..=ks {
            let mut mass = alloc::vec![S::zero(); size];
            if n == 0 {
                mass[not_determ_index(1, 1)] = S::one();
            } else if n < n_max {
                // Down-moves carry total mass 2/3, up-moves 1/3.
                if n == 1 {
                    mass[not_determ_index(0, 1)] = S::ratio(2, 3);
                } else {
                    for j in 1..=(n - 1) {
                        mass[not_determ_index(n - 1, j)] =
                            S::ratio(2, 3) / S::from_usize(n - 1);
                    }
                }
                for j in 1..=(n + 1) {
                    mass[not_determ_index(n + 1, j)] =
                        S::ratio(1, 3) / S::from_usize(n + 1);
                }
            } else {
                // Top level: the cut up-moves become uniform moves within
                // the level, which keeps the cross-level flow balance and
                // hence the invariant law exactly proportional to the
                // untruncated one.
                if n == 1 {
                    mass[not_determ_index(0, 1)] = S::ratio(2, 3);
                } else {
                    for j in 1..=(n - 1) {
                        mass[not_determ_index(n - 1, j)] =
                            S::ratio(2, 3) / S::from_usize(n - 1);
                    }
                }
                for j in 1..=n {
                    mass[not_determ_index(n, j)] = S::ratio(1, 3) / S::from_usize(n);
                }
            }
            let w = Word::from_symbols(alloc::vec![not_determ_index(n, k) as u16]);
            rows.insert(w, Distribution::new(mass, &tol)?);
        }
    }
    let model = MarkovModel::new(alphabet, 1, rows)?;

    // Retained mass of the paper's invariant law: 1 − 3·2^{-(N+2)}.
    let retained = S::one() - S::ratio(3, 1) * S::pow2_neg((n_max + 2) as u32);
    Ok(Truncated {
        model,
        truncation: n_max,
        retained_mass: retained,
    })
}

/// The untruncated invariant law of [`not_determ`].
pub fn paper_not_determ_pi<S: Value>(n: usize, _k: usize) -> S {
    if n == 0 {
        S::ratio(1, 4)
    } else {
        S::ratio(3, 1) * S::pow2_neg((n + 2) as u32) / S::from_usize(n)
    }
}

/// Independent process on `⋃_{i≤I} Z_i` with `|Z_i| = 4^i` and
/// `P(X₀ = a) = 2⁻ⁱ/|Z_i|` for `a ∈ Z_i` (renormalised): a uniform
/// martingale with summable variations (all zero) whose deterministic
/// representations all need enormous expected look-back.
pub fn inf_look_back<S: Value>(i_max: usize) -> Result<Truncated<S, MarkovModel<S>>> {
    if i_max < 1 {
        return Err(Error::TruncationTooSmall {
            name: String::from("inf-look-back"),
            minimum: 1,
        });
    }
    if i_max > 7 {
        return Err(Error::Unsupported(String::from(
            "inf-look-back truncation above 7 exceeds the symbol range",
        )));
    }
    let mut labels = Vec::new();
    for i in 1..=i_max {
        let zi = 4usize.pow(i as u32);
        for j in 1..=zi {
            labels.push(alloc::format!("{i}:{j}"));
        }
    }
    let alphabet = Alphabet::new(labels)?;
    let retained = S::one() - S::pow2_neg(i_max as u32);
    let mut mass = Vec::with_capacity(alphabet.size());
    for i in 1..=i_max {
        let zi = 4usize.pow(i as u32);
        let each = S::pow2_neg(i as u32) / (S::from_usize(zi) * retained.clone());
        for _ in 0..zi {
            mass.push(each.clone());
        }
    }
    let dist = Distribution::new(mass.clone(), &S::default_tolerance())?;
    let model = MarkovModel::iid(alphabet, dist)?.with_dominating(mass);
    Ok(Truncated {
        model,
        truncation: i_max,
        retained_mass: retained,
    })
}

/// The canonical random Markov process that is not an n-step chain for any
/// n: alphabet `{0,1} × {1..K}`, look-back law `P(L₀ = k) = 2⁻ᵏ`, and given
/// `L₀ = k` the new bit copies the bit `k` steps back with probability ¼
/// and flips it with probability ¾; the new symbol records the drawn
/// look-back in its second coordinate.
///
/// Tables are functional (they read one coordinate of the past), so the
/// process is exposed as a sampling source rather than a materialised
/// table map.
#[derive(Debug, Clone)]
pub struct RmNotMarkov<S: Value> {
    alphabet: Alphabet,
    k_max: usize,
    masses: Vec<S>,
    residual: S,
}

impl<S: Value> RmNotMarkov<S> {
    pub fn new(k_max: usize) -> Result<Self> {
        if k_max < 2 {
            return Err(Error::TruncationTooSmall {
                name: String::from("rm-notMarkov"),
                minimum: 2,
            });
        }
        let mut labels = Vec::with_capacity(2 * k_max);
        for l in 1..=k_max {
            for b in 0..2 {
                labels.push(alloc::format!("{b}:{l}"));
            }
        }
        let alphabet = Alphabet::new(labels)?;
        let masses = (1..=k_max).map(|k| S::pow2_neg(k as u32)).collect();
        let residual = S::pow2_neg(k_max as u32);
        Ok(RmNotMarkov {
            alphabet,
            k_max,
            masses,
            residual,
        })
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// Symbol index of the pair (bit, look-back).
    pub fn pair_index(bit: u16, lookback: usize) -> u16 {
        ((lookback - 1) * 2) as u16 + bit
    }

    pub fn bit_of(sym: u16) -> u16 {
        sym & 1
    }

    pub fn lookback_of(sym: u16) -> usize {
        (sym / 2) as usize + 1
    }

    /// The look-back law `(k, 2⁻ᵏ)` for `k ≤ K`.
    pub fn lookback_law(&self) -> Vec<(u64, S)> {
        (1..=self.k_max)
            .map(|k| (k as u64, self.masses[k - 1].clone()))
            .collect()
    }
}

impl<S: Value> LookbackSource<S> for RmNotMarkov<S> {
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn levels(&self) -> Vec<(u64, S)> {
        self.lookback_law()
    }

    fn residual(&self) -> S {
        self.residual.clone()
    }

    fn table_depth(&self, level: usize) -> usize {
        level + 1
    }

    fn table_dist(&self, level: usize, w: &Word) -> Result<Distribution<S>> {
        let k = level + 1;
        if w.len() < k {
            return Err(Error::WordTooShort {
                needed: k,
                got: w.len(),
            });
        }
        let referenced = w.symbol(k - 1);
        let same_bit = Self::bit_of(referenced);
        let mut mass = alloc::vec![S::zero(); self.alphabet.size()];
        mass[Self::pair_index(same_bit, k) as usize] = S::ratio(1, 4);
        mass[Self::pair_index(1 - same_bit, k) as usize] = S::ratio(3, 4);
        Distribution::new(mass, &S::default_tolerance())
    }

    fn seed_history(&self, len: usize) -> Word {
        Word::from_symbols(alloc::vec![0; len])
    }
}

/// Catalog entry returned by [`example`].
pub enum Example<S: Value> {
    Markov {
        model: MarkovModel<S>,
        truncation: Option<usize>,
        retained_mass: S,
    },
    CompleteRmp(RmNotMarkov<S>),
    Oracle(RwBins<S>),
}

/// Names accepted by [`example`].
pub const EXAMPLE_NAMES: [&str; 7] = [
    "two-state",
    "rm-notMarkov",
    "not-determ",
    "inf-look-back",
    "rwbins",
    "rmnodom",
    "two-step",
];

/// Builds a catalog process by name. `truncation` overrides the default
/// cut-off for countable-alphabet examples.
pub fn example<S: Value>(name: &str, truncation: Option<usize>) -> Result<Example<S>> {
    match name {
        "two-state" => Ok(Example::Markov {
            model: two_state()?,
            truncation: None,
            retained_mass: S::one(),
        }),
        "rmnodom" => {
            let t = rmnodom(truncation.unwrap_or(30))?;
            Ok(Example::Markov {
                model: t.model,
                truncation: Some(t.truncation),
                retained_mass: t.retained_mass,
            })
        }
        "two-step" => {
            let t = two_step(truncation.unwrap_or(32))?;
            Ok(Example::Markov {
                model: t.model,
                truncation: Some(t.truncation),
                retained_mass: t.retained_mass,
            })
        }
        "not-determ" => {
            let t = not_determ(truncation.unwrap_or(20))?;
            Ok(Example::Markov {
                model: t.model,
                truncation: Some(t.truncation),
                retained_mass: t.retained_mass,
            })
        }
        "inf-look-back" => {
            let t = inf_look_back(truncation.unwrap_or(3))?;
            Ok(Example::Markov {
                model: t.model,
                truncation: Some(t.truncation),
                retained_mass: t.retained_mass,
            })
        }
        "rm-notMarkov" => Ok(Example::CompleteRmp(RmNotMarkov::new(
            truncation.unwrap_or(30),
        )?)),
        "rwbins" => Ok(Example::Oracle(RwBins::new(truncation.unwrap_or(12))?)),
        _ => Err(Error::UnknownExample {
            name: String::from(name),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Process;
    use crate::value::Exact;
    use num_traits::{One, Zero};

    #[test]
    fn rmnodom_invariant_is_dyadic() {
        // Truncated at N the invariant law is 2⁻ⁿ/(1 − 2⁻ᴺ) exactly.
        let t = rmnodom::<Exact>(8).unwrap();
        let pi = t.model.invariant(1);
        for n in 1..=8usize {
            let expect = Exact::pow2_neg(n as u32) / t.retained_mass.clone();
            assert_eq!(pi.prob(&Word::from_symbols(vec![(n - 1) as u16])), expect);
        }
    }

    #[test]
    fn not_determ_invariant_matches_paper_after_derenormalisation() {
        let t = not_determ::<Exact>(6).unwrap();
        let pi = t.model.invariant(1);
        // π_trunc(s) · retained = paper value, exactly.
        for n in 0..=6usize {
            let ks = if n == 0 { 1 } else { n };
            for k in 1..=ks {
                let sym = not_determ_index(n, k) as u16;
                let got = pi.prob(&Word::from_symbols(vec![sym])) * t.retained_mass.clone();
                let expect = paper_not_determ_pi::<Exact>(n, k);
                assert_eq!(got, expect, "state ({n},{k})");
            }
        }
    }

    #[test]
    fn two_step_rows_copy_recent_symbol() {
        let t = two_step::<Exact>(6).unwrap();
        for (w, d) in t.model.rows() {
            let a = w.symbol(0) as usize + 1;
            // The copy mass is ½ before row renormalisation, so ≥ ½ after.
            assert!(*d.get(a - 1) >= Exact::ratio(1, 2));
            // Rows do not depend on the older coordinate.
            let other = Word::from_symbols(vec![w.symbol(0), (a as u16) % 6]);
            assert_eq!(d, &t.model.rows()[&other]);
        }
    }

    #[test]
    fn two_step_pair_invariant_close_to_paper() {
        // The truncated chain's pair law approaches the paper values at
        // rate ~2⁻ᴺ; N = 12 leaves roughly 1e-4 of distortion.
        let t = two_step::<f64>(12).unwrap();
        let pi = t.model.invariant(2);
        for (a, b) in [(1usize, 2usize), (2, 1), (1, 1), (3, 2), (2, 2)] {
            // Pair (X₀ = a, X₁ = b) is the word (newer b, older a).
            let got = pi.prob(&Word::from_symbols(vec![(b - 1) as u16, (a - 1) as u16]));
            let expect = paper_two_step_pair::<f64>(a, b);
            assert!((got - expect).abs() < 1e-3, "({a},{b}): {got} vs {expect}");
        }
    }

    #[test]
    fn inf_look_back_masses() {
        let t = inf_look_back::<Exact>(2).unwrap();
        assert_eq!(t.model.alphabet().size(), 4 + 16);
        let d = t.model.cond(&Word::empty()).unwrap();
        // Z₁ atoms: (1/2)/4 / (3/4) = 1/6; Z₂ atoms: (1/4)/16 / (3/4) = 1/48.
        assert_eq!(*d.get(0), Exact::ratio(1, 6));
        assert_eq!(*d.get(4), Exact::ratio(1, 48));
        assert!(inf_look_back::<Exact>(0).is_err());
    }

    #[test]
    fn rm_not_markov_lookback_law() {
        let m = RmNotMarkov::<Exact>::new(10).unwrap();
        let law = m.lookback_law();
        for (k, mass) in &law {
            assert_eq!(*mass, Exact::pow2_neg(*k as u32));
        }
        assert_eq!(m.residual(), Exact::pow2_neg(10));
        // Table at level k: mass ¼ on copying the bit k back, ¾ on flipping.
        let w = Word::from_symbols(vec![
            RmNotMarkov::<Exact>::pair_index(1, 3),
            RmNotMarkov::<Exact>::pair_index(0, 1),
        ]);
        let d = m.table_dist(1, &w).unwrap(); // level index 1 = look-back 2
        let same = RmNotMarkov::<Exact>::pair_index(0, 2) as usize;
        let flip = RmNotMarkov::<Exact>::pair_index(1, 2) as usize;
        assert_eq!(*d.get(same), Exact::ratio(1, 4));
        assert_eq!(*d.get(flip), Exact::ratio(3, 4));
    }

    #[test]
    fn unknown_example_rejected() {
        assert!(matches!(
            example::<Exact>("nope", None),
            Err(Error::UnknownExample { .. })
        ));
    }

    #[test]
    fn catalog_finite_order_variations_vanish_at_order() {
        use crate::model::{ratio_coeff, variation};
        let models: Vec<(MarkovModel<Exact>, usize)> = vec![
            (two_state().unwrap(), 1),
            (bernoulli(Exact::ratio(3, 4)).unwrap(), 0),
            (rmnodom(6).unwrap().model, 1),
            (two_step(5).unwrap().model, 2),
            (not_determ(4).unwrap().model, 1),
            (inf_look_back(2).unwrap().model, 0),
        ];
        for (m, order) in &models {
            assert_eq!(m.order_m(), *order);
            for k in *order..*order + 2 {
                let v = variation(m, k, k + 1).unwrap();
                assert!(v.value.is_zero() && v.exact);
                let r = ratio_coeff(m, k, k + 1).unwrap();
                assert_eq!(r.sup_ratio, Some(Exact::one()));
            }
            // var_bound dominates measured variation at every k.
            for k in 0..*order + 2 {
                let v = variation(m, k, *order.max(&k)).unwrap();
                assert!(v.value <= m.var_bound(k));
            }
        }
    }

    #[test]
    fn dominating_measure_holds_for_inf_look_back() {
        let t = inf_look_back::<Exact>(2).unwrap();
        let mu = t.model.dominating().unwrap();
        for len in 0..2usize {
            for w in t.model.probe_words(len, true).unwrap() {
                let d = t.model.cond(&w).unwrap();
                for a in 0..d.size() {
                    assert!(*d.get(a) <= mu[a]);
                }
            }
        }
    }
}
