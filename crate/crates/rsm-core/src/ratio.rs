//! Representations from the ratio (log-continuity) condition.
//!
//! Given any target masses `(p_i)` summing to 1, level depths are chosen
//! so that the multiplicative deviation between full- and finite-past
//! conditionals sits below `p₁/2` at the first level and below
//! `p_i/(2·Σ_{j≤i} p_j)` afterwards. The level tables are the telescoped
//! measures
//!
//! ```text
//! τ₁ = μ₁,    τ_{i+1} = ((Σ_{j≤i+1} p_j)·μ_{i+1} − (Σ_{j≤i} p_j)·μ_i) / p_{i+1}
//! ```
//!
//! with `μ_i` the conditional given the `n_i`-past. Each `τ_i` totals 1 by
//! construction; the thresholds make it nonnegative, and any negative
//! entry is reported as a level-threshold violation rather than patched.
//! Tables are distribution-valued — chain into [`crate::determinize`] for
//! tables with values in {0, 1}.

use alloc::vec::Vec;

use crate::decompose::{RepKind, Representation, TableAssignment, TableFunction};
use crate::error::{Error, Result};
use crate::measure::Distribution;
use crate::model::{ratio_coeff, Process};
use crate::value::Value;
use crate::words::Word;

/// Chosen level masses and depths; `depths` is non-decreasing and levels
/// with equal depth stay distinct.
#[derive(Debug, Clone)]
pub struct RatioLevels<S: Value> {
    pub masses: Vec<S>,
    pub depths: Vec<u64>,
    /// `1 − Σ masses`.
    pub residual: S,
}

impl<S: Value> RatioLevels<S> {
    /// `Σ_{j ≤ i} p_j` (1-based, inclusive).
    fn mass_through(&self, i: usize) -> S {
        self.masses[..i]
            .iter()
            .fold(S::zero(), |a, b| a + b.clone())
    }
}

/// The default mass sequence `p_i = 2⁻ⁱ`, truncated at `k` levels.
pub fn default_masses<S: Value>(k: usize) -> Vec<S> {
    (1..=k).map(|i| S::pow2_neg(i as u32)).collect()
}

fn validate_masses<S: Value>(masses: &[S]) -> Result<S> {
    if masses.is_empty() {
        return Err(Error::BadMassSequence);
    }
    let mut total = S::zero();
    for p in masses {
        if *p <= S::zero() || *p >= S::one() {
            return Err(Error::BadMassSequence);
        }
        total = total + p.clone();
    }
    if total > S::one() {
        return Err(Error::BadMassSequence);
    }
    Ok(S::one() - total)
}

/// Level thresholds: `p₁/2`, then `p_i/(2·Σ_{j≤i} p_j)`.
fn threshold<S: Value>(levels: &RatioLevels<S>, i: usize) -> S {
    if i == 1 {
        levels.masses[0].clone() * S::ratio(1, 2)
    } else {
        levels.masses[i - 1].clone()
            / (S::ratio(2, 1) * levels.mass_through(i))
    }
}

/// Chooses level depths for a mass sequence against a deviation oracle:
/// `deviation(n)` must bound the multiplicative gap `exp(r_n) − 1` between
/// full- and `n`-past conditionals (`None` meaning unbounded at this `n`).
/// Depths only ever probe `n ≥ 1`.
pub fn choose_levels<S: Value>(
    deviation: impl Fn(usize) -> Result<Option<S>>,
    masses: &[S],
    probe_depth: usize,
) -> Result<RatioLevels<S>> {
    let residual = validate_masses(masses)?;
    let mut levels = RatioLevels {
        masses: masses.to_vec(),
        depths: Vec::with_capacity(masses.len()),
        residual,
    };
    let mut n_prev = 1usize;
    for i in 1..=masses.len() {
        let bound = threshold(&levels, i);
        let mut chosen = None;
        for n in n_prev..=probe_depth {
            if let Some(dev) = deviation(n)? {
                if dev < bound {
                    chosen = Some(n);
                    break;
                }
            }
        }
        match chosen {
            Some(n) => {
                levels.depths.push(n as u64);
                n_prev = n;
            }
            None => {
                return Err(Error::CannotCertifyRatioDecay {
                    level: i,
                    threshold: bound.render(),
                })
            }
        }
    }
    Ok(levels)
}

/// Deviation oracle measured from a model: `sup_ratio(n) − 1`, exact for
/// finite-order models.
pub fn measured_deviation<'a, S: Value, M: Process<S> + ?Sized>(
    model: &'a M,
    depth: usize,
) -> impl Fn(usize) -> Result<Option<S>> + 'a {
    move |n: usize| {
        let probe = match model.order() {
            Some(m) => core::cmp::max(n, m),
            None => core::cmp::max(n, depth),
        };
        let est = ratio_coeff(model, n, probe)?;
        Ok(est.deviation())
    }
}

/// Conditional at the `n`-past of `w`, tolerating words shorter than `n`
/// when the model's order makes deeper symbols irrelevant.
fn mu_at<S: Value, M: Process<S> + ?Sized>(model: &M, w: &Word, n: u64) -> Result<Distribution<S>> {
    let n = n as usize;
    if w.len() >= n {
        return model.cond(&w.prefix(n));
    }
    match model.order() {
        Some(m) if w.len() >= m => model.cond(w),
        _ => Err(Error::WordTooShort {
            needed: n,
            got: w.len(),
        }),
    }
}

/// The level-`i` table measure `τ_i` at word `w` (1-based `i`).
///
/// Total mass is exactly 1; a negative entry means the level thresholds
/// were violated (mis-chosen depths or an unsound deviation bound) and is
/// returned as an error carrying the witness.
pub fn tau<S: Value, M: Process<S> + ?Sized>(
    model: &M,
    levels: &RatioLevels<S>,
    i: usize,
    w: &Word,
) -> Result<Distribution<S>> {
    if i == 0 || i > levels.masses.len() {
        return Err(Error::Unsupported(alloc::format!(
            "level index {i} out of range"
        )));
    }
    let mu_i = mu_at(model, w, levels.depths[i - 1])?;
    if i == 1 {
        return Ok(mu_i);
    }
    let s_now = levels.mass_through(i);
    let s_prev = levels.mass_through(i - 1);
    let p = levels.masses[i - 1].clone();
    let mu_prev = mu_at(model, w, levels.depths[i - 2])?;
    let size = mu_i.size();
    let mut mass = Vec::with_capacity(size);
    let tol = S::default_tolerance();
    for a in 0..size {
        let v = (s_now.clone() * mu_i.get(a).clone()
            - s_prev.clone() * mu_prev.get(a).clone())
            / p.clone();
        if v < -tol.clone() {
            return Err(Error::TauNegative {
                level: i,
                word: w.clone(),
                symbol: a,
            });
        }
        mass.push(if v < S::zero() { S::zero() } else { v });
    }
    Distribution::new(mass, &tol)
}

/// Builds a representation with the prescribed look-back law `P(L₀ = n_i)
/// = p_i` and the telescoped tables `τ_i`. Deviations are measured from
/// the model up to `probe_depth`.
pub fn ratio_decompose<S: Value, M: Process<S> + ?Sized>(
    model: &M,
    masses: &[S],
    probe_depth: usize,
) -> Result<Representation<S>> {
    let deviation = measured_deviation(model, probe_depth);
    let levels = choose_levels(deviation, masses, probe_depth)?;
    build_from_levels(model, &levels)
}

/// Builds the representation for already-chosen levels.
pub fn build_from_levels<S: Value, M: Process<S> + ?Sized>(
    model: &M,
    levels: &RatioLevels<S>,
) -> Result<Representation<S>> {
    let mut tables = Vec::with_capacity(levels.masses.len());
    for i in 1..=levels.masses.len() {
        let n_i = levels.depths[i - 1] as usize;
        let depth = match model.order() {
            Some(m) => core::cmp::min(n_i, m),
            None => n_i,
        };
        let words = model.probe_words(depth, true)?;
        let mut map = alloc::collections::BTreeMap::new();
        for w in words {
            let t = tau(model, levels, i, &w)?;
            map.insert(w, t);
        }
        tables.push(TableFunction {
            lookback: levels.depths[i - 1],
            depth,
            mass: levels.masses[i - 1].clone(),
            assignment: TableAssignment::General(map),
        });
    }
    let seed_len = tables.iter().map(|t| t.depth).max().unwrap_or(0);
    let mut seed = Word::empty();
    for _ in 0..seed_len {
        let d = model.cond(&seed)?;
        let (a, _) = d.argmax();
        seed = seed.extend_newer(a as u16);
    }
    Ok(Representation {
        alphabet: model.alphabet().clone(),
        levels: tables,
        residual: levels.residual.clone(),
        deterministic: false,
        kind: RepKind::RatioConstruction,
        diagnostics: Vec::new(),
        seed_word: Some(seed),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::catalog;
    use crate::model::MarkovModel;
    use crate::value::Exact;
    use crate::words::Alphabet;
    use alloc::collections::BTreeMap;
    use num_traits::{One, Zero};

    fn exact(n: i64, d: u64) -> Exact {
        Exact::ratio(n, d)
    }

    #[test]
    fn choose_levels_order_one_chain() {
        // Deviation 0 from depth 1 on: every level certifies at depth 1.
        let m = catalog::two_state::<Exact>().unwrap();
        let dev = measured_deviation(&m, 8);
        let masses = default_masses::<Exact>(6);
        let levels = choose_levels(dev, &masses, 8).unwrap();
        assert_eq!(levels.depths, vec![1, 1, 1, 1, 1, 1]);
        assert_eq!(levels.residual, Exact::pow2_neg(6));
    }

    #[test]
    fn choose_levels_declared_decay() {
        // Declared bound r_n = 1/n: deviation e^{1/n} − 1. With masses
        // (½, ¼, …): n₁ is the least n with e^{1/n} − 1 < ¼, which is 5
        // (e^{1/5} − 1 ≈ 0.2214 while e^{1/4} − 1 ≈ 0.284), and n₂ the
        // least n with the gap below 1/6, which is 7.
        let dev = |n: usize| -> crate::error::Result<Option<f64>> {
            Ok(Some(crate::value::exp_m1_f64(1.0 / n as f64)))
        };
        let masses = default_masses::<f64>(2);
        let levels = choose_levels(dev, &masses, 64).unwrap();
        assert_eq!(levels.depths[0], 5);
        assert_eq!(levels.depths[1], 7);
    }

    #[test]
    fn choose_levels_rejects_flat_ratio() {
        let dev = |_: usize| -> crate::error::Result<Option<f64>> {
            Ok(Some(crate::value::exp_m1_f64(1.0)))
        };
        let masses = default_masses::<f64>(3);
        assert!(matches!(
            choose_levels(dev, &masses, 64),
            Err(Error::CannotCertifyRatioDecay { level: 1, .. })
        ));
    }

    #[test]
    fn bad_mass_sequences_rejected() {
        let zero = vec![Exact::zero()];
        assert!(matches!(
            validate_masses(&zero),
            Err(Error::BadMassSequence)
        ));
        let over = vec![exact(3, 4), exact(1, 2)];
        assert!(matches!(
            validate_masses(&over),
            Err(Error::BadMassSequence)
        ));
    }

    /// A strictly positive order-2 chain with per-symbol spreads tight
    /// enough that `2·min ≥ max`, so `τ₂ = 2μ₂ − μ₁ ≥ 0` holds for the
    /// two-level split `p = (½, ½)`, `n = (1, 2)`.
    fn tame_order_two() -> MarkovModel<Exact> {
        let a = Alphabet::binary();
        let tol = Exact::default_tolerance();
        let rows_vals = [
            ((0u16, 0u16), (40i64, 60i64)),
            ((0, 1), (55, 45)),
            ((1, 0), (65, 35)),
            ((1, 1), (50, 50)),
        ];
        let mut rows = BTreeMap::new();
        for ((r, s), (p0, p1)) in rows_vals {
            rows.insert(
                Word::from_symbols(vec![r, s]),
                Distribution::new(vec![exact(p0, 100), exact(p1, 100)], &tol).unwrap(),
            );
        }
        MarkovModel::new(a, 2, rows).unwrap()
    }

    #[test]
    fn tau_telescopes_on_hand_chain() {
        let m = tame_order_two();
        let levels = RatioLevels {
            masses: vec![exact(1, 2), exact(1, 2)],
            depths: vec![1, 2],
            residual: Exact::zero(),
        };
        for w in m.probe_words(2, true).unwrap() {
            let t1 = tau(&m, &levels, 1, &w).unwrap();
            let t2 = tau(&m, &levels, 2, &w).unwrap();
            let mu2 = m.cond(&w).unwrap();
            let mu1 = m.cond(&w.prefix(1)).unwrap();
            for a in 0..2usize {
                // τ₂ = 2μ₂ − μ₁ entrywise.
                let expect = exact(2, 1) * mu2.get(a).clone() - mu1.get(a).clone();
                assert_eq!(*t2.get(a), expect);
                // Telescoping: ½τ₁ + ½τ₂ = μ₂.
                let mix = exact(1, 2) * t1.get(a).clone()
                    + exact(1, 2) * t2.get(a).clone();
                assert_eq!(mix, *mu2.get(a));
            }
        }
    }

    #[test]
    fn tau_base_level_is_conditional() {
        let m = catalog::two_state::<Exact>().unwrap();
        let levels = RatioLevels {
            masses: vec![exact(1, 2), exact(1, 4)],
            depths: vec![1, 1],
            residual: exact(1, 4),
        };
        let w = Word::from_symbols(vec![0]);
        let t1 = tau(&m, &levels, 1, &w).unwrap();
        assert_eq!(*t1.get(0), exact(9, 10));
        // For an order-1 chain μ_i all equal the transition row, so every
        // later τ telescopes back to the row as well.
        let t2 = tau(&m, &levels, 2, &w).unwrap();
        assert_eq!(*t2.get(0), exact(9, 10));
    }

    #[test]
    fn ratio_decompose_order_one_rows() {
        let m = catalog::two_state::<Exact>().unwrap();
        let masses = default_masses::<Exact>(20);
        let rep = ratio_decompose(&m, &masses, 8).unwrap();
        assert_eq!(rep.levels.len(), 20);
        assert_eq!(rep.residual, Exact::pow2_neg(20));
        // Every table equals the transition rows.
        for l in &rep.levels {
            assert_eq!(l.lookback, 1);
            let d0 = l.values(&Word::from_symbols(vec![0]), 2).unwrap();
            assert_eq!(*d0.get(0), exact(9, 10));
            let d1 = l.values(&Word::from_symbols(vec![1]), 2).unwrap();
            assert_eq!(*d1.get(1), exact(8, 10));
        }
        // Mixture telescopes to (1 − 2⁻²⁰)·cond exactly.
        let w = Word::from_symbols(vec![1]);
        let mix = rep.mixture(&w).unwrap();
        let keep = Exact::one() - Exact::pow2_neg(20);
        assert_eq!(mix[0], exact(2, 10) * keep.clone());
        assert_eq!(mix[1], exact(8, 10) * keep);
    }

    #[test]
    fn ratio_decompose_exact_two_level() {
        let m = tame_order_two();
        let masses = vec![exact(1, 2), exact(1, 2)];
        let rep = ratio_decompose(&m, &masses, 8).unwrap();
        assert!(rep.residual.is_zero());
        assert_eq!(rep.levels.len(), 2);
        // Full mixture equals the conditional law exactly at depth ≥ 2.
        for w in m.probe_words(2, true).unwrap() {
            let mix = rep.mixture(&w).unwrap();
            let cond = m.cond(&w).unwrap();
            for a in 0..2 {
                assert_eq!(mix[a], *cond.get(a));
            }
        }
    }

    #[test]
    fn ratio_decompose_with_zero_transition() {
        // rc(0) = ∞ (zero against positive sibling) but rc(1) = 0: the
        // thresholds only probe n ≥ 1, so the construction succeeds with
        // n₁ = 1.
        let a = Alphabet::binary();
        let tol = Exact::default_tolerance();
        let mut rows = BTreeMap::new();
        rows.insert(
            Word::from_symbols(vec![0]),
            Distribution::new(vec![Exact::one(), Exact::zero()], &tol).unwrap(),
        );
        rows.insert(
            Word::from_symbols(vec![1]),
            Distribution::new(vec![exact(1, 2), exact(1, 2)], &tol).unwrap(),
        );
        let m = MarkovModel::new(a, 1, rows).unwrap();
        let r0 = ratio_coeff(&m, 0, 1).unwrap();
        assert!(r0.is_infinite());
        let masses = default_masses::<Exact>(4);
        let rep = ratio_decompose(&m, &masses, 8).unwrap();
        assert_eq!(rep.levels[0].lookback, 1);
    }

    #[test]
    fn tau_negativity_reported() {
        // Force a mis-chosen split on a genuinely order-2 chain: depths
        // (1, 2) with a tiny p₂ make τ₂ negative somewhere.
        let a = Alphabet::binary();
        let tol = Exact::default_tolerance();
        let mut rows = BTreeMap::new();
        let vals = [
            ((0u16, 0u16), (95i64, 5i64)),
            ((0, 1), (5, 95)),
            ((1, 0), (50, 50)),
            ((1, 1), (50, 50)),
        ];
        for ((r, s), (p0, p1)) in vals {
            rows.insert(
                Word::from_symbols(vec![r, s]),
                Distribution::new(vec![exact(p0, 100), exact(p1, 100)], &tol).unwrap(),
            );
        }
        let m = MarkovModel::new(a, 2, rows).unwrap();
        let levels = RatioLevels {
            masses: vec![exact(9, 10), exact(1, 10)],
            depths: vec![1, 2],
            residual: Exact::zero(),
        };
        let mut saw_negative = false;
        for w in m.probe_words(2, true).unwrap() {
            if matches!(
                tau(&m, &levels, 2, &w),
                Err(Error::TauNegative { level: 2, .. })
            ) {
                saw_negative = true;
            }
        }
        assert!(saw_negative);
    }
}
