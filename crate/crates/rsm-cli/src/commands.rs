//! Command implementations, generic over the numeric backend.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use rsm_core::decompose::{
    decompose, decompose_finite_expectation, demonstrate_collapse,
    finite_expectation_bound, verify_representation, Representation, StopRule,
    VerifyOptions,
};
use rsm_core::determinize::{det_expected_lookback, determinize, IndexFamily};
use rsm_core::model::catalog::{self, Example};
use rsm_core::model::{ratio_coeff, variation, MarkovModel, Process};
use rsm_core::ratio::{default_masses, ratio_decompose};
use rsm_core::simulate::{simulate, LookbackSource, Source};
use rsm_core::value::Value;
use rsm_core::{Error, Result};

use crate::json::{ModelDoc, RepresentationDoc};

fn bad(msg: impl Into<String>) -> Error {
    Error::Unsupported(msg.into())
}

/// Thread budget for parallel word scans: `RSM_THREADS` caps the
/// available parallelism.
pub fn thread_budget() -> usize {
    let avail = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    match std::env::var("RSM_THREADS") {
        Ok(v) => match v.parse::<usize>() {
            Ok(n) if n >= 1 => n.min(avail),
            _ => avail,
        },
        Err(_) => avail,
    }
}

/// Where a model comes from.
pub enum ModelSource {
    File(PathBuf),
    Example { name: String, truncate: Option<usize> },
}

/// A loaded model plus catalog metadata when it came from the catalog.
pub struct LoadedModel<S: Value> {
    pub model: MarkovModel<S>,
    pub name: String,
    pub truncation: Option<usize>,
    pub retained_mass: Option<S>,
}

pub fn load_markov<S: Value>(src: &ModelSource) -> Result<LoadedModel<S>> {
    match src {
        ModelSource::File(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
            let doc: ModelDoc = serde_json::from_str(&text)
                .map_err(|e| bad(format!("model parse error in {}: {e}", path.display())))?;
            Ok(LoadedModel {
                model: doc.to_model()?,
                name: path.display().to_string(),
                truncation: None,
                retained_mass: None,
            })
        }
        ModelSource::Example { name, truncate } => {
            match catalog::example::<S>(name, *truncate)? {
                Example::Markov {
                    model,
                    truncation,
                    retained_mass,
                } => Ok(LoadedModel {
                    model,
                    name: name.clone(),
                    truncation,
                    retained_mass: Some(retained_mass),
                }),
                _ => Err(bad(format!(
                    "example `{name}` is not a transition-row model; \
                     use `simulate --example` or `examples build` instead"
                ))),
            }
        }
    }
}

pub fn write_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| bad(format!("serialisation error: {e}")))?;
    match out {
        Some(path) => std::fs::write(path, text + "\n")
            .map_err(|e| bad(format!("cannot write {}: {e}", path.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

#[derive(Debug, Serialize)]
pub struct VariationRow {
    pub k: usize,
    pub var: String,
    pub var_exact: bool,
    pub var_bound: String,
    pub ratio_log: f64,
    pub ratio_infinite: bool,
    pub ratio_exact: bool,
}

/// Variation and ratio coefficients for `k = 0..=k_max`, scanned in
/// parallel across at most [`thread_budget`] threads.
pub fn cmd_variations<S, M>(
    model: &M,
    k_max: usize,
    depth: Option<usize>,
) -> Result<Vec<VariationRow>>
where
    S: Value + Send + Sync,
    M: Process<S> + Sync,
{
    let depth = depth.unwrap_or_else(|| match model.order() {
        Some(m) => m.max(k_max),
        None => model.max_depth().unwrap_or(k_max.max(8)),
    });
    let depth = match model.max_depth() {
        Some(md) => depth.min(md),
        None => depth,
    };
    let threads = thread_budget().max(1);
    let ks: Vec<usize> = (0..=k_max).collect();
    let chunk = ks.len().div_ceil(threads);
    let mut rows: Vec<Option<VariationRow>> = Vec::new();
    rows.resize_with(ks.len(), || None);

    std::thread::scope(|scope| -> Result<()> {
        let mut handles = Vec::new();
        for (c, slot) in ks.chunks(chunk).zip(rows.chunks_mut(chunk)) {
            handles.push(scope.spawn(move || -> Result<()> {
                for (k, out) in c.iter().zip(slot.iter_mut()) {
                    let d = match model.max_depth() {
                        Some(md) => depth.max(*k).min(md),
                        None => depth.max(*k),
                    };
                    let v = variation(model, *k, d)?;
                    let r = ratio_coeff(model, *k, d)?;
                    *out = Some(VariationRow {
                        k: *k,
                        var: v.value.render(),
                        var_exact: v.exact,
                        var_bound: v.declared_bound.render(),
                        ratio_log: r.log_value(),
                        ratio_infinite: r.is_infinite(),
                        ratio_exact: r.exact,
                    });
                }
                Ok(())
            }));
        }
        for h in handles {
            h.join().expect("scan thread panicked")?;
        }
        Ok(())
    })?;
    Ok(rows.into_iter().map(|r| r.unwrap()).collect())
}

pub fn print_variations(rows: &[VariationRow]) {
    println!("{:>3}  {:>22}  {:>7}  {:>14}", "k", "var_k", "exact", "r_k (log)");
    for r in rows {
        let rc = if r.ratio_infinite {
            "inf".to_string()
        } else {
            format!("{:.6}", r.ratio_log)
        };
        println!(
            "{:>3}  {:>22}  {:>7}  {:>14}",
            r.k,
            r.var,
            if r.var_exact { "yes" } else { "lower" },
            rc
        );
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    General,
    FiniteExpectation,
    Ratio,
}

impl Variant {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "a" | "general" => Ok(Variant::General),
            "b" | "finite-expectation" => Ok(Variant::FiniteExpectation),
            "ratio" => Ok(Variant::Ratio),
            _ => Err(bad(format!("unknown variant `{s}` (use a, b or ratio)"))),
        }
    }
}

pub fn cmd_decompose<S: Value>(
    model: &MarkovModel<S>,
    variant: Variant,
    stop: &StopRule<S>,
    probe_depth: usize,
) -> Result<Representation<S>> {
    match variant {
        Variant::General => decompose(model, stop),
        Variant::FiniteExpectation => decompose_finite_expectation(model, stop),
        Variant::Ratio => {
            let masses = default_masses::<S>(stop.k_max);
            ratio_decompose(model, &masses, probe_depth)
        }
    }
}

pub fn print_representation_summary<S: Value>(
    model: Option<&MarkovModel<S>>,
    rep: &Representation<S>,
    tol: &S,
) {
    let law = rep.lookback_distribution();
    println!("levels: {}", rep.levels.len());
    for l in &rep.levels {
        println!(
            "  n = {:>6}  p = {}  (table depth {})",
            l.lookback,
            l.mass.render(),
            l.depth
        );
        if rep.levels.len() > 12 && l.lookback != rep.max_lookback() {
            // keep long listings short
        }
    }
    println!("residual: {}", rep.residual.render());
    let (e, complete) = rep.expected_lookback(tol);
    println!(
        "expected look-back: {}{}",
        e.render(),
        if complete {
            String::new()
        } else {
            " (+ residual tail unaccounted)".to_string()
        }
    );
    println!("deterministic: {}", rep.deterministic);
    println!(
        "look-back law: {} distances, residual {}",
        law.levels.len(),
        law.residual.render()
    );
    if let Some(m) = model {
        if let Ok(bound) = finite_expectation_bound(m) {
            println!("finite-expectation bound 2M²(1+Σvar): {}", bound.render());
        }
    }
}

pub fn cmd_determinize<S: Value>(
    rep: &Representation<S>,
    family: IndexFamily,
    digit_depth: u32,
    tol: &S,
) -> Result<Representation<S>> {
    let (out, acc) = determinize(rep, family, digit_depth, tol)?;
    println!(
        "determinized with {} family, digit depth {}, bit width {}",
        family.name(),
        digit_depth,
        acc.bit_width
    );
    for (i, q, assigned, gap) in &acc.per_level {
        println!(
            "  base n = {:>4}: mass {} -> assigned {} (gap {})",
            i,
            q.render(),
            assigned.render(),
            gap.render()
        );
    }
    println!("residual out: {}", acc.residual_out.render());
    let el = det_expected_lookback(&out, rep, &acc);
    if el.infinite_flag {
        println!("expected look-back: infinite (prime family)");
    } else {
        println!(
            "expected look-back (emitted levels): {} <= bound {}: {}",
            el.partial.render(),
            el.bound.as_ref().map(|b| b.render()).unwrap_or_default(),
            el.within_bound.unwrap_or(false)
        );
        if el.within_bound != Some(true) {
            return Err(Error::CheckFailed {
                invariant: "determinized-expected-lookback-bound".into(),
                witness: rsm_core::Word::empty(),
            });
        }
    }
    Ok(out)
}

pub fn cmd_verify<S: Value>(
    model: &MarkovModel<S>,
    rep: &Representation<S>,
    depth: Option<usize>,
) -> Result<()> {
    let depth = depth.unwrap_or_else(|| rep.max_table_depth().max(model.order_m()));
    let report = verify_representation(model, rep, depth, &VerifyOptions::default())?;
    println!("check table-domination: ok");
    println!(
        "check mixture-reconstruction: ok (max gap {}, residual {})",
        report.max_gap.render(),
        report.residual.render()
    );
    if rep.deterministic {
        println!("check determinism: ok");
    }
    for (n, sup, tail) in &report.tv_lookback {
        println!(
            "check tv-lookback n={}: ok (sup {} <= P(L>n) {})",
            n,
            sup.render(),
            tail.render()
        );
    }
    println!(
        "check lookback-necessity (var_n <= 2 P(L>n)): {}",
        if report.necessity_ok { "ok" } else { "FAIL" }
    );
    if !report.necessity_ok {
        return Err(Error::CheckFailed {
            invariant: "lookback-necessity".into(),
            witness: rsm_core::Word::empty(),
        });
    }
    println!("words scanned: {}", report.words_scanned);
    Ok(())
}

pub enum SimSource<S: Value> {
    Markov(LoadedModel<S>),
    Rep(Representation<S>),
    RmNotMarkov(catalog::RmNotMarkov<S>),
}

#[derive(Debug, Serialize)]
pub struct PathDoc {
    pub length: usize,
    pub seed: u64,
    pub burn_in: u64,
    pub symbols: Vec<u16>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lookbacks: Option<Vec<u64>>,
}

pub fn cmd_simulate<S: Value>(
    source: &SimSource<S>,
    length: usize,
    seed: u64,
    burn_in: Option<u64>,
    tol: &S,
) -> Result<PathDoc> {
    let (src, default_burn, alphabet) = match source {
        SimSource::Markov(m) => (
            Source::Markov(&m.model),
            m.model.order_m() as u64,
            m.model.alphabet().clone(),
        ),
        SimSource::Rep(rep) => (
            Source::Representation(rep as &dyn LookbackSource<S>),
            rep.max_table_depth() as u64,
            rep.alphabet.clone(),
        ),
        SimSource::RmNotMarkov(m) => (
            Source::Representation(m as &dyn LookbackSource<S>),
            m.k_max() as u64,
            LookbackSource::alphabet(m).clone(),
        ),
    };
    let burn_in = burn_in.unwrap_or_else(|| default_burn.max(1024));
    let path = simulate(&src, length, seed, burn_in, tol)?;

    // Empirical summaries.
    let mut sym_counts: BTreeMap<u16, usize> = BTreeMap::new();
    let mut lb_counts: BTreeMap<u64, usize> = BTreeMap::new();
    let mut any_lb = false;
    for (s, lb) in &path {
        *sym_counts.entry(*s).or_default() += 1;
        if let Some(l) = lb {
            any_lb = true;
            *lb_counts.entry(*l).or_default() += 1;
        }
    }
    let mut by_freq: Vec<(u16, usize)> = sym_counts.into_iter().collect();
    by_freq.sort_by(|a, b| b.1.cmp(&a.1));
    println!("simulated {length} steps (seed {seed}, burn-in {burn_in})");
    for (s, c) in by_freq.iter().take(10) {
        println!(
            "  symbol {:>8}: {:.6}",
            alphabet.label(*s as usize),
            *c as f64 / length as f64
        );
    }
    if by_freq.len() > 10 {
        println!("  ... {} further symbols", by_freq.len() - 10);
    }
    if any_lb {
        for (l, c) in lb_counts.iter().take(10) {
            println!("  look-back {l:>4}: {:.6}", *c as f64 / length as f64);
        }
    }

    Ok(PathDoc {
        length,
        seed,
        burn_in,
        symbols: path.iter().map(|(s, _)| *s).collect(),
        lookbacks: if any_lb {
            Some(path.iter().map(|(_, l)| l.unwrap_or(0)).collect())
        } else {
            None
        },
    })
}

#[derive(Debug, Serialize)]
pub struct RmNotMarkovDoc {
    pub name: String,
    pub truncation: usize,
    pub lookback_law: BTreeMap<u64, String>,
    pub residual: String,
}

#[derive(Debug, Serialize)]
pub struct RwBinsDoc {
    pub name: String,
    pub max_depth: usize,
    pub bin_cap: usize,
    pub retained_walk_mass: String,
    /// The first-level obstruction at increasing depths: for a process
    /// admitting a representation this stays bounded away from zero.
    pub collapse: Vec<CollapseDoc>,
}

#[derive(Debug, Serialize)]
pub struct CollapseDoc {
    pub depth: usize,
    pub value: String,
    pub witness: String,
}

pub fn cmd_examples_list() {
    for name in catalog::EXAMPLE_NAMES {
        let kind = match name {
            "rm-notMarkov" => "complete representation (simulation source)",
            "rwbins" => "bounded-depth conditional oracle",
            _ => "transition-row model",
        };
        println!("{name:>14}  {kind}");
    }
}

pub fn cmd_examples_build<S: Value>(
    name: &str,
    truncate: Option<usize>,
    out: Option<&Path>,
) -> Result<()> {
    match catalog::example::<S>(name, truncate)? {
        Example::Markov {
            model,
            truncation,
            retained_mass,
        } => {
            println!(
                "example {name}: alphabet {}, order {}, truncation {:?}, retained mass {}",
                model.alphabet().size(),
                model.order_m(),
                truncation,
                retained_mass.render()
            );
            write_json(out, &ModelDoc::from_model(&model))
        }
        Example::CompleteRmp(m) => {
            let doc = RmNotMarkovDoc {
                name: name.to_string(),
                truncation: m.k_max(),
                lookback_law: m
                    .lookback_law()
                    .into_iter()
                    .map(|(k, p)| (k, p.render()))
                    .collect(),
                residual: LookbackSource::residual(&m).render(),
            };
            write_json(out, &doc)
        }
        Example::Oracle(m) => {
            let depths: Vec<usize> = (1..=m.max_depth() / 2).map(|i| 2 * i).collect();
            let rows = demonstrate_collapse(&m, &depths)?;
            let doc = RwBinsDoc {
                name: name.to_string(),
                max_depth: m.max_depth(),
                bin_cap: m.bin_cap(),
                retained_walk_mass: m.retained_mass().render(),
                collapse: rows
                    .iter()
                    .map(|r| CollapseDoc {
                        depth: r.depth,
                        value: r.value.render(),
                        witness: r.witness.render(Process::alphabet(&m)),
                    })
                    .collect(),
            };
            write_json(out, &doc)
        }
    }
}

/// Writes a representation document.
pub fn write_representation<S: Value>(
    rep: &Representation<S>,
    tol: &S,
    out: Option<&Path>,
) -> Result<()> {
    write_json(out, &RepresentationDoc::from_representation(rep, tol))
}

/// Reads a representation document.
pub fn read_representation<S: Value>(path: &Path) -> Result<Representation<S>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
    let doc: RepresentationDoc = serde_json::from_str(&text)
        .map_err(|e| bad(format!("representation parse error in {}: {e}", path.display())))?;
    doc.to_representation()
}
