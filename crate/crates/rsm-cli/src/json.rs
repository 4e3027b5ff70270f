//! File formats.
//!
//! All numeric values travel as strings: `"p/q"` for exact rationals,
//! decimal for floats — both backends read either form, the exact backend
//! without loss (decimals parse as `digits/10^k`).

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use rsm_core::decompose::{
    LevelDiagnostics, RepKind, Representation, TableAssignment, TableFunction,
};
use rsm_core::measure::{Distribution, StationaryWordMeasure};
use rsm_core::model::{MarkovModel, Process};
use rsm_core::value::{Exact, Value};
use rsm_core::words::{Alphabet, Word};
use rsm_core::{Error, Result};

fn bad(msg: impl Into<String>) -> Error {
    Error::Unsupported(msg.into())
}

use std::string::String;

/// Parses `"p/q"`, integers, and (scientific) decimals.
pub fn parse_value<S: Value>(text: &str) -> Result<S> {
    let t = text.trim();
    if let Some((p, q)) = t.split_once('/') {
        let num: BigInt = p
            .trim()
            .parse()
            .map_err(|_| bad(format!("bad rational `{t}`")))?;
        let den: BigInt = q
            .trim()
            .parse()
            .map_err(|_| bad(format!("bad rational `{t}`")))?;
        if den == BigInt::from(0) {
            return Err(bad(format!("zero denominator in `{t}`")));
        }
        return Ok(S::from_exact(&Ratio::new(num, den)));
    }
    if S::EXACT {
        parse_decimal_exact(t).map(|r| S::from_exact(&r))
    } else {
        let v: f64 = t
            .parse()
            .map_err(|_| bad(format!("bad number `{t}`")))?;
        Ok(S::from_f64_lossy(v))
    }
}

/// Exact decimal parsing: `-12.345e-6` → a big rational, no rounding.
pub fn parse_decimal_exact(t: &str) -> Result<Exact> {
    let (mantissa, exp10) = match t.to_ascii_lowercase().split_once('e') {
        Some((m, e)) => {
            let e: i32 = e
                .parse()
                .map_err(|_| bad(format!("bad exponent in `{t}`")))?;
            (m.to_string(), e)
        }
        None => (t.to_string(), 0),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((i, f)) => (i.to_string(), f.to_string()),
        None => (mantissa.clone(), String::new()),
    };
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = digits
        .parse()
        .map_err(|_| bad(format!("bad number `{t}`")))?;
    let shift = frac_part.len() as i32 - exp10;
    let ten = BigInt::from(10);
    let mut value = Ratio::from_integer(numer);
    if shift > 0 {
        value /= Ratio::from_integer(ten.pow(shift as u32));
    } else if shift < 0 {
        value *= Ratio::from_integer(ten.pow((-shift) as u32));
    }
    Ok(value)
}

/// Model file: a finite-order chain given by its transition rows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelDoc {
    pub alphabet: Vec<String>,
    pub order: usize,
    /// Row per order-word (comma-separated labels, most recent first);
    /// for order 0 the single key is the empty string.
    pub rows: BTreeMap<String, Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dominating: Option<Vec<String>>,
}

impl ModelDoc {
    pub fn from_model<S: Value>(model: &MarkovModel<S>) -> Self {
        let alphabet = model.alphabet().labels().to_vec();
        let mut rows = BTreeMap::new();
        for (w, d) in model.rows() {
            rows.insert(
                w.render(model.alphabet()),
                d.mass().iter().map(|v| v.render()).collect(),
            );
        }
        ModelDoc {
            alphabet,
            order: model.order_m(),
            rows,
            dominating: model
                .dominating()
                .map(|mu| mu.iter().map(|v| v.render()).collect()),
        }
    }

    pub fn to_model<S: Value>(&self) -> Result<MarkovModel<S>> {
        let alphabet = Alphabet::new(self.alphabet.clone())?;
        let tol = S::default_tolerance();
        let mut rows = BTreeMap::new();
        for (key, probs) in &self.rows {
            let w = Word::parse(key, &alphabet)?;
            let mass: Result<Vec<S>> = probs.iter().map(|p| parse_value(p)).collect();
            rows.insert(w, Distribution::new(mass?, &tol)?);
        }
        let model = MarkovModel::new(alphabet, self.order, rows)?;
        match &self.dominating {
            Some(mu) => {
                let mu: Result<Vec<S>> = mu.iter().map(|v| parse_value(v)).collect();
                Ok(model.with_dominating(mu?))
            }
            None => Ok(model),
        }
    }
}

/// Representation file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepresentationDoc {
    pub alphabet: Vec<String>,
    pub levels: Vec<LevelDoc>,
    pub residual: String,
    pub deterministic: bool,
    pub expected_lookback: String,
    /// Whether the residual is below the writer's tolerance.
    pub complete: bool,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index_function: Option<IndexFunctionDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<DiagnosticsDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelDoc {
    /// Look-back distance `n_k`.
    pub n: u64,
    /// Dependence depth of the table keys.
    pub depth: usize,
    /// Level mass `p_k`.
    pub p: String,
    pub table: TableDoc,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TableDoc {
    /// word → symbol label
    Deterministic(BTreeMap<String, String>),
    /// word → distribution over symbols
    General(BTreeMap<String, Vec<String>>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IndexFunctionDoc {
    pub family: String,
    pub digit_depth: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnosticsDoc {
    pub r: String,
    pub var: String,
    pub witness: String,
    pub gamma: String,
    pub m: usize,
}

impl RepresentationDoc {
    pub fn from_representation<S: Value>(rep: &Representation<S>, tol: &S) -> Self {
        let a = &rep.alphabet;
        let levels = rep
            .levels
            .iter()
            .map(|l| {
                let table = match &l.assignment {
                    TableAssignment::Deterministic(map) => TableDoc::Deterministic(
                        map.iter()
                            .map(|(w, s)| (w.render(a), a.label(*s as usize).to_string()))
                            .collect(),
                    ),
                    TableAssignment::General(map) => TableDoc::General(
                        map.iter()
                            .map(|(w, d)| {
                                (
                                    w.render(a),
                                    d.mass().iter().map(|v| v.render()).collect(),
                                )
                            })
                            .collect(),
                    ),
                };
                LevelDoc {
                    n: l.lookback,
                    depth: l.depth,
                    p: l.mass.render(),
                    table,
                }
            })
            .collect();
        let (e, complete) = rep.expected_lookback(tol);
        let (kind, index_function) = match &rep.kind {
            RepKind::GeneralVariant => ("general-variant".to_string(), None),
            RepKind::FiniteExpectationVariant => {
                ("finite-expectation-variant".to_string(), None)
            }
            RepKind::RatioConstruction => ("ratio-construction".to_string(), None),
            RepKind::Determinized {
                family,
                digit_depth,
            } => (
                "determinized".to_string(),
                Some(IndexFunctionDoc {
                    family: family.to_string(),
                    digit_depth: *digit_depth,
                }),
            ),
            RepKind::Manual => ("manual".to_string(), None),
        };
        RepresentationDoc {
            alphabet: a.labels().to_vec(),
            levels,
            residual: rep.residual.render(),
            deterministic: rep.deterministic,
            expected_lookback: e.render(),
            complete,
            kind,
            index_function,
            diagnostics: rep
                .diagnostics
                .iter()
                .map(|d: &LevelDiagnostics<S>| DiagnosticsDoc {
                    r: d.r.render(),
                    var: d.var_at_level.render(),
                    witness: d.witness.render(a),
                    gamma: d.gamma.render(),
                    m: d.m_cut,
                })
                .collect(),
            seed: rep.seed_word.as_ref().map(|w| w.render(a)),
        }
    }

    pub fn to_representation<S: Value>(&self) -> Result<Representation<S>> {
        let alphabet = Alphabet::new(self.alphabet.clone())?;
        let tol = S::default_tolerance();
        let mut levels = Vec::with_capacity(self.levels.len());
        for l in &self.levels {
            let assignment = match &l.table {
                TableDoc::Deterministic(map) => {
                    let mut out = BTreeMap::new();
                    for (k, label) in map {
                        let w = Word::parse(k, &alphabet)?;
                        let sym = alphabet
                            .index_of(label)
                            .ok_or_else(|| bad(format!("unknown symbol `{label}`")))?;
                        out.insert(w, sym as u16);
                    }
                    TableAssignment::Deterministic(out)
                }
                TableDoc::General(map) => {
                    let mut out = BTreeMap::new();
                    for (k, probs) in map {
                        let w = Word::parse(k, &alphabet)?;
                        let mass: Result<Vec<S>> =
                            probs.iter().map(|p| parse_value(p)).collect();
                        out.insert(w, Distribution::new(mass?, &tol)?);
                    }
                    TableAssignment::General(out)
                }
            };
            levels.push(TableFunction {
                lookback: l.n,
                depth: l.depth,
                mass: parse_value(&l.p)?,
                assignment,
            });
        }
        let kind = match (self.kind.as_str(), &self.index_function) {
            ("general-variant", _) => RepKind::GeneralVariant,
            ("finite-expectation-variant", _) => RepKind::FiniteExpectationVariant,
            ("ratio-construction", _) => RepKind::RatioConstruction,
            ("determinized", Some(ixf)) => RepKind::Determinized {
                family: match ixf.family.as_str() {
                    "prime" => "prime",
                    _ => "balister",
                },
                digit_depth: ixf.digit_depth,
            },
            _ => RepKind::Manual,
        };
        let seed = match &self.seed {
            Some(s) => Some(Word::parse(s, &alphabet)?),
            None => None,
        };
        Ok(Representation {
            alphabet,
            levels,
            residual: parse_value(&self.residual)?,
            deterministic: self.deterministic,
            kind,
            diagnostics: Vec::new(),
            seed_word: seed,
        })
    }
}

/// Word-measure file (distributions are the depth-1 case).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasureDoc {
    pub alphabet: Vec<String>,
    pub depth: usize,
    pub mass: BTreeMap<String, String>,
}

impl MeasureDoc {
    pub fn from_measure<S: Value>(mu: &StationaryWordMeasure<S>) -> Self {
        MeasureDoc {
            alphabet: mu.alphabet().labels().to_vec(),
            depth: mu.depth(),
            mass: mu
                .support()
                .map(|(w, v)| (w.render(mu.alphabet()), v.render()))
                .collect(),
        }
    }

    pub fn to_measure<S: Value>(&self) -> Result<StationaryWordMeasure<S>> {
        let alphabet = Alphabet::new(self.alphabet.clone())?;
        let mut mass = BTreeMap::new();
        for (k, v) in &self.mass {
            mass.insert(Word::parse(k, &alphabet)?, parse_value::<S>(v)?);
        }
        StationaryWordMeasure::new(alphabet, self.depth, mass)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rsm_core::decompose::{decompose, StopRule};
    use rsm_core::model::catalog;

    #[test]
    fn parse_values_exactly() {
        let v: Exact = parse_value("9/10").unwrap();
        assert_eq!(v, Exact::ratio(9, 10));
        let v: Exact = parse_value("0.9").unwrap();
        assert_eq!(v, Exact::ratio(9, 10));
        let v: Exact = parse_value("1e-9").unwrap();
        assert_eq!(v, Exact::ratio(1, 1_000_000_000));
        let v: Exact = parse_value("-2.5e1").unwrap();
        assert_eq!(v, Exact::ratio(-25, 1));
        let v: f64 = parse_value("0.9").unwrap();
        assert!((v - 0.9).abs() < 1e-15);
        let v: f64 = parse_value("9/10").unwrap();
        assert!((v - 0.9).abs() < 1e-15);
        assert!(parse_value::<Exact>("x").is_err());
        assert!(parse_value::<Exact>("1/0").is_err());
    }

    #[test]
    fn model_round_trip() {
        let m = catalog::two_state::<Exact>().unwrap();
        let doc = ModelDoc::from_model(&m);
        let text = serde_json::to_string_pretty(&doc).unwrap();
        let back: ModelDoc = serde_json::from_str(&text).unwrap();
        let m2 = back.to_model::<Exact>().unwrap();
        assert_eq!(m.rows(), m2.rows());
    }

    #[test]
    fn representation_round_trip() {
        let m = catalog::two_state::<Exact>().unwrap();
        let rep = decompose(&m, &StopRule::default()).unwrap();
        let doc = RepresentationDoc::from_representation(&rep, &Exact::default_tolerance());
        let text = serde_json::to_string_pretty(&doc).unwrap();
        let back: RepresentationDoc = serde_json::from_str(&text).unwrap();
        let rep2 = back.to_representation::<Exact>().unwrap();
        assert_eq!(rep.residual, rep2.residual);
        assert_eq!(rep.levels.len(), rep2.levels.len());
        for (a, b) in rep.levels.iter().zip(rep2.levels.iter()) {
            assert_eq!(a.lookback, b.lookback);
            assert_eq!(a.mass, b.mass);
            assert_eq!(a.assignment, b.assignment);
        }
    }
}
