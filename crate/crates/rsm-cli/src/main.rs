//! `rsm` — construct, verify and simulate random-step Markov
//! representations of stationary processes.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use rsm_cli::commands::{self, ModelSource, SimSource, Variant};
use rsm_cli::json::parse_value;
use rsm_core::decompose::StopRule;
use rsm_core::determinize::IndexFamily;
use rsm_core::model::catalog;
use rsm_core::value::{Exact, Value};
use rsm_core::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Backend {
    /// Exact rational arithmetic.
    Exact,
    /// f64 with tolerance (default 1e-12).
    Float,
}

#[derive(Parser)]
#[command(
    name = "rsm",
    about = "Random-step Markov representations: decomposition, determinization, \
             ratio construction, verification and simulation",
    version
)]
struct Cli {
    /// Numeric backend for all arithmetic.
    #[arg(long, global = true, value_enum, default_value_t = Backend::Exact)]
    backend: Backend,

    /// Comparison tolerance (defaults: 0 exact, 1e-12 float).
    #[arg(long, global = true)]
    tolerance: Option<String>,

    /// Write the command's JSON artifact here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Variation and ratio coefficients of a model.
    Variations {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        example: Option<String>,
        /// Truncation parameter for catalog examples.
        #[arg(long)]
        truncate: Option<usize>,
        #[arg(long, default_value_t = 8)]
        k_max: usize,
        /// Scan depth (defaults to the model order).
        #[arg(long)]
        depth: Option<usize>,
    },
    /// Build a representation (variant a, b, or ratio).
    Decompose {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        example: Option<String>,
        #[arg(long)]
        truncate: Option<usize>,
        #[arg(long, default_value = "a")]
        variant: String,
        /// Halt once the residual falls below this value.
        #[arg(long)]
        residual_target: Option<String>,
        #[arg(long, default_value_t = 64)]
        k_max: usize,
        /// Ratio-variant probe depth for the decay certification.
        #[arg(long, default_value_t = 64)]
        probe_depth: usize,
        /// Scan all words instead of positive-probability words only.
        #[arg(long)]
        all_words: bool,
    },
    /// Build a representation from the ratio condition (alias of
    /// `decompose --variant ratio`).
    RatioDecompose {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        example: Option<String>,
        #[arg(long)]
        truncate: Option<usize>,
        /// Number of levels of the default mass sequence 2^-i.
        #[arg(long, default_value_t = 20)]
        k_max: usize,
        #[arg(long, default_value_t = 64)]
        probe_depth: usize,
    },
    /// Convert a representation to deterministic tables by digit expansion.
    Determinize {
        #[arg(long)]
        rep: PathBuf,
        #[arg(long, default_value = "balister")]
        family: String,
        #[arg(long, default_value_t = 40)]
        digit_depth: u32,
    },
    /// Check a representation against its model; nonzero exit on any
    /// violated invariant.
    Verify {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        example: Option<String>,
        #[arg(long)]
        truncate: Option<usize>,
        #[arg(long)]
        rep: PathBuf,
        #[arg(long)]
        depth: Option<usize>,
    },
    /// Sample a path from a representation or chain.
    Simulate {
        #[arg(long)]
        rep: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        example: Option<String>,
        #[arg(long)]
        truncate: Option<usize>,
        #[arg(long, default_value_t = 10_000)]
        length: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        burn_in: Option<u64>,
    },
    /// List or build the catalog examples.
    Examples {
        #[command(subcommand)]
        action: ExamplesCmd,
    },
}

#[derive(Subcommand)]
enum ExamplesCmd {
    List,
    Build {
        name: String,
        #[arg(long)]
        truncate: Option<usize>,
    },
}

fn model_source(
    model: Option<PathBuf>,
    example: Option<String>,
    truncate: Option<usize>,
) -> Result<ModelSource> {
    match (model, example) {
        (Some(path), None) => Ok(ModelSource::File(path)),
        (None, Some(name)) => Ok(ModelSource::Example { name, truncate }),
        _ => Err(rsm_core::Error::Unsupported(
            "give exactly one of --model or --example".into(),
        )),
    }
}

fn run<S: Value + Send + Sync>(cli: Cli) -> Result<()> {
    let tol: S = match &cli.tolerance {
        Some(t) => parse_value(t)?,
        None => S::default_tolerance(),
    };
    let out = cli.out.as_deref();

    match cli.cmd {
        Cmd::Variations {
            model,
            example,
            truncate,
            k_max,
            depth,
        } => {
            let rows = if example.as_deref() == Some("rwbins") {
                match catalog::example::<S>("rwbins", truncate)? {
                    catalog::Example::Oracle(oracle) => {
                        commands::cmd_variations(&oracle, k_max, depth)?
                    }
                    _ => unreachable!(),
                }
            } else {
                let loaded =
                    commands::load_markov::<S>(&model_source(model, example, truncate)?)?;
                commands::cmd_variations(&loaded.model, k_max, depth)?
            };
            commands::print_variations(&rows);
            if out.is_some() {
                commands::write_json(out, &rows)?;
            }
            Ok(())
        }
        Cmd::Decompose {
            model,
            example,
            truncate,
            variant,
            residual_target,
            k_max,
            probe_depth,
            all_words,
        } => {
            let loaded = commands::load_markov::<S>(&model_source(model, example, truncate)?)?;
            let variant = Variant::parse(&variant)?;
            let mut stop = StopRule::<S>::default();
            stop.k_max = k_max;
            stop.all_words = all_words;
            if let Some(rt) = &residual_target {
                stop.residual_target = parse_value(rt)?;
            }
            let rep = commands::cmd_decompose(&loaded.model, variant, &stop, probe_depth)?;
            commands::print_representation_summary(Some(&loaded.model), &rep, &tol);
            commands::write_representation(&rep, &tol, out)
        }
        Cmd::RatioDecompose {
            model,
            example,
            truncate,
            k_max,
            probe_depth,
        } => {
            let loaded = commands::load_markov::<S>(&model_source(model, example, truncate)?)?;
            let mut stop = StopRule::<S>::default();
            stop.k_max = k_max;
            let rep =
                commands::cmd_decompose(&loaded.model, Variant::Ratio, &stop, probe_depth)?;
            commands::print_representation_summary(Some(&loaded.model), &rep, &tol);
            commands::write_representation(&rep, &tol, out)
        }
        Cmd::Determinize {
            rep,
            family,
            digit_depth,
        } => {
            let base = commands::read_representation::<S>(&rep)?;
            let family = IndexFamily::parse(&family)?;
            let det = commands::cmd_determinize(&base, family, digit_depth, &tol)?;
            commands::write_representation(&det, &tol, out)
        }
        Cmd::Verify {
            model,
            example,
            truncate,
            rep,
            depth,
        } => {
            let loaded = commands::load_markov::<S>(&model_source(model, example, truncate)?)?;
            let rep = commands::read_representation::<S>(&rep)?;
            commands::cmd_verify(&loaded.model, &rep, depth)?;
            println!("all checks passed");
            Ok(())
        }
        Cmd::Simulate {
            rep,
            model,
            example,
            truncate,
            length,
            seed,
            burn_in,
        } => {
            let source: SimSource<S> = match (rep, model, &example) {
                (Some(path), None, None) => {
                    SimSource::Rep(commands::read_representation(&path)?)
                }
                (None, model, example) => {
                    if example.as_deref() == Some("rm-notMarkov") {
                        match catalog::example::<S>("rm-notMarkov", truncate)? {
                            catalog::Example::CompleteRmp(m) => SimSource::RmNotMarkov(m),
                            _ => unreachable!(),
                        }
                    } else {
                        SimSource::Markov(commands::load_markov(&model_source(
                            model,
                            example.clone(),
                            truncate,
                        )?)?)
                    }
                }
                _ => {
                    return Err(rsm_core::Error::Unsupported(
                        "give exactly one of --rep, --model, --example".into(),
                    ))
                }
            };
            let doc = commands::cmd_simulate(&source, length, seed, burn_in, &tol)?;
            if out.is_some() {
                commands::write_json(out, &doc)?;
            }
            Ok(())
        }
        Cmd::Examples { action } => match action {
            ExamplesCmd::List => {
                commands::cmd_examples_list();
                Ok(())
            }
            ExamplesCmd::Build { name, truncate } => {
                commands::cmd_examples_build::<S>(&name, truncate, out)
            }
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.backend {
        Backend::Exact => run::<Exact>(cli),
        Backend::Float => run::<f64>(cli),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
