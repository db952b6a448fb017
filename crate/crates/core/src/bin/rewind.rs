//! `rewind`: command-line front end for the library.
//!
//! Every command writes JSON (or a short text rendering) to stdout, or to the
//! file named by `--out`. Exit codes: 0 success, 1 the chain failed
//! validation, 2 an I/O or parse error, 3 the two states cannot be told
//! apart, 4 a size cap was exceeded, 5 the hidden state is neither `a` nor `b`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use markov_rewind::chain::{read_chain, validate, write_chain, ChainError, PoMarkovChain, StateId};
use markov_rewind::experiment::{
    decouple_experiment, example1_experiment, gap_experiment, identify_experiment, intro_experiment,
    reduction_experiment, DEFAULT_TRIALS,
};
use markov_rewind::partition::PartitionError;
use markov_rewind::plan::{plan_identification, PlanError, PlanSummary};
use markov_rewind::reduce::{reduce_to_canonical, reduce_to_canonical_with_alphabet, ReduceError};
use markov_rewind::simulate::{trial_seed, Verdict};
use markov_rewind::strategies::DEFAULT_REPETITIONS;

#[derive(Parser)]
#[command(name = "rewind", version, about = "State identification in partially observable Markov chains with rewinding")]
struct Cli {
    /// Master seed; every trial derives its own stream from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Include hidden states in per-trial records.
    #[arg(long, global = true)]
    reveal: bool,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Check row sums, entry ranges and the sink of a chain file.
    Validate { chain: PathBuf },
    /// Compute the identification plan for a pair of states.
    Plan {
        chain: PathBuf,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
    },
    /// Run the planner's identification procedure.
    Identify {
        chain: PathBuf,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        /// Fix the hidden start; by default trials alternate between a and b.
        #[arg(long)]
        hidden: Option<String>,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: u64,
    },
    /// Reproducible experiments on the built-in chains.
    #[command(subcommand)]
    Experiment(Experiment),
    /// Map a chain to a canonical one; writes the target chain to `--out`
    /// and the state map next to it.
    Reduce {
        chain: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        q: f64,
        /// Alphabet size; defaults to the symbols the chain uses.
        #[arg(long)]
        k: Option<usize>,
    },
}

#[derive(Subcommand)]
enum Experiment {
    /// One step then sibling draws on the five-state chain.
    Intro {
        #[arg(long, default_value_t = 7)]
        siblings: usize,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: u64,
    },
    /// Nested tester vs path strategy on the 1/d chain.
    Example1 {
        #[arg(long, value_delimiter = ',', default_values_t = [8, 16, 32])]
        d: Vec<u32>,
        #[arg(long, default_value_t = DEFAULT_REPETITIONS)]
        repetitions: usize,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: u64,
    },
    /// Adaptive path-length algorithm on the gap chain.
    Gap {
        #[arg(long, default_value_t = 6)]
        n: usize,
        #[arg(long, default_value_t = 8)]
        d: u32,
        #[arg(long, default_value_t = 600)]
        paths: usize,
        #[arg(long, default_value_t = 3)]
        t: usize,
        #[arg(long, default_value_t = 200)]
        trials: u64,
    },
    /// Decoupling frequency of the gap chain against its bounds.
    Decouple {
        #[arg(long, default_value_t = 5)]
        n: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [2, 4])]
        d: Vec<u32>,
        #[arg(long, value_delimiter = ',', default_values_t = [4, 8, 16])]
        k: Vec<u64>,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
    },
    /// Source vs emulated success through the canonical reduction.
    Reduction {
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
    },
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl From<ChainError> for Failure {
    fn from(e: ChainError) -> Self {
        Failure::new(2, e.to_string())
    }
}

impl From<PlanError> for Failure {
    fn from(e: PlanError) -> Self {
        let code = match &e {
            PlanError::Indistinguishable(..) => 3,
            PlanError::CapExceeded { .. } | PlanError::TooLarge { .. } => 4,
            PlanError::Partition(PartitionError::NotCanonical) => 1,
            _ => 2,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<ReduceError> for Failure {
    fn from(e: ReduceError) -> Self {
        Failure::new(2, e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::new(2, e.to_string())
    }
}

fn load_valid(path: &Path) -> Result<PoMarkovChain, Failure> {
    let chain = read_chain(path)?;
    let report = validate(&chain);
    if !report.ok() {
        let lines: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
        return Err(Failure::new(1, format!("{}: {}", path.display(), lines.join("; "))));
    }
    Ok(chain)
}

fn state(chain: &PoMarkovChain, label: &str) -> Result<StateId, Failure> {
    Ok(chain.state(label)?)
}

fn render(value: &Value, format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(value).expect("values serialize"),
        Format::Text => {
            let mut out = String::new();
            text_lines(value, "", &mut out);
            out
        }
    }
}

fn text_lines(value: &Value, prefix: &str, out: &mut String) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                text_lines(v, &key, out);
            }
        }
        Value::Array(items) if items.iter().any(|v| v.is_object() || v.is_array()) => {
            for (i, v) in items.iter().enumerate() {
                text_lines(v, &format!("{prefix}[{i}]"), out);
            }
        }
        other => out.push_str(&format!("{prefix}: {other}\n")),
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("values serialize")
}

fn emit(cli: &Cli, value: &Value) -> Result<(), Failure> {
    let mut text = render(value, cli.format);
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match &cli.out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<u8, Failure> {
    match &cli.command {
        Command::Validate { chain } => {
            let c = read_chain(chain)?;
            let report = validate(&c);
            emit(
                cli,
                &json!({
                    "chain": c.name(),
                    "states": c.n(),
                    "ok": report.ok(),
                    "violations": report.violations,
                    "canonical_sink": markov_rewind::chain::is_canonical(&c).map(|s| c.label(s).to_string()),
                }),
            )?;
            Ok(if report.ok() { 0 } else { 1 })
        }
        Command::Plan { chain, a, b } => {
            let c = load_valid(chain)?;
            let plan = plan_identification(&c, state(&c, a)?, state(&c, b)?)?;
            emit(cli, &to_value(&PlanSummary::new(&c, &plan)))?;
            Ok(0)
        }
        Command::Identify {
            chain,
            a,
            b,
            hidden,
            trials,
        } => {
            let c = load_valid(chain)?;
            let (ia, ib) = (state(&c, a)?, state(&c, b)?);
            let hidden = match hidden {
                None => None,
                Some(h) => {
                    let x = state(&c, h)?;
                    if x != ia && x != ib {
                        return Err(Failure::new(5, format!("hidden state `{h}` is neither `{a}` nor `{b}`")));
                    }
                    Some(x)
                }
            };
            let mut report = identify_experiment(&c, ia, ib, hidden, *trials, cli.seed)?;
            if cli.reveal {
                let plan = plan_identification(&c, ia, ib)?;
                report.records = (0..*trials)
                    .map(|i| {
                        let x0 = hidden.unwrap_or(if i % 2 == 0 { ia } else { ib });
                        let seed = trial_seed(cli.seed, i);
                        let o = plan.identify(&c, x0, seed);
                        json!({
                            "trial": i,
                            "seed": seed,
                            "hidden": c.label(x0),
                            "verdict": match o.verdict {
                                Verdict::State(s) => Some(c.label(s)),
                                Verdict::Abstain => None,
                            },
                            "queries": o.queries,
                            "sampled_nodes": o.sampled_nodes,
                        })
                    })
                    .collect();
            }
            emit(cli, &to_value(&report))?;
            Ok(0)
        }
        Command::Experiment(e) => {
            let seed = cli.seed;
            let report = match e {
                Experiment::Intro { siblings, trials } => intro_experiment(*siblings, *trials, seed),
                Experiment::Example1 { d, repetitions, trials } => example1_experiment(d, *repetitions, *trials, seed),
                Experiment::Gap { n, d, paths, t, trials } => {
                    gap_experiment(*n, *d, *paths, *t, *trials, seed).map_err(|e| Failure::new(2, e.to_string()))?
                }
                Experiment::Decouple { n, d, k, trials } => decouple_experiment(*n, d, k, *trials, seed),
                Experiment::Reduction { trials } => reduction_experiment(*trials, seed)?,
            };
            emit(cli, &to_value(&report))?;
            Ok(0)
        }
        Command::Reduce { chain, q, k } => {
            let c = load_valid(chain)?;
            let r = match k {
                Some(k) => reduce_to_canonical_with_alphabet(&c, *q, *k)?,
                None => reduce_to_canonical(&c, *q)?,
            };
            let summary = json!({
                "source": c.name(),
                "source_states": c.n(),
                "target_states": r.target.n(),
                "alphabet": r.k,
                "q": r.q,
            });
            match &cli.out {
                Some(path) => {
                    write_chain(&r.target, path)?;
                    let sidecar = path.with_extension("phi.json");
                    fs::write(&sidecar, serde_json::to_string_pretty(&r.phi_map()).expect("values serialize"))?;
                    eprintln!("{}", render(&summary, cli.format).trim_end());
                }
                None => emit(cli, &json!({ "summary": summary, "phi": to_value(&r.phi_map()) }))?,
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("rewind: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
