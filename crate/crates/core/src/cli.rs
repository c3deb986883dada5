//! Command-line front end for the `zxforge` binary.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::circuits::{self, CircuitError, GateList};
use crate::diagram::{Diagram, DiagramError};
use crate::explore::{self, ExploreError, Identity, Limits, State, StateSpace};
use crate::ltl::{self, LtlError};
use crate::rule::{builtin_rules, HVariant, RuleSet, RuleSetError, DEFAULT_RULES};
use crate::tensor::{equal_up_to_scalar, tensor, TensorError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_LIMIT: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Diagram(#[from] DiagramError),

    #[error(transparent)]
    Circuit(#[from] CircuitError),

    #[error(transparent)]
    RuleSet(#[from] RuleSetError),

    #[error(transparent)]
    Explore(#[from] ExploreError),

    #[error(transparent)]
    Ltl(#[from] LtlError),

    #[error(transparent)]
    Tensor(#[from] TensorError),

    #[error("{0}")]
    Limit(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Limit(_) | CliError::Tensor(TensorError::TooLarge { .. }) => EXIT_LIMIT,
            CliError::Ltl(LtlError::NonExhaustive) | CliError::Explore(ExploreError::NonExhaustive) => EXIT_LIMIT,
            CliError::Explore(ExploreError::Match(crate::matcher::MatchError::TooMany { .. })) => EXIT_LIMIT,
            _ => EXIT_USAGE,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "zxforge", version, about = "Exhaustive rewriting and model checking for ZX/ZH diagrams")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a benchmark diagram.
    Build(BuildArgs),
    /// Explore the rewrite state space of a diagram.
    Explore(ExploreArgs),
    /// Model-check an LTL formula against a saved state space.
    Check(CheckArgs),
    /// Follow the first successor until no rule applies.
    Simplify(SimplifyArgs),
    /// Print the linear map of a diagram.
    Tensor(TensorArgs),
    /// Compare two diagrams up to a global scalar.
    Equiv(EquivArgs),
    /// Convert a saved state space to dot.
    ExportDot(ExportDotArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Builder {
    Ghz,
    Teleport,
    Qft2,
    Kn,
    Pauli,
    Gates,
}

#[derive(Args, Debug)]
pub struct BuildArgs {
    pub builder: Builder,
    /// Qubit or vertex count for ghz and kn.
    #[arg(long)]
    pub n: Option<usize>,
    /// Teleportation measurement outcomes.
    #[arg(long, default_value_t = 0)]
    pub a: u8,
    #[arg(long, default_value_t = 0)]
    pub b: u8,
    /// Gate-list file for the `gates` builder.
    #[arg(long)]
    pub file: Option<PathBuf>,
    /// Output file; the diagram goes to stdout when absent.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum HChoice {
    AllH,
    Toggle,
}

#[derive(Args, Debug, Clone)]
pub struct RuleArgs {
    /// Comma-separated catalogue rules, in priority order.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_RULES.iter().map(|s| s.to_string()).collect::<Vec<_>>())]
    pub rules: Vec<String>,
    /// Extra rule files.
    #[arg(long = "rule-file")]
    pub rule_files: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = HChoice::AllH)]
    pub h_variant: HChoice,
    /// Budget `name=int`; a catalogue rule of that name is added if missing.
    #[arg(long = "budget", value_parser = parse_budget)]
    pub budgets: Vec<(String, i64)>,
    /// Initial token list; rules named by a token are gated on it.
    #[arg(long, value_delimiter = ',')]
    pub tokens: Vec<String>,
    /// Identify states up to boundary renaming.
    #[arg(long)]
    pub anonymous_boundaries: bool,
}

fn parse_budget(s: &str) -> Result<(String, i64), String> {
    let (name, v) = s.split_once('=').ok_or_else(|| format!("expected name=int, got {s:?}"))?;
    let v: i64 = v.trim().parse().map_err(|_| format!("budget {name:?} is not an integer"))?;
    Ok((name.trim().to_string(), v))
}

#[derive(Args, Debug)]
pub struct ExploreArgs {
    pub diagram: PathBuf,
    #[command(flatten)]
    pub rules: RuleArgs,
    #[arg(long, default_value_t = 1_000_000)]
    pub max_states: usize,
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long, env = "ZXFORGE_THREADS", default_value_t = 1)]
    pub threads: usize,
    /// Structured state-space output.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub dot: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    pub space: PathBuf,
    pub formula: String,
}

#[derive(Args, Debug)]
pub struct SimplifyArgs {
    pub diagram: PathBuf,
    #[command(flatten)]
    pub rules: RuleArgs,
    #[arg(long, default_value_t = 100_000)]
    pub max_steps: usize,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TensorArgs {
    pub diagram: PathBuf,
    /// Boundaries (in name order) that index rows; defaults to half.
    #[arg(long)]
    pub row_bits: Option<usize>,
}

#[derive(Args, Debug)]
pub struct EquivArgs {
    pub first: PathBuf,
    pub second: PathBuf,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}

#[derive(Args, Debug)]
pub struct ExportDotArgs {
    pub space: PathBuf,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn load_diagram(path: &Path) -> Result<Diagram, CliError> {
    Ok(Diagram::from_json(&read(path)?)?)
}

fn load_space(path: &Path) -> Result<StateSpace, CliError> {
    Ok(StateSpace::from_json(&read(path)?)?)
}

/// Rule set, initial budgets and tokens described by the flags.
pub fn rule_set(args: &RuleArgs) -> Result<RuleSet, CliError> {
    let h = match args.h_variant {
        HChoice::AllH => HVariant::AllH,
        HChoice::Toggle => HVariant::Toggle,
    };
    let names: Vec<&str> = args.rules.iter().map(String::as_str).filter(|s| !s.is_empty()).collect();
    let mut rs = RuleSet::select(&names, h)?;
    for path in &args.rule_files {
        rs.push_rule_text(&read(path)?)?;
    }
    for (name, v) in &args.budgets {
        if rs.entry(name).is_none() {
            if let Some(e) = builtin_rules().entry(name) {
                rs.push(e.clone())?;
            }
        }
        rs.set_budget(name, *v)?;
    }
    for t in &args.tokens {
        if rs.entry(t).is_some() {
            rs.set_token(t, t)?;
        }
    }
    Ok(rs)
}

fn initial_state(d: &Diagram, rs: &RuleSet, args: &RuleArgs) -> State {
    let identity = if args.anonymous_boundaries { Identity::AnonymousBoundaries } else { Identity::Labelled };
    State::with_identity(d, rs.initial_budgets(), args.tokens.clone(), identity)
}

fn line(out: &mut dyn std::io::Write, s: impl std::fmt::Display) {
    let _ = writeln!(out, "{s}");
}

/// Runs a parsed command, writing normal output to `out`. Returns the exit
/// code for successful runs.
pub fn run(cli: Cli, out: &mut dyn std::io::Write) -> Result<i32, CliError> {
    match cli.command {
        Command::Build(a) => {
            let need_n = |b: &str| a.n.ok_or_else(|| CliError::Usage(format!("{b} needs --n")));
            let d = match a.builder {
                Builder::Ghz => circuits::ghz(need_n("ghz")?)?,
                Builder::Teleport => circuits::teleportation(a.a, a.b)?,
                Builder::Qft2 => circuits::qft2(),
                Builder::Kn => circuits::kn_hadamard(need_n("kn")?),
                Builder::Pauli => circuits::pauli_pushing(),
                Builder::Gates => {
                    let path = a.file.as_ref().ok_or_else(|| CliError::Usage("gates needs --file".into()))?;
                    circuits::from_gates(&GateList::from_json(&read(path)?)?)?
                }
            };
            match &a.out {
                Some(p) => {
                    write(p, &d.to_json())?;
                    line(out, d.summary());
                }
                None => line(out, d.to_json()),
            }
            Ok(EXIT_OK)
        }
        Command::Explore(a) => {
            let d = load_diagram(&a.diagram)?;
            let rs = rule_set(&a.rules)?;
            let limits = Limits { max_states: a.max_states, max_depth: a.max_depth.unwrap_or(usize::MAX) };
            if a.threads == 0 {
                return Err(CliError::Usage("--threads must be at least 1".into()));
            }
            let sp = explore::explore(&rs, initial_state(&d, &rs, &a.rules), limits, a.threads)?;
            if let Some(p) = &a.out {
                write(p, &sp.to_json())?;
            }
            if let Some(p) = &a.dot {
                write(p, &sp.to_dot())?;
            }
            line(out, format!("{} states", sp.len()));
            line(out, format!("{} transitions", sp.transitions.len()));
            if sp.exhaustive {
                line(out, format!("{} final states", sp.final_ids().len()));
                Ok(EXIT_OK)
            } else {
                line(out, "truncated: a state or depth limit was hit");
                Err(CliError::Limit(format!("exploration stopped after {} states", sp.len())))
            }
        }
        Command::Check(a) => {
            let sp = load_space(&a.space)?;
            let f = ltl::parse_formula(&a.formula)?;
            let v = ltl::check(&sp, &f)?;
            let _ = write!(out, "{v}");
            Ok(if v.holds { EXIT_OK } else { EXIT_VIOLATED })
        }
        Command::Simplify(a) => {
            let d = load_diagram(&a.diagram)?;
            let rs = rule_set(&a.rules)?;
            let mut s = initial_state(&d, &rs, &a.rules);
            let mut steps = 0;
            loop {
                let next = explore::successors(&rs, &s)?;
                let Some((rule, t)) = next.into_iter().next() else { break };
                if steps == a.max_steps {
                    return Err(CliError::Limit(format!("no final state within {} steps", a.max_steps)));
                }
                steps += 1;
                line(out, format!("{steps}: {rule}"));
                s = t;
            }
            line(out, s.diagram().summary());
            if let Some(p) = &a.out {
                write(p, &s.diagram().to_json())?;
            }
            Ok(EXIT_OK)
        }
        Command::Tensor(a) => {
            let d = load_diagram(&a.diagram)?;
            let m = tensor(&d)?;
            let n = m.boundaries.len();
            let rows = a.row_bits.unwrap_or(n / 2);
            if rows > n {
                return Err(CliError::Usage(format!("--row-bits {rows} exceeds {n} boundaries")));
            }
            line(out, format!("boundaries: {}", m.boundaries.join(" ")));
            let _ = write!(out, "{}", m.render(rows));
            Ok(EXIT_OK)
        }
        Command::Equiv(a) => {
            let (d1, d2) = (load_diagram(&a.first)?, load_diagram(&a.second)?);
            let (m1, m2) = (tensor(&d1)?, tensor(&d2)?);
            if m1.boundaries != m2.boundaries {
                line(out, format!("DIFFER (boundaries {:?} vs {:?})", m1.boundaries, m2.boundaries));
                return Ok(EXIT_VIOLATED);
            }
            if equal_up_to_scalar(&m1, &m2, a.tol)? {
                line(out, "EQUIV");
                Ok(EXIT_OK)
            } else {
                line(out, "DIFFER");
                Ok(EXIT_VIOLATED)
            }
        }
        Command::ExportDot(a) => {
            let sp = load_space(&a.space)?;
            match &a.out {
                Some(p) => write(p, &sp.to_dot())?,
                None => {
                    let _ = write!(out, "{}", sp.to_dot());
                }
            }
            Ok(EXIT_OK)
        }
    }
}

/// Parses `args` and runs; returns the process exit code.
pub fn main_with<I, T>(args: I, out: &mut dyn std::io::Write, err: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = write!(err, "{e}");
            return code;
        }
    };
    match run(cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
