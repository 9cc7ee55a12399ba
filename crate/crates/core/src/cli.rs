//! The `forkcheck` command line.
//!
//! Exit codes: 0 pass, 1 fail, 2 inconclusive, 3 malformed input or usage
//! error. `generate` and `simulate` exit 0 on success.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::check::{
    check_fork_sequential_consistency, check_sequential_consistency, check_wait_freedom,
    CheckError, Outcome, SearchBudget,
};
use crate::explain::explain;
use crate::history::ClientId;
use crate::report::{Property, Report};
use crate::scenarios::{generate, scenario_spec, ScenarioKind, ScenarioParams};
use crate::sim::{run_simulation, SimConfig};
use crate::trace::{TraceFile, TraceHeader, TraceSource};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_MALFORMED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "forkcheck", version, about = "Consistency checks for register histories")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct BudgetArgs {
    /// Largest number of operations searched.
    #[arg(long, default_value_t = SearchBudget::default().max_ops)]
    pub max_ops: usize,
    /// Largest number of extensions tried.
    #[arg(long, default_value_t = SearchBudget::default().max_extensions)]
    pub max_extensions: usize,
    /// Search nodes over all extensions.
    #[arg(long, default_value_t = SearchBudget::default().max_nodes)]
    pub max_nodes: u64,
}

impl BudgetArgs {
    fn budget(&self) -> SearchBudget {
        SearchBudget {
            max_ops: self.max_ops,
            max_extensions: self.max_extensions,
            max_nodes: self.max_nodes,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ScenarioArg {
    Alpha,
    Beta,
    Gamma,
}

impl From<ScenarioArg> for ScenarioKind {
    fn from(a: ScenarioArg) -> Self {
        match a {
            ScenarioArg::Alpha => ScenarioKind::Alpha,
            ScenarioArg::Beta => ScenarioKind::Beta,
            ScenarioArg::Gamma => ScenarioKind::Gamma,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide a property of a trace.
    Check {
        trace: PathBuf,
        #[arg(long, value_enum)]
        property: Property,
        /// Clients assumed correct for wf (default: every client in the trace).
        #[arg(long, value_delimiter = ',')]
        correct: Vec<u32>,
        #[command(flatten)]
        budget: BudgetArgs,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Write the trace of one attack execution.
    Generate {
        #[arg(value_enum)]
        scenario: ScenarioArg,
        #[arg(long)]
        z: u32,
        #[arg(long, default_value_t = 1)]
        l: u32,
        /// Output file (default: standard output).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a simulation config and write its trace.
    Simulate {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Walk through why a property fails on a trace.
    Explain {
        trace: PathBuf,
        #[arg(long, value_enum)]
        property: Property,
        #[arg(long, value_delimiter = ',')]
        correct: Vec<u32>,
        #[command(flatten)]
        budget: BudgetArgs,
    },
}

fn exit_for(o: Outcome) -> i32 {
    match o {
        Outcome::Pass => EXIT_PASS,
        Outcome::Fail => EXIT_FAIL,
        Outcome::Inconclusive => EXIT_INCONCLUSIVE,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_MALFORMED
            } else {
                let _ = write!(out, "{text}");
                EXIT_PASS
            };
        }
    };
    let result = match cli.command {
        Command::Check {
            trace,
            property,
            correct,
            budget,
            json,
        } => cmd_check(&trace, property, &correct, &budget.budget(), json, out),
        Command::Generate { scenario, z, l, out: path } => {
            cmd_generate(scenario.into(), z, l, path.as_deref(), out)
        }
        Command::Simulate { config, out: path } => cmd_simulate(&config, path.as_deref(), out),
        Command::Explain {
            trace,
            property,
            correct,
            budget,
        } => cmd_explain(&trace, property, &correct, &budget.budget(), out),
    };
    match result {
        Ok(code) => code,
        Err(message) => {
            let _ = writeln!(err, "error: {message}");
            EXIT_MALFORMED
        }
    }
}

fn load_trace(path: &Path) -> Result<TraceFile, String> {
    let text =
        std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    TraceFile::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn correct_set(trace: &TraceFile, correct: &[u32]) -> BTreeSet<ClientId> {
    if correct.is_empty() {
        trace.history.clients()
    } else {
        correct.iter().map(|c| ClientId(*c)).collect()
    }
}

fn io_err(e: std::io::Error) -> String {
    format!("write failed: {e}")
}

fn check_err(e: CheckError) -> String {
    e.to_string()
}

pub fn cmd_check(
    trace: &Path,
    property: Property,
    correct: &[u32],
    budget: &SearchBudget,
    json: bool,
    out: &mut dyn Write,
) -> Result<i32, String> {
    let t = load_trace(trace)?;
    let spec = t.header.spec();
    let report = match property {
        Property::Sc => {
            Report::from_sc(&check_sequential_consistency(&t.history, &spec, budget).map_err(check_err)?)
        }
        Property::Fsc => Report::from_fsc(
            &check_fork_sequential_consistency(&t.history, &spec, budget).map_err(check_err)?,
        ),
        Property::Wf => {
            let c = correct_set(&t, correct);
            Report::from_wf(&check_wait_freedom(&t.history, &c), &c)
        }
    };
    if json {
        writeln!(out, "{}", report.to_json()).map_err(io_err)?;
    } else {
        write!(out, "{}", report.pretty()).map_err(io_err)?;
    }
    Ok(exit_for(report.outcome))
}

fn write_output(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<(), String> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("cannot write {}: {e}", p.display())),
        None => out.write_all(text.as_bytes()).map_err(io_err),
    }
}

/// Trace of a generated scenario, with the timing assumption in the header.
pub fn generated_trace(kind: ScenarioKind, p: &ScenarioParams) -> Result<TraceFile, String> {
    let h = generate(kind, p).map_err(|e| e.to_string())?;
    let comment = format!(
        "{} with z = {}, l = {}; w_1 completes as under one request/reply round trip per \
         operation, its request held until r_2^{} returns",
        format!("{kind:?}").to_lowercase(),
        p.z,
        p.l,
        match kind {
            ScenarioKind::Beta => p.z - 2,
            _ => p.z - 1,
        }
    );
    Ok(TraceFile::new(
        TraceHeader::new(&scenario_spec(), TraceSource::Generated, comment),
        h,
    ))
}

pub fn cmd_generate(
    kind: ScenarioKind,
    z: u32,
    l: u32,
    path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<i32, String> {
    let p = ScenarioParams::new(z, l).map_err(|e| e.to_string())?;
    let t = generated_trace(kind, &p)?;
    write_output(path, &t.emit(), out)?;
    Ok(EXIT_PASS)
}

pub fn simulated_trace(cfg: &SimConfig) -> Result<TraceFile, String> {
    let r = run_simulation(cfg).map_err(|e| e.to_string())?;
    let dangling = r.delivered.iter().filter(|d| d.dangling).count()
        + r.undelivered.iter().filter(|(_, d)| *d).count();
    let mut comment = format!("halted: {}; steps: {}", r.halted, r.steps);
    if dangling > 0 {
        comment.push_str(&format!("; dangling delays: {dangling}"));
    }
    if let Some(c) = &cfg.comment {
        comment.push_str("; ");
        comment.push_str(c);
    }
    Ok(TraceFile::new(
        TraceHeader::new(&cfg.register_spec(), TraceSource::Simulated, comment),
        r.history,
    ))
}

pub fn cmd_simulate(config: &Path, path: Option<&Path>, out: &mut dyn Write) -> Result<i32, String> {
    let text = std::fs::read_to_string(config)
        .map_err(|e| format!("cannot read {}: {e}", config.display()))?;
    let cfg = SimConfig::from_json(&text).map_err(|e| e.to_string())?;
    let t = simulated_trace(&cfg)?;
    write_output(path, &t.emit(), out)?;
    Ok(EXIT_PASS)
}

pub fn cmd_explain(
    trace: &Path,
    property: Property,
    correct: &[u32],
    budget: &SearchBudget,
    out: &mut dyn Write,
) -> Result<i32, String> {
    let t = load_trace(trace)?;
    let c = correct_set(&t, correct);
    let e = explain(&t.history, &t.header.spec(), property, &c, budget).map_err(check_err)?;
    write!(out, "{}", e.text()).map_err(io_err)?;
    Ok(exit_for(e.outcome))
}
