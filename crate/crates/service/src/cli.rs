//! The `cbaco` command line. [`run`] parses arguments, writes to the given
//! streams and returns the exit status: 0 on success, 1 when violations,
//! denials or violated duties were found, 2 on usage or input errors.

use std::ffi::OsString;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use cbaco_core::obligation::{DutyState, Event, SimulationState};
use cbaco_core::policy::{decide, validate, PolicyGraph, Verdict};
use cbaco_core::portgraph::LocatedGraph;
use cbaco_core::strategy::{eval_strategy, parse_strategy, EvalOptions};
use cbaco_core::workspace::{export_dot, export_json, load_simulation, query_duties, DutyFilter, DutyReport, ViewFilter};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use thiserror::Error;

use crate::session::rules;

#[derive(Debug, Parser)]
#[command(name = "cbaco", version, about = "Validate, query and simulate CBACO policies")]
struct Cli {
    /// Machine-readable output, and errors as JSON on stderr.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check that a policy is well-formed.
    Validate { policy: PathBuf },
    /// Decide whether a principal may perform an action on a resource.
    Query {
        policy: PathBuf,
        #[arg(long = "p")]
        principal: String,
        #[arg(long = "a")]
        action: String,
        #[arg(long = "r")]
        resource: String,
    },
    /// Replay events and report duties.
    Duties {
        policy: PathBuf,
        /// JSON lines, one event per line.
        #[arg(long)]
        events: Option<PathBuf>,
        #[arg(long)]
        principal: Option<String>,
        /// pending, fulfilled or violated.
        #[arg(long)]
        state: Option<String>,
    },
    /// Replay events, then run a strategy on the resulting graph.
    Simulate {
        policy: PathBuf,
        #[arg(long)]
        events: Option<PathBuf>,
        #[arg(long)]
        strategy: PathBuf,
        /// Pick matches at random from this seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Write the policy graph with its visual attributes.
    Export {
        policy: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// `all`, `authorization`, `obligation` or `attr=value,...` to hide.
        #[arg(long, default_value = "")]
        view: String,
    },
    /// Run the HTTP session service.
    Serve {
        #[arg(long, env = "CBACO_BIND", default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
        /// Restore sessions from this file and save them on shutdown.
        #[arg(long)]
        snapshot: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Dot,
    Json,
}

/// Input the command cannot work with; exit status 2.
#[derive(Debug, Error)]
enum CliError {
    #[error("{path}: {reason}")]
    Input { path: String, reason: String },
    #[error("{0}")]
    Other(String),
}

type Outcome = Result<bool, CliError>;

fn input(path: &Path, reason: impl ToString) -> CliError {
    CliError::Input { path: path.display().to_string(), reason: reason.to_string() }
}

fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| input(path, e))
}

fn load(path: &Path) -> Result<SimulationState, CliError> {
    load_simulation(&read_file(path)?).map_err(|e| input(path, e))
}

fn read_events(path: &Path) -> Result<Vec<Event>, CliError> {
    let text = String::from_utf8(read_file(path)?).map_err(|e| input(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| input(path, format!("line {}: {e}", i + 1))))
        .collect()
}

fn replay(policy: &Path, events: Option<&Path>) -> Result<SimulationState, CliError> {
    let mut sim = load(policy)?;
    if let Some(log) = events {
        for e in read_events(log)? {
            sim.inject_event(e).map_err(|e| input(log, e))?;
        }
    }
    Ok(sim)
}

/// Run the command line in `args` (program name first).
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    let json = cli.json;
    match dispatch(cli, out) {
        Ok(clean) => i32::from(!clean),
        Err(e) => {
            let _ = if json {
                writeln!(err, "{}", json!({ "error": e.to_string() }))
            } else {
                writeln!(err, "error: {e}")
            };
            2
        }
    }
}

fn emit(out: &mut dyn Write, text: impl std::fmt::Display) -> Result<(), CliError> {
    writeln!(out, "{text}").map_err(|e| CliError::Other(e.to_string()))
}

fn pretty(v: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(v).expect("output serializes")
}

/// `Ok(true)` when nothing was found that warrants exit status 1.
fn dispatch(cli: Cli, out: &mut dyn Write) -> Outcome {
    let json = cli.json;
    match cli.command {
        Command::Validate { policy } => {
            let sim = load(&policy)?;
            let v: Vec<String> = validate(sim.graph()).iter().map(ToString::to_string).collect();
            if json {
                emit(out, pretty(&json!({ "well_formed": v.is_empty(), "violations": v })))?;
            } else if v.is_empty() {
                emit(out, "well-formed")?;
            } else {
                emit(out, format!("not well-formed: {} violation(s)", v.len()))?;
                for x in &v {
                    emit(out, format!("  {x}"))?;
                }
            }
            Ok(v.is_empty())
        }
        Command::Query { policy, principal, action, resource } => {
            let sim = load(&policy)?;
            let d = decide(sim.graph(), &principal, &action, &resource).map_err(|e| input(&policy, e))?;
            if json {
                emit(out, pretty(&d))?;
            } else {
                emit(out, d.verdict)?;
                if !d.path.is_empty() {
                    emit(out, format!("  via {}", d.path.join(" -> ")))?;
                }
            }
            Ok(d.verdict != Verdict::Deny)
        }
        Command::Duties { policy, events, principal, state } => {
            let sim = replay(&policy, events.as_deref())?;
            let report = query_duties(&sim, &DutyFilter { principal, state });
            print_duties(out, &report, json)?;
            Ok(no_violations(&sim))
        }
        Command::Simulate { policy, events, strategy, seed, budget } => {
            let sim = replay(&policy, events.as_deref())?;
            let script = String::from_utf8(read_file(&strategy)?).map_err(|e| input(&strategy, e))?;
            let ast = parse_strategy(&script).map_err(|e| input(&strategy, format!("syntax error at {e}")))?;
            let mut opts = EvalOptions { seed, ..EvalOptions::default() };
            if let Some(b) = budget {
                opts.budget = b;
            }
            let start = LocatedGraph::new(sim.graph().port_graph().clone());
            let ev = eval_strategy(start, &ast, &rules(), &opts).map_err(|e| input(&strategy, e))?;
            let g = PolicyGraph::from(ev.graph.graph.clone());
            let aux: Vec<(String, String)> = g
                .aux_edges()
                .into_iter()
                .filter_map(|e| {
                    let [a, b] = g.edge_nodes(e)?;
                    Some((g.ent(a)?.name(), g.ent(b)?.name()))
                })
                .collect();
            let report = query_duties(&sim, &DutyFilter::default());
            if json {
                let body = json!({
                    "succeeded": ev.succeeded,
                    "steps": ev.steps,
                    "derivation": ev.tree.outline(),
                    "aux_edges": aux,
                    "duties": report,
                });
                emit(out, pretty(&body))?;
            } else {
                let verb = if ev.succeeded { "succeeded" } else { "failed" };
                emit(
                    out,
                    format!(
                        "strategy {verb}: {} step(s), {} derivation state(s), {} auxiliary edge(s)",
                        ev.steps,
                        ev.tree.len(),
                        aux.len()
                    ),
                )?;
                for (a, b) in &aux {
                    emit(out, format!("  {a} -- {b}"))?;
                }
                print_duties(out, &report, false)?;
            }
            Ok(ev.succeeded && no_violations(&sim))
        }
        Command::Export { policy, format, view } => {
            let sim = load(&policy)?;
            let filter = ViewFilter::parse(&view).map_err(|e| CliError::Other(e.to_string()))?;
            let text = match format {
                Format::Json => export_json(sim.graph(), &filter),
                Format::Dot => export_dot(sim.graph(), &filter),
            };
            write!(out, "{text}").map_err(|e| CliError::Other(e.to_string()))?;
            if !text.ends_with('\n') {
                emit(out, "")?;
            }
            Ok(true)
        }
        Command::Serve { bind, snapshot } => {
            let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Other(e.to_string()))?;
            emit(out, format!("listening on http://{bind}"))?;
            rt.block_on(crate::serve(bind, snapshot)).map_err(|e| CliError::Other(e.to_string()))?;
            Ok(true)
        }
    }
}

fn no_violations(sim: &SimulationState) -> bool {
    (0..sim.duties().len()).all(|i| sim.duty_state(i).is_ok_and(|s| s != DutyState::Violated))
}

fn print_duties(out: &mut dyn Write, report: &DutyReport, json: bool) -> Result<(), CliError> {
    if json {
        return emit(out, pretty(report));
    }
    let counts: Vec<String> = report.counts.iter().map(|(k, n)| format!("{n} {k}")).collect();
    let total = report.duties.len();
    let tail = if counts.is_empty() { String::new() } else { format!(" ({})", counts.join(", ")) };
    emit(out, format!("{total} dut{}{tail}", if total == 1 { "y" } else { "ies" }))?;
    for d in &report.duties {
        let s = &d.spec;
        let from = s.start.as_deref().unwrap_or("⊥");
        let to = s.end.as_deref().unwrap_or("⊥");
        let state = match &d.state {
            DutyState::Fulfilled { event, time } => format!("fulfilled by {event} at {time}"),
            other => other.tag().to_string(),
        };
        emit(out, format!("  #{} {} must {} {} [{from}, {to}]: {state}", d.id, s.principal, s.action, s.resource))?;
    }
    Ok(())
}
