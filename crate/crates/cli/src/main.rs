//! Command-line driver for the accord workbench.
//!
//! Human-readable summaries go to stdout. Each command's JSON artifact goes
//! to `--out` when given, otherwise it is pretty-printed to stdout after the
//! summary. All randomness flows from explicit `--seed`-style flags and no
//! output carries a timestamp, so identical invocations produce identical
//! bytes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;

use accord::equivalence::equivalence_report;
use accord::order::{
    assign_lamport_clocks, derive_happens_before, transitive_reduction, validate_partial_order,
    ValidationReport,
};
use accord::pomset::{count_extensions_of, MAX_POMSET_EVENTS};
use accord::realizer::{realize, RealizeOutcome, RealizeRun};
use accord::reflink::{run_link_sweep, LinkConfig, LinkSweep};
use accord::sim::{enumerate_outcomes, run_scenario, Scenario, Trace};
use accord::solver::{solve_bruteforce, solve_search};
use accord::trace2csp::{compile_trace, CompiledCsp};
use accord::types::{ConstraintSystem, EventId, Valuation};

#[derive(Parser)]
#[command(
    name = "accord",
    version,
    about = "Commitment-evidence protocol workbench"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one seeded execution of a scenario and record its trace.
    Simulate {
        /// Scenario JSON file.
        scenario: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated values for the scenario's choice points, in
        /// (process, step) order.
        #[arg(long, value_delimiter = ',')]
        choices: Vec<String>,
        /// Write the trace JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exhaustively enumerate a scenario's accepted outcomes.
    Enumerate {
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compile a scenario (optionally narrowed by a trace) to a constraint
    /// system.
    Compile {
        scenario: PathBuf,
        /// Trace JSON produced by `simulate` on the same scenario.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve a constraint system with both solvers and cross-check them.
    Solve {
        /// Constraint-system JSON (bare, or as written by `compile`).
        csp: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the certificate-exchange realization protocol from a start
    /// valuation.
    Realize {
        csp: PathBuf,
        /// Comma-separated start valuation, one value per participant.
        #[arg(long, value_delimiter = ',')]
        start: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check that execution outcomes, compiled-CSP solutions, and realized
    /// outcomes all coincide for a scenario.
    Equivalence {
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Order-analyze a trace: happens-before validation, clock table,
    /// pomset summary, linear extensions.
    Analyze {
        trace: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep the reflective link over seeded runs at one loss rate.
    Link {
        /// Per-leg loss probability in [0, 1].
        #[arg(long, default_value_t = 0.0)]
        loss: f64,
        /// Send attempts allowed per leg.
        #[arg(long, default_value_t = 5)]
        attempts: u32,
        /// Number of seeded runs (seeds 0..N).
        #[arg(long, default_value_t = 1000)]
        seeds: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {what} file {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {what} file {}", path.display()))
}

fn load_scenario(path: &Path) -> Result<Scenario> {
    let scenario: Scenario = read_json(path, "scenario")?;
    scenario
        .validate()
        .with_context(|| format!("validating scenario {}", path.display()))?;
    Ok(scenario)
}

/// Accept either a bare `ConstraintSystem` or the `compile` command's
/// wrapper document.
fn load_csp(path: &Path) -> Result<ConstraintSystem> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading constraint-system file {}", path.display()))?;
    let csp = match serde_json::from_str::<CompiledCsp>(&text) {
        Ok(compiled) => compiled.csp,
        Err(_) => serde_json::from_str::<ConstraintSystem>(&text)
            .with_context(|| format!("parsing constraint-system file {}", path.display()))?,
    };
    csp.validate().context("validating constraint system")?;
    Ok(csp)
}

/// Emit a JSON artifact to `--out` or, failing that, to stdout.
fn emit<T: Serialize>(artifact: &T, out: &Option<PathBuf>) -> Result<()> {
    let json = serde_json::to_string_pretty(artifact)?;
    match out {
        Some(path) => {
            fs::write(path, json.as_bytes())
                .with_context(|| format!("writing {}", path.display()))?;
            println!("wrote {}", path.display());
        }
        None => println!("{json}"),
    }
    Ok(())
}

fn fmt_valuation(v: &Valuation) -> String {
    format!("({})", v.0.join(", "))
}

/// Comma-split flag values keep any whitespace the shell passed through;
/// strip it so `--choices "c(v1), c(v1)"` means what it looks like.
fn trimmed(values: &[String]) -> Vec<String> {
    values.iter().map(|v| v.trim().to_string()).collect()
}

fn cmd_simulate(
    scenario: &Path,
    seed: u64,
    choices: &[String],
    out: &Option<PathBuf>,
) -> Result<ExitCode> {
    let s = load_scenario(scenario)?;
    let choice_map = s.choices_from_ordered(&trimmed(choices))?;
    let trace = run_scenario(&s, seed, &choice_map)?;
    let valuation = trace
        .final_valuation()
        .expect("validated scenarios commit everywhere");
    println!("scenario: {}", s.name);
    println!("final valuation: {}", fmt_valuation(&valuation));
    println!("accepted: {}", s.acceptance.accepts(&valuation));
    emit(&trace, out)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_enumerate(scenario: &Path, out: &Option<PathBuf>) -> Result<ExitCode> {
    let s = load_scenario(scenario)?;
    let outcomes: Vec<Valuation> = enumerate_outcomes(&s)?.into_iter().collect();
    println!("scenario: {}", s.name);
    println!("accepted outcomes: {}", outcomes.len());
    for v in &outcomes {
        println!("  {}", fmt_valuation(v));
    }
    emit(&outcomes, out)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_compile(
    scenario: &Path,
    trace: &Option<PathBuf>,
    out: &Option<PathBuf>,
) -> Result<ExitCode> {
    let s = load_scenario(scenario)?;
    let loaded: Option<Trace> = match trace {
        Some(path) => Some(read_json(path, "trace")?),
        None => None,
    };
    let csp = compile_trace(&s, loaded.as_ref())?;
    println!("scenario: {}", s.name);
    println!("participants: {}", csp.participants());
    for (i, d) in csp.domains.iter().enumerate() {
        let mark = if d.emptied_by_narrowing {
            " (emptied by narrowing)"
        } else {
            ""
        };
        println!("  domain {i}: {} value(s){mark}", d.len());
    }
    println!("constraints: {}", csp.constraints.len());
    let compiled = CompiledCsp {
        scenario: s.name.clone(),
        narrowed: loaded.is_some(),
        csp,
    };
    emit(&compiled, out)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_solve(csp_path: &Path, out: &Option<PathBuf>) -> Result<ExitCode> {
    let csp = load_csp(csp_path)?;
    let brute = solve_bruteforce(&csp)?;
    let searched = solve_search(&csp)?;
    if brute != searched {
        bail!(
            "solver disagreement: brute force found {} solutions, search found {}",
            brute.len(),
            searched.len()
        );
    }
    println!("solutions: {} (search and brute force agree)", brute.len());
    for v in &brute {
        println!("  {}", fmt_valuation(v));
    }
    emit(&brute, out)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_realize(
    csp_path: &Path,
    start: &[String],
    seed: u64,
    out: &Option<PathBuf>,
) -> Result<ExitCode> {
    let csp = load_csp(csp_path)?;
    let start = Valuation(trimmed(start));
    let run: RealizeRun = realize(&csp, &start, seed)?;
    match &run.outcome {
        RealizeOutcome::Accept { valuation } => println!("ACCEPT {}", fmt_valuation(valuation)),
        RealizeOutcome::Reject => println!("REJECT"),
    }
    println!("rounds: {}", run.rounds);
    println!("certificates: {}", run.transcript.len());
    emit(&run, out)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_equivalence(scenario: &Path, out: &Option<PathBuf>) -> Result<ExitCode> {
    let s = load_scenario(scenario)?;
    let report = equivalence_report(&s)?;
    println!("scenario: {}", report.scenario);
    println!("simulated outcomes:     {}", report.simulated.len());
    println!("csp solutions:          {}", report.csp_solutions.len());
    println!("realized outcomes:      {}", report.realized.len());
    for v in &report.simulated {
        println!("  {}", fmt_valuation(v));
    }
    println!("equivalence: {}", if report.pass { "PASS" } else { "FAIL" });
    let pass = report.pass;
    emit(&report, out)?;
    Ok(if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

#[derive(Serialize)]
struct OrderReport {
    scenario_ref: String,
    events: usize,
    validation: ValidationReport,
    clocks: std::collections::BTreeMap<EventId, u64>,
    covering_edges: Vec<(EventId, EventId)>,
    concurrent_pairs: usize,
    /// Present only when the event count is within the exhaustive bound.
    linear_extensions: Option<u64>,
}

fn cmd_analyze(trace_path: &Path, out: &Option<PathBuf>) -> Result<ExitCode> {
    let trace: Trace = read_json(trace_path, "trace")?;
    trace.validate()?;
    let events = trace.events();
    let hb = derive_happens_before(&trace)?;
    let validation = validate_partial_order(&hb)?;
    println!("trace of scenario: {}", trace.scenario_ref);
    println!("events: {}", events.len());
    println!(
        "happens-before: {} ({} precedence pairs)",
        if validation.ok {
            "valid strict partial order"
        } else {
            "INVALID"
        },
        hb.pairs.len()
    );
    if !validation.ok {
        for v in &validation.violations {
            println!("  violation: {v:?}");
        }
        let report = OrderReport {
            scenario_ref: trace.scenario_ref.clone(),
            events: events.len(),
            validation,
            clocks: Default::default(),
            covering_edges: vec![],
            concurrent_pairs: 0,
            linear_extensions: None,
        };
        emit(&report, out)?;
        return Ok(ExitCode::FAILURE);
    }

    let clocks = assign_lamport_clocks(&trace)?;
    println!("event       process  clock  kind");
    for e in &events {
        let kind = match &e.kind {
            accord::types::EventKind::Commit(c) => format!("commit {}", c.value),
            accord::types::EventKind::Observe { evidence, from } => {
                format!("observe {evidence} from {from}")
            }
        };
        println!(
            "{:<11} {:<8} {:<6} {kind}",
            e.id.to_string(),
            e.process.to_string(),
            clocks[&e.id]
        );
    }

    let ids: Vec<&EventId> = hb.events.iter().collect();
    let mut concurrent_pairs = 0;
    for i in 0..ids.len() {
        for j in (i + 1)..ids.len() {
            if hb.concurrent(ids[i], ids[j]) {
                concurrent_pairs += 1;
            }
        }
    }
    let reduced = transitive_reduction(&hb);
    let linear_extensions = if events.len() <= MAX_POMSET_EVENTS {
        Some(count_extensions_of(&hb)?)
    } else {
        None
    };
    println!("concurrent pairs: {concurrent_pairs}");
    match linear_extensions {
        Some(n) => println!("linear extensions: {n}"),
        None => println!(
            "linear extensions: skipped ({} events exceed the bound of {MAX_POMSET_EVENTS})",
            events.len()
        ),
    }
    let report = OrderReport {
        scenario_ref: trace.scenario_ref.clone(),
        events: events.len(),
        validation,
        clocks,
        covering_edges: reduced.pairs.into_iter().collect(),
        concurrent_pairs,
        linear_extensions,
    };
    emit(&report, out)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_link(loss: f64, attempts: u32, seeds: u64, out: &Option<PathBuf>) -> Result<ExitCode> {
    if !(0.0..=1.0).contains(&loss) {
        bail!("--loss must be in [0, 1], got {loss}");
    }
    if attempts == 0 {
        bail!("--attempts must be at least 1");
    }
    let sweep: LinkSweep = run_link_sweep(
        LinkConfig {
            loss,
            max_attempts: attempts,
        },
        seeds,
    );
    println!("loss rate: {loss}, attempts per leg: {attempts}, runs: {seeds}");
    for (pair, count) in &sweep.outcomes {
        println!("  {pair:<22} {count}");
    }
    println!("bilateral commits: {}", sweep.bilateral_commits);
    println!("commit/abort divergences: {}", sweep.divergences);
    let diverged = sweep.divergences > 0;
    emit(&sweep, out)?;
    Ok(if diverged {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    })
}

fn main() -> ExitCode {
    // Die quietly when a pipe closes early (`accord ... | head`).
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate {
            scenario,
            seed,
            choices,
            out,
        } => cmd_simulate(scenario, *seed, choices, out),
        Command::Enumerate { scenario, out } => cmd_enumerate(scenario, out),
        Command::Compile {
            scenario,
            trace,
            out,
        } => cmd_compile(scenario, trace, out),
        Command::Solve { csp, out } => cmd_solve(csp, out),
        Command::Realize {
            csp,
            start,
            seed,
            out,
        } => cmd_realize(csp, start, *seed, out),
        Command::Equivalence { scenario, out } => cmd_equivalence(scenario, out),
        Command::Analyze { trace, out } => cmd_analyze(trace, out),
        Command::Link {
            loss,
            attempts,
            seeds,
            out,
        } => cmd_link(*loss, *attempts, *seeds, out),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
