//! Deterministic scenario simulator.
//!
//! A [`Scenario`] gives each process a fixed script of actions: commit a
//! value (or a choice point that commits a value picked from the process's
//! domain), send evidence of an earlier commitment, or block until evidence
//! from a given peer is deliverable. A seeded scheduler picks among enabled
//! processes each step, so every run is reproducible from `(scenario, seed,
//! choices)`.
//!
//! Sends enqueue the commitment's [`EvidenceId`], never a value-bearing
//! object; receivers resolve the value through the run's evidence table.
//! The channel is unordered and reliable: once sent, evidence is deliverable
//! at any later step, in any order.
//!
//! Acceptance rules interpret value tokens structurally: `c(<payload>)` is a
//! commit of `<payload>` and the bare token `a` is an abort. Tokens outside
//! that grammar are never accepted by `atomic-commit` and behave like
//! non-commits under `weak-commit`. Extensional acceptance is exact set
//! membership and places no demands on token shape.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{Commitment, Event, EventId, EventKind, EvidenceId, ProcessId, Valuation};

/// Exhaustive-choice enumeration refuses scenarios with more branches.
pub const MAX_BRANCHES: u128 = 1_000_000;
/// Schedule exploration refuses to walk more interleavings than this.
pub const MAX_SCHEDULES: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Action {
    /// Commit a fixed value.
    Commit { value: String },
    /// Commit a value supplied through the run's choice map.
    Choose,
    /// Enqueue evidence of this process's `index`-th commitment for `to`.
    Send { to: usize, index: usize },
    /// Block until evidence from `from` is deliverable, then observe it.
    Receive { from: usize },
}

/// Location of a `choose` action: `step` indexes into the process's script.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ChoicePoint {
    pub process: usize,
    pub step: usize,
}

impl fmt::Display for ChoicePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}@{}", self.process, self.step)
    }
}

/// One value per choice point; must cover every choice point exactly.
pub type Choices = BTreeMap<ChoicePoint, String>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Acceptance {
    /// Exact list of accepted valuations.
    Extensional { accept: Vec<Valuation> },
    /// Structural rule over commit/abort tokens.
    Rule { rule: AcceptanceRule },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AcceptanceRule {
    /// Every process aborts, or every process commits the same payload.
    #[serde(rename = "atomic-commit")]
    AtomicCommit,
    /// No two processes commit different payloads; aborts pair with anything.
    #[serde(rename = "weak-commit")]
    WeakCommit,
}

/// Payload of a commit token `c(<payload>)`, if the token is one.
pub fn commit_payload(value: &str) -> Option<&str> {
    value
        .strip_prefix("c(")
        .and_then(|rest| rest.strip_suffix(')'))
}

/// Whether a token is the abort marker.
pub fn is_abort(value: &str) -> bool {
    value == "a"
}

impl AcceptanceRule {
    pub fn accepts(&self, v: &Valuation) -> bool {
        match self {
            AcceptanceRule::AtomicCommit => {
                let all_abort = v.0.iter().all(|x| is_abort(x));
                let all_same_commit = match v.0.first().map(|x| commit_payload(x)) {
                    Some(Some(p0)) => v.0.iter().all(|x| commit_payload(x) == Some(p0)),
                    _ => false,
                };
                all_abort || all_same_commit
            }
            AcceptanceRule::WeakCommit => {
                let payloads: Vec<Option<&str>> = v.0.iter().map(|x| commit_payload(x)).collect();
                for i in 0..payloads.len() {
                    for j in (i + 1)..payloads.len() {
                        if let (Some(a), Some(b)) = (payloads[i], payloads[j]) {
                            if a != b {
                                return false;
                            }
                        }
                    }
                }
                true
            }
        }
    }
}

impl Acceptance {
    pub fn accepts(&self, v: &Valuation) -> bool {
        match self {
            Acceptance::Extensional { accept } => accept.contains(v),
            Acceptance::Rule { rule } => rule.accepts(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub n: usize,
    /// Per-process finite value sets, declaration order significant.
    pub domains: Vec<Vec<String>>,
    /// Per-process action scripts.
    pub script: Vec<Vec<Action>>,
    pub acceptance: Acceptance,
    /// Locations of `choose` actions. May be omitted in files; when present
    /// it must agree with the script.
    #[serde(default)]
    pub choice_points: Vec<ChoicePoint>,
    /// When set, outcome enumeration walks every interleaving (up to
    /// [`MAX_SCHEDULES`]) instead of one canonical schedule per choice
    /// combination.
    #[serde(default)]
    pub explore_schedules: bool,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScenarioError {
    #[error("scenario declares no processes")]
    NoProcesses,
    #[error("scenario has {got} domains for {n} processes")]
    DomainsLen { got: usize, n: usize },
    #[error("scenario has {got} scripts for {n} processes")]
    ScriptLen { got: usize, n: usize },
    #[error("process {process} has an empty domain")]
    EmptyDomain { process: usize },
    #[error("process {process}'s domain repeats value {value:?}")]
    DuplicateDomainValue { process: usize, value: String },
    #[error("process {process}'s script never commits")]
    NoCommit { process: usize },
    #[error("process {process} step {step}: send references commitment {index} before it exists")]
    SendBeforeCommit {
        process: usize,
        step: usize,
        index: usize,
    },
    #[error("process {process} step {step}: peer {peer} is out of range or the process itself")]
    BadPeer {
        process: usize,
        step: usize,
        peer: usize,
    },
    #[error("process {process} step {step}: fixed value {value:?} is outside the process domain")]
    ValueOutsideDomain {
        process: usize,
        step: usize,
        value: String,
    },
    #[error("extensional acceptance lists a valuation of arity {got}, scenario has {n} processes")]
    AcceptanceArity { got: usize, n: usize },
    #[error("extensional acceptance references {value:?}, outside process {process}'s domain")]
    AcceptanceValue { process: usize, value: String },
    #[error("declared choice points {declared:?} disagree with the script's {derived:?}")]
    ChoicePointsMismatch {
        declared: Vec<ChoicePoint>,
        derived: Vec<ChoicePoint>,
    },
}

impl Scenario {
    /// Choice points read off the script, in (process, step) order.
    pub fn derived_choice_points(&self) -> Vec<ChoicePoint> {
        let mut points = Vec::new();
        for (p, script) in self.script.iter().enumerate() {
            for (step, action) in script.iter().enumerate() {
                if matches!(action, Action::Choose) {
                    points.push(ChoicePoint { process: p, step });
                }
            }
        }
        points
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.n == 0 {
            return Err(ScenarioError::NoProcesses);
        }
        if self.domains.len() != self.n {
            return Err(ScenarioError::DomainsLen {
                got: self.domains.len(),
                n: self.n,
            });
        }
        if self.script.len() != self.n {
            return Err(ScenarioError::ScriptLen {
                got: self.script.len(),
                n: self.n,
            });
        }
        for (p, d) in self.domains.iter().enumerate() {
            if d.is_empty() {
                return Err(ScenarioError::EmptyDomain { process: p });
            }
            let mut seen = BTreeSet::new();
            for v in d {
                if !seen.insert(v) {
                    return Err(ScenarioError::DuplicateDomainValue {
                        process: p,
                        value: v.clone(),
                    });
                }
            }
        }
        for (p, script) in self.script.iter().enumerate() {
            let mut commits = 0usize;
            for (step, action) in script.iter().enumerate() {
                match action {
                    Action::Commit { value } => {
                        if !self.domains[p].iter().any(|v| v == value) {
                            return Err(ScenarioError::ValueOutsideDomain {
                                process: p,
                                step,
                                value: value.clone(),
                            });
                        }
                        commits += 1;
                    }
                    Action::Choose => commits += 1,
                    Action::Send { to, index } => {
                        if *to >= self.n || *to == p {
                            return Err(ScenarioError::BadPeer {
                                process: p,
                                step,
                                peer: *to,
                            });
                        }
                        if *index >= commits {
                            return Err(ScenarioError::SendBeforeCommit {
                                process: p,
                                step,
                                index: *index,
                            });
                        }
                    }
                    Action::Receive { from } => {
                        if *from >= self.n || *from == p {
                            return Err(ScenarioError::BadPeer {
                                process: p,
                                step,
                                peer: *from,
                            });
                        }
                    }
                }
            }
            if commits == 0 {
                return Err(ScenarioError::NoCommit { process: p });
            }
        }
        if let Acceptance::Extensional { accept } = &self.acceptance {
            for v in accept {
                if v.arity() != self.n {
                    return Err(ScenarioError::AcceptanceArity {
                        got: v.arity(),
                        n: self.n,
                    });
                }
                for (p, value) in v.0.iter().enumerate() {
                    if !self.domains[p].iter().any(|x| x == value) {
                        return Err(ScenarioError::AcceptanceValue {
                            process: p,
                            value: value.clone(),
                        });
                    }
                }
            }
        }
        if !self.choice_points.is_empty() {
            let derived = self.derived_choice_points();
            if self.choice_points != derived {
                return Err(ScenarioError::ChoicePointsMismatch {
                    declared: self.choice_points.clone(),
                    derived,
                });
            }
        }
        Ok(())
    }

    /// Choices built by pairing `values` with the choice points in
    /// (process, step) order; the shape the CLI's `--choices` flag uses.
    pub fn choices_from_ordered(&self, values: &[String]) -> Result<Choices, SimError> {
        let points = self.derived_choice_points();
        if values.len() != points.len() {
            return Err(SimError::ChoiceCount {
                got: values.len(),
                want: points.len(),
            });
        }
        Ok(points.into_iter().zip(values.iter().cloned()).collect())
    }
}

/// A schedule entry: which process acted and what the action resolved to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleStep {
    pub process: ProcessId,
    pub action: ResolvedAction,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ResolvedAction {
    Commit {
        index: usize,
        value: String,
    },
    Send {
        to: ProcessId,
        index: usize,
        evidence: EvidenceId,
    },
    Receive {
        from: ProcessId,
        evidence: EvidenceId,
    },
}

/// Evidence observed by a process at a schedule step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub observer: ProcessId,
    pub evidence: EvidenceId,
    pub step: usize,
}

/// Everything one run produced: per-process commitment sequences, evidence
/// observations, and the resolved interleaving. Replaying `(scenario, seed,
/// choices)` reproduces the trace byte for byte.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub scenario_ref: String,
    pub seed: u64,
    pub commitments: Vec<Vec<Commitment>>,
    pub observations: Vec<Observation>,
    pub schedule: Vec<ScheduleStep>,
}

impl Trace {
    /// The trace's events in schedule order: one `Commit` event per commit
    /// step, one `Observe` event per receive step. Sends move evidence but
    /// change no local state, so they are not events.
    pub fn events(&self) -> Vec<Event> {
        let mut local_seq = vec![0usize; self.commitments.len()];
        let mut events = Vec::new();
        for step in &self.schedule {
            let p = step.process;
            match &step.action {
                ResolvedAction::Commit { index, .. } => {
                    let commitment = self.commitments[p.0][*index].clone();
                    events.push(Event {
                        id: EventId(format!("p{}.{}", p.0, local_seq[p.0])),
                        process: p,
                        kind: EventKind::Commit(commitment),
                        local_seq: local_seq[p.0],
                    });
                    local_seq[p.0] += 1;
                }
                ResolvedAction::Receive { from, evidence } => {
                    events.push(Event {
                        id: EventId(format!("p{}.{}", p.0, local_seq[p.0])),
                        process: p,
                        kind: EventKind::Observe {
                            evidence: *evidence,
                            from: *from,
                        },
                        local_seq: local_seq[p.0],
                    });
                    local_seq[p.0] += 1;
                }
                ResolvedAction::Send { .. } => {}
            }
        }
        events
    }

    /// Last committed value per process; `None` if some process never
    /// committed.
    pub fn final_valuation(&self) -> Option<Valuation> {
        self.commitments
            .iter()
            .map(|cs| cs.last().map(|c| c.value.clone()))
            .collect::<Option<Vec<_>>>()
            .map(Valuation)
    }

    /// Structural validation for traces loaded from files: evidence ids
    /// recompute, the schedule agrees with the commitment and observation
    /// tables, and every observation resolves to a recorded commitment.
    pub fn validate(&self) -> Result<(), SimError> {
        let malformed = |detail: String| SimError::MalformedTrace { detail };
        let mut table: BTreeMap<EvidenceId, &Commitment> = BTreeMap::new();
        for (p, cs) in self.commitments.iter().enumerate() {
            for (k, c) in cs.iter().enumerate() {
                if c.process.0 != p || c.index != k {
                    return Err(malformed(format!(
                        "commitment at position ({p}, {k}) labels itself ({}, {})",
                        c.process.0, c.index
                    )));
                }
                let expect = EvidenceId::digest(c.process, c.index, &c.value);
                if c.evidence != expect {
                    return Err(malformed(format!(
                        "commitment ({p}, {k}) carries evidence {} but digests to {expect}",
                        c.evidence
                    )));
                }
                table.insert(c.evidence, c);
            }
        }
        let mut committed = vec![0usize; self.commitments.len()];
        let mut receive_steps: Vec<(usize, ProcessId, EvidenceId)> = Vec::new();
        for (i, step) in self.schedule.iter().enumerate() {
            let p = step.process.0;
            if p >= self.commitments.len() {
                return Err(malformed(format!(
                    "schedule step {i} names unknown process p{p}"
                )));
            }
            match &step.action {
                ResolvedAction::Commit { index, value } => {
                    if *index != committed[p] {
                        return Err(malformed(format!(
                            "schedule step {i}: p{p} commits index {index}, expected {}",
                            committed[p]
                        )));
                    }
                    match self.commitments[p].get(*index) {
                        Some(c) if &c.value == value => {}
                        _ => {
                            return Err(malformed(format!(
                                "schedule step {i}: p{p} commit {index} disagrees with the commitment table"
                            )))
                        }
                    }
                    committed[p] += 1;
                }
                ResolvedAction::Send {
                    index, evidence, ..
                } => match self.commitments[p].get(*index) {
                    Some(c) if c.evidence == *evidence && *index < committed[p] => {}
                    _ => {
                        return Err(malformed(format!(
                            "schedule step {i}: p{p} sends commitment {index} it has not made"
                        )))
                    }
                },
                ResolvedAction::Receive { evidence, .. } => {
                    if !table.contains_key(evidence) {
                        return Err(malformed(format!(
                            "schedule step {i}: observed evidence {evidence} matches no commitment"
                        )));
                    }
                    receive_steps.push((i, step.process, *evidence));
                }
            }
        }
        for (p, cs) in self.commitments.iter().enumerate() {
            if committed[p] != cs.len() {
                return Err(malformed(format!(
                    "p{p} lists {} commitments but the schedule commits {}",
                    cs.len(),
                    committed[p]
                )));
            }
        }
        if self.observations.len() != receive_steps.len() {
            return Err(malformed(format!(
                "{} observations for {} receive steps",
                self.observations.len(),
                receive_steps.len()
            )));
        }
        for obs in &self.observations {
            let matches = receive_steps.iter().any(|&(i, observer, evidence)| {
                i == obs.step && observer == obs.observer && evidence == obs.evidence
            });
            if !matches {
                return Err(malformed(format!(
                    "observation by {} at step {} matches no receive step",
                    obs.observer, obs.step
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("deadlock: processes {} are blocked on receive", fmt_processes(.blocked))]
    Deadlock { blocked: Vec<ProcessId> },
    #[error("choices missing for choice points: {}", fmt_points(.missing))]
    IncompleteChoices { missing: Vec<ChoicePoint> },
    #[error("choice supplied for {point}, which is not a choice point")]
    UnknownChoice { point: ChoicePoint },
    #[error("choice {value:?} for {point} is outside the process domain")]
    ChoiceOutsideDomain { point: ChoicePoint, value: String },
    #[error("got {got} ordered choices for {want} choice points")]
    ChoiceCount { got: usize, want: usize },
    #[error("choice enumeration needs {branches} branches, bound is {bound}")]
    TooManyBranches { branches: u128, bound: u128 },
    #[error("schedule exploration exceeded the bound of {bound} interleavings")]
    TooManySchedules { bound: usize },
    #[error("malformed trace: {detail}")]
    MalformedTrace { detail: String },
}

fn fmt_processes(ps: &[ProcessId]) -> String {
    ps.iter()
        .map(|p| p.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

fn fmt_points(ps: &[ChoicePoint]) -> String {
    ps.iter()
        .map(|p| p.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

/// Source of scheduler decisions. Runs are deterministic because every
/// nondeterministic pick (which process steps, which in-flight evidence a
/// receive takes) flows through one of these.
trait Decider {
    fn pick(&mut self, options: usize) -> usize;
}

struct RngDecider(ChaCha8Rng);

impl Decider for RngDecider {
    fn pick(&mut self, options: usize) -> usize {
        if options <= 1 {
            0
        } else {
            self.0.gen_range(0..options)
        }
    }
}

/// Replays a fixed decision prefix, then takes the first option; records
/// every branching factor so a driver can enumerate all decision paths.
struct PathDecider<'a> {
    path: &'a [usize],
    taken: Vec<(usize, usize)>,
}

impl<'a> PathDecider<'a> {
    fn new(path: &'a [usize]) -> Self {
        PathDecider {
            path,
            taken: Vec::new(),
        }
    }
}

impl Decider for PathDecider<'_> {
    fn pick(&mut self, options: usize) -> usize {
        let choice = self.path.get(self.taken.len()).copied().unwrap_or(0);
        self.taken.push((choice, options));
        choice
    }
}

fn check_choices(s: &Scenario, choices: &Choices) -> Result<(), SimError> {
    let points = s.derived_choice_points();
    let missing: Vec<ChoicePoint> = points
        .iter()
        .filter(|p| !choices.contains_key(p))
        .copied()
        .collect();
    if !missing.is_empty() {
        return Err(SimError::IncompleteChoices { missing });
    }
    for (point, value) in choices {
        if !points.contains(point) {
            return Err(SimError::UnknownChoice { point: *point });
        }
        if !s.domains[point.process].iter().any(|v| v == value) {
            return Err(SimError::ChoiceOutsideDomain {
                point: *point,
                value: value.clone(),
            });
        }
    }
    Ok(())
}

/// In-flight evidence: addressed, unordered, reliable.
struct InFlight {
    to: usize,
    from: usize,
    evidence: EvidenceId,
}

fn run_with(
    s: &Scenario,
    choices: &Choices,
    seed: u64,
    decider: &mut dyn Decider,
) -> Result<Trace, SimError> {
    let mut pc = vec![0usize; s.n];
    let mut commitments: Vec<Vec<Commitment>> = vec![Vec::new(); s.n];
    let mut observations = Vec::new();
    let mut schedule = Vec::new();
    let mut channel: Vec<InFlight> = Vec::new();

    loop {
        let enabled: Vec<usize> = (0..s.n)
            .filter(|&p| match s.script[p].get(pc[p]) {
                None => false,
                Some(Action::Receive { from }) => {
                    channel.iter().any(|m| m.to == p && m.from == *from)
                }
                Some(_) => true,
            })
            .collect();
        if enabled.is_empty() {
            let blocked: Vec<ProcessId> = (0..s.n)
                .filter(|&p| pc[p] < s.script[p].len())
                .map(ProcessId)
                .collect();
            if blocked.is_empty() {
                break;
            }
            return Err(SimError::Deadlock { blocked });
        }
        let p = enabled[decider.pick(enabled.len())];
        match &s.script[p][pc[p]] {
            Action::Commit { value } => {
                let index = commitments[p].len();
                let c = Commitment::new(ProcessId(p), index, value.clone());
                schedule.push(ScheduleStep {
                    process: ProcessId(p),
                    action: ResolvedAction::Commit {
                        index,
                        value: c.value.clone(),
                    },
                });
                commitments[p].push(c);
            }
            Action::Choose => {
                let point = ChoicePoint {
                    process: p,
                    step: pc[p],
                };
                let value = choices[&point].clone();
                let index = commitments[p].len();
                let c = Commitment::new(ProcessId(p), index, value);
                schedule.push(ScheduleStep {
                    process: ProcessId(p),
                    action: ResolvedAction::Commit {
                        index,
                        value: c.value.clone(),
                    },
                });
                commitments[p].push(c);
            }
            Action::Send { to, index } => {
                let evidence = commitments[p][*index].evidence;
                channel.push(InFlight {
                    to: *to,
                    from: p,
                    evidence,
                });
                schedule.push(ScheduleStep {
                    process: ProcessId(p),
                    action: ResolvedAction::Send {
                        to: ProcessId(*to),
                        index: *index,
                        evidence,
                    },
                });
            }
            Action::Receive { from } => {
                let matching: Vec<usize> = channel
                    .iter()
                    .enumerate()
                    .filter(|(_, m)| m.to == p && m.from == *from)
                    .map(|(i, _)| i)
                    .collect();
                let slot = matching[decider.pick(matching.len())];
                let msg = channel.remove(slot);
                observations.push(Observation {
                    observer: ProcessId(p),
                    evidence: msg.evidence,
                    step: schedule.len(),
                });
                schedule.push(ScheduleStep {
                    process: ProcessId(p),
                    action: ResolvedAction::Receive {
                        from: ProcessId(*from),
                        evidence: msg.evidence,
                    },
                });
            }
        }
        pc[p] += 1;
    }

    Ok(Trace {
        scenario_ref: s.name.clone(),
        seed,
        commitments,
        observations,
        schedule,
    })
}

/// Run one seeded, fully resolved execution of a scenario.
pub fn run_scenario(s: &Scenario, seed: u64, choices: &Choices) -> Result<Trace, SimError> {
    s.validate()?;
    check_choices(s, choices)?;
    let mut decider = RngDecider(ChaCha8Rng::seed_from_u64(seed));
    run_with(s, choices, seed, &mut decider)
}

/// Every trace reachable under `choices` by varying scheduler decisions,
/// bounded by [`MAX_SCHEDULES`].
fn enumerate_schedules(s: &Scenario, choices: &Choices) -> Result<Vec<Trace>, SimError> {
    let mut traces = Vec::new();
    let mut path: Vec<usize> = Vec::new();
    loop {
        if traces.len() >= MAX_SCHEDULES {
            return Err(SimError::TooManySchedules {
                bound: MAX_SCHEDULES,
            });
        }
        let mut decider = PathDecider::new(&path);
        let trace = run_with(s, choices, 0, &mut decider)?;
        let mut taken = decider.taken;
        traces.push(trace);
        // Deepest decision with an unexplored sibling; drop everything after.
        while let Some(&(choice, options)) = taken.last() {
            if choice + 1 < options {
                break;
            }
            taken.pop();
        }
        if taken.is_empty() {
            break;
        }
        path = taken.iter().map(|&(choice, _)| choice).collect();
        *path.last_mut().unwrap() += 1;
    }
    Ok(traces)
}

/// The set of accepted outcomes of a scenario, computed exhaustively: every
/// combination of choice-point values is run (every interleaving of each,
/// when `explore_schedules` is set), each terminal trace is mapped to its
/// final valuation, and the valuations satisfying the acceptance predicate
/// are returned.
pub fn enumerate_outcomes(s: &Scenario) -> Result<BTreeSet<Valuation>, SimError> {
    s.validate()?;
    let points = s.derived_choice_points();
    let branches: u128 = points
        .iter()
        .map(|p| s.domains[p.process].len() as u128)
        .product();
    if branches > MAX_BRANCHES {
        return Err(SimError::TooManyBranches {
            branches,
            bound: MAX_BRANCHES,
        });
    }

    let mut outcomes = BTreeSet::new();
    let mut digits = vec![0usize; points.len()];
    loop {
        let choices: Choices = points
            .iter()
            .zip(&digits)
            .map(|(point, &k)| (*point, s.domains[point.process][k].clone()))
            .collect();

        let traces = if s.explore_schedules {
            enumerate_schedules(s, &choices)?
        } else {
            let mut decider = RngDecider(ChaCha8Rng::seed_from_u64(0));
            vec![run_with(s, &choices, 0, &mut decider)?]
        };
        for trace in traces {
            let v = trace
                .final_valuation()
                .expect("validated scenarios commit on every process");
            if s.acceptance.accepts(&v) {
                outcomes.insert(v);
            }
        }

        // Odometer over choice combinations.
        let mut pos = points.len();
        loop {
            if pos == 0 {
                return Ok(outcomes);
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < s.domains[points[pos].process].len() {
                break;
            }
            digits[pos] = 0;
        }
    }
}
