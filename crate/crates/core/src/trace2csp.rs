//! Compile executions into constraint systems.
//!
//! A scenario's acceptance predicate, materialized over the (possibly
//! evidence-narrowed) domains, is itself the constraint system whose
//! satisfying valuations are the protocol's accepted outcomes. With no
//! trace, domains are the scenario's declared value sets; with a trace,
//! each domain shrinks to the final committed values still possible given
//! the process's script and every piece of evidence observed anywhere in
//! the run.
//!
//! The predicate becomes one global constraint over all participants,
//! except the pairwise-decomposable weak-commit rule, which factors into
//! binary constraints with identical solutions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::{Acceptance, AcceptanceRule, Action, Scenario, SimError, Trace};
use crate::solver::MAX_ENUMERATION;
use crate::types::{Constraint, ConstraintSystem, Domain, Valuation};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CompileError {
    #[error("trace belongs to scenario {got:?}, not {expected:?}")]
    Provenance { expected: String, got: String },
    #[error("trace shape disagrees with the scenario: {detail}")]
    TraceShape { detail: String },
    #[error(transparent)]
    Scenario(#[from] crate::sim::ScenarioError),
    #[error(transparent)]
    Trace(SimError),
    #[error("materializing the acceptance constraint needs {product} tuples, bound is {bound}")]
    TooLarge { product: u128, bound: u128 },
}

/// Per-process value sets narrowed by the trace's evidence.
///
/// A process's final commitment is pinned — yielding a singleton domain —
/// when its evidence was observed anywhere in the trace, or when the script
/// fixes the final commit value. An unobserved final choice keeps the full
/// scenario domain. Only positive observations narrow; the absence of
/// evidence about a commitment says nothing.
pub fn narrow_domains(s: &Scenario, t: &Trace) -> Result<Vec<Domain>, CompileError> {
    s.validate()?;
    if t.scenario_ref != s.name {
        return Err(CompileError::Provenance {
            expected: s.name.clone(),
            got: t.scenario_ref.clone(),
        });
    }
    t.validate().map_err(CompileError::Trace)?;
    if t.commitments.len() != s.n {
        return Err(CompileError::TraceShape {
            detail: format!(
                "{} commitment sequences for {} processes",
                t.commitments.len(),
                s.n
            ),
        });
    }
    for (p, cs) in t.commitments.iter().enumerate() {
        for c in cs {
            if !s.domains[p].iter().any(|v| v == &c.value) {
                return Err(CompileError::TraceShape {
                    detail: format!("p{p} committed {:?}, outside its domain", c.value),
                });
            }
        }
    }

    let mut domains = Vec::with_capacity(s.n);
    for (p, commits) in t.commitments.iter().enumerate() {
        let Some(final_commit) = commits.last() else {
            domains.push(Domain::emptied());
            continue;
        };
        let observed = t
            .observations
            .iter()
            .any(|o| o.evidence == final_commit.evidence);
        let script_fixed = s.script[p]
            .iter()
            .rev()
            .find(|a| matches!(a, Action::Commit { .. } | Action::Choose))
            .is_some_and(|a| matches!(a, Action::Commit { .. }));
        if observed || script_fixed {
            domains.push(Domain::new(vec![final_commit.value.clone()]));
        } else {
            domains.push(Domain::new(s.domains[p].clone()));
        }
    }
    Ok(domains)
}

/// Materialize the acceptance predicate over `domains` as one global
/// constraint.
fn global_constraint(
    acceptance: &Acceptance,
    domains: &[Domain],
) -> Result<Constraint, CompileError> {
    let scope: Vec<usize> = (0..domains.len()).collect();
    let product: u128 = domains.iter().map(|d| d.len() as u128).product();
    if product > MAX_ENUMERATION {
        return Err(CompileError::TooLarge {
            product,
            bound: MAX_ENUMERATION,
        });
    }
    let mut allowed = Vec::new();
    if product > 0 {
        let mut digits = vec![0usize; domains.len()];
        'odometer: loop {
            let v = Valuation(
                digits
                    .iter()
                    .enumerate()
                    .map(|(i, &k)| domains[i].values[k].clone())
                    .collect(),
            );
            if acceptance.accepts(&v) {
                allowed.push(v.0);
            }
            let mut pos = domains.len();
            loop {
                if pos == 0 {
                    break 'odometer;
                }
                pos -= 1;
                digits[pos] += 1;
                if digits[pos] < domains[pos].len() {
                    break;
                }
                digits[pos] = 0;
            }
        }
    }
    Ok(Constraint::new(scope, allowed))
}

/// Pairwise factoring of the weak-commit rule: one binary constraint per
/// participant pair, allowing every value pair except two conflicting
/// commits.
fn weak_commit_factored(domains: &[Domain]) -> Vec<Constraint> {
    let rule = AcceptanceRule::WeakCommit;
    let mut constraints = Vec::new();
    for i in 0..domains.len() {
        for j in (i + 1)..domains.len() {
            let mut allowed = Vec::new();
            for a in &domains[i].values {
                for b in &domains[j].values {
                    if rule.accepts(&Valuation(vec![a.clone(), b.clone()])) {
                        allowed.push(vec![a.clone(), b.clone()]);
                    }
                }
            }
            constraints.push(Constraint::new(vec![i, j], allowed));
        }
    }
    constraints
}

/// Constraint system induced by a scenario and, optionally, one of its
/// traces. An emptied narrowed domain is a legitimate result — it reports
/// that no global outcome is consistent with the observed evidence — not an
/// error.
pub fn compile_trace(s: &Scenario, t: Option<&Trace>) -> Result<ConstraintSystem, CompileError> {
    s.validate()?;
    let domains = match t {
        Some(trace) => narrow_domains(s, trace)?,
        None => s.domains.iter().cloned().map(Domain::new).collect(),
    };
    let constraints = match &s.acceptance {
        Acceptance::Rule {
            rule: AcceptanceRule::WeakCommit,
        } => weak_commit_factored(&domains),
        other => vec![global_constraint(other, &domains)?],
    };
    Ok(ConstraintSystem::new(domains, constraints))
}

/// How a compiled system relates to its scenario; used by reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompiledCsp {
    pub scenario: String,
    pub narrowed: bool,
    pub csp: ConstraintSystem,
}
