//! Certificate-exchange realization of a constraint system.
//!
//! Each participant owns the constraints whose lowest scope index is its
//! own. Agents walk the same cyclic lexicographic candidate order starting
//! from an initial proposal vector; for each candidate every agent
//! broadcasts a certificate — either that its owned constraints are
//! satisfied or a counterexample tuple — and advances when any
//! counterexample for the round arrives. The first candidate whose round
//! collects satisfied certificates from every agent is accepted; a full
//! cycle without one rejects.
//!
//! The outcome depends only on `(csp, start)`. The scheduler seed shuffles
//! message interleaving and therefore transcript order, never the verdict.
//! Messages here do exactly one job: they carry certificates about
//! constraint satisfaction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::rc::Rc;
use thiserror::Error;

use crate::solver::MAX_ENUMERATION;
use crate::types::{ConstraintSystem, CspError, ProcessId, Valuation};

pub type ConstraintId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub issuer: ProcessId,
    pub round: u64,
    pub candidate: Valuation,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Verdict {
    /// The issuer's owned constraints all hold for the candidate.
    Satisfied { constraints: Vec<ConstraintId> },
    /// A named constraint fails on the candidate's projection.
    Counterexample {
        constraint: ConstraintId,
        violating: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum RealizeOutcome {
    Accept { valuation: Valuation },
    Reject,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AgentPhase {
    Proposing,
    Verifying,
    Advancing,
    Terminal(RealizeOutcome),
}

#[derive(Debug, Clone)]
pub struct AgentState {
    pub me: ProcessId,
    /// Current value proposed for this participant; always in its domain.
    pub proposal: String,
    /// Candidates examined so far; also the current round number.
    pub cursor: u64,
    pub inbox: Vec<Rc<Certificate>>,
    pub phase: AgentPhase,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RealizeRun {
    pub outcome: RealizeOutcome,
    /// Candidate rounds examined; at most the domain product size.
    pub rounds: u64,
    pub transcript: Vec<Certificate>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RealizeError {
    #[error(transparent)]
    Csp(#[from] CspError),
    #[error("start valuation is not in the domain product")]
    InvalidStart,
    #[error("domain product {product} exceeds the bound {bound}")]
    TooLarge { product: u128, bound: u128 },
    #[error("certificate references constraint {constraint}, system has {count}")]
    UnknownConstraint {
        constraint: ConstraintId,
        count: usize,
    },
    #[error("protocol integrity violated: {detail}")]
    ProtocolIntegrity { detail: String },
}

/// The participant that verifies a constraint: the lowest index in its
/// scope. Everyone else can still re-verify the certificates it issues.
pub fn owner(csp: &ConstraintSystem, ci: ConstraintId) -> ProcessId {
    ProcessId(csp.constraints[ci].scope.iter().copied().min().unwrap_or(0))
}

/// Re-check a certificate against the system: satisfied verdicts must
/// re-verify as satisfied, and counterexample tuples must really be the
/// candidate's projection and really violate the named constraint.
pub fn verify_certificate(
    csp: &ConstraintSystem,
    cert: &Certificate,
) -> Result<bool, RealizeError> {
    let count = csp.constraints.len();
    let check_id = |ci: ConstraintId| {
        if ci >= count {
            Err(RealizeError::UnknownConstraint {
                constraint: ci,
                count,
            })
        } else {
            Ok(())
        }
    };
    if cert.candidate.arity() != csp.participants() {
        return Ok(false);
    }
    match &cert.verdict {
        Verdict::Satisfied { constraints } => {
            for &ci in constraints {
                check_id(ci)?;
            }
            Ok(constraints
                .iter()
                .all(|&ci| csp.constraints[ci].satisfied_by(&cert.candidate)))
        }
        Verdict::Counterexample {
            constraint,
            violating,
        } => {
            check_id(*constraint)?;
            let c = &csp.constraints[*constraint];
            let is_projection = cert.candidate.project(&c.scope) == *violating;
            Ok(is_projection && !c.allowed.contains(violating))
        }
    }
}

fn own_verdict(csp: &ConstraintSystem, me: ProcessId, candidate: &Valuation) -> Verdict {
    let owned: Vec<ConstraintId> = (0..csp.constraints.len())
        .filter(|&ci| owner(csp, ci) == me)
        .collect();
    for &ci in &owned {
        if !csp.constraints[ci].satisfied_by(candidate) {
            return Verdict::Counterexample {
                constraint: ci,
                violating: candidate.project(&csp.constraints[ci].scope),
            };
        }
    }
    Verdict::Satisfied { constraints: owned }
}

enum Step {
    Issue(usize),
    Deliver(usize),
    Decide(usize),
    Advance(usize),
}

/// Run the certificate-exchange protocol from `start`.
///
/// Accepts the first satisfying valuation at or after `start` in cyclic
/// lexicographic order; rejects after a full cycle finds none.
pub fn realize(
    csp: &ConstraintSystem,
    start: &Valuation,
    seed: u64,
) -> Result<RealizeRun, RealizeError> {
    csp.validate()?;
    if csp.participants() == 0 {
        return Err(RealizeError::InvalidStart);
    }
    let product = csp.product_size();
    if product > MAX_ENUMERATION {
        return Err(RealizeError::TooLarge {
            product,
            bound: MAX_ENUMERATION,
        });
    }
    if csp.check_in_domains(start).is_err() {
        return Err(RealizeError::InvalidStart);
    }
    let product = product as u64;
    let start_index = csp.index_of(start).ok_or(RealizeError::InvalidStart)?;
    let n = csp.participants();

    let candidate_at =
        |cursor: u64| -> Valuation { csp.valuation_at((start_index + cursor) % product) };

    let mut agents: Vec<AgentState> = (0..n)
        .map(|p| AgentState {
            me: ProcessId(p),
            proposal: start.0[p].clone(),
            cursor: 0,
            inbox: Vec::new(),
            phase: AgentPhase::Proposing,
        })
        .collect();
    let mut channel: Vec<(usize, Rc<Certificate>)> = Vec::new();
    let mut transcript: Vec<Certificate> = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    loop {
        let mut steps: Vec<Step> = Vec::new();
        for (i, a) in agents.iter().enumerate() {
            match a.phase {
                AgentPhase::Proposing => steps.push(Step::Issue(i)),
                AgentPhase::Verifying => {
                    let issuers: BTreeSet<ProcessId> = a
                        .inbox
                        .iter()
                        .filter(|c| c.round == a.cursor)
                        .map(|c| c.issuer)
                        .collect();
                    if issuers.len() == n {
                        steps.push(Step::Decide(i));
                    }
                }
                AgentPhase::Advancing => steps.push(Step::Advance(i)),
                AgentPhase::Terminal(_) => {}
            }
        }
        for m in 0..channel.len() {
            steps.push(Step::Deliver(m));
        }
        if steps.is_empty() {
            break;
        }
        let step = if steps.len() == 1 {
            0
        } else {
            rng.gen_range(0..steps.len())
        };
        match steps[step] {
            Step::Issue(i) => {
                let candidate = candidate_at(agents[i].cursor);
                let cert = Rc::new(Certificate {
                    issuer: agents[i].me,
                    round: agents[i].cursor,
                    candidate: candidate.clone(),
                    verdict: own_verdict(csp, agents[i].me, &candidate),
                });
                transcript.push((*cert).clone());
                for peer in 0..n {
                    if peer != i {
                        channel.push((peer, Rc::clone(&cert)));
                    }
                }
                agents[i].inbox.push(cert);
                agents[i].phase = AgentPhase::Verifying;
            }
            Step::Deliver(m) => {
                let (to, cert) = channel.swap_remove(m);
                if !verify_certificate(csp, &cert)? {
                    return Err(RealizeError::ProtocolIntegrity {
                        detail: format!(
                            "agent p{to} received a certificate from {} that fails re-verification",
                            cert.issuer
                        ),
                    });
                }
                agents[to].inbox.push(cert);
            }
            Step::Decide(i) => {
                let round = agents[i].cursor;
                let all_satisfied = agents[i]
                    .inbox
                    .iter()
                    .filter(|c| c.round == round)
                    .all(|c| matches!(c.verdict, Verdict::Satisfied { .. }));
                if all_satisfied {
                    let accepted = candidate_at(round);
                    agents[i].phase = AgentPhase::Terminal(RealizeOutcome::Accept {
                        valuation: accepted,
                    });
                } else {
                    agents[i].phase = AgentPhase::Advancing;
                }
            }
            Step::Advance(i) => {
                agents[i].cursor += 1;
                if agents[i].cursor == product {
                    agents[i].phase = AgentPhase::Terminal(RealizeOutcome::Reject);
                } else {
                    let next = candidate_at(agents[i].cursor);
                    agents[i].proposal = next.0[agents[i].me.0].clone();
                    agents[i].phase = AgentPhase::Proposing;
                }
            }
        }
    }

    let mut outcomes = agents.iter().map(|a| match &a.phase {
        AgentPhase::Terminal(o) => o.clone(),
        other => unreachable!("agent left non-terminal: {other:?}"),
    });
    let outcome = outcomes.next().expect("at least one participant");
    if outcomes.any(|o| o != outcome) {
        return Err(RealizeError::ProtocolIntegrity {
            detail: "agents reached different terminal outcomes".into(),
        });
    }
    let rounds = match &outcome {
        RealizeOutcome::Accept { .. } => agents[0].cursor + 1,
        RealizeOutcome::Reject => product,
    };
    Ok(RealizeRun {
        outcome,
        rounds,
        transcript,
    })
}

/// Every valuation some start accepts: the protocol's terminal outcome set.
pub fn terminal_outcome_set(csp: &ConstraintSystem) -> Result<BTreeSet<Valuation>, RealizeError> {
    csp.validate()?;
    let product = csp.product_size();
    if product > MAX_ENUMERATION {
        return Err(RealizeError::TooLarge {
            product,
            bound: MAX_ENUMERATION,
        });
    }
    let mut outcomes = BTreeSet::new();
    for index in 0..product as u64 {
        let start = csp.valuation_at(index);
        let run = realize(csp, &start, 0)?;
        if let RealizeOutcome::Accept { valuation } = run.outcome {
            outcomes.insert(valuation);
        }
    }
    Ok(outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::solver::solve_bruteforce;
    use crate::trace2csp::compile_trace;
    use crate::types::{Constraint, Domain};

    fn tpc2_csp() -> ConstraintSystem {
        compile_trace(&corpus::by_name("tpc2-atomic").unwrap(), None).unwrap()
    }

    fn val(xs: &[&str]) -> Valuation {
        Valuation(xs.iter().map(|s| s.to_string()).collect())
    }

    #[test]
    fn permissive_system_accepts_the_start_itself() {
        let s = corpus::by_name("no-comm").unwrap();
        let csp = compile_trace(&s, None).unwrap();
        let start = val(&["y", "x"]);
        let run = realize(&csp, &start, 0).unwrap();
        assert_eq!(run.outcome, RealizeOutcome::Accept { valuation: start });
        assert_eq!(run.rounds, 1);
    }

    #[test]
    fn unsatisfiable_system_rejects_after_a_full_cycle() {
        let s = corpus::by_name("empty-accept").unwrap();
        let csp = compile_trace(&s, None).unwrap();
        let run = realize(&csp, &val(&["x", "y"]), 1).unwrap();
        assert_eq!(run.outcome, RealizeOutcome::Reject);
        assert_eq!(run.rounds, 4);
    }

    #[test]
    fn accepts_first_satisfying_candidate_in_cyclic_order() {
        let csp = tpc2_csp();
        // Oracle: walk the cyclic order from the start index and take the
        // first brute-force solution.
        let start = val(&["c(v1)", "c(v2)"]);
        let start_index = csp.index_of(&start).unwrap();
        let product = csp.product_size() as u64;
        let solutions = solve_bruteforce(&csp).unwrap();
        let expected = (0..product)
            .map(|k| csp.valuation_at((start_index + k) % product))
            .find(|v| solutions.contains(v))
            .unwrap();
        assert_eq!(expected, val(&["c(v2)", "c(v2)"]));

        let run = realize(&csp, &start, 0).unwrap();
        assert_eq!(
            run.outcome,
            RealizeOutcome::Accept {
                valuation: expected
            }
        );
    }

    #[test]
    fn outcome_is_seed_independent() {
        let csp = tpc2_csp();
        let start = val(&["c(v1)", "c(v2)"]);
        let reference = realize(&csp, &start, 0).unwrap().outcome;
        for seed in 1..=20 {
            assert_eq!(realize(&csp, &start, seed).unwrap().outcome, reference);
        }
    }

    #[test]
    fn transcripts_replay_through_the_verifier() {
        let csp = tpc2_csp();
        let run = realize(&csp, &val(&["c(v1)", "c(v2)"]), 3).unwrap();
        assert!(!run.transcript.is_empty());
        for cert in &run.transcript {
            assert_eq!(verify_certificate(&csp, cert), Ok(true));
        }
    }

    #[test]
    fn terminal_outcomes_equal_bruteforce_solutions() {
        let csp = tpc2_csp();
        let outcomes = terminal_outcome_set(&csp).unwrap();
        let solutions: BTreeSet<Valuation> = solve_bruteforce(&csp).unwrap().into_iter().collect();
        assert_eq!(outcomes, solutions);
        assert_eq!(outcomes.len(), 3);
    }

    #[test]
    fn singleton_domains_realize_from_the_only_start() {
        let csp = ConstraintSystem::new(
            vec![Domain::new(vec!["x".into()]), Domain::new(vec!["y".into()])],
            vec![],
        );
        let outcomes = terminal_outcome_set(&csp).unwrap();
        assert_eq!(outcomes.len(), 1);
        assert!(outcomes.contains(&val(&["x", "y"])));
    }

    #[test]
    fn forged_satisfied_and_counterexample_certificates_fail() {
        let csp = tpc2_csp();
        let honest = Certificate {
            issuer: ProcessId(0),
            round: 0,
            candidate: val(&["c(v1)", "c(v1)"]),
            verdict: Verdict::Satisfied {
                constraints: vec![0],
            },
        };
        assert_eq!(verify_certificate(&csp, &honest), Ok(true));

        let forged_sat = Certificate {
            candidate: val(&["c(v1)", "c(v2)"]),
            ..honest.clone()
        };
        assert_eq!(verify_certificate(&csp, &forged_sat), Ok(false));

        // A counterexample naming an allowed tuple is a forgery.
        let forged_cx = Certificate {
            issuer: ProcessId(0),
            round: 0,
            candidate: val(&["c(v1)", "c(v1)"]),
            verdict: Verdict::Counterexample {
                constraint: 0,
                violating: vec!["c(v1)".into(), "c(v1)".into()],
            },
        };
        assert_eq!(verify_certificate(&csp, &forged_cx), Ok(false));

        let unknown = Certificate {
            issuer: ProcessId(0),
            round: 0,
            candidate: val(&["c(v1)", "c(v1)"]),
            verdict: Verdict::Satisfied {
                constraints: vec![9],
            },
        };
        assert!(matches!(
            verify_certificate(&csp, &unknown),
            Err(RealizeError::UnknownConstraint { constraint: 9, .. })
        ));
    }

    #[test]
    fn invalid_start_is_rejected() {
        let csp = tpc2_csp();
        assert_eq!(
            realize(&csp, &val(&["nope", "c(v1)"]), 0).unwrap_err(),
            RealizeError::InvalidStart
        );
    }

    #[test]
    fn oversized_products_are_refused() {
        let csp = ConstraintSystem::new(
            vec![Domain::new((0..4).map(|k| format!("s{k}")).collect()); 10],
            vec![],
        );
        let start = csp.valuation_at(0);
        assert!(matches!(
            realize(&csp, &start, 0),
            Err(RealizeError::TooLarge { .. })
        ));
        assert!(matches!(
            terminal_outcome_set(&csp),
            Err(RealizeError::TooLarge { .. })
        ));
    }

    #[test]
    fn ownership_goes_to_the_lowest_scope_index() {
        let csp = ConstraintSystem::new(
            vec![
                Domain::new(vec!["x".into()]),
                Domain::new(vec!["y".into()]),
                Domain::new(vec!["z".into()]),
            ],
            vec![
                Constraint::new(vec![1, 2], [vec!["y".into(), "z".into()]]),
                Constraint::new(vec![0, 2], [vec!["x".into(), "z".into()]]),
            ],
        );
        assert_eq!(owner(&csp, 0), ProcessId(1));
        assert_eq!(owner(&csp, 1), ProcessId(0));
    }
}
