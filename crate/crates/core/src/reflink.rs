//! Reflective bilateral link.
//!
//! A "message" on this link is a negotiated commitment with mutual
//! evidence, built by a three-leg exchange over a lossy channel: A proposes,
//! B reflects what it heard together with its own proposal, and A confirms
//! the heard-of-heard. An endpoint decides COMMIT only once it holds all
//! three evidence tokens — its own proposal, the peer's proposal, and proof
//! the peer heard it.
//!
//! Loss is handled by retrying legs up to a per-leg attempt budget; attempts
//! are counted, never timed — no timer appears anywhere in this module.
//! Full bilateral certainty over a lossy channel is impossible, so an
//! endpoint that exhausts the exchange without full evidence ends
//! UNDECIDED rather than guessing. Unilateral ABORT exists in the state
//! machine but is legal only while nothing has been heard from the peer
//! (the one situation where the peer provably cannot have committed); the
//! loss model itself never aborts. The reachable terminal pairs therefore
//! satisfy the symmetric agreement relation: when both ends decide, they
//! decide alike.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvidenceToken {
    OwnProposal,
    PeerProposalHeard,
    PeerHeardMe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Decision {
    Commit,
    Abort,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "phase", content = "decision")]
pub enum LinkPhase {
    Idle,
    Proposed,
    Heard,
    Decided(Decision),
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndpointState {
    pub side: Side,
    pub phase: LinkPhase,
    pub evidence: BTreeSet<EvidenceToken>,
    /// Send attempts this endpoint has used.
    pub attempts: u32,
}

impl EndpointState {
    pub fn new(side: Side) -> Self {
        EndpointState {
            side,
            phase: LinkPhase::Idle,
            evidence: BTreeSet::new(),
            attempts: 0,
        }
    }

    fn has(&self, token: EvidenceToken) -> bool {
        self.evidence.contains(&token)
    }

    fn full_evidence(&self) -> bool {
        self.evidence.len() == 3
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkInput {
    /// Transmit my proposal (or retransmit it).
    SendProposal,
    /// The peer's proposal arrived.
    RecvPeerProposal,
    /// The peer's acknowledgment that it heard my proposal arrived.
    RecvHeardMe,
    /// Local decision to give up while nothing was heard from the peer.
    LocalAbort,
    /// End of the exchange: whatever is still undecided becomes UNDECIDED.
    Finalize,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LinkError {
    #[error("illegal transition: input {input:?} in phase {phase:?}")]
    IllegalTransition { phase: LinkPhase, input: LinkInput },
    #[error("run is not terminal: {side:?} endpoint is in phase {phase:?}")]
    NotTerminal { side: Side, phase: LinkPhase },
}

/// Pure transition of one endpoint. Evidence only grows, DECIDED states
/// absorb every input, and COMMIT requires the full evidence set.
pub fn step_link(state: &EndpointState, input: LinkInput) -> Result<EndpointState, LinkError> {
    let mut next = state.clone();
    if let LinkPhase::Decided(_) = state.phase {
        return Ok(next);
    }
    match (state.phase, input) {
        (LinkPhase::Idle | LinkPhase::Proposed, LinkInput::SendProposal) => {
            next.evidence.insert(EvidenceToken::OwnProposal);
            next.attempts += 1;
            next.phase = LinkPhase::Proposed;
        }
        // The responder sends its proposal inside the reflect leg.
        (LinkPhase::Heard, LinkInput::SendProposal) => {
            next.evidence.insert(EvidenceToken::OwnProposal);
            next.attempts += 1;
        }
        (LinkPhase::Idle | LinkPhase::Proposed | LinkPhase::Heard, LinkInput::RecvPeerProposal) => {
            next.evidence.insert(EvidenceToken::PeerProposalHeard);
            next.phase = LinkPhase::Heard;
        }
        (LinkPhase::Heard, LinkInput::RecvHeardMe) if state.has(EvidenceToken::OwnProposal) => {
            next.evidence.insert(EvidenceToken::PeerHeardMe);
            if next.full_evidence() {
                next.phase = LinkPhase::Decided(Decision::Commit);
            }
        }
        (LinkPhase::Idle | LinkPhase::Proposed, LinkInput::LocalAbort) => {
            // Nothing heard from the peer, so the peer cannot hold the
            // evidence it would need to commit.
            next.phase = LinkPhase::Decided(Decision::Abort);
        }
        (LinkPhase::Idle | LinkPhase::Proposed | LinkPhase::Heard, LinkInput::Finalize) => {
            next.phase = LinkPhase::Undecided;
        }
        (phase, input) => return Err(LinkError::IllegalTransition { phase, input }),
    }
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkConfig {
    /// Independent per-leg loss probability in `[0, 1]`.
    pub loss: f64,
    /// Send attempts allowed per leg.
    pub max_attempts: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Leg {
    Proposal,
    Reflect,
    Confirm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LegEvent {
    pub leg: Leg,
    pub attempt: u32,
    pub delivered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkRun {
    pub config: LinkConfig,
    pub seed: u64,
    pub transcript: Vec<LegEvent>,
    pub terminal_a: EndpointState,
    pub terminal_b: EndpointState,
}

impl LinkRun {
    pub fn terminal_pair(&self) -> (LinkPhase, LinkPhase) {
        (self.terminal_a.phase, self.terminal_b.phase)
    }
}

/// Drive one seeded exchange. Each leg is retried until delivered or the
/// attempt budget runs out; a dead leg ends the exchange and the driver
/// finalizes both endpoints.
pub fn run_link_exchange(config: LinkConfig, seed: u64) -> LinkRun {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = EndpointState::new(Side::A);
    let mut b = EndpointState::new(Side::B);
    let mut transcript = Vec::new();

    macro_rules! attempt_leg {
        ($leg:expr, $on_send:expr) => {{
            let mut reached = false;
            for attempt in 1..=config.max_attempts {
                $on_send;
                let delivered = rng.gen::<f64>() >= config.loss;
                transcript.push(LegEvent {
                    leg: $leg,
                    attempt,
                    delivered,
                });
                if delivered {
                    reached = true;
                    break;
                }
            }
            reached
        }};
    }

    'exchange: {
        // Leg 1: A proposes.
        if !attempt_leg!(Leg::Proposal, {
            a = step_link(&a, LinkInput::SendProposal).unwrap();
        }) {
            break 'exchange;
        }
        b = step_link(&b, LinkInput::RecvPeerProposal).unwrap();

        // Leg 2: B reflects what it heard plus its own proposal.
        if !attempt_leg!(Leg::Reflect, {
            b = step_link(&b, LinkInput::SendProposal).unwrap();
        }) {
            break 'exchange;
        }
        a = step_link(&a, LinkInput::RecvPeerProposal).unwrap();
        a = step_link(&a, LinkInput::RecvHeardMe).unwrap();

        // Leg 3: A confirms the heard-of-heard. A is already decided, so
        // resends absorb into its state; only the channel events matter.
        if !attempt_leg!(Leg::Confirm, {
            a = step_link(&a, LinkInput::SendProposal).unwrap();
        }) {
            break 'exchange;
        }
        b = step_link(&b, LinkInput::RecvHeardMe).unwrap();
    }

    if !matches!(a.phase, LinkPhase::Decided(_)) {
        a = step_link(&a, LinkInput::Finalize).unwrap();
    }
    if !matches!(b.phase, LinkPhase::Decided(_)) {
        b = step_link(&b, LinkInput::Finalize).unwrap();
    }
    LinkRun {
        config,
        seed,
        transcript,
        terminal_a: a,
        terminal_b: b,
    }
}

/// The symmetric agreement relation on terminal pairs: when both endpoints
/// decided, their decisions must coincide; an undecided side is compatible
/// with anything.
pub fn link_outcome_constraint(run: &LinkRun) -> Result<bool, LinkError> {
    for (side, phase) in [
        (Side::A, run.terminal_a.phase),
        (Side::B, run.terminal_b.phase),
    ] {
        match phase {
            LinkPhase::Decided(_) | LinkPhase::Undecided => {}
            other => return Err(LinkError::NotTerminal { side, phase: other }),
        }
    }
    Ok(match (run.terminal_a.phase, run.terminal_b.phase) {
        (LinkPhase::Decided(x), LinkPhase::Decided(y)) => x == y,
        _ => true,
    })
}

/// Aggregate of a seeded sweep at one loss rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkSweep {
    pub config: LinkConfig,
    pub runs: u64,
    /// Terminal pair histogram, keyed `"<A phase>/<B phase>"`.
    pub outcomes: std::collections::BTreeMap<String, u64>,
    /// Runs where one end committed while the other aborted.
    pub divergences: u64,
    /// Runs where both ends committed.
    pub bilateral_commits: u64,
}

fn phase_name(phase: LinkPhase) -> &'static str {
    match phase {
        LinkPhase::Idle => "IDLE",
        LinkPhase::Proposed => "PROPOSED",
        LinkPhase::Heard => "HEARD",
        LinkPhase::Decided(Decision::Commit) => "COMMIT",
        LinkPhase::Decided(Decision::Abort) => "ABORT",
        LinkPhase::Undecided => "UNDECIDED",
    }
}

/// Run `seeds` exchanges with seeds `0..seeds` and histogram the terminal
/// pairs.
pub fn run_link_sweep(config: LinkConfig, seeds: u64) -> LinkSweep {
    let mut outcomes = std::collections::BTreeMap::new();
    let mut divergences = 0;
    let mut bilateral_commits = 0;
    for seed in 0..seeds {
        let run = run_link_exchange(config, seed);
        let (pa, pb) = run.terminal_pair();
        *outcomes
            .entry(format!("{}/{}", phase_name(pa), phase_name(pb)))
            .or_insert(0) += 1;
        match (pa, pb) {
            (LinkPhase::Decided(Decision::Commit), LinkPhase::Decided(Decision::Commit)) => {
                bilateral_commits += 1;
            }
            (LinkPhase::Decided(x), LinkPhase::Decided(y)) if x != y => divergences += 1,
            _ => {}
        }
    }
    LinkSweep {
        config,
        runs: seeds,
        outcomes,
        divergences,
        bilateral_commits,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn propose_from_idle_records_own_proposal() {
        let a = EndpointState::new(Side::A);
        let next = step_link(&a, LinkInput::SendProposal).unwrap();
        assert_eq!(next.phase, LinkPhase::Proposed);
        assert!(next.evidence.contains(&EvidenceToken::OwnProposal));
        assert_eq!(next.attempts, 1);
    }

    #[test]
    fn reflect_receipt_moves_proposer_to_heard() {
        let a = step_link(&EndpointState::new(Side::A), LinkInput::SendProposal).unwrap();
        let a = step_link(&a, LinkInput::RecvPeerProposal).unwrap();
        assert_eq!(a.phase, LinkPhase::Heard);
        assert!(a.evidence.contains(&EvidenceToken::PeerProposalHeard));
    }

    #[test]
    fn heard_me_confirmation_completes_the_commit() {
        let a = step_link(&EndpointState::new(Side::A), LinkInput::SendProposal).unwrap();
        let a = step_link(&a, LinkInput::RecvPeerProposal).unwrap();
        let a = step_link(&a, LinkInput::RecvHeardMe).unwrap();
        assert_eq!(a.phase, LinkPhase::Decided(Decision::Commit));
        assert!(a.full_evidence());
    }

    #[test]
    fn heard_me_without_own_proposal_is_illegal() {
        let b = EndpointState::new(Side::B);
        let err = step_link(&b, LinkInput::RecvHeardMe).unwrap_err();
        assert!(matches!(
            err,
            LinkError::IllegalTransition {
                phase: LinkPhase::Idle,
                ..
            }
        ));
        // Heard the proposal but never reflected: still no valid target.
        let b = step_link(&b, LinkInput::RecvPeerProposal).unwrap();
        assert!(step_link(&b, LinkInput::RecvHeardMe).is_err());
    }

    #[test]
    fn decided_states_absorb_everything() {
        let a = step_link(&EndpointState::new(Side::A), LinkInput::SendProposal).unwrap();
        let a = step_link(&a, LinkInput::RecvPeerProposal).unwrap();
        let a = step_link(&a, LinkInput::RecvHeardMe).unwrap();
        for input in [
            LinkInput::SendProposal,
            LinkInput::RecvPeerProposal,
            LinkInput::RecvHeardMe,
            LinkInput::LocalAbort,
            LinkInput::Finalize,
        ] {
            assert_eq!(step_link(&a, input).unwrap(), a);
        }
    }

    #[test]
    fn local_abort_is_illegal_once_the_peer_was_heard() {
        let a = step_link(&EndpointState::new(Side::A), LinkInput::SendProposal).unwrap();
        assert!(step_link(&a, LinkInput::LocalAbort).is_ok());
        let a = step_link(&a, LinkInput::RecvPeerProposal).unwrap();
        assert!(step_link(&a, LinkInput::LocalAbort).is_err());
    }

    #[test]
    fn evidence_only_grows_along_any_input_sequence() {
        use rand::{Rng, SeedableRng};
        let inputs = [
            LinkInput::SendProposal,
            LinkInput::RecvPeerProposal,
            LinkInput::RecvHeardMe,
            LinkInput::LocalAbort,
            LinkInput::Finalize,
        ];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let mut state = EndpointState::new(Side::A);
            for _ in 0..10 {
                let input = inputs[rng.gen_range(0..inputs.len())];
                if let Ok(next) = step_link(&state, input) {
                    assert!(next.evidence.is_superset(&state.evidence));
                    state = next;
                }
            }
        }
    }

    #[test]
    fn lossless_exchange_commits_bilaterally_in_one_attempt_per_leg() {
        let run = run_link_exchange(
            LinkConfig {
                loss: 0.0,
                max_attempts: 5,
            },
            123,
        );
        assert_eq!(
            run.terminal_pair(),
            (
                LinkPhase::Decided(Decision::Commit),
                LinkPhase::Decided(Decision::Commit)
            )
        );
        assert_eq!(run.transcript.len(), 3);
        assert!(run.transcript.iter().all(|e| e.delivered && e.attempt == 1));
    }

    #[test]
    fn total_loss_never_commits() {
        let run = run_link_exchange(
            LinkConfig {
                loss: 1.0,
                max_attempts: 1,
            },
            5,
        );
        assert_eq!(
            run.terminal_pair(),
            (LinkPhase::Undecided, LinkPhase::Undecided)
        );
        assert_eq!(run.transcript.len(), 1); // one lost proposal attempt
        assert!(link_outcome_constraint(&run).unwrap());
    }

    #[test]
    fn replay_is_exact() {
        let config = LinkConfig {
            loss: 0.3,
            max_attempts: 5,
        };
        for seed in 0..50 {
            assert_eq!(
                run_link_exchange(config, seed),
                run_link_exchange(config, seed)
            );
        }
    }

    #[test]
    fn sweep_finds_no_divergence_and_constraint_holds() {
        for loss in [0.0, 0.3, 0.7] {
            let sweep = run_link_sweep(
                LinkConfig {
                    loss,
                    max_attempts: 5,
                },
                1000,
            );
            assert_eq!(sweep.divergences, 0, "loss {loss}");
            for seed in 0..1000 {
                let run = run_link_exchange(
                    LinkConfig {
                        loss,
                        max_attempts: 5,
                    },
                    seed,
                );
                assert!(
                    link_outcome_constraint(&run).unwrap(),
                    "loss {loss} seed {seed}"
                );
            }
        }
    }

    #[test]
    fn forbidden_divergence_is_flagged() {
        let commit = {
            let a = step_link(&EndpointState::new(Side::A), LinkInput::SendProposal).unwrap();
            let a = step_link(&a, LinkInput::RecvPeerProposal).unwrap();
            step_link(&a, LinkInput::RecvHeardMe).unwrap()
        };
        let abort = step_link(&EndpointState::new(Side::B), LinkInput::LocalAbort).unwrap();
        let run = LinkRun {
            config: LinkConfig {
                loss: 0.0,
                max_attempts: 1,
            },
            seed: 0,
            transcript: vec![],
            terminal_a: commit.clone(),
            terminal_b: abort,
        };
        assert!(!link_outcome_constraint(&run).unwrap());

        let agree = LinkRun {
            terminal_b: commit,
            ..run
        };
        assert!(link_outcome_constraint(&agree).unwrap());
    }

    #[test]
    fn non_terminal_run_is_a_state_error() {
        let run = LinkRun {
            config: LinkConfig {
                loss: 0.0,
                max_attempts: 1,
            },
            seed: 0,
            transcript: vec![],
            terminal_a: EndpointState::new(Side::A),
            terminal_b: EndpointState::new(Side::B),
        };
        assert!(matches!(
            link_outcome_constraint(&run),
            Err(LinkError::NotTerminal { side: Side::A, .. })
        ));
    }
}
