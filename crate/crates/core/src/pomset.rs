//! Pomsets: labeled event sets under a valid strict partial order.
//!
//! The linear-extension count measures how representational any single
//! timeline of a pomset is: a total order has exactly one, an antichain of
//! `k` events has `k!`. Counting is exhaustive and deliberately bounded —
//! it is a verification oracle, not a scalable feature.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::order::{derive_happens_before, validate_partial_order, OrderError, PrecedenceRelation};
use crate::sim::Trace;
use crate::types::{EventId, EventKind, ProcessId};

/// Exhaustive linear-extension counting refuses larger event sets.
pub const MAX_POMSET_EVENTS: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PomsetLabel {
    pub process: ProcessId,
    pub kind: LabelKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum LabelKind {
    Commit { value: String },
    Observe { from: ProcessId },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pomset {
    pub labels: BTreeMap<EventId, PomsetLabel>,
    pub order: PrecedenceRelation,
}

/// Pomset of a trace: its events labeled by (process, kind) under the
/// induced happens-before order.
pub fn build_pomset(trace: &Trace) -> Result<Pomset, OrderError> {
    let order = derive_happens_before(trace)?;
    let report = validate_partial_order(&order)?;
    if let Some(v) = report.violations.first() {
        let witness = match v {
            crate::order::OrderViolation::Irreflexivity { event } => event.clone(),
            crate::order::OrderViolation::Transitivity { first, .. } => first.clone(),
            crate::order::OrderViolation::Antisymmetry { a, .. } => a.clone(),
        };
        return Err(OrderError::CyclicOrder { witness });
    }
    let labels = trace
        .events()
        .into_iter()
        .map(|e| {
            let kind = match e.kind {
                EventKind::Commit(c) => LabelKind::Commit { value: c.value },
                EventKind::Observe { from, .. } => LabelKind::Observe { from },
            };
            (
                e.id,
                PomsetLabel {
                    process: e.process,
                    kind,
                },
            )
        })
        .collect();
    Ok(Pomset { labels, order })
}

/// Number of total orders extending the pomset's partial order.
///
/// Downset dynamic programming over bitmasks: a state is the set of events
/// already placed, and an event may be placed once all its predecessors are.
pub fn count_linear_extensions(p: &Pomset) -> Result<u64, OrderError> {
    count_extensions_of(&p.order)
}

/// Same count, directly on a relation (assumed a valid strict order).
pub fn count_extensions_of(order: &PrecedenceRelation) -> Result<u64, OrderError> {
    let n = order.events.len();
    if n > MAX_POMSET_EVENTS {
        return Err(OrderError::TooManyEvents {
            count: n,
            bound: MAX_POMSET_EVENTS,
        });
    }
    let ids: Vec<&EventId> = order.events.iter().collect();
    let index: BTreeMap<&EventId, usize> = ids.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    let mut preds = vec![0u16; n];
    for (a, b) in &order.pairs {
        preds[index[b]] |= 1 << index[a];
    }
    let full: u16 = if n == 16 { u16::MAX } else { (1 << n) - 1 };
    let mut memo = vec![0u64; 1usize << n];
    memo[full as usize] = 1;
    // Walk masks from full to empty; each mask's count sums its plausible
    // next placements.
    for mask in (0..full).rev() {
        let mut total = 0u64;
        for (e, &pred) in preds.iter().enumerate() {
            let bit = 1u16 << e;
            if mask & bit == 0 && pred & mask == pred {
                total += memo[(mask | bit) as usize];
            }
        }
        memo[mask as usize] = total;
    }
    Ok(memo[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::sim::run_scenario;

    fn rel(pairs: &[(&str, &str)], events: &[&str]) -> PrecedenceRelation {
        PrecedenceRelation::new(
            events.iter().map(|e| EventId::from(*e)),
            pairs
                .iter()
                .map(|(a, b)| (EventId::from(*a), EventId::from(*b))),
        )
    }

    fn count(order: PrecedenceRelation) -> u64 {
        count_extensions_of(&crate::order::transitive_closure(&order)).unwrap()
    }

    #[test]
    fn antichain_counts_factorial() {
        assert_eq!(count(rel(&[], &["a", "b", "c"])), 6);
        assert_eq!(count(rel(&[], &["a", "b", "c", "d"])), 24);
    }

    #[test]
    fn total_order_counts_one() {
        let chain = rel(
            &[("a", "b"), ("b", "c"), ("c", "d"), ("d", "e")],
            &["a", "b", "c", "d", "e"],
        );
        assert_eq!(count(chain), 1);
    }

    #[test]
    fn diamond_counts_two() {
        let diamond = rel(
            &[("a", "b"), ("a", "c"), ("b", "d"), ("c", "d")],
            &["a", "b", "c", "d"],
        );
        assert_eq!(count(diamond), 2);
    }

    #[test]
    fn size_bound_is_enforced() {
        let events: Vec<String> = (0..13).map(|i| format!("e{i}")).collect();
        let big = PrecedenceRelation::new(events.iter().map(|e| EventId::from(e.as_str())), []);
        assert!(matches!(
            count_extensions_of(&big),
            Err(OrderError::TooManyEvents { count: 13, .. })
        ));
    }

    /// Permutation-filter oracle: generate every permutation and keep those
    /// consistent with the order.
    fn count_by_permutations(order: &PrecedenceRelation) -> u64 {
        let ids: Vec<&EventId> = order.events.iter().collect();
        let n = ids.len();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut count = 0;
        // Heap's algorithm, iterative.
        let mut c = vec![0usize; n];
        let mut check = |perm: &[usize]| {
            let position: BTreeMap<usize, usize> =
                perm.iter().enumerate().map(|(pos, &e)| (e, pos)).collect();
            let ok = order.pairs.iter().all(|(a, b)| {
                let (ia, ib) = (
                    ids.iter().position(|x| *x == a).unwrap(),
                    ids.iter().position(|x| *x == b).unwrap(),
                );
                position[&ia] < position[&ib]
            });
            if ok {
                count += 1;
            }
        };
        check(&perm);
        let mut i = 0;
        while i < n {
            if c[i] < i {
                if i % 2 == 0 {
                    perm.swap(0, i);
                } else {
                    perm.swap(c[i], i);
                }
                check(&perm);
                c[i] += 1;
                i = 0;
            } else {
                c[i] = 0;
                i += 1;
            }
        }
        count
    }

    #[test]
    fn dp_count_matches_permutation_oracle_on_random_orders() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..30 {
            let n = rng.gen_range(1..=6);
            let mut pairs = Vec::new();
            for a in 0..n {
                for b in (a + 1)..n {
                    if rng.gen_bool(0.35) {
                        pairs.push((format!("e{a}"), format!("e{b}")));
                    }
                }
            }
            let base = PrecedenceRelation::new(
                (0..n).map(|i| EventId(format!("e{i}"))),
                pairs
                    .iter()
                    .map(|(a, b)| (EventId(a.clone()), EventId(b.clone()))),
            );
            let closed = crate::order::transitive_closure(&base);
            assert_eq!(
                count_extensions_of(&closed).unwrap(),
                count_by_permutations(&closed),
            );
        }
    }

    #[test]
    fn empty_trace_gives_empty_pomset() {
        let trace = Trace {
            scenario_ref: "empty".into(),
            seed: 0,
            commitments: vec![],
            observations: vec![],
            schedule: vec![],
        };
        let p = build_pomset(&trace).unwrap();
        assert!(p.labels.is_empty());
        assert_eq!(count_linear_extensions(&p).unwrap(), 1);
    }

    #[test]
    fn chain_trace_is_totally_ordered() {
        let s = corpus::by_name("solo").unwrap();
        let choices = s.choices_from_ordered(&["c(v2)".to_string()]).unwrap();
        let trace = run_scenario(&s, 0, &choices).unwrap();
        let p = build_pomset(&trace).unwrap();
        assert_eq!(count_linear_extensions(&p).unwrap(), 1);
    }

    /// Diamond built from evidence flow: p0 commits twice and ships both
    /// pieces of evidence to p1, whose two observations bracket them.
    fn diamond_trace() -> Trace {
        use crate::sim::{Observation, ResolvedAction, ScheduleStep};
        use crate::types::{Commitment, ProcessId};
        let first = Commitment::new(ProcessId(0), 0, "c(v1)");
        let second = Commitment::new(ProcessId(0), 1, "c(v2)");
        let step = |process: usize, action: ResolvedAction| ScheduleStep {
            process: ProcessId(process),
            action,
        };
        Trace {
            scenario_ref: "diamond".into(),
            seed: 0,
            commitments: vec![vec![first.clone(), second.clone()], vec![]],
            observations: vec![
                Observation {
                    observer: ProcessId(1),
                    evidence: first.evidence,
                    step: 2,
                },
                Observation {
                    observer: ProcessId(1),
                    evidence: second.evidence,
                    step: 5,
                },
            ],
            schedule: vec![
                step(
                    0,
                    ResolvedAction::Commit {
                        index: 0,
                        value: first.value.clone(),
                    },
                ),
                step(
                    0,
                    ResolvedAction::Send {
                        to: ProcessId(1),
                        index: 0,
                        evidence: first.evidence,
                    },
                ),
                step(
                    1,
                    ResolvedAction::Receive {
                        from: ProcessId(0),
                        evidence: first.evidence,
                    },
                ),
                step(
                    0,
                    ResolvedAction::Commit {
                        index: 1,
                        value: second.value.clone(),
                    },
                ),
                step(
                    0,
                    ResolvedAction::Send {
                        to: ProcessId(1),
                        index: 1,
                        evidence: second.evidence,
                    },
                ),
                step(
                    1,
                    ResolvedAction::Receive {
                        from: ProcessId(0),
                        evidence: second.evidence,
                    },
                ),
            ],
        }
    }

    #[test]
    fn diamond_trace_pomset_has_one_incomparable_pair_and_two_extensions() {
        let trace = diamond_trace();
        trace.validate().unwrap();
        let p = build_pomset(&trace).unwrap();
        assert_eq!(p.labels.len(), 4);
        // p0.1 (second commit) and p1.0 (first observation) are the sides
        // of the diamond; everything else is ordered.
        assert!(p
            .order
            .concurrent(&EventId::from("p0.1"), &EventId::from("p1.0")));
        let incomparable: usize = {
            let ids: Vec<&EventId> = p.order.events.iter().collect();
            let mut count = 0;
            for i in 0..ids.len() {
                for j in (i + 1)..ids.len() {
                    if p.order.concurrent(ids[i], ids[j]) {
                        count += 1;
                    }
                }
            }
            count
        };
        assert_eq!(incomparable, 1);
        assert_eq!(count_linear_extensions(&p).unwrap(), 2);
    }

    #[test]
    fn tpc2_pomset_has_concurrent_commits() {
        let s = corpus::by_name("tpc2-atomic").unwrap();
        let choices = s
            .choices_from_ordered(&["c(v1)".to_string(), "c(v1)".to_string()])
            .unwrap();
        let trace = run_scenario(&s, 0, &choices).unwrap();
        let p = build_pomset(&trace).unwrap();
        assert_eq!(p.labels.len(), 4);
        assert!(p
            .order
            .concurrent(&EventId::from("p0.0"), &EventId::from("p1.0")));
        assert_eq!(
            p.labels[&EventId::from("p0.0")].kind,
            LabelKind::Commit {
                value: "c(v1)".into()
            }
        );
    }
}
