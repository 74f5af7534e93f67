//! Seeded random instances for oracle cross-checks and the demo.
//!
//! The scenario generator keeps scripts in commit/send/receive phase order,
//! so every send eventually fires and every receive finds its evidence: the
//! generated scenarios cannot deadlock under any schedule.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::sim::{Acceptance, AcceptanceRule, Action, Choices, Scenario};
use crate::types::{Constraint, ConstraintSystem, Domain};

/// Random binary constraint system with up to 4 participants and up to 4
/// values per domain.
pub fn random_binary_csp(seed: u64) -> ConstraintSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=4);
    let domains: Vec<Domain> = (0..n)
        .map(|p| {
            let size = rng.gen_range(1..=4);
            Domain::new((0..size).map(|k| format!("s{p}{k}")).collect())
        })
        .collect();
    let mut constraints = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen_bool(0.7) {
                let mut allowed = Vec::new();
                for a in &domains[i].values {
                    for b in &domains[j].values {
                        if rng.gen_bool(0.55) {
                            allowed.push(vec![a.clone(), b.clone()]);
                        }
                    }
                }
                constraints.push(Constraint::new(vec![i, j], allowed));
            }
        }
    }
    ConstraintSystem::new(domains, constraints)
}

/// Random deadlock-free scenario plus a random valid choice assignment.
pub fn random_scenario(seed: u64) -> (Scenario, Choices) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tokens = ["c(v1)", "c(v2)", "a"];
    let n = rng.gen_range(2..=4);
    let domains: Vec<Vec<String>> = (0..n)
        .map(|_| {
            let size = rng.gen_range(2..=3);
            tokens[..size].iter().map(|s| s.to_string()).collect()
        })
        .collect();

    let mut script: Vec<Vec<Action>> = Vec::with_capacity(n);
    for domain in &domains {
        let commits = rng.gen_range(1..=2);
        let mut actions = Vec::new();
        for _ in 0..commits {
            if rng.gen_bool(0.6) {
                actions.push(Action::Choose);
            } else {
                let k = rng.gen_range(0..domain.len());
                actions.push(Action::Commit {
                    value: domain[k].clone(),
                });
            }
        }
        script.push(actions);
    }
    // Sends after commits; receives appended afterwards to match.
    let mut sends: Vec<Vec<Action>> = vec![Vec::new(); n];
    let mut receives: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (p, actions) in script.iter().enumerate() {
        let commits = actions.len();
        for k in 0..commits {
            for (peer, pending) in receives.iter_mut().enumerate() {
                if peer != p && rng.gen_bool(0.4) {
                    sends[p].push(Action::Send { to: peer, index: k });
                    pending.push(p);
                }
            }
        }
    }
    for (p, extra) in sends.into_iter().enumerate() {
        script[p].extend(extra);
    }
    for (p, froms) in receives.into_iter().enumerate() {
        for from in froms {
            script[p].push(Action::Receive { from });
        }
    }

    let mut scenario = Scenario {
        name: format!("rand-{seed}"),
        n,
        domains,
        script,
        acceptance: Acceptance::Rule {
            rule: AcceptanceRule::WeakCommit,
        },
        choice_points: vec![],
        explore_schedules: false,
    };
    scenario.choice_points = scenario.derived_choice_points();

    let choices: Choices = scenario
        .choice_points
        .iter()
        .map(|point| {
            let d = &scenario.domains[point.process];
            (*point, d[rng.gen_range(0..d.len())].clone())
        })
        .collect();
    (scenario, choices)
}
