//! Built-in scenario corpus.
//!
//! These scenarios drive the equivalence suites and the demo UI. Every
//! process's final commitment is a choice point over its full domain, so the
//! reachable final valuations cover the whole domain product and the
//! accepted-outcome set of the execution coincides with the solution set of
//! the scenario's acceptance constraint over the declared domains.

use crate::sim::{Acceptance, AcceptanceRule, Action, Scenario};
use crate::types::Valuation;

pub struct CorpusEntry {
    pub note: &'static str,
    pub scenario: Scenario,
}

fn vals(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

fn commit_domain() -> Vec<String> {
    vals(&["c(v1)", "c(v2)", "a"])
}

fn choose() -> Action {
    Action::Choose
}

fn send(to: usize, index: usize) -> Action {
    Action::Send { to, index }
}

fn receive(from: usize) -> Action {
    Action::Receive { from }
}

fn finish(mut s: Scenario) -> Scenario {
    s.choice_points = s.derived_choice_points();
    s
}

fn tpc2(name: &str, rule: AcceptanceRule) -> Scenario {
    finish(Scenario {
        name: name.into(),
        n: 2,
        domains: vec![commit_domain(), commit_domain()],
        script: vec![
            vec![choose(), send(1, 0), receive(1)],
            vec![choose(), send(0, 0), receive(0)],
        ],
        acceptance: Acceptance::Rule { rule },
        choice_points: vec![],
        explore_schedules: false,
    })
}

fn chain3(name: &str, rule: AcceptanceRule) -> Scenario {
    finish(Scenario {
        name: name.into(),
        n: 3,
        domains: vec![commit_domain(), commit_domain(), commit_domain()],
        script: vec![
            vec![choose(), send(1, 0)],
            vec![receive(0), choose(), send(2, 0)],
            vec![receive(1), choose()],
        ],
        acceptance: Acceptance::Rule { rule },
        choice_points: vec![],
        explore_schedules: false,
    })
}

pub fn entries() -> Vec<CorpusEntry> {
    vec![
        CorpusEntry {
            note: "two processes exchange vote evidence; accepted iff both commit the same \
                   value or both abort",
            scenario: tpc2("tpc2-atomic", AcceptanceRule::AtomicCommit),
        },
        CorpusEntry {
            note: "same exchange under the weak rule: only conflicting commits are rejected",
            scenario: tpc2("tpc2-weak", AcceptanceRule::WeakCommit),
        },
        CorpusEntry {
            note: "three processes pass evidence down a chain, atomic acceptance",
            scenario: chain3("chain3", AcceptanceRule::AtomicCommit),
        },
        CorpusEntry {
            note: "the same chain under the weak rule",
            scenario: chain3("chain3-weak", AcceptanceRule::WeakCommit),
        },
        CorpusEntry {
            note: "coordinator fans evidence out to two followers and collects their votes",
            scenario: finish(Scenario {
                name: "tpc3".into(),
                n: 3,
                domains: vec![commit_domain(), commit_domain(), commit_domain()],
                script: vec![
                    vec![choose(), send(1, 0), send(2, 0), receive(1), receive(2)],
                    vec![receive(0), choose(), send(0, 0)],
                    vec![receive(0), choose(), send(0, 0)],
                ],
                acceptance: Acceptance::Rule {
                    rule: AcceptanceRule::AtomicCommit,
                },
                choice_points: vec![],
                explore_schedules: false,
            }),
        },
        CorpusEntry {
            note: "no communication at all; every joint state is accepted",
            scenario: finish(Scenario {
                name: "no-comm".into(),
                n: 2,
                domains: vec![vals(&["x", "y"]), vals(&["x", "y"])],
                script: vec![vec![choose()], vec![choose()]],
                acceptance: Acceptance::Extensional {
                    accept: vec![
                        Valuation(vals(&["x", "x"])),
                        Valuation(vals(&["x", "y"])),
                        Valuation(vals(&["y", "x"])),
                        Valuation(vals(&["y", "y"])),
                    ],
                },
                choice_points: vec![],
                explore_schedules: false,
            }),
        },
        CorpusEntry {
            note: "extensionally empty acceptance: no outcome is ever accepted",
            scenario: finish(Scenario {
                name: "empty-accept".into(),
                n: 2,
                domains: vec![vals(&["x", "y"]), vals(&["x", "y"])],
                script: vec![vec![choose()], vec![choose()]],
                acceptance: Acceptance::Extensional { accept: vec![] },
                choice_points: vec![],
                explore_schedules: false,
            }),
        },
        CorpusEntry {
            note: "a single process choosing for itself",
            scenario: finish(Scenario {
                name: "solo".into(),
                n: 1,
                domains: vec![vals(&["c(v1)", "c(v2)"])],
                script: vec![vec![choose()]],
                acceptance: Acceptance::Extensional {
                    accept: vec![Valuation(vals(&["c(v1)"])), Valuation(vals(&["c(v2)"]))],
                },
                choice_points: vec![],
                explore_schedules: false,
            }),
        },
        CorpusEntry {
            note: "one-way evidence: only the first process's commitment is ever observed",
            scenario: finish(Scenario {
                name: "pair-partial".into(),
                n: 2,
                domains: vec![commit_domain(), commit_domain()],
                script: vec![vec![choose(), send(1, 0)], vec![receive(0), choose()]],
                acceptance: Acceptance::Rule {
                    rule: AcceptanceRule::WeakCommit,
                },
                choice_points: vec![],
                explore_schedules: false,
            }),
        },
        CorpusEntry {
            note: "four processes pass evidence around a ring, atomic acceptance",
            scenario: finish(Scenario {
                name: "ring4".into(),
                n: 4,
                domains: vec![
                    vals(&["c(v1)", "a"]),
                    vals(&["c(v1)", "a"]),
                    vals(&["c(v1)", "a"]),
                    vals(&["c(v1)", "a"]),
                ],
                script: (0..4)
                    .map(|i| vec![choose(), send((i + 1) % 4, 0), receive((i + 3) % 4)])
                    .collect(),
                acceptance: Acceptance::Rule {
                    rule: AcceptanceRule::AtomicCommit,
                },
                choice_points: vec![],
                explore_schedules: false,
            }),
        },
        CorpusEntry {
            note: "a process recommits: evidence of its first commitment circulates while \
                   the final one stays free",
            scenario: finish(Scenario {
                name: "recommit".into(),
                n: 2,
                domains: vec![commit_domain(), commit_domain()],
                script: vec![
                    vec![
                        Action::Commit {
                            value: "c(v1)".into(),
                        },
                        send(1, 0),
                        choose(),
                    ],
                    vec![receive(0), choose()],
                ],
                acceptance: Acceptance::Rule {
                    rule: AcceptanceRule::WeakCommit,
                },
                choice_points: vec![],
                explore_schedules: false,
            }),
        },
        CorpusEntry {
            note: "asymmetric extensional acceptance with full schedule exploration",
            scenario: finish(Scenario {
                name: "veto".into(),
                n: 2,
                domains: vec![vals(&["y", "n"]), vals(&["y", "n"])],
                script: vec![
                    vec![choose(), send(1, 0), receive(1)],
                    vec![choose(), send(0, 0), receive(0)],
                ],
                acceptance: Acceptance::Extensional {
                    accept: vec![
                        Valuation(vals(&["y", "y"])),
                        Valuation(vals(&["n", "n"])),
                        Valuation(vals(&["n", "y"])),
                    ],
                },
                choice_points: vec![],
                explore_schedules: true,
            }),
        },
    ]
}

pub fn all() -> Vec<Scenario> {
    entries().into_iter().map(|e| e.scenario).collect()
}

pub fn names() -> Vec<String> {
    entries().iter().map(|e| e.scenario.name.clone()).collect()
}

pub fn by_name(name: &str) -> Option<Scenario> {
    all().into_iter().find(|s| s.name == name)
}
