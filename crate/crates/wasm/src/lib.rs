//! Browser bindings for the demo page.
//!
//! Every export takes and returns JSON strings wrapped in a small envelope:
//! `{"ok": true, "value": ...}` on success, `{"ok": false, "error": "..."}`
//! otherwise. Keeping the boundary stringly typed means the same functions
//! run unchanged in native unit tests.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::json;
use wasm_bindgen::prelude::wasm_bindgen;

use accord::equivalence::equivalence_report;
use accord::order::{
    assign_lamport_clocks, derive_happens_before, transitive_reduction, validate_partial_order,
};
use accord::pomset::{count_extensions_of, MAX_POMSET_EVENTS};
use accord::reflink::{run_link_exchange, run_link_sweep, LinkConfig};
use accord::sim::{run_scenario, Scenario, Trace};
use accord::types::{EventId, EventKind};

fn envelope(result: Result<serde_json::Value, String>) -> String {
    let doc = match result {
        Ok(value) => json!({ "ok": true, "value": value }),
        Err(error) => json!({ "ok": false, "error": error }),
    };
    doc.to_string()
}

fn to_value<T: Serialize>(value: &T) -> Result<serde_json::Value, String> {
    serde_json::to_value(value).map_err(|e| e.to_string())
}

/// Names, notes, and shapes of the built-in scenarios.
#[wasm_bindgen]
pub fn corpus_list() -> String {
    let list: Vec<serde_json::Value> = accord::corpus::entries()
        .iter()
        .map(|e| {
            json!({
                "name": e.scenario.name,
                "note": e.note,
                "n": e.scenario.n,
                "choice_points": e.scenario.choice_points.len(),
            })
        })
        .collect();
    envelope(Ok(serde_json::Value::Array(list)))
}

/// Full scenario document for one corpus entry.
#[wasm_bindgen]
pub fn scenario_json(name: &str) -> String {
    envelope(match accord::corpus::by_name(name) {
        Some(s) => to_value(&s),
        None => Err(format!("unknown scenario {name:?}")),
    })
}

fn parse_scenario(scenario: &str) -> Result<Scenario, String> {
    let s: Scenario = serde_json::from_str(scenario).map_err(|e| format!("scenario: {e}"))?;
    s.validate().map_err(|e| e.to_string())?;
    Ok(s)
}

/// Equivalence report for a scenario document.
#[wasm_bindgen]
pub fn check_equivalence(scenario: &str) -> String {
    envelope(parse_scenario(scenario).and_then(|s| {
        let report = equivalence_report(&s).map_err(|e| e.to_string())?;
        to_value(&report)
    }))
}

#[derive(Serialize)]
struct EventView {
    id: EventId,
    process: usize,
    local_seq: usize,
    label: String,
    clock: u64,
}

#[derive(Serialize)]
struct SimulationView {
    trace: Trace,
    final_valuation: Vec<String>,
    accepted: bool,
    events: Vec<EventView>,
    covering_edges: Vec<(EventId, EventId)>,
    concurrent_pairs: usize,
    linear_extensions: Option<u64>,
}

fn simulate_inner(
    scenario: &str,
    seed: u64,
    choices_csv: &str,
) -> Result<serde_json::Value, String> {
    let s = parse_scenario(scenario)?;
    let ordered: Vec<String> = if choices_csv.trim().is_empty() {
        Vec::new()
    } else {
        choices_csv
            .split(',')
            .map(|c| c.trim().to_string())
            .collect()
    };
    let choices = s
        .choices_from_ordered(&ordered)
        .map_err(|e| e.to_string())?;
    let trace = run_scenario(&s, seed, &choices).map_err(|e| e.to_string())?;

    let hb = derive_happens_before(&trace).map_err(|e| e.to_string())?;
    let report = validate_partial_order(&hb).map_err(|e| e.to_string())?;
    if !report.ok {
        return Err("trace induced an invalid happens-before relation".to_string());
    }
    let clocks: BTreeMap<EventId, u64> =
        assign_lamport_clocks(&trace).map_err(|e| e.to_string())?;
    let events: Vec<EventView> = trace
        .events()
        .into_iter()
        .map(|e| {
            let label = match &e.kind {
                EventKind::Commit(c) => format!("commit {}", c.value),
                EventKind::Observe { from, .. } => format!("observe p{}", from.0),
            };
            EventView {
                clock: clocks[&e.id],
                id: e.id,
                process: e.process.0,
                local_seq: e.local_seq,
                label,
            }
        })
        .collect();
    let ids: Vec<&EventId> = hb.events.iter().collect();
    let mut concurrent_pairs = 0;
    for i in 0..ids.len() {
        for j in (i + 1)..ids.len() {
            if hb.concurrent(ids[i], ids[j]) {
                concurrent_pairs += 1;
            }
        }
    }
    let linear_extensions = if events.len() <= MAX_POMSET_EVENTS {
        Some(count_extensions_of(&hb).map_err(|e| e.to_string())?)
    } else {
        None
    };
    let final_valuation = trace.final_valuation().map(|v| v.0).unwrap_or_default();
    let accepted = trace
        .final_valuation()
        .map(|v| s.acceptance.accepts(&v))
        .unwrap_or(false);
    to_value(&SimulationView {
        covering_edges: transitive_reduction(&hb).pairs.into_iter().collect(),
        trace,
        final_valuation,
        accepted,
        events,
        concurrent_pairs,
        linear_extensions,
    })
}

/// Run one seeded execution and bundle the trace with its order analysis.
#[wasm_bindgen]
pub fn simulate(scenario: &str, seed: u64, choices_csv: &str) -> String {
    envelope(simulate_inner(scenario, seed, choices_csv))
}

/// One seeded link exchange: transcript plus terminal endpoint states.
#[wasm_bindgen]
pub fn link_run(loss: f64, max_attempts: u32, seed: u64) -> String {
    envelope(if !(0.0..=1.0).contains(&loss) {
        Err(format!("loss must be in [0, 1], got {loss}"))
    } else if max_attempts == 0 {
        Err("max_attempts must be at least 1".to_string())
    } else {
        to_value(&run_link_exchange(LinkConfig { loss, max_attempts }, seed))
    })
}

/// Histogram of terminal pairs over seeds `0..seeds`.
#[wasm_bindgen]
pub fn link_sweep(loss: f64, max_attempts: u32, seeds: u64) -> String {
    envelope(if !(0.0..=1.0).contains(&loss) {
        Err(format!("loss must be in [0, 1], got {loss}"))
    } else if max_attempts == 0 {
        Err("max_attempts must be at least 1".to_string())
    } else if seeds == 0 || seeds > 100_000 {
        Err(format!("seeds must be in 1..=100000, got {seeds}"))
    } else {
        to_value(&run_link_sweep(LinkConfig { loss, max_attempts }, seeds))
    })
}
