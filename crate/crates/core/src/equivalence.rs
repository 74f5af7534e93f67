//! End-to-end equivalence check for one scenario.
//!
//! Three independently computed sets must coincide: the accepted outcomes
//! of exhaustive execution, the solutions of the compiled constraint
//! system, and the terminal outcomes of the certificate-exchange protocol
//! realizing that system. The report carries all three so a mismatch shows
//! exactly which direction broke.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::realizer::{terminal_outcome_set, RealizeError};
use crate::sim::{enumerate_outcomes, Scenario, SimError};
use crate::solver::{solve_bruteforce, SolverError};
use crate::trace2csp::{compile_trace, CompileError};
use crate::types::Valuation;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub scenario: String,
    /// Accepted outcomes of exhaustive execution, sorted.
    pub simulated: Vec<Valuation>,
    /// Solutions of the compiled constraint system, sorted.
    pub csp_solutions: Vec<Valuation>,
    /// Terminal outcomes of the realization protocol, sorted.
    pub realized: Vec<Valuation>,
    pub pass: bool,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EquivalenceError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Solve(#[from] SolverError),
    #[error(transparent)]
    Realize(#[from] RealizeError),
}

pub fn equivalence_report(s: &Scenario) -> Result<EquivalenceReport, EquivalenceError> {
    let simulated: Vec<Valuation> = enumerate_outcomes(s)?.into_iter().collect();
    let csp = compile_trace(s, None)?;
    let mut csp_solutions = solve_bruteforce(&csp)?;
    csp_solutions.sort();
    let realized: Vec<Valuation> = terminal_outcome_set(&csp)?.into_iter().collect();
    let pass = simulated == csp_solutions && csp_solutions == realized;
    Ok(EquivalenceReport {
        scenario: s.name.clone(),
        simulated,
        csp_solutions,
        realized,
        pass,
    })
}
