//! Constraint-system solvers.
//!
//! Two deliberately independent routes: [`solve_bruteforce`] enumerates the
//! whole domain product and filters (the ground truth at desk scale), and
//! [`solve_search`] runs backtracking with AC-3 propagation over binary
//! constraints and forward checking on wider scopes. Both enumerate
//! solutions in the same deterministic order — participants in declaration
//! order, values in domain declaration order — so results compare exactly.

use thiserror::Error;

use crate::types::{ConstraintSystem, CspError, Valuation};

/// Brute-force enumeration refuses domain products larger than this.
pub const MAX_ENUMERATION: u128 = 1_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SolverError {
    #[error(transparent)]
    Csp(#[from] CspError),
    #[error("domain product {product} exceeds the enumeration bound {bound}")]
    TooLarge { product: u128, bound: u128 },
}

/// Whether a valuation satisfies every constraint of the system.
pub fn check_valuation(csp: &ConstraintSystem, v: &Valuation) -> Result<bool, SolverError> {
    csp.check_in_domains(v)?;
    Ok(csp.constraints.iter().all(|c| c.satisfied_by(v)))
}

/// Every satisfying valuation, by exhaustive enumeration in lexicographic
/// order.
pub fn solve_bruteforce(csp: &ConstraintSystem) -> Result<Vec<Valuation>, SolverError> {
    csp.validate()?;
    let product = csp.product_size();
    if product > MAX_ENUMERATION {
        return Err(SolverError::TooLarge {
            product,
            bound: MAX_ENUMERATION,
        });
    }
    let mut solutions = Vec::new();
    if product == 0 {
        return Ok(solutions);
    }
    for index in 0..product as u64 {
        let v = csp.valuation_at(index);
        if csp.constraints.iter().all(|c| c.satisfied_by(&v)) {
            solutions.push(v);
        }
    }
    Ok(solutions)
}

/// Remove values of participant `x` (the `side`-th scope position of binary
/// constraint `c`) lacking any support in the other participant's live
/// domain. Returns whether anything was removed.
fn revise(csp: &ConstraintSystem, domains: &mut [Vec<String>], ci: usize, side: usize) -> bool {
    let scope = &csp.constraints[ci].scope;
    let (x, y) = (scope[side], scope[1 - side]);
    let allowed = &csp.constraints[ci].allowed;
    let before = domains[x].len();
    let other: Vec<String> = domains[y].clone();
    domains[x].retain(|vx| {
        other.iter().any(|vy| {
            let tuple = if side == 0 {
                vec![vx.clone(), vy.clone()]
            } else {
                vec![vy.clone(), vx.clone()]
            };
            allowed.contains(&tuple)
        })
    });
    domains[x].len() != before
}

/// AC-3 over the binary constraints. Returns false on a domain wipeout.
fn ac3(csp: &ConstraintSystem, domains: &mut [Vec<String>]) -> bool {
    let binary: Vec<usize> = csp
        .constraints
        .iter()
        .enumerate()
        .filter(|(_, c)| c.scope.len() == 2)
        .map(|(i, _)| i)
        .collect();
    let mut queue: Vec<(usize, usize)> = binary.iter().flat_map(|&ci| [(ci, 0), (ci, 1)]).collect();
    while let Some((ci, side)) = queue.pop() {
        if revise(csp, domains, ci, side) {
            let x = csp.constraints[ci].scope[side];
            if domains[x].is_empty() {
                return false;
            }
            for &cj in &binary {
                let scope = &csp.constraints[cj].scope;
                for s in 0..2 {
                    // Re-examine arcs pointed at x's neighbors.
                    if scope[1 - s] == x && !(cj == ci && s == side) {
                        queue.push((cj, s));
                    }
                }
            }
        }
    }
    true
}

/// Partial-assignment consistency for forward checking: a constraint can
/// still be satisfied if some allowed tuple agrees with every assigned
/// scope position.
fn supportable(csp: &ConstraintSystem, ci: usize, assignment: &[String], depth: usize) -> bool {
    let c = &csp.constraints[ci];
    if c.scope.iter().all(|&p| p >= depth) {
        return true;
    }
    c.allowed.iter().any(|tuple| {
        c.scope
            .iter()
            .zip(tuple)
            .all(|(&p, value)| p >= depth || assignment[p] == *value)
    })
}

fn search(
    csp: &ConstraintSystem,
    domains: &[Vec<String>],
    assignment: &mut Vec<String>,
    solutions: &mut Vec<Valuation>,
) {
    let depth = assignment.len();
    if depth == csp.domains.len() {
        solutions.push(Valuation(assignment.clone()));
        return;
    }
    'values: for value in &domains[depth] {
        assignment.push(value.clone());
        // Forward check: prune future binary neighbors of `depth`, and
        // require wider constraints to remain supportable.
        let mut pruned: Vec<Vec<String>> = domains.to_vec();
        for (ci, c) in csp.constraints.iter().enumerate() {
            if c.scope.len() == 2 {
                for side in 0..2 {
                    let (here, there) = (c.scope[side], c.scope[1 - side]);
                    if here == depth && there > depth {
                        pruned[there].retain(|w| {
                            let tuple = if side == 0 {
                                vec![value.clone(), w.clone()]
                            } else {
                                vec![w.clone(), value.clone()]
                            };
                            c.allowed.contains(&tuple)
                        });
                        if pruned[there].is_empty() {
                            assignment.pop();
                            continue 'values;
                        }
                    }
                }
            }
            if !supportable(csp, ci, assignment, depth + 1) {
                assignment.pop();
                continue 'values;
            }
        }
        search(csp, &pruned, assignment, solutions);
        assignment.pop();
    }
}

/// Backtracking search with propagation. Produces exactly the brute-force
/// solution set, in the same order, without walking the full product.
pub fn solve_search(csp: &ConstraintSystem) -> Result<Vec<Valuation>, SolverError> {
    csp.validate()?;
    let mut domains: Vec<Vec<String>> = csp.domains.iter().map(|d| d.values.clone()).collect();
    if domains.iter().any(|d| d.is_empty()) {
        return Ok(Vec::new());
    }
    if !ac3(csp, &mut domains) {
        return Ok(Vec::new());
    }
    let mut solutions = Vec::new();
    search(csp, &domains, &mut Vec::new(), &mut solutions);
    Ok(solutions)
}
