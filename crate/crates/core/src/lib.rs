//! Workbench for commitment-evidence protocols and their constraint
//! semantics.
//!
//! The pieces fit together as one round trip:
//!
//! * [`sim`] executes scenario-scripted protocols deterministically and
//!   enumerates their accepted outcomes exhaustively;
//! * [`trace2csp`] compiles a scenario (optionally narrowed by one of its
//!   traces) into a constraint system whose solutions are exactly those
//!   outcomes;
//! * [`solver`] decides such systems twice over — brute force and
//!   propagation-backed search — so each checks the other;
//! * [`realizer`] runs the reverse direction: a certificate-exchange
//!   protocol whose terminal outcomes are exactly a system's solutions;
//! * [`order`] and [`pomset`] analyze what a trace does *not* determine:
//!   happens-before validation, clock assignments that merely index an
//!   existing order, and linear-extension counts measuring how many
//!   timelines one partial order admits;
//! * [`reflink`] models a bilateral link whose terminal configurations
//!   resolve a symmetric agreement constraint over a lossy channel.
//!
//! [`equivalence`] ties the round trip into a single pass/fail report, and
//! [`corpus`] ships the scenarios the reports run on.

pub mod corpus;
pub mod equivalence;
pub mod order;
pub mod pomset;
pub mod randgen;
pub mod realizer;
pub mod reflink;
pub mod sim;
pub mod solver;
pub mod trace2csp;
pub mod types;
