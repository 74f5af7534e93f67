//! Shared domain types: processes, commitments, evidence, events, and
//! constraint systems.
//!
//! A *commitment* is one identifiable local state a process has bound itself
//! to. Commitments are recognized by observers through a content-derived
//! [`EvidenceId`]; a message never carries the committed value itself, only
//! the evidence that the commitment exists.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Index into the process set `{0, .., n-1}` of a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProcessId(pub usize);

impl fmt::Display for ProcessId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

/// Content-derived identifier of a commitment: the 64-bit FNV-1a digest of
/// the canonical byte encoding `process|index|value`.
///
/// Equal `(process, index, value)` triples always yield equal ids, so any
/// holder can recognize which commitment a piece of evidence refers to
/// without the value being shipped alongside it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EvidenceId(pub u64);

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a over a byte string.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = FNV_OFFSET;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

impl EvidenceId {
    /// Digest of the canonical encoding `process|index|value`.
    pub fn digest(process: ProcessId, index: usize, value: &str) -> Self {
        let canonical = format!("{}|{}|{}", process.0, index, value);
        EvidenceId(fnv1a64(canonical.as_bytes()))
    }
}

impl fmt::Display for EvidenceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

// Evidence ids travel through JSON as fixed-width hex strings so trace files
// diff cleanly and carry no integer-precision surprises.
impl Serialize for EvidenceId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&format!("{:016x}", self.0))
    }
}

impl<'de> Deserialize<'de> for EvidenceId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        u64::from_str_radix(&s, 16)
            .map(EvidenceId)
            .map_err(|e| serde::de::Error::custom(format!("bad evidence id {s:?}: {e}")))
    }
}

/// One identifiable local state a process has committed to.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Commitment {
    pub process: ProcessId,
    /// Position in the owning process's commitment sequence.
    pub index: usize,
    pub value: String,
    pub evidence: EvidenceId,
}

impl Commitment {
    pub fn new(process: ProcessId, index: usize, value: impl Into<String>) -> Self {
        let value = value.into();
        let evidence = EvidenceId::digest(process, index, &value);
        Commitment {
            process,
            index,
            value,
            evidence,
        }
    }
}

/// Identifier of an event inside one trace, unique across processes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EventId(pub String);

impl EventId {
    pub fn new(id: impl Into<String>) -> Self {
        EventId(id.into())
    }
}

impl fmt::Display for EventId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for EventId {
    fn from(s: &str) -> Self {
        EventId(s.to_owned())
    }
}

/// An observationally distinguishable change of local state: either the
/// process committed, or it observed evidence of someone else's commitment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub id: EventId,
    pub process: ProcessId,
    pub kind: EventKind,
    /// Position in the owning process's event sequence.
    pub local_seq: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum EventKind {
    Commit(Commitment),
    Observe {
        evidence: EvidenceId,
        from: ProcessId,
    },
}

/// One committed value per participant; a candidate global outcome.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Valuation(pub Vec<String>);

impl Valuation {
    pub fn arity(&self) -> usize {
        self.0.len()
    }

    /// Projection onto a constraint scope, in scope order.
    pub fn project(&self, scope: &[usize]) -> Vec<String> {
        scope.iter().map(|&i| self.0[i].clone()).collect()
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.0.join(", "))
    }
}

impl<S: Into<String>> FromIterator<S> for Valuation {
    fn from_iter<T: IntoIterator<Item = S>>(iter: T) -> Self {
        Valuation(iter.into_iter().map(Into::into).collect())
    }
}

/// Finite value set of one participant, in declaration order.
///
/// `emptied_by_narrowing` marks a domain that evidence narrowing reduced to
/// nothing. That is a legitimate result (no global outcome is consistent
/// with the observed evidence), not a malformed system.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Domain {
    pub values: Vec<String>,
    #[serde(default)]
    pub emptied_by_narrowing: bool,
}

impl Domain {
    pub fn new(values: Vec<String>) -> Self {
        Domain {
            values,
            emptied_by_narrowing: false,
        }
    }

    pub fn emptied() -> Self {
        Domain {
            values: Vec::new(),
            emptied_by_narrowing: true,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn contains(&self, value: &str) -> bool {
        self.values.iter().any(|v| v == value)
    }
}

/// A compatibility constraint: which value tuples over `scope` may coexist.
///
/// The predicate is extensional: `allowed` lists every admissible tuple, one
/// entry per tuple, components in scope order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constraint {
    /// Participant indices the constraint ranges over, in tuple order.
    pub scope: Vec<usize>,
    pub allowed: BTreeSet<Vec<String>>,
}

impl Constraint {
    pub fn new(scope: Vec<usize>, allowed: impl IntoIterator<Item = Vec<String>>) -> Self {
        Constraint {
            scope,
            allowed: allowed.into_iter().collect(),
        }
    }

    /// Whether a valuation's projection onto this scope is admissible.
    pub fn satisfied_by(&self, v: &Valuation) -> bool {
        self.allowed.contains(&v.project(&self.scope))
    }
}

/// Per-participant finite domains plus the constraints that tie them
/// together. Satisfying valuations are the global outcomes the system
/// admits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintSystem {
    pub domains: Vec<Domain>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CspError {
    #[error("constraint {constraint} has arity {arity}, expected a binary scope")]
    NotBinary { constraint: usize, arity: usize },
    #[error(
        "constraint {constraint} scope references participant {participant}, but only {n} exist"
    )]
    ScopeOutOfRange {
        constraint: usize,
        participant: usize,
        n: usize,
    },
    #[error("constraint {constraint} scope repeats participant {participant}")]
    ScopeRepeats {
        constraint: usize,
        participant: usize,
    },
    #[error("constraint {constraint} allows tuple of arity {got}, scope has arity {want}")]
    TupleArity {
        constraint: usize,
        got: usize,
        want: usize,
    },
    #[error(
        "constraint {constraint} allows value {value:?} outside participant {participant}'s domain"
    )]
    TupleValue {
        constraint: usize,
        participant: usize,
        value: String,
    },
    #[error("participant {participant} has an empty domain without an emptied-by-narrowing mark")]
    EmptyDomain { participant: usize },
    #[error("participant {participant}'s domain repeats value {value:?}")]
    DuplicateValue { participant: usize, value: String },
    #[error("valuation has arity {got}, system has {want} participants")]
    ValuationArity { got: usize, want: usize },
    #[error("valuation assigns {value:?} to participant {participant}, outside its domain")]
    ValueOutsideDomain { participant: usize, value: String },
}

impl ConstraintSystem {
    pub fn new(domains: Vec<Domain>, constraints: Vec<Constraint>) -> Self {
        ConstraintSystem {
            domains,
            constraints,
        }
    }

    pub fn participants(&self) -> usize {
        self.domains.len()
    }

    /// Structural well-formedness: scopes in range and duplicate-free,
    /// tuples of the right arity over declared values, domains non-empty
    /// unless explicitly emptied by narrowing.
    pub fn validate(&self) -> Result<(), CspError> {
        let n = self.domains.len();
        for (i, d) in self.domains.iter().enumerate() {
            if d.values.is_empty() && !d.emptied_by_narrowing {
                return Err(CspError::EmptyDomain { participant: i });
            }
            let mut seen = BTreeSet::new();
            for v in &d.values {
                if !seen.insert(v) {
                    return Err(CspError::DuplicateValue {
                        participant: i,
                        value: v.clone(),
                    });
                }
            }
        }
        for (ci, c) in self.constraints.iter().enumerate() {
            let mut seen = BTreeSet::new();
            for &p in &c.scope {
                if p >= n {
                    return Err(CspError::ScopeOutOfRange {
                        constraint: ci,
                        participant: p,
                        n,
                    });
                }
                if !seen.insert(p) {
                    return Err(CspError::ScopeRepeats {
                        constraint: ci,
                        participant: p,
                    });
                }
            }
            for tuple in &c.allowed {
                if tuple.len() != c.scope.len() {
                    return Err(CspError::TupleArity {
                        constraint: ci,
                        got: tuple.len(),
                        want: c.scope.len(),
                    });
                }
                for (k, value) in tuple.iter().enumerate() {
                    if !self.domains[c.scope[k]].contains(value) {
                        return Err(CspError::TupleValue {
                            constraint: ci,
                            participant: c.scope[k],
                            value: value.clone(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Product of domain sizes; zero when any domain is empty.
    pub fn product_size(&self) -> u128 {
        self.domains.iter().map(|d| d.len() as u128).product()
    }

    /// Valuation at `index` in lexicographic order: participant 0 is the
    /// most significant digit, values ordered by domain declaration.
    pub fn valuation_at(&self, index: u64) -> Valuation {
        let mut digits = vec![0usize; self.domains.len()];
        let mut rest = index;
        for (i, d) in self.domains.iter().enumerate().rev() {
            let len = d.len() as u64;
            digits[i] = (rest % len) as usize;
            rest /= len;
        }
        Valuation(
            digits
                .iter()
                .enumerate()
                .map(|(i, &k)| self.domains[i].values[k].clone())
                .collect(),
        )
    }

    /// Inverse of [`valuation_at`](Self::valuation_at). `None` if any value
    /// is outside its participant's domain.
    pub fn index_of(&self, v: &Valuation) -> Option<u64> {
        if v.arity() != self.domains.len() {
            return None;
        }
        let mut index: u64 = 0;
        for (i, d) in self.domains.iter().enumerate() {
            let k = d.values.iter().position(|x| x == &v.0[i])?;
            index = index * d.len() as u64 + k as u64;
        }
        Some(index)
    }

    /// Arity and domain-membership check for a candidate valuation.
    pub fn check_in_domains(&self, v: &Valuation) -> Result<(), CspError> {
        if v.arity() != self.domains.len() {
            return Err(CspError::ValuationArity {
                got: v.arity(),
                want: self.domains.len(),
            });
        }
        for (i, value) in v.0.iter().enumerate() {
            if !self.domains[i].contains(value) {
                return Err(CspError::ValueOutsideDomain {
                    participant: i,
                    value: value.clone(),
                });
            }
        }
        Ok(())
    }
}

/// Whether a binary constraint's compatibility relation is symmetric:
/// every allowed `(s1, s2)` has its mirror `(s2, s1)` allowed too.
pub fn is_symmetric(c: &Constraint) -> Result<bool, CspError> {
    if c.scope.len() != 2 {
        return Err(CspError::NotBinary {
            constraint: 0,
            arity: c.scope.len(),
        });
    }
    Ok(c.allowed
        .iter()
        .all(|pair| c.allowed.contains(&vec![pair[1].clone(), pair[0].clone()])))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv1a64_reference_vectors() {
        // Published FNV-1a test vectors.
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn evidence_id_is_pure_in_the_triple() {
        let a = EvidenceId::digest(ProcessId(1), 2, "c(v1)");
        let b = EvidenceId::digest(ProcessId(1), 2, "c(v1)");
        assert_eq!(a, b);
        assert_ne!(a, EvidenceId::digest(ProcessId(1), 2, "c(v2)"));
        assert_ne!(a, EvidenceId::digest(ProcessId(2), 2, "c(v1)"));
        assert_ne!(a, EvidenceId::digest(ProcessId(1), 3, "c(v1)"));
    }

    #[test]
    fn evidence_id_round_trips_as_hex() {
        let id = EvidenceId::digest(ProcessId(0), 0, "x");
        let json = serde_json::to_string(&id).unwrap();
        assert_eq!(json.len(), 18); // 16 hex digits plus quotes
        let back: EvidenceId = serde_json::from_str(&json).unwrap();
        assert_eq!(back, id);
    }

    #[test]
    fn symmetric_accepts_mirrored_pairs() {
        let c = Constraint::new(
            vec![0, 1],
            [
                vec!["x".into(), "y".into()],
                vec!["y".into(), "x".into()],
                vec!["x".into(), "x".into()],
            ],
        );
        assert_eq!(is_symmetric(&c), Ok(true));
    }

    #[test]
    fn symmetric_rejects_missing_mirror() {
        let c = Constraint::new(vec![0, 1], [vec!["x".into(), "y".into()]]);
        assert_eq!(is_symmetric(&c), Ok(false));
    }

    #[test]
    fn symmetric_is_vacuous_on_empty_relation() {
        let c = Constraint::new(vec![0, 1], []);
        assert_eq!(is_symmetric(&c), Ok(true));
    }

    #[test]
    fn symmetric_requires_binary_scope() {
        let c = Constraint::new(vec![0, 1, 2], []);
        assert!(matches!(is_symmetric(&c), Err(CspError::NotBinary { .. })));
    }

    #[test]
    fn valuation_indexing_round_trips() {
        let csp = ConstraintSystem::new(
            vec![
                Domain::new(vec!["a".into(), "b".into()]),
                Domain::new(vec!["x".into(), "y".into(), "z".into()]),
            ],
            vec![],
        );
        assert_eq!(csp.product_size(), 6);
        for i in 0..6 {
            let v = csp.valuation_at(i);
            assert_eq!(csp.index_of(&v), Some(i));
        }
        // Participant 0 is the most significant digit.
        assert_eq!(csp.valuation_at(0), Valuation(vec!["a".into(), "x".into()]));
        assert_eq!(csp.valuation_at(3), Valuation(vec!["b".into(), "x".into()]));
    }

    #[test]
    fn validate_flags_bad_scope_and_tuples() {
        let mut csp = ConstraintSystem::new(
            vec![Domain::new(vec!["a".into()])],
            vec![Constraint::new(vec![0, 1], [])],
        );
        assert!(matches!(
            csp.validate(),
            Err(CspError::ScopeOutOfRange { .. })
        ));

        csp.constraints = vec![Constraint::new(vec![0], [vec!["b".into()]])];
        assert!(matches!(csp.validate(), Err(CspError::TupleValue { .. })));

        csp.constraints = vec![];
        csp.domains = vec![Domain::new(vec![])];
        assert!(matches!(csp.validate(), Err(CspError::EmptyDomain { .. })));

        csp.domains = vec![Domain::emptied()];
        assert_eq!(csp.validate(), Ok(()));
    }
}
