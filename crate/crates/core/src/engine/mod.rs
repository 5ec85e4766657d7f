//! Tuple reduction: CRL liveness, rule application, closures and queries.

pub mod closure;
pub mod derivation;
pub mod liveness;
pub mod query;
pub mod rules;

use thiserror::Error;

use crate::cert::CertError;

pub use closure::{default_bound, subject_len, Closure, ClosureConfig};
pub use derivation::{Derivation, Step, StepKind};
pub use liveness::{
    crl_conflict, crl_set_consistent, is_live, tuple_of_pair, tuples_of, tuples_of_run, tuples_with_provenance,
    Provenance,
};
pub use query::{
    auth_query, decide_concrete, derivable, derivable_from_certs, name_query, result_certificates, result_tuples,
    ConcreteDecider, Mode, Proof,
};
pub use rules::{apply_rule, Rule, RuleSet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("unknown rule {0:?}")]
    UnknownRule(String),
    #[error("unknown rule set {0:?} (expected rs0, rs1 or rs2)")]
    UnknownRuleSet(String),
    #[error("{rule} takes {expected} premises, got {got}")]
    Arity { rule: Rule, expected: usize, got: usize },
    #[error("{0} needs its conclusion as a target")]
    MissingTarget(Rule),
    #[error("expression bound {bound} is below the largest input subject ({needed} leaves)")]
    BoundTooSmall { bound: usize, needed: usize },
    #[error("certificate is not live with respect to the CRL")]
    NotLive,
    #[error("{0}")]
    VariantMismatch(&'static str),
    #[error("query {0} is not concrete (key subject, point interval, single literal action)")]
    NotConcrete(String),
    #[error("cannot answer {query} queries from a {closure} closure")]
    RuleSetMismatch { closure: RuleSet, query: RuleSet },
    #[error(transparent)]
    Cert(#[from] CertError),
}
