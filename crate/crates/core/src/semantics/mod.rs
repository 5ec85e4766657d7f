//! The model-theoretic side: runs, interpretations, formula evaluation,
//! closed-semantics entailment and counter-model construction.

pub mod closed;
pub mod eval;
pub mod interp;
pub mod run;
pub mod universe;
pub mod witness;

use thiserror::Error;

use crate::cert::CertError;
use crate::engine::EngineError;

pub use closed::{
    entails_closed, entails_closed_extended, extension_candidates, ClosedModel, Refutation, Verdict,
};
pub use eval::{eval_formula, formula_breakpoints, sample_times};
pub use interp::{interp_leq, is_consistent, least_above, minimal_interpretation, Interpretation, Layer, Level};
pub use run::{applicable, Run};
pub use universe::{witness_literals, Universe};
pub use witness::{build_completeness_witness, time_cells, Witness};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemanticsError {
    #[error("inconsistent CRLs: {0} overlaps {1}")]
    InconsistentCrls(String, String),
    #[error("{0}")]
    VariantMismatch(&'static str),
    #[error("key supply too small: need {needed}, have {available}")]
    SupplyTooSmall { needed: usize, available: usize },
    #[error("witness postcondition failed: {0}")]
    PostconditionFailed(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Cert(#[from] CertError),
}
