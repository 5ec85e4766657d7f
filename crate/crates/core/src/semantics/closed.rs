//! Closed-semantics entailment: truth in the minimal interpretation.

use std::fmt;

use crate::action::ActionExpr;
use crate::cert::{AuthCert, Certificate, Formula, NamingCert};
use crate::interval::Validity;
use crate::principal::{FqName, Key};
use crate::semantics::eval::{eval_formula, sample_times};
use crate::semantics::interp::{minimal_interpretation, Interpretation};
use crate::semantics::run::Run;
use crate::semantics::{SemanticsError, Universe};

/// A key and time at which a formula fails, and any certificates issued
/// on top of the instance to get there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Refutation {
    pub key: Key,
    pub time: u64,
    pub extra: Vec<Certificate>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Entailed,
    Refuted(Refutation),
}

impl Verdict {
    pub fn is_entailed(&self) -> bool {
        matches!(self, Verdict::Entailed)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Entailed => f.write_str("ENTAILED"),
            Verdict::Refuted(r) => write!(f, "REFUTED (key {} time {})", r.key, r.time),
        }
    }
}

/// The canonical run of an instance, everything issued at time 0, with
/// its minimal interpretation.
#[derive(Debug, Clone)]
pub struct ClosedModel {
    issued: Vec<Certificate>,
    run: Run,
    interp: Interpretation,
}

impl ClosedModel {
    pub fn new(certs: &[Certificate], crls: &[Certificate], universe: &Universe) -> Result<ClosedModel, SemanticsError> {
        let mut issued: Vec<Certificate> = certs.iter().chain(crls).cloned().collect();
        issued.sort();
        issued.dedup();
        let run = Run::canonical(&issued)?;
        let interp = minimal_interpretation(&run, universe);
        Ok(ClosedModel { issued, run, interp })
    }

    pub fn run(&self) -> &Run {
        &self.run
    }

    pub fn interpretation(&self) -> &Interpretation {
        &self.interp
    }

    pub fn universe(&self) -> &Universe {
        self.interp.universe()
    }

    /// Whether `(∧ issued) → phi` holds at every universe key and time.
    pub fn check(&self, phi: &Formula) -> Verdict {
        match first_failure(&self.run, &self.interp, &self.issued, phi) {
            Some((key, time)) => Verdict::Refuted(Refutation { key, time, extra: Vec::new() }),
            None => Verdict::Entailed,
        }
    }
}

fn first_failure(run: &Run, interp: &Interpretation, issued: &[Certificate], phi: &Formula) -> Option<(Key, u64)> {
    let premise = Formula::conj(issued.iter().cloned().map(Formula::Issued));
    let claim = match premise {
        Some(p) => Formula::implies(p, phi.clone()),
        None => phi.clone(),
    };
    let keys = &interp.universe().keys;
    for t in sample_times(run, interp, phi) {
        for k in keys {
            if !eval_formula(run, interp, k, t, &claim) {
                return Some((k.clone(), t));
            }
        }
    }
    None
}

/// `phi` checked on the canonical run of `(certs, crls)`.
pub fn entails_closed(
    certs: &[Certificate],
    crls: &[Certificate],
    phi: &Formula,
    universe: &Universe,
) -> Result<Verdict, SemanticsError> {
    Ok(ClosedModel::new(certs, crls, universe)?.check(phi))
}

/// Irrevocable, always-valid certificates over the universe with subjects
/// `k` or `k·n`, and single-action grants.
pub fn extension_candidates(universe: &Universe) -> Vec<Certificate> {
    let mut subjects: Vec<FqName> = universe.keys.iter().cloned().map(FqName::key).collect();
    for k in &universe.keys {
        for n in &universe.names {
            subjects.push(FqName::key(k.clone()).child(n.clone()));
        }
    }
    let mut out = Vec::new();
    for k in &universe.keys {
        for n in &universe.names {
            for s in &subjects {
                out.push(Certificate::Naming(NamingCert {
                    issuer: k.clone(),
                    name: n.clone(),
                    subject: s.clone(),
                    validity: Validity::always(),
                    revoker: None,
                }));
            }
        }
        for s in &subjects {
            for a in &universe.actions {
                for delegate in [false, true] {
                    out.push(Certificate::Auth(AuthCert {
                        issuer: k.clone(),
                        subject: s.clone(),
                        delegate,
                        action: ActionExpr::singleton(a.clone()),
                        validity: Validity::always(),
                        revoker: None,
                    }));
                }
            }
        }
    }
    out
}

/// The canonical-run check, then the same check on every run that also
/// issues up to `extend` extension candidates at time 0. A refutation is
/// always genuine; entailment is relative to the extension bound.
pub fn entails_closed_extended(
    certs: &[Certificate],
    crls: &[Certificate],
    phi: &Formula,
    universe: &Universe,
    extend: usize,
) -> Result<Verdict, SemanticsError> {
    let base = ClosedModel::new(certs, crls, universe)?;
    let verdict = base.check(phi);
    if !verdict.is_entailed() || extend == 0 {
        return Ok(verdict);
    }
    let candidates: Vec<Certificate> =
        extension_candidates(universe).into_iter().filter(|c| !base.issued.contains(c)).collect();
    let mut chosen = Vec::new();
    Ok(search(&base, &candidates, 0, extend, &mut chosen, phi, universe))
}

fn search(
    base: &ClosedModel,
    candidates: &[Certificate],
    from: usize,
    left: usize,
    chosen: &mut Vec<Certificate>,
    phi: &Formula,
    universe: &Universe,
) -> Verdict {
    if left == 0 {
        return Verdict::Entailed;
    }
    for i in from..candidates.len() {
        chosen.push(candidates[i].clone());
        let run = Run::canonical(base.issued.iter().chain(chosen.iter())).expect("candidates are not CRLs");
        let interp = minimal_interpretation(&run, universe);
        if let Some((key, time)) = first_failure(&run, &interp, &base.issued, phi) {
            return Verdict::Refuted(Refutation { key, time, extra: chosen.clone() });
        }
        let deeper = search(base, candidates, i + 1, left - 1, chosen, phi, universe);
        chosen.pop();
        if !deeper.is_entailed() {
            return deeper;
        }
    }
    Verdict::Entailed
}
