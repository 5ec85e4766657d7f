use std::collections::BTreeSet;

use crate::cert::Formula;
use crate::principal::Key;
use crate::semantics::interp::{Interpretation, Level};
use crate::semantics::run::{add_interval, applicable, Run};

/// `r, π, k, t ⊨ φ`.
pub fn eval_formula(run: &Run, interp: &Interpretation, k: &Key, t: u64, phi: &Formula) -> bool {
    let layer = interp.layer_at(t);
    match phi {
        Formula::Bound(p, q) => layer.intension(q, k).is_subset(&layer.intension(p, k)),
        Formula::Issued(c) => run.issued_by(c, t),
        Formula::Valid(c) => applicable(run, c, t).unwrap_or(false),
        Formula::Perm(k1, p, a) | Formula::Del(k1, p, a) => {
            let need = if matches!(phi, Formula::Del(..)) { Level::Delegate } else { Level::Permit };
            let actions: Vec<_> = interp.universe().actions_in(a).collect();
            layer.intension(p, k1).iter().all(|k2| actions.iter().all(|act| layer.level(k1, k2, act) >= need))
        }
        Formula::NowIn(v) => v.contains(t),
        Formula::Not(f) => !eval_formula(run, interp, k, t, f),
        Formula::And(f, g) => eval_formula(run, interp, k, t, f) && eval_formula(run, interp, k, t, g),
    }
}

/// Times at which the truth of `phi` can change on its own account.
pub fn formula_breakpoints(phi: &Formula, out: &mut BTreeSet<u64>) {
    match phi {
        Formula::NowIn(v) => add_interval(out, v),
        Formula::Not(f) => formula_breakpoints(f, out),
        Formula::And(f, g) => {
            formula_breakpoints(f, out);
            formula_breakpoints(g, out);
        }
        _ => {}
    }
}

/// One time from each stretch on which `run`, `interp` and `phi` are all
/// constant; checking these checks every time.
pub fn sample_times(run: &Run, interp: &Interpretation, phi: &Formula) -> BTreeSet<u64> {
    let mut out = run.breakpoints();
    out.extend(interp.starts());
    formula_breakpoints(phi, &mut out);
    out
}
