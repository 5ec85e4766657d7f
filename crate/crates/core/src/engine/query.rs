//! Derivability, concrete decisions and result certificates.

use std::fmt;

use crate::action::{Action, ActionExpr};
use crate::cert::{subsumes, Auth5, Certificate, Name4, Tuple};
use crate::engine::closure::{Closure, ClosureConfig};
use crate::engine::derivation::{Derivation, StepKind};
use crate::engine::liveness::{tuples_with_provenance, Provenance};
use crate::engine::rules::{Rule, RuleSet};
use crate::engine::EngineError;
use crate::interval::{cells, Validity};
use crate::principal::{FqName, Key, LocalName};

/// How a proof relates to the requested tuple.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Mode {
    /// The derivation concludes the target itself.
    Exact,
    /// The derivation concludes a tuple that subsumes the (point-valued or
    /// concrete) target.
    Subsumed(Tuple),
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Exact => f.write_str("exact"),
            Mode::Subsumed(t) => write!(f, "subsumed by {t}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Proof {
    pub mode: Mode,
    pub derivation: Derivation,
}

impl Closure {
    /// Whether `target` is derivable under `rs`. For RS0 and RS1 this is
    /// membership (or, for point-valued and concrete targets, subsumption
    /// by a member). For RS2 the closure must have been built under RS1 or
    /// RS2; the target is derivable iff every (time, action) point of it is
    /// covered by a single member, and the proof is the explicit R4 chain.
    pub fn prove(&self, target: &Tuple, rs: RuleSet) -> Result<Option<Proof>, EngineError> {
        if rs == RuleSet::Rs2 && self.rules() == RuleSet::Rs0 {
            return Err(EngineError::RuleSetMismatch { closure: self.rules(), query: rs });
        }
        if let Some(i) = self.position(target) {
            return Ok(Some(Proof { mode: Mode::Exact, derivation: self.derivation(i) }));
        }
        if rs == RuleSet::Rs2 {
            return Ok(match target {
                Tuple::Name4(n) => self.cover_name4(n),
                Tuple::Auth5(a) => self.cover_auth5(a),
                Tuple::Bind3(_) => None,
            }
            .map(|derivation| Proof { mode: Mode::Exact, derivation }));
        }
        let subsumable = match target {
            Tuple::Name4(_) => target.is_point_valued(),
            Tuple::Auth5(_) => target.is_concrete(),
            Tuple::Bind3(_) => false,
        };
        if subsumable {
            if let Some(i) = self.subsumer(target) {
                return Ok(Some(Proof {
                    mode: Mode::Subsumed(self.tuple(i).clone()),
                    derivation: self.derivation(i),
                }));
            }
        }
        Ok(None)
    }

    /// The first member subsuming `target`.
    pub fn subsumer(&self, target: &Tuple) -> Option<usize> {
        let group = match target {
            Tuple::Name4(n) => self.name4_group(&n.issuer, &n.name, &n.subject),
            Tuple::Auth5(a) => self.auth5_group(&a.issuer, &a.subject),
            Tuple::Bind3(b) => self.bind3_from(&b.lhs),
        };
        group.iter().copied().find(|&i| subsumes(self.tuple(i), target))
    }

    fn cover_name4(&self, n: &Name4) -> Option<Derivation> {
        let target = Tuple::Name4(n.clone());
        let group = self.name4_group(&n.issuer, &n.name, &n.subject);
        let chosen = greedy_cover(group.iter().map(|&i| (self.tuple(i).validity(), i)), &n.validity)?;
        let mut d = Derivation::new();
        let steps: Vec<usize> = chosen.iter().map(|&i| self.extend_derivation(&mut d, i)).collect();
        chain_intervals(&mut d, &steps, &target, Rule::R4a);
        Some(d)
    }

    fn cover_auth5(&self, a: &Auth5) -> Option<Derivation> {
        let target = Tuple::Auth5(a.clone());
        let group: Vec<usize> = self
            .auth5_group(&a.issuer, &a.subject)
            .iter()
            .copied()
            .filter(|&i| self.tuple(i).as_auth5().unwrap().delegate || !a.delegate)
            .collect();
        let member = |i: usize| self.tuple(i).as_auth5().unwrap();
        let mut d = Derivation::new();

        // one member strong enough everywhere
        if let Some(&i) = group.iter().find(|&&i| {
            let m = member(i);
            m.validity.includes(&a.validity) && a.action.is_subset(&m.action)
        }) {
            let s = self.extend_derivation(&mut d, i);
            let m = member(i);
            let narrowed = Tuple::Auth5(Auth5 { validity: m.validity, ..a.clone() });
            let s = weaken_actions(&mut d, s, &narrowed);
            d.push(StepKind::Rule(Rule::R4b), vec![s, s], target);
            return Some(d);
        }

        let family: Vec<Validity> = group.iter().map(|&i| member(i).validity).collect();
        let atoms: Vec<ActionExpr> = if a.action.is_empty() {
            vec![ActionExpr::empty()]
        } else {
            a.action.atoms().map(|x| ActionExpr::new([x.clone()])).collect()
        };
        let mut per_cell = Vec::new();
        for w in cells(&family, &a.validity) {
            // for each atom, a member covering it throughout the cell
            let mut parts = Vec::new();
            for atom in &atoms {
                let &i = group.iter().find(|&&i| {
                    let m = member(i);
                    m.validity.includes(&w) && atom.is_subset(&m.action)
                })?;
                parts.push((i, atom));
            }
            per_cell.push((w, parts));
        }
        let mut cell_steps = Vec::new();
        for (w, parts) in per_cell {
            let mut acc: Option<(usize, ActionExpr)> = None;
            for (i, atom) in parts {
                let s = self.extend_derivation(&mut d, i);
                let m = member(i);
                let piece = Auth5 { action: atom.clone(), validity: m.validity, ..a.clone() };
                let s = weaken_actions(&mut d, s, &Tuple::Auth5(piece.clone()));
                let at_w = Tuple::Auth5(Auth5 { validity: w, ..piece });
                let s = if m.validity == w { s } else { d.push(StepKind::Rule(Rule::R4b), vec![s, s], at_w) };
                acc = Some(match acc {
                    None => (s, atom.clone()),
                    Some((prev, so_far)) => {
                        let joined = so_far.union(atom);
                        let t = Tuple::Auth5(Auth5 { action: joined.clone(), validity: w, ..a.clone() });
                        (d.push(StepKind::Rule(Rule::R4c), vec![prev, s], t), joined)
                    }
                });
            }
            let (s, joined) = acc.expect("at least one atom per cell");
            let s = if joined == a.action {
                s
            } else {
                // atoms of the target may be merged away by normalization
                let t = Tuple::Auth5(Auth5 { validity: w, ..a.clone() });
                d.push(StepKind::Rule(Rule::R4c), vec![s, s], t)
            };
            cell_steps.push(s);
        }
        chain_intervals(&mut d, &cell_steps, &target, Rule::R4b);
        Some(d)
    }
}

/// R4c from step `s` to `to`, which has the same interval; a no-op when
/// the step already concludes `to`.
fn weaken_actions(d: &mut Derivation, s: usize, to: &Tuple) -> usize {
    if d.steps()[s].conclusion == *to {
        s
    } else {
        d.push(StepKind::Rule(Rule::R4c), vec![s, s], to.clone())
    }
}

/// Members whose intervals, in order, cover `target`; `None` if they cannot.
fn greedy_cover(members: impl Iterator<Item = (Validity, usize)>, target: &Validity) -> Option<Vec<usize>> {
    let (lo, hi) = target.bounds()?;
    let mut spans: Vec<(u64, crate::interval::End, usize)> =
        members.filter_map(|(v, i)| v.bounds().map(|(a, b)| (a, b, i))).collect();
    spans.sort();
    let mut chosen = Vec::new();
    let mut cursor = lo;
    let mut k = 0;
    loop {
        let mut best: Option<(crate::interval::End, usize)> = None;
        while k < spans.len() && spans[k].0 <= cursor {
            if spans[k].1 >= crate::interval::End::At(cursor) && best.is_none_or(|(h, _)| spans[k].1 > h) {
                best = Some((spans[k].1, spans[k].2));
            }
            k += 1;
        }
        let (reach, i) = best?;
        chosen.push(i);
        if reach >= hi {
            return Some(chosen);
        }
        cursor = reach.finite().expect("finite below hi") + 1;
    }
}

/// Folds steps whose intervals are consecutive pieces of `target` (or
/// cover it in order) into `target` with R4a/R4b.
fn chain_intervals(d: &mut Derivation, steps: &[usize], target: &Tuple, rule: Rule) {
    let (lo, hi) = target.validity().bounds().expect("nonempty target");
    let reach = |d: &Derivation, s: usize| d.steps()[s].conclusion.validity().bounds().expect("nonempty").1.min(hi);
    let mut acc = steps[0];
    let first_reach = reach(d, acc);
    let first = target.with_validity(Validity::new(lo, first_reach));
    if d.steps()[acc].conclusion != first {
        acc = d.push(StepKind::Rule(rule), vec![acc, acc], first);
    }
    for &s in &steps[1..] {
        let next = target.with_validity(Validity::new(lo, reach(d, s)));
        acc = d.push(StepKind::Rule(rule), vec![acc, s], next);
    }
    debug_assert_eq!(&d.steps()[acc].conclusion, target);
}

/// Closes `inputs` and proves `target` under `rs`. RS2 queries close under
/// RS1 and decide by pointwise cover.
pub fn derivable(
    inputs: Vec<(Tuple, Provenance)>,
    target: &Tuple,
    rs: RuleSet,
    cfg: &ClosureConfig,
) -> Result<Option<Proof>, EngineError> {
    let closing = if rs == RuleSet::Rs2 { RuleSet::Rs1 } else { rs };
    Closure::build(inputs, closing, cfg, Some(target))?.prove(target, rs)
}

/// Certificates-to-tuples followed by [`derivable`].
pub fn derivable_from_certs(
    certs: &[Certificate],
    crls: &[Certificate],
    target: &Tuple,
    rs: RuleSet,
    cfg: &ClosureConfig,
) -> Result<Option<Proof>, EngineError> {
    derivable(tuples_with_provenance(certs, crls), target, rs, cfg)
}

/// Maximal Name4/Auth5 members (and, if configured, Bind3 members).
pub fn result_tuples(closure: &Closure) -> Vec<Tuple> {
    let mut out = Vec::new();
    for (i, t) in closure.tuples().enumerate() {
        let group = match t {
            Tuple::Name4(n) => closure.name4_group(&n.issuer, &n.name, &n.subject),
            Tuple::Auth5(a) => closure.auth5_group(&a.issuer, &a.subject),
            Tuple::Bind3(b) => {
                if !closure.emit_bind3() {
                    continue;
                }
                closure.bind3_from(&b.lhs)
            }
        };
        if !group.iter().any(|&j| j != i && subsumes(closure.tuple(j), t) && closure.tuple(j) != t) {
            out.push(t.clone());
        }
    }
    out.sort();
    out
}

pub fn result_certificates(
    certs: &[Certificate],
    crls: &[Certificate],
    rs: RuleSet,
    cfg: &ClosureConfig,
) -> Result<Vec<Tuple>, EngineError> {
    let closure = Closure::build(tuples_with_provenance(certs, crls), rs, cfg, None)?;
    Ok(result_tuples(&closure))
}

/// Decides concrete queries against the RS0 closure of `Tuples(C, C_R)`,
/// built once.
#[derive(Debug, Clone)]
pub struct ConcreteDecider {
    closure: Closure,
}

impl ConcreteDecider {
    pub fn new(certs: &[Certificate], crls: &[Certificate]) -> Self {
        let cfg = ClosureConfig::default();
        let closure = Closure::build(tuples_with_provenance(certs, crls), RuleSet::Rs0, &cfg, None)
            .expect("the default bound covers the inputs");
        ConcreteDecider { closure }
    }

    pub fn closure(&self) -> &Closure {
        &self.closure
    }

    /// Whether some RS0-derivable tuple subsumes the concrete `query`.
    pub fn decide(&self, query: &Tuple) -> Result<(bool, Option<Derivation>), EngineError> {
        if !query.is_concrete() {
            return Err(EngineError::NotConcrete(query.to_string()));
        }
        Ok(match self.closure.subsumer(query) {
            Some(i) => (true, Some(self.closure.derivation(i))),
            None => (false, None),
        })
    }

    /// `⟨k, n, k2, [t,t]⟩`.
    pub fn bound_at(&self, k: &Key, n: &LocalName, k2: &Key, t: u64) -> bool {
        self.decide(&name_query(k, n, k2, t)).map(|(b, _)| b).unwrap_or(false)
    }

    /// `⟨k, k2, D, {act}, [t,t]⟩`.
    pub fn authorized(&self, k: &Key, k2: &Key, delegate: bool, act: &Action, t: u64) -> bool {
        self.decide(&auth_query(k, k2, delegate, act, t)).map(|(b, _)| b).unwrap_or(false)
    }

    /// Keys concretely bound to `k·n` at `t`, restricted to `universe`.
    pub fn resolve<'a>(&self, k: &Key, n: &LocalName, t: u64, universe: impl IntoIterator<Item = &'a Key>) -> Vec<Key> {
        universe.into_iter().filter(|k2| self.bound_at(k, n, k2, t)).cloned().collect()
    }
}

pub fn name_query(k: &Key, n: &LocalName, k2: &Key, t: u64) -> Tuple {
    Tuple::Name4(Name4 {
        issuer: k.clone(),
        name: n.clone(),
        subject: FqName::key(k2.clone()),
        validity: Validity::point(t),
    })
}

pub fn auth_query(k: &Key, k2: &Key, delegate: bool, act: &Action, t: u64) -> Tuple {
    Tuple::Auth5(Auth5 {
        issuer: k.clone(),
        subject: FqName::key(k2.clone()),
        delegate,
        action: ActionExpr::singleton(act.clone()),
        validity: Validity::point(t),
    })
}

/// One-shot [`ConcreteDecider::decide`].
pub fn decide_concrete(
    certs: &[Certificate],
    crls: &[Certificate],
    query: &Tuple,
) -> Result<(bool, Option<Derivation>), EngineError> {
    if !query.is_concrete() {
        return Err(EngineError::NotConcrete(query.to_string()));
    }
    ConcreteDecider::new(certs, crls).decide(query)
}
