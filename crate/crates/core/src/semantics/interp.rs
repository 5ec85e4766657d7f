//! Interpretations `⟨L, P⟩` and the minimal one consistent with a run.
//!
//! Everything a run can force is constant between consecutive
//! breakpoints, so an interpretation is stored as a sequence of layers,
//! each holding from its start time until the next start.

use std::collections::{BTreeMap, BTreeSet};

use crate::action::Action;
use crate::cert::Certificate;
use crate::principal::{Key, LocalName, PrincipalExpr};
use crate::semantics::run::{applicable, Run};
use crate::semantics::Universe;

/// `P(k, t, k', a)`: 0, 1 or 2.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Level {
    #[default]
    None,
    Permit,
    Delegate,
}

impl Level {
    pub fn as_u8(self) -> u8 {
        self as u8
    }
}

static NO_KEYS: BTreeSet<Key> = BTreeSet::new();

/// `L` and `P` at a single time.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Layer {
    names: BTreeMap<(Key, LocalName), BTreeSet<Key>>,
    perms: BTreeMap<(Key, Key, Action), Level>,
}

impl Layer {
    /// `L(k, n)`.
    pub fn names_of(&self, k: &Key, n: &LocalName) -> &BTreeSet<Key> {
        self.names.get(&(k.clone(), n.clone())).unwrap_or(&NO_KEYS)
    }

    /// `P(k1, k2, a)`.
    pub fn level(&self, k1: &Key, k2: &Key, a: &Action) -> Level {
        self.perms.get(&(k1.clone(), k2.clone(), a.clone())).copied().unwrap_or_default()
    }

    pub fn bindings(&self) -> impl Iterator<Item = (&Key, &LocalName, &BTreeSet<Key>)> {
        self.names.iter().filter(|(_, ks)| !ks.is_empty()).map(|((k, n), ks)| (k, n, ks))
    }

    pub fn grants(&self) -> impl Iterator<Item = (&Key, &Key, &Action, Level)> {
        self.perms.iter().map(|((k1, k2, a), l)| (k1, k2, a, *l))
    }

    /// Adds `k2` to `L(k, n)`; true if it was new.
    pub fn bind(&mut self, k: &Key, n: &LocalName, k2: &Key) -> bool {
        self.names.entry((k.clone(), n.clone())).or_default().insert(k2.clone())
    }

    /// Raises `P(k1, k2, a)` to at least `level`; true if it changed.
    pub fn raise(&mut self, k1: &Key, k2: &Key, a: &Action, level: Level) -> bool {
        if level == Level::None {
            return false;
        }
        let slot = self.perms.entry((k1.clone(), k2.clone(), a.clone())).or_default();
        if *slot < level {
            *slot = level;
            true
        } else {
            false
        }
    }

    /// `⟦p⟧` at key `k`.
    pub fn intension(&self, p: &PrincipalExpr, k: &Key) -> BTreeSet<Key> {
        match p {
            PrincipalExpr::Key(k2) => BTreeSet::from([k2.clone()]),
            PrincipalExpr::Name(n) => self.names_of(k, n).clone(),
            PrincipalExpr::Dot(head, tail) => {
                let mut out = BTreeSet::new();
                for k2 in self.intension(head, k) {
                    out.extend(self.intension(tail, &k2));
                }
                out
            }
        }
    }

    /// Raises `P` until `P(k1,k2,a) = 2 ∧ P(k2,k3,a) = i ⇒ P(k1,k3,a) ≥ i`.
    /// True if anything changed.
    pub fn close_delegation(&mut self) -> bool {
        let mut any = false;
        loop {
            let mut raises = Vec::new();
            for ((k1, k2, a), l12) in &self.perms {
                if *l12 != Level::Delegate {
                    continue;
                }
                for ((k2b, k3, b), l23) in &self.perms {
                    if k2b == k2 && b == a && self.level(k1, k3, a) < *l23 {
                        raises.push((k1.clone(), k3.clone(), a.clone(), *l23));
                    }
                }
            }
            if raises.is_empty() {
                return any;
            }
            for (k1, k3, a, l) in raises {
                any |= self.raise(&k1, &k3, &a, l);
            }
        }
    }

    pub fn is_delegation_closed(&self) -> bool {
        !self.clone().close_delegation()
    }

    pub fn leq(&self, other: &Layer) -> bool {
        self.names.iter().all(|((k, n), ks)| ks.is_subset(other.names_of(k, n)))
            && self.perms.iter().all(|((k1, k2, a), l)| *l <= other.level(k1, k2, a))
    }

    pub fn meet(&self, other: &Layer) -> Layer {
        let mut out = Layer::default();
        for ((k, n), ks) in &self.names {
            let common: BTreeSet<Key> = ks.intersection(other.names_of(k, n)).cloned().collect();
            if !common.is_empty() {
                out.names.insert((k.clone(), n.clone()), common);
            }
        }
        for ((k1, k2, a), l) in &self.perms {
            let m = (*l).min(other.level(k1, k2, a));
            if m != Level::None {
                out.perms.insert((k1.clone(), k2.clone(), a.clone()), m);
            }
        }
        out
    }

    fn tidy(&mut self) {
        self.names.retain(|_, ks| !ks.is_empty());
        self.perms.retain(|_, l| *l != Level::None);
    }
}

/// A piecewise-constant interpretation over a universe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interpretation {
    universe: Universe,
    segments: BTreeMap<u64, Layer>,
}

impl Interpretation {
    /// No bindings and no permissions anywhere.
    pub fn empty(universe: &Universe) -> Interpretation {
        Interpretation::from_segments(universe, BTreeMap::new())
    }

    /// Every name bound to every key and every permission at level 2.
    pub fn maximal(universe: &Universe) -> Interpretation {
        let mut layer = Layer::default();
        for k in &universe.keys {
            for n in &universe.names {
                for k2 in &universe.keys {
                    layer.bind(k, n, k2);
                }
            }
            for k2 in &universe.keys {
                for a in &universe.actions {
                    layer.raise(k, k2, a, Level::Delegate);
                }
            }
        }
        Interpretation::from_segments(universe, BTreeMap::from([(0, layer)]))
    }

    /// Layer `segments[s]` holds from `s` until the next start. A missing
    /// start at 0 is filled with the empty layer; equal neighbours merge.
    pub fn from_segments(universe: &Universe, segments: BTreeMap<u64, Layer>) -> Interpretation {
        let mut merged: BTreeMap<u64, Layer> = BTreeMap::new();
        let mut segments = segments;
        segments.entry(0).or_default();
        for (s, mut layer) in segments {
            layer.tidy();
            if merged.last_key_value().is_some_and(|(_, prev)| *prev == layer) {
                continue;
            }
            merged.insert(s, layer);
        }
        Interpretation { universe: universe.clone(), segments: merged }
    }

    pub fn universe(&self) -> &Universe {
        &self.universe
    }

    /// Start times of the constant pieces.
    pub fn starts(&self) -> impl Iterator<Item = u64> + '_ {
        self.segments.keys().copied()
    }

    pub fn segments(&self) -> &BTreeMap<u64, Layer> {
        &self.segments
    }

    pub fn layer_at(&self, t: u64) -> &Layer {
        self.segments.range(..=t).next_back().map(|(_, l)| l).expect("a layer starts at 0")
    }

    /// `L(k, n, t)`.
    pub fn names_at(&self, k: &Key, n: &LocalName, t: u64) -> &BTreeSet<Key> {
        self.layer_at(t).names_of(k, n)
    }

    /// `P(k1, t, k2, a)`.
    pub fn level(&self, k1: &Key, t: u64, k2: &Key, a: &Action) -> Level {
        self.layer_at(t).level(k1, k2, a)
    }

    /// `⟦p⟧(L, k, t)`.
    pub fn intension(&self, p: &PrincipalExpr, k: &Key, t: u64) -> BTreeSet<Key> {
        self.layer_at(t).intension(p, k)
    }

    fn joint_starts(&self, other: &Interpretation) -> BTreeSet<u64> {
        self.starts().chain(other.starts()).collect()
    }

    pub fn is_delegation_closed(&self) -> bool {
        self.segments.values().all(Layer::is_delegation_closed)
    }

    /// Pointwise greatest lower bound.
    pub fn meet(&self, other: &Interpretation) -> Interpretation {
        let segments = self
            .joint_starts(other)
            .into_iter()
            .map(|s| (s, self.layer_at(s).meet(other.layer_at(s))))
            .collect();
        Interpretation::from_segments(&self.universe, segments)
    }
}

/// The interpretation order: pointwise `L` inclusion and `P` levels.
pub fn interp_leq(i1: &Interpretation, i2: &Interpretation) -> bool {
    i1.joint_starts(i2).into_iter().all(|s| i1.layer_at(s).leq(i2.layer_at(s)))
}

/// Naming and authorization certificates issued by `t`, valid at `t` and
/// applicable at `t`.
pub(crate) fn in_force(run: &Run, t: u64) -> Vec<&Certificate> {
    run.issued()
        .filter(|(c, t0)| {
            !c.is_crl() && *t0 <= t && c.validity().contains(t) && applicable(run, c, t).expect("not a CRL")
        })
        .map(|(c, _)| c)
        .collect()
}

/// Adds what the certificates in force force, to a fixpoint.
fn saturate(layer: &mut Layer, certs: &[&Certificate], universe: &Universe) {
    loop {
        let mut changed = false;
        for c in certs {
            match c {
                Certificate::Naming(nc) => {
                    for k2 in layer.intension(&nc.subject.to_expr(), &nc.issuer) {
                        changed |= layer.bind(&nc.issuer, &nc.name, &k2);
                    }
                }
                Certificate::Auth(ac) => {
                    let level = if ac.delegate { Level::Delegate } else { Level::Permit };
                    for k2 in layer.intension(&ac.subject.to_expr(), &ac.issuer) {
                        for a in universe.actions_in(&ac.action) {
                            changed |= layer.raise(&ac.issuer, &k2, a, level);
                        }
                    }
                }
                Certificate::Crl(_) => {}
            }
        }
        changed |= layer.close_delegation();
        if !changed {
            return;
        }
    }
}

/// The least interpretation consistent with `run`.
pub fn minimal_interpretation(run: &Run, universe: &Universe) -> Interpretation {
    least_above(run, &Interpretation::empty(universe))
}

/// The least interpretation consistent with `run` that lies above `seed`.
pub fn least_above(run: &Run, seed: &Interpretation) -> Interpretation {
    let universe = seed.universe();
    let starts: BTreeSet<u64> = run.breakpoints().into_iter().chain(seed.starts()).collect();
    let segments = starts
        .into_iter()
        .map(|s| {
            let mut layer = seed.layer_at(s).clone();
            saturate(&mut layer, &in_force(run, s), universe);
            (s, layer)
        })
        .collect();
    Interpretation::from_segments(universe, segments)
}

/// Whether every certificate in force at every time is respected: names
/// include the subject's intension, and permissions reach level 1 (2 when
/// delegable) for each key of the subject and each universe action the
/// tag denotes.
pub fn is_consistent(run: &Run, interp: &Interpretation) -> bool {
    let universe = interp.universe();
    let starts: BTreeSet<u64> = run.breakpoints().into_iter().chain(interp.starts()).collect();
    starts.into_iter().all(|t| {
        let layer = interp.layer_at(t);
        in_force(run, t).into_iter().all(|c| match c {
            Certificate::Naming(nc) => {
                let have = layer.names_of(&nc.issuer, &nc.name);
                layer.intension(&nc.subject.to_expr(), &nc.issuer).is_subset(have)
            }
            Certificate::Auth(ac) => {
                let need = if ac.delegate { Level::Delegate } else { Level::Permit };
                layer.intension(&ac.subject.to_expr(), &ac.issuer).iter().all(|k2| {
                    universe.actions_in(&ac.action).all(|a| layer.level(&ac.issuer, k2, a) >= need)
                })
            }
            Certificate::Crl(_) => true,
        })
    })
}
