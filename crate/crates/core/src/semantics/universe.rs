use std::collections::BTreeSet;

use crate::action::{Action, ActionExpr, Atom};
use crate::cert::{Certificate, Formula};
use crate::interval::Validity;
use crate::principal::{Key, Leaf, LocalName, PrincipalExpr};

/// The finite parameters `(K, N, Act)` an interpretation ranges over, plus
/// a time horizon past which nothing in play changes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Universe {
    pub keys: BTreeSet<Key>,
    pub names: BTreeSet<LocalName>,
    pub actions: BTreeSet<Action>,
    pub horizon: u64,
}

impl Universe {
    /// The smallest universe covering the symbols of `certs` and `formulas`:
    /// their keys and names, a witness literal for every action atom, and
    /// one past the largest finite endpoint.
    pub fn from_instance<'a>(
        certs: impl IntoIterator<Item = &'a Certificate>,
        formulas: impl IntoIterator<Item = &'a Formula>,
    ) -> Universe {
        let mut s = Symbols::default();
        for c in certs {
            s.cert(c);
        }
        for f in formulas {
            s.formula(f);
        }
        s.finish()
    }

    /// Every time `0..=horizon`.
    pub fn times(&self) -> impl Iterator<Item = u64> {
        0..=self.horizon
    }

    /// Literal actions of the universe denoted by `a`.
    pub fn actions_in<'a>(&'a self, a: &'a ActionExpr) -> impl Iterator<Item = &'a Action> + 'a {
        self.actions.iter().filter(move |act| a.permits(act))
    }
}

fn max_finite(v: &Validity) -> Option<u64> {
    let (lo, hi) = v.bounds()?;
    Some(hi.finite().unwrap_or(lo))
}

#[derive(Default)]
struct Symbols {
    keys: BTreeSet<Key>,
    names: BTreeSet<LocalName>,
    atoms: BTreeSet<Atom>,
    horizon: u64,
}

impl Symbols {
    fn interval(&mut self, v: &Validity) {
        if let Some(hi) = max_finite(v) {
            self.horizon = self.horizon.max(hi + 1);
        }
    }

    fn cert(&mut self, c: &Certificate) {
        self.keys.extend(c.keys());
        self.names.extend(c.names());
        self.interval(&c.validity());
        match c {
            Certificate::Auth(a) => self.atoms.extend(a.action.atoms().cloned()),
            Certificate::Crl(crl) => {
                for inner in crl.canceled() {
                    self.cert(inner);
                }
            }
            Certificate::Naming(_) => {}
        }
    }

    fn expr(&mut self, p: &PrincipalExpr) {
        for leaf in p.leaves() {
            match leaf {
                Leaf::Key(k) => self.keys.insert(k),
                Leaf::Name(n) => self.names.insert(n),
            };
        }
    }

    fn formula(&mut self, f: &Formula) {
        match f {
            Formula::Bound(p, q) => {
                self.expr(p);
                self.expr(q);
            }
            Formula::Issued(c) | Formula::Valid(c) => self.cert(c),
            Formula::Perm(k, p, a) | Formula::Del(k, p, a) => {
                self.keys.insert(k.clone());
                self.expr(p);
                self.atoms.extend(a.atoms().cloned());
            }
            Formula::NowIn(v) => self.interval(v),
            Formula::Not(g) => self.formula(g),
            Formula::And(g, h) => {
                self.formula(g);
                self.formula(h);
            }
        }
    }

    fn finish(self) -> Universe {
        let mut actions = BTreeSet::new();
        for atom in &self.atoms {
            actions.extend(witness_literals(atom, self.atoms.iter()));
        }
        Universe { keys: self.keys, names: self.names, actions, horizon: self.horizon }
    }
}

const MARKERS: &[char] = &['~', '#', '!', '%', '^', '&', '*', '+', '=', ':', '?', '@', '$', '|', ',', ';'];

/// Literals standing in for `atom`: the literal itself, or for a prefix
/// atom its own path plus one literal outside every strictly smaller atom
/// of `known`. The latter witnesses any part of the atom that sub-atoms
/// leave uncovered.
pub fn witness_literals<'a>(atom: &Atom, known: impl Iterator<Item = &'a Atom>) -> Vec<Action> {
    let path = match atom {
        Atom::Literal(a) => return vec![a.clone()],
        Atom::Prefix(path) => path,
    };
    let smaller: Vec<&Atom> = known.filter(|b| *b != atom && atom.includes(b)).collect();
    let mut out = vec![Action::new(path.clone()).expect("atom paths are valid")];
    let free = |act: &Action| !smaller.iter().any(|b| b.matches(act));
    let (init, last) = path.split_at(path.len() - 1);
    for i in 0..=smaller.len() {
        for m in MARKERS {
            let mut cand = init.to_vec();
            cand.push(format!("{}{m}{i}", last[0]));
            let act = Action::new(cand).expect("marker tokens are valid");
            if free(&act) {
                out.push(act);
                return out;
            }
        }
    }
    out
}
