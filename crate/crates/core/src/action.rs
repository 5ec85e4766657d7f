//! Action expressions: finite sets of literal and prefix-pattern atoms.
//!
//! A literal `(path a b c)` denotes itself. A prefix pattern
//! `(prefix s1 … sn)` denotes every literal `(a1 … am)` with `m ≥ n`,
//! `ai = si` for `i < n` and `an` starting with `sn`. Any two atoms are
//! either nested or disjoint, which keeps intersection closed and makes
//! union-cover decidable atom by atom.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ActionError {
    #[error("action paths need at least one element")]
    EmptyPath,
    #[error("action element {0:?} is not a token")]
    BadElement(String),
}

fn check_path(path: &[String]) -> Result<(), ActionError> {
    if path.is_empty() {
        return Err(ActionError::EmptyPath);
    }
    for el in path {
        if el.is_empty() || el.chars().any(|c| c.is_whitespace() || c == '(' || c == ')') {
            return Err(ActionError::BadElement(el.clone()));
        }
    }
    Ok(())
}

/// A single literal action, e.g. `read` or `(path ftp /pub/x)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Action(Vec<String>);

impl Action {
    pub fn new<S: Into<String>>(path: impl IntoIterator<Item = S>) -> Result<Self, ActionError> {
        let path: Vec<String> = path.into_iter().map(Into::into).collect();
        check_path(&path)?;
        Ok(Action(path))
    }

    pub fn path(&self) -> &[String] {
        &self.0
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0.as_slice() {
            [single] => f.write_str(single),
            path => write!(f, "(path {})", path.join(" ")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Literal(Action),
    Prefix(Vec<String>),
}

impl Atom {
    pub fn literal<S: Into<String>>(path: impl IntoIterator<Item = S>) -> Result<Self, ActionError> {
        Action::new(path).map(Atom::Literal)
    }

    pub fn prefix<S: Into<String>>(path: impl IntoIterator<Item = S>) -> Result<Self, ActionError> {
        let path: Vec<String> = path.into_iter().map(Into::into).collect();
        check_path(&path)?;
        Ok(Atom::Prefix(path))
    }

    /// `act ∈ aint(self)`.
    pub fn matches(&self, act: &Action) -> bool {
        match self {
            Atom::Literal(l) => l == act,
            Atom::Prefix(p) => prefix_matches(p, act.path()),
        }
    }

    /// `aint(self) ⊇ aint(other)`.
    pub fn includes(&self, other: &Atom) -> bool {
        match (self, other) {
            (Atom::Literal(a), Atom::Literal(b)) => a == b,
            (Atom::Prefix(p), Atom::Literal(l)) => prefix_matches(p, l.path()),
            // every literal under `q` shares `q`'s fixed elements, and its
            // element at `p`'s last position starts with `q`'s element there
            (Atom::Prefix(p), Atom::Prefix(q)) => prefix_matches(p, q),
            (Atom::Literal(_), Atom::Prefix(_)) => false,
        }
    }

    /// Atom intersection; `None` when the denotations are disjoint.
    pub fn intersect(&self, other: &Atom) -> Option<Atom> {
        if self.includes(other) {
            Some(other.clone())
        } else if other.includes(self) {
            Some(self.clone())
        } else {
            None
        }
    }
}

fn prefix_matches(pattern: &[String], path: &[String]) -> bool {
    let n = pattern.len();
    if path.len() < n {
        return false;
    }
    pattern[..n - 1] == path[..n - 1] && path[n - 1].starts_with(pattern[n - 1].as_str())
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Literal(a) => write!(f, "{a}"),
            Atom::Prefix(p) => write!(f, "(prefix {})", p.join(" ")),
        }
    }
}

/// A finite union of atoms, kept in normal form: no atom is included in
/// another, so equal denotations have equal representations.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ActionExpr(BTreeSet<Atom>);

impl ActionExpr {
    pub fn new(atoms: impl IntoIterator<Item = Atom>) -> Self {
        let all: Vec<Atom> = atoms.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let kept = all
            .iter()
            .filter(|a| !all.iter().any(|b| b != *a && b.includes(a)))
            .cloned()
            .collect();
        ActionExpr(kept)
    }

    pub fn empty() -> Self {
        ActionExpr::default()
    }

    /// The finite set `{act1, …, actn}` of single-token literals.
    pub fn literals<'a>(tokens: impl IntoIterator<Item = &'a str>) -> Result<Self, ActionError> {
        let atoms = tokens
            .into_iter()
            .map(|t| Atom::literal([t]))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ActionExpr::new(atoms))
    }

    pub fn singleton(act: Action) -> Self {
        ActionExpr::new([Atom::Literal(act)])
    }

    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `act ∈ aint(self)`.
    pub fn permits(&self, act: &Action) -> bool {
        self.0.iter().any(|a| a.matches(act))
    }

    /// The single literal action, if `self` denotes exactly one action.
    pub fn as_single_literal(&self) -> Option<&Action> {
        match self.0.iter().collect::<Vec<_>>().as_slice() {
            [Atom::Literal(a)] => Some(a),
            _ => None,
        }
    }

    pub fn intersect(&self, other: &ActionExpr) -> ActionExpr {
        ActionExpr::new(
            self.0
                .iter()
                .flat_map(|a| other.0.iter().filter_map(move |b| a.intersect(b))),
        )
    }

    pub fn union(&self, other: &ActionExpr) -> ActionExpr {
        ActionExpr::new(self.0.iter().chain(other.0.iter()).cloned())
    }

    /// `aint(self) ⊆ aint(other)`.
    pub fn is_subset(&self, other: &ActionExpr) -> bool {
        self.0.iter().all(|a| other.covers_atom(a))
    }

    fn covers_atom(&self, atom: &Atom) -> bool {
        self.0.iter().any(|b| b.includes(atom))
    }
}

impl fmt::Display for ActionExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str("}")
    }
}

/// `A1 ⊆ A2` on denotations.
pub fn action_subset(a1: &ActionExpr, a2: &ActionExpr) -> bool {
    a1.is_subset(a2)
}

pub fn action_intersect(a1: &ActionExpr, a2: &ActionExpr) -> ActionExpr {
    a1.intersect(a2)
}

/// `aint(A1) ∪ aint(A2) ⊇ aint(A3)`.
///
/// A literal is covered when some atom of either side covers it; a prefix
/// atom denotes infinitely many literals, and since atoms are nested or
/// disjoint, finitely many strictly smaller atoms never exhaust it, so it
/// must be covered by a single atom.
pub fn actions_cover(a1: &ActionExpr, a2: &ActionExpr, a3: &ActionExpr) -> bool {
    a3.atoms().all(|a| a1.covers_atom(a) || a2.covers_atom(a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lits(ts: &[&str]) -> ActionExpr {
        ActionExpr::literals(ts.iter().copied()).unwrap()
    }

    fn prefix(p: &[&str]) -> Atom {
        Atom::prefix(p.iter().copied()).unwrap()
    }

    fn path(p: &[&str]) -> Atom {
        Atom::literal(p.iter().copied()).unwrap()
    }

    #[test]
    fn intersection_examples() {
        assert_eq!(lits(&["read", "write"]).intersect(&lits(&["write", "exec"])), lits(&["write"]));
        let ftp = ActionExpr::new([prefix(&["ftp", "/pub/cme/"])]);
        let file = ActionExpr::new([path(&["ftp", "/pub/cme/x"])]);
        assert_eq!(ftp.intersect(&file), file);
        let a = ActionExpr::new([prefix(&["ftp", "/p"]), path(&["read"])]);
        assert_eq!(a.intersect(&a), a);
    }

    #[test]
    fn subset_examples() {
        assert!(action_subset(&lits(&["read"]), &lits(&["read", "write"])));
        let broad = ActionExpr::new([prefix(&["ftp", "/"])]);
        let narrow = ActionExpr::new([path(&["ftp", "/x"])]);
        assert!(!action_subset(&broad, &narrow));
        assert!(action_subset(&narrow, &broad));
        assert!(action_subset(&broad, &broad));
    }

    #[test]
    fn cover_examples() {
        assert!(actions_cover(&lits(&["read"]), &lits(&["write"]), &lits(&["read", "write"])));
        assert!(!actions_cover(&lits(&["read"]), &lits(&["write"]), &lits(&["exec"])));
        let a = ActionExpr::new([prefix(&["x"]), path(&["y", "z"])]);
        assert!(actions_cover(&a, &ActionExpr::empty(), &a));
    }

    #[test]
    fn normal_form_drops_covered_atoms() {
        let a = ActionExpr::new([prefix(&["ftp"]), path(&["ftp-x"]), prefix(&["ftp", "a"]), path(&["read"])]);
        assert_eq!(a, ActionExpr::new([prefix(&["ftp"]), path(&["read"])]));
    }

    #[test]
    fn prefix_nesting() {
        assert!(prefix(&["ftp", "/pub"]).includes(&prefix(&["ftp", "/pub/cme"])));
        assert!(prefix(&["ftp", "/pub"]).includes(&prefix(&["ftp", "/pubx", "more"])));
        assert!(!prefix(&["ftp", "/pub", "a"]).includes(&prefix(&["ftp", "/pub"])));
        assert!(prefix(&["ftp", "/pub"]).intersect(&prefix(&["ftp", "/priv"])).is_none());
        assert!(prefix(&["a"]).matches(&Action::new(["abc", "d"]).unwrap()));
        assert!(!prefix(&["a", "b"]).matches(&Action::new(["a"]).unwrap()));
    }

    fn arb_elem() -> impl Strategy<Value = String> {
        prop_oneof![Just("a"), Just("ab"), Just("abc"), Just("b"), Just("ba")].prop_map(String::from)
    }

    fn arb_atom() -> impl Strategy<Value = Atom> {
        (proptest::collection::vec(arb_elem(), 1..3), any::<bool>()).prop_map(|(p, is_prefix)| {
            if is_prefix {
                Atom::Prefix(p)
            } else {
                Atom::Literal(Action(p))
            }
        })
    }

    fn arb_expr() -> impl Strategy<Value = ActionExpr> {
        proptest::collection::vec(arb_atom(), 0..4).prop_map(ActionExpr::new)
    }

    fn arb_action() -> impl Strategy<Value = Action> {
        proptest::collection::vec(arb_elem(), 1..4).prop_map(Action)
    }

    proptest! {
        #[test]
        fn intersection_is_a_homomorphism(a in arb_expr(), b in arb_expr(), act in arb_action()) {
            let both = a.intersect(&b);
            prop_assert_eq!(both.permits(&act), a.permits(&act) && b.permits(&act));
        }

        #[test]
        fn atoms_are_nested_or_disjoint(x in arb_atom(), y in arb_atom(), act in arb_action()) {
            if !x.includes(&y) && !y.includes(&x) {
                prop_assert!(!(x.matches(&act) && y.matches(&act)));
            }
        }

        #[test]
        fn subset_is_sound_on_samples(a in arb_expr(), b in arb_expr(), act in arb_action()) {
            if a.is_subset(&b) && a.permits(&act) {
                prop_assert!(b.permits(&act));
            }
        }

        #[test]
        fn union_is_denotational(a in arb_expr(), b in arb_expr(), act in arb_action()) {
            prop_assert_eq!(a.union(&b).permits(&act), a.permits(&act) || b.permits(&act));
            prop_assert!(actions_cover(&a, &b, &a.union(&b)));
        }
    }
}
