//! Keys, local names and principal expressions.
//!
//! Keys and local names share one token alphabet and are told apart
//! lexically: a key token starts with `k-`, anything else is a name.

use std::fmt;

use thiserror::Error;

const KEY_PREFIX: &str = "k-";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TokenError {
    #[error("empty token")]
    Empty,
    #[error("token {0:?} contains whitespace or parentheses")]
    BadChar(String),
    #[error("{0:?} is not a key (keys start with \"k-\")")]
    NotAKey(String),
    #[error("{0:?} is a key token, not a local name")]
    NotAName(String),
}

fn check_token(s: &str) -> Result<(), TokenError> {
    if s.is_empty() {
        return Err(TokenError::Empty);
    }
    if s.chars().any(|c| c.is_whitespace() || c == '(' || c == ')') {
        return Err(TokenError::BadChar(s.to_string()));
    }
    Ok(())
}

/// Returns true when `token` lexically denotes a key.
pub fn is_key_token(token: &str) -> bool {
    token.len() > KEY_PREFIX.len() && token.starts_with(KEY_PREFIX)
}

/// A public key, identified by an opaque `k-…` token.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Key(String);

impl Key {
    pub fn new(token: impl Into<String>) -> Result<Self, TokenError> {
        let token = token.into();
        check_token(&token)?;
        if !is_key_token(&token) {
            return Err(TokenError::NotAKey(token));
        }
        Ok(Key(token))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A basic SDSI name, interpreted relative to a key's name space.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LocalName(String);

impl LocalName {
    pub fn new(token: impl Into<String>) -> Result<Self, TokenError> {
        let token = token.into();
        check_token(&token)?;
        if is_key_token(&token) {
            return Err(TokenError::NotAName(token));
        }
        Ok(LocalName(token))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for LocalName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A leaf of a principal expression.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Leaf {
    Key(Key),
    Name(LocalName),
}

/// A principal expression: a key, a local name, or `head · tail`.
///
/// Parenthesization carries no meaning (composition of names is
/// associative), so [`PrincipalExpr::normalize`] rotates every tree into
/// the right-associated form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PrincipalExpr {
    Key(Key),
    Name(LocalName),
    Dot(Box<PrincipalExpr>, Box<PrincipalExpr>),
}

impl PrincipalExpr {
    pub fn dot(head: PrincipalExpr, tail: PrincipalExpr) -> Self {
        PrincipalExpr::Dot(Box::new(head), Box::new(tail))
    }

    /// Builds the right-associated expression over a nonempty leaf list.
    pub fn from_leaves(leaves: impl IntoIterator<Item = Leaf>) -> Option<Self> {
        let leaves: Vec<Leaf> = leaves.into_iter().collect();
        let mut iter = leaves.into_iter().rev().map(|leaf| match leaf {
            Leaf::Key(k) => PrincipalExpr::Key(k),
            Leaf::Name(n) => PrincipalExpr::Name(n),
        });
        let last = iter.next()?;
        Some(iter.fold(last, |tail, head| PrincipalExpr::dot(head, tail)))
    }

    /// Leaves in left-to-right order.
    pub fn leaves(&self) -> Vec<Leaf> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves(&self, out: &mut Vec<Leaf>) {
        match self {
            PrincipalExpr::Key(k) => out.push(Leaf::Key(k.clone())),
            PrincipalExpr::Name(n) => out.push(Leaf::Name(n.clone())),
            PrincipalExpr::Dot(h, t) => {
                h.collect_leaves(out);
                t.collect_leaves(out);
            }
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            PrincipalExpr::Dot(h, t) => h.leaf_count() + t.leaf_count(),
            _ => 1,
        }
    }

    pub fn normalize(&self) -> PrincipalExpr {
        PrincipalExpr::from_leaves(self.leaves()).expect("expressions have at least one leaf")
    }

    pub fn is_normalized(&self) -> bool {
        match self {
            PrincipalExpr::Dot(h, t) => !matches!(**h, PrincipalExpr::Dot(..)) && t.is_normalized(),
            _ => true,
        }
    }

    /// True iff the leftmost leaf is a key and every other leaf a name.
    pub fn is_fully_qualified(&self) -> bool {
        let leaves = self.leaves();
        matches!(leaves.first(), Some(Leaf::Key(_)))
            && leaves[1..].iter().all(|l| matches!(l, Leaf::Name(_)))
    }

    pub fn as_fq(&self) -> Option<FqName> {
        FqName::try_from(self).ok()
    }
}

impl From<Key> for PrincipalExpr {
    fn from(k: Key) -> Self {
        PrincipalExpr::Key(k)
    }
}

impl From<LocalName> for PrincipalExpr {
    fn from(n: LocalName) -> Self {
        PrincipalExpr::Name(n)
    }
}

impl From<&FqName> for PrincipalExpr {
    fn from(fq: &FqName) -> Self {
        fq.to_expr()
    }
}

impl fmt::Display for PrincipalExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PrincipalExpr::Key(k) => write!(f, "{k}"),
            PrincipalExpr::Name(n) => write!(f, "{n}"),
            PrincipalExpr::Dot(h, t) => {
                if matches!(**h, PrincipalExpr::Dot(..)) {
                    write!(f, "({h})·{t}")
                } else {
                    write!(f, "{h}·{t}")
                }
            }
        }
    }
}

/// A fully-qualified name `k · n1 · … · nj` (j ≥ 0).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FqName {
    key: Key,
    names: Vec<LocalName>,
}

impl FqName {
    pub fn new(key: Key, names: Vec<LocalName>) -> Self {
        FqName { key, names }
    }

    pub fn key(key: Key) -> Self {
        FqName { key, names: Vec::new() }
    }

    pub fn root(&self) -> &Key {
        &self.key
    }

    pub fn names(&self) -> &[LocalName] {
        &self.names
    }

    /// The bare key, if this name has no local-name components.
    pub fn as_key(&self) -> Option<&Key> {
        self.names.is_empty().then_some(&self.key)
    }

    pub fn leaf_count(&self) -> usize {
        1 + self.names.len()
    }

    /// `k · n · rest` split into `(k, n, rest)`.
    pub fn split_head(&self) -> Option<(&Key, &LocalName, &[LocalName])> {
        let (first, rest) = self.names.split_first()?;
        Some((&self.key, first, rest))
    }

    /// `self · names`.
    pub fn extend(&self, names: &[LocalName]) -> FqName {
        let mut out = self.clone();
        out.names.extend_from_slice(names);
        out
    }

    pub fn child(&self, name: LocalName) -> FqName {
        let mut out = self.clone();
        out.names.push(name);
        out
    }

    /// The name with its last component dropped, if any.
    pub fn parent(&self) -> Option<FqName> {
        let (_, init) = self.names.split_last()?;
        Some(FqName::new(self.key.clone(), init.to_vec()))
    }

    /// All prefixes `k`, `k·n1`, …, `self`.
    pub fn prefixes(&self) -> impl Iterator<Item = FqName> + '_ {
        (0..=self.names.len()).map(|i| FqName::new(self.key.clone(), self.names[..i].to_vec()))
    }

    pub fn to_expr(&self) -> PrincipalExpr {
        let leaves = std::iter::once(Leaf::Key(self.key.clone()))
            .chain(self.names.iter().cloned().map(Leaf::Name));
        PrincipalExpr::from_leaves(leaves).expect("nonempty")
    }
}

impl From<Key> for FqName {
    fn from(k: Key) -> Self {
        FqName::key(k)
    }
}

impl TryFrom<&PrincipalExpr> for FqName {
    type Error = PrincipalExpr;

    fn try_from(p: &PrincipalExpr) -> Result<Self, Self::Error> {
        let mut leaves = p.leaves().into_iter();
        let Some(Leaf::Key(key)) = leaves.next() else {
            return Err(p.clone());
        };
        let mut names = Vec::new();
        for leaf in leaves {
            match leaf {
                Leaf::Name(n) => names.push(n),
                Leaf::Key(_) => return Err(p.clone()),
            }
        }
        Ok(FqName { key, names })
    }
}

impl fmt::Display for FqName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.key)?;
        for n in &self.names {
            write!(f, "·{n}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k(s: &str) -> PrincipalExpr {
        PrincipalExpr::Key(Key::new(s).unwrap())
    }

    fn n(s: &str) -> PrincipalExpr {
        PrincipalExpr::Name(LocalName::new(s).unwrap())
    }

    fn dot(a: PrincipalExpr, b: PrincipalExpr) -> PrincipalExpr {
        PrincipalExpr::dot(a, b)
    }

    #[test]
    fn token_classes_are_disjoint() {
        assert!(Key::new("k-a").is_ok());
        assert!(Key::new("doctor").is_err());
        assert!(Key::new("k-").is_err());
        assert!(LocalName::new("k-a").is_err());
        assert!(LocalName::new("doctor").is_ok());
        assert_eq!(LocalName::new(""), Err(TokenError::Empty));
        assert!(LocalName::new("a b").is_err());
        assert!(LocalName::new("a(").is_err());
    }

    #[test]
    fn normalize_rotates_left_nesting() {
        let left = dot(dot(n("n1"), n("n2")), n("n3"));
        assert_eq!(left.normalize(), dot(n("n1"), dot(n("n2"), n("n3"))));

        assert_eq!(k("k-a").normalize(), k("k-a"));

        let deep = dot(dot(dot(k("k-k"), n("a")), n("b")), n("c"));
        assert_eq!(deep.normalize(), dot(k("k-k"), dot(n("a"), dot(n("b"), n("c")))));
        assert!(deep.normalize().is_normalized());
        assert!(!deep.is_normalized());
    }

    #[test]
    fn fully_qualified() {
        assert!(dot(k("k-k"), dot(n("n"), n("m"))).is_fully_qualified());
        assert!(!n("n").is_fully_qualified());
        assert!(k("k-k").is_fully_qualified());
        assert!(!dot(k("k-a"), k("k-b")).is_fully_qualified());
        assert!(!dot(n("n"), k("k-b")).is_fully_qualified());
    }

    #[test]
    fn fq_round_trip_and_prefixes() {
        let e = dot(dot(k("k-a"), n("x")), n("y"));
        let fq = FqName::try_from(&e).unwrap();
        assert_eq!(fq.to_string(), "k-a·x·y");
        assert_eq!(fq.to_expr(), e.normalize());
        let ps: Vec<String> = fq.prefixes().map(|p| p.to_string()).collect();
        assert_eq!(ps, ["k-a", "k-a·x", "k-a·x·y"]);
        assert_eq!(fq.parent().unwrap().to_string(), "k-a·x");
        assert!(FqName::try_from(&n("x")).is_err());
    }
}
