//! Certificates, tuples and formulas.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::action::ActionExpr;
use crate::interval::Validity;
use crate::principal::{FqName, Key, LocalName, PrincipalExpr};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CertError {
    #[error("certificate {0} on a CRL is revocable by {1:?}, not by the CRL issuer {2}")]
    RevokerMismatch(String, Option<String>, String),
    #[error("a CRL may only cancel naming or authorization certificates")]
    NestedCrl,
    #[error("CRLs have no associated tuple or formula")]
    IsCrl,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NamingCert {
    pub issuer: Key,
    pub name: LocalName,
    pub subject: FqName,
    pub validity: Validity,
    pub revoker: Option<Key>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AuthCert {
    pub issuer: Key,
    pub subject: FqName,
    pub delegate: bool,
    pub action: ActionExpr,
    pub validity: Validity,
    pub revoker: Option<Key>,
}

/// A revocation list. Fields are private so that every value satisfies
/// the revocability invariant checked in [`Crl::new`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Crl {
    issuer: Key,
    canceled: BTreeSet<Certificate>,
    validity: Validity,
}

impl Crl {
    pub fn new(
        issuer: Key,
        canceled: impl IntoIterator<Item = Certificate>,
        validity: Validity,
    ) -> Result<Self, CertError> {
        let canceled: BTreeSet<Certificate> = canceled.into_iter().collect();
        for c in &canceled {
            if c.is_crl() {
                return Err(CertError::NestedCrl);
            }
            if c.revoker() != Some(&issuer) {
                return Err(CertError::RevokerMismatch(
                    c.to_string(),
                    c.revoker().map(|k| k.to_string()),
                    issuer.to_string(),
                ));
            }
        }
        Ok(Crl { issuer, canceled, validity })
    }

    pub fn issuer(&self) -> &Key {
        &self.issuer
    }

    pub fn canceled(&self) -> &BTreeSet<Certificate> {
        &self.canceled
    }

    pub fn validity(&self) -> Validity {
        self.validity
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Certificate {
    Naming(NamingCert),
    Auth(AuthCert),
    Crl(Crl),
}

impl Certificate {
    pub fn issuer(&self) -> &Key {
        match self {
            Certificate::Naming(c) => &c.issuer,
            Certificate::Auth(c) => &c.issuer,
            Certificate::Crl(c) => &c.issuer,
        }
    }

    pub fn validity(&self) -> Validity {
        match self {
            Certificate::Naming(c) => c.validity,
            Certificate::Auth(c) => c.validity,
            Certificate::Crl(c) => c.validity,
        }
    }

    pub fn revoker(&self) -> Option<&Key> {
        match self {
            Certificate::Naming(c) => c.revoker.as_ref(),
            Certificate::Auth(c) => c.revoker.as_ref(),
            Certificate::Crl(_) => None,
        }
    }

    pub fn is_crl(&self) -> bool {
        matches!(self, Certificate::Crl(_))
    }

    pub fn as_crl(&self) -> Option<&Crl> {
        match self {
            Certificate::Crl(c) => Some(c),
            _ => None,
        }
    }

    /// Number of key and name symbols, the `|c|` used in size provisos.
    pub fn size(&self) -> usize {
        match self {
            Certificate::Naming(c) => 2 + c.subject.leaf_count(),
            Certificate::Auth(c) => 1 + c.subject.leaf_count(),
            Certificate::Crl(c) => 1 + c.canceled.iter().map(Certificate::size).sum::<usize>(),
        }
    }

    /// Every key mentioned, including revokers and canceled certificates.
    pub fn keys(&self) -> BTreeSet<Key> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out, &mut BTreeSet::new());
        out
    }

    pub fn names(&self) -> BTreeSet<LocalName> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut BTreeSet::new(), &mut out);
        out
    }

    fn collect_symbols(&self, keys: &mut BTreeSet<Key>, names: &mut BTreeSet<LocalName>) {
        keys.insert(self.issuer().clone());
        if let Some(r) = self.revoker() {
            keys.insert(r.clone());
        }
        match self {
            Certificate::Naming(c) => {
                names.insert(c.name.clone());
                keys.insert(c.subject.root().clone());
                names.extend(c.subject.names().iter().cloned());
            }
            Certificate::Auth(c) => {
                keys.insert(c.subject.root().clone());
                names.extend(c.subject.names().iter().cloned());
            }
            Certificate::Crl(c) => {
                for inner in &c.canceled {
                    inner.collect_symbols(keys, names);
                }
            }
        }
    }

    /// `τ_c`: the certificate with its revoker dropped.
    pub fn to_tuple(&self) -> Result<Tuple, CertError> {
        match self {
            Certificate::Naming(c) => Ok(Tuple::Name4(Name4 {
                issuer: c.issuer.clone(),
                name: c.name.clone(),
                subject: c.subject.clone(),
                validity: c.validity,
            })),
            Certificate::Auth(c) => Ok(Tuple::Auth5(Auth5 {
                issuer: c.issuer.clone(),
                subject: c.subject.clone(),
                delegate: c.delegate,
                action: c.action.clone(),
                validity: c.validity,
            })),
            Certificate::Crl(_) => Err(CertError::IsCrl),
        }
    }

    /// `φ_c`.
    pub fn formula(&self) -> Result<Formula, CertError> {
        match self {
            Certificate::Naming(c) => Ok(Formula::implies(
                Formula::NowIn(c.validity),
                Formula::Bound(
                    FqName::key(c.issuer.clone()).child(c.name.clone()).to_expr(),
                    c.subject.to_expr(),
                ),
            )),
            Certificate::Auth(c) => {
                let subject = c.subject.to_expr();
                let perm = Formula::Perm(c.issuer.clone(), subject.clone(), c.action.clone());
                let body = if c.delegate {
                    Formula::and(perm, Formula::Del(c.issuer.clone(), subject, c.action.clone()))
                } else {
                    perm
                };
                Ok(Formula::implies(Formula::NowIn(c.validity), body))
            }
            Certificate::Crl(_) => Err(CertError::IsCrl),
        }
    }
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::codec::encode_certificate(self))
    }
}

pub fn tuple_of_cert(c: &Certificate) -> Result<Tuple, CertError> {
    c.to_tuple()
}

pub fn formula_of_cert(c: &Certificate) -> Result<Formula, CertError> {
    c.formula()
}

/// `⟨p, q, V⟩`: during V, `p` is bound to everything `q` is.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bind3 {
    pub lhs: FqName,
    pub rhs: FqName,
    pub validity: Validity,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Name4 {
    pub issuer: Key,
    pub name: LocalName,
    pub subject: FqName,
    pub validity: Validity,
}

impl Name4 {
    /// `k·n`, the bound side of the tuple.
    pub fn lhs(&self) -> FqName {
        FqName::key(self.issuer.clone()).child(self.name.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Auth5 {
    pub issuer: Key,
    pub subject: FqName,
    pub delegate: bool,
    pub action: ActionExpr,
    pub validity: Validity,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tuple {
    Bind3(Bind3),
    Name4(Name4),
    Auth5(Auth5),
}

impl Tuple {
    pub fn validity(&self) -> Validity {
        match self {
            Tuple::Bind3(t) => t.validity,
            Tuple::Name4(t) => t.validity,
            Tuple::Auth5(t) => t.validity,
        }
    }

    pub fn with_validity(&self, v: Validity) -> Tuple {
        let mut out = self.clone();
        match &mut out {
            Tuple::Bind3(t) => t.validity = v,
            Tuple::Name4(t) => t.validity = v,
            Tuple::Auth5(t) => t.validity = v,
        }
        out
    }

    /// Leaf count of the largest principal expression in the tuple.
    pub fn max_expr_len(&self) -> usize {
        match self {
            Tuple::Bind3(t) => t.lhs.leaf_count().max(t.rhs.leaf_count()),
            Tuple::Name4(t) => t.subject.leaf_count().max(2),
            Tuple::Auth5(t) => t.subject.leaf_count(),
        }
    }

    /// Total symbol count, counting the issuer and name fields.
    pub fn size(&self) -> usize {
        match self {
            Tuple::Bind3(t) => t.lhs.leaf_count() + t.rhs.leaf_count(),
            Tuple::Name4(t) => 2 + t.subject.leaf_count(),
            Tuple::Auth5(t) => 1 + t.subject.leaf_count(),
        }
    }

    pub fn as_name4(&self) -> Option<&Name4> {
        match self {
            Tuple::Name4(t) => Some(t),
            _ => None,
        }
    }

    pub fn as_auth5(&self) -> Option<&Auth5> {
        match self {
            Tuple::Auth5(t) => Some(t),
            _ => None,
        }
    }

    pub fn as_bind3(&self) -> Option<&Bind3> {
        match self {
            Tuple::Bind3(t) => Some(t),
            _ => None,
        }
    }

    /// Keys and local names mentioned by the tuple.
    pub fn symbols(&self) -> (BTreeSet<Key>, BTreeSet<LocalName>) {
        let mut keys = BTreeSet::new();
        let mut names = BTreeSet::new();
        let mut add = |fq: &FqName| {
            keys.insert(fq.root().clone());
            names.extend(fq.names().iter().cloned());
        };
        match self {
            Tuple::Bind3(t) => {
                add(&t.lhs);
                add(&t.rhs);
            }
            Tuple::Name4(t) => {
                add(&t.lhs());
                add(&t.subject);
            }
            Tuple::Auth5(t) => {
                add(&FqName::key(t.issuer.clone()));
                add(&t.subject);
            }
        }
        (keys, names)
    }

    /// Whether the tuple is about a single key at a single instant (and,
    /// for 5-tuples, a single literal action).
    pub fn is_concrete(&self) -> bool {
        match self {
            Tuple::Name4(t) => t.subject.as_key().is_some() && t.validity.is_point().is_some(),
            Tuple::Auth5(t) => {
                t.subject.as_key().is_some()
                    && t.validity.is_point().is_some()
                    && t.action.as_single_literal().is_some()
            }
            Tuple::Bind3(_) => false,
        }
    }

    pub fn is_point_valued(&self) -> bool {
        !matches!(self, Tuple::Bind3(_)) && self.validity().is_point().is_some()
    }
}

impl fmt::Display for Tuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::codec::encode_tuple(self))
    }
}

/// Whether `t1` subsumes `t2`: same issuer, name and subject, and at least
/// as much validity, action and delegation.
pub fn subsumes(t1: &Tuple, t2: &Tuple) -> bool {
    match (t1, t2) {
        (Tuple::Name4(a), Tuple::Name4(b)) => {
            a.issuer == b.issuer
                && a.name == b.name
                && a.subject == b.subject
                && a.validity.includes(&b.validity)
        }
        (Tuple::Auth5(a), Tuple::Auth5(b)) => {
            a.issuer == b.issuer
                && a.subject == b.subject
                && a.validity.includes(&b.validity)
                && b.action.is_subset(&a.action)
                && !(b.delegate && !a.delegate)
        }
        (Tuple::Bind3(a), Tuple::Bind3(b)) => {
            a.lhs == b.lhs && a.rhs == b.rhs && a.validity.includes(&b.validity)
        }
        _ => false,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    Bound(PrincipalExpr, PrincipalExpr),
    Issued(Certificate),
    Valid(Certificate),
    Perm(Key, PrincipalExpr, ActionExpr),
    Del(Key, PrincipalExpr, ActionExpr),
    NowIn(Validity),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(f: Formula, g: Formula) -> Formula {
        Formula::And(Box::new(f), Box::new(g))
    }

    /// `f → g`, encoded as `¬(f ∧ ¬g)`.
    pub fn implies(f: Formula, g: Formula) -> Formula {
        Formula::not(Formula::and(f, Formula::not(g)))
    }

    /// Conjunction of a nonempty list; `None` for an empty one.
    pub fn conj(fs: impl IntoIterator<Item = Formula>) -> Option<Formula> {
        fs.into_iter().reduce(Formula::and)
    }

    /// Certificates mentioned by `Issued`/`Valid` atoms.
    pub fn certificates(&self) -> Vec<&Certificate> {
        match self {
            Formula::Issued(c) | Formula::Valid(c) => vec![c],
            Formula::Not(f) => f.certificates(),
            Formula::And(f, g) => {
                let mut out = f.certificates();
                out.extend(g.certificates());
                out
            }
            _ => Vec::new(),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::codec::encode_formula(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::ActionExpr;

    fn key(s: &str) -> Key {
        Key::new(s).unwrap()
    }

    fn name(s: &str) -> LocalName {
        LocalName::new(s).unwrap()
    }

    fn naming(v: Validity) -> Certificate {
        Certificate::Naming(NamingCert {
            issuer: key("k-k"),
            name: name("n"),
            subject: FqName::key(key("k-k2")),
            validity: v,
            revoker: None,
        })
    }

    fn auth(d: bool, v: Validity) -> Certificate {
        Certificate::Auth(AuthCert {
            issuer: key("k-k"),
            subject: FqName::key(key("k-k2")),
            delegate: d,
            action: ActionExpr::literals(["read"]).unwrap(),
            validity: v,
            revoker: None,
        })
    }

    #[test]
    fn naming_formula() {
        let phi = naming(Validity::finite(0, 10)).formula().unwrap();
        let expected = Formula::implies(
            Formula::NowIn(Validity::finite(0, 10)),
            Formula::Bound(
                PrincipalExpr::dot(PrincipalExpr::Key(key("k-k")), PrincipalExpr::Name(name("n"))),
                PrincipalExpr::Key(key("k-k2")),
            ),
        );
        assert_eq!(phi, expected);
    }

    #[test]
    fn auth_formula_elides_del_without_propagate() {
        let a = ActionExpr::literals(["read"]).unwrap();
        let p = PrincipalExpr::Key(key("k-k2"));
        let with = auth(true, Validity::finite(1, 3)).formula().unwrap();
        assert_eq!(
            with,
            Formula::implies(
                Formula::NowIn(Validity::finite(1, 3)),
                Formula::and(
                    Formula::Perm(key("k-k"), p.clone(), a.clone()),
                    Formula::Del(key("k-k"), p.clone(), a.clone())
                )
            )
        );
        let without = auth(false, Validity::Empty).formula().unwrap();
        assert_eq!(
            without,
            Formula::implies(Formula::NowIn(Validity::Empty), Formula::Perm(key("k-k"), p, a))
        );
    }

    #[test]
    fn revoker_is_dropped_from_tuples() {
        let mut c = naming(Validity::finite(1, 3));
        let plain = c.to_tuple().unwrap();
        if let Certificate::Naming(n) = &mut c {
            n.revoker = Some(key("k-r"));
        }
        assert_eq!(c.to_tuple().unwrap(), plain);
        assert_eq!(c.formula().unwrap(), naming(Validity::finite(1, 3)).formula().unwrap());
    }

    #[test]
    fn crls_have_no_tuple() {
        let crl = Certificate::Crl(Crl::new(key("k-r"), [], Validity::always()).unwrap());
        assert_eq!(crl.to_tuple(), Err(CertError::IsCrl));
        assert_eq!(crl.formula(), Err(CertError::IsCrl));
    }

    #[test]
    fn crl_rejects_foreign_revoker() {
        let c = naming(Validity::always());
        assert!(matches!(
            Crl::new(key("k-r"), [c], Validity::always()),
            Err(CertError::RevokerMismatch(..))
        ));
    }

    #[test]
    fn subsumption() {
        let wide = naming(Validity::finite(0, 10)).to_tuple().unwrap();
        let narrow = naming(Validity::finite(2, 3)).to_tuple().unwrap();
        assert!(subsumes(&wide, &narrow));
        assert!(!subsumes(&narrow, &wide));
        let nd = auth(false, Validity::finite(0, 5)).to_tuple().unwrap();
        let d = auth(true, Validity::finite(0, 5)).to_tuple().unwrap();
        assert!(!subsumes(&nd, &d));
        assert!(subsumes(&d, &nd));
        for t in [&wide, &narrow, &nd, &d] {
            assert!(subsumes(t, t));
        }
        assert!(!subsumes(&wide, &d));
    }
}
