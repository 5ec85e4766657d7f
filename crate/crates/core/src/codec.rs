//! Concrete syntax for certificates, tuples, formulas and runs.
//!
//! ```text
//! name-cert ::= (cert (issuer (name KEY ID)) (subject FQ) VALID [REVOKER])
//! auth-cert ::= (cert (issuer KEY) (subject FQ) [(propagate)] (tag TAG) VALID [REVOKER])
//! crl       ::= (crl (issuer KEY) (canceled CERT*) VALID)
//! FQ        ::= KEY | (name KEY ID+)
//! VALID     ::= (valid [(not-before NAT)] [(not-after NAT|infinity)])
//! REVOKER   ::= (revoker KEY)
//! TAG       ::= (set ATOM*)
//! ATOM      ::= STR | (path STR+) | (prefix STR+)
//! ```
//!
//! The empty interval has no surface form of its own; it prints as
//! `(valid (not-before 1) (not-after 0))`, and any reversed pair decodes
//! to it.

use std::collections::{BTreeMap, BTreeSet};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::action::{Action, ActionExpr, Atom};
use crate::cert::{Auth5, AuthCert, Bind3, CertError, Certificate, Crl, Formula, Name4, NamingCert, Tuple};
use crate::interval::{End, Validity};
use crate::principal::{is_key_token, FqName, Key, LocalName, PrincipalExpr};
use crate::sexpr::{parse_many, parse_sexpr, SExpr, SexprError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error(transparent)]
    Syntax(#[from] SexprError),
    #[error("malformed {path}: {reason}")]
    Malformed { path: String, reason: String },
    #[error("{0}")]
    RevokerMismatch(String),
    #[error("subject {0} is not fully qualified")]
    NotFullyQualified(String),
    #[error("{0} is not supported (only CRLs are modelled)")]
    OnlineTest(String),
}

fn malformed(path: &str, reason: impl Into<String>) -> DecodeError {
    DecodeError::Malformed { path: path.to_string(), reason: reason.into() }
}

impl From<CertError> for DecodeError {
    fn from(e: CertError) -> Self {
        match e {
            CertError::RevokerMismatch(..) => DecodeError::RevokerMismatch(e.to_string()),
            other => malformed("crl", other.to_string()),
        }
    }
}

// ---------------------------------------------------------------- encoding

fn tok(s: impl Into<String>) -> SExpr {
    SExpr::Token(s.into())
}

fn tagged(head: &str, rest: impl IntoIterator<Item = SExpr>) -> SExpr {
    SExpr::List(std::iter::once(tok(head)).chain(rest).collect())
}

pub fn validity_sexpr(v: &Validity) -> SExpr {
    let (lo, hi) = match v.bounds() {
        Some((lo, End::At(hi))) => (lo.to_string(), hi.to_string()),
        Some((lo, End::Infinity)) => (lo.to_string(), "infinity".to_string()),
        None => ("1".to_string(), "0".to_string()),
    };
    tagged("valid", [tagged("not-before", [tok(lo)]), tagged("not-after", [tok(hi)])])
}

pub fn fq_sexpr(p: &FqName) -> SExpr {
    if p.names().is_empty() {
        tok(p.root().as_str())
    } else {
        tagged(
            "name",
            std::iter::once(tok(p.root().as_str())).chain(p.names().iter().map(|n| tok(n.as_str()))),
        )
    }
}

pub fn atom_sexpr(a: &Atom) -> SExpr {
    match a {
        Atom::Literal(act) => match act.path() {
            [single] => tok(single.as_str()),
            path => tagged("path", path.iter().map(|s| tok(s.as_str()))),
        },
        Atom::Prefix(p) => tagged("prefix", p.iter().map(|s| tok(s.as_str()))),
    }
}

pub fn tag_sexpr(a: &ActionExpr) -> SExpr {
    let mut atoms: Vec<SExpr> = a.atoms().map(atom_sexpr).collect();
    atoms.sort_by_cached_key(|e| e.to_string());
    tagged("set", atoms)
}

pub fn certificate_sexpr(c: &Certificate) -> SExpr {
    let revoker = |r: &Option<Key>| r.as_ref().map(|k| tagged("revoker", [tok(k.as_str())]));
    match c {
        Certificate::Naming(n) => {
            let mut items = vec![
                tok("cert"),
                tagged("issuer", [tagged("name", [tok(n.issuer.as_str()), tok(n.name.as_str())])]),
                tagged("subject", [fq_sexpr(&n.subject)]),
                validity_sexpr(&n.validity),
            ];
            items.extend(revoker(&n.revoker));
            SExpr::List(items)
        }
        Certificate::Auth(a) => {
            let mut items = vec![
                tok("cert"),
                tagged("issuer", [tok(a.issuer.as_str())]),
                tagged("subject", [fq_sexpr(&a.subject)]),
            ];
            if a.delegate {
                items.push(tagged("propagate", []));
            }
            items.push(tagged("tag", [tag_sexpr(&a.action)]));
            items.push(validity_sexpr(&a.validity));
            items.extend(revoker(&a.revoker));
            SExpr::List(items)
        }
        Certificate::Crl(crl) => tagged(
            "crl",
            [
                tagged("issuer", [tok(crl.issuer().as_str())]),
                tagged("canceled", crl.canceled().iter().map(certificate_sexpr)),
                validity_sexpr(&crl.validity()),
            ],
        ),
    }
}

pub fn encode_certificate(c: &Certificate) -> String {
    certificate_sexpr(c).to_string()
}

/// Hex SHA-256 of the canonical encoding.
pub fn cert_digest(c: &Certificate) -> String {
    hex::encode(Sha256::digest(encode_certificate(c).as_bytes()))
}

pub fn tuple_sexpr(t: &Tuple) -> SExpr {
    match t {
        Tuple::Bind3(b) => tagged("3tuple", [fq_sexpr(&b.lhs), fq_sexpr(&b.rhs), validity_sexpr(&b.validity)]),
        Tuple::Name4(n) => tagged(
            "4tuple",
            [
                tok(n.issuer.as_str()),
                tok(n.name.as_str()),
                fq_sexpr(&n.subject),
                validity_sexpr(&n.validity),
            ],
        ),
        Tuple::Auth5(a) => tagged(
            "5tuple",
            [
                tok(a.issuer.as_str()),
                fq_sexpr(&a.subject),
                tok(if a.delegate { "true" } else { "false" }),
                tag_sexpr(&a.action),
                validity_sexpr(&a.validity),
            ],
        ),
    }
}

pub fn encode_tuple(t: &Tuple) -> String {
    tuple_sexpr(t).to_string()
}

/// Principal expressions print their right spine flat: `a·(b·c)` is
/// `(name a b c)` while `(a·b)·c` is `(name (name a b) c)`.
pub fn principal_sexpr(p: &PrincipalExpr) -> SExpr {
    match p {
        PrincipalExpr::Key(k) => tok(k.as_str()),
        PrincipalExpr::Name(n) => tok(n.as_str()),
        PrincipalExpr::Dot(..) => {
            let mut items = vec![tok("name")];
            let mut cur = p;
            while let PrincipalExpr::Dot(h, t) = cur {
                items.push(principal_sexpr(h));
                cur = t;
            }
            items.push(principal_sexpr(cur));
            SExpr::List(items)
        }
    }
}

pub fn formula_sexpr(f: &Formula) -> SExpr {
    match f {
        Formula::Bound(p, q) => tagged("bound", [principal_sexpr(p), principal_sexpr(q)]),
        Formula::Issued(c) => tagged("issued", [certificate_sexpr(c)]),
        Formula::Valid(c) => tagged("valid", [certificate_sexpr(c)]),
        Formula::Perm(k, p, a) => tagged("perm", [tok(k.as_str()), principal_sexpr(p), tag_sexpr(a)]),
        Formula::Del(k, p, a) => tagged("del", [tok(k.as_str()), principal_sexpr(p), tag_sexpr(a)]),
        Formula::NowIn(v) => tagged("now-in", [validity_sexpr(v)]),
        Formula::Not(g) => tagged("not", [formula_sexpr(g)]),
        Formula::And(g, h) => tagged("and", [formula_sexpr(g), formula_sexpr(h)]),
    }
}

pub fn encode_formula(f: &Formula) -> String {
    formula_sexpr(f).to_string()
}

pub fn run_sexpr(events: &BTreeMap<u64, BTreeSet<Certificate>>) -> SExpr {
    tagged(
        "run",
        events
            .iter()
            .map(|(t, cs)| tagged("at", std::iter::once(tok(t.to_string())).chain(cs.iter().map(certificate_sexpr)))),
    )
}

// ---------------------------------------------------------------- decoding

fn expect_list<'a>(e: &'a SExpr, head: &str, path: &str) -> Result<&'a [SExpr], DecodeError> {
    match e.as_list() {
        Some([SExpr::Token(h), rest @ ..]) if h == head => Ok(rest),
        _ => Err(malformed(path, format!("expected ({head} …), found {e}"))),
    }
}

fn decode_token<'a>(e: &'a SExpr, path: &str) -> Result<&'a str, DecodeError> {
    e.as_token().ok_or_else(|| malformed(path, format!("expected a token, found {e}")))
}

fn decode_key(e: &SExpr, path: &str) -> Result<Key, DecodeError> {
    Key::new(decode_token(e, path)?).map_err(|err| malformed(path, err.to_string()))
}

fn decode_name(e: &SExpr, path: &str) -> Result<LocalName, DecodeError> {
    LocalName::new(decode_token(e, path)?).map_err(|err| malformed(path, err.to_string()))
}

fn decode_nat(e: &SExpr, path: &str) -> Result<u64, DecodeError> {
    let t = decode_token(e, path)?;
    if !t.bytes().all(|b| b.is_ascii_digit()) {
        return Err(malformed(path, format!("{t:?} is not a natural number")));
    }
    t.parse().map_err(|_| malformed(path, format!("{t:?} is out of range")))
}

fn reject_online(e: &SExpr) -> Result<(), DecodeError> {
    match e.head() {
        Some(h @ ("online" | "online-test")) => Err(DecodeError::OnlineTest(format!("({h} …)"))),
        _ => Ok(()),
    }
}

pub fn decode_validity(e: &SExpr) -> Result<Validity, DecodeError> {
    let items = expect_list(e, "valid", "valid")?;
    let mut lo = None;
    let mut hi = None;
    let mut seen_after = false;
    for item in items {
        reject_online(item)?;
        match item.head() {
            Some("not-before") if lo.is_none() && !seen_after => {
                let [v] = expect_list(item, "not-before", "valid/not-before")? else {
                    return Err(malformed("valid/not-before", "expected one value"));
                };
                lo = Some(decode_nat(v, "valid/not-before")?);
            }
            Some("not-after") if hi.is_none() => {
                let [v] = expect_list(item, "not-after", "valid/not-after")? else {
                    return Err(malformed("valid/not-after", "expected one value"));
                };
                seen_after = true;
                hi = Some(match v.as_token() {
                    Some("infinity") => End::Infinity,
                    _ => End::At(decode_nat(v, "valid/not-after")?),
                });
            }
            _ => return Err(malformed("valid", format!("unexpected {item}"))),
        }
    }
    Ok(Validity::new(lo.unwrap_or(0), hi.unwrap_or(End::Infinity)))
}

pub fn decode_fq(e: &SExpr, path: &str) -> Result<FqName, DecodeError> {
    match e {
        SExpr::Token(t) if is_key_token(t) => Ok(FqName::key(decode_key(e, path)?)),
        SExpr::Token(t) => Err(DecodeError::NotFullyQualified(t.clone())),
        SExpr::List(_) => {
            let items = expect_list(e, "name", path)?;
            let Some((first, rest)) = items.split_first() else {
                return Err(malformed(path, "empty name"));
            };
            if rest.is_empty() {
                return Err(malformed(path, "(name …) needs a key and at least one name"));
            }
            let is_key = matches!(first.as_token(), Some(t) if is_key_token(t));
            if !is_key || rest.iter().any(|r| matches!(r.as_token(), Some(t) if is_key_token(t))) {
                if items.iter().all(|i| i.as_token().is_some()) {
                    return Err(DecodeError::NotFullyQualified(e.to_string()));
                }
                return Err(malformed(path, format!("bad name {e}")));
            }
            let key = decode_key(first, path)?;
            let names = rest.iter().map(|r| decode_name(r, path)).collect::<Result<Vec<_>, _>>()?;
            Ok(FqName::new(key, names))
        }
    }
}

fn decode_strs(items: &[SExpr], path: &str) -> Result<Vec<String>, DecodeError> {
    items.iter().map(|i| decode_token(i, path).map(str::to_string)).collect()
}

pub fn decode_atom(e: &SExpr) -> Result<Atom, DecodeError> {
    let path = "tag/set";
    let atom = match e {
        SExpr::Token(t) => Atom::literal([t.as_str()]),
        SExpr::List(_) => match e.head() {
            Some("path") => Atom::literal(decode_strs(expect_list(e, "path", path)?, path)?),
            Some("prefix") => Atom::prefix(decode_strs(expect_list(e, "prefix", path)?, path)?),
            _ => return Err(malformed(path, format!("unknown action atom {e}"))),
        },
    };
    atom.map_err(|err| malformed(path, err.to_string()))
}

pub fn decode_tag(e: &SExpr) -> Result<ActionExpr, DecodeError> {
    let atoms = expect_list(e, "set", "tag")?;
    Ok(ActionExpr::new(atoms.iter().map(decode_atom).collect::<Result<Vec<_>, _>>()?))
}

/// A single-token action, or `(path …)`.
pub fn decode_action(e: &SExpr) -> Result<Action, DecodeError> {
    match decode_atom(e)? {
        Atom::Literal(a) => Ok(a),
        Atom::Prefix(_) => Err(malformed("action", "expected a literal action")),
    }
}

/// Splits `items` into the fields named by `order`, each optional or not,
/// in that order and at most once.
fn fields<'a>(
    items: &'a [SExpr],
    order: &[(&str, bool)],
    path: &str,
) -> Result<BTreeMap<String, &'a SExpr>, DecodeError> {
    let mut out = BTreeMap::new();
    let mut slot = 0;
    for item in items {
        reject_online(item)?;
        let head = item.head().ok_or_else(|| malformed(path, format!("unexpected {item}")))?;
        let Some(offset) = order[slot..].iter().position(|(name, _)| *name == head) else {
            return Err(malformed(path, format!("unexpected or repeated field ({head} …)")));
        };
        if let Some((name, _)) = order[slot..slot + offset].iter().find(|(_, required)| *required) {
            return Err(malformed(path, format!("missing field ({name} …)")));
        }
        out.insert(head.to_string(), item);
        slot += offset + 1;
    }
    if let Some((name, _)) = order[slot..].iter().find(|(_, required)| *required) {
        return Err(malformed(path, format!("missing field ({name} …)")));
    }
    Ok(out)
}

fn single<'a>(e: &'a SExpr, head: &str, path: &str) -> Result<&'a SExpr, DecodeError> {
    match expect_list(e, head, path)? {
        [v] => Ok(v),
        _ => Err(malformed(path, format!("({head} …) takes exactly one argument"))),
    }
}

pub fn decode_certificate(e: &SExpr) -> Result<Certificate, DecodeError> {
    match e.head() {
        Some("cert") => decode_cert(expect_list(e, "cert", "cert")?),
        Some("crl") => decode_crl(expect_list(e, "crl", "crl")?),
        _ => Err(malformed("certificate", format!("expected (cert …) or (crl …), found {e}"))),
    }
}

fn decode_cert(items: &[SExpr]) -> Result<Certificate, DecodeError> {
    let f = fields(
        items,
        &[
            ("issuer", true),
            ("subject", true),
            ("propagate", false),
            ("tag", false),
            ("valid", true),
            ("revoker", false),
        ],
        "cert",
    )?;
    let issuer = single(f["issuer"], "issuer", "cert/issuer")?;
    let subject = decode_fq(single(f["subject"], "subject", "cert/subject")?, "cert/subject")?;
    let validity = decode_validity(f["valid"])?;
    let revoker = f
        .get("revoker")
        .map(|r| decode_key(single(r, "revoker", "cert/revoker")?, "cert/revoker"))
        .transpose()?;
    if issuer.head() == Some("name") {
        if f.contains_key("propagate") || f.contains_key("tag") {
            return Err(malformed("cert", "naming certificates carry no propagate or tag"));
        }
        let [k, n] = expect_list(issuer, "name", "cert/issuer")? else {
            return Err(malformed("cert/issuer", "expected (name KEY ID)"));
        };
        return Ok(Certificate::Naming(NamingCert {
            issuer: decode_key(k, "cert/issuer")?,
            name: decode_name(n, "cert/issuer")?,
            subject,
            validity,
            revoker,
        }));
    }
    let Some(tag) = f.get("tag") else {
        return Err(malformed("cert", "authorization certificates need a (tag …)"));
    };
    if let Some(p) = f.get("propagate") {
        if p.as_list().is_some_and(|l| l.len() != 1) {
            return Err(malformed("cert/propagate", "takes no arguments"));
        }
    }
    Ok(Certificate::Auth(AuthCert {
        issuer: decode_key(issuer, "cert/issuer")?,
        subject,
        delegate: f.contains_key("propagate"),
        action: decode_tag(single(tag, "tag", "cert/tag")?)?,
        validity,
        revoker,
    }))
}

fn decode_crl(items: &[SExpr]) -> Result<Certificate, DecodeError> {
    let f = fields(items, &[("issuer", true), ("canceled", true), ("valid", true)], "crl")?;
    let issuer = decode_key(single(f["issuer"], "issuer", "crl/issuer")?, "crl/issuer")?;
    let canceled = expect_list(f["canceled"], "canceled", "crl/canceled")?
        .iter()
        .map(|c| match c.head() {
            Some("cert") => decode_certificate(c),
            _ => Err(malformed("crl/canceled", format!("expected (cert …), found {c}"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let validity = decode_validity(f["valid"])?;
    Ok(Certificate::Crl(Crl::new(issuer, canceled, validity)?))
}

pub fn parse_certificate(input: &str) -> Result<Certificate, DecodeError> {
    decode_certificate(&parse_sexpr(input)?)
}

/// A bundle: any number of certificates separated by whitespace.
pub fn parse_bundle(input: &str) -> Result<Vec<Certificate>, DecodeError> {
    parse_many(input)?.iter().map(decode_certificate).collect()
}

fn decode_bool(e: &SExpr, path: &str) -> Result<bool, DecodeError> {
    match e.as_token() {
        Some("true") => Ok(true),
        Some("false") => Ok(false),
        _ => Err(malformed(path, format!("expected true or false, found {e}"))),
    }
}

pub fn decode_tuple(e: &SExpr) -> Result<Tuple, DecodeError> {
    match e.head() {
        Some("3tuple") => match expect_list(e, "3tuple", "3tuple")? {
            [p, q, v] => Ok(Tuple::Bind3(Bind3 {
                lhs: decode_fq(p, "3tuple")?,
                rhs: decode_fq(q, "3tuple")?,
                validity: decode_validity(v)?,
            })),
            _ => Err(malformed("3tuple", "expected (3tuple FQ FQ VALID)")),
        },
        Some("4tuple") => match expect_list(e, "4tuple", "4tuple")? {
            [k, n, p, v] => Ok(Tuple::Name4(Name4 {
                issuer: decode_key(k, "4tuple")?,
                name: decode_name(n, "4tuple")?,
                subject: decode_fq(p, "4tuple")?,
                validity: decode_validity(v)?,
            })),
            _ => Err(malformed("4tuple", "expected (4tuple KEY ID FQ VALID)")),
        },
        Some("5tuple") => match expect_list(e, "5tuple", "5tuple")? {
            [k, p, d, a, v] => Ok(Tuple::Auth5(Auth5 {
                issuer: decode_key(k, "5tuple")?,
                subject: decode_fq(p, "5tuple")?,
                delegate: decode_bool(d, "5tuple")?,
                action: decode_tag(a)?,
                validity: decode_validity(v)?,
            })),
            _ => Err(malformed("5tuple", "expected (5tuple KEY FQ BOOL TAG VALID)")),
        },
        _ => Err(malformed("tuple", format!("expected (3tuple …), (4tuple …) or (5tuple …), found {e}"))),
    }
}

pub fn parse_tuple(input: &str) -> Result<Tuple, DecodeError> {
    decode_tuple(&parse_sexpr(input)?)
}

pub fn decode_principal(e: &SExpr) -> Result<PrincipalExpr, DecodeError> {
    match e {
        SExpr::Token(t) if is_key_token(t) => Ok(PrincipalExpr::Key(decode_key(e, "principal")?)),
        SExpr::Token(_) => Ok(PrincipalExpr::Name(decode_name(e, "principal")?)),
        SExpr::List(_) => {
            let items = expect_list(e, "name", "principal")?;
            if items.len() < 2 {
                return Err(malformed("principal", "(name …) needs at least two parts"));
            }
            let parts = items.iter().map(decode_principal).collect::<Result<Vec<_>, _>>()?;
            let mut iter = parts.into_iter().rev();
            let last = iter.next().expect("nonempty");
            Ok(iter.fold(last, |tail, head| PrincipalExpr::dot(head, tail)))
        }
    }
}

/// Formulas. Besides the core connectives this accepts the shorthands
/// `(implies F G)` and `(phi CERT)`.
pub fn decode_formula(e: &SExpr) -> Result<Formula, DecodeError> {
    let path = "formula";
    let Some(head) = e.head() else {
        return Err(malformed(path, format!("expected a formula, found {e}")));
    };
    let args = expect_list(e, head, path)?;
    let arity = |n: usize| {
        if args.len() == n {
            Ok(())
        } else {
            Err(malformed(path, format!("({head} …) takes {n} arguments")))
        }
    };
    match head {
        "bound" => {
            arity(2)?;
            Ok(Formula::Bound(decode_principal(&args[0])?, decode_principal(&args[1])?))
        }
        "issued" => {
            arity(1)?;
            Ok(Formula::Issued(decode_certificate(&args[0])?))
        }
        "valid" => {
            arity(1)?;
            Ok(Formula::Valid(decode_certificate(&args[0])?))
        }
        "perm" | "del" => {
            arity(3)?;
            let k = decode_key(&args[0], path)?;
            let p = decode_principal(&args[1])?;
            let a = decode_tag(&args[2])?;
            Ok(if head == "perm" { Formula::Perm(k, p, a) } else { Formula::Del(k, p, a) })
        }
        "now-in" => {
            arity(1)?;
            Ok(Formula::NowIn(decode_validity(&args[0])?))
        }
        "not" => {
            arity(1)?;
            Ok(Formula::not(decode_formula(&args[0])?))
        }
        "and" => {
            arity(2)?;
            Ok(Formula::and(decode_formula(&args[0])?, decode_formula(&args[1])?))
        }
        "implies" => {
            arity(2)?;
            Ok(Formula::implies(decode_formula(&args[0])?, decode_formula(&args[1])?))
        }
        "phi" => {
            arity(1)?;
            decode_certificate(&args[0])?
                .formula()
                .map_err(|err| malformed(path, err.to_string()))
        }
        other => Err(malformed(path, format!("unknown connective {other}"))),
    }
}

pub fn parse_formula(input: &str) -> Result<Formula, DecodeError> {
    decode_formula(&parse_sexpr(input)?)
}

/// `(run (at NAT CERT*)*)`; repeated times are merged.
pub fn decode_run_events(e: &SExpr) -> Result<BTreeMap<u64, BTreeSet<Certificate>>, DecodeError> {
    let mut out: BTreeMap<u64, BTreeSet<Certificate>> = BTreeMap::new();
    for at in expect_list(e, "run", "run")? {
        let items = expect_list(at, "at", "run/at")?;
        let Some((t, certs)) = items.split_first() else {
            return Err(malformed("run/at", "missing time"));
        };
        let entry = out.entry(decode_nat(t, "run/at")?).or_default();
        for c in certs {
            entry.insert(decode_certificate(c)?);
        }
    }
    Ok(out)
}
