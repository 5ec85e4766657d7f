//! The tuple reduction rules, applied one step at a time.

use std::fmt;
use std::str::FromStr;

use crate::action::actions_cover;
use crate::cert::{Auth5, Bind3, Name4, Tuple};
use crate::engine::EngineError;
use crate::interval::{intervals_cover, Validity};
use crate::principal::FqName;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rule {
    R0,
    R1,
    R2,
    R2p,
    R3,
    R3p,
    R4a,
    R4b,
    R4c,
    R5,
    R6,
    R6p,
}

impl Rule {
    pub const ALL: [Rule; 12] = [
        Rule::R0,
        Rule::R1,
        Rule::R2,
        Rule::R2p,
        Rule::R3,
        Rule::R3p,
        Rule::R4a,
        Rule::R4b,
        Rule::R4c,
        Rule::R5,
        Rule::R6,
        Rule::R6p,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Rule::R0 => "R0",
            Rule::R1 => "R1",
            Rule::R2 => "R2",
            Rule::R2p => "R2'",
            Rule::R3 => "R3",
            Rule::R3p => "R3'",
            Rule::R4a => "R4a",
            Rule::R4b => "R4b",
            Rule::R4c => "R4c",
            Rule::R5 => "R5",
            Rule::R6 => "R6",
            Rule::R6p => "R6'",
        }
    }

    /// Number of premises.
    pub fn arity(self) -> usize {
        match self {
            Rule::R0 | Rule::R5 => 0,
            _ => 2,
        }
    }

    /// Whether the rule needs the conclusion supplied up front.
    pub fn needs_target(self) -> bool {
        matches!(self, Rule::R0 | Rule::R4a | Rule::R4b | Rule::R4c | Rule::R5)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Rule {
    type Err = EngineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.replace('′', "'").to_ascii_uppercase();
        Rule::ALL
            .into_iter()
            .find(|r| r.name().to_ascii_uppercase() == norm || r.name().to_ascii_uppercase().replace('\'', "P") == norm)
            .ok_or_else(|| EngineError::UnknownRule(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RuleSet {
    Rs0,
    Rs1,
    Rs2,
}

impl RuleSet {
    pub fn contains(self, rule: Rule) -> bool {
        use Rule::*;
        match self {
            RuleSet::Rs0 => matches!(rule, R1 | R2 | R3 | R5 | R6),
            RuleSet::Rs1 => matches!(rule, R0 | R1 | R2p | R3p | R5 | R6p),
            RuleSet::Rs2 => matches!(rule, R0 | R1 | R2p | R3p | R4a | R4b | R4c | R5 | R6p),
        }
    }

    /// Whether names may rewrite to arbitrary subjects (R2′, R3′, R6′)
    /// rather than only to keys.
    pub fn general_subjects(self) -> bool {
        self != RuleSet::Rs0
    }

    pub fn name_rule(self) -> Rule {
        if self.general_subjects() { Rule::R2p } else { Rule::R2 }
    }

    pub fn auth_rule(self) -> Rule {
        if self.general_subjects() { Rule::R3p } else { Rule::R3 }
    }

    pub fn bind_rule(self) -> Rule {
        if self.general_subjects() { Rule::R6p } else { Rule::R6 }
    }
}

impl fmt::Display for RuleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RuleSet::Rs0 => "rs0",
            RuleSet::Rs1 => "rs1",
            RuleSet::Rs2 => "rs2",
        })
    }
}

impl FromStr for RuleSet {
    type Err = EngineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rs0" | "0" => Ok(RuleSet::Rs0),
            "rs1" | "1" => Ok(RuleSet::Rs1),
            "rs2" | "2" => Ok(RuleSet::Rs2),
            _ => Err(EngineError::UnknownRuleSet(s.to_string())),
        }
    }
}

fn nonempty(t: Tuple) -> Option<Tuple> {
    (!t.validity().is_empty()).then_some(t)
}

/// `⟨k1,k2,true,A1,V1⟩ + ⟨k2,S,D2,A2,V2⟩ → ⟨k1,S,D2,A1∩A2,V1∩V2⟩`.
pub fn r1(a: &Auth5, b: &Auth5) -> Option<Tuple> {
    if !a.delegate || a.subject.as_key() != Some(&b.issuer) {
        return None;
    }
    nonempty(Tuple::Auth5(Auth5 {
        issuer: a.issuer.clone(),
        subject: b.subject.clone(),
        delegate: b.delegate,
        action: a.action.intersect(&b.action),
        validity: a.validity.intersect(&b.validity),
    }))
}

/// Rewrites the leading `k2·m` of `subject` with `replacement` when
/// `b = ⟨k2,m,replacement⟩`; with `keys_only`, the replacement must be a key.
fn rewrite_head(subject: &FqName, b: &Name4, keys_only: bool) -> Option<FqName> {
    let (k2, m, rest) = subject.split_head()?;
    if *k2 != b.issuer || *m != b.name || (keys_only && b.subject.as_key().is_none()) {
        return None;
    }
    Some(b.subject.extend(rest))
}

/// R2 (`keys_only`) or R2′.
pub fn r2(a: &Name4, b: &Name4, keys_only: bool) -> Option<Tuple> {
    let subject = rewrite_head(&a.subject, b, keys_only)?;
    nonempty(Tuple::Name4(Name4 {
        issuer: a.issuer.clone(),
        name: a.name.clone(),
        subject,
        validity: a.validity.intersect(&b.validity),
    }))
}

/// R3 (`keys_only`) or R3′.
pub fn r3(a: &Auth5, b: &Name4, keys_only: bool) -> Option<Tuple> {
    let subject = rewrite_head(&a.subject, b, keys_only)?;
    nonempty(Tuple::Auth5(Auth5 {
        issuer: a.issuer.clone(),
        subject,
        delegate: a.delegate,
        action: a.action.clone(),
        validity: a.validity.intersect(&b.validity),
    }))
}

/// R6 (`keys_only`) or R6′.
pub fn r6(a: &Bind3, b: &Name4, keys_only: bool) -> Option<Tuple> {
    let rhs = rewrite_head(&a.rhs, b, keys_only)?;
    nonempty(Tuple::Bind3(Bind3 {
        lhs: a.lhs.clone(),
        rhs,
        validity: a.validity.intersect(&b.validity),
    }))
}

pub fn r0(n: &Name4) -> Tuple {
    Tuple::Name4(Name4 {
        issuer: n.issuer.clone(),
        name: n.name.clone(),
        subject: n.lhs(),
        validity: Validity::always(),
    })
}

pub fn r5(lhs: &FqName) -> Tuple {
    Tuple::Bind3(Bind3 { lhs: lhs.clone(), rhs: lhs.clone(), validity: Validity::always() })
}

fn r4(a: &Tuple, b: &Tuple, target: &Tuple, rule: Rule) -> Option<Tuple> {
    let ok = match (rule, a, b, target) {
        (Rule::R4a, Tuple::Name4(a), Tuple::Name4(b), Tuple::Name4(t)) => {
            let same = |x: &Name4| x.issuer == t.issuer && x.name == t.name && x.subject == t.subject;
            same(a) && same(b) && intervals_cover(&a.validity, &b.validity, &t.validity)
        }
        (Rule::R4b, Tuple::Auth5(a), Tuple::Auth5(b), Tuple::Auth5(t)) => {
            let same = |x: &Auth5| {
                x.issuer == t.issuer && x.subject == t.subject && x.delegate == t.delegate && x.action == t.action
            };
            same(a) && same(b) && intervals_cover(&a.validity, &b.validity, &t.validity)
        }
        (Rule::R4c, Tuple::Auth5(a), Tuple::Auth5(b), Tuple::Auth5(t)) => {
            let same = |x: &Auth5| x.issuer == t.issuer && x.subject == t.subject && x.validity == t.validity;
            same(a)
                && same(b)
                && !(t.delegate && !(a.delegate && b.delegate))
                && actions_cover(&a.action, &b.action, &t.action)
        }
        _ => false,
    };
    ok.then(|| target.clone()).and_then(nonempty)
}

/// Applies one rule. Axioms (R0, R5) and the R4 family take the intended
/// conclusion as `target`; R0 and R5 read only its issuer/name or left
/// side. Returns `None` when the premises do not fit the rule's shape or
/// the conclusion's interval is empty.
pub fn apply_rule(rule: Rule, premises: &[&Tuple], target: Option<&Tuple>) -> Result<Option<Tuple>, EngineError> {
    if premises.len() != rule.arity() {
        return Err(EngineError::Arity { rule, expected: rule.arity(), got: premises.len() });
    }
    if rule.needs_target() && target.is_none() {
        return Err(EngineError::MissingTarget(rule));
    }
    let out = match rule {
        Rule::R0 => target.and_then(Tuple::as_name4).map(r0),
        Rule::R5 => target.and_then(Tuple::as_bind3).map(|b| r5(&b.lhs)),
        Rule::R4a | Rule::R4b | Rule::R4c => r4(premises[0], premises[1], target.expect("checked"), rule),
        Rule::R1 => match (premises[0], premises[1]) {
            (Tuple::Auth5(a), Tuple::Auth5(b)) => r1(a, b),
            _ => None,
        },
        Rule::R2 | Rule::R2p => match (premises[0], premises[1]) {
            (Tuple::Name4(a), Tuple::Name4(b)) => r2(a, b, rule == Rule::R2),
            _ => None,
        },
        Rule::R3 | Rule::R3p => match (premises[0], premises[1]) {
            (Tuple::Auth5(a), Tuple::Name4(b)) => r3(a, b, rule == Rule::R3),
            _ => None,
        },
        Rule::R6 | Rule::R6p => match (premises[0], premises[1]) {
            (Tuple::Bind3(a), Tuple::Name4(b)) => r6(a, b, rule == Rule::R6),
            _ => None,
        },
    };
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::parse_tuple;

    fn t(s: &str) -> Tuple {
        parse_tuple(s).unwrap()
    }

    fn v(lo: u64, hi: u64) -> String {
        format!("(valid (not-before {lo}) (not-after {hi}))")
    }

    fn apply(rule: Rule, a: &Tuple, b: &Tuple) -> Option<Tuple> {
        apply_rule(rule, &[a, b], None).unwrap()
    }

    #[test]
    fn r1_schema() {
        let a = t(&format!("(5tuple k-1 k-2 true (set a b) {})", v(0, 5)));
        let b = t(&format!("(5tuple k-2 (name k-3 n) false (set b c) {})", v(3, 9)));
        assert_eq!(
            apply(Rule::R1, &a, &b),
            Some(t(&format!("(5tuple k-1 (name k-3 n) false (set b) {})", v(3, 5))))
        );
        let no_deleg = t(&format!("(5tuple k-1 k-2 false (set a b) {})", v(0, 5)));
        assert_eq!(apply(Rule::R1, &no_deleg, &b), None);
    }

    #[test]
    fn r2_schema_and_generalization() {
        let a = t(&format!("(4tuple k-1 n (name k-2 m p) {})", v(0, 5)));
        let key = t(&format!("(4tuple k-2 m k-3 {})", v(2, 9)));
        let expr = t(&format!("(4tuple k-2 m (name k-4 q) {})", v(2, 9)));
        assert_eq!(apply(Rule::R2, &a, &key), Some(t(&format!("(4tuple k-1 n (name k-3 p) {})", v(2, 5)))));
        assert_eq!(apply(Rule::R2, &a, &expr), None);
        assert_eq!(apply(Rule::R2p, &a, &expr), Some(t(&format!("(4tuple k-1 n (name k-4 q p) {})", v(2, 5)))));
        let late = t(&format!("(4tuple k-2 m k-3 {})", v(7, 9)));
        assert_eq!(apply(Rule::R2, &a, &late), None);
    }

    #[test]
    fn r3_and_r6_schemas() {
        let a = t(&format!("(5tuple k-1 (name k-2 m) true (set x) {})", v(0, 5)));
        let b = t(&format!("(4tuple k-2 m k-3 {})", v(1, 9)));
        assert_eq!(apply(Rule::R3, &a, &b), Some(t(&format!("(5tuple k-1 k-3 true (set x) {})", v(1, 5)))));
        let p = t(&format!("(3tuple (name k-0 z) (name k-1 n q) {})", v(0, 4)));
        let n = t(&format!("(4tuple k-1 n k-2 {})", v(2, 8)));
        assert_eq!(apply(Rule::R6, &p, &n), Some(t(&format!("(3tuple (name k-0 z) (name k-2 q) {})", v(2, 4)))));
    }

    #[test]
    fn r4_family() {
        let a = t(&format!("(4tuple k-k n k-p {})", v(1, 2)));
        let b = t(&format!("(4tuple k-k n k-p {})", v(3, 4)));
        let merged = t(&format!("(4tuple k-k n k-p {})", v(1, 4)));
        assert_eq!(apply_rule(Rule::R4a, &[&a, &b], Some(&merged)).unwrap(), Some(merged.clone()));
        let too_far = t(&format!("(4tuple k-k n k-p {})", v(1, 5)));
        assert_eq!(apply_rule(Rule::R4a, &[&a, &b], Some(&too_far)).unwrap(), None);

        let x = t(&format!("(5tuple k-k k-p true (set r) {})", v(0, 3)));
        let y = t(&format!("(5tuple k-k k-p false (set w) {})", v(0, 3)));
        let both = t(&format!("(5tuple k-k k-p false (set r w) {})", v(0, 3)));
        let both_d = t(&format!("(5tuple k-k k-p true (set r w) {})", v(0, 3)));
        assert_eq!(apply_rule(Rule::R4c, &[&x, &y], Some(&both)).unwrap(), Some(both.clone()));
        assert_eq!(apply_rule(Rule::R4c, &[&x, &y], Some(&both_d)).unwrap(), None);
    }

    #[test]
    fn axioms_and_errors() {
        let target = t(&format!("(4tuple k-k n k-zz {})", v(4, 4)));
        assert_eq!(
            apply_rule(Rule::R0, &[], Some(&target)).unwrap(),
            Some(t("(4tuple k-k n (name k-k n) (valid (not-before 0) (not-after infinity)))"))
        );
        assert!(matches!(apply_rule(Rule::R1, &[&target], None), Err(EngineError::Arity { .. })));
        assert!(matches!(apply_rule(Rule::R4a, &[&target, &target], None), Err(EngineError::MissingTarget(_))));
        assert!(matches!("R9".parse::<Rule>(), Err(EngineError::UnknownRule(_))));
        assert_eq!("R2'".parse::<Rule>().unwrap(), Rule::R2p);
        assert_eq!("r6p".parse::<Rule>().unwrap(), Rule::R6p);
    }
}
