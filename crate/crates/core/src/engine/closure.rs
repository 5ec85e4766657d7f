//! Bounded forward-chaining closure of a tuple set under a rule set.
//!
//! Saturation is semi-naive: each tuple is joined against the tuples
//! processed before it (and itself) exactly once, through indexes keyed on
//! the `k·n` prefix a rule matches on. Conclusions whose subjects exceed
//! the expression bound are discarded, which keeps the general-subject
//! rule sets finite.
//!
//! Under RS2 the closure is additionally saturated with canonical R4
//! merges: maximal connected interval unions of otherwise equal tuples,
//! and action unions of 5-tuples sharing an interval. The full R4 closure
//! is infinite (every sub-interval and sub-action is derivable), so these
//! merges stand in for it; exact RS2 derivability is decided separately
//! by [`Closure::prove`].

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use crate::action::ActionExpr;
use crate::cert::{Auth5, Bind3, Name4, Tuple};
use crate::engine::derivation::{Derivation, StepKind};
use crate::engine::liveness::Provenance;
use crate::engine::rules::{self, Rule, RuleSet};
use crate::engine::EngineError;
use crate::interval::{End, Validity};
use crate::principal::{FqName, Key, LocalName};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClosureConfig {
    /// Maximum leaf count of subjects in derived tuples; `None` picks the
    /// default, the total subject leaf count of the inputs and target.
    pub expr_len_bound: Option<usize>,
    /// Whether 3-tuples appear in result sets.
    pub emit_bind3: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Origin {
    Input(Provenance),
    Axiom(Rule),
    Derived(Rule, [usize; 2]),
    /// An R4 chain folding the listed members left to right.
    Merged(Rule, Vec<usize>),
}

#[derive(Debug, Clone)]
struct Entry {
    tuple: Tuple,
    origin: Origin,
}

/// Leaf count of the subject-like parts of a tuple, the quantity the
/// expression bound limits.
pub fn subject_len(t: &Tuple) -> usize {
    match t {
        Tuple::Bind3(b) => b.lhs.leaf_count().max(b.rhs.leaf_count()),
        Tuple::Name4(n) => n.subject.leaf_count(),
        Tuple::Auth5(a) => a.subject.leaf_count(),
    }
}

pub fn default_bound<'a>(inputs: impl IntoIterator<Item = &'a Tuple>, target: Option<&'a Tuple>) -> usize {
    inputs.into_iter().chain(target).map(subject_len).sum()
}

type NameKey = (Key, LocalName);

#[derive(Debug, Clone)]
pub struct Closure {
    rules: RuleSet,
    bound: usize,
    emit_bind3: bool,
    entries: Vec<Entry>,
    index: HashMap<Tuple, usize>,
    /// Name4 by `(issuer, name)`.
    by_name: HashMap<NameKey, Vec<usize>>,
    /// Name4/Auth5 whose subject starts with `k·n`.
    by_head: HashMap<NameKey, Vec<usize>>,
    auth_by_issuer: HashMap<Key, Vec<usize>>,
    /// Delegating Auth5 whose subject is a key, by that key.
    deleg_to: HashMap<Key, Vec<usize>>,
    name4_groups: HashMap<(Key, LocalName, FqName), Vec<usize>>,
    auth5_groups: HashMap<(Key, FqName), Vec<usize>>,
    bind3_by_lhs: HashMap<FqName, Vec<usize>>,
    seeds: BTreeSet<FqName>,
}

impl Closure {
    /// Closes `inputs` under `rules`. `target`, if given, contributes its
    /// symbols to the axioms and its size to the default bound.
    pub fn build(
        inputs: Vec<(Tuple, Provenance)>,
        rules: RuleSet,
        cfg: &ClosureConfig,
        target: Option<&Tuple>,
    ) -> Result<Closure, EngineError> {
        let needed = inputs.iter().map(|(t, _)| t).chain(target).map(subject_len).max().unwrap_or(0);
        let bound = cfg.expr_len_bound.unwrap_or_else(|| default_bound(inputs.iter().map(|(t, _)| t), target));
        if bound < needed {
            return Err(EngineError::BoundTooSmall { bound, needed });
        }
        let mut c = Closure {
            rules,
            bound,
            emit_bind3: cfg.emit_bind3,
            entries: Vec::new(),
            index: HashMap::new(),
            by_name: HashMap::new(),
            by_head: HashMap::new(),
            auth_by_issuer: HashMap::new(),
            deleg_to: HashMap::new(),
            name4_groups: HashMap::new(),
            auth5_groups: HashMap::new(),
            bind3_by_lhs: HashMap::new(),
            seeds: BTreeSet::new(),
        };

        let mut keys = BTreeSet::new();
        let mut names = BTreeSet::new();
        for t in inputs.iter().map(|(t, _)| t).chain(target) {
            let (k, n) = t.symbols();
            keys.extend(k);
            names.extend(n);
            c.seeds.extend(closure_prefixes(t));
        }

        let mut queue = VecDeque::new();
        let mut main_inputs = Vec::new();
        for (t, prov) in inputs {
            if matches!(t, Tuple::Bind3(_)) {
                continue;
            }
            main_inputs.push((t, prov));
        }
        for (t, prov) in main_inputs {
            queue.extend(c.add(t, Origin::Input(prov), true));
        }
        if rules.contains(Rule::R0) {
            for k in &keys {
                for n in &names {
                    let lhs = FqName::key(k.clone()).child(n.clone());
                    let axiom = Tuple::Name4(Name4 {
                        issuer: k.clone(),
                        name: n.clone(),
                        subject: lhs,
                        validity: Validity::always(),
                    });
                    queue.extend(c.add(axiom, Origin::Axiom(Rule::R0), true));
                }
            }
        }
        c.saturate(queue);
        if rules == RuleSet::Rs2 {
            loop {
                let fresh = c.canonical_merges();
                if fresh.is_empty() {
                    break;
                }
                c.saturate(fresh.into_iter().collect());
            }
        }
        c.close_bind3();
        Ok(c)
    }

    /// Convenience: close bare tuples.
    pub fn of_tuples(
        tuples: impl IntoIterator<Item = Tuple>,
        rules: RuleSet,
        cfg: &ClosureConfig,
        target: Option<&Tuple>,
    ) -> Result<Closure, EngineError> {
        let inputs = tuples.into_iter().map(|t| (t, Provenance::Given)).collect();
        Closure::build(inputs, rules, cfg, target)
    }

    pub fn rules(&self) -> RuleSet {
        self.rules
    }

    pub fn bound(&self) -> usize {
        self.bound
    }

    pub fn emit_bind3(&self) -> bool {
        self.emit_bind3
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn tuples(&self) -> impl Iterator<Item = &Tuple> {
        self.entries.iter().map(|e| &e.tuple)
    }

    pub fn tuple(&self, idx: usize) -> &Tuple {
        &self.entries[idx].tuple
    }

    pub fn position(&self, t: &Tuple) -> Option<usize> {
        self.index.get(t).copied()
    }

    pub fn contains(&self, t: &Tuple) -> bool {
        self.index.contains_key(t)
    }

    /// Name4 members with the given issuer, name and subject.
    pub fn name4_group(&self, k: &Key, n: &LocalName, p: &FqName) -> &[usize] {
        self.name4_groups.get(&(k.clone(), n.clone(), p.clone())).map_or(&[], Vec::as_slice)
    }

    /// Name4 members with the given issuer and name.
    pub fn name4_by_name(&self, k: &Key, n: &LocalName) -> &[usize] {
        self.by_name.get(&(k.clone(), n.clone())).map_or(&[], Vec::as_slice)
    }

    /// Auth5 members with the given issuer and subject.
    pub fn auth5_group(&self, k: &Key, p: &FqName) -> &[usize] {
        self.auth5_groups.get(&(k.clone(), p.clone())).map_or(&[], Vec::as_slice)
    }

    /// Bind3 members with the given left side (only left sides drawn from
    /// the instance's subexpressions are closed eagerly).
    pub fn bind3_from(&self, lhs: &FqName) -> &[usize] {
        self.bind3_by_lhs.get(lhs).map_or(&[], Vec::as_slice)
    }

    /// The left sides for which 3-tuples were computed.
    pub fn bind3_seeds(&self) -> &BTreeSet<FqName> {
        &self.seeds
    }

    /// 3-tuples derivable from `lhs` by R5 and R6/R6′ within the bound,
    /// computed on demand for any left side.
    pub fn bind3_reach(&self, lhs: &FqName) -> Vec<Bind3> {
        let mut seen: HashSet<Tuple> = HashSet::new();
        let start = rules::r5(lhs);
        let mut queue = VecDeque::from([start.clone()]);
        seen.insert(start);
        let mut out = Vec::new();
        while let Some(t) = queue.pop_front() {
            let Tuple::Bind3(b) = &t else { unreachable!() };
            for (_, next) in self.bind3_steps(b) {
                if seen.insert(next.clone()) {
                    queue.push_back(next);
                }
            }
            out.push(b.clone());
        }
        out
    }

    fn add(&mut self, t: Tuple, origin: Origin, exempt: bool) -> Option<usize> {
        if t.validity().is_empty() || self.index.contains_key(&t) {
            return None;
        }
        if !exempt && subject_len(&t) > self.bound {
            return None;
        }
        let i = self.entries.len();
        self.index.insert(t.clone(), i);
        self.entries.push(Entry { tuple: t, origin });
        Some(i)
    }

    fn register(&mut self, i: usize) {
        match self.entries[i].tuple.clone() {
            Tuple::Name4(n) => {
                self.by_name.entry((n.issuer.clone(), n.name.clone())).or_default().push(i);
                if let Some((k, m, _)) = n.subject.split_head() {
                    self.by_head.entry((k.clone(), m.clone())).or_default().push(i);
                }
                self.name4_groups.entry((n.issuer, n.name, n.subject)).or_default().push(i);
            }
            Tuple::Auth5(a) => {
                self.auth_by_issuer.entry(a.issuer.clone()).or_default().push(i);
                if let Some((k, m, _)) = a.subject.split_head() {
                    self.by_head.entry((k.clone(), m.clone())).or_default().push(i);
                }
                if a.delegate {
                    if let Some(k) = a.subject.as_key() {
                        self.deleg_to.entry(k.clone()).or_default().push(i);
                    }
                }
                self.auth5_groups.entry((a.issuer, a.subject)).or_default().push(i);
            }
            Tuple::Bind3(b) => self.bind3_by_lhs.entry(b.lhs).or_default().push(i),
        }
    }

    fn saturate(&mut self, mut queue: VecDeque<usize>) {
        let keys_only = !self.rules.general_subjects();
        let name_rule = self.rules.name_rule();
        let auth_rule = self.rules.auth_rule();
        while let Some(i) = queue.pop_front() {
            self.register(i);
            let mut out: Vec<(Tuple, Rule, [usize; 2])> = Vec::new();
            match &self.entries[i].tuple {
                Tuple::Name4(a) => {
                    if let Some((k, m, _)) = a.subject.split_head() {
                        for &j in self.name4_by_name(k, m) {
                            let b = self.entries[j].tuple.as_name4().expect("indexed as Name4");
                            if let Some(t) = rules::r2(a, b, keys_only) {
                                out.push((t, name_rule, [i, j]));
                            }
                        }
                    }
                    for &j in self.by_head.get(&(a.issuer.clone(), a.name.clone())).map_or(&[][..], Vec::as_slice) {
                        match &self.entries[j].tuple {
                            Tuple::Name4(x) => {
                                if let Some(t) = rules::r2(x, a, keys_only) {
                                    out.push((t, name_rule, [j, i]));
                                }
                            }
                            Tuple::Auth5(x) => {
                                if let Some(t) = rules::r3(x, a, keys_only) {
                                    out.push((t, auth_rule, [j, i]));
                                }
                            }
                            Tuple::Bind3(_) => {}
                        }
                    }
                }
                Tuple::Auth5(a) => {
                    if a.delegate {
                        if let Some(k) = a.subject.as_key() {
                            for &j in self.auth_by_issuer.get(k).map_or(&[][..], Vec::as_slice) {
                                let b = self.entries[j].tuple.as_auth5().expect("indexed as Auth5");
                                if let Some(t) = rules::r1(a, b) {
                                    out.push((t, Rule::R1, [i, j]));
                                }
                            }
                        }
                    }
                    for &j in self.deleg_to.get(&a.issuer).map_or(&[][..], Vec::as_slice) {
                        let x = self.entries[j].tuple.as_auth5().expect("indexed as Auth5");
                        if let Some(t) = rules::r1(x, a) {
                            out.push((t, Rule::R1, [j, i]));
                        }
                    }
                    if let Some((k, m, _)) = a.subject.split_head() {
                        for &j in self.name4_by_name(k, m) {
                            let b = self.entries[j].tuple.as_name4().expect("indexed as Name4");
                            if let Some(t) = rules::r3(a, b, keys_only) {
                                out.push((t, auth_rule, [i, j]));
                            }
                        }
                    }
                }
                Tuple::Bind3(_) => {}
            }
            for (t, rule, premises) in out {
                queue.extend(self.add(t, Origin::Derived(rule, premises), false));
            }
        }
    }

    /// One round of canonical R4 merges; returns the new entries.
    fn canonical_merges(&mut self) -> Vec<usize> {
        let mut fresh = Vec::new();
        let mut planned: Vec<(Tuple, Origin)> = Vec::new();

        let mut groups: Vec<&Vec<usize>> = self.name4_groups.values().collect();
        groups.sort();
        for members in groups {
            planned.extend(interval_merges(&self.entries, members, Rule::R4a));
        }

        let mut groups: Vec<&Vec<usize>> = self.auth5_groups.values().collect();
        groups.sort();
        for members in groups {
            let mut by_da: HashMap<(bool, &ActionExpr), Vec<usize>> = HashMap::new();
            let mut by_v: HashMap<Validity, Vec<usize>> = HashMap::new();
            for &m in members {
                let a = self.entries[m].tuple.as_auth5().expect("grouped as Auth5");
                by_da.entry((a.delegate, &a.action)).or_default().push(m);
                by_v.entry(a.validity).or_default().push(m);
            }
            let mut subgroups: Vec<Vec<usize>> = by_da.into_values().collect();
            subgroups.sort();
            for sub in &subgroups {
                planned.extend(interval_merges(&self.entries, sub, Rule::R4b));
            }
            let mut subgroups: Vec<Vec<usize>> = by_v.into_values().collect();
            subgroups.sort();
            for sub in &subgroups {
                let delegating: Vec<usize> =
                    sub.iter().copied().filter(|&m| self.entries[m].tuple.as_auth5().unwrap().delegate).collect();
                planned.extend(action_merge(&self.entries, &delegating, true));
                if delegating.len() < sub.len() {
                    planned.extend(action_merge(&self.entries, sub, false));
                }
            }
        }
        for (t, origin) in planned {
            fresh.extend(self.add(t, origin, false));
        }
        fresh
    }

    fn bind3_steps(&self, b: &Bind3) -> Vec<(usize, Tuple)> {
        let keys_only = !self.rules.general_subjects();
        let mut out = Vec::new();
        if let Some((k, m, _)) = b.rhs.split_head() {
            for &j in self.name4_by_name(k, m) {
                let n = self.entries[j].tuple.as_name4().expect("indexed as Name4");
                if let Some(t) = rules::r6(b, n, keys_only) {
                    if subject_len(&t) <= self.bound {
                        out.push((j, t));
                    }
                }
            }
        }
        out
    }

    fn close_bind3(&mut self) {
        let rule = self.rules.bind_rule();
        let mut queue = VecDeque::new();
        for lhs in self.seeds.clone() {
            queue.extend(self.add(rules::r5(&lhs), Origin::Axiom(Rule::R5), true));
        }
        while let Some(i) = queue.pop_front() {
            self.register(i);
            let Tuple::Bind3(b) = self.entries[i].tuple.clone() else { unreachable!() };
            for (j, t) in self.bind3_steps(&b) {
                queue.extend(self.add(t, Origin::Derived(rule, [i, j]), false));
            }
        }
    }

    /// A derivation of member `idx`.
    pub fn derivation(&self, idx: usize) -> Derivation {
        let mut d = Derivation::new();
        self.extend_derivation(&mut d, idx);
        d
    }

    pub fn derivation_of(&self, t: &Tuple) -> Option<Derivation> {
        self.position(t).map(|i| self.derivation(i))
    }

    /// Adds the steps deriving member `idx` to `d`; returns its step index.
    pub fn extend_derivation(&self, d: &mut Derivation, idx: usize) -> usize {
        if let Some(s) = d.find(&self.entries[idx].tuple) {
            return s;
        }
        // post-order walk with an explicit stack; chains can be long
        let mut stack: Vec<(usize, bool)> = vec![(idx, false)];
        while let Some((i, expanded)) = stack.pop() {
            let entry = &self.entries[i];
            if d.find(&entry.tuple).is_some() {
                continue;
            }
            let premises: &[usize] = match &entry.origin {
                Origin::Input(_) | Origin::Axiom(_) => &[],
                Origin::Derived(_, p) => p,
                Origin::Merged(_, p) => p,
            };
            if !expanded {
                stack.push((i, true));
                for &p in premises.iter().rev() {
                    if d.find(&self.entries[p].tuple).is_none() {
                        stack.push((p, false));
                    }
                }
                continue;
            }
            let step_of = |d: &Derivation, p: usize| d.find(&self.entries[p].tuple).expect("premise derived first");
            match &entry.origin {
                Origin::Input(prov) => {
                    d.push(StepKind::Input(prov.clone()), vec![], entry.tuple.clone());
                }
                Origin::Axiom(rule) => {
                    d.push(StepKind::Rule(*rule), vec![], entry.tuple.clone());
                }
                Origin::Derived(rule, [a, b]) => {
                    let premises = vec![step_of(d, *a), step_of(d, *b)];
                    d.push(StepKind::Rule(*rule), premises, entry.tuple.clone());
                }
                Origin::Merged(rule, members) => {
                    let tuples: Vec<&Tuple> = members.iter().map(|&m| &self.entries[m].tuple).collect();
                    let mut acc = step_of(d, members[0]);
                    for (k, &m) in members.iter().enumerate().skip(1) {
                        let next = if k + 1 == members.len() {
                            entry.tuple.clone()
                        } else {
                            merge_prefix(*rule, &tuples[..=k], &entry.tuple)
                        };
                        acc = d.push(StepKind::Rule(*rule), vec![acc, step_of(d, m)], next);
                    }
                }
            }
        }
        d.find(&self.entries[idx].tuple).expect("derived")
    }
}

/// The subject-like prefixes a closure starts 3-tuples from: every prefix
/// of every subject, plus `k·n` for 4-tuples.
fn closure_prefixes(t: &Tuple) -> Vec<FqName> {
    match t {
        Tuple::Name4(n) => {
            let mut out: Vec<FqName> = n.subject.prefixes().collect();
            out.push(n.lhs());
            out.push(FqName::key(n.issuer.clone()));
            out
        }
        Tuple::Auth5(a) => {
            let mut out: Vec<FqName> = a.subject.prefixes().collect();
            out.push(FqName::key(a.issuer.clone()));
            out
        }
        Tuple::Bind3(b) => b.lhs.prefixes().chain(b.rhs.prefixes()).collect(),
    }
}

/// The result of folding the first members of a merge.
fn merge_prefix(rule: Rule, members: &[&Tuple], whole: &Tuple) -> Tuple {
    match rule {
        Rule::R4a | Rule::R4b => {
            let lo = members.iter().filter_map(|t| t.validity().bounds()).map(|(lo, _)| lo).min().unwrap();
            let hi = members.iter().filter_map(|t| t.validity().bounds()).map(|(_, hi)| hi).max().unwrap();
            whole.with_validity(Validity::new(lo, hi))
        }
        Rule::R4c => {
            let mut t = whole.as_auth5().expect("R4c merges 5-tuples").clone();
            t.action = members
                .iter()
                .map(|m| m.as_auth5().unwrap().action.clone())
                .reduce(|a, b| a.union(&b))
                .unwrap();
            Tuple::Auth5(t)
        }
        _ => unreachable!("only R4 rules merge"),
    }
}

/// Maximal connected unions of the members' intervals, as R4a/R4b chains
/// over the members that extend the running union.
fn interval_merges(entries: &[Entry], members: &[usize], rule: Rule) -> Vec<(Tuple, Origin)> {
    let mut spans: Vec<(u64, End, usize)> = members
        .iter()
        .filter_map(|&m| entries[m].tuple.validity().bounds().map(|(lo, hi)| (lo, hi, m)))
        .collect();
    spans.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)).then(a.2.cmp(&b.2)));
    let mut out = Vec::new();
    let mut flush = |chain: &mut Vec<usize>, lo: u64, hi: End| {
        if chain.len() >= 2 {
            let t = entries[chain[0]].tuple.with_validity(Validity::new(lo, hi));
            out.push((t, Origin::Merged(rule, std::mem::take(chain))));
        }
        chain.clear();
    };
    let mut chain: Vec<usize> = Vec::new();
    let (mut lo, mut hi) = (0, End::At(0));
    for (slo, shi, m) in spans {
        let joins = !chain.is_empty() && (hi == End::Infinity || slo <= hi.finite().unwrap().saturating_add(1));
        if !joins {
            flush(&mut chain, lo, hi);
            chain.push(m);
            lo = slo;
            hi = shi;
        } else if shi > hi {
            chain.push(m);
            hi = shi;
        }
    }
    flush(&mut chain, lo, hi);
    out
}

/// The union of the members' actions (all sharing one interval) as an R4c
/// chain, keeping only members that add atoms.
fn action_merge(entries: &[Entry], members: &[usize], delegate: bool) -> Option<(Tuple, Origin)> {
    let mut chain = Vec::new();
    let mut acc = ActionExpr::empty();
    let mut sorted: Vec<usize> = members.to_vec();
    sorted.sort_by(|&a, &b| entries[a].tuple.cmp(&entries[b].tuple));
    for m in sorted {
        let a = entries[m].tuple.as_auth5().expect("Auth5");
        if !a.action.is_subset(&acc) {
            acc = acc.union(&a.action);
            chain.push(m);
        }
    }
    if chain.len() < 2 {
        return None;
    }
    let first: &Auth5 = entries[chain[0]].tuple.as_auth5().unwrap();
    let t = Tuple::Auth5(Auth5 { delegate, action: acc, ..first.clone() });
    Some((t, Origin::Merged(Rule::R4c, chain)))
}
