//! Counter-model construction for certificates whose tuple is not
//! derivable: a run issuing all of `C ∪ C_R` on which `φ_c` fails.
//!
//! Time is cut into cells at the endpoints of the instance. Within a cell
//! the expressions of `Cl(C ∪ {c})` are grouped by mutual RS1
//! derivability of 3-tuples, each group gets a key (a key stands for
//! itself, other groups draw fresh keys), and the run issues one naming
//! certificate per derivable 3-tuple and one authorization certificate
//! per derivable 5-tuple, restated over those keys.

use std::collections::{BTreeMap, BTreeSet};

use crate::cert::{AuthCert, Certificate, NamingCert, Tuple};
use crate::engine::{derivable, tuples_with_provenance, Closure, ClosureConfig, RuleSet};
use crate::interval::{End, Validity};
use crate::principal::{FqName, Key};
use crate::semantics::eval::{eval_formula, sample_times};
use crate::semantics::interp::minimal_interpretation;
use crate::semantics::run::Run;
use crate::semantics::{SemanticsError, Universe};

#[derive(Debug, Clone)]
pub struct Witness {
    pub run: Run,
    /// Where `φ_c` fails.
    pub key: Key,
    pub time: u64,
    /// The cells time was cut into, each with its expression-to-key map.
    pub cells: Vec<(Validity, BTreeMap<FqName, Key>)>,
}

/// Point cells at each finite endpoint (and 0), and the gaps between them.
pub fn time_cells(intervals: impl IntoIterator<Item = Validity>) -> Vec<Validity> {
    let mut points = BTreeSet::from([0]);
    for v in intervals {
        if let Some((lo, hi)) = v.bounds() {
            points.insert(lo);
            if let End::At(hi) = hi {
                points.insert(hi);
            }
        }
    }
    let points: Vec<u64> = points.into_iter().collect();
    let mut out = Vec::new();
    for (i, &t) in points.iter().enumerate() {
        out.push(Validity::point(t));
        match points.get(i + 1) {
            Some(&next) if next > t + 1 => out.push(Validity::finite(t + 1, next - 1)),
            Some(_) => {}
            None => out.push(Validity::from(t + 1)),
        }
    }
    out
}

/// Builds the counter-model run for `c`, or `None` when `τ_c` is RS2
/// derivable from `Tuples(C, C_R)`.
pub fn build_completeness_witness(
    certs: &[Certificate],
    crls: &[Certificate],
    c: &Certificate,
    key_supply: &BTreeSet<Key>,
    cfg: &ClosureConfig,
) -> Result<Option<Witness>, SemanticsError> {
    let target = c.to_tuple().map_err(|_| SemanticsError::VariantMismatch("the target must not be a CRL"))?;
    let instance: Vec<Certificate> = certs.iter().chain(crls).cloned().collect();
    Run::canonical(&instance)?;

    let mut instance_keys: BTreeSet<Key> = c.keys();
    for x in &instance {
        instance_keys.extend(x.keys());
    }
    let size: usize = certs.iter().map(Certificate::size).sum::<usize>() + c.size();
    let available = key_supply.union(&instance_keys).count();
    if available <= size {
        return Err(SemanticsError::SupplyTooSmall { needed: size + 1, available });
    }

    let inputs = tuples_with_provenance(certs, crls);
    if derivable(inputs.clone(), &target, RuleSet::Rs2, cfg)?.is_some() {
        return Ok(None);
    }
    let closure = Closure::build(inputs, RuleSet::Rs1, cfg, Some(&target))?;
    let exprs: Vec<FqName> = closure.bind3_seeds().iter().cloned().collect();
    let in_s: BTreeSet<&FqName> = exprs.iter().collect();
    let reach: BTreeMap<&FqName, Vec<(FqName, Validity)>> = exprs
        .iter()
        .map(|p| {
            let hits = closure
                .bind3_reach(p)
                .into_iter()
                .filter(|b| in_s.contains(&b.rhs))
                .map(|b| (b.rhs, b.validity))
                .collect();
            (p, hits)
        })
        .collect();
    let binds = |p: &FqName, q: &FqName, w: &Validity| reach[p].iter().any(|(r, v)| r == q && v.includes(w));

    let fresh: Vec<Key> = key_supply.difference(&instance_keys).cloned().collect();
    let cells = time_cells(instance.iter().map(Certificate::validity));
    let mut issued: BTreeSet<Certificate> = instance.iter().cloned().collect();
    let mut cell_keys = Vec::new();
    for w in &cells {
        let mut reps: Vec<&FqName> = Vec::new();
        let mut class_of: BTreeMap<&FqName, usize> = BTreeMap::new();
        for p in &exprs {
            let found = reps.iter().position(|r| binds(p, r, w) && binds(r, p, w));
            let idx = found.unwrap_or_else(|| {
                reps.push(p);
                reps.len() - 1
            });
            class_of.insert(p, idx);
        }
        let mut class_key: Vec<Option<Key>> = vec![None; reps.len()];
        for p in &exprs {
            if let Some(k) = p.as_key() {
                class_key[class_of[p]].get_or_insert_with(|| k.clone());
            }
        }
        let mut next = fresh.iter();
        let needed = class_key.iter().filter(|k| k.is_none()).count();
        for slot in class_key.iter_mut().filter(|k| k.is_none()) {
            let k = next.next().ok_or(SemanticsError::SupplyTooSmall { needed, available: fresh.len() })?;
            *slot = Some(k.clone());
        }
        let key_of: BTreeMap<FqName, Key> =
            exprs.iter().map(|p| (p.clone(), class_key[class_of[p]].clone().expect("assigned"))).collect();

        for s in &exprs {
            let (Some(p), Some(n)) = (s.parent(), s.names().last()) else {
                continue;
            };
            for q in &exprs {
                if binds(s, q, w) {
                    issued.insert(Certificate::Naming(NamingCert {
                        issuer: key_of[&p].clone(),
                        name: n.clone(),
                        subject: FqName::key(key_of[q].clone()),
                        validity: *w,
                        revoker: None,
                    }));
                }
            }
        }
        for k in exprs.iter().filter_map(FqName::as_key) {
            for q in &exprs {
                for &i in closure.auth5_group(k, q) {
                    let Tuple::Auth5(a) = closure.tuple(i) else { continue };
                    if a.validity.includes(w) {
                        issued.insert(Certificate::Auth(AuthCert {
                            issuer: k.clone(),
                            subject: FqName::key(key_of[q].clone()),
                            delegate: a.delegate,
                            action: a.action.clone(),
                            validity: *w,
                            revoker: None,
                        }));
                    }
                }
            }
        }
        cell_keys.push((*w, key_of));
    }

    let run = Run::canonical(&issued)?;
    let phi = c.formula()?;
    let universe = Universe::from_instance(issued.iter().chain([c]), [&phi]);
    let interp = minimal_interpretation(&run, &universe);
    let premise_holds = |t: u64| instance.iter().all(|x| run.issued_by(x, t));
    for t in sample_times(&run, &interp, &phi) {
        for k in &universe.keys {
            if premise_holds(t) && !eval_formula(&run, &interp, k, t, &phi) {
                return Ok(Some(Witness { run, key: k.clone(), time: t, cells: cell_keys }));
            }
        }
    }
    Err(SemanticsError::PostconditionFailed(format!("phi of {c} holds throughout the constructed run")))
}
