//! Liveness of certificates with respect to CRLs, and `Tuples(C, C_R)`.

use std::collections::{BTreeMap, BTreeSet};

use crate::cert::{Certificate, Crl, Tuple};
use crate::engine::EngineError;
use crate::interval::Validity;

/// Where an input tuple came from.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Provenance {
    /// An irrevocable certificate.
    Cert(Certificate),
    /// A revocable certificate paired with a CRL it is live with respect to.
    Pair(Certificate, Certificate),
    /// Supplied directly as a tuple.
    Given,
}

fn crl_of(crl: &Certificate) -> Result<&Crl, EngineError> {
    crl.as_crl().ok_or(EngineError::VariantMismatch("expected a CRL"))
}

/// Whether `c` is live with respect to `crl`: revocable by the CRL's
/// issuer, overlapping it in time, and not canceled by it.
pub fn is_live(c: &Certificate, crl: &Certificate) -> Result<bool, EngineError> {
    if c.is_crl() {
        return Err(EngineError::VariantMismatch("expected a naming or authorization certificate"));
    }
    let crl = crl_of(crl)?;
    Ok(c.revoker() == Some(crl.issuer())
        && c.validity().overlaps(&crl.validity())
        && !crl.canceled().contains(c))
}

/// `τ(c, c_R)`: the tuple of `c` with its interval cut down to the CRL's.
pub fn tuple_of_pair(c: &Certificate, crl: &Certificate) -> Result<Tuple, EngineError> {
    if !is_live(c, crl)? {
        return Err(EngineError::NotLive);
    }
    let v = c.validity().intersect(&crl_of(crl)?.validity());
    Ok(c.to_tuple()?.with_validity(v))
}

/// `Tuples(C, C_R)` with the provenance of each tuple. CRLs found in `certs`
/// are ignored; non-CRLs in `crls` are ignored. The result is sorted, and a
/// tuple produced several ways keeps its first provenance.
pub fn tuples_with_provenance(certs: &[Certificate], crls: &[Certificate]) -> Vec<(Tuple, Provenance)> {
    tuples_with_issue_times(certs.iter().map(|c| (c, None)), crls)
}

fn tuples_with_issue_times<'a>(
    certs: impl IntoIterator<Item = (&'a Certificate, Option<u64>)>,
    crls: &[Certificate],
) -> Vec<(Tuple, Provenance)> {
    let crls: Vec<&Certificate> = crls.iter().filter(|c| c.is_crl()).collect();
    let mut out: BTreeMap<Tuple, Provenance> = BTreeMap::new();
    for (c, issued) in certs {
        if c.is_crl() {
            continue;
        }
        let tuple = c.to_tuple().expect("not a CRL");
        let clip = |t: Tuple| match issued {
            Some(at) => {
                let v = t.validity().intersect(&Validity::from(at));
                t.with_validity(v)
            }
            None => t,
        };
        if c.revoker().is_none() {
            let t = clip(tuple);
            if !t.validity().is_empty() {
                out.entry(t).or_insert_with(|| Provenance::Cert(c.clone()));
            }
            continue;
        }
        for crl in &crls {
            if let Ok(t) = tuple_of_pair(c, crl) {
                let t = clip(t);
                if !t.validity().is_empty() {
                    out.entry(t).or_insert_with(|| Provenance::Pair(c.clone(), (*crl).clone()));
                }
            }
        }
    }
    out.into_iter().collect()
}

/// `Tuples(C, C_R)`.
pub fn tuples_of(certs: &[Certificate], crls: &[Certificate]) -> BTreeSet<Tuple> {
    tuples_with_provenance(certs, crls).into_iter().map(|(t, _)| t).collect()
}

/// Tuples of everything issued in a run. With `clip_to_issue`, a
/// certificate's interval starts no earlier than its first issue time.
pub fn tuples_of_run(
    events: &BTreeMap<u64, BTreeSet<Certificate>>,
    clip_to_issue: bool,
) -> Vec<(Tuple, Provenance)> {
    let mut first_issue: BTreeMap<&Certificate, u64> = BTreeMap::new();
    for (t, cs) in events {
        for c in cs {
            first_issue.entry(c).or_insert(*t);
        }
    }
    let crls: Vec<Certificate> = first_issue.keys().filter(|c| c.is_crl()).map(|c| (*c).clone()).collect();
    tuples_with_issue_times(
        first_issue.iter().map(|(c, t)| (*c, clip_to_issue.then_some(*t))),
        &crls,
    )
}

/// The first pair of distinct same-issuer CRLs with overlapping intervals.
pub fn crl_conflict<'a>(crls: impl IntoIterator<Item = &'a Certificate>) -> Option<(&'a Crl, &'a Crl)> {
    let crls: Vec<&Crl> = crls.into_iter().filter_map(Certificate::as_crl).collect();
    for (i, a) in crls.iter().enumerate() {
        for b in &crls[i + 1..] {
            if a != b && a.issuer() == b.issuer() && a.validity().overlaps(&b.validity()) {
                return Some((a, b));
            }
        }
    }
    None
}

pub fn crl_set_consistent(crls: &[Certificate]) -> bool {
    crl_conflict(crls).is_none()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::parse_certificate;

    fn cert(s: &str) -> Certificate {
        parse_certificate(s).unwrap()
    }

    fn revocable(lo: u64, hi: u64) -> Certificate {
        cert(&format!(
            "(cert (issuer (name k-k n)) (subject k-p) (valid (not-before {lo}) (not-after {hi})) (revoker k-r))"
        ))
    }

    fn crl(issuer: &str, canceled: &[&Certificate], lo: u64, hi: u64) -> Certificate {
        let inner: Vec<String> = canceled.iter().map(|c| c.to_string()).collect();
        cert(&format!(
            "(crl (issuer {issuer}) (canceled {}) (valid (not-before {lo}) (not-after {hi})))",
            inner.join(" ")
        ))
    }

    #[test]
    fn liveness_conditions() {
        let c = revocable(3, 8);
        assert!(is_live(&c, &crl("k-r", &[], 0, 5)).unwrap());
        assert!(!is_live(&c, &crl("k-r", &[&c], 0, 5)).unwrap());
        assert!(!is_live(&c, &crl("k-r2", &[], 0, 5)).unwrap());
        assert!(!is_live(&c, &crl("k-r", &[], 9, 12)).unwrap());
        assert!(is_live(&crl("k-r", &[], 0, 1), &c).is_err());
    }

    #[test]
    fn pairs_intersect_intervals() {
        let c = revocable(3, 8);
        let t = tuple_of_pair(&c, &crl("k-r", &[], 0, 5)).unwrap();
        assert_eq!(t.to_string(), "(4tuple k-k n k-p (valid (not-before 3) (not-after 5)))");
        let a = cert("(cert (issuer k-k) (subject k-p) (propagate) (tag (set a)) (valid) (revoker k-r))");
        let t = tuple_of_pair(&a, &crl("k-r", &[], 2, 4)).unwrap();
        assert_eq!(t.validity(), Validity::finite(2, 4));
        assert_eq!(tuple_of_pair(&c, &crl("k-r", &[&c], 0, 5)), Err(EngineError::NotLive));
    }

    #[test]
    fn tuples_of_examples() {
        let irrevocable = cert("(cert (issuer (name k-k n)) (subject k-p) (valid))");
        assert_eq!(tuples_of(std::slice::from_ref(&irrevocable), &[]), BTreeSet::from([irrevocable.to_tuple().unwrap()]));
        assert!(tuples_of(&[revocable(0, 4)], &[]).is_empty());
    }

    #[test]
    fn crl_consistency() {
        assert!(crl_set_consistent(&[crl("k-k", &[], 0, 3), crl("k-k", &[], 4, 9)]));
        assert!(!crl_set_consistent(&[crl("k-k", &[], 0, 5), crl("k-k", &[], 5, 9)]));
        assert!(crl_set_consistent(&[crl("k-k1", &[], 0, 9), crl("k-k2", &[], 0, 9)]));
    }

    #[test]
    fn clipping_to_issue_time() {
        let c = cert("(cert (issuer (name k-k n)) (subject k-k2) (valid (not-before 0) (not-after 10)))");
        let events = BTreeMap::from([(5, BTreeSet::from([c]))]);
        let plain = tuples_of_run(&events, false);
        let clipped = tuples_of_run(&events, true);
        assert_eq!(plain[0].0.validity(), Validity::finite(0, 10));
        assert_eq!(clipped[0].0.validity(), Validity::finite(5, 10));
    }
}
