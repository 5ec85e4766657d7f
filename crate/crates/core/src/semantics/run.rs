use std::collections::{BTreeMap, BTreeSet};

use crate::cert::Certificate;
use crate::engine::crl_conflict;
use crate::interval::Validity;
use crate::semantics::SemanticsError;

/// Which certificates are issued at which times. Issuing is cumulative:
/// a certificate counts as issued at every time after it first appears.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Run {
    events: BTreeMap<u64, BTreeSet<Certificate>>,
    first_issue: BTreeMap<Certificate, u64>,
}

impl Run {
    /// Validates that the CRLs issued anywhere in the run are consistent.
    pub fn new(events: BTreeMap<u64, BTreeSet<Certificate>>) -> Result<Run, SemanticsError> {
        let mut events = events;
        events.retain(|_, cs| !cs.is_empty());
        let mut first_issue = BTreeMap::new();
        for (t, cs) in &events {
            for c in cs {
                first_issue.entry(c.clone()).or_insert(*t);
            }
        }
        if let Some((a, b)) = crl_conflict(first_issue.keys()) {
            return Err(SemanticsError::InconsistentCrls(
                Certificate::Crl(a.clone()).to_string(),
                Certificate::Crl(b.clone()).to_string(),
            ));
        }
        Ok(Run { events, first_issue })
    }

    /// Everything issued at time 0 and nothing later.
    pub fn canonical<'a>(certs: impl IntoIterator<Item = &'a Certificate>) -> Result<Run, SemanticsError> {
        let at_zero: BTreeSet<Certificate> = certs.into_iter().cloned().collect();
        Run::new(BTreeMap::from([(0, at_zero)]))
    }

    pub fn events(&self) -> &BTreeMap<u64, BTreeSet<Certificate>> {
        &self.events
    }

    /// All certificates ever issued, with the time each first appears.
    pub fn issued(&self) -> impl Iterator<Item = (&Certificate, u64)> {
        self.first_issue.iter().map(|(c, t)| (c, *t))
    }

    pub fn first_issue(&self, c: &Certificate) -> Option<u64> {
        self.first_issue.get(c).copied()
    }

    /// Whether `c` appears at some `t' ≤ t`.
    pub fn issued_by(&self, c: &Certificate, t: u64) -> bool {
        self.first_issue(c).is_some_and(|t0| t0 <= t)
    }

    /// Times at which something issued in the run can change: issue times
    /// and the ends of every validity interval (as `hi + 1`).
    pub fn breakpoints(&self) -> BTreeSet<u64> {
        let mut out = BTreeSet::from([0]);
        for (c, t) in self.issued() {
            out.insert(t);
            add_interval(&mut out, &c.validity());
        }
        out
    }
}

pub(crate) fn add_interval(out: &mut BTreeSet<u64>, v: &Validity) {
    if let Some((lo, hi)) = v.bounds() {
        out.insert(lo);
        if let Some(hi) = hi.finite() {
            out.insert(hi + 1);
        }
    }
}

/// Whether `c` is applicable at `t` in `run`: irrevocable, or some CRL by
/// its revoker, issued by `t` and valid at `t`, leaves it off.
pub fn applicable(run: &Run, c: &Certificate, t: u64) -> Result<bool, SemanticsError> {
    if c.is_crl() {
        return Err(SemanticsError::VariantMismatch("applicability is defined for naming and authorization certificates"));
    }
    let Some(revoker) = c.revoker() else {
        return Ok(true);
    };
    Ok(run.issued().any(|(crl, t0)| {
        crl.as_crl().is_some_and(|crl| {
            t0 <= t && crl.issuer() == revoker && crl.validity().contains(t) && !crl.canceled().contains(c)
        })
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::parse_certificate;

    fn cert(s: &str) -> Certificate {
        parse_certificate(s).unwrap()
    }

    #[test]
    fn overlapping_crls_are_rejected() {
        let a = cert("(crl (issuer k-r) (canceled) (valid (not-before 0) (not-after 5)))");
        let b = cert("(crl (issuer k-r) (canceled) (valid (not-before 3) (not-after 9)))");
        let events = BTreeMap::from([(0, BTreeSet::from([a])), (1, BTreeSet::from([b]))]);
        assert!(matches!(Run::new(events), Err(SemanticsError::InconsistentCrls(..))));
        assert_eq!(Run::new(BTreeMap::new()).unwrap(), Run::default());
    }

    #[test]
    fn revocable_without_crl_is_never_applicable() {
        let c = cert("(cert (issuer (name k-a n)) (subject k-b) (valid (not-before 0) (not-after 9)) (revoker k-r))");
        let run = Run::canonical([&c]).unwrap();
        assert!((0..12).all(|t| !applicable(&run, &c, t).unwrap()));
        let crl = cert("(crl (issuer k-r) (canceled) (valid (not-before 0) (not-after 9)))");
        assert!(applicable(&run, &crl, 0).is_err());
    }
}
