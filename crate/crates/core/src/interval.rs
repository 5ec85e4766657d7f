//! Validity intervals over the natural numbers with an `∞` upper bound.

use std::fmt;

/// Upper end of a validity range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum End {
    At(u64),
    Infinity,
}

impl End {
    pub fn finite(self) -> Option<u64> {
        match self {
            End::At(t) => Some(t),
            End::Infinity => None,
        }
    }

    /// The point just after this end, `None` for `∞`.
    fn succ(self) -> Option<u64> {
        match self {
            End::At(t) => t.checked_add(1),
            End::Infinity => None,
        }
    }
}

impl fmt::Display for End {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            End::At(t) => write!(f, "{t}"),
            End::Infinity => f.write_str("∞"),
        }
    }
}

/// A validity interval `[lo, hi]` or the distinguished empty interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Validity {
    Empty,
    Range { lo: u64, hi: End },
}

impl Validity {
    /// `[lo, hi]`, or `Empty` when `lo > hi`.
    pub fn new(lo: u64, hi: End) -> Self {
        match hi {
            End::At(h) if h < lo => Validity::Empty,
            _ => Validity::Range { lo, hi },
        }
    }

    pub fn finite(lo: u64, hi: u64) -> Self {
        Validity::new(lo, End::At(hi))
    }

    pub fn from(lo: u64) -> Self {
        Validity::Range { lo, hi: End::Infinity }
    }

    /// `[0, ∞]`.
    pub fn always() -> Self {
        Validity::from(0)
    }

    pub fn point(t: u64) -> Self {
        Validity::finite(t, t)
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Validity::Empty)
    }

    pub fn bounds(&self) -> Option<(u64, End)> {
        match *self {
            Validity::Empty => None,
            Validity::Range { lo, hi } => Some((lo, hi)),
        }
    }

    pub fn is_point(&self) -> Option<u64> {
        match *self {
            Validity::Range { lo, hi: End::At(hi) } if lo == hi => Some(lo),
            _ => None,
        }
    }

    pub fn intersect(&self, other: &Validity) -> Validity {
        match (self.bounds(), other.bounds()) {
            (Some((lo1, hi1)), Some((lo2, hi2))) => Validity::new(lo1.max(lo2), hi1.min(hi2)),
            _ => Validity::Empty,
        }
    }

    pub fn contains(&self, t: u64) -> bool {
        match *self {
            Validity::Empty => false,
            Validity::Range { lo, hi } => lo <= t && End::At(t) <= hi,
        }
    }

    /// `self ⊇ other`.
    pub fn includes(&self, other: &Validity) -> bool {
        match (self.bounds(), other.bounds()) {
            (_, None) => true,
            (None, Some(_)) => false,
            (Some((lo1, hi1)), Some((lo2, hi2))) => lo1 <= lo2 && hi2 <= hi1,
        }
    }

    pub fn overlaps(&self, other: &Validity) -> bool {
        !self.intersect(other).is_empty()
    }
}

impl fmt::Display for Validity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Validity::Empty => f.write_str("∅"),
            Validity::Range { lo, hi } => write!(f, "[{lo},{hi}]"),
        }
    }
}

/// `V1 ∪ V2 ⊇ V3`.
pub fn intervals_cover(v1: &Validity, v2: &Validity, v3: &Validity) -> bool {
    covered_by(&[*v1, *v2], v3)
}

/// Whether the union of `parts` includes every point of `target`.
pub fn covered_by(parts: &[Validity], target: &Validity) -> bool {
    let Some((lo, hi)) = target.bounds() else {
        return true;
    };
    let mut ranges: Vec<(u64, End)> = parts.iter().filter_map(Validity::bounds).collect();
    ranges.sort();
    // `cursor` is the first point of `target` not yet known to be covered.
    let mut cursor = lo;
    for (plo, phi) in ranges {
        if End::At(cursor) > hi {
            break;
        }
        if plo > cursor {
            // ranges are sorted by lo, so nothing later covers `cursor`
            return false;
        }
        if phi >= End::At(cursor) {
            match phi.succ() {
                Some(next) => cursor = next,
                None => return true,
            }
        }
    }
    End::At(cursor) > hi
}

/// Splits `target` into maximal cells on which membership in every
/// interval of `family` is constant.
pub fn cells(family: &[Validity], target: &Validity) -> Vec<Validity> {
    let Some((lo, hi)) = target.bounds() else {
        return Vec::new();
    };
    // Cut points: every `lo` and every `hi + 1` inside the target.
    let mut cuts: Vec<u64> = vec![lo];
    for v in family {
        if let Some((a, b)) = v.bounds() {
            cuts.push(a);
            if let Some(s) = b.succ() {
                cuts.push(s);
            }
        }
    }
    cuts.retain(|&c| c >= lo && End::At(c) <= hi);
    cuts.sort_unstable();
    cuts.dedup();
    let mut out = Vec::with_capacity(cuts.len());
    for (i, &start) in cuts.iter().enumerate() {
        let end = match cuts.get(i + 1) {
            Some(&next) => End::At(next - 1),
            None => hi,
        };
        out.push(Validity::new(start, end));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(lo: u64, hi: u64) -> Validity {
        Validity::finite(lo, hi)
    }

    #[test]
    fn intersection_examples() {
        assert_eq!(v(1, 3).intersect(&v(2, 5)), v(2, 3));
        assert_eq!(v(1, 2).intersect(&v(3, 4)), Validity::Empty);
        assert_eq!(Validity::always().intersect(&v(4, 9)), v(4, 9));
        assert_eq!(Validity::always().intersect(&Validity::Empty), Validity::Empty);
        assert_eq!(Validity::from(3).intersect(&Validity::from(5)), Validity::from(5));
    }

    #[test]
    fn containment_examples() {
        assert!(v(5, 10).contains(5));
        assert!(!v(5, 10).contains(4));
        assert!(!Validity::Empty.contains(0));
        assert!(Validity::from(2).contains(u64::MAX));
        assert!(v(0, 10).includes(&v(2, 3)));
        assert!(!v(2, 3).includes(&v(0, 10)));
        assert!(v(2, 3).includes(&Validity::Empty));
    }

    #[test]
    fn cover_examples() {
        assert!(intervals_cover(&v(1, 2), &v(3, 4), &v(1, 4)));
        assert!(!intervals_cover(&v(1, 2), &v(4, 5), &v(1, 5)));
        assert!(intervals_cover(&v(2, 7), &v(2, 7), &v(2, 7)));
        assert!(intervals_cover(&v(0, 3), &Validity::from(2), &Validity::always()));
        assert!(!intervals_cover(&v(0, 3), &v(2, 100), &Validity::always()));
        assert!(intervals_cover(&Validity::Empty, &Validity::Empty, &Validity::Empty));
        assert!(!intervals_cover(&Validity::Empty, &Validity::Empty, &v(0, 0)));
    }

    #[test]
    fn cells_partition_target() {
        let fam = [v(1, 2), v(2, 5), Validity::from(7)];
        let cs = cells(&fam, &Validity::always());
        let shown: Vec<String> = cs.iter().map(|c| c.to_string()).collect();
        assert_eq!(shown, ["[0,0]", "[1,1]", "[2,2]", "[3,5]", "[6,6]", "[7,∞]"]);
    }

    fn arb_validity() -> impl Strategy<Value = Validity> {
        prop_oneof![
            1 => Just(Validity::Empty),
            4 => (0u64..10, 0u64..10).prop_map(|(a, b)| Validity::finite(a.min(b), a.max(b))),
            1 => (0u64..10).prop_map(Validity::from),
        ]
    }

    proptest! {
        #[test]
        fn intersect_laws(a in arb_validity(), b in arb_validity(), c in arb_validity()) {
            prop_assert_eq!(a.intersect(&b), b.intersect(&a));
            prop_assert_eq!(a.intersect(&b).intersect(&c), a.intersect(&b.intersect(&c)));
            prop_assert_eq!(a.intersect(&Validity::always()), a);
            prop_assert_eq!(a.intersect(&Validity::Empty), Validity::Empty);
        }

        #[test]
        fn cover_matches_pointwise_sweep(a in arb_validity(), b in arb_validity(), c in arb_validity()) {
            // witnesses: every endpoint of every interval, +-1, and a far point
            let mut pts = vec![0u64, 1_000];
            for x in [a, b, c] {
                if let Some((lo, hi)) = x.bounds() {
                    pts.extend([lo.saturating_sub(1), lo, lo + 1]);
                    if let End::At(h) = hi {
                        pts.extend([h.saturating_sub(1), h, h + 1]);
                    }
                }
            }
            let brute = pts.iter().filter(|&&t| c.contains(t)).all(|&t| a.contains(t) || b.contains(t));
            prop_assert_eq!(intervals_cover(&a, &b, &c), brute);
        }
    }
}
