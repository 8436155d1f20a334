mod common;

use common::Bits;
use mlstream::{Instant, Interval, Resolution, TimeError, TimeSet};
use proptest::prelude::*;

const SPAN: i64 = 10_000;

fn interval(span: i64) -> impl Strategy<Value = Interval> {
    (0..=span, 0..=span / 10).prop_map(move |(s, len)| Interval::closed(s, (s + len).min(span)))
}

fn set(span: i64) -> impl Strategy<Value = TimeSet> {
    prop::collection::vec(interval(span), 0..8).prop_map(TimeSet::from_intervals)
}

fn bits(ts: &TimeSet) -> Bits {
    Bits::of(0, SPAN, ts)
}

fn as_pairs(ts: &TimeSet) -> Vec<(i64, i64)> {
    ts.intervals().iter().map(|iv| (iv.start.0, iv.end.0)).collect()
}

#[test]
fn examples() {
    let s = |v: &[(i64, i64)]| TimeSet::from_intervals(v.iter().map(|&(a, b)| Interval::closed(a, b)));
    assert_eq!(s(&[(0, 2)]).union(&s(&[(1, 3)])).unwrap(), s(&[(0, 3)]));
    assert_eq!(s(&[]).union(&s(&[(5, 7)])).unwrap(), s(&[(5, 7)]));
    assert_eq!(s(&[(0, 10)]).intersect(&s(&[(5, 15)])).unwrap(), s(&[(5, 10)]));
    assert!(s(&[(0, 1)]).intersect(&s(&[(2, 3)])).unwrap().is_empty());
    assert_eq!(s(&[]).measure(), 0);
    assert_eq!(s(&[(0, 3), (5, 7)]).measure(), 5);
    assert_eq!(s(&[(4, 4)]).measure(), 0);
    assert!(s(&[(0, 3)]).contains(Instant(3)));
    assert!(!s(&[(0, 3)]).contains(Instant(4)));
    assert!(s(&[(4, 4)]).contains(Instant(4)));
    // abutting intervals merge
    assert_eq!(as_pairs(&s(&[(0, 2), (2, 4)])), vec![(0, 4)]);
}

#[test]
fn resolution_mismatch() {
    let a = TimeSet::from_intervals_at(Resolution(1_000_000_000), [Interval::closed(0, 1)]);
    let b = TimeSet::from_intervals_at(Resolution(1_000_000), [Interval::closed(0, 1)]);
    assert!(matches!(a.union(&b), Err(TimeError::ResolutionMismatch { .. })));
    assert!(matches!(a.intersect(&b), Err(TimeError::ResolutionMismatch { .. })));
}

#[test]
fn wide_range() {
    let big = 1_000_000_000_000_000i64;
    let a = TimeSet::from_intervals([Interval::closed(-big, big)]);
    assert_eq!(a.measure(), 2 * big);
    assert!(a.contains(Instant(-big)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn operations_match_tick_oracle(a in set(SPAN), b in set(SPAN)) {
        let (ba, bb) = (bits(&a), bits(&b));
        let u = a.union(&b).unwrap();
        let i = a.intersect(&b).unwrap();
        prop_assert_eq!(as_pairs(&u), ba.or(&bb).intervals());
        prop_assert_eq!(as_pairs(&i), ba.and(&bb).intervals());
        prop_assert_eq!(a.measure(), ba.cells());
        prop_assert_eq!(u.measure(), ba.or(&bb).cells());
        prop_assert_eq!(i.measure(), ba.and(&bb).cells());
        prop_assert_eq!(u.measure(), a.measure() + b.measure() - i.measure());
    }

    #[test]
    fn contains_matches_oracle(a in set(SPAN), ts in prop::collection::vec(-5..=SPAN + 5, 50)) {
        let ba = bits(&a);
        for t in ts {
            prop_assert_eq!(a.contains(Instant(t)), ba.has(t));
        }
    }

    #[test]
    fn normalized_form(a in set(SPAN)) {
        prop_assert_eq!(a.normalize(), a.clone());
        let iv = a.intervals();
        for w in iv.windows(2) {
            // sorted, disjoint and not abutting
            prop_assert!(w[0].end < w[1].start);
        }
        prop_assert!(a.measure() >= 0);
    }

    #[test]
    fn algebra_laws(a in set(SPAN), b in set(SPAN), c in set(SPAN)) {
        prop_assert_eq!(a.union(&b).unwrap(), b.union(&a).unwrap());
        prop_assert_eq!(a.intersect(&b).unwrap(), b.intersect(&a).unwrap());
        prop_assert_eq!(a.union(&b).unwrap().union(&c).unwrap(), a.union(&b.union(&c).unwrap()).unwrap());
        prop_assert_eq!(a.intersect(&b).unwrap().intersect(&c).unwrap(), a.intersect(&b.intersect(&c).unwrap()).unwrap());
        let i = a.intersect(&b).unwrap().measure();
        prop_assert!(i <= a.measure().min(b.measure()));
    }
}
