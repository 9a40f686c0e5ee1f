use proptest::prelude::*;
use rmtlab::cycles::{canonicalize, is_even_cycle, mark_edges, to_dyck};
use rmtlab::exactnum::{catalan, catalan_composition_identity};
use rmtlab::stats::{histogram, ks_statistic, MomentAccumulator};
use rmtlab::Accumulator;

proptest! {
    #[test]
    fn merge_matches_concatenation(xs in prop::collection::vec(-50.0f64..50.0, 1..40),
                                   ys in prop::collection::vec(-50.0f64..50.0, 1..40)) {
        let merged = Accumulator::from_slice(&xs).merge(&Accumulator::from_slice(&ys));
        let all: Vec<f64> = xs.iter().chain(&ys).copied().collect();
        let whole = MomentAccumulator::from_slice(&all);
        prop_assert_eq!(merged.count(), whole.count());
        prop_assert!((merged.mean() - whole.mean()).abs() <= 1e-9 * (1.0 + whole.mean().abs()));
        if all.len() >= 4 {
            let (a, b) = (merged.finalize().unwrap(), whole.finalize().unwrap());
            prop_assert!((a.variance - b.variance).abs() <= 1e-8 * (1.0 + b.variance));
        }
    }

    #[test]
    fn ks_is_permutation_invariant(mut xs in prop::collection::vec(-4.0f64..4.0, 10..60)) {
        let a = ks_statistic(&xs).unwrap();
        xs.reverse();
        prop_assert_eq!(a, ks_statistic(&xs).unwrap());
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn histogram_conserves_counts(xs in prop::collection::vec(-3.0f64..3.0, 0..80), bins in 1usize..12) {
        let h = histogram(&xs, bins, (-1.0, 1.5)).unwrap();
        prop_assert_eq!(h.total(), xs.len() as u64);
    }

    #[test]
    fn canonical_form_is_idempotent(mut raw in prop::collection::vec(0u32..5, 2..9)) {
        raw.push(raw[0]);
        let c = canonicalize(&raw).unwrap();
        let again = canonicalize(c.vertices()).unwrap();
        prop_assert_eq!(&c, &again);
        prop_assert!(c.is_canonical());
    }

    #[test]
    fn even_cycles_map_to_dyck_paths(steps in prop::collection::vec(any::<bool>(), 1..6)) {
        // a tree walk built from a random Dyck-like stack is always even
        let mut walk = vec![0u32];
        let mut stack = vec![0u32];
        let mut next = 1u32;
        for up in steps {
            if up || stack.len() == 1 {
                walk.push(next);
                stack.push(next);
                next += 1;
            } else {
                stack.pop();
                walk.push(*stack.last().unwrap());
            }
        }
        while stack.len() > 1 {
            stack.pop();
            walk.push(*stack.last().unwrap());
        }
        let c = canonicalize(&walk).unwrap();
        prop_assert!(is_even_cycle(&c));
        let d = to_dyck(&mark_edges(&c)).unwrap();
        prop_assert_eq!(d.steps().len(), c.len());
    }
}

#[test]
fn composition_identity_small() {
    for l in 1..=10 {
        assert_eq!(catalan_composition_identity(l).unwrap(), 0.into());
    }
    assert_eq!(catalan(10), 16796.into());
}
