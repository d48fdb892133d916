use dsmseq_core::solver::{backward_child_value, forward_child_value};
use dsmseq_core::{
    complement_address, generate_instance, prefix_value, rank_subset, read_dsm, split_components, suffix_value,
    total_feedback_length, unrank_subset, write_dsm, ActivitySequence, BinomialTable, HashAddress,
};
use proptest::prelude::*;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// (n, density, seed, permutation, split)
fn instance() -> impl Strategy<Value = (usize, f64, u64, Vec<usize>, usize)> {
    (4usize..=12, 0.0f64..=1.0, any::<u64>()).prop_flat_map(|(n, density, seed)| {
        (
            Just(n),
            Just(density),
            Just(seed),
            Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
            2..n,
        )
    })
}

fn subset() -> impl Strategy<Value = (usize, Vec<usize>)> {
    (1usize..=20).prop_flat_map(|n| {
        (
            Just(n),
            proptest::sample::subsequence((1..=n).collect::<Vec<_>>(), 1..=n),
        )
    })
}

proptest! {
    #[test]
    fn split_adds_up((n, density, seed, order, p) in instance()) {
        let dsm = generate_instance(n, density, seed).unwrap();
        let seq = ActivitySequence::from_indices(order.clone()).unwrap();
        let fl = total_feedback_length(&dsm, &seq).unwrap();
        let s = split_components(&dsm, &seq, p).unwrap();
        prop_assert!(close(fl, s.fv_a + s.fv_b));
        prop_assert!(close(fl, s.fl_a + s.fl_b + s.fl_c));
        prop_assert!(close(s.fl_c, s.fv_ca + s.fv_cb));
        prop_assert!(s.fv_a >= 0.0 && s.fv_b >= 0.0);
    }

    #[test]
    fn regions_are_independent((n, density, seed, order, p) in instance(), rot in 0usize..12) {
        let dsm = generate_instance(n, density, seed).unwrap();
        let base = split_components(&dsm, &ActivitySequence::from_indices(order.clone()).unwrap(), p).unwrap();
        let mut prefix_moved = order.clone();
        prefix_moved[..p].reverse();
        let mut suffix_moved = order.clone();
        suffix_moved[p..].rotate_left(rot % (n - p));
        let pm = split_components(&dsm, &ActivitySequence::from_indices(prefix_moved).unwrap(), p).unwrap();
        let sm = split_components(&dsm, &ActivitySequence::from_indices(suffix_moved).unwrap(), p).unwrap();
        prop_assert_eq!(pm.fv_b, base.fv_b);
        prop_assert_eq!(sm.fv_a, base.fv_a);
    }

    #[test]
    fn recursions_match_direct((n, density, seed, order, _p) in instance()) {
        let dsm = generate_instance(n, density, seed).unwrap();
        let mut fv = prefix_value(&dsm, &order[..1]);
        for len in 2..n {
            fv = forward_child_value(&dsm, &order[..len - 1], fv, order[len - 1]);
            prop_assert_eq!(fv, prefix_value(&dsm, &order[..len]));
        }
        let mut fv = 0.0;
        for start in (1..n - 1).rev() {
            fv = backward_child_value(&dsm, &order[start + 1..], fv, order[start]);
            prop_assert_eq!(fv, suffix_value(&dsm, &order[start..]));
        }
    }

    #[test]
    fn rank_ignores_input_order((n, ids) in subset(), seed in any::<u64>()) {
        let t = BinomialTable::new(20).unwrap();
        let mut shuffled = ids.clone();
        let k = shuffled.len();
        shuffled.rotate_left((seed as usize) % k);
        shuffled.reverse();
        let a = rank_subset(&ids, n, &t).unwrap();
        prop_assert_eq!(a, rank_subset(&shuffled, n, &t).unwrap());
        prop_assert_eq!(unrank_subset(a.ha, n, ids.len(), &t).unwrap(), ids);
    }

    #[test]
    fn complement_is_an_involution((n, ids) in subset()) {
        let t = BinomialTable::new(20).unwrap();
        prop_assume!(ids.len() < n);
        let a = rank_subset(&ids, n, &t).unwrap();
        let c = complement_address(a, &t).unwrap();
        let rest: Vec<usize> = (1..=n).filter(|x| !ids.contains(x)).collect();
        prop_assert_eq!(c, rank_subset(&rest, n, &t).unwrap());
        prop_assert_eq!(complement_address(c, &t).unwrap(), HashAddress { ha: a.ha, n, p: ids.len() });
    }

    #[test]
    fn dsm_files_round_trip(n in 2usize..=15, density in 0.0f64..=1.0, seed in any::<u64>()) {
        let dsm = generate_instance(n, density, seed).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.txt");
        write_dsm(&dsm, &path).unwrap();
        prop_assert_eq!(read_dsm(&path).unwrap(), dsm);
    }
}
