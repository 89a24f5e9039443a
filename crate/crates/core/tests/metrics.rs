mod common;

use common::*;
use kasba::metrics::{adjusted_rand_index, clustering_accuracy, mutual_information_scores, Metric};
use kasba::Scores;
use proptest::prelude::*;

fn labels(max_k: usize) -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
    (1usize..25).prop_flat_map(move |n| (prop::collection::vec(0..max_k, n), prop::collection::vec(0..max_k, n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn accuracy_matches_permutation_search((t, p) in labels(5)) {
        prop_assert!((clustering_accuracy(&t, &p).unwrap() - brute_accuracy(&t, &p)).abs() < 1e-12);
    }

    #[test]
    fn scores_invariant_to_relabelling((t, p) in labels(5), shift in 1usize..50) {
        let renamed: Vec<usize> = p.iter().map(|&l| (l + shift) * 3).collect();
        prop_assert_eq!(Scores::compute(&t, &p).unwrap(), Scores::compute(&t, &renamed).unwrap());
    }

    #[test]
    fn symmetric_scores((t, p) in labels(5)) {
        prop_assert!((adjusted_rand_index(&t, &p).unwrap() - adjusted_rand_index(&p, &t).unwrap()).abs() < 1e-12);
        let (n1, a1) = mutual_information_scores(&t, &p).unwrap();
        let (n2, a2) = mutual_information_scores(&p, &t).unwrap();
        prop_assert!((n1 - n2).abs() < 1e-12);
        prop_assert!((a1 - a2).abs() < 1e-9);
    }

    #[test]
    fn bounds((t, p) in labels(5)) {
        let s = Scores::compute(&t, &p).unwrap();
        prop_assert!(s.clacc > 0.0 && s.clacc <= 1.0);
        prop_assert!(s.nmi >= 0.0 && s.nmi <= 1.0);
        prop_assert!(s.ari <= 1.0 + 1e-12);
        prop_assert!(s.ami <= 1.0 + 1e-9);
    }

    #[test]
    fn identical_partitions_score_one(t in prop::collection::vec(0usize..6, 1..40)) {
        let s = Scores::compute(&t, &t).unwrap();
        for m in Metric::ALL {
            prop_assert!((s.get(m) - 1.0).abs() < 1e-9, "{}", m.name());
        }
    }
}

#[test]
fn independent_labelings_have_near_zero_ami_and_ari() {
    use rand::Rng;
    let mut total_ami = 0.0;
    let mut total_ari = 0.0;
    for s in 0..10 {
        let mut r = rng(s);
        let t: Vec<usize> = (0..500).map(|_| r.gen_range(0..4)).collect();
        let p: Vec<usize> = (0..500).map(|_| r.gen_range(0..4)).collect();
        total_ami += mutual_information_scores(&t, &p).unwrap().1;
        total_ari += adjusted_rand_index(&t, &p).unwrap();
    }
    assert!((total_ami / 10.0).abs() < 0.05);
    assert!((total_ari / 10.0).abs() < 0.05);
}

#[test]
fn known_ami_value() {
    // small table with a hand-checked expected mutual information
    let t = [0, 0, 0, 1, 1, 1];
    let p = [0, 0, 1, 1, 2, 2];
    let (nmi, ami) = mutual_information_scores(&t, &p).unwrap();
    assert!(nmi > 0.0 && nmi < 1.0);
    assert!(ami < nmi);
}
