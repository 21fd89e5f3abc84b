mod common;

use bregman_bench::metrics::{
    accuracy_ranking_decrease, convergence_delta, epochs_to_converge, macro_f1,
    max_accuracy_ranking_decrease, ndcg, rank_categories, ConfusionCounts, LossHistory,
};
use bregman_bench::ProbVector;
use common::*;
use proptest::prelude::*;

fn simplex(k: usize) -> impl Strategy<Value = ProbVector> {
    prop::collection::vec(0.01f64..1.0, k).prop_map(|raw| {
        let total: f64 = raw.iter().sum();
        ProbVector::with_tolerance(raw.iter().map(|v| v / total).collect(), 1e-9).unwrap()
    })
}

/// `n` target/prediction pairs over `k` categories.
fn batch() -> impl Strategy<Value = (Vec<ProbVector>, Vec<ProbVector>)> {
    (2usize..=7, 1usize..=20).prop_flat_map(|(k, n)| {
        (prop::collection::vec(simplex(k), n), prop::collection::vec(simplex(k), n))
    })
}

fn squared(q: &ProbVector) -> ProbVector {
    let sq: Vec<f64> = q.iter().map(|v| v * v).collect();
    let total: f64 = sq.iter().sum();
    ProbVector::with_tolerance(sq.iter().map(|v| v / total).collect(), 1e-9).unwrap()
}

fn history() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..5.0, 2..30)
}

proptest! {
    #[test]
    fn metrics_stay_in_bounds((t, q) in batch()) {
        let k = t[0].k();
        let f1 = macro_f1(&t, &q, k).unwrap();
        let nd = ndcg(&t, &q).unwrap();
        let acc = accuracy_ranking_decrease(&t, &q).unwrap();
        prop_assert!((0.0..=1.0).contains(&f1));
        prop_assert!(nd > 0.0 && nd <= 1.0 + 1e-12);
        prop_assert!(acc >= 0.0 && acc <= max_accuracy_ranking_decrease(k) + 1e-15);
    }

    #[test]
    fn metrics_ignore_instance_order((t, q) in batch(), rot in 0usize..20) {
        let k = t[0].k();
        let r = rot % t.len();
        let (mut t2, mut q2) = (t.clone(), q.clone());
        t2.rotate_left(r);
        q2.rotate_left(r);
        prop_assert_eq!(macro_f1(&t, &q, k).unwrap(), macro_f1(&t2, &q2, k).unwrap());
        prop_assert!((ndcg(&t, &q).unwrap() - ndcg(&t2, &q2).unwrap()).abs() < 1e-12);
        prop_assert!(
            (accuracy_ranking_decrease(&t, &q).unwrap() - accuracy_ranking_decrease(&t2, &q2).unwrap()).abs() < 1e-12
        );
    }

    #[test]
    fn metrics_only_see_the_prediction_ranking((t, q) in batch()) {
        let k = t[0].k();
        let q2: Vec<ProbVector> = q.iter().map(squared).collect();
        prop_assume!(q.iter().zip(&q2).all(|(a, b)| rank_categories(a) == rank_categories(b)));
        prop_assert_eq!(macro_f1(&t, &q, k).unwrap(), macro_f1(&t, &q2, k).unwrap());
        prop_assert_eq!(ndcg(&t, &q).unwrap(), ndcg(&t, &q2).unwrap());
        prop_assert_eq!(accuracy_ranking_decrease(&t, &q).unwrap(), accuracy_ranking_decrease(&t, &q2).unwrap());
    }

    #[test]
    fn perfect_ranking_has_unit_ndcg((t, _) in batch()) {
        prop_assert!((ndcg(&t, &t).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rank_is_a_sorted_permutation(p in (2usize..=9).prop_flat_map(simplex)) {
        let r = rank_categories(&p);
        let mut seen = r.order().to_vec();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..p.k()).collect::<Vec<_>>());
        prop_assert!(r.order().windows(2).all(|w| p[w[0]] >= p[w[1]]));
        prop_assert_eq!(r.top(), r.order()[0]);
    }

    #[test]
    fn looser_thresholds_converge_no_later(h in history(), a in 1e-4f64..1.0, b in 1e-4f64..1.0) {
        let h = LossHistory::new(h).unwrap();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        match (epochs_to_converge(&h, lo).unwrap(), epochs_to_converge(&h, hi).unwrap()) {
            (Some(strict), Some(loose)) => prop_assert!(loose <= strict),
            (Some(_), None) => prop_assert!(false, "tighter threshold converged, looser did not"),
            _ => {}
        }
    }

    #[test]
    fn converged_epoch_starts_a_quiet_tail(h in history(), threshold in 1e-3f64..1.0) {
        let hist = LossHistory::new(h).unwrap();
        let delta = convergence_delta(&hist).unwrap();
        prop_assert_eq!(delta.len(), hist.len() - 1);
        if let Some(e) = epochs_to_converge(&hist, threshold).unwrap() {
            prop_assert!(delta[e..].iter().all(|d| *d < threshold));
            if e > 0 {
                prop_assert!(delta[e - 1] >= threshold);
            }
        } else {
            prop_assert!(delta.last().is_some_and(|d| *d >= threshold));
        }
    }
}

#[test]
fn confusion_counts_single_class_examples() {
    let c = ConfusionCounts::from_labels(&[0, 0, 1, 1], &[0, 1, 1, 1], 2).unwrap();
    assert_eq!(c.true_positive, vec![1, 2]);
    assert_eq!(c.false_positive, vec![0, 1]);
    assert_eq!(c.false_negative, vec![1, 0]);
    assert!((c.f1(0) - 2.0 / 3.0).abs() < 1e-15);
    assert!((c.f1(1) - 0.8).abs() < 1e-15);
}

#[test]
fn absent_class_contributes_zero_f1() {
    let c = ConfusionCounts::from_labels(&[0, 0], &[0, 0], 3).unwrap();
    assert_eq!(c.f1(1), 0.0);
    assert!((c.macro_f1() - 1.0 / 3.0).abs() < 1e-15);
}

#[test]
fn ndcg_two_category_oracle() {
    // reversed prediction: DCG = 0.2 + 0.8/log2(3), ideal = 0.8 + 0.2/log2(3)
    let l3 = 3f64.log2();
    let v = ndcg(&[pv(&[0.8, 0.2])], &[pv(&[0.4, 0.6])]).unwrap();
    assert!((v - (0.2 + 0.8 / l3) / (0.8 + 0.2 / l3)).abs() < 1e-15);
}

#[test]
fn zero_loss_epoch_is_a_division_error() {
    let h = LossHistory::new(vec![1.0, 0.0, 0.5]).unwrap();
    assert!(matches!(convergence_delta(&h), Err(bregman_bench::Error::DivisionDomain { epoch: 1 })));
}

#[test]
fn empty_batches_are_rejected() {
    assert!(ndcg(&[], &[]).is_err());
    assert!(accuracy_ranking_decrease(&[], &[]).is_err());
    assert!(macro_f1(&[pv(&[0.5, 0.5])], &[], 2).is_err());
}
