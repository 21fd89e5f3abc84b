use std::collections::HashSet;

use bregman_bench::data::{
    generate_synthetic, load_dataset, normalize_repeats, save_dataset, split, LabeledDataset,
    RepeatsVector, SynthConfig,
};
use bregman_bench::Error;
use proptest::prelude::*;

fn small(seed: u64) -> SynthConfig {
    SynthConfig { n: 200, d: 6, k: 4, annotators_per_item: 20, teacher_hidden: 8, seed, ..SynthConfig::default() }
}

#[test]
fn generation_is_seeded() {
    let a = generate_synthetic(&small(9)).unwrap();
    let b = generate_synthetic(&small(9)).unwrap();
    let c = generate_synthetic(&small(10)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn instances_carry_repeats_and_ground_truth() {
    let cfg = small(1);
    let ds = generate_synthetic(&cfg).unwrap();
    assert_eq!((ds.len(), ds.d(), ds.k()), (cfg.n, cfg.d, cfg.k));
    for inst in ds.instances() {
        let r = inst.repeats.as_ref().unwrap();
        assert_eq!(r.total(), cfg.annotators_per_item as u64);
        assert_eq!(&normalize_repeats(r).unwrap(), &inst.target);
        assert!(inst.ground_truth.is_some());
    }
}

#[test]
fn huge_temperature_flattens_ground_truth() {
    let cfg = SynthConfig { n: 1000, k: 5, temperature: 1e6, ..SynthConfig::default() };
    let ds = generate_synthetic(&cfg).unwrap();
    let gts = ds.ground_truths().unwrap();
    let mean_max = gts.iter().map(|g| g.iter().cloned().fold(0.0, f64::max)).sum::<f64>() / gts.len() as f64;
    assert!((0.2..=0.25).contains(&mean_max), "{mean_max}");
}

#[test]
fn more_annotators_track_ground_truth_more_closely() {
    let l1 = |r: usize| {
        let ds = generate_synthetic(&SynthConfig { n: 500, annotators_per_item: r, ..SynthConfig::default() }).unwrap();
        let gts = ds.ground_truths().unwrap();
        ds.instances()
            .iter()
            .zip(&gts)
            .map(|(i, g)| i.target.iter().zip(g.iter()).map(|(a, b)| (a - b).abs()).sum::<f64>())
            .sum::<f64>()
            / ds.len() as f64
    };
    let (a, b, c) = (l1(5), l1(50), l1(500));
    assert!(a > b && b > c, "{a} {b} {c}");
}

#[test]
fn split_is_a_partition() {
    let ds = generate_synthetic(&small(2)).unwrap();
    let (train, test) = split(&ds, 0.8, 4).unwrap();
    assert_eq!(train.len() + test.len(), ds.len());
    let key = |d: &LabeledDataset| -> HashSet<Vec<u64>> {
        d.instances().iter().map(|i| i.features.iter().map(|v| v.to_bits()).collect()).collect()
    };
    let (a, b, all) = (key(&train), key(&test), key(&ds));
    assert!(a.is_disjoint(&b));
    assert_eq!(a.union(&b).cloned().collect::<HashSet<_>>(), all);
    assert_eq!(split(&ds, 0.8, 4).unwrap(), (train, test));
}

#[test]
fn ten_items_split_seven_three() {
    let ds = generate_synthetic(&SynthConfig { n: 10, ..SynthConfig::default() }).unwrap();
    let (a, b) = split(&ds, 0.7, 0).unwrap();
    assert_eq!((a.len(), b.len()), (7, 3));
}

#[test]
fn save_load_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("crowd.csv");
    let ds = generate_synthetic(&small(3)).unwrap();
    save_dataset(&ds, &path).unwrap();
    assert_eq!(load_dataset(&path).unwrap(), ds.features_and_targets());
}

#[test]
fn bad_row_sum_reports_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "#meta,d=1,K=2,N=2\n0.5,0.5,0.5\n1.0,0.6,0.2\n").unwrap();
    match load_dataset(&path) {
        Err(Error::Format { line, .. }) => assert_eq!(line, 3),
        other => panic!("expected a format error, got {other:?}"),
    }
}

#[test]
fn empty_and_headerless_files_are_format_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.csv");
    std::fs::write(&path, "").unwrap();
    assert!(matches!(load_dataset(&path), Err(Error::Format { line: 1, .. })));
    std::fs::write(&path, "0.1,0.5,0.5\n").unwrap();
    assert!(matches!(load_dataset(&path), Err(Error::Format { line: 1, .. })));
}

#[test]
fn missing_file_is_io() {
    assert!(matches!(load_dataset(std::path::Path::new("/nonexistent/crowd.csv")), Err(Error::Io(_))));
}

#[test]
fn slightly_off_rows_are_renormalized() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("near.csv");
    std::fs::write(&path, "#meta,d=1,K=2,N=1\n2.0,0.3000004,0.7\n").unwrap();
    let ds = load_dataset(&path).unwrap();
    let t = &ds.instances()[0].target;
    assert!((t.iter().sum::<f64>() - 1.0).abs() < 1e-15);
}

proptest! {
    #[test]
    fn normalized_repeats_sum_to_one(counts in prop::collection::vec(0u64..1000, 2..12)) {
        prop_assume!(counts.iter().any(|c| *c > 0));
        let p = normalize_repeats(&RepeatsVector::new(counts.clone()).unwrap()).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-15);
        let total: u64 = counts.iter().sum();
        for (v, c) in p.iter().zip(&counts) {
            prop_assert_eq!(*v, *c as f64 / total as f64);
        }
    }
}
