//! Simulated crowd annotations: how the number of annotators per item shapes
//! the soft targets, and the on-disk format.
//!
//! cargo run --example crowd_targets

use bregman_bench::data::{
    generate_synthetic, load_dataset, normalize_repeats, save_dataset, split, RepeatsVector,
    SynthConfig,
};

fn main() -> bregman_bench::Result<()> {
    let votes = RepeatsVector::new(vec![7, 2, 1, 0])?;
    println!("votes {:?} -> target {:?}\n", votes.counts(), normalize_repeats(&votes)?.as_slice());

    for annotators in [1, 5, 50, 500] {
        let cfg = SynthConfig { n: 500, annotators_per_item: annotators, ..SynthConfig::default() };
        let ds = generate_synthetic(&cfg)?;
        let truth = ds.ground_truths().expect("synthetic data keeps ground truth");
        let l1 = ds
            .instances()
            .iter()
            .zip(&truth)
            .map(|(i, g)| i.target.iter().zip(g.iter()).map(|(a, b)| (a - b).abs()).sum::<f64>())
            .sum::<f64>()
            / ds.len() as f64;
        println!("R = {annotators:>3}: mean L1 distance from the annotator distribution {l1:.4}");
    }

    let cfg = SynthConfig { n: 200, d: 4, k: 3, ..SynthConfig::default() };
    let ds = generate_synthetic(&cfg)?;
    let first = &ds.instances()[0];
    println!("\nfirst item: x = {:.3?}", first.features);
    println!("            votes {:?}", first.repeats.as_ref().map(|r| r.counts().to_vec()));
    println!("            target {:.3?}", first.target.as_slice());
    println!("            truth  {:.3?}", first.ground_truth.as_ref().map(|g| g.as_slice().to_vec()));

    let (train, test) = split(&ds, 0.8, 1)?;
    println!("\nsplit 0.8: {} train / {} test", train.len(), test.len());

    let dir = std::env::temp_dir().join("bregman_bench_example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("crowd.csv");
    save_dataset(&ds, &path)?;
    let back = load_dataset(&path)?;
    println!("saved to {} and reloaded {} rows; identical: {}", path.display(), back.len(), back == ds.features_and_targets());
    let text = std::fs::read_to_string(&path)?;
    for line in text.lines().take(2) {
        println!("  {line}");
    }
    Ok(())
}
