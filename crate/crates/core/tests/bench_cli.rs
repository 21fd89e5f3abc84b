use std::path::Path;
use std::process::Command;

use bregman_bench::bench::{
    emit_comparison, output_files, render_table, sweep, ExperimentConfig, Metric,
};
use bregman_bench::divergence::LossId;

const TINY: &str = r#"
output_dir = "unused"
repetitions = 1
losses = ["mse"]

[data.synthetic]
n = 120
d = 4
k = 3
annotators_per_item = 10
teacher_hidden = 6

[train]
hidden_sizes = [8]
epochs = 3
batch_size = 32
"#;

fn tiny(extra: &str) -> ExperimentConfig {
    ExperimentConfig::from_toml_str(&format!("{extra}\n{TINY}")).unwrap()
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().skip(2).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn single_cell_sweep_gives_single_row_tables() {
    let report = sweep(&tiny("")).unwrap();
    assert_eq!(report.cells.len(), 1);
    for m in Metric::ALL {
        let rows = data_rows(&render_table(&report, m));
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0][0], "mse");
        assert_eq!((rows[0][6].as_str(), rows[0][7].as_str()), ("*", "*"));
    }
}

#[test]
fn fixed_seed_repetitions_have_zero_spread() {
    let mut cfg = tiny("fixed_seed = true");
    cfg.repetitions = 2;
    let report = sweep(&cfg).unwrap();
    let s = report.summary(LossId::Mse).unwrap();
    for m in &s.metrics {
        assert_eq!((m.train.std, m.test.std), (0.0, 0.0));
    }
    assert_eq!(cfg.seed_for(0), cfg.seed_for(1));
}

#[test]
fn table_cells_are_percentages_of_the_summary() {
    let mut cfg = tiny("");
    cfg.losses = vec![LossId::CrossEntropy, LossId::Mse, LossId::JensenShannon];
    cfg.repetitions = 2;
    let report = sweep(&cfg).unwrap();
    for m in Metric::ALL {
        for (row, s) in data_rows(&render_table(&report, m)).iter().zip(&report.summaries) {
            let stat = s.metric(m).unwrap();
            assert_eq!(row[0], s.loss.name());
            assert_eq!(row[4], format!("{:.3}", 100.0 * stat.test.mean));
            assert_eq!(row[5], format!("{:.3}", 100.0 * stat.test.std));
        }
    }
}

#[test]
fn delta_curves_follow_loss_curves() {
    let mut cfg = tiny("");
    cfg.losses = vec![LossId::CrossEntropy, LossId::ItakuraSaito];
    let report = sweep(&cfg).unwrap();
    let files = output_files(&report).unwrap();
    let curve = |name: &str| -> Vec<(String, usize, f64)> {
        let text = &files.iter().find(|(n, _)| *n == name).unwrap().1;
        data_rows(text)
            .into_iter()
            .map(|r| (r[0].clone(), r[2].parse().unwrap(), r[3].parse().unwrap()))
            .collect()
    };
    let (loss, delta) = (curve("curves_loss.csv"), curve("curves_delta.csv"));
    assert_eq!(delta.len(), loss.len() - cfg.losses.len());
    for (name, t, d) in delta {
        let at = |e: usize| loss.iter().find(|(n, s, _)| *n == name && *s == e).unwrap().2;
        assert!(((at(t) - at(t + 1)).abs() / at(t) - d).abs() <= 1e-12);
    }
}

#[test]
fn comparison_breaks_ties_by_name_and_partitions_losses() {
    let mut cfg = tiny("");
    cfg.losses = LossId::ALL.to_vec();
    cfg.train.epochs = 2;
    let mut report = sweep(&cfg).unwrap();
    for s in report.summaries.iter_mut() {
        for m in s.metrics.iter_mut() {
            m.test.mean = 0.5;
        }
    }
    let text = emit_comparison(&report, 0.05);
    let block: Vec<&str> = text
        .lines()
        .skip_while(|l| !l.starts_with("macro_f1"))
        .skip(1)
        .take(9)
        .map(|l| l.split_whitespace().nth(1).unwrap())
        .collect();
    let mut sorted = block.clone();
    sorted.sort_unstable();
    assert_eq!(block, sorted);

    // every loss is listed exactly once in the convergence section
    let tail = text.split("Convergence order").nth(1).unwrap().split("Final-parameter gaps").next().unwrap();
    for id in LossId::ALL {
        let hits = tail
            .lines()
            .flat_map(|l| l.split([' ', ',']))
            .filter(|w| *w == id.name())
            .count();
        assert_eq!(hits, 1, "{id}");
    }
}

fn bench() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bench"))
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

#[test]
fn cli_gen_writes_a_loadable_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let (config, out) = (dir.path().join("gen.toml"), dir.path().join("crowd.csv"));
    write(&config, "n = 40\nd = 3\nk = 3\nannotators_per_item = 5\nteacher_hidden = 4\n");
    let status = bench().args(["gen", "--config"]).arg(&config).arg("--out").arg(&out).status().unwrap();
    assert!(status.success());
    let ds = bregman_bench::data::load_dataset(&out).unwrap();
    assert_eq!((ds.len(), ds.d(), ds.k()), (40, 3, 3));
}

#[test]
fn cli_run_on_a_saved_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("crowd.csv");
    let ds = bregman_bench::data::generate_synthetic(&bregman_bench::data::SynthConfig {
        n: 80,
        d: 3,
        k: 3,
        ..Default::default()
    })
    .unwrap();
    bregman_bench::data::save_dataset(&ds, &data).unwrap();
    let config = dir.path().join("run.toml");
    let out = dir.path().join("out");
    write(
        &config,
        &format!(
            "output_dir = {:?}\nlosses = [\"cross_entropy\", \"generalized_i\"]\nrepetitions = 1\n\n[data]\npath = {:?}\n\n[train]\nhidden_sizes = [4]\nepochs = 2\n",
            out.to_string_lossy(),
            data.to_string_lossy()
        ),
    );
    let output = bench().args(["run", "--config"]).arg(&config).output().unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    assert!(String::from_utf8_lossy(&output.stdout).contains("generalized_i"));
    assert_eq!(std::fs::read_dir(&out).unwrap().count(), 8);
}

#[test]
fn cli_rejects_bad_configs_with_code_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    for text in ["repetitions = 0\n[data.synthetic]\n", "unknown_key = 3\n[data.synthetic]\n", "losses = [\"hinge\"]\n[data.synthetic]\n", "[train]\nepochs = 1\n"] {
        write(&config, text);
        let output = bench().args(["run", "--config"]).arg(&config).output().unwrap();
        assert_eq!(output.status.code(), Some(1), "{text}");
    }
    let output = bench().args(["run", "--config"]).arg(dir.path().join("missing.toml")).output().unwrap();
    assert_eq!(output.status.code(), Some(1));
}
