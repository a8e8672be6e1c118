use std::path::Path;

use pr_core::harness::dataset::{write_corpus, CorpusSpec};
use pr_core::harness::experiment::METRICS;
use pr_core::harness::report::{report_json, summary_csv};
use pr_core::harness::{
    emit_report, label_models, load_report, run_experiment, train_from_config, ExperimentConfig,
};
use pr_core::unfolded::{Checkpoint, UnfoldedModel};

fn small_config(root: &Path) -> ExperimentConfig {
    write_corpus(
        &root.join("corpus"),
        &CorpusSpec {
            seed: 1,
            train: 3,
            val: 1,
            test: 3,
            seconds: 0.6,
            sample_rate: 16000,
        },
    )
    .unwrap();
    let text = r#"
seed = 5
output_dir = "out"
[data]
train_dir = "corpus/train"
val_dir = "corpus/val"
test_dir = "corpus/test"
[stft]
window_length = 256
[model]
layers = 4
[train]
learning_rate = 1e-3
batch_size = 2
max_epochs = 3
[solvers]
gla_budgets = [0, 20]
admm_budgets = [4, 20]
uadmm_repeats = [1, 2]
[metric]
r_values = [0.5, 1.0]
points = 11
"#;
    let path = root.join("exp.toml");
    std::fs::write(&path, text).unwrap();
    ExperimentConfig::load(&path).unwrap()
}

#[test]
fn end_to_end_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let untied = train_from_config(&cfg, false).unwrap();
    let tied = train_from_config(&cfg, true).unwrap();
    assert_eq!(untied.training.as_ref().unwrap().train_items, 3);
    let models = label_models(vec![untied, tied]);
    assert_eq!(models[0].label, "uadmm-untied");
    assert_eq!(models[1].label, "uadmm-tied");

    let (report, timing) = run_experiment(&cfg, &models).unwrap();
    assert!(report.failures.is_empty(), "{:?}", report.failures);
    assert_eq!(report.header.test_signals, 3);
    // gla 2 budgets + admm 2 + two models × 2 repeats, per signal
    assert_eq!(report.results.len(), 3 * 8);
    assert!(report
        .results
        .iter()
        .any(|r| r.method == "uadmm-tied" && r.budget == 8));
    for r in &report.results {
        if let Some(s) = r.scores.stoi {
            assert!((-0.1..=1.0).contains(&s));
        }
    }
    for m in METRICS {
        assert_eq!(report.summaries.iter().filter(|s| s.metric == m).count(), 8);
    }
    let d4 = report
        .summary("spectral_distance", "admm", 4)
        .unwrap()
        .stats
        .median;
    let d20 = report
        .summary("spectral_distance", "admm", 20)
        .unwrap()
        .stats
        .median;
    assert!(d20 <= d4);
    assert_eq!(report.curves.len(), 2);
    assert_eq!(report.curves[0].curves.len(), 2 * 4);
    assert_eq!(report.curves[1].curves.len(), 2);
    assert!(timing.total_seconds > 0.0);

    let out = dir.path().join("report");
    let files = emit_report(&report, Some(&timing), &out).unwrap();
    assert!(files
        .iter()
        .any(|f| f.ends_with("curves/uadmm-tied_r0.5.csv")));
    assert_eq!(load_report(&out.join("report.json")).unwrap(), report);
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(
        summary.lines().next().unwrap(),
        "method,budget,median,q1,q3,n"
    );
    assert_eq!(summary.lines().count(), 1 + 8);
    assert!(summary.lines().nth(1).unwrap().starts_with("gla,0,"));
    let curve = std::fs::read_to_string(out.join("curves/uadmm-untied_r1.csv")).unwrap();
    assert_eq!(curve.lines().next().unwrap(), "layer,r,y,f");

    let (again, _) = run_experiment(&cfg, &models).unwrap();
    assert_eq!(report_json(&report).unwrap(), report_json(&again).unwrap());
    assert_eq!(summary_csv(&report, "stoi"), summary_csv(&again, "stoi"));
}

#[test]
fn empty_test_split_gives_empty_report() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    let empty = dir.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    cfg.data.test_dir = Some(empty);
    let (report, _) = run_experiment(&cfg, &[]).unwrap();
    assert!(report.results.is_empty());
    assert!(report.summaries.is_empty());
    assert_eq!(report.header.test_signals, 0);
}

#[test]
fn bad_files_are_recorded_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let test_dir = cfg.data.test_dir.clone().unwrap();
    std::fs::write(test_dir.join("broken.wav"), b"RIFF\x10\x00\x00\x00WAVEfmt ").unwrap();
    let models = label_models(vec![Checkpoint::new(
        UnfoldedModel::quadratic(4, 3, true, 1e-3).unwrap(),
    )]);
    let (report, _) = run_experiment(&cfg, &models).unwrap();
    assert_eq!(report.failures.len(), 1);
    assert!(report.failures[0]
        .signal
        .as_deref()
        .unwrap()
        .ends_with("broken.wav"));
    assert_eq!(report.header.test_signals, 3);
}

#[test]
fn missing_directories_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    cfg.data.train_dir = Some(dir.path().join("nowhere"));
    assert!(matches!(
        train_from_config(&cfg, false),
        Err(pr_core::Error::Config(_))
    ));
    cfg.data.test_dir = None;
    assert!(matches!(
        run_experiment(&cfg, &[]),
        Err(pr_core::Error::Config(_))
    ));
}

#[test]
fn reconstruct_chains_budgets() {
    use pr_core::harness::synth::speech_like;
    use pr_core::harness::{prepare, reconstruct, Method};
    let cfg = ExperimentConfig::from_toml("[stft]\nwindow_length = 128\n").unwrap();
    let x = speech_like(3, "chain", 16000, 0.1).unwrap();
    let (op, r, x0) = prepare(&cfg, "chain.wav", &x).unwrap();
    let (again_op, again_r, again_x0) = prepare(&cfg, "chain.wav", &x).unwrap();
    assert_eq!(
        (again_op.coeff_len(), &again_r, &again_x0),
        (op.coeff_len(), &r, &x0)
    );
    for method in [Method::Gla, Method::Admm { rho: 0.1 }] {
        let chained = reconstruct(method, &op, &r, &x0, &[20, 5]).unwrap();
        assert_eq!(chained.iter().map(|e| e.0).collect::<Vec<_>>(), vec![5, 20]);
        let direct = reconstruct(method, &op, &r, &x0, &[20]).unwrap();
        assert_eq!(chained[1].1, direct[0].1);
    }
    let model = UnfoldedModel::quadratic(4, 3, false, 1e-3).unwrap();
    let net = reconstruct(Method::Uadmm(&model), &op, &r, &x0, &[4, 8]).unwrap();
    let admm = reconstruct(Method::Admm { rho: 1e-3 }, &op, &r, &x0, &[8]).unwrap();
    assert!(net[0].1 != net[1].1);
    let num: f64 = net[1]
        .1
        .samples
        .iter()
        .zip(&admm[0].1.samples)
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    assert!(num.sqrt() <= 1e-9 * admm[0].1.norm());
    assert!(reconstruct(Method::Uadmm(&model), &op, &r, &x0, &[6]).is_err());
}
