//! End-to-end runs of the command-line binary on a small synthetic dataset.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use physio_explain::pipeline::{FeatureTable, RunReport};

const CONFIG: &str = r#"
seed = 3
search_iterations = 4

[synthetic]
n_subjects = 4
trials_per_subject = 10
seconds = 5.0
seed = 11

[search]
min_data_in_leaf = [3, 8]

[search.base]
max_rounds = 40
early_stop = 10
"#;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_physio-explain"));
    c.env_remove("PHYSIO_EXPLAIN_JOBS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

struct Fixture {
    _dir: tempfile::TempDir,
    root: PathBuf,
    config: PathBuf,
    features: PathBuf,
}

fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_path_buf();
    let config = root.join("run.toml");
    fs::write(&config, CONFIG).unwrap();
    let data = root.join("data");
    ok(&["--config", p(&config), "--out", p(&data), "synth"]);
    let feat_dir = root.join("feat");
    ok(&["--config", p(&data.join("config.toml")), "--out", p(&feat_dir), "extract"]);
    Fixture {
        _dir: dir,
        features: feat_dir.join("features.csv"),
        root,
        config,
    }
}

#[test]
fn pipeline_round_trip() {
    let f = fixture();
    let data = f.root.join("data");

    let summary = ok(&["ingest-check", "--config", p(&data.join("config.toml"))]);
    assert!(summary.contains("\"trials\": 40"), "{summary}");

    let table = FeatureTable::read_csv(&f.features).unwrap();
    assert_eq!(table.feature_names.len(), 51);
    assert_eq!(table.rows.len(), 40);
    let header = fs::read_to_string(&f.features).unwrap();
    let first = header.lines().next().unwrap();
    assert!(first.starts_with("subject,trial,valence,arousal,liking,hEOG1_SE"));
    assert_eq!(first.split(',').count(), 56);
    assert!(table.rows.iter().all(|r| r.features.iter().all(|v| v.is_finite())));

    // LOSO twice into the same directory gives identical bytes, and
    // `--seed` changes them.
    let a = f.root.join("loso");
    let loso = |seed: &str| {
        ok(&["--config", p(&f.config), "--seed", seed, "--out", p(&a), "loso", "--features", p(&f.features)]);
        (fs::read(a.join("report.json")).unwrap(), fs::read(a.join("predictions.csv")).unwrap())
    };
    let first = loso("3");
    assert_eq!(first, loso("3"));
    assert_ne!(first.0, loso("99").0);

    // Full report.
    let rep = f.root.join("report");
    ok(&["--config", p(&f.config), "--out", p(&rep), "report", "--features", p(&f.features)]);
    let text = fs::read_to_string(rep.join("report.json")).unwrap();
    let parsed = RunReport::from_json(&text).unwrap();
    assert_eq!(parsed.to_json().unwrap(), text);
    assert_eq!(parsed.targets.len(), 3);

    let curve = fs::read_to_string(rep.join("selection_curve.csv")).unwrap();
    for t in ["valence", "arousal", "liking"] {
        let rows = curve.lines().filter(|l| l.starts_with(&format!("{t},"))).count();
        assert_eq!(rows, 51, "{t}");
    }
    let inter = fs::read_to_string(rep.join("interactions.csv")).unwrap();
    assert_eq!(inter.lines().count(), 1 + 3 * 100);
    let effects: Vec<_> = fs::read_dir(&rep)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().starts_with("effects_"))
        .collect();
    assert!(!effects.is_empty());
    let importance = fs::read_to_string(rep.join("importance.csv")).unwrap();
    assert_eq!(importance.lines().count(), 1 + 3 * 51);

    // Train and explain.
    let models = f.root.join("models");
    ok(&["--config", p(&f.config), "--out", p(&models), "train", "--features", p(&f.features)]);
    let expl = f.root.join("expl");
    ok(&[
        "--out",
        p(&expl),
        "explain",
        "--model",
        p(&models.join("model_valence.json")),
        "--features",
        p(&f.features),
    ]);
    let shap = fs::read_to_string(expl.join("shap_values.csv")).unwrap();
    assert_eq!(shap.lines().count(), 41);
}

#[test]
fn validation_errors_exit_1_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let bad = dir.path().join("bad.toml");
    for text in ["search_iterations = 0\n", "unknown_key = 1\n", "[ssa]\nwindow_len = 1\n"] {
        fs::write(&bad, text).unwrap();
        for cmd in ["loso", "extract", "report", "synth"] {
            let o = run(&["--config", p(&bad), "--out", p(&out), cmd]);
            assert_eq!(o.status.code(), Some(1), "{text} {cmd}");
            assert!(!out.exists(), "{cmd} wrote output before failing");
        }
    }
    // No data source configured.
    let o = run(&["--out", p(&out), "loso"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.exists());
    // Malformed recordings.
    fs::create_dir_all(dir.path().join("rec/subject_1")).unwrap();
    fs::write(dir.path().join("rec/subject_1/trial_1.csv"), "hEOG\n1\n").unwrap();
    let o = run(&["ingest-check", "--input", p(&dir.path().join("rec"))]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn runtime_failures_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "--out",
        p(&dir.path().join("x")),
        "explain",
        "--model",
        p(&dir.path().join("missing.json")),
        "--features",
        p(&dir.path().join("missing.csv")),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn paper_mode_and_jobs_flags() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d");
    let o = bin()
        .env("PHYSIO_EXPLAIN_JOBS", "1")
        .args(["--paper-mode", "--out", p(&out), "synth", "--subjects", "2", "--trials", "2", "--seconds", "5"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let cfg = fs::read_to_string(out.join("config.toml")).unwrap();
    assert!(cfg.contains("search_iterations = 300"));
    assert!(cfg.contains("signal_rows = 640"));
    let o = run(&["--jobs", "0", "synth"]);
    assert_eq!(o.status.code(), Some(1));
}
