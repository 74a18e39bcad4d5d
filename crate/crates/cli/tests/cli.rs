use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fairmix(args: &[&str]) -> Output {
    fairmix_env(args, None)
}

fn fairmix_env(args: &[&str], seed: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fairmix"));
    cmd.args(args).env_remove("FAIRMIX_SEED");
    if let Some(s) = seed {
        cmd.env("FAIRMIX_SEED", s);
    }
    cmd.output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Small inline-synth config writing under `dir`.
fn small_config(dir: &Path, extra: &str) -> PathBuf {
    let body = format!(
        "seed = 5\noutput_dir = \"{}\"\n{extra}\n[data.synth]\nn_subjects = 12\nsessions_per_subject = 2\nseed = 5\n",
        dir.join("out").display()
    );
    let path = dir.join("config.toml");
    fs::write(&path, body).unwrap();
    path
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn audit_on_bundled_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let config = repo().join("configs/audit.toml");
    let out_dir = dir.path().join("audit");
    let set = format!("output_dir=\"{}\"", out_dir.display());
    let o = fairmix(&["audit", "-c", config.to_str().unwrap(), "--set", &set]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["report.json", "report.md", "predictions.csv"] {
        assert!(out_dir.join(f).is_file(), "{f} missing");
    }
    let md = fs::read_to_string(out_dir.join("report.md")).unwrap();
    for row in [
        "Overall Acc",
        "Overall F1",
        "Overall UAR",
        "EA_gender",
        "DI_gender",
        "EA_race",
        "DI_race",
    ] {
        assert!(md.contains(row), "{row} missing from\n{md}");
    }
    let report = json(&out_dir.join("report.json"));
    assert_eq!(report["seed"], 42);
    assert_eq!(report["n_predictions"], 160);
    let csv = fs::read_to_string(out_dir.join("predictions.csv")).unwrap();
    assert_eq!(csv.lines().count(), 161);
}

#[test]
fn unknown_fusion_strategy_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), "");
    let o = fairmix(&[
        "audit",
        "-c",
        config.to_str().unwrap(),
        "--set",
        "fusion.strategy=majority",
    ]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("fusion.strategy"), "{}", stderr(&o));
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), "[pca]\ntarget = 0.9");
    let o = fairmix(&["validate", "-c", config.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("pca"), "{}", stderr(&o));
}

#[test]
fn missing_seed_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.toml");
    fs::write(&path, "[data]\nmanifest = \"m.txt\"\n").unwrap();
    let o = fairmix(&["validate", "-c", path.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("seed"), "{}", stderr(&o));
}

#[test]
fn missing_manifest_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.toml");
    fs::write(
        &path,
        "seed = 1\n[data]\nmanifest = \"nowhere/manifest.txt\"\n",
    )
    .unwrap();
    let o = fairmix(&["audit", "-c", path.to_str().unwrap()]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn all_folds_skipped_is_an_experiment_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), "");
    let o = fairmix(&[
        "audit",
        "-c",
        config.to_str().unwrap(),
        "--set",
        "data.synth.base_rate.default=1.0",
    ]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
}

#[test]
fn one_gender_group_reports_undefined_fairness() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), "");
    let o = fairmix(&[
        "audit",
        "-c",
        config.to_str().unwrap(),
        "--set",
        "data.synth.attribute_props.gender=1.0",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = json(&dir.path().join("out/report.json"));
    let gender = &report["fairness"][0];
    assert_eq!(gender["attribute"], "gender");
    assert!(gender["ea"]["value"].is_null());
    assert_eq!(gender["ea"]["reason"], "empty group gender=0");
    assert!(gender["di"]["value"].is_null());
    let md = fs::read_to_string(dir.path().join("out/report.md")).unwrap();
    assert!(
        md.contains("| EA_gender | undef(empty group gender=0) |"),
        "{md}"
    );
}

#[test]
fn seed_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), "");
    let o = fairmix_env(&["audit", "-c", config.to_str().unwrap()], Some("77"));
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(json(&dir.path().join("out/report.json"))["seed"], 77);
    let bad = fairmix_env(&["audit", "-c", config.to_str().unwrap()], Some("seven"));
    assert_eq!(code(&bad), 2);
    assert!(stderr(&bad).contains("FAIRMIX_SEED"));
}

#[test]
fn rerun_from_report_is_bitwise_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), "[augment]\nmethod = \"mixfeat\"");
    assert_eq!(
        code(&fairmix(&["audit", "-c", config.to_str().unwrap()])),
        0
    );
    let report = dir.path().join("out/report.json");
    let first = fs::read(&report).unwrap();
    let saved = dir.path().join("first.json");
    fs::write(&saved, &first).unwrap();
    let o = fairmix(&["audit", "-c", saved.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(fs::read(&report).unwrap(), first);
}

#[test]
fn compare_writes_three_columns_and_shares_folds() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), "");
    let o = fairmix(&["compare", "-c", config.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let md = fs::read_to_string(dir.path().join("out/report.md")).unwrap();
    assert!(
        md.contains("| Metric | Original | Baseline (oversample) | Proposed (MixFeat) |"),
        "{md}"
    );
    let report = json(&dir.path().join("out/report.json"));
    let arms = report["arms"].as_array().unwrap();
    assert_eq!(arms.len(), 3);
    assert_eq!(report["shared_folds"], true);
    for arm in arms {
        assert_eq!(arm["fold_fingerprint"], report["fold_fingerprint"]);
    }
    let parallel = fs::read(dir.path().join("out/report.json")).unwrap();
    let o = fairmix(&["compare", "--sequential", "-c", config.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        fs::read(dir.path().join("out/report.json")).unwrap(),
        parallel
    );
}

#[test]
fn synth_then_validate() {
    let dir = tempfile::tempdir().unwrap();
    let spec = repo().join("configs/synth_spec.toml");
    let out = dir.path().join("data");
    let o = fairmix(&[
        "synth",
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let manifest = out.join("manifest.txt");
    assert!(manifest.is_file());
    // the bundled copy was produced from the same spec
    for f in ["metadata.csv", "audio.csv", "face.csv"] {
        assert_eq!(
            fs::read(out.join(f)).unwrap(),
            fs::read(repo().join("data/synthetic").join(f)).unwrap(),
            "{f}"
        );
    }
    let config = dir.path().join("c.toml");
    fs::write(
        &config,
        "seed = 1\n[data]\nmanifest = \"data/manifest.txt\"\n",
    )
    .unwrap();
    let o = fairmix(&["validate", "-c", config.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn f32_precision_runs() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), "");
    let o = fairmix(&[
        "audit",
        "--precision",
        "f32",
        "-c",
        config.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}
