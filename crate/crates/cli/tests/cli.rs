use std::path::Path;
use std::process::{Command, Output};

use jamguard_core::{csv_read, ModelFile};

fn jamguard(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jamguard")).args(args).env_remove("JAMGUARD_SEED").output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = jamguard(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn generated(dir: &Path, n: usize) -> std::path::PathBuf {
    let p = dir.join("data.csv");
    ok(&["generate", "--n", &n.to_string(), "--out", s(&p)]);
    p
}

#[test]
fn generate_is_seeded_and_balanced() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b, c) = (tmp.path().join("a.csv"), tmp.path().join("b.csv"), tmp.path().join("c.csv"));
    ok(&["generate", "--n", "2000", "--out", s(&a)]);
    ok(&["generate", "--n", "2000", "--out", s(&b)]);
    ok(&["--seed", "7", "generate", "--n", "2000", "--out", s(&c)]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
    let d = csv_read(&a).unwrap();
    assert_eq!(d.len(), 2000);
    assert!((d.positives() as f64 / 2000.0 - 0.5).abs() <= 0.04);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("a.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 42);
    assert_eq!(manifest["outputs"]["a.csv"].as_str().unwrap().len(), 64);
}

#[test]
fn seed_can_come_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a.csv"), tmp.path().join("b.csv"));
    ok(&["--seed", "9", "generate", "--n", "300", "--out", s(&a)]);
    let out = Command::new(env!("CARGO_BIN_EXE_jamguard"))
        .args(["generate", "--n", "300", "--out", s(&b)])
        .env("JAMGUARD_SEED", "9")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn trained_model_evaluates_to_its_training_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let data = generated(tmp.path(), 600);
    let model = tmp.path().join("nn.json");
    let trained = ok(&["train", "--data", s(&data), "--model", "nn", "--hidden", "3", "--epochs", "300", "--out", s(&model)]);
    let file = ModelFile::from_json(&std::fs::read_to_string(&model).unwrap()).unwrap();
    assert!(matches!(file.model, jamguard_core::TrainedModel::Nn(_)));
    let evaluated = ok(&["evaluate", "--model-file", s(&model), "--data", s(&data)]);
    assert_eq!(trained.trim_end().trim_end_matches(" (training set)"), evaluated.trim_end());
}

#[test]
fn cv_and_sweep_write_their_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let data = generated(tmp.path(), 500);
    let cv = tmp.path().join("cv");
    ok(&["cv", "--data", s(&data), "--estimators", "10", "--folds", "4", "--out", s(&cv)]);
    for f in ["report.json", "report.csv", "roc.csv", "manifest.json"] {
        assert!(cv.join(f).exists(), "{f}");
    }
    assert_eq!(std::fs::read_to_string(cv.join("report.csv")).unwrap().lines().count(), 6);

    let sw = tmp.path().join("sweep");
    let table = ok(&["sweep", "--data", s(&data), "--grid", "svm-c", "--kernels", "linear,rbf", "--values", "1,3", "--folds", "3", "--out", s(&sw)]);
    assert_eq!(table.lines().count(), 4);
    let csv = std::fs::read_to_string(sw.join("sweep.csv")).unwrap();
    assert!(csv.starts_with("kernel,C,folds,pd,pfa,pmd,accuracy,error\n"));
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn compare_reports_seven_models() {
    let tmp = tempfile::tempdir().unwrap();
    let data = generated(tmp.path(), 400);
    let out = tmp.path().join("cmp");
    let table = ok(&["--jobs", "1", "compare", "--data", s(&data), "--folds", "3", "--out", s(&out)]);
    assert_eq!(table.lines().count(), 8);
    let csv = std::fs::read_to_string(out.join("compare.csv")).unwrap();
    assert_eq!(csv.lines().count(), 8);
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",ok")));
    assert_eq!(std::fs::read_dir(&out).unwrap().count(), 3 + 7);
}

#[test]
fn exit_codes_separate_usage_data_and_training_errors() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(jamguard(&["generate", "--n", "0", "--out", s(&tmp.path().join("x.csv"))]).status.code(), Some(1));
    assert_eq!(jamguard(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(jamguard(&["cv", "--data", "missing.csv", "--out", s(tmp.path())]).status.code(), Some(2));

    let one_class = tmp.path().join("one.csv");
    std::fs::write(&one_class, "pdr,bpr,rss_dbm,cca_busy_ratio,label\n0.9,0.01,-60,0.1,0\n0.8,0.02,-61,0.2,0\n").unwrap();
    let model = s(&tmp.path().join("m.json")).to_string();
    assert_eq!(jamguard(&["train", "--data", s(&one_class), "--model", "svm", "--out", &model]).status.code(), Some(3));

    let bad = tmp.path().join("bad.csv");
    std::fs::write(&bad, "pdr,bpr,rss_dbm,cca_busy_ratio,label\n0.9,0.01,-60,0.1,7\n").unwrap();
    assert_eq!(jamguard(&["train", "--data", s(&bad), "--out", &model]).status.code(), Some(2));
}
