use std::path::Path;
use std::process::{Command, Output};

const TINY: &str = r#"
seed = 3

[synth]
preset = "strongly_separated"
n_restaurants = 60
n_customers = 500
days = 14

[label]
topics = "off"

[embed.micro]
dim = 8
window = 3
negative = 3
epochs = 1

[embed.macro]
dim = 8
window = 5
negative = 3
epochs = 1

[train]
branch_hidden = 4
trunk = [8, 8]

[train.sgd]
epochs = 5
batch_size = 16

[eval]
ablation = false
"#;

fn tabletrace(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tabletrace"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path) -> String {
    let path = dir.join("tiny.toml");
    std::fs::write(&path, TINY).unwrap();
    path.to_string_lossy().into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn eval_before_train_reports_missing_model() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_string_lossy().into_owned();
    let o = tabletrace(&["eval", "--out-dir", &out]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("missing model artifact"), "{}", stderr(&o));
}

#[test]
fn label_without_transactions_is_a_missing_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_string_lossy().into_owned();
    let o = tabletrace(&["label", "--out-dir", &out]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("missing transactions artifact"));
}

#[test]
fn bad_config_values_exit_2_with_the_field_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[train.sgd]\nlr = \"fast\"\n").unwrap();
    let o = tabletrace(&["train", "--config", &cfg.to_string_lossy()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("train.sgd.lr"), "{}", stderr(&o));

    let o = tabletrace(&["synth", "--set", "train.train_frac=2.0"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let o = tabletrace(&["synth", "--config", "/nonexistent/config.toml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn malformed_rows_fail_strict_ingest_with_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    std::fs::write(
        &csv,
        "merchant_id,merchant_name,zip5,timestamp,cardholder_id,auth_amount_cents,settle_amount_cents\n\
         M1,Taco Town,12345,2024-01-01T12:00,C1,1000,900\n",
    )
    .unwrap();
    let out = dir.path().to_string_lossy().into_owned();
    let tx = format!("paths.transactions={:?}", csv.to_string_lossy());
    let o = tabletrace(&["label", "--out-dir", &out, "--set", &tx, "--set", "ingest.strict=true"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    let o = tabletrace(&["label", "--out-dir", &out, "--set", &tx]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

fn manifest_hashes(dir: &Path) -> Vec<(String, String)> {
    let mut out = Vec::new();
    let mut entries: Vec<_> = std::fs::read_dir(dir.join("manifests")).unwrap().map(|e| e.unwrap().path()).collect();
    entries.sort();
    for p in entries {
        let text = std::fs::read_to_string(&p).unwrap();
        for line in text.lines() {
            if line.starts_with("output.") || line.starts_with("input.") || line.starts_with("config_sha256") {
                out.push((p.file_name().unwrap().to_string_lossy().into_owned(), line.to_string()));
            }
        }
    }
    out
}

#[test]
fn pipeline_reruns_match_and_flags_reach_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = tabletrace(&["pipeline", "--config", &cfg, "--out-dir", &out.to_string_lossy(), "--grid"]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let (ha, hb) = (manifest_hashes(&a), manifest_hashes(&b));
    assert!(!ha.is_empty());
    let strip = |v: Vec<(String, String)>| -> Vec<String> { v.into_iter().map(|(f, l)| format!("{f}:{l}")).collect() };
    let (sa, sb) = (strip(ha), strip(hb));
    // output paths differ only by directory, which manifests record relative to it
    assert_eq!(sa, sb);
    for f in ["labels.tsv", "features.tsv", "model.json", "metrics.tsv", "predictions.tsv", "summary.tsv", "grid.tsv"] {
        assert!(a.join(f).exists(), "{f}");
    }
    let train = std::fs::read_to_string(a.join("manifests/train.manifest")).unwrap();
    assert!(train.contains("config.train.grid = true"));
    assert!(train.contains("config.seed = 3"));

    let o = tabletrace(&["train", "--config", &cfg, "--out-dir", &a.to_string_lossy(), "--seed", "11", "--set", "train.sgd.epochs=2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let train = std::fs::read_to_string(a.join("manifests/train.manifest")).unwrap();
    assert!(train.contains("config.seed = 11"));
    assert!(train.contains("config.train.sgd.epochs = 2"));
}
