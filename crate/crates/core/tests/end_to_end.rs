use std::fs;
use std::path::Path;

use tabletrace::eval::stability;
use tabletrace::pipeline::{files, read_predictions, Pipeline, PipelineConfig};

const SMALL_MODELS: &str = r#"
[label]
topics = "off"

[embed.micro]
dim = 32
window = 5
negative = 5
epochs = 2

[embed.macro]
dim = 32
window = 20
negative = 5
epochs = 2

[train]
branch_hidden = 16
trunk = [64, 32]

[train.sgd]
epochs = 60
batch_size = 32
lr = 0.05
"#;

fn config(out: &Path, extra: &str) -> PipelineConfig {
    let mut cfg = PipelineConfig::from_toml(Some(&format!("{extra}\n{SMALL_MODELS}")), &[]).unwrap();
    cfg.paths.out_dir = out.to_path_buf();
    cfg
}

fn ablation_deltas(out: &Path) -> Vec<(String, f64)> {
    fs::read_to_string(out.join(files::ABLATION))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split('\t').collect();
            (f[0].to_string(), f[2].parse().unwrap())
        })
        .collect()
}

#[test]
fn name_block_carries_planted_name_signal() {
    // Every cuisine shares one behaviour profile and one ZIP and customers
    // have no cuisine preference, so only the names say anything about cuisine.
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(
        dir.path(),
        "seed = 3\n[synth]\nn_restaurants = 400\nn_customers = 3000\np_kw = 0.6\np_flavor = 0.7\ndirichlet_a = 1000.0\nfixed_zip = \"10001\"",
    );
    cfg.label.rounds = 0;
    let shared = cfg.synth.cuisines[1].clone();
    cfg.synth.cuisines = vec![shared; 10];
    Pipeline::new(&cfg).unwrap().run_all().unwrap();
    let deltas = ablation_deltas(dir.path());
    assert_eq!(deltas.len(), 15);
    let name = deltas.iter().find(|d| d.0 == "name_embedding").unwrap().1;
    assert!(name < -0.02, "{deltas:?}");
}

#[test]
fn predictions_are_stable_across_periods() {
    let run = |period: u64, out: &Path| {
        let cfg = config(
            out,
            &format!(
                "seed = 5\n[synth]\npreset = \"strongly_separated\"\nn_restaurants = 250\n\
                 n_customers = 2500\ndays = 60\nperiod = {period}\n[eval]\nablation = false"
            ),
        );
        Pipeline::new(&cfg).unwrap().run_all().unwrap();
        read_predictions(&out.join(files::PREDICTIONS))
            .unwrap()
            .into_iter()
            .map(|(id, class, _)| (id, class.code()))
            .collect::<Vec<_>>()
    };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = run(0, a.path());
    let second = run(1, b.path());
    assert_eq!(first.len(), 250);
    assert_ne!(
        fs::read(a.path().join(files::TRANSACTIONS)).unwrap(),
        fs::read(b.path().join(files::TRANSACTIONS)).unwrap()
    );
    let agreement = stability(&first, &second).unwrap();
    assert!(agreement >= 0.8, "{agreement}");
}
