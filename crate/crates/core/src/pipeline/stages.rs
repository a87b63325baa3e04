use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::assemble::assemble_features;
use super::config::TopicMode;
use super::files;
use super::manifest::file_sha256;
use super::Pipeline;
use crate::cuisine::CuisineClass;
use crate::embed::{
    build_customer_corpus, build_restaurant_corpus, name_embedding, pv_train, sgns_train, EmbeddingMatrix,
};
use crate::error::{Error, Result};
use crate::eval::{
    ablation, cuisine_summary, evaluate, predictions, summary_text, summary_tsv, MetricsReport, Prediction,
};
use crate::nnet::{grid_search, loss_curve_tsv, FeatureSet, Model, NetworkSpec, TrainConfig};
use crate::stats::{extract_all, StatTable};
use crate::synth::{generate_with, name_vectors};
use crate::txn::{build_index, exclude_chains, parse_transactions, save_transactions, IngestMode, TxnIndex};
use crate::weak::{
    btm_fit, coherence_sweep, extract_biterms, stratified_sample_biterms, tokenize_name, topic_labels, umass_coherence,
    weak_label, write_bootstrap_report, write_coherence_report, LabelSet, LabelSource, NamedRestaurant, Taxonomy,
};

/// Inputs, outputs and summary numbers collected while a stage runs.
pub(crate) struct StageRun {
    pub inputs: Vec<(String, String)>,
    pub outputs: Vec<(String, String)>,
    pub stats: Vec<(String, String)>,
    out_dir: PathBuf,
}

impl StageRun {
    pub fn new(p: &Pipeline) -> Self {
        StageRun {
            inputs: Vec::new(),
            outputs: Vec::new(),
            stats: Vec::new(),
            out_dir: p.out_dir().to_path_buf(),
        }
    }

    fn key(&self, path: &Path) -> String {
        path.strip_prefix(&self.out_dir)
            .unwrap_or(path)
            .to_string_lossy()
            .into_owned()
    }

    /// Record an upstream file, failing with a named error when it is absent.
    fn input(&mut self, path: &Path, what: &str) -> Result<PathBuf> {
        if !path.exists() {
            return Err(Error::MissingArtifact {
                what: what.to_string(),
                path: path.to_path_buf(),
            });
        }
        let key = self.key(path);
        self.inputs.push((key, file_sha256(path)?));
        Ok(path.to_path_buf())
    }

    fn record_output(&mut self, path: &Path) -> Result<()> {
        let key = self.key(path);
        self.outputs.push((key, file_sha256(path)?));
        Ok(())
    }

    fn write(&mut self, path: &Path, contents: &str) -> Result<()> {
        std::fs::write(path, contents).map_err(|e| Error::io(path, e))?;
        self.record_output(path)
    }

    fn save_matrix(&mut self, path: &Path, m: &EmbeddingMatrix) -> Result<()> {
        m.save(path)?;
        self.record_output(path)?;
        self.record_output(&EmbeddingMatrix::sidecar_path(path))
    }

    fn stat(&mut self, key: &str, value: impl ToString) {
        self.stats.push((key.to_string(), value.to_string()));
    }
}

fn taxonomy(p: &Pipeline, run: &mut StageRun) -> Result<Taxonomy> {
    match &p.config.paths.taxonomy {
        Some(path) => Taxonomy::load(&run.input(path, "taxonomy")?),
        None => Ok(Taxonomy::bundled()),
    }
}

fn load_index(p: &Pipeline, run: &mut StageRun) -> Result<(TxnIndex, String)> {
    let path = run.input(&p.transactions_path(), "transactions")?;
    let mode = if p.config.ingest.strict {
        IngestMode::Strict
    } else {
        IngestMode::Lenient
    };
    let ingest = parse_transactions(&path, mode)?;
    let rejects = ingest.reject_report();
    run.stat("rejected_rows", ingest.rejects.len());
    let mut txns = ingest.transactions;
    if p.config.ingest.chain_min_zips > 0 {
        let (kept, chains) = exclude_chains(txns, p.config.ingest.chain_min_zips);
        run.stat("excluded_chains", chains.len());
        txns = kept;
    }
    if txns.is_empty() {
        return Err(Error::data(format!("{}: no usable transactions", path.display())));
    }
    Ok((build_index(txns), rejects))
}

fn truth_path(p: &Pipeline) -> Option<PathBuf> {
    match &p.config.paths.truth {
        Some(t) => Some(t.clone()),
        None => Some(p.path(files::TRUTH)).filter(|t| t.exists()),
    }
}

fn named_restaurants(index: &TxnIndex) -> Vec<NamedRestaurant> {
    index
        .restaurants()
        .map(|e| NamedRestaurant {
            id: e.id.clone(),
            name: e.name.clone(),
        })
        .collect()
}

pub(crate) fn synth(p: &Pipeline, run: &mut StageRun) -> Result<()> {
    let tax = taxonomy(p, run)?;
    let cfg = &p.config.synth;
    let out = generate_with(cfg, &tax)?;
    let path = p.path(files::TRANSACTIONS);
    save_transactions(&path, &out.transactions)?;
    run.record_output(&path)?;
    run.write(&p.path(files::TRUTH), &out.truth_tsv())?;
    run.write(&p.path(files::PARTY_SIZES), &out.party_tsv())?;
    let mut vectors = EmbeddingMatrix::new(cfg.name_vector_dim, "pretrained");
    for (word, v) in name_vectors(cfg.name_vector_dim, &tax) {
        vectors.insert(&word, v.iter().map(|&x| x as f32).collect())?;
    }
    run.save_matrix(&p.path(files::NAME_VECTORS), &vectors)?;
    run.stat("restaurants", out.restaurants.len());
    run.stat("transactions", out.transactions.len());
    Ok(())
}

pub(crate) fn label(p: &Pipeline, run: &mut StageRun) -> Result<()> {
    let cfg = &p.config.label;
    let tax = taxonomy(p, run)?;
    let (index, rejects) = load_index(p, run)?;
    let names = named_restaurants(&index);
    let outcome = weak_label(&names, &tax, &cfg.bootstrap, cfg.rounds);
    let mut labels = outcome.labels.clone();

    if cfg.topics != TopicMode::Off {
        let docs: Vec<Vec<String>> = names.iter().map(|r| tokenize_name(&r.name)).collect();
        let sprinkle: Vec<Option<CuisineClass>> = names.iter().map(|r| labels.class_of(&r.id)).collect();
        let corpus = extract_biterms(&docs, Some(&sprinkle));
        let corpus = stratified_sample_biterms(&corpus, cfg.strata, cfg.cap_ratio, p.config.stage_seed("label.strata"));
        if corpus.is_empty() {
            run.stat("topics", "skipped: no biterms");
        } else {
            let model = btm_fit(&corpus, &cfg.btm)?;
            let topic_map = model.topic_cuisines(cfg.min_posterior);
            let mut topics = String::from("topic\tcuisine\tprior\ttop_words\n");
            for t in 0..model.k {
                let words: Vec<&str> = model
                    .top_words(t, cfg.btm.top_n)
                    .into_iter()
                    .map(|w| model.vocab[w].as_str())
                    .collect();
                let cuisine = topic_map[t].map_or("-".to_string(), |c| c.to_string());
                let _ = writeln!(topics, "{t}\t{cuisine}\t{}\t{}", model.theta[t], words.join(","));
            }
            run.write(&p.path(files::TOPICS), &topics)?;
            let sprinkled: Vec<Vec<String>> = docs
                .iter()
                .zip(&sprinkle)
                .map(|(d, s)| d.iter().cloned().chain(s.map(|c| c.sprinkle_token())).collect())
                .collect();
            let rows = if cfg.coherence_k.is_empty() {
                vec![umass_coherence(&model, &sprinkled, cfg.btm.top_n)?]
            } else {
                coherence_sweep(&corpus, &sprinkled, &cfg.coherence_k, &cfg.btm)?
            };
            run.write(&p.path(files::COHERENCE), &write_coherence_report(&rows))?;
            if cfg.topics == TopicMode::Augment {
                let extra = topic_labels(&model, &names, &labels, cfg.min_posterior);
                run.stat("topic_labels", extra.len());
                for (id, c) in extra {
                    labels.insert(&id, c, LabelSource::Topic);
                }
            }
        }
    }

    let words: Vec<String> = outcome.labeling_words(&tax).into_iter().collect();
    run.write(&p.path(files::LABELS), &labels.to_tsv())?;
    run.write(&p.path(files::BOOTSTRAP), &write_bootstrap_report(&outcome.words))?;
    run.write(&p.path(files::LABELING_WORDS), &(words.join("\n") + "\n"))?;
    run.write(&p.path(files::REJECTS), &rejects)?;
    run.stat("restaurants", names.len());
    run.stat("labeled", labels.len());
    run.stat("coverage", labels.coverage(names.len()));
    run.stat("seed_labels", labels.count_by_source(LabelSource::Seed));
    run.stat("bootstrap_labels", labels.count_by_source(LabelSource::Bootstrap));
    run.stat("bootstrap_words", outcome.words.len());
    if let Some(tp) = truth_path(p) {
        let truth = LabelSet::load(&run.input(&tp, "truth labels")?)?;
        let judged: Vec<bool> = labels
            .iter()
            .filter_map(|(id, l)| truth.class_of(id).map(|t| t == l.class))
            .collect();
        if !judged.is_empty() {
            let right = judged.iter().filter(|&&b| b).count();
            run.stat("truth_precision", right as f64 / judged.len() as f64);
        }
    }
    Ok(())
}

pub(crate) fn features(p: &Pipeline, run: &mut StageRun) -> Result<()> {
    let (index, _) = load_index(p, run)?;
    let table = extract_all(&index, p.config.stage_seed("features"));
    run.write(&p.path(files::FEATURES), &table.to_tsv())?;
    let flagged = table.rows.iter().filter(|(_, f)| !f.flags.is_empty()).count();
    run.stat("restaurants", table.rows.len());
    run.stat("flagged_restaurants", flagged);
    Ok(())
}

fn read_words(path: &Path) -> Result<BTreeSet<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(str::to_string).collect())
}

pub(crate) fn embed(p: &Pipeline, run: &mut StageRun) -> Result<()> {
    let (index, _) = load_index(p, run)?;
    let words = read_words(&run.input(&p.path(files::LABELING_WORDS), "labeling words")?)?;
    let vec_path = p
        .config
        .paths
        .pretrained_vectors
        .clone()
        .unwrap_or_else(|| p.path(files::NAME_VECTORS));
    let pretrained = EmbeddingMatrix::load(&run.input(&vec_path, "pretrained vectors")?)?;
    if pretrained.is_empty() {
        return Err(Error::data(format!("{}: no pretrained vectors", vec_path.display())));
    }

    let (micro, macro_) = rayon::join(
        || sgns_train(&build_customer_corpus(&index), &p.config.embed.micro),
        || pv_train(&build_restaurant_corpus(&index), &p.config.embed.macro_),
    );
    let (micro, macro_) = (micro?, macro_?);

    let mut names = EmbeddingMatrix::new(pretrained.dim(), "name");
    let mut flagged = 0;
    for e in index.restaurants() {
        let (v, flag) = name_embedding(&e.name, &words, &pretrained);
        flagged += usize::from(flag);
        names.insert(&e.id, v.iter().map(|&x| x as f32).collect())?;
    }

    run.save_matrix(&p.path(files::EMBED_MICRO), &micro)?;
    run.save_matrix(&p.path(files::EMBED_MACRO), &macro_)?;
    run.save_matrix(&p.path(files::EMBED_NAME), &names)?;
    let n = index.n_restaurants();
    run.stat("restaurants", n);
    run.stat("micro_missing", n - micro.len());
    run.stat("macro_missing", n - macro_.len());
    run.stat("name_flagged", flagged);
    Ok(())
}

/// The full feature table and the weak labels, read from stage artifacts.
fn load_features(p: &Pipeline, run: &mut StageRun) -> Result<(FeatureSet, LabelSet)> {
    let stats = StatTable::load(&run.input(&p.path(files::FEATURES), "features")?)?;
    let name = EmbeddingMatrix::load(&run.input(&p.path(files::EMBED_NAME), "name embedding")?)?;
    let micro = EmbeddingMatrix::load(&run.input(&p.path(files::EMBED_MICRO), "micro embedding")?)?;
    let macro_ = EmbeddingMatrix::load(&run.input(&p.path(files::EMBED_MACRO), "macro embedding")?)?;
    let labels = LabelSet::load(&run.input(&p.path(files::LABELS), "labels")?)?;
    Ok((assemble_features(&stats, &name, &micro, &macro_)?, labels))
}

/// Labeled rows of `x` whose class has at least two members, with their
/// class codes, in id order.
fn trainable_rows(x: &FeatureSet, labels: &LabelSet) -> (Vec<usize>, Vec<usize>, Vec<CuisineClass>) {
    let mut per_class = [0usize; CuisineClass::COUNT];
    for id in &x.ids {
        if let Some(c) = labels.class_of(id) {
            per_class[c.code()] += 1;
        }
    }
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for (i, id) in x.ids.iter().enumerate() {
        if let Some(c) = labels.class_of(id) {
            if per_class[c.code()] >= 2 {
                rows.push(i);
                y.push(c.code());
            }
        }
    }
    let dropped = CuisineClass::ALL
        .into_iter()
        .filter(|c| per_class[c.code()] == 1)
        .collect();
    (rows, y, dropped)
}

fn pick(y: &[usize], rows: &[usize]) -> Vec<usize> {
    rows.iter().map(|&i| y[i]).collect()
}

pub(crate) fn train(p: &Pipeline, run: &mut StageRun) -> Result<()> {
    let t = &p.config.train;
    let (x_all, labels) = load_features(p, run)?;
    let (rows, y, dropped) = trainable_rows(&x_all, &labels);
    if !dropped.is_empty() {
        let names: Vec<&str> = dropped.iter().map(|c| c.name()).collect();
        run.stat("dropped_singleton_classes", names.join(","));
    }
    let x = x_all.select(&rows);
    let (tr, te) = crate::eval::stratified_split(&x.ids, &y, t.train_frac, p.config.stage_seed("split"))?;
    let spec = NetworkSpec::with_sizes(&x.dims(), t.variant, t.branch_hidden, &t.trunk)?;
    let (x_tr, y_tr) = (x.select(&tr), pick(&y, &tr));
    let (x_te, y_te) = (x.select(&te), pick(&y, &te));

    let mut sgd = t.sgd.clone();
    if t.grid {
        let g = grid_search(&spec, &sgd, &t.grid_values, &x_tr, &y_tr, t.folds, p.config.stage_seed("grid"))?;
        run.write(&p.path(files::GRID), &g.to_tsv())?;
        sgd = g.best;
    }
    let (model, trained) = Model::fit(&spec, &sgd, &x_tr, &y_tr, Some((&x_te, &y_te)))?;

    let model_path = p.path(files::MODEL);
    model.save(&model_path)?;
    run.record_output(&model_path)?;
    let cfg_json = serde_json::to_string_pretty(&sgd).expect("train config serializes") + "\n";
    run.write(&p.path(files::TRAIN_CONFIG), &cfg_json)?;
    run.write(&p.path(files::LOSS_CURVE), &loss_curve_tsv(&trained.curve))?;
    let test_set: BTreeSet<usize> = te.iter().copied().collect();
    let mut split = String::from("restaurant_id\tset\tcuisine\n");
    for (i, id) in x.ids.iter().enumerate() {
        let set = if test_set.contains(&i) { "test" } else { "train" };
        let class = CuisineClass::from_code(y[i]).expect("class code");
        let _ = writeln!(split, "{id}\t{set}\t{class}");
    }
    run.write(&p.path(files::SPLIT), &split)?;
    run.stat("train_rows", tr.len());
    run.stat("test_rows", te.len());
    run.stat("diverged", trained.diverged);
    if let Some(last) = trained.curve.last() {
        run.stat("final_train_loss", last.train);
        run.stat("final_val_loss", last.val);
    }
    Ok(())
}

/// Rows of `split.tsv`: restaurant id, whether it is in the test set, and
/// its label.
pub fn read_split(path: &Path) -> Result<Vec<(String, bool, CuisineClass)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let bad = |reason: String| Error::Malformed {
            line: i as u64 + 1,
            reason,
        };
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(bad(format!("expected 3 columns, found {}", cols.len())));
        }
        let test = match cols[1] {
            "test" => true,
            "train" => false,
            other => return Err(bad(format!("unknown set {other:?}"))),
        };
        let class: CuisineClass = cols[2].parse().map_err(|e: String| bad(e))?;
        out.push((cols[0].to_string(), test, class));
    }
    Ok(out)
}

fn prob_header() -> String {
    CuisineClass::ALL.iter().map(|c| format!("\tp.{c}")).collect()
}

fn write_probs(out: &mut String, probs: &[f64]) {
    for v in probs {
        let _ = write!(out, "\t{v}");
    }
    out.push('\n');
}

/// Rows of `predictions.tsv`: restaurant id, predicted class and the class
/// probabilities.
pub fn read_predictions(path: &Path) -> Result<Vec<(String, CuisineClass, Vec<f64>)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let bad = |reason: String| Error::Malformed {
            line: i as u64 + 1,
            reason,
        };
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 2 + CuisineClass::COUNT {
            return Err(bad(format!("expected {} columns, found {}", 2 + CuisineClass::COUNT, cols.len())));
        }
        let class: CuisineClass = cols[1].parse().map_err(|e: String| bad(e))?;
        let probs = cols[2..]
            .iter()
            .map(|v| v.parse::<f64>().map_err(|_| bad(format!("bad probability {v:?}"))))
            .collect::<Result<Vec<f64>>>()?;
        out.push((cols[0].to_string(), class, probs));
    }
    Ok(out)
}

fn write_metrics(p: &Pipeline, run: &mut StageRun, m: &MetricsReport, tsv: &str, grid: &str) -> Result<()> {
    run.write(&p.path(tsv), &m.to_tsv())?;
    run.write(&p.path(grid), &m.confusion_tsv())
}

pub(crate) fn eval(p: &Pipeline, run: &mut StageRun) -> Result<()> {
    let model = Model::load(&run.input(&p.path(files::MODEL), "model")?)?;
    let cfg_path = run.input(&p.path(files::TRAIN_CONFIG), "train config")?;
    let raw = std::fs::read_to_string(&cfg_path).map_err(|e| Error::io(&cfg_path, e))?;
    let sgd: TrainConfig =
        serde_json::from_str(&raw).map_err(|e| Error::data(format!("{}: {e}", cfg_path.display())))?;
    let split = read_split(&run.input(&p.path(files::SPLIT), "split")?)?;
    let (x_all, labels) = load_features(p, run)?;

    let row_of: BTreeMap<&str, usize> = x_all.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let mut rows = Vec::with_capacity(split.len());
    for (id, _, _) in &split {
        rows.push(
            *row_of
                .get(id.as_str())
                .ok_or_else(|| Error::data(format!("split names unknown restaurant {id}")))?,
        );
    }
    let x = x_all.select(&rows);
    let y: Vec<usize> = split.iter().map(|s| s.2.code()).collect();
    let tr: Vec<usize> = (0..split.len()).filter(|&i| !split[i].1).collect();
    let te: Vec<usize> = (0..split.len()).filter(|&i| split[i].1).collect();

    let x_te = x.select(&te);
    let test_preds = predictions(&x_te.ids, &model.predict_proba(&x_te)?)?;
    let test_truth: Vec<(String, usize)> = te.iter().map(|&i| (x.ids[i].clone(), y[i])).collect();
    let metrics = evaluate(&test_preds, &test_truth)?;
    write_metrics(p, run, &metrics, files::METRICS, files::CONFUSION)?;
    run.write(&p.path(files::METRICS_TEXT), &metrics.to_text())?;
    let mut tp = format!("restaurant_id\ttruth\tpredicted{}\n", prob_header());
    for (pr, (_, t)) in test_preds.iter().zip(&test_truth) {
        let truth = CuisineClass::from_code(*t).expect("class code");
        let pred = CuisineClass::from_code(pr.top1()).expect("class code");
        let _ = write!(tp, "{}\t{truth}\t{pred}", pr.id);
        write_probs(&mut tp, &pr.probs);
    }
    run.write(&p.path(files::TEST_PREDICTIONS), &tp)?;
    run.stat("accuracy", metrics.accuracy);
    run.stat("balanced_accuracy", metrics.balanced_accuracy);

    let all_preds = predictions(&x_all.ids, &model.predict_proba(&x_all)?)?;
    let mut pt = format!("restaurant_id\tpredicted{}\n", prob_header());
    for pr in &all_preds {
        let pred = CuisineClass::from_code(pr.top1()).expect("class code");
        let _ = write!(pt, "{}\t{pred}", pr.id);
        write_probs(&mut pt, &pr.probs);
    }
    run.write(&p.path(files::PREDICTIONS), &pt)?;

    if let Some(tp) = truth_path(p) {
        let truth = LabelSet::load(&run.input(&tp, "truth labels")?)?;
        let (preds, pairs): (Vec<Prediction>, Vec<(String, usize)>) = all_preds
            .iter()
            .filter(|pr| !labels.contains(&pr.id))
            .filter_map(|pr| truth.class_of(&pr.id).map(|c| (pr.clone(), (pr.id.clone(), c.code()))))
            .unzip();
        if !preds.is_empty() {
            let m = evaluate(&preds, &pairs)?;
            write_metrics(p, run, &m, files::METRICS_UNLABELED, files::CONFUSION_UNLABELED)?;
            run.stat("unlabeled_accuracy", m.accuracy);
        }
    }

    if p.config.eval.ablation {
        let table = ablation(&model.spec, &sgd, &x, &y, &tr, &te)?;
        run.write(&p.path(files::ABLATION), &table.to_tsv())?;
        run.stat("ablation_baseline_matches", table.baseline == metrics);
    }
    Ok(())
}

pub(crate) fn report(p: &Pipeline, run: &mut StageRun) -> Result<()> {
    let stats = StatTable::load(&run.input(&p.path(files::FEATURES), "features")?)?;
    let labels = LabelSet::load(&run.input(&p.path(files::LABELS), "labels")?)?;
    let preds = read_predictions(&run.input(&p.path(files::PREDICTIONS), "predictions")?)?;
    let assigned: Vec<(String, CuisineClass)> = preds
        .into_iter()
        .map(|(id, pred, _)| {
            let c = labels.class_of(&id).unwrap_or(pred);
            (id, c)
        })
        .collect();
    let rows = cuisine_summary(&assigned, &stats)?;
    run.write(&p.path(files::SUMMARY), &summary_tsv(&rows))?;
    let text = summary_text(&rows);
    run.write(&p.path(files::SUMMARY_TEXT), &text)?;

    let mut report = String::new();
    let _ = writeln!(report, "restaurants        {}", assigned.len());
    let _ = writeln!(
        report,
        "weakly labeled     {} ({:.1}%)",
        labels.len(),
        100.0 * labels.coverage(assigned.len())
    );
    let metrics = p.path(files::METRICS_TEXT);
    if metrics.exists() {
        let m = std::fs::read_to_string(run.input(&metrics, "metrics")?).map_err(|e| Error::io(&metrics, e))?;
        let _ = writeln!(report, "\nheld-out evaluation on weak labels\n{m}");
    }
    let _ = writeln!(report, "\ncuisine summary (weak label, else predicted class)\n{text}");
    let abl = p.path(files::ABLATION);
    if abl.exists() {
        let a = std::fs::read_to_string(run.input(&abl, "ablation")?).map_err(|e| Error::io(&abl, e))?;
        let _ = writeln!(report, "feature ablation\n{a}");
    }
    run.write(&p.path(files::REPORT), &report)?;
    Ok(())
}
