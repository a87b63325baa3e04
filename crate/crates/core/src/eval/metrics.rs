use std::fmt::Write;

use ndarray::Array2;

use crate::cuisine::CuisineClass;
use crate::error::{Error, Result};
use crate::nnet::predict_topk;

const N: usize = CuisineClass::COUNT;

/// One restaurant's class probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub id: String,
    pub probs: Vec<f64>,
}

impl Prediction {
    pub fn top1(&self) -> usize {
        predict_topk(&self.probs, 1).expect("non-empty probabilities")[0]
    }
}

/// Pair ids with the rows of a probability matrix.
pub fn predictions(ids: &[String], probs: &Array2<f64>) -> Result<Vec<Prediction>> {
    if ids.len() != probs.nrows() {
        return Err(Error::data(format!("{} ids for {} probability rows", ids.len(), probs.nrows())));
    }
    Ok(ids
        .iter()
        .zip(probs.rows())
        .map(|(id, row)| Prediction {
            id: id.clone(),
            probs: row.to_vec(),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub n: usize,
    pub correct: usize,
    /// Micro accuracy, `correct / n`.
    pub accuracy: f64,
    /// Mean recall over classes present in the truth.
    pub balanced_accuracy: f64,
    /// Top-1, top-2 and top-3 accuracy.
    pub top_k: [f64; 3],
    /// Recall per class; 0 for absent classes.
    pub per_class: [f64; N],
    pub counts: [usize; N],
    /// Raw counts, truth by row, prediction by column.
    pub confusion_counts: [[usize; N]; N],
    /// Row-normalized confusion; all-zero rows for absent classes.
    pub confusion: [[f64; N]; N],
}

/// Score predictions against truth. Both lists must name the same ids in the
/// same order.
pub fn evaluate(preds: &[Prediction], truth: &[(String, usize)]) -> Result<MetricsReport> {
    if preds.len() != truth.len() {
        return Err(Error::data(format!("{} predictions for {} truth labels", preds.len(), truth.len())));
    }
    if preds.is_empty() {
        return Err(Error::data("nothing to evaluate"));
    }
    let mut counts = [0usize; N];
    let mut confusion_counts = [[0usize; N]; N];
    let mut hits = [0usize; 3];
    for (p, (id, t)) in preds.iter().zip(truth) {
        if &p.id != id {
            return Err(Error::data(format!("prediction for {:?} aligned with truth for {id:?}", p.id)));
        }
        if p.probs.len() != N {
            return Err(Error::data(format!("{}: expected {N} probabilities, found {}", p.id, p.probs.len())));
        }
        if *t >= N {
            return Err(Error::data(format!("{id}: class code {t} out of range")));
        }
        let top = predict_topk(&p.probs, 3)?;
        counts[*t] += 1;
        confusion_counts[*t][top[0]] += 1;
        for k in 0..3 {
            if top[..=k].contains(t) {
                hits[k] += 1;
            }
        }
    }
    let n = preds.len();
    let correct = hits[0];
    let mut per_class = [0.0; N];
    let mut confusion = [[0.0; N]; N];
    for c in 0..N {
        if counts[c] > 0 {
            for j in 0..N {
                confusion[c][j] = confusion_counts[c][j] as f64 / counts[c] as f64;
            }
            per_class[c] = confusion[c][c];
        }
    }
    let present: Vec<usize> = (0..N).filter(|&c| counts[c] > 0).collect();
    let balanced_accuracy = present.iter().map(|&c| per_class[c]).sum::<f64>() / present.len() as f64;
    Ok(MetricsReport {
        n,
        correct,
        accuracy: correct as f64 / n as f64,
        balanced_accuracy,
        top_k: hits.map(|h| h as f64 / n as f64),
        per_class,
        counts,
        confusion_counts,
        confusion,
    })
}

impl MetricsReport {
    /// `metric<TAB>value` rows, then per-class `recall.<class>` and
    /// `count.<class>` rows.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("metric\tvalue\n");
        let _ = writeln!(out, "n\t{}", self.n);
        let _ = writeln!(out, "correct\t{}", self.correct);
        let _ = writeln!(out, "accuracy\t{}", self.accuracy);
        let _ = writeln!(out, "balanced_accuracy\t{}", self.balanced_accuracy);
        for (k, v) in self.top_k.iter().enumerate() {
            let _ = writeln!(out, "top{}\t{v}", k + 1);
        }
        for c in CuisineClass::ALL {
            let _ = writeln!(out, "recall.{c}\t{}", self.per_class[c.code()]);
        }
        for c in CuisineClass::ALL {
            let _ = writeln!(out, "count.{c}\t{}", self.counts[c.code()]);
        }
        out
    }

    /// The normalized confusion matrix as a 10x10 grid with class headers.
    pub fn confusion_tsv(&self) -> String {
        let mut out = String::from("truth\\predicted");
        for c in CuisineClass::ALL {
            let _ = write!(out, "\t{c}");
        }
        out.push('\n');
        for c in CuisineClass::ALL {
            out.push_str(c.name());
            for v in self.confusion[c.code()] {
                let _ = write!(out, "\t{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "samples            {}", self.n);
        let _ = writeln!(out, "accuracy           {:.4}", self.accuracy);
        let _ = writeln!(out, "balanced accuracy  {:.4}", self.balanced_accuracy);
        let _ = writeln!(
            out,
            "top-1/2/3          {:.4} / {:.4} / {:.4}",
            self.top_k[0], self.top_k[1], self.top_k[2]
        );
        let _ = writeln!(out, "\n{:<16}{:>7}{:>9}", "class", "count", "recall");
        for c in CuisineClass::ALL {
            let _ = writeln!(
                out,
                "{:<16}{:>7}{:>9.4}",
                c.name(),
                self.counts[c.code()],
                self.per_class[c.code()]
            );
        }
        let _ = writeln!(out, "\nconfusion (rows: truth, columns: predicted, row-normalized)");
        let _ = write!(out, "{:<16}", "");
        for c in 0..N {
            let _ = write!(out, "{c:>6}");
        }
        out.push('\n');
        for c in CuisineClass::ALL {
            let _ = write!(out, "{:<16}", format!("{} {}", c.code(), c.name()));
            for v in self.confusion[c.code()] {
                let _ = write!(out, "{v:>6.2}");
            }
            out.push('\n');
        }
        out
    }
}
