use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::Write;

use super::{FeatureVector, LabeledFeatures};
use crate::error::{Error, Result};

const DIMS: usize = 7;

/// k-nearest-neighbor classifier over min-max normalized features.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    pub k: usize,
    mins: [f64; DIMS],
    ranges: [f64; DIMS],
    exemplars: Vec<([f64; DIMS], usize)>,
    /// Sorted class names; exemplar labels index into this.
    labels: Vec<String>,
}

impl KnnModel {
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.exemplars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exemplars.is_empty()
    }

    /// Maps raw features into the training range; features that were
    /// constant during training map to 0.
    pub fn normalize(&self, f: &FeatureVector) -> [f64; DIMS] {
        let raw = f.to_array();
        std::array::from_fn(|i| {
            if self.ranges[i] > 0.0 {
                (raw[i] - self.mins[i]) / self.ranges[i]
            } else {
                0.0
            }
        })
    }

    pub fn exemplar(&self, i: usize) -> (&[f64; DIMS], &str) {
        let (x, l) = &self.exemplars[i];
        (x, &self.labels[*l])
    }
}

pub fn train(dataset: &[LabeledFeatures], k: usize) -> Result<KnnModel> {
    if k == 0 || k.is_multiple_of(2) {
        return Err(Error::config("k", format!("must be odd, got {k}")));
    }
    if k > dataset.len() {
        return Err(Error::config(
            "k",
            format!("{k} exceeds the {} training examples", dataset.len()),
        ));
    }
    let labels: Vec<String> = dataset
        .iter()
        .map(|r| r.label.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if labels.len() < 2 {
        return Err(Error::Classifier(format!(
            "training needs at least 2 classes, got {}",
            labels.len()
        )));
    }

    let mut mins = [f64::INFINITY; DIMS];
    let mut maxs = [f64::NEG_INFINITY; DIMS];
    for row in dataset {
        for (i, v) in row.features.to_array().into_iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::Classifier(format!("non-finite feature {v} in class {}", row.label)));
            }
            mins[i] = mins[i].min(v);
            maxs[i] = maxs[i].max(v);
        }
    }
    let ranges = std::array::from_fn(|i| maxs[i] - mins[i]);

    let mut model = KnnModel {
        k,
        mins,
        ranges,
        exemplars: Vec::with_capacity(dataset.len()),
        labels,
    };
    model.exemplars = dataset
        .iter()
        .map(|row| {
            let label = model.labels.binary_search(&row.label).expect("label collected above");
            (model.normalize(&row.features), label)
        })
        .collect();
    Ok(model)
}

fn distance(a: &[f64; DIMS], b: &[f64; DIMS]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Majority label among the `k` nearest exemplars. Equal distances favor the
/// earlier exemplar; equal vote counts favor the label whose neighbors have
/// the smaller summed distance.
pub fn classify<'m>(model: &'m KnnModel, features: &FeatureVector) -> &'m str {
    let q = model.normalize(features);
    let mut dist: Vec<(f64, usize)> = model
        .exemplars
        .iter()
        .enumerate()
        .map(|(i, (x, _))| (distance(&q, x), i))
        .collect();
    dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut votes = vec![(0usize, 0.0f64); model.labels.len()];
    let mut first_seen = Vec::new();
    for &(d, i) in dist.iter().take(model.k) {
        let label = model.exemplars[i].1;
        if votes[label].0 == 0 {
            first_seen.push(label);
        }
        votes[label].0 += 1;
        votes[label].1 += d;
    }
    let best = first_seen
        .into_iter()
        .reduce(|best, cand| {
            let (bc, bd) = votes[best];
            let (cc, cd) = votes[cand];
            if cc > bc || (cc == bc && cd < bd) {
                cand
            } else {
                best
            }
        })
        .expect("k >= 1");
    &model.labels[best]
}

/// Holdout accuracy and confusion matrix (rows true, columns predicted,
/// both in the model's label order).
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub labels: Vec<String>,
    pub confusion: Vec<Vec<usize>>,
    pub accuracy: f64,
}

impl Evaluation {
    pub fn total(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }

    pub fn correct(&self) -> usize {
        (0..self.labels.len()).map(|i| self.confusion[i][i]).sum()
    }

    /// Whether each non-empty row peaks strictly on the diagonal.
    pub fn diagonal_dominant(&self) -> bool {
        self.confusion.iter().enumerate().all(|(i, row)| {
            row.iter().sum::<usize>() == 0 || row.iter().enumerate().all(|(j, &c)| j == i || c < row[i])
        })
    }

    pub fn to_table(&self) -> String {
        let width = self
            .labels
            .iter()
            .map(String::len)
            .chain(self.confusion.iter().flatten().map(|c| c.to_string().len()))
            .chain(["true\\pred".len()])
            .max()
            .unwrap_or(0);
        let mut out = String::new();
        let _ = write!(out, "{:<width$}", "true\\pred");
        for l in &self.labels {
            let _ = write!(out, "  {l:>width$}");
        }
        out.push('\n');
        for (l, row) in self.labels.iter().zip(&self.confusion) {
            let _ = write!(out, "{l:<width$}");
            for c in row {
                let _ = write!(out, "  {c:>width$}");
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["true\\predicted".to_string()];
        header.extend(self.labels.iter().cloned());
        w.write_record(&header)?;
        for (l, row) in self.labels.iter().zip(&self.confusion) {
            let mut rec = vec![l.clone()];
            rec.extend(row.iter().map(|c| c.to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<confusion>", e))?;
        Ok(())
    }
}

pub fn evaluate(model: &KnnModel, test: &[LabeledFeatures]) -> Result<Evaluation> {
    if test.is_empty() {
        return Err(Error::Classifier("test set is empty".into()));
    }
    let n = model.labels.len();
    let mut confusion = vec![vec![0usize; n]; n];
    for row in test {
        let truth = model
            .labels
            .binary_search(&row.label)
            .map_err(|_| Error::Classifier(format!("test label {:?} was not seen in training", row.label)))?;
        let predicted = classify(model, &row.features);
        let predicted = model.labels.binary_search_by(|l| l.as_str().cmp(predicted)).expect("model label");
        confusion[truth][predicted] += 1;
    }
    let correct: usize = (0..n).map(|i| confusion[i][i]).sum();
    Ok(Evaluation {
        labels: model.labels.clone(),
        accuracy: correct as f64 / test.len() as f64,
        confusion,
    })
}
