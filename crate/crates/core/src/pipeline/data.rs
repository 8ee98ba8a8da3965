use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Rng, Tensor};

/// Image features, one row per example, with their class indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub features: Tensor,
    pub targets: Vec<usize>,
}

impl Split {
    pub fn new(features: Tensor, targets: Vec<usize>) -> Result<Self> {
        if features.rows() != targets.len() {
            return Err(Error::Parameter(format!(
                "{} feature rows but {} targets",
                features.rows(),
                targets.len()
            )));
        }
        Ok(Self { features, targets })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn class_counts(&self, classes: usize) -> Vec<usize> {
        let mut counts = vec![0; classes];
        for t in &self.targets {
            counts[*t] += 1;
        }
        counts
    }

    /// Rows `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let rows = indices
            .iter()
            .map(|i| {
                if *i >= self.len() {
                    return Err(Error::Index {
                        index: *i,
                        len: self.len(),
                    });
                }
                Ok(self.features.row_tensor(*i))
            })
            .collect::<Result<Vec<_>>>()?;
        let features = if rows.is_empty() {
            Tensor::zeros(0, self.features.cols())
        } else {
            Tensor::vstack(&rows)?
        };
        Split::new(features, indices.iter().map(|i| self.targets[*i]).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FewShotDataset {
    pub labels: Vec<String>,
    pub train: Split,
    pub test: Split,
}

impl FewShotDataset {
    pub fn classes(&self) -> usize {
        self.labels.len()
    }

    pub fn validate(&self, shots: usize) -> Result<()> {
        let k = self.classes();
        for split in [&self.train, &self.test] {
            if let Some(bad) = split.targets.iter().find(|t| **t >= k) {
                return Err(Error::Index { index: *bad, len: k });
            }
        }
        if let Some((c, n)) = self
            .train
            .class_counts(k)
            .into_iter()
            .enumerate()
            .find(|(_, n)| *n != shots)
        {
            return Err(Error::Parameter(format!(
                "class {c} has {n} training examples, expected {shots}"
            )));
        }
        if self.train.features.cols() != self.test.features.cols() {
            return Err(Error::shape(
                "dataset",
                self.train.features.shape(),
                self.test.features.shape(),
            ));
        }
        Ok(())
    }
}

#[derive(Deserialize)]
struct Record {
    features: Vec<f64>,
    label: usize,
}

/// Reads JSON-lines records `{"features": [...], "label": k}`.
pub fn parse_jsonl(text: &str) -> Result<Split> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut targets = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: idx + 1,
            message: e.to_string(),
        })?;
        if let Some(first) = rows.first() {
            if first.len() != rec.features.len() {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("expected {} features, got {}", first.len(), rec.features.len()),
                });
            }
        }
        rows.push(rec.features);
        targets.push(rec.label);
    }
    if rows.is_empty() {
        return Err(Error::Parameter("dataset file has no records".into()));
    }
    Split::new(Tensor::from_rows(&rows)?, targets)
}

/// One class name per nonblank line, in index order.
pub fn parse_labels(text: &str) -> Result<Vec<String>> {
    let labels: Vec<String> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect();
    if labels.len() < 2 {
        return Err(Error::Parameter(format!(
            "need at least two labels, got {}",
            labels.len()
        )));
    }
    Ok(labels)
}

/// Keeps `shots` randomly chosen training rows per class.
pub fn sample_shots(split: &Split, classes: usize, shots: usize, rng: &mut Rng) -> Result<Split> {
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, t) in split.targets.iter().enumerate() {
        by_class.entry(*t).or_default().push(i);
    }
    let mut chosen = Vec::with_capacity(classes * shots);
    for c in 0..classes {
        let pool = by_class.get(&c).map(Vec::as_slice).unwrap_or(&[]);
        if pool.len() < shots {
            return Err(Error::Parameter(format!(
                "class {c} has {} training examples, fewer than {shots} shots",
                pool.len()
            )));
        }
        chosen.extend(rng.sample_indices(pool.len(), shots).into_iter().map(|j| pool[j]));
    }
    split.subset(&chosen)
}

pub fn load_dataset(
    labels: impl AsRef<Path>,
    train: impl AsRef<Path>,
    test: impl AsRef<Path>,
    shots: usize,
    rng: &mut Rng,
) -> Result<FewShotDataset> {
    let labels = parse_labels(&std::fs::read_to_string(labels)?)?;
    let full = parse_jsonl(&std::fs::read_to_string(train)?)?;
    let test = parse_jsonl(&std::fs::read_to_string(test)?)?;
    let train = sample_shots(&full, labels.len(), shots, rng)?;
    let ds = FewShotDataset { labels, train, test };
    ds.validate(shots)?;
    Ok(ds)
}
