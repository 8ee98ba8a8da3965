use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{cosine, Tensor};
use crate::ontology::RelationMask;

use super::data::Split;
use super::model::Model;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub accuracy: f64,
    pub per_class_accuracy: Vec<f64>,
    pub mean_ce: f64,
}

/// Index of the label feature most cosine-similar to `h`; lowest index on ties.
pub fn predict_label(labels: &Tensor, h: &[f64]) -> Result<usize> {
    let mut best = (0, f64::NEG_INFINITY);
    for k in 0..labels.rows() {
        let c = cosine(h, labels.row(k))
            .ok_or_else(|| Error::Numeric("zero-norm feature; cosine similarity undefined".into()))?;
        if c > best.1 {
            best = (k, c);
        }
    }
    Ok(best.0)
}

pub fn accuracy_of(labels: &Tensor, images: &Tensor, targets: &[usize]) -> Result<f64> {
    if targets.is_empty() {
        return Ok(0.0);
    }
    let mut hits = 0;
    for (i, t) in targets.iter().enumerate() {
        if predict_label(labels, images.row(i))? == *t {
            hits += 1;
        }
    }
    Ok(hits as f64 / targets.len() as f64)
}

/// Label features are built once from subgraphs pruned by `mask`; each row
/// of `split` is assigned its most similar label.
pub fn evaluate(model: &Model, mask: &RelationMask, split: &Split) -> Result<EvalMetrics> {
    if split.is_empty() {
        return Err(Error::Parameter("cannot evaluate an empty split".into()));
    }
    let labels = model.label_features(mask)?;
    let images = model.encode_images(&split.features)?;
    let k = model.classes();
    let mut hits = vec![0usize; k];
    let mut counts = vec![0usize; k];
    for (i, t) in split.targets.iter().enumerate() {
        counts[*t] += 1;
        if predict_label(&labels, images.row(i))? == *t {
            hits[*t] += 1;
        }
    }
    let ce = model.batched_loss(mask, &images, &split.targets, split.len())?;
    Ok(EvalMetrics {
        accuracy: hits.iter().sum::<usize>() as f64 / split.len() as f64,
        per_class_accuracy: hits
            .iter()
            .zip(&counts)
            .map(|(h, c)| if *c == 0 { 0.0 } else { *h as f64 / *c as f64 })
            .collect(),
        mean_ce: ce,
    })
}
