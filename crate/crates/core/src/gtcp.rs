//! Relation-type pruning from error deltas.
//!
//! For every relation type `r` the frozen model is scored twice per epoch:
//! with full subgraphs and with every `r`-edge removed. The delta
//! `Δ = loss(without r) − loss(full)` is positive when `r` helps. Deltas from
//! the last β epochs are combined by a truncated exponential moving average
//!
//! ```text
//! Δ̄ = Σ_{k=0}^{β−1} α^k (1−α) Δ^{N−k} / (1 − α^β)
//! ```
//!
//! and `r` is kept only if `Δ̄ > 0`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ontology::{OntologyGraph, RelationId, RelationMask};

pub const DEFAULT_ALPHA: f64 = 0.8;
pub const DEFAULT_BETA: usize = 5;

/// Normalized truncated EMA weights, most recent epoch first.
pub fn truncated_ema_weights(alpha: f64, beta: usize) -> Vec<f64> {
    let norm = 1.0 - alpha.powi(beta as i32);
    (0..beta).map(|k| alpha.powi(k as i32) * (1.0 - alpha) / norm).collect()
}

/// Combines deltas listed oldest first.
pub fn truncated_ema(deltas: &[f64], alpha: f64) -> f64 {
    let w = truncated_ema_weights(alpha, deltas.len());
    deltas.iter().rev().zip(&w).map(|(d, w)| d * w).sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaLedger {
    alpha: f64,
    beta: usize,
    total_epochs: usize,
    /// (epoch, delta) pairs in recording order.
    per_relation: BTreeMap<RelationId, Vec<(usize, f64)>>,
}

impl DeltaLedger {
    /// Epochs are 1-based; only epochs `total_epochs − beta + 1 ..= total_epochs` are recorded.
    pub fn new(
        alpha: f64,
        beta: usize,
        total_epochs: usize,
        relations: impl IntoIterator<Item = RelationId>,
    ) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Parameter(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        if beta == 0 {
            return Err(Error::Parameter("beta must be at least 1".into()));
        }
        if total_epochs < beta {
            return Err(Error::Parameter(format!(
                "{total_epochs} epochs cannot cover a window of {beta}"
            )));
        }
        Ok(Self {
            alpha,
            beta,
            total_epochs,
            per_relation: relations.into_iter().map(|r| (r, Vec::new())).collect(),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> usize {
        self.beta
    }

    pub fn total_epochs(&self) -> usize {
        self.total_epochs
    }

    pub fn first_epoch(&self) -> usize {
        self.total_epochs - self.beta + 1
    }

    pub fn in_window(&self, epoch: usize) -> bool {
        epoch >= self.first_epoch() && epoch <= self.total_epochs
    }

    pub fn relations(&self) -> impl Iterator<Item = RelationId> + '_ {
        self.per_relation.keys().copied()
    }

    /// Recorded (epoch, delta) pairs for `r`.
    pub fn deltas(&self, r: RelationId) -> Option<&[(usize, f64)]> {
        self.per_relation.get(&r).map(Vec::as_slice)
    }

    pub fn ema_update(&mut self, r: RelationId, epoch: usize, delta: f64) -> Result<()> {
        if !self.in_window(epoch) {
            return Err(Error::Window {
                epoch,
                first: self.first_epoch(),
                last: self.total_epochs,
            });
        }
        if !delta.is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite delta for relation {r} at epoch {epoch}"
            )));
        }
        let entries = self
            .per_relation
            .get_mut(&r)
            .ok_or_else(|| Error::Domain(format!("relation type {r} is not tracked by the ledger")))?;
        if entries.last().is_some_and(|(e, _)| *e >= epoch) {
            return Err(Error::Domain(format!(
                "epoch {epoch} for relation {r} is not after the last recorded epoch"
            )));
        }
        entries.push((epoch, delta));
        Ok(())
    }

    pub fn finalize(&self) -> Result<Vec<PruneDecision>> {
        let weights = truncated_ema_weights(self.alpha, self.beta);
        self.per_relation
            .iter()
            .map(|(r, entries)| {
                if entries.len() != self.beta {
                    return Err(Error::Ledger {
                        relation: *r,
                        recorded: entries.len(),
                        expected: self.beta,
                    });
                }
                let delta_bar = entries.iter().rev().zip(&weights).map(|((_, d), w)| d * w).sum();
                Ok(PruneDecision::new(*r, delta_bar))
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PruneDecision {
    pub relation: RelationId,
    pub delta_bar: f64,
    pub predictive: bool,
}

impl PruneDecision {
    pub fn new(relation: RelationId, delta_bar: f64) -> Self {
        Self {
            relation,
            delta_bar,
            predictive: delta_bar > 0.0,
        }
    }
}

/// Excludes every relation type that is not predictive.
pub fn build_mask(decisions: &[PruneDecision]) -> RelationMask {
    RelationMask::of(decisions.iter().filter(|d| !d.predictive).map(|d| d.relation))
}

/// `loss(mask = {r}) − loss(empty mask)` for a frozen scorer.
pub fn epoch_delta<F>(graph: &OntologyGraph, r: RelationId, mut loss: F) -> Result<f64>
where
    F: FnMut(&RelationMask) -> Result<f64>,
{
    if r >= graph.relation_count() {
        return Err(Error::Domain(format!("unknown relation type {r}")));
    }
    let full = loss(&RelationMask::empty())?;
    Ok(loss(&RelationMask::of([r]))? - full)
}

/// Deltas for every relation type of `graph`, scoring the full graph once.
pub fn epoch_deltas<F>(graph: &OntologyGraph, mut loss: F) -> Result<Vec<(RelationId, f64)>>
where
    F: FnMut(&RelationMask) -> Result<f64>,
{
    let full = loss(&RelationMask::empty())?;
    (0..graph.relation_count())
        .map(|r| Ok((r, loss(&RelationMask::of([r]))? - full)))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PruneReportEntry {
    pub relation_name: String,
    pub delta_bar: f64,
    pub predictive: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PruneReport {
    pub relations: Vec<PruneReportEntry>,
    pub mask: Vec<String>,
}

impl PruneReport {
    pub fn new(graph: &OntologyGraph, decisions: &[PruneDecision]) -> Self {
        let relations = decisions
            .iter()
            .map(|d| PruneReportEntry {
                relation_name: graph.relation_name(d.relation).to_string(),
                delta_bar: d.delta_bar,
                predictive: d.predictive,
            })
            .collect();
        Self {
            relations,
            mask: build_mask(decisions).names(graph),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_example() {
        let mut l = DeltaLedger::new(0.8, 2, 10, [0]).unwrap();
        l.ema_update(0, 9, 2.0).unwrap();
        l.ema_update(0, 10, 1.0).unwrap();
        let d = l.finalize().unwrap();
        assert!((d[0].delta_bar - 0.52 / 0.36).abs() < 1e-12);
        assert!(d[0].predictive);
    }

    #[test]
    fn mixed_signs_kept() {
        assert!((truncated_ema(&[-1.0, 1.0], 0.8) - 0.04 / 0.36).abs() < 1e-12);
    }

    #[test]
    fn constant_and_single_window() {
        assert!((truncated_ema(&[3.5; 5], 0.3) - 3.5).abs() < 1e-12);
        assert_eq!(truncated_ema(&[-0.25], 0.8), -0.25);
    }

    #[test]
    fn window_and_completeness() {
        let mut l = DeltaLedger::new(0.8, 2, 4, [0, 1]).unwrap();
        assert!(matches!(
            l.ema_update(0, 2, 1.0),
            Err(Error::Window { first: 3, last: 4, .. })
        ));
        assert!(matches!(l.ema_update(0, 5, 1.0), Err(Error::Window { .. })));
        assert!(matches!(l.ema_update(7, 3, 1.0), Err(Error::Domain(_))));
        l.ema_update(0, 3, 1.0).unwrap();
        l.ema_update(0, 4, 1.0).unwrap();
        l.ema_update(1, 4, 1.0).unwrap();
        assert!(matches!(
            l.finalize(),
            Err(Error::Ledger {
                relation: 1,
                recorded: 1,
                expected: 2
            })
        ));
        assert!(DeltaLedger::new(1.0, 2, 4, [0]).is_err());
        assert!(DeltaLedger::new(0.5, 5, 4, [0]).is_err());
    }

    #[test]
    fn decision_rule_is_strict() {
        assert!(!PruneDecision::new(0, 0.0).predictive);
        assert!(PruneDecision::new(0, 1e-15).predictive);
        assert!(!PruneDecision::new(0, -1e-15).predictive);
    }

    #[test]
    fn masks() {
        let all_kept = [PruneDecision::new(0, 1.0), PruneDecision::new(1, 2.0)];
        assert!(build_mask(&all_kept).is_empty());
        let none = [PruneDecision::new(0, 0.0), PruneDecision::new(1, -2.0)];
        assert_eq!(build_mask(&none), RelationMask::of([0, 1]));
        let mixed = [
            PruneDecision::new(0, 0.5),
            PruneDecision::new(1, -0.1),
            PruneDecision::new(2, 0.0),
            PruneDecision::new(3, 1e-9),
        ];
        assert_eq!(build_mask(&mixed), RelationMask::of([1, 2]));
    }

    #[test]
    fn epoch_delta_uses_the_scorer() {
        let (g, _) = OntologyGraph::from_named([("a", "r0", "b"), ("a", "r1", "c")]);
        let score = |m: &RelationMask| Ok(if m.contains(1) { 2.0 } else { 1.5 });
        assert_eq!(epoch_delta(&g, 0, score).unwrap(), 0.0);
        assert_eq!(epoch_delta(&g, 1, score).unwrap(), 0.5);
        assert!(matches!(epoch_delta(&g, 2, score), Err(Error::Domain(_))));
        assert_eq!(epoch_deltas(&g, score).unwrap(), vec![(0, 0.0), (1, 0.5)]);
    }

    #[test]
    fn report_schema() {
        let (g, _) = OntologyGraph::from_named([("a", "signal", "b"), ("a", "noise", "c")]);
        let r = PruneReport::new(&g, &[PruneDecision::new(0, 0.3), PruneDecision::new(1, -0.2)]);
        assert_eq!(r.mask, vec!["noise".to_string()]);
        let v: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(v["relations"][1]["relation_name"], "noise");
        assert_eq!(v["relations"][1]["predictive"], false);
    }
}
