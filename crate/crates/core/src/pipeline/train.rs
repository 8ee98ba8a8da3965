use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gtcp::{epoch_deltas, DeltaLedger};
use crate::numerics::{Rng, Tape, Tensor};
use crate::ontology::OntologyGraph;

use super::config::ExperimentConfig;
use super::data::FewShotDataset;
use super::evaluate::accuracy_of;
use super::model::{gather_rows, streams, Model};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub ce: f64,
    pub ftcp: f64,
    pub total: f64,
    pub train_acc: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub epoch: usize,
    pub step: usize,
    pub ce: f64,
    pub ftcp: f64,
    pub total: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: Model,
    pub ledger: DeltaLedger,
    pub history: Vec<EpochMetrics>,
    pub steps: Vec<StepRecord>,
}

/// Rows of the training split used for delta collection: a random half,
/// drawn once from the run seed and kept in index order.
pub fn delta_subset(cfg: &ExperimentConfig, n: usize) -> Vec<usize> {
    let mut rng = Rng::new(cfg.seed).substream(streams::DELTA_SUBSET);
    let mut idx = rng.sample_indices(n, (n / 2).max(1));
    idx.sort_unstable();
    idx
}

/// Gradient descent on `CE + γ·FTCP` over unpruned subgraphs; during the
/// last β epochs every relation type's error delta is recorded after the
/// epoch's updates.
pub fn train(
    cfg: &ExperimentConfig,
    dataset: &FewShotDataset,
    graph: &OntologyGraph,
    model: Model,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let mut model = model;
    let ftcp = cfg.ftcp();
    let n = dataset.train.len();
    if n == 0 {
        return Err(Error::Parameter("empty training split".into()));
    }
    let images = model.encode_images(&dataset.train.features)?;
    let targets = &dataset.train.targets;

    let subset = delta_subset(cfg, n);
    let subset_images = gather_rows(&images, &subset)?;
    let subset_targets: Vec<usize> = subset.iter().map(|i| targets[*i]).collect();

    let root = Rng::new(cfg.seed);
    let mut shuffle = root.substream(streams::SHUFFLE);
    let mut distortion = root.substream(streams::DISTORTION);
    let mut ledger = DeltaLedger::new(cfg.alpha, cfg.beta, cfg.epochs, 0..graph.relation_count())?;
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut steps = Vec::new();

    for epoch in 1..=cfg.epochs {
        let mut order: Vec<usize> = (0..n).collect();
        shuffle.shuffle(&mut order);
        let (mut ce_sum, mut ftcp_sum, mut total_sum) = (0.0, 0.0, 0.0);
        let mut batches = 0;
        for (step, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch = gather_rows(&images, chunk)?;
            let batch_targets: Vec<usize> = chunk.iter().map(|i| targets[*i]).collect();
            let mut tape = Tape::new();
            let vars = model.register(&mut tape, true);
            let (total, ce, reg) =
                model.training_loss_on(&mut tape, &vars, &batch, &batch_targets, &ftcp, &mut distortion)?;
            let record = StepRecord {
                epoch,
                step: step + 1,
                ce: tape.value(ce).item()?,
                ftcp: tape.value(reg).item()?,
                total: tape.value(total).item()?,
            };
            if !(record.total.is_finite() && record.ce.is_finite() && record.ftcp.is_finite()) {
                return Err(Error::NonFinite { epoch, step: step + 1 });
            }
            let grads = tape.backward(total)?;
            let gnn = &mut model.gnn;
            for (v, t) in [
                (vars.gnn.node_embed, &mut gnn.node_embed),
                (vars.gnn.rel_embed, &mut gnn.rel_embed),
                (vars.gnn.mlp_weight, &mut gnn.mlp_weight),
                (vars.gnn.mlp_bias, &mut gnn.mlp_bias),
                (vars.prompt.mu, &mut model.prompt.mu),
            ] {
                descend(&grads, v, t, cfg.learning_rate)?;
            }
            if let (Some(v), Some(t)) = (vars.prompt.psi, model.prompt.psi.as_mut()) {
                descend(&grads, v, t, cfg.learning_rate)?;
            }
            ce_sum += record.ce;
            ftcp_sum += record.ftcp;
            total_sum += record.total;
            batches += 1;
            steps.push(record);
        }

        if ledger.in_window(epoch) {
            let deltas = epoch_deltas(graph, |mask| {
                model.batched_loss(mask, &subset_images, &subset_targets, cfg.batch_size)
            })?;
            for (r, d) in deltas {
                ledger.ema_update(r, epoch, d)?;
            }
        }

        let labels = model.label_features(&Default::default())?;
        let b = batches as f64;
        history.push(EpochMetrics {
            epoch,
            ce: ce_sum / b,
            ftcp: ftcp_sum / b,
            total: total_sum / b,
            train_acc: accuracy_of(&labels, &images, targets)?,
        });
    }
    Ok(TrainOutcome {
        model,
        ledger,
        history,
        steps,
    })
}

fn descend(grads: &crate::numerics::Gradients, v: crate::numerics::Var, t: &mut Tensor, lr: f64) -> Result<()> {
    grads.write_into(v, t)?;
    t.descend(lr);
    Ok(())
}
