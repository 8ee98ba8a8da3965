use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gtcp::{build_mask, PruneReport};
use crate::numerics::Rng;
use crate::ontology::{OntologyGraph, RelationMask};
use crate::prompting::TokenEmbedder;

use super::config::ExperimentConfig;
use super::data::{load_dataset, FewShotDataset};
use super::evaluate::{evaluate, EvalMetrics};
use super::model::{streams, synthetic_vocabulary, Model};
use super::synthetic::generate_synthetic;
use super::train::{train, EpochMetrics, TrainOutcome};

/// Dataset, graph and vocabulary for one run.
#[derive(Clone, Debug)]
pub struct Inputs {
    pub dataset: FewShotDataset,
    pub graph: OntologyGraph,
    pub tokens: TokenEmbedder,
}

impl Inputs {
    pub fn model(&self, cfg: &ExperimentConfig) -> Result<Model> {
        Model::new(cfg, &self.dataset.labels, &self.graph, self.tokens.clone())
    }
}

/// Generates the synthetic task or loads the configured files.
pub fn prepare(cfg: &ExperimentConfig) -> Result<Inputs> {
    cfg.validate()?;
    let mut rng = Rng::new(cfg.seed).substream(streams::DATA);
    let (dataset, graph) = match &cfg.data {
        None => generate_synthetic(&cfg.synthetic, cfg.shots, cfg.d_img, &mut rng)?,
        Some(paths) => {
            let (graph, _) = OntologyGraph::load(&paths.kg)?;
            let ds = load_dataset(&paths.labels, &paths.train, &paths.test, cfg.shots, &mut rng)?;
            if ds.train.features.cols() != cfg.d_img {
                return Err(Error::Config(format!(
                    "dataset features have {} dims, config says d_img = {}",
                    ds.train.features.cols(),
                    cfg.d_img
                )));
            }
            (ds, graph)
        }
    };
    let tokens = match cfg.data.as_ref().and_then(|d| d.vocab.as_ref()) {
        Some(path) => TokenEmbedder::load(path, cfg.max_len)?,
        None => synthetic_vocabulary(cfg, &dataset.labels)?,
    };
    Ok(Inputs { dataset, graph, tokens })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantReport {
    pub name: String,
    pub accuracy: f64,
    pub per_class_accuracy: Vec<f64>,
    pub mean_ce: f64,
}

impl VariantReport {
    fn new(name: &str, m: EvalMetrics) -> Self {
        Self {
            name: name.to_string(),
            accuracy: m.accuracy,
            per_class_accuracy: m.per_class_accuracy,
            mean_ce: m.mean_ce,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub seed: u64,
    pub labels: Vec<String>,
    pub relation_types: Vec<String>,
    /// Relation types excluded at test time.
    pub mask: Vec<String>,
    pub variants: Vec<VariantReport>,
    pub final_train: Option<EpochMetrics>,
}

impl ExperimentReport {
    pub fn variant(&self, name: &str) -> Option<&VariantReport> {
        self.variants.iter().find(|v| v.name == name)
    }
}

/// Everything produced by [`run_experiment`].
#[derive(Clone, Debug)]
pub struct ExperimentRun {
    pub report: ExperimentReport,
    pub prune_report: PruneReport,
    pub outcome: TrainOutcome,
    pub baseline: TrainOutcome,
    pub inputs: Inputs,
}

/// Config for the context-only baseline: no knowledge term, no decorrelation term.
pub fn baseline_config(cfg: &ExperimentConfig) -> ExperimentConfig {
    ExperimentConfig {
        lambda: 0.0,
        gamma: 0.0,
        ..cfg.clone()
    }
}

/// Train, decide the mask, then evaluate the pruned model, the unpruned
/// model and a context-only baseline on the test split.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentRun> {
    let inputs = prepare(cfg).map_err(|e| e.in_stage("load"))?;
    let (ds, graph) = (&inputs.dataset, &inputs.graph);

    let model = inputs.model(cfg).map_err(|e| e.in_stage("build"))?;
    let outcome = train(cfg, ds, graph, model).map_err(|e| e.in_stage("train"))?;

    let decisions = outcome.ledger.finalize().map_err(|e| e.in_stage("prune"))?;
    let mask = build_mask(&decisions);
    let prune_report = PruneReport::new(graph, &decisions);

    let cpkp = evaluate(&outcome.model, &mask, &ds.test).map_err(|e| e.in_stage("evaluate"))?;
    let kp = evaluate(&outcome.model, &RelationMask::empty(), &ds.test).map_err(|e| e.in_stage("evaluate"))?;

    let base_cfg = baseline_config(cfg);
    let base_model = inputs.model(&base_cfg).map_err(|e| e.in_stage("baseline"))?;
    let baseline = train(&base_cfg, ds, graph, base_model).map_err(|e| e.in_stage("baseline"))?;
    let base = evaluate(&baseline.model, &RelationMask::all(graph), &ds.test).map_err(|e| e.in_stage("baseline"))?;

    let report = ExperimentReport {
        seed: cfg.seed,
        labels: ds.labels.clone(),
        relation_types: graph.relation_names().to_vec(),
        mask: mask.names(graph),
        variants: vec![
            VariantReport::new("cpkp", cpkp),
            VariantReport::new("kp", kp),
            VariantReport::new("context_only", base),
        ],
        final_train: outcome.history.last().copied(),
    };
    Ok(ExperimentRun {
        report,
        prune_report,
        outcome,
        baseline,
        inputs,
    })
}

pub fn write_metrics_csv(history: &[EpochMetrics], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in history {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `metrics.csv`, `report.json` and `prune_report.json` into `dir`.
pub fn write_outputs(run: &ExperimentRun, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    write_metrics_csv(&run.outcome.history, dir.join("metrics.csv"))?;
    std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(&run.report)?)?;
    std::fs::write(dir.join("prune_report.json"), run.prune_report.to_json()?)?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param: String,
    pub value: f64,
    pub cpkp: f64,
    pub kp: f64,
    pub context_only: f64,
    pub pruned: String,
}

/// Sets a numeric hyperparameter by name.
pub fn set_param(cfg: &mut ExperimentConfig, param: &str, value: f64) -> Result<()> {
    match param {
        "lambda" => cfg.lambda = value,
        "gamma" => cfg.gamma = value,
        "tau" => cfg.tau = value,
        "pi" => cfg.pi = value,
        "epsilon" => cfg.epsilon = value,
        "alpha" => cfg.alpha = value,
        "learning_rate" => cfg.learning_rate = value,
        other => return Err(Error::Config(format!("parameter {other:?} cannot be swept"))),
    }
    cfg.validate()
}

/// One full experiment per value.
pub fn sweep(cfg: &ExperimentConfig, param: &str, values: &[f64]) -> Result<Vec<SweepRow>> {
    values
        .iter()
        .map(|v| {
            let mut c = cfg.clone();
            set_param(&mut c, param, *v)?;
            let run = run_experiment(&c)?;
            let acc = |n: &str| run.report.variant(n).map(|v| v.accuracy).unwrap_or(f64::NAN);
            Ok(SweepRow {
                param: param.to_string(),
                value: *v,
                cpkp: acc("cpkp"),
                kp: acc("kp"),
                context_only: acc("context_only"),
                pruned: run.report.mask.join(";"),
            })
        })
        .collect()
}

pub fn write_sweep_csv(rows: &[SweepRow], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
