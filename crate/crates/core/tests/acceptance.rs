//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.

#![allow(clippy::needless_range_loop)]

mod common;

use std::collections::BTreeSet;
use std::process::Command;
use std::time::{Duration, Instant};

use kgprompt::frozen_clip::{cross_entropy, predict, ClassifierConfig};
use kgprompt::ftcp::{check_convergence, mcl_exact, mcl_taylor_r2, normalize_dims, sample_distortion, xi_single};
use kgprompt::graph_encoder::GraphEncoderParams;
use kgprompt::gtcp::{build_mask, epoch_deltas, truncated_ema, truncated_ema_weights, DeltaLedger, PruneDecision};
use kgprompt::numerics::{Rng, Tensor};
use kgprompt::ontology::{prune_relations, KnowledgeSubgraph, OntologyGraph, RelationMask};
use kgprompt::pipeline::{gradient_suite, prepare, run_experiment, train, ExperimentConfig};
use kgprompt::Result;

use common::{Edge, RefEncoder};

type Check = fn() -> Result<Outcome>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn gradient_suite_check() -> Result<Outcome> {
    let report = gradient_suite(20)?;
    outcome(
        report.cases.len() == 20 && report.max_rel_error < 1e-4 && report.elapsed < Duration::from_secs(10),
        format!(
            "20 instances, max rel error {:.2e} (< 1e-4), {:.2?} (< 10 s)",
            report.max_rel_error, report.elapsed
        ),
    )
}

fn ema_normalization() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for a in 1..=9 {
        for beta in 1..=10 {
            let s: f64 = truncated_ema_weights(a as f64 / 10.0, beta).iter().sum();
            worst = worst.max((s - 1.0).abs());
        }
    }
    let worked = truncated_ema(&[2.0, 1.0], 0.8);
    let err = (worked - 0.52 / 0.36).abs();
    outcome(
        worst < 1e-12 && err < 1e-12,
        format!("max |sum - 1| {worst:.1e}; worked example {worked:.15} (error {err:.1e})"),
    )
}

fn decision_rule() -> Result<Outcome> {
    let zero = PruneDecision::new(0, 0.0);
    let tiny = PruneDecision::new(1, 1e-15);
    let mask = build_mask(&[zero, tiny]);
    outcome(
        !zero.predictive && tiny.predictive && mask.contains(0) && !mask.contains(1),
        format!(
            "delta_bar 0 pruned: {}, delta_bar 1e-15 kept: {}",
            !zero.predictive, tiny.predictive
        ),
    )
}

fn taylor_agreement() -> Result<Outcome> {
    let mut rng = Rng::new(2024);
    let (mut worst, mut count) = (0.0f64, 0);
    while count < 200 {
        let k = 3 + rng.below(8);
        let d = 2 + rng.below(6);
        let std = 1.0 + rng.uniform();
        let f = rng.gaussian_tensor(k, d, std);
        let fbar = normalize_dims(&f)?.matrix;
        let base = check_convergence(&fbar, 1.0)?.norm;
        let eps = (base / 0.1).sqrt() * (1.0 + rng.uniform());
        if check_convergence(&fbar, eps)?.norm > 0.1 {
            continue;
        }
        let exact = mcl_exact(&fbar, eps)?;
        let approx = mcl_taylor_r2(&f, eps)?;
        worst = worst.max((approx - exact).abs() / exact);
        count += 1;
    }
    let mut diag_err: f64 = 0.0;
    for _ in 0..100 {
        let k = 2 + rng.below(10);
        let d = 1 + rng.below(8);
        let eps = 0.5 + rng.uniform();
        let xi = xi_single(&rng.gaussian_tensor(k, d, 3.0), eps)?;
        let want = (k * k) as f64 / (d as f64 * eps * eps);
        for i in 0..d {
            diag_err = diag_err.max((xi.matrix.get(i, i) - want).abs());
        }
    }
    outcome(
        worst <= 0.05 && diag_err < 1e-10,
        format!(
            "{count} instances, worst rel gap {:.3}% (<= 5%); xi_ii constant to {diag_err:.1e}",
            100.0 * worst
        ),
    )
}

fn distortion_constraints() -> Result<Outcome> {
    let mut rng = Rng::new(77);
    let mut f = rng.gaussian_tensor(1000, 6, 1.0);
    for i in (0..1000).step_by(7) {
        f.set(i, i % 6, 0.0);
    }
    let pi = 0.1;
    let a = sample_distortion(&f, pi, &mut Rng::new(5))?;
    let b = sample_distortion(&f, pi, &mut Rng::new(5))?;
    let (mut norm_err, mut sign_bad): (f64, usize) = (0.0, 0);
    for i in 0..1000 {
        let n = a.row(i).iter().map(|x| x * x).sum::<f64>().sqrt();
        norm_err = norm_err.max((n - pi).abs());
        for j in 0..6 {
            let (x, e) = (f.get(i, j), a.get(i, j));
            if (x > 0.0 && e < 0.0) || (x < 0.0 && e > 0.0) {
                sign_bad += 1;
            }
        }
    }
    outcome(
        norm_err < 1e-12 && sign_bad == 0 && a == b,
        format!(
            "1000 rows: max |norm - pi| {norm_err:.1e}, sign violations {sign_bad}, seeded repeat identical {}",
            a == b
        ),
    )
}

/// Frozen toy scorer: graph embeddings of the pruned subgraphs act directly
/// as label features for a cosine classifier.
struct ToyTask {
    graph: OntologyGraph,
    triples: Vec<Edge>,
    centers: Vec<usize>,
    images: Tensor,
    targets: Vec<usize>,
    tau: f64,
}

impl ToyTask {
    fn new(seed: u64) -> Self {
        let mut rng = Rng::new(seed);
        let (classes, others, relations, d) = (4, 8, 4, 5);
        let n = classes + others;
        let mut triples = Vec::new();
        for c in 0..classes {
            for _ in 0..2 + rng.below(4) {
                triples.push((c, rng.below(relations), classes + rng.below(others)));
            }
        }
        let triples = common::dedup(&triples);
        let graph = common::toy_graph(n, relations, &triples);
        let means = rng.gaussian_tensor(classes, d, 1.0);
        let examples = 32 + rng.below(33);
        let mut data = Vec::new();
        let mut targets = Vec::new();
        for i in 0..examples {
            let c = i % classes;
            data.extend(means.row(c).iter().map(|m| rng.normal(*m, 0.8)));
            targets.push(c);
        }
        Self {
            graph,
            triples,
            centers: (0..classes).collect(),
            images: Tensor::from_vec(examples, d, data).unwrap(),
            targets,
            tau: 0.1,
        }
    }

    fn params(&self, seed: u64, epoch: usize) -> GraphEncoderParams {
        let mut rng = Rng::new(seed).substream(epoch as u64);
        let (n, r, d) = (
            self.graph.entity_count(),
            self.graph.relation_count(),
            self.images.cols(),
        );
        let mut p = GraphEncoderParams::init(n, r, d, 1, &mut rng);
        p.node_embed = rng.gaussian_tensor(n, d, 0.8);
        p.rel_embed = rng.gaussian_tensor(r, d, 0.8);
        p
    }

    fn library_loss(&self, params: &GraphEncoderParams, mask: &RelationMask) -> Result<f64> {
        let sgs: Vec<KnowledgeSubgraph> = self
            .centers
            .iter()
            .map(|c| Ok(prune_relations(&self.graph.one_hop_subgraph(*c, *c)?, mask)))
            .collect::<Result<_>>()?;
        let labels = params.encode_batch(&sgs)?;
        let cfg = ClassifierConfig::new(self.tau)?;
        let mut total = 0.0;
        for (i, y) in self.targets.iter().enumerate() {
            total += cross_entropy(&predict(&self.images.row_tensor(i), &labels, &cfg)?, *y)?;
        }
        Ok(total / self.targets.len() as f64)
    }

    fn reference_loss(&self, params: &GraphEncoderParams, excluded: &BTreeSet<usize>) -> f64 {
        let enc = RefEncoder {
            node: common::rows(&params.node_embed),
            rel: common::rows(&params.rel_embed),
            weight: common::rows(&params.mlp_weight),
            bias: params.mlp_bias.row(0).to_vec(),
            layers: 1,
        };
        let labels: Vec<Vec<f64>> = self
            .centers
            .iter()
            .map(|c| {
                let (_, edges) = common::one_hop(&self.triples, *c);
                let (nodes, kept) = common::prune(*c, &edges, excluded);
                enc.encode(&nodes, &kept)
            })
            .collect();
        common::cosine_ce(&common::rows(&self.images), &self.targets, &labels, self.tau)
    }
}

fn pruning_oracle() -> Result<Outcome> {
    let (alpha, beta, epochs) = (0.8, 5, 8);
    let (mut agree, mut pruned, total) = (0, 0, 25);
    for seed in 0..total as u64 {
        let task = ToyTask::new(seed);
        let relations = task.graph.relation_count();
        let mut ledger = DeltaLedger::new(alpha, beta, epochs, 0..relations)?;
        let mut by_hand = vec![Vec::new(); relations];
        for epoch in 1..=epochs {
            if !ledger.in_window(epoch) {
                continue;
            }
            let params = task.params(seed, epoch);
            for (r, d) in epoch_deltas(&task.graph, |mask| task.library_loss(&params, mask))? {
                ledger.ema_update(r, epoch, d)?;
            }
            for (r, series) in by_hand.iter_mut().enumerate() {
                let full = task.reference_loss(&params, &BTreeSet::new());
                let cut = task.reference_loss(&params, &BTreeSet::from([r]));
                series.push(cut - full);
            }
        }
        let mask: BTreeSet<usize> = build_mask(&ledger.finalize()?).excluded;
        let weights = common::ema_weights(alpha, beta);
        let oracle: BTreeSet<usize> = (0..relations)
            .filter(|r| by_hand[*r].iter().rev().zip(&weights).map(|(d, w)| d * w).sum::<f64>() <= 0.0)
            .collect();
        if mask == oracle {
            agree += 1;
        }
        pruned += mask.len();
    }
    outcome(
        agree == total,
        format!(
            "{agree}/{total} toy models with identical masks ({pruned} of {} relation types pruned)",
            total * 4
        ),
    )
}

fn noise_excision() -> Result<Outcome> {
    let (mut excised, mut ordered) = (0, 0);
    let mut slowest = Duration::ZERO;
    let mut lines = Vec::new();
    for seed in 0..5 {
        let start = Instant::now();
        let run = run_experiment(&ExperimentConfig {
            seed,
            ..Default::default()
        })?;
        slowest = slowest.max(start.elapsed());
        let acc = |n: &str| run.report.variant(n).map(|v| v.accuracy).unwrap_or(f64::NAN);
        if run.report.mask.iter().any(|m| m == "noise") {
            excised += 1;
        }
        if acc("cpkp") >= acc("kp") {
            ordered += 1;
        }
        lines.push(format!(
            "s{seed}:{:?} {:.3}/{:.3}",
            run.report.mask,
            acc("cpkp"),
            acc("kp")
        ));
    }
    outcome(
        excised >= 4 && ordered >= 4 && slowest < Duration::from_secs(120),
        format!(
            "noise pruned {excised}/5, CPKP >= KP {ordered}/5, slowest seed {slowest:.2?} [{}]",
            lines.join("; ")
        ),
    )
}

fn redundancy_reduction() -> Result<Outcome> {
    let mut lower = 0;
    let mut lines = Vec::new();
    for seed in 0..5 {
        let mut scores = [0.0; 2];
        for (slot, gamma) in [(0, 0.0), (1, 1.0)] {
            let cfg = ExperimentConfig {
                seed,
                gamma,
                ..Default::default()
            };
            let inputs = prepare(&cfg)?;
            let out = train(&cfg, &inputs.dataset, &inputs.graph, inputs.model(&cfg)?)?;
            let labels = out.model.label_features(&RelationMask::empty())?;
            scores[slot] = xi_single(&labels, cfg.epsilon)?.mean_sq_off_diagonal();
        }
        if scores[1] < scores[0] {
            lower += 1;
        }
        lines.push(format!("s{seed}: {:.4} vs {:.4}", scores[1], scores[0]));
    }
    outcome(
        lower >= 4,
        format!(
            "label-feature redundancy lower with gamma=1 in {lower}/5 seeds [{}]",
            lines.join("; ")
        ),
    )
}

fn determinism() -> Result<Outcome> {
    let dir = tempfile::tempdir()?;
    let d = dir.path();
    std::fs::write(d.join("config.toml"), "seed = 11\n")?;
    for out in ["a", "b"] {
        let status = Command::new(env!("CARGO_BIN_EXE_kgprompt"))
            .args(["run", "--config", "config.toml", "--out", out])
            .current_dir(d)
            .output()?
            .status;
        if !status.success() {
            return outcome(false, format!("run exited with {status}"));
        }
    }
    let same =
        |f: &str| -> Result<bool> { Ok(std::fs::read(d.join("a").join(f))? == std::fs::read(d.join("b").join(f))?) };
    let (m, r) = (same("metrics.csv")?, same("report.json")?);
    outcome(m && r, format!("metrics.csv identical {m}, report.json identical {r}"))
}

fn subgraph_oracle() -> Result<Outcome> {
    let mut rng = Rng::new(50);
    let (mut checks, mut mismatches) = (0, 0);
    for _ in 0..50 {
        let n = 2 + rng.below(10);
        let r = 1 + rng.below(4);
        let triples: Vec<Edge> = (0..rng.below(25))
            .map(|_| (rng.below(n), rng.below(r), rng.below(n)))
            .collect();
        let g = common::toy_graph(n, r, &triples);
        for center in 0..n {
            let sg = g.one_hop_subgraph(center, 0)?;
            let (nodes, edges) = common::one_hop(&triples, center);
            let got: Vec<Edge> = sg.edges.iter().map(|t| (t.head, t.relation, t.tail)).collect();
            let excluded: BTreeSet<usize> = (0..r).filter(|_| rng.uniform() < 0.5).collect();
            let pruned = prune_relations(&sg, &RelationMask::of(excluded.iter().copied()));
            let (pn, pe) = common::prune(center, &edges, &excluded);
            let pgot: Vec<Edge> = pruned.edges.iter().map(|t| (t.head, t.relation, t.tail)).collect();
            checks += 1;
            if sg.nodes != nodes || got != edges || pruned.nodes != pn || pgot != pe {
                mismatches += 1;
            }
        }
    }
    outcome(
        mismatches == 0,
        format!("50 graphs, {checks} centers, {mismatches} mismatches"),
    )
}

fn main() {
    let criteria: [(&str, Check); 10] = [
        ("gradient suite", gradient_suite_check),
        ("EMA normalization", ema_normalization),
        ("decision rule", decision_rule),
        ("MCL Taylor agreement", taylor_agreement),
        ("distortion constraints", distortion_constraints),
        ("pruning oracle equivalence", pruning_oracle),
        ("noise excision ordering", noise_excision),
        ("redundancy reduction", redundancy_reduction),
        ("determinism", determinism),
        ("subgraph oracle", subgraph_oracle),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = check().unwrap_or_else(|e| Outcome {
            pass: false,
            detail: format!("error: {e}"),
        });
        if !result.pass {
            failed += 1;
        }
        println!(
            "{} [{:>2}] {name}: {}",
            if result.pass { "PASS" } else { "FAIL" },
            i + 1,
            result.detail
        );
    }
    println!(
        "acceptance: {}/{} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
