//! Runs the synthetic task over several seeds and shows which relation
//! types get pruned and how the pruned model compares with the unpruned one.

use std::time::Instant;

use kgprompt::pipeline::{run_experiment, ExperimentConfig};

fn main() -> kgprompt::Result<()> {
    let seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    for seed in 0..seeds {
        let cfg = ExperimentConfig {
            seed,
            ..Default::default()
        };
        let start = Instant::now();
        let run = run_experiment(&cfg)?;
        let acc = |n: &str| run.report.variant(n).map(|v| v.accuracy).unwrap_or(f64::NAN);
        let deltas: Vec<String> = run
            .prune_report
            .relations
            .iter()
            .map(|r| format!("{}={:+.4}", r.relation_name, r.delta_bar))
            .collect();
        println!(
            "seed {seed}: pruned {:?} [{}] cpkp {:.3} kp {:.3} context-only {:.3} train_acc {:.3} ({:.1?})",
            run.report.mask,
            deltas.join(", "),
            acc("cpkp"),
            acc("kp"),
            acc("context_only"),
            run.report.final_train.map(|m| m.train_acc).unwrap_or(0.0),
            start.elapsed()
        );
    }
    Ok(())
}
