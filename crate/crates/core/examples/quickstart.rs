//! One full experiment on the default synthetic task: train, prune, and
//! compare the pruned model, the unpruned model and a context-only baseline.

use kgprompt::pipeline::{run_experiment, write_outputs, ExperimentConfig};

fn main() -> kgprompt::Result<()> {
    let cfg = ExperimentConfig::default();
    let run = run_experiment(&cfg)?;

    println!("relation types: {:?}", run.report.relation_types);
    for entry in &run.prune_report.relations {
        println!(
            "  {:<8} delta_bar {:+.4} {}",
            entry.relation_name,
            entry.delta_bar,
            if entry.predictive { "kept" } else { "pruned" }
        );
    }
    for v in &run.report.variants {
        println!(
            "{:<13} test accuracy {:.3}  mean CE {:.3}",
            v.name, v.accuracy, v.mean_ce
        );
    }

    let out = std::env::temp_dir().join("kgprompt-quickstart");
    write_outputs(&run, &out)?;
    println!(
        "wrote metrics.csv, report.json and prune_report.json to {}",
        out.display()
    );
    Ok(())
}
