//! Sensitivity of the three variants to the knowledge weight λ.

use kgprompt::pipeline::experiment::write_sweep_csv;
use kgprompt::pipeline::{sweep, ExperimentConfig};

fn main() -> kgprompt::Result<()> {
    let cfg = ExperimentConfig::default();
    let values = [1e-4, 1e-3, 1e-2, 1e-1, 1.0];
    let rows = sweep(&cfg, "lambda", &values)?;
    println!(
        "{:>8} {:>6} {:>6} {:>12}  pruned",
        "lambda", "cpkp", "kp", "context_only"
    );
    for r in &rows {
        println!(
            "{:>8} {:>6.3} {:>6.3} {:>12.3}  [{}]",
            r.value, r.cpkp, r.kp, r.context_only, r.pruned
        );
    }
    let out = std::env::temp_dir().join("kgprompt-lambda-sweep.csv");
    write_sweep_csv(&rows, &out)?;
    println!("wrote {}", out.display());
    Ok(())
}
