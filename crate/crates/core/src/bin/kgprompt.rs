use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use kgprompt::gtcp::{DeltaLedger, PruneReport};
use kgprompt::ontology::{OntologyGraph, RelationMask};
use kgprompt::pipeline::experiment::{write_metrics_csv, write_sweep_csv};
use kgprompt::pipeline::{evaluate, gradient_suite, prepare, run_experiment, sweep, train, write_outputs};
use kgprompt::pipeline::{Checkpoint, ExperimentConfig};
use kgprompt::prompting::interpret_mu;
use kgprompt::{Error, Result};

#[derive(Parser)]
#[command(
    name = "kgprompt",
    version,
    about = "Knowledge-graph prompt learning with confounder pruning"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train once; writes metrics.csv, checkpoint.json and ledger.json.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Evaluate a checkpoint on the test split under a relation mask.
    Eval {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        /// A prune_report.json whose `mask` is applied.
        #[arg(long, conflicts_with = "exclude")]
        mask: Option<PathBuf>,
        /// Comma-separated relation type names to exclude.
        #[arg(long, value_delimiter = ',')]
        exclude: Vec<String>,
    },
    /// Train, prune and evaluate all three variants; writes metrics.csv, report.json, prune_report.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Turn a saved ledger into a prune report.
    PruneReport {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        ledger: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Nearest vocabulary words to each learned context row.
    Interpret {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 5)]
        top_k: usize,
    },
    /// Finite-difference check of the training loss gradients.
    Gradcheck {
        #[arg(long, default_value_t = 20)]
        instances: usize,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
    },
    /// One full run per value of a hyperparameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Vec<f64>,
        #[arg(long, default_value = "sweep.csv")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 1 } else { 2 })
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Train { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let inputs = prepare(&cfg)?;
            let outcome = train(&cfg, &inputs.dataset, &inputs.graph, inputs.model(&cfg)?)?;
            std::fs::create_dir_all(&out)?;
            write_metrics_csv(&outcome.history, out.join("metrics.csv"))?;
            Checkpoint::from_model(&outcome.model).save(out.join("checkpoint.json"))?;
            std::fs::write(out.join("ledger.json"), serde_json::to_string(&outcome.ledger)?)?;
            if let Some(last) = outcome.history.last() {
                println!("{}", serde_json::to_string(last)?);
            }
        }
        Command::Eval {
            config,
            checkpoint,
            mask,
            exclude,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let inputs = prepare(&cfg)?;
            let mut model = inputs.model(&cfg)?;
            Checkpoint::load(&checkpoint)?.apply(&mut model)?;
            let names = match mask {
                Some(path) => read_mask(&path)?,
                None => exclude,
            };
            let mask = mask_from_names(&inputs.graph, &names)?;
            let metrics = evaluate(&model, &mask, &inputs.dataset.test)?;
            println!("{}", serde_json::to_string_pretty(&metrics)?);
        }
        Command::Run { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let run = run_experiment(&cfg)?;
            write_outputs(&run, &out)?;
            println!("{}", serde_json::to_string_pretty(&run.report)?);
        }
        Command::PruneReport { config, ledger, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let inputs = prepare(&cfg)?;
            let text = std::fs::read_to_string(&ledger)?;
            let ledger: DeltaLedger = serde_json::from_str(&text)?;
            let report = PruneReport::new(&inputs.graph, &ledger.finalize()?);
            let json = report.to_json()?;
            match out {
                Some(path) => std::fs::write(path, json)?,
                None => println!("{json}"),
            }
        }
        Command::Interpret {
            config,
            checkpoint,
            top_k,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let inputs = prepare(&cfg)?;
            let mut model = inputs.model(&cfg)?;
            Checkpoint::load(&checkpoint)?.apply(&mut model)?;
            let rows = interpret_mu(&model.prompt, &model.frozen.tokens, top_k);
            println!("{}", serde_json::to_string_pretty(&rows)?);
        }
        Command::Gradcheck { instances, tolerance } => {
            let report = gradient_suite(instances)?;
            for case in &report.cases {
                println!(
                    "seed {:>3} {:?}: max rel error {:.3e}",
                    case.seed, case.mode, case.max_rel_error
                );
            }
            println!(
                "max rel error {:.3e} over {} instances in {:.2?}",
                report.max_rel_error,
                report.cases.len(),
                report.elapsed
            );
            if report.max_rel_error.is_nan() || report.max_rel_error >= tolerance {
                return Err(Error::Numeric(format!(
                    "gradient check failed: {:.3e} >= {tolerance:.1e}",
                    report.max_rel_error
                )));
            }
        }
        Command::Sweep {
            config,
            param,
            values,
            out,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            if values.is_empty() {
                return Err(Error::Config("sweep needs at least one value".into()));
            }
            let rows = sweep(&cfg, &param, &values)?;
            write_sweep_csv(&rows, &out)?;
            for r in &rows {
                println!(
                    "{}={}: cpkp {:.4} kp {:.4} context_only {:.4} pruned [{}]",
                    r.param, r.value, r.cpkp, r.kp, r.context_only, r.pruned
                );
            }
        }
    }
    Ok(())
}

fn read_mask(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path)?;
    let report: PruneReport = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
    Ok(report.mask)
}

fn mask_from_names(graph: &OntologyGraph, names: &[String]) -> Result<RelationMask> {
    let ids = names
        .iter()
        .map(|n| {
            graph
                .relation_id(n)
                .ok_or_else(|| Error::Config(format!("unknown relation type {n:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RelationMask::of(ids))
}
