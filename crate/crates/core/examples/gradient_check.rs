//! Finite-difference check of the training loss through the prompt, ψ, the
//! GNN embeddings and the MLP.

use kgprompt::pipeline::gradient_suite;

fn main() -> kgprompt::Result<()> {
    let report = gradient_suite(20)?;
    for c in &report.cases {
        println!(
            "seed {:>2} {:?}: {} parameters, max rel error {:.2e}",
            c.seed, c.mode, c.parameters, c.max_rel_error
        );
    }
    println!("worst {:.2e} in {:.1?}", report.max_rel_error, report.elapsed);
    Ok(())
}
