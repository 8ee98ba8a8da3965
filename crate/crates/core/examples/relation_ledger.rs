//! The graph-tier decision: per-epoch error deltas for each relation type are
//! recorded over the last β epochs, averaged with truncated EMA weights, and
//! every type whose average is not positive is pruned.

use kgprompt::gtcp::{build_mask, truncated_ema_weights, DeltaLedger, PruneReport};
use kgprompt::ontology::OntologyGraph;

fn main() -> kgprompt::Result<()> {
    let (graph, _) = OntologyGraph::from_named([
        ("dog", "is_a", "mammal"),
        ("dog", "has_part", "tail"),
        ("dog", "present_in_work", "film"),
    ]);
    let (alpha, beta, epochs) = (0.8, 3, 10);
    println!("weights, most recent first: {:?}", truncated_ema_weights(alpha, beta));

    let mut ledger = DeltaLedger::new(alpha, beta, epochs, 0..graph.relation_count())?;
    let deltas = [[0.30, 0.25, 0.20], [0.05, -0.02, 0.01], [-0.10, 0.02, -0.04]];
    for (r, series) in deltas.iter().enumerate() {
        for (i, d) in series.iter().enumerate() {
            ledger.ema_update(r, ledger.first_epoch() + i, *d)?;
        }
    }
    let decisions = ledger.finalize()?;
    let mask = build_mask(&decisions);
    println!("{}", PruneReport::new(&graph, &decisions).to_json()?);
    println!("excluded at test time: {:?}", mask.names(&graph));
    Ok(())
}
