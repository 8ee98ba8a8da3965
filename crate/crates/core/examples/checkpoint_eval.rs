//! Train once, save the trainable tensors, reload them into a fresh model and
//! evaluate under every single-relation mask.

use kgprompt::ontology::RelationMask;
use kgprompt::pipeline::{evaluate, prepare, train, Checkpoint, ExperimentConfig};

fn main() -> kgprompt::Result<()> {
    let cfg = ExperimentConfig::default();
    let inputs = prepare(&cfg)?;
    let outcome = train(&cfg, &inputs.dataset, &inputs.graph, inputs.model(&cfg)?)?;

    let path = std::env::temp_dir().join("kgprompt-checkpoint.json");
    Checkpoint::from_model(&outcome.model).save(&path)?;
    let mut restored = inputs.model(&cfg)?;
    Checkpoint::load(&path)?.apply(&mut restored)?;

    let test = &inputs.dataset.test;
    let mut masks = vec![("none".to_string(), RelationMask::empty())];
    for r in 0..inputs.graph.relation_count() {
        masks.push((inputs.graph.relation_name(r).to_string(), RelationMask::of([r])));
    }
    masks.push(("all".to_string(), RelationMask::all(&inputs.graph)));
    for (name, mask) in &masks {
        let a = evaluate(&outcome.model, mask, test)?;
        let b = evaluate(&restored, mask, test)?;
        println!(
            "exclude {name:<6} accuracy {:.3} (restored {:.3})",
            a.accuracy, b.accuracy
        );
    }
    Ok(())
}
