//! Resolve labels against a small ontology, take 1-hop subgraphs, prune a
//! relation type and encode the result with the attention GNN.

use kgprompt::graph_encoder::GraphEncoderParams;
use kgprompt::numerics::Rng;
use kgprompt::ontology::{prune_relations, NameEmbeddings, OntologyGraph, RelationMask};

fn main() -> kgprompt::Result<()> {
    let (graph, report) = OntologyGraph::from_named([
        ("dog", "is_a", "mammal"),
        ("cat", "is_a", "mammal"),
        ("dog", "depicted_in", "film"),
        ("dog", "has_part", "tail"),
        ("cat", "has_part", "tail"),
        ("dog", "is_a", "mammal"),
    ]);
    println!("load report: {}", serde_json::to_string(&report)?);

    let names = NameEmbeddings::new(8, 7);
    for label in ["Dog", "puppy"] {
        let res = graph.resolve_label(label, &names)?;
        println!("{label:>6} -> {} (exact: {})", graph.entity_name(res.entity), res.exact);
    }

    let dog = graph.entity_id("dog").expect("dog is in the graph");
    let sg = graph.one_hop_subgraph(dog, 0)?;
    let mask = RelationMask::from_names(&graph, &["depicted_in".to_string()])?;
    let pruned = prune_relations(&sg, &mask);
    let show =
        |ids: &std::collections::BTreeSet<usize>| -> Vec<&str> { ids.iter().map(|i| graph.entity_name(*i)).collect() };
    println!(
        "subgraph nodes {:?}, pruned nodes {:?}",
        show(&sg.nodes),
        show(&pruned.nodes)
    );

    let params = GraphEncoderParams::init(graph.entity_count(), graph.relation_count(), 8, 1, &mut Rng::new(0));
    for (v, r, a) in params.attention_weights(dog, &sg)? {
        println!(
            "  attention dog -> {:<7} via {:<12} {a:.4}",
            graph.entity_name(v),
            graph.relation_name(r)
        );
    }
    let full = params.encode_subgraph(&sg)?;
    let cut = params.encode_subgraph(&pruned)?;
    println!("g(full)   = {:?}", full.vector.data());
    println!("g(pruned) = {:?}", cut.vector.data());
    Ok(())
}
