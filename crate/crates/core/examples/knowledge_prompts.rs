//! Build label-specific and label-shared knowledge prompts from graph
//! embeddings, encode them with the frozen text encoder, and read the
//! learned context back as nearest vocabulary words.

use kgprompt::frozen_clip::FrozenTextEncoder;
use kgprompt::graph_encoder::GraphEmbedding;
use kgprompt::numerics::{Rng, Tensor};
use kgprompt::prompting::{
    build_shared_prompt, build_specific_prompt, interpret_mu, PromptMode, PromptParams, TokenEmbedder,
};

fn main() -> kgprompt::Result<()> {
    let (d_g, d_tok, m) = (4, 6, 3);
    let mut rng = Rng::new(11);
    let words: Vec<String> = ["a", "photo", "of", "dog", "cat", "bird"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let vocab = TokenEmbedder::synthetic(words, d_tok, 1.0, 77, &mut rng)?;
    let labels = ["dog", "cat"];
    let gs: Vec<GraphEmbedding> = (0..labels.len())
        .map(|i| GraphEmbedding {
            vector: rng.gaussian_tensor(1, d_g, 1.0),
            source: i,
        })
        .collect();
    let proj = rng.gaussian_tensor(d_g, d_tok, 0.5);
    let text = FrozenTextEncoder::new(d_tok, 4, &mut rng);

    let specific = PromptParams::init(m, d_tok, 1e-3, PromptMode::LabelSpecific, labels.len(), d_g, &mut rng)?;
    let shared = PromptParams::init(m, d_tok, 1e-3, PromptMode::LabelShared, labels.len(), d_g, &mut rng)?;
    for (i, label) in labels.iter().enumerate() {
        let tokens = vocab.embed_label(label)?;
        let p = build_specific_prompt(&specific, &gs[i], &proj, &tokens, vocab.max_len())?;
        let q = build_shared_prompt(&shared, &gs, &tokens, i, vocab.max_len())?;
        println!(
            "{label}: {} prompt tokens; specific l = {:?}",
            p.tokens.rows(),
            rounded(&text.encode(&p)?)
        );
        println!("{label}: shared   l = {:?}", rounded(&text.encode(&q)?));
    }

    let mut pp = specific.clone();
    pp.mu = Tensor::vstack(&[
        vocab.word_vector("a"),
        vocab.word_vector("photo"),
        vocab.word_vector("of"),
    ])?;
    for (r, nearest) in interpret_mu(&pp, &vocab, 2).iter().enumerate() {
        let shown: Vec<String> = nearest
            .iter()
            .map(|n| format!("{} ({:.3})", n.word, n.distance))
            .collect();
        println!("context row {r}: {}", shown.join(", "));
    }
    Ok(())
}

fn rounded(t: &Tensor) -> Vec<f64> {
    t.data().iter().map(|x| (x * 1e4).round() / 1e4).collect()
}
