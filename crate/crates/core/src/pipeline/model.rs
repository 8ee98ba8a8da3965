//! The full prompt model: trainable graph encoder and prompt parameters
//! around frozen text and image encoders.

use crate::error::{Error, Result};
use crate::frozen_clip::{cosine_logits_on, cross_entropy_on, FrozenImageEncoder, FrozenTextEncoder};
use crate::ftcp::{ftcp_loss_on, sample_distortion};
use crate::graph_encoder::{encode_batch_on, EncoderVars, GraphEncoderParams};
use crate::numerics::{Rng, Tape, Tensor, Var};
use crate::ontology::{prune_relations, KnowledgeSubgraph, NameEmbeddings, OntologyGraph, RelationMask};
use crate::prompting::{
    knowledge_prompt_on, shared_knowledge_on, specific_knowledge_on, PromptMode, PromptParams, PromptVars,
    TokenEmbedder,
};

use super::config::ExperimentConfig;

/// Random streams split off the run seed, one per consumer.
pub(crate) mod streams {
    pub const DATA: u64 = 1;
    pub const TEXT: u64 = 2;
    pub const IMAGE: u64 = 3;
    pub const PROJECTION: u64 = 4;
    pub const GNN: u64 = 5;
    pub const PROMPT: u64 = 6;
    pub const SHUFFLE: u64 = 7;
    pub const DISTORTION: u64 = 8;
    pub const DELTA_SUBSET: u64 = 9;
    pub const VOCAB: u64 = 10;
}

const NAME_SALT: u64 = 0x6b67;
const VOCAB_STD: f64 = 0.02;

/// Everything that stays fixed during training.
#[derive(Clone, Debug, PartialEq)]
pub struct FrozenParts {
    pub text: FrozenTextEncoder,
    pub image: FrozenImageEncoder,
    /// d_g×d_tok map from graph embeddings to token space (label-specific mode).
    pub projection: Tensor,
    pub tokens: TokenEmbedder,
}

impl FrozenParts {
    pub fn new(cfg: &ExperimentConfig, tokens: TokenEmbedder) -> Result<Self> {
        if tokens.d_tok() != cfg.d_tok {
            return Err(Error::Config(format!(
                "vocabulary vectors have {} dims, config says d_tok = {}",
                tokens.d_tok(),
                cfg.d_tok
            )));
        }
        let root = Rng::new(cfg.seed);
        let projection = if cfg.d_g == cfg.d_tok {
            Tensor::identity(cfg.d_g)
        } else {
            root.substream(streams::PROJECTION)
                .gaussian_tensor(cfg.d_g, cfg.d_tok, 1.0 / (cfg.d_g as f64).sqrt())
        };
        Ok(Self {
            text: FrozenTextEncoder::new(cfg.d_tok, cfg.d_emb, &mut root.substream(streams::TEXT)),
            image: FrozenImageEncoder::new(cfg.d_img, cfg.d_emb, &mut root.substream(streams::IMAGE)),
            projection,
            tokens,
        })
    }
}

/// A synthetic vocabulary holding every lower-cased label word.
pub fn synthetic_vocabulary(cfg: &ExperimentConfig, labels: &[String]) -> Result<TokenEmbedder> {
    let mut words: Vec<String> = Vec::new();
    for label in labels {
        for w in label.to_lowercase().split_whitespace() {
            if !words.iter().any(|x| x == w) {
                words.push(w.to_string());
            }
        }
    }
    let mut rng = Rng::new(cfg.seed).substream(streams::VOCAB);
    TokenEmbedder::synthetic(words, cfg.d_tok, VOCAB_STD, cfg.max_len, &mut rng)
}

/// Tape handles for one forward pass.
#[derive(Clone, Copy, Debug)]
pub struct ModelVars {
    pub gnn: EncoderVars,
    pub prompt: PromptVars,
}

/// Per-step loss values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossParts {
    pub ce: f64,
    pub ftcp: f64,
    pub total: f64,
}

#[derive(Clone, Debug)]
pub struct Model {
    pub gnn: GraphEncoderParams,
    pub prompt: PromptParams,
    pub frozen: FrozenParts,
    /// One unpruned subgraph per label, in label order.
    pub subgraphs: Vec<KnowledgeSubgraph>,
    pub label_tokens: Vec<Tensor>,
    pub tau: f64,
    pub max_len: usize,
}

impl Model {
    /// Resolves labels against `graph` and initializes all parameters from the config seed.
    pub fn new(
        cfg: &ExperimentConfig,
        labels: &[String],
        graph: &OntologyGraph,
        tokens: TokenEmbedder,
    ) -> Result<Self> {
        if labels.len() < 2 {
            return Err(Error::Parameter(format!(
                "need at least two labels, got {}",
                labels.len()
            )));
        }
        let names = NameEmbeddings::new(cfg.d_g.max(8), NAME_SALT);
        let subgraphs = labels
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let res = graph.resolve_label(l, &names)?;
                graph.one_hop_subgraph(res.entity, i)
            })
            .collect::<Result<Vec<_>>>()?;
        let frozen = FrozenParts::new(cfg, tokens)?;
        let label_tokens = labels
            .iter()
            .map(|l| frozen.tokens.embed_label(l))
            .collect::<Result<Vec<_>>>()?;
        let root = Rng::new(cfg.seed);
        let gnn = GraphEncoderParams::init(
            graph.entity_count(),
            graph.relation_count().max(1),
            cfg.d_g,
            cfg.gnn_layers,
            &mut root.substream(streams::GNN),
        );
        let prompt = PromptParams::init(
            cfg.context_len,
            cfg.d_tok,
            cfg.lambda,
            cfg.mode,
            labels.len(),
            cfg.d_g,
            &mut root.substream(streams::PROMPT),
        )?;
        Ok(Self {
            gnn,
            prompt,
            frozen,
            subgraphs,
            label_tokens,
            tau: cfg.tau,
            max_len: cfg.max_len,
        })
    }

    pub fn classes(&self) -> usize {
        self.subgraphs.len()
    }

    pub fn pruned_subgraphs(&self, mask: &RelationMask) -> Vec<KnowledgeSubgraph> {
        self.subgraphs.iter().map(|sg| prune_relations(sg, mask)).collect()
    }

    pub fn register(&self, tape: &mut Tape, trainable: bool) -> ModelVars {
        ModelVars {
            gnn: self.gnn.register(tape, trainable),
            prompt: self.prompt.register(tape, trainable),
        }
    }

    /// K×d_g graph embeddings of `subgraphs`.
    pub fn graph_features_on(&self, tape: &mut Tape, vars: &ModelVars, subgraphs: &[KnowledgeSubgraph]) -> Result<Var> {
        encode_batch_on(tape, &vars.gnn, subgraphs)
    }

    /// K×d_emb text features of the knowledge prompts built from graph embeddings `g`.
    pub fn label_features_on(&self, tape: &mut Tape, vars: &ModelVars, g: Var) -> Result<Var> {
        let shared = match (self.prompt.mode, vars.prompt.psi) {
            (PromptMode::LabelShared, Some(psi)) => Some(shared_knowledge_on(tape, psi, g)?),
            (PromptMode::LabelShared, None) => {
                return Err(Error::Parameter("label-shared mode without a shared map".into()))
            }
            _ => None,
        };
        let proj = match shared {
            Some(_) => None,
            None => Some(tape.constant(&self.frozen.projection)),
        };
        let mut rows = Vec::with_capacity(self.classes());
        for (i, tokens) in self.label_tokens.iter().enumerate() {
            let knowledge = match (shared, proj) {
                (Some(s), _) => s,
                (None, Some(p)) => {
                    let gi = tape.row(g, i)?;
                    specific_knowledge_on(tape, gi, p)?
                }
                (None, None) => unreachable!(),
            };
            let lt = tape.constant(tokens);
            let prompt = knowledge_prompt_on(tape, &vars.prompt, knowledge, lt, self.max_len)?;
            rows.push(self.frozen.text.encode_on(tape, prompt)?);
        }
        tape.concat_rows(&rows)
    }

    /// Mean cross-entropy of precomputed image features against label features.
    pub fn cross_entropy_on(&self, tape: &mut Tape, labels: Var, images: &Tensor, targets: &[usize]) -> Result<Var> {
        let h = tape.constant(images);
        let cos = cosine_logits_on(tape, h, labels)?;
        cross_entropy_on(tape, cos, targets, self.tau)
    }

    pub fn encode_images(&self, x: &Tensor) -> Result<Tensor> {
        self.frozen.image.encode(x)
    }

    pub fn graph_features(&self, mask: &RelationMask) -> Result<Tensor> {
        let mut tape = Tape::new();
        let vars = self.register(&mut tape, false);
        let g = self.graph_features_on(&mut tape, &vars, &self.pruned_subgraphs(mask))?;
        Ok(tape.value(g).clone())
    }

    pub fn label_features(&self, mask: &RelationMask) -> Result<Tensor> {
        let mut tape = Tape::new();
        let vars = self.register(&mut tape, false);
        let g = self.graph_features_on(&mut tape, &vars, &self.pruned_subgraphs(mask))?;
        let l = self.label_features_on(&mut tape, &vars, g)?;
        Ok(tape.value(l).clone())
    }

    /// Sum over consecutive batches of the per-batch mean cross-entropy, with
    /// subgraphs pruned by `mask`. `images` are already encoded.
    pub fn batched_loss(
        &self,
        mask: &RelationMask,
        images: &Tensor,
        targets: &[usize],
        batch_size: usize,
    ) -> Result<f64> {
        if batch_size == 0 {
            return Err(Error::Parameter("batch size must be positive".into()));
        }
        let labels = self.label_features(mask)?;
        let mut total = 0.0;
        for start in (0..targets.len()).step_by(batch_size) {
            let end = (start + batch_size).min(targets.len());
            let idx: Vec<usize> = (start..end).collect();
            let batch = gather_rows(images, &idx)?;
            let mut tape = Tape::new();
            let l = tape.constant(&labels);
            let ce = self.cross_entropy_on(&mut tape, l, &batch, &targets[start..end])?;
            total += tape.value(ce).item()?;
        }
        Ok(total)
    }

    /// Builds `CE + γ·FTCP` on `tape` for one batch, with the distorted view
    /// drawn from `distortion`. Returns the total and the individual terms.
    pub fn training_loss_on(
        &self,
        tape: &mut Tape,
        vars: &ModelVars,
        images: &Tensor,
        targets: &[usize],
        ftcp: &crate::ftcp::FtcpConfig,
        distortion: &mut Rng,
    ) -> Result<(Var, Var, Var)> {
        let g = self.graph_features_on(tape, vars, &self.subgraphs)?;
        let labels = self.label_features_on(tape, vars, g)?;
        let ce = self.cross_entropy_on(tape, labels, images, targets)?;
        let eps = sample_distortion(tape.value(g), ftcp.pi, distortion)?;
        let eps = tape.constant(&eps);
        let g_view = tape.add(g, eps)?;
        let reg = ftcp_loss_on(tape, g, g_view, ftcp.epsilon)?;
        let weighted = tape.scale(reg, ftcp.gamma);
        let total = tape.add(ce, weighted)?;
        Ok((total, ce, reg))
    }
}

pub(crate) fn gather_rows(t: &Tensor, idx: &[usize]) -> Result<Tensor> {
    let rows = idx.iter().map(|i| t.row_tensor(*i)).collect::<Vec<_>>();
    Tensor::vstack(&rows)
}
