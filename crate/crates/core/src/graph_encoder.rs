//! Relation-aware attention GNN over knowledge subgraphs.
//!
//! Each node update is `tanh((H_v + Σ_u a_vu · H_u) W + b)` where the
//! attention `a_vu` is a softmax over the node's incident edges of the
//! score `H_v · H_r`, `H_r` being the embedding of the edge's relation type.
//! Updates replace the node state; the readout averages final node states.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Rng, Tape, Tensor, Var};
use crate::ontology::{EntityId, KnowledgeSubgraph, RelationId};

pub const EMBED_INIT_STD: f64 = 0.02;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphEncoderParams {
    /// One row per entity.
    pub node_embed: Tensor,
    /// One row per relation type.
    pub rel_embed: Tensor,
    pub mlp_weight: Tensor,
    pub mlp_bias: Tensor,
    /// Message-passing rounds; the MLP is shared between rounds.
    pub layers: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GraphEmbedding {
    pub vector: Tensor,
    pub source: usize,
}

/// Tape handles for one registered copy of the encoder parameters.
#[derive(Clone, Copy, Debug)]
pub struct EncoderVars {
    pub node_embed: Var,
    pub rel_embed: Var,
    pub mlp_weight: Var,
    pub mlp_bias: Var,
    pub layers: usize,
}

impl GraphEncoderParams {
    /// Gaussian(0, 0.02) embedding tables; MLP weight with std `1/√dim`, zero bias.
    pub fn init(entities: usize, relations: usize, dim: usize, layers: usize, rng: &mut Rng) -> Self {
        let node_embed = rng.gaussian_tensor(entities, dim, EMBED_INIT_STD);
        let rel_embed = rng.gaussian_tensor(relations, dim, EMBED_INIT_STD);
        let mlp_weight = rng.gaussian_tensor(dim, dim, 1.0 / (dim as f64).sqrt());
        Self {
            node_embed,
            rel_embed,
            mlp_weight,
            mlp_bias: Tensor::zeros(1, dim),
            layers: layers.max(1),
        }
    }

    pub fn dim(&self) -> usize {
        self.node_embed.cols()
    }

    /// Puts the parameters on `tape`, tracked when `trainable`.
    pub fn register(&self, tape: &mut Tape, trainable: bool) -> EncoderVars {
        let put = |tape: &mut Tape, t: &Tensor| if trainable { tape.param(t) } else { tape.constant(t) };
        EncoderVars {
            node_embed: put(tape, &self.node_embed),
            rel_embed: put(tape, &self.rel_embed),
            mlp_weight: put(tape, &self.mlp_weight),
            mlp_bias: put(tape, &self.mlp_bias),
            layers: self.layers,
        }
    }

    pub fn aggregate_node(&self, v: EntityId, sg: &KnowledgeSubgraph) -> Result<Tensor> {
        let mut tape = Tape::new();
        let vars = self.register(&mut tape, false);
        let states = initial_states(&mut tape, &vars, sg)?;
        let out = aggregate_node_on(&mut tape, &vars, sg, v, &states)?;
        Ok(tape.value(out).clone())
    }

    pub fn encode_subgraph(&self, sg: &KnowledgeSubgraph) -> Result<GraphEmbedding> {
        let mut tape = Tape::new();
        let vars = self.register(&mut tape, false);
        let out = encode_subgraph_on(&mut tape, &vars, sg)?;
        Ok(GraphEmbedding {
            vector: tape.value(out).clone(),
            source: sg.source_label,
        })
    }

    /// Row `i` is the embedding of `sgs[i]`.
    pub fn encode_batch(&self, sgs: &[KnowledgeSubgraph]) -> Result<Tensor> {
        let mut tape = Tape::new();
        let vars = self.register(&mut tape, false);
        let out = encode_batch_on(&mut tape, &vars, sgs)?;
        Ok(tape.value(out).clone())
    }

    /// First-layer attention weights of `v` over its incident edges, as
    /// `(neighbor, relation, weight)`.
    pub fn attention_weights(&self, v: EntityId, sg: &KnowledgeSubgraph) -> Result<Vec<(EntityId, RelationId, f64)>> {
        let mut tape = Tape::new();
        let vars = self.register(&mut tape, false);
        let states = initial_states(&mut tape, &vars, sg)?;
        let neighbors = sg.neighbors(v);
        if neighbors.is_empty() {
            return Ok(Vec::new());
        }
        let weights = attention_on(&mut tape, &vars, states[&v], &neighbors)?;
        Ok(neighbors
            .iter()
            .zip(tape.value(weights).data())
            .map(|((u, r), w)| (*u, *r, *w))
            .collect())
    }
}

fn initial_states(tape: &mut Tape, vars: &EncoderVars, sg: &KnowledgeSubgraph) -> Result<BTreeMap<EntityId, Var>> {
    sg.nodes
        .iter()
        .map(|n| Ok((*n, tape.row(vars.node_embed, *n)?)))
        .collect()
}

fn attention_on(tape: &mut Tape, vars: &EncoderVars, hv: Var, neighbors: &[(EntityId, RelationId)]) -> Result<Var> {
    let hv_t = tape.transpose(hv);
    let mut scores = Vec::with_capacity(neighbors.len());
    for (_, r) in neighbors {
        let hr = tape.row(vars.rel_embed, *r)?;
        scores.push(tape.matmul(hr, hv_t)?);
    }
    let scores = tape.concat_cols(&scores)?;
    tape.softmax_rows(scores, 1.0)
}

/// One node update given the current node states.
pub fn aggregate_node_on(
    tape: &mut Tape,
    vars: &EncoderVars,
    sg: &KnowledgeSubgraph,
    v: EntityId,
    states: &BTreeMap<EntityId, Var>,
) -> Result<Var> {
    let hv = *states
        .get(&v)
        .ok_or_else(|| Error::Domain(format!("entity {v} is not a node of the subgraph")))?;
    let neighbors = sg.neighbors(v);
    let mixed = if neighbors.is_empty() {
        hv
    } else {
        let weights = attention_on(tape, vars, hv, &neighbors)?;
        let rows = neighbors
            .iter()
            .map(|(u, _)| {
                states
                    .get(u)
                    .copied()
                    .ok_or_else(|| Error::Domain(format!("edge endpoint {u} missing from subgraph nodes")))
            })
            .collect::<Result<Vec<_>>>()?;
        let hu = tape.concat_rows(&rows)?;
        let message = tape.matmul(weights, hu)?;
        tape.add(hv, message)?
    };
    let pre = tape.matmul(mixed, vars.mlp_weight)?;
    let pre = tape.add_row(pre, vars.mlp_bias)?;
    Ok(tape.tanh(pre))
}

/// `layers` rounds of node updates followed by a mean readout; 1×dim.
pub fn encode_subgraph_on(tape: &mut Tape, vars: &EncoderVars, sg: &KnowledgeSubgraph) -> Result<Var> {
    let mut states = initial_states(tape, vars, sg)?;
    for _ in 0..vars.layers {
        let mut next = BTreeMap::new();
        for v in &sg.nodes {
            next.insert(*v, aggregate_node_on(tape, vars, sg, *v, &states)?);
        }
        states = next;
    }
    let rows: Vec<Var> = states.values().copied().collect();
    let stacked = tape.concat_rows(&rows)?;
    Ok(tape.mean_rows(stacked))
}

pub fn encode_batch_on(tape: &mut Tape, vars: &EncoderVars, sgs: &[KnowledgeSubgraph]) -> Result<Var> {
    if sgs.is_empty() {
        return Err(Error::Parameter("encode_batch needs at least one subgraph".into()));
    }
    let rows = sgs
        .iter()
        .map(|sg| encode_subgraph_on(tape, vars, sg))
        .collect::<Result<Vec<_>>>()?;
    tape.concat_rows(&rows)
}
