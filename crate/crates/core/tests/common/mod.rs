//! Straight-line reference implementations used as test oracles. Nothing here
//! calls into the library's numerics; data is plain `Vec<f64>`.

#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::BTreeSet;

use kgprompt::numerics::Tensor;
use kgprompt::ontology::{OntologyGraph, Triple};

pub type Edge = (usize, usize, usize);

pub fn rows(t: &Tensor) -> Vec<Vec<f64>> {
    (0..t.rows()).map(|r| t.row(r).to_vec()).collect()
}

/// Builds a graph with entities `e0..`, relations `r0..` and the given triples.
pub fn toy_graph(entities: usize, relations: usize, triples: &[Edge]) -> OntologyGraph {
    let mut g = OntologyGraph::new();
    for i in 0..entities {
        g.add_entity(&format!("e{i}"));
    }
    for r in 0..relations {
        g.add_relation(&format!("r{r}"));
    }
    for (h, r, t) in triples {
        g.add_triple(Triple::new(*h, *r, *t)).expect("ids in range");
    }
    g
}

pub fn dedup(triples: &[Edge]) -> Vec<Edge> {
    let mut seen = BTreeSet::new();
    triples.iter().copied().filter(|t| seen.insert(*t)).collect()
}

/// Brute-force 1-hop filter.
pub fn one_hop(triples: &[Edge], center: usize) -> (BTreeSet<usize>, Vec<Edge>) {
    let mut edges = Vec::new();
    for t in dedup(triples) {
        if t.0 == center || t.2 == center {
            edges.push(t);
        }
    }
    let mut nodes = BTreeSet::new();
    nodes.insert(center);
    for (h, _, t) in &edges {
        nodes.insert(*h);
        nodes.insert(*t);
    }
    (nodes, edges)
}

/// Brute-force relation excision: drop masked edges, then orphaned non-center nodes.
pub fn prune(center: usize, edges: &[Edge], excluded: &BTreeSet<usize>) -> (BTreeSet<usize>, Vec<Edge>) {
    let kept: Vec<Edge> = edges.iter().copied().filter(|e| !excluded.contains(&e.1)).collect();
    let mut nodes = BTreeSet::new();
    nodes.insert(center);
    for (h, _, t) in &kept {
        nodes.insert(*h);
        nodes.insert(*t);
    }
    (nodes, kept)
}

fn vdot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn vec_mat(x: &[f64], m: &[Vec<f64>]) -> Vec<f64> {
    let cols = m[0].len();
    (0..cols).map(|j| (0..x.len()).map(|i| x[i] * m[i][j]).sum()).collect()
}

pub struct RefEncoder {
    pub node: Vec<Vec<f64>>,
    pub rel: Vec<Vec<f64>>,
    pub weight: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub layers: usize,
}

impl RefEncoder {
    /// Attention-weighted neighbor sum plus self, through `tanh(xW + b)`,
    /// repeated `layers` times, then averaged over nodes.
    pub fn encode(&self, nodes: &BTreeSet<usize>, edges: &[Edge]) -> Vec<f64> {
        let d = self.bias.len();
        let mut state: Vec<(usize, Vec<f64>)> = nodes.iter().map(|n| (*n, self.node[*n].clone())).collect();
        let lookup = |s: &[(usize, Vec<f64>)], id: usize| s.iter().find(|(n, _)| *n == id).unwrap().1.clone();
        for _ in 0..self.layers {
            let mut next = Vec::new();
            for (v, hv) in &state {
                let mut incident = Vec::new();
                for (h, r, t) in edges {
                    if h == v || t == v {
                        incident.push((if h == v { *t } else { *h }, *r));
                    }
                }
                let mut mixed = hv.clone();
                if !incident.is_empty() {
                    let scores: Vec<f64> = incident.iter().map(|(_, r)| vdot(hv, &self.rel[*r])).collect();
                    let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let exps: Vec<f64> = scores.iter().map(|s| (s - m).exp()).collect();
                    let z: f64 = exps.iter().sum();
                    for ((u, _), e) in incident.iter().zip(&exps) {
                        let hu = lookup(&state, *u);
                        for k in 0..d {
                            mixed[k] += e / z * hu[k];
                        }
                    }
                }
                let pre = vec_mat(&mixed, &self.weight);
                next.push((*v, pre.iter().zip(&self.bias).map(|(p, b)| (p + b).tanh()).collect()));
            }
            state = next;
        }
        let n = state.len() as f64;
        (0..d)
            .map(|k| state.iter().map(|(_, h)| h[k]).sum::<f64>() / n)
            .collect()
    }
}

/// Truncated EMA weights written out term by term, most recent epoch first.
pub fn ema_weights(alpha: f64, beta: usize) -> Vec<f64> {
    let mut raw = Vec::new();
    let mut power = 1.0;
    for _ in 0..beta {
        raw.push(power * (1.0 - alpha));
        power *= alpha;
    }
    let norm = 1.0 - power;
    raw.into_iter().map(|w| w / norm).collect()
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    vdot(a, b) / (vdot(a, a).sqrt() * vdot(b, b).sqrt())
}

/// Mean cross-entropy of `softmax(cos/τ)` for rows of `images` against `labels`.
pub fn cosine_ce(images: &[Vec<f64>], targets: &[usize], labels: &[Vec<f64>], tau: f64) -> f64 {
    let mut total = 0.0;
    for (x, y) in images.iter().zip(targets) {
        let logits: Vec<f64> = labels.iter().map(|l| cosine(x, l) / tau).collect();
        let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + logits.iter().map(|z| (z - m).exp()).sum::<f64>().ln();
        total += lse - logits[*y];
    }
    total / images.len() as f64
}

/// Column-standardized copy (population std) of a row-major matrix.
pub fn standardize(f: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (k, d) = (f.len(), f[0].len());
    let mut out = f.to_vec();
    for j in 0..d {
        let mean = f.iter().map(|r| r[j]).sum::<f64>() / k as f64;
        let var = f.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / k as f64;
        let sd = var.sqrt();
        for i in 0..k {
            out[i][j] = if sd > 0.0 {
                (f[i][j] - mean) / sd
            } else {
                f[i][j] - mean
            };
        }
    }
    out
}
