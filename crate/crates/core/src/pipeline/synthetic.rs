//! Generated few-shot tasks with a knowledge graph that has one
//! class-informative relation type and one class-independent one.
//!
//! Class `i` is the entity `class{i}`. The `signal` relation links it to
//! trait entities that belong to that class alone. The `noise` relation links
//! it to entities drawn uniformly, without looking at the class, from a pool
//! holding every trait and some distractors.

use crate::error::{Error, Result};
use crate::numerics::{Rng, Tensor};
use crate::ontology::OntologyGraph;

use super::config::SyntheticTaskSpec;
use super::data::{FewShotDataset, Split};

pub const SIGNAL: &str = "signal";
pub const NOISE: &str = "noise";

pub fn class_name(i: usize) -> String {
    format!("class{i}")
}

pub fn trait_name(class: usize, t: usize) -> String {
    format!("class{class}_trait{t}")
}

fn distractor_name(j: usize) -> String {
    format!("shared{j}")
}

/// Names of the entities noise edges may point at.
pub fn noise_pool(spec: &SyntheticTaskSpec) -> Vec<String> {
    let traits = (0..spec.classes).flat_map(|c| (0..spec.signal_per_class).map(move |t| trait_name(c, t)));
    traits.chain((0..spec.noise_pool).map(distractor_name)).collect()
}

/// Index into [`noise_pool`] of one noise neighbor, drawn without looking at the class.
pub fn sample_noise_neighbor(pool_size: usize, rng: &mut Rng) -> usize {
    rng.below(pool_size)
}

pub fn build_graph(spec: &SyntheticTaskSpec, rng: &mut Rng) -> OntologyGraph {
    let mut g = OntologyGraph::new();
    g.add_relation(SIGNAL);
    g.add_relation(NOISE);
    for i in 0..spec.classes {
        g.add_entity(&class_name(i));
    }
    let pool = noise_pool(spec);
    for name in &pool {
        g.add_entity(name);
    }
    for i in 0..spec.classes {
        let center = class_name(i);
        for t in 0..spec.signal_per_class {
            g.add_named(&center, SIGNAL, &trait_name(i, t));
        }
        for _ in 0..spec.noise_per_class {
            let j = sample_noise_neighbor(pool.len(), rng);
            g.add_named(&center, NOISE, &pool[j]);
        }
    }
    g
}

fn sample_split(means: &Tensor, per_class: usize, std: f64, rng: &mut Rng) -> Result<Split> {
    let (k, d) = means.shape();
    let mut data = Vec::with_capacity(k * per_class * d);
    let mut targets = Vec::with_capacity(k * per_class);
    for c in 0..k {
        for _ in 0..per_class {
            data.extend(means.row(c).iter().map(|m| rng.normal(*m, std)));
            targets.push(c);
        }
    }
    Split::new(Tensor::from_vec(k * per_class, d, data)?, targets)
}

/// Class-Gaussian image features plus the task graph; fully determined by `rng`.
pub fn generate_synthetic(
    spec: &SyntheticTaskSpec,
    shots: usize,
    d_img: usize,
    rng: &mut Rng,
) -> Result<(FewShotDataset, OntologyGraph)> {
    spec.validate()?;
    if shots == 0 || d_img == 0 {
        return Err(Error::Parameter("shots and d_img must be positive".into()));
    }
    let mut graph_rng = rng.substream(0);
    let mut image_rng = rng.substream(1);
    let graph = build_graph(spec, &mut graph_rng);
    let means = image_rng.gaussian_tensor(spec.classes, d_img, spec.cluster_spread);
    let train = sample_split(&means, shots, spec.cluster_std, &mut image_rng)?;
    let test = sample_split(&means, spec.test_per_class, spec.cluster_std, &mut image_rng)?;
    let labels = (0..spec.classes).map(class_name).collect();
    Ok((FewShotDataset { labels, train, test }, graph))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_determinism() {
        let spec = SyntheticTaskSpec {
            classes: 4,
            ..Default::default()
        };
        let (ds, g) = generate_synthetic(&spec, 16, 6, &mut Rng::new(3)).unwrap();
        assert_eq!(ds.train.len(), 64);
        assert_eq!(ds.train.class_counts(4), vec![16; 4]);
        ds.validate(16).unwrap();
        assert_eq!(g.relation_names(), &[SIGNAL.to_string(), NOISE.to_string()]);
        let (again, g2) = generate_synthetic(&spec, 16, 6, &mut Rng::new(3)).unwrap();
        assert_eq!(
            serde_json::to_string(&ds).unwrap(),
            serde_json::to_string(&again).unwrap()
        );
        assert_eq!(g.to_tsv(), g2.to_tsv());
    }

    #[test]
    fn signal_neighbors_are_class_unique() {
        let spec = SyntheticTaskSpec::default();
        let g = build_graph(&spec, &mut Rng::new(1));
        let signal = g.relation_id(SIGNAL).unwrap();
        for t in g.triples().iter().filter(|t| t.relation == signal) {
            let owners = g
                .triples()
                .iter()
                .filter(|u| u.relation == signal && u.tail == t.tail)
                .count();
            assert_eq!(owners, 1);
        }
    }

    #[test]
    fn rejects_degenerate_spec() {
        let spec = SyntheticTaskSpec {
            classes: 1,
            ..Default::default()
        };
        assert!(matches!(
            generate_synthetic(&spec, 1, 2, &mut Rng::new(0)),
            Err(Error::Parameter(_))
        ));
    }
}
