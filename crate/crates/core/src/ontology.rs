//! Typed triple store for ontological knowledge graphs, label-to-entity
//! resolution, 1-hop subgraph retrieval and relation-type excision.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::rng::hashed_gaussian;
use crate::numerics::{cosine, Tensor};

pub type EntityId = usize;
pub type RelationId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triple {
    pub head: EntityId,
    pub relation: RelationId,
    pub tail: EntityId,
}

impl Triple {
    pub fn new(head: EntityId, relation: RelationId, tail: EntityId) -> Self {
        Self { head, relation, tail }
    }

    pub fn touches(&self, e: EntityId) -> bool {
        self.head == e || self.tail == e
    }
}

/// Counts emitted after ingesting a triple file.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    pub entities: usize,
    pub relation_types: usize,
    pub triples: usize,
    pub duplicates_dropped: usize,
}

/// Entities, relation types and deduplicated triples with dense 0-based ids.
#[derive(Clone, Debug, Default)]
pub struct OntologyGraph {
    entities: Vec<String>,
    relations: Vec<String>,
    triples: Vec<Triple>,
    entity_index: HashMap<String, EntityId>,
    relation_index: HashMap<String, RelationId>,
    seen: HashSet<Triple>,
}

impl OntologyGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the id for `name`, registering it on first sight.
    pub fn add_entity(&mut self, name: &str) -> EntityId {
        if let Some(id) = self.entity_index.get(name) {
            return *id;
        }
        let id = self.entities.len();
        self.entities.push(name.to_string());
        self.entity_index.insert(name.to_string(), id);
        id
    }

    pub fn add_relation(&mut self, name: &str) -> RelationId {
        if let Some(id) = self.relation_index.get(name) {
            return *id;
        }
        let id = self.relations.len();
        self.relations.push(name.to_string());
        self.relation_index.insert(name.to_string(), id);
        id
    }

    /// Inserts a triple by id; returns false if it was already present.
    pub fn add_triple(&mut self, triple: Triple) -> Result<bool> {
        for e in [triple.head, triple.tail] {
            if e >= self.entities.len() {
                return Err(Error::Domain(format!("unknown entity id {e}")));
            }
        }
        if triple.relation >= self.relations.len() {
            return Err(Error::Domain(format!("unknown relation id {}", triple.relation)));
        }
        if !self.seen.insert(triple) {
            return Ok(false);
        }
        self.triples.push(triple);
        Ok(true)
    }

    /// Inserts a triple by surface names, registering unseen names.
    pub fn add_named(&mut self, head: &str, relation: &str, tail: &str) -> bool {
        let h = self.add_entity(head);
        let r = self.add_relation(relation);
        let t = self.add_entity(tail);
        self.add_triple(Triple::new(h, r, t)).expect("ids just registered")
    }

    /// Builds a graph from named triples, reporting dropped duplicates.
    pub fn from_named<'a>(triples: impl IntoIterator<Item = (&'a str, &'a str, &'a str)>) -> (Self, LoadReport) {
        let mut g = Self::new();
        let mut dups = 0;
        for (h, r, t) in triples {
            if !g.add_named(h, r, t) {
                dups += 1;
            }
        }
        let report = g.report(dups);
        (g, report)
    }

    fn report(&self, duplicates_dropped: usize) -> LoadReport {
        LoadReport {
            entities: self.entities.len(),
            relation_types: self.relations.len(),
            triples: self.triples.len(),
            duplicates_dropped,
        }
    }

    /// Parses `head<TAB>relation<TAB>tail` lines; `#` lines and blank lines are skipped.
    pub fn parse_tsv(text: &str, source: &Path) -> Result<(Self, LoadReport)> {
        let mut g = Self::new();
        let mut dups = 0;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 || fields.iter().any(|f| f.trim().is_empty()) {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("expected head<TAB>relation<TAB>tail, got {} field(s)", fields.len()),
                });
            }
            if !g.add_named(fields[0].trim(), fields[1].trim(), fields[2].trim()) {
                dups += 1;
            }
        }
        if g.triples.is_empty() {
            return Err(Error::EmptyGraph(source.to_path_buf()));
        }
        let report = g.report(dups);
        Ok((g, report))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<(Self, LoadReport)> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::parse_tsv(&text, path)
    }

    /// Serializes back to the TSV triple format.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for t in &self.triples {
            out.push_str(&format!(
                "{}\t{}\t{}\n",
                self.entities[t.head], self.relations[t.relation], self.entities[t.tail]
            ));
        }
        out
    }

    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    pub fn relation_count(&self) -> usize {
        self.relations.len()
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn entity_name(&self, id: EntityId) -> &str {
        &self.entities[id]
    }

    pub fn relation_name(&self, id: RelationId) -> &str {
        &self.relations[id]
    }

    pub fn entity_names(&self) -> &[String] {
        &self.entities
    }

    pub fn relation_names(&self) -> &[String] {
        &self.relations
    }

    pub fn entity_id(&self, name: &str) -> Option<EntityId> {
        self.entity_index.get(name).copied()
    }

    pub fn relation_id(&self, name: &str) -> Option<RelationId> {
        self.relation_index.get(name).copied()
    }

    /// Maps a label to an entity: a case-insensitive exact name match wins;
    /// otherwise the entity whose name embedding is most cosine-similar to
    /// the label's, lowest id on ties.
    pub fn resolve_label(&self, label: &str, embeddings: &NameEmbeddings) -> Result<LabelResolution> {
        if self.entities.is_empty() {
            return Err(Error::Domain("cannot resolve a label against an empty graph".into()));
        }
        let lowered = label.to_lowercase();
        if let Some(id) = self.entities.iter().position(|e| e.to_lowercase() == lowered) {
            return Ok(LabelResolution {
                entity: id,
                exact: true,
                similarity: 1.0,
            });
        }
        let query = embeddings.embed(label);
        let mut best = (0, f64::NEG_INFINITY);
        for (id, name) in self.entities.iter().enumerate() {
            let sim = cosine(query.data(), embeddings.embed(name).data()).unwrap_or(f64::NEG_INFINITY);
            if sim > best.1 {
                best = (id, sim);
            }
        }
        Ok(LabelResolution {
            entity: best.0,
            exact: false,
            similarity: best.1,
        })
    }

    /// The center plus every entity sharing a triple with it, in either direction.
    pub fn one_hop_subgraph(&self, center: EntityId, source_label: usize) -> Result<KnowledgeSubgraph> {
        if center >= self.entities.len() {
            return Err(Error::Domain(format!("unknown entity id {center}")));
        }
        let edges: Vec<Triple> = self.triples.iter().filter(|t| t.touches(center)).copied().collect();
        let mut nodes = BTreeSet::from([center]);
        for t in &edges {
            nodes.insert(t.head);
            nodes.insert(t.tail);
        }
        Ok(KnowledgeSubgraph {
            center,
            nodes,
            edges,
            source_label,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelResolution {
    pub entity: EntityId,
    /// Set when the label matched an entity name exactly (ignoring case).
    pub exact: bool,
    pub similarity: f64,
}

/// Deterministic name vectors: a Gaussian draw seeded by the hash of the
/// lower-cased name.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NameEmbeddings {
    pub dim: usize,
    pub salt: u64,
}

impl NameEmbeddings {
    pub fn new(dim: usize, salt: u64) -> Self {
        Self { dim, salt }
    }

    pub fn embed(&self, name: &str) -> Tensor {
        hashed_gaussian(&name.to_lowercase(), self.salt, self.dim, 1.0)
    }
}

/// A label's 1-hop excerpt of the graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeSubgraph {
    pub center: EntityId,
    pub nodes: BTreeSet<EntityId>,
    pub edges: Vec<Triple>,
    pub source_label: usize,
}

impl KnowledgeSubgraph {
    pub fn center_only(center: EntityId, source_label: usize) -> Self {
        Self {
            center,
            nodes: BTreeSet::from([center]),
            edges: Vec::new(),
            source_label,
        }
    }

    pub fn relation_types(&self) -> BTreeSet<RelationId> {
        self.edges.iter().map(|e| e.relation).collect()
    }

    /// `(neighbor, relation)` for every edge incident to `v`, one entry per edge.
    pub fn neighbors(&self, v: EntityId) -> Vec<(EntityId, RelationId)> {
        self.edges
            .iter()
            .filter(|e| e.touches(v))
            .map(|e| (if e.head == v { e.tail } else { e.head }, e.relation))
            .collect()
    }
}

/// Relation types excluded from a subgraph.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationMask {
    pub excluded: BTreeSet<RelationId>,
}

impl RelationMask {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn of(relations: impl IntoIterator<Item = RelationId>) -> Self {
        Self {
            excluded: relations.into_iter().collect(),
        }
    }

    pub fn all(graph: &OntologyGraph) -> Self {
        Self::of(0..graph.relation_count())
    }

    pub fn union(&self, other: &RelationMask) -> RelationMask {
        Self::of(self.excluded.union(&other.excluded).copied())
    }

    pub fn is_empty(&self) -> bool {
        self.excluded.is_empty()
    }

    pub fn contains(&self, r: RelationId) -> bool {
        self.excluded.contains(&r)
    }

    /// Checks that every excluded id names a relation type of `graph`.
    pub fn validate(&self, graph: &OntologyGraph) -> Result<()> {
        match self.excluded.iter().find(|r| **r >= graph.relation_count()) {
            Some(r) => Err(Error::Domain(format!("mask names unknown relation id {r}"))),
            None => Ok(()),
        }
    }

    pub fn names(&self, graph: &OntologyGraph) -> Vec<String> {
        self.excluded
            .iter()
            .map(|r| graph.relation_name(*r).to_string())
            .collect()
    }

    pub fn from_names(graph: &OntologyGraph, names: &[String]) -> Result<Self> {
        names
            .iter()
            .map(|n| {
                graph
                    .relation_id(n)
                    .ok_or_else(|| Error::Domain(format!("unknown relation type {n:?}")))
            })
            .collect::<Result<BTreeSet<_>>>()
            .map(|excluded| Self { excluded })
    }
}

/// Drops edges whose relation type is masked, then drops non-center nodes
/// left without an incident edge. The center always survives.
pub fn prune_relations(sg: &KnowledgeSubgraph, mask: &RelationMask) -> KnowledgeSubgraph {
    let edges: Vec<Triple> = sg
        .edges
        .iter()
        .filter(|e| !mask.contains(e.relation))
        .copied()
        .collect();
    let nodes = sg
        .nodes
        .iter()
        .copied()
        .filter(|n| *n == sg.center || edges.iter().any(|e| e.touches(*n)))
        .collect();
    KnowledgeSubgraph {
        center: sg.center,
        nodes,
        edges,
        source_label: sg.source_label,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> OntologyGraph {
        OntologyGraph::from_named([
            ("dog", "is_a", "mammal"),
            ("cat", "is_a", "mammal"),
            ("dog", "depicted_in", "film"),
        ])
        .0
    }

    #[test]
    fn toy_file_counts() {
        let text = "# toy\ndog\tis_a\tmammal\ncat\tis_a\tmammal\ndog\tdepicted_in\tfilm\n";
        let (g, report) = OntologyGraph::parse_tsv(text, Path::new("toy.tsv")).unwrap();
        assert_eq!(
            report,
            LoadReport {
                entities: 4,
                relation_types: 2,
                triples: 3,
                duplicates_dropped: 0
            }
        );
        assert_eq!(g.triples().len(), 3);
    }

    #[test]
    fn duplicate_triples_are_dropped_and_counted() {
        let text = "dog\tis_a\tmammal\ndog\tis_a\tmammal\ncat\tis_a\tmammal\n";
        let (_, report) = OntologyGraph::parse_tsv(text, Path::new("d.tsv")).unwrap();
        assert_eq!(report.triples, 2);
        assert_eq!(report.duplicates_dropped, 1);
    }

    #[test]
    fn malformed_and_empty_files() {
        let err = OntologyGraph::parse_tsv("a\tb\tc\nbroken line\n", Path::new("x")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = OntologyGraph::parse_tsv("# only a comment\n\n", Path::new("x")).unwrap_err();
        assert!(matches!(err, Error::EmptyGraph(_)));
    }

    #[test]
    fn exact_label_resolution_ignores_case() {
        let g = toy();
        let emb = NameEmbeddings::new(16, 0);
        let r = g.resolve_label("Dog", &emb).unwrap();
        assert_eq!(r.entity, g.entity_id("dog").unwrap());
        assert!(r.exact);
    }

    #[test]
    fn fallback_resolution_is_argmax_cosine() {
        let g = toy();
        let emb = NameEmbeddings::new(16, 9);
        let r = g.resolve_label("puppy", &emb).unwrap();
        assert!(!r.exact);
        let q = emb.embed("puppy");
        let sims: Vec<f64> = g
            .entity_names()
            .iter()
            .map(|n| cosine(q.data(), emb.embed(n).data()).unwrap())
            .collect();
        let best = sims.iter().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |acc, (i, s)| if *s > acc.1 { (i, *s) } else { acc },
        );
        assert_eq!(r.entity, best.0);
        assert_eq!(g.resolve_label("puppy", &emb).unwrap(), r);
    }

    #[test]
    fn dog_subgraph_and_pruning() {
        let g = toy();
        let dog = g.entity_id("dog").unwrap();
        let sg = g.one_hop_subgraph(dog, 0).unwrap();
        let names: BTreeSet<&str> = sg.nodes.iter().map(|n| g.entity_name(*n)).collect();
        assert_eq!(names, BTreeSet::from(["dog", "mammal", "film"]));
        assert_eq!(sg.edges.len(), 2);

        let depicted = g.relation_id("depicted_in").unwrap();
        let pruned = prune_relations(&sg, &RelationMask::of([depicted]));
        let names: BTreeSet<&str> = pruned.nodes.iter().map(|n| g.entity_name(*n)).collect();
        assert_eq!(names, BTreeSet::from(["dog", "mammal"]));
        assert_eq!(pruned.edges.len(), 1);

        assert_eq!(prune_relations(&sg, &RelationMask::empty()), sg);
        assert_eq!(
            prune_relations(&sg, &RelationMask::all(&g)),
            KnowledgeSubgraph::center_only(dog, 0)
        );
    }

    #[test]
    fn isolated_and_bidirectional_centers() {
        let (mut g, _) = OntologyGraph::from_named([("a", "r", "b"), ("b", "s", "a")]);
        let lone = g.add_entity("lonely");
        let sg = g.one_hop_subgraph(lone, 3).unwrap();
        assert_eq!(sg, KnowledgeSubgraph::center_only(lone, 3));

        let a = g.entity_id("a").unwrap();
        let sg = g.one_hop_subgraph(a, 0).unwrap();
        assert_eq!(sg.nodes.len(), 2);
        assert_eq!(sg.edges.len(), 2);
        assert!(g.one_hop_subgraph(99, 0).is_err());
    }

    #[test]
    fn mask_names_round_trip() {
        let g = toy();
        let m = RelationMask::from_names(&g, &["is_a".to_string()]).unwrap();
        assert_eq!(m.names(&g), vec!["is_a"]);
        assert!(RelationMask::from_names(&g, &["nope".to_string()]).is_err());
        assert!(RelationMask::of([7]).validate(&g).is_err());
    }
}
