//! Per-document adjacency from pairwise decisions or baseline rules, and
//! clusters as connected components (the transitive closure of the
//! coreferent relation).

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{mention_lemma_match, same_type, Document};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clustering {
    pub doc_id: String,
    pub clusters: Vec<Vec<String>>,
}

impl Clustering {
    pub fn num_mentions(&self) -> usize {
        self.clusters.iter().map(Vec::len).sum()
    }

    /// Checks the clusters are nonempty, disjoint and cover `mention_ids`
    /// exactly.
    pub fn check_partition_of<'a>(
        &self,
        mention_ids: impl IntoIterator<Item = &'a str>,
    ) -> Result<()> {
        let mut seen = HashSet::new();
        for c in &self.clusters {
            if c.is_empty() {
                return Err(Error::Validation(format!(
                    "`{}`: empty cluster",
                    self.doc_id
                )));
            }
            for m in c {
                if !seen.insert(m.as_str()) {
                    return Err(Error::Validation(format!(
                        "`{}`: mention `{m}` in more than one cluster",
                        self.doc_id
                    )));
                }
            }
        }
        let mut expected = 0;
        for id in mention_ids {
            expected += 1;
            if !seen.contains(id) {
                return Err(Error::Validation(format!(
                    "`{}`: mention `{id}` not clustered",
                    self.doc_id
                )));
            }
        }
        if expected != seen.len() {
            return Err(Error::Validation(format!(
                "`{}`: clustering has mentions outside the document",
                self.doc_id
            )));
        }
        Ok(())
    }
}

/// One pairwise decision, earlier mention first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairDecision {
    pub first: String,
    pub second: String,
    pub coreferent: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

/// Symmetric boolean adjacency over a document's mentions, diagonal set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdjacencyMatrix {
    pub doc_id: String,
    pub mention_ids: Vec<String>,
    cells: Vec<bool>,
}

impl AdjacencyMatrix {
    pub fn identity(doc_id: impl Into<String>, mention_ids: Vec<String>) -> Self {
        let n = mention_ids.len();
        let mut cells = vec![false; n * n];
        for i in 0..n {
            cells[i * n + i] = true;
        }
        Self {
            doc_id: doc_id.into(),
            mention_ids,
            cells,
        }
    }

    fn for_doc(doc: &Document) -> Self {
        Self::identity(
            doc.doc_id.clone(),
            doc.mentions.iter().map(|m| m.mention_id.clone()).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.mention_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mention_ids.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.cells[i * self.len() + j]
    }

    pub fn connect(&mut self, i: usize, j: usize) {
        let n = self.len();
        self.cells[i * n + j] = true;
        self.cells[j * n + i] = true;
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.len();
        (0..n).flat_map(move |i| {
            ((i + 1)..n)
                .filter(move |&j| self.get(i, j))
                .map(move |j| (i, j))
        })
    }
}

pub fn adjacency_from_decisions(
    doc: &Document,
    decisions: &[PairDecision],
) -> Result<AdjacencyMatrix> {
    let index = doc.mention_index();
    let find = |id: &str| {
        index.get(id).copied().ok_or_else(|| {
            Error::Validation(format!(
                "decision names mention `{id}` outside document `{}`",
                doc.doc_id
            ))
        })
    };
    let mut adj = AdjacencyMatrix::for_doc(doc);
    for d in decisions {
        let (i, j) = (find(&d.first)?, find(&d.second)?);
        if d.coreferent {
            adj.connect(i, j);
        }
    }
    Ok(adj)
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
        true
    }

    /// Groups in order of their smallest element, members ascending.
    pub fn groups(&mut self) -> Vec<Vec<usize>> {
        let n = self.parent.len();
        let mut slot: HashMap<usize, usize> = HashMap::new();
        let mut out: Vec<Vec<usize>> = Vec::new();
        for i in 0..n {
            let root = self.find(i);
            let k = *slot.entry(root).or_insert_with(|| {
                out.push(Vec::new());
                out.len() - 1
            });
            out[k].push(i);
        }
        out
    }
}

pub fn connected_components(adj: &AdjacencyMatrix) -> Clustering {
    let mut uf = UnionFind::new(adj.len());
    for (i, j) in adj.edges() {
        uf.union(i, j);
    }
    Clustering {
        doc_id: adj.doc_id.clone(),
        clusters: uf
            .groups()
            .into_iter()
            .map(|g| g.into_iter().map(|i| adj.mention_ids[i].clone()).collect())
            .collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineRule {
    Singletons,
    Type,
    Lemma,
    LemmaAndType,
}

impl BaselineRule {
    pub fn links(self, a: &crate::corpus::EventMention, b: &crate::corpus::EventMention) -> bool {
        match self {
            BaselineRule::Singletons => false,
            BaselineRule::Type => same_type(a, b),
            BaselineRule::Lemma => mention_lemma_match(a, b),
            BaselineRule::LemmaAndType => same_type(a, b) && mention_lemma_match(a, b),
        }
    }
}

impl FromStr for BaselineRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "singletons" => Ok(Self::Singletons),
            "type" => Ok(Self::Type),
            "lemma" => Ok(Self::Lemma),
            "lemma-type" | "lemma-and-type" => Ok(Self::LemmaAndType),
            other => Err(Error::Config(format!("unknown baseline rule `{other}`"))),
        }
    }
}

impl fmt::Display for BaselineRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Singletons => "singletons",
            Self::Type => "type",
            Self::Lemma => "lemma",
            Self::LemmaAndType => "lemma-type",
        })
    }
}

pub fn baseline_adjacency(doc: &Document, rule: BaselineRule) -> AdjacencyMatrix {
    let mut adj = AdjacencyMatrix::for_doc(doc);
    let ms = &doc.mentions;
    for j in 1..ms.len() {
        for i in 0..j {
            if rule.links(&ms[i], &ms[j]) {
                adj.connect(i, j);
            }
        }
    }
    adj
}

#[derive(Serialize, Deserialize)]
struct SystemLine {
    doc_id: String,
    clusters: Vec<Vec<String>>,
}

/// Line-delimited `{"doc_id","clusters"}` system output.
pub fn clusterings_to_jsonl(clusterings: &[Clustering]) -> String {
    let mut out = String::new();
    for c in clusterings {
        out.push_str(&serde_json::to_string(c).expect("clustering serializes"));
        out.push('\n');
    }
    out
}

pub fn clusterings_from_jsonl(text: &str, context: &str) -> Result<Vec<Clustering>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let line: SystemLine = serde_json::from_str(l)
                .map_err(|e| Error::parse(format!("{context}:{}", i + 1), e))?;
            Ok(Clustering {
                doc_id: line.doc_id,
                clusters: line.clusters,
            })
        })
        .collect()
}
