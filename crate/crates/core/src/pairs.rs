//! Mention pair generation, gold labelling and the joint pair feature.
//!
//! Each mention is paired with every mention before it in the same document,
//! earlier mention first. The same order is used for training and
//! prediction, so a pair is never scored both ways round.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::cluster::Clustering;
use crate::corpus::{gold_clustering, mention_lemma_match, same_type, Corpus, Document};
use crate::rng;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairStrategy {
    #[default]
    AllPreceding,
    SameType,
    LemmaMatch,
}

impl FromStr for PairStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all-preceding" | "all" => Ok(Self::AllPreceding),
            "same-type" | "type" => Ok(Self::SameType),
            "lemma-match" | "lemma" => Ok(Self::LemmaMatch),
            other => Err(Error::Config(format!("unknown pair strategy `{other}`"))),
        }
    }
}

impl fmt::Display for PairStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::AllPreceding => "all-preceding",
            Self::SameType => "same-type",
            Self::LemmaMatch => "lemma-match",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MentionPair {
    pub first: String,
    pub second: String,
    pub label: Option<bool>,
}

/// Index pairs `(earlier, later)` into `doc.mentions`, ordered by
/// `(later, earlier)`.
pub fn generate_index_pairs(doc: &Document, strategy: PairStrategy) -> Vec<(usize, usize)> {
    let ms = &doc.mentions;
    let mut out = Vec::new();
    for j in 1..ms.len() {
        for i in 0..j {
            let keep = match strategy {
                PairStrategy::AllPreceding => true,
                PairStrategy::SameType => same_type(&ms[i], &ms[j]),
                PairStrategy::LemmaMatch => mention_lemma_match(&ms[i], &ms[j]),
            };
            if keep {
                out.push((i, j));
            }
        }
    }
    out
}

pub fn generate_pairs(doc: &Document, strategy: PairStrategy) -> Vec<MentionPair> {
    generate_index_pairs(doc, strategy)
        .into_iter()
        .map(|(i, j)| MentionPair {
            first: doc.mentions[i].mention_id.clone(),
            second: doc.mentions[j].mention_id.clone(),
            label: None,
        })
        .collect()
}

/// Labels each pair true iff both members share a gold cluster.
pub fn label_pairs(pairs: &[MentionPair], gold: &Clustering) -> Result<Vec<MentionPair>> {
    let cluster_of: HashMap<&str, usize> = gold
        .clusters
        .iter()
        .enumerate()
        .flat_map(|(c, members)| members.iter().map(move |m| (m.as_str(), c)))
        .collect();
    let find = |id: &str| {
        cluster_of.get(id).copied().ok_or_else(|| {
            Error::Validation(format!(
                "mention `{id}` not in gold clustering of `{}`",
                gold.doc_id
            ))
        })
    };
    pairs
        .iter()
        .map(|p| {
            let same = find(&p.first)? == find(&p.second)?;
            Ok(MentionPair {
                label: Some(same),
                ..p.clone()
            })
        })
        .collect()
}

/// Gold-labelled pairs of every document, in corpus order.
pub fn corpus_pairs(corpus: &Corpus, strategy: PairStrategy) -> Result<Vec<MentionPair>> {
    let mut out = Vec::new();
    for doc in &corpus.documents {
        out.extend(label_pairs(
            &generate_pairs(doc, strategy),
            &gold_clustering(doc),
        )?);
    }
    Ok(out)
}

/// Keeps every positive and each negative with probability `keep_ratio`.
pub fn downsample_negatives(
    pairs: Vec<MentionPair>,
    keep_ratio: f64,
    seed: u64,
) -> Vec<MentionPair> {
    let mut rng = rng::stream(seed, "negative-downsampling");
    pairs
        .into_iter()
        .filter(|p| p.label == Some(true) || rng.random::<f64>() < keep_ratio)
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairFeature {
    pub e1: Vec<f64>,
    pub e2: Vec<f64>,
    /// `[e1, e2, e1 ∘ e2]`.
    pub joint: Vec<f64>,
}

impl PairFeature {
    pub fn dim(&self) -> usize {
        self.e1.len()
    }
}

/// Joint vector `[e1, e2, e1 ∘ e2]` of length `3·dim`.
pub fn joint_vector<T: Copy + Into<f64>>(e1: &[T], e2: &[T]) -> Result<Vec<f64>> {
    if e1.len() != e2.len() {
        return Err(Error::Dimension(format!(
            "pair members have dims {} and {}",
            e1.len(),
            e2.len()
        )));
    }
    let mut joint = Vec::with_capacity(3 * e1.len());
    joint.extend(e1.iter().map(|&x| x.into()));
    joint.extend(e2.iter().map(|&x| x.into()));
    joint.extend(e1.iter().zip(e2).map(|(&a, &b)| a.into() * b.into()));
    Ok(joint)
}

pub fn joint_representation<T: Copy + Into<f64>>(e1: &[T], e2: &[T]) -> Result<PairFeature> {
    let joint = joint_vector(e1, e2)?;
    Ok(PairFeature {
        e1: e1.iter().map(|&x| x.into()).collect(),
        e2: e2.iter().map(|&x| x.into()).collect(),
        joint,
    })
}

#[derive(Serialize)]
struct PairDumpLine<'a> {
    first: &'a str,
    second: &'a str,
    label: Option<bool>,
}

/// Line-delimited `{"first","second","label"}` audit dump.
pub fn pairs_to_jsonl(pairs: &[MentionPair]) -> String {
    let mut out = String::new();
    for p in pairs {
        let line = PairDumpLine {
            first: &p.first,
            second: &p.second,
            label: p.label,
        };
        out.push_str(&serde_json::to_string(&line).expect("pair serializes"));
        out.push('\n');
    }
    out
}
