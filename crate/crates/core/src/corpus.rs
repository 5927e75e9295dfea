//! Documents, event mentions and gold coreference chains, plus the JSON
//! interchange format they are loaded from.
//!
//! ```json
//! {"documents":[{"doc_id":"d1","sentences":[["Rebels","captured","the","town"]],
//!   "mentions":[{"mention_id":"m1","sent_idx":0,"tok_start":1,"tok_end":2,
//!                "event_type":"Attack","head_lemma":"capture","chain_id":"e1"}]}]}
//! ```

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cluster::Clustering;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventMention {
    pub mention_id: String,
    /// Filled from the enclosing document on load; not part of the file format.
    #[serde(skip)]
    pub doc_id: String,
    pub sent_idx: usize,
    pub tok_start: usize,
    pub tok_end: usize,
    #[serde(default)]
    pub event_type: Option<String>,
    #[serde(default)]
    pub head_lemma: Option<String>,
    #[serde(default)]
    pub chain_id: Option<String>,
}

impl EventMention {
    /// Document-position key: (sentence, first token, id).
    pub fn position(&self) -> (usize, usize, &str) {
        (self.sent_idx, self.tok_start, &self.mention_id)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    #[serde(default)]
    pub sentences: Vec<Vec<String>>,
    #[serde(default)]
    pub mentions: Vec<EventMention>,
}

impl Document {
    /// Trigger tokens of a mention.
    pub fn trigger_tokens(&self, mention: &EventMention) -> &[String] {
        &self.sentences[mention.sent_idx][mention.tok_start..mention.tok_end]
    }

    pub fn mention_index(&self) -> BTreeMap<&str, usize> {
        self.mentions
            .iter()
            .enumerate()
            .map(|(i, m)| (m.mention_id.as_str(), i))
            .collect()
    }

    /// Sorts mentions into document order and stamps their `doc_id`.
    fn normalize(&mut self) {
        for m in &mut self.mentions {
            m.doc_id.clone_from(&self.doc_id);
        }
        self.mentions
            .sort_by(|a, b| a.position().cmp(&b.position()));
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub documents: Vec<Document>,
    #[serde(default, rename = "split", skip_serializing_if = "Option::is_none")]
    pub split_name: Option<Split>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorefChain {
    pub chain_id: String,
    pub member_ids: Vec<String>,
}

/// Findings that do not invalidate a corpus but matter to some rules.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub documents: usize,
    pub mentions: usize,
    pub missing_lemma: Vec<String>,
    pub missing_type: Vec<String>,
}

impl Corpus {
    pub fn from_json(text: &str, context: &str) -> Result<Self> {
        let mut corpus: Corpus = serde_json::from_str(text).map_err(|e| {
            Error::parse(
                context,
                format_args!("line {} column {}: {e}", e.line(), e.column()),
            )
        })?;
        for doc in &mut corpus.documents {
            doc.normalize();
        }
        corpus.validate()?;
        Ok(corpus)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("corpus serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    /// Checks span ranges, id uniqueness and document ordering.
    pub fn validate(&self) -> Result<ValidationReport> {
        let mut report = ValidationReport {
            documents: self.documents.len(),
            ..Default::default()
        };
        let mut doc_ids = HashSet::new();
        let mut mention_ids = HashSet::new();
        for doc in &self.documents {
            if !doc_ids.insert(doc.doc_id.as_str()) {
                return Err(Error::Validation(format!(
                    "duplicate doc_id `{}`",
                    doc.doc_id
                )));
            }
            for m in &doc.mentions {
                let id = &m.mention_id;
                if !mention_ids.insert(id.as_str()) {
                    return Err(Error::Validation(format!("duplicate mention_id `{id}`")));
                }
                if m.doc_id != doc.doc_id {
                    return Err(Error::Validation(format!(
                        "mention `{id}` belongs to `{}` but sits in `{}`",
                        m.doc_id, doc.doc_id
                    )));
                }
                if m.tok_start >= m.tok_end {
                    return Err(Error::Validation(format!(
                        "mention `{id}`: tok_end {} must exceed tok_start {}",
                        m.tok_end, m.tok_start
                    )));
                }
                let Some(sentence) = doc.sentences.get(m.sent_idx) else {
                    return Err(Error::Validation(format!(
                        "mention `{id}`: sentence {} out of range ({} sentences)",
                        m.sent_idx,
                        doc.sentences.len()
                    )));
                };
                if m.tok_end > sentence.len() {
                    return Err(Error::Validation(format!(
                        "mention `{id}`: span {}..{} out of range ({} tokens)",
                        m.tok_start,
                        m.tok_end,
                        sentence.len()
                    )));
                }
                if m.head_lemma.as_deref().is_none_or(str::is_empty) {
                    report.missing_lemma.push(id.clone());
                }
                if m.event_type.is_none() {
                    report.missing_type.push(id.clone());
                }
            }
            if doc
                .mentions
                .windows(2)
                .any(|w| w[0].position() > w[1].position())
            {
                return Err(Error::Validation(format!(
                    "document `{}`: mentions not in document order",
                    doc.doc_id
                )));
            }
            report.mentions += doc.mentions.len();
        }
        Ok(report)
    }

    pub fn mention_ids(&self) -> impl Iterator<Item = &str> {
        self.documents
            .iter()
            .flat_map(|d| d.mentions.iter().map(|m| m.mention_id.as_str()))
    }

    pub fn num_mentions(&self) -> usize {
        self.documents.iter().map(|d| d.mentions.len()).sum()
    }
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Corpus::from_json(&text, &path.display().to_string())
}

/// Gold chains of a document; mentions without a chain id are singletons
/// named after themselves.
pub fn gold_chains(doc: &Document) -> Vec<CorefChain> {
    let mut chains: Vec<CorefChain> = Vec::new();
    let mut by_id: BTreeMap<&str, usize> = BTreeMap::new();
    for m in &doc.mentions {
        match m.chain_id.as_deref() {
            Some(chain) => {
                let idx = *by_id.entry(chain).or_insert_with(|| {
                    chains.push(CorefChain {
                        chain_id: chain.to_string(),
                        member_ids: Vec::new(),
                    });
                    chains.len() - 1
                });
                chains[idx].member_ids.push(m.mention_id.clone());
            }
            None => chains.push(CorefChain {
                chain_id: m.mention_id.clone(),
                member_ids: vec![m.mention_id.clone()],
            }),
        }
    }
    chains
}

pub fn gold_clustering(doc: &Document) -> Clustering {
    Clustering {
        doc_id: doc.doc_id.clone(),
        clusters: gold_chains(doc).into_iter().map(|c| c.member_ids).collect(),
    }
}

/// Exact or partial (substring either way) head-lemma match. Empty lemmas
/// never match.
pub fn lemma_match(a: &str, b: &str) -> bool {
    if a.is_empty() || b.is_empty() {
        return false;
    }
    a == b || a.contains(b) || b.contains(a)
}

/// [`lemma_match`] over optional lemmas; a missing lemma never matches.
pub fn mention_lemma_match(a: &EventMention, b: &EventMention) -> bool {
    match (a.head_lemma.as_deref(), b.head_lemma.as_deref()) {
        (Some(x), Some(y)) => lemma_match(x, y),
        _ => false,
    }
}

/// Equal, non-null event types.
pub fn same_type(a: &EventMention, b: &EventMention) -> bool {
    matches!((&a.event_type, &b.event_type), (Some(x), Some(y)) if x == y)
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    const THREE: &str = r#"{"documents":[{"doc_id":"d1",
        "sentences":[["Rebels","captured","the","town"],["They","seized","it"],["The","capture","ended"]],
        "mentions":[
          {"mention_id":"m3","sent_idx":2,"tok_start":1,"tok_end":2,"event_type":"Attack","head_lemma":"capture","chain_id":"e1"},
          {"mention_id":"m1","sent_idx":0,"tok_start":1,"tok_end":2,"event_type":"Attack","head_lemma":"capture","chain_id":"e1","note":"ignored"},
          {"mention_id":"m2","sent_idx":1,"tok_start":1,"tok_end":2,"event_type":"Attack","head_lemma":"seize","chain_id":null}
        ]}]}"#;

    fn sorted(c: &Clustering) -> Vec<Vec<String>> {
        let mut v: Vec<Vec<String>> = c
            .clusters
            .iter()
            .map(|c| {
                let mut c = c.clone();
                c.sort();
                c
            })
            .collect();
        v.sort();
        v
    }

    #[test]
    fn loads_and_orders_mentions() {
        let corpus = Corpus::from_json(THREE, "fixture").unwrap();
        assert_eq!(corpus.documents.len(), 1);
        let doc = &corpus.documents[0];
        let ids: Vec<_> = doc.mentions.iter().map(|m| m.mention_id.as_str()).collect();
        assert_eq!(ids, ["m1", "m2", "m3"]);
        assert!(doc.mentions.iter().all(|m| m.doc_id == "d1"));
        assert_eq!(doc.trigger_tokens(&doc.mentions[1]), ["seized"]);
        assert_eq!(
            sorted(&gold_clustering(doc)),
            vec![vec!["m1".to_string(), "m3".into()], vec!["m2".into()]]
        );
    }

    #[test]
    fn empty_document_list_is_valid() {
        let corpus = Corpus::from_json(r#"{"documents":[]}"#, "empty").unwrap();
        assert!(corpus.documents.is_empty());
    }

    #[test]
    fn rejects_empty_span() {
        let bad = THREE.replace(
            r#""mention_id":"m2","sent_idx":1,"tok_start":1,"tok_end":2"#,
            r#""mention_id":"m2","sent_idx":1,"tok_start":1,"tok_end":1"#,
        );
        let err = Corpus::from_json(&bad, "bad").unwrap_err();
        assert!(
            matches!(&err, Error::Validation(m) if m.contains("m2")),
            "{err}"
        );
    }

    #[test]
    fn rejects_out_of_range_span_and_duplicates() {
        let bad = THREE.replace(
            r#""tok_start":1,"tok_end":2,"event_type":"Attack","head_lemma":"seize""#,
            r#""tok_start":1,"tok_end":9,"event_type":"Attack","head_lemma":"seize""#,
        );
        assert!(matches!(
            Corpus::from_json(&bad, "bad"),
            Err(Error::Validation(_))
        ));
        let dup = THREE.replace(r#""mention_id":"m3""#, r#""mention_id":"m1""#);
        let err = Corpus::from_json(&dup, "dup").unwrap_err();
        assert!(err.to_string().contains("duplicate mention_id"));
    }

    #[test]
    fn malformed_json_reports_location() {
        let err =
            Corpus::from_json("{\"documents\": [\n{\"doc_id\": 3}]}", "broken.json").unwrap_err();
        match err {
            Error::Parse { context, message } => {
                assert_eq!(context, "broken.json");
                assert!(message.contains("line 2"), "{message}");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn gold_clustering_cases() {
        let d = doc(vec![
            mention("m1", 0, None, None, Some("e1")),
            mention("m2", 1, None, None, None),
            mention("m3", 2, None, None, Some("e1")),
        ]);
        assert_eq!(
            sorted(&gold_clustering(&d)),
            vec![vec!["m1".to_string(), "m3".into()], vec!["m2".into()]]
        );

        let d = doc((0..3)
            .map(|i| mention(&format!("m{i}"), i, None, None, None))
            .collect());
        assert_eq!(gold_clustering(&d).clusters.len(), 3);

        let d = doc((0..4)
            .map(|i| mention(&format!("m{i}"), i, None, None, Some("e")))
            .collect());
        let g = gold_clustering(&d);
        assert_eq!(g.clusters.len(), 1);
        assert_eq!(g.clusters[0].len(), 4);
    }

    #[test]
    fn lemma_matching() {
        assert!(lemma_match("capture", "capture"));
        assert!(lemma_match("attack", "counterattack"));
        assert!(lemma_match("counterattack", "attack"));
        assert!(!lemma_match("seize", "capture"));
        assert!(!lemma_match("", "capture"));
        let a = mention("a", 0, None, None, None);
        let b = mention("b", 1, None, Some("x"), None);
        assert!(!mention_lemma_match(&a, &b));
    }

    #[test]
    fn report_flags_missing_fields() {
        let corpus = Corpus {
            documents: vec![doc(vec![
                mention("m1", 0, Some("A"), None, None),
                mention("m2", 1, None, Some("go"), None),
            ])],
            split_name: None,
        };
        let r = corpus.validate().unwrap();
        assert_eq!(r.missing_lemma, ["m1"]);
        assert_eq!(r.missing_type, ["m2"]);
    }

    #[test]
    fn round_trip_is_identity() {
        let corpus = Corpus::from_json(THREE, "fixture").unwrap();
        let again = Corpus::from_json(&corpus.to_json(), "again").unwrap();
        assert_eq!(corpus, again);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_doc() -> impl Strategy<Value = Document> {
            prop::collection::vec(
                (
                    0usize..4,
                    proptest::option::of(0u8..3),
                    proptest::option::of("[a-c]{1,3}"),
                ),
                0..8,
            )
            .prop_map(|specs| {
                let mentions = specs
                    .into_iter()
                    .enumerate()
                    .map(|(i, (sent, chain, lemma))| EventMention {
                        mention_id: format!("m{i}"),
                        doc_id: "d".into(),
                        sent_idx: sent,
                        tok_start: i,
                        tok_end: i + 1,
                        event_type: chain.map(|c| format!("T{c}")),
                        head_lemma: lemma,
                        chain_id: chain.map(|c| format!("e{c}")),
                    })
                    .collect();
                let mut doc = Document {
                    doc_id: "d".into(),
                    sentences: vec![vec!["w".to_string(); 8]; 4],
                    mentions,
                };
                doc.normalize();
                doc
            })
        }

        proptest! {
            #[test]
            fn gold_is_a_partition(doc in arb_doc()) {
                let g = gold_clustering(&doc);
                let mut all: Vec<&String> = g.clusters.iter().flatten().collect();
                prop_assert!(g.clusters.iter().all(|c| !c.is_empty()));
                all.sort();
                let n = all.len();
                all.dedup();
                prop_assert_eq!(all.len(), n);
                prop_assert_eq!(n, doc.mentions.len());
            }

            #[test]
            fn lemma_match_symmetric_reflexive(a in "[a-z]{1,6}", b in "[a-z]{1,6}") {
                prop_assert!(lemma_match(&a, &a));
                prop_assert_eq!(lemma_match(&a, &b), lemma_match(&b, &a));
            }

            #[test]
            fn corpus_round_trip(doc in arb_doc()) {
                let corpus = Corpus { documents: vec![doc], split_name: Some(Split::Dev) };
                let again = Corpus::from_json(&corpus.to_json(), "rt").unwrap();
                prop_assert_eq!(corpus, again);
            }
        }
    }
}
