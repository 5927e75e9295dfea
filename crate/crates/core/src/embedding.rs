//! Mention embedding tables.
//!
//! On disk a table is line-delimited JSON: an optional header line
//! `{"format":"evlink-emb","version":1,"dim":D,"encoder":"..."}` followed by
//! one `{"mention_id":...,"vector":[...]}` record per line. Components are
//! 32-bit floats written in shortest round-trip form, so a write/read cycle
//! is lossless.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::{Error, Result};

pub const FORMAT: &str = "evlink-emb";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    encoder: Option<String>,
    entries: BTreeMap<String, Vec<f32>>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    encoder: Option<String>,
}

#[derive(Serialize)]
struct RecordOut<'a> {
    mention_id: &'a str,
    vector: &'a [f32],
}

#[derive(Deserialize)]
struct Line {
    format: Option<String>,
    version: Option<u32>,
    dim: Option<usize>,
    encoder: Option<String>,
    mention_id: Option<String>,
    vector: Option<Vec<f32>>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Dimension("embedding dim must be positive".into()));
        }
        Ok(Self {
            dim,
            encoder: None,
            entries: BTreeMap::new(),
        })
    }

    pub fn with_encoder(mut self, encoder: impl Into<String>) -> Self {
        self.encoder = Some(encoder.into());
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn encoder(&self) -> Option<&str> {
        self.encoder.as_deref()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert(&mut self, id: impl Into<String>, vector: Vec<f32>) -> Result<()> {
        let id = id.into();
        if vector.len() != self.dim {
            return Err(Error::Dimension(format!(
                "mention `{id}` has {} components, table dim is {}",
                vector.len(),
                self.dim
            )));
        }
        if let Some(i) = vector.iter().position(|x| !x.is_finite()) {
            return Err(Error::Validation(format!(
                "mention `{id}` has a non-finite component at index {i}"
            )));
        }
        if self.entries.contains_key(&id) {
            return Err(Error::Validation(format!("duplicate mention_id `{id}`")));
        }
        self.entries.insert(id, vector);
        Ok(())
    }

    pub fn lookup(&self, id: &str) -> Result<&[f32]> {
        self.entries
            .get(id)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::MissingEmbedding(id.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Corpus mention ids with no vector, in corpus order.
    pub fn missing_for(&self, corpus: &Corpus) -> Vec<String> {
        corpus
            .mention_ids()
            .filter(|id| !self.entries.contains_key(*id))
            .map(str::to_string)
            .collect()
    }

    /// Fails with a missing-embedding error naming the first uncovered mention.
    pub fn check_coverage(&self, corpus: &Corpus) -> Result<()> {
        let missing = self.missing_for(corpus);
        match missing.first() {
            None => Ok(()),
            Some(first) => {
                log::error!(
                    "{} corpus mentions have no embedding (first: {first})",
                    missing.len()
                );
                Err(Error::MissingEmbedding(first.clone()))
            }
        }
    }

    pub fn to_jsonl(&self) -> String {
        let header = Header {
            format: FORMAT.to_string(),
            version: VERSION,
            dim: self.dim,
            encoder: self.encoder.clone(),
        };
        let mut out = serde_json::to_string(&header).expect("header serializes");
        out.push('\n');
        for (id, v) in &self.entries {
            let rec = RecordOut {
                mention_id: id,
                vector: v,
            };
            writeln!(
                out,
                "{}",
                serde_json::to_string(&rec).expect("record serializes")
            )
            .expect("string write");
        }
        out
    }

    pub fn from_jsonl(text: &str, expected_dim: Option<usize>, context: &str) -> Result<Self> {
        if expected_dim == Some(0) {
            return Err(Error::Dimension("expected dim must be positive".into()));
        }
        let mut dim = expected_dim;
        let mut encoder = None;
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let raw = raw.trim();
            if raw.is_empty() {
                continue;
            }
            let at = || format!("{context}:{}", lineno + 1);
            let line: Line = serde_json::from_str(raw).map_err(|e| Error::parse(at(), e))?;
            if let Some(format) = line.format {
                if lineno != 0 || !entries.is_empty() {
                    return Err(Error::parse(at(), "header must be the first line"));
                }
                if format != FORMAT {
                    return Err(Error::parse(
                        at(),
                        format_args!("unknown format `{format}`"),
                    ));
                }
                if line.version != Some(VERSION) {
                    return Err(Error::parse(at(), "unsupported version"));
                }
                let d = line
                    .dim
                    .ok_or_else(|| Error::parse(at(), "header missing dim"))?;
                if d == 0 {
                    return Err(Error::Dimension(format!("{}: header dim is 0", at())));
                }
                if let Some(exp) = expected_dim {
                    if exp != d {
                        return Err(Error::Dimension(format!(
                            "{}: header dim {d}, expected {exp}",
                            at()
                        )));
                    }
                }
                dim = Some(d);
                encoder = line.encoder;
                continue;
            }
            let id = line
                .mention_id
                .ok_or_else(|| Error::parse(at(), "record missing mention_id"))?;
            let vector = line
                .vector
                .ok_or_else(|| Error::parse(at(), format_args!("record `{id}` missing vector")))?;
            let d = *dim.get_or_insert(vector.len());
            if vector.len() != d {
                return Err(Error::Dimension(format!(
                    "mention `{id}` has {} components, expected {d}",
                    vector.len()
                )));
            }
            if vector.iter().any(|x| !x.is_finite()) {
                return Err(Error::Validation(format!(
                    "mention `{id}` has a non-finite component"
                )));
            }
            if entries.insert(id.clone(), vector).is_some() {
                return Err(Error::Validation(format!("duplicate mention_id `{id}`")));
            }
        }
        let dim = dim.ok_or_else(|| {
            Error::Dimension(format!("{context}: no header and no records, dim unknown"))
        })?;
        if dim == 0 {
            return Err(Error::Dimension(format!(
                "{context}: records have 0 components"
            )));
        }
        Ok(Self {
            dim,
            encoder,
            entries,
        })
    }
}

pub fn read_embeddings(
    path: impl AsRef<Path>,
    expected_dim: Option<usize>,
) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    EmbeddingTable::from_jsonl(&text, expected_dim, &path.display().to_string())
}

pub fn write_embeddings(table: &EmbeddingTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, table.to_jsonl()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_by_four() -> &'static str {
        "{\"mention_id\":\"a\",\"vector\":[1,2,3,4]}\n{\"mention_id\":\"b\",\"vector\":[0.5,-1,0,2.25]}\n"
    }

    #[test]
    fn reads_plain_records() {
        let t = EmbeddingTable::from_jsonl(two_by_four(), None, "t").unwrap();
        assert_eq!(t.dim(), 4);
        assert_eq!(t.len(), 2);
        assert_eq!(t.lookup("b").unwrap(), &[0.5, -1.0, 0.0, 2.25]);
    }

    #[test]
    fn mixed_dims_rejected() {
        let text = "{\"mention_id\":\"a\",\"vector\":[1,2,3,4]}\n{\"mention_id\":\"b\",\"vector\":[1,2,3,4,5]}\n";
        let err = EmbeddingTable::from_jsonl(text, None, "t").unwrap_err();
        assert!(
            matches!(&err, Error::Dimension(m) if m.contains("`b`")),
            "{err}"
        );
    }

    #[test]
    fn expected_dim_enforced() {
        let text = "{\"format\":\"evlink-emb\",\"version\":1,\"dim\":768}\n";
        let err = EmbeddingTable::from_jsonl(text, Some(1024), "t").unwrap_err();
        assert!(matches!(err, Error::Dimension(_)));
        let err = EmbeddingTable::from_jsonl(two_by_four(), Some(1024), "t").unwrap_err();
        assert!(matches!(err, Error::Dimension(_)));
    }

    #[test]
    fn header_dim_is_enforced_on_records() {
        let text = "{\"format\":\"evlink-emb\",\"version\":1,\"dim\":3,\"encoder\":\"x\"}\n{\"mention_id\":\"a\",\"vector\":[1,2,3,4]}\n";
        assert!(matches!(
            EmbeddingTable::from_jsonl(text, None, "t"),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn non_finite_and_duplicates_rejected() {
        let text = "{\"mention_id\":\"a\",\"vector\":[1e39,0]}\n";
        assert!(matches!(
            EmbeddingTable::from_jsonl(text, None, "t"),
            Err(Error::Validation(_))
        ));
        let text =
            "{\"mention_id\":\"a\",\"vector\":[1,0]}\n{\"mention_id\":\"a\",\"vector\":[1,0]}\n";
        assert!(matches!(
            EmbeddingTable::from_jsonl(text, None, "t"),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn lookup_missing_id() {
        let t = EmbeddingTable::from_jsonl(two_by_four(), None, "t").unwrap();
        assert!(matches!(t.lookup("zz"), Err(Error::MissingEmbedding(id)) if id == "zz"));
    }

    #[test]
    fn empty_table_and_zero_dim() {
        let t = EmbeddingTable::new(8).unwrap().with_encoder("none");
        let back = EmbeddingTable::from_jsonl(&t.to_jsonl(), None, "t").unwrap();
        assert_eq!(back, t);
        assert!(EmbeddingTable::new(0).is_err());
        assert!(EmbeddingTable::from_jsonl("", None, "t").is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.jsonl");
        let mut t = EmbeddingTable::new(3).unwrap();
        t.insert("m1", vec![0.1, 1.0 / 3.0, -7.5e-12]).unwrap();
        write_embeddings(&t, &path).unwrap();
        let back = read_embeddings(&path, Some(3)).unwrap();
        assert_eq!(back.lookup("m1").unwrap(), t.lookup("m1").unwrap());
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(
            rows in prop::collection::vec(prop::collection::vec(
                prop::num::f32::NORMAL | prop::num::f32::SUBNORMAL | prop::num::f32::ZERO, 5), 1..20)
        ) {
            let mut t = EmbeddingTable::new(5).unwrap();
            for (i, r) in rows.iter().enumerate() {
                t.insert(format!("m{i}"), r.clone()).unwrap();
            }
            let back = EmbeddingTable::from_jsonl(&t.to_jsonl(), Some(5), "rt").unwrap();
            for (id, v) in t.iter() {
                let w = back.lookup(id).unwrap();
                let a: Vec<u32> = v.iter().map(|x| x.to_bits()).collect();
                let b: Vec<u32> = w.iter().map(|x| x.to_bits()).collect();
                prop_assert_eq!(a, b);
            }
        }
    }
}
