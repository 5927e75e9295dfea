//! Synthetic corpus with planted chains and noisy chain-centroid embeddings.
//!
//! Each chain gets a centroid drawn from `N(0, I)` and every mention's vector
//! is `offset + centroid + N(0, σ²I)` with `σ = 1 / separation_ratio`. The
//! offset is one `N(0, anisotropy² I)` draw shared by the whole corpus, so
//! raw cosines are biased upwards the way contextual embeddings are and a
//! learned transform has something to remove.

use std::path::Path;

use rand::seq::IndexedRandom;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::corpus::{Corpus, Document, EventMention, Split};
use crate::embedding::{write_embeddings, EmbeddingTable};
use crate::{rng, Error, Result};

const TYPES: [(&str, [&str; 4]); 6] = [
    ("Attack", ["attack", "bomb", "strike", "shoot"]),
    ("Transport", ["move", "travel", "arrive", "deploy"]),
    ("Die", ["die", "kill", "perish", "death"]),
    ("Meet", ["meet", "talk", "summit", "gather"]),
    ("Arrest-Jail", ["arrest", "detain", "jail", "capture"]),
    ("Elect", ["elect", "vote", "win", "appoint"]),
];

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub docs: usize,
    pub dim: usize,
    pub min_mentions: usize,
    pub max_mentions: usize,
    /// Chance that a mention starts a new chain instead of joining one.
    pub new_chain_prob: f64,
    /// Chance that a mention keeps its chain's head lemma.
    pub lemma_keep_prob: f64,
    /// Centroid scale over noise scale.
    pub separation_ratio: f64,
    pub anisotropy: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            docs: 200,
            dim: 32,
            min_mentions: 3,
            max_mentions: 12,
            new_chain_prob: 0.5,
            lemma_keep_prob: 0.8,
            separation_ratio: 5.0,
            anisotropy: 1.0,
            seed: 7,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        if self.docs < 3 {
            return Err(Error::Config("synth needs at least 3 documents".into()));
        }
        if self.dim == 0 || self.min_mentions == 0 || self.min_mentions > self.max_mentions {
            return Err(Error::Config(
                "synth dim and mention range must be positive and ordered".into(),
            ));
        }
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if !prob(self.new_chain_prob) || !prob(self.lemma_keep_prob) {
            return Err(Error::Config(
                "synth probabilities must lie in [0, 1]".into(),
            ));
        }
        if self.separation_ratio.is_nan()
            || self.separation_ratio <= 0.0
            || self.anisotropy.is_nan()
            || self.anisotropy < 0.0
        {
            return Err(Error::Config(
                "synth separation ratio must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthData {
    pub train: Corpus,
    pub dev: Corpus,
    pub test: Corpus,
    /// Covers the mentions of all three splits.
    pub embeddings: EmbeddingTable,
}

impl SynthData {
    pub fn split(&self, split: Split) -> &Corpus {
        match split {
            Split::Train => &self.train,
            Split::Dev => &self.dev,
            Split::Test => &self.test,
        }
    }

    /// Writes `train.json`, `dev.json`, `test.json` and `embeddings.jsonl`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for split in [Split::Train, Split::Dev, Split::Test] {
            self.split(split).save(dir.join(format!("{split}.json")))?;
        }
        write_embeddings(&self.embeddings, dir.join("embeddings.jsonl"))
    }
}

fn gaussian(rng: &mut rng::Rng, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim)
        .map(|_| scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
        .collect()
}

/// Documents are split 60/20/20 into train, dev and test.
pub fn synth(config: &SynthConfig) -> Result<SynthData> {
    config.validate()?;
    let mut rng = rng::stream(config.seed, "synth");
    let offset = gaussian(&mut rng, config.dim, config.anisotropy);
    let noise = 1.0 / config.separation_ratio;
    let mut table = EmbeddingTable::new(config.dim)?.with_encoder("synthetic");

    let n_train = config.docs * 3 / 5;
    let n_dev = config.docs / 5;
    let mut corpora = [Corpus::default(), Corpus::default(), Corpus::default()];
    for (c, split) in corpora
        .iter_mut()
        .zip([Split::Train, Split::Dev, Split::Test])
    {
        c.split_name = Some(split);
    }

    for k in 0..config.docs {
        let (slot, split) = if k < n_train {
            (0, Split::Train)
        } else if k < n_train + n_dev {
            (1, Split::Dev)
        } else {
            (2, Split::Test)
        };
        let doc_id = format!("synth-{split}-{k:04}");
        let n = rng.random_range(config.min_mentions..=config.max_mentions);

        // (type index, lemma, centroid) per chain, and each mention's chain.
        let mut chains: Vec<(usize, &str, Vec<f64>)> = Vec::new();
        let mut member_of = Vec::with_capacity(n);
        for _ in 0..n {
            if chains.is_empty() || rng.random_bool(config.new_chain_prob) {
                let t = rng.random_range(0..TYPES.len());
                let lemma = *TYPES[t].1.choose(&mut rng).expect("nonempty");
                chains.push((t, lemma, gaussian(&mut rng, config.dim, 1.0)));
                member_of.push(chains.len() - 1);
            } else {
                member_of.push(rng.random_range(0..chains.len()));
            }
        }
        let mut sizes = vec![0usize; chains.len()];
        member_of.iter().for_each(|&c| sizes[c] += 1);

        let mut sentences = Vec::with_capacity(n);
        let mut mentions = Vec::with_capacity(n);
        for (i, &c) in member_of.iter().enumerate() {
            let (t, chain_lemma, centroid) = &chains[c];
            let lemma = if rng.random_bool(config.lemma_keep_prob) {
                *chain_lemma
            } else {
                *TYPES[*t].1.choose(&mut rng).expect("nonempty")
            };
            let mention_id = format!("{doc_id}-m{i}");
            let vector: Vec<f32> = gaussian(&mut rng, config.dim, noise)
                .into_iter()
                .zip(centroid)
                .zip(&offset)
                .map(|((e, c), o)| (o + c + e) as f32)
                .collect();
            table.insert(mention_id.clone(), vector)?;
            sentences.push(
                ["Officials", "said", lemma, "on", "Monday"]
                    .map(str::to_string)
                    .to_vec(),
            );
            mentions.push(EventMention {
                mention_id,
                doc_id: doc_id.clone(),
                sent_idx: i,
                tok_start: 2,
                tok_end: 3,
                event_type: Some(TYPES[*t].0.to_string()),
                head_lemma: Some(lemma.to_string()),
                chain_id: (sizes[c] > 1).then(|| format!("{doc_id}-c{c}")),
            });
        }
        corpora[slot].documents.push(Document {
            doc_id,
            sentences,
            mentions,
        });
    }
    let [train, dev, test] = corpora;
    Ok(SynthData {
        train,
        dev,
        test,
        embeddings: table,
    })
}
