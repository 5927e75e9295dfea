use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::nn::{Activation, DenseLayer};
use crate::{Error, Result};

use super::{CosineThresholdModel, CosineTransformModel, LogisticRegressorModel};

pub const CHECKPOINT_FORMAT: &str = "evlink-ckpt";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Any persisted scorer.
#[derive(Clone, Debug, PartialEq)]
pub enum Checkpoint {
    Cosine(CosineThresholdModel),
    CosineTransform(CosineTransformModel),
    Regressor(LogisticRegressorModel),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Kind {
    Cosine,
    CosineTransform,
    Regressor,
}

#[derive(Serialize, Deserialize)]
struct LayerJson {
    rows: usize,
    cols: usize,
    weights: Vec<f32>,
    bias: Vec<f32>,
    activation: Activation,
}

#[derive(Serialize, Deserialize)]
struct FrozenJson {
    dim: usize,
    layers: Vec<LayerJson>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointJson {
    format: String,
    version: u32,
    kind: Kind,
    dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    threshold: Option<f64>,
    layers: Vec<LayerJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    frozen_transform: Option<FrozenJson>,
}

impl From<&DenseLayer> for LayerJson {
    fn from(l: &DenseLayer) -> Self {
        Self {
            rows: l.rows(),
            cols: l.cols(),
            weights: l.weights.clone(),
            bias: l.bias.clone(),
            activation: l.activation,
        }
    }
}

impl TryFrom<LayerJson> for DenseLayer {
    type Error = Error;

    fn try_from(l: LayerJson) -> Result<Self> {
        if l.weights.iter().chain(&l.bias).any(|v| !v.is_finite()) {
            return Err(Error::Checkpoint("non-finite parameter".into()));
        }
        DenseLayer::new(l.rows, l.cols, l.weights, l.bias, l.activation)
            .map_err(|e| Error::Checkpoint(e.to_string()))
    }
}

fn frozen_json(t: &CosineTransformModel) -> FrozenJson {
    FrozenJson {
        dim: t.dim(),
        layers: vec![t.layer().into()],
    }
}

fn transform_from(dim: usize, mut layers: Vec<LayerJson>) -> Result<CosineTransformModel> {
    if layers.len() != 1 {
        return Err(Error::Checkpoint(format!(
            "cosine transform needs exactly one layer, found {}",
            layers.len()
        )));
    }
    let t = CosineTransformModel::from_layer(layers.remove(0).try_into()?)
        .map_err(|e| Error::Checkpoint(e.to_string()))?;
    if t.dim() != dim {
        return Err(Error::Checkpoint(format!(
            "transform dim {} but header says {dim}",
            t.dim()
        )));
    }
    Ok(t)
}

impl Checkpoint {
    pub fn dim(&self) -> Option<usize> {
        match self {
            Checkpoint::Cosine(m) => m.transform.as_ref().map(CosineTransformModel::dim),
            Checkpoint::CosineTransform(t) => Some(t.dim()),
            Checkpoint::Regressor(r) => Some(r.dim()),
        }
    }

    pub fn to_json(&self) -> String {
        let doc = match self {
            Checkpoint::Cosine(m) => CheckpointJson {
                format: CHECKPOINT_FORMAT.into(),
                version: CHECKPOINT_VERSION,
                kind: Kind::Cosine,
                // A bare cosine model works with any dimension.
                dim: self.dim().unwrap_or(0),
                threshold: Some(m.threshold()),
                layers: m.transform.iter().map(|t| t.layer().into()).collect(),
                frozen_transform: None,
            },
            Checkpoint::CosineTransform(t) => CheckpointJson {
                format: CHECKPOINT_FORMAT.into(),
                version: CHECKPOINT_VERSION,
                kind: Kind::CosineTransform,
                dim: t.dim(),
                threshold: None,
                layers: vec![t.layer().into()],
                frozen_transform: None,
            },
            Checkpoint::Regressor(r) => CheckpointJson {
                format: CHECKPOINT_FORMAT.into(),
                version: CHECKPOINT_VERSION,
                kind: Kind::Regressor,
                dim: r.dim(),
                threshold: None,
                layers: vec![(&r.hidden).into(), (&r.output).into()],
                frozen_transform: r.frozen_transform.as_ref().map(frozen_json),
            },
        };
        let mut s = serde_json::to_string(&doc).expect("checkpoint serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: CheckpointJson = serde_json::from_str(text)
            .map_err(|e| Error::Checkpoint(format!("malformed checkpoint: {e}")))?;
        if doc.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!(
                "unknown format {:?}",
                doc.format
            )));
        }
        if doc.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint version {} (expected {CHECKPOINT_VERSION})",
                doc.version
            )));
        }
        match doc.kind {
            Kind::Cosine => {
                let threshold = doc.threshold.ok_or_else(|| {
                    Error::Checkpoint("cosine checkpoint without threshold".into())
                })?;
                let transform = if doc.layers.is_empty() {
                    None
                } else {
                    Some(transform_from(doc.dim, doc.layers)?)
                };
                let m = CosineThresholdModel::new(threshold, transform)
                    .map_err(|e| Error::Checkpoint(e.to_string()))?;
                Ok(Checkpoint::Cosine(m))
            }
            Kind::CosineTransform => Ok(Checkpoint::CosineTransform(transform_from(
                doc.dim, doc.layers,
            )?)),
            Kind::Regressor => {
                let [hidden, output]: [LayerJson; 2] =
                    doc.layers.try_into().map_err(|l: Vec<_>| {
                        Error::Checkpoint(format!("regressor needs two layers, found {}", l.len()))
                    })?;
                let frozen = doc
                    .frozen_transform
                    .map(|f| transform_from(f.dim, f.layers))
                    .transpose()?;
                let r = LogisticRegressorModel::from_layers(
                    hidden.try_into()?,
                    output.try_into()?,
                    frozen,
                )
                .map_err(|e| Error::Checkpoint(e.to_string()))?;
                if r.dim() != doc.dim {
                    return Err(Error::Checkpoint(format!(
                        "regressor dim {} but header says {}",
                        r.dim(),
                        doc.dim
                    )));
                }
                Ok(Checkpoint::Regressor(r))
            }
        }
    }
}

pub fn save_checkpoint(checkpoint: &Checkpoint, path: &Path) -> Result<()> {
    std::fs::write(path, checkpoint.to_json()).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Checkpoint::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pairs::joint_representation;
    use crate::rng;
    use crate::scorer::regressor_decide;
    use proptest::prelude::*;
    use rand::Rng as _;

    fn transform(seed: u64, dim: usize) -> CosineTransformModel {
        let mut r = rng::stream(seed, "t");
        let mut l = DenseLayer::identity(dim);
        for w in &mut l.weights {
            *w += r.random_range(-0.1..0.1f32);
        }
        CosineTransformModel::from_layer(l).unwrap()
    }

    #[test]
    fn cosine_threshold_is_exact() {
        let m = CosineThresholdModel::new(0.55, None).unwrap();
        let json = Checkpoint::Cosine(m.clone()).to_json();
        assert!(json.contains("\"threshold\":0.55"), "{json}");
        assert_eq!(Checkpoint::from_json(&json).unwrap(), Checkpoint::Cosine(m));
    }

    #[test]
    fn regressor_round_trip_decisions() {
        let mut r = rng::stream(5, "ckpt");
        let model = LogisticRegressorModel::with_hidden_units(4, 16, &mut r)
            .with_frozen_transform(transform(2, 4))
            .unwrap();
        let loaded =
            match Checkpoint::from_json(&Checkpoint::Regressor(model.clone()).to_json()).unwrap() {
                Checkpoint::Regressor(m) => m,
                other => panic!("{other:?}"),
            };
        assert_eq!(loaded, model);
        for _ in 0..1000 {
            let e1: Vec<f32> = (0..4).map(|_| r.random_range(-2.0..2.0)).collect();
            let e2: Vec<f32> = (0..4).map(|_| r.random_range(-2.0..2.0)).collect();
            let f = joint_representation(&e1, &e2).unwrap();
            assert_eq!(
                regressor_decide(&model, &f).unwrap(),
                regressor_decide(&loaded, &f).unwrap()
            );
        }
    }

    #[test]
    fn rejects_truncated_and_mismatched() {
        let json = Checkpoint::CosineTransform(transform(1, 3)).to_json();
        assert!(matches!(
            Checkpoint::from_json(&json[..json.len() / 2]),
            Err(Error::Checkpoint(_))
        ));
        let v2 = json.replace("\"version\":1", "\"version\":2");
        assert!(Checkpoint::from_json(&v2).is_err());
        let bad_dim = json.replace("\"dim\":3", "\"dim\":4");
        assert!(Checkpoint::from_json(&bad_dim).is_err());
        let bad_rows = json.replacen("\"rows\":3", "\"rows\":2", 1);
        assert!(Checkpoint::from_json(&bad_rows).is_err());
    }

    proptest! {
        #[test]
        fn f32_parameters_round_trip_bitwise(ws in proptest::collection::vec(any::<f32>().prop_filter("finite", |v| v.is_finite()), 4)) {
            let l = DenseLayer::new(2, 2, ws, vec![0.0, -0.0], Activation::Identity).unwrap();
            let t = CosineTransformModel::from_layer(l).unwrap();
            let back = match Checkpoint::from_json(&Checkpoint::CosineTransform(t.clone()).to_json()).unwrap() {
                Checkpoint::CosineTransform(t) => t,
                _ => unreachable!(),
            };
            prop_assert_eq!(back.checksum(), t.checksum());
        }
    }
}
