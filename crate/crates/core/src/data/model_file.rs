//! JSON model files.
//!
//! Weights are written as nested row arrays using the shortest decimal form
//! that parses back to the identical `f64`, so a saved model predicts
//! exactly like the one in memory.

use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fnn::Rank1FnnModel;
use crate::linear::TensorLrModel;
use crate::preprocess::{FeatureScaling, InputTransform};
use crate::tensor::{CpFactors, DenseTensor};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// How the training split was drawn, so evaluation can redraw it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub samples_per_class: usize,
    pub window: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    TensorLr(TensorLrModel),
    Rank1Fnn(Rank1FnnModel),
}

impl Model {
    pub fn model_type(&self) -> &'static str {
        match self {
            Model::TensorLr(_) => "tensor_lr",
            Model::Rank1Fnn(_) => "rank1_fnn",
        }
    }

    pub fn input_shape(&self) -> &[usize] {
        match self {
            Model::TensorLr(m) => m.input_shape(),
            Model::Rank1Fnn(m) => m.input_shape(),
        }
    }

    pub fn num_classes(&self) -> usize {
        match self {
            Model::TensorLr(m) => m.num_classes(),
            Model::Rank1Fnn(m) => m.num_classes(),
        }
    }

    pub fn transform(&self) -> &InputTransform {
        match self {
            Model::TensorLr(m) => m.transform(),
            Model::Rank1Fnn(m) => m.transform(),
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            Model::TensorLr(m) => m.param_count(),
            Model::Rank1Fnn(m) => m.param_count(),
        }
    }

    pub fn predict_proba(&self, x: &DenseTensor) -> Result<Vec<f64>> {
        match self {
            Model::TensorLr(m) => m.predict_proba(x),
            Model::Rank1Fnn(m) => m.forward(x),
        }
    }

    pub fn predict_class(&self, x: &DenseTensor) -> Result<usize> {
        match self {
            Model::TensorLr(m) => m.predict_class(x),
            Model::Rank1Fnn(m) => m.predict_class(x),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub model: Model,
    pub provenance: Option<Provenance>,
}

impl ModelFile {
    pub fn new(model: Model) -> Self {
        Self {
            model,
            provenance: None,
        }
    }

    pub fn to_json(&self) -> String {
        let (factors, num_hidden, output_weights) = match &self.model {
            Model::TensorLr(m) => (m.weights(), None, None),
            Model::Rank1Fnn(m) => (m.hidden(), Some(m.num_hidden()), Some(rows(m.output()))),
        };
        let t = self.model.transform();
        let doc = Document {
            format_version: MODEL_FORMAT_VERSION,
            model_type: self.model.model_type().into(),
            input_shape: self.model.input_shape().to_vec(),
            num_classes: self.model.num_classes(),
            num_hidden,
            augment_ones: t.augment_ones,
            normalization: t.scaling.clone(),
            factors: factors.factors().iter().map(rows).collect(),
            output_weights,
            provenance: self.provenance.clone(),
        };
        let mut s = serde_json::to_string(&doc).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Format(format!("model file is not JSON: {e}")))?;
        match value.get("format_version").and_then(|v| v.as_u64()) {
            Some(v) if v == MODEL_FORMAT_VERSION as u64 => {}
            Some(v) => {
                return Err(Error::Format(format!(
                    "format_version {v} is not supported (expected {MODEL_FORMAT_VERSION})"
                )))
            }
            None => return Err(Error::Format("missing or invalid field `format_version`".into())),
        }
        let doc: Document = serde_json::from_value(value).map_err(|e| Error::Format(e.to_string()))?;
        doc.into_model_file()
    }
}

#[derive(Serialize, Deserialize)]
struct Document {
    format_version: u32,
    model_type: String,
    input_shape: Vec<usize>,
    num_classes: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    num_hidden: Option<usize>,
    augment_ones: bool,
    normalization: Option<FeatureScaling>,
    factors: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    output_weights: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<Provenance>,
}

fn rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn matrix(field: &str, rows: Vec<Vec<f64>>, expect_rows: usize, expect_cols: usize) -> Result<Array2<f64>> {
    let bad = || {
        Error::Format(format!(
            "field `{field}` must be a {expect_rows} x {expect_cols} matrix"
        ))
    };
    if rows.len() != expect_rows || rows.iter().any(|r| r.len() != expect_cols) {
        return Err(bad());
    }
    let data: Vec<f64> = rows.into_iter().flatten().collect();
    Array2::from_shape_vec((expect_rows, expect_cols), data).map_err(|_| bad())
}

impl Document {
    fn into_model_file(self) -> Result<ModelFile> {
        let fmt = |msg: String| Err(Error::Format(msg));
        if self.input_shape.is_empty() || self.input_shape.contains(&0) {
            return fmt(format!("field `input_shape` is invalid: {:?}", self.input_shape));
        }
        if self.num_classes < 2 {
            return fmt("field `num_classes` must be at least 2".into());
        }
        let transform = InputTransform {
            scaling: self.normalization,
            augment_ones: self.augment_ones,
        };
        if let Some(s) = &transform.scaling {
            let last = self.input_shape.len() - 1;
            let bands = self.input_shape[last];
            if s.mode != last || s.mean.len() != bands || s.std.len() != bands {
                return fmt("field `normalization` does not match `input_shape`".into());
            }
        }
        let weight_shape = transform.weight_shape(&self.input_shape);
        if self.factors.len() != weight_shape.len() {
            return fmt(format!(
                "field `factors` has {} matrices, `input_shape` needs {}",
                self.factors.len(),
                weight_shape.len()
            ));
        }
        let rank = match self.model_type.as_str() {
            "tensor_lr" => self.num_classes,
            "rank1_fnn" => match self.num_hidden {
                Some(q) if q > 0 => q,
                _ => return fmt("missing or invalid field `num_hidden`".into()),
            },
            other => return fmt(format!("field `model_type` has unknown value {other:?}")),
        };
        let factors = self
            .factors
            .into_iter()
            .zip(&weight_shape)
            .map(|(m, &p)| matrix("factors", m, p, rank))
            .collect::<Result<Vec<_>>>()?;
        let factors = CpFactors::new(factors)?;
        let model = match self.model_type.as_str() {
            "tensor_lr" => Model::TensorLr(TensorLrModel::new(factors, self.input_shape, transform)?),
            _ => {
                let out = self
                    .output_weights
                    .ok_or_else(|| Error::Format("missing field `output_weights`".into()))?;
                let out = matrix("output_weights", out, rank, self.num_classes)?;
                Model::Rank1Fnn(Rank1FnnModel::new(factors, out, self.input_shape, transform)?)
            }
        };
        Ok(ModelFile {
            model,
            provenance: self.provenance,
        })
    }
}

pub fn save_model(path: impl AsRef<Path>, file: &ModelFile) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, file.to_json()).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelFile> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ModelFile::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::train::TrainConfig;

    fn lr() -> ModelFile {
        let cfg = TrainConfig {
            seed: 4,
            init_scale: 0.7,
            ..Default::default()
        };
        let mut m = TensorLrModel::init(&[2, 3, 4], 3, &cfg).unwrap();
        m.transform_mut().scaling = Some(FeatureScaling {
            mode: 2,
            mean: vec![0.1, 1.0 / 3.0, -2.5, 1e-300],
            std: vec![1.0, 0.5, 0.0, 7.0],
        });
        ModelFile {
            model: Model::TensorLr(m),
            provenance: Some(Provenance {
                seed: 9,
                samples_per_class: 50,
                window: 5,
            }),
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let f = lr();
        let back = ModelFile::from_json(&f.to_json()).unwrap();
        assert_eq!(back, f);

        let cfg = TrainConfig {
            augment_ones: true,
            ..Default::default()
        };
        let fnn = ModelFile::new(Model::Rank1Fnn(Rank1FnnModel::init(&[2, 2, 3], 4, 2, &cfg).unwrap()));
        assert_eq!(ModelFile::from_json(&fnn.to_json()).unwrap(), fnn);
    }

    #[test]
    fn rejects_bad_documents() {
        let text = lr().to_json();
        let check = |t: String, needle: &str| {
            let err = ModelFile::from_json(&t).unwrap_err();
            assert!(matches!(err, Error::Format(_)), "{err}");
            assert!(err.to_string().contains(needle), "{err} lacks {needle}");
        };
        check(text.replace("\"format_version\":1", "\"format_version\":2"), "format_version");
        check(text.replace("\"tensor_lr\"", "\"svm\""), "model_type");
        check(text.replace("\"tensor_lr\"", "\"rank1_fnn\""), "num_hidden");
        check(text.replace("\"input_shape\":[2,3,4]", "\"input_shape\":[2,3,5]"), "normalization");
        check(text.replace("\"num_classes\":3,", ""), "num_classes");
        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v["normalization"] = serde_json::Value::Null;
        v["input_shape"] = serde_json::json!([2, 4, 4]);
        check(v.to_string(), "factors");
    }
}
