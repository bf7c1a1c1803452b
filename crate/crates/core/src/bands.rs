//! Spectral band ranking from the weights of a trained tensor logistic
//! regression, and band subsetting of cubes and patch datasets.

use serde::{Deserialize, Serialize};

use crate::data::{HyperCube, PatchDataset};
use crate::error::{Error, Result};
use crate::linear::TensorLrModel;
use crate::preprocess::FeatureScaling;
use crate::tensor::DenseTensor;

/// Band scores and the bands sorted by descending score (ties to the lower
/// index). Band indices are zero-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandRanking {
    pub scores: Vec<f64>,
    pub order: Vec<usize>,
    pub source: String,
}

impl BandRanking {
    pub fn from_scores(scores: Vec<f64>, source: impl Into<String>) -> Self {
        let mut order: Vec<usize> = (0..scores.len()).collect();
        // Stable sort keeps lower indices first among equal scores.
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
        Self {
            scores,
            order,
            source: source.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// The `n` best bands.
    pub fn top(&self, n: usize) -> Result<&[usize]> {
        check_count(n, self.len())?;
        Ok(&self.order[..n])
    }
}

fn check_count(n: usize, bands: usize) -> Result<()> {
    if n == 0 || n > bands {
        return Err(Error::Bounds {
            mode: 3,
            index: n,
            extent: bands,
        });
    }
    Ok(())
}

/// `score_b = Σ_k |W_D[b, k]|` over the spectral (last) factor. The row fed
/// by an appended constant slice is not a band and is left out.
pub fn band_importance(model: &TensorLrModel) -> BandRanking {
    let bands = *model.input_shape().last().expect("models have at least one mode");
    let w = model.weights().factor(model.weights().ndim() - 1);
    let scores: Vec<f64> = (0..bands)
        .map(|b| w.row(b).iter().map(|v| v.abs()).sum())
        .collect();
    if model.transform().scaling.is_none() {
        log::warn!("band ranking from a model trained without feature normalization");
    }
    if scores.iter().all(|&s| s == 0.0) {
        log::warn!("all band scores are zero; the ranking is just the band order");
    }
    BandRanking::from_scores(scores, "tensor_lr")
}

/// Keeps the `n` best slices along the last mode, best first.
pub fn select_bands(x: &DenseTensor, ranking: &BandRanking, n: usize) -> Result<DenseTensor> {
    let shape = x.shape();
    let last = shape.len() - 1;
    if shape[last] != ranking.len() {
        return Err(Error::Shape(format!(
            "ranking covers {} bands, tensor has {}",
            ranking.len(),
            shape[last]
        )));
    }
    let keep = ranking.top(n)?;
    let plane: usize = shape[..last].iter().product();
    let mut data = Vec::with_capacity(plane * n);
    for &b in keep {
        data.extend_from_slice(&x.as_slice()[b * plane..(b + 1) * plane]);
    }
    let mut out_shape = shape.to_vec();
    out_shape[last] = n;
    DenseTensor::new(out_shape, data)
}

pub fn select_cube_bands(cube: &HyperCube, ranking: &BandRanking, n: usize) -> Result<HyperCube> {
    HyperCube::new(select_bands(cube.values(), ranking, n)?)
}

pub fn select_dataset_bands(data: &PatchDataset, ranking: &BandRanking, n: usize) -> Result<PatchDataset> {
    data.map_patches(|x| select_bands(x, ranking, n))
}

/// Standardizes every band with statistics of `data` itself; apply the
/// returned statistics to held-out data with [`apply_normalization`].
pub fn normalize_features(data: &PatchDataset) -> Result<(PatchDataset, FeatureScaling)> {
    let stats = FeatureScaling::fit(data)?;
    Ok((apply_normalization(data, &stats)?, stats))
}

pub fn apply_normalization(data: &PatchDataset, stats: &FeatureScaling) -> Result<PatchDataset> {
    data.map_patches(|x| stats.apply(x))
}
