//! Input transforms shared by every model: per-band standardization and the
//! optional constant channel.

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use crate::data::PatchDataset;
use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

/// Standard deviations at or below this are treated as zero variance.
pub const STD_FLOOR: f64 = 1e-12;

/// Per-slice affine standardization along one mode (the spectral mode for
/// hyperspectral patches).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaling {
    /// Zero-based mode the statistics are indexed by.
    pub mode: usize,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl FeatureScaling {
    /// Mean and population standard deviation of every slice along the last
    /// mode, pooled over all entries of all patches.
    pub fn fit(data: &PatchDataset) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::Input("cannot fit feature scaling on an empty dataset".into()));
        }
        let shape = data.shape();
        let mode = shape.len() - 1;
        let bands = shape[mode];
        let plane = shape[..mode].iter().product::<usize>();
        let count = (plane * data.len()) as f64;

        let mut mean = vec![0.0; bands];
        let mut lo = vec![f64::INFINITY; bands];
        let mut hi = vec![f64::NEG_INFINITY; bands];
        for x in data.patches() {
            for (b, slice) in x.as_slice().chunks_exact(plane).enumerate() {
                for &v in slice {
                    mean[b] += v;
                    lo[b] = lo[b].min(v);
                    hi[b] = hi[b].max(v);
                }
            }
        }
        for b in 0..bands {
            // Constant slices get their exact value as mean so they centre to 0.
            mean[b] = if lo[b] == hi[b] { lo[b] } else { mean[b] / count };
        }
        let mut var = vec![0.0; bands];
        for x in data.patches() {
            for (b, slice) in x.as_slice().chunks_exact(plane).enumerate() {
                var[b] += slice.iter().map(|v| (v - mean[b]).powi(2)).sum::<f64>();
            }
        }
        let std = var.into_iter().map(|s| (s / count).sqrt()).collect();
        Ok(Self { mode, mean, std })
    }

    pub fn apply(&self, x: &DenseTensor) -> Result<DenseTensor> {
        let shape = x.shape();
        if self.mode >= shape.len() || shape[self.mode] != self.mean.len() {
            return Err(Error::Shape(format!(
                "scaling for {} slices along mode {} applied to shape {:?}",
                self.mean.len(),
                self.mode + 1,
                shape
            )));
        }
        let below: usize = shape[..self.mode].iter().product();
        let extent = shape[self.mode];
        let mut out = x.clone();
        for (i, v) in out.as_mut_slice().iter_mut().enumerate() {
            let b = (i / below) % extent;
            let s = if self.std[b] > STD_FLOOR { self.std[b] } else { 1.0 };
            *v = (*v - self.mean[b]) / s;
        }
        Ok(out)
    }
}

/// Appends one slice of ones along the last mode, so that a rank-1 weight
/// gains a free coefficient acting as a bias.
pub fn append_ones_slice(x: &DenseTensor) -> DenseTensor {
    let mut shape = x.shape().to_vec();
    let plane: usize = shape[..shape.len() - 1].iter().product();
    *shape.last_mut().unwrap() += 1;
    let mut data = Vec::with_capacity(x.len() + plane);
    data.extend_from_slice(x.as_slice());
    data.extend(std::iter::repeat_n(1.0, plane));
    DenseTensor::new(shape, data).expect("shape grows with the buffer")
}

/// What a model does to a raw input before its weights see it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InputTransform {
    pub scaling: Option<FeatureScaling>,
    pub augment_ones: bool,
}

impl InputTransform {
    pub fn apply<'a>(&self, x: &'a DenseTensor) -> Result<Cow<'a, DenseTensor>> {
        if !x.is_finite() {
            return Err(Error::Input("input tensor contains non-finite values".into()));
        }
        let mut out = Cow::Borrowed(x);
        if let Some(s) = &self.scaling {
            out = Cow::Owned(s.apply(&out)?);
        }
        if self.augment_ones {
            out = Cow::Owned(append_ones_slice(&out));
        }
        Ok(out)
    }

    /// Shape of the weight tensor that consumes inputs of `input_shape`.
    pub fn weight_shape(&self, input_shape: &[usize]) -> Vec<usize> {
        let mut shape = input_shape.to_vec();
        if self.augment_ones {
            if let Some(last) = shape.last_mut() {
                *last += 1;
            }
        }
        shape
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ones_slice_is_appended_last() {
        let x = DenseTensor::from_fn(&[2, 2, 2], |i| (i[0] + 2 * i[1] + 4 * i[2]) as f64);
        let y = append_ones_slice(&x);
        assert_eq!(y.shape(), &[2, 2, 3]);
        for r in 0..2 {
            for c in 0..2 {
                assert_eq!(y.get(&[r, c, 2]), 1.0);
                assert_eq!(y.get(&[r, c, 1]), x.get(&[r, c, 1]));
            }
        }
    }

    #[test]
    fn non_finite_input_rejected() {
        let x = DenseTensor::new(vec![2], vec![1.0, f64::NAN]).unwrap();
        assert!(matches!(
            InputTransform::default().apply(&x),
            Err(Error::Input(_))
        ));
    }
}
