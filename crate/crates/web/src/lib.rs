//! Browser demo. The plain functions do the work and are tested natively;
//! the `#[wasm_bindgen]` wrappers hand JSON strings to the page.

use hstc::bands::{band_importance, normalize_features};
use hstc::data::{extract_patch, split_per_class, HyperCube, LabelMap, PatchDataset};
use hstc::fnn::fit_rank1_fnn;
use hstc::linear::{fit_tensor_lr, fit_vector_lr};
use hstc::synthetic::{planted_band_cube, planted_rank1, BandCubeSpec};
use hstc::{DenseTensor, Result, TrainConfig};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const WINDOW: usize = 3;

type Classifier = Box<dyn Fn(&DenseTensor) -> Result<usize>>;

fn cube_cfg(seed: u64) -> TrainConfig {
    TrainConfig { max_sweeps: 100, l2: 0.1, init_scale: 1.0, seed, ..Default::default() }
}

fn accuracy(data: &PatchDataset, predict: impl Fn(&DenseTensor) -> Result<usize>) -> Result<f64> {
    let mut hits = 0;
    for i in 0..data.len() {
        hits += usize::from(predict(data.patch(i))? == data.label(i));
    }
    Ok(hits as f64 / data.len().max(1) as f64)
}

#[derive(Debug, Clone, Serialize)]
pub struct BandDemo {
    pub scores: Vec<f64>,
    /// One-based, best first.
    pub order: Vec<usize>,
    pub informative: Vec<usize>,
    pub overall_accuracy: f64,
}

/// Train tensor LR on a planted cube and rank its bands.
pub fn band_demo(seed: u64, signal: f64) -> Result<BandDemo> {
    let spec = BandCubeSpec { signal, ..Default::default() };
    let (cube, labels) = planted_band_cube(&spec, seed)?;
    let (train, test) = split_per_class(&cube, &labels, 50, seed, WINDOW)?;
    let (train, stats) = normalize_features(&train)?;
    let (mut model, _) = fit_tensor_lr(&train, &cube_cfg(seed))?;
    model.transform_mut().scaling = Some(stats);
    let ranking = band_importance(&model);
    Ok(BandDemo {
        order: ranking.order.iter().map(|b| b + 1).collect(),
        scores: ranking.scores,
        informative: spec.informative.iter().map(|b| b + 1).collect(),
        overall_accuracy: accuracy(&test, |x| model.predict_class(x))?,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CurvePoint {
    pub samples_per_class: usize,
    pub tensor: f64,
    pub vector: f64,
}

/// Mean test accuracy of tensor and vectorized LR on planted rank-1 data
/// (5×5×8 samples, 3 classes) for each training-set size.
pub fn sample_curve(seed: u64, sizes: &[usize], runs: usize) -> Result<Vec<CurvePoint>> {
    sizes
        .iter()
        .map(|&n| {
            let (mut t, mut v) = (0.0, 0.0);
            for run in 0..runs as u64 {
                let s = seed + run;
                let task = planted_rank1(&[5, 5, 8], 3, 3.0, n, 300, s)?;
                let cfg = TrainConfig {
                    max_sweeps: 100,
                    inner_steps: 20,
                    learning_rate: 5.0,
                    l2: 0.3,
                    init_scale: 1.0,
                    seed: s,
                    ..Default::default()
                };
                let (tm, _) = fit_tensor_lr(&task.train, &cfg)?;
                let (vm, _) = fit_vector_lr(&task.train, &cfg)?;
                t += accuracy(&task.test, |x| tm.predict_class(x))?;
                v += accuracy(&task.test, |x| vm.predict_class(x))?;
            }
            Ok(CurvePoint { samples_per_class: n, tensor: t / runs as f64, vector: v / runs as f64 })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct MapDemo {
    pub width: usize,
    pub height: usize,
    /// Row-major class ids, 0 = unlabeled.
    pub truth: Vec<u16>,
    pub predicted: Vec<u16>,
    pub num_classes: usize,
    pub overall_accuracy: f64,
    pub parameters: usize,
}

/// Classify every labeled pixel of a planted cube; `hidden == 0` means tensor
/// LR, otherwise a rank-1 FNN with that many hidden units.
pub fn map_demo(seed: u64, samples_per_class: usize, hidden: usize) -> Result<MapDemo> {
    let (cube, labels) = planted_band_cube(&BandCubeSpec::default(), seed)?;
    let (train, test) = split_per_class(&cube, &labels, samples_per_class, seed, WINDOW)?;
    let (train, stats) = normalize_features(&train)?;
    let cfg = cube_cfg(seed);
    let predict: Classifier;
    let parameters;
    if hidden == 0 {
        let (mut m, _) = fit_tensor_lr(&train, &cfg)?;
        m.transform_mut().scaling = Some(stats);
        parameters = m.param_count();
        predict = Box::new(move |x| m.predict_class(x));
    } else {
        let cfg = TrainConfig { learning_rate: 10.0, init_scale: 3.0, l2: 0.3, max_sweeps: 150, ..cfg };
        let (mut m, _) = fit_rank1_fnn(&train, &cfg, hidden)?;
        m.transform_mut().scaling = Some(stats);
        parameters = m.param_count();
        predict = Box::new(move |x| m.predict_class(x));
    }
    Ok(MapDemo {
        width: labels.width(),
        height: labels.height(),
        truth: labels.ids().to_vec(),
        predicted: classify(&cube, &labels, &*predict)?,
        num_classes: labels.num_classes(),
        overall_accuracy: accuracy(&test, &*predict)?,
        parameters,
    })
}

fn classify(cube: &HyperCube, labels: &LabelMap, predict: &dyn Fn(&DenseTensor) -> Result<usize>) -> Result<Vec<u16>> {
    let mut out = vec![0u16; labels.height() * labels.width()];
    for p in labels.labeled_pixels() {
        let k = predict(&extract_patch(cube, p.row, p.col, WINDOW)?)?;
        out[p.row * labels.width() + p.col] = k as u16 + 1;
    }
    Ok(out)
}

fn to_js<T: Serialize>(r: Result<T>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e.to_string()))?;
    Ok(serde_json::to_string(&v).expect("demo results serialize"))
}

#[wasm_bindgen(js_name = bandImportance)]
pub fn band_importance_js(seed: u32, signal: f64) -> Result<String, JsError> {
    to_js(band_demo(seed.into(), signal))
}

#[wasm_bindgen(js_name = sampleCurve)]
pub fn sample_curve_js(seed: u32, sizes: Vec<u32>, runs: u32) -> Result<String, JsError> {
    let sizes: Vec<usize> = sizes.into_iter().map(|n| n as usize).collect();
    to_js(sample_curve(seed.into(), &sizes, runs.max(1) as usize))
}

#[wasm_bindgen(js_name = classificationMap)]
pub fn classification_map_js(seed: u32, samples_per_class: u32, hidden: u32) -> Result<String, JsError> {
    to_js(map_demo(seed.into(), samples_per_class as usize, hidden as usize))
}
