//! Multinomial logistic regression on tensor inputs with rank-1 decomposed
//! class weights, and the vectorized baseline it is compared against.
//!
//! Class `k` scores an input by `⟨w_D^{(k)} ⊗ .. ⊗ w_1^{(k)}, vec(X)⟩`. The
//! factor columns of all classes are gathered in one [`CpFactors`] with a
//! column per class. Training cycles through the modes: with every other
//! factor fixed, the scores are linear in `W_l` through the transformed
//! inputs, so each block is an ordinary softmax regression.

use std::borrow::Cow;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::PatchDataset;
use crate::error::{Error, Result};
use crate::preprocess::InputTransform;
use crate::tensor::{cp_inner_product, transformed_input, CpFactors, DenseTensor};
use crate::train::{
    argmax, neg_log_prob, relative_decrease, softmax, uniform_matrix, Block, TrainConfig,
    TrainTrace, MAX_HALVINGS,
};

/// `C · Σ p_l`.
pub fn tensor_lr_param_count(shape: &[usize], num_classes: usize) -> usize {
    num_classes * shape.iter().sum::<usize>()
}

/// `C · Π p_l`.
pub fn vector_lr_param_count(shape: &[usize], num_classes: usize) -> usize {
    num_classes * shape.iter().product::<usize>()
}

pub(crate) fn check_input_shape(expected: &[usize], x: &DenseTensor) -> Result<()> {
    if x.shape() != expected {
        return Err(Error::Shape(format!(
            "input has shape {:?}, model expects {:?}",
            x.shape(),
            expected
        )));
    }
    Ok(())
}

pub(crate) fn check_training_data(data: &PatchDataset, input_shape: &[usize], classes: usize) -> Result<()> {
    if data.shape() != input_shape {
        return Err(Error::Shape(format!(
            "dataset samples have shape {:?}, model expects {:?}",
            data.shape(),
            input_shape
        )));
    }
    if data.num_classes() != classes {
        return Err(Error::Shape(format!(
            "dataset has {} classes, model has {}",
            data.num_classes(),
            classes
        )));
    }
    if data.classes_present() < 2 {
        return Err(Error::Input("training needs samples from at least 2 classes".into()));
    }
    Ok(())
}

pub(crate) fn prepare<'a>(transform: &InputTransform, data: &'a PatchDataset) -> Result<Vec<Cow<'a, DenseTensor>>> {
    data.patches().iter().map(|x| transform.apply(x)).collect()
}

/// Tensor logistic regression with one rank-1 weight tensor per class.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorLrModel {
    weights: CpFactors,
    input_shape: Vec<usize>,
    transform: InputTransform,
}

impl TensorLrModel {
    pub fn new(weights: CpFactors, input_shape: Vec<usize>, transform: InputTransform) -> Result<Self> {
        let expected = transform.weight_shape(&input_shape);
        if weights.shape() != expected {
            return Err(Error::Shape(format!(
                "factor rows {:?} do not fit input shape {:?} (expected {:?})",
                weights.shape(),
                input_shape,
                expected
            )));
        }
        if weights.rank() < 2 {
            return Err(Error::Shape("a classifier needs at least 2 classes".into()));
        }
        Ok(Self {
            weights,
            input_shape,
            transform,
        })
    }

    pub fn zeros(input_shape: &[usize], num_classes: usize, transform: InputTransform) -> Result<Self> {
        let weights = CpFactors::zeros(&transform.weight_shape(input_shape), num_classes);
        Self::new(weights, input_shape.to_vec(), transform)
    }

    /// Uniform random factors as described by [`TrainConfig::init_scale`],
    /// drawn mode by mode from a generator seeded with `cfg.seed`.
    pub fn init(input_shape: &[usize], num_classes: usize, cfg: &TrainConfig) -> Result<Self> {
        let transform = InputTransform {
            scaling: None,
            augment_ones: cfg.augment_ones,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let factors = transform
            .weight_shape(input_shape)
            .iter()
            .map(|&p| uniform_matrix(&mut rng, p, num_classes, cfg.init_scale / (p as f64).sqrt()))
            .collect();
        Self::new(CpFactors::new(factors)?, input_shape.to_vec(), transform)
    }

    pub fn weights(&self) -> &CpFactors {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut CpFactors {
        &mut self.weights
    }

    pub fn num_classes(&self) -> usize {
        self.weights.rank()
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn transform(&self) -> &InputTransform {
        &self.transform
    }

    pub fn transform_mut(&mut self) -> &mut InputTransform {
        &mut self.transform
    }

    pub fn param_count(&self) -> usize {
        self.weights.param_count()
    }

    fn prepared_logits(&self, x: &DenseTensor) -> Vec<f64> {
        (0..self.num_classes())
            .map(|k| cp_inner_product(&self.weights, k, x).expect("shape checked"))
            .collect()
    }

    pub fn logits(&self, x: &DenseTensor) -> Result<Vec<f64>> {
        check_input_shape(&self.input_shape, x)?;
        let x = self.transform.apply(x)?;
        Ok(self.prepared_logits(&x))
    }

    pub fn predict_proba(&self, x: &DenseTensor) -> Result<Vec<f64>> {
        Ok(softmax(&self.logits(x)?))
    }

    pub fn predict_class(&self, x: &DenseTensor) -> Result<usize> {
        Ok(argmax(&self.predict_proba(x)?))
    }
}

/// `-Σ_i log p^{y_i}(X_i)` over the dataset.
pub fn nll(model: &TensorLrModel, data: &PatchDataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Input("negative log-likelihood of an empty dataset".into()));
    }
    data.patches()
        .iter()
        .zip(data.labels())
        .map(|(x, &y)| Ok(neg_log_prob(&model.predict_proba(x)?, y)))
        .sum()
}

/// NLL plus `(l2 / 2) Σ_l ‖W_l‖²`.
pub fn regularized_objective(model: &TensorLrModel, data: &PatchDataset, l2: f64) -> Result<f64> {
    Ok(nll(model, data)? + 0.5 * l2 * model.weights.squared_norm())
}

/// Inputs of a softmax-regression block.
enum Design<'a> {
    /// One `m × C` matrix per sample; column `k` is what class `k` sees.
    PerClass(Vec<Array2<f64>>),
    /// One length-`m` vector per sample shared by all classes.
    Shared(Vec<&'a [f64]>),
}

/// The objective restricted to one weight block `W ∈ R^{m × C}`.
struct SoftmaxBlock<'a> {
    design: Design<'a>,
    labels: &'a [usize],
    l2: f64,
    /// Squared norm of the weights held fixed, for the penalty term.
    fixed_sq_norm: f64,
}

impl SoftmaxBlock<'_> {
    fn len(&self) -> usize {
        self.labels.len()
    }

    fn logits(&self, w: &Array2<f64>, i: usize) -> Vec<f64> {
        let classes = w.ncols();
        match &self.design {
            Design::PerClass(tau) => (0..classes).map(|k| w.column(k).dot(&tau[i].column(k))).collect(),
            Design::Shared(x) => (0..classes)
                .map(|k| w.column(k).iter().zip(x[i].iter()).map(|(a, b)| a * b).sum())
                .collect(),
        }
    }

    fn objective(&self, w: &Array2<f64>) -> f64 {
        let data: f64 = (0..self.len())
            .map(|i| neg_log_prob(&softmax(&self.logits(w, i)), self.labels[i]))
            .sum();
        let sq: f64 = w.iter().map(|v| v * v).sum();
        data + 0.5 * self.l2 * (sq + self.fixed_sq_norm)
    }

    fn gradient(&self, w: &Array2<f64>) -> Array2<f64> {
        let mut g = w * self.l2;
        for i in 0..self.len() {
            let mut residual = softmax(&self.logits(w, i));
            residual[self.labels[i]] -= 1.0;
            for (k, r) in residual.into_iter().enumerate() {
                let mut col = g.column_mut(k);
                match &self.design {
                    Design::PerClass(tau) => col.scaled_add(r, &tau[i].column(k)),
                    Design::Shared(x) => {
                        for (gv, xv) in col.iter_mut().zip(x[i].iter()) {
                            *gv += r * xv;
                        }
                    }
                }
            }
        }
        g
    }

    /// `steps` gradient steps of size `lr / N`, halving the step whenever
    /// the objective would rise. Returns the final objective.
    fn descend(&self, w: &mut Array2<f64>, steps: usize, lr: f64) -> f64 {
        let n = self.len() as f64;
        let mut obj = self.objective(w);
        let mut step = lr;
        for _ in 0..steps {
            let g = self.gradient(w);
            if g.iter().all(|&v| v == 0.0) {
                break;
            }
            let mut accepted = false;
            for _ in 0..MAX_HALVINGS {
                let candidate = &*w - &(&g * (step / n));
                let value = self.objective(&candidate);
                if value <= obj {
                    *w = candidate;
                    obj = value;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        obj
    }
}

fn factor_block<'a>(
    weights: &CpFactors,
    inputs: &[Cow<'_, DenseTensor>],
    labels: &'a [usize],
    mode: usize,
    l2: f64,
) -> SoftmaxBlock<'a> {
    let classes = weights.rank();
    let rows = weights.shape()[mode];
    let tau = inputs
        .iter()
        .map(|x| {
            let mut m = Array2::zeros((rows, classes));
            for k in 0..classes {
                let t = transformed_input(x, weights, k, mode).expect("shape checked");
                m.column_mut(k).assign(&ndarray::ArrayView1::from(&t));
            }
            m
        })
        .collect();
    let fixed_sq_norm = (0..weights.ndim())
        .filter(|&q| q != mode)
        .map(|q| weights.factor(q).iter().map(|v| v * v).sum::<f64>())
        .sum();
    SoftmaxBlock {
        design: Design::PerClass(tau),
        labels,
        l2,
        fixed_sq_norm,
    }
}

/// Gradient of the regularized objective with respect to the factor of
/// `mode` (zero-based), all other factors fixed. Returned in weight space,
/// `p_mode × C`.
pub fn block_gradient(model: &TensorLrModel, data: &PatchDataset, mode: usize, l2: f64) -> Result<Array2<f64>> {
    if data.shape() != model.input_shape.as_slice() {
        return Err(Error::Shape(format!(
            "dataset samples have shape {:?}, model expects {:?}",
            data.shape(),
            model.input_shape
        )));
    }
    if mode >= model.weights.ndim() {
        return Err(Error::Bounds {
            mode: mode + 1,
            index: mode + 1,
            extent: model.weights.ndim(),
        });
    }
    let inputs = prepare(&model.transform, data)?;
    let block = factor_block(&model.weights, &inputs, data.labels(), mode, l2);
    Ok(block.gradient(model.weights.factor(mode)))
}

fn prepared_objective(weights: &CpFactors, inputs: &[Cow<'_, DenseTensor>], labels: &[usize], l2: f64) -> f64 {
    let data: f64 = inputs
        .iter()
        .zip(labels)
        .map(|(x, &y)| {
            let z: Vec<f64> = (0..weights.rank())
                .map(|k| cp_inner_product(weights, k, x).expect("shape checked"))
                .collect();
            neg_log_prob(&softmax(&z), y)
        })
        .sum();
    data + 0.5 * l2 * weights.squared_norm()
}

/// Randomly initializes a model (see [`TensorLrModel::init`]) and trains it
/// with [`fit_tensor_lr_from`].
pub fn fit_tensor_lr(data: &PatchDataset, cfg: &TrainConfig) -> Result<(TensorLrModel, TrainTrace)> {
    cfg.validate()?;
    let model = TensorLrModel::init(data.shape(), data.num_classes(), cfg)?;
    fit_tensor_lr_from(model, data, cfg)
}

/// Block-alternating training from the given weights.
///
/// Every sweep visits the modes in order. Each visit recomputes the
/// transformed inputs from the current factors (so modes already visited
/// in this sweep contribute their new values) and takes
/// `cfg.inner_steps` backtracking gradient steps on that factor. After a
/// sweep the components are rescaled without changing their products:
/// unit-norm factors with the scale in the last mode, or balanced norms
/// when an L2 penalty is active so the penalty cannot grow.
pub fn fit_tensor_lr_from(
    mut model: TensorLrModel,
    data: &PatchDataset,
    cfg: &TrainConfig,
) -> Result<(TensorLrModel, TrainTrace)> {
    cfg.validate()?;
    check_training_data(data, &model.input_shape, model.num_classes())?;
    let inputs = prepare(&model.transform, data)?;
    let labels = data.labels();

    let mut trace = TrainTrace::new(prepared_objective(&model.weights, &inputs, labels, cfg.l2));
    if !trace.initial.is_finite() {
        return Err(Error::NonFinite {
            sweep: 0,
            block: "init".into(),
            value: trace.initial,
        });
    }
    let mut previous = trace.initial;
    for sweep in 0..cfg.max_sweeps {
        for mode in 0..model.weights.ndim() {
            let block = factor_block(&model.weights, &inputs, labels, mode, cfg.l2);
            let mut w = model.weights.factor(mode).clone();
            let objective = block.descend(&mut w, cfg.inner_steps, cfg.learning_rate);
            *model.weights.factor_mut(mode) = w;
            trace.record(sweep, Block::Factor(mode), objective)?;
        }
        if cfg.l2 > 0.0 {
            model.weights.balance_columns();
        } else {
            model.weights.normalize_columns();
        }
        trace.sweeps = sweep + 1;
        let current = trace.final_objective();
        if relative_decrease(previous, current) < cfg.rel_tol {
            trace.converged = true;
            break;
        }
        previous = current;
    }
    Ok((model, trace))
}

/// Softmax regression on `vec(X)` with a full `Π p_l × C` weight matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorLrModel {
    weights: Array2<f64>,
    input_shape: Vec<usize>,
    transform: InputTransform,
}

impl VectorLrModel {
    pub fn new(weights: Array2<f64>, input_shape: Vec<usize>, transform: InputTransform) -> Result<Self> {
        let rows: usize = transform.weight_shape(&input_shape).iter().product();
        if weights.nrows() != rows || weights.ncols() < 2 {
            return Err(Error::Shape(format!(
                "weights {:?} do not fit input shape {:?} with at least 2 classes",
                weights.dim(),
                input_shape
            )));
        }
        Ok(Self {
            weights,
            input_shape,
            transform,
        })
    }

    /// Uniform weights in `±init_scale / √P`, drawn column by column.
    pub fn init(input_shape: &[usize], num_classes: usize, cfg: &TrainConfig) -> Result<Self> {
        let transform = InputTransform {
            scaling: None,
            augment_ones: cfg.augment_ones,
        };
        let rows: usize = transform.weight_shape(input_shape).iter().product();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let weights = uniform_matrix(&mut rng, rows, num_classes, cfg.init_scale / (rows as f64).sqrt());
        Self::new(weights, input_shape.to_vec(), transform)
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn num_classes(&self) -> usize {
        self.weights.ncols()
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn param_count(&self) -> usize {
        self.weights.len()
    }

    pub fn logits(&self, x: &DenseTensor) -> Result<Vec<f64>> {
        check_input_shape(&self.input_shape, x)?;
        let x = self.transform.apply(x)?;
        Ok((0..self.num_classes())
            .map(|k| self.weights.column(k).iter().zip(x.as_slice()).map(|(w, v)| w * v).sum())
            .collect())
    }

    pub fn predict_proba(&self, x: &DenseTensor) -> Result<Vec<f64>> {
        Ok(softmax(&self.logits(x)?))
    }

    pub fn predict_class(&self, x: &DenseTensor) -> Result<usize> {
        Ok(argmax(&self.predict_proba(x)?))
    }
}

pub fn fit_vector_lr(data: &PatchDataset, cfg: &TrainConfig) -> Result<(VectorLrModel, TrainTrace)> {
    cfg.validate()?;
    let model = VectorLrModel::init(data.shape(), data.num_classes(), cfg)?;
    fit_vector_lr_from(model, data, cfg)
}

/// Gradient descent with the same sweep structure, step rule and stopping
/// rule as [`fit_tensor_lr_from`]; a sweep is `cfg.inner_steps` steps on
/// the whole weight matrix.
pub fn fit_vector_lr_from(
    mut model: VectorLrModel,
    data: &PatchDataset,
    cfg: &TrainConfig,
) -> Result<(VectorLrModel, TrainTrace)> {
    cfg.validate()?;
    check_training_data(data, &model.input_shape, model.num_classes())?;
    let inputs = prepare(&model.transform, data)?;
    let block = SoftmaxBlock {
        design: Design::Shared(inputs.iter().map(|x| x.as_slice()).collect()),
        labels: data.labels(),
        l2: cfg.l2,
        fixed_sq_norm: 0.0,
    };
    let mut trace = TrainTrace::new(block.objective(&model.weights));
    let mut previous = trace.initial;
    for sweep in 0..cfg.max_sweeps {
        let objective = block.descend(&mut model.weights, cfg.inner_steps, cfg.learning_rate);
        trace.record(sweep, Block::Dense, objective)?;
        trace.sweeps = sweep + 1;
        if relative_decrease(previous, objective) < cfg.rel_tol {
            trace.converged = true;
            break;
        }
        previous = objective;
    }
    Ok((model, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn toy_data() -> PatchDataset {
        let patches = vec![
            DenseTensor::new(vec![2, 2], vec![1.0, 0.0, 0.5, -1.0]).unwrap(),
            DenseTensor::new(vec![2, 2], vec![-1.0, 0.3, 0.0, 2.0]).unwrap(),
            DenseTensor::new(vec![2, 2], vec![0.2, -0.7, 1.5, 0.1]).unwrap(),
        ];
        PatchDataset::new(vec![2, 2], 2, patches, vec![0, 1, 1]).unwrap()
    }

    #[test]
    fn zero_weights_give_uniform_probabilities() {
        let m = TensorLrModel::zeros(&[2, 2], 4, InputTransform::default()).unwrap();
        let x = DenseTensor::from_fn(&[2, 2], |i| i[0] as f64 - 2.0 * i[1] as f64);
        let p = m.predict_proba(&x).unwrap();
        assert!(p.iter().all(|&v| v == 0.25));
        assert_eq!(m.predict_class(&x).unwrap(), 0);
    }

    #[test]
    fn zero_weights_nll_is_n_log_c() {
        let data = toy_data();
        let m = TensorLrModel::zeros(&[2, 2], 2, InputTransform::default()).unwrap();
        let v = nll(&m, &data).unwrap();
        assert!((v - 3.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn dominant_logit_wins() {
        let w = CpFactors::new(vec![array![[0.0, 5.0], [0.0, 5.0]], array![[0.0, 1.0], [0.0, 1.0]]]).unwrap();
        let m = TensorLrModel::new(w, vec![2, 2], InputTransform::default()).unwrap();
        let x = DenseTensor::from_fn(&[2, 2], |_| 1.0);
        assert_eq!(m.predict_class(&x).unwrap(), 1);
    }

    #[test]
    fn zero_inputs_give_zero_gradient() {
        let patches = vec![DenseTensor::zeros(&[2, 3]); 4];
        let data = PatchDataset::new(vec![2, 3], 2, patches, vec![0, 1, 0, 1]).unwrap();
        let m = TensorLrModel::init(&[2, 3], 2, &TrainConfig::default()).unwrap();
        for mode in 0..2 {
            let g = block_gradient(&m, &data, mode, 0.0).unwrap();
            assert!(g.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn shape_and_input_errors() {
        let m = TensorLrModel::zeros(&[2, 2], 2, InputTransform::default()).unwrap();
        let bad = DenseTensor::zeros(&[2, 3]);
        assert!(matches!(m.predict_proba(&bad), Err(Error::Shape(_))));
        let nan = DenseTensor::new(vec![2, 2], vec![0.0, f64::NAN, 0.0, 0.0]).unwrap();
        assert!(matches!(m.predict_proba(&nan), Err(Error::Input(_))));
        assert!(matches!(block_gradient(&m, &toy_data(), 2, 0.0), Err(Error::Bounds { .. })));
    }

    #[test]
    fn one_class_data_rejected() {
        let patches = vec![DenseTensor::zeros(&[2, 2]); 2];
        let data = PatchDataset::new(vec![2, 2], 2, patches, vec![1, 1]).unwrap();
        assert!(matches!(fit_tensor_lr(&data, &TrainConfig::default()), Err(Error::Input(_))));
        assert!(matches!(fit_vector_lr(&data, &TrainConfig::default()), Err(Error::Input(_))));
    }

    #[test]
    fn param_counts() {
        assert_eq!(tensor_lr_param_count(&[1], 1), 1);
        assert_eq!(vector_lr_param_count(&[1], 1), 1);
        assert_eq!(tensor_lr_param_count(&[5, 5, 10], 3), 60);
        assert_eq!(vector_lr_param_count(&[5, 5, 10], 3), 750);
        assert_eq!(tensor_lr_param_count(&[5, 5, 103], 9), 1017);
        assert_eq!(vector_lr_param_count(&[5, 5, 103], 9), 23175);
        assert_eq!(vector_lr_param_count(&[5, 5, 8], 3), 600);
        let m = TensorLrModel::zeros(&[5, 5, 8], 3, InputTransform::default()).unwrap();
        assert_eq!(m.param_count(), 54);
    }

    #[test]
    fn training_decreases_objective() {
        let data = toy_data();
        let cfg = TrainConfig {
            max_sweeps: 20,
            ..Default::default()
        };
        let (m, trace) = fit_tensor_lr(&data, &cfg).unwrap();
        assert!(trace.final_objective() < trace.initial);
        assert!(trace.max_increase() <= 1e-9);
        let direct = nll(&m, &data).unwrap();
        assert!((direct - trace.final_objective()).abs() < 1e-9 * direct.max(1.0));
    }
}
