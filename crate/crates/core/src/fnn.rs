//! One-hidden-layer sigmoid/softmax networks on tensor inputs.
//!
//! [`Rank1FnnModel`] constrains every hidden unit's input weights to a
//! rank-1 tensor `w_1^{(i)} ∘ .. ∘ w_D^{(i)}`; [`DenseFnnModel`] is the
//! ordinary network on `vec(X)`. Neither layer has a bias; set
//! [`TrainConfig::augment_ones`] to give the hidden units one.
//!
//! Both are trained with the same schedule: every sweep visits the hidden
//! units (mode by mode for the rank-1 network) taking one backtracking
//! gradient step per visit, then takes one step on the output weights.
//! With a single mode the two networks therefore follow identical
//! trajectories from identical weights.

use std::borrow::Cow;

use ndarray::{Array1, Array2, ArrayView1};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::PatchDataset;
use crate::error::{Error, Result};
use crate::linear::{check_input_shape, check_training_data, prepare};
use crate::preprocess::InputTransform;
use crate::tensor::{cp_inner_product, transformed_input, CpFactors, DenseTensor};
use crate::train::{
    argmax, neg_log_prob, relative_decrease, softmax, uniform_matrix, Block, TrainConfig,
    TrainTrace, MAX_HALVINGS,
};

/// Pre-activations are clipped to this magnitude inside `g'` only.
pub const SATURATION: f64 = 35.0;

/// Presets for the number of hidden units.
pub const HIDDEN_UNITS_SMALL: usize = 75;
pub const HIDDEN_UNITS_LARGE: usize = 100;

/// Logistic function `1 / (1 + e^{-x})`, evaluated without overflow.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `g(x)(1 − g(x))` with `x` clipped to `±SATURATION`.
pub fn sigmoid_derivative(x: f64) -> f64 {
    let g = sigmoid(x.clamp(-SATURATION, SATURATION));
    g * (1.0 - g)
}

/// `Q · Σ p_l + Q · C`.
pub fn rank1_fnn_param_count(shape: &[usize], hidden: usize, classes: usize) -> usize {
    hidden * shape.iter().sum::<usize>() + hidden * classes
}

/// `Q · Π p_l + Q · C`.
pub fn dense_fnn_param_count(shape: &[usize], hidden: usize, classes: usize) -> usize {
    hidden * shape.iter().product::<usize>() + hidden * classes
}

fn sq_norm(m: &Array2<f64>) -> f64 {
    m.iter().map(|v| v * v).sum()
}

fn output_logits(hidden: &[f64], output: &Array2<f64>) -> Vec<f64> {
    output.t().dot(&ArrayView1::from(hidden)).to_vec()
}

fn check_output(output: &Array2<f64>, hidden: usize) -> Result<()> {
    if output.nrows() != hidden || output.ncols() < 2 {
        return Err(Error::Shape(format!(
            "output weights {:?} need {} rows and at least 2 classes",
            output.dim(),
            hidden
        )));
    }
    Ok(())
}

/// Hidden weights `W_l ∈ R^{p_l × Q}` (column `i` belongs to hidden unit
/// `i`) and output weights `V ∈ R^{Q × C}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rank1FnnModel {
    hidden: CpFactors,
    output: Array2<f64>,
    input_shape: Vec<usize>,
    transform: InputTransform,
}

impl Rank1FnnModel {
    pub fn new(
        hidden: CpFactors,
        output: Array2<f64>,
        input_shape: Vec<usize>,
        transform: InputTransform,
    ) -> Result<Self> {
        let expected = transform.weight_shape(&input_shape);
        if hidden.shape() != expected {
            return Err(Error::Shape(format!(
                "hidden factor rows {:?} do not fit input shape {:?} (expected {:?})",
                hidden.shape(),
                input_shape,
                expected
            )));
        }
        check_output(&output, hidden.rank())?;
        Ok(Self {
            hidden,
            output,
            input_shape,
            transform,
        })
    }

    pub fn zeros(input_shape: &[usize], hidden: usize, classes: usize, transform: InputTransform) -> Result<Self> {
        let factors = CpFactors::zeros(&transform.weight_shape(input_shape), hidden);
        Self::new(factors, Array2::zeros((hidden, classes)), input_shape.to_vec(), transform)
    }

    /// Hidden factors uniform in `±init_scale / √p_l` (mode by mode, unit by
    /// unit), then output weights uniform in `±init_scale / √Q`.
    pub fn init(input_shape: &[usize], hidden: usize, classes: usize, cfg: &TrainConfig) -> Result<Self> {
        if hidden == 0 {
            return Err(Error::Config("the hidden layer needs at least one unit".into()));
        }
        let transform = InputTransform {
            scaling: None,
            augment_ones: cfg.augment_ones,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let factors = transform
            .weight_shape(input_shape)
            .iter()
            .map(|&p| uniform_matrix(&mut rng, p, hidden, cfg.init_scale / (p as f64).sqrt()))
            .collect();
        let output = uniform_matrix(&mut rng, hidden, classes, cfg.init_scale / (hidden as f64).sqrt());
        Self::new(CpFactors::new(factors)?, output, input_shape.to_vec(), transform)
    }

    pub fn hidden(&self) -> &CpFactors {
        &self.hidden
    }

    pub fn hidden_mut(&mut self) -> &mut CpFactors {
        &mut self.hidden
    }

    pub fn output(&self) -> &Array2<f64> {
        &self.output
    }

    pub fn output_mut(&mut self) -> &mut Array2<f64> {
        &mut self.output
    }

    pub fn num_hidden(&self) -> usize {
        self.hidden.rank()
    }

    pub fn num_classes(&self) -> usize {
        self.output.ncols()
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
        self.hidden.param_count() + self.output.len()
    }

    fn squared_norm(&self) -> f64 {
        self.hidden.squared_norm() + sq_norm(&self.output)
    }

    fn prepared_pre_activations(&self, x: &DenseTensor) -> Vec<f64> {
        (0..self.num_hidden())
            .map(|i| cp_inner_product(&self.hidden, i, x).expect("shape checked"))
            .collect()
    }

    /// `u_i = g(⟨w^{(i)}, X⟩)` for every hidden unit.
    pub fn hidden_activations(&self, x: &DenseTensor) -> Result<Vec<f64>> {
        check_input_shape(&self.input_shape, x)?;
        let x = self.transform.apply(x)?;
        Ok(self.prepared_pre_activations(&x).into_iter().map(sigmoid).collect())
    }

    /// The same activations computed as `g(⟨w_l^{(i)}, τ_{≠l}^{(i)}⟩)` for
    /// a chosen zero-based mode.
    pub fn hidden_activations_via(&self, x: &DenseTensor, mode: usize) -> Result<Vec<f64>> {
        check_input_shape(&self.input_shape, x)?;
        let x = self.transform.apply(x)?;
        (0..self.num_hidden())
            .map(|i| {
                let tau = transformed_input(&x, &self.hidden, i, mode)?;
                let w = self.hidden.factor(mode).column(i);
                Ok(sigmoid(w.iter().zip(&tau).map(|(a, b)| a * b).sum()))
            })
            .collect()
    }

    pub fn logits(&self, x: &DenseTensor) -> Result<Vec<f64>> {
        Ok(output_logits(&self.hidden_activations(x)?, &self.output))
    }

    /// Class probabilities `softmax(Vᵀ u)`.
    pub fn forward(&self, x: &DenseTensor) -> Result<Vec<f64>> {
        Ok(softmax(&self.logits(x)?))
    }

    pub fn predict_class(&self, x: &DenseTensor) -> Result<usize> {
        Ok(argmax(&self.forward(x)?))
    }
}

/// Hidden weights `Q × Π p_l` (row `i` is unit `i` on `vec(X)`) and output
/// weights `Q × C`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseFnnModel {
    hidden: Array2<f64>,
    output: Array2<f64>,
    input_shape: Vec<usize>,
    transform: InputTransform,
}

impl DenseFnnModel {
    pub fn new(
        hidden: Array2<f64>,
        output: Array2<f64>,
        input_shape: Vec<usize>,
        transform: InputTransform,
    ) -> Result<Self> {
        let inputs: usize = transform.weight_shape(&input_shape).iter().product();
        if hidden.ncols() != inputs || hidden.nrows() == 0 {
            return Err(Error::Shape(format!(
                "hidden weights {:?} do not fit {} inputs",
                hidden.dim(),
                inputs
            )));
        }
        check_output(&output, hidden.nrows())?;
        Ok(Self {
            hidden,
            output,
            input_shape,
            transform,
        })
    }

    /// Draws weights exactly as [`Rank1FnnModel::init`] does for a
    /// single-mode input of length `Π p_l`.
    pub fn init(input_shape: &[usize], hidden: usize, classes: usize, cfg: &TrainConfig) -> Result<Self> {
        if hidden == 0 {
            return Err(Error::Config("the hidden layer needs at least one unit".into()));
        }
        let transform = InputTransform {
            scaling: None,
            augment_ones: cfg.augment_ones,
        };
        let inputs: usize = transform.weight_shape(input_shape).iter().product();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let w = uniform_matrix(&mut rng, inputs, hidden, cfg.init_scale / (inputs as f64).sqrt());
        let output = uniform_matrix(&mut rng, hidden, classes, cfg.init_scale / (hidden as f64).sqrt());
        Self::new(w.t().to_owned(), output, input_shape.to_vec(), transform)
    }

    pub fn hidden(&self) -> &Array2<f64> {
        &self.hidden
    }

    pub fn output(&self) -> &Array2<f64> {
        &self.output
    }

    pub fn num_hidden(&self) -> usize {
        self.hidden.nrows()
    }

    pub fn num_classes(&self) -> usize {
        self.output.ncols()
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn param_count(&self) -> usize {
        self.hidden.len() + self.output.len()
    }

    fn prepared_pre_activations(&self, x: &DenseTensor) -> Vec<f64> {
        self.hidden
            .rows()
            .into_iter()
            .map(|w| w.iter().zip(x.as_slice()).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn hidden_activations(&self, x: &DenseTensor) -> Result<Vec<f64>> {
        check_input_shape(&self.input_shape, x)?;
        let x = self.transform.apply(x)?;
        Ok(self.prepared_pre_activations(&x).into_iter().map(sigmoid).collect())
    }

    pub fn logits(&self, x: &DenseTensor) -> Result<Vec<f64>> {
        Ok(output_logits(&self.hidden_activations(x)?, &self.output))
    }

    pub fn forward(&self, x: &DenseTensor) -> Result<Vec<f64>> {
        Ok(softmax(&self.logits(x)?))
    }

    pub fn predict_class(&self, x: &DenseTensor) -> Result<usize> {
        Ok(argmax(&self.forward(x)?))
    }
}

/// Gradients of one backpropagation pass.
#[derive(Debug, Clone, PartialEq)]
pub struct FnnGradients {
    /// `p_l × Q` for a rank-1 block, `Q × Π p_l` for the dense network.
    pub hidden: Array2<f64>,
    /// `Q × C`.
    pub output: Array2<f64>,
}

/// Cached forward pass over a training set.
struct NetState<'a> {
    labels: &'a [usize],
    /// `N × Q` hidden pre-activations.
    pre: Array2<f64>,
    /// `N × Q` hidden outputs.
    act: Array2<f64>,
    /// `N × C` output logits.
    logits: Array2<f64>,
    l2: f64,
}

impl<'a> NetState<'a> {
    fn new(pre: Array2<f64>, output: &Array2<f64>, labels: &'a [usize], l2: f64) -> Self {
        let act = pre.mapv(sigmoid);
        let logits = act.dot(output);
        Self {
            labels,
            pre,
            act,
            logits,
            l2,
        }
    }

    fn len(&self) -> usize {
        self.labels.len()
    }

    fn data_loss(&self, logits: &Array2<f64>) -> f64 {
        logits
            .rows()
            .into_iter()
            .zip(self.labels)
            .map(|(z, &y)| neg_log_prob(&softmax(&z.to_vec()), y))
            .sum()
    }

    fn objective(&self, sq_norm: f64) -> f64 {
        self.data_loss(&self.logits) + 0.5 * self.l2 * sq_norm
    }

    /// `softmax(z_n) − t_n` per sample.
    fn residual(&self) -> Array2<f64> {
        let mut r = Array2::zeros(self.logits.dim());
        for (n, z) in self.logits.rows().into_iter().enumerate() {
            let p = softmax(&z.to_vec());
            r.row_mut(n).assign(&Array1::from(p));
            r[[n, self.labels[n]]] -= 1.0;
        }
        r
    }

    /// `∂L/∂a_{n,i}` for hidden unit `i` and every sample.
    fn unit_sensitivity(&self, residual: &Array2<f64>, output: &Array2<f64>, unit: usize) -> Vec<f64> {
        let v = output.row(unit);
        (0..self.len())
            .map(|n| residual.row(n).dot(&v) * sigmoid_derivative(self.pre[[n, unit]]))
            .collect()
    }

    fn unit_gradient(
        &self,
        residual: &Array2<f64>,
        output: &Array2<f64>,
        unit: usize,
        inputs: &[Cow<'_, [f64]>],
        w: &[f64],
    ) -> Vec<f64> {
        let sens = self.unit_sensitivity(residual, output, unit);
        let mut g: Vec<f64> = w.iter().map(|v| self.l2 * v).collect();
        for (s, x) in sens.iter().zip(inputs) {
            for (gv, xv) in g.iter_mut().zip(x.iter()) {
                *gv += s * xv;
            }
        }
        g
    }

    fn output_gradient(&self, residual: &Array2<f64>, output: &Array2<f64>) -> Array2<f64> {
        self.act.t().dot(residual) + output * self.l2
    }

    /// One backtracking step on the input weights `w` of hidden unit
    /// `unit`, whose pre-activation is `⟨w, inputs[n]⟩`. `others_sq` is the
    /// squared norm of every other parameter. Returns the new objective.
    #[allow(clippy::too_many_arguments)]
    fn step_unit(
        &mut self,
        output: &Array2<f64>,
        unit: usize,
        inputs: &[Cow<'_, [f64]>],
        w: &mut [f64],
        others_sq: f64,
        objective: f64,
        lr: f64,
    ) -> f64 {
        let residual = self.residual();
        let g = self.unit_gradient(&residual, output, unit, inputs, w);
        if g.iter().all(|&v| v == 0.0) {
            return objective;
        }
        let n = self.len() as f64;
        let v = output.row(unit);
        let mut step = lr;
        for _ in 0..MAX_HALVINGS {
            let cand: Vec<f64> = w.iter().zip(&g).map(|(a, b)| a - step / n * b).collect();
            let pre: Vec<f64> = inputs
                .iter()
                .map(|x| cand.iter().zip(x.iter()).map(|(a, b)| a * b).sum())
                .collect();
            let mut logits = self.logits.clone();
            for (row, (&p, mut z)) in pre.iter().zip(logits.rows_mut()).enumerate() {
                let delta = sigmoid(p) - self.act[[row, unit]];
                z.scaled_add(delta, &v);
            }
            let cand_sq: f64 = cand.iter().map(|x| x * x).sum();
            let value = self.data_loss(&logits) + 0.5 * self.l2 * (others_sq + cand_sq);
            if value <= objective {
                w.copy_from_slice(&cand);
                for (row, p) in pre.into_iter().enumerate() {
                    self.pre[[row, unit]] = p;
                    self.act[[row, unit]] = sigmoid(p);
                }
                self.logits = logits;
                return value;
            }
            step *= 0.5;
        }
        objective
    }

    fn step_output(&mut self, output: &mut Array2<f64>, hidden_sq: f64, objective: f64, lr: f64) -> f64 {
        let residual = self.residual();
        let g = self.output_gradient(&residual, output);
        if g.iter().all(|&v| v == 0.0) {
            return objective;
        }
        let n = self.len() as f64;
        let mut step = lr;
        for _ in 0..MAX_HALVINGS {
            let cand = &*output - &(&g * (step / n));
            let logits = self.act.dot(&cand);
            let value = self.data_loss(&logits) + 0.5 * self.l2 * (hidden_sq + sq_norm(&cand));
            if value <= objective {
                *output = cand;
                self.logits = logits;
                return value;
            }
            step *= 0.5;
        }
        objective
    }
}

fn rank1_pre_activations(model: &Rank1FnnModel, inputs: &[Cow<'_, DenseTensor>]) -> Array2<f64> {
    let mut pre = Array2::zeros((inputs.len(), model.num_hidden()));
    for (n, x) in inputs.iter().enumerate() {
        pre.row_mut(n).assign(&Array1::from(model.prepared_pre_activations(x)));
    }
    pre
}

fn dense_pre_activations(model: &DenseFnnModel, inputs: &[Cow<'_, DenseTensor>]) -> Array2<f64> {
    let mut pre = Array2::zeros((inputs.len(), model.num_hidden()));
    for (n, x) in inputs.iter().enumerate() {
        pre.row_mut(n).assign(&Array1::from(model.prepared_pre_activations(x)));
    }
    pre
}

fn rank1_unit_inputs<'a>(
    model: &Rank1FnnModel,
    inputs: &[Cow<'_, DenseTensor>],
    unit: usize,
    mode: usize,
) -> Vec<Cow<'a, [f64]>> {
    inputs
        .iter()
        .map(|x| Cow::Owned(transformed_input(x, &model.hidden, unit, mode).expect("shape checked")))
        .collect()
}

fn check_fnn_data(data: &PatchDataset, input_shape: &[usize], classes: usize) -> Result<()> {
    if data.is_empty() {
        return Err(Error::Input("empty dataset".into()));
    }
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
    Ok(())
}

/// NLL of the rank-1 network plus `(l2 / 2)` times the squared norm of all
/// weights.
pub fn rank1_fnn_loss(model: &Rank1FnnModel, data: &PatchDataset, l2: f64) -> Result<f64> {
    check_fnn_data(data, &model.input_shape, model.num_classes())?;
    let inputs = prepare(&model.transform, data)?;
    let state = NetState::new(rank1_pre_activations(model, &inputs), &model.output, data.labels(), l2);
    Ok(state.objective(model.squared_norm()))
}

pub fn dense_fnn_loss(model: &DenseFnnModel, data: &PatchDataset, l2: f64) -> Result<f64> {
    check_fnn_data(data, &model.input_shape, model.num_classes())?;
    let inputs = prepare(&model.transform, data)?;
    let state = NetState::new(dense_pre_activations(model, &inputs), &model.output, data.labels(), l2);
    Ok(state.objective(sq_norm(&model.hidden) + sq_norm(&model.output)))
}

/// Gradients of [`rank1_fnn_loss`] with respect to the hidden factor of
/// `mode` (zero-based, `p_mode × Q`) and the output weights. With the
/// other modes fixed the transformed input of each unit does not depend on
/// that unit's mode-`mode` column, so the block gradient is exact.
pub fn block_backprop(model: &Rank1FnnModel, data: &PatchDataset, mode: usize, l2: f64) -> Result<FnnGradients> {
    check_fnn_data(data, &model.input_shape, model.num_classes())?;
    if mode >= model.hidden.ndim() {
        return Err(Error::Bounds {
            mode: mode + 1,
            index: mode + 1,
            extent: model.hidden.ndim(),
        });
    }
    let inputs = prepare(&model.transform, data)?;
    let state = NetState::new(rank1_pre_activations(model, &inputs), &model.output, data.labels(), l2);
    let residual = state.residual();
    let mut hidden = Array2::zeros(model.hidden.factor(mode).dim());
    for unit in 0..model.num_hidden() {
        let tau = rank1_unit_inputs(model, &inputs, unit, mode);
        let w = model.hidden.column(mode, unit);
        let g = state.unit_gradient(&residual, &model.output, unit, &tau, &w);
        hidden.column_mut(unit).assign(&Array1::from(g));
    }
    Ok(FnnGradients {
        hidden,
        output: state.output_gradient(&residual, &model.output),
    })
}

/// Standard backpropagation for the dense network.
pub fn dense_backprop(model: &DenseFnnModel, data: &PatchDataset, l2: f64) -> Result<FnnGradients> {
    check_fnn_data(data, &model.input_shape, model.num_classes())?;
    let inputs = prepare(&model.transform, data)?;
    let state = NetState::new(dense_pre_activations(model, &inputs), &model.output, data.labels(), l2);
    let residual = state.residual();
    let xs: Vec<Cow<[f64]>> = inputs.iter().map(|x| Cow::Borrowed(x.as_slice())).collect();
    let mut hidden = Array2::zeros(model.hidden.dim());
    for unit in 0..model.num_hidden() {
        let w = model.hidden.row(unit).to_vec();
        let g = state.unit_gradient(&residual, &model.output, unit, &xs, &w);
        hidden.row_mut(unit).assign(&Array1::from(g));
    }
    Ok(FnnGradients {
        hidden,
        output: state.output_gradient(&residual, &model.output),
    })
}

pub fn fit_rank1_fnn(data: &PatchDataset, cfg: &TrainConfig, hidden: usize) -> Result<(Rank1FnnModel, TrainTrace)> {
    cfg.validate()?;
    let model = Rank1FnnModel::init(data.shape(), hidden, data.num_classes(), cfg)?;
    fit_rank1_fnn_from(model, data, cfg)
}

/// Block-alternating training of the rank-1 network.
///
/// Per sweep: for each mode `l` and each hidden unit `i`, rebuild
/// `τ_{≠l}^{(i)}` from the current factors (modes before `l` already
/// updated this sweep, later modes not yet), take one backtracking step
/// on `w_l^{(i)}`; then one step on the output weights; then rescale the
/// hidden components as [`crate::linear::fit_tensor_lr_from`] does.
pub fn fit_rank1_fnn_from(
    mut model: Rank1FnnModel,
    data: &PatchDataset,
    cfg: &TrainConfig,
) -> Result<(Rank1FnnModel, TrainTrace)> {
    cfg.validate()?;
    check_training_data(data, &model.input_shape, model.num_classes())?;
    let inputs = prepare(&model.transform, data)?;
    let labels = data.labels();

    let mut state = NetState::new(rank1_pre_activations(&model, &inputs), &model.output, labels, cfg.l2);
    let mut objective = state.objective(model.squared_norm());
    let mut trace = TrainTrace::new(objective);
    if !objective.is_finite() {
        return Err(Error::NonFinite {
            sweep: 0,
            block: "init".into(),
            value: objective,
        });
    }
    let mut previous = objective;
    for sweep in 0..cfg.max_sweeps {
        if sweep > 0 {
            state = NetState::new(rank1_pre_activations(&model, &inputs), &model.output, labels, cfg.l2);
            objective = state.objective(model.squared_norm());
        }
        for mode in 0..model.hidden.ndim() {
            for unit in 0..model.num_hidden() {
                let tau = rank1_unit_inputs(&model, &inputs, unit, mode);
                let mut w = model.hidden.column(mode, unit);
                let w_sq: f64 = w.iter().map(|v| v * v).sum();
                let others_sq = model.squared_norm() - w_sq;
                objective = state.step_unit(&model.output, unit, &tau, &mut w, others_sq, objective, cfg.learning_rate);
                model
                    .hidden
                    .factor_mut(mode)
                    .column_mut(unit)
                    .assign(&Array1::from(w));
                trace.record(sweep, Block::Hidden { mode, unit }, objective)?;
            }
        }
        let hidden_sq = model.hidden.squared_norm();
        objective = state.step_output(&mut model.output, hidden_sq, objective, cfg.learning_rate);
        trace.record(sweep, Block::Output, objective)?;

        if cfg.l2 > 0.0 {
            model.hidden.balance_columns();
        } else {
            model.hidden.normalize_columns();
        }
        trace.sweeps = sweep + 1;
        if relative_decrease(previous, objective) < cfg.rel_tol {
            trace.converged = true;
            break;
        }
        previous = objective;
    }
    Ok((model, trace))
}

pub fn fit_dense_fnn(data: &PatchDataset, cfg: &TrainConfig, hidden: usize) -> Result<(DenseFnnModel, TrainTrace)> {
    cfg.validate()?;
    let model = DenseFnnModel::init(data.shape(), hidden, data.num_classes(), cfg)?;
    fit_dense_fnn_from(model, data, cfg)
}

/// Dense counterpart of [`fit_rank1_fnn_from`]: one backtracking step per
/// hidden unit, then one on the output weights, per sweep.
pub fn fit_dense_fnn_from(
    mut model: DenseFnnModel,
    data: &PatchDataset,
    cfg: &TrainConfig,
) -> Result<(DenseFnnModel, TrainTrace)> {
    cfg.validate()?;
    check_training_data(data, &model.input_shape, model.num_classes())?;
    let inputs = prepare(&model.transform, data)?;
    let xs: Vec<Cow<[f64]>> = inputs.iter().map(|x| Cow::Borrowed(x.as_slice())).collect();
    let labels = data.labels();
    let total_sq = |m: &DenseFnnModel| sq_norm(&m.hidden) + sq_norm(&m.output);

    let mut state = NetState::new(dense_pre_activations(&model, &inputs), &model.output, labels, cfg.l2);
    let mut objective = state.objective(total_sq(&model));
    let mut trace = TrainTrace::new(objective);
    if !objective.is_finite() {
        return Err(Error::NonFinite {
            sweep: 0,
            block: "init".into(),
            value: objective,
        });
    }
    let mut previous = objective;
    for sweep in 0..cfg.max_sweeps {
        if sweep > 0 {
            state = NetState::new(dense_pre_activations(&model, &inputs), &model.output, labels, cfg.l2);
            objective = state.objective(total_sq(&model));
        }
        for unit in 0..model.num_hidden() {
            let mut w = model.hidden.row(unit).to_vec();
            let w_sq: f64 = w.iter().map(|v| v * v).sum();
            let others_sq = total_sq(&model) - w_sq;
            objective = state.step_unit(&model.output, unit, &xs, &mut w, others_sq, objective, cfg.learning_rate);
            model.hidden.row_mut(unit).assign(&Array1::from(w));
            trace.record(sweep, Block::Hidden { mode: 0, unit }, objective)?;
        }
        let hidden_sq = sq_norm(&model.hidden);
        objective = state.step_output(&mut model.output, hidden_sq, objective, cfg.learning_rate);
        trace.record(sweep, Block::Output, objective)?;
        trace.sweeps = sweep + 1;
        if relative_decrease(previous, objective) < cfg.rel_tol {
            trace.converged = true;
            break;
        }
        previous = objective;
    }
    Ok((model, trace))
}
