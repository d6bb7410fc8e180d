//! Model assembly and training: a registry of sequence-stack builders, a
//! dense readout head sized `horizon × n_series`, and a deterministic
//! full-batch Adam loop.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use skillcast_nn::{
    clip_global_norm, mse_loss, AdamConfig, AdamState, Conv1d, Dense, Gru, Lstm, Param,
    SequenceLayer, Tensor, DEFAULT_CLIP_NORM, MAX_KERNEL, MIN_KERNEL,
};

use crate::error::{Error, Result};
use crate::preprocess::WindowSet;

#[derive(
    Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum ArchitectureKind {
    Lstm,
    Gru,
    CnnLstm,
}

impl ArchitectureKind {
    pub const ALL: [ArchitectureKind; 3] =
        [ArchitectureKind::Lstm, ArchitectureKind::Gru, ArchitectureKind::CnnLstm];

    pub fn name(self) -> &'static str {
        match self {
            ArchitectureKind::Lstm => "lstm",
            ArchitectureKind::Gru => "gru",
            ArchitectureKind::CnnLstm => "cnn_lstm",
        }
    }
}

impl fmt::Display for ArchitectureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ArchitectureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lstm" => Ok(ArchitectureKind::Lstm),
            "gru" => Ok(ArchitectureKind::Gru),
            "cnn_lstm" | "cnn-lstm" => Ok(ArchitectureKind::CnnLstm),
            other => Err(Error::Config(format!(
                "unknown architecture `{other}`; expected lstm, gru, or cnn_lstm"
            ))),
        }
    }
}

pub const MIN_NEURONS: usize = 1;
pub const MAX_NEURONS: usize = 10;
pub const MIN_FILTERS: usize = 1;
pub const MAX_FILTERS: usize = 10;
/// Bias added to the forget gate at initialization so cells start persistent.
pub const FORGET_BIAS: f64 = 1.0;

/// One architecture choice: stack shape plus, for the convolutional
/// variant, its front-end filter bank.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchitectureSpec {
    pub kind: ArchitectureKind,
    /// Number of recurrent layers.
    pub layers: usize,
    /// Hidden width of every recurrent layer.
    pub neurons: usize,
    /// Convolution kernel width; required for `cnn_lstm`, absent otherwise.
    #[serde(default)]
    pub kernel: Option<usize>,
    /// Convolution filter count; defaults to `neurons` when absent.
    #[serde(default)]
    pub filters: Option<usize>,
}

impl ArchitectureSpec {
    pub fn new(kind: ArchitectureKind, layers: usize, neurons: usize) -> Self {
        Self { kind, layers, neurons, kernel: None, filters: None }
    }

    pub fn with_kernel(mut self, kernel: usize) -> Self {
        self.kernel = Some(kernel);
        self
    }

    pub fn resolved_filters(&self) -> usize {
        self.filters.unwrap_or(self.neurons)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers < 1 {
            return Err(Error::Config("layers must be >= 1".into()));
        }
        if !(MIN_NEURONS..=MAX_NEURONS).contains(&self.neurons) {
            return Err(Error::Config(format!(
                "neurons = {} outside [{MIN_NEURONS}, {MAX_NEURONS}]",
                self.neurons
            )));
        }
        match self.kind {
            ArchitectureKind::CnnLstm => {
                let kernel = self.kernel.ok_or_else(|| {
                    Error::Config("cnn_lstm requires a kernel size".into())
                })?;
                if !(MIN_KERNEL..=MAX_KERNEL).contains(&kernel) {
                    return Err(Error::Config(format!(
                        "kernel = {kernel} outside [{MIN_KERNEL}, {MAX_KERNEL}]"
                    )));
                }
                let filters = self.resolved_filters();
                if !(MIN_FILTERS..=MAX_FILTERS).contains(&filters) {
                    return Err(Error::Config(format!(
                        "filters = {filters} outside [{MIN_FILTERS}, {MAX_FILTERS}]"
                    )));
                }
            }
            ArchitectureKind::Lstm | ArchitectureKind::Gru => {
                if self.kernel.is_some() || self.filters.is_some() {
                    return Err(Error::Config(format!(
                        "kernel/filters only apply to cnn_lstm, not {}",
                        self.kind
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Builds the sequence stack for one architecture family; the readout head
/// is appended by [`ForecastModel`].
pub trait ArchitectureBuilder: Send + Sync {
    fn name(&self) -> &'static str;

    fn build(
        &self,
        spec: &ArchitectureSpec,
        n_series: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<Box<dyn SequenceLayer>>>;
}

struct LstmStack;

impl ArchitectureBuilder for LstmStack {
    fn name(&self) -> &'static str {
        "lstm"
    }

    fn build(
        &self,
        spec: &ArchitectureSpec,
        n_series: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<Box<dyn SequenceLayer>>> {
        let mut layers: Vec<Box<dyn SequenceLayer>> = Vec::with_capacity(spec.layers);
        let mut width = n_series;
        for i in 0..spec.layers {
            layers.push(Box::new(Lstm::new(
                &format!("lstm{i}"),
                width,
                spec.neurons,
                FORGET_BIAS,
                rng,
            )));
            width = spec.neurons;
        }
        Ok(layers)
    }
}

struct GruStack;

impl ArchitectureBuilder for GruStack {
    fn name(&self) -> &'static str {
        "gru"
    }

    fn build(
        &self,
        spec: &ArchitectureSpec,
        n_series: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<Box<dyn SequenceLayer>>> {
        let mut layers: Vec<Box<dyn SequenceLayer>> = Vec::with_capacity(spec.layers);
        let mut width = n_series;
        for i in 0..spec.layers {
            layers.push(Box::new(Gru::new(&format!("gru{i}"), width, spec.neurons, rng)));
            width = spec.neurons;
        }
        Ok(layers)
    }
}

struct CnnLstmStack;

impl ArchitectureBuilder for CnnLstmStack {
    fn name(&self) -> &'static str {
        "cnn_lstm"
    }

    fn build(
        &self,
        spec: &ArchitectureSpec,
        n_series: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<Box<dyn SequenceLayer>>> {
        let kernel = spec
            .kernel
            .ok_or_else(|| Error::Config("cnn_lstm requires a kernel size".into()))?;
        let filters = spec.resolved_filters();
        let mut layers: Vec<Box<dyn SequenceLayer>> = Vec::with_capacity(spec.layers + 1);
        layers.push(Box::new(Conv1d::new("conv", n_series, filters, kernel, rng)?));
        let mut width = filters;
        for i in 0..spec.layers {
            layers.push(Box::new(Lstm::new(
                &format!("lstm{i}"),
                width,
                spec.neurons,
                FORGET_BIAS,
                rng,
            )));
            width = spec.neurons;
        }
        Ok(layers)
    }
}

/// Name-keyed registry of stack builders. Architectures are looked up at
/// run time by the name carried in configs and reports.
pub struct ArchitectureRegistry {
    builders: BTreeMap<&'static str, Box<dyn ArchitectureBuilder>>,
}

impl ArchitectureRegistry {
    /// Registry with the three built-in families: `lstm`, `gru`, `cnn_lstm`.
    pub fn builtin() -> Self {
        let mut registry = Self { builders: BTreeMap::new() };
        registry.register(Box::new(LstmStack));
        registry.register(Box::new(GruStack));
        registry.register(Box::new(CnnLstmStack));
        registry
    }

    pub fn register(&mut self, builder: Box<dyn ArchitectureBuilder>) {
        self.builders.insert(builder.name(), builder);
    }

    pub fn get(&self, name: &str) -> Result<&dyn ArchitectureBuilder> {
        self.builders.get(name).map(AsRef::as_ref).ok_or_else(|| {
            Error::Config(format!(
                "unknown architecture `{name}`; registered: {}",
                self.names().join(", ")
            ))
        })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.builders.keys().copied().collect()
    }
}

/// A sequence stack plus dense readout head mapping the final step's hidden
/// state to all `horizon × n_series` outputs at once.
pub struct ForecastModel {
    spec: ArchitectureSpec,
    n_series: usize,
    lag: usize,
    horizon: usize,
    seed: u64,
    layers: Vec<Box<dyn SequenceLayer>>,
    head: Dense,
}

impl ForecastModel {
    pub fn build(
        spec: ArchitectureSpec,
        n_series: usize,
        lag: usize,
        horizon: usize,
        seed: u64,
    ) -> Result<Self> {
        Self::build_with(&ArchitectureRegistry::builtin(), spec, n_series, lag, horizon, seed)
    }

    pub fn build_with(
        registry: &ArchitectureRegistry,
        spec: ArchitectureSpec,
        n_series: usize,
        lag: usize,
        horizon: usize,
        seed: u64,
    ) -> Result<Self> {
        spec.validate()?;
        if n_series < 1 || lag < 1 || horizon < 1 {
            return Err(Error::Config(format!(
                "n_series = {n_series}, lag = {lag}, horizon = {horizon} must all be >= 1"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = registry.get(spec.kind.name())?.build(&spec, n_series, &mut rng)?;
        let last_width = layers.last().map_or(n_series, |l| l.out_width());
        let head = Dense::new("head", last_width, horizon * n_series, &mut rng);
        Ok(Self { spec, n_series, lag, horizon, seed, layers, head })
    }

    pub fn spec(&self) -> &ArchitectureSpec {
        &self.spec
    }

    pub fn n_series(&self) -> usize {
        self.n_series
    }

    pub fn lag(&self) -> usize {
        self.lag
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Output width: all horizon steps of every series in one shot.
    pub fn head_width(&self) -> usize {
        self.horizon * self.n_series
    }

    fn run_forward(&mut self, window: &[f64]) -> Result<Tensor> {
        let mut x = Tensor::new(vec![self.lag, self.n_series], window.to_vec())
            .map_err(Error::from)?;
        for layer in &mut self.layers {
            x = layer.forward(&x)?;
        }
        let last = x.row(x.rows() - 1).to_vec();
        Ok(self.head.forward(&Tensor::vector(last))?)
    }

    /// Accumulates parameter gradients for the most recent forward pass.
    fn run_backward(&mut self, grad_out: &Tensor) -> Result<()> {
        let grad_last = self.head.backward(grad_out)?;
        let width = self.layers.last().map_or(self.n_series, |l| l.out_width());
        let mut g = Tensor::zeros(&[self.lag, width]);
        g.row_mut(self.lag - 1).copy_from_slice(grad_last.data());
        for layer in self.layers.iter_mut().rev() {
            g = layer.backward(&g)?;
        }
        Ok(())
    }

    /// Predicts every future step in a single forward pass. The input is a
    /// flat `[lag × n_series]` window and the output a flat
    /// `[horizon × n_series]` block, both time-major then series — the same
    /// ordering the window builder uses.
    pub fn forecast_one_shot(&mut self, window: &[f64]) -> Result<Vec<f64>> {
        Ok(self.run_forward(window)?.into_data())
    }

    fn params(&self) -> Vec<&Param> {
        let mut params: Vec<&Param> = Vec::new();
        for layer in &self.layers {
            params.extend(layer.params());
        }
        params.extend(self.head.params());
        params
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut params: Vec<&mut Param> = Vec::new();
        for layer in &mut self.layers {
            params.extend(layer.params_mut());
        }
        params.extend(self.head.params_mut());
        params
    }

    fn zero_grad(&mut self) {
        for layer in &mut self.layers {
            layer.zero_grad();
        }
        self.head.zero_grad();
    }

    pub fn checkpoint(&self) -> ModelCheckpoint {
        ModelCheckpoint {
            spec: self.spec,
            n_series: self.n_series,
            lag: self.lag,
            horizon: self.horizon,
            seed: self.seed,
            params: self
                .params()
                .into_iter()
                .map(|p| (p.name.clone(), p.value.clone()))
                .collect(),
        }
    }

    pub fn from_checkpoint(checkpoint: &ModelCheckpoint) -> Result<Self> {
        let mut model = Self::build(
            checkpoint.spec,
            checkpoint.n_series,
            checkpoint.lag,
            checkpoint.horizon,
            checkpoint.seed,
        )?;
        let mut params = model.params_mut();
        if params.len() != checkpoint.params.len() {
            return Err(Error::Config(format!(
                "checkpoint carries {} tensors, model has {}",
                checkpoint.params.len(),
                params.len()
            )));
        }
        for param in params.iter_mut() {
            let stored = checkpoint.params.get(&param.name).ok_or_else(|| {
                Error::Config(format!("checkpoint is missing tensor `{}`", param.name))
            })?;
            if stored.shape() != param.value.shape() {
                return Err(Error::Config(format!(
                    "checkpoint tensor `{}` has shape {:?}, expected {:?}",
                    param.name,
                    stored.shape(),
                    param.value.shape()
                )));
            }
            param.value = stored.clone();
        }
        Ok(model)
    }
}

/// Exact parameter snapshot; JSON round-trips bit-for-bit.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelCheckpoint {
    pub spec: ArchitectureSpec,
    pub n_series: usize,
    pub lag: usize,
    pub horizon: usize,
    pub seed: u64,
    pub params: BTreeMap<String, Tensor>,
}

/// Whether a model forecasts all series jointly or one named skill alone.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ForecastMode {
    Multivariate,
    Univariate(String),
}

impl fmt::Display for ForecastMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ForecastMode::Multivariate => f.write_str("multivariate"),
            ForecastMode::Univariate(skill) => write!(f, "univariate({skill})"),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct TrainConfig {
    pub epochs: usize,
    pub optimizer: AdamConfig,
    /// Global gradient-norm ceiling; `None` disables clipping.
    pub clip_norm: Option<f64>,
    /// Windows per optimizer step; `None` means the full batch every step.
    pub batch_size: Option<usize>,
}

impl TrainConfig {
    pub fn new(epochs: usize) -> Self {
        Self {
            epochs,
            optimizer: AdamConfig::default(),
            clip_norm: Some(DEFAULT_CLIP_NORM),
            batch_size: None,
        }
    }
}

pub struct TrainedModel {
    pub model: ForecastModel,
    /// Mean window loss per epoch; always `epochs` long.
    pub loss_history: Vec<f64>,
    pub mode: ForecastMode,
}

/// Runs Adam over mean squared error. Windows are visited in a fixed order
/// with no sampling, so the result depends only on the model's seed and the
/// data.
pub fn train(
    mut model: ForecastModel,
    windows: &WindowSet,
    config: &TrainConfig,
    mode: ForecastMode,
) -> Result<TrainedModel> {
    if windows.lag != model.lag || windows.n_series() != model.n_series {
        return Err(Error::Config(format!(
            "window set is lag {} x {} series; model expects lag {} x {}",
            windows.lag,
            windows.n_series(),
            model.lag,
            model.n_series
        )));
    }
    if windows.horizon != model.horizon {
        return Err(Error::Config(format!(
            "window set horizon {} does not match model horizon {}",
            windows.horizon, model.horizon
        )));
    }
    let n = windows.n_samples();
    if n == 0 {
        return Err(Error::InsufficientData("no training windows".into()));
    }
    if config.epochs < 1 {
        return Err(Error::Config("epochs must be >= 1".into()));
    }
    if config.batch_size == Some(0) {
        return Err(Error::Config("batch_size must be >= 1".into()));
    }
    let batch = config.batch_size.unwrap_or(n).min(n);

    let mut adam = AdamState::new(config.optimizer, &model.params());
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let mut epoch_loss = 0.0;
        let mut start = 0;
        while start < n {
            let end = (start + batch).min(n);
            let scale = 1.0 / (end - start) as f64;
            model.zero_grad();
            for i in start..end {
                let output = model.run_forward(&windows.inputs[i])?;
                let target = Tensor::vector(windows.targets[i].clone());
                let (loss, mut grad) = mse_loss(&output, &target)?;
                epoch_loss += loss;
                for g in grad.data_mut() {
                    *g *= scale;
                }
                model.run_backward(&grad)?;
            }
            if let Some(max_norm) = config.clip_norm {
                clip_global_norm(&mut model.params_mut(), max_norm);
            }
            adam.step(&mut model.params_mut()).map_err(|e| Error::Divergence {
                epoch,
                detail: e.to_string(),
            })?;
            start = end;
        }
        let mean_loss = epoch_loss / n as f64;
        if !mean_loss.is_finite() {
            return Err(Error::Divergence {
                epoch,
                detail: format!("mean training loss became {mean_loss}"),
            });
        }
        history.push(mean_loss);
    }
    Ok(TrainedModel { model, loss_history: history, mode })
}
