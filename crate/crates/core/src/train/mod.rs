//! Training meshes toward target unitaries and general matrices.
//!
//! Every iteration draws a fresh batch of `batch_size` random unit vectors
//! `X`, evaluates `||U_mesh X - U X||_F^2` and its exact gradient, and takes
//! one optimizer step. The test cost is the normalized mean square error of
//! the full mesh matrix against the target (identity test set), sampled
//! every `test_stride` iterations and once more after the final step.
//!
//! Random streams derive from `seed`: substream 1 initializes phases,
//! substream 2 samples beamsplitter errors, substream 3 draws batches.

mod gradient;
mod optim;
mod svd;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{dim_err, Error, Result};
use crate::haar::{haar_initialize, uniform_initialize};
use crate::linalg::{is_unitary, mse_cost, random_unit_columns, ComplexMatrix, RealMatrix};
use crate::mesh::{mesh_unitary, BeamsplitterErrors, MeshSpec, PhaseParams};
use crate::rng::SeededRng;

pub use gradient::{
    backward, finite_difference_gradients, forward_tape, gradients, max_relative_error, train_cost, CostGradient,
    Tape,
};
pub use optim::{adam_step, sgd_step, AdamState, Optimizer};
pub use svd::{svd_gradients, svd_test_cost, train_svd, train_svd_from, SvdModel, SvdTrace};

pub(crate) const INIT_STREAM: u64 = 1;
pub(crate) const ERROR_STREAM: u64 = 2;
pub(crate) const BATCH_STREAM: u64 = 3;

/// Beamsplitter error model applied to the trained mesh.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorModel {
    #[default]
    None,
    /// `eps ~ N(0, sigma^2)`, shared by both couplers of an MZI.
    Gaussian { sigma: f64 },
}

/// Phase initialization strategy.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitKind {
    #[default]
    Haar,
    Uniform,
}

fn default_stride() -> usize {
    50
}

/// Training hyperparameters; the JSON config file uses these field names.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub iterations: usize,
    /// Columns per batch; `2N` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[serde(default)]
    pub optimizer: Optimizer,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub error_model: ErrorModel,
    #[serde(default)]
    pub init: InitKind,
    #[serde(default = "default_stride")]
    pub test_stride: usize,
}

impl TrainConfig {
    /// Adam at the given learning rate, batch `2N`, Haar init, ideal beamsplitters.
    pub fn new(learning_rate: f64, iterations: usize, seed: u64) -> Self {
        Self {
            learning_rate,
            iterations,
            batch_size: None,
            optimizer: Optimizer::default(),
            seed,
            error_model: ErrorModel::None,
            init: InitKind::Haar,
            test_stride: default_stride(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Domain(format!("learning rate {} must be > 0", self.learning_rate)));
        }
        if self.iterations == 0 || self.batch_size == Some(0) || self.test_stride == 0 {
            return Err(Error::Domain("iterations, batch size and test stride must be >= 1".into()));
        }
        if let ErrorModel::Gaussian { sigma } = self.error_model {
            if !(sigma.is_finite() && sigma >= 0.0) {
                return Err(Error::Domain(format!("error sigma {sigma} must be >= 0")));
            }
        }
        if let Optimizer::Adam { beta1, beta2, eps } = self.optimizer {
            if !((0.0..1.0).contains(&beta1) && (0.0..1.0).contains(&beta2) && eps > 0.0) {
                return Err(Error::Domain("adam needs 0 <= beta < 1 and eps > 0".into()));
            }
        }
        Ok(())
    }

    pub fn batch_for(&self, n: usize) -> usize {
        self.batch_size.unwrap_or(2 * n)
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        let c: Self = crate::io::read_json(path)?;
        c.validate()?;
        Ok(c)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::io::write_json(path, self)
    }

    /// Initial phases for `spec` drawn from the init substream.
    pub fn initial_params(&self, spec: &MeshSpec) -> PhaseParams {
        let mut rng = SeededRng::new(self.seed).substream(INIT_STREAM);
        initialize(spec, self.init, &mut rng)
    }

    /// Beamsplitter errors for `spec` drawn from the error substream.
    pub fn sample_errors(&self, spec: &MeshSpec) -> BeamsplitterErrors {
        let mut rng = SeededRng::new(self.seed).substream(ERROR_STREAM);
        sample_errors(spec, self.error_model, &mut rng)
    }
}

pub(crate) fn initialize(spec: &MeshSpec, init: InitKind, rng: &mut SeededRng) -> PhaseParams {
    match init {
        InitKind::Haar => haar_initialize(spec, rng),
        InitKind::Uniform => uniform_initialize(spec, rng),
    }
}

pub(crate) fn sample_errors(spec: &MeshSpec, model: ErrorModel, rng: &mut SeededRng) -> BeamsplitterErrors {
    match model {
        ErrorModel::None => BeamsplitterErrors::none(spec),
        ErrorModel::Gaussian { sigma } => BeamsplitterErrors::gaussian(spec, sigma, rng),
    }
}

/// Train cost per iteration and the periodic test cost.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CostHistory {
    /// Batch cost at each iteration, before that iteration's step.
    pub train: Vec<f64>,
    /// `(iteration, test cost)`; iteration `k` is evaluated before step `k`,
    /// and the last entry (iteration = total) after the final step.
    pub test: Vec<(usize, f64)>,
}

impl CostHistory {
    pub fn initial_test_cost(&self) -> f64 {
        self.test.first().map_or(f64::NAN, |t| t.1)
    }

    pub fn final_test_cost(&self) -> f64 {
        self.test.last().map_or(f64::NAN, |t| t.1)
    }

    /// CSV with columns `iteration,train_cost,test_cost`; absent values are empty.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let last = self.test.last().map_or(0, |t| t.0).max(self.train.len().saturating_sub(1));
        let fmt = |c: Option<f64>| c.and_then(crate::io::fmt17::format).unwrap_or_default();
        let mut test = self.test.iter().peekable();
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["iteration", "train_cost", "test_cost"])?;
        for i in 0..=last {
            let tc = test.next_if(|t| t.0 == i).map(|t| t.1);
            w.write_record([i.to_string(), fmt(self.train.get(i).copied()), fmt(tc)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Outcome of [`train_unitary`].
#[derive(Clone, Debug, PartialEq)]
pub struct TrainTrace {
    pub history: CostHistory,
    pub params: PhaseParams,
    pub errors: BeamsplitterErrors,
    /// `|U_mesh - U|` elementwise after training.
    pub error_map: RealMatrix,
}

impl TrainTrace {
    pub fn final_test_cost(&self) -> f64 {
        self.history.final_test_cost()
    }

    /// Writes `costs.csv`, `params.json`, `errors.json` and `error_map.json` into `dir`.
    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        self.history.write_csv(dir.join("costs.csv"))?;
        crate::io::write_json(dir.join("params.json"), &self.params)?;
        self.errors.write_json(dir.join("errors.json"))?;
        self.error_map.write_json(dir.join("error_map.json"))
    }
}

fn check_target(spec: &MeshSpec, target: &ComplexMatrix) -> Result<()> {
    if target.shape() != (spec.n(), spec.n()) {
        return dim_err(format!("{:?} target for a {}-waveguide mesh", target.shape(), spec.n()));
    }
    if !is_unitary(target, 1e-8)? {
        return Err(Error::Validation("training target is not unitary".into()));
    }
    Ok(())
}

/// Initializes phases and errors from `config` and trains toward `target`.
pub fn train_unitary(spec: &MeshSpec, target: &ComplexMatrix, config: &TrainConfig) -> Result<TrainTrace> {
    config.validate()?;
    check_target(spec, target)?;
    let params = config.initial_params(spec);
    let errors = config.sample_errors(spec);
    train_unitary_from(spec, params, &errors, target, config)
}

/// Trains from the given starting phases and fixed beamsplitter errors;
/// `config.init` and `config.error_model` are not consulted.
pub fn train_unitary_from(
    spec: &MeshSpec,
    params: PhaseParams,
    errors: &BeamsplitterErrors,
    target: &ComplexMatrix,
    config: &TrainConfig,
) -> Result<TrainTrace> {
    config.validate()?;
    check_target(spec, target)?;
    params.check(spec)?;
    errors.check(spec)?;
    let n = spec.n();
    let m = spec.num_mzis();
    let batch = config.batch_for(n);
    let mut rng = SeededRng::new(config.seed).substream(BATCH_STREAM);
    let test_cost = |p: &PhaseParams| -> Result<f64> { mse_cost(&mesh_unitary(spec, p, errors)?, target) };

    let mut flat = params.to_flat();
    let mut stepper = optim::Stepper::new(config.optimizer, flat.len());
    let mut history = CostHistory {
        train: Vec::with_capacity(config.iterations),
        test: Vec::new(),
    };
    for it in 0..config.iterations {
        let p = PhaseParams::from_flat(&flat, m);
        if it % config.test_stride == 0 {
            history.test.push((it, test_cost(&p)?));
        }
        let x = random_unit_columns(n, batch, &mut rng)?;
        let y = target.matmul(&x)?;
        let cg = gradients(spec, &p, errors, &x, &y)?;
        history.train.push(cg.cost);
        stepper.step(&mut flat, &cg.grad.to_flat(), config.learning_rate)?;
    }
    let params = PhaseParams::from_flat(&flat, m);
    let u_hat = mesh_unitary(spec, &params, errors)?;
    history.test.push((config.iterations, mse_cost(&u_hat, target)?));
    Ok(TrainTrace {
        history,
        error_map: crate::analysis::error_map(&u_hat, target)?,
        params,
        errors: errors.clone(),
    })
}
