//! Two meshes around a diagonal gain layer: `A_hat = U_mesh diag(sigma) V_mesh`.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{gradient, initialize, optim, sample_errors, CostHistory, TrainConfig};
use super::{BATCH_STREAM, ERROR_STREAM, INIT_STREAM};
use crate::error::{dim_err, Error, Result};
use crate::linalg::{random_unit_columns, ComplexMatrix, RealMatrix};
use crate::mesh::{forward, rectangular_spec, BeamsplitterErrors, Mesh, PhaseParams};
use crate::rng::SeededRng;

/// Linear operator built from an output mesh `u`, nonnegative gains `sigma`
/// and an input mesh `v`. The input mesh is applied first and implements the
/// `V^dagger` factor of an SVD directly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvdModel {
    pub u: Mesh,
    pub v: Mesh,
    #[serde(serialize_with = "crate::io::fmt17::serialize")]
    pub sigma: Vec<f64>,
}

impl SvdModel {
    pub fn new(u: Mesh, v: Mesh, sigma: Vec<f64>) -> Result<Self> {
        let n = u.spec.n();
        if v.spec.n() != n || sigma.len() != n {
            return dim_err(format!(
                "meshes of {} and {} waveguides with {} gains",
                n,
                v.spec.n(),
                sigma.len()
            ));
        }
        if sigma.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::Domain("gains must be finite and nonnegative".into()));
        }
        Ok(Self { u, v, sigma })
    }

    pub fn n(&self) -> usize {
        self.u.spec.n()
    }

    /// Applies the model to the batch `x`.
    pub fn apply(&self, eu: &BeamsplitterErrors, ev: &BeamsplitterErrors, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        let mut z = forward(&self.v.spec, &self.v.params, ev, x)?;
        scale_rows(&mut z, &self.sigma);
        forward(&self.u.spec, &self.u.params, eu, &z)
    }

    pub fn matrix(&self, eu: &BeamsplitterErrors, ev: &BeamsplitterErrors) -> Result<ComplexMatrix> {
        self.apply(eu, ev, &ComplexMatrix::identity(self.n()))
    }

    fn to_flat(&self) -> Vec<f64> {
        let mut v = self.u.params.to_flat();
        v.extend(self.v.params.to_flat());
        v.extend_from_slice(&self.sigma);
        v
    }

    fn set_flat(&mut self, flat: &[f64]) {
        let (pu, rest) = flat.split_at(self.u.params.len());
        let (pv, s) = rest.split_at(self.v.params.len());
        self.u.params = PhaseParams::from_flat(pu, self.u.spec.num_mzis());
        self.v.params = PhaseParams::from_flat(pv, self.v.spec.num_mzis());
        self.sigma = s.to_vec();
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::io::write_json(path, self)
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        let m: Self = crate::io::read_json(path)?;
        Self::new(m.u, m.v, m.sigma)
    }
}

fn scale_rows(z: &mut ComplexMatrix, s: &[f64]) {
    for (k, &sk) in s.iter().enumerate() {
        z.row_mut(k).iter_mut().for_each(|v| *v *= sk);
    }
}

/// `N ||A_hat - A||_F^2 / (2 ||A||_F^2)`.
pub fn svd_test_cost(a_hat: &ComplexMatrix, a: &ComplexMatrix) -> Result<f64> {
    let norm = a.frobenius_norm_sq();
    if norm == 0.0 {
        return Err(Error::Domain("target matrix is zero".into()));
    }
    Ok(a.rows() as f64 * a_hat.sub(a)?.frobenius_norm_sq() / (2.0 * norm))
}

/// Train cost `||A_hat x - y||_F^2` and its gradient, flattened as
/// `[u phases..., v phases..., sigma...]`.
pub fn svd_gradients(
    model: &SvdModel,
    eu: &BeamsplitterErrors,
    ev: &BeamsplitterErrors,
    x: &ComplexMatrix,
    y: &ComplexMatrix,
) -> Result<(f64, Vec<f64>)> {
    let tape_v = gradient::forward_tape(&model.v.spec, &model.v.params, ev, x)?;
    let w = tape_v.output();
    let mut z = w.clone();
    scale_rows(&mut z, &model.sigma);
    let tape_u = gradient::forward_tape(&model.u.spec, &model.u.params, eu, &z)?;
    let residual = tape_u.output().sub(y)?;
    let cost = residual.frobenius_norm_sq();
    let (gu, mut gz) = gradient::backward(&tape_u, &model.u.params, &residual)?;
    let gsigma: Vec<f64> = (0..model.n())
        .map(|k| {
            2.0 * gz
                .row(k)
                .iter()
                .zip(w.row(k))
                .map(|(g, a): (&Complex64, &Complex64)| (g.conj() * a).re)
                .sum::<f64>()
        })
        .collect();
    scale_rows(&mut gz, &model.sigma);
    let (gv, _) = gradient::backward(&tape_v, &model.v.params, &gz)?;
    let mut flat = gu.to_flat();
    flat.extend(gv.to_flat());
    flat.extend(gsigma);
    Ok((cost, flat))
}

/// Outcome of [`train_svd`].
#[derive(Clone, Debug, PartialEq)]
pub struct SvdTrace {
    pub history: CostHistory,
    pub model: SvdModel,
    pub error_map: RealMatrix,
}

impl SvdTrace {
    pub fn final_test_cost(&self) -> f64 {
        self.history.final_test_cost()
    }

    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        self.history.write_csv(dir.join("costs.csv"))?;
        self.model.write_json(dir.join("model.json"))?;
        self.error_map.write_json(dir.join("error_map.json"))
    }
}

/// Trains a square SVD model toward `a` from a fresh initialization.
///
/// Both meshes are square rectangular meshes initialized per `config.init`
/// (output mesh first); gains start at `||A||_F / sqrt(N)`. Only `M = N`
/// is supported.
pub fn train_svd(m_dim: usize, n_dim: usize, a: &ComplexMatrix, config: &TrainConfig) -> Result<SvdTrace> {
    if m_dim != n_dim {
        return Err(Error::Unsupported(format!("{m_dim}x{n_dim} operators; only square targets")));
    }
    if a.shape() != (m_dim, n_dim) {
        return dim_err(format!("target {:?} but model is {m_dim}x{n_dim}", a.shape()));
    }
    config.validate()?;
    let spec = rectangular_spec(n_dim, n_dim)?;
    let root = SeededRng::new(config.seed);
    let mut init = root.substream(INIT_STREAM);
    let u = Mesh::new(spec.clone(), initialize(&spec, config.init, &mut init))?;
    let v = Mesh::new(spec.clone(), initialize(&spec, config.init, &mut init))?;
    let mut err = root.substream(ERROR_STREAM);
    let eu = sample_errors(&spec, config.error_model, &mut err);
    let ev = sample_errors(&spec, config.error_model, &mut err);
    let s0 = (a.frobenius_norm_sq() / n_dim as f64).sqrt();
    let model = SvdModel::new(u, v, vec![s0; n_dim])?;
    train_svd_from(model, &eu, &ev, a, config)
}

/// Trains an existing model; gains are projected onto `sigma >= 0` after every step.
pub fn train_svd_from(
    mut model: SvdModel,
    eu: &BeamsplitterErrors,
    ev: &BeamsplitterErrors,
    a: &ComplexMatrix,
    config: &TrainConfig,
) -> Result<SvdTrace> {
    config.validate()?;
    let n = model.n();
    if a.shape() != (n, n) {
        return dim_err(format!("target {:?} for an {n}-mode model", a.shape()));
    }
    if !a.is_finite() {
        return Err(Error::Validation("target has non-finite entries".into()));
    }
    let batch = config.batch_for(n);
    let mut rng = SeededRng::new(config.seed).substream(BATCH_STREAM);
    let mut flat = model.to_flat();
    let gains = flat.len() - n;
    let mut stepper = optim::Stepper::new(config.optimizer, flat.len());
    let mut history = CostHistory::default();
    for it in 0..config.iterations {
        if it % config.test_stride == 0 {
            history.test.push((it, svd_test_cost(&model.matrix(eu, ev)?, a)?));
        }
        let x = random_unit_columns(n, batch, &mut rng)?;
        let y = a.matmul(&x)?;
        let (cost, grad) = svd_gradients(&model, eu, ev, &x, &y)?;
        history.train.push(cost);
        stepper.step(&mut flat, &grad, config.learning_rate)?;
        flat[gains..].iter_mut().for_each(|s| *s = s.max(0.0));
        model.set_flat(&flat);
    }
    let a_hat = model.matrix(eu, ev)?;
    history.test.push((config.iterations, svd_test_cost(&a_hat, a)?));
    Ok(SvdTrace {
        history,
        error_map: crate::analysis::error_map(&a_hat, a)?,
        model,
    })
}
