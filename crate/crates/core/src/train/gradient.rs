//! Train cost and its exact gradient by reverse accumulation through the layers.

use num_complex::Complex64;

use crate::error::{dim_err, Result};
use crate::linalg::ComplexMatrix;
use crate::mesh::{
    apply_block, apply_input_phases, apply_layer, check_inputs, mzi_block_with_derivs, BeamsplitterErrors,
    Layer, Mat2, MeshSpec, PhaseParams,
};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `||y_hat - y||_F^2`, the train cost of a batch.
pub fn train_cost(y_hat: &ComplexMatrix, y: &ComplexMatrix) -> Result<f64> {
    if y_hat.shape() != y.shape() {
        return dim_err(format!("outputs {:?} vs targets {:?}", y_hat.shape(), y.shape()));
    }
    Ok(y_hat.sub(y)?.frobenius_norm_sq())
}

/// Cost together with its gradient in every phase.
#[derive(Clone, Debug, PartialEq)]
pub struct CostGradient {
    pub cost: f64,
    pub grad: PhaseParams,
}

/// Forward activations kept for the reverse pass.
pub struct Tape<'a> {
    spec: &'a MeshSpec,
    blocks: Vec<(Mat2, Mat2, Mat2)>,
    /// `acts[0]` is the batch after `D(gamma)`; `acts[l + 1]` after layer `l`.
    acts: Vec<ComplexMatrix>,
}

impl Tape<'_> {
    pub fn output(&self) -> &ComplexMatrix {
        self.acts.last().expect("tape holds at least the input activation")
    }
}

/// Runs the mesh on `x`, recording every intermediate activation.
pub fn forward_tape<'a>(
    spec: &'a MeshSpec,
    params: &PhaseParams,
    errors: &BeamsplitterErrors,
    x: &ComplexMatrix,
) -> Result<Tape<'a>> {
    check_inputs(spec, params, errors, x)?;
    let blocks: Vec<_> = (0..spec.num_mzis())
        .map(|i| mzi_block_with_derivs(params.theta[i], params.phi[i], errors.eps1[i], errors.eps2[i]))
        .collect();
    let plain: Vec<Mat2> = blocks.iter().map(|b| b.0).collect();
    let mut acts = Vec::with_capacity(spec.layers().len() + 1);
    let mut a = x.clone();
    apply_input_phases(&params.gamma, &mut a);
    acts.push(a.clone());
    for li in 0..spec.layers().len() {
        apply_layer(spec, li, &plain, &mut a);
        acts.push(a.clone());
    }
    Ok(Tape { spec, blocks, acts })
}

fn adjoint2(m: &Mat2) -> Mat2 {
    [[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]]
}

/// `2 Re sum conj(g) (d a)` over rows `(t, t + 1)` of the batch.
fn contract(g: &ComplexMatrix, d: &Mat2, a: &ComplexMatrix, t: usize) -> f64 {
    let (g0, g1) = (g.row(t), g.row(t + 1));
    let (a0, a1) = (a.row(t), a.row(t + 1));
    let mut acc = 0.0;
    for b in 0..a0.len() {
        let v0 = d[0][0] * a0[b] + d[0][1] * a1[b];
        let v1 = d[1][0] * a0[b] + d[1][1] * a1[b];
        acc += (g0[b].conj() * v0 + g1[b].conj() * v1).re;
    }
    2.0 * acc
}

/// Reverse pass. `adjoint_out` is `dL/d conj(y)` up to the factor convention
/// `dL = 2 Re <adjoint_out, dy>`; for the train cost it is the residual
/// `y_hat - y`. Returns phase gradients and the adjoint at the mesh input.
pub fn backward(tape: &Tape, params: &PhaseParams, adjoint_out: &ComplexMatrix) -> Result<(PhaseParams, ComplexMatrix)> {
    let spec = tape.spec;
    if adjoint_out.shape() != tape.output().shape() {
        return dim_err(format!(
            "adjoint {:?} vs output {:?}",
            adjoint_out.shape(),
            tape.output().shape()
        ));
    }
    let mut grad = PhaseParams::zeros(spec);
    let mut g = adjoint_out.clone();
    for li in (0..spec.layers().len()).rev() {
        let a = &tape.acts[li];
        match &spec.layers()[li] {
            Layer::Mzi(tops) => {
                let off = spec.layer_offset(li);
                for (k, &t) in tops.iter().enumerate() {
                    let (m, d_theta, d_phi) = &tape.blocks[off + k];
                    grad.theta[off + k] = contract(&g, d_theta, a, t);
                    grad.phi[off + k] = contract(&g, d_phi, a, t);
                    apply_block(&adjoint2(m), t, &mut g);
                }
            }
            Layer::Perm(map) => g = g.permute_rows(map),
        }
    }
    let a0 = &tape.acts[0];
    for (k, gk) in grad.gamma.iter_mut().enumerate() {
        *gk = 2.0 * g.row(k).iter().zip(a0.row(k)).map(|(gv, av)| (gv.conj() * I * av).re).sum::<f64>();
    }
    let phases: Vec<f64> = params.gamma.iter().map(|p| -p).collect();
    apply_input_phases(&phases, &mut g);
    Ok((grad, g))
}

/// Exact gradient of `||mesh(x) - y||_F^2` with respect to every phase.
pub fn gradients(
    spec: &MeshSpec,
    params: &PhaseParams,
    errors: &BeamsplitterErrors,
    x: &ComplexMatrix,
    y: &ComplexMatrix,
) -> Result<CostGradient> {
    let tape = forward_tape(spec, params, errors, x)?;
    let residual = tape.output().sub(y)?;
    let cost = residual.frobenius_norm_sq();
    let (grad, _) = backward(&tape, params, &residual)?;
    Ok(CostGradient { cost, grad })
}

/// Central finite-difference gradient of the train cost, one parameter at a time.
pub fn finite_difference_gradients(
    spec: &MeshSpec,
    params: &PhaseParams,
    errors: &BeamsplitterErrors,
    x: &ComplexMatrix,
    y: &ComplexMatrix,
    step: f64,
) -> Result<PhaseParams> {
    let cost = |p: &PhaseParams| -> Result<f64> { train_cost(&crate::mesh::forward(spec, p, errors, x)?, y) };
    cost(params)?;
    let m = spec.num_mzis();
    let mut flat = params.to_flat();
    let mut out = vec![0.0; flat.len()];
    for i in 0..flat.len() {
        let orig = flat[i];
        flat[i] = orig + step;
        let plus = cost(&PhaseParams::from_flat(&flat, m))?;
        flat[i] = orig - step;
        let minus = cost(&PhaseParams::from_flat(&flat, m))?;
        flat[i] = orig;
        out[i] = (plus - minus) / (2.0 * step);
    }
    Ok(PhaseParams::from_flat(&out, m))
}

/// Largest entrywise relative error between an analytic gradient `a` and a
/// reference `f`, with each denominator floored at `1e-3 max|f|` so entries
/// that vanish do not dominate.
pub fn max_relative_error(a: &[f64], f: &[f64]) -> f64 {
    let scale = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = (1e-3 * scale).max(f64::MIN_POSITIVE);
    a.iter()
        .zip(f)
        .map(|(x, y)| (x - y).abs() / y.abs().max(floor))
        .fold(0.0, f64::max)
}
