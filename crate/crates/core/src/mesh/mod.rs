//! Mesh topologies, MZI physics and forward propagation of fields.

mod mzi;
mod topology;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{dim_err, Error, Result};
use crate::linalg::{ComplexMatrix, RealMatrix};
use crate::rng::SeededRng;

pub(crate) use mzi::{mzi_block, mzi_block_with_derivs, Mat2};
pub use mzi::{mzi_matrix, reflectivity, transmissivity, transmissivity_with_error};
pub use topology::{
    default_block_order, permuting_spec, rectangular_permutation, rectangular_spec,
    triangular_spec, Architecture, Layer, MeshSpec, MziSite,
};

/// Trainable phases: `theta`, `phi` per MZI and `gamma` per input waveguide.
///
/// Values are stored unconstrained and interpreted modulo `2 pi`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseParams {
    #[serde(serialize_with = "crate::io::fmt17::serialize")]
    pub theta: Vec<f64>,
    #[serde(serialize_with = "crate::io::fmt17::serialize")]
    pub phi: Vec<f64>,
    #[serde(serialize_with = "crate::io::fmt17::serialize")]
    pub gamma: Vec<f64>,
}

impl PhaseParams {
    /// All phases zero: every MZI in the cross state.
    pub fn zeros(spec: &MeshSpec) -> Self {
        Self {
            theta: vec![0.0; spec.num_mzis()],
            phi: vec![0.0; spec.num_mzis()],
            gamma: vec![0.0; spec.n()],
        }
    }

    /// Every MZI in the bar state (`theta = pi`), other phases zero.
    pub fn bar_state(spec: &MeshSpec) -> Self {
        Self {
            theta: vec![std::f64::consts::PI; spec.num_mzis()],
            ..Self::zeros(spec)
        }
    }

    pub fn check(&self, spec: &MeshSpec) -> Result<()> {
        if self.theta.len() != spec.num_mzis() || self.phi.len() != spec.num_mzis() {
            return dim_err(format!(
                "mesh has {} MZIs but params carry {} theta / {} phi",
                spec.num_mzis(),
                self.theta.len(),
                self.phi.len()
            ));
        }
        if self.gamma.len() != spec.n() {
            return dim_err(format!(
                "mesh has {} waveguides but params carry {} gamma",
                spec.n(),
                self.gamma.len()
            ));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.theta.len() + self.phi.len() + self.gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flattened `[theta..., phi..., gamma...]`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        v.extend_from_slice(&self.theta);
        v.extend_from_slice(&self.phi);
        v.extend_from_slice(&self.gamma);
        v
    }

    /// Inverse of [`PhaseParams::to_flat`] for `m` MZIs.
    pub fn from_flat(flat: &[f64], m: usize) -> Self {
        Self {
            theta: flat[..m].to_vec(),
            phi: flat[m..2 * m].to_vec(),
            gamma: flat[2 * m..].to_vec(),
        }
    }
}

/// Beamsplitter split-ratio errors: `eps1` for the input-side and `eps2` for
/// the output-side coupler of every MZI.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamsplitterErrors {
    #[serde(serialize_with = "crate::io::fmt17::serialize")]
    pub eps1: Vec<f64>,
    #[serde(serialize_with = "crate::io::fmt17::serialize")]
    pub eps2: Vec<f64>,
}

impl BeamsplitterErrors {
    pub fn none(spec: &MeshSpec) -> Self {
        Self {
            eps1: vec![0.0; spec.num_mzis()],
            eps2: vec![0.0; spec.num_mzis()],
        }
    }

    /// `eps ~ N(0, sigma^2)` per MZI, shared by both couplers, clamped to
    /// `[-1, 1]`. One normal draw per MZI in MZI order.
    pub fn gaussian(spec: &MeshSpec, sigma: f64, rng: &mut SeededRng) -> Self {
        let eps: Vec<f64> = (0..spec.num_mzis())
            .map(|_| (sigma * rng.normal()).clamp(-1.0, 1.0))
            .collect();
        Self {
            eps1: eps.clone(),
            eps2: eps,
        }
    }

    /// Independent errors for the two couplers: `eps1` then `eps2` per MZI.
    pub fn gaussian_independent(spec: &MeshSpec, sigma: f64, rng: &mut SeededRng) -> Self {
        let mut eps1 = Vec::with_capacity(spec.num_mzis());
        let mut eps2 = Vec::with_capacity(spec.num_mzis());
        for _ in 0..spec.num_mzis() {
            eps1.push((sigma * rng.normal()).clamp(-1.0, 1.0));
            eps2.push((sigma * rng.normal()).clamp(-1.0, 1.0));
        }
        Self { eps1, eps2 }
    }

    pub fn check(&self, spec: &MeshSpec) -> Result<()> {
        if self.eps1.len() != spec.num_mzis() || self.eps2.len() != spec.num_mzis() {
            return dim_err(format!(
                "mesh has {} MZIs but errors carry {} / {} entries",
                spec.num_mzis(),
                self.eps1.len(),
                self.eps2.len()
            ));
        }
        self.eps1
            .iter()
            .chain(&self.eps2)
            .try_for_each(|&e| mzi::check_eps(e))
    }
}

/// A mesh layout together with its phases; the unit stored in mesh files.
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    pub spec: MeshSpec,
    pub params: PhaseParams,
}

#[derive(Serialize, Deserialize)]
struct MeshFile {
    arch: Architecture,
    n: usize,
    layers: Vec<Layer>,
    #[serde(flatten)]
    params: PhaseParams,
}

impl Serialize for Mesh {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MeshFile {
            arch: self.spec.arch(),
            n: self.spec.n(),
            layers: self.spec.layers().to_vec(),
            params: self.params.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Mesh {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let f = MeshFile::deserialize(d)?;
        let spec = MeshSpec::new(f.n, f.arch, f.layers).map_err(D::Error::custom)?;
        f.params.check(&spec).map_err(D::Error::custom)?;
        Ok(Mesh {
            spec,
            params: f.params,
        })
    }
}

impl Mesh {
    pub fn new(spec: MeshSpec, params: PhaseParams) -> Result<Self> {
        params.check(&spec)?;
        Ok(Self { spec, params })
    }

    pub fn write_json(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        crate::io::write_json(path, self)
    }

    pub fn read_json(path: impl AsRef<std::path::Path>) -> Result<Self> {
        crate::io::read_json(path)
    }
}

impl BeamsplitterErrors {
    pub fn write_json(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        crate::io::write_json(path, self)
    }

    pub fn read_json(path: impl AsRef<std::path::Path>) -> Result<Self> {
        crate::io::read_json(path)
    }
}

/// Per-MZI 2x2 transfer matrices in MZI order.
pub(crate) fn mzi_blocks(spec: &MeshSpec, params: &PhaseParams, errors: &BeamsplitterErrors) -> Vec<Mat2> {
    (0..spec.num_mzis())
        .map(|i| mzi_block(params.theta[i], params.phi[i], errors.eps1[i], errors.eps2[i]))
        .collect()
}

pub(crate) fn check_inputs(
    spec: &MeshSpec,
    params: &PhaseParams,
    errors: &BeamsplitterErrors,
    x: &ComplexMatrix,
) -> Result<()> {
    params.check(spec)?;
    errors.check(spec)?;
    if x.rows() != spec.n() {
        return dim_err(format!("input has {} rows for a {}-waveguide mesh", x.rows(), spec.n()));
    }
    Ok(())
}

/// Multiplies rows `(t, t + 1)` of `x` by the 2x2 block `m`.
pub(crate) fn apply_block(m: &Mat2, top: usize, x: &mut ComplexMatrix) {
    let (a, b) = x.row_pair_mut(top, top + 1);
    for (u, v) in a.iter_mut().zip(b.iter_mut()) {
        let (p, q) = (*u, *v);
        *u = m[0][0] * p + m[0][1] * q;
        *v = m[1][0] * p + m[1][1] * q;
    }
}

pub(crate) fn apply_permutation(map: &[usize], x: &ComplexMatrix) -> ComplexMatrix {
    let mut inverse = vec![0; map.len()];
    for (i, &m) in map.iter().enumerate() {
        inverse[m] = i;
    }
    x.permute_rows(&inverse)
}

pub(crate) fn apply_input_phases(gamma: &[f64], x: &mut ComplexMatrix) {
    for (k, &g) in gamma.iter().enumerate() {
        let e = Complex64::from_polar(1.0, g);
        x.row_mut(k).iter_mut().for_each(|z| *z *= e);
    }
}

/// Applies layer `li` to `x` in place (permutations replace `x`).
pub(crate) fn apply_layer(spec: &MeshSpec, li: usize, blocks: &[Mat2], x: &mut ComplexMatrix) {
    match &spec.layers()[li] {
        Layer::Mzi(tops) => {
            let off = spec.layer_offset(li);
            for (k, &t) in tops.iter().enumerate() {
                apply_block(&blocks[off + k], t, x);
            }
        }
        Layer::Perm(map) => *x = apply_permutation(map, x),
    }
}

/// Propagates the `n x b` batch `x` through the mesh: input phases `D(gamma)`
/// first, then every layer in order.
pub fn forward(
    spec: &MeshSpec,
    params: &PhaseParams,
    errors: &BeamsplitterErrors,
    x: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    check_inputs(spec, params, errors, x)?;
    let blocks = mzi_blocks(spec, params, errors);
    let mut y = x.clone();
    apply_input_phases(&params.gamma, &mut y);
    for li in 0..spec.layers().len() {
        apply_layer(spec, li, &blocks, &mut y);
    }
    Ok(y)
}

/// The `n x n` unitary implemented by the mesh.
pub fn mesh_unitary(spec: &MeshSpec, params: &PhaseParams, errors: &BeamsplitterErrors) -> Result<ComplexMatrix> {
    forward(spec, params, errors, &ComplexMatrix::identity(spec.n()))
}

/// Field magnitudes after each layer for light injected at `port` with
/// ideal beamsplitters. Row `l` holds `|field|` on every waveguide after layer `l`.
pub fn propagate_fields(spec: &MeshSpec, params: &PhaseParams, port: usize) -> Result<RealMatrix> {
    propagate_fields_with_errors(spec, params, &BeamsplitterErrors::none(spec), port)
}

pub fn propagate_fields_with_errors(
    spec: &MeshSpec,
    params: &PhaseParams,
    errors: &BeamsplitterErrors,
    port: usize,
) -> Result<RealMatrix> {
    let n = spec.n();
    if port >= n {
        return Err(Error::Index { index: port, size: n });
    }
    let mut x = ComplexMatrix::zeros(n, 1);
    x[(port, 0)] = Complex64::new(1.0, 0.0);
    check_inputs(spec, params, errors, &x)?;
    let blocks = mzi_blocks(spec, params, errors);
    apply_input_phases(&params.gamma, &mut x);
    let layers = spec.layers().len();
    let mut out = RealMatrix::zeros(layers, n);
    for li in 0..layers {
        apply_layer(spec, li, &blocks, &mut x);
        for w in 0..n {
            out[(li, w)] = x[(w, 0)].norm();
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{gram_schmidt_haar, is_unitary};
    use std::f64::consts::PI;

    fn random_params(spec: &MeshSpec, rng: &mut SeededRng) -> PhaseParams {
        PhaseParams {
            theta: (0..spec.num_mzis()).map(|_| rng.uniform_range(0.0, 2.0 * PI)).collect(),
            phi: (0..spec.num_mzis()).map(|_| rng.uniform_range(0.0, 2.0 * PI)).collect(),
            gamma: (0..spec.n()).map(|_| rng.uniform_range(0.0, 2.0 * PI)).collect(),
        }
    }

    /// Independent dense construction: product of embedded Givens matrices.
    fn dense_unitary(spec: &MeshSpec, p: &PhaseParams, e: &BeamsplitterErrors) -> ComplexMatrix {
        let n = spec.n();
        let gammas: Vec<Complex64> = p.gamma.iter().map(|&g| Complex64::from_polar(1.0, g)).collect();
        let mut u = ComplexMatrix::from_diagonal(&gammas);
        for (li, layer) in spec.layers().iter().enumerate() {
            match layer {
                Layer::Mzi(tops) => {
                    for &t in tops {
                        let i = spec.mzi_index(li, t).unwrap();
                        let m = mzi_matrix(p.theta[i], p.phi[i], e.eps1[i], e.eps2[i]).unwrap();
                        let mut g = ComplexMatrix::identity(n);
                        g[(t, t)] = m[(0, 0)];
                        g[(t, t + 1)] = m[(0, 1)];
                        g[(t + 1, t)] = m[(1, 0)];
                        g[(t + 1, t + 1)] = m[(1, 1)];
                        u = g.matmul(&u).unwrap();
                    }
                }
                Layer::Perm(map) => {
                    let mut pm = ComplexMatrix::zeros(n, n);
                    for (i, &m) in map.iter().enumerate() {
                        pm[(m, i)] = Complex64::new(1.0, 0.0);
                    }
                    u = pm.matmul(&u).unwrap();
                }
            }
        }
        u
    }

    fn all_specs(n: usize) -> Vec<MeshSpec> {
        let mut v = vec![
            rectangular_spec(n, n).unwrap(),
            rectangular_spec(n, n + 3).unwrap(),
            triangular_spec(n).unwrap(),
        ];
        if n.is_power_of_two() {
            v.push(permuting_spec(n, None).unwrap());
        }
        v
    }

    #[test]
    fn matches_dense_givens_product() {
        let mut rng = SeededRng::new(12);
        for n in 2..=6 {
            for spec in all_specs(n) {
                let p = random_params(&spec, &mut rng);
                let e = BeamsplitterErrors::gaussian_independent(&spec, 0.1, &mut rng);
                let fast = mesh_unitary(&spec, &p, &e).unwrap();
                let dense = dense_unitary(&spec, &p, &e);
                assert!(fast.max_abs_diff(&dense).unwrap() < 1e-12, "{:?} n={n}", spec.arch());
            }
        }
    }

    #[test]
    fn unitary_with_errors_and_forward_consistency() {
        let mut rng = SeededRng::new(13);
        for spec in all_specs(16).into_iter().chain([rectangular_spec(64, 64).unwrap()]) {
            let p = random_params(&spec, &mut rng);
            let e = BeamsplitterErrors::gaussian(&spec, 0.1, &mut rng);
            let u = mesh_unitary(&spec, &p, &e).unwrap();
            assert!(is_unitary(&u, 1e-10).unwrap());
            let x = gram_schmidt_haar(spec.n(), &mut rng).unwrap();
            let y = forward(&spec, &p, &e, &x).unwrap();
            assert!(y.max_abs_diff(&u.matmul(&x).unwrap()).unwrap() < 1e-12);
            for j in 0..spec.n() {
                let norm: f64 = y.column(j).iter().map(|z| z.norm_sqr()).sum();
                assert!((norm - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn two_port_cross_state_routes_to_port_two() {
        let spec = rectangular_spec(2, 1).unwrap();
        let p = PhaseParams::zeros(&spec);
        let e = BeamsplitterErrors::none(&spec);
        let mut x = ComplexMatrix::zeros(2, 1);
        x[(0, 0)] = Complex64::new(1.0, 0.0);
        let y = forward(&spec, &p, &e, &x).unwrap();
        assert!((y[(1, 0)].norm_sqr() - 1.0).abs() < 1e-15);
        // i e^{i theta/2} cos(theta/2) = i at theta = 0
        assert!((y[(1, 0)] - Complex64::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn single_mzi_matches_closed_form() {
        let spec = rectangular_spec(2, 1).unwrap();
        let p = PhaseParams {
            theta: vec![PI / 2.0],
            phi: vec![PI / 3.0],
            gamma: vec![0.0, 0.0],
        };
        let u = mesh_unitary(&spec, &p, &BeamsplitterErrors::none(&spec)).unwrap();
        let m = mzi_matrix(PI / 2.0, PI / 3.0, 0.0, 0.0).unwrap();
        assert!(u.max_abs_diff(&m).unwrap() < 1e-15);
    }

    #[test]
    fn bar_state_mesh_is_diagonal_and_fields_stay_put() {
        for spec in all_specs(8) {
            let p = PhaseParams::bar_state(&spec);
            let u = mesh_unitary(&spec, &p, &BeamsplitterErrors::none(&spec)).unwrap();
            if spec.arch() != Architecture::Permuting {
                for i in 0..8 {
                    assert!((u[(i, i)].norm() - 1.0).abs() < 1e-14);
                }
                let f = propagate_fields(&spec, &p, 3).unwrap();
                for l in 0..f.rows() {
                    for w in 0..8 {
                        let expect = if w == 3 { 1.0 } else { 0.0 };
                        assert!((f[(l, w)] - expect).abs() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn permutation_layers_only_route() {
        let spec = MeshSpec::new(4, Architecture::Permuting, vec![Layer::Perm(rectangular_permutation(4, 1, 0).unwrap())]).unwrap();
        let p = PhaseParams::zeros(&spec);
        let u = mesh_unitary(&spec, &p, &BeamsplitterErrors::none(&spec)).unwrap();
        // input 0 lands on waveguide 2
        assert_eq!(u[(2, 0)], Complex64::new(1.0, 0.0));
        let abs = u.abs();
        assert!(abs.as_slice().iter().all(|&a| a == 0.0 || a == 1.0));
    }

    #[test]
    fn fixed_permutation_matches_cross_state_columns() {
        for (n, k, parity) in [(8, 1, 0), (8, 2, 1), (16, 3, 0), (32, 2, 1)] {
            let cols = (0..1usize << k).map(|c| Layer::Mzi(topology::rectangular_column(n, c + parity))).collect();
            let spec = MeshSpec::new(n, Architecture::Rectangular, cols).unwrap();
            let u = mesh_unitary(&spec, &PhaseParams::zeros(&spec), &BeamsplitterErrors::none(&spec)).unwrap();
            let map = rectangular_permutation(n, k, parity).unwrap();
            for (i, &m) in map.iter().enumerate() {
                assert!((u[(m, i)].norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn propagate_power_conserved_and_port_checked() {
        let mut rng = SeededRng::new(3);
        for spec in all_specs(16) {
            let p = random_params(&spec, &mut rng);
            let f = propagate_fields(&spec, &p, 7).unwrap();
            for l in 0..f.rows() {
                let power: f64 = f.row(l).iter().map(|a| a * a).sum();
                assert!((power - 1.0).abs() < 1e-12);
            }
            assert!(matches!(propagate_fields(&spec, &p, 16), Err(Error::Index { .. })));
        }
    }

    #[test]
    fn shape_errors() {
        let spec = rectangular_spec(4, 4).unwrap();
        let p = PhaseParams::zeros(&spec);
        let e = BeamsplitterErrors::none(&spec);
        assert!(forward(&spec, &p, &e, &ComplexMatrix::zeros(3, 2)).is_err());
        let short = PhaseParams { gamma: vec![0.0; 3], ..p.clone() };
        assert!(mesh_unitary(&spec, &short, &e).is_err());
        let bad_e = BeamsplitterErrors { eps1: vec![2.0; 6], eps2: vec![0.0; 6] };
        assert!(mesh_unitary(&spec, &p, &bad_e).is_err());
    }

    #[test]
    fn mesh_json_round_trip() {
        let mut rng = SeededRng::new(21);
        for spec in all_specs(8) {
            let mesh = Mesh::new(spec.clone(), random_params(&spec, &mut rng)).unwrap();
            let text = serde_json::to_string(&mesh).unwrap();
            let back: Mesh = serde_json::from_str(&text).unwrap();
            assert_eq!(mesh, back);
        }
        let spec = rectangular_spec(4, 4).unwrap();
        let text = serde_json::to_string(&Mesh::new(spec, PhaseParams::zeros(&rectangular_spec(4, 4).unwrap())).unwrap()).unwrap();
        assert!(text.contains("\"arch\":\"rectangular\""));
        assert!(text.contains("\"layers\":[{\"mzi\":[0,2]}"));
    }
}
