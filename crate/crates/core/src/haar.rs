//! Sensitivity indices, Haar phase distributions and Haar initialization.
//!
//! An MZI's sensitivity index is `alpha = |I| + |O| - N - 1`, where `I` is
//! the set of mesh inputs that reach its input ports and `O` the set of mesh
//! outputs its output ports reach. Under the Haar measure its `theta` has
//! density `alpha sin(theta/2) cos(theta/2)^(2 alpha - 1)` on `[0, pi]`, and
//! the Haar phase `xi = cos(theta/2)^(2 alpha) = t^alpha` is uniform on `[0, 1]`.

use std::f64::consts::PI;

use bitvec::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{transmissivity, Architecture, Layer, MeshSpec, PhaseParams};
use crate::rng::SeededRng;

/// Sensitivity index per MZI, in MZI order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SensitivityMap {
    pub alpha: Vec<usize>,
}

impl SensitivityMap {
    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.alpha.iter().sum::<usize>() as f64 / self.alpha.len() as f64
    }

    /// Number of MZIs carrying index `a`.
    pub fn count(&self, a: usize) -> usize {
        self.alpha.iter().filter(|&&x| x == a).count()
    }
}

/// `(|I|, |O|)` for every MZI in layers `range` of `spec`, treating those
/// layers as a standalone mesh.
fn reachable_counts(spec: &MeshSpec, range: std::ops::Range<usize>) -> Vec<(usize, usize)> {
    let n = spec.n();
    let layers = &spec.layers()[range.clone()];
    let first = spec.layer_offset(range.start);
    let count = spec.layer_offset(range.end) - first;
    let mut counts = vec![(0, 0); count];

    let unit = |w: usize| {
        let mut b = bitvec![0; n];
        b.set(w, true);
        b
    };
    let merge = |sets: &mut [BitVec], t: usize| {
        let (a, b) = sets.split_at_mut(t + 1);
        let u = a[t].clone() | &b[0];
        a[t] = u.clone();
        b[0] = u;
    };

    let mut fwd: Vec<BitVec> = (0..n).map(unit).collect();
    let mut idx = 0;
    for layer in layers {
        match layer {
            Layer::Mzi(tops) => {
                for &t in tops {
                    counts[idx].0 = (fwd[t].clone() | &fwd[t + 1]).count_ones();
                    merge(&mut fwd, t);
                    idx += 1;
                }
            }
            Layer::Perm(map) => {
                let mut next = fwd.clone();
                for (i, &m) in map.iter().enumerate() {
                    next[m] = fwd[i].clone();
                }
                fwd = next;
            }
        }
    }

    let mut bwd: Vec<BitVec> = (0..n).map(unit).collect();
    for layer in layers.iter().rev() {
        match layer {
            Layer::Mzi(tops) => {
                for &t in tops.iter().rev() {
                    idx -= 1;
                    counts[idx].1 = (bwd[t].clone() | &bwd[t + 1]).count_ones();
                    merge(&mut bwd, t);
                }
            }
            Layer::Perm(map) => {
                bwd = map.iter().map(|&m| bwd[m].clone()).collect();
            }
        }
    }
    counts
}

/// Sensitivity index from forward/backward reachability over the whole mesh,
/// clamped below at 1. Applies to any layout, including permuting meshes.
pub fn sensitivity_reachable(spec: &MeshSpec) -> SensitivityMap {
    let n = spec.n();
    let alpha = reachable_counts(spec, 0..spec.layers().len())
        .into_iter()
        .map(|(i, o)| (i + o).saturating_sub(n + 1).max(1))
        .collect();
    SensitivityMap { alpha }
}

/// Sensitivity indices used for Haar initialization.
///
/// Permuting meshes treat every tunable block as an independent mesh whose
/// size is the block width `ceil(N/K)`: reachable counts are taken within
/// the block and capped at that width before applying the definition. All
/// other layouts use [`sensitivity_reachable`].
pub fn haar_sensitivity(spec: &MeshSpec) -> SensitivityMap {
    if spec.arch() != Architecture::Permuting {
        return sensitivity_reachable(spec);
    }
    let blocks = spec.tunable_blocks();
    let width = spec.tunable_columns().div_ceil(blocks.len().max(1));
    let mut alpha = Vec::with_capacity(spec.num_mzis());
    for (a, b) in blocks {
        alpha.extend(
            reachable_counts(spec, a..b)
                .into_iter()
                .map(|(i, o)| (i.min(width) + o.min(width)).saturating_sub(width + 1).max(1)),
        );
    }
    SensitivityMap { alpha }
}

/// Closed-form sensitivity map of the square `n x n` rectangular mesh using
/// the diagonal lattice coordinates `x = (k + l)/2`, `y = (l - k)/2 + floor(n/2)`
/// (1-based top index `k`, column `l`).
pub fn sensitivity_closed_form_rect(n: usize) -> Result<SensitivityMap> {
    let spec = crate::mesh::rectangular_spec(n, n)?;
    let half = (n / 2) as i64;
    let n_i = n as i64;
    let alpha = spec
        .sites()
        .iter()
        .map(|s| {
            let (k, l) = (s.top as i64 + 1, s.layer as i64 + 1);
            let x = (k + l) / 2;
            let y = (l - k) / 2 + half;
            let d = if x <= half { 2 * x - 1 } else { 2 * (n_i - x) };
            let s_xy = if y <= half { 2 * (half - y) + 1 } else { 2 * (y - half) };
            (d + 1 - s_xy) as usize
        })
        .collect();
    Ok(SensitivityMap { alpha })
}

/// Closed-form map for a spec, available for square rectangular meshes only.
pub fn sensitivity_closed_form(spec: &MeshSpec) -> Result<SensitivityMap> {
    let n = spec.n();
    if spec.arch() != Architecture::Rectangular || spec != &crate::mesh::rectangular_spec(n, n)? {
        return Err(Error::Unsupported(
            "closed-form sensitivity exists only for square rectangular meshes".into(),
        ));
    }
    sensitivity_closed_form_rect(n)
}

/// `alpha = N - k` for the MZI on 1-based top index `k` of a triangular mesh.
pub fn sensitivity_closed_form_triangular(n: usize) -> Result<SensitivityMap> {
    let spec = crate::mesh::triangular_spec(n)?;
    Ok(SensitivityMap {
        alpha: spec.sites().iter().map(|s| n - (s.top + 1)).collect(),
    })
}

fn check_alpha(alpha: usize) -> Result<()> {
    if alpha == 0 {
        return Err(Error::Domain("sensitivity index must be >= 1".into()));
    }
    Ok(())
}

fn check_theta(theta: f64) -> Result<()> {
    if (0.0..=PI).contains(&theta) {
        Ok(())
    } else {
        Err(Error::Domain(format!("theta {theta} outside [0, pi]")))
    }
}

/// Haar density of `theta` on `[0, pi]`: `alpha sin(theta/2) cos(theta/2)^(2 alpha - 1)`.
pub fn haar_pdf(alpha: usize, theta: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_theta(theta)?;
    let (s, c) = (theta / 2.0).sin_cos();
    Ok(alpha as f64 * s * c.powi(2 * alpha as i32 - 1))
}

/// `P(Theta <= theta)` under the Haar density: `1 - cos(theta/2)^(2 alpha)`.
pub fn haar_cdf(alpha: usize, theta: f64) -> Result<f64> {
    Ok(1.0 - haar_phase_from_theta(alpha, theta)?)
}

/// Haar phase `xi = cos(theta/2)^(2 alpha) = t^alpha`.
pub fn haar_phase_from_theta(alpha: usize, theta: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_theta(theta)?;
    Ok(transmissivity(theta).powi(alpha as i32))
}

/// Inverse of [`haar_phase_from_theta`]: `theta = 2 arccos(xi^(1/(2 alpha)))`.
pub fn theta_from_haar_phase(alpha: usize, xi: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(0.0..=1.0).contains(&xi) {
        return Err(Error::Domain(format!("Haar phase {xi} outside [0, 1]")));
    }
    Ok(2.0 * xi.powf(1.0 / (2.0 * alpha as f64)).acos())
}

pub fn average_transmissivity(alpha: usize) -> f64 {
    alpha as f64 / (alpha as f64 + 1.0)
}

pub fn average_reflectivity(alpha: usize) -> f64 {
    1.0 / (alpha as f64 + 1.0)
}

fn integrate_theta(alpha: usize, f: impl Fn(f64) -> f64) -> f64 {
    // The density peaks at theta ~ 2/sqrt(2 alpha - 1); split there so the
    // double-exponential rule resolves the bulk.
    let w = 2.0 / (2.0 * alpha as f64).sqrt();
    let mut cuts = vec![0.0];
    cuts.extend([w, 3.0 * w, 8.0 * w].into_iter().filter(|&c| c < PI));
    cuts.push(PI);
    let a = alpha as f64;
    cuts.windows(2)
        .map(|ab| {
            quadrature::integrate(
                |th: f64| {
                    let (s, c) = (th / 2.0).sin_cos();
                    f(th) * a * s * c.powi(2 * alpha as i32 - 1)
                },
                ab[0],
                ab[1],
                1e-13,
            )
            .integral
        })
        .sum()
}

/// Standard deviation of `theta` under the Haar density, by quadrature.
pub fn theta_std(alpha: usize) -> Result<f64> {
    check_alpha(alpha)?;
    let mean = integrate_theta(alpha, |t| t);
    let var = integrate_theta(alpha, |t| (t - mean) * (t - mean));
    Ok(var.sqrt())
}

/// Haar initialization: `theta = 2 arccos(xi^(1/(2 alpha)))` with `xi ~ U(0,1)`
/// using [`haar_sensitivity`], and `phi`, `gamma ~ U[0, 2 pi)`.
///
/// Draw order: one uniform per MZI for `theta`, then one per MZI for `phi`,
/// then one per waveguide for `gamma`.
pub fn haar_initialize(spec: &MeshSpec, rng: &mut SeededRng) -> PhaseParams {
    let alpha = haar_sensitivity(spec);
    let theta = alpha
        .alpha
        .iter()
        .map(|&a| 2.0 * rng.uniform().powf(1.0 / (2.0 * a as f64)).acos())
        .collect();
    let phi = (0..spec.num_mzis()).map(|_| rng.uniform_range(0.0, 2.0 * PI)).collect();
    let gamma = (0..spec.n()).map(|_| rng.uniform_range(0.0, 2.0 * PI)).collect();
    PhaseParams { theta, phi, gamma }
}

/// Uniform initialization: `theta`, `phi`, `gamma ~ U[0, 2 pi)` with `theta`
/// folded into `[0, pi]`. Same draw order as [`haar_initialize`].
pub fn uniform_initialize(spec: &MeshSpec, rng: &mut SeededRng) -> PhaseParams {
    let m = spec.num_mzis();
    let theta = (0..m).map(|_| canonicalize_theta(rng.uniform_range(0.0, 2.0 * PI))).collect();
    let phi = (0..m).map(|_| rng.uniform_range(0.0, 2.0 * PI)).collect();
    let gamma = (0..spec.n()).map(|_| rng.uniform_range(0.0, 2.0 * PI)).collect();
    PhaseParams { theta, phi, gamma }
}

/// Absolute theta: reduce mod `2 pi`, then fold `(pi, 2 pi)` onto `(0, pi)`.
pub fn canonicalize_theta(theta: f64) -> f64 {
    let r = theta.rem_euclid(2.0 * PI);
    if r <= PI {
        r
    } else {
        2.0 * PI - r
    }
}

/// Haar phase from a periodic Haar phase of period 2.
pub fn periodic_haar_phase(xi_tilde: f64) -> f64 {
    let r = xi_tilde.rem_euclid(2.0);
    if r <= 1.0 {
        r
    } else {
        2.0 - r
    }
}

/// Haar phase of every MZI of a configured mesh (after canonicalizing theta).
pub fn haar_phases(spec: &MeshSpec, params: &PhaseParams) -> Result<Vec<f64>> {
    params.check(spec)?;
    haar_sensitivity(spec)
        .alpha
        .iter()
        .zip(&params.theta)
        .map(|(&a, &t)| haar_phase_from_theta(a, canonicalize_theta(t)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{permuting_spec, rectangular_spec, triangular_spec};

    #[test]
    fn rectangular_eight_labels() {
        let spec = rectangular_spec(8, 8).unwrap();
        let s = sensitivity_reachable(&spec);
        // 1-based (k=4, l=4) is the center node
        assert_eq!(s.alpha[spec.mzi_index(3, 3).unwrap()], 7);
        assert_eq!(s.alpha[spec.mzi_index(0, 0).unwrap()], 1);
        assert_eq!(*s.alpha.iter().max().unwrap(), 7);
    }

    #[test]
    fn triangular_alpha_is_n_minus_k() {
        for n in 2..=16 {
            let spec = triangular_spec(n).unwrap();
            assert_eq!(sensitivity_reachable(&spec), sensitivity_closed_form_triangular(n).unwrap());
        }
    }

    #[test]
    fn closed_form_equals_reachable() {
        for n in 2..=16 {
            let reach = sensitivity_reachable(&rectangular_spec(n, n).unwrap());
            assert_eq!(reach, sensitivity_closed_form_rect(n).unwrap(), "n={n}");
        }
    }

    #[test]
    fn closed_form_rejects_other_layouts() {
        assert!(matches!(
            sensitivity_closed_form(&triangular_spec(6).unwrap()),
            Err(Error::Unsupported(_))
        ));
        assert!(sensitivity_closed_form(&rectangular_spec(6, 9).unwrap()).is_err());
        assert!(sensitivity_closed_form(&rectangular_spec(6, 6).unwrap()).is_ok());
    }

    #[test]
    fn count_and_mean_identities() {
        for n in 2..=64 {
            let s = sensitivity_reachable(&rectangular_spec(n, n).unwrap());
            for a in 1..n {
                assert_eq!(s.count(a), n - a);
            }
            // sum of alpha is N(N-1)(N+1)/6, i.e. mean (N+1)/3
            assert_eq!(3 * s.alpha.iter().sum::<usize>(), (n + 1) * s.len());
        }
    }

    #[test]
    fn permuting_block_alpha_bounded_by_block_width() {
        let spec = permuting_spec(32, None).unwrap();
        let s = haar_sensitivity(&spec);
        assert_eq!(s.len(), spec.num_mzis());
        let width = 32usize.div_ceil(5);
        assert!(s.alpha.iter().all(|&a| (1..width).contains(&a)));
        // whole-mesh reachability still works through the permutations
        let full = sensitivity_reachable(&spec);
        assert!(full.alpha.iter().all(|&a| (1..32).contains(&a)));
    }

    #[test]
    fn pdf_is_normalized_and_matches_cdf() {
        for a in [1, 2, 7, 43, 200] {
            let total = quadrature::integrate(|t| haar_pdf(a, t).unwrap(), 0.0, PI, 1e-12).integral;
            assert!((total - 1.0).abs() < 1e-10, "alpha {a}: {total}");
            let part = quadrature::integrate(|t| haar_pdf(a, t).unwrap(), 0.0, 0.7, 1e-12).integral;
            assert!((part - haar_cdf(a, 0.7).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn pdf_examples() {
        // alpha = 1: density sin(theta/2) cos(theta/2) = sin(theta)/2
        for &th in &[0.1, 1.0, 2.5] {
            assert!((haar_pdf(1, th).unwrap() - th.sin() / 2.0).abs() < 1e-15);
        }
        assert!(haar_pdf(3, -0.1).is_err());
        assert!(haar_pdf(3, 3.2).is_err());
        assert!(haar_pdf(0, 1.0).is_err());
        let mode = |a: usize| {
            (0..=10_000)
                .map(|i| i as f64 * PI / 10_000.0)
                .max_by(|x, y| haar_pdf(a, *x).unwrap().total_cmp(&haar_pdf(a, *y).unwrap()))
                .unwrap()
        };
        assert!(mode(1) > mode(2) && mode(2) > mode(7) && mode(7) > mode(43));
    }

    #[test]
    fn haar_phase_round_trip_and_endpoints() {
        assert_eq!(theta_from_haar_phase(5, 1.0).unwrap(), 0.0);
        assert!((theta_from_haar_phase(5, 0.0).unwrap() - PI).abs() < 1e-15);
        let th = theta_from_haar_phase(7, 0.5).unwrap();
        assert!((transmissivity(th) - 0.5f64.powf(1.0 / 7.0)).abs() < 1e-12);
        assert!((transmissivity(th) - 0.905_723_664_263_906_9).abs() < 1e-12);
        for a in [1, 2, 7, 43] {
            let mut prev = f64::INFINITY;
            for i in 0..=100 {
                let xi = i as f64 / 100.0;
                let th = theta_from_haar_phase(a, xi).unwrap();
                assert!(th <= prev);
                prev = th;
                assert!((haar_phase_from_theta(a, th).unwrap() - xi).abs() < 1e-12);
            }
        }
        assert!(theta_from_haar_phase(2, 1.1).is_err());
    }

    #[test]
    fn averages() {
        assert_eq!(average_transmissivity(1), 0.5);
        assert_eq!(average_reflectivity(7), 0.125);
        for a in 1..50 {
            assert!((average_transmissivity(a) + average_reflectivity(a) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn theta_std_decreases() {
        let mut prev = f64::INFINITY;
        for a in 1..=200 {
            let s = theta_std(a).unwrap();
            assert!(s < prev, "alpha={a}");
            prev = s;
        }
        for n in [64usize, 128, 256, 512, 1024] {
            let s = theta_std((n + 1) / 3).unwrap();
            assert!((1e-2..=1.0).contains(&s), "n={n} std={s}");
        }
    }

    #[test]
    fn canonicalization() {
        assert!((canonicalize_theta(1.5 * PI) - PI / 2.0).abs() < 1e-15);
        assert!((canonicalize_theta(-PI / 3.0) - PI / 3.0).abs() < 1e-15);
        assert_eq!(canonicalize_theta(PI), PI);
        assert!((periodic_haar_phase(1.25) - 0.75).abs() < 1e-15);
        assert!((periodic_haar_phase(-0.25) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn initializers_are_deterministic_and_in_range() {
        let spec = rectangular_spec(16, 16).unwrap();
        let a = haar_initialize(&spec, &mut SeededRng::new(4));
        let b = haar_initialize(&spec, &mut SeededRng::new(4));
        assert_eq!(a, b);
        assert!(a.theta.iter().all(|t| (0.0..=PI).contains(t)));
        let u = uniform_initialize(&spec, &mut SeededRng::new(4));
        assert!(u.theta.iter().all(|t| (0.0..=PI).contains(t)));
        assert!(u.phi.iter().chain(&u.gamma).all(|t| (0.0..2.0 * PI).contains(t)));
    }

    proptest::proptest! {
        #[test]
        fn canonical_theta_preserves_transmissivity(theta in -50.0f64..50.0) {
            let c = canonicalize_theta(theta);
            proptest::prop_assert!((0.0..=PI).contains(&c));
            proptest::prop_assert!((transmissivity(c) - transmissivity(theta)).abs() < 1e-12);
        }
    }
}
