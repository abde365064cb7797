//! Rectangular decomposition of a unitary into mesh phases.
//!
//! Elements below the anti-diagonal are nulled alternately from the right
//! (input side) and the left (output side) with general 2x2 unitaries,
//! leaving a diagonal. The diagonal is folded into the input-side blocks,
//! after which every block is factored as `M(theta, phi) diag(e^{iA}, e^{iB})`
//! from the output end inward, pushing the leftover phases toward the input
//! until they land in `gamma`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{dim_err, Error, Result};
use crate::linalg::{is_unitary, ComplexMatrix};
use crate::mesh::{rectangular_spec, Mat2, Mesh, PhaseParams};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn adjoint2(m: &Mat2) -> Mat2 {
    [[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]]
}

/// Unitary acting on columns `(c, c+1)` from the right that zeroes `u[r][c]`.
fn right_nuller(a: Complex64, b: Complex64) -> Mat2 {
    let rho = (a.norm_sqr() + b.norm_sqr()).sqrt();
    if rho == 0.0 {
        return [[ONE, ZERO], [ZERO, ONE]];
    }
    [[b / rho, a.conj() / rho], [-a / rho, b.conj() / rho]]
}

/// Unitary acting on rows `(t, t+1)` from the left that zeroes `u[t+1][c]`.
fn left_nuller(a: Complex64, b: Complex64) -> Mat2 {
    let rho = (a.norm_sqr() + b.norm_sqr()).sqrt();
    if rho == 0.0 {
        return [[ONE, ZERO], [ZERO, ONE]];
    }
    [[a.conj() / rho, b.conj() / rho], [-b / rho, a / rho]]
}

fn mul_right(u: &mut ComplexMatrix, c: usize, q: &Mat2) {
    for r in 0..u.rows() {
        let (x, y) = (u[(r, c)], u[(r, c + 1)]);
        u[(r, c)] = x * q[0][0] + y * q[1][0];
        u[(r, c + 1)] = x * q[0][1] + y * q[1][1];
    }
}

fn mul_left(u: &mut ComplexMatrix, t: usize, q: &Mat2) {
    let (a, b) = u.row_pair_mut(t, t + 1);
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let (p, s) = (*x, *y);
        *x = q[0][0] * p + q[0][1] * s;
        *y = q[1][0] * p + q[1][1] * s;
    }
}

/// Factors a 2x2 unitary as `M(theta, phi) diag(e^{iA}, e^{iB})` with ideal
/// beamsplitters, returning `(theta, phi, A, B)`.
fn factor_block(g: &Mat2) -> (f64, f64, f64, f64) {
    let theta = 2.0 * g[0][0].norm().atan2(g[1][0].norm());
    let (s, c) = (theta / 2.0).sin_cos();
    let w = Complex64::new(0.0, 1.0) * Complex64::from_polar(1.0, theta / 2.0);
    let a = (g[1][0] / w).arg();
    let b = (-g[1][1] / w).arg();
    let phi = if c >= s { (g[0][1] / w).arg() - b } else { (g[0][0] / w).arg() - a };
    (theta, phi, a, b)
}

/// Phases of the square rectangular mesh `rectangular_spec(n, n)` that
/// reproduce the unitary `u` with ideal beamsplitters.
///
/// `theta` lands in `[0, pi]`; `phi` and `gamma` in `[0, 2 pi)`.
pub fn clements_decompose(u: &ComplexMatrix) -> Result<PhaseParams> {
    if !u.is_square() {
        return dim_err(format!("{}x{} target is not square", u.rows(), u.cols()));
    }
    if !is_unitary(u, 1e-10)? {
        return Err(Error::Validation("target is not unitary to 1e-10".into()));
    }
    let n = u.rows();
    let spec = rectangular_spec(n, n)?;
    let mut work = u.clone();
    // (column, top, block) with block = nuller^dagger, in the order performed.
    let mut right = Vec::new();
    let mut left = Vec::new();

    for i in 1..n {
        if i % 2 == 1 {
            for j in 0..i {
                let (r, c) = (n - 1 - j, i - 1 - j);
                let q = right_nuller(work[(r, c)], work[(r, c + 1)]);
                mul_right(&mut work, c, &q);
                right.push((j, c, adjoint2(&q)));
            }
        } else {
            for j in 1..=i {
                let (t, c) = (n + j - i - 2, j - 1);
                let q = left_nuller(work[(t, c)], work[(t + 1, c)]);
                mul_left(&mut work, t, &q);
                left.push((n - j, t, adjoint2(&q)));
            }
        }
    }

    // work is now diagonal; fold it into the input-side blocks adjacent to it.
    let mut diag: Vec<Complex64> = (0..n).map(|k| work[(k, k)]).collect();
    let mut absorbed = vec![false; n];
    for (_, t, g) in right.iter_mut().rev() {
        for k in 0..2 {
            let m = *t + k;
            if !absorbed[m] {
                g[k][0] *= diag[m];
                g[k][1] *= diag[m];
                diag[m] = ONE;
                absorbed[m] = true;
            }
        }
    }

    let mut blocks: Vec<Option<Mat2>> = vec![None; spec.num_mzis()];
    for (col, top, g) in right.into_iter().chain(left) {
        let idx = spec.mzi_index(col, top).expect("nulling sites lie on the rectangular grid");
        blocks[idx] = Some(g);
    }

    let mut params = PhaseParams::zeros(&spec);
    let mut pending = vec![ONE; n];
    for idx in (0..spec.num_mzis()).rev() {
        let top = spec.sites()[idx].top;
        let mut g = blocks[idx].expect("every site is visited exactly once");
        for k in 0..2 {
            g[k][0] *= pending[top + k];
            g[k][1] *= pending[top + k];
        }
        let (theta, phi, a, b) = factor_block(&g);
        params.theta[idx] = theta;
        params.phi[idx] = phi.rem_euclid(2.0 * PI);
        pending[top] = Complex64::from_polar(1.0, a);
        pending[top + 1] = Complex64::from_polar(1.0, b);
    }
    params.gamma = pending
        .iter()
        .zip(&diag)
        .map(|(p, d)| (p * d).arg().rem_euclid(2.0 * PI))
        .collect();
    Ok(params)
}

/// [`clements_decompose`] packaged with its mesh layout.
pub fn clements_mesh(u: &ComplexMatrix) -> Result<Mesh> {
    let params = clements_decompose(u)?;
    Mesh::new(rectangular_spec(u.rows(), u.rows())?, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::haar::sensitivity_reachable;
    use crate::linalg::gram_schmidt_haar;
    use crate::mesh::{mesh_unitary, mzi_block, BeamsplitterErrors};
    use crate::rng::SeededRng;

    fn reconstruct(u: &ComplexMatrix) -> f64 {
        let p = clements_decompose(u).unwrap();
        let spec = rectangular_spec(u.rows(), u.rows()).unwrap();
        let u_hat = mesh_unitary(&spec, &p, &BeamsplitterErrors::none(&spec)).unwrap();
        u_hat.sub(u).unwrap().frobenius_norm_sq().sqrt()
    }

    #[test]
    fn identity_reconstructs() {
        for n in 2..=9 {
            assert!(reconstruct(&ComplexMatrix::identity(n)) < 1e-10);
        }
    }

    #[test]
    fn haar_round_trip() {
        let mut rng = SeededRng::new(11);
        for n in 2..=32 {
            for _ in 0..4 {
                let u = gram_schmidt_haar(n, &mut rng).unwrap();
                assert!(reconstruct(&u) < 1e-8, "n={n}");
            }
        }
    }

    #[test]
    fn permutation_matrices_round_trip() {
        // Exact zeros exercise the degenerate branches of the nullers.
        let n = 6;
        let perm = [3, 0, 5, 1, 4, 2];
        let u = ComplexMatrix::from_fn(n, n, |i, j| if perm[i] == j { ONE } else { ZERO });
        assert!(reconstruct(&u) < 1e-10);
    }

    #[test]
    fn output_ranges() {
        let u = gram_schmidt_haar(10, &mut SeededRng::new(3)).unwrap();
        let p = clements_decompose(&u).unwrap();
        assert!(p.theta.iter().all(|t| (0.0..=PI).contains(t)));
        assert!(p.phi.iter().chain(&p.gamma).all(|t| (0.0..2.0 * PI).contains(t)));
    }

    #[test]
    fn rejects_non_unitary() {
        let mut u = ComplexMatrix::identity(4);
        u[(0, 1)] = Complex64::new(0.1, 0.0);
        assert!(matches!(clements_decompose(&u), Err(Error::Validation(_))));
        assert!(clements_decompose(&ComplexMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn block_factorization_is_exact() {
        let mut rng = SeededRng::new(5);
        for _ in 0..200 {
            let u = gram_schmidt_haar(2, &mut rng).unwrap();
            let g = [[u[(0, 0)], u[(0, 1)]], [u[(1, 0)], u[(1, 1)]]];
            let (theta, phi, a, b) = factor_block(&g);
            let m = mzi_block(theta, phi, 0.0, 0.0);
            let d = [Complex64::from_polar(1.0, a), Complex64::from_polar(1.0, b)];
            for i in 0..2 {
                for j in 0..2 {
                    assert!((m[i][j] * d[j] - g[i][j]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn center_mzis_lean_toward_cross_state() {
        let n = 8;
        let spec = rectangular_spec(n, n).unwrap();
        let alpha = sensitivity_reachable(&spec);
        let center = alpha.alpha.iter().position(|&a| a == n - 1).unwrap();
        let edge = alpha.alpha.iter().position(|&a| a == 1).unwrap();
        let mut rng = SeededRng::new(8);
        let (mut sc, mut se) = (0.0, 0.0);
        for _ in 0..2000 {
            let p = clements_decompose(&gram_schmidt_haar(n, &mut rng).unwrap()).unwrap();
            sc += p.theta[center];
            se += p.theta[edge];
        }
        assert!(sc < 0.5 * se, "center {sc} edge {se}");
    }
}
