//! Single-MZI transfer matrices, with optional beamsplitter split-ratio errors.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;

pub(crate) type Mat2 = [[Complex64; 2]; 2];

const I: Complex64 = Complex64::new(0.0, 1.0);

pub(crate) fn check_eps(eps: f64) -> Result<()> {
    if eps.is_finite() && eps.abs() <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("beamsplitter error {eps} outside [-1, 1]")))
    }
}

/// The `theta`-independent and `e^{i theta}` parts of `R_phi B_2 R_theta B_1`.
///
/// The transfer matrix is `base + e^{i theta} * osc`.
fn split_parts(phi: f64, eps1: f64, eps2: f64) -> (Mat2, Mat2) {
    let (r1, t1) = (((1.0 + eps1) / 2.0).sqrt(), ((1.0 - eps1) / 2.0).sqrt());
    let (r2, t2) = (((1.0 + eps2) / 2.0).sqrt(), ((1.0 - eps2) / 2.0).sqrt());
    let ephi = Complex64::from_polar(1.0, phi);
    let base = [
        [ephi * (-t1 * t2), ephi * I * (r1 * t2)],
        [I * (t1 * r2), Complex64::new(r1 * r2, 0.0)],
    ];
    let osc = [
        [ephi * (r1 * r2), ephi * I * (t1 * r2)],
        [I * (r1 * t2), Complex64::new(-t1 * t2, 0.0)],
    ];
    (base, osc)
}

/// Unchecked 2x2 transfer matrix `R_phi B_{eps2} R_theta B_{eps1}`.
pub(crate) fn mzi_block(theta: f64, phi: f64, eps1: f64, eps2: f64) -> Mat2 {
    let (base, osc) = split_parts(phi, eps1, eps2);
    let e = Complex64::from_polar(1.0, theta);
    let mut m = base;
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] += e * osc[i][j];
        }
    }
    m
}

/// Transfer matrix with its partial derivatives in `theta` and `phi`.
pub(crate) fn mzi_block_with_derivs(theta: f64, phi: f64, eps1: f64, eps2: f64) -> (Mat2, Mat2, Mat2) {
    let (base, osc) = split_parts(phi, eps1, eps2);
    let e = Complex64::from_polar(1.0, theta);
    let mut m = base;
    let mut d_theta = [[Complex64::default(); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] += e * osc[i][j];
            d_theta[i][j] = I * e * osc[i][j];
        }
    }
    // phi only multiplies the top output.
    let d_phi = [[I * m[0][0], I * m[0][1]], [Complex64::default(); 2]];
    (m, d_theta, d_phi)
}

/// The MZI transfer matrix `R_phi B_{eps2} R_theta B_{eps1}` as a 2x2 matrix.
///
/// `B_eps = [[rho, i tau], [i tau, rho]]` with `rho = sqrt((1+eps)/2)`,
/// `tau = sqrt((1-eps)/2)`; `R_x = diag(e^{ix}, 1)`. With `eps = 0` this is
/// `i e^{i theta/2} [[e^{i phi} sin(theta/2), e^{i phi} cos(theta/2)], [cos(theta/2), -sin(theta/2)]]`.
pub fn mzi_matrix(theta: f64, phi: f64, eps1: f64, eps2: f64) -> Result<ComplexMatrix> {
    check_eps(eps1)?;
    check_eps(eps2)?;
    let m = mzi_block(theta, phi, eps1, eps2);
    ComplexMatrix::from_vec(2, 2, vec![m[0][0], m[0][1], m[1][0], m[1][1]])
}

/// Cross-port power fraction `cos^2(theta/2)`.
pub fn transmissivity(theta: f64) -> f64 {
    (theta / 2.0).cos().powi(2)
}

/// Same-port power fraction `sin^2(theta/2)`.
pub fn reflectivity(theta: f64) -> f64 {
    (theta / 2.0).sin().powi(2)
}

/// Transmissivity of an MZI whose two beamsplitters share the error `eps`.
pub fn transmissivity_with_error(theta: f64, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    Ok(transmissivity(theta) * (1.0 - eps * eps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn closed_form(theta: f64, phi: f64) -> Mat2 {
        let pre = I * Complex64::from_polar(1.0, theta / 2.0);
        let ephi = Complex64::from_polar(1.0, phi);
        let (s, c) = ((theta / 2.0).sin(), (theta / 2.0).cos());
        [
            [pre * ephi * s, pre * ephi * c],
            [pre * c, -pre * s],
        ]
    }

    fn dense_product(theta: f64, phi: f64, e1: f64, e2: f64) -> Mat2 {
        let b = |e: f64| {
            let (r, t) = (((1.0 + e) / 2.0).sqrt(), ((1.0 - e) / 2.0).sqrt());
            [[Complex64::new(r, 0.0), I * t], [I * t, Complex64::new(r, 0.0)]]
        };
        let rot = |x: f64| [[Complex64::from_polar(1.0, x), Complex64::default()], [Complex64::default(), Complex64::new(1.0, 0.0)]];
        let mul = |a: Mat2, b: Mat2| {
            let mut o = [[Complex64::default(); 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    o[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
                }
            }
            o
        };
        mul(rot(phi), mul(b(e2), mul(rot(theta), b(e1))))
    }

    #[test]
    fn bar_and_cross_states() {
        let bar = mzi_matrix(PI, 0.0, 0.0, 0.0).unwrap();
        assert!((bar[(0, 0)].norm_sqr() - 1.0).abs() < 1e-15);
        assert!(bar[(0, 1)].norm_sqr() < 1e-15);
        let cross = mzi_matrix(0.0, 0.0, 0.0, 0.0).unwrap();
        assert!((cross[(0, 1)].norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn error_example_half_transmission() {
        let m = mzi_matrix(PI / 2.0, 0.0, 0.1, 0.1).unwrap();
        assert!((m[(0, 1)].norm_sqr() - 0.495).abs() < 1e-12);
    }

    #[test]
    fn matches_closed_form_and_dense_product() {
        for &(theta, phi) in &[(PI / 2.0, PI / 3.0), (0.3, 5.9), (2.8, 1.1)] {
            let m = mzi_block(theta, phi, 0.0, 0.0);
            let cf = closed_form(theta, phi);
            for i in 0..2 {
                for j in 0..2 {
                    assert!((m[i][j] - cf[i][j]).norm() < 1e-15);
                }
            }
            let (e1, e2) = (0.07, -0.2);
            let m = mzi_block(theta, phi, e1, e2);
            let d = dense_product(theta, phi, e1, e2);
            for i in 0..2 {
                for j in 0..2 {
                    assert!((m[i][j] - d[i][j]).norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn transmissivity_conventions() {
        assert_eq!(transmissivity(0.0), 1.0);
        assert!((reflectivity(PI) - 1.0).abs() < 1e-15);
        assert!((transmissivity(PI / 2.0) - 0.5).abs() < 1e-15);
        assert!((reflectivity(PI / 2.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn transmissivity_with_error_examples() {
        assert!((transmissivity_with_error(0.0, 0.5).unwrap() - 0.75).abs() < 1e-15);
        assert!((transmissivity_with_error(2.0 * PI / 3.0, 0.1).unwrap() - 0.2475).abs() < 1e-12);
        let direct = mzi_matrix(2.0 * PI / 3.0, 0.0, 0.1, 0.1).unwrap()[(0, 1)].norm_sqr();
        assert!((direct - 0.2475).abs() < 1e-12);
        assert!(transmissivity_with_error(1.0, 1.5).is_err());
        assert!(mzi_matrix(1.0, 0.0, 0.0, -1.01).is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let (theta, phi, e1, e2) = (1.3, 0.4, 0.05, -0.08);
        let (_, dt, dp) = mzi_block_with_derivs(theta, phi, e1, e2);
        let h = 1e-6;
        let fp = mzi_block(theta + h, phi, e1, e2);
        let fm = mzi_block(theta - h, phi, e1, e2);
        let gp = mzi_block(theta, phi + h, e1, e2);
        let gm = mzi_block(theta, phi - h, e1, e2);
        for i in 0..2 {
            for j in 0..2 {
                assert!(((fp[i][j] - fm[i][j]) / (2.0 * h) - dt[i][j]).norm() < 1e-9);
                assert!(((gp[i][j] - gm[i][j]) / (2.0 * h) - dp[i][j]).norm() < 1e-9);
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn unitary_for_all_inputs(theta in -10.0f64..10.0, phi in -10.0f64..10.0, e1 in -1.0f64..=1.0, e2 in -1.0f64..=1.0) {
            let m = mzi_matrix(theta, phi, e1, e2).unwrap();
            proptest::prop_assert!(crate::linalg::is_unitary(&m, 1e-14).unwrap());
        }

        #[test]
        fn error_algebra(theta in 0.0f64..=PI, eps in -0.9f64..0.9) {
            let m = mzi_matrix(theta, 0.0, eps, eps).unwrap();
            let t = transmissivity(theta);
            proptest::prop_assert!((m[(0, 1)].norm_sqr() - t * (1.0 - eps * eps)).abs() < 1e-12);
            proptest::prop_assert!((m[(0, 0)].norm_sqr() - (reflectivity(theta) + t * eps * eps)).abs() < 1e-12);
        }
    }
}
