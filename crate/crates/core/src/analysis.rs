//! Bandsize, error maps and grid exports for diagnostic plots.

use std::path::Path;
use std::str::FromStr;

use crate::error::{dim_err, Error, Result};
use crate::haar::{average_reflectivity, canonicalize_theta, haar_phase_from_theta, haar_sensitivity};
use crate::linalg::{ComplexMatrix, RealMatrix};
use crate::mesh::{Layer, Mesh};

/// Both readings of the eta-bandsize of a matrix.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Bandsize {
    /// Fewest entries whose `|u_ij|^2` reach `(1 - eta)` of the total power.
    pub global: usize,
    /// Mean over rows of the fewest entries reaching `(1 - eta)` of the row power.
    pub per_row_mean: f64,
    pub n: usize,
}

impl Bandsize {
    /// `per_row_mean / N`: the fraction of waveguides carrying the power.
    pub fn per_row_fraction(&self) -> f64 {
        self.per_row_mean / self.n as f64
    }

    /// `global / N^2`.
    pub fn global_fraction(&self) -> f64 {
        self.global as f64 / (self.n * self.n) as f64
    }
}

/// Count of largest values needed to reach `(1 - eta)` of their sum.
fn greedy_count(mut powers: Vec<f64>, eta: f64) -> usize {
    let total: f64 = powers.iter().sum();
    if total == 0.0 {
        return 0;
    }
    powers.sort_by(|a, b| b.total_cmp(a));
    let target = (1.0 - eta) * total - 1e-12 * total;
    let mut acc = 0.0;
    for (k, p) in powers.iter().enumerate() {
        acc += p;
        if acc >= target {
            return k + 1;
        }
    }
    powers.len()
}

/// The eta-bandsize of a square matrix. The reference power is the matrix's
/// own total (equal to `N` for unitaries).
pub fn bandsize(u: &ComplexMatrix, eta: f64) -> Result<Bandsize> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::Domain(format!("eta {eta} outside (0, 1)")));
    }
    if !u.is_square() {
        return dim_err(format!("{:?} matrix is not square", u.shape()));
    }
    let n = u.rows();
    let p = u.norm_sqr();
    let per_row: usize = (0..n).map(|i| greedy_count(p.row(i).to_vec(), eta)).sum();
    Ok(Bandsize {
        global: greedy_count(p.as_slice().to_vec(), eta),
        per_row_mean: per_row as f64 / n as f64,
        n,
    })
}

/// Elementwise `|u_hat_ij - u_ij|`.
pub fn error_map(u_hat: &ComplexMatrix, u: &ComplexMatrix) -> Result<RealMatrix> {
    Ok(u_hat.sub(u)?.abs())
}

/// One-sample Kolmogorov-Smirnov distance of `samples` against `cdf`.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// Per-MZI quantity shown on a checkerboard grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quantity {
    /// `theta` folded into `[0, pi]`.
    Theta,
    /// Haar phase `xi`.
    Xi,
    /// Sensitivity index.
    Alpha,
    /// Haar-average reflectivity `1 / (alpha + 1)`.
    AvgR,
}

impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theta" => Ok(Self::Theta),
            "xi" => Ok(Self::Xi),
            "alpha" => Ok(Self::Alpha),
            "avg-r" => Ok(Self::AvgR),
            other => Err(Error::Domain(format!("unknown quantity {other:?}"))),
        }
    }
}

/// Grid with one row per top waveguide `0..N-1` and one column per layer;
/// cells without an MZI (including permutation layers) are `None`.
pub fn checkerboard(mesh: &Mesh, quantity: Quantity) -> Result<Vec<Vec<Option<f64>>>> {
    let spec = &mesh.spec;
    mesh.params.check(spec)?;
    let alpha = haar_sensitivity(spec).alpha;
    let values: Vec<f64> = (0..spec.num_mzis())
        .map(|i| {
            let a = alpha[i];
            let theta = canonicalize_theta(mesh.params.theta[i]);
            Ok(match quantity {
                Quantity::Theta => theta,
                Quantity::Xi => haar_phase_from_theta(a, theta)?,
                Quantity::Alpha => a as f64,
                Quantity::AvgR => average_reflectivity(a),
            })
        })
        .collect::<Result<_>>()?;
    let mut grid = vec![vec![None; spec.layers().len()]; spec.n() - 1];
    for (li, layer) in spec.layers().iter().enumerate() {
        if let Layer::Mzi(tops) = layer {
            let off = spec.layer_offset(li);
            for (k, &t) in tops.iter().enumerate() {
                grid[t][li] = Some(values[off + k]);
            }
        }
    }
    Ok(grid)
}

fn layer_header(cols: usize) -> Vec<String> {
    (0..cols).map(|l| format!("layer_{l}")).collect()
}

pub fn write_checkerboard_csv(path: impl AsRef<Path>, mesh: &Mesh, quantity: Quantity) -> Result<()> {
    let grid = checkerboard(mesh, quantity)?;
    crate::io::write_csv_grid(path, &layer_header(mesh.spec.layers().len()), &grid)
}

/// Writes the output of [`crate::mesh::propagate_fields`] (layers x waveguides)
/// as a grid with one row per waveguide and one column per layer.
pub fn write_propagation_csv(path: impl AsRef<Path>, fields: &RealMatrix) -> Result<()> {
    let (layers, n) = fields.shape();
    let rows: Vec<Vec<Option<f64>>> = (0..n).map(|w| (0..layers).map(|l| Some(fields[(l, w)])).collect()).collect();
    crate::io::write_csv_grid(path, &layer_header(layers), &rows)
}
