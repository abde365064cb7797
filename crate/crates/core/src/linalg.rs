//! Dense complex linear algebra and the Haar-random unitary oracle.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{dim_err, Error, Result};
use crate::rng::SeededRng;

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

pub type ComplexMatrix = Matrix<Complex64>;
pub type RealMatrix = Matrix<f64>;

impl<T: Copy + Default> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::default(); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return dim_err(format!(
                "{} entries cannot fill a {rows}x{cols} matrix",
                data.len()
            ));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Mutable views of two distinct rows.
    pub fn row_pair_mut(&mut self, a: usize, b: usize) -> (&mut [T], &mut [T]) {
        assert!(a < b, "row_pair_mut expects a < b");
        let c = self.cols;
        let (head, tail) = self.data.split_at_mut(b * c);
        (&mut head[a * c..(a + 1) * c], &mut tail[..c])
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn map<U: Copy + Default>(&self, f: impl Fn(T) -> U) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Rows reordered so that row `i` of the result is row `perm[i]` of `self`.
    pub fn permute_rows(&self, perm: &[usize]) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self[(perm[i], j)])
    }

    pub fn permute_cols(&self, perm: &[usize]) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, perm[j])])
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl RealMatrix {
    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    pub fn to_complex(&self) -> ComplexMatrix {
        self.map(|x| Complex64::new(x, 0.0))
    }
}

impl ComplexMatrix {
    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { diag[i] } else { Complex64::default() })
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return dim_err(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            ));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == Complex64::default() {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map(|x| x * s)
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        if self.shape() != rhs.shape() {
            return dim_err(format!(
                "shapes {:?} and {:?} differ",
                self.shape(),
                rhs.shape()
            ));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn abs(&self) -> RealMatrix {
        self.map(|z| z.norm())
    }

    pub fn norm_sqr(&self) -> RealMatrix {
        self.map(|z| z.norm_sqr())
    }

    pub fn max_abs_diff(&self, rhs: &Self) -> Result<f64> {
        let d = self.sub(rhs)?;
        Ok(d.data.iter().map(|z| z.norm()).fold(0.0, f64::max))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// `true` iff the max-norm of `m^H m - I` is at most `tol`.
pub fn is_unitary(m: &ComplexMatrix, tol: f64) -> Result<bool> {
    if !m.is_square() {
        return dim_err(format!("{}x{} matrix is not square", m.rows, m.cols));
    }
    let gram = m.adjoint().matmul(m)?;
    Ok(gram.max_abs_diff(&ComplexMatrix::identity(m.rows))? <= tol)
}

/// Mean square error `||u_hat - u||_F^2 / (2N)` between two `N x N` matrices.
pub fn mse_cost(u_hat: &ComplexMatrix, u: &ComplexMatrix) -> Result<f64> {
    if !u.is_square() || u_hat.shape() != u.shape() {
        return dim_err(format!(
            "mse_cost needs equal square shapes, got {:?} and {:?}",
            u_hat.shape(),
            u.shape()
        ));
    }
    Ok(u_hat.sub(u)?.frobenius_norm_sq() / (2.0 * u.rows as f64))
}

/// Haar-random unitary from Gram-Schmidt orthonormalization of Gaussian columns.
///
/// Entries are drawn row-major (entry `(0,0)`, `(0,1)`, ...), each as a
/// [`SeededRng::complex_normal`]. Columns are then orthonormalized left to
/// right by modified Gram-Schmidt with one re-orthogonalization pass.
pub fn gram_schmidt_haar(n: usize, rng: &mut SeededRng) -> Result<ComplexMatrix> {
    if n == 0 {
        return dim_err("Haar unitary of dimension 0");
    }
    let g = ComplexMatrix::from_fn(n, n, |_, _| rng.complex_normal());
    let mut q: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    for j in 0..n {
        let mut v = g.column(j);
        for _pass in 0..2 {
            for qk in &q {
                let proj: Complex64 = qk.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, qi) in v.iter_mut().zip(qk) {
                    *vi -= proj * qi;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|z| *z /= norm);
        q.push(v);
    }
    Ok(ComplexMatrix::from_fn(n, n, |i, j| q[j][i]))
}

/// `n x b` matrix whose columns are independent unit-norm complex vectors.
///
/// Draw order is row-major over the Gaussian entries, then each column is
/// normalized.
pub fn random_unit_columns(n: usize, b: usize, rng: &mut SeededRng) -> Result<ComplexMatrix> {
    if n == 0 || b == 0 {
        return dim_err(format!("random_unit_columns needs n, b >= 1 (got {n}, {b})"));
    }
    let mut x = ComplexMatrix::from_fn(n, b, |_, _| rng.complex_normal());
    for j in 0..b {
        let norm = (0..n).map(|i| x[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        for i in 0..n {
            x[(i, j)] /= norm;
        }
    }
    Ok(x)
}

#[derive(Serialize, Deserialize)]
struct MatrixFile {
    rows: usize,
    cols: usize,
    #[serde(serialize_with = "crate::io::fmt17::serialize")]
    re: Vec<f64>,
    #[serde(serialize_with = "crate::io::fmt17::serialize")]
    im: Vec<f64>,
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        MatrixFile {
            rows: self.rows,
            cols: self.cols,
            re: self.data.iter().map(|z| z.re).collect(),
            im: self.data.iter().map(|z| z.im).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        let f = MatrixFile::deserialize(d)?;
        if f.re.len() != f.rows * f.cols || f.im.len() != f.rows * f.cols {
            return Err(D::Error::custom(format!(
                "matrix of {}x{} needs {} re/im entries",
                f.rows,
                f.cols,
                f.rows * f.cols
            )));
        }
        let data = f.re.into_iter().zip(f.im).map(|(r, i)| Complex64::new(r, i)).collect();
        Ok(ComplexMatrix {
            rows: f.rows,
            cols: f.cols,
            data,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct RealMatrixFile {
    rows: usize,
    cols: usize,
    #[serde(serialize_with = "crate::io::fmt17::serialize")]
    values: Vec<f64>,
}

impl Serialize for RealMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        RealMatrixFile {
            rows: self.rows,
            cols: self.cols,
            values: self.data.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for RealMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        let f = RealMatrixFile::deserialize(d)?;
        if f.values.len() != f.rows * f.cols {
            return Err(D::Error::custom(format!(
                "matrix of {}x{} needs {} values",
                f.rows,
                f.cols,
                f.rows * f.cols
            )));
        }
        Ok(RealMatrix {
            rows: f.rows,
            cols: f.cols,
            data: f.values,
        })
    }
}

impl RealMatrix {
    pub fn write_json(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        crate::io::write_json(path, self)
    }

    pub fn read_json(path: impl AsRef<std::path::Path>) -> Result<Self> {
        crate::io::read_json(path)
    }
}

impl ComplexMatrix {
    pub fn write_json(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        if !self.is_finite() {
            return Err(Error::Validation("matrix has non-finite entries".into()));
        }
        crate::io::write_json(path, self)
    }

    pub fn read_json(path: impl AsRef<std::path::Path>) -> Result<Self> {
        crate::io::read_json(path)
    }
}
