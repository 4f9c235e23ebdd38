//! Dense real vectors and matrices, with exactly the handful of operations the
//! two-pass semantics needs.
//!
//! Every reduction sums left to right in ascending index order, so results are
//! bit-stable across runs and platforms. There is no blocking and no parallel
//! reduction.

use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A state vector. All entries are finite.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
#[serde(transparent)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        check_finite("Vector::new", &entries)?;
        Ok(Vector(entries))
    }

    pub fn from_slice(entries: &[f64]) -> Result<Self> {
        Self::new(entries.to_vec())
    }

    pub fn zeros(len: usize) -> Self {
        Vector(vec![0.0; len])
    }

    /// Skips the finiteness check; callers guarantee it.
    pub(crate) fn from_raw(entries: Vec<f64>) -> Self {
        Vector(entries)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// The state with a trailing 1 appended, `(x, 1)`, the input that picks up
    /// the bias column of a transition matrix.
    pub fn augmented(&self) -> Vector {
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.extend_from_slice(&self.0);
        v.push(1.0);
        Vector(v)
    }
}

impl Deref for Vector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl<'de> Deserialize<'de> for Vector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<f64>::deserialize(d)?;
        Vector::new(raw).map_err(serde::de::Error::custom)
    }
}

/// A row-major real matrix. All entries are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(
                "Matrix::new",
                format!("{} entries ({rows}x{cols})", rows * cols),
                format!("{} entries", data.len()),
            ));
        }
        check_finite("Matrix::new", &data)?;
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from its rows. An empty slice gives a 0x0 matrix.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (j, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Error::shape(
                    "Matrix::from_rows",
                    format!("{cols} columns"),
                    format!("{} columns in row {j}", row.len()),
                ));
            }
            data.extend_from_slice(row);
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Matrix { rows, cols, data }
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

    pub fn get(&self, row: usize, col: usize) -> f64 {
        assert!(row < self.rows && col < self.cols, "index out of bounds");
        self.data[row * self.cols + col]
    }

    /// Overwrites one entry. Panics on an out-of-range index or a non-finite value.
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        assert!(row < self.rows && col < self.cols, "index out of bounds");
        assert!(value.is_finite(), "matrix entries must be finite");
        self.data[row * self.cols + col] = value;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn row_vecs(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|j| self.row(j).to_vec()).collect()
    }

    pub fn column(&self, col: usize) -> Vector {
        Vector((0..self.rows).map(|j| self.get(j, col)).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for j in 0..self.rows {
            let row: Vec<String> = self.row(j).iter().map(|v| format!("{v:.8}")).collect();
            writeln!(f, "({})", row.join(", "))?;
        }
        Ok(())
    }
}

fn check_finite(context: &'static str, entries: &[f64]) -> Result<()> {
    match entries.iter().find(|v| !v.is_finite()) {
        Some(&value) => Err(Error::Domain { context, value }),
        None => Ok(()),
    }
}

/// The linear extension of a transition matrix applied to `(x, 1)`:
/// `result[j] = sum_i t[j,i] * x[i] + t[j,n]`.
pub fn kleisli_apply(t: &Matrix, x: &[f64]) -> Result<Vector> {
    let n = x.len();
    if t.cols != n + 1 {
        return Err(Error::shape(
            "kleisli_apply",
            format!(
                "input of length {} for a {}x{} transition",
                t.cols.saturating_sub(1),
                t.rows,
                t.cols
            ),
            format!("input of length {n}"),
        ));
    }
    let mut out = Vec::with_capacity(t.rows);
    for j in 0..t.rows {
        let row = t.row(j);
        let mut acc = 0.0;
        for i in 0..n {
            acc += row[i] * x[i];
        }
        acc += row[n];
        out.push(acc);
    }
    check_finite("kleisli_apply", &out)?;
    Ok(Vector(out))
}

/// Elementwise product of two vectors.
pub fn hadamard(u: &[f64], v: &[f64]) -> Result<Vector> {
    if u.len() != v.len() {
        return Err(Error::shape("hadamard", u.len(), v.len()));
    }
    Ok(Vector(u.iter().zip(v).map(|(a, b)| a * b).collect()))
}

/// Elementwise product of two matrices.
pub fn hadamard_mat(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.shape() != b.shape() {
        return Err(Error::shape(
            "hadamard_mat",
            format!("{}x{}", a.rows, a.cols),
            format!("{}x{}", b.rows, b.cols),
        ));
    }
    let data = a.data.iter().zip(&b.data).map(|(x, y)| x * y).collect();
    Ok(Matrix::from_raw(a.rows, a.cols, data))
}

/// `result[j,i] = s[j] * w[i]`.
pub fn outer(s: &[f64], w: &[f64]) -> Matrix {
    let mut data = Vec::with_capacity(s.len() * w.len());
    for &sj in s {
        data.extend(w.iter().map(|&wi| sj * wi));
    }
    Matrix::from_raw(s.len(), w.len(), data)
}

/// Drops the last (bias) column of a transition matrix.
pub fn weights_part(t: &Matrix) -> Result<Matrix> {
    if t.cols == 0 {
        return Err(Error::shape(
            "weights_part",
            "at least one column",
            format!("{}x0", t.rows),
        ));
    }
    let n = t.cols - 1;
    let mut data = Vec::with_capacity(t.rows * n);
    for j in 0..t.rows {
        data.extend_from_slice(&t.row(j)[..n]);
    }
    Ok(Matrix::from_raw(t.rows, n, data))
}

/// Row vector times matrix: `result[i] = sum_j s[j] * a[j,i]`.
pub fn vec_mat(s: &[f64], a: &Matrix) -> Result<Vector> {
    if s.len() != a.rows {
        return Err(Error::shape(
            "vec_mat",
            format!(
                "row vector of length {} for a {}x{} matrix",
                a.rows, a.rows, a.cols
            ),
            format!("length {}", s.len()),
        ));
    }
    let mut out = Vec::with_capacity(a.cols);
    for i in 0..a.cols {
        let mut acc = 0.0;
        for (j, &sj) in s.iter().enumerate() {
            acc += sj * a.get(j, i);
        }
        out.push(acc);
    }
    check_finite("vec_mat", &out)?;
    Ok(Vector(out))
}
