//! Small dense linear algebra: just what ridge regression, the Gram-matrix
//! bonus and the posterior sampler need.
//!
//! Vectors are plain `&[f64]` / `Vec<f64>`; matrices are row-major.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, 1.0)
    }

    pub fn scaled_identity(n: usize, scale: f64) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = scale;
        }
        m
    }

    /// Builds a matrix from row-major data, rejecting bad lengths and
    /// non-finite entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        check_finite("matrix", &data)?;
        Ok(Self { rows, cols, data })
    }

    /// Stacks equal-length rows. An empty slice yields a `0 x cols` matrix.
    pub fn from_rows(rows: &[Vec<f64>], cols: usize) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::Dimension(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::from_vec(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.get(r, c);
            }
        }
        t
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::Dimension(format!(
                "{}x{} matrix times vector of length {}",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        Ok((0..self.rows).map(|r| dot(self.row(r), x)).collect())
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                for (o, b) in out.row_mut(r).iter_mut().zip(orow) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ self`, the Gram matrix of the rows.
    pub fn gram(&self) -> Matrix {
        let d = self.cols;
        let mut g = Matrix::zeros(d, d);
        for r in 0..self.rows {
            add_outer(&mut g, self.row(r), 1.0);
        }
        g
    }

    /// `selfᵀ y`.
    pub fn tmatvec(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.rows {
            return Err(Error::Dimension(format!(
                "transpose of {}x{} times vector of length {}",
                self.rows,
                self.cols,
                y.len()
            )));
        }
        let mut out = vec![0.0; self.cols];
        for (r, &yr) in y.iter().enumerate() {
            axpy(&mut out, yr, self.row(r));
        }
        Ok(out)
    }

    pub fn add_diagonal(&mut self, v: f64) {
        let n = self.rows.min(self.cols);
        for i in 0..n {
            self.data[i * self.cols + i] += v;
        }
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// `m += scale * v vᵀ`.
pub fn add_outer(m: &mut Matrix, v: &[f64], scale: f64) {
    let d = v.len();
    for i in 0..d {
        let vi = scale * v[i];
        if vi == 0.0 {
            continue;
        }
        let row = m.row_mut(i);
        for j in 0..d {
            row[j] += vi * v[j];
        }
    }
}

fn check_finite(what: &str, xs: &[f64]) -> Result<()> {
    match xs.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(Error::InvalidInput(format!(
            "{what} entry {i} is not finite"
        ))),
        None => Ok(()),
    }
}

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Matrix,
}

impl Cholesky {
    pub fn factor(a: &Matrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Dimension(format!(
                "cholesky of non-square {}x{}",
                a.rows, a.cols
            )));
        }
        check_finite("matrix", &a.data)?;
        let n = a.rows;
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut diag = a.get(j, j);
            for k in 0..j {
                diag -= l.get(j, k) * l.get(j, k);
            }
            if !(diag > 0.0) {
                return Err(Error::NotSpd {
                    pivot: j,
                    value: diag,
                });
            }
            let ljj = diag.sqrt();
            l.set(j, j, ljj);
            for i in (j + 1)..n {
                let mut s = a.get(i, j);
                for k in 0..j {
                    s -= l.get(i, k) * l.get(j, k);
                }
                l.set(i, j, s / ljj);
            }
        }
        Ok(Self { l })
    }

    pub fn dim(&self) -> usize {
        self.l.rows
    }

    pub fn lower(&self) -> &Matrix {
        &self.l
    }

    /// Solves `L z = b`.
    pub fn forward(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut z = b.to_vec();
        for i in 0..n {
            let row = self.l.row(i);
            let s = dot(&row[..i], &z[..i]);
            z[i] = (z[i] - s) / row[i];
        }
        z
    }

    /// Solves `Lᵀ x = z`.
    pub fn backward(&self, z: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut x = z.to_vec();
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s -= self.l.get(k, i) * x[k];
            }
            x[i] = s / self.l.get(i, i);
        }
        x
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "rhs of length {} for a {}x{} system",
                b.len(),
                self.dim(),
                self.dim()
            )));
        }
        Ok(self.backward(&self.forward(b)))
    }

    pub fn inverse(&self) -> Matrix {
        let n = self.dim();
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for c in 0..n {
            e.iter_mut().for_each(|x| *x = 0.0);
            e[c] = 1.0;
            let col = self.backward(&self.forward(&e));
            for r in 0..n {
                inv.set(r, c, col[r]);
            }
        }
        symmetrize(&mut inv);
        inv
    }
}

fn symmetrize(m: &mut Matrix) {
    let n = m.rows;
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m.get(i, j) + m.get(j, i));
            m.set(i, j, v);
            m.set(j, i, v);
        }
    }
}

/// Solves `A x = b` for symmetric positive definite `A` via Cholesky.
pub fn spd_solve(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    check_finite("rhs", b)?;
    Cholesky::factor(a)?.solve(b)
}

pub fn spd_inverse(a: &Matrix) -> Result<Matrix> {
    Ok(Cholesky::factor(a)?.inverse())
}

/// Ridge regression: `argmin_w Σ (y_i − w·Φ_i)² + λ‖w‖²`, i.e.
/// `(ΦᵀΦ + λI)⁻¹ Φᵀ y`. With no rows the answer is the zero vector.
pub fn ridge_solve(phi: &Matrix, targets: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if phi.cols == 0 {
        return Err(Error::Dimension("ridge with zero features".into()));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidInput(format!(
            "ridge lambda must be positive, got {lambda}"
        )));
    }
    if targets.len() != phi.rows {
        return Err(Error::Dimension(format!(
            "{} targets for {} rows",
            targets.len(),
            phi.rows
        )));
    }
    check_finite("targets", targets)?;
    check_finite("design", &phi.data)?;
    let mut gram = phi.gram();
    gram.add_diagonal(lambda);
    let rhs = phi.tmatvec(targets)?;
    spd_solve(&gram, &rhs)
}

/// Sherman–Morrison: given `A⁻¹`, returns `(A + φφᵀ)⁻¹`.
pub fn rank1_inverse_update(a_inv: &Matrix, phi: &[f64]) -> Result<Matrix> {
    if !a_inv.is_square() || a_inv.rows != phi.len() {
        return Err(Error::Dimension(format!(
            "{}x{} inverse with feature of length {}",
            a_inv.rows,
            a_inv.cols,
            phi.len()
        )));
    }
    let u = a_inv.matvec(phi)?;
    let denom = 1.0 + dot(phi, &u);
    if !(denom > 0.0) || !denom.is_finite() {
        return Err(Error::Degenerate(format!(
            "Sherman-Morrison denominator {denom}"
        )));
    }
    let mut out = a_inv.clone();
    add_outer(&mut out, &u, -1.0 / denom);
    Ok(out)
}

/// `φᵀ A⁻¹ φ`, clamped at zero against round-off.
pub fn quad_form(a_inv: &Matrix, phi: &[f64]) -> Result<f64> {
    let v = a_inv.matvec(phi)?;
    Ok(dot(phi, &v).max(0.0))
}
