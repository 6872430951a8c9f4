//! Small dense linear algebra and summary statistics.

use crate::error::{invalid, Error, Result};

const PIVOT_TOL: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-10;
const JACOBI_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(invalid("ragged rows"));
        }
        let data: Vec<f64> = rows.concat();
        if data.iter().any(|v| !v.is_finite()) {
            return Err(invalid("matrix entries must be finite"));
        }
        Ok(Self { rows: rows.len(), cols, data })
    }

    pub fn diagonal(values: &[f64]) -> Self {
        Self::from_fn(values.len(), values.len(), |i, j| if i == j { values[i] } else { 0.0 })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(invalid("dimension mismatch in matmul"));
        }
        Ok(Self::from_fn(self.rows, other.cols, |i, j| (0..self.cols).map(|l| self.get(i, l) * other.get(l, j)).sum()))
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(invalid("dimension mismatch in mul_vec"));
        }
        Ok((0..self.rows).map(|i| (0..self.cols).map(|j| self.get(i, j) * x[j]).sum()).collect())
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in 0..i {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    fn require_square(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(invalid(format!("expected a square matrix, got {}x{}", self.rows, self.cols)))
        }
    }

    /// LU factors with partial pivoting: (packed LU, permutation, sign).
    fn lu(&self) -> Result<(Vec<f64>, Vec<usize>, f64)> {
        let n = self.require_square()?;
        let mut a = self.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&x, &y| a[x * n + col].abs().total_cmp(&a[y * n + col].abs()))
                .expect("non-empty range");
            if a[pivot * n + col].abs() < PIVOT_TOL {
                return Err(Error::Singular);
            }
            if pivot != col {
                for j in 0..n {
                    a.swap(pivot * n + j, col * n + j);
                }
                perm.swap(pivot, col);
                sign = -sign;
            }
            let p = a[col * n + col];
            for r in col + 1..n {
                let factor = a[r * n + col] / p;
                a[r * n + col] = factor;
                for j in col + 1..n {
                    a[r * n + j] -= factor * a[col * n + j];
                }
            }
        }
        Ok((a, perm, sign))
    }

    /// Solves `M x = z` by Gaussian elimination with partial pivoting.
    pub fn solve(&self, z: &[f64]) -> Result<Vec<f64>> {
        let n = self.require_square()?;
        if z.len() != n {
            return Err(invalid("right-hand side length mismatch"));
        }
        let (lu, perm, _) = self.lu()?;
        let mut y: Vec<f64> = perm.iter().map(|&p| z[p]).collect();
        for i in 0..n {
            for j in 0..i {
                y[i] -= lu[i * n + j] * y[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                y[i] -= lu[i * n + j] * y[j];
            }
            y[i] /= lu[i * n + i];
        }
        let residual = self.mul_vec(&y)?.iter().zip(z).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let scale = 1.0 + z.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if !residual.is_finite() || residual > 1e-8 * scale {
            return Err(Error::Singular);
        }
        Ok(y)
    }

    pub fn determinant(&self) -> Result<f64> {
        let n = self.require_square()?;
        match self.lu() {
            Ok((lu, _, sign)) => Ok(sign * (0..n).map(|i| lu[i * n + i]).product::<f64>()),
            Err(Error::Singular) => Ok(0.0),
            Err(e) => Err(e),
        }
    }

    pub fn inverse(&self) -> Result<Self> {
        let n = self.require_square()?;
        let mut inv = Self::zeros(n, n);
        for j in 0..n {
            let e: Vec<f64> = (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect();
            for (i, v) in self.solve(&e)?.into_iter().enumerate() {
                inv.set(i, j, v);
            }
        }
        Ok(inv)
    }

    /// Eigenvalues of a symmetric matrix, ascending, by cyclic Jacobi rotations.
    pub fn sym_eigenvalues(&self) -> Result<Vec<f64>> {
        let n = self.require_square()?;
        if self.max_asymmetry() > SYMMETRY_TOL {
            return Err(Error::NotSymmetric);
        }
        let mut a = self.clone();
        let target = JACOBI_TOL * self.frobenius();
        let off = |a: &DenseMatrix| {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        s += a.get(i, j) * a.get(i, j);
                    }
                }
            }
            s.sqrt()
        };
        let mut sweeps = 0;
        while off(&a) > target && sweeps < MAX_SWEEPS {
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a.get(p, q);
                    if apq == 0.0 {
                        continue;
                    }
                    let theta = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for r in 0..n {
                        let arp = a.get(r, p);
                        let arq = a.get(r, q);
                        a.set(r, p, c * arp - s * arq);
                        a.set(r, q, s * arp + c * arq);
                    }
                    for r in 0..n {
                        let apr = a.get(p, r);
                        let aqr = a.get(q, r);
                        a.set(p, r, c * apr - s * aqr);
                        a.set(q, r, s * apr + c * aqr);
                    }
                }
            }
            sweeps += 1;
        }
        let mut eig: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
        eig.sort_by(f64::total_cmp);
        Ok(eig)
    }

    /// Singular values, descending.
    pub fn singular_values(&self) -> Result<Vec<f64>> {
        let gram = self.transpose().matmul(self)?;
        let mut s: Vec<f64> = gram.sym_eigenvalues()?.into_iter().map(|l| l.max(0.0).sqrt()).collect();
        s.reverse();
        Ok(s)
    }

    /// `σ_max / σ_min`; [`Error::Singular`] when `σ_min ≤ 1e-12·σ_max`.
    pub fn condition_number(&self) -> Result<f64> {
        self.require_square()?;
        let s = self.singular_values()?;
        let (max, min) = (s[0], s[s.len() - 1]);
        if max == 0.0 || min <= 1e-12 * max {
            return Err(Error::Singular);
        }
        Ok(max / min)
    }
}

pub fn mse(estimate: &[f64], truth: &[f64]) -> Result<f64> {
    if estimate.len() != truth.len() || truth.is_empty() {
        return Err(invalid("mse needs equal, non-empty lengths"));
    }
    Ok(estimate.iter().zip(truth).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / truth.len() as f64)
}

/// Fractional ranks starting at 1; ties share their average rank.
pub fn fractional_ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && xs[idx[end]] == xs[idx[start]] {
            end += 1;
        }
        let avg = (start + end + 1) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        // A constant sequence carries no rank information.
        return 0.0;
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

/// Spearman rank correlation (Pearson on fractional ranks).
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(invalid("spearman needs equal lengths"));
    }
    if xs.len() < 2 {
        return Err(invalid("spearman needs at least two points"));
    }
    Ok(pearson(&fractional_ranks(xs), &fractional_ranks(ys)))
}

pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
