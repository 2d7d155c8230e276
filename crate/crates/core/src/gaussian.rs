//! Second-order Gaussian model-X knockoffs with the equicorrelated s-vector.
//!
//! Works on the correlation scale: C is shrunk toward I (equivalently Σ̂
//! toward its diagonal) with the smallest weight giving λ_min ≥ 1e-6, then
//! s = min(2 λ_min(C), 1) for every coordinate and
//! Z̃ | Z ~ N(Z − s C⁻¹ Z, 2s I − s² C⁻¹).
//! Constant columns are copied through as their mean.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sampler::SeededRng;

/// Floor on λ_min of the shrunk correlation matrix.
pub const MIN_EIGENVALUE: f64 = 1e-6;

/// A fitted Gaussian knockoff kernel.
#[derive(Debug, Clone)]
pub struct GaussianKnockoffModel {
    mean: Vec<f64>,
    sd: Vec<f64>,
    /// Non-constant columns, the ones the Gaussian kernel acts on.
    active: Vec<usize>,
    corr: DMatrix<f64>,
    shrinkage: f64,
    s: f64,
    /// Maps Z to the conditional mean: I − s C⁻¹.
    mean_map: DMatrix<f64>,
    /// Square root of the clipped conditional covariance.
    root: DMatrix<f64>,
}

impl GaussianKnockoffModel {
    /// Estimates μ̂ and Σ̂ (divisor n − 1) from the columns of X.
    pub fn fit(columns: &[Vec<f64>]) -> Result<Self> {
        let p = columns.len();
        let n = columns.first().map_or(0, Vec::len);
        if n < 2 {
            return Err(Error::Dimension(format!("need at least 2 rows, got {n}")));
        }
        for (j, c) in columns.iter().enumerate() {
            if c.len() != n {
                return Err(Error::Dimension(format!("column {j} has {} rows, expected {n}", c.len())));
            }
            if let Some(i) = c.iter().position(|v| !v.is_finite()) {
                return Err(Error::Validation(format!("non-finite entry at row {i}, column {j}")));
            }
        }
        let mean: Vec<f64> = columns.iter().map(|c| c.iter().sum::<f64>() / n as f64).collect();
        let sd: Vec<f64> = columns
            .iter()
            .zip(&mean)
            .map(|(c, m)| (c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt())
            .collect();
        let active: Vec<usize> = (0..p).filter(|&j| sd[j] > 0.0).collect();
        let q = active.len();
        let z = DMatrix::from_fn(n, q, |i, k| {
            let j = active[k];
            (columns[j][i] - mean[j]) / sd[j]
        });
        let mut corr = (z.transpose() * &z) / (n - 1) as f64;
        for k in 0..q {
            corr[(k, k)] = 1.0;
        }
        let lmin = min_eigenvalue(&corr);
        let shrinkage = if lmin < MIN_EIGENVALUE {
            ((MIN_EIGENVALUE - lmin) / (1.0 - lmin)).clamp(0.0, 1.0)
        } else {
            0.0
        };
        if shrinkage > 0.0 {
            corr *= 1.0 - shrinkage;
            for k in 0..q {
                corr[(k, k)] += shrinkage;
            }
        }
        let eig = SymmetricEigen::new(corr.clone());
        let lmin = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        let s = if q == 0 { 0.0 } else { (2.0 * lmin).min(1.0) };
        let inv_diag = eig.eigenvalues.map(|l| 1.0 / l.max(MIN_EIGENVALUE * 1e-3));
        let corr_inv = &eig.eigenvectors * DMatrix::from_diagonal(&inv_diag) * eig.eigenvectors.transpose();
        let mean_map = DMatrix::identity(q, q) - &corr_inv * s;
        let mut cond = DMatrix::identity(q, q) * (2.0 * s) - corr_inv * (s * s);
        cond = (&cond + cond.transpose()) * 0.5;
        let ce = SymmetricEigen::new(cond);
        let sqrt_diag = ce.eigenvalues.map(|l| l.max(0.0).sqrt());
        let root = &ce.eigenvectors * DMatrix::from_diagonal(&sqrt_diag);
        Ok(GaussianKnockoffModel {
            mean,
            sd,
            active,
            corr,
            shrinkage,
            s,
            mean_map,
            root,
        })
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Shrunk covariance Σ̂ on the original scale (zero rows for constant columns).
    pub fn covariance(&self) -> DMatrix<f64> {
        let p = self.mean.len();
        let mut out = DMatrix::zeros(p, p);
        for (a, &i) in self.active.iter().enumerate() {
            for (b, &j) in self.active.iter().enumerate() {
                out[(i, j)] = self.corr[(a, b)] * self.sd[i] * self.sd[j];
            }
        }
        out
    }

    /// s_j on the covariance scale, s · σ̂_j².
    pub fn s_vector(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.mean.len()];
        for &j in &self.active {
            s[j] = self.s * self.sd[j] * self.sd[j];
        }
        s
    }

    pub fn shrinkage(&self) -> f64 {
        self.shrinkage
    }

    /// Draws X̃ row by row; row i uses stream `rng.derive(i)`.
    pub fn sample(&self, columns: &[Vec<f64>], rng: &SeededRng) -> Result<Vec<Vec<f64>>> {
        let p = self.mean.len();
        if columns.len() != p {
            return Err(Error::Dimension(format!("model has {p} columns, input has {}", columns.len())));
        }
        let n = columns.first().map_or(0, Vec::len);
        let q = self.active.len();
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut r = rng.derive(i as u64).rng();
                let z = DVector::from_fn(q, |k, _| {
                    let j = self.active[k];
                    (columns[j][i] - self.mean[j]) / self.sd[j]
                });
                let eps = DVector::from_fn(q, |_, _| StandardNormal.sample(&mut r));
                let zk = &self.mean_map * z + &self.root * eps;
                let mut row = self.mean.clone();
                for (k, &j) in self.active.iter().enumerate() {
                    row[j] = self.mean[j] + self.sd[j] * zk[k];
                }
                row
            })
            .collect();
        Ok((0..p).map(|j| rows.iter().map(|r| r[j]).collect()).collect())
    }
}

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Fits the model to X and draws one knockoff matrix (column-major).
pub fn gaussian_knockoffs(columns: &[Vec<f64>], rng: &SeededRng) -> Result<Vec<Vec<f64>>> {
    GaussianKnockoffModel::fit(columns)?.sample(columns, rng)
}
