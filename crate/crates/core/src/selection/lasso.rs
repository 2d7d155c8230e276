//! Lasso by cyclic coordinate descent.
//!
//! Minimises (1/2n)‖y − b₀ − Xβ‖² + λ‖β‖₁. With `standardize` the penalty is
//! applied to coefficients of unit-variance columns (variance with divisor n)
//! and the returned coefficients are mapped back to the original scale.
//!
//! Exactly duplicated working columns are fitted as one column and the
//! coefficient is split equally between the copies, which is the
//! minimum-ℓ2 member of the (then non-unique) solution set.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

/// Default sweep budget.
pub const DEFAULT_MAX_SWEEPS: usize = 100_000;
/// KKT subgradient residual an accepted fit must reach.
pub const KKT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LassoOptions {
    pub standardize: bool,
    pub intercept: bool,
    pub max_sweeps: usize,
    /// Sweeps stop once the largest scaled coefficient change falls below this.
    pub tol: f64,
}

impl Default for LassoOptions {
    fn default() -> Self {
        LassoOptions {
            standardize: true,
            intercept: true,
            max_sweeps: DEFAULT_MAX_SWEEPS,
            tol: 1e-10,
        }
    }
}

impl LassoOptions {
    /// Raw design, no centering: the textbook (1/2n)‖y − Xβ‖² + λ‖β‖₁.
    pub fn plain() -> Self {
        LassoOptions {
            standardize: false,
            intercept: false,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit {
    /// Coefficients on the original column scale.
    pub coef: Vec<f64>,
    pub intercept: f64,
    pub lambda: f64,
    pub sweeps: usize,
    /// Max KKT violation, measured on the working (possibly standardized) scale.
    pub kkt_residual: f64,
}

/// Centred / scaled copy of a design, the working space for coordinate descent.
#[derive(Debug, Clone)]
pub struct Prepared {
    n: usize,
    cols: Vec<Vec<f64>>,
    col_sq: Vec<f64>,
    x_mean: Vec<f64>,
    x_scale: Vec<f64>,
    /// Index of the first identical column; `rep[j] == j` for solved columns.
    rep: Vec<usize>,
    copies: Vec<usize>,
    y: Vec<f64>,
    y_mean: f64,
}

impl Prepared {
    pub fn new(columns: &[Vec<f64>], y: &[f64], opts: &LassoOptions) -> Result<Prepared> {
        let n = y.len();
        if n == 0 {
            return Err(Error::Dimension("empty response".into()));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("non-finite response".into()));
        }
        let mut cols = Vec::with_capacity(columns.len());
        let (mut x_mean, mut x_scale, mut col_sq) = (vec![], vec![], vec![]);
        for (j, c) in columns.iter().enumerate() {
            if c.len() != n {
                return Err(Error::Dimension(format!("column {j} has {} rows, response has {n}", c.len())));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::Validation(format!("non-finite entry in column {j}")));
            }
            let mean = if opts.intercept { c.iter().sum::<f64>() / n as f64 } else { 0.0 };
            let mut z: Vec<f64> = c.iter().map(|v| v - mean).collect();
            let sq = z.iter().map(|v| v * v).sum::<f64>() / n as f64;
            let mut scale = 1.0;
            let mut sq_out = sq;
            if opts.standardize && sq > 0.0 {
                scale = sq.sqrt();
                z.iter_mut().for_each(|v| *v /= scale);
                sq_out = z.iter().map(|v| v * v).sum::<f64>() / n as f64;
            }
            // constant columns are inert
            if sq <= 1e-24 {
                sq_out = 0.0;
            }
            x_mean.push(mean);
            x_scale.push(scale);
            col_sq.push(sq_out);
            cols.push(z);
        }
        let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut rep = Vec::with_capacity(cols.len());
        let mut copies = vec![0; cols.len()];
        for (j, z) in cols.iter().enumerate() {
            let key = z.iter().map(|v| (v + 0.0).to_bits()).collect();
            let r = *seen.entry(key).or_insert(j);
            rep.push(r);
            copies[r] += 1;
        }
        for j in 0..cols.len() {
            copies[j] = copies[rep[j]];
        }
        let y_mean = if opts.intercept { y.iter().sum::<f64>() / n as f64 } else { 0.0 };
        Ok(Prepared {
            n,
            cols,
            col_sq,
            x_mean,
            x_scale,
            rep,
            copies,
            y: y.iter().map(|v| v - y_mean).collect(),
            y_mean,
        })
    }

    pub fn ncols(&self) -> usize {
        self.cols.len()
    }

    /// Smallest λ at which β = 0 satisfies the KKT conditions.
    pub fn lambda_max(&self) -> f64 {
        (0..self.ncols())
            .filter(|&j| self.col_sq[j] > 0.0)
            .map(|j| (dot(&self.cols[j], &self.y) / self.n as f64).abs())
            .fold(0.0, f64::max)
    }

    fn kkt_residual(&self, beta: &[f64], resid: &[f64], lambda: f64) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.ncols() {
            if self.col_sq[j] == 0.0 || self.rep[j] != j {
                continue;
            }
            let g = dot(&self.cols[j], resid) / self.n as f64;
            let v = if beta[j] != 0.0 {
                (g - lambda * beta[j].signum()).abs()
            } else {
                (g.abs() - lambda).max(0.0)
            };
            worst = worst.max(v);
        }
        worst
    }

    /// Coordinate descent from `beta` (working scale), updated in place.
    pub fn solve(&self, lambda: f64, beta: &mut [f64], opts: &LassoOptions) -> Result<(usize, f64)> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::Parameter(format!("lambda must be finite and nonnegative, got {lambda}")));
        }
        let n = self.n as f64;
        let mut resid = self.y.clone();
        for (j, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                axpy(-b, &self.cols[j], &mut resid);
            }
        }
        let mut sweeps = 0;
        let mut residual = f64::INFINITY;
        while sweeps < opts.max_sweeps {
            sweeps += 1;
            let mut max_change: f64 = 0.0;
            for j in 0..self.ncols() {
                let c = self.col_sq[j];
                if c == 0.0 || self.rep[j] != j {
                    beta[j] = 0.0;
                    continue;
                }
                let old = beta[j];
                let rho = dot(&self.cols[j], &resid) / n + c * old;
                let new = soft_threshold(rho, lambda) / c;
                if new != old {
                    axpy(old - new, &self.cols[j], &mut resid);
                    beta[j] = new;
                    max_change = max_change.max((new - old).abs() * c.sqrt());
                }
            }
            if max_change < opts.tol {
                // recompute the residual from scratch so drift cannot mask a violation
                resid.copy_from_slice(&self.y);
                for (j, &b) in beta.iter().enumerate() {
                    if b != 0.0 {
                        axpy(-b, &self.cols[j], &mut resid);
                    }
                }
                residual = self.kkt_residual(beta, &resid, lambda);
                if residual <= KKT_TOL {
                    return Ok((sweeps, residual));
                }
            }
        }
        if residual.is_infinite() {
            residual = self.kkt_residual(beta, &resid, lambda);
        }
        Err(Error::Convergence { sweeps, residual })
    }

    /// Working-scale coefficients to an original-scale fit.
    pub fn unscale(&self, beta: &[f64], lambda: f64, sweeps: usize, kkt_residual: f64) -> LassoFit {
        let coef: Vec<f64> = (0..beta.len())
            .map(|j| beta[self.rep[j]] / self.copies[j] as f64 / self.x_scale[j])
            .collect();
        let intercept = self.y_mean - coef.iter().zip(&self.x_mean).map(|(b, m)| b * m).sum::<f64>();
        LassoFit {
            coef,
            intercept,
            lambda,
            sweeps,
            kkt_residual,
        }
    }
}

pub fn soft_threshold(z: f64, lambda: f64) -> f64 {
    if z > lambda {
        z - lambda
    } else if z < -lambda {
        z + lambda
    } else {
        0.0
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Lasso fit at a single λ. `columns` is column-major: one vector per feature.
pub fn fit_lasso(columns: &[Vec<f64>], y: &[f64], lambda: f64, opts: &LassoOptions) -> Result<LassoFit> {
    let prep = Prepared::new(columns, y, opts)?;
    let mut beta = vec![0.0; prep.ncols()];
    let (sweeps, res) = prep.solve(lambda, &mut beta, opts)?;
    Ok(prep.unscale(&beta, lambda, sweeps, res))
}

/// Fits along a descending λ path with warm starts.
pub fn lasso_path(columns: &[Vec<f64>], y: &[f64], lambdas: &[f64], opts: &LassoOptions) -> Result<Vec<LassoFit>> {
    let prep = Prepared::new(columns, y, opts)?;
    let mut beta = vec![0.0; prep.ncols()];
    lambdas
        .iter()
        .map(|&l| {
            let (sweeps, res) = prep.solve(l, &mut beta, opts)?;
            Ok(prep.unscale(&beta, l, sweeps, res))
        })
        .collect()
}

/// `count` log-spaced values from `lambda_max` down to `ratio · lambda_max`.
pub fn lambda_grid(lambda_max: f64, count: usize, ratio: f64) -> Vec<f64> {
    if count == 1 {
        return vec![lambda_max];
    }
    let (hi, lo) = (lambda_max.ln(), (lambda_max * ratio).ln());
    (0..count)
        .map(|i| (hi + (lo - hi) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub lambdas: Vec<f64>,
    pub cv_mse: Vec<f64>,
    pub best_index: usize,
    pub fit: LassoFit,
}

/// K-fold cross-validated lasso over a fixed grid. Folds come from a seeded
/// shuffle; the grid is computed on the full data. Ties go to the larger λ.
pub fn cv_lasso<R: Rng + ?Sized>(
    columns: &[Vec<f64>],
    y: &[f64],
    lambdas: &[f64],
    folds: usize,
    opts: &LassoOptions,
    rng: &mut R,
) -> Result<CvResult> {
    let n = y.len();
    if lambdas.is_empty() {
        return Err(Error::Parameter("empty lambda grid".into()));
    }
    if folds < 2 || folds > n {
        return Err(Error::Parameter(format!("need 2 <= folds <= n, got {folds} folds for n = {n}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut fold_of = vec![0usize; n];
    for (pos, &i) in order.iter().enumerate() {
        fold_of[i] = pos % folds;
    }
    let mut sse = vec![0.0; lambdas.len()];
    for f in 0..folds {
        let train: Vec<usize> = (0..n).filter(|&i| fold_of[i] != f).collect();
        let test: Vec<usize> = (0..n).filter(|&i| fold_of[i] == f).collect();
        let sub = |v: &[f64], idx: &[usize]| idx.iter().map(|&i| v[i]).collect::<Vec<f64>>();
        let tr_cols: Vec<Vec<f64>> = columns.iter().map(|c| sub(c, &train)).collect();
        let path = lasso_path(&tr_cols, &sub(y, &train), lambdas, opts)?;
        for (k, fit) in path.iter().enumerate() {
            for &i in &test {
                let pred = fit.intercept + columns.iter().zip(&fit.coef).map(|(c, b)| c[i] * b).sum::<f64>();
                sse[k] += (y[i] - pred).powi(2);
            }
        }
    }
    let cv_mse: Vec<f64> = sse.iter().map(|s| s / n as f64).collect();
    let mut best_index = 0;
    for (k, &v) in cv_mse.iter().enumerate() {
        if v < cv_mse[best_index] {
            best_index = k;
        }
    }
    let path = lasso_path(columns, y, &lambdas[..=best_index], opts)?;
    let fit = path.into_iter().last().expect("nonempty path");
    Ok(CvResult {
        lambdas: lambdas.to_vec(),
        cv_mse,
        best_index,
        fit,
    })
}
