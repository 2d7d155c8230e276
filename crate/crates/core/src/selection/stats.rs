use rand::Rng;
use serde::{Deserialize, Serialize};

use super::lasso::{cv_lasso, fit_lasso, lambda_grid, LassoOptions, Prepared};
use crate::error::{Error, Result};

/// How the penalty for the augmented lasso is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum LambdaRule {
    /// K-fold CV on a log grid from λ_max down to `ratio · λ_max`.
    Cv { count: usize, ratio: f64, folds: usize },
    Fixed { lambda: f64 },
}

impl Default for LambdaRule {
    fn default() -> Self {
        LambdaRule::Cv {
            count: 50,
            ratio: 0.01,
            folds: 5,
        }
    }
}

/// Antisymmetric knockoff statistics w_i = |β̂_i| − |β̂_{p+i}|.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WStats {
    pub w: Vec<f64>,
    pub lambda: f64,
    pub lambda_max: f64,
    pub standardized: bool,
}

/// Lasso coefficient-difference statistics on the augmented design [X | X̃].
pub fn coef_diff_stats<R: Rng + ?Sized>(
    x: &[Vec<f64>],
    xk: &[Vec<f64>],
    y: &[f64],
    rule: &LambdaRule,
    opts: &LassoOptions,
    rng: &mut R,
) -> Result<WStats> {
    if x.len() != xk.len() {
        return Err(Error::Dimension(format!("X has {} columns, knockoffs have {}", x.len(), xk.len())));
    }
    let p = x.len();
    let design: Vec<Vec<f64>> = x.iter().chain(xk).cloned().collect();
    let lambda_max = Prepared::new(&design, y, opts)?.lambda_max();
    let (coef, lambda) = if lambda_max == 0.0 {
        (vec![0.0; 2 * p], 0.0)
    } else {
        match rule {
            LambdaRule::Fixed { lambda } => (fit_lasso(&design, y, *lambda, opts)?.coef, *lambda),
            LambdaRule::Cv { count, ratio, folds } => {
                let grid = lambda_grid(lambda_max, *count, *ratio);
                let cv = cv_lasso(&design, y, &grid, *folds, opts, rng)?;
                (cv.fit.coef, cv.lambdas[cv.best_index])
            }
        }
    };
    Ok(WStats {
        w: (0..p).map(|i| coef[i].abs() - coef[p + i].abs()).collect(),
        lambda,
        lambda_max,
        standardized: opts.standardize,
    })
}
