use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Link `f` tying the second-group success probability to the first, `V = f(U)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LinkSpec {
    /// f(u) = 1 − u
    OneMinusU,
    /// f(u) = u^b, b > 0
    Power { b: f64 },
    /// f(u) = c0 + c1·u, clipped to [0, 1] when used as a probability
    Affine { c0: f64, c1: f64 },
    /// Values on the uniform grid 0, 1/(n−1), …, 1, linearly interpolated.
    Tabulated { values: Vec<f64> },
}

impl LinkSpec {
    pub fn identity() -> Self {
        LinkSpec::Power { b: 1.0 }
    }

    pub fn constant(c: f64) -> Self {
        LinkSpec::Affine { c0: c, c1: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            LinkSpec::OneMinusU => Ok(()),
            LinkSpec::Power { b } if *b > 0.0 && b.is_finite() => Ok(()),
            LinkSpec::Power { b } => Err(Error::Parameter(format!("power link needs b > 0, got {b}"))),
            LinkSpec::Affine { c0, c1 } if c0.is_finite() && c1.is_finite() => Ok(()),
            LinkSpec::Affine { .. } => Err(Error::Parameter("affine link coefficients must be finite".into())),
            LinkSpec::Tabulated { values } => {
                if values.len() < 2 {
                    return Err(Error::Parameter("tabulated link needs at least two values".into()));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Parameter("tabulated link values must be finite".into()));
                }
                Ok(())
            }
        }
    }

    /// Raw link value; used as-is for a mean and floored for a variance.
    pub fn eval(&self, u: f64) -> f64 {
        match self {
            LinkSpec::OneMinusU => 1.0 - u,
            LinkSpec::Power { b } => u.powf(*b),
            LinkSpec::Affine { c0, c1 } => c0 + c1 * u,
            LinkSpec::Tabulated { values } => {
                let n = values.len() - 1;
                let pos = u.clamp(0.0, 1.0) * n as f64;
                let i = (pos.floor() as usize).min(n - 1);
                let frac = pos - i as f64;
                values[i] + frac * (values[i + 1] - values[i])
            }
        }
    }

    /// Link value as a probability in [0, 1].
    pub fn eval_unit(&self, u: f64) -> f64 {
        self.eval(u).clamp(0.0, 1.0)
    }

    /// True when f(u) = u, so (U, V) collapses onto the diagonal.
    pub(crate) fn is_identity(&self) -> bool {
        matches!(self, LinkSpec::Power { b } if *b == 1.0)
            || matches!(self, LinkSpec::Affine { c0, c1 } if *c0 == 0.0 && *c1 == 1.0)
    }

    pub(crate) fn is_one_minus(&self) -> bool {
        matches!(self, LinkSpec::OneMinusU)
            || matches!(self, LinkSpec::Affine { c0, c1 } if *c0 == 1.0 && *c1 == -1.0)
    }
}
