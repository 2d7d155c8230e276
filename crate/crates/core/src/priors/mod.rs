//! De Finetti priors: construction, moments, posterior updates and distances.
//!
//! A prior is the mixing law of the latent success probability (or simplex
//! vector, or group pair) behind an exchangeable or partially exchangeable
//! categorical vector. Diffuse graph bases are discretized on a midpoint grid
//! so that every non-conjugate computation reduces to a finite sum.

mod distance;
mod json;
mod link;

pub use distance::{beta_tv_bound, tv_distance_priors, TvDistance, TvMethod};
pub use json::PriorSpec;
pub use link::LinkSpec;

use crate::error::{Error, Result};
use crate::model::SuffStats;
use crate::special::{ln_choose, log_sum_exp, xlogy};

/// Tolerance on the total mass of a discrete prior.
pub const WEIGHT_TOL: f64 = 1e-12;

/// Default number of midpoints used to discretize a diffuse graph base.
pub const DEFAULT_GRID_SIZE: usize = 2048;

/// Lower bound applied to variance links of a mixed graph prior.
pub const VARIANCE_FLOOR: f64 = 1e-8;

/// Support points of a discrete prior.
#[derive(Debug, Clone, PartialEq)]
pub enum Support {
    /// Success probability u ∈ [0, 1] (binary exchangeable).
    Scalar(Vec<f64>),
    /// Pair (u, v) ∈ [0, 1]² for a two-group model split after `split` coordinates.
    Pair { split: usize, points: Vec<(f64, f64)> },
    /// Vector (u_1, …, u_m) in the simplex; u_0 = 1 − Σ u_j.
    Simplex { m: usize, points: Vec<Vec<f64>> },
}

impl Support {
    pub fn len(&self) -> usize {
        match self {
            Support::Scalar(v) => v.len(),
            Support::Pair { points, .. } => points.len(),
            Support::Simplex { points, .. } => points.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Finitely supported prior.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPrior {
    support: Support,
    weights: Vec<f64>,
}

impl GridPrior {
    pub fn new(support: Support, weights: Vec<f64>) -> Result<Self> {
        if support.len() != weights.len() {
            return Err(Error::Parameter(format!(
                "{} support points but {} weights",
                support.len(),
                weights.len()
            )));
        }
        if support.is_empty() {
            return Err(Error::Parameter("discrete prior needs at least one atom".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Parameter("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Parameter(format!("weights sum to {total}, expected 1")));
        }
        let in_unit = |x: f64| (0.0..=1.0).contains(&x);
        match &support {
            Support::Scalar(pts) => {
                if !pts.iter().all(|&u| in_unit(u)) {
                    return Err(Error::Parameter("scalar support points must lie in [0, 1]".into()));
                }
            }
            Support::Pair { split, points } => {
                if *split == 0 {
                    return Err(Error::Parameter("split index must be at least 1".into()));
                }
                if !points.iter().all(|&(u, v)| in_unit(u) && in_unit(v)) {
                    return Err(Error::Parameter("pair support points must lie in [0, 1]²".into()));
                }
            }
            Support::Simplex { m, points } => {
                if *m == 0 {
                    return Err(Error::Parameter("simplex dimension must be at least 1".into()));
                }
                for pt in points {
                    let s: f64 = pt.iter().sum();
                    if pt.len() != *m || pt.iter().any(|&x| x < 0.0) || s > 1.0 + 1e-12 {
                        return Err(Error::Parameter(format!("{pt:?} is not a point of the {m}-simplex")));
                    }
                }
            }
        }
        let weights = if total == 1.0 {
            weights
        } else {
            weights.iter().map(|w| w / total).collect()
        };
        Ok(GridPrior { support, weights })
    }

    pub fn support(&self) -> &Support {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Log-likelihood ln ∏ P(x_i | latent) of each atom for the given counts.
    ///
    /// Counts are treated as exponents, so combined (x, x̃) statistics are
    /// accepted as well.
    pub(crate) fn log_likelihoods(&self, stats: &SuffStats) -> Result<Vec<f64>> {
        let counts = stats.counts();
        match &self.support {
            Support::Scalar(pts) => {
                require_binary(stats)?;
                let (n0, n1) = (counts[0] as f64, counts[1] as f64);
                Ok(pts.iter().map(|&u| xlogy(n1, u) + xlogy(n0, 1.0 - u)).collect())
            }
            Support::Pair { points, .. } => {
                require_binary(stats)?;
                let split = stats.split().ok_or_else(|| {
                    Error::Dimension("two-group prior needs split statistics".into())
                })?;
                let (s0, s1) = (split.first[0] as f64, split.first[1] as f64);
                let (t0, t1) = (split.second[0] as f64, split.second[1] as f64);
                Ok(points
                    .iter()
                    .map(|&(u, v)| xlogy(s1, u) + xlogy(s0, 1.0 - u) + xlogy(t1, v) + xlogy(t0, 1.0 - v))
                    .collect())
            }
            Support::Simplex { m, points } => {
                if stats.m() != *m {
                    return Err(Error::Dimension(format!(
                        "simplex prior has m = {m}, statistics have m = {}",
                        stats.m()
                    )));
                }
                Ok(points
                    .iter()
                    .map(|pt| {
                        let rest = (1.0 - pt.iter().sum::<f64>()).max(0.0);
                        pt.iter()
                            .zip(&counts[1..])
                            .fold(xlogy(counts[0] as f64, rest), |acc, (&u, &n)| acc + xlogy(n as f64, u))
                    })
                    .collect())
            }
        }
    }

    /// ln Σ_atoms w · likelihood.
    pub(crate) fn log_mixture(&self, stats: &SuffStats) -> Result<f64> {
        let ll = self.log_likelihoods(stats)?;
        Ok(log_sum_exp(
            self.weights.iter().zip(ll).map(|(w, l)| w.ln() + l),
        ))
    }

    fn reweight(&self, stats: &SuffStats) -> Result<GridPrior> {
        if stats.p() == 0 {
            return Ok(self.clone());
        }
        let ll = self.log_likelihoods(stats)?;
        let logw: Vec<f64> = self.weights.iter().zip(&ll).map(|(w, l)| w.ln() + l).collect();
        let norm = log_sum_exp(logw.iter().copied());
        if norm == f64::NEG_INFINITY {
            return Err(Error::NullEvent("observed statistics have zero prior probability".into()));
        }
        let weights = logw.iter().map(|lw| (lw - norm).exp()).collect();
        Ok(GridPrior {
            support: self.support.clone(),
            weights,
        })
    }
}

fn require_binary(stats: &SuffStats) -> Result<()> {
    if stats.m() != 1 {
        return Err(Error::Dimension(format!(
            "binary prior applied to statistics with m = {}",
            stats.m()
        )));
    }
    Ok(())
}

/// Two-group prior with U drawn from a scalar base measure and V = f(U).
#[derive(Debug, Clone, PartialEq)]
pub struct GraphPrior {
    base: Box<Prior>,
    link: LinkSpec,
    split: usize,
    grid_size: usize,
}

impl GraphPrior {
    pub fn base(&self) -> &Prior {
        &self.base
    }

    pub fn link(&self) -> &LinkSpec {
        &self.link
    }

    pub fn split(&self) -> usize {
        self.split
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    /// Beta parameters (a', b') such that the marginal likelihood is a beta
    /// integral, when the link makes the model conjugate.
    pub(crate) fn conjugate_params(&self, stats: &SuffStats) -> Option<(f64, f64, f64, f64)> {
        let Prior::Beta { a, b } = *self.base else {
            return None;
        };
        let split = stats.split()?;
        let (s0, s1) = (split.first[0] as f64, split.first[1] as f64);
        let (t0, t1) = (split.second[0] as f64, split.second[1] as f64);
        if self.link.is_one_minus() {
            Some((a, b, s1 + t0, s0 + t1))
        } else if self.link.is_identity() {
            Some((a, b, s1 + t1, s0 + t0))
        } else {
            None
        }
    }

    /// The prior as atoms (u_g, f(u_g)) on the discretized base.
    pub fn discretize(&self) -> GridPrior {
        let (us, ws) = scalar_atoms(&self.base, self.grid_size);
        let points = us.iter().map(|&u| (u, self.link.eval_unit(u))).collect();
        GridPrior {
            support: Support::Pair {
                split: self.split,
                points,
            },
            weights: ws,
        }
    }

    fn posterior(&self, stats: &SuffStats) -> Result<GraphPrior> {
        if stats.p() == 0 {
            return Ok(self.clone());
        }
        if let Some((a, b, da, db)) = self.conjugate_params(stats) {
            return Ok(GraphPrior {
                base: Box::new(Prior::Beta { a: a + da, b: b + db }),
                ..self.clone()
            });
        }
        let grid = self.discretize().reweight(stats)?;
        let Support::Pair { points, .. } = grid.support else {
            unreachable!("graph discretization yields pair support")
        };
        let base = GridPrior {
            support: Support::Scalar(points.iter().map(|&(u, _)| u).collect()),
            weights: grid.weights,
        };
        Ok(GraphPrior {
            base: Box::new(Prior::Grid(base)),
            ..self.clone()
        })
    }
}

/// Mixed binary / Gaussian prior: U from a scalar base, the first `split`
/// coordinates Bernoulli(U), the rest N(mean_link(U), variance_link(U)).
#[derive(Debug, Clone, PartialEq)]
pub struct MixedGraphPrior {
    base: Box<Prior>,
    mean_link: LinkSpec,
    variance_link: LinkSpec,
    split: usize,
    grid_size: usize,
}

impl MixedGraphPrior {
    pub fn base(&self) -> &Prior {
        &self.base
    }

    pub fn split(&self) -> usize {
        self.split
    }

    pub fn mean(&self, u: f64) -> f64 {
        self.mean_link.eval(u)
    }

    pub fn variance(&self, u: f64) -> f64 {
        self.variance_link.eval(u).max(VARIANCE_FLOOR)
    }

    /// Grid points and weights of the (discretized) base measure.
    pub fn base_atoms(&self) -> (Vec<f64>, Vec<f64>) {
        scalar_atoms(&self.base, self.grid_size)
    }

    /// Same prior with the base replaced by weighted atoms at `points`.
    pub(crate) fn with_base_atoms(&self, points: Vec<f64>, weights: Vec<f64>) -> MixedGraphPrior {
        MixedGraphPrior {
            base: Box::new(Prior::Grid(GridPrior {
                support: Support::Scalar(points),
                weights,
            })),
            ..self.clone()
        }
    }
}

/// Atoms of a scalar base measure; Beta bases become a midpoint grid.
pub(crate) fn scalar_atoms(base: &Prior, grid_size: usize) -> (Vec<f64>, Vec<f64>) {
    match base {
        Prior::Grid(g) => match &g.support {
            Support::Scalar(pts) => (pts.clone(), g.weights.clone()),
            _ => unreachable!("graph bases are validated as scalar"),
        },
        Prior::Beta { a, b } => {
            let h = 1.0 / grid_size as f64;
            let us: Vec<f64> = (0..grid_size).map(|g| (g as f64 + 0.5) * h).collect();
            let logd: Vec<f64> = us
                .iter()
                .map(|&u| (a - 1.0) * u.ln() + (b - 1.0) * (1.0 - u).ln())
                .collect();
            let norm = log_sum_exp(logd.iter().copied());
            let ws = logd.iter().map(|l| (l - norm).exp()).collect();
            (us, ws)
        }
        _ => unreachable!("graph bases are validated as scalar"),
    }
}

/// A de Finetti prior.
#[derive(Debug, Clone, PartialEq)]
pub enum Prior {
    Grid(GridPrior),
    Beta { a: f64, b: f64 },
    Dirichlet { alpha: Vec<f64> },
    Graph(GraphPrior),
    MixedGraph(MixedGraphPrior),
}

/// Mean and variance of one latent coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
}

impl Prior {
    pub fn beta(a: f64, b: f64) -> Result<Prior> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::Parameter(format!("beta parameters must be positive, got ({a}, {b})")));
        }
        Ok(Prior::Beta { a, b })
    }

    pub fn dirichlet(alpha: Vec<f64>) -> Result<Prior> {
        if alpha.len() < 2 {
            return Err(Error::Parameter("dirichlet needs at least two parameters".into()));
        }
        if alpha.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
            return Err(Error::Parameter("dirichlet parameters must be positive".into()));
        }
        Ok(Prior::Dirichlet { alpha })
    }

    /// Point mass at u.
    pub fn point(u: f64) -> Result<Prior> {
        Prior::scalar_grid(vec![u], vec![1.0])
    }

    pub fn scalar_grid(points: Vec<f64>, weights: Vec<f64>) -> Result<Prior> {
        Ok(Prior::Grid(GridPrior::new(Support::Scalar(points), weights)?))
    }

    pub fn pair_grid(split: usize, points: Vec<(f64, f64)>, weights: Vec<f64>) -> Result<Prior> {
        Ok(Prior::Grid(GridPrior::new(Support::Pair { split, points }, weights)?))
    }

    pub fn simplex_grid(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Prior> {
        let m = points.first().map_or(0, Vec::len);
        Ok(Prior::Grid(GridPrior::new(Support::Simplex { m, points }, weights)?))
    }

    pub fn graph(base: Prior, link: LinkSpec, split: usize, grid_size: usize) -> Result<Prior> {
        validate_base(&base)?;
        link.validate()?;
        if split == 0 {
            return Err(Error::Parameter("split index must be at least 1".into()));
        }
        if grid_size == 0 {
            return Err(Error::Parameter("grid size must be positive".into()));
        }
        Ok(Prior::Graph(GraphPrior {
            base: Box::new(base),
            link,
            split,
            grid_size,
        }))
    }

    pub fn mixed_graph(
        base: Prior,
        mean_link: LinkSpec,
        variance_link: LinkSpec,
        split: usize,
        grid_size: usize,
    ) -> Result<Prior> {
        validate_base(&base)?;
        mean_link.validate()?;
        variance_link.validate()?;
        if grid_size == 0 {
            return Err(Error::Parameter("grid size must be positive".into()));
        }
        Ok(Prior::MixedGraph(MixedGraphPrior {
            base: Box::new(base),
            mean_link,
            variance_link,
            split,
            grid_size,
        }))
    }

    /// Number of categories minus one (m) the prior describes, if fixed.
    pub fn category_bound(&self) -> usize {
        match self {
            Prior::Grid(g) => match &g.support {
                Support::Simplex { m, .. } => *m,
                _ => 1,
            },
            Prior::Dirichlet { alpha } => alpha.len() - 1,
            _ => 1,
        }
    }

    /// Split index of two-group priors.
    pub fn split(&self) -> Option<usize> {
        match self {
            Prior::Grid(GridPrior {
                support: Support::Pair { split, .. },
                ..
            }) => Some(*split),
            Prior::Graph(g) => Some(g.split),
            Prior::MixedGraph(g) => Some(g.split),
            _ => None,
        }
    }

    /// Checks that statistics of an observed vector fit this prior.
    pub fn check_stats(&self, stats: &SuffStats) -> Result<()> {
        if stats.m() != self.category_bound() {
            return Err(Error::Dimension(format!(
                "prior expects m = {}, statistics have m = {}",
                self.category_bound(),
                stats.m()
            )));
        }
        if let Some(k) = self.split() {
            match stats.split() {
                Some(s) if s.k == k => {}
                Some(s) => {
                    return Err(Error::Dimension(format!("prior split {k}, statistics split {}", s.k)))
                }
                None => return Err(Error::Dimension("two-group prior needs split statistics".into())),
            }
        }
        if matches!(self, Prior::MixedGraph(_)) {
            return Err(Error::Dimension(
                "mixed graph priors take mixed vectors, not categorical statistics".into(),
            ));
        }
        Ok(())
    }
}

fn validate_base(base: &Prior) -> Result<()> {
    match base {
        Prior::Beta { .. } => Ok(()),
        Prior::Grid(GridPrior {
            support: Support::Scalar(_),
            ..
        }) => Ok(()),
        _ => Err(Error::Parameter("graph base must be a beta or scalar grid prior".into())),
    }
}

/// Binomial prior on I = {0, 1/p, …, 1}: π{u} = C(p, pu) α^{pu} (1−α)^{p(1−u)}.
pub fn binomial_grid_prior(p: usize, alpha: f64) -> Result<Prior> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Parameter(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if p == 0 {
        return Err(Error::Parameter("p must be positive".into()));
    }
    let points: Vec<f64> = (0..=p).map(|r| r as f64 / p as f64).collect();
    let weights = binomial_pmf(p, alpha);
    Prior::scalar_grid(points, weights)
}

/// Uniform prior on I, or on J = {1/p, …, (p−1)/p} when `drop_endpoints`.
pub fn uniform_grid_prior(p: usize, drop_endpoints: bool) -> Result<Prior> {
    if p == 0 || (drop_endpoints && p < 2) {
        return Err(Error::Parameter(format!(
            "uniform grid needs p ≥ {}, got {p}",
            if drop_endpoints { 2 } else { 1 }
        )));
    }
    let range = if drop_endpoints { 1..p } else { 0..p + 1 };
    let points: Vec<f64> = range.map(|r| r as f64 / p as f64).collect();
    let w = 1.0 / points.len() as f64;
    let weights = vec![w; points.len()];
    Prior::scalar_grid(points, weights)
}

/// Two-group prior with kU ~ Bin(k, α) and (p−k)V | U ~ Bin(p−k, f(U)).
pub fn two_group_binomial_prior(k: usize, p: usize, alpha: f64, link: &LinkSpec) -> Result<Prior> {
    if k == 0 || k >= p {
        return Err(Error::Parameter(format!("split must satisfy 1 ≤ k < p, got k = {k}, p = {p}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Parameter(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    link.validate()?;
    let rest = p - k;
    let first = binomial_pmf(k, alpha);
    let mut points = Vec::with_capacity((k + 1) * (rest + 1));
    let mut weights = Vec::with_capacity(points.capacity());
    for (r, wu) in first.iter().enumerate() {
        let u = r as f64 / k as f64;
        let second = binomial_pmf(rest, link.eval_unit(u));
        for (s, wv) in second.iter().enumerate() {
            points.push((u, s as f64 / rest as f64));
            weights.push(wu * wv);
        }
    }
    Prior::pair_grid(k, points, weights)
}

/// Uniform prior on the two-group lattice {(r/k, s/(p−k))}.
pub fn two_group_uniform_prior(k: usize, p: usize) -> Result<Prior> {
    if k == 0 || k >= p {
        return Err(Error::Parameter(format!("split must satisfy 1 ≤ k < p, got k = {k}, p = {p}")));
    }
    let rest = p - k;
    let points: Vec<(f64, f64)> = (0..=k)
        .flat_map(|r| (0..=rest).map(move |s| (r as f64 / k as f64, s as f64 / rest as f64)))
        .collect();
    let w = 1.0 / points.len() as f64;
    let weights = vec![w; points.len()];
    Prior::pair_grid(k, points, weights)
}

/// Bin(n, q) pmf on 0..=n, with 0⁰ = 1 at the degenerate ends.
fn binomial_pmf(n: usize, q: f64) -> Vec<f64> {
    (0..=n)
        .map(|r| {
            (ln_choose(n as u64, r as u64) + xlogy(r as f64, q) + xlogy((n - r) as f64, 1.0 - q)).exp()
        })
        .collect()
}

/// Mean and variance of each latent coordinate.
///
/// Scalar priors give one coordinate, two-group priors give (u, v), simplex
/// and Dirichlet priors give (u_1, …, u_m), and mixed graph priors give u
/// followed by the mean and variance links.
pub fn prior_moments(prior: &Prior) -> Vec<Moments> {
    match prior {
        Prior::Beta { a, b } => {
            let s = a + b;
            vec![Moments {
                mean: a / s,
                variance: a * b / (s * s * (s + 1.0)),
            }]
        }
        Prior::Dirichlet { alpha } => {
            let s: f64 = alpha.iter().sum();
            alpha[1..]
                .iter()
                .map(|a| Moments {
                    mean: a / s,
                    variance: a * (s - a) / (s * s * (s + 1.0)),
                })
                .collect()
        }
        Prior::Grid(g) => grid_moments(g),
        Prior::Graph(g) => {
            let mut out = grid_moments(&g.discretize());
            if let Prior::Beta { .. } = *g.base {
                let exact = prior_moments(&g.base)[0];
                out[0] = exact;
                if g.link.is_one_minus() {
                    out[1] = Moments {
                        mean: 1.0 - exact.mean,
                        variance: exact.variance,
                    };
                } else if g.link.is_identity() {
                    out[1] = exact;
                }
            }
            out
        }
        Prior::MixedGraph(g) => {
            let (us, ws) = g.base_atoms();
            let coords: [&dyn Fn(f64) -> f64; 3] = [&|u| u, &|u| g.mean(u), &|u| g.variance(u)];
            coords
                .iter()
                .map(|f| weighted_moments(us.iter().map(|&u| f(u)), &ws))
                .collect()
        }
    }
}

fn grid_moments(g: &GridPrior) -> Vec<Moments> {
    let w = &g.weights;
    match &g.support {
        Support::Scalar(pts) => vec![weighted_moments(pts.iter().copied(), w)],
        Support::Pair { points, .. } => vec![
            weighted_moments(points.iter().map(|p| p.0), w),
            weighted_moments(points.iter().map(|p| p.1), w),
        ],
        Support::Simplex { m, points } => (0..*m)
            .map(|j| weighted_moments(points.iter().map(|p| p[j]), w))
            .collect(),
    }
}

fn weighted_moments<I: Iterator<Item = f64> + Clone>(xs: I, w: &[f64]) -> Moments {
    let mean: f64 = xs.clone().zip(w).map(|(x, w)| w * x).sum();
    let variance = xs.zip(w).map(|(x, w)| w * (x - mean) * (x - mean)).sum();
    Moments { mean, variance }
}

/// Posterior π(· | x) given the sufficient statistics of the observed vector.
///
/// Empty statistics return the prior unchanged.
pub fn posterior(prior: &Prior, stats: &SuffStats) -> Result<Prior> {
    prior.check_stats(stats)?;
    let counts = stats.counts();
    match prior {
        Prior::Beta { a, b } => Ok(Prior::Beta {
            a: a + counts[1] as f64,
            b: b + counts[0] as f64,
        }),
        Prior::Dirichlet { alpha } => Ok(Prior::Dirichlet {
            alpha: alpha.iter().zip(counts).map(|(a, &n)| a + n as f64).collect(),
        }),
        Prior::Grid(g) => Ok(Prior::Grid(g.reweight(stats)?)),
        Prior::Graph(g) => Ok(Prior::Graph(g.posterior(stats)?)),
        Prior::MixedGraph(_) => unreachable!("rejected by check_stats"),
    }
}
