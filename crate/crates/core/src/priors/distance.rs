use super::{GridPrior, Prior, Support};
use crate::error::{Error, Result};
use crate::quad::integrate_pieces;
use crate::special::{digamma, ln_beta};

/// Support points closer than this are treated as the same atom.
const MERGE_TOL: f64 = 1e-12;

/// Absolute tolerance for density total variation.
const QUAD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TvMethod {
    /// Finite sum over atoms (or a closed-form singular case).
    Exact,
    /// Adaptive quadrature of the density difference.
    Quadrature,
}

/// Total-variation distance between two priors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TvDistance {
    pub value: f64,
    pub method: TvMethod,
    /// Set when one prior is diffuse and the other discrete.
    pub mutually_singular: bool,
}

impl TvDistance {
    fn exact(value: f64) -> Self {
        TvDistance {
            value,
            method: TvMethod::Exact,
            mutually_singular: false,
        }
    }

    fn singular() -> Self {
        TvDistance {
            value: 1.0,
            method: TvMethod::Exact,
            mutually_singular: true,
        }
    }
}

/// sup_B |π1(B) − π2(B)|.
///
/// Discrete pairs are merged atom by atom; beta pairs (and two-parameter
/// Dirichlets) are integrated; a diffuse prior against a discrete one is
/// mutually singular, giving 1. Graph priors with the same link reduce to
/// their base measures.
pub fn tv_distance_priors(p1: &Prior, p2: &Prior) -> Result<TvDistance> {
    if p1 == p2 {
        return Ok(TvDistance::exact(0.0));
    }
    match (as_beta(p1), as_beta(p2)) {
        (Some((a1, b1)), Some((a2, b2))) => return Ok(beta_tv(a1, b1, a2, b2)),
        (Some(_), None) | (None, Some(_)) => {
            if matches!(p1, Prior::Grid(_)) || matches!(p2, Prior::Grid(_)) {
                return Ok(TvDistance::singular());
            }
        }
        (None, None) => {}
    }
    match (p1, p2) {
        (Prior::Grid(g1), Prior::Grid(g2)) => grid_tv(g1, g2).map(TvDistance::exact),
        (Prior::Dirichlet { alpha: a1 }, Prior::Dirichlet { alpha: a2 }) if a1.len() == a2.len() => {
            Err(Error::Unsupported(format!(
                "total variation between {}-parameter dirichlet priors",
                a1.len()
            )))
        }
        (Prior::Dirichlet { .. }, Prior::Grid(_)) | (Prior::Grid(_), Prior::Dirichlet { .. }) => {
            Ok(TvDistance::singular())
        }
        (Prior::Graph(g1), Prior::Graph(g2)) => {
            if g1.split != g2.split {
                return Err(Error::Dimension("graph priors with different splits".into()));
            }
            if g1.link == g2.link {
                return tv_distance_priors(&g1.base, &g2.base);
            }
            let diffuse = |b: &Prior| matches!(b, Prior::Beta { .. });
            if diffuse(&g1.base) || diffuse(&g2.base) {
                return Err(Error::Unsupported(
                    "total variation between diffuse graph priors with different links".into(),
                ));
            }
            grid_tv(&g1.discretize(), &g2.discretize()).map(TvDistance::exact)
        }
        (Prior::Graph(g), Prior::Grid(grid)) | (Prior::Grid(grid), Prior::Graph(g)) => {
            if matches!(*g.base, Prior::Beta { .. }) {
                return Ok(TvDistance::singular());
            }
            grid_tv(&g.discretize(), grid).map(TvDistance::exact)
        }
        _ => Err(Error::Unsupported("total variation between these prior families".into())),
    }
}

fn as_beta(p: &Prior) -> Option<(f64, f64)> {
    match p {
        Prior::Beta { a, b } => Some((*a, *b)),
        // U = U_1 ~ Beta(α_1, α_0)
        Prior::Dirichlet { alpha } if alpha.len() == 2 => Some((alpha[1], alpha[0])),
        _ => None,
    }
}

fn grid_tv(g1: &GridPrior, g2: &GridPrior) -> Result<f64> {
    let points = |g: &GridPrior| -> Result<Vec<Vec<f64>>> {
        Ok(match &g.support {
            Support::Scalar(p) => p.iter().map(|&u| vec![u]).collect(),
            Support::Pair { points, .. } => points.iter().map(|&(u, v)| vec![u, v]).collect(),
            Support::Simplex { points, .. } => points.clone(),
        })
    };
    let kind = |g: &GridPrior| match &g.support {
        Support::Scalar(_) => (0, 1),
        Support::Pair { split, .. } => (1, *split),
        Support::Simplex { m, .. } => (2, *m),
    };
    let (k1, k2) = (kind(g1), kind(g2));
    // a one-dimensional simplex is the scalar case
    let norm = |k: (i32, usize)| if k == (2, 1) { (0, 1) } else { k };
    if norm(k1) != norm(k2) {
        return Err(Error::Dimension("discrete priors on different latent spaces".into()));
    }
    let mut atoms: Vec<(Vec<f64>, f64)> = points(g1)?.into_iter().zip(g1.weights.iter().copied()).collect();
    atoms.extend(points(g2)?.into_iter().zip(g2.weights.iter().map(|w| -w)));
    atoms.sort_by(|x, y| {
        x.0.iter()
            .zip(&y.0)
            .map(|(a, b)| a.total_cmp(b))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    // merge runs of coincident points
    let mut total = 0.0;
    let mut i = 0;
    while i < atoms.len() {
        let mut acc = atoms[i].1;
        let mut j = i + 1;
        while j < atoms.len() && same_point(&atoms[i].0, &atoms[j].0) {
            acc += atoms[j].1;
            j += 1;
        }
        total += acc.abs();
        i = j;
    }
    Ok((0.5 * total).min(1.0))
}

fn same_point(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= MERGE_TOL)
}

/// Beta/beta TV: the density difference changes sign at most twice, so the
/// integral is split at the crossings and each sign-constant piece integrated.
fn beta_tv(a1: f64, b1: f64, a2: f64, b2: f64) -> TvDistance {
    if a1 == a2 && b1 == b2 {
        return TvDistance::exact(0.0);
    }
    let c1 = -ln_beta(a1, b1);
    let c2 = -ln_beta(a2, b2);
    let log_ratio = |u: f64| {
        (c1 - c2) + (a1 - a2) * u.ln() + (b1 - b2) * (1.0 - u).ln()
    };
    let density = |c: f64, a: f64, b: f64, u: f64| {
        if u <= 0.0 || u >= 1.0 {
            return 0.0;
        }
        (c + (a - 1.0) * u.ln() + (b - 1.0) * (1.0 - u).ln()).exp()
    };
    let diff = |u: f64| density(c1, a1, b1, u) - density(c2, a2, b2, u);

    let (da, db) = (a1 - a2, b1 - b2);
    let mut monotone_breaks = vec![0.0, 1.0];
    if da != 0.0 && db != 0.0 && da.signum() == db.signum() {
        monotone_breaks.insert(1, da / (da + db));
    }
    let mut breaks = vec![0.0];
    for w in monotone_breaks.windows(2) {
        if let Some(root) = bisect_sign_change(&log_ratio, w[0], w[1]) {
            breaks.push(root);
        }
        breaks.push(w[1]);
    }
    breaks.dedup();

    let mut total = 0.0;
    for w in breaks.windows(2) {
        total += integrate_pieces(diff, w, QUAD_TOL / breaks.len() as f64).value.abs();
    }
    TvDistance {
        value: (0.5 * total).clamp(0.0, 1.0),
        method: TvMethod::Quadrature,
        mutually_singular: false,
    }
}

/// Root of a monotone function on (lo, hi), if it changes sign there.
fn bisect_sign_change<F: Fn(f64) -> f64>(g: &F, lo: f64, hi: f64) -> Option<f64> {
    let width = hi - lo;
    let (mut l, mut r) = (lo + width * 1e-15, hi - width * 1e-15);
    let (gl, gr) = (g(l), g(r));
    if gl.is_nan() || gr.is_nan() || gl.signum() == gr.signum() || gl == 0.0 || gr == 0.0 {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (l + r);
        if mid <= l || mid >= r {
            break;
        }
        if g(mid).signum() == gl.signum() {
            l = mid;
        } else {
            r = mid;
        }
    }
    Some(0.5 * (l + r))
}

/// Upper bound on ‖Beta(a1, b1) − Beta(a2, b2)‖ for parameters in [c, d]:
/// (ψ(2d) − ψ(c)) · (|a1 − a2| + |b1 − b2|).
pub fn beta_tv_bound(a1: f64, b1: f64, a2: f64, b2: f64, c: f64, d: f64) -> Result<f64> {
    if !(c > 0.0 && c < d) {
        return Err(Error::Domain(format!("need 0 < c < d, got c = {c}, d = {d}")));
    }
    for x in [a1, b1, a2, b2] {
        if !(c..=d).contains(&x) {
            return Err(Error::Domain(format!("parameter {x} outside [{c}, {d}]")));
        }
    }
    Ok((digamma(2.0 * d) - digamma(c)) * ((a1 - a2).abs() + (b1 - b2).abs()))
}
