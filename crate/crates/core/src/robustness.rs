//! Sensitivity of exchangeable laws and knockoff conditionals to the prior.
//!
//! Distances over F^n are computed exactly by count-class enumeration. The
//! bounds are only proved for F = {0, 1}; for m > 1 the enumeration still
//! runs but nothing is asserted about it.

use crate::enumerate::count_classes;
use crate::error::{Error, Result};
use crate::model::{log_marginal, suff_stats, CategoricalVector};
use crate::priors::{posterior, tv_distance_priors, Prior};
use rand::Rng;
use rand_distr::{Distribution, Gamma};

/// Default cap on the vector length accepted by the enumerations.
pub const DEFAULT_ENUMERATION_CAP: usize = 20;

/// ‖L_{π1}(T) − L_{π2}(T)‖ for T exchangeable of length `n` on {0, …, m}.
pub fn tv_exchangeable_laws(p1: &Prior, p2: &Prior, n: usize, m: usize) -> Result<f64> {
    tv_exchangeable_laws_capped(p1, p2, n, m, DEFAULT_ENUMERATION_CAP)
}

pub fn tv_exchangeable_laws_capped(p1: &Prior, p2: &Prior, n: usize, m: usize, cap: usize) -> Result<f64> {
    if n > cap {
        return Err(Error::Resource(format!("length {n} exceeds the enumeration cap {cap}")));
    }
    for p in [p1, p2] {
        if p.split().is_some() {
            return Err(Error::Unsupported("exchangeable law TV needs a one-group prior".into()));
        }
    }
    let mut total = 0.0;
    for class in count_classes(n, m) {
        let a = log_marginal(&class.stats, p1)?;
        let b = log_marginal(&class.stats, p2)?;
        total += ((class.ln_multiplicity + a).exp() - (class.ln_multiplicity + b).exp()).abs();
    }
    Ok((0.5 * total).clamp(0.0, 1.0))
}

/// ‖L_{π1}(X̃ | X = x) − L_{π2}(X̃ | X = x)‖, computed as the TV between the
/// exchangeable laws with priors π1(· | x) and π2(· | x).
pub fn tv_knockoff_conditionals(x: &CategoricalVector, p1: &Prior, p2: &Prior) -> Result<f64> {
    let stats = suff_stats(x, None)?;
    let post1 = posterior(p1, &stats)?;
    let post2 = posterior(p2, &stats)?;
    tv_exchangeable_laws(&post1, &post2, x.len(), x.m() as usize)
}

/// The two upper bounds on [`tv_knockoff_conditionals`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalBounds {
    /// (‖π1 − π2‖ + |P1(x) − P2(x)|) / max(P1(x), P2(x))
    pub bound_a: f64,
    /// 2‖π1 − π2‖ / max(P1(x), P2(x))
    pub bound_b: f64,
    pub prior_tv: f64,
    pub marginal_1: f64,
    pub marginal_2: f64,
}

pub fn conditional_tv_bounds(x: &CategoricalVector, p1: &Prior, p2: &Prior) -> Result<ConditionalBounds> {
    let stats = suff_stats(x, None)?;
    let m1 = log_marginal(&stats, p1)?.exp();
    let m2 = log_marginal(&stats, p2)?.exp();
    if m1 <= 0.0 || m2 <= 0.0 {
        return Err(Error::NullEvent("x has zero probability under one of the priors".into()));
    }
    let prior_tv = tv_distance_priors(p1, p2)?.value;
    let denom = m1.max(m2);
    Ok(ConditionalBounds {
        bound_a: (prior_tv + (m1 - m2).abs()) / denom,
        bound_b: 2.0 * prior_tv / denom,
        prior_tv,
        marginal_1: m1,
        marginal_2: m2,
    })
}

/// A random binary grid prior on {0, 1/g, …, 1} with Dirichlet(1, …, 1)
/// weights, used to generate prior pairs for numerical bound checks.
pub fn random_grid_prior<R: Rng + ?Sized>(g: usize, rng: &mut R) -> Result<Prior> {
    if g == 0 {
        return Err(Error::Parameter("grid resolution must be positive".into()));
    }
    let gamma = Gamma::new(1.0, 1.0).expect("valid shape");
    let raw: Vec<f64> = (0..=g).map(|_| gamma.sample(rng)).collect();
    let total: f64 = raw.iter().sum();
    let points = (0..=g).map(|i| i as f64 / g as f64).collect();
    Prior::scalar_grid(points, raw.into_iter().map(|w| w / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::priors::{binomial_grid_prior, uniform_grid_prior};

    #[test]
    fn identical_priors() {
        let p = binomial_grid_prior(4, 0.3).unwrap();
        assert!(tv_exchangeable_laws(&p, &p, 6, 1).unwrap().abs() < 1e-15);
        let x = CategoricalVector::binary(vec![1, 0, 1]).unwrap();
        assert!(tv_knockoff_conditionals(&x, &p, &p).unwrap().abs() < 1e-15);
        let b = conditional_tv_bounds(&x, &p, &p).unwrap();
        assert_eq!((b.bound_a, b.bound_b), (0.0, 0.0));
    }

    #[test]
    fn disjoint_point_masses() {
        let (d0, d1) = (Prior::point(0.0).unwrap(), Prior::point(1.0).unwrap());
        for n in [1, 3, 10] {
            assert!((tv_exchangeable_laws(&d0, &d1, n, 1).unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn point_masses_give_product_bernoulli_tv() {
        let (pu, pv) = (Prior::point(0.3).unwrap(), Prior::point(0.6).unwrap());
        let x = CategoricalVector::binary(vec![1, 0]).unwrap();
        let lhs = tv_knockoff_conditionals(&x, &pu, &pv).unwrap();
        // direct enumeration of Bernoulli(0.3)^2 vs Bernoulli(0.6)^2
        let pmf = |q: f64, ones: i32| q.powi(ones) * (1.0 - q).powi(2 - ones);
        let mult = [1.0, 2.0, 1.0];
        let expected: f64 = (0..=2).map(|k| mult[k as usize] * (pmf(0.3, k) - pmf(0.6, k)).abs()).sum::<f64>() / 2.0;
        assert!((lhs - expected).abs() < 1e-14);
    }

    #[test]
    fn cap_is_enforced() {
        let p = Prior::beta(1.0, 1.0).unwrap();
        assert!(matches!(tv_exchangeable_laws(&p, &p, 21, 1), Err(Error::Resource(_))));
        assert!(tv_exchangeable_laws_capped(&p, &p, 30, 1, 40).is_ok());
    }

    #[test]
    fn lemma_on_a_simple_pair() {
        let (a, b) = (Prior::beta(1.0, 1.0).unwrap(), Prior::beta(2.0, 2.0).unwrap());
        let v = tv_exchangeable_laws(&a, &b, 4, 1).unwrap();
        let prior = tv_distance_priors(&a, &b).unwrap().value;
        assert!(v <= prior + 1e-10 && v > 0.0);
        let u = uniform_grid_prior(4, true).unwrap();
        let x = CategoricalVector::binary(vec![1, 1, 0, 0]).unwrap();
        let bounds = conditional_tv_bounds(&x, &u, &binomial_grid_prior(4, 0.5).unwrap()).unwrap();
        assert!(bounds.bound_a <= bounds.bound_b + 1e-12);
    }
}
