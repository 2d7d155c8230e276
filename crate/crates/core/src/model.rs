//! Exact marginal, joint and conditional knockoff probabilities.
//!
//! Every probability depends on the observed vector only through its
//! category counts, so the entry points take [`SuffStats`]. All values are
//! computed as natural logarithms; the `*_prob` wrappers exponentiate.

use crate::error::{Error, Result};
use crate::priors::{MixedGraphPrior, Prior};
use crate::special::{ln_beta, ln_gamma, log_sum_exp, normal_ln_pdf, xlogy};

/// Counts split at index k: `first` over x_1..x_k, `second` over the rest.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Split {
    pub k: usize,
    pub first: Vec<u32>,
    pub second: Vec<u32>,
}

/// Category counts (n_0, …, n_m), optionally split into two groups.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SuffStats {
    counts: Vec<u32>,
    split: Option<Split>,
}

impl SuffStats {
    pub fn new(counts: Vec<u32>) -> SuffStats {
        assert!(counts.len() >= 2, "need at least two categories");
        SuffStats { counts, split: None }
    }

    pub fn with_split(k: usize, first: Vec<u32>, second: Vec<u32>) -> Result<SuffStats> {
        if first.len() != second.len() || first.len() < 2 {
            return Err(Error::Validation("split counts must share at least two categories".into()));
        }
        if first.iter().sum::<u32>() as usize != k {
            return Err(Error::Validation(format!("first-group counts must sum to k = {k}")));
        }
        let counts = first.iter().zip(&second).map(|(a, b)| a + b).collect();
        Ok(SuffStats {
            counts,
            split: Some(Split { k, first, second }),
        })
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn split(&self) -> Option<&Split> {
        self.split.as_ref()
    }

    /// Vector length p = Σ n_j.
    pub fn p(&self) -> usize {
        self.counts.iter().map(|&c| c as usize).sum()
    }

    /// Category bound m (categories are 0..=m).
    pub fn m(&self) -> usize {
        self.counts.len() - 1
    }

    /// Counts of the concatenation (x, x̃); used as exponents of the joint law.
    pub fn combine(&self, other: &SuffStats) -> Result<SuffStats> {
        if self.counts.len() != other.counts.len() {
            return Err(Error::Dimension("statistics with different category bounds".into()));
        }
        if self.p() != other.p() {
            return Err(Error::Dimension(format!(
                "x has length {}, x̃ has length {}",
                self.p(),
                other.p()
            )));
        }
        let counts = self.counts.iter().zip(&other.counts).map(|(a, b)| a + b).collect();
        let split = match (&self.split, &other.split) {
            (None, None) => None,
            (Some(a), Some(b)) if a.k == b.k => Some(Split {
                k: a.k + b.k,
                first: a.first.iter().zip(&b.first).map(|(x, y)| x + y).collect(),
                second: a.second.iter().zip(&b.second).map(|(x, y)| x + y).collect(),
            }),
            _ => return Err(Error::Dimension("x and x̃ statistics have different splits".into())),
        };
        Ok(SuffStats { counts, split })
    }
}

/// A length-p vector of category codes in {0, …, m}.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CategoricalVector {
    entries: Vec<u8>,
    m: u8,
}

impl CategoricalVector {
    pub fn new(entries: Vec<u8>, m: u8) -> Result<CategoricalVector> {
        if m == 0 {
            return Err(Error::Validation("category bound m must be at least 1".into()));
        }
        if let Some((i, &c)) = entries.iter().enumerate().find(|(_, &c)| c > m) {
            return Err(Error::Validation(format!("entry {i} has code {c} > m = {m}")));
        }
        Ok(CategoricalVector { entries, m })
    }

    pub fn binary(entries: Vec<u8>) -> Result<CategoricalVector> {
        CategoricalVector::new(entries, 1)
    }

    pub fn entries(&self) -> &[u8] {
        &self.entries
    }

    pub fn m(&self) -> u8 {
        self.m
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Binary prefix of length k followed by real-valued coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedVector {
    binary: Vec<u8>,
    continuous: Vec<f64>,
}

impl MixedVector {
    pub fn new(binary: Vec<u8>, continuous: Vec<f64>) -> Result<MixedVector> {
        if binary.iter().any(|&b| b > 1) {
            return Err(Error::Validation("binary block must hold 0/1 codes".into()));
        }
        if continuous.iter().any(|x| !x.is_finite()) {
            return Err(Error::Validation("continuous block must be finite".into()));
        }
        Ok(MixedVector { binary, continuous })
    }

    pub fn binary(&self) -> &[u8] {
        &self.binary
    }

    pub fn continuous(&self) -> &[f64] {
        &self.continuous
    }

    pub fn split(&self) -> usize {
        self.binary.len()
    }

    fn binary_counts(&self) -> (f64, f64) {
        let ones = self.binary.iter().filter(|&&b| b == 1).count();
        ((self.binary.len() - ones) as f64, ones as f64)
    }
}

fn counts_of(codes: &[u8], m: u8) -> Vec<u32> {
    let mut counts = vec![0u32; m as usize + 1];
    for &c in codes {
        counts[c as usize] += 1;
    }
    counts
}

/// Category counts of `x`, with group counts when a split index is given.
pub fn suff_stats(x: &CategoricalVector, split: Option<usize>) -> Result<SuffStats> {
    match split {
        None => Ok(SuffStats::new(counts_of(&x.entries, x.m))),
        Some(k) if k <= x.len() => SuffStats::with_split(
            k,
            counts_of(&x.entries[..k], x.m),
            counts_of(&x.entries[k..], x.m),
        ),
        Some(k) => Err(Error::Validation(format!("split {k} exceeds vector length {}", x.len()))),
    }
}

/// ln ∫ ∏ P(x_i | θ) π(dθ), with the statistics read as exponents.
fn log_integral(prior: &Prior, exps: &SuffStats) -> Result<f64> {
    let n = exps.counts();
    match prior {
        Prior::Beta { a, b } => {
            Ok(ln_beta(a + n[1] as f64, b + n[0] as f64) - ln_beta(*a, *b))
        }
        Prior::Dirichlet { alpha } => {
            let total: f64 = alpha.iter().sum();
            let mut acc = ln_gamma(total) - ln_gamma(exps.p() as f64 + total);
            for (a, &c) in alpha.iter().zip(n) {
                acc += ln_gamma(c as f64 + a) - ln_gamma(*a);
            }
            Ok(acc)
        }
        Prior::Grid(g) => g.log_mixture(exps),
        Prior::Graph(g) => match g.conjugate_params(exps) {
            Some((a, b, da, db)) => Ok(ln_beta(a + da, b + db) - ln_beta(a, b)),
            None => g.discretize().log_mixture(exps),
        },
        Prior::MixedGraph(_) => Err(Error::Dimension(
            "mixed graph priors take mixed vectors; use mixed_density".into(),
        )),
    }
}

/// ln P(X = x).
pub fn log_marginal(stats: &SuffStats, prior: &Prior) -> Result<f64> {
    prior.check_stats(stats)?;
    log_integral(prior, stats)
}

/// P(X = x).
pub fn marginal_prob(stats: &SuffStats, prior: &Prior) -> Result<f64> {
    log_marginal(stats, prior).map(f64::exp)
}

/// ln P(X = x, X̃ = x̃) under the conditional-independence knockoff law.
pub fn log_joint(stats: &SuffStats, stats_k: &SuffStats, prior: &Prior) -> Result<f64> {
    prior.check_stats(stats)?;
    prior.check_stats(stats_k)?;
    log_integral(prior, &stats.combine(stats_k)?)
}

/// P(X = x, X̃ = x̃).
pub fn joint_prob(stats: &SuffStats, stats_k: &SuffStats, prior: &Prior) -> Result<f64> {
    log_joint(stats, stats_k, prior).map(f64::exp)
}

/// ln P(X̃ = x̃ | X = x).
pub fn log_conditional_knockoff_pmf(stats_x: &SuffStats, stats_k: &SuffStats, prior: &Prior) -> Result<f64> {
    let lm = log_marginal(stats_x, prior)?;
    if lm == f64::NEG_INFINITY {
        return Err(Error::NullEvent("P(X = x) = 0 under the prior".into()));
    }
    Ok(log_joint(stats_x, stats_k, prior)? - lm)
}

/// P(X̃ = x̃ | X = x).
pub fn conditional_knockoff_pmf(stats_x: &SuffStats, stats_k: &SuffStats, prior: &Prior) -> Result<f64> {
    log_conditional_knockoff_pmf(stats_x, stats_k, prior).map(f64::exp)
}

fn mixed_prior<'a>(prior: &'a Prior, x: &MixedVector) -> Result<&'a MixedGraphPrior> {
    let Prior::MixedGraph(g) = prior else {
        return Err(Error::Dimension("mixed density needs a mixed graph prior".into()));
    };
    if g.split() != x.split() {
        return Err(Error::Dimension(format!(
            "prior split {} but binary block has length {}",
            g.split(),
            x.split()
        )));
    }
    Ok(g)
}

/// Per-atom ln(weight · likelihood) over the discretized base, with the
/// binary exponents shifted by `extra` (for the joint with a knockoff block).
fn mixed_log_terms(g: &MixedGraphPrior, x: &MixedVector, extra: (f64, f64)) -> (Vec<f64>, Vec<f64>) {
    let (s0, s1) = x.binary_counts();
    let (us, ws) = g.base_atoms();
    let terms = us
        .iter()
        .zip(&ws)
        .map(|(&u, &w)| {
            let (mean, var) = (g.mean(u), g.variance(u));
            let cont: f64 = x.continuous.iter().map(|&xj| normal_ln_pdf(xj, mean, var)).sum();
            w.ln() + xlogy(s1 + extra.1, u) + xlogy(s0 + extra.0, 1.0 - u) + cont
        })
        .collect();
    (us, terms)
}

/// ln h(x): density of a mixed vector w.r.t. counting × Lebesgue measure.
pub fn log_mixed_density(x: &MixedVector, prior: &Prior) -> Result<f64> {
    let g = mixed_prior(prior, x)?;
    let (_, terms) = mixed_log_terms(g, x, (0.0, 0.0));
    Ok(log_sum_exp(terms))
}

/// h(x).
pub fn mixed_density(x: &MixedVector, prior: &Prior) -> Result<f64> {
    log_mixed_density(x, prior).map(f64::exp)
}

/// ln of the joint density of X = x and a knockoff binary block x̃_{1..k}
/// (the knockoff's continuous block integrated out).
pub fn log_mixed_joint_binary(x: &MixedVector, knockoff_binary: &[u8], prior: &Prior) -> Result<f64> {
    let g = mixed_prior(prior, x)?;
    if knockoff_binary.len() != x.split() {
        return Err(Error::Dimension("knockoff binary block length differs from x".into()));
    }
    let ones = knockoff_binary.iter().filter(|&&b| b == 1).count() as f64;
    let zeros = knockoff_binary.len() as f64 - ones;
    let (_, terms) = mixed_log_terms(g, x, (zeros, ones));
    Ok(log_sum_exp(terms))
}

/// Posterior of the mixed prior's base given x, as weighted grid atoms.
pub fn mixed_posterior(x: &MixedVector, prior: &Prior) -> Result<MixedGraphPrior> {
    let g = mixed_prior(prior, x)?;
    let (us, terms) = mixed_log_terms(g, x, (0.0, 0.0));
    let norm = log_sum_exp(terms.iter().copied());
    if !norm.is_finite() {
        return Err(Error::NullEvent(
            "every grid weight of the mixed posterior underflows".into(),
        ));
    }
    let ws = terms.iter().map(|t| (t - norm).exp()).collect();
    Ok(g.with_base_atoms(us, ws))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::priors::{binomial_grid_prior, posterior, LinkSpec};

    #[test]
    fn suff_stats_examples() {
        let x = CategoricalVector::binary(vec![1, 0, 1]).unwrap();
        assert_eq!(suff_stats(&x, None).unwrap().counts(), &[1, 2]);
        let x = CategoricalVector::new(vec![0, 0, 0, 0], 2).unwrap();
        assert_eq!(suff_stats(&x, None).unwrap().counts(), &[4, 0, 0]);
        let x = CategoricalVector::binary(vec![1, 0, 1, 1]).unwrap();
        let s = suff_stats(&x, Some(2)).unwrap();
        let split = s.split().unwrap();
        assert_eq!((split.first.as_slice(), split.second.as_slice()), (&[1, 1][..], &[0, 2][..]));
    }

    #[test]
    fn invalid_codes_are_rejected() {
        assert!(matches!(CategoricalVector::new(vec![0, 3], 2), Err(Error::Validation(_))));
        assert!(MixedVector::new(vec![2], vec![]).is_err());
        let x = CategoricalVector::binary(vec![1, 0]).unwrap();
        assert!(suff_stats(&x, Some(3)).is_err());
    }

    #[test]
    fn beta_marginal_example() {
        let m = marginal_prob(&SuffStats::new(vec![1, 1]), &Prior::beta(1.0, 1.0).unwrap()).unwrap();
        assert!((m - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn dirichlet_single_category() {
        let d = Prior::dirichlet(vec![1.0; 3]).unwrap();
        for j in 0..3 {
            let mut c = vec![0; 3];
            c[j] = 1;
            let m = marginal_prob(&SuffStats::new(c), &d).unwrap();
            assert!((m - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn uniform_graph_closed_form() {
        let g = Prior::graph(Prior::beta(1.0, 1.0).unwrap(), LinkSpec::OneMinusU, 1, 2048).unwrap();
        let s = SuffStats::with_split(1, vec![0, 1], vec![1, 0]).unwrap();
        assert!((marginal_prob(&s, &g).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn joint_examples() {
        let pt = Prior::point(0.3).unwrap();
        let (x, xk) = (SuffStats::new(vec![2, 1]), SuffStats::new(vec![0, 3]));
        let j = joint_prob(&x, &xk, &pt).unwrap();
        assert!((j - 0.3f64.powi(4) * 0.7f64.powi(2)).abs() < 1e-15);

        let one = SuffStats::new(vec![0, 1]);
        let j = joint_prob(&one, &one, &Prior::beta(1.0, 1.0).unwrap()).unwrap();
        assert!((j - 1.0 / 3.0).abs() < 1e-15);
        let c = conditional_knockoff_pmf(&one, &one, &Prior::beta(1.0, 1.0).unwrap()).unwrap();
        assert!((c - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn conditional_under_point_mass_ignores_x() {
        let pt = Prior::point(0.3).unwrap();
        let xk = SuffStats::new(vec![1, 2]);
        let a = conditional_knockoff_pmf(&SuffStats::new(vec![3, 0]), &xk, &pt).unwrap();
        let b = conditional_knockoff_pmf(&SuffStats::new(vec![0, 3]), &xk, &pt).unwrap();
        assert!((a - b).abs() < 1e-15);
        assert!((a - 0.3 * 0.3 * 0.7).abs() < 1e-15);
    }

    #[test]
    fn conditional_matches_posterior_marginal() {
        let pr = binomial_grid_prior(6, 0.3).unwrap();
        let x = SuffStats::new(vec![4, 2]);
        let post = posterior(&pr, &x).unwrap();
        for n1 in 0..=6u32 {
            let xk = SuffStats::new(vec![6 - n1, n1]);
            let c = conditional_knockoff_pmf(&x, &xk, &pr).unwrap();
            let m = marginal_prob(&xk, &post).unwrap();
            assert!((c - m).abs() < 1e-12);
        }
    }

    #[test]
    fn conditioning_on_null_event() {
        let d0 = Prior::point(0.0).unwrap();
        let err = conditional_knockoff_pmf(&SuffStats::new(vec![0, 1]), &SuffStats::new(vec![1, 0]), &d0);
        assert!(matches!(err, Err(Error::NullEvent(_))));
    }

    #[test]
    fn dimension_mismatches() {
        let b = Prior::beta(1.0, 1.0).unwrap();
        assert!(matches!(marginal_prob(&SuffStats::new(vec![1, 1, 1]), &b), Err(Error::Dimension(_))));
        assert!(joint_prob(&SuffStats::new(vec![1, 1]), &SuffStats::new(vec![1, 2]), &b).is_err());
    }

    #[test]
    fn mixed_density_point_mass() {
        let u = 0.3;
        let base = Prior::point(u).unwrap();
        let pr = Prior::mixed_graph(base, LinkSpec::identity(), LinkSpec::constant(2.0), 2, 16).unwrap();
        let x = MixedVector::new(vec![1, 0], vec![0.5, -1.0]).unwrap();
        let expected = u * (1.0 - u) * normal_ln_pdf(0.5, u, 2.0).exp() * normal_ln_pdf(-1.0, u, 2.0).exp();
        assert!((mixed_density(&x, &pr).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn mixed_density_without_continuous_block() {
        let base = binomial_grid_prior(4, 0.4).unwrap();
        let pr = Prior::mixed_graph(base.clone(), LinkSpec::identity(), LinkSpec::constant(1.0), 3, 16).unwrap();
        let x = MixedVector::new(vec![1, 0, 1], vec![]).unwrap();
        let h = mixed_density(&x, &pr).unwrap();
        let m = marginal_prob(&SuffStats::new(vec![1, 2]), &base).unwrap();
        assert!((h - m).abs() < 1e-15);
    }
}
