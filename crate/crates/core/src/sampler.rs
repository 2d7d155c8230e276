//! Exact sampling of X and of conditional-independence knockoffs X̃ | X.
//!
//! Both draws are two-stage: a latent θ from the prior (for X) or from the
//! posterior π(· | x) (for X̃), then p conditionally independent coordinates.
//! Each row of a matrix gets its own RNG stream keyed by its index, so
//! parallel execution cannot change the output.

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{mixed_posterior, suff_stats, CategoricalVector, MixedVector};
use crate::priors::{posterior, GraphPrior, GridPrior, Prior, Support};

/// A (master seed, stream) pair naming an independent random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeededRng {
    pub seed: u64,
    pub stream: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SeededRng {
    pub fn new(seed: u64) -> SeededRng {
        SeededRng { seed, stream: 0 }
    }

    /// Child stream for `index`; children of distinct indices are distinct streams.
    pub fn derive(&self, index: u64) -> SeededRng {
        SeededRng {
            seed: self.seed,
            stream: splitmix64(splitmix64(self.stream) ^ index),
        }
    }

    /// Fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// n × p matrix of category codes, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoricalMatrix {
    n: usize,
    p: usize,
    m: u8,
    data: Vec<u8>,
}

impl CategoricalMatrix {
    pub fn new(n: usize, p: usize, m: u8, data: Vec<u8>) -> Result<CategoricalMatrix> {
        if data.len() != n * p {
            return Err(Error::Validation(format!("{} codes for a {n} × {p} matrix", data.len())));
        }
        if m == 0 {
            return Err(Error::Validation("category bound m must be at least 1".into()));
        }
        if let Some(pos) = data.iter().position(|&c| c > m) {
            return Err(Error::Validation(format!(
                "code {} at row {}, column {} exceeds m = {m}",
                data[pos],
                pos / p,
                pos % p
            )));
        }
        Ok(CategoricalMatrix { n, p, m, data })
    }

    pub fn from_rows(rows: &[CategoricalVector], p: usize, m: u8) -> Result<CategoricalMatrix> {
        let mut data = Vec::with_capacity(rows.len() * p);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != p {
                return Err(Error::Validation(format!("row {i} has length {}, expected {p}", r.len())));
            }
            data.extend_from_slice(r.entries());
        }
        CategoricalMatrix::new(rows.len(), p, m, data)
    }

    pub fn nrows(&self) -> usize {
        self.n
    }

    pub fn ncols(&self) -> usize {
        self.p
    }

    pub fn m(&self) -> u8 {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.data[i * self.p + j]
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.data[i * self.p..(i + 1) * self.p]
    }

    pub fn row_vector(&self, i: usize) -> CategoricalVector {
        CategoricalVector::new(self.row(i).to_vec(), self.m).expect("validated on construction")
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    /// Column-major f64 copy, the layout the lasso expects.
    pub fn to_f64_columns(&self) -> Vec<Vec<f64>> {
        (0..self.p)
            .map(|j| (0..self.n).map(|i| self.get(i, j) as f64).collect())
            .collect()
    }
}

/// A draw of the latent parameter.
#[derive(Debug, Clone, PartialEq)]
enum Latent {
    Scalar(f64),
    Pair { split: usize, u: f64, v: f64 },
    Simplex(Vec<f64>),
}

/// Prepared latent sampler for one prior.
enum LatentSampler {
    Atoms { index: WeightedIndex<f64>, latents: Vec<Latent> },
    Beta { a: Gamma<f64>, b: Gamma<f64> },
    Dirichlet(Vec<Gamma<f64>>),
    Graph { beta: Box<LatentSampler>, graph: GraphPrior },
}

impl LatentSampler {
    fn new(prior: &Prior) -> Result<LatentSampler> {
        match prior {
            Prior::Grid(g) => Self::atoms(g),
            Prior::Beta { a, b } => Ok(LatentSampler::Beta {
                a: gamma(*a)?,
                b: gamma(*b)?,
            }),
            Prior::Dirichlet { alpha } => Ok(LatentSampler::Dirichlet(
                alpha.iter().map(|&a| gamma(a)).collect::<Result<_>>()?,
            )),
            Prior::Graph(g) => match g.base() {
                Prior::Beta { .. } => Ok(LatentSampler::Graph {
                    beta: Box::new(LatentSampler::new(g.base())?),
                    graph: g.clone(),
                }),
                _ => Self::atoms(&g.discretize()),
            },
            Prior::MixedGraph(_) => Err(Error::Dimension(
                "mixed graph priors generate mixed vectors, not categorical ones".into(),
            )),
        }
    }

    fn atoms(g: &GridPrior) -> Result<LatentSampler> {
        let latents = match g.support() {
            Support::Scalar(pts) => pts.iter().map(|&u| Latent::Scalar(u)).collect(),
            Support::Pair { split, points } => points
                .iter()
                .map(|&(u, v)| Latent::Pair { split: *split, u, v })
                .collect(),
            Support::Simplex { points, .. } => points.iter().cloned().map(Latent::Simplex).collect(),
        };
        let index = WeightedIndex::new(g.weights())
            .map_err(|e| Error::Parameter(format!("prior weights unusable for sampling: {e}")))?;
        Ok(LatentSampler::Atoms { index, latents })
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Latent {
        match self {
            LatentSampler::Atoms { index, latents } => latents[index.sample(rng)].clone(),
            LatentSampler::Beta { a, b } => loop {
                let (x, y) = (a.sample(rng), b.sample(rng));
                if x + y > 0.0 {
                    break Latent::Scalar(x / (x + y));
                }
            },
            LatentSampler::Dirichlet(gs) => loop {
                let draws: Vec<f64> = gs.iter().map(|g| g.sample(rng)).collect();
                let total: f64 = draws.iter().sum();
                if total > 0.0 {
                    break Latent::Simplex(draws[1..].iter().map(|d| d / total).collect());
                }
            },
            LatentSampler::Graph { beta, graph } => {
                let Latent::Scalar(u) = beta.draw(rng) else {
                    unreachable!("beta base yields a scalar")
                };
                Latent::Pair {
                    split: graph.split(),
                    u,
                    v: graph.link().eval_unit(u),
                }
            }
        }
    }
}

fn gamma(shape: f64) -> Result<Gamma<f64>> {
    Gamma::new(shape, 1.0).map_err(|e| Error::Parameter(format!("gamma shape {shape}: {e}")))
}

/// Fills `out` with conditionally independent codes given the latent.
fn emit<R: Rng + ?Sized>(latent: &Latent, out: &mut [u8], rng: &mut R) {
    match latent {
        Latent::Scalar(u) => {
            for c in out.iter_mut() {
                *c = bernoulli(*u, rng);
            }
        }
        Latent::Pair { split, u, v } => {
            for (i, c) in out.iter_mut().enumerate() {
                *c = bernoulli(if i < *split { *u } else { *v }, rng);
            }
        }
        Latent::Simplex(probs) => {
            for c in out.iter_mut() {
                let r: f64 = rng.random();
                let mut acc = 0.0;
                let mut code = 0u8;
                for (j, &q) in probs.iter().enumerate() {
                    acc += q;
                    if r < acc {
                        code = j as u8 + 1;
                        break;
                    }
                }
                // falls through to category 0 with probability 1 − Σ u_j
                *c = code;
            }
        }
    }
}

#[inline]
fn bernoulli<R: Rng + ?Sized>(u: f64, rng: &mut R) -> u8 {
    (rng.random::<f64>() < u) as u8
}

/// n i.i.d. rows from the exchangeable (or two-group) model.
pub fn sample_x(n: usize, p: usize, prior: &Prior, rng: SeededRng) -> Result<CategoricalMatrix> {
    if let Some(k) = prior.split() {
        if k >= p {
            return Err(Error::Parameter(format!("split {k} requires p > {k}, got p = {p}")));
        }
    }
    let sampler = LatentSampler::new(prior)?;
    let m = prior.category_bound() as u8;
    let mut data = vec![0u8; n * p];
    if p > 0 {
        data.par_chunks_mut(p).enumerate().for_each(|(i, row)| {
            let mut r = rng.derive(i as u64).rng();
            let latent = sampler.draw(&mut r);
            emit(&latent, row, &mut r);
        });
    }
    CategoricalMatrix::new(n, p, m, data)
}

/// One knockoff X̃ ~ L(X̃ | X = x): latent from π(· | x), then i.i.d. codes.
pub fn sample_knockoff(x: &CategoricalVector, prior: &Prior, rng: SeededRng) -> Result<CategoricalVector> {
    let mut out = vec![0u8; x.len()];
    knockoff_into(x.entries(), x.m(), prior, &mut out, &mut rng.rng())?;
    CategoricalVector::new(out, x.m())
}

fn knockoff_into<R: Rng + ?Sized>(x: &[u8], m: u8, prior: &Prior, out: &mut [u8], rng: &mut R) -> Result<()> {
    let x = CategoricalVector::new(x.to_vec(), m)?;
    let stats = suff_stats(&x, prior.split())?;
    let post = posterior(prior, &stats)?;
    let latent = LatentSampler::new(&post)?.draw(rng);
    emit(&latent, out, rng);
    Ok(())
}

/// Row j of the result is a knockoff of row j of `x`, drawn on stream `rng.derive(j)`.
pub fn knockoff_matrix(x: &CategoricalMatrix, prior: &Prior, rng: SeededRng) -> Result<CategoricalMatrix> {
    let p = x.ncols();
    let mut data = vec![0u8; x.nrows() * p];
    if p > 0 {
        data.par_chunks_mut(p)
            .enumerate()
            .try_for_each(|(i, row)| {
                let mut r = rng.derive(i as u64).rng();
                knockoff_into(x.row(i), x.m(), prior, row, &mut r)
                    .map_err(|e| match e {
                        Error::NullEvent(msg) => Error::NullEvent(format!("row {i}: {msg}")),
                        other => other,
                    })
            })?;
    }
    CategoricalMatrix::new(x.nrows(), p, x.m(), data)
}

fn draw_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let r: f64 = rng.random::<f64>() * weights.iter().sum::<f64>();
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if r < acc {
            return i;
        }
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(weights.len() - 1)
}

/// Knockoff of a mixed binary/Gaussian vector: u from the grid posterior by
/// inverse CDF, then k Bernoulli(u) codes and normal draws N(f1(u), f2(u)).
pub fn sample_mixed_knockoff(x: &MixedVector, prior: &Prior, rng: SeededRng) -> Result<MixedVector> {
    let post = mixed_posterior(x, prior)?;
    let (us, ws) = post.base_atoms();
    let mut r = rng.rng();
    let u = us[draw_index(&ws, &mut r)];
    let binary = (0..x.split()).map(|_| bernoulli(u, &mut r)).collect();
    let (mean, sd) = (post.mean(u), post.variance(u).sqrt());
    let continuous = (0..x.continuous().len())
        .map(|_| mean + sd * r.sample::<f64, _>(StandardNormal))
        .collect();
    MixedVector::new(binary, continuous)
}

/// n draws of a mixed vector with `p − k` continuous coordinates.
pub fn sample_mixed(n: usize, p: usize, prior: &Prior, rng: SeededRng) -> Result<Vec<MixedVector>> {
    let Prior::MixedGraph(g) = prior else {
        return Err(Error::Dimension("sample_mixed needs a mixed graph prior".into()));
    };
    let k = g.split();
    if k > p {
        return Err(Error::Parameter(format!("split {k} exceeds p = {p}")));
    }
    let (us, ws) = g.base_atoms();
    (0..n)
        .map(|i| {
            let mut r = rng.derive(i as u64).rng();
            let u = match g.base() {
                Prior::Beta { .. } => match LatentSampler::new(g.base())?.draw(&mut r) {
                    Latent::Scalar(u) => u,
                    _ => unreachable!(),
                },
                _ => us[draw_index(&ws, &mut r)],
            };
            let binary = (0..k).map(|_| bernoulli(u, &mut r)).collect();
            let (mean, sd) = (g.mean(u), g.variance(u).sqrt());
            let continuous = (k..p).map(|_| mean + sd * r.sample::<f64, _>(StandardNormal)).collect();
            MixedVector::new(binary, continuous)
        })
        .collect()
}
