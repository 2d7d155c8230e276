//! Simulation driver for FDR / power experiments and the real-data arm.
//!
//! Every random quantity comes from a stream keyed by
//! (seed, amplitude index, purpose, replicate index), so a report is a pure
//! function of its config and does not depend on execution order.

pub mod io;

use std::path::Path;

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{gaussian_knockoffs, GaussianKnockoffModel};
use crate::priors::{Prior, PriorSpec};
use crate::sampler::{knockoff_matrix, sample_x, CategoricalMatrix, SeededRng};
use crate::selection::{coef_diff_stats, fdr_power, knockoff_threshold, LambdaRule, LassoOptions, SelectionResult};

pub use io::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnockoffMethod {
    Cik,
    Gaussian,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub p: usize,
    pub n: usize,
    /// Knockoff replicates per amplitude cell.
    pub m: usize,
    pub support_size: usize,
    pub amplitudes: Vec<f64>,
    pub prior: PriorSpec,
    pub q: f64,
    pub knockoff_method: KnockoffMethod,
    /// Largest category code.
    pub m_cat: u8,
    pub seed: u64,
    #[serde(default = "default_true")]
    pub plus: bool,
    /// Redraw support, X and y for every replicate instead of once per cell.
    #[serde(default)]
    pub redraw_per_replicate: bool,
    #[serde(default)]
    pub lambda_rule: LambdaRule,
}

impl ExperimentConfig {
    /// p = 30, n = 300, m = 200, |T| = 12: minutes on a laptop.
    pub fn desk_scale() -> Self {
        ExperimentConfig {
            p: 30,
            n: 300,
            m: 200,
            support_size: 12,
            amplitudes: vec![3.0, 10.0, 20.0],
            prior: PriorSpec::Beta { a: 2.0, b: 2.0 },
            q: 0.1,
            knockoff_method: KnockoffMethod::Cik,
            m_cat: 1,
            seed: 2024,
            plus: true,
            redraw_per_replicate: false,
            lambda_rule: LambdaRule::default(),
        }
    }

    /// p = 100, n = m = 1000, |T| = 60.
    pub fn full_scale() -> Self {
        ExperimentConfig {
            p: 100,
            n: 1000,
            m: 1000,
            support_size: 60,
            amplitudes: vec![3.0, 5.0, 10.0, 15.0, 20.0],
            ..Self::desk_scale()
        }
    }

    pub fn validate(&self) -> Result<Prior> {
        if self.p == 0 || self.n < 2 || self.m == 0 {
            return Err(Error::Parameter("need p >= 1, n >= 2 and m >= 1".into()));
        }
        if self.support_size > self.p {
            return Err(Error::Parameter(format!(
                "support size {} exceeds p = {}",
                self.support_size, self.p
            )));
        }
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(Error::Parameter(format!("q must lie in (0, 1), got {}", self.q)));
        }
        if self.amplitudes.is_empty() || self.amplitudes.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(Error::Parameter("amplitudes must be a nonempty list of nonnegative reals".into()));
        }
        if self.m_cat == 0 || self.m_cat > 2 {
            return Err(Error::Parameter(format!("response model needs codes in {{0,1,2}}, got m_cat = {}", self.m_cat)));
        }
        let prior = self.prior.build()?;
        if prior.category_bound() != self.m_cat as usize {
            return Err(Error::Parameter(format!(
                "prior has category bound {} but m_cat = {}",
                prior.category_bound(),
                self.m_cat
            )));
        }
        if matches!(prior, Prior::MixedGraph(_)) {
            return Err(Error::Unsupported("simulation needs a categorical prior".into()));
        }
        if let Some(k) = prior.split() {
            if k >= self.p {
                return Err(Error::Parameter(format!("prior split {k} requires p > {k}")));
            }
        }
        Ok(prior)
    }
}

/// Per-amplitude FDR / power summary with the replicate values it was built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeSummary {
    pub amplitude: f64,
    pub replicates: usize,
    pub mean_fdr: f64,
    pub se_fdr: f64,
    pub mean_power: f64,
    pub se_power: f64,
    pub support: Vec<usize>,
    pub fdp: Vec<f64>,
    pub power: Vec<f64>,
    /// Set when a stage failed; the cell then has no replicates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub cells: Vec<AmplitudeSummary>,
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One row per (amplitude, metric): `amplitude,metric,mean,se,replicates`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(vec![]);
        w.write_record(["amplitude", "metric", "mean", "se", "replicates"])?;
        for c in &self.cells {
            for (metric, mean, se) in [("fdr", c.mean_fdr, c.se_fdr), ("power", c.mean_power, c.se_power)] {
                w.write_record([
                    c.amplitude.to_string(),
                    metric.to_string(),
                    mean.to_string(),
                    se.to_string(),
                    c.replicates.to_string(),
                ])?;
            }
        }
        String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.into_error()))?)
            .map_err(|e| Error::Validation(e.to_string()))
    }
}

/// Uniform random support of the given size (sorted) and β_i = u/√n on it.
pub fn gen_coefficients<R: Rng + ?Sized>(
    p: usize,
    support_size: usize,
    amplitude: f64,
    n: usize,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<usize>)> {
    if support_size > p {
        return Err(Error::Parameter(format!("support size {support_size} exceeds p = {p}")));
    }
    let mut support = sample_indices(rng, p, support_size).into_vec();
    support.sort_unstable();
    let mut beta = vec![0.0; p];
    for &i in &support {
        beta[i] = amplitude / (n as f64).sqrt();
    }
    Ok((beta, support))
}

/// Effect multiplier of a category code in the response model.
fn code_effect(code: u8) -> f64 {
    match code {
        0 => 2.0,
        1 => 1.0,
        _ => 0.5,
    }
}

/// Noise-free mean of row i.
pub fn mean_response(x: &CategoricalMatrix, beta: &[f64], i: usize) -> f64 {
    x.row(i).iter().zip(beta).map(|(&c, &b)| code_effect(c) * b).sum()
}

/// y_j = Σ_i β_i (2·1(x_ij = 0) + 1(x_ij = 1) + ½·1(x_ij = 2)) + e_j.
pub fn gen_response<R: Rng + ?Sized>(x: &CategoricalMatrix, beta: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    if beta.len() != x.ncols() {
        return Err(Error::Dimension(format!("{} coefficients for {} columns", beta.len(), x.ncols())));
    }
    if x.m() > 2 {
        return Err(Error::Validation(format!("response model needs codes in {{0,1,2}}, matrix allows up to {}", x.m())));
    }
    Ok((0..x.nrows())
        .map(|i| {
            let e: f64 = StandardNormal.sample(rng);
            mean_response(x, beta, i) + e
        })
        .collect())
}

// stream purposes within a cell
const STREAM_COEF: u64 = 0;
const STREAM_X: u64 = 1;
const STREAM_Y: u64 = 2;
const STREAM_REPLICATE: u64 = 3;
const STREAM_KNOCKOFF: u64 = 0;
const STREAM_CV: u64 = 1;

struct CellData {
    x: CategoricalMatrix,
    y: Vec<f64>,
    support: Vec<usize>,
}

fn draw_cell(config: &ExperimentConfig, prior: &Prior, amplitude: f64, stream: &SeededRng) -> Result<CellData> {
    let (beta, support) = gen_coefficients(
        config.p,
        config.support_size,
        amplitude,
        config.n,
        &mut stream.derive(STREAM_COEF).rng(),
    )?;
    let x = sample_x(config.n, config.p, prior, stream.derive(STREAM_X))?;
    let y = gen_response(&x, &beta, &mut stream.derive(STREAM_Y).rng())?;
    Ok(CellData { x, y, support })
}

fn cell_stream(config: &ExperimentConfig, index: usize) -> SeededRng {
    SeededRng::new(config.seed).derive(index as u64)
}

/// The synthetic (X, y) of amplitude cell `index` when data are fixed per cell.
pub fn cell_dataset(config: &ExperimentConfig, index: usize) -> Result<Dataset> {
    let prior = config.validate()?;
    let amplitude = *config
        .amplitudes
        .get(index)
        .ok_or_else(|| Error::Parameter(format!("no amplitude with index {index}")))?;
    let cell = draw_cell(config, &prior, amplitude, &cell_stream(config, index))?;
    Ok(Dataset {
        names: io::default_names("x", config.p),
        response: "y".into(),
        x: cell.x,
        y: cell.y,
    })
}

/// Knockoffs, statistics and selection for one (X, y).
fn select_once(
    config: &ExperimentConfig,
    prior: &Prior,
    x: &CategoricalMatrix,
    x_cols: &[Vec<f64>],
    gaussian: Option<&GaussianKnockoffModel>,
    y: &[f64],
    stream: &SeededRng,
) -> Result<SelectionResult> {
    let ko_stream = stream.derive(STREAM_KNOCKOFF);
    let xk_cols = match (config.knockoff_method, gaussian) {
        (KnockoffMethod::Cik, _) => knockoff_matrix(x, prior, ko_stream)?.to_f64_columns(),
        (KnockoffMethod::Gaussian, Some(model)) => model.sample(x_cols, &ko_stream)?,
        (KnockoffMethod::Gaussian, None) => gaussian_knockoffs(x_cols, &ko_stream)?,
    };
    let w = coef_diff_stats(
        x_cols,
        &xk_cols,
        y,
        &config.lambda_rule,
        &LassoOptions::default(),
        &mut stream.derive(STREAM_CV).rng(),
    )?;
    Ok(knockoff_threshold(&w.w, config.q, config.plus))
}

fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

fn run_cell(config: &ExperimentConfig, prior: &Prior, index: usize) -> Result<(Vec<usize>, Vec<(f64, f64)>)> {
    let amplitude = config.amplitudes[index];
    let stream = cell_stream(config, index);
    let reps = stream.derive(STREAM_REPLICATE);
    if config.redraw_per_replicate {
        let out: Result<Vec<(f64, f64)>> = (0..config.m)
            .into_par_iter()
            .map(|r| {
                let rs = reps.derive(r as u64);
                let cell = draw_cell(config, prior, amplitude, &rs)?;
                let cols = cell.x.to_f64_columns();
                let sel = select_once(config, prior, &cell.x, &cols, None, &cell.y, &rs)?;
                Ok(fdr_power(&sel.selected, &cell.support))
            })
            .collect();
        return Ok((vec![], out?));
    }
    let cell = draw_cell(config, prior, amplitude, &stream)?;
    let cols = cell.x.to_f64_columns();
    let gaussian = match config.knockoff_method {
        KnockoffMethod::Gaussian => Some(GaussianKnockoffModel::fit(&cols)?),
        KnockoffMethod::Cik => None,
    };
    let out: Result<Vec<(f64, f64)>> = (0..config.m)
        .into_par_iter()
        .map(|r| {
            let sel = select_once(config, prior, &cell.x, &cols, gaussian.as_ref(), &cell.y, &reps.derive(r as u64))?;
            Ok(fdr_power(&sel.selected, &cell.support))
        })
        .collect();
    Ok((cell.support, out?))
}

/// Runs every amplitude cell. Failures are recorded in the failing cell and
/// do not abort the others; configuration errors are returned directly.
pub fn run_simulation(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let prior = config.validate()?;
    let cells = (0..config.amplitudes.len())
        .map(|index| {
            let amplitude = config.amplitudes[index];
            match run_cell(config, &prior, index) {
                Ok((support, values)) => {
                    let fdp: Vec<f64> = values.iter().map(|v| v.0).collect();
                    let power: Vec<f64> = values.iter().map(|v| v.1).collect();
                    let (mean_fdr, se_fdr) = mean_se(&fdp);
                    let (mean_power, se_power) = mean_se(&power);
                    AmplitudeSummary {
                        amplitude,
                        replicates: values.len(),
                        mean_fdr,
                        se_fdr,
                        mean_power,
                        se_power,
                        support,
                        fdp,
                        power,
                        error: None,
                    }
                }
                Err(e) => AmplitudeSummary {
                    amplitude,
                    replicates: 0,
                    mean_fdr: 0.0,
                    se_fdr: 0.0,
                    mean_power: 0.0,
                    se_power: 0.0,
                    support: vec![],
                    fdp: vec![],
                    power: vec![],
                    error: Some(format!("amplitude {amplitude}: {e}")),
                },
            }
        })
        .collect();
    Ok(ExperimentReport {
        config: config.clone(),
        cells,
    })
}

/// Settings for a single-knockoff selection on a real dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RealConfig {
    pub prior: PriorSpec,
    #[serde(default = "default_real_q")]
    pub q: f64,
    pub knockoff_method: KnockoffMethod,
    pub m_cat: u8,
    pub seed: u64,
    #[serde(default = "default_true")]
    pub plus: bool,
    #[serde(default)]
    pub lambda_rule: LambdaRule,
}

fn default_real_q() -> f64 {
    0.2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealReport {
    pub selected: Vec<String>,
    pub selected_indices: Vec<usize>,
    pub threshold: Option<f64>,
    pub q: f64,
}

/// Draws one knockoff matrix for the dataset and runs the filter.
pub fn run_real_dataset(data: &Dataset, config: &RealConfig) -> Result<RealReport> {
    let prior = config.prior.build()?;
    if prior.category_bound() != config.m_cat as usize {
        return Err(Error::Parameter(format!(
            "prior has category bound {} but m_cat = {}",
            prior.category_bound(),
            config.m_cat
        )));
    }
    let exp = ExperimentConfig {
        p: data.x.ncols(),
        n: data.x.nrows(),
        m: 1,
        support_size: 0,
        amplitudes: vec![0.0],
        prior: config.prior.clone(),
        q: config.q,
        knockoff_method: config.knockoff_method,
        m_cat: config.m_cat,
        seed: config.seed,
        plus: config.plus,
        redraw_per_replicate: false,
        lambda_rule: config.lambda_rule.clone(),
    };
    let cols = data.x.to_f64_columns();
    let sel = select_once(&exp, &prior, &data.x, &cols, None, &data.y, &SeededRng::new(config.seed))?;
    Ok(RealReport {
        selected: sel.selected.iter().map(|&i| data.names[i].clone()).collect(),
        selected_indices: sel.selected,
        threshold: sel.threshold,
        q: config.q,
    })
}

pub fn run_real(path: &Path, config: &RealConfig) -> Result<RealReport> {
    run_real_dataset(&io::read_dataset(path, config.m_cat)?, config)
}
