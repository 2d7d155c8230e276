use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use exknock::gaussian::gaussian_knockoffs;
use exknock::harness::io;
use exknock::harness::{run_real, run_simulation, ExperimentConfig, KnockoffMethod, RealConfig};
use exknock::model::{log_conditional_knockoff_pmf, log_joint, log_marginal, suff_stats};
use exknock::priors::{tv_distance_priors, Prior, PriorSpec};
use exknock::robustness::{conditional_tv_bounds, tv_exchangeable_laws, tv_knockoff_conditionals};
use exknock::sampler::{knockoff_matrix, sample_x, SeededRng};
use exknock::selection::{coef_diff_stats, knockoff_threshold, LambdaRule, LassoOptions};
use exknock::CategoricalVector;

#[derive(Parser)]
#[command(name = "exknock", version, about = "Exact knockoffs for exchangeable categorical covariates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw an n × p code matrix from a prior.
    Sample(SampleArgs),
    /// Draw an exact knockoff for every row of a code matrix.
    Knockoff(KnockoffArgs),
    /// Second-order Gaussian knockoffs of a numeric matrix.
    GaussianKnockoff(GaussianArgs),
    /// Log-probabilities of x and (x, x̃) under a prior.
    Prob(ProbArgs),
    /// Distances between two priors and the induced knockoff laws.
    Tv(TvArgs),
    /// Knockoff filter on X, X̃ and y.
    Select(SelectArgs),
    /// FDR / power simulation.
    Simulate(SimulateArgs),
    /// Single-knockoff selection on a dataset CSV.
    Real(RealArgs),
}

#[derive(Args)]
struct SampleArgs {
    /// Prior as inline JSON or a path to a JSON file.
    #[arg(long)]
    prior: String,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct KnockoffArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    prior: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GaussianArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ProbArgs {
    #[arg(long)]
    prior: String,
    /// Comma-separated codes, e.g. 0,1,1,0.
    #[arg(long)]
    x: String,
    #[arg(long)]
    knockoff: Option<String>,
    /// Category bound; defaults to the prior's.
    #[arg(long)]
    m: Option<u8>,
}

#[derive(Args)]
struct TvArgs {
    #[arg(long)]
    prior1: String,
    #[arg(long)]
    prior2: String,
    /// Also report the TV between the exchangeable laws of this length.
    #[arg(long)]
    n: Option<usize>,
    /// Also report the conditional knockoff TV at x and its two bounds.
    #[arg(long)]
    x: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long)]
    x: PathBuf,
    #[arg(long)]
    knockoffs: PathBuf,
    /// CSV whose first column is the response.
    #[arg(long)]
    y: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    q: f64,
    /// Use the plain knockoff threshold instead of knockoff+.
    #[arg(long)]
    no_plus: bool,
    /// Fixed penalty instead of cross-validation.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Experiment config JSON; overrides the scale preset.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, conflicts_with_all = ["full_scale", "config"])]
    desk_scale: bool,
    #[arg(long, conflicts_with = "config")]
    full_scale: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// JSON report path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-(amplitude, metric) CSV summary path.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct RealArgs {
    #[arg(long)]
    data: PathBuf,
    /// RealConfig JSON; individual flags below are ignored when given.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = r#"{"family":"beta","a":2,"b":2}"#)]
    prior: String,
    #[arg(long, default_value_t = 0.2)]
    q: f64,
    #[arg(long, default_value_t = 1)]
    m_cat: u8,
    #[arg(long, value_enum, default_value_t = Method::Cik)]
    method: Method,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Cik,
    Gaussian,
}

fn load_prior(text: &str) -> Result<Prior> {
    let json = if text.trim_start().starts_with('{') {
        text.to_string()
    } else {
        std::fs::read_to_string(text).with_context(|| format!("reading prior file {text}"))?
    };
    Ok(PriorSpec::from_json(&json)?.build()?)
}

fn parse_codes(text: &str, m: u8) -> Result<CategoricalVector> {
    let entries = text
        .split(',')
        .map(|s| s.trim().parse::<u8>().with_context(|| format!("bad code {s:?}")))
        .collect::<Result<Vec<u8>>>()?;
    Ok(CategoricalVector::new(entries, m)?)
}

/// Writes to `out`, or stdout when absent.
fn emit(out: Option<&Path>, body: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, body).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().write_all(body.as_bytes())?,
    }
    Ok(())
}

fn with_writer(out: Option<&Path>, f: impl FnOnce(&mut Vec<u8>) -> exknock::Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    emit(out, std::str::from_utf8(&buf)?)
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Sample(a) => {
            let prior = load_prior(&a.prior)?;
            let x = sample_x(a.n, a.p, &prior, SeededRng::new(a.seed))?;
            with_writer(a.out.as_deref(), |w| io::write_codes_to(w, &io::default_names("x", a.p), &x))
        }
        Command::Knockoff(a) => {
            let prior = load_prior(&a.prior)?;
            let (names, x) = io::read_codes(&a.input, prior.category_bound() as u8)?;
            let xk = knockoff_matrix(&x, &prior, SeededRng::new(a.seed))?;
            with_writer(a.out.as_deref(), |w| io::write_codes_to(w, &names, &xk))
        }
        Command::GaussianKnockoff(a) => {
            let (names, cols) = io::read_real(&a.input)?;
            let xk = gaussian_knockoffs(&cols, &SeededRng::new(a.seed))?;
            with_writer(a.out.as_deref(), |w| io::write_real_to(w, &names, &xk))
        }
        Command::Prob(a) => {
            let prior = load_prior(&a.prior)?;
            let m = a.m.unwrap_or(prior.category_bound() as u8);
            let x = parse_codes(&a.x, m)?;
            let sx = suff_stats(&x, prior.split())?;
            let mut body = String::from("quantity,log_value,value\n");
            let mut row = |name: &str, lv: f64| body.push_str(&format!("{name},{lv},{}\n", lv.exp()));
            row("marginal", log_marginal(&sx, &prior)?);
            if let Some(k) = &a.knockoff {
                let xk = parse_codes(k, m)?;
                let sk = suff_stats(&xk, prior.split())?;
                row("joint", log_joint(&sx, &sk, &prior)?);
                row("conditional", log_conditional_knockoff_pmf(&sx, &sk, &prior)?);
            }
            emit(None, &body)
        }
        Command::Tv(a) => {
            let (p1, p2) = (load_prior(&a.prior1)?, load_prior(&a.prior2)?);
            let tv = tv_distance_priors(&p1, &p2)?;
            let mut body = String::from("quantity,value\n");
            body.push_str(&format!("prior_tv,{}\n", tv.value));
            if tv.mutually_singular {
                body.push_str("mutually_singular,1\n");
            }
            if let Some(n) = a.n {
                let m = p1.category_bound();
                body.push_str(&format!("exchangeable_tv,{}\n", tv_exchangeable_laws(&p1, &p2, n, m)?));
            }
            if let Some(xs) = &a.x {
                let x = parse_codes(xs, p1.category_bound() as u8)?;
                let lhs = tv_knockoff_conditionals(&x, &p1, &p2)?;
                let b = conditional_tv_bounds(&x, &p1, &p2)?;
                body.push_str(&format!("lhs,{lhs}\nbound_a,{}\nbound_b,{}\n", b.bound_a, b.bound_b));
            }
            emit(a.out.as_deref(), &body)
        }
        Command::Select(a) => {
            let (names, x) = io::read_real(&a.x)?;
            let (_, xk) = io::read_real(&a.knockoffs)?;
            let (_, ycols) = io::read_real(&a.y)?;
            let y = ycols.into_iter().next().context("response file has no columns")?;
            let rule = match a.lambda {
                Some(lambda) => LambdaRule::Fixed { lambda },
                None => LambdaRule::default(),
            };
            let w = coef_diff_stats(&x, &xk, &y, &rule, &LassoOptions::default(), &mut SeededRng::new(a.seed).rng())?;
            let sel = knockoff_threshold(&w.w, a.q, !a.no_plus);
            let tau = sel.threshold.map_or("inf".to_string(), |t| t.to_string());
            let mut body = String::from("index,name,w,selected,threshold\n");
            for (i, wi) in w.w.iter().enumerate() {
                let chosen = sel.selected.contains(&i) as u8;
                body.push_str(&format!("{i},{},{wi},{chosen},{tau}\n", names[i]));
            }
            emit(a.out.as_deref(), &body)
        }
        Command::Simulate(a) => {
            let mut config = match (&a.config, a.full_scale) {
                (Some(path), _) => serde_json::from_str::<ExperimentConfig>(
                    &std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
                )?,
                (None, true) => ExperimentConfig::full_scale(),
                (None, false) => ExperimentConfig::desk_scale(),
            };
            if let Some(seed) = a.seed {
                config.seed = seed;
            }
            let start = Instant::now();
            let report = run_simulation(&config)?;
            eprintln!("wall time: {:.2} s", start.elapsed().as_secs_f64());
            for cell in &report.cells {
                if let Some(e) = &cell.error {
                    eprintln!("cell failed: {e}");
                }
            }
            if let Some(p) = &a.csv {
                emit(Some(p), &report.to_csv()?)?;
            }
            let mut json = report.to_json()?;
            json.push('\n');
            emit(a.out.as_deref(), &json)
        }
        Command::Real(a) => {
            let config = match &a.config {
                Some(path) => serde_json::from_str::<RealConfig>(&std::fs::read_to_string(path)?)?,
                None => {
                    let json = if a.prior.trim_start().starts_with('{') {
                        a.prior.clone()
                    } else {
                        std::fs::read_to_string(&a.prior)?
                    };
                    RealConfig {
                        prior: PriorSpec::from_json(&json)?,
                        q: a.q,
                        knockoff_method: match a.method {
                            Method::Cik => KnockoffMethod::Cik,
                            Method::Gaussian => KnockoffMethod::Gaussian,
                        },
                        m_cat: a.m_cat,
                        seed: a.seed,
                        plus: true,
                        lambda_rule: LambdaRule::default(),
                    }
                }
            };
            if !(config.q > 0.0 && config.q < 1.0) {
                bail!("q must lie in (0, 1)");
            }
            let report = run_real(&a.data, &config)?;
            let mut json = serde_json::to_string_pretty(&report)?;
            json.push('\n');
            emit(a.out.as_deref(), &json)
        }
    }
}
