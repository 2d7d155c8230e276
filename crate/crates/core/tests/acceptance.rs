//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
//! Tolerances and seeds are pinned here.

mod common;

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{beta_integral, binomial, polya_urn, rel_err, simplex_mixture};
use exknock::enumerate::all_vectors;
use exknock::harness::{run_simulation, ExperimentConfig, KnockoffMethod};
use exknock::model::{conditional_knockoff_pmf, joint_prob, marginal_prob, suff_stats};
use exknock::priors::{beta_tv_bound, binomial_grid_prior, tv_distance_priors, PriorSpec};
use exknock::robustness::{random_grid_prior, conditional_tv_bounds, tv_exchangeable_laws, tv_knockoff_conditionals};
use exknock::sampler::{knockoff_matrix, sample_x, CategoricalMatrix, SeededRng};
use exknock::selection::lasso::{fit_lasso, soft_threshold, LassoOptions, KKT_TOL};
use exknock::special::digamma;
use exknock::{CategoricalVector, Prior, SuffStats};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> (Outcome, Duration, bool) {
    let start = Instant::now();
    let o = f();
    let took = start.elapsed();
    let in_time = limit.is_none_or(|l| took <= l);
    (o, took, in_time)
}

/// 1. marginal / joint closed forms against quadrature and finite-sum oracles.
fn closed_forms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for case in 0..200 {
        let (prior, x, xk, oracle_m, oracle_j): (Prior, SuffStats, SuffStats, f64, f64) = match case % 4 {
            0 => {
                let (a, b) = (rng.random_range(0.5..5.0), rng.random_range(0.5..5.0));
                let p = rng.random_range(1..=10u32);
                let (n1, k1) = (rng.random_range(0..=p), rng.random_range(0..=p));
                let norm = beta_integral(a, b);
                let m = beta_integral(a + n1 as f64, b + (p - n1) as f64) / norm;
                let j = beta_integral(a + (n1 + k1) as f64, b + (2 * p - n1 - k1) as f64) / norm;
                (
                    Prior::beta(a, b).unwrap(),
                    SuffStats::new(vec![p - n1, n1]),
                    SuffStats::new(vec![p - k1, k1]),
                    m,
                    j,
                )
            }
            1 => {
                let mcat = rng.random_range(1..=3usize);
                let alpha: Vec<f64> = (0..=mcat).map(|_| rng.random_range(0.3..4.0)).collect();
                let draw = |rng: &mut ChaCha8Rng| -> Vec<u32> { (0..=mcat).map(|_| rng.random_range(0..4u32)).collect() };
                let (mut cx, mut ck) = (draw(&mut rng), draw(&mut rng));
                // same length p for x and x̃
                let (px, pk): (u32, u32) = (cx.iter().sum(), ck.iter().sum());
                if px > pk {
                    ck[0] += px - pk;
                } else {
                    cx[0] += pk - px;
                }
                let both: Vec<u32> = cx.iter().zip(&ck).map(|(a, b)| a + b).collect();
                (
                    Prior::dirichlet(alpha.clone()).unwrap(),
                    SuffStats::new(cx.clone()),
                    SuffStats::new(ck),
                    polya_urn(&alpha, &cx),
                    polya_urn(&alpha, &both),
                )
            }
            2 => {
                let k = rng.random_range(2..8usize);
                let pts: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
                let raw: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 0.01).collect();
                let t: f64 = raw.iter().sum();
                let w: Vec<f64> = raw.iter().map(|v| v / t).collect();
                let p = rng.random_range(1..=12u32);
                let (n1, k1) = (rng.random_range(0..=p), rng.random_range(0..=p));
                let f = |c1: u32, c0: u32| -> f64 {
                    pts.iter().zip(&w).map(|(u, wi)| wi * u.powi(c1 as i32) * (1.0 - u).powi(c0 as i32)).sum()
                };
                (
                    Prior::scalar_grid(pts.clone(), w.clone()).unwrap(),
                    SuffStats::new(vec![p - n1, n1]),
                    SuffStats::new(vec![p - k1, k1]),
                    f(n1, p - n1),
                    f(n1 + k1, 2 * p - n1 - k1),
                )
            }
            _ => {
                let mcat = 2;
                let k = rng.random_range(2..6usize);
                let pts: Vec<Vec<f64>> = (0..k)
                    .map(|_| {
                        let (a, b): (f64, f64) = (rng.random(), rng.random());
                        vec![a.min(b), (a.max(b) - a.min(b))]
                    })
                    .collect();
                let w = vec![1.0 / k as f64; k];
                let cx: Vec<u32> = (0..=mcat).map(|_| rng.random_range(0..4u32)).collect();
                let mut ck: Vec<u32> = (0..=mcat).map(|_| rng.random_range(0..4u32)).collect();
                let (px, pk): (u32, u32) = (cx.iter().sum(), ck.iter().sum());
                if px >= pk {
                    ck[0] += px - pk;
                } else {
                    ck = cx.clone();
                }
                let both: Vec<u32> = cx.iter().zip(&ck).map(|(a, b)| a + b).collect();
                (
                    Prior::simplex_grid(pts.clone(), w.clone()).unwrap(),
                    SuffStats::new(cx.clone()),
                    SuffStats::new(ck),
                    simplex_mixture(&pts, &w, &cx),
                    simplex_mixture(&pts, &w, &both),
                )
            }
        };
        let m = marginal_prob(&x, &prior).unwrap();
        let j = joint_prob(&x, &xk, &prior).unwrap();
        worst = worst.max(rel_err(m, oracle_m)).max(rel_err(j, oracle_j));
    }
    outcome(worst <= 1e-8, format!("200 cases, max relative error {worst:.2e} (tol 1e-8)"))
}

/// 2. P(swap_i(X, X̃) = z) = P((X, X̃) = z) over ({0,1}^4)².
fn swap_exchangeability() -> Outcome {
    let vs = all_vectors(4, 1).unwrap();
    let mut worst_swap: f64 = 0.0;
    let mut worst_mass: f64 = 0.0;
    for prior in [Prior::beta(2.0, 3.0).unwrap(), binomial_grid_prior(4, 0.3).unwrap()] {
        let prob = |x: &CategoricalVector, xk: &CategoricalVector| {
            joint_prob(&suff_stats(x, None).unwrap(), &suff_stats(xk, None).unwrap(), &prior).unwrap()
        };
        let mut mass = 0.0;
        for x in &vs {
            for xk in &vs {
                let base = prob(x, xk);
                mass += base;
                for i in 0..4 {
                    let (mut a, mut b) = (x.entries().to_vec(), xk.entries().to_vec());
                    std::mem::swap(&mut a[i], &mut b[i]);
                    let swapped =
                        prob(&CategoricalVector::binary(a).unwrap(), &CategoricalVector::binary(b).unwrap());
                    worst_swap = worst_swap.max((swapped - base).abs());
                }
            }
        }
        worst_mass = worst_mass.max((mass - 1.0).abs());
    }
    outcome(
        worst_swap <= 1e-12 && worst_mass <= 1e-10,
        format!("max swap gap {worst_swap:.2e} (tol 1e-12), mass error {worst_mass:.2e} (tol 1e-10)"),
    )
}

/// 3. Empirical knockoff count classes vs the conditional pmf.
fn sampler_exactness() -> Outcome {
    let prior = binomial_grid_prior(6, 0.3).unwrap();
    let x = [1u8, 0, 1, 0, 0, 0];
    let draws = 200_000;
    let data: Vec<u8> = x.iter().copied().cycle().take(6 * draws).collect();
    let xm = CategoricalMatrix::new(draws, 6, 1, data).unwrap();
    let xk = knockoff_matrix(&xm, &prior, SeededRng::new(303)).unwrap();
    let mut counts = [0usize; 7];
    for i in 0..draws {
        counts[xk.row(i).iter().map(|&c| c as usize).sum::<usize>()] += 1;
    }
    let sx = SuffStats::new(vec![4, 2]);
    let tv: f64 = (0..=6u32)
        .map(|k| {
            let exact = binomial(6, k as u64) * conditional_knockoff_pmf(&sx, &SuffStats::new(vec![6 - k, k]), &prior).unwrap();
            (counts[k as usize] as f64 / draws as f64 - exact).abs()
        })
        .sum::<f64>()
        / 2.0;
    outcome(tv < 0.01, format!("TV {tv:.4} over {draws} draws (tol 0.01)"))
}

/// 4. Cov(X_i, X̃_i) = Var(U) = 1/60 under Beta(7,7).
fn covariance_identity() -> Outcome {
    let (n, p) = (100_000, 20);
    let prior = Prior::beta(7.0, 7.0).unwrap();
    let x = sample_x(n, p, &prior, SeededRng::new(404)).unwrap();
    let xk = knockoff_matrix(&x, &prior, SeededRng::new(405)).unwrap();
    let target = 1.0 / 60.0;
    let mut worst_z: f64 = 0.0;
    for i in 0..p {
        let a: Vec<f64> = (0..n).map(|r| x.get(r, i) as f64).collect();
        let b: Vec<f64> = (0..n).map(|r| xk.get(r, i) as f64).collect();
        let (ma, mb) = (a.iter().sum::<f64>() / n as f64, b.iter().sum::<f64>() / n as f64);
        let prod: Vec<f64> = a.iter().zip(&b).map(|(u, v)| (u - ma) * (v - mb)).collect();
        let cov = prod.iter().sum::<f64>() / n as f64;
        let sd = (prod.iter().map(|v| (v - cov).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        worst_z = worst_z.max((cov - target).abs() / (sd / (n as f64).sqrt()));
    }
    outcome(worst_z <= 3.0, format!("{p} coordinates, max |cov − 1/60| = {worst_z:.2} s.e. (tol 3)"))
}

/// 5. Exchangeable-law TV ≤ prior TV; conditional TV ≤ bound_a ≤ bound_b.
fn robustness_bounds() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut lemma_slack = f64::INFINITY;
    for _ in 0..100 {
        let p1 = random_grid_prior(rng.random_range(1..=10), &mut rng).unwrap();
        let p2 = random_grid_prior(rng.random_range(1..=10), &mut rng).unwrap();
        let prior_tv = tv_distance_priors(&p1, &p2).unwrap().value;
        for n in 2..=10 {
            lemma_slack = lemma_slack.min(prior_tv - tv_exchangeable_laws(&p1, &p2, n, 1).unwrap());
        }
    }
    let mut thm_slack = f64::INFINITY;
    let mut order_slack = f64::INFINITY;
    for _ in 0..100 {
        let p1 = random_grid_prior(rng.random_range(1..=10), &mut rng).unwrap();
        let p2 = random_grid_prior(rng.random_range(1..=10), &mut rng).unwrap();
        let p = rng.random_range(1..=8);
        // both marginals must be positive; redraw x until they are
        let x = loop {
            let x = CategoricalVector::binary((0..p).map(|_| rng.random_range(0..=1)).collect()).unwrap();
            let s = suff_stats(&x, None).unwrap();
            if marginal_prob(&s, &p1).unwrap() > 0.0 && marginal_prob(&s, &p2).unwrap() > 0.0 {
                break x;
            }
        };
        let lhs = tv_knockoff_conditionals(&x, &p1, &p2).unwrap();
        let b = conditional_tv_bounds(&x, &p1, &p2).unwrap();
        thm_slack = thm_slack.min(b.bound_a - lhs);
        order_slack = order_slack.min(b.bound_b - b.bound_a);
    }
    outcome(
        lemma_slack >= -1e-10 && thm_slack >= -1e-10 && order_slack >= -1e-12,
        format!(
            "min slack: exchangeable {lemma_slack:.2e}, conditional {thm_slack:.2e} (tol -1e-10); bound_b - bound_a {order_slack:.2e} (tol -1e-12)"
        ),
    )
}

/// 6. Quadrature TV between Beta(a1, b) and Beta(a2, b) ≤ (11/6)|a1 − a2|.
fn beta_tv_lemma() -> Outcome {
    let q = digamma(4.0) - digamma(1.0);
    let grid: Vec<f64> = (0..5).map(|i| 1.0 + 0.25 * i as f64).collect();
    let mut slack = f64::INFINITY;
    for &a1 in &grid {
        for &a2 in &grid {
            for &b in &grid {
                let tv = tv_distance_priors(&Prior::beta(a1, b).unwrap(), &Prior::beta(a2, b).unwrap()).unwrap().value;
                let bound = beta_tv_bound(a1, b, a2, b, 1.0, 2.0).unwrap();
                slack = slack.min(bound - tv);
            }
        }
    }
    let q_ok = (q - 11.0 / 6.0).abs() < 1e-12;
    outcome(
        slack >= -1e-9 && q_ok,
        format!("125 grid points, min slack {slack:.2e} (tol -1e-9); q = {q:.15}"),
    )
}

fn desk() -> ExperimentConfig {
    let c = ExperimentConfig::desk_scale();
    assert_eq!((c.p, c.n, c.m, c.support_size, c.q), (30, 300, 200, 12, 0.1));
    assert_eq!(c.prior, PriorSpec::Beta { a: 2.0, b: 2.0 });
    assert_eq!(c.knockoff_method, KnockoffMethod::Cik);
    c
}

/// 7. FDR ≤ q + 2 se per amplitude; power nondecreasing within 2 se.
fn fdr_control() -> Outcome {
    let mut c = desk();
    c.amplitudes = vec![3.0, 10.0, 20.0];
    let r = run_simulation(&c).unwrap();
    let mut pass = true;
    let mut parts = vec![];
    for cell in &r.cells {
        let ok = cell.error.is_none() && cell.mean_fdr <= c.q + 2.0 * cell.se_fdr;
        pass &= ok;
        parts.push(format!(
            "u={}: fdr {:.4}±{:.4} power {:.4}±{:.4}{}",
            cell.amplitude,
            cell.mean_fdr,
            cell.se_fdr,
            cell.mean_power,
            cell.se_power,
            if ok { "" } else { " (fdr over limit)" }
        ));
    }
    for w in r.cells.windows(2) {
        let se = (w[0].se_power.powi(2) + w[1].se_power.powi(2)).sqrt();
        if w[1].mean_power < w[0].mean_power - 2.0 * se {
            pass = false;
            parts.push(format!("power drops from u={} to u={}", w[0].amplitude, w[1].amplitude));
        }
    }
    outcome(pass, parts.join("; "))
}

/// 8. Lower prior variance does not lose power at amplitude 10.
fn power_vs_variance() -> Outcome {
    let run = |a: f64| {
        let mut c = desk();
        c.amplitudes = vec![10.0];
        c.prior = PriorSpec::Beta { a, b: a };
        run_simulation(&c).unwrap().cells.remove(0)
    };
    let (wide, narrow) = (run(2.0), run(7.0));
    let se = (wide.se_power.powi(2) + narrow.se_power.powi(2)).sqrt();
    outcome(
        wide.error.is_none() && narrow.error.is_none() && narrow.mean_power >= wide.mean_power - 2.0 * se,
        format!(
            "power Beta(7,7) {:.4} vs Beta(2,2) {:.4}, 2 se = {:.4}",
            narrow.mean_power,
            wide.mean_power,
            2.0 * se
        ),
    )
}

/// 9. KKT residual on random instances; soft-thresholding on orthonormal designs.
fn lasso_solver() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let mut worst_kkt: f64 = 0.0;
    let mut worst_soft: f64 = 0.0;
    for _ in 0..100 {
        let (n, d) = (rng.random_range(10..80), rng.random_range(1..25));
        let cols: Vec<Vec<f64>> = (0..d).map(|_| (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
        let lmax = cols
            .iter()
            .map(|c| (c.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / n as f64).abs())
            .fold(0.0, f64::max);
        let lambda = lmax * rng.random_range(0.001..1.2);
        let fit = fit_lasso(&cols, &y, lambda, &LassoOptions::plain()).unwrap();
        // recompute the KKT residual from the returned coefficients
        let resid: Vec<f64> = (0..n)
            .map(|i| y[i] - cols.iter().zip(&fit.coef).map(|(c, b)| c[i] * b).sum::<f64>())
            .collect();
        for (c, &b) in cols.iter().zip(&fit.coef) {
            let g = c.iter().zip(&resid).map(|(a, r)| a * r).sum::<f64>() / n as f64;
            let v = if b != 0.0 { (g - lambda * b.signum()).abs() } else { (g.abs() - lambda).max(0.0) };
            worst_kkt = worst_kkt.max(v);
        }

        // orthonormal design with XᵀX / n = I
        let (n2, d2) = (rng.random_range(20..60), rng.random_range(1..10));
        let raw = nalgebra::DMatrix::from_fn(n2, d2, |_, _| rng.random::<f64>() - 0.5);
        let qm = raw.qr().q() * (n2 as f64).sqrt();
        let cols2: Vec<Vec<f64>> = (0..d2).map(|j| qm.column(j).iter().copied().collect()).collect();
        let y2: Vec<f64> = (0..n2).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let lambda2 = rng.random_range(0.0..0.3);
        let fit2 = fit_lasso(&cols2, &y2, lambda2, &LassoOptions::plain()).unwrap();
        for (c, &b) in cols2.iter().zip(&fit2.coef) {
            let z = c.iter().zip(&y2).map(|(a, v)| a * v).sum::<f64>() / n2 as f64;
            worst_soft = worst_soft.max((b - soft_threshold(z, lambda2)).abs());
        }
    }
    outcome(
        worst_kkt <= KKT_TOL && worst_soft <= 1e-8,
        format!("100 instances, max KKT residual {worst_kkt:.2e} (tol 1e-6), max soft-threshold gap {worst_soft:.2e} (tol 1e-8)"),
    )
}

/// 10. Identical config and seed give byte-identical reports.
fn determinism() -> Outcome {
    let mut c = desk();
    c.m = 20;
    let a = run_simulation(&c).unwrap().to_json().unwrap();
    let b = run_simulation(&c).unwrap().to_json().unwrap();
    outcome(a.as_bytes() == b.as_bytes(), format!("two runs, {} bytes each, identical: {}", a.len(), a == b))
}

fn main() {
    type Check = (u32, &'static str, Option<u64>, fn() -> Outcome);
    let checks: [Check; 10] = [
        (1, "closed forms vs oracles", Some(10), closed_forms),
        (2, "swap exchangeability", Some(5), swap_exchangeability),
        (3, "sampler exactness", Some(30), sampler_exactness),
        (4, "covariance identity", Some(60), covariance_identity),
        (5, "robustness bounds", Some(60), robustness_bounds),
        (6, "beta TV lemma", Some(30), beta_tv_lemma),
        (7, "FDR control at desk scale", Some(1200), fdr_control),
        (8, "power vs prior variance", None, power_vs_variance),
        (9, "lasso solver", None, lasso_solver),
        (10, "determinism", None, determinism),
    ];
    let mut failed = vec![];
    for (id, name, limit, f) in checks {
        let (o, took, in_time) = timed(limit.map(Duration::from_secs), f);
        let pass = o.pass && in_time;
        let budget = limit.map_or(String::new(), |l| format!(" / {l} s"));
        println!(
            "criterion {id:>2} {} {name}: {} [{:.1} s{budget}]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            took.as_secs_f64()
        );
        if !pass {
            failed.push(id);
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
