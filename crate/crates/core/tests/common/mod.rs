//! Independent oracles shared by the integration tests. None of these call
//! into the crate's special functions or quadrature.
#![allow(dead_code)]

/// Tanh-sinh quadrature of f(u, 1 − u) on (0, 1); robust to integrable
/// endpoint singularities. Step halving until successive estimates agree.
pub fn tanh_sinh<F: Fn(f64, f64) -> f64>(f: F) -> f64 {
    let half_pi = std::f64::consts::FRAC_PI_2;
    let node = |t: f64| {
        let s = half_pi * t.sinh();
        let c = s.cosh();
        // x = (1 + tanh s)/2, weight dx/dt, 1 − x computed without cancellation
        let x = 1.0 / (1.0 + (-2.0 * s).exp());
        let one_minus = 1.0 / (1.0 + (2.0 * s).exp());
        let w = 0.5 * half_pi * t.cosh() / (c * c);
        (x, one_minus, w)
    };
    let eval = |x: f64, om: f64| if x <= 0.0 || om <= 0.0 { 0.0 } else { f(x, om) };
    let t_max = 4.0;
    let mut h = 0.5;
    let mut prev = f64::NAN;
    loop {
        let n = (t_max / h) as i64;
        let mut sum = 0.0;
        for k in -n..=n {
            let (x, om, w) = node(k as f64 * h);
            sum += w * eval(x, om);
        }
        let est = sum * h;
        if (est - prev).abs() <= 1e-13 * est.abs() || h < 1e-4 {
            return est;
        }
        prev = est;
        h /= 2.0;
    }
}

/// ∫ u^(a−1) (1−u)^(b−1) du by quadrature.
pub fn beta_integral(a: f64, b: f64) -> f64 {
    tanh_sinh(|u, v| u.powf(a - 1.0) * v.powf(b - 1.0))
}

/// P(sequence with counts n) under Dirichlet(α) by the Pólya urn.
pub fn polya_urn(alpha: &[f64], counts: &[u32]) -> f64 {
    let total: f64 = alpha.iter().sum();
    let mut p = 1.0;
    let mut drawn = 0.0;
    for (a, &c) in alpha.iter().zip(counts) {
        for k in 0..c {
            p *= (a + k as f64) / (total + drawn);
            drawn += 1.0;
        }
    }
    p
}

/// Σ_k w_k Π_j θ_kj^{n_j} with linear-space powers.
pub fn simplex_mixture(points: &[Vec<f64>], weights: &[f64], counts: &[u32]) -> f64 {
    points
        .iter()
        .zip(weights)
        .map(|(theta, w)| {
            let mut full = theta.clone();
            full.insert(0, 1.0 - theta.iter().sum::<f64>());
            w * full.iter().zip(counts).map(|(t, &c)| t.powi(c as i32)).product::<f64>()
        })
        .sum()
}

pub fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}
