//! Small statistics toolbox: Gaussian moments, moment estimates with error
//! bars, two-sample Kolmogorov distances, and least squares.

use serde::Serialize;
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

/// `E|Z|^m` for a standard Gaussian `Z`.
pub fn gaussian_abs_moment(m: f64) -> f64 {
    (0.5 * m * 2f64.ln() + ln_gamma(0.5 * (m + 1.0)) - 0.5 * std::f64::consts::PI.ln()).exp()
}

/// `(E|Z|^m)^{1/m}` for a standard Gaussian `Z`.
pub fn gaussian_moment_root(m: f64) -> f64 {
    gaussian_abs_moment(m).powf(1.0 / m)
}

/// `P(|Z| > u)` for a standard Gaussian.
pub fn gaussian_two_sided_tail(u: f64) -> f64 {
    erfc(u / std::f64::consts::SQRT_2)
}

/// An estimate with its Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

/// `(mean |x|^m)^{1/m}` and its delta-method standard error.
pub fn moment_norm(xs: &[f64], m: f64) -> Estimate {
    let n = xs.len() as f64;
    let pw: Vec<f64> = xs.iter().map(|x| x.abs().powf(m)).collect();
    let mean = pw.iter().sum::<f64>() / n;
    if mean == 0.0 {
        return Estimate {
            value: 0.0,
            se: 0.0,
        };
    }
    let var = if xs.len() > 1 {
        pw.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let se_mean = (var / n).sqrt();
    let value = mean.powf(1.0 / m);
    Estimate {
        value,
        se: value / (m * mean) * se_mean,
    }
}

/// Fraction of `xs` strictly above `u`, with its binomial standard error.
pub fn exceedance(xs: &[f64], u: f64) -> Estimate {
    let n = xs.len() as f64;
    let p = xs.iter().filter(|&&x| x > u).count() as f64 / n;
    Estimate {
        value: p,
        se: binomial_se(p, xs.len()),
    }
}

pub fn binomial_se(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// `sup_x |F_a(x) - F_b(x)|` for the empirical CDFs of two samples.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Two-sample DKW envelope: `c(level) sqrt((n + m) / (n m))` with
/// `c = sqrt(-ln(level / 2) / 2)`.
pub fn dkw_two_sample(n: usize, m: usize, level: f64) -> f64 {
    let c = (-(0.5 * level).ln() / 2.0).sqrt();
    c * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// Empirical quantile with linear interpolation; `sorted` must be ascending.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
    } else {
        sorted[i]
    }
}

/// Ordinary least squares `y = slope x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}
