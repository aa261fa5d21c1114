//! Goodness-of-fit and dependence statistics used by the experiments.

use crate::sampling::EmpiricalSample;
use crate::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Below this sample size the asymptotic Kolmogorov p-value is flagged.
pub const KS_MIN_VALID_N: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    /// `false` when a sample is smaller than [`KS_MIN_VALID_N`].
    pub asymptotic_valid: bool,
}

/// `P(K > lambda)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if !(lambda > 0.0) {
        return 1.0;
    }
    if lambda < 1.18 {
        // P(K <= x) = sqrt(2 pi)/x * sum_{k>=1} exp(-(2k-1)^2 pi^2 / (8 x^2))
        let w = -PI * PI / (8.0 * lambda * lambda);
        let mut sum = 0.0;
        for k in 1..=20 {
            let m = (2 * k - 1) as f64;
            let term = (w * m * m).exp();
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        (1.0 - (2.0 * PI).sqrt() / lambda * sum).clamp(0.0, 1.0)
    } else {
        // P(K > x) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2)
        let mut sum = 0.0;
        for k in 1..=100 {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * lambda * lambda).exp();
            sum += if k % 2 == 1 { term } else { -term };
            if term < 1e-17 {
                break;
            }
        }
        (2.0 * sum).clamp(0.0, 1.0)
    }
}

fn sorted(values: &[f64]) -> Result<Vec<f64>> {
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::input("sample contains NaN"));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// One-sample Kolmogorov-Smirnov test of `sample` against `cdf`.
pub fn ks_test(sample: &EmpiricalSample, cdf: impl Fn(f64) -> f64) -> Result<KsResult> {
    let xs = sorted(&sample.values)?;
    if xs.is_empty() {
        return Err(Error::input("KS test needs a non-empty sample"));
    }
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(KsResult { statistic: d, p_value: kolmogorov_survival(n.sqrt() * d), asymptotic_valid: xs.len() >= KS_MIN_VALID_N })
}

/// Two-sample Kolmogorov-Smirnov test with effective size `n_a n_b / (n_a + n_b)`.
pub fn two_sample_ks(a: &EmpiricalSample, b: &EmpiricalSample) -> Result<KsResult> {
    let xa = sorted(&a.values)?;
    let xb = sorted(&b.values)?;
    if xa.is_empty() || xb.is_empty() {
        return Err(Error::input("two-sample KS test needs non-empty samples"));
    }
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < xa.len() && j < xb.len() {
        let x = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let n_eff = na * nb / (na + nb);
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_survival(n_eff.sqrt() * d),
        asymptotic_valid: xa.len() >= KS_MIN_VALID_N && xb.len() >= KS_MIN_VALID_N,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentZ {
    pub p: f64,
    pub z: f64,
    pub sample_mean: f64,
    pub exact: f64,
    pub standard_error: f64,
    /// The sample of `V^p` had zero variance.
    pub degenerate: bool,
}

/// `z = (mean(V^p) - exact) / SE` with `SE` from the sample variance of `V^p`.
pub fn moment_z_scores(sample: &EmpiricalSample, exact_moments: &[(f64, f64)]) -> Result<Vec<MomentZ>> {
    let n = sample.values.len();
    if n < 2 {
        return Err(Error::input("moment z-scores need at least two values"));
    }
    let nf = n as f64;
    exact_moments
        .iter()
        .map(|&(p, exact)| {
            let powers: Vec<f64> = sample.values.iter().map(|v| v.powf(p)).collect();
            let mean = powers.iter().sum::<f64>() / nf;
            let var = powers.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0);
            if !var.is_finite() || !mean.is_finite() {
                return Err(Error::Numerical { message: format!("non-finite variance estimate for p = {p}"), diagnostics: vec![("p".into(), p)] });
            }
            let se = (var / nf).sqrt();
            let (z, degenerate) = if se > 0.0 {
                ((mean - exact) / se, false)
            } else if mean == exact {
                (0.0, true)
            } else {
                ((mean - exact).signum() * f64::INFINITY, true)
            };
            Ok(MomentZ { p, z, sample_mean: mean, exact, standard_error: se, degenerate })
        })
        .collect()
}

/// 129 equally spaced points on `[-5, 5]`.
pub fn default_t_grid() -> Vec<f64> {
    (0..=128).map(|i| -5.0 + 10.0 * i as f64 / 128.0).collect()
}

fn log_values(sample: &EmpiricalSample) -> Result<Vec<f64>> {
    if sample.values.is_empty() {
        return Err(Error::input("empirical characteristic function needs a non-empty sample"));
    }
    sample
        .values
        .iter()
        .map(|&v| if v > 0.0 && v.is_finite() { Ok(v.ln()) } else { Err(Error::input(format!("log-CF distance needs positive finite values, found {v}"))) })
        .collect()
}

/// Empirical characteristic function of `log x` at `t`.
pub fn empirical_log_cf(logs: &[f64], t: f64) -> Complex64 {
    let sum = logs.iter().fold(Complex64::new(0.0, 0.0), |acc, &y| {
        let (s, c) = (t * y).sin_cos();
        acc + Complex64::new(c, s)
    });
    sum / logs.len() as f64
}

/// `max_t |phi_hat_{log a}(t) - phi_hat_{log b}(t)|` over `t_grid`.
pub fn log_cf_distance(a: &EmpiricalSample, b: &EmpiricalSample, t_grid: &[f64]) -> Result<f64> {
    if t_grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::input("t grid must be finite"));
    }
    let la = log_values(a)?;
    let lb = log_values(b)?;
    Ok(t_grid.iter().map(|&t| (empirical_log_cf(&la, t) - empirical_log_cf(&lb, t)).norm()).fold(0.0, f64::max))
}

pub fn pearson_correlation(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::input("correlation needs two equally long samples of size >= 2"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Numerical { message: "correlation of a constant sample".into(), diagnostics: vec![("sxx".into(), sxx), ("syy".into(), syy)] });
    }
    Ok(sxy / (sxx * syy).sqrt())
}

fn quantile_bins(values: &[f64], bins: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut out = vec![0; values.len()];
    for (rank, &idx) in order.iter().enumerate() {
        out[idx] = rank * bins / values.len();
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub min_expected: f64,
}

/// Pearson chi-square test of independence on a `bins x bins` table of
/// marginal-quantile cells.
pub fn chi_square_independence(x: &[f64], y: &[f64], bins: usize) -> Result<ChiSquareResult> {
    if x.len() != y.len() || bins < 2 || x.len() < bins * bins {
        return Err(Error::input(format!("need two equally long samples with at least {} values", bins * bins)));
    }
    let bx = quantile_bins(x, bins);
    let by = quantile_bins(y, bins);
    let mut table = vec![vec![0.0f64; bins]; bins];
    for (&i, &j) in bx.iter().zip(&by) {
        table[i][j] += 1.0;
    }
    let n = x.len() as f64;
    let rows: Vec<f64> = table.iter().map(|r| r.iter().sum()).collect();
    let cols: Vec<f64> = (0..bins).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    let mut stat = 0.0;
    let mut min_expected = f64::INFINITY;
    for i in 0..bins {
        for j in 0..bins {
            let e = rows[i] * cols[j] / n;
            min_expected = min_expected.min(e);
            stat += (table[i][j] - e).powi(2) / e;
        }
    }
    let dof = (bins - 1) * (bins - 1);
    let p_value = statrs::function::gamma::gamma_ur(0.5 * dof as f64, 0.5 * stat);
    Ok(ChiSquareResult { statistic: stat, dof, p_value, min_expected })
}
