//! Chi variables and scaled products of independent chi variables.
//!
//! A [`ChiProductSpec`] `(c, [k_1, ..., k_m])` stands for the law of
//! `c * chi_{k_1} * ... * chi_{k_m}`. Everything about such a law follows from
//! its Mellin transform
//!
//! ```text
//! E[V^s] = c^s * prod_k 2^{s/2} Gamma((k + s)/2) / Gamma(k/2),   Re s > -min k
//! ```
//!
//! which gives the moments (real `s`), the characteristic function of
//! `log V` (`s = it`) and, through [`inversion`], the density and CDF.

mod inversion;

pub use inversion::{chiprod_cdf, chiprod_density, chiprod_quantile, ChiProductLaw, GridDensity, DEFAULT_GRID_SIZE, DEFAULT_RANGE_QUANTILES};

use crate::geometry::{scale_coefficient, WeightVector};
use crate::special::{ln_gamma, ln_gamma_complex};
use crate::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;

/// `coefficient * chi_{dofs[0]} * chi_{dofs[1]} * ...` with independent factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiProductSpec {
    coefficient: f64,
    dofs: Vec<u32>,
}

impl ChiProductSpec {
    pub fn new(coefficient: f64, dofs: Vec<u32>) -> Result<Self> {
        if !(coefficient.is_finite() && coefficient > 0.0) {
            return Err(Error::domain("chi product coefficient must be positive"));
        }
        if dofs.is_empty() {
            return Err(Error::input("chi product needs at least one factor"));
        }
        if dofs.contains(&0) {
            return Err(Error::domain("chi degrees of freedom must be at least 1"));
        }
        Ok(Self { coefficient, dofs })
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    pub fn dofs(&self) -> &[u32] {
        &self.dofs
    }

    pub fn min_dof(&self) -> u32 {
        *self.dofs.iter().min().expect("dofs is non-empty")
    }

    /// `ln E[V^s]` for real `s > -min_dof`.
    pub fn ln_mellin(&self, s: f64) -> f64 {
        let mut acc = s * self.coefficient.ln();
        for &k in &self.dofs {
            let k = k as f64;
            acc += 0.5 * s * LN_2 + ln_gamma(0.5 * (k + s)) - ln_gamma(0.5 * k);
        }
        acc
    }

    /// `ln E[V^s]` for complex `s` with `Re s > -min_dof`.
    pub fn ln_mellin_complex(&self, s: Complex64) -> Complex64 {
        let mut acc = s * self.coefficient.ln();
        for &k in &self.dofs {
            let k = k as f64;
            acc += s * (0.5 * LN_2) + ln_gamma_complex((s + k) * 0.5) - ln_gamma(0.5 * k);
        }
        acc
    }
}

fn check_order(d: usize, l: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::input("d must be at least 1"));
    }
    if l == 0 {
        return Err(Error::input("l must be at least 1"));
    }
    if l > d {
        return Err(Error::input("l must satisfy l ≤ d"));
    }
    Ok(())
}

fn check_weights(l: usize, w: &WeightVector) -> Result<()> {
    if w.order() != l {
        return Err(Error::input(format!("expected {} sigmas for l = {l}, got {}", l + 1, w.as_slice().len())));
    }
    Ok(())
}

/// `E chi_k^p = 2^{p/2} Gamma((k + p)/2) / Gamma(k/2)`.
pub fn chi_moment(k: u32, p: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::domain("chi degrees of freedom must be at least 1"));
    }
    let kf = k as f64;
    if !(p > -kf) {
        return Err(Error::domain(format!("E chi_{k}^p is infinite for p = {p} <= -{k}")));
    }
    if p == 0.0 {
        return Ok(1.0);
    }
    Ok((0.5 * p * LN_2 + ln_gamma(0.5 * (kf + p)) - ln_gamma(0.5 * kf)).exp())
}

/// `E[V^p]` for `V ~ spec`.
pub fn chiprod_moment(spec: &ChiProductSpec, p: f64) -> Result<f64> {
    let kmin = spec.min_dof() as f64;
    if !(p > -kmin) {
        return Err(Error::domain(format!("moment of order {p} does not exist (need p > -{kmin})")));
    }
    if p == 0.0 {
        return Ok(1.0);
    }
    let mut acc = spec.coefficient.powf(p);
    for &k in &spec.dofs {
        acc *= chi_moment(k, p)?;
    }
    Ok(acc)
}

/// Exact `p`-th moment of `|conv(s_0 X_0, ..., s_l X_l)|` for standard
/// Gaussian `X_i` in `R^d`.
pub fn weighted_volume_moment(d: usize, l: usize, w: &WeightVector, p: f64) -> Result<f64> {
    check_order(d, l)?;
    check_weights(l, w)?;
    let lowest = (d - l + 1) as f64;
    if !(p > -lowest) {
        return Err(Error::domain(format!("moment of order {p} does not exist (need p > -{lowest})")));
    }
    if p == 0.0 {
        return Ok(1.0);
    }
    let s = w.as_slice();
    let ln_fact: f64 = (1..=l).map(|k| (k as f64).ln()).sum();
    let ln_prod: f64 = s.iter().map(|x| x.ln()).sum();
    let inv_sq: f64 = s.iter().map(|x| 1.0 / (x * x)).sum();
    let ln_base = 0.5 * l as f64 * LN_2 + ln_prod - ln_fact + 0.5 * inv_sq.ln();
    let mut ln_moment = p * ln_base;
    for i in (d - l + 1)..=d {
        let i = i as f64;
        ln_moment += ln_gamma(0.5 * (i + p)) - ln_gamma(0.5 * i);
    }
    Ok(ln_moment.exp())
}

/// Unweighted special case:
/// `[2^{l/2} sqrt(l+1) / l!]^p * prod_{i=d-l+1}^{d} Gamma((i+p)/2) / Gamma(i/2)`.
pub fn miles_moment(d: usize, l: usize, p: f64) -> Result<f64> {
    check_order(d, l)?;
    let lowest = (d - l + 1) as f64;
    if !(p > -lowest) {
        return Err(Error::domain(format!("moment of order {p} does not exist (need p > -{lowest})")));
    }
    let fact: f64 = (1..=l).map(|k| k as f64).product();
    let base = 2f64.powf(0.5 * l as f64) * ((l + 1) as f64).sqrt() / fact;
    let mut ratio = 1.0;
    for i in (d - l + 1)..=d {
        let i = i as f64;
        ratio *= (ln_gamma(0.5 * (i + p)) - ln_gamma(0.5 * i)).exp();
    }
    Ok(base.powf(p) * ratio)
}

/// The chi product law of `|conv(s_0 X_0, ..., s_l X_l)|`:
/// coefficient `scale_coefficient(w) / l!`, dofs `d-l+1, ..., d`.
pub fn spec_from_theorem1(d: usize, l: usize, w: &WeightVector) -> Result<ChiProductSpec> {
    check_order(d, l)?;
    check_weights(l, w)?;
    let fact: f64 = (1..=l).map(|k| k as f64).product();
    ChiProductSpec::new(scale_coefficient(w) / fact, ((d - l + 1) as u32..=d as u32).collect())
}

/// The law of `|conv(0, X_1, ..., X_l)|`: `(1/l!) chi_{d-l+1} ... chi_d`.
pub fn spec_with_origin(d: usize, l: usize) -> Result<ChiProductSpec> {
    check_order(d, l)?;
    let fact: f64 = (1..=l).map(|k| k as f64).product();
    ChiProductSpec::new(1.0 / fact, ((d - l + 1) as u32..=d as u32).collect())
}

/// Characteristic function of `log V` at `t`:
/// `c^{it} prod_k 2^{it/2} Gamma((k + it)/2) / Gamma(k/2)`.
pub fn chiprod_log_cf(spec: &ChiProductSpec, t: f64) -> Complex64 {
    if t == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    spec.ln_mellin_complex(Complex64::new(0.0, t)).exp()
}

/// Density of `chi_k` at `x`.
pub fn chi_pdf(k: u32, x: f64) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    let kf = k as f64;
    if x == 0.0 {
        return if k == 1 { (2.0 / std::f64::consts::PI).sqrt() } else { 0.0 };
    }
    ((kf - 1.0) * x.ln() - 0.5 * x * x - (0.5 * kf - 1.0) * LN_2 - ln_gamma(0.5 * kf)).exp()
}

/// CDF of `chi_k` at `x`: the regularized lower incomplete gamma
/// `P(k/2, x^2/2)`.
pub fn chi_cdf(k: u32, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    statrs::function::gamma::gamma_lr(0.5 * k as f64, 0.5 * x * x)
}
