//! Density and CDF of a chi product by Fourier inversion on the log scale.
//!
//! `Y = log V` is a sum of independent `log chi_k` terms, so its
//! characteristic function is a product of gamma ratios. Inverting it with
//! the trapezoid rule gives the density of `Y` up to an aliasing error
//! (the density periodized with period `2 pi / h`) and a truncation error.
//!
//! Inversion runs along the shifted line `beta + it` of the Mellin
//! transform: the inverted function is the exponentially tilted density
//! `e^{beta y} f_Y(y) / E[V^beta]`, whose CF is
//! `psi(t) = E[V^{beta+it}] / E[V^beta]`. With `beta < 0` the absolute error
//! of the density of `V` near zero scales like `x^{-beta-1}` instead of
//! `1/x`. For the CDF the tilted distribution function
//! `e^{beta y} F(y)` (`beta < 0`) or survival function `e^{beta y} S(y)`
//! (`beta > 0`) is inverted, whose transform is `psi(t) / (|beta| -/+ it)`.
//!
//! The aliasing window `[lo, hi]` comes from Chernoff bounds on the tilted
//! law; the step is `h = 2 pi / (hi - lo)`; the series is truncated at the
//! first node with `|psi| < TRUNCATION_TOL` (`|psi|` decreases in `|t|`).

use super::ChiProductSpec;
use crate::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

/// Relative mass allowed outside the aliasing window.
const WINDOW_TOL: f64 = 1e-18;
const WINDOW_MARGIN: f64 = 1.0;
/// Stop the trapezoid sum at the first node with `|psi(t)|` below this.
const TRUNCATION_TOL: f64 = 1e-16;
const MAX_NODES: usize = 2_000_000;
/// Phases are recomputed exactly every this many nodes.
const PHASE_RESYNC: usize = 32;

pub const DEFAULT_GRID_SIZE: usize = 16_384;
pub const DEFAULT_RANGE_QUANTILES: (f64, f64) = (1e-9, 1.0 - 1e-9);

const QUANTILE_TOL: f64 = 1e-11;

/// Trapezoid nodes of one tilted inversion.
#[derive(Debug, Clone)]
struct TiltedInversion {
    beta: f64,
    ln_m_beta: f64,
    step: f64,
    lo: f64,
    hi: f64,
    /// `psi(j h)` for `j = 1..=N`; `psi(0) = 1`.
    psi: Vec<Complex64>,
    /// Estimate of `sum_{j > N} |psi(j h)|`.
    truncated_mass: f64,
}

impl TiltedInversion {
    fn new(spec: &ChiProductSpec, beta: f64) -> Result<Self> {
        let kmin = spec.min_dof() as f64;
        let ln_tol = WINDOW_TOL.ln();
        let ln_m_beta = spec.ln_mellin(beta);

        // P(Y < a) under the tilted law <= exp((beta - g) a + lnM(g) - lnM(beta)), -kmin < g < beta
        let mut lo = f64::NEG_INFINITY;
        for i in 1..40 {
            let g = beta - (beta + kmin) * (i as f64 / 40.0);
            let a = (ln_tol - spec.ln_mellin(g) + ln_m_beta) / (beta - g);
            lo = lo.max(a);
        }
        // P(Y > b) under the tilted law <= exp((beta - g) b + lnM(g) - lnM(beta)), g > beta
        let mut hi = f64::INFINITY;
        for e in -2..8 {
            let g = beta + 2f64.powi(e);
            let b = (spec.ln_mellin(g) - ln_m_beta - ln_tol) / (g - beta);
            hi = hi.min(b);
        }
        // the tilted CDF / survival function decays only like e^{beta y} on one side
        let edge = (ln_tol + ln_m_beta) / beta;
        if beta < 0.0 {
            hi = hi.max(edge);
        } else {
            lo = lo.min(edge);
        }
        let lo = lo - WINDOW_MARGIN;
        let hi = hi + WINDOW_MARGIN;
        let step = 2.0 * PI / (hi - lo);

        let mut psi = Vec::new();
        let truncated_mass = loop {
            let t = (psi.len() + 1) as f64 * step;
            let value = (spec.ln_mellin_complex(Complex64::new(beta, t)) - ln_m_beta).exp();
            let norm = value.norm();
            psi.push(value);
            if norm < TRUNCATION_TOL {
                let prev = psi.get(psi.len().wrapping_sub(2)).map_or(1.0, |p| p.norm());
                let ratio = if prev > 0.0 { (norm / prev).min(0.999) } else { 0.0 };
                break norm * ratio / (1.0 - ratio);
            }
            if psi.len() >= MAX_NODES {
                return Err(Error::Numerical {
                    message: "characteristic function did not decay to the truncation tolerance".into(),
                    diagnostics: vec![
                        ("beta".into(), beta),
                        ("t_max".into(), t),
                        ("abs_psi_at_t_max".into(), norm),
                        ("tolerance".into(), TRUNCATION_TOL),
                        ("step".into(), step),
                    ],
                });
            }
        };
        Ok(Self { beta, ln_m_beta, step, lo, hi, psi, truncated_mass })
    }

    /// `sum_j weight(j) * Re(psi_j e^{-i t_j y})` for `j >= 1`.
    fn series(&self, y: f64, weight: impl Fn(f64) -> Complex64) -> f64 {
        let h = self.step;
        let rot = Complex64::from_polar(1.0, -h * y);
        let mut phase = Complex64::new(1.0, 0.0);
        let mut acc = 0.0;
        for (idx, psi) in self.psi.iter().enumerate() {
            let j = idx + 1;
            if j % PHASE_RESYNC == 0 {
                phase = Complex64::from_polar(1.0, -(j as f64) * h * y);
            } else {
                phase *= rot;
            }
            acc += (psi * phase * weight(j as f64 * h)).re;
        }
        acc
    }

    /// Tilted density `e^{beta y} f_Y(y) / E[V^beta]`.
    fn tilted_density(&self, y: f64) -> f64 {
        let h = self.step;
        h / (2.0 * PI) * (1.0 + 2.0 * self.series(y, |_| Complex64::new(1.0, 0.0)))
    }

    /// `e^{beta y} F(y) / E[V^beta]` for `beta < 0`, `e^{beta y} S(y) / E[V^beta]` for `beta > 0`.
    fn tilted_tail(&self, y: f64) -> f64 {
        let h = self.step;
        let a = self.beta.abs();
        let sign = self.beta.signum();
        let s = self.series(y, |t| Complex64::new(a, sign * t).inv());
        h / (2.0 * PI) * (1.0 / a + 2.0 * s)
    }

    fn abs_psi_sum(&self) -> f64 {
        self.psi.iter().map(|p| p.norm()).sum()
    }
}

/// A chi product law prepared for repeated density / CDF evaluation.
#[derive(Debug, Clone)]
pub struct ChiProductLaw {
    spec: ChiProductSpec,
    left: TiltedInversion,
    right: TiltedInversion,
    /// Switch from `F` to `1 - S` at this log-abscissa.
    pivot: f64,
}

impl ChiProductLaw {
    pub fn new(spec: &ChiProductSpec) -> Result<Self> {
        let kmin = spec.min_dof() as f64;
        let beta_left = -(0.5 * kmin).min(1.0);
        let left = TiltedInversion::new(spec, beta_left)?;
        let right = TiltedInversion::new(spec, 1.0)?;
        let delta = 1e-4;
        let pivot = (spec.ln_mellin(delta) - spec.ln_mellin(-delta)) / (2.0 * delta);
        Ok(Self { spec: spec.clone(), left, right, pivot })
    }

    pub fn spec(&self) -> &ChiProductSpec {
        &self.spec
    }

    /// Range of `log V` outside of which the law has negligible mass.
    pub fn log_support(&self) -> (f64, f64) {
        (self.left.lo.max(self.right.lo), self.left.hi.min(self.right.hi))
    }

    /// Number of characteristic-function nodes used (left tilt, right tilt).
    pub fn node_counts(&self) -> (usize, usize) {
        (self.left.psi.len(), self.right.psi.len())
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if !(x > 0.0) || !x.is_finite() {
            return 0.0;
        }
        let y = x.ln();
        if y < self.left.lo || y > self.left.hi {
            return 0.0;
        }
        let scale = ((-self.left.beta - 1.0) * y + self.left.ln_m_beta).exp();
        (scale * self.left.tilted_density(y)).max(0.0)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if !(x > 0.0) {
            return 0.0;
        }
        if x == f64::INFINITY {
            return 1.0;
        }
        let y = x.ln();
        let value = if y <= self.pivot {
            if y < self.left.lo {
                return 0.0;
            }
            ((-self.left.beta * y + self.left.ln_m_beta).exp() * self.left.tilted_tail(y)).max(0.0)
        } else {
            if y > self.right.hi {
                return 1.0;
            }
            let survival = (-self.right.beta * y + self.right.ln_m_beta).exp() * self.right.tilted_tail(y);
            1.0 - survival.max(0.0)
        };
        value.clamp(0.0, 1.0)
    }

    /// Inverse of [`cdf`](Self::cdf) by bisection on the log scale.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::input(format!("quantile level must lie in (0, 1), got {q}")));
        }
        let (mut lo, mut hi) = (self.left.lo.min(self.right.lo), self.left.hi.max(self.right.hi));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let c = self.cdf(mid.exp());
            if (c - q).abs() <= QUANTILE_TOL {
                return Ok(mid.exp());
            }
            if c < q {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 4.0 * f64::EPSILON * mid.abs().max(1.0) {
                break;
            }
        }
        Ok((0.5 * (lo + hi)).exp())
    }

    /// Rough bound on the absolute density error at `x`.
    fn pdf_error_bound(&self, x: f64) -> f64 {
        let left = &self.left;
        let y = x.ln();
        let scale = ((-left.beta - 1.0) * y + left.ln_m_beta).exp();
        let rounding = PHASE_RESYNC as f64 * f64::EPSILON * (1.0 + 2.0 * left.abs_psi_sum());
        scale * left.step / (2.0 * PI) * (2.0 * left.truncated_mass + rounding)
    }
}

/// Density and CDF of a chi product tabulated on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDensity {
    pub spec: ChiProductSpec,
    pub grid: Vec<f64>,
    pub pdf: Vec<f64>,
    pub cdf: Vec<f64>,
    /// Estimated maximum absolute error of `pdf`.
    pub tolerance: f64,
}

impl GridDensity {
    pub fn tabulate(law: &ChiProductLaw, grid_size: usize, range_quantiles: (f64, f64)) -> Result<Self> {
        let (q_lo, q_hi) = range_quantiles;
        if grid_size < 64 {
            return Err(Error::input(format!("grid size must be at least 64, got {grid_size}")));
        }
        if !(q_lo > 0.0 && q_lo < q_hi && q_hi < 1.0) {
            return Err(Error::input(format!("need 0 < q_lo < q_hi < 1, got ({q_lo}, {q_hi})")));
        }
        let x_lo = law.quantile(q_lo)?;
        let x_hi = law.quantile(q_hi)?;
        let dx = (x_hi - x_lo) / (grid_size - 1) as f64;
        let grid: Vec<f64> = (0..grid_size).map(|i| if i + 1 == grid_size { x_hi } else { x_lo + i as f64 * dx }).collect();
        let pdf: Vec<f64> = grid.iter().map(|&x| law.pdf(x)).collect();
        let mut cdf: Vec<f64> = grid.iter().map(|&x| law.cdf(x)).collect();
        let mut running = 0.0f64;
        for c in cdf.iter_mut() {
            running = running.max(*c);
            *c = running;
        }
        let tolerance = grid.iter().map(|&x| law.pdf_error_bound(x)).fold(0.0, f64::max);
        Ok(Self { spec: law.spec().clone(), grid, pdf, cdf, tolerance })
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Trapezoid integral of the tabulated density.
    pub fn mass(&self) -> f64 {
        self.trapezoid(|_, f| f)
    }

    /// Trapezoid integral of `x^p f(x)` over the grid.
    pub fn partial_moment(&self, p: f64) -> f64 {
        self.trapezoid(|x, f| x.powf(p) * f)
    }

    fn trapezoid(&self, g: impl Fn(f64, f64) -> f64) -> f64 {
        self.grid
            .windows(2)
            .zip(self.pdf.windows(2))
            .map(|(x, f)| 0.5 * (x[1] - x[0]) * (g(x[0], f[0]) + g(x[1], f[1])))
            .sum()
    }

    /// CDF by linear interpolation, `None` outside the tabulated range.
    pub fn interpolate_cdf(&self, x: f64) -> Option<f64> {
        let (first, last) = (*self.grid.first()?, *self.grid.last()?);
        if !(x >= first && x <= last) {
            return None;
        }
        let idx = self.grid.partition_point(|&g| g <= x).clamp(1, self.grid.len() - 1);
        let (x0, x1) = (self.grid[idx - 1], self.grid[idx]);
        let (c0, c1) = (self.cdf[idx - 1], self.cdf[idx]);
        let w = if x1 > x0 { (x - x0) / (x1 - x0) } else { 0.0 };
        Some(c0 + w * (c1 - c0))
    }

    /// Writes `x,pdf,cdf` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "x,pdf,cdf")?;
        for ((x, f), c) in self.grid.iter().zip(&self.pdf).zip(&self.cdf) {
            writeln!(out, "{x:.16e},{f:.16e},{c:.16e}")?;
        }
        Ok(())
    }
}

/// Tabulates the density and CDF of `spec` between its `q_lo` and `q_hi`
/// quantiles.
pub fn chiprod_density(spec: &ChiProductSpec, grid_size: usize, range_quantiles: (f64, f64)) -> Result<GridDensity> {
    GridDensity::tabulate(&ChiProductLaw::new(spec)?, grid_size, range_quantiles)
}

pub fn chiprod_cdf(spec: &ChiProductSpec, x: f64) -> Result<f64> {
    Ok(ChiProductLaw::new(spec)?.cdf(x))
}

pub fn chiprod_quantile(spec: &ChiProductSpec, q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::input(format!("quantile level must lie in (0, 1), got {q}")));
    }
    ChiProductLaw::new(spec)?.quantile(q)
}

#[cfg(test)]
mod tests {
    use super::super::{chi_cdf, chi_pdf, chiprod_moment};
    use super::*;
    use approx::assert_relative_eq;

    fn spec(c: f64, dofs: &[u32]) -> ChiProductSpec {
        ChiProductSpec::new(c, dofs.to_vec()).unwrap()
    }

    #[test]
    fn rayleigh_density_and_cdf() {
        let law = ChiProductLaw::new(&spec(1.0, &[2])).unwrap();
        assert_relative_eq!(law.pdf(1.0), 0.606_530_659_712_633_4, max_relative = 1e-12);
        for &x in &[1e-4, 0.01, 0.3, 1.0, 2.2, 4.0, 7.5] {
            let want = 1.0 - (-0.5 * x * x as f64).exp();
            assert!((law.cdf(x) - want).abs() < 1e-12, "x={x}: {} vs {want}", law.cdf(x));
        }
    }

    #[test]
    fn single_chi_matches_closed_form() {
        for k in [1u32, 2, 3, 5, 10] {
            let law = ChiProductLaw::new(&spec(1.0, &[k])).unwrap();
            let grid = GridDensity::tabulate(&law, 2048, DEFAULT_RANGE_QUANTILES).unwrap();
            let sup = grid.grid.iter().zip(&grid.pdf).map(|(&x, &f)| (f - chi_pdf(k, x)).abs()).fold(0.0, f64::max);
            assert!(sup <= 1e-8, "k={k}: sup error {sup:e}");
            for &x in &[0.2, 1.0, 3.0] {
                assert!((law.cdf(x) - chi_cdf(k, x)).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        let law = ChiProductLaw::new(&spec(0.4, &[2, 3, 7])).unwrap();
        for &q in &[1e-6, 0.01, 0.25, 0.5, 0.9, 0.999_999] {
            let x = law.quantile(q).unwrap();
            assert!((law.cdf(x) - q).abs() <= 1e-9, "q={q}");
        }
        assert!(law.quantile(0.0).is_err());
        assert!(law.quantile(1.0).is_err());
        assert!(chiprod_quantile(&spec(1.0, &[1]), 1.5).is_err());
    }

    #[test]
    fn cdf_is_monotone() {
        let law = ChiProductLaw::new(&spec(1.3, &[1, 1, 4])).unwrap();
        let mut prev = 0.0;
        for i in 1..2000 {
            let x = i as f64 * 0.005;
            let c = law.cdf(x);
            assert!(c >= prev - 1e-13, "x={x}: {c} < {prev}");
            prev = c;
        }
    }

    #[test]
    fn grid_mass_and_moments() {
        let s = spec(1.0, &[2, 3]);
        let g = chiprod_density(&s, DEFAULT_GRID_SIZE, DEFAULT_RANGE_QUANTILES).unwrap();
        assert!((g.mass() - 1.0).abs() < 1e-6, "mass {}", g.mass());
        let covered = g.cdf.last().unwrap() - g.cdf[0];
        assert!((g.mass() - covered).abs() < 1e-6);
        for p in [1.0, 2.0] {
            let exact = chiprod_moment(&s, p).unwrap();
            assert_relative_eq!(g.partial_moment(p), exact, max_relative = 1e-5);
        }
        assert!(g.pdf.iter().all(|&f| f >= 0.0));
        assert!(g.cdf.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn bad_grid_requests() {
        let s = spec(1.0, &[2]);
        assert!(chiprod_density(&s, 10, DEFAULT_RANGE_QUANTILES).is_err());
        assert!(chiprod_density(&s, 128, (0.5, 0.4)).is_err());
        assert!(chiprod_density(&s, 128, (0.0, 0.4)).is_err());
    }

    #[test]
    fn interpolation_stays_in_range() {
        let g = chiprod_density(&spec(1.0, &[3]), 256, (0.01, 0.99)).unwrap();
        assert!(g.interpolate_cdf(g.grid[0] * 0.5).is_none());
        let mid = g.interpolate_cdf(0.5 * (g.grid[10] + g.grid[11])).unwrap();
        assert!(mid >= g.cdf[10] && mid <= g.cdf[11]);
        assert_eq!(g.interpolate_cdf(*g.grid.last().unwrap()), Some(*g.cdf.last().unwrap()));
    }
}
