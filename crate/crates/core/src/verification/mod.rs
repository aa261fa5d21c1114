//! Seeded Monte Carlo experiments checking the distributional identities.
//!
//! Every experiment draws from fixed substream bases (see the `STREAM_*`
//! constants) so that its report is a pure function of its parameters.
//! Thresholds are fixed: p-values must be at least [`P_THRESHOLD`], moment
//! z-scores at most [`Z_THRESHOLD`] in absolute value, log-CF distances and
//! correlations at most `10/sqrt(n)` and `4/sqrt(n)`.

mod report;
pub mod stats;

pub use report::{PValue, Parameters, Relation, Statistic, VerificationReport};
pub use stats::{
    chi_square_independence, default_t_grid, empirical_log_cf, kolmogorov_survival, ks_test, log_cf_distance, moment_z_scores, pearson_correlation,
    two_sample_ks, ChiSquareResult, KsResult, MomentZ, KS_MIN_VALID_N,
};

use crate::distributions::{chiprod_moment, spec_from_theorem1, spec_with_origin, ChiProductLaw, ChiProductSpec, GridDensity, DEFAULT_GRID_SIZE, DEFAULT_RANGE_QUANTILES};
use crate::geometry::{projection_restriction_determinant, simplex_frame, WeightVector};
use crate::sampling::{
    chiprod_draw, sample_chiprod, sample_chunked, sample_haar_subspace, sample_origin_simplex_volumes, sample_weighted_simplex_volumes, weighted_simplex,
    EmpiricalSample, RandomStream,
};
use crate::{Error, Result};
use std::time::Instant;

pub const P_THRESHOLD: f64 = 1e-3;
pub const Z_THRESHOLD: f64 = 4.0;
pub const LOG_CF_FACTOR: f64 = 10.0;
pub const CORRELATION_FACTOR: f64 = 4.0;
pub const CONTINGENCY_BINS: usize = 10;
pub const MOMENT_ORDERS: [f64; 2] = [1.0, 2.0];

/// Substream base of the primary sample of an experiment.
pub const STREAM_PRIMARY: u64 = 0;
/// Substream base of the independent reference sample.
pub const STREAM_REFERENCE: u64 = 1 << 32;
/// Substream base of independent Haar subspaces.
pub const STREAM_SUBSPACES: u64 = 2 << 32;

/// A chi product CDF that interpolates a fine table inside
/// `[q_lo, q_hi]` quantiles and falls back to direct inversion outside.
pub struct TabulatedCdf {
    law: ChiProductLaw,
    table: GridDensity,
}

impl TabulatedCdf {
    pub fn new(spec: &ChiProductSpec) -> Result<Self> {
        let law = ChiProductLaw::new(spec)?;
        let table = GridDensity::tabulate(&law, DEFAULT_GRID_SIZE, DEFAULT_RANGE_QUANTILES)?;
        Ok(Self { law, table })
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.table.interpolate_cdf(x).unwrap_or_else(|| self.law.cdf(x))
    }
}

fn check_order(d: usize, l: usize, strict: bool) -> Result<()> {
    if d == 0 || l == 0 {
        return Err(Error::input("d and l must be at least 1"));
    }
    if strict && l >= d {
        return Err(Error::input("l must satisfy l < d"));
    }
    if l > d {
        return Err(Error::input("l must satisfy l ≤ d"));
    }
    Ok(())
}

/// Compares `sample` with the law `spec`: KS against the exact CDF,
/// two-sample KS and log-CF distance against an independent chi-product
/// sample, and z-scores of the first two moments.
fn compare_with_law(report: &mut VerificationReport, sample: &EmpiricalSample, spec: &ChiProductSpec, seed: u64, workers: usize) -> Result<()> {
    let n = sample.len();
    let exact = TabulatedCdf::new(spec)?;
    let ks = ks_test(sample, |x| exact.cdf(x))?;
    report.check_p("ks_exact_cdf", ks.p_value, P_THRESHOLD);

    let reference = sample_chiprod(spec, n, &RandomStream::new(seed, STREAM_REFERENCE), workers)?;
    let ks2 = two_sample_ks(sample, &reference)?;
    report.check_p("two_sample_ks_chi_product", ks2.p_value, P_THRESHOLD);
    if !(ks.asymptotic_valid && ks2.asymptotic_valid) {
        report.note(format!("n = {n} < {KS_MIN_VALID_N}: asymptotic KS p-values are unreliable"));
    }

    let moments: Vec<(f64, f64)> = MOMENT_ORDERS.iter().map(|&p| Ok((p, chiprod_moment(spec, p)?))).collect::<Result<_>>()?;
    for m in moment_z_scores(sample, &moments)? {
        report.check(format!("moment_z_p{}", m.p), m.z.abs(), Relation::AtMost, Z_THRESHOLD);
        if m.degenerate {
            report.note(format!("moment p = {}: zero sample variance", m.p));
        }
    }

    let positive: Vec<f64> = sample.values.iter().copied().filter(|&v| v > 0.0).collect();
    if positive.len() < n {
        report.note(format!("{} zero volumes excluded from the log-CF distance", n - positive.len()));
    }
    let dist = log_cf_distance(&EmpiricalSample::from_values(positive, "positive part"), &reference, &default_t_grid())?;
    report.check("log_cf_distance", dist, Relation::AtMost, LOG_CF_FACTOR / (n as f64).sqrt());
    Ok(())
}

/// `|conv(s_0 X_0, ..., s_l X_l)|` against `(1/l!) s_0..s_l sqrt(sum 1/s_i^2) chi_{d-l+1}..chi_d`.
pub fn verify_theorem1(d: usize, l: usize, w: &WeightVector, n: usize, seed: u64, workers: usize) -> Result<VerificationReport> {
    let start = Instant::now();
    check_order(d, l, false)?;
    let spec = spec_from_theorem1(d, l, w)?;
    let mut report = VerificationReport::new("theorem1", Parameters { d, l, sigmas: Some(w.as_slice().to_vec()), n, seed });
    report.law = Some(spec.clone());
    let sample = sample_weighted_simplex_volumes(d, l, w, n, &RandomStream::new(seed, STREAM_PRIMARY), workers)?;
    compare_with_law(&mut report, &sample, &spec, seed, workers)?;
    report.runtime_seconds = Some(start.elapsed().as_secs_f64());
    Ok(report)
}

/// `|conv(0, X_1, ..., X_l)|` against `(1/l!) chi_{d-l+1} ... chi_d`.
pub fn verify_with_origin(d: usize, l: usize, n: usize, seed: u64, workers: usize) -> Result<VerificationReport> {
    let start = Instant::now();
    check_order(d, l, false)?;
    let spec = spec_with_origin(d, l)?;
    let mut report = VerificationReport::new("with_origin", Parameters { d, l, sigmas: None, n, seed });
    report.law = Some(spec.clone());
    let sample = sample_origin_simplex_volumes(d, l, n, &RandomStream::new(seed, STREAM_PRIMARY), workers)?;
    compare_with_law(&mut report, &sample, &spec, seed, workers)?;
    report.runtime_seconds = Some(start.elapsed().as_secs_f64());
    Ok(report)
}

/// `(1/l!) chi_{d-l+1} ... chi_d * |det P_l^W|` with an independent Haar
/// subspace `W` against `(1/l!) chi_1 ... chi_l`.
pub fn verify_projection_identity(d: usize, l: usize, n: usize, seed: u64, workers: usize) -> Result<VerificationReport> {
    let start = Instant::now();
    check_order(d, l, true)?;
    let fact: f64 = (1..=l).map(|k| k as f64).product();
    let upper = ChiProductSpec::new(1.0 / fact, ((d - l + 1) as u32..=d as u32).collect())?;
    let lower = ChiProductSpec::new(1.0 / fact, (1..=l as u32).collect())?;
    let mut report = VerificationReport::new("projection_identity", Parameters { d, l, sigmas: None, n, seed });
    report.law = Some(lower.clone());

    let draws = sample_chunked(n, &RandomStream::new(seed, STREAM_PRIMARY), workers, |rs| {
        let chi = chiprod_draw(&upper, rs);
        let (basis, resamples) = sample_haar_subspace(d, l, rs).expect("shape checked above");
        let factor = projection_restriction_determinant(&basis, l).expect("basis has l columns");
        (chi, factor, resamples)
    })?;
    let resamples: u32 = draws.iter().map(|t| t.2).sum();
    let max_factor = draws.iter().map(|t| t.1).fold(0.0, f64::max);
    let exceed = draws.iter().filter(|t| t.0 * t.1 > t.0).count();
    report.check("max_projection_factor", max_factor, Relation::AtMost, 1.0);
    report.check("projected_values_above_unprojected", exceed as f64, Relation::AtMost, 0.0);
    if resamples > 0 {
        report.note(format!("{resamples} degenerate Gaussian frames redrawn"));
    }

    let projected = EmpiricalSample::from_values(draws.iter().map(|t| t.0 * t.1).collect(), "projected chi product");
    let reference = sample_chiprod(&lower, n, &RandomStream::new(seed, STREAM_REFERENCE), workers)?;
    let ks2 = two_sample_ks(&projected, &reference)?;
    report.check_p("two_sample_ks_chi_product", ks2.p_value, P_THRESHOLD);

    let exact = TabulatedCdf::new(&lower)?;
    let ks = ks_test(&projected, |x| exact.cdf(x))?;
    report.check_p("ks_exact_cdf", ks.p_value, P_THRESHOLD);
    let moments: Vec<(f64, f64)> = MOMENT_ORDERS.iter().map(|&p| Ok((p, chiprod_moment(&lower, p)?))).collect::<Result<_>>()?;
    for m in moment_z_scores(&projected, &moments)? {
        report.check(format!("moment_z_p{}", m.p), m.z.abs(), Relation::AtMost, Z_THRESHOLD);
    }
    report.runtime_seconds = Some(start.elapsed().as_secs_f64());
    Ok(report)
}

/// Necessary conditions for the direction space `W_l` of a weighted
/// Gaussian simplex being Haar distributed and independent of its volume.
pub fn verify_grassmannian_lemma(d: usize, l: usize, w: &WeightVector, n: usize, seed: u64, workers: usize) -> Result<VerificationReport> {
    let start = Instant::now();
    check_order(d, l, true)?;
    if w.order() != l {
        return Err(Error::input(format!("expected {} sigmas for l = {l}, got {}", l + 1, w.as_slice().len())));
    }
    let min_n = CONTINGENCY_BINS * CONTINGENCY_BINS * 5;
    if n < min_n {
        return Err(Error::input(format!("the independence test needs n >= {min_n}")));
    }
    let mut report = VerificationReport::new("grassmannian_lemma", Parameters { d, l, sigmas: Some(w.as_slice().to_vec()), n, seed });
    report.note("correlation, binned chi-square and split-KS are necessary conditions for independence, not a proof of it");

    let draws = sample_chunked(n, &RandomStream::new(seed, STREAM_PRIMARY), workers, |rs| {
        let (volume, basis) = simplex_frame(&weighted_simplex(d, w, rs));
        let factor = basis.map_or(0.0, |b| projection_restriction_determinant(&b, l).expect("basis has l columns"));
        (volume, factor)
    })?;
    let kept: Vec<(f64, f64)> = draws.into_iter().filter(|&(v, f)| v > 0.0 && f > 0.0).collect();
    let excluded = n - kept.len();
    if excluded > 0 {
        report.note(format!("{excluded} draws with zero volume or zero projection factor excluded"));
    }
    let m = kept.len() as f64;

    let log_v: Vec<f64> = kept.iter().map(|t| t.0.ln()).collect();
    let log_f: Vec<f64> = kept.iter().map(|t| t.1.ln()).collect();
    let r = pearson_correlation(&log_v, &log_f)?;
    report.check("abs_correlation_log_volume_log_factor", r.abs(), Relation::AtMost, CORRELATION_FACTOR / m.sqrt());

    let volumes: Vec<f64> = kept.iter().map(|t| t.0).collect();
    let factors: Vec<f64> = kept.iter().map(|t| t.1).collect();
    let chi = chi_square_independence(&volumes, &factors, CONTINGENCY_BINS)?;
    report.check_p("chi_square_independence", chi.p_value, P_THRESHOLD);
    report.check("chi_square_min_expected_count", chi.min_expected, Relation::AtLeast, 5.0);

    let mut order: Vec<usize> = (0..kept.len()).collect();
    order.sort_by(|&i, &j| volumes[i].total_cmp(&volumes[j]));
    let half = order.len() / 2;
    let low = EmpiricalSample::from_values(order[..half].iter().map(|&i| factors[i]).collect(), "factors, low volume");
    let high = EmpiricalSample::from_values(order[half..].iter().map(|&i| factors[i]).collect(), "factors, high volume");
    report.check_p("split_ks_low_vs_high_volume", two_sample_ks(&low, &high)?.p_value, P_THRESHOLD);

    let haar = sample_chunked(kept.len(), &RandomStream::new(seed, STREAM_SUBSPACES), workers, |rs| {
        let (b, _) = sample_haar_subspace(d, l, rs).expect("shape checked above");
        projection_restriction_determinant(&b, l).expect("basis has l columns")
    })?;
    let uniform = two_sample_ks(&EmpiricalSample::from_values(factors, "simplex factors"), &EmpiricalSample::from_values(haar, "haar factors"))?;
    report.check_p("two_sample_ks_haar_factor", uniform.p_value, P_THRESHOLD);
    report.runtime_seconds = Some(start.elapsed().as_secs_f64());
    Ok(report)
}

/// The seeded experiments used as acceptance checks.
pub fn standard_suite(workers: usize) -> Result<Vec<VerificationReport>> {
    let w = |v: &[f64]| WeightVector::new(v.to_vec());
    Ok(vec![
        verify_theorem1(3, 2, &w(&[0.5, 1.0, 2.0])?, 200_000, 42, workers)?,
        verify_theorem1(1, 1, &w(&[1.0, 1.0])?, 100_000, 1, workers)?,
        verify_with_origin(4, 3, 200_000, 7, workers)?,
        verify_projection_identity(4, 2, 100_000, 11, workers)?,
        verify_grassmannian_lemma(3, 2, &w(&[1.0, 2.0, 3.0])?, 100_000, 3, workers)?,
    ])
}
