//! Reproducible random generation.
//!
//! Every stream is a ChaCha8 generator (`rand_chacha` 0.9.0) seeded with
//! `seed_from_u64(seed)` and positioned on substream `stream_index` via
//! `set_stream`. Standard normals come from `rand_distr` 0.5.1's
//! `StandardNormal` (ziggurat, exact up to floating point). Both crate
//! versions are pinned in the manifest; changing them changes every sampled
//! value.
//!
//! Bulk samplers split the `n` draws into chunks of [`CHUNK_SIZE`]; chunk `i`
//! draws from substream `base + i`, and chunks are concatenated in order, so
//! the output does not depend on the number of workers.

use crate::geometry::{simplex_volume, Point, SimplexVertices, SubspaceBasis, WeightVector};
use crate::distributions::ChiProductSpec;
use crate::{Error, Result};
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

pub const CHUNK_SIZE: usize = 4096;

/// Rejection threshold for nearly dependent Gaussian frames, relative to the
/// largest `|R_ii|`.
const FRAME_DEGENERACY: f64 = 1e-10;

/// One counter-based substream. Single-owner; never shared between threads.
#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    stream_index: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64, stream_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_index);
        Self { seed, stream_index, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    /// The stream `offset` positions further along the substream index.
    pub fn substream(&self, offset: u64) -> RandomStream {
        RandomStream::new(self.seed, self.stream_index.wrapping_add(offset))
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Euclidean norm of `k` standard normals.
    pub fn chi(&mut self, k: u32) -> f64 {
        (0..k).map(|_| self.standard_normal().powi(2)).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamPolicy {
    pub base_stream: u64,
    pub chunk_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub experiment: String,
    pub seed: u64,
    pub stream: StreamPolicy,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalSample {
    pub values: Vec<f64>,
    pub meta: SampleMeta,
}

impl EmpiricalSample {
    /// Wraps values that did not come from a sampler (derived or imported).
    pub fn from_values(values: Vec<f64>, experiment: impl Into<String>) -> Self {
        let n = values.len();
        Self { values, meta: SampleMeta { experiment: experiment.into(), seed: 0, stream: StreamPolicy { base_stream: 0, chunk_size: 0 }, n } }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// One value per row after a `#`-prefixed metadata header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let m = &self.meta;
        writeln!(out, "# experiment={}", m.experiment)?;
        writeln!(out, "# seed={}", m.seed)?;
        writeln!(out, "# base_stream={}", m.stream.base_stream)?;
        writeln!(out, "# chunk_size={}", m.stream.chunk_size)?;
        writeln!(out, "# n={}", m.n)?;
        writeln!(out, "value")?;
        for v in &self.values {
            writeln!(out, "{v:.16e}")?;
        }
        Ok(())
    }
}

/// Runs `draw` on consecutive chunks of substreams of `rs` and concatenates
/// the results in chunk order. `workers <= 1` runs on the calling thread.
pub fn sample_chunked<T, F>(n: usize, rs: &RandomStream, workers: usize, draw: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut RandomStream) -> T + Sync,
{
    let chunks = n.div_ceil(CHUNK_SIZE);
    let run_chunk = |i: usize| -> Vec<T> {
        let mut stream = rs.substream(i as u64);
        let count = CHUNK_SIZE.min(n - i * CHUNK_SIZE);
        (0..count).map(|_| draw(&mut stream)).collect()
    };
    let parts: Vec<Vec<T>> = if workers <= 1 {
        (0..chunks).map(run_chunk).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::input(format!("cannot start {workers} workers: {e}")))?;
        pool.install(|| (0..chunks).into_par_iter().map(run_chunk).collect())
    };
    Ok(parts.into_iter().flatten().collect())
}

fn meta(experiment: String, rs: &RandomStream, n: usize) -> SampleMeta {
    SampleMeta { experiment, seed: rs.seed(), stream: StreamPolicy { base_stream: rs.stream_index(), chunk_size: CHUNK_SIZE }, n }
}

fn check_shape(d: usize, l: usize) -> Result<()> {
    if d == 0 || l == 0 {
        return Err(Error::input("d and l must be at least 1"));
    }
    if l > d {
        return Err(Error::input("l must satisfy l ≤ d"));
    }
    Ok(())
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::input("n must be at least 1"));
    }
    Ok(())
}

/// `d` independent standard normal coordinates.
pub fn gaussian_point(d: usize, rs: &mut RandomStream) -> Point {
    Point::from_vec_unchecked((0..d).map(|_| rs.standard_normal()).collect())
}

/// Draws the vertices `s_i X_i` of one weighted Gaussian simplex.
pub fn weighted_simplex(d: usize, w: &WeightVector, rs: &mut RandomStream) -> SimplexVertices {
    let vertices = w.as_slice().iter().map(|&s| gaussian_point(d, rs).scaled(s)).collect();
    SimplexVertices::new(vertices).expect("weights have at least two entries and l <= d is checked by callers")
}

/// `n` realizations of `|conv(s_0 X_0, ..., s_l X_l)|`.
pub fn sample_weighted_simplex_volumes(d: usize, l: usize, w: &WeightVector, n: usize, rs: &RandomStream, workers: usize) -> Result<EmpiricalSample> {
    check_shape(d, l)?;
    check_n(n)?;
    if w.order() != l {
        return Err(Error::input(format!("expected {} sigmas for l = {l}, got {}", l + 1, w.as_slice().len())));
    }
    let values = sample_chunked(n, rs, workers, |s| simplex_volume(&weighted_simplex(d, w, s)))?;
    Ok(EmpiricalSample { values, meta: meta(format!("weighted_simplex d={d} l={l} sigmas={:?}", w.as_slice()), rs, n) })
}

/// `n` realizations of `|conv(0, X_1, ..., X_l)|`.
pub fn sample_origin_simplex_volumes(d: usize, l: usize, n: usize, rs: &RandomStream, workers: usize) -> Result<EmpiricalSample> {
    check_shape(d, l)?;
    check_n(n)?;
    let values = sample_chunked(n, rs, workers, |s| {
        let others = (0..l).map(|_| gaussian_point(d, s)).collect();
        simplex_volume(&SimplexVertices::with_origin(others).expect("shape checked above"))
    })?;
    Ok(EmpiricalSample { values, meta: meta(format!("origin_simplex d={d} l={l}"), rs, n) })
}

/// One draw of `c * chi_{k_1} * ... * chi_{k_m}`.
pub fn chiprod_draw(spec: &ChiProductSpec, rs: &mut RandomStream) -> f64 {
    spec.dofs().iter().fold(spec.coefficient(), |acc, &k| acc * rs.chi(k))
}

pub fn sample_chiprod(spec: &ChiProductSpec, n: usize, rs: &RandomStream, workers: usize) -> Result<EmpiricalSample> {
    check_n(n)?;
    let values = sample_chunked(n, rs, workers, |s| chiprod_draw(spec, s))?;
    Ok(EmpiricalSample {
        values,
        meta: meta(format!("chi_product c={} dofs={:?}", spec.coefficient(), spec.dofs()), rs, n),
    })
}

/// Orthonormal basis of the span of `l` independent Gaussian points in `R^d`,
/// together with the number of degenerate frames that were redrawn.
pub fn sample_haar_subspace(d: usize, l: usize, rs: &mut RandomStream) -> Result<(SubspaceBasis, u32)> {
    check_shape(d, l)?;
    let mut resamples = 0;
    loop {
        let frame = DMatrix::from_fn(d, l, |_, _| rs.standard_normal());
        let qr = frame.qr();
        let r = qr.r();
        let diag: Vec<f64> = (0..l).map(|i| r[(i, i)].abs()).collect();
        let largest = diag.iter().cloned().fold(0.0, f64::max);
        if largest > 0.0 && diag.iter().all(|&x| x > FRAME_DEGENERACY * largest) {
            return Ok((SubspaceBasis::from_matrix_unchecked(qr.q()), resamples));
        }
        resamples += 1;
    }
}
