//! Volumes of simplices and parallelotopes, the covariance of the edge
//! vectors of a weighted Gaussian simplex, and projection factors of
//! subspaces.
//!
//! All matrices are dense and small. Volumes of `l`-dimensional objects in
//! `R^d` are computed from the thin QR factorization of the `d x l` edge
//! matrix `A`: `sqrt(det(A^T A)) = |prod diag(R)|`.

use crate::special::ln_gamma;
use crate::{Error, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Edge matrices whose normalized Gram determinant falls below this are
/// treated as affinely dependent.
pub const DEGENERACY_THRESHOLD: f64 = 1e-24;

/// Maximum deviation of `B^T B` from the identity accepted for an
/// orthonormal basis.
pub const ORTHONORMAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::input("a point needs at least one coordinate"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::input("point coordinates must be finite"));
        }
        Ok(Self { coords })
    }

    /// Builds a point without validation. Callers guarantee finiteness.
    pub(crate) fn from_vec_unchecked(coords: Vec<f64>) -> Self {
        Self { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn scaled(&self, factor: f64) -> Point {
        Point { coords: self.coords.iter().map(|c| c * factor).collect() }
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Self {
        p.coords
    }
}

/// The `l + 1` vertices of an `l`-simplex in `R^d`.
///
/// When `includes_origin` is set, vertex 0 is the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexVertices {
    vertices: Vec<Point>,
    includes_origin: bool,
}

impl SimplexVertices {
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        Self::validate(&vertices)?;
        Ok(Self { vertices, includes_origin: false })
    }

    /// Prepends the origin to `others`.
    pub fn with_origin(others: Vec<Point>) -> Result<Self> {
        let d = others.first().map(Point::dim).ok_or_else(|| Error::input("need at least one vertex besides the origin"))?;
        let mut vertices = Vec::with_capacity(others.len() + 1);
        vertices.push(Point::from_vec_unchecked(vec![0.0; d]));
        vertices.extend(others);
        Self::validate(&vertices)?;
        Ok(Self { vertices, includes_origin: true })
    }

    fn validate(vertices: &[Point]) -> Result<()> {
        if vertices.len() < 2 {
            return Err(Error::input("a simplex needs at least two vertices"));
        }
        let d = vertices[0].dim();
        if vertices.iter().any(|v| v.dim() != d) {
            return Err(Error::input("all simplex vertices must have the same dimension"));
        }
        let l = vertices.len() - 1;
        if l > d {
            return Err(Error::input(format!("{} vertices cannot span a simplex in R^{d}", vertices.len())));
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn includes_origin(&self) -> bool {
        self.includes_origin
    }

    /// Intrinsic dimension `l`.
    pub fn order(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn ambient_dim(&self) -> usize {
        self.vertices[0].dim()
    }

    /// `d x l` matrix with columns `x_i - x_0`.
    pub fn edge_matrix(&self) -> DMatrix<f64> {
        let base = self.vertices[0].coords();
        let d = base.len();
        DMatrix::from_fn(d, self.order(), |r, c| self.vertices[c + 1].coords()[r] - base[r])
    }
}

/// Positive vertex weights `s_0, ..., s_l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(sigmas: Vec<f64>) -> Result<Self> {
        if sigmas.len() < 2 {
            return Err(Error::input("at least two sigmas are required"));
        }
        if sigmas.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::domain("sigmas must be positive"));
        }
        Ok(Self(sigmas))
    }

    /// `l + 1` unit weights.
    pub fn ones(l: usize) -> Self {
        Self(vec![1.0; l + 1])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Simplex order `l` (one less than the number of weights).
    pub fn order(&self) -> usize {
        self.0.len() - 1
    }
}

impl TryFrom<Vec<f64>> for WeightVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<WeightVector> for Vec<f64> {
    fn from(w: WeightVector) -> Self {
        w.0
    }
}

/// A `d x l` matrix with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis {
    basis: DMatrix<f64>,
}

impl SubspaceBasis {
    pub fn new(basis: DMatrix<f64>) -> Result<Self> {
        if basis.ncols() == 0 || basis.ncols() > basis.nrows() {
            return Err(Error::input(format!("a {}x{} matrix cannot be a subspace basis", basis.nrows(), basis.ncols())));
        }
        let gram = basis.transpose() * &basis;
        let dev = (gram - DMatrix::identity(basis.ncols(), basis.ncols())).abs().max();
        if dev > ORTHONORMAL_TOL {
            return Err(Error::input(format!("basis columns are not orthonormal (deviation {dev:e})")));
        }
        Ok(Self { basis })
    }

    pub(crate) fn from_matrix_unchecked(basis: DMatrix<f64>) -> Self {
        Self { basis }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `sqrt(det(A^T A))` for a `d x l` matrix, with the degeneracy cut-off.
fn gram_volume(edges: DMatrix<f64>) -> f64 {
    let l = edges.ncols();
    let scale = edges.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    let normalized = edges / scale;
    let r = normalized.qr().unpack_r();
    let det = (0..l).map(|i| r[(i, i)].abs()).product::<f64>();
    if det * det < DEGENERACY_THRESHOLD {
        return 0.0;
    }
    det * scale.powi(l as i32)
}

/// `l`-dimensional volume of the simplex.
pub fn simplex_volume(s: &SimplexVertices) -> f64 {
    gram_volume(s.edge_matrix()) / factorial(s.order())
}

/// Volume of the parallelotope spanned by `vectors`.
pub fn parallelotope_volume(vectors: &[Point]) -> Result<f64> {
    let d = vectors.first().map(Point::dim).ok_or_else(|| Error::input("need at least one vector"))?;
    if vectors.iter().any(|v| v.dim() != d) {
        return Err(Error::input("all vectors must have the same dimension"));
    }
    if vectors.len() > d {
        return Err(Error::input(format!("{} vectors cannot span a parallelotope in R^{d}", vectors.len())));
    }
    let m = DMatrix::from_fn(d, vectors.len(), |r, c| vectors[c].coords()[r]);
    Ok(gram_volume(m))
}

/// The volume of a simplex together with an orthonormal basis of its
/// direction space `span(x_i - x_0)`.
///
/// Returns `None` for the basis when the simplex is degenerate.
pub fn simplex_frame(s: &SimplexVertices) -> (f64, Option<SubspaceBasis>) {
    let edges = s.edge_matrix();
    let l = edges.ncols();
    let scale = edges.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return (0.0, None);
    }
    let qr = (edges / scale).qr();
    let r = qr.r();
    let det = (0..l).map(|i| r[(i, i)].abs()).product::<f64>();
    if det * det < DEGENERACY_THRESHOLD {
        return (0.0, None);
    }
    let volume = det * scale.powi(l as i32) / factorial(l);
    (volume, Some(SubspaceBasis::from_matrix_unchecked(qr.q())))
}

/// `s_0 ... s_l * sqrt(sum 1/s_i^2)`.
pub fn scale_coefficient(w: &WeightVector) -> f64 {
    let s = w.as_slice();
    let product: f64 = s.iter().product();
    let inv_sq: f64 = s.iter().map(|x| 1.0 / (x * x)).sum();
    product * inv_sq.sqrt()
}

/// Covariance of the columns of `[s_i X_i - s_0 X_0]_{i=1..d}`:
/// `M[i][j] = s_i s_j delta_ij + s_0^2`.
pub fn covariance_matrix(w: &WeightVector) -> DMatrix<f64> {
    let s = w.as_slice();
    let d = s.len() - 1;
    let s0sq = s[0] * s[0];
    DMatrix::from_fn(d, d, |i, j| if i == j { s[i + 1] * s[i + 1] + s0sq } else { s0sq })
}

/// `det M = s_0^2 ... s_d^2 * sum_k 1/s_k^2`.
pub fn covariance_det_closed_form(w: &WeightVector) -> f64 {
    let s = w.as_slice();
    let product: f64 = s.iter().map(|x| x * x).product();
    let inv_sq: f64 = s.iter().map(|x| 1.0 / (x * x)).sum();
    product * inv_sq
}

/// `|det|` of the top `l x l` block of `b`: the factor by which the
/// projection onto the first `l` coordinates scales `l`-volume inside
/// `span(b)`.
pub fn projection_restriction_determinant(b: &SubspaceBasis, l: usize) -> Result<f64> {
    if b.dim() != l {
        return Err(Error::input(format!("basis has {} columns, expected l = {l}", b.dim())));
    }
    let top = b.matrix().rows(0, l).clone_owned();
    Ok(top.determinant().abs().min(1.0))
}

/// Surface area of the unit sphere in `R^j`: `2 pi^{j/2} / Gamma(j/2)`.
pub fn sphere_surface_constant(j: usize) -> Result<f64> {
    if j == 0 {
        return Err(Error::input("sphere dimension must be at least 1"));
    }
    let half = j as f64 / 2.0;
    Ok((2.0f64.ln() + half * PI.ln() - ln_gamma(half)).exp())
}

/// `omega_{d-k+1} ... omega_d / (omega_1 ... omega_k)`.
pub fn bp_constant(d: usize, k: usize) -> Result<f64> {
    if k == 0 || k > d {
        return Err(Error::input(format!("need 1 <= k <= d, got k = {k}, d = {d}")));
    }
    let mut ln = 0.0;
    for i in (d - k + 1)..=d {
        ln += sphere_surface_constant(i)?.ln();
    }
    for i in 1..=k {
        ln -= sphere_surface_constant(i)?.ln();
    }
    Ok(ln.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p(c: &[f64]) -> Point {
        Point::new(c.to_vec()).unwrap()
    }

    fn simplex(vs: &[&[f64]]) -> SimplexVertices {
        SimplexVertices::new(vs.iter().map(|c| p(c)).collect()).unwrap()
    }

    /// Cayley-Menger: `(-1)^{l+1} 2^l (l!)^2 V^2 = det CM`.
    fn cayley_menger_volume(vs: &[&[f64]]) -> f64 {
        let m = vs.len();
        let l = m - 1;
        let mut cm = DMatrix::zeros(m + 1, m + 1);
        for i in 0..m {
            cm[(0, i + 1)] = 1.0;
            cm[(i + 1, 0)] = 1.0;
            for j in 0..m {
                let d2: f64 = vs[i].iter().zip(vs[j]).map(|(a, b)| (a - b) * (a - b)).sum();
                cm[(i + 1, j + 1)] = d2;
            }
        }
        let sign = if l % 2 == 0 { -1.0 } else { 1.0 };
        let v2 = sign * cm.determinant() / (2f64.powi(l as i32) * factorial(l).powi(2));
        v2.max(0.0).sqrt()
    }

    #[test]
    fn unit_right_triangle() {
        assert_relative_eq!(simplex_volume(&simplex(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]])), 0.5, max_relative = 1e-15);
    }

    #[test]
    fn collinear_points_have_zero_area() {
        assert_eq!(simplex_volume(&simplex(&[&[0.0, 0.0], &[1.0, 1.0], &[2.0, 2.0]])), 0.0);
    }

    #[test]
    fn triangle_in_three_space_matches_cayley_menger() {
        let vs: [&[f64]; 3] = [&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]];
        let oracle = cayley_menger_volume(&vs);
        assert_relative_eq!(oracle, 0.866_025_403_784_438_6, max_relative = 1e-12);
        assert_relative_eq!(simplex_volume(&simplex(&vs)), oracle, max_relative = 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let err = SimplexVertices::new(vec![p(&[0.0, 0.0]), p(&[1.0])]);
        assert!(matches!(err, Err(Error::Input(_))));
        assert!(parallelotope_volume(&[p(&[1.0, 0.0]), p(&[1.0])]).is_err());
    }

    #[test]
    fn parallelotope_cases() {
        assert_relative_eq!(parallelotope_volume(&[p(&[1.0, 0.0]), p(&[0.0, 1.0])]).unwrap(), 1.0);
        assert_relative_eq!(parallelotope_volume(&[p(&[2.0, 0.0]), p(&[0.0, 3.0])]).unwrap(), 6.0, max_relative = 1e-15);
        let vs = [p(&[0.3, -1.2, 2.0]), p(&[1.1, 0.4, -0.7]), p(&[-0.5, 0.9, 0.8])];
        let simplex = SimplexVertices::with_origin(vs.to_vec()).unwrap();
        assert!(simplex.includes_origin());
        assert_relative_eq!(parallelotope_volume(&vs).unwrap(), 6.0 * simplex_volume(&simplex), max_relative = 1e-12);
    }

    #[test]
    fn scale_coefficient_examples() {
        let w = |v: &[f64]| WeightVector::new(v.to_vec()).unwrap();
        assert_relative_eq!(scale_coefficient(&w(&[1.0, 1.0, 1.0])), 3f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(scale_coefficient(&w(&[1.0, 1.0])), 2f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(scale_coefficient(&w(&[1.0, 2.0])), 5f64.sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn nonpositive_sigma_is_rejected() {
        assert!(matches!(WeightVector::new(vec![1.0, 0.0]), Err(Error::Domain(_))));
        assert!(matches!(WeightVector::new(vec![1.0, -2.0]), Err(Error::Domain(_))));
        assert!(WeightVector::new(vec![1.0]).is_err());
    }

    #[test]
    fn covariance_examples() {
        let m = covariance_matrix(&WeightVector::new(vec![1.0, 1.0, 1.0]).unwrap());
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]));
        let w = WeightVector::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(covariance_matrix(&w), DMatrix::from_row_slice(2, 2, &[5.0, 1.0, 1.0, 10.0]));
        assert_relative_eq!(covariance_det_closed_form(&w), 49.0, max_relative = 1e-15);
        assert_relative_eq!(covariance_det_closed_form(&WeightVector::ones(2)), 3.0, max_relative = 1e-15);
        let w = WeightVector::new(vec![0.7, 1.9]).unwrap();
        assert_relative_eq!(covariance_matrix(&w)[(0, 0)], 0.49 + 3.61, max_relative = 1e-15);
        assert_relative_eq!(covariance_det_closed_form(&w), 0.49 + 3.61, max_relative = 1e-15);
    }

    #[test]
    fn projection_determinant_examples() {
        let id = SubspaceBasis::new(DMatrix::identity(4, 2)).unwrap();
        assert_relative_eq!(projection_restriction_determinant(&id, 2).unwrap(), 1.0);
        let e2 = SubspaceBasis::new(DMatrix::from_column_slice(2, 1, &[0.0, 1.0])).unwrap();
        assert_eq!(projection_restriction_determinant(&e2, 1).unwrap(), 0.0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let diag = SubspaceBasis::new(DMatrix::from_column_slice(2, 1, &[h, h])).unwrap();
        assert_relative_eq!(projection_restriction_determinant(&diag, 1).unwrap(), h, max_relative = 1e-15);
        assert!(projection_restriction_determinant(&diag, 2).is_err());
    }

    #[test]
    fn non_orthonormal_basis_is_rejected() {
        assert!(SubspaceBasis::new(DMatrix::from_column_slice(2, 1, &[1.0, 1.0])).is_err());
    }

    #[test]
    fn projection_factor_is_one_only_on_coordinate_plane() {
        // rotate span(e1, e2) inside R^3 by angle a around e1: factor = |cos a|
        for &a in &[0.0f64, 0.3, 1.0, 1.5] {
            let b = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, a.cos(), a.sin()]);
            let f = projection_restriction_determinant(&SubspaceBasis::new(b).unwrap(), 2).unwrap();
            assert_relative_eq!(f, a.cos().abs(), epsilon = 1e-15);
            assert_eq!(f == 1.0, a == 0.0);
        }
    }

    #[test]
    fn sphere_constants() {
        assert_relative_eq!(sphere_surface_constant(1).unwrap(), 2.0, max_relative = 1e-14);
        assert_relative_eq!(sphere_surface_constant(2).unwrap(), 2.0 * PI, max_relative = 1e-14);
        assert_relative_eq!(sphere_surface_constant(3).unwrap(), 4.0 * PI, max_relative = 1e-14);
        assert_relative_eq!(bp_constant(2, 2).unwrap(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(bp_constant(2, 1).unwrap(), PI, max_relative = 1e-14);
        assert!(bp_constant(2, 3).is_err());
    }
}
