//! Dense complex linear algebra: numerical rank and kernels, smallest singular
//! values, eigenvalues, and dimensions of subspace sums and intersections.
//!
//! All thresholds are relative: a singular value `s` counts as zero when
//! `s <= tol_rel * s_max`.

use std::cmp::Ordering;

use nalgebra::linalg::{Schur, SVD};
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;

pub const DEFAULT_TOL: f64 = 1e-8;
/// Tolerances of the rank sensitivity sweep recorded in every report.
pub const TOL_SWEEP: [f64; 3] = [1e-6, 1e-8, 1e-10];

const SVD_EPS: f64 = 1e-15;
const SVD_MAX_ITER: usize = 0;
const SCHUR_MAX_ITER: usize = 0;

/// Orthonormal columns spanning a numerically computed subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis {
    columns: CMat,
    tol_used: f64,
}

impl SubspaceBasis {
    /// Wraps columns that are already orthonormal.
    pub(crate) fn from_orthonormal(columns: CMat, tol_used: f64) -> Self {
        Self { columns, tol_used }
    }

    /// Orthonormal basis of the span of arbitrary columns.
    pub fn span_of(columns: &CMat, tol_rel: f64) -> Self {
        let ambient = columns.nrows();
        if columns.ncols() == 0 || columns.iter().all(|c| *c == Complex64::new(0.0, 0.0)) {
            return Self::empty(ambient, tol_rel);
        }
        let svd = svd_full(columns, true, false);
        let u = svd.u.expect("left singular vectors requested");
        let smax = svd.singular_values.max();
        let keep: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&i| svd.singular_values[i] > tol_rel * smax)
            .collect();
        let mut out = CMat::zeros(ambient, keep.len());
        for (j, &i) in keep.iter().enumerate() {
            out.set_column(j, &u.column(i));
        }
        normalize_phases(&mut out);
        Self::from_orthonormal(out, tol_rel)
    }

    pub fn empty(ambient: usize, tol_used: f64) -> Self {
        Self {
            columns: CMat::zeros(ambient, 0),
            tol_used,
        }
    }

    pub fn columns(&self) -> &CMat {
        &self.columns
    }

    pub fn dim(&self) -> usize {
        self.columns.ncols()
    }

    pub fn ambient(&self) -> usize {
        self.columns.nrows()
    }

    pub fn tol_used(&self) -> f64 {
        self.tol_used
    }

    /// Largest deviation of `Q^H Q` from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.columns.adjoint() * &self.columns;
        let id = CMat::identity(self.dim(), self.dim());
        (g - id).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

struct Decomp {
    singular_values: nalgebra::DVector<f64>,
    u: Option<CMat>,
    v_t: Option<CMat>,
}

/// SVD sorted by decreasing singular value.
fn svd_full(a: &CMat, want_u: bool, want_v: bool) -> Decomp {
    let svd = SVD::try_new(a.clone(), want_u, want_v, SVD_EPS, SVD_MAX_ITER)
        .expect("SVD without an iteration cap always converges");
    let k = svd.singular_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| {
        svd.singular_values[j]
            .partial_cmp(&svd.singular_values[i])
            .unwrap_or(Ordering::Equal)
            .then(i.cmp(&j))
    });
    let singular_values = nalgebra::DVector::from_iterator(k, order.iter().map(|&i| svd.singular_values[i]));
    let u = svd.u.map(|u| {
        let mut out = CMat::zeros(u.nrows(), k);
        for (j, &i) in order.iter().enumerate() {
            out.set_column(j, &u.column(i));
        }
        out
    });
    let v_t = svd.v_t.map(|vt| {
        let mut out = CMat::zeros(k, vt.ncols());
        for (j, &i) in order.iter().enumerate() {
            out.set_row(j, &vt.row(i));
        }
        out
    });
    Decomp {
        singular_values,
        u,
        v_t,
    }
}

/// All `min(m, n)` singular values in decreasing order.
pub fn singular_values(a: &CMat) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    if a.iter().all(|z| z.im == 0.0) {
        let re = a.map(|z| z.re);
        let svd = SVD::try_new(re, false, false, SVD_EPS, SVD_MAX_ITER).expect("SVD without an iteration cap always converges");
        let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
        s.sort_by(|x, y| y.partial_cmp(x).unwrap_or(Ordering::Equal));
        return s;
    }
    svd_full(a, false, false).singular_values.iter().copied().collect()
}

/// Full set of right singular vectors (as columns) with their singular values,
/// padding with zero singular values when the matrix is wide.
pub(crate) fn right_singular_system(a: &CMat) -> (Vec<f64>, CMat) {
    let (m, n) = a.shape();
    let padded;
    let work = if m < n {
        padded = {
            let mut p = CMat::zeros(n, n);
            p.view_mut((0, 0), (m, n)).copy_from(a);
            p
        };
        &padded
    } else {
        a
    };
    let d = svd_full(work, false, true);
    let v = d.v_t.expect("right singular vectors requested").adjoint();
    let mut s: Vec<f64> = d.singular_values.iter().copied().collect();
    // zero rows added by padding contribute exact zeros
    for x in s.iter_mut().skip(m.min(n)) {
        *x = 0.0;
    }
    (s, v)
}

pub fn rank(a: &CMat, tol_rel: f64) -> usize {
    rank_from_values(&singular_values(a), tol_rel)
}

pub(crate) fn rank_from_values(s: &[f64], tol_rel: f64) -> usize {
    let smax = s.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > tol_rel * smax).count()
}

/// Numerical kernel: right singular vectors with `s_i <= tol_rel * s_max`.
///
/// Columns are ordered by increasing singular value and each is rotated so
/// that its largest entry is real and positive.
pub fn svd_kernel(a: &CMat, tol_rel: f64) -> SubspaceBasis {
    let n = a.ncols();
    if n == 0 {
        return SubspaceBasis::empty(0, tol_rel);
    }
    if a.nrows() == 0 {
        return SubspaceBasis::from_orthonormal(CMat::identity(n, n), tol_rel);
    }
    let (s, v) = right_singular_system(a);
    let smax = s.first().copied().unwrap_or(0.0);
    let mut idx: Vec<usize> = (0..n).filter(|&i| smax == 0.0 || s[i] <= tol_rel * smax).collect();
    idx.sort_by(|&i, &j| s[i].partial_cmp(&s[j]).unwrap_or(Ordering::Equal).then(i.cmp(&j)));
    let mut cols = CMat::zeros(n, idx.len());
    for (j, &i) in idx.iter().enumerate() {
        cols.set_column(j, &v.column(i));
    }
    normalize_phases(&mut cols);
    SubspaceBasis::from_orthonormal(cols, tol_rel)
}

pub(crate) fn normalize_phases(cols: &mut CMat) {
    for mut col in cols.column_iter_mut() {
        let mut best = 0usize;
        let mut best_mag = -1.0;
        for (i, z) in col.iter().enumerate() {
            // strict comparison keeps the first index on near-ties
            if z.norm() > best_mag * (1.0 + 1e-12) {
                best = i;
                best_mag = z.norm();
            }
        }
        if best_mag > 0.0 {
            let phase = col[best].conj() / best_mag;
            col.iter_mut().for_each(|z| *z *= phase);
        }
    }
}

/// Smallest of the `min(m, n)` singular values (0 for an empty matrix).
pub fn sigma_min(a: &CMat) -> f64 {
    singular_values(a).last().copied().unwrap_or(0.0)
}

/// Codimension of the numerical range: `rows - rank`.
pub fn corank(a: &CMat, tol_rel: f64) -> usize {
    a.nrows() - rank(a, tol_rel)
}

pub fn nullity(a: &CMat, tol_rel: f64) -> usize {
    a.ncols() - rank(a, tol_rel)
}

/// All eigenvalues of a square matrix, ordered by modulus then argument.
pub fn eigenvalues(a: &CMat) -> Result<Vec<Complex64>> {
    if !a.is_square() {
        return Err(Error::SizeMismatch(format!(
            "eigenvalues need a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let schur = Schur::try_new(a.clone(), f64::EPSILON, SCHUR_MAX_ITER).ok_or(Error::NonConvergence(n))?;
    let (_, t) = schur.unpack();
    let mut ev: Vec<Complex64> = (0..n).map(|i| t[(i, i)]).collect();
    sort_spectrum(&mut ev);
    Ok(ev)
}

pub fn sort_spectrum(ev: &mut [Complex64]) {
    ev.sort_by(|a, b| {
        a.norm()
            .partial_cmp(&b.norm())
            .unwrap_or(Ordering::Equal)
            .then(a.arg().partial_cmp(&b.arg()).unwrap_or(Ordering::Equal))
    });
}

/// Principal angles between two subspaces, as `(cos, sin)` pairs sorted by
/// increasing angle. Sines come from projection residuals, so small angles
/// keep full absolute accuracy.
pub fn principal_angles(u: &SubspaceBasis, v: &SubspaceBasis) -> Result<Vec<(f64, f64)>> {
    check_ambient(u, v)?;
    // orient so that the second basis is the smaller one
    let (big, small) = if u.dim() >= v.dim() { (u, v) } else { (v, u) };
    if small.dim() == 0 {
        return Ok(Vec::new());
    }
    let (cosines, sines) = match (real_part_if_real(big.columns()), real_part_if_real(small.columns())) {
        (Some(b), Some(sm)) => {
            let m = b.transpose() * &sm;
            let svd = m.svd(false, true);
            let (sv, vt) = sorted_real_svd(svd);
            let w = &sm * vt.transpose();
            let resid = &w - &b * (b.transpose() * &w);
            (sv, (0..resid.ncols()).map(|i| resid.column(i).norm()).collect::<Vec<f64>>())
        }
        _ => {
            let m = big.columns().adjoint() * small.columns();
            let d = svd_full(&m, false, true);
            let y = d.v_t.expect("right vectors requested").adjoint();
            let w = small.columns() * &y;
            let resid = &w - big.columns() * (big.columns().adjoint() * &w);
            (
                d.singular_values.iter().copied().collect(),
                (0..resid.ncols()).map(|i| resid.column(i).norm()).collect(),
            )
        }
    };
    let mut out: Vec<(f64, f64)> = (0..small.dim())
        .map(|i| {
            let cos = cosines.get(i).map_or(0.0, |c| c.min(1.0));
            (cos, sines[i].min(1.0))
        })
        .collect();
    out.sort_by(|a, b| {
        a.1.atan2(a.0)
            .partial_cmp(&b.1.atan2(b.0))
            .unwrap_or(Ordering::Equal)
    });
    Ok(out)
}

fn real_part_if_real(a: &CMat) -> Option<DMatrix<f64>> {
    a.iter().all(|z| z.im == 0.0).then(|| a.map(|z| z.re))
}

/// Singular values in decreasing order with the matching rows of `V^T`.
fn sorted_real_svd(svd: nalgebra::SVD<f64, nalgebra::Dyn, nalgebra::Dyn>) -> (Vec<f64>, DMatrix<f64>) {
    let vt = svd.v_t.expect("right vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| {
        svd.singular_values[j]
            .partial_cmp(&svd.singular_values[i])
            .unwrap_or(Ordering::Equal)
            .then(i.cmp(&j))
    });
    let sv = order.iter().map(|&i| svd.singular_values[i]).collect();
    let mut out = DMatrix::zeros(order.len(), vt.ncols());
    for (j, &i) in order.iter().enumerate() {
        out.set_row(j, &vt.row(i));
    }
    (sv, out)
}

fn check_ambient(u: &SubspaceBasis, v: &SubspaceBasis) -> Result<()> {
    if u.ambient() != v.ambient() {
        return Err(Error::SizeMismatch(format!(
            "ambient dimensions differ: {} vs {}",
            u.ambient(),
            v.ambient()
        )));
    }
    Ok(())
}

/// Singular values of the concatenation `[U V]` of two orthonormal bases.
///
/// Each principal angle `t` contributes `sqrt(2) cos(t/2)` and
/// `sqrt(2) sin(t/2)`; the unmatched columns of the larger basis contribute 1.
pub fn concatenation_singular_values(u: &SubspaceBasis, v: &SubspaceBasis) -> Result<Vec<f64>> {
    let angles = principal_angles(u, v)?;
    let extra = u.dim().max(v.dim()) - angles.len();
    let mut s = Vec::with_capacity(u.dim() + v.dim());
    for &(c, sn) in &angles {
        let t = sn.atan2(c);
        s.push(std::f64::consts::SQRT_2 * (t / 2.0).cos());
        s.push(std::f64::consts::SQRT_2 * (t / 2.0).sin());
    }
    s.extend(std::iter::repeat_n(1.0, extra));
    s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    Ok(s)
}

fn pair_tol(u: &SubspaceBasis, v: &SubspaceBasis) -> f64 {
    u.tol_used().max(v.tol_used())
}

/// `dim(U + V)`: numerical rank of `[U V]` at the larger recorded tolerance.
pub fn subspace_sum_dim(u: &SubspaceBasis, v: &SubspaceBasis) -> Result<usize> {
    let s = concatenation_singular_values(u, v)?;
    Ok(rank_from_values(&s, pair_tol(u, v)))
}

/// `dim(U ∩ V) = dim U + dim V - dim(U + V)`.
pub fn subspace_intersection_dim(u: &SubspaceBasis, v: &SubspaceBasis) -> Result<usize> {
    let sum = subspace_sum_dim(u, v)?;
    Ok(u.dim() + v.dim() - sum)
}

/// Spectral norm.
pub fn op_norm(a: &CMat) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

/// Frobenius norm.
pub fn fro_norm(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Operators that can be probed for kernels, ranges and commutation without
/// committing to a storage layout.
pub trait LinearMap: Sized {
    /// `(output dimension, input dimension)`.
    fn shape(&self) -> (usize, usize);

    /// All singular values (including structural zeros) in decreasing order.
    fn singular_values(&self) -> Vec<f64>;

    fn kernel(&self, tol_rel: f64) -> SubspaceBasis;

    /// `self * rhs`.
    fn compose(&self, rhs: &Self) -> Result<Self>;

    /// Upper bound on the Frobenius norm of `self * other - other * self`.
    fn commutator_bound(&self, other: &Self) -> Result<f64>;

    fn frobenius(&self) -> f64;

    fn rank(&self, tol_rel: f64) -> usize {
        rank_from_values(&self.singular_values(), tol_rel)
    }

    fn nullity(&self, tol_rel: f64) -> usize {
        self.shape().1 - self.rank(tol_rel)
    }

    fn corank(&self, tol_rel: f64) -> usize {
        self.shape().0 - self.rank(tol_rel)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn backward_shift(n: usize) -> CMat {
        CMat::from_fn(n, n, |i, j| if j == i + 1 { c(1.0) } else { c(0.0) })
    }

    #[test]
    fn zero_matrix_kernel_is_everything() {
        let k = svd_kernel(&CMat::zeros(5, 5), DEFAULT_TOL);
        assert_eq!(k.dim(), 5);
        assert!(k.orthonormality_defect() < 1e-12);
    }

    #[test]
    fn shift_kernel_and_corank() {
        let b = backward_shift(6);
        let k = svd_kernel(&b, DEFAULT_TOL);
        assert_eq!(k.dim(), 1);
        // kernel is e_0, phase-normalized
        assert!((k.columns()[(0, 0)] - c(1.0)).norm() < 1e-12);
        // square truncation loses the last coordinate of the range
        assert_eq!(corank(&b, DEFAULT_TOL), 1);
        assert_eq!(sigma_min(&CMat::identity(4, 4)), 1.0);
    }

    #[test]
    fn wide_kernel_uses_full_right_basis() {
        // [1 0 0; 0 1 0] has kernel e_2
        let a = CMat::from_fn(2, 3, |i, j| if i == j { c(1.0) } else { c(0.0) });
        let k = svd_kernel(&a, DEFAULT_TOL);
        assert_eq!(k.dim(), 1);
        assert!((k.columns()[(2, 0)] - c(1.0)).norm() < 1e-12);
        assert_eq!(corank(&a, DEFAULT_TOL), 0);
    }

    #[test]
    fn eigenvalues_sorted() {
        let d = dmatrix![c(3.0), c(0.0), c(0.0); c(0.0), c(1.0), c(0.0); c(0.0), c(0.0), c(2.0)];
        let ev = eigenvalues(&d).unwrap();
        for (e, want) in ev.iter().zip([1.0, 2.0, 3.0]) {
            assert!((e - c(want)).norm() < 1e-12);
        }
        let nil = eigenvalues(&backward_shift(8)).unwrap();
        assert!(nil.iter().all(|z| z.norm() < 1e-12));
        assert!(eigenvalues(&CMat::zeros(2, 3)).is_err());
    }

    #[test]
    fn subspace_dims() {
        let e = |idx: &[usize]| {
            let mut m = CMat::zeros(4, idx.len());
            for (j, &i) in idx.iter().enumerate() {
                m[(i, j)] = c(1.0);
            }
            SubspaceBasis::from_orthonormal(m, DEFAULT_TOL)
        };
        let u = e(&[0, 1]);
        assert_eq!(subspace_intersection_dim(&u, &u).unwrap(), 2);
        assert_eq!(subspace_sum_dim(&u, &u).unwrap(), 2);
        let v = e(&[2, 3]);
        assert_eq!(subspace_intersection_dim(&u, &v).unwrap(), 0);
        assert_eq!(subspace_sum_dim(&u, &v).unwrap(), 4);
        let w = e(&[1, 2]);
        assert_eq!(subspace_intersection_dim(&u, &w).unwrap(), 1);
        let other = SubspaceBasis::empty(3, DEFAULT_TOL);
        assert!(subspace_sum_dim(&u, &other).is_err());
    }

    #[test]
    fn span_of_drops_dependent_columns() {
        let m = dmatrix![c(1.0), c(2.0), c(0.0); c(0.0), c(0.0), c(1.0); c(0.0), c(0.0), c(0.0)];
        let b = SubspaceBasis::span_of(&m, DEFAULT_TOL);
        assert_eq!(b.dim(), 2);
        assert!(b.orthonormality_defect() < 1e-12);
    }
}
