//! Hyperbolic disc automorphisms `phi_r(z) = (z + r)/(1 + r z)`, the annulus
//! carrying their spectra, eigenfunctions `((1+z)/(1-z))^c`, the covering map
//! of the annulus with its zero sets, and a few closed-form spectral radii.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::spaces::{CoeffVec, SpaceSpec};

fn check_open_unit(name: &'static str, r: f64) -> Result<()> {
    if !(r.abs() < 1.0) {
        return Err(invalid(name, format!("need |{name}| < 1, got {r}")));
    }
    Ok(())
}

/// `phi_r` with `0 < r < 1`; fixed points `-1` (repelling) and `1` (attracting).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicAuto {
    r: f64,
}

impl HyperbolicAuto {
    pub fn new(r: f64) -> Result<Self> {
        if !(r > 0.0 && r < 1.0) {
            return Err(invalid("r", format!("need 0 < r < 1, got {r}")));
        }
        Ok(Self { r })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        (z + self.r) / (1.0 + self.r * z)
    }

    /// `phi_r^{-1} = phi_{-r}`.
    pub fn apply_inverse(&self, z: Complex64) -> Complex64 {
        (z - self.r) / (1.0 - self.r * z)
    }

    /// `t_r = ln((1+r)/(1-r))`.
    pub fn t(&self) -> f64 {
        log_ratio(self.r)
    }

    pub fn annulus(&self) -> (f64, f64) {
        annulus_radii(self.r)
    }
}

/// `ln((1+r)/(1-r)) = 2 artanh(r)`.
fn log_ratio(r: f64) -> f64 {
    2.0 * r.atanh()
}

/// `phi_r o phi_s = phi_t` with `t = (r + s)/(1 + r s)`.
pub fn semigroup_param(r: f64, s: f64) -> Result<f64> {
    check_open_unit("r", r)?;
    check_open_unit("s", s)?;
    Ok((r + s) / (1.0 + r * s))
}

fn annulus_radii(r: f64) -> (f64, f64) {
    let inner = ((1.0 - r) / (1.0 + r)).sqrt();
    (inner, 1.0 / inner)
}

/// Radii `(((1-r)/(1+r))^{1/2}, ((1-r)/(1+r))^{-1/2})`; `r = 0` gives the
/// degenerate annulus `(1, 1)`.
pub fn annulus(r: f64) -> Result<(f64, f64)> {
    if !(0.0..1.0).contains(&r) {
        return Err(invalid("r", format!("need 0 <= r < 1, got {r}")));
    }
    Ok(annulus_radii(r))
}

/// Strict membership in the open annulus of `r`.
pub fn in_open_annulus(r: f64, lambda: Complex64) -> bool {
    let (lo, hi) = annulus_radii(r);
    let m = lambda.norm();
    m > lo && m < hi
}

/// `f_n(z) = exp((u + 2 pi i n a) log((1+z)/(1-z)))` with
/// `a = 1/ln((1-r)/(1+r))`; every `f_n` satisfies `f_n o phi_r = lambda f_n`
/// with the same `lambda = ((1-r)/(1+r))^{-u}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenfunctionSpec {
    u: f64,
    n: i64,
    r: f64,
}

impl EigenfunctionSpec {
    pub fn new(u: f64, n: i64, r: f64) -> Result<Self> {
        if !(u > 0.0 && u < 0.5) {
            return Err(invalid("u", format!("need 0 < u < 1/2, got {u}")));
        }
        HyperbolicAuto::new(r)?;
        Ok(Self { u, n, r })
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn n(&self) -> i64 {
        self.n
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn a(&self) -> f64 {
        -1.0 / log_ratio(self.r)
    }

    pub fn lambda(&self) -> f64 {
        (self.u * log_ratio(self.r)).exp()
    }

    /// The exponent `c` in `f_n = ((1+z)/(1-z))^c`.
    pub fn exponent(&self) -> Complex64 {
        Complex64::new(self.u, 2.0 * PI * self.n as f64 * self.a())
    }
}

/// Sampling circle and oversampling used for coefficient extraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingOptions {
    /// `None` picks `exp(-4/N)`, so `rho^{-N}` stays below `e^4`.
    pub radius: Option<f64>,
    pub oversampling: usize,
}

impl Default for SamplingOptions {
    fn default() -> Self {
        Self {
            radius: None,
            oversampling: 8,
        }
    }
}

impl SamplingOptions {
    pub fn radius_for(&self, n: usize) -> f64 {
        self.radius.unwrap_or_else(|| (-4.0 / n as f64).exp())
    }
}

/// Taylor coefficients stored as `exp(log_scale) * coeffs`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledCoeffs {
    pub coeffs: Vec<Complex64>,
    pub log_scale: f64,
    /// Largest sampled-transform magnitude beyond the requested window,
    /// relative to the largest one inside it.
    pub tail: f64,
}

/// First `n` Taylor coefficients of `((1+z)/(1-z))^c` (principal branch) by
/// sampling on a circle and inverting with an FFT.
pub fn log_ratio_power_coeffs(c: Complex64, n: usize, opts: &SamplingOptions) -> Result<ScaledCoeffs> {
    if n == 0 {
        return Err(Error::Truncation { min: 1, got: 0 });
    }
    let rho = opts.radius_for(n);
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::Sampling(format!("sampling radius {rho} is not inside (0, 1)")));
    }
    if opts.oversampling < 2 {
        return Err(invalid("oversampling", "need at least 2"));
    }
    let m = opts.oversampling * n;
    let logs: Vec<Complex64> = (0..m)
        .map(|j| {
            let z = Complex64::from_polar(rho, 2.0 * PI * j as f64 / m as f64);
            c * ((1.0 + z).ln() - (1.0 - z).ln())
        })
        .collect();
    let shift = logs.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
    let mut buf: Vec<Complex64> = logs.iter().map(|l| (l - shift).exp()).collect();
    if buf.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Sampling("non-finite sample; move the circle away from +-1".into()));
    }
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let inv_m = 1.0 / m as f64;
    let head = buf[..n].iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tail = buf[n..].iter().map(|z| z.norm()).fold(0.0, f64::max);
    let coeffs = buf[..n]
        .iter()
        .enumerate()
        .map(|(k, z)| z * inv_m * rho.powi(-(k as i32)))
        .collect();
    Ok(ScaledCoeffs {
        coeffs,
        log_scale: shift,
        tail: if head > 0.0 { tail / head } else { 0.0 },
    })
}

/// First `n` Taylor coefficients of `f_n` as an element of `H^2`.
pub fn eigenfunction_coeffs(spec: &EigenfunctionSpec, n: usize) -> Result<CoeffVec> {
    eigenfunction_coeffs_with(spec, n, &SamplingOptions::default())
}

pub fn eigenfunction_coeffs_with(spec: &EigenfunctionSpec, n: usize, opts: &SamplingOptions) -> Result<CoeffVec> {
    let s = log_ratio_power_coeffs(spec.exponent(), n, opts)?;
    let scale = s.log_scale.exp();
    if !scale.is_finite() {
        return Err(Error::Sampling(format!(
            "coefficients of f_{} overflow; use the scaled form",
            spec.n
        )));
    }
    let coeffs = s.coeffs.into_iter().map(|z| z * scale).collect();
    CoeffVec::new(coeffs, &SpaceSpec::hardy(n)?)
}

/// A point of the disc kept with `ln(1+z)` and `ln(1-z)`, so that points
/// exponentially close to `-1` or `1` retain full relative accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscPoint {
    pub z: Complex64,
    pub log_one_plus: Complex64,
    pub log_one_minus: Complex64,
}

impl DiscPoint {
    pub fn new(z: Complex64) -> Result<Self> {
        if !(z.norm() < 1.0) {
            return Err(invalid("z", format!("{z} is not in the open disc")));
        }
        Ok(Self {
            z,
            log_one_plus: (1.0 + z).ln(),
            log_one_minus: (1.0 - z).ln(),
        })
    }

    /// The point `z = -tanh(w/2)`, i.e. `(1-z)/(1+z) = e^w`, for `|Im w| < pi`.
    pub fn from_strip(w: Complex64) -> Self {
        // ln(1 + e^w) without overflow
        let softplus = |w: Complex64| {
            if w.re > 0.0 {
                w + (1.0 + (-w).exp()).ln()
            } else {
                (1.0 + w.exp()).ln()
            }
        };
        let sp = softplus(w);
        let ln2 = Complex64::new(std::f64::consts::LN_2, 0.0);
        Self {
            z: -(w / 2.0).tanh(),
            log_one_plus: ln2 - sp,
            log_one_minus: ln2 + w - sp,
        }
    }

    /// `ln((1-z)/(1+z))`, principal branch.
    pub fn strip_coordinate(&self) -> Complex64 {
        self.log_one_minus - self.log_one_plus
    }

    /// `ln(1 - |z|^2)`, which stays finite after `|z|` has rounded to 1.
    pub fn log_boundary_gap(&self) -> f64 {
        let w = self.strip_coordinate();
        self.log_one_plus.re + self.log_one_minus.re + w.im.cos().ln()
    }
}

/// The covering map `psi_r(z) = ((1-z)/(1+z))^{i t_r/pi}` of the annulus.
pub fn psi(r: f64, p: &DiscPoint) -> Complex64 {
    let t = log_ratio(r);
    (Complex64::new(0.0, t / PI) * p.strip_coordinate()).exp()
}

/// `ln |psi_r'(z)|`, from `psi' = psi (i t/pi) (-2/((1-z)(1+z)))`.
pub fn log_abs_psi_derivative(r: f64, p: &DiscPoint) -> f64 {
    let t = log_ratio(r);
    psi(r, p).norm().ln() + (2.0 * t / PI).ln() - p.log_one_plus.re - p.log_one_minus.re
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroEntry {
    pub k: i64,
    pub point: DiscPoint,
    pub residual: f64,
    pub log_abs_derivative: f64,
}

impl ZeroEntry {
    pub fn z(&self) -> Complex64 {
        self.point.z
    }
}

/// Zeros of `psi_r - lambda` in the disc, indexed by the branch `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroSet {
    pub r: f64,
    pub lambda: Complex64,
    pub entries: Vec<ZeroEntry>,
}

impl ZeroSet {
    pub fn get(&self, k: i64) -> Option<&ZeroEntry> {
        self.entries.iter().find(|e| e.k == k)
    }

    pub fn max_residual(&self) -> f64 {
        self.entries.iter().map(|e| e.residual).fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let err = |e: csv::Error| Error::Format(e.to_string());
        out.write_record(["k", "re_z", "im_z", "residual"]).map_err(err)?;
        for e in &self.entries {
            out.write_record([
                e.k.to_string(),
                format!("{:e}", e.point.z.re),
                format!("{:e}", e.point.z.im),
                format!("{:e}", e.residual),
            ])
            .map_err(err)?;
        }
        out.flush().map_err(|e| Error::Format(e.to_string()))
    }
}

/// Solutions `z_k = -tanh(w_k/2)` of `psi_r(z) = lambda`, `k = -K..=K`, with
/// `w_k = (pi/t_r)(arg lambda + 2 pi k) - i (pi/t_r) ln|lambda|`.
///
/// Entries are ordered by `|k|`, negative branch first.
pub fn covering_map_zeros(r: f64, lambda: Complex64, k_max: usize) -> Result<ZeroSet> {
    let h = HyperbolicAuto::new(r)?;
    if !in_open_annulus(r, lambda) {
        return Err(Error::OutsideAnnulus {
            r,
            re: lambda.re,
            im: lambda.im,
        });
    }
    let t = h.t();
    let scale = PI / t;
    let arg = lambda.arg();
    let lnm = lambda.norm().ln();
    let mut ks: Vec<i64> = vec![0];
    for k in 1..=k_max as i64 {
        ks.push(-k);
        ks.push(k);
    }
    let entries = ks
        .into_iter()
        .map(|k| {
            let w = Complex64::new(scale * (arg + 2.0 * PI * k as f64), -scale * lnm);
            let point = DiscPoint::from_strip(w);
            ZeroEntry {
                k,
                point,
                residual: (psi(r, &point) - lambda).norm(),
                log_abs_derivative: log_abs_psi_derivative(r, &point),
            }
        })
        .collect();
    Ok(ZeroSet { r, lambda, entries })
}

/// Reduced fraction `p/q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub p: u64,
    pub q: u64,
}

pub const RATIO_MAX_DENOMINATOR: u64 = 50;
pub const RATIO_TOL: f64 = 1e-9;

/// Detects `t_r / t_s = p/q` with `q <= 50` via continued-fraction convergents.
pub fn ratio_condition(r: f64, s: f64) -> Result<Option<Ratio>> {
    ratio_condition_with(r, s, RATIO_MAX_DENOMINATOR, RATIO_TOL)
}

pub fn ratio_condition_with(r: f64, s: f64, max_den: u64, tol: f64) -> Result<Option<Ratio>> {
    let tr = HyperbolicAuto::new(r)?.t();
    let ts = HyperbolicAuto::new(s)?.t();
    Ok(rational_approx(tr / ts, max_den, tol))
}

fn rational_approx(x: f64, max_den: u64, tol: f64) -> Option<Ratio> {
    let (mut p0, mut q0, mut p1, mut q1) = (0u64, 1u64, 1u64, 0u64);
    let mut rest = x;
    for _ in 0..64 {
        let a = rest.floor();
        if a > 1e12 {
            return None;
        }
        let a = a as u64;
        let (p2, q2) = (a * p1 + p0, a * q1 + q0);
        if q2 > max_den {
            return None;
        }
        if (x - p2 as f64 / q2 as f64).abs() <= tol * x.abs().max(1.0) {
            return Some(Ratio { p: p2, q: q2 });
        }
        let frac = rest - a as f64;
        if frac <= 0.0 {
            return None;
        }
        rest = 1.0 / frac;
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
    }
    None
}

/// Function space on the right half-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HalfPlaneSpace {
    Hardy,
    Bergman { alpha: f64 },
}

/// Radius of the spectral circle of `f(w) -> f(mu w)`: `mu^{-1/2}` on the
/// Hardy space and `mu^{-(alpha+2)/2}` on the weighted Bergman space.
pub fn halfplane_radius(mu: f64, space: HalfPlaneSpace) -> Result<f64> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(invalid("mu", format!("need mu > 0, got {mu}")));
    }
    if mu == 1.0 {
        return Err(invalid("mu", "mu = 1 is the identity, not a hyperbolic dilation"));
    }
    match space {
        HalfPlaneSpace::Hardy => Ok(mu.powf(-0.5)),
        HalfPlaneSpace::Bergman { alpha } => {
            if !(alpha > -1.0) {
                return Err(invalid("alpha", format!("need alpha > -1, got {alpha}")));
            }
            Ok(mu.powf(-(alpha + 2.0) / 2.0))
        }
    }
}

/// `x_z = (x_0, z x_0, z^2 x_0, ...)` with `K` blocks, laid out block by
/// block as for the block shifts; `B x_z = z x_z` on the first `K-1` blocks.
pub fn holomorphic_eigenfield(x0: &CoeffVec, z: Complex64, blocks: usize) -> Result<CoeffVec> {
    if !(z.norm() < 1.0) {
        return Err(invalid("z", format!("{z} is not in the open disc")));
    }
    if blocks == 0 {
        return Err(Error::Truncation { min: 1, got: 0 });
    }
    let d = x0.len();
    let mut out = Vec::with_capacity(blocks * d);
    let mut p = Complex64::new(1.0, 0.0);
    for _ in 0..blocks {
        out.extend(x0.coeffs().iter().map(|a| a * p));
        p *= z;
    }
    CoeffVec::new(out, &SpaceSpec::hardy(blocks * d)?)
}

/// Writes `(n, re_a, im_a)` rows.
pub fn write_coeff_csv<W: Write>(coeffs: &[Complex64], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let err = |e: csv::Error| Error::Format(e.to_string());
    out.write_record(["n", "re_a", "im_a"]).map_err(err)?;
    for (n, a) in coeffs.iter().enumerate() {
        out.write_record([n.to_string(), format!("{:e}", a.re), format!("{:e}", a.im)])
            .map_err(err)?;
    }
    out.flush().map_err(|e| Error::Format(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Coefficients of `((1+z)/(1-z))^c` from `(1 - z^2) f' = 2 c f`.
    fn recurrence(c: Complex64, n: usize) -> Vec<Complex64> {
        let mut a = vec![Complex64::new(0.0, 0.0); n];
        a[0] = Complex64::new(1.0, 0.0);
        if n > 1 {
            a[1] = 2.0 * c;
        }
        for k in 1..n.saturating_sub(1) {
            a[k + 1] = (2.0 * c * a[k] + (k as f64 - 1.0) * a[k - 1]) / (k as f64 + 1.0);
        }
        a
    }

    #[test]
    fn semigroup_values() {
        assert_abs_diff_eq!(semigroup_param(0.5, 0.5).unwrap(), 0.8, epsilon = 1e-15);
        assert_eq!(semigroup_param(0.3, -0.3).unwrap(), 0.0);
        assert_abs_diff_eq!(semigroup_param(0.3, 0.3).unwrap(), 0.6 / 1.09, epsilon = 1e-15);
        assert!(semigroup_param(1.0, 0.2).is_err());
    }

    #[test]
    fn semigroup_matches_composition() {
        let (r, s) = (0.5, 0.3);
        let t = semigroup_param(r, s).unwrap();
        let z = Complex64::new(0.2, -0.4);
        let lhs = HyperbolicAuto::new(r).unwrap().apply(HyperbolicAuto::new(s).unwrap().apply(z));
        assert!((lhs - HyperbolicAuto::new(t).unwrap().apply(z)).norm() < 1e-15);
        let h = HyperbolicAuto::new(r).unwrap();
        assert!((h.apply_inverse(h.apply(z)) - z).norm() < 1e-15);
    }

    #[test]
    fn annulus_values() {
        let (a, b) = annulus(0.5).unwrap();
        assert_abs_diff_eq!(a, 0.577350, epsilon = 1e-6);
        assert_abs_diff_eq!(b, 1.732051, epsilon = 1e-6);
        let (a, b) = annulus(0.8).unwrap();
        assert_abs_diff_eq!(a, 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b, 3.0, epsilon = 1e-14);
        assert_eq!(annulus(0.0).unwrap(), (1.0, 1.0));
        assert!(annulus(1.0).is_err());
    }

    #[test]
    fn eigenfunction_leading_coefficient() {
        for n in -2..=2 {
            let f = eigenfunction_coeffs(&EigenfunctionSpec::new(0.25, n, 0.5).unwrap(), 64).unwrap();
            let scale = f.coeffs().iter().map(|a| a.norm()).fold(1.0, f64::max);
            assert!((f.coeffs()[0] - Complex64::new(1.0, 0.0)).norm() < 1e-12 * scale, "n = {n}");
        }
    }

    #[test]
    fn fft_matches_recurrence() {
        for n in [0, 1, -1] {
            let spec = EigenfunctionSpec::new(0.25, n, 0.5).unwrap();
            let f = eigenfunction_coeffs(&spec, 256).unwrap();
            let want = recurrence(spec.exponent(), 256);
            let scale = want.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let err = f
                .coeffs()
                .iter()
                .zip(&want)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-9 * scale, "n = {n}: {err:e}");
        }
    }

    #[test]
    fn eigenvalue_is_independent_of_n() {
        let lam = 3f64.powf(0.25);
        for n in -3..=3 {
            let spec = EigenfunctionSpec::new(0.25, n, 0.5).unwrap();
            assert_abs_diff_eq!(spec.lambda(), lam, epsilon = 1e-14);
            assert_abs_diff_eq!(spec.a() * (1.0f64 / 3.0).ln(), 1.0, epsilon = 1e-15);
        }
        assert!(EigenfunctionSpec::new(0.5, 0, 0.5).is_err());
        assert!(EigenfunctionSpec::new(0.25, 0, 1.0).is_err());
    }

    #[test]
    fn zeros_closed_form() {
        let zs = covering_map_zeros(0.5, Complex64::new(1.0, 0.0), 3).unwrap();
        assert_eq!(zs.entries.iter().map(|e| e.k).collect::<Vec<_>>(), vec![0, -1, 1, -2, 2, -3, 3]);
        assert!(zs.get(0).unwrap().z().norm() < 1e-16);
        let want = -(PI * PI / 3f64.ln()).tanh();
        assert!((zs.get(1).unwrap().z() - Complex64::new(want, 0.0)).norm() < 1e-15);
        assert!(zs.max_residual() < 1e-12);
        assert!(zs.entries.iter().all(|e| e.log_abs_derivative.is_finite()));
    }

    #[test]
    fn zeros_off_axis_and_rejections() {
        let lam = Complex64::from_polar(1.2, 0.7);
        let zs = covering_map_zeros(0.5, lam, 20).unwrap();
        assert!(zs.max_residual() < 1e-10);
        assert!(zs.entries.iter().all(|e| e.point.log_boundary_gap() < 0.0));
        assert!(matches!(
            covering_map_zeros(0.5, Complex64::new(2.0, 0.0), 3),
            Err(Error::OutsideAnnulus { .. })
        ));
        let (lo, _) = annulus(0.5).unwrap();
        assert!(covering_map_zeros(0.5, Complex64::new(lo, 0.0), 3).is_err());
    }

    #[test]
    fn disc_point_logs_agree() {
        let z = Complex64::new(0.3, -0.5);
        let p = DiscPoint::new(z).unwrap();
        let w = p.strip_coordinate();
        let q = DiscPoint::from_strip(w);
        assert!((q.z - z).norm() < 1e-15);
        assert!((q.log_one_plus - p.log_one_plus).norm() < 1e-15);
        assert_abs_diff_eq!(p.log_boundary_gap(), (1.0 - z.norm_sqr()).ln(), epsilon = 1e-14);
    }

    #[test]
    fn ratios() {
        let s = 2.0 - 3f64.sqrt();
        assert_eq!(ratio_condition(0.5, s).unwrap(), Some(Ratio { p: 2, q: 1 }));
        assert_eq!(ratio_condition(0.5, 0.5).unwrap(), Some(Ratio { p: 1, q: 1 }));
        assert_eq!(ratio_condition(0.5, 0.3).unwrap(), None);
        assert_eq!(ratio_condition(s, 0.5).unwrap(), Some(Ratio { p: 1, q: 2 }));
    }

    #[test]
    fn halfplane_values() {
        assert_eq!(halfplane_radius(4.0, HalfPlaneSpace::Hardy).unwrap(), 0.5);
        assert_eq!(halfplane_radius(4.0, HalfPlaneSpace::Bergman { alpha: 0.0 }).unwrap(), 0.25);
        assert_eq!(halfplane_radius(4.0, HalfPlaneSpace::Bergman { alpha: 2.0 }).unwrap(), 0.0625);
        assert!(halfplane_radius(1.0, HalfPlaneSpace::Hardy).is_err());
        assert!(halfplane_radius(4.0, HalfPlaneSpace::Bergman { alpha: -1.0 }).is_err());
    }

    #[test]
    fn eigenfield_blocks() {
        let h = SpaceSpec::hardy(2).unwrap();
        let x0 = CoeffVec::new(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 2.0)], &h).unwrap();
        let x = holomorphic_eigenfield(&x0, Complex64::new(0.0, 0.0), 3).unwrap();
        assert_eq!(&x.coeffs()[..2], x0.coeffs());
        assert!(x.coeffs()[2..].iter().all(|a| a.norm() == 0.0));
        let z = Complex64::new(0.3, 0.4);
        let x = holomorphic_eigenfield(&x0, z, 4).unwrap();
        // backward block shift drops the first block
        for i in 0..6 {
            assert!((x.coeffs()[i + 2] - z * x.coeffs()[i]).norm() < 1e-15);
        }
        assert!(holomorphic_eigenfield(&x0, Complex64::new(1.0, 0.0), 2).is_err());
    }

    #[test]
    fn csv_headers() {
        let zs = covering_map_zeros(0.5, Complex64::new(1.0, 0.0), 1).unwrap();
        let mut buf = Vec::new();
        zs.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("k,re_z,im_z,residual\n0,"));
        let mut buf = Vec::new();
        write_coeff_csv(&[Complex64::new(1.0, 0.0)], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "n,re_a,im_a\n0,1e0,0e0\n");
    }
}
