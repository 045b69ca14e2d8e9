//! Bounded-evidence certificates for kernel/range conditions over ladders of
//! truncations, spectral and boundary falsifiers, and algebraic-dependence
//! falsifiers for commuting pairs.
//!
//! Verdicts are three-valued. `certified_at_scale` means the finite sections
//! behave as the condition requires at every rung of the ladder; it is
//! evidence, not a proof.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numlin::{self, CMat, LinearMap, TOL_SWEEP};
use crate::opbuild::OpMatrix;

pub const SCHEMA_VERSION: &str = "1";
pub const MIN_RUNGS: usize = 3;

const LIMITATION: &str = "Growth of truncated kernel dimensions is used as a proxy for \
infinite multiplicity; no quantitative finite-section theory guarantees that the proxy is faithful.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    CertifiedAtScale,
    Falsified,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Condition {
    C,
    Cplus,
    M,
    #[serde(rename = "spectral")]
    Spectral,
    #[serde(rename = "boundary")]
    Boundary,
    #[serde(rename = "algebraic")]
    Algebraic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative singular-value threshold for rank decisions.
    pub tol_rel: f64,
    /// Lower bound on `sigma_min / sigma_max` of a wide section for it to
    /// count as onto, and of a square section to count as injective.
    pub sigma_floor: f64,
    /// Relative residual below which a candidate eigenvector is a witness.
    pub residual: f64,
    /// Thresholds at which kernel dimensions are also recorded.
    pub sweep: Vec<f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tol_rel: numlin::DEFAULT_TOL,
            sigma_floor: 1e-6,
            residual: 1e-4,
            sweep: TOL_SWEEP.to_vec(),
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("tol_rel", self.tol_rel),
            ("sigma_floor", self.sigma_floor),
            ("residual", self.residual),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(invalid(name, format!("need a value in (0, 1), got {v}")));
            }
        }
        if self.sweep.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
            return Err(invalid("sweep", "tolerances must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// One truncation size; fields that do not apply are omitted from JSON.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Rung {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none", rename = "K")]
    pub blocks: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", rename = "d")]
    pub block_dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel_dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel_dim_sweep: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corank: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_min: Option<f64>,
    /// Smallest singular value of the wide section above the rank threshold,
    /// relative to the largest.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub range_margin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel_dims: Option<[usize; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coranks: Option<[usize; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intersection_dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sum_dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub product_kernel_dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub commutator: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_rank: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_candidates: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary: Option<bool>,
}

impl Rung {
    fn at(n: usize) -> Self {
        Self {
            n,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub verdict: Verdict,
    pub condition: Condition,
    pub ladder: Vec<Rung>,
    pub tolerances: Tolerances,
    pub narrative: String,
    pub schema_version: String,
}

impl CertificateReport {
    fn new(verdict: Verdict, condition: Condition, ladder: Vec<Rung>, tol: &Tolerances, narrative: String) -> Self {
        Self {
            verdict,
            condition,
            ladder,
            tolerances: tol.clone(),
            narrative,
            schema_version: SCHEMA_VERSION.to_string(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports contain only finite numbers and strings")
    }
}

type SectionFn = Box<dyn Fn(usize) -> Result<OpMatrix> + Send + Sync>;
type AnnotateFn = Box<dyn Fn(usize, &mut Rung) + Send + Sync>;

/// A size-indexed family of finite sections of one operator.
///
/// `square(N)` is read for kernels and point spectrum; `wide(N)` has the same
/// rows and extra columns, so that its range is not cut off at the boundary.
pub struct SectionFamily {
    name: String,
    square: SectionFn,
    wide: Option<SectionFn>,
    annotate: Option<AnnotateFn>,
}

impl SectionFamily {
    pub fn new(
        name: impl Into<String>,
        square: impl Fn(usize) -> Result<OpMatrix> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            square: Box::new(square),
            wide: None,
            annotate: None,
        }
    }

    pub fn with_wide(mut self, wide: impl Fn(usize) -> Result<OpMatrix> + Send + Sync + 'static) -> Self {
        self.wide = Some(Box::new(wide));
        self
    }

    pub fn with_annotation(mut self, f: impl Fn(usize, &mut Rung) + Send + Sync + 'static) -> Self {
        self.annotate = Some(Box::new(f));
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn square(&self, n: usize) -> Result<OpMatrix> {
        (self.square)(n)
    }

    pub fn wide(&self, n: usize) -> Result<OpMatrix> {
        match &self.wide {
            Some(f) => f(n),
            None => Err(invalid("family", format!("{} has no wide sections", self.name))),
        }
    }

    pub fn has_wide(&self) -> bool {
        self.wide.is_some()
    }

    fn annotate(&self, n: usize, rung: &mut Rung) {
        if let Some(f) = &self.annotate {
            f(n, rung);
        }
    }
}

type PairFn<T> = Box<dyn Fn(usize) -> Result<(T, T)> + Send + Sync>;

/// A size-indexed family of commuting pairs, with square and wide sections.
pub struct PairFamily<T> {
    name: String,
    square: PairFn<T>,
    wide: PairFn<T>,
    annotate: Option<AnnotateFn>,
}

impl<T: LinearMap> PairFamily<T> {
    pub fn new(
        name: impl Into<String>,
        square: impl Fn(usize) -> Result<(T, T)> + Send + Sync + 'static,
        wide: impl Fn(usize) -> Result<(T, T)> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            square: Box::new(square),
            wide: Box::new(wide),
            annotate: None,
        }
    }

    pub fn with_annotation(mut self, f: impl Fn(usize, &mut Rung) + Send + Sync + 'static) -> Self {
        self.annotate = Some(Box::new(f));
        self
    }

    /// The same family with the two operators exchanged.
    pub fn swapped(self) -> Self
    where
        T: 'static,
    {
        let PairFamily {
            name,
            square,
            wide,
            annotate,
        } = self;
        PairFamily {
            name: format!("{name} (swapped)"),
            square: Box::new(move |n| square(n).map(|(a, b)| (b, a))),
            wide: Box::new(move |n| wide(n).map(|(a, b)| (b, a))),
            annotate,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

pub fn validate_ladder(ladder: &[usize]) -> Result<()> {
    let increasing = ladder.windows(2).all(|w| w[0] < w[1]);
    if ladder.len() < MIN_RUNGS || !increasing || ladder[0] == 0 {
        return Err(Error::Ladder {
            min: MIN_RUNGS,
            got: ladder.to_vec(),
        });
    }
    Ok(())
}

fn strictly_increasing(v: &[usize]) -> bool {
    v.len() >= 2 && v.windows(2).all(|w| w[0] < w[1])
}

fn constant(v: &[usize]) -> bool {
    v.windows(2).all(|w| w[0] == w[1])
}

fn nullity_from(s: &[f64], cols: usize, tol: f64) -> usize {
    cols - numlin::rank_from_values(s, tol)
}

/// Kernel data of a square section and range data of a wide section.
fn section_rung(family: &SectionFamily, n: usize, tol: &Tolerances, lambda: Option<Complex64>) -> Result<Rung> {
    let mut rung = Rung::at(n);
    family.annotate(n, &mut rung);
    let mut sq = family.square(n)?;
    if let Some(l) = lambda {
        sq = sq.shifted(l);
        rung.lambda = Some([l.re, l.im]);
    }
    let s = numlin::singular_values(&sq.isometric());
    let cols = sq.cols();
    rung.kernel_dim = Some(nullity_from(&s, cols, tol.tol_rel));
    rung.kernel_dim_sweep = Some(tol.sweep.iter().map(|&t| nullity_from(&s, cols, t)).collect());
    rung.sigma_min = Some(if sq.rows() >= cols {
        s.last().copied().unwrap_or(0.0)
    } else {
        0.0
    });
    if family.has_wide() {
        let mut w = family.wide(n)?;
        if let Some(l) = lambda {
            w = w.shifted(l);
        }
        let (corank, margin) = range_data(&w, tol);
        rung.corank = Some(corank);
        rung.range_margin = Some(margin);
    }
    Ok(rung)
}

/// Corank of a wide section and the smallest retained singular value
/// relative to the largest one.
fn range_data(w: &OpMatrix, tol: &Tolerances) -> (usize, f64) {
    let sw = numlin::singular_values(&w.isometric());
    let rank = numlin::rank_from_values(&sw, tol.tol_rel);
    let margin = if rank > 0 { sw[rank - 1] / sw[0] } else { 0.0 };
    (w.rows() - rank, margin)
}

fn square_margin(r: &Rung, family: &SectionFamily, tol: &Tolerances) -> Result<bool> {
    // injectivity margin of the square section relative to its norm
    let sq = family.square(r.n)?;
    let s = numlin::singular_values(&sq.isometric());
    let smax = s.first().copied().unwrap_or(0.0);
    Ok(smax > 0.0 && r.sigma_min.unwrap_or(0.0) > tol.sigma_floor * smax)
}

fn range_ok(r: &Rung, tol: &Tolerances, allow_constant_corank: bool) -> bool {
    let margin = r.range_margin.map(|m| m >= tol.sigma_floor).unwrap_or(false);
    margin && (allow_constant_corank || r.corank == Some(0))
}

fn kernel_condition(
    family: &SectionFamily,
    ladder: &[usize],
    tol: &Tolerances,
    plus: bool,
) -> Result<CertificateReport> {
    validate_ladder(ladder)?;
    tol.validate()?;
    if !family.has_wide() {
        return Err(invalid("family", "range checks need wide sections"));
    }
    let rungs: Vec<Rung> = ladder
        .par_iter()
        .map(|&n| section_rung(family, n, tol, None))
        .collect::<Result<_>>()?;
    let kdims: Vec<usize> = rungs.iter().map(|r| r.kernel_dim.unwrap_or(0)).collect();
    let coranks: Vec<usize> = rungs.iter().map(|r| r.corank.unwrap_or(usize::MAX)).collect();
    let range = rungs.iter().all(|r| range_ok(r, tol, plus));
    let corank_rule = if plus { constant(&coranks) } else { coranks.iter().all(|&c| c == 0) };
    let cond = if plus { Condition::Cplus } else { Condition::C };
    let label = if plus { "(C+)" } else { "(C)" };
    let range_text = if plus {
        "finite-codimensional range (corank constant across the ladder)"
    } else {
        "surjectivity (corank 0 on wide sections)"
    };
    let (verdict, why) = if strictly_increasing(&kdims) && corank_rule && range {
        (
            Verdict::CertifiedAtScale,
            format!("kernel dimensions {kdims:?} grow at every rung and the wide sections show {range_text}, coranks {coranks:?}"),
        )
    } else if constant(&kdims) {
        if kdims[0] == 0 {
            let injective = rungs
                .iter()
                .map(|r| square_margin(r, family, tol))
                .collect::<Result<Vec<bool>>>()?
                .into_iter()
                .all(|b| b);
            if injective {
                (
                    Verdict::Falsified,
                    "every section is injective with sigma_min bounded away from zero, so the kernel is trivial".to_string(),
                )
            } else {
                (
                    Verdict::Inconclusive,
                    "kernel dimension 0 at the threshold, but sigma_min falls below the floor".to_string(),
                )
            }
        } else {
            (
                Verdict::Inconclusive,
                format!(
                    "kernel dimension stays at {} across the ladder; bounded but nonzero, so injectivity cannot be used",
                    kdims[0]
                ),
            )
        }
    } else {
        (
            Verdict::Inconclusive,
            format!("kernel dimensions {kdims:?} and coranks {coranks:?} fit neither rule"),
        )
    };
    let narrative = format!(
        "Condition {label} for {}: infinite-dimensional kernel together with {range_text}. {why}. {LIMITATION}",
        family.name()
    );
    Ok(CertificateReport::new(verdict, cond, rungs, tol, narrative))
}

/// Condition (C): infinite-dimensional kernel and onto.
pub fn check_c(family: &SectionFamily, ladder: &[usize], tol: &Tolerances) -> Result<CertificateReport> {
    kernel_condition(family, ladder, tol, false)
}

/// Condition (C+): infinite-dimensional kernel and finite-codimensional range.
pub fn check_cplus(family: &SectionFamily, ladder: &[usize], tol: &Tolerances) -> Result<CertificateReport> {
    kernel_condition(family, ladder, tol, true)
}

fn pair_rung<T: LinearMap>(family: &PairFamily<T>, n: usize, tol: &Tolerances) -> Result<Rung> {
    let mut rung = Rung::at(n);
    if let Some(f) = &family.annotate {
        f(n, &mut rung);
    }
    let (u1, u2) = (family.square)(n)?;
    let scale = u1.frobenius() * u2.frobenius();
    let comm = u1.commutator_bound(&u2)?;
    let rel = if scale > 0.0 { comm / scale } else { comm };
    if rel > tol.tol_rel {
        return Err(Error::NonCommuting(rel));
    }
    rung.commutator = Some(rel);
    let k1 = u1.kernel(tol.tol_rel);
    let k2 = u2.kernel(tol.tol_rel);
    let prod = u1.compose(&u2)?;
    rung.kernel_dims = Some([k1.dim(), k2.dim()]);
    let sum = numlin::subspace_sum_dim(&k1, &k2)?;
    rung.intersection_dim = Some(k1.dim() + k2.dim() - sum);
    rung.sum_dim = Some(sum);
    rung.product_kernel_dim = Some(prod.nullity(tol.tol_rel));
    let (w1, w2) = (family.wide)(n)?;
    rung.coranks = Some([w1.corank(tol.tol_rel), w2.corank(tol.tol_rel)]);
    Ok(rung)
}

/// Condition (M) for a commuting pair: growing kernel intersection,
/// `Ker(U1 U2) = Ker U1 + Ker U2`, and both operators onto.
pub fn check_m<T>(family: &PairFamily<T>, ladder: &[usize], tol: &Tolerances) -> Result<CertificateReport>
where
    T: LinearMap + Send,
{
    validate_ladder(ladder)?;
    tol.validate()?;
    let rungs: Vec<Rung> = ladder
        .par_iter()
        .map(|&n| pair_rung(family, n, tol))
        .collect::<Result<_>>()?;
    let inter: Vec<usize> = rungs.iter().map(|r| r.intersection_dim.unwrap_or(0)).collect();
    let sum_ok = rungs.iter().all(|r| r.product_kernel_dim == r.sum_dim);
    let onto = rungs.iter().all(|r| r.coranks == Some([0, 0]));
    let (verdict, why) = if strictly_increasing(&inter) && sum_ok && onto {
        (
            Verdict::CertifiedAtScale,
            format!("intersections {inter:?} grow, Ker(U1U2) equals the kernel sum at every rung, both wide sections are onto"),
        )
    } else if constant(&inter) {
        (
            Verdict::Falsified,
            format!("the kernel intersection stays at dimension {} across the ladder", inter[0]),
        )
    } else {
        (
            Verdict::Inconclusive,
            format!("intersections {inter:?}, kernel-sum equality {sum_ok}, onto {onto}"),
        )
    };
    let narrative = format!(
        "Condition (M) for the commuting pair {}: infinite-dimensional Ker(U1) and Ker(U2) intersection, \
Ker(U1U2) = Ker(U1) + Ker(U2), and both surjective. {why}. {LIMITATION}",
        family.name()
    );
    Ok(CertificateReport::new(verdict, Condition::M, rungs, tol, narrative))
}

/// Where a spectral parameter sits relative to a candidate region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Disc { radius: f64 },
    Annulus { inner: f64, outer: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    Interior,
    Boundary,
    Exterior,
}

const BOUNDARY_TOL: f64 = 1e-12;

impl Region {
    pub fn place(&self, lambda: Complex64) -> Placement {
        let m = lambda.norm();
        let near = |r: f64| (m - r).abs() <= BOUNDARY_TOL * r.max(1.0);
        match *self {
            Region::Disc { radius } => {
                if near(radius) {
                    Placement::Boundary
                } else if m < radius {
                    Placement::Interior
                } else {
                    Placement::Exterior
                }
            }
            Region::Annulus { inner, outer } => {
                if near(inner) || near(outer) {
                    Placement::Boundary
                } else if m > inner && m < outer {
                    Placement::Interior
                } else {
                    Placement::Exterior
                }
            }
        }
    }
}

type CandidateFn = Box<dyn Fn(usize, Complex64) -> Result<Vec<Vec<Complex64>>> + Send + Sync>;

/// How eigenvalue multiplicity is probed at one truncation.
pub enum MultiplicityProbe {
    /// Numerical kernel dimension of the square section of `A - lambda`.
    Kernel,
    /// Number of candidate eigenvectors (domain coefficients of the square
    /// section) whose relative residual on the leading `N/4` window is below
    /// the residual tolerance.
    Residual(CandidateFn),
}

impl MultiplicityProbe {
    pub fn residual(f: impl Fn(usize, Complex64) -> Result<Vec<Vec<Complex64>>> + Send + Sync + 'static) -> Self {
        MultiplicityProbe::Residual(Box::new(f))
    }
}

/// Witness count and rank of the witnesses' leading windows.
pub fn residual_witness(a: &OpMatrix, lambda: Complex64, candidates: &[Vec<Complex64>], tol: &Tolerances) -> Result<(usize, usize)> {
    let n = a.cols();
    let window = (n / 4).max(1).min(a.rows());
    let shifted = a.shifted(lambda);
    let wd = a.domain().weights();
    let wc = a.codomain().weights();
    let mut passing: Vec<Vec<Complex64>> = Vec::new();
    for f in candidates {
        if f.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: f.len() });
        }
        let x = nalgebra::DVector::from_column_slice(f);
        let y = shifted.entries() * x;
        let num: f64 = (0..window).map(|i| wc[i] * y[i].norm_sqr()).sum::<f64>().sqrt();
        let den: f64 = (0..window).map(|i| wd[i] * f[i].norm_sqr()).sum::<f64>().sqrt();
        if den > 0.0 && num / den < tol.residual {
            let col: Vec<Complex64> = (0..window).map(|i| f[i] * (wd[i].sqrt() / den)).collect();
            passing.push(col);
        }
    }
    let count = passing.len();
    let rank = if count == 0 {
        0
    } else {
        let m = CMat::from_fn(window, count, |i, j| passing[j][i]);
        numlin::rank(&m, tol.tol_rel)
    };
    Ok((count, rank))
}

/// Options for [`spectral_falsifier`].
pub struct SpectralProbe {
    pub probe: MultiplicityProbe,
    /// Also record the corank of `A - lambda` on wide sections; certification
    /// then needs corank 0 at every rung.
    pub with_corank: bool,
}

fn spectral_cell(
    family: &SectionFamily,
    probe: &SpectralProbe,
    lambda: Complex64,
    n: usize,
    tol: &Tolerances,
    boundary: bool,
) -> Result<Rung> {
    let mut rung = match &probe.probe {
        MultiplicityProbe::Kernel => {
            let mut r = section_rung_square_only(family, n, tol, lambda)?;
            r.lambda = Some([lambda.re, lambda.im]);
            r
        }
        MultiplicityProbe::Residual(cands) => {
            let mut r = Rung::at(n);
            family.annotate(n, &mut r);
            r.lambda = Some([lambda.re, lambda.im]);
            let a = family.square(n)?;
            let c = cands(n, lambda)?;
            let (count, rank) = residual_witness(&a, lambda, &c, tol)?;
            r.witness_count = Some(count);
            r.witness_rank = Some(rank);
            r.witness_candidates = Some(c.len());
            r
        }
    };
    if probe.with_corank {
        let w = family.wide(n)?.shifted(lambda);
        let (corank, margin) = range_data(&w, tol);
        rung.corank = Some(corank);
        rung.range_margin = Some(margin);
    }
    if boundary {
        rung.boundary = Some(true);
    }
    Ok(rung)
}

fn section_rung_square_only(family: &SectionFamily, n: usize, tol: &Tolerances, lambda: Complex64) -> Result<Rung> {
    let mut rung = Rung::at(n);
    family.annotate(n, &mut rung);
    let sq = family.square(n)?.shifted(lambda);
    let s = numlin::singular_values(&sq.isometric());
    let cols = sq.cols();
    rung.kernel_dim = Some(nullity_from(&s, cols, tol.tol_rel));
    rung.kernel_dim_sweep = Some(tol.sweep.iter().map(|&t| nullity_from(&s, cols, t)).collect());
    rung.sigma_min = Some(s.last().copied().unwrap_or(0.0));
    Ok(rung)
}

fn multiplicity(r: &Rung) -> usize {
    r.witness_count.or(r.kernel_dim).unwrap_or(0)
}

/// Tracks the multiplicity of each `lambda` across the ladder.
///
/// Falsified when no interior `lambda` shows growing multiplicity (no disc
/// of infinite-multiplicity eigenvalues); certified at scale when every
/// interior `lambda` does (and, if requested, `A - lambda` stays onto);
/// inconclusive otherwise. Boundary points are flagged and excluded.
pub fn spectral_falsifier(
    family: &SectionFamily,
    region: Region,
    grid: &[Complex64],
    ladder: &[usize],
    probe: &SpectralProbe,
    tol: &Tolerances,
) -> Result<CertificateReport> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    validate_ladder(ladder)?;
    tol.validate()?;
    if probe.with_corank && !family.has_wide() {
        return Err(invalid("family", "corank checks need wide sections"));
    }
    let cells: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|i| (0..ladder.len()).map(move |j| (i, j)))
        .collect();
    let rungs: Vec<Rung> = cells
        .par_iter()
        .map(|&(i, j)| {
            let lambda = grid[i];
            let boundary = region.place(lambda) != Placement::Interior;
            if boundary {
                let mut r = Rung::at(ladder[j]);
                r.lambda = Some([lambda.re, lambda.im]);
                r.boundary = Some(true);
                Ok(r)
            } else {
                spectral_cell(family, probe, lambda, ladder[j], tol, false)
            }
        })
        .collect::<Result<_>>()?;
    let mut growing = 0usize;
    let mut flat = 0usize;
    let mut excluded = 0usize;
    let mut onto = true;
    let mut exceptional: Vec<String> = Vec::new();
    for (i, chunk) in rungs.chunks(ladder.len()).enumerate() {
        if chunk[0].boundary == Some(true) {
            excluded += 1;
            continue;
        }
        let m: Vec<usize> = chunk.iter().map(multiplicity).collect();
        if strictly_increasing(&m) {
            growing += 1;
        } else {
            flat += 1;
        }
        if m.iter().any(|&k| k > 0) && !strictly_increasing(&m) {
            exceptional.push(format!("{} -> {m:?}", grid[i]));
        }
        if probe.with_corank {
            onto &= chunk.iter().all(|r| range_ok(r, tol, false));
        }
    }
    let interior = growing + flat;
    let what = match probe.probe {
        MultiplicityProbe::Kernel => "kernel dimension of the square section",
        MultiplicityProbe::Residual(_) => "residual-witness count on the leading quarter window",
    };
    let (verdict, why) = if interior == 0 {
        (Verdict::Inconclusive, "every grid point lies on or outside the region boundary".to_string())
    } else if growing == 0 {
        (
            Verdict::Falsified,
            format!("no interior lambda shows a growing {what}; bounded multiplicities at {exceptional:?}"),
        )
    } else if flat == 0 && onto {
        (
            Verdict::CertifiedAtScale,
            format!(
                "the {what} grows at all {growing} interior lambda{}",
                if probe.with_corank { " and A - lambda stays onto" } else { "" }
            ),
        )
    } else {
        (
            Verdict::Inconclusive,
            format!("{growing} growing and {flat} bounded interior lambda, onto = {onto}"),
        )
    };
    let narrative = format!(
        "Spectral necessary condition for {}: a universal operator has a disc of eigenvalues of infinite \
multiplicity, and T - lambda cannot be universal for lambda on the boundary of the spectrum. {why}. \
{excluded} boundary or exterior lambda excluded. {LIMITATION}",
        family.name()
    );
    Ok(CertificateReport::new(verdict, Condition::Spectral, rungs, tol, narrative))
}

/// `T - lambda` is not universal when `lambda` lies on the boundary of the
/// spectrum. Records `sigma_min` of the square sections of `A - lambda`.
pub fn boundary_falsifier(
    family: &SectionFamily,
    region: Region,
    lambda: Complex64,
    ladder: &[usize],
    tol: &Tolerances,
) -> Result<CertificateReport> {
    validate_ladder(ladder)?;
    tol.validate()?;
    let place = region.place(lambda);
    let rungs: Vec<Rung> = ladder
        .par_iter()
        .map(|&n| {
            let mut r = section_rung_square_only(family, n, tol, lambda)?;
            r.lambda = Some([lambda.re, lambda.im]);
            r.boundary = Some(place == Placement::Boundary);
            Ok(r)
        })
        .collect::<Result<_>>()?;
    let (verdict, why) = match place {
        Placement::Boundary => (
            Verdict::Falsified,
            format!("lambda = {lambda} lies on the boundary of the spectral region"),
        ),
        Placement::Interior => (
            Verdict::Inconclusive,
            format!("lambda = {lambda} is interior; the boundary rule does not apply"),
        ),
        Placement::Exterior => (
            Verdict::Inconclusive,
            format!("lambda = {lambda} is outside the region, so A - lambda is invertible there"),
        ),
    };
    let narrative = format!(
        "Boundary rule for {}: T - lambda is not universal for lambda on the boundary of the spectrum. {why}.",
        family.name()
    );
    Ok(CertificateReport::new(verdict, Condition::Boundary, rungs, tol, narrative))
}

/// Explicit algebraic relation between the two members of a pair.
#[derive(Debug, Clone, PartialEq)]
pub enum AlgebraicWitness {
    /// `W = p(T) T` with `p(z) = coeffs[0] z + coeffs[1] z^2 + ...`, so `p(0) = 0`.
    Polynomial(Vec<Complex64>),
    /// `T = base^m` and `W = base^n`.
    Powers { base: OpMatrix, m: u32, n: u32 },
    /// `W = S T` for an explicit `S` commuting with `T`. Sections may be
    /// rectangular as long as `S T` is conformable with `W`.
    Commutant(OpMatrix),
}

fn power(a: &OpMatrix, k: u32) -> Result<OpMatrix> {
    let mut out = OpMatrix::identity(a.domain());
    for _ in 0..k {
        out = a.compose(&out)?;
    }
    Ok(out)
}

fn relative_gap(target: &OpMatrix, model: &OpMatrix) -> Result<f64> {
    let diff = target.sub(model)?;
    let scale = numlin::fro_norm(&target.isometric());
    let d = numlin::fro_norm(&diff.isometric());
    Ok(if scale > 0.0 { d / scale } else { d })
}

/// Falsifies a pair that satisfies a supplied algebraic relation. Never certifies.
pub fn algebraic_falsifier(
    t: &OpMatrix,
    w: &OpMatrix,
    witness: &AlgebraicWitness,
    tol: &Tolerances,
) -> Result<CertificateReport> {
    tol.validate()?;
    let (gap, what) = match witness {
        AlgebraicWitness::Polynomial(coeffs) => {
            if coeffs.is_empty() {
                return Err(invalid("witness", "polynomial needs at least one coefficient"));
            }
            // p(T) T = sum_k c_k T^{k+1}
            let mut acc = OpMatrix::zeros(t.domain(), t.codomain());
            let mut tp = t.compose(t)?;
            for c in coeffs {
                acc = acc.add(&tp.scale(*c))?;
                tp = t.compose(&tp)?;
            }
            (relative_gap(w, &acc)?, format!("W = p(T) T with p of degree {}", coeffs.len()))
        }
        AlgebraicWitness::Powers { base, m, n } => {
            if *m == 0 || *n == 0 {
                return Err(invalid("witness", "powers must be positive"));
            }
            let gt = relative_gap(t, &power(base, *m)?)?;
            let gw = relative_gap(w, &power(base, *n)?)?;
            (gt.max(gw), format!("(T, W) = (A^{m}, A^{n})"))
        }
        AlgebraicWitness::Commutant(s) => {
            let st = s.compose(t)?;
            (relative_gap(w, &st)?, "W = S T with S in the commutant of T".to_string())
        }
    };
    let mut rung = Rung::at(w.rows());
    rung.commutator = Some(gap);
    let (verdict, why) = if gap <= tol.tol_rel {
        (Verdict::Falsified, format!("the relation {what} holds to relative error {gap:e}"))
    } else {
        (
            Verdict::Inconclusive,
            format!("the relation {what} fails (relative error {gap:e}); nothing follows"),
        )
    };
    let narrative = format!(
        "Algebraic falsifier: pairs (T, ST) with S commuting with T, in particular (T, p(T)T) with p(0) = 0, \
and pairs of powers (A^m, A^n) are never universal commuting pairs. {why}."
    );
    Ok(CertificateReport::new(verdict, Condition::Algebraic, vec![rung], tol, narrative))
}

/// Singular values of `reference - a` and their decay `s_j / s_1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayProfile {
    #[serde(rename = "N")]
    pub n: usize,
    pub singular_values: Vec<f64>,
    pub ratios: Vec<f64>,
}

impl DecayProfile {
    /// `s_j / s_1` with 1-based `j`.
    pub fn ratio(&self, j: usize) -> Option<f64> {
        self.ratios.get(j.checked_sub(1)?).copied()
    }

    pub fn numerical_rank(&self, tol_rel: f64) -> usize {
        numlin::rank_from_values(&self.singular_values, tol_rel)
    }
}

pub fn compactness_proxy(a: &OpMatrix, reference: &OpMatrix) -> Result<DecayProfile> {
    let diff = reference.sub(a)?;
    let s = numlin::singular_values(&diff.isometric());
    let s1 = s.first().copied().unwrap_or(0.0);
    let ratios = s.iter().map(|&x| if s1 > 0.0 { x / s1 } else { 0.0 }).collect();
    Ok(DecayProfile {
        n: a.rows(),
        singular_values: s,
        ratios,
    })
}
