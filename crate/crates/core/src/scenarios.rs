//! Registry of named experiments.
//!
//! Each scenario builds its operators from numeric parameters, runs the
//! relevant certificates and collects reports and tables. Running a scenario
//! is a pure function of its parameters, so repeated runs serialize to the
//! same bytes.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analytic::{
    self, covering_map_zeros, halfplane_radius, holomorphic_eigenfield, log_ratio_power_coeffs, psi,
    ratio_condition, semigroup_param, EigenfunctionSpec, HalfPlaneSpace, HyperbolicAuto, SamplingOptions,
};
use crate::certify::{
    self, algebraic_falsifier, boundary_falsifier, check_c, check_cplus, check_m, compactness_proxy,
    spectral_falsifier, AlgebraicWitness, CertificateReport, MultiplicityProbe, PairFamily, Region, SectionFamily,
    SpectralProbe, Tolerances,
};
use crate::error::{invalid, Error, Result};
use crate::numlin::{self, CMat, LinearMap};
use crate::opbuild::{
    self, adjoint, backward_shift, backward_shift_section, block2x2, block_backward_shift,
    block_backward_shift_section, block_forward_shift, composition_matrix, composition_section, compress_zh2,
    decimation_section, forward_shift_section, heller_principal_signed, hs_left, hs_left_on, hs_right,
    hs_right_on, mult_z, rank_one, weighted_adjoint, BlockShiftSpec, MiddleSign, OpMatrix,
};
use crate::spaces::{CoeffVec, NormVariant, SpaceSpec};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, Copy)]
pub struct ParamDef {
    pub key: &'static str,
    pub default: f64,
    pub help: &'static str,
}

const fn p(key: &'static str, default: f64, help: &'static str) -> ParamDef {
    ParamDef { key, default, help }
}

/// Tolerance keys accepted by every scenario.
pub const COMMON_PARAMS: [ParamDef; 3] = [
    p("tol_rel", numlin::DEFAULT_TOL, "relative singular-value threshold"),
    p("sigma_floor", 1e-6, "smallest sigma_min / sigma_max that counts as onto or injective"),
    p("residual", 1e-4, "relative residual below which a candidate is an eigenvector witness"),
];

pub struct ScenarioDef {
    pub name: &'static str,
    /// The result being reproduced, in words.
    pub anchor: &'static str,
    pub summary: &'static str,
    pub params: &'static [ParamDef],
    /// Empty when the scenario has no truncation ladder.
    pub ladder: &'static [usize],
    check: fn(&Ctx) -> Result<()>,
    run: fn(&Ctx) -> Result<Outcome>,
}

/// Validated parameters of one run.
#[derive(Debug, Clone)]
pub struct Ctx {
    pub name: &'static str,
    pub params: BTreeMap<&'static str, f64>,
    pub ladder: Vec<usize>,
    pub tol: Tolerances,
}

impl Ctx {
    fn get(&self, key: &'static str) -> f64 {
        *self.params.get(key).expect("parameter declared by the scenario")
    }

    fn count(&self, key: &'static str) -> Result<usize> {
        let v = self.get(key);
        if !(v >= 0.0 && v.fract() == 0.0 && v <= 1e9) {
            return Err(invalid(key, format!("need a non-negative integer, got {v}")));
        }
        Ok(v as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Index of a column by header name.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let err = |e: csv::Error| Error::Format(e.to_string());
        out.write_record(&self.header).map_err(err)?;
        for row in &self.rows {
            out.write_record(row).map_err(err)?;
        }
        out.flush().map_err(|e| Error::Format(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedReport {
    pub name: String,
    pub report: CertificateReport,
}

#[derive(Debug, Default)]
struct Outcome {
    reports: Vec<NamedReport>,
    tables: Vec<Table>,
    notes: Vec<String>,
}

impl Outcome {
    fn report(&mut self, name: &str, report: CertificateReport) {
        self.reports.push(NamedReport {
            name: name.to_string(),
            report,
        });
    }
}

/// Everything a scenario produces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioOutput {
    pub scenario: String,
    pub anchor: String,
    pub schema_version: String,
    pub params: BTreeMap<String, f64>,
    pub ladder: Vec<usize>,
    pub reports: Vec<NamedReport>,
    pub tables: Vec<Table>,
    pub notes: Vec<String>,
}

impl ScenarioOutput {
    pub fn report(&self, name: &str) -> Option<&CertificateReport> {
        self.reports.iter().find(|r| r.name == name).map(|r| &r.report)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// Compact summary: parameters, verdicts, table names and notes.
    pub fn summary_json(&self) -> String {
        let verdicts: BTreeMap<&str, certify::Verdict> =
            self.reports.iter().map(|r| (r.name.as_str(), r.report.verdict)).collect();
        let tables: Vec<&str> = self.tables.iter().map(|t| t.name.as_str()).collect();
        let v = serde_json::json!({
            "scenario": self.scenario,
            "anchor": self.anchor,
            "schema_version": self.schema_version,
            "params": self.params,
            "ladder": self.ladder,
            "verdicts": verdicts,
            "tables": tables,
            "notes": self.notes,
        });
        serde_json::to_string_pretty(&v).expect("summary holds finite numbers and strings")
    }
}

pub fn registry() -> &'static [ScenarioDef] {
    &REGISTRY
}

pub fn find(name: &str) -> Result<&'static ScenarioDef> {
    REGISTRY
        .iter()
        .find(|d| d.name == name)
        .ok_or_else(|| invalid("scenario", format!("unknown scenario {name:?}")))
}

/// Parses and range-checks parameters without running anything.
pub fn prepare(name: &str, user: &BTreeMap<String, String>, ladder: Option<&[usize]>) -> Result<Ctx> {
    let def = find(name)?;
    let mut params: BTreeMap<&'static str, f64> = BTreeMap::new();
    for d in def.params.iter().chain(COMMON_PARAMS.iter()) {
        params.insert(d.key, d.default);
    }
    for (k, v) in user {
        let Some((&key, _)) = params.get_key_value(k.as_str()) else {
            return Err(invalid("param", format!("{name} has no parameter {k:?}")));
        };
        let x: f64 = v
            .trim()
            .parse()
            .map_err(|_| invalid(key, format!("{v:?} is not a number")))?;
        if !x.is_finite() {
            return Err(invalid(key, format!("{v:?} is not finite")));
        }
        params.insert(key, x);
    }
    let ladder = match ladder {
        Some(l) if def.ladder.is_empty() => {
            return Err(invalid("ladder", format!("{name} takes no ladder, got {l:?}")));
        }
        Some(l) => l.to_vec(),
        None => def.ladder.to_vec(),
    };
    if !ladder.is_empty() {
        certify::validate_ladder(&ladder)?;
    }
    let tol = Tolerances {
        tol_rel: params["tol_rel"],
        sigma_floor: params["sigma_floor"],
        residual: params["residual"],
        ..Tolerances::default()
    };
    tol.validate()?;
    let ctx = Ctx {
        name: def.name,
        params,
        ladder,
        tol,
    };
    (def.check)(&ctx)?;
    Ok(ctx)
}

pub fn validate(name: &str, user: &BTreeMap<String, String>, ladder: Option<&[usize]>) -> Result<()> {
    prepare(name, user, ladder).map(|_| ())
}

pub fn run(name: &str, user: &BTreeMap<String, String>, ladder: Option<&[usize]>) -> Result<ScenarioOutput> {
    let ctx = prepare(name, user, ladder)?;
    run_prepared(&ctx)
}

pub fn run_prepared(ctx: &Ctx) -> Result<ScenarioOutput> {
    let def = find(ctx.name)?;
    let mut out = (def.run)(ctx)?;
    for r in &mut out.reports {
        r.report.narrative = format!("{} Anchor: {}.", r.report.narrative, def.anchor);
    }
    Ok(ScenarioOutput {
        scenario: def.name.to_string(),
        anchor: def.anchor.to_string(),
        schema_version: SCHEMA_VERSION.to_string(),
        params: ctx.params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        ladder: ctx.ladder.clone(),
        reports: out.reports,
        tables: out.tables,
        notes: out.notes,
    })
}

// ---------------------------------------------------------------------------
// shared helpers

fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn hardy(n: usize) -> Result<SpaceSpec> {
    SpaceSpec::hardy(n)
}

fn identity_section(rows: usize, cols: usize) -> Result<OpMatrix> {
    OpMatrix::new(
        CMat::identity(rows, cols),
        hardy(cols)?,
        hardy(rows)?,
        0,
        format!("identity [{rows}x{cols}]"),
    )
}

fn diag_section(rows: usize, cols: usize, f: impl Fn(usize) -> f64) -> Result<OpMatrix> {
    let e = CMat::from_fn(rows, cols, |i, j| if i == j { cx(f(i), 0.0) } else { cx(0.0, 0.0) });
    OpMatrix::new(e, hardy(cols)?, hardy(rows)?, 0, format!("diagonal [{rows}x{cols}]"))
}

fn zeros(rows: usize, cols: usize) -> Result<OpMatrix> {
    Ok(OpMatrix::zeros(&hardy(cols)?, &hardy(rows)?))
}

fn direct_sum(a: &OpMatrix, b: &OpMatrix) -> Result<OpMatrix> {
    block2x2(Some(a), None, None, Some(b))
}

fn decimation(n: usize, wide: bool) -> Result<OpMatrix> {
    decimation_section(n, if wide { 2 * n } else { n })
}

fn basis(n: usize, k: usize, scale: f64) -> Result<CoeffVec> {
    let mut v = vec![cx(0.0, 0.0); n];
    v[k] = cx(scale, 0.0);
    CoeffVec::new(v, &hardy(n)?)
}

fn check_r(ctx: &Ctx, key: &'static str) -> Result<()> {
    let r = ctx.get(key);
    if !(r > 0.0 && r < 1.0) {
        return Err(invalid(key, format!("need 0 < {key} < 1, got {r}")));
    }
    Ok(())
}

fn no_check(_: &Ctx) -> Result<()> {
    Ok(())
}

fn ladder_table(name: &str, report: &CertificateReport) -> Table {
    let mut t = Table::new(
        name,
        &[
            "N",
            "lambda_re",
            "lambda_im",
            "kernel_dim",
            "corank",
            "sigma_min",
            "range_margin",
            "intersection_dim",
            "sum_dim",
            "product_kernel_dim",
            "witness_count",
            "witness_rank",
            "boundary",
        ],
    );
    let opt_u = |x: Option<usize>| x.map(|v| v.to_string()).unwrap_or_default();
    let opt_f = |x: Option<f64>| x.map(num).unwrap_or_default();
    for r in &report.ladder {
        let (lr, li) = match r.lambda {
            Some([a, b]) => (num(a), num(b)),
            None => (String::new(), String::new()),
        };
        t.push(vec![
            r.n.to_string(),
            lr,
            li,
            opt_u(r.kernel_dim.or(r.kernel_dims.map(|k| k[0]))),
            opt_u(r.corank),
            opt_f(r.sigma_min),
            opt_f(r.range_margin),
            opt_u(r.intersection_dim),
            opt_u(r.sum_dim),
            opt_u(r.product_kernel_dim),
            opt_u(r.witness_count),
            opt_u(r.witness_rank),
            r.boundary.map(|b| b.to_string()).unwrap_or_default(),
        ]);
    }
    t
}

// ---------------------------------------------------------------------------
// eigenfields of the block backward shift

fn block_shift_family(blocks: usize) -> SectionFamily {
    SectionFamily::new(format!("block backward shift, K = {blocks}"), move |n| {
        block_backward_shift(BlockShiftSpec::new(blocks, n / blocks)?)
    })
    .with_wide(move |n| block_backward_shift_section(BlockShiftSpec::new(blocks, n / blocks)?, blocks + 1))
    .with_annotation(move |n, r| {
        r.blocks = Some(blocks);
        r.block_dim = Some(n / blocks);
    })
}

fn check_eigenfield(ctx: &Ctx) -> Result<()> {
    let k = ctx.count("blocks")?;
    if k < 2 {
        return Err(invalid("blocks", "need at least 2 blocks"));
    }
    if let Some(&n) = ctx.ladder.iter().find(|&&n| n % k != 0 || n < k) {
        return Err(invalid("ladder", format!("size {n} is not a positive multiple of {k} blocks")));
    }
    let z = cx(ctx.get("z_re"), ctx.get("z_im"));
    if !(z.norm() < 1.0) {
        return Err(invalid("z", format!("{z} is not in the open disc")));
    }
    ctx.count("rings")?;
    ctx.count("angles")?;
    Ok(())
}

fn run_eigenfield(ctx: &Ctx) -> Result<Outcome> {
    let k = ctx.count("blocks")?;
    let z = cx(ctx.get("z_re"), ctx.get("z_im"));
    let mut out = Outcome::default();

    let d = ctx.count("field_dim")?.max(1);
    let spec = BlockShiftSpec::new(k, d)?;
    let b = block_backward_shift(spec)?;
    let mut x0 = vec![cx(0.0, 0.0); d];
    for (i, a) in x0.iter_mut().enumerate() {
        *a = cx(1.0 / (i + 1) as f64, 0.5 * i as f64);
    }
    let x0 = CoeffVec::new(x0, &hardy(d)?)?;
    let x = holomorphic_eigenfield(&x0, z, k)?;
    let bx = b.apply(&x)?;
    let mut t = Table::new("eigenfield", &["block", "norm_x", "norm_residual"]);
    for j in 0..k {
        let blk = |v: &[Complex64]| v[j * d..(j + 1) * d].iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let res: Vec<Complex64> = (0..k * d).map(|i| bx.coeffs()[i] - z * x.coeffs()[i]).collect();
        t.push(vec![j.to_string(), num(blk(x.coeffs())), num(blk(&res))]);
    }
    out.tables.push(t);
    out.notes.push(format!(
        "B x_z = z x_z holds on the first {} blocks; the last block loses z^{} x_0 to truncation",
        k - 1,
        k
    ));

    let family = block_shift_family(k);
    out.report("condition-c", check_c(&family, &ctx.ladder, &ctx.tol)?);

    let rings = ctx.count("rings")?;
    let angles = ctx.count("angles")?;
    let mut grid = vec![cx(0.0, 0.0)];
    for i in 0..rings {
        let rho = (i + 1) as f64 / (rings + 1) as f64;
        for j in 0..angles {
            grid.push(Complex64::from_polar(rho, 2.0 * PI * j as f64 / angles as f64));
        }
    }
    grid.push(cx(1.0, 0.0));
    let cand_k = k;
    let probe = SpectralProbe {
        probe: MultiplicityProbe::residual(move |n, lambda| {
            let d = n / cand_k;
            (0..d)
                .map(|i| {
                    let e = basis(d, i, 1.0)?;
                    Ok(holomorphic_eigenfield(&e, lambda, cand_k)?.into_coeffs())
                })
                .collect()
        }),
        with_corank: true,
    };
    let spectral = spectral_falsifier(&family, Region::Disc { radius: 1.0 }, &grid, &ctx.ladder, &probe, &ctx.tol)?;
    out.tables.push(ladder_table("spectral-ladder", &spectral));
    out.report("spectral", spectral);
    Ok(out)
}

// ---------------------------------------------------------------------------
// block constructions and perturbations

fn block_family(name: &str, b: f64, rank_one_corner: bool) -> SectionFamily {
    let build = move |n: usize, wide: bool| -> Result<OpMatrix> {
        let cols = if wide { 2 * n } else { n };
        let u = decimation(n, wide)?;
        let a = if rank_one_corner {
            rank_one(&basis(cols, 0, 1.0)?, &basis(n, 1, 1.0)?)?
        } else {
            identity_section(n, cols)?
        };
        let c = zeros(n, cols)?;
        let bb = identity_section(n, cols)?.scale(cx(b, 0.0));
        block2x2(Some(&u), Some(&a), Some(&c), Some(&bb))
    };
    SectionFamily::new(name.to_string(), move |n| build(n, false)).with_wide(move |n| build(n, true))
}

fn run_prop21(ctx: &Ctx) -> Result<Outcome> {
    let b = ctx.get("b");
    let mut out = Outcome::default();
    let v = block_family(&format!("[[U, A], [0, {b} I]] with U the decimation operator"), b, true);
    let c = check_c(&v, &ctx.ladder, &ctx.tol)?;
    out.tables.push(ladder_table("block-ladder", &c));
    out.report("block-c", c);
    let v0 = block_family("[[U, A], [0, 0]] with U the decimation operator", 0.0, true);
    out.report("degenerate-c", check_c(&v0, &ctx.ladder, &ctx.tol)?);
    out.report("degenerate-cplus", check_cplus(&v0, &ctx.ladder, &ctx.tol)?);

    // Ker U (x) 0 sits inside Ker V
    let mut t = Table::new("kernel-containment", &["N", "kernel_dim_V", "kernel_dim_U", "common_dim"]);
    for &n in &ctx.ladder {
        let sq = v.square(n)?;
        let kv = sq.kernel(ctx.tol.tol_rel);
        let ku = decimation(n, false)?.kernel(ctx.tol.tol_rel);
        let mut emb = CMat::zeros(2 * n, ku.dim());
        emb.view_mut((0, 0), (n, ku.dim())).copy_from(ku.columns());
        let ku2 = numlin::SubspaceBasis::span_of(&emb, ctx.tol.tol_rel);
        let common = numlin::subspace_intersection_dim(&kv, &ku2)?;
        t.push(vec![n.to_string(), kv.dim().to_string(), ku.dim().to_string(), common.to_string()]);
    }
    out.tables.push(t);
    out.notes.push(
        "ladder sizes are per-block truncations; sections are 2N x 2N (square) and 2N x 4N (wide)".to_string(),
    );
    Ok(out)
}

fn run_ex25(ctx: &Ctx) -> Result<Outcome> {
    let mut out = Outcome::default();
    let u = SectionFamily::new("U e_2n = e_n, U e_2n+1 = 0", |n| decimation(n, false))
        .with_wide(|n| decimation(n, true));
    out.report("u-c", check_c(&u, &ctx.ladder, &ctx.tol)?);
    let build = |n: usize, wide: bool| -> Result<OpMatrix> {
        let cols = if wide { 2 * n } else { n };
        let k = rank_one(&basis(cols, 2, 1.0)?, &basis(n, 1, -1.0)?)?;
        decimation(n, wide)?.add(&k)
    };
    let uk = SectionFamily::new("U + K with K e_2 = -e_1", move |n| build(n, false))
        .with_wide(move |n| build(n, true));
    let c = check_c(&uk, &ctx.ladder, &ctx.tol)?;
    let cp = check_cplus(&uk, &ctx.ladder, &ctx.tol)?;
    out.tables.push(ladder_table("perturbed-ladder", &cp));
    out.report("perturbed-c", c);
    out.report("perturbed-cplus", cp);

    let mut t = Table::new("range-defect", &["N", "image_of_e2", "distance_e1_to_range"]);
    for &n in &ctx.ladder {
        let w = build(n, true)?;
        let img = w.apply(&basis(2 * n, 2, 1.0)?)?;
        let img_norm = img.norm();
        let (u_left, _) = left_range(&w, ctx.tol.tol_rel);
        let e1 = nalgebra::DVector::from_fn(n, |i, _| if i == 1 { cx(1.0, 0.0) } else { cx(0.0, 0.0) });
        let proj = &u_left * (u_left.adjoint() * &e1);
        t.push(vec![n.to_string(), num(img_norm), num((e1 - proj).norm())]);
    }
    out.tables.push(t);
    Ok(out)
}

/// Orthonormal basis of the range of a section and its rank.
fn left_range(a: &OpMatrix, tol_rel: f64) -> (CMat, usize) {
    let svd = a.isometric().svd(true, false);
    let s = &svd.singular_values;
    let rank = numlin::rank_from_values(s.as_slice(), tol_rel);
    let u = svd.u.expect("left vectors requested");
    (u.columns(0, rank).into_owned(), rank)
}

fn ex26_family(n: usize, k_diag: bool) -> SectionFamily {
    let build = move |m: usize, wide: bool| -> Result<OpMatrix> {
        let cols = if wide { 2 * m } else { m };
        let u = decimation(m, wide)?;
        let i = identity_section(m, cols)?;
        let c = if k_diag {
            diag_section(m, cols, |k| 1.0 / (k + 1) as f64)?
        } else {
            identity_section(m, cols)?.scale(cx(1.0 / n as f64, 0.0))
        };
        block2x2(Some(&u), Some(&i), Some(&c), Some(&zeros(m, cols)?))
    };
    let name = if k_diag {
        "W = [[U, I], [K, 0]], K = diag(1/(k+1))".to_string()
    } else {
        format!("V_{n} = [[U, I], [I/{n}, 0]]")
    };
    SectionFamily::new(name, move |m| build(m, false)).with_wide(move |m| build(m, true))
}

fn check_ex26(ctx: &Ctx) -> Result<()> {
    if ctx.count("n_max")? == 0 {
        return Err(invalid("n_max", "need at least one perturbation"));
    }
    if ctx.count("trunc")? < 2 {
        return Err(invalid("trunc", "need a truncation of at least 2"));
    }
    Ok(())
}

fn run_ex26(ctx: &Ctx) -> Result<Outcome> {
    let n_max = ctx.count("n_max")?;
    let m = ctx.count("trunc")?;
    let mut out = Outcome::default();
    let v = block2x2(
        Some(&decimation(m, false)?),
        Some(&identity_section(m, m)?),
        Some(&zeros(m, m)?),
        Some(&zeros(m, m)?),
    )?;
    let mut t = Table::new(
        "sigma-min",
        &["n", "trunc", "sigma_min", "half_over_n", "norm_difference", "norm_error"],
    );
    for n in 1..=n_max {
        let vn = ex26_family(n, false).square(m)?;
        let smin = numlin::sigma_min(&vn.isometric());
        let diff = vn.sub(&v)?.norm();
        t.push(vec![
            n.to_string(),
            m.to_string(),
            num(smin),
            num(0.5 / n as f64),
            num(diff),
            num((diff - 1.0 / n as f64).abs()),
        ]);
        out.report(&format!("v{n}-c"), check_c(&ex26_family(n, false), &ctx.ladder, &ctx.tol)?);
    }
    out.tables.push(t);
    out.report("w-c", check_c(&ex26_family(0, true), &ctx.ladder, &ctx.tol)?);
    let vf = SectionFamily::new("V = [[U, I], [0, 0]]", |m| {
        let z = zeros(m, m)?;
        block2x2(Some(&decimation(m, false)?), Some(&identity_section(m, m)?), Some(&z), Some(&z))
    })
    .with_wide(|m| {
        let z = zeros(m, 2 * m)?;
        block2x2(Some(&decimation(m, true)?), Some(&identity_section(m, 2 * m)?), Some(&z), Some(&z))
    });
    out.report("v-cplus", check_cplus(&vf, &ctx.ladder, &ctx.tol)?);
    out.notes.push(format!(
        "sigma-min table at per-block truncation {m}; the limit V has kernel (x, -U x) and range of infinite codimension"
    ));
    Ok(out)
}

fn run_multiplicativity(ctx: &Ctx) -> Result<Outcome> {
    let mut out = Outcome::default();
    let mut t = Table::new(
        "product",
        &["N", "norm_U", "norm_V", "norm_UV", "kernel_dim_U", "kernel_dim_V", "kernel_dim_UV"],
    );
    for &n in &ctx.ladder {
        let u0 = decimation(n, false)?;
        let z = zeros(n, n)?;
        let u = direct_sum(&u0, &z)?;
        let v = direct_sum(&z, &u0)?;
        let uv = u.compose(&v)?;
        let tol = ctx.tol.tol_rel;
        t.push(vec![
            n.to_string(),
            num(u.norm()),
            num(v.norm()),
            num(uv.norm()),
            u.nullity(tol).to_string(),
            v.nullity(tol).to_string(),
            uv.nullity(tol).to_string(),
        ]);
    }
    out.tables.push(t);
    let dd = SectionFamily::new("U U with U e_2n = e_n", |n| {
        let u = decimation(n, false)?;
        u.compose(&u)
    })
    .with_wide(|n| decimation_section(n, 2 * n)?.compose(&decimation_section(2 * n, 4 * n)?));
    out.report("square-c", check_c(&dd, &ctx.ladder, &ctx.tol)?);
    out.notes.push("U = U0 (+) 0 and V = 0 (+) U0 are universal but U V = 0".to_string());
    Ok(out)
}

// ---------------------------------------------------------------------------
// composition operators

fn check_annulus(ctx: &Ctx) -> Result<()> {
    check_r(ctx, "r")
}

fn run_annulus(ctx: &Ctx) -> Result<Outcome> {
    let r = ctx.get("r");
    let auto = HyperbolicAuto::new(r)?;
    let (a, b) = auto.annulus();
    let mut t = Table::new("radii", &["r", "t_r", "rho_in", "rho_out", "product"]);
    t.push(vec![num(r), num(auto.t()), num(a), num(b), num(a * b)]);
    let mut out = Outcome::default();
    out.tables.push(t);
    out.notes.push(format!(
        "spectrum of C_phi_r on H^2 and S^2 is the closed annulus {a} <= |lambda| <= {b}"
    ));
    Ok(out)
}

fn check_ex31(ctx: &Ctx) -> Result<()> {
    check_r(ctx, "r")?;
    let beta = ctx.get("beta");
    if !(beta > 0.0) {
        return Err(invalid("beta", format!("need beta > 0, got {beta}")));
    }
    if ctx.count("rings")? == 0 || ctx.count("angles")? == 0 {
        return Err(invalid("grid", "need at least one ring and one angle"));
    }
    Ok(())
}

/// `rings x angles` polar grid strictly inside the annulus, geometric in the
/// radius; a ring that lands on `|lambda| = 1` is snapped to it exactly.
pub fn annulus_grid(r: f64, rings: usize, angles: usize) -> Result<Vec<Complex64>> {
    let (a, b) = analytic::annulus(r)?;
    let mut g = Vec::with_capacity(rings * angles);
    for i in 0..rings {
        let f = (i as f64 + 0.5) / rings as f64;
        let mut rho = a.powf(1.0 - f) * b.powf(f);
        if (rho - 1.0).abs() < 1e-12 {
            rho = 1.0;
        }
        for j in 0..angles {
            let th = 2.0 * PI * j as f64 / angles as f64;
            g.push(if j == 0 { cx(rho, 0.0) } else { Complex64::from_polar(rho, th) });
        }
    }
    Ok(g)
}

fn dirichlet_space(beta: f64, n: usize) -> Result<SpaceSpec> {
    SpaceSpec::new(beta, n, NormVariant::Power)
}

fn run_ex31(ctx: &Ctx) -> Result<Outcome> {
    let r = ctx.get("r");
    let beta = ctx.get("beta");
    let mut out = Outcome::default();
    let family = SectionFamily::new(format!("C_phi_{r} on D_{beta}"), move |n| {
        composition_matrix(r, &dirichlet_space(beta, n)?)
    });
    let (a, b) = analytic::annulus(r)?;
    let grid = annulus_grid(r, ctx.count("rings")?, ctx.count("angles")?)?;
    let probe = SpectralProbe {
        probe: MultiplicityProbe::Kernel,
        with_corank: false,
    };
    let rep = spectral_falsifier(&family, Region::Annulus { inner: a, outer: b }, &grid, &ctx.ladder, &probe, &ctx.tol)?;
    out.tables.push(ladder_table("spectral-ladder", &rep));
    out.report("spectral", rep);

    let mut t = Table::new("kernel-at-one", &["N", "kernel_dim", "distance_to_constants"]);
    for &n in &ctx.ladder {
        let a1 = family.square(n)?.shifted(cx(1.0, 0.0));
        let k = a1.kernel(ctx.tol.tol_rel);
        let dist = if k.dim() == 1 {
            let v = k.columns().column(0);
            let w = a1.domain().weights();
            // back from isometric coordinates, then compare with e_0 up to phase
            let f: Vec<Complex64> = (0..n).map(|i| v[i] / w[i].sqrt()).collect();
            let nf = f.iter().zip(w).map(|(x, wi)| x.norm_sqr() * wi).sum::<f64>().sqrt();
            let tail = f[1..].iter().zip(&w[1..]).map(|(x, wi)| x.norm_sqr() * wi).sum::<f64>().sqrt();
            tail / nf
        } else {
            f64::NAN
        };
        t.push(vec![n.to_string(), k.dim().to_string(), num(dist)]);
    }
    out.tables.push(t);

    let half = SectionFamily::new(format!("C_phi_{r} on D_1/2"), move |n| composition_matrix(r, &dirichlet_space(0.5, n)?));
    out.report(
        "dirichlet-boundary",
        boundary_falsifier(&half, Region::Annulus { inner: 1.0, outer: 1.0 }, cx(1.0, 0.0), &ctx.ladder, &ctx.tol)?,
    );
    out.notes.push("on D_1/2 the spectrum of C_phi_r is the unit circle, so lambda = 1 is a boundary point".to_string());
    Ok(out)
}

/// `P_zH2 C_phi_{-r}` on `H^2`, the model for the compressed adjoint on `z S^2`.
pub fn compressed_model_family(r: f64) -> SectionFamily {
    SectionFamily::new(format!("P_zH2 C_phi_-{r} on zH^2"), move |n| {
        compress_zh2(&composition_matrix(-r, &hardy(n + 1)?)?)
    })
    .with_wide(move |n| compress_zh2(&composition_section(-r, &hardy(2 * n + 1)?, &hardy(n + 1)?)?))
}

/// Coefficients `1..=n` of `((1+z)/(1-z))^c` for `c = -u + 2 pi i k / t_r`, `|k| <= k_max`.
pub fn model_candidates(r: f64, u: f64, k_max: i64, n: usize) -> Result<Vec<Vec<Complex64>>> {
    let t = HyperbolicAuto::new(r)?.t();
    let opts = SamplingOptions::default();
    (-k_max..=k_max)
        .map(|k| {
            let c = cx(-u, 2.0 * PI * k as f64 / t);
            let s = log_ratio_power_coeffs(c, n + 1, &opts)?;
            Ok(s.coeffs[1..].to_vec())
        })
        .collect()
}

fn check_thm32(ctx: &Ctx) -> Result<()> {
    check_r(ctx, "r")?;
    let u = ctx.get("u");
    if !(u > 0.0 && u < 0.5) {
        return Err(invalid("u", format!("need 0 < u < 1/2, got {u}")));
    }
    ctx.count("n_max")?;
    Ok(())
}

fn run_thm32(ctx: &Ctx) -> Result<Outcome> {
    let r = ctx.get("r");
    let u = ctx.get("u");
    let k_max = ctx.count("n_max")? as i64;
    let lambda = EigenfunctionSpec::new(u, 0, r)?.lambda();
    let mut out = Outcome::default();
    let family = compressed_model_family(r);
    let (a, b) = analytic::annulus(r)?;
    let probe = SpectralProbe {
        probe: MultiplicityProbe::residual(move |n, _| model_candidates(r, u, k_max, n)),
        with_corank: true,
    };
    let rep = spectral_falsifier(
        &family,
        Region::Annulus { inner: a, outer: b },
        &[cx(lambda, 0.0)],
        &ctx.ladder,
        &probe,
        &ctx.tol,
    )?;
    out.tables.push(ladder_table("witness-ladder", &rep));
    out.report("spectral", rep);

    let mut t = Table::new("literal-adjoint", &["N", "corank", "range_margin"]);
    for &n in &ctx.ladder {
        let dom = SpaceSpec::new(1.0, n + 1, NormVariant::Derivative)?;
        let cod = SpaceSpec::new(1.0, 2 * n + 1, NormVariant::Derivative)?;
        let a = compress_zh2(&adjoint(&composition_section(r, &dom, &cod)?)?)?.shifted(cx(lambda, 0.0));
        let s = numlin::singular_values(&a.isometric());
        let rank = numlin::rank_from_values(&s, ctx.tol.tol_rel);
        let margin = if s.len() == a.rows() && s[0] > 0.0 { s[s.len() - 1] / s[0] } else { 0.0 };
        t.push(vec![n.to_string(), (a.rows() - rank).to_string(), num(margin)]);
    }
    out.tables.push(t);
    out.notes.push(format!(
        "lambda = {lambda}; witnesses are f - f(0) for f = ((1+z)/(1-z))^c, c = -{u} + 2 pi i k / t_r, |k| <= {k_max}"
    ));
    out.notes.push(
        "literal-adjoint lists corank and margin of P (C_phi_r)* P - lambda on the wide S^2 (derivative norm) section".to_string(),
    );
    Ok(out)
}

fn heller_family(r: f64, sign: MiddleSign, lambda: f64) -> SectionFamily {
    let l = cx(lambda, 0.0);
    let s2 = |n| SpaceSpec::new(1.0, n, NormVariant::Derivative);
    SectionFamily::new(format!("principal part r = {r}, sign {sign:?}, minus {lambda}"), move |n| {
        heller_principal_signed(r, l, &s2(n)?, sign)
    })
    .with_wide(move |n| heller_principal_signed(r, l, &s2(2 * n)?, sign)?.window(n, 2 * n))
}

fn check_heller(ctx: &Ctx) -> Result<()> {
    check_r(ctx, "r")?;
    let n = ctx.count("n")?;
    let j = ctx.count("j")?;
    if n < 2 || j == 0 || j > n {
        return Err(invalid("j", format!("need 1 <= j <= n with n >= 2, got j = {j}, n = {n}")));
    }
    Ok(())
}

fn run_heller(ctx: &Ctx) -> Result<Outcome> {
    let r = ctx.get("r");
    let n = ctx.count("n")?;
    let j = ctx.count("j")?;
    let lambda = ctx.get("lambda");
    let mut out = Outcome::default();
    let s = SpaceSpec::new(1.0, n, NormVariant::Derivative)?;
    let reference = weighted_adjoint(&composition_matrix(-r, &s)?, &s)?;
    let mut t = Table::new("decay", &["sign", "N", "s_1", "s_j", "j", "ratio"]);
    let mut sv = Table::new("singular-values", &["index", "minus", "plus"]);
    let mut profiles = Vec::new();
    for (name, sign) in [("minus", MiddleSign::Minus), ("plus", MiddleSign::Plus)] {
        let h = heller_principal_signed(r, cx(0.0, 0.0), &s, sign)?;
        let prof = compactness_proxy(&h, &reference)?;
        t.push(vec![
            name.to_string(),
            n.to_string(),
            num(prof.singular_values[0]),
            num(prof.singular_values[j - 1]),
            j.to_string(),
            num(prof.ratio(j).unwrap_or(f64::NAN)),
        ]);
        profiles.push(prof);
    }
    for i in 0..n.min(64) {
        sv.push(vec![
            (i + 1).to_string(),
            num(profiles[0].singular_values[i]),
            num(profiles[1].singular_values[i]),
        ]);
    }
    out.tables.push(t);
    out.tables.push(sv);
    for (name, sign) in [("minus", MiddleSign::Minus), ("plus", MiddleSign::Plus)] {
        let rep = check_cplus(&heller_family(r, sign, lambda), &ctx.ladder, &ctx.tol)?;
        out.tables.push(ladder_table(&format!("cplus-{name}-ladder"), &rep));
        out.report(&format!("cplus-{name}"), rep);
    }
    let l = cx(lambda, 0.0);
    let adj = SectionFamily::new(format!("(C_phi_-{r})* on S^2 minus {lambda}"), move |n| {
        let s = SpaceSpec::new(1.0, n, NormVariant::Derivative)?;
        Ok(adjoint(&composition_matrix(-r, &s)?)?.shifted(l))
    })
    .with_wide(move |n| {
        let dom = SpaceSpec::new(1.0, n, NormVariant::Derivative)?;
        let cod = SpaceSpec::new(1.0, 2 * n, NormVariant::Derivative)?;
        Ok(adjoint(&composition_section(-r, &dom, &cod)?)?.shifted(l))
    });
    let rep = check_cplus(&adj, &ctx.ladder, &ctx.tol)?;
    out.tables.push(ladder_table("cplus-adjoint-ladder", &rep));
    out.report("cplus-adjoint", rep);
    out.notes.push(
        "decay compares the principal part with the Gram adjoint of C_phi_-r; a fast decay of s_j / s_1 indicates a compact remainder"
            .to_string(),
    );
    out.notes.push(
        "square sections of adjoint-type operators carry no eigenvectors, so kernel dimension 0 there says nothing about the infinite operator; the thm32 witnesses address that"
            .to_string(),
    );
    Ok(out)
}

fn check_mz(ctx: &Ctx) -> Result<()> {
    if ctx.count("n")? < 3 {
        return Err(invalid("n", "need a truncation of at least 3"));
    }
    Ok(())
}

fn run_mz(ctx: &Ctx) -> Result<Outcome> {
    let n = ctx.count("n")?;
    let s = SpaceSpec::new(1.0, n, NormVariant::Derivative)?;
    let adj = weighted_adjoint(&mult_z(&s)?, &s)?;
    let w = s.weights();
    let mut t = Table::new(
        "mz-adjoint",
        &["m", "entry", "gram_value", "printed_value", "agrees", "off_pattern_max"],
    );
    let e = adj.entries();
    let mut agree = Vec::new();
    for m in 0..n - 1 {
        let entry = e[(m, m + 1)].re;
        let gram = w[m + 1] / w[m];
        // the printed coefficient multiplies a_{m+1} in row m; for m = 0 it is 1
        let printed = if m == 0 { 1.0 } else { ((m + 1) as f64 / m as f64).powi(m as i32) };
        let ok = (entry - printed).abs() <= 1e-12 * printed.abs().max(1.0);
        if ok && m > 0 {
            agree.push(m);
        }
        let off = (0..n)
            .filter(|&c| c != m + 1)
            .map(|c| e[(m, c)].norm())
            .fold(0.0, f64::max);
        t.push(vec![
            m.to_string(),
            num(entry),
            num(gram),
            num(printed),
            ok.to_string(),
            num(off),
        ]);
    }
    let mut out = Outcome::default();
    out.tables.push(t);
    out.notes.push(format!(
        "the Gram adjoint has entries w_(m+1)/w_m = ((m+1)/m)^2 on the superdiagonal; the closed form ((m+1)/m)^m agrees for m >= 1 only at {agree:?}"
    ));
    Ok(out)
}

fn check_halfplane(ctx: &Ctx) -> Result<()> {
    let mu = ctx.get("mu");
    if !(mu > 0.0) || mu == 1.0 {
        return Err(invalid("mu", format!("need mu > 0 and mu != 1, got {mu}")));
    }
    for key in ["alpha1", "alpha2"] {
        if !(ctx.get(key) > -1.0) {
            return Err(invalid(key, "need alpha > -1"));
        }
    }
    Ok(())
}

fn run_halfplane(ctx: &Ctx) -> Result<Outcome> {
    let mu = ctx.get("mu");
    let mut t = Table::new("radii", &["mu", "space", "alpha", "radius"]);
    t.push(vec![num(mu), "hardy".into(), String::new(), num(halfplane_radius(mu, HalfPlaneSpace::Hardy)?)]);
    for key in ["alpha1", "alpha2"] {
        let alpha = ctx.get(key);
        let rad = halfplane_radius(mu, HalfPlaneSpace::Bergman { alpha })?;
        t.push(vec![num(mu), "bergman".into(), num(alpha), num(rad)]);
    }
    let mut out = Outcome::default();
    out.tables.push(t);
    out.notes.push(
        "the spectrum of f(w) -> f(mu w) is the circle of the listed radius; every spectral point is a boundary point, so no T - lambda is universal"
            .to_string(),
    );
    Ok(out)
}

// ---------------------------------------------------------------------------
// commuting pairs

fn check_prop41(ctx: &Ctx) -> Result<()> {
    check_r(ctx, "r")?;
    if ctx.count("n")? < 4 {
        return Err(invalid("n", "need a truncation of at least 4"));
    }
    ctx.count("seed")?;
    let l = cx(ctx.get("lambda_re"), ctx.get("lambda_im"));
    if !analytic::in_open_annulus(ctx.get("r"), l) {
        return Err(Error::OutsideAnnulus { r: ctx.get("r"), re: l.re, im: l.im });
    }
    Ok(())
}

fn run_prop41(ctx: &Ctx) -> Result<Outcome> {
    let n = ctx.count("n")?;
    let r = ctx.get("r");
    let lambda = cx(ctx.get("lambda_re"), ctx.get("lambda_im"));
    let tol = &ctx.tol;
    let mut out = Outcome::default();
    let b = backward_shift(n)?;
    let b2 = b.compose(&b)?;
    out.report(
        "polynomial",
        algebraic_falsifier(&b, &b2, &AlgebraicWitness::Polynomial(vec![cx(1.0, 0.0)]), tol)?,
    );
    out.report(
        "powers",
        algebraic_falsifier(
            &b2,
            &b2.compose(&b)?,
            &AlgebraicWitness::Powers { base: b.clone(), m: 2, n: 3 },
            tol,
        )?,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.count("seed")? as u64);
    let e = CMat::from_fn(n, n, |_, _| cx(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let w = OpMatrix::on_space(e, &hardy(n)?, "random matrix")?;
    out.report(
        "random",
        algebraic_falsifier(&b, &w, &AlgebraicWitness::Polynomial(vec![cx(1.0, 0.0)]), tol)?,
    );

    // T = C_r - lambda and W = C_{r2} - lambda^2 = (C_r + lambda) T. The
    // product runs over a long inner truncation so that it matches the
    // section of C_{r2}.
    let r2 = semigroup_param(r, r)?;
    let inner = 16 * n;
    let t_tall = composition_section(r, &hardy(n)?, &hardy(inner)?)?;
    let t_tall = t_tall.sub(&identity_tall(n, inner, lambda)?)?;
    let s_wide = composition_section(r, &hardy(inner)?, &hardy(n)?)?.add(&identity_wide(n, inner, lambda)?)?;
    let w = composition_matrix(r2, &hardy(n)?)?.shifted(lambda * lambda);
    out.report(
        "commutant",
        algebraic_falsifier(&t_tall, &w, &AlgebraicWitness::Commutant(s_wide.clone()), tol)?,
    );
    let ts = composition_section(r, &hardy(inner)?, &hardy(n)?)?
        .sub(&identity_wide(n, inner, lambda)?)?
        .compose(&composition_section(r, &hardy(n)?, &hardy(inner)?)?.add(&identity_tall(n, inner, lambda)?)?)?;
    let st = s_wide.compose(&t_tall)?;
    let mut t = Table::new("commutant", &["n", "inner", "r2", "relative_commutator"]);
    t.push(vec![
        n.to_string(),
        inner.to_string(),
        num(r2),
        num(st.sub(&ts)?.norm() / st.norm()),
    ]);
    out.tables.push(t);
    out.notes.push(format!(
        "commutant witness: S = C_phi_{r} + lambda, T = C_phi_{r} - lambda, W = C_phi_{r2} - lambda^2"
    ));
    Ok(out)
}

fn identity_tall(n: usize, inner: usize, lambda: Complex64) -> Result<OpMatrix> {
    Ok(identity_section(inner, n)?.scale(lambda))
}

fn identity_wide(n: usize, inner: usize, lambda: Complex64) -> Result<OpMatrix> {
    Ok(identity_section(n, inner)?.scale(lambda))
}

fn run_ex43(ctx: &Ctx) -> Result<Outcome> {
    let build = |n: usize, wide: bool| -> Result<(OpMatrix, OpMatrix)> {
        let cols = if wide { 2 * n } else { n };
        let d = decimation(n, wide)?;
        let i = identity_section(n, cols)?;
        Ok((direct_sum(&d, &i)?, direct_sum(&i, &d)?))
    };
    let fam = PairFamily::new("(U (+) I, I (+) U) with U e_2n = e_n", move |n| build(n, false), move |n| {
        build(n, true)
    });
    let rep = check_m(&fam, &ctx.ladder, &ctx.tol)?;
    let mut out = Outcome::default();
    out.tables.push(ladder_table("pair-ladder", &rep));
    out.report("condition-m", rep);
    out.notes.push("ladder sizes are per-block truncations".to_string());
    Ok(out)
}

fn scalar_pair_family() -> PairFamily<opbuild::HSOperator> {
    PairFamily::new(
        "(L_B, R_B*) on Hilbert-Schmidt operators",
        |n| {
            let b = backward_shift(n)?;
            Ok((hs_left(&b)?, hs_right(&adjoint(&b)?)?))
        },
        |n| {
            Ok((
                hs_left_on(&backward_shift_section(n, 2 * n)?, n)?,
                hs_right_on(&forward_shift_section(2 * n, n)?, n)?,
            ))
        },
    )
}

fn run_thm44_scalar(ctx: &Ctx) -> Result<Outcome> {
    let rep = check_m(&scalar_pair_family(), &ctx.ladder, &ctx.tol)?;
    let mut t = Table::new(
        "dims",
        &["n", "kernel_dim_L", "kernel_dim_R", "intersection_dim", "product_kernel_dim", "sum_dim"],
    );
    for r in &rep.ladder {
        let k = r.kernel_dims.unwrap_or([0, 0]);
        t.push(vec![
            r.n.to_string(),
            k[0].to_string(),
            k[1].to_string(),
            r.intersection_dim.unwrap_or(0).to_string(),
            r.product_kernel_dim.unwrap_or(0).to_string(),
            r.sum_dim.unwrap_or(0).to_string(),
        ]);
    }
    let mut out = Outcome::default();
    out.tables.push(t);
    out.report("condition-m", rep);
    out.notes.push("kernels: L_B kills matrices supported on row 0, R_B* those supported on column n-1".to_string());
    Ok(out)
}

fn block_pair_family(d_fixed: Option<usize>) -> PairFamily<opbuild::HSOperator> {
    let spec = move |k: usize| BlockShiftSpec::new(k, d_fixed.unwrap_or(k));
    PairFamily::new(
        "(L_B, R_B*) for the block backward shift B",
        move |k| {
            let s = spec(k)?;
            Ok((hs_left(&block_backward_shift(s)?)?, hs_right(&block_forward_shift(s)?)?))
        },
        move |k| {
            let s = spec(k)?;
            let wide = block_backward_shift_section(s, k + 1)?;
            let tall = adjoint(&wide)?;
            Ok((hs_left_on(&wide, s.size())?, hs_right_on(&tall, s.size())?))
        },
    )
    .with_annotation(move |k, r| {
        r.blocks = Some(k);
        r.block_dim = Some(d_fixed.unwrap_or(k));
    })
}

fn check_thm44_block(ctx: &Ctx) -> Result<()> {
    if ctx.ladder.iter().any(|&k| k < 2) {
        return Err(invalid("ladder", "block counts must be at least 2"));
    }
    ctx.count("d")?;
    Ok(())
}

fn run_thm44_block(ctx: &Ctx) -> Result<Outcome> {
    let d = ctx.count("d")?;
    let d_fixed = (d > 0).then_some(d);
    let rep = check_m(&block_pair_family(d_fixed), &ctx.ladder, &ctx.tol)?;
    let mut t = Table::new(
        "dims",
        &[
            "K",
            "d",
            "kernel_dim_L",
            "kernel_dim_R",
            "intersection_dim",
            "sum_dim",
            "product_kernel_dim",
            "expected_kernel",
            "expected_intersection",
            "expected_sum",
            "coranks",
        ],
    );
    for r in &rep.ladder {
        let k = r.n;
        let d = r.block_dim.unwrap_or(k);
        let kd = r.kernel_dims.unwrap_or([0, 0]);
        let co = r.coranks.unwrap_or([usize::MAX, usize::MAX]);
        t.push(vec![
            k.to_string(),
            d.to_string(),
            kd[0].to_string(),
            kd[1].to_string(),
            r.intersection_dim.unwrap_or(0).to_string(),
            r.sum_dim.unwrap_or(0).to_string(),
            r.product_kernel_dim.unwrap_or(0).to_string(),
            (k * d * d).to_string(),
            (d * d).to_string(),
            ((2 * k - 1) * d * d).to_string(),
            format!("{}/{}", co[0], co[1]),
        ]);
    }
    let mut out = Outcome::default();
    out.tables.push(t);
    out.report("condition-m", rep);
    out.notes.push("ladder entries are block counts K; the inner dimension is d = K unless d is set".to_string());
    Ok(out)
}

// ---------------------------------------------------------------------------
// common zeros of two covering maps

fn check_ex46(ctx: &Ctx) -> Result<()> {
    check_r(ctx, "r")?;
    check_r(ctx, "s")?;
    ctx.count("k_max")?;
    let u = ctx.get("u");
    if !(u > 0.0 && u < 0.5) {
        return Err(invalid("u", format!("need 0 < u < 1/2, got {u}")));
    }
    for (rk, re, im) in [("r", "lambda_re", "lambda_im"), ("s", "mu_re", "mu_im")] {
        let z = cx(ctx.get(re), ctx.get(im));
        if !analytic::in_open_annulus(ctx.get(rk), z) {
            return Err(Error::OutsideAnnulus { r: ctx.get(rk), re: z.re, im: z.im });
        }
    }
    Ok(())
}

fn run_ex46(ctx: &Ctx) -> Result<Outcome> {
    let r = ctx.get("r");
    let s = ctx.get("s");
    let lambda = cx(ctx.get("lambda_re"), ctx.get("lambda_im"));
    let mu = cx(ctx.get("mu_re"), ctx.get("mu_im"));
    let k_max = ctx.count("k_max")?;
    let mut out = Outcome::default();
    let ratio = ratio_condition(r, s)?;
    let zr = covering_map_zeros(r, lambda, k_max)?;
    let zs = covering_map_zeros(s, mu, k_max)?;
    for (name, set) in [("zeros-r", &zr), ("zeros-s", &zs)] {
        let mut t = Table::new(name, &["k", "re_z", "im_z", "log_boundary_gap", "residual", "log_abs_derivative"]);
        for e in &set.entries {
            t.push(vec![
                e.k.to_string(),
                num(e.point.z.re),
                num(e.point.z.im),
                num(e.point.log_boundary_gap()),
                num(e.residual),
                num(e.log_abs_derivative),
            ]);
        }
        out.tables.push(t);
    }
    out.notes.push(format!(
        "max residual |psi - lambda| / |lambda|: {:e} for r, {:e} for s",
        zr.max_residual(),
        zs.max_residual()
    ));

    let Some(ratio) = ratio else {
        out.notes.push("t_r / t_s is not a ratio of small integers; no common zeros are predicted".to_string());
        return Ok(out);
    };
    out.notes.push(format!("t_r / t_s = {}/{}", ratio.p, ratio.q));
    let (p, q) = (ratio.p as i64, ratio.q as i64);
    let mut t = Table::new(
        "matched-pairs",
        &["j", "k_r", "k_s", "strip_distance", "z_distance", "cross_residual_s", "cross_residual_r", "matched"],
    );
    let mut matched = 0usize;
    let j_max = k_max as i64 / p.max(q);
    for j in -j_max..=j_max {
        let (Some(a), Some(b)) = (zr.get(p * j), zs.get(q * j)) else { continue };
        let strip = (a.point.strip_coordinate() - b.point.strip_coordinate()).norm();
        let zd = (a.point.z - b.point.z).norm();
        let cs = (psi(s, &a.point) - mu).norm() / mu.norm();
        let cr = (psi(r, &b.point) - lambda).norm() / lambda.norm();
        let ok = cs < 1e-8;
        matched += ok as usize;
        t.push(vec![
            j.to_string(),
            (p * j).to_string(),
            (q * j).to_string(),
            num(strip),
            num(zd),
            num(cs),
            num(cr),
            ok.to_string(),
        ]);
    }
    out.tables.push(t);
    out.notes.push(format!("{matched} common zeros confirmed by cross-residual below 1e-8"));

    // f_{p j} for r and g_{q j} for s are the same function
    let u = ctx.get("u");
    let n = ctx.count("coeffs")?.max(2);
    let mut t = Table::new("eigenfunction-agreement", &["j", "n_r", "n_s", "max_relative_difference"]);
    for j in -2i64..=2 {
        let f = analytic::eigenfunction_coeffs(&EigenfunctionSpec::new(u, p * j, r)?, n)?;
        let g_spec = EigenfunctionSpec::new(u, q * j, s)?;
        let g = analytic::eigenfunction_coeffs(&g_spec, n)?;
        let scale = f.coeffs().iter().map(|a| a.norm()).fold(0.0, f64::max);
        let diff = f
            .coeffs()
            .iter()
            .zip(g.coeffs())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        t.push(vec![j.to_string(), (p * j).to_string(), (q * j).to_string(), num(diff / scale)]);
    }
    out.tables.push(t);
    out.notes.push(
        "each common zero is simple for B_r - lambda and for B_s - mu; it is a zero of order two of their product".to_string(),
    );
    Ok(out)
}

// ---------------------------------------------------------------------------

static REGISTRY: [ScenarioDef; 16] = [
    ScenarioDef {
        name: "thm22-eigenfield",
        anchor: "holomorphic eigenfields of universal operators and the disc of infinite-multiplicity eigenvalues",
        summary: "block backward shift: eigenfield residuals, condition (C) and the spectral witness test",
        params: &[
            p("blocks", 4.0, "number of blocks K"),
            p("field_dim", 3.0, "inner dimension of the displayed eigenfield"),
            p("z_re", 0.3, "eigenfield parameter, real part"),
            p("z_im", 0.2, "eigenfield parameter, imaginary part"),
            p("rings", 3.0, "radial rings of the disc grid"),
            p("angles", 8.0, "angles of the disc grid"),
        ],
        ladder: &[16, 32, 64],
        check: check_eigenfield,
        run: run_eigenfield,
    },
    ScenarioDef {
        name: "prop21-block",
        anchor: "upper-triangular block operators with a universal corner are universal",
        summary: "[[U, A], [0, B]] with U the decimation operator",
        params: &[p("b", 0.5, "scalar in the lower-right corner B = b I")],
        ladder: &[16, 32, 64],
        check: no_check,
        run: run_prop21,
    },
    ScenarioDef {
        name: "ex25-notC",
        anchor: "a rank-one perturbation of a (C) operator that keeps (C+) but loses (C)",
        summary: "U + K with K e_2 = -e_1",
        params: &[],
        ladder: &[32, 64, 128],
        check: no_check,
        run: run_ex25,
    },
    ScenarioDef {
        name: "ex26-perturbation",
        anchor: "universal operators are neither open nor stable under compact perturbation",
        summary: "V_n = [[U, I], [I/n, 0]] and W = [[U, I], [K, 0]] are injective",
        params: &[
            p("n_max", 10.0, "largest n"),
            p("trunc", 128.0, "per-block truncation of the sigma_min table"),
        ],
        ladder: &[32, 64, 128],
        check: check_ex26,
        run: run_ex26,
    },
    ScenarioDef {
        name: "multiplicativity-failure",
        anchor: "products of universal operators need not be universal",
        summary: "U0 (+) 0 times 0 (+) U0 is zero; U0 U0 keeps (C)",
        params: &[],
        ladder: &[16, 32, 64],
        check: no_check,
        run: run_multiplicativity,
    },
    ScenarioDef {
        name: "annulus",
        anchor: "spectrum of a hyperbolic composition operator on H^2 and S^2",
        summary: "annulus radii ((1-r)/(1+r))^(1/2) and ((1+r)/(1-r))^(1/2)",
        params: &[p("r", 0.5, "automorphism parameter")],
        ladder: &[],
        check: check_annulus,
        run: run_annulus,
    },
    ScenarioDef {
        name: "ex31-falsify-dirichlet",
        anchor: "the point spectrum of C_phi_r on S^2 is {1}",
        summary: "kernel dimensions of C_phi_r - lambda on D_beta over a polar grid in the annulus",
        params: &[
            p("r", 0.5, "automorphism parameter"),
            p("beta", 1.0, "Dirichlet weight exponent"),
            p("rings", 5.0, "radial rings"),
            p("angles", 12.0, "angles per ring"),
        ],
        ladder: &[64, 128, 256],
        check: check_ex31,
        run: run_ex31,
    },
    ScenarioDef {
        name: "thm32-adjoint-certify",
        anchor: "universality of the adjoint C_phi* - lambda on S^2",
        summary: "residual witnesses and coranks for the compressed adjoint model at lambda = exp(u t_r)",
        params: &[
            p("r", 0.5, "automorphism parameter"),
            p("u", 0.25, "eigenvalue exponent, lambda = exp(u t_r)"),
            p("n_max", 60.0, "candidate eigenfunctions use |k| <= n_max"),
        ],
        ladder: &[256, 512, 1024],
        check: check_thm32,
        run: run_thm32,
    },
    ScenarioDef {
        name: "cor34-heller",
        anchor: "the principal part of the adjoint as a compact perturbation of a universal operator",
        summary: "decay of the remainder for both middle signs and (C+) at lambda",
        params: &[
            p("r", 0.5, "automorphism parameter"),
            p("n", 256.0, "truncation of the decay profile"),
            p("j", 32.0, "index of the reported ratio s_j / s_1"),
            p("lambda", 1.0, "spectral parameter of the (C+) checks"),
        ],
        ladder: &[64, 128, 256],
        check: check_heller,
        run: run_heller,
    },
    ScenarioDef {
        name: "mzstar-adjoint-compare",
        anchor: "the adjoint of M_z on S^2",
        summary: "Gram adjoint entries against the closed form ((n+1)/n)^n",
        params: &[p("n", 16.0, "truncation")],
        ladder: &[],
        check: check_mz,
        run: run_mz,
    },
    ScenarioDef {
        name: "prop35-halfplane",
        anchor: "spectral circle |lambda| = mu^(-1/2) of dilations on the half-plane",
        summary: "radii on the Hardy space and two weighted Bergman spaces",
        params: &[
            p("mu", 4.0, "dilation factor"),
            p("alpha1", 0.0, "first Bergman weight"),
            p("alpha2", 2.0, "second Bergman weight"),
        ],
        ladder: &[],
        check: check_halfplane,
        run: run_halfplane,
    },
    ScenarioDef {
        name: "prop41-falsifiers",
        anchor: "algebraically related pairs (T, p(T) T) and (A^m, A^n) are not universal commuting pairs",
        summary: "polynomial, power and commutant witnesses, with a random control",
        params: &[
            p("n", 32.0, "truncation"),
            p("seed", 7.0, "seed of the random control"),
            p("r", 0.5, "automorphism parameter of the commutant witness"),
            p("lambda_re", 1.2, "spectral parameter, real part"),
            p("lambda_im", 0.0, "spectral parameter, imaginary part"),
        ],
        ladder: &[],
        check: check_prop41,
        run: run_prop41,
    },
    ScenarioDef {
        name: "ex43-diagonal",
        anchor: "a commuting pair of universal operators whose kernels meet trivially",
        summary: "(U (+) I, I (+) U) with U the decimation operator",
        params: &[],
        ladder: &[16, 32, 64],
        check: no_check,
        run: run_ex43,
    },
    ScenarioDef {
        name: "thm44-scalar-pair",
        anchor: "the kernel intersection of (L_B, R_B*) is one-dimensional",
        summary: "left and right multiplication by the backward shift on n x n truncations",
        params: &[],
        ladder: &[8, 16, 32],
        check: no_check,
        run: run_thm44_scalar,
    },
    ScenarioDef {
        name: "thm44-block-pair",
        anchor: "the block backward shift pair satisfies the kernel-sum identity",
        summary: "left and right multiplication by block shifts, dims (K d^2, K d^2, d^2, (2K-1) d^2)",
        params: &[p("d", 0.0, "inner dimension; 0 uses d = K")],
        ladder: &[4, 6, 8],
        check: check_thm44_block,
        run: run_thm44_block,
    },
    ScenarioDef {
        name: "ex46-common-zeros",
        anchor: "common zeros of two analytic covering maps",
        summary: "zero sets of psi_r - lambda and psi_s - mu, matched pairs and eigenfunction agreement",
        params: &[
            p("r", 0.5, "first automorphism parameter"),
            p("s", 0.2679491924311228, "second automorphism parameter"),
            p("lambda_re", 1.0, "target of psi_r, real part"),
            p("lambda_im", 0.0, "target of psi_r, imaginary part"),
            p("mu_re", 1.0, "target of psi_s, real part"),
            p("mu_im", 0.0, "target of psi_s, imaginary part"),
            p("k_max", 20.0, "zeros are listed for |k| <= k_max"),
            p("u", 0.25, "eigenfunction exponent"),
            p("coeffs", 256.0, "coefficients compared in the agreement table"),
        ],
        ladder: &[],
        check: check_ex46,
        run: run_ex46,
    },
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_names_are_unique() {
        let mut names: Vec<&str> = registry().iter().map(|d| d.name).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), registry().len());
        assert!(registry().len() >= 12);
    }

    #[test]
    fn unknown_names_and_params_are_rejected() {
        let none = BTreeMap::new();
        assert!(validate("no-such", &none, None).is_err());
        let mut bad = BTreeMap::new();
        bad.insert("zeta".to_string(), "1".to_string());
        assert!(validate("annulus", &bad, None).is_err());
        let mut r = BTreeMap::new();
        r.insert("r".to_string(), "1.0".to_string());
        assert!(validate("annulus", &r, None).is_err());
        assert!(validate("ex31-falsify-dirichlet", &r, None).is_err());
        assert!(validate("annulus", &none, Some(&[1, 2, 3])).is_err());
        assert!(validate("ex43-diagonal", &none, Some(&[8, 4, 16])).is_err());
    }

    #[test]
    fn zero_set_targets_must_lie_in_the_annulus() {
        let mut m = BTreeMap::new();
        m.insert("lambda_re".to_string(), "2.0".to_string());
        assert!(matches!(
            validate("ex46-common-zeros", &m, None),
            Err(Error::OutsideAnnulus { .. })
        ));
        assert!(validate("ex46-common-zeros", &BTreeMap::new(), None).is_ok());
    }

    #[test]
    fn small_scenarios_run() {
        let none = BTreeMap::new();
        let out = run("annulus", &none, None).unwrap();
        let t = out.table("radii").unwrap();
        let a: f64 = t.rows[0][2].parse().unwrap();
        assert!((a - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        let out = run("ex43-diagonal", &none, None).unwrap();
        assert_eq!(out.report("condition-m").unwrap().verdict, certify::Verdict::Falsified);
        assert!(out.report("condition-m").unwrap().narrative.contains("Anchor:"));
    }
}
