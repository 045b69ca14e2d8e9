//! Truncation matrices of the concrete operators: shifts, composition
//! operators of normalized hyperbolic automorphisms, analytic Toeplitz and
//! multiplication operators, weighted adjoints, 2x2 block assemblies,
//! compressions, and Hilbert-Schmidt left/right multiplications.

use std::io::{BufRead, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numlin::{self, CMat, LinearMap, SubspaceBasis};
use crate::spaces::{CoeffVec, SpaceSpec};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Working truncation used for composition matrices, as a multiple of the
/// requested size.
pub const COMPOSITION_PAD_FACTOR: usize = 4;

/// A dense truncation matrix together with the spaces it maps between.
///
/// Entries act on Taylor coefficients: column `j` is the image of the
/// `j`-th basis vector of the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct OpMatrix {
    entries: CMat,
    domain: SpaceSpec,
    codomain: SpaceSpec,
    build_pad: usize,
    provenance: String,
}

impl OpMatrix {
    pub fn new(
        entries: CMat,
        domain: SpaceSpec,
        codomain: SpaceSpec,
        build_pad: usize,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        let provenance = provenance.into();
        if entries.ncols() != domain.trunc() || entries.nrows() != codomain.trunc() {
            return Err(Error::SizeMismatch(format!(
                "{}x{} entries for spaces of size {} -> {}",
                entries.nrows(),
                entries.ncols(),
                domain.trunc(),
                codomain.trunc()
            )));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(invalid("entries", "non-finite entry"));
        }
        if provenance.is_empty() {
            return Err(invalid("provenance", "must not be empty"));
        }
        let build_pad = build_pad.max(entries.nrows()).max(entries.ncols());
        Ok(Self {
            entries,
            domain,
            codomain,
            build_pad,
            provenance,
        })
    }

    /// Operator on a single space.
    pub fn on_space(entries: CMat, space: &SpaceSpec, provenance: impl Into<String>) -> Result<Self> {
        Self::new(entries, space.clone(), space.clone(), space.trunc(), provenance)
    }

    pub fn identity(space: &SpaceSpec) -> Self {
        let n = space.trunc();
        Self::on_space(CMat::identity(n, n), space, "identity").expect("identity is well formed")
    }

    pub fn zeros(domain: &SpaceSpec, codomain: &SpaceSpec) -> Self {
        Self::new(
            CMat::zeros(codomain.trunc(), domain.trunc()),
            domain.clone(),
            codomain.clone(),
            0,
            "zero",
        )
        .expect("zero is well formed")
    }

    pub fn entries(&self) -> &CMat {
        &self.entries
    }

    pub fn into_entries(self) -> CMat {
        self.entries
    }

    pub fn domain(&self) -> &SpaceSpec {
        &self.domain
    }

    pub fn codomain(&self) -> &SpaceSpec {
        &self.codomain
    }

    pub fn build_pad(&self) -> usize {
        self.build_pad
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn rows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn cols(&self) -> usize {
        self.entries.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn with_provenance(mut self, provenance: impl Into<String>) -> Self {
        let p = provenance.into();
        if !p.is_empty() {
            self.provenance = p;
        }
        self
    }

    /// Entries in orthonormal coordinates, `W_c^{1/2} A W_d^{-1/2}`, so that
    /// singular values are those of the operator between the weighted spaces.
    pub fn isometric(&self) -> CMat {
        if self.domain.is_unweighted() && self.codomain.is_unweighted() {
            return self.entries.clone();
        }
        let wc = self.codomain.weights();
        let wd = self.domain.weights();
        CMat::from_fn(self.rows(), self.cols(), |i, j| {
            self.entries[(i, j)] * (wc[i].sqrt() / wd[j].sqrt())
        })
    }

    pub fn apply(&self, f: &CoeffVec) -> Result<CoeffVec> {
        if f.space() != &self.domain {
            return Err(Error::SpaceMismatch);
        }
        let x = nalgebra::DVector::from_column_slice(f.coeffs());
        let y = &self.entries * x;
        CoeffVec::new(y.iter().copied().collect(), &self.codomain)
    }

    /// `self * rhs`.
    pub fn compose(&self, rhs: &OpMatrix) -> Result<OpMatrix> {
        if rhs.codomain != self.domain {
            return Err(Error::SizeMismatch(format!(
                "cannot compose {} after {}",
                self.provenance, rhs.provenance
            )));
        }
        OpMatrix::new(
            &self.entries * &rhs.entries,
            rhs.domain.clone(),
            self.codomain.clone(),
            self.build_pad.max(rhs.build_pad),
            format!("({})*({})", self.provenance, rhs.provenance),
        )
    }

    pub fn add(&self, rhs: &OpMatrix) -> Result<OpMatrix> {
        self.same_shape(rhs)?;
        OpMatrix::new(
            &self.entries + &rhs.entries,
            self.domain.clone(),
            self.codomain.clone(),
            self.build_pad.max(rhs.build_pad),
            format!("{} + {}", self.provenance, rhs.provenance),
        )
    }

    pub fn sub(&self, rhs: &OpMatrix) -> Result<OpMatrix> {
        self.same_shape(rhs)?;
        OpMatrix::new(
            &self.entries - &rhs.entries,
            self.domain.clone(),
            self.codomain.clone(),
            self.build_pad.max(rhs.build_pad),
            format!("{} - {}", self.provenance, rhs.provenance),
        )
    }

    pub fn scale(&self, c: Complex64) -> OpMatrix {
        let mut out = self.clone();
        out.entries *= c;
        out.provenance = format!("{c}*({})", self.provenance);
        out
    }

    /// `A - lambda J`, where `J` matches basis vectors with equal absolute index.
    /// For a square operator on one space this is `A - lambda I`.
    pub fn shifted(&self, lambda: Complex64) -> OpMatrix {
        let mut out = self.clone();
        let (d0, c0) = (self.domain.offset(), self.codomain.offset());
        for i in 0..self.rows() {
            let abs = c0 + i;
            if abs >= d0 && abs - d0 < self.cols() {
                out.entries[(i, abs - d0)] -= lambda;
            }
        }
        out.provenance = format!("{} - ({lambda})I", self.provenance);
        out
    }

    /// Leading `rows x cols` block, with both spaces re-truncated.
    pub fn window(&self, rows: usize, cols: usize) -> Result<OpMatrix> {
        if rows > self.rows() || cols > self.cols() || rows == 0 || cols == 0 {
            return Err(Error::SizeMismatch(format!(
                "window {rows}x{cols} of a {}x{} matrix",
                self.rows(),
                self.cols()
            )));
        }
        OpMatrix::new(
            self.entries.view((0, 0), (rows, cols)).into_owned(),
            self.domain.retruncate(cols)?,
            self.codomain.retruncate(rows)?,
            self.build_pad,
            self.provenance.clone(),
        )
    }

    /// Spectral norm between the weighted spaces.
    pub fn norm(&self) -> f64 {
        numlin::op_norm(&self.isometric())
    }

    fn same_shape(&self, rhs: &OpMatrix) -> Result<()> {
        if self.domain != rhs.domain || self.codomain != rhs.codomain {
            return Err(Error::SizeMismatch(format!(
                "{} and {} act between different spaces",
                self.provenance, rhs.provenance
            )));
        }
        Ok(())
    }

    /// Writes a one-line JSON header followed by the column-major entries as
    /// little-endian `f64` (re, im) pairs.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let header = OpHeader {
            rows: self.rows(),
            cols: self.cols(),
            domain: self.domain.clone(),
            codomain: self.codomain.clone(),
            build_pad: self.build_pad,
            provenance: self.provenance.clone(),
            layout: LAYOUT.to_string(),
        };
        let line = serde_json::to_string(&header).map_err(|e| Error::Format(e.to_string()))?;
        let io = |e: std::io::Error| Error::Format(e.to_string());
        w.write_all(line.as_bytes()).map_err(io)?;
        w.write_all(b"\n").map_err(io)?;
        let mut buf = Vec::with_capacity(16 * self.entries.len());
        // nalgebra storage is column-major
        for z in self.entries.iter() {
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
        w.write_all(&buf).map_err(io)?;
        Ok(())
    }

    pub fn read_from<R: BufRead>(mut r: R) -> Result<OpMatrix> {
        let io = |e: std::io::Error| Error::Format(e.to_string());
        let mut line = String::new();
        r.read_line(&mut line).map_err(io)?;
        let header: OpHeader = serde_json::from_str(line.trim_end()).map_err(|e| Error::Format(e.to_string()))?;
        if header.layout != LAYOUT {
            return Err(Error::Format(format!("unknown layout {}", header.layout)));
        }
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes).map_err(io)?;
        if bytes.len() != 16 * header.rows * header.cols {
            return Err(Error::Format(format!(
                "expected {} payload bytes, found {}",
                16 * header.rows * header.cols,
                bytes.len()
            )));
        }
        let vals: Vec<Complex64> = bytes
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
                let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
                Complex64::new(re, im)
            })
            .collect();
        let entries = CMat::from_vec(header.rows, header.cols, vals);
        OpMatrix::new(entries, header.domain, header.codomain, header.build_pad, header.provenance)
    }
}

const LAYOUT: &str = "column-major complex128 little-endian";

#[derive(Serialize, Deserialize)]
struct OpHeader {
    rows: usize,
    cols: usize,
    domain: SpaceSpec,
    codomain: SpaceSpec,
    build_pad: usize,
    provenance: String,
    layout: String,
}

impl LinearMap for OpMatrix {
    fn shape(&self) -> (usize, usize) {
        (self.rows(), self.cols())
    }

    fn singular_values(&self) -> Vec<f64> {
        numlin::singular_values(&self.isometric())
    }

    /// Kernel in orthonormal coordinates of the domain (`W_d^{1/2} x`).
    fn kernel(&self, tol_rel: f64) -> SubspaceBasis {
        numlin::svd_kernel(&self.isometric(), tol_rel)
    }

    fn compose(&self, rhs: &Self) -> Result<Self> {
        OpMatrix::compose(self, rhs)
    }

    fn commutator_bound(&self, other: &Self) -> Result<f64> {
        let ab = self.compose(other)?;
        let ba = other.compose(self)?;
        Ok(numlin::fro_norm(&(ab.isometric() - ba.isometric())))
    }

    fn frobenius(&self) -> f64 {
        numlin::fro_norm(&self.isometric())
    }
}

/// Unilateral backward shift `e_{k+1} -> e_k`, `e_0 -> 0` on `l^2`.
pub fn backward_shift(n: usize) -> Result<OpMatrix> {
    backward_shift_section(n, n)
}

/// `P_rows B P_cols`; with `cols > rows` the section is onto.
pub fn backward_shift_section(rows: usize, cols: usize) -> Result<OpMatrix> {
    if rows.max(cols) < 2 {
        return Err(Error::Truncation { min: 2, got: rows.max(cols) });
    }
    let e = CMat::from_fn(rows, cols, |i, j| if j == i + 1 { ONE } else { ZERO });
    OpMatrix::new(
        e,
        SpaceSpec::hardy(cols)?,
        SpaceSpec::hardy(rows)?,
        0,
        format!("backward shift [{rows}x{cols}]"),
    )
}

/// Forward shift `e_k -> e_{k+1}`, i.e. multiplication by `z` on `H^2`.
pub fn forward_shift_section(rows: usize, cols: usize) -> Result<OpMatrix> {
    let e = CMat::from_fn(rows, cols, |i, j| if i == j + 1 { ONE } else { ZERO });
    OpMatrix::new(
        e,
        SpaceSpec::hardy(cols)?,
        SpaceSpec::hardy(rows)?,
        0,
        format!("forward shift [{rows}x{cols}]"),
    )
}

/// Truncation shape of the block backward shift on `l^2(Z_+, C^d)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockShiftSpec {
    blocks: usize,
    dim: usize,
}

impl BlockShiftSpec {
    pub fn new(blocks: usize, dim: usize) -> Result<Self> {
        if blocks < 2 {
            return Err(invalid("blocks", format!("need at least 2 blocks, got {blocks}")));
        }
        if dim == 0 {
            return Err(invalid("dim", "inner block dimension must be positive"));
        }
        Ok(Self { blocks, dim })
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn size(&self) -> usize {
        self.blocks * self.dim
    }
}

/// `(x_0, x_1, ...) -> (x_1, x_2, ...)` with `K` blocks of size `d`.
pub fn block_backward_shift(spec: BlockShiftSpec) -> Result<OpMatrix> {
    block_backward_shift_section(spec, spec.blocks)
}

/// Section with `spec.blocks` output blocks and `input_blocks` input blocks.
pub fn block_backward_shift_section(spec: BlockShiftSpec, input_blocks: usize) -> Result<OpMatrix> {
    let d = spec.dim;
    let rows = spec.size();
    let cols = input_blocks * d;
    let e = CMat::from_fn(rows, cols, |i, j| if j == i + d { ONE } else { ZERO });
    OpMatrix::new(
        e,
        SpaceSpec::hardy(cols)?,
        SpaceSpec::hardy(rows)?,
        0,
        format!("block backward shift K={} d={d} [{rows}x{cols}]", spec.blocks),
    )
}

pub fn block_forward_shift(spec: BlockShiftSpec) -> Result<OpMatrix> {
    let d = spec.dim;
    let n = spec.size();
    let e = CMat::from_fn(n, n, |i, j| if i == j + d { ONE } else { ZERO });
    OpMatrix::on_space(
        e,
        &SpaceSpec::hardy(n)?,
        format!("block forward shift K={} d={d}", spec.blocks),
    )
}

/// `U e_{2n} = e_n`, `U e_{2n+1} = 0`: onto with the odd-indexed vectors as kernel.
pub fn decimation_section(rows: usize, cols: usize) -> Result<OpMatrix> {
    let e = CMat::from_fn(rows, cols, |i, j| if j == 2 * i { ONE } else { ZERO });
    OpMatrix::new(
        e,
        SpaceSpec::hardy(cols)?,
        SpaceSpec::hardy(rows)?,
        0,
        format!("decimation e_2n -> e_n [{rows}x{cols}]"),
    )
}

/// Rank-one map `x -> <x, u> v`, i.e. the matrix `v u^H`.
pub fn rank_one(u: &CoeffVec, v: &CoeffVec) -> Result<OpMatrix> {
    let uu = nalgebra::DVector::from_column_slice(u.coeffs());
    let vv = nalgebra::DVector::from_column_slice(v.coeffs());
    // weighted inner product on the domain: <x, u> = u^H W x
    let wu = nalgebra::DVector::from_iterator(
        uu.len(),
        uu.iter().zip(u.space().weights()).map(|(a, w)| a * *w),
    );
    OpMatrix::new(
        &vv * wu.adjoint(),
        u.space().clone(),
        v.space().clone(),
        0,
        "rank-one u (x) v",
    )
}

/// Leading coefficients of the powers `phi_r^k`, `phi_r(z) = (z + r)/(1 + r z)`.
///
/// Returns a `rows x cols` section (column `k` holds the first `rows`
/// coefficients of `phi_r^k`). Powers are formed by exact truncated
/// multiplication with `(z + r)` followed by division by `(1 + r z)`, on
/// `pad` working coefficients.
fn composition_entries(r: f64, rows: usize, cols: usize, pad: usize) -> CMat {
    let pad = pad.max(rows);
    let mut out = CMat::zeros(rows, cols);
    let mut g = vec![0.0f64; pad];
    let mut next = vec![0.0f64; pad];
    g[0] = 1.0;
    for k in 0..cols {
        for i in 0..rows {
            out[(i, k)] = Complex64::new(g[i], 0.0);
        }
        if k + 1 == cols {
            break;
        }
        // h = (z + r) g, then y (1 + r z) = h
        let mut prev = 0.0;
        for n in 0..pad {
            let h = r * g[n] + if n > 0 { g[n - 1] } else { 0.0 };
            let y = h - r * prev;
            next[n] = y;
            prev = y;
        }
        std::mem::swap(&mut g, &mut next);
    }
    out
}

fn check_disc_parameter(r: f64) -> Result<()> {
    if !(r.abs() < 1.0) {
        return Err(invalid("r", format!("need |r| < 1, got {r}")));
    }
    Ok(())
}

/// `C_{phi_r}` on `s`: column `k` holds the Taylor coefficients of `phi_r^k`.
///
/// Built on `4N` working coefficients and windowed to `N`.
pub fn composition_matrix(r: f64, s: &SpaceSpec) -> Result<OpMatrix> {
    composition_section(r, s, s)
}

/// Possibly rectangular section `P_codomain C_{phi_r} P_domain`.
pub fn composition_section(r: f64, domain: &SpaceSpec, codomain: &SpaceSpec) -> Result<OpMatrix> {
    check_disc_parameter(r)?;
    if domain.offset() != 0 || codomain.offset() != 0 {
        return Err(invalid("space", "composition matrices start at e_0; compress afterwards"));
    }
    let pad = COMPOSITION_PAD_FACTOR * domain.trunc().max(codomain.trunc());
    let e = composition_entries(r, codomain.trunc(), domain.trunc(), pad);
    OpMatrix::new(
        e,
        domain.clone(),
        codomain.clone(),
        pad,
        format!("C_phi(r={r}) [{}x{}]", codomain.trunc(), domain.trunc()),
    )
}

/// `C_g` for `g(z) = -z`: the diagonal `(-1)^n`.
pub fn sign_conjugator(n: usize) -> Result<OpMatrix> {
    let s = SpaceSpec::hardy(n)?;
    let e = CMat::from_fn(n, n, |i, j| {
        if i == j {
            if i % 2 == 0 {
                ONE
            } else {
                -ONE
            }
        } else {
            ZERO
        }
    });
    OpMatrix::on_space(e, &s, "C_g, g(z) = -z")
}

/// Multiplication by an analytic symbol on `H^2` coefficients: the lower
/// triangular Toeplitz matrix `T[i][j] = c_{i-j}`.
pub fn toeplitz_analytic(symbol: &[Complex64], n: usize) -> Result<OpMatrix> {
    if symbol.len() < n {
        return Err(Error::InsufficientSymbol {
            needed: n,
            got: symbol.len(),
        });
    }
    let s = SpaceSpec::hardy(n)?;
    let e = CMat::from_fn(n, n, |i, j| if i >= j { symbol[i - j] } else { ZERO });
    OpMatrix::on_space(e, &s, "analytic Toeplitz T_psi")
}

/// `M_z f = z f` on `s`. The image of `e_{N-1}` leaves the truncation.
pub fn mult_z(s: &SpaceSpec) -> Result<OpMatrix> {
    let n = s.trunc();
    let e = CMat::from_fn(n, n, |i, j| if i == j + 1 { ONE } else { ZERO });
    OpMatrix::on_space(e, s, format!("M_z on {s} (boundary loss at e_{})", s.offset() + n - 1))
}

/// Adjoint with respect to the weighted inner products:
/// `A* = W_d^{-1} A^H W_c`, so that `<A f, g> = <f, A* g>`.
pub fn weighted_adjoint(a: &OpMatrix, s: &SpaceSpec) -> Result<OpMatrix> {
    if a.domain() != s || a.codomain() != s {
        return Err(Error::SpaceMismatch);
    }
    adjoint(a)
}

/// Weighted adjoint for a possibly rectangular operator.
pub fn adjoint(a: &OpMatrix) -> Result<OpMatrix> {
    let wd = a.domain().weights();
    let wc = a.codomain().weights();
    let e = CMat::from_fn(a.cols(), a.rows(), |i, j| a.entries()[(j, i)].conj() * (wc[j] / wd[i]));
    OpMatrix::new(
        e,
        a.codomain().clone(),
        a.domain().clone(),
        a.build_pad(),
        format!("({})*", a.provenance()),
    )
}

/// Sign of the `(M_z* + M_z) C_phi` term in [`heller_principal`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MiddleSign {
    /// `-(r/(1-r^2))`, the coefficient as usually displayed.
    Minus,
    /// `+(r/(1-r^2))`, the coefficient for which the remainder against the
    /// Gram adjoint of `C_{phi_{-r}}` has decaying singular values.
    Plus,
}

pub fn heller_coefficients(r: f64) -> (f64, f64) {
    ((1.0 + r * r) / (1.0 - r * r), r / (1.0 - r * r))
}

/// `((1+r^2)/(1-r^2)) C - (r/(1-r^2)) (M_z* + M_z) C - lambda I` on an `S^2` space.
pub fn heller_principal(r: f64, lambda: Complex64, s: &SpaceSpec) -> Result<OpMatrix> {
    heller_principal_signed(r, lambda, s, MiddleSign::Minus)
}

pub fn heller_principal_signed(r: f64, lambda: Complex64, s: &SpaceSpec, sign: MiddleSign) -> Result<OpMatrix> {
    check_disc_parameter(r)?;
    if s.beta() != 1.0 || s.offset() != 0 {
        return Err(invalid("space", "the principal part is assembled on S^2 (beta = 1) from e_0"));
    }
    let n = s.trunc();
    // one extra row of C feeds row n-1 of M_z* C exactly
    let c = composition_entries(r, n + 1, n, COMPOSITION_PAD_FACTOR * n);
    let w = s.retruncate(n + 1)?;
    let w = w.weights();
    let (lead, mid) = heller_coefficients(r);
    let mid = match sign {
        MiddleSign::Minus => -mid,
        MiddleSign::Plus => mid,
    };
    let e = CMat::from_fn(n, n, |i, j| {
        let mz = if i > 0 { c[(i - 1, j)] } else { ZERO };
        let mz_star = c[(i + 1, j)] * (w[i + 1] / w[i]);
        let mut v = c[(i, j)] * lead + (mz + mz_star) * mid;
        if i == j {
            v -= lambda;
        }
        v
    });
    OpMatrix::new(
        e,
        s.clone(),
        s.clone(),
        COMPOSITION_PAD_FACTOR * n,
        format!("principal part r={r} lambda={lambda} sign={sign:?}"),
    )
}

/// Assembles `[[U, A], [C, B]]`; `None` is a zero block.
///
/// Block sizes are read off whichever blocks are present.
pub fn block2x2(
    u: Option<&OpMatrix>,
    a: Option<&OpMatrix>,
    c: Option<&OpMatrix>,
    b: Option<&OpMatrix>,
) -> Result<OpMatrix> {
    let pick = |cands: [Option<&SpaceSpec>; 2]| cands.into_iter().flatten().next().cloned();
    // first column / row use H1, second uses H2
    let h1_in = pick([u.map(|m| m.domain()), c.map(|m| m.domain())]);
    let h2_in = pick([a.map(|m| m.domain()), b.map(|m| m.domain())]);
    let h1_out = pick([u.map(|m| m.codomain()), a.map(|m| m.codomain())]);
    let h2_out = pick([c.map(|m| m.codomain()), b.map(|m| m.codomain())]);
    let (h1_in, h2_in, h1_out, h2_out) = match (h1_in, h2_in, h1_out, h2_out) {
        (Some(a), Some(b), Some(c), Some(d)) => (a, b, c, d),
        _ => {
            return Err(Error::SizeMismatch(
                "block sizes cannot be inferred; pass explicit zero operators".into(),
            ))
        }
    };
    let check = |m: Option<&OpMatrix>, dom: &SpaceSpec, cod: &SpaceSpec| -> Result<()> {
        if let Some(m) = m {
            if m.domain() != dom || m.codomain() != cod {
                return Err(Error::SizeMismatch(format!("block {} is not conformable", m.provenance())));
            }
        }
        Ok(())
    };
    check(u, &h1_in, &h1_out)?;
    check(a, &h2_in, &h1_out)?;
    check(c, &h1_in, &h2_out)?;
    check(b, &h2_in, &h2_out)?;
    let domain = h1_in.direct_sum(&h2_in)?;
    let codomain = h1_out.direct_sum(&h2_out)?;
    let (r1, c1) = (h1_out.trunc(), h1_in.trunc());
    let mut e = CMat::zeros(codomain.trunc(), domain.trunc());
    let mut pad = 0;
    let mut names = Vec::new();
    for (blk, (ro, co), tag) in [
        (u, (0, 0), "U"),
        (a, (0, c1), "A"),
        (c, (r1, 0), "C"),
        (b, (r1, c1), "B"),
    ] {
        if let Some(m) = blk {
            e.view_mut((ro, co), (m.rows(), m.cols())).copy_from(m.entries());
            pad = pad.max(m.build_pad());
            names.push(format!("{tag}={}", m.provenance()));
        } else {
            names.push(format!("{tag}=0"));
        }
    }
    OpMatrix::new(e, domain, codomain, pad, format!("[[U, A], [C, B]] with {}", names.join(", ")))
}

/// Compression to `z H^2`: deletes row 0 and column 0. Rectangular sections
/// are allowed.
pub fn compress_zh2(a: &OpMatrix) -> Result<OpMatrix> {
    let small = a.rows().min(a.cols());
    if small < 2 {
        return Err(Error::Truncation { min: 2, got: small });
    }
    let (m, n) = (a.rows(), a.cols());
    OpMatrix::new(
        a.entries().view((1, 1), (m - 1, n - 1)).into_owned(),
        a.domain().drop_first()?,
        a.codomain().drop_first()?,
        a.build_pad(),
        format!("P_zH2 ({})", a.provenance()),
    )
}

/// Operator on vectorized Hilbert-Schmidt truncations.
///
/// `S` is vectorized column-major, so left multiplication `S -> U S` is
/// `I (x) U` and right multiplication `S -> S V` is `V^T (x) I`. Products of
/// Kronecker-structured operators stay Kronecker-structured.
#[derive(Debug, Clone, PartialEq)]
pub struct HSOperator {
    repr: HsRepr,
    factor_left: Option<OpMatrix>,
    factor_right: Option<OpMatrix>,
    in_shape: (usize, usize),
    out_shape: (usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
enum HsRepr {
    /// `outer (x) inner`
    Kron { outer: CMat, inner: CMat },
    Dense(CMat),
}

fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

fn kron_vec(a: &nalgebra::DVectorView<Complex64>, b: &nalgebra::DVectorView<Complex64>) -> nalgebra::DVector<Complex64> {
    let nb = b.len();
    nalgebra::DVector::from_fn(a.len() * nb, |i, _| a[i / nb] * b[i % nb])
}

/// `L_U : S -> U S` acting on `n x n` truncations, `n = U.cols()`.
pub fn hs_left(u: &OpMatrix) -> Result<HSOperator> {
    hs_left_on(u, u.cols())
}

/// `L_U` acting on matrices with `width` columns.
pub fn hs_left_on(u: &OpMatrix, width: usize) -> Result<HSOperator> {
    if !u.domain().is_unweighted() || !u.codomain().is_unweighted() {
        return Err(invalid("U", "Hilbert-Schmidt maps are built over l^2 truncations"));
    }
    Ok(HSOperator {
        repr: HsRepr::Kron {
            outer: CMat::identity(width, width),
            inner: u.entries().clone(),
        },
        factor_left: Some(u.clone()),
        factor_right: None,
        in_shape: (u.cols(), width),
        out_shape: (u.rows(), width),
    })
}

/// `R_V : S -> S V` acting on `n x n` truncations, `n = V.rows()`.
pub fn hs_right(v: &OpMatrix) -> Result<HSOperator> {
    hs_right_on(v, v.rows())
}

/// `R_V` acting on matrices with `height` rows.
pub fn hs_right_on(v: &OpMatrix, height: usize) -> Result<HSOperator> {
    if !v.domain().is_unweighted() || !v.codomain().is_unweighted() {
        return Err(invalid("V", "Hilbert-Schmidt maps are built over l^2 truncations"));
    }
    Ok(HSOperator {
        repr: HsRepr::Kron {
            outer: v.entries().transpose(),
            inner: CMat::identity(height, height),
        },
        factor_left: None,
        factor_right: Some(v.clone()),
        in_shape: (height, v.rows()),
        out_shape: (height, v.cols()),
    })
}

impl HSOperator {
    pub fn dense(matrix: CMat, in_shape: (usize, usize), out_shape: (usize, usize)) -> Result<Self> {
        if matrix.ncols() != in_shape.0 * in_shape.1 || matrix.nrows() != out_shape.0 * out_shape.1 {
            return Err(Error::SizeMismatch("dense HS matrix does not match the declared shapes".into()));
        }
        Ok(Self {
            repr: HsRepr::Dense(matrix),
            factor_left: None,
            factor_right: None,
            in_shape,
            out_shape,
        })
    }

    /// Shape of the matrices `S` this acts on.
    pub fn in_shape(&self) -> (usize, usize) {
        self.in_shape
    }

    pub fn out_shape(&self) -> (usize, usize) {
        self.out_shape
    }

    pub fn factor_left(&self) -> Option<&OpMatrix> {
        self.factor_left.as_ref()
    }

    pub fn factor_right(&self) -> Option<&OpMatrix> {
        self.factor_right.as_ref()
    }

    pub fn is_kronecker(&self) -> bool {
        matches!(self.repr, HsRepr::Kron { .. })
    }

    pub fn to_dense(&self) -> CMat {
        match &self.repr {
            HsRepr::Kron { outer, inner } => kron(outer, inner),
            HsRepr::Dense(m) => m.clone(),
        }
    }

    pub fn apply(&self, s: &CMat) -> Result<CMat> {
        if s.shape() != self.in_shape {
            return Err(Error::SizeMismatch(format!(
                "expected a {}x{} matrix, got {}x{}",
                self.in_shape.0,
                self.in_shape.1,
                s.nrows(),
                s.ncols()
            )));
        }
        match &self.repr {
            // (O (x) I) vec(S) = vec(I S O^T)
            HsRepr::Kron { outer, inner } => Ok(inner * s * outer.transpose()),
            HsRepr::Dense(m) => {
                let v = nalgebra::DVector::from_column_slice(s.as_slice());
                let y = m * v;
                Ok(CMat::from_column_slice(self.out_shape.0, self.out_shape.1, y.as_slice()))
            }
        }
    }
}

impl LinearMap for HSOperator {
    fn shape(&self) -> (usize, usize) {
        (
            self.out_shape.0 * self.out_shape.1,
            self.in_shape.0 * self.in_shape.1,
        )
    }

    fn singular_values(&self) -> Vec<f64> {
        match &self.repr {
            HsRepr::Kron { outer, inner } => {
                let so = numlin::singular_values(outer);
                let si = numlin::singular_values(inner);
                let mut s: Vec<f64> = so.iter().flat_map(|a| si.iter().map(move |b| a * b)).collect();
                s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
                s
            }
            HsRepr::Dense(m) => numlin::singular_values(m),
        }
    }

    fn kernel(&self, tol_rel: f64) -> SubspaceBasis {
        match &self.repr {
            HsRepr::Kron { outer, inner } => {
                let (so, vo) = numlin::right_singular_system(outer);
                let (si, vi) = numlin::right_singular_system(inner);
                let smax = so.first().copied().unwrap_or(0.0) * si.first().copied().unwrap_or(0.0);
                let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
                for (a, &x) in so.iter().enumerate() {
                    for (b, &y) in si.iter().enumerate() {
                        let p = x * y;
                        if smax == 0.0 || p <= tol_rel * smax {
                            pairs.push((p, a, b));
                        }
                    }
                }
                pairs.sort_by(|l, r| {
                    l.0.partial_cmp(&r.0)
                        .unwrap_or(std::cmp::Ordering::Equal)
                        .then((l.1, l.2).cmp(&(r.1, r.2)))
                });
                let n = self.shape().1;
                let mut cols = CMat::zeros(n, pairs.len());
                for (j, &(_, a, b)) in pairs.iter().enumerate() {
                    cols.set_column(j, &kron_vec(&vo.column(a), &vi.column(b)));
                }
                // Kronecker products of orthonormal families are orthonormal
                numlin::normalize_phases(&mut cols);
                SubspaceBasis::from_orthonormal(cols, tol_rel)
            }
            HsRepr::Dense(m) => numlin::svd_kernel(m, tol_rel),
        }
    }

    fn compose(&self, rhs: &Self) -> Result<Self> {
        if rhs.out_shape != self.in_shape {
            return Err(Error::SizeMismatch("HS operators are not composable".into()));
        }
        let repr = match (&self.repr, &rhs.repr) {
            (HsRepr::Kron { outer: o1, inner: i1 }, HsRepr::Kron { outer: o2, inner: i2 }) => HsRepr::Kron {
                outer: o1 * o2,
                inner: i1 * i2,
            },
            _ => HsRepr::Dense(self.to_dense() * rhs.to_dense()),
        };
        Ok(HSOperator {
            repr,
            factor_left: None,
            factor_right: None,
            in_shape: rhs.in_shape,
            out_shape: self.out_shape,
        })
    }

    fn commutator_bound(&self, other: &Self) -> Result<f64> {
        let ab = self.compose(other)?;
        let ba = other.compose(self)?;
        match (&ab.repr, &ba.repr) {
            // X (x) Y - Z (x) W = (X - Z) (x) Y + Z (x) (Y - W)
            (HsRepr::Kron { outer: x, inner: y }, HsRepr::Kron { outer: z, inner: w }) => Ok(
                numlin::fro_norm(&(x - z)) * numlin::fro_norm(y) + numlin::fro_norm(z) * numlin::fro_norm(&(y - w)),
            ),
            _ => Ok(numlin::fro_norm(&(ab.to_dense() - ba.to_dense()))),
        }
    }

    fn frobenius(&self) -> f64 {
        match &self.repr {
            HsRepr::Kron { outer, inner } => numlin::fro_norm(outer) * numlin::fro_norm(inner),
            HsRepr::Dense(m) => numlin::fro_norm(m),
        }
    }
}
