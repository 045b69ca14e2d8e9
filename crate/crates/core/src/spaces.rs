//! Weighted Dirichlet coefficient spaces `D_beta`.
//!
//! A function `f(z) = sum a_n z^n` is stored through its first `trunc`
//! Taylor coefficients. The norm is `sum w_n |a_n|^2`, with
//! `w_n = (n + 1)^(2 beta)` for the power variant. The derivative variant
//! (`beta = 1` only) is the equivalent `S^2` norm `|f(0)|^2 + ||f'||^2_{H^2}`,
//! i.e. `w_0 = 1` and `w_n = n^2`.
//!
//! `offset` shifts the basis to `e_offset, ..., e_{offset + trunc - 1}`; a
//! compression to `z H^2` lives on a space with offset 1.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormVariant {
    Power,
    Derivative,
}

impl fmt::Display for NormVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormVariant::Power => f.write_str("power"),
            NormVariant::Derivative => f.write_str("derivative"),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct SpaceSpecRepr {
    beta: f64,
    trunc: usize,
    variant: NormVariant,
    #[serde(default, skip_serializing_if = "is_zero")]
    offset: usize,
}

fn is_zero(v: &usize) -> bool {
    *v == 0
}

/// A truncated weighted coefficient space. Immutable once built.
#[derive(Clone, Serialize, Deserialize)]
#[serde(try_from = "SpaceSpecRepr", into = "SpaceSpecRepr")]
pub struct SpaceSpec {
    beta: f64,
    trunc: usize,
    variant: NormVariant,
    offset: usize,
    weights: Arc<[f64]>,
}

impl SpaceSpec {
    /// Builds the space with basis `e_0, ..., e_{trunc - 1}`.
    pub fn new(beta: f64, trunc: usize, variant: NormVariant) -> Result<Self> {
        Self::with_offset(beta, trunc, variant, 0)
    }

    /// The unweighted space (`beta = 0`), i.e. `H^2` or plain `l^2`.
    pub fn hardy(trunc: usize) -> Result<Self> {
        Self::new(0.0, trunc, NormVariant::Power)
    }

    pub fn with_offset(beta: f64, trunc: usize, variant: NormVariant, offset: usize) -> Result<Self> {
        if trunc == 0 {
            return Err(Error::Truncation { min: 1, got: 0 });
        }
        if !beta.is_finite() {
            return Err(crate::error::invalid("beta", "must be finite"));
        }
        if variant == NormVariant::Derivative && beta != 1.0 {
            return Err(Error::DerivativeVariantBeta(beta));
        }
        let weights: Vec<f64> = (offset..offset + trunc)
            .map(|n| weight(beta, variant, n))
            .collect();
        Ok(Self {
            beta,
            trunc,
            variant,
            offset,
            weights: weights.into(),
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn trunc(&self) -> usize {
        self.trunc
    }

    pub fn variant(&self) -> NormVariant {
        self.variant
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// True when every weight equals one, so the coefficient coordinates are isometric.
    pub fn is_unweighted(&self) -> bool {
        self.weights.iter().all(|&w| w == 1.0)
    }

    /// Same weight rule, different length. Cross-space work goes through this.
    pub fn retruncate(&self, trunc: usize) -> Result<Self> {
        Self::with_offset(self.beta, trunc, self.variant, self.offset)
    }

    /// Drops the leading basis vector (compression to the complement of `e_offset`).
    pub fn drop_first(&self) -> Result<Self> {
        if self.trunc < 2 {
            return Err(Error::Truncation { min: 2, got: self.trunc });
        }
        Self::with_offset(self.beta, self.trunc - 1, self.variant, self.offset + 1)
    }

    /// `l^2` direct sum of two unweighted spaces.
    pub fn direct_sum(&self, other: &SpaceSpec) -> Result<Self> {
        if !self.is_unweighted() || !other.is_unweighted() {
            return Err(Error::WeightedDirectSum);
        }
        Self::hardy(self.trunc + other.trunc)
    }

    pub fn zero(&self) -> CoeffVec {
        CoeffVec {
            coeffs: vec![Complex64::new(0.0, 0.0); self.trunc],
            space: self.clone(),
        }
    }

    /// The basis vector `e_k` (absolute index, so `k >= offset`).
    pub fn basis(&self, k: usize) -> Result<CoeffVec> {
        if k < self.offset || k >= self.offset + self.trunc {
            return Err(crate::error::invalid(
                "k",
                format!("index {k} outside basis range {}..{}", self.offset, self.offset + self.trunc),
            ));
        }
        let mut v = self.zero();
        v.coeffs[k - self.offset] = Complex64::new(1.0, 0.0);
        Ok(v)
    }
}

impl PartialEq for SpaceSpec {
    fn eq(&self, other: &Self) -> bool {
        self.beta == other.beta
            && self.trunc == other.trunc
            && self.variant == other.variant
            && self.offset == other.offset
    }
}

impl fmt::Debug for SpaceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpaceSpec")
            .field("beta", &self.beta)
            .field("trunc", &self.trunc)
            .field("variant", &self.variant)
            .field("offset", &self.offset)
            .finish()
    }
}

impl fmt::Display for SpaceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "D_{}[{}; N={}", self.beta, self.variant, self.trunc)?;
        if self.offset > 0 {
            write!(f, ", from e_{}", self.offset)?;
        }
        f.write_str("]")
    }
}

impl TryFrom<SpaceSpecRepr> for SpaceSpec {
    type Error = Error;

    fn try_from(r: SpaceSpecRepr) -> Result<Self> {
        SpaceSpec::with_offset(r.beta, r.trunc, r.variant, r.offset)
    }
}

impl From<SpaceSpec> for SpaceSpecRepr {
    fn from(s: SpaceSpec) -> Self {
        SpaceSpecRepr {
            beta: s.beta,
            trunc: s.trunc,
            variant: s.variant,
            offset: s.offset,
        }
    }
}

fn weight(beta: f64, variant: NormVariant, n: usize) -> f64 {
    match variant {
        NormVariant::Power => ((n + 1) as f64).powf(2.0 * beta),
        NormVariant::Derivative => {
            if n == 0 {
                1.0
            } else {
                (n as f64) * (n as f64)
            }
        }
    }
}

/// Builds a space, rejecting `trunc = 0` and a derivative variant with `beta != 1`.
pub fn make_space(beta: f64, trunc: usize, variant: NormVariant) -> Result<SpaceSpec> {
    SpaceSpec::new(beta, trunc, variant)
}

/// Truncated Taylor coefficients of an element of a [`SpaceSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffVec {
    coeffs: Vec<Complex64>,
    space: SpaceSpec,
}

impl CoeffVec {
    pub fn new(coeffs: Vec<Complex64>, space: &SpaceSpec) -> Result<Self> {
        if coeffs.len() != space.trunc() {
            return Err(Error::LengthMismatch {
                expected: space.trunc(),
                got: coeffs.len(),
            });
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(crate::error::invalid("coeffs", "non-finite coefficient"));
        }
        Ok(Self {
            coeffs,
            space: space.clone(),
        })
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn space(&self) -> &SpaceSpec {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs
            .iter()
            .zip(self.space.weights())
            .map(|(a, w)| w * a.norm_sqr())
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Keeps the first `trunc` coefficients, or pads with zeros.
    pub fn retruncate(&self, trunc: usize) -> Result<CoeffVec> {
        let space = self.space.retruncate(trunc)?;
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(trunc, Complex64::new(0.0, 0.0));
        Ok(CoeffVec { coeffs, space })
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }
}

/// `sum w_n a_n conj(b_n)`: linear in `f`, conjugate-linear in `g`.
pub fn inner(f: &CoeffVec, g: &CoeffVec, s: &SpaceSpec) -> Result<Complex64> {
    for v in [f, g] {
        if v.len() != s.trunc() {
            return Err(Error::LengthMismatch {
                expected: s.trunc(),
                got: v.len(),
            });
        }
        if v.space() != s {
            return Err(Error::SpaceMismatch);
        }
    }
    Ok(f.coeffs
        .iter()
        .zip(&g.coeffs)
        .zip(s.weights())
        .map(|((a, b), w)| a * b.conj() * *w)
        .sum())
}

/// Diagonal Gram matrix of the monomial basis.
pub fn gram(s: &SpaceSpec) -> DMatrix<f64> {
    DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(s.weights()))
}
