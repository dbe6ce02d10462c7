//! The random linear stage `x ↦ Wx` of every random-feature map.
//!
//! Two constructions are supported:
//!
//! * **dense**: `m × d` iid `N(0, σ_w²)` coefficients, drawn row-major from
//!   [`streams::DENSE_OPERATOR`];
//! * **structured**: `b = ⌈m / d_pad⌉` stacked blocks
//!   `σ_w · D⁰ · d_pad^(-3/2) · H D¹ H D² H D³`, with `H` the unnormalized
//!   Walsh–Hadamard matrix, `D¹..D³` Rademacher diagonals and `D⁰` a
//!   χ(d_pad) diagonal. Inputs are zero-padded to `d_pad`, the next power of
//!   two, and the stacked output is truncated to `m`. Per block the draw order
//!   is `D⁰, D¹, D², D³` from [`streams::STRUCTURED_OPERATOR`].
//!
//! Coefficients are never stored on disk; `(kind, m, d, σ_w, seed)` is enough
//! to regenerate them bit for bit.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::{streams, SeedStream};

/// In-place unnormalized fast Walsh–Hadamard transform.
pub fn fwht_in_place(v: &mut [f64]) -> Result<()> {
    let n = v.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(invalid(format!("fwht length {n} is not a power of two")));
    }
    let mut h = 1;
    while h < n {
        for block in v.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
    Ok(())
}

/// Returns `H·v` for the unnormalized Walsh–Hadamard matrix `H`.
pub fn fwht(v: &[f64]) -> Result<Vec<f64>> {
    let mut out = v.to_vec();
    fwht_in_place(&mut out)?;
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    Dense,
    Structured,
}

impl OperatorKind {
    pub fn code(self) -> u8 {
        match self {
            OperatorKind::Dense => 0,
            OperatorKind::Structured => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(OperatorKind::Dense),
            1 => Some(OperatorKind::Structured),
            _ => None,
        }
    }
}

impl std::fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OperatorKind::Dense => "dense",
            OperatorKind::Structured => "structured",
        })
    }
}

impl std::str::FromStr for OperatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense" => Ok(OperatorKind::Dense),
            "structured" => Ok(OperatorKind::Structured),
            other => Err(invalid(format!("unknown operator kind '{other}'"))),
        }
    }
}

/// One `d_pad × d_pad` structured block.
#[derive(Clone, Debug, PartialEq)]
pub struct HadamardBlock {
    /// χ(d_pad) diagonal `D⁰`.
    pub chi: Vec<f64>,
    /// Rademacher diagonals `D¹, D², D³`.
    pub signs: [Vec<f64>; 3],
}

#[derive(Clone, Debug)]
enum Repr {
    Dense(Vec<f64>),
    Structured(Vec<HadamardBlock>),
}

/// Seed-reproducible `m × d` frequency matrix.
#[derive(Debug)]
pub struct FrequencyOperator {
    kind: OperatorKind,
    m: usize,
    d: usize,
    d_pad: usize,
    sigma_w: f64,
    seed: u64,
    repr: Repr,
    materialized: OnceLock<Vec<f64>>,
}

impl Clone for FrequencyOperator {
    fn clone(&self) -> Self {
        let materialized = OnceLock::new();
        if let Some(rows) = self.materialized.get() {
            let _ = materialized.set(rows.clone());
        }
        Self {
            kind: self.kind,
            m: self.m,
            d: self.d,
            d_pad: self.d_pad,
            sigma_w: self.sigma_w,
            seed: self.seed,
            repr: self.repr.clone(),
            materialized,
        }
    }
}

fn check_params(m: usize, d: usize, sigma_w: f64) -> Result<()> {
    if m == 0 || d == 0 {
        return Err(invalid(format!("operator dimensions must be positive (m={m}, d={d})")));
    }
    if !(sigma_w > 0.0 && sigma_w.is_finite()) {
        return Err(invalid(format!("sigma_w must be positive and finite, got {sigma_w}")));
    }
    Ok(())
}

impl FrequencyOperator {
    pub fn build(kind: OperatorKind, m: usize, d: usize, sigma_w: f64, seed: u64) -> Result<Self> {
        match kind {
            OperatorKind::Dense => Self::build_dense(m, d, sigma_w, seed),
            OperatorKind::Structured => Self::build_structured(m, d, sigma_w, seed),
        }
    }

    /// Dense operator with iid `N(0, σ_w²)` coefficients, row-major.
    pub fn build_dense(m: usize, d: usize, sigma_w: f64, seed: u64) -> Result<Self> {
        check_params(m, d, sigma_w)?;
        let mut rng = SeedStream::new(seed, streams::DENSE_OPERATOR);
        let coeffs = (0..m * d).map(|_| sigma_w * rng.gaussian()).collect();
        Ok(Self {
            kind: OperatorKind::Dense,
            m,
            d,
            d_pad: d,
            sigma_w,
            seed,
            repr: Repr::Dense(coeffs),
            materialized: OnceLock::new(),
        })
    }

    /// Wraps an explicit row-major matrix. Such operators cannot be
    /// regenerated from a seed and are meant for tests and experiments.
    pub fn from_dense_rows(m: usize, d: usize, coeffs: Vec<f64>) -> Result<Self> {
        if m == 0 || d == 0 {
            return Err(invalid("operator dimensions must be positive"));
        }
        if coeffs.len() != m * d {
            return Err(Error::DimensionMismatch {
                expected: m * d,
                got: coeffs.len(),
            });
        }
        Ok(Self {
            kind: OperatorKind::Dense,
            m,
            d,
            d_pad: d,
            sigma_w: 1.0,
            seed: 0,
            repr: Repr::Dense(coeffs),
            materialized: OnceLock::new(),
        })
    }

    /// Structured operator built from fast Hadamard blocks.
    ///
    /// Row directions come from a finite set of signed Hadamard products,
    /// so the implied kernel is close to isotropic only once `d_pad` is
    /// around 16 or more; in very low dimension (every row of a 2-d block
    /// has entries `±1/√2`) prefer the dense operator.
    pub fn build_structured(m: usize, d: usize, sigma_w: f64, seed: u64) -> Result<Self> {
        check_params(m, d, sigma_w)?;
        let d_pad = d.next_power_of_two();
        let n_blocks = m.div_ceil(d_pad);
        let mut rng = SeedStream::new(seed, streams::STRUCTURED_OPERATOR);
        let blocks = (0..n_blocks)
            .map(|_| {
                let chi = (0..d_pad).map(|_| rng.chi(d_pad)).collect();
                let mut signs = || (0..d_pad).map(|_| rng.rademacher()).collect::<Vec<_>>();
                let s1 = signs();
                let s2 = signs();
                let s3 = signs();
                HadamardBlock {
                    chi,
                    signs: [s1, s2, s3],
                }
            })
            .collect();
        Ok(Self {
            kind: OperatorKind::Structured,
            m,
            d,
            d_pad,
            sigma_w,
            seed,
            repr: Repr::Structured(blocks),
            materialized: OnceLock::new(),
        })
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn d_pad(&self) -> usize {
        self.d_pad
    }

    pub fn sigma_w(&self) -> f64 {
        self.sigma_w
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Dense coefficients, if this is a dense operator.
    pub fn dense_coefficients(&self) -> Option<&[f64]> {
        match &self.repr {
            Repr::Dense(c) => Some(c),
            Repr::Structured(_) => None,
        }
    }

    /// Structured blocks, if this is a structured operator.
    pub fn blocks(&self) -> Option<&[HadamardBlock]> {
        match &self.repr {
            Repr::Dense(_) => None,
            Repr::Structured(b) => Some(b),
        }
    }

    /// Computes `Wx`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.m];
        self.apply_into(x, &mut out)?;
        Ok(out)
    }

    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: x.len(),
            });
        }
        if out.len() != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                got: out.len(),
            });
        }
        match &self.repr {
            Repr::Dense(coeffs) => {
                for (o, row) in out.iter_mut().zip(coeffs.chunks_exact(self.d)) {
                    *o = dot(row, x);
                }
            }
            Repr::Structured(blocks) => {
                let scale = self.sigma_w * (self.d_pad as f64).powf(-1.5);
                let mut buf = vec![0.0; self.d_pad];
                for (b, block) in blocks.iter().enumerate() {
                    buf[..self.d].copy_from_slice(x);
                    buf[self.d..].iter_mut().for_each(|v| *v = 0.0);
                    for signs in block.signs.iter().rev() {
                        for (v, s) in buf.iter_mut().zip(signs) {
                            *v *= s;
                        }
                        fwht_in_place(&mut buf)?;
                    }
                    let start = b * self.d_pad;
                    let end = (start + self.d_pad).min(self.m);
                    for (i, o) in out[start..end].iter_mut().enumerate() {
                        *o = scale * block.chi[i] * buf[i];
                    }
                }
            }
        }
        Ok(())
    }

    /// Computes `Wᵀy` for `y` of length `m`.
    pub fn apply_transpose(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                got: y.len(),
            });
        }
        let mut out = vec![0.0; self.d];
        match &self.repr {
            Repr::Dense(coeffs) => {
                for (yj, row) in y.iter().zip(coeffs.chunks_exact(self.d)) {
                    for (o, w) in out.iter_mut().zip(row) {
                        *o += yj * w;
                    }
                }
            }
            Repr::Structured(blocks) => {
                let scale = self.sigma_w * (self.d_pad as f64).powf(-1.5);
                let mut buf = vec![0.0; self.d_pad];
                for (b, block) in blocks.iter().enumerate() {
                    let start = b * self.d_pad;
                    let end = (start + self.d_pad).min(self.m);
                    buf.iter_mut().for_each(|v| *v = 0.0);
                    for (i, yi) in y[start..end].iter().enumerate() {
                        buf[i] = scale * block.chi[i] * yi;
                    }
                    for signs in block.signs.iter() {
                        fwht_in_place(&mut buf)?;
                        for (v, s) in buf.iter_mut().zip(signs) {
                            *v *= s;
                        }
                    }
                    for (o, v) in out.iter_mut().zip(&buf[..self.d]) {
                        *o += v;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Row-major `m × d` coefficients. Structured operators are materialized
    /// once by applying them to the canonical basis and cached.
    pub fn rows(&self) -> &[f64] {
        match &self.repr {
            Repr::Dense(c) => c,
            Repr::Structured(_) => self.materialized.get_or_init(|| {
                let mut rows = vec![0.0; self.m * self.d];
                let mut e = vec![0.0; self.d];
                let mut col = vec![0.0; self.m];
                for i in 0..self.d {
                    e[i] = 1.0;
                    self.apply_into(&e, &mut col).expect("basis vector has length d");
                    e[i] = 0.0;
                    for (j, v) in col.iter().enumerate() {
                        rows[j * self.d + i] = *v;
                    }
                }
                rows
            }),
        }
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.rows()[j * self.d..(j + 1) * self.d]
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
