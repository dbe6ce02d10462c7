//! Nonlinear random feature maps `Φ` and their closed-form atoms.
//!
//! Sign conventions: the complex random Fourier map is
//! `Φ_j(x) = exp(-i·2π·w_jᵀx)`, inner products are `⟨a, b⟩ = Σ a_j conj(b_j)`,
//! and the implied Gaussian kernel is `exp(-2π²σ_w²‖x - x'‖²)`.

use std::f64::consts::{PI, TAU};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};
use crate::rng::{streams, SeedStream};
use crate::transform::{FrequencyOperator, OperatorKind};

/// First-harmonic gain of the dithered square wave: `E_ξ ⟨Φ_q(x), Φ_ξ(x')⟩ = c ⟨Φ(x), Φ(x')⟩`.
pub const QUANTIZED_KERNEL_CONSTANT: f64 = 2.0 / PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    RffComplex,
    RffQuantized,
    Quadratic,
    OuterProduct,
}

impl MapKind {
    pub fn code(self) -> u8 {
        match self {
            MapKind::RffComplex => 0,
            MapKind::RffQuantized => 1,
            MapKind::Quadratic => 2,
            MapKind::OuterProduct => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(MapKind::RffComplex),
            1 => Some(MapKind::RffQuantized),
            2 => Some(MapKind::Quadratic),
            3 => Some(MapKind::OuterProduct),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MapKind::RffComplex => "rff_complex",
            MapKind::RffQuantized => "rff_quantized",
            MapKind::Quadratic => "quadratic",
            MapKind::OuterProduct => "outer_product",
        }
    }

    /// Whether features are complex-valued.
    pub fn is_complex(self) -> bool {
        matches!(self, MapKind::RffComplex)
    }
}

impl fmt::Display for MapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for MapKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rff_complex" | "rff" => Ok(MapKind::RffComplex),
            "rff_quantized" | "quantized" => Ok(MapKind::RffQuantized),
            "quadratic" => Ok(MapKind::Quadratic),
            "outer_product" => Ok(MapKind::OuterProduct),
            other => Err(invalid(format!("unknown map kind '{other}'"))),
        }
    }
}

/// Serializable definition of a feature map.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapParams {
    pub kind: MapKind,
    pub m: u32,
    pub d: u32,
    pub d_pad: u32,
    pub sigma_w: f64,
    /// `None` only for [`MapKind::OuterProduct`].
    pub operator: Option<OperatorKind>,
    pub operator_seed: u64,
    pub dither_seed: u64,
}

impl MapParams {
    pub fn new(
        kind: MapKind,
        m: usize,
        d: usize,
        sigma_w: f64,
        operator: OperatorKind,
        operator_seed: u64,
        dither_seed: u64,
    ) -> Self {
        if kind == MapKind::OuterProduct {
            return Self::outer_product(d);
        }
        let d_pad = match operator {
            OperatorKind::Dense => d,
            OperatorKind::Structured => d.next_power_of_two(),
        };
        Self {
            kind,
            m: m as u32,
            d: d as u32,
            d_pad: d_pad as u32,
            sigma_w,
            operator: Some(operator),
            operator_seed,
            dither_seed: if kind == MapKind::RffQuantized { dither_seed } else { 0 },
        }
    }

    pub fn outer_product(d: usize) -> Self {
        Self {
            kind: MapKind::OuterProduct,
            m: (d * d) as u32,
            d: d as u32,
            d_pad: d as u32,
            sigma_w: 0.0,
            operator: None,
            operator_seed: 0,
            dither_seed: 0,
        }
    }

    /// Checks that the parameters describe a constructible map and that the
    /// derived fields (`d_pad`, `m` for outer products) agree with the rest.
    pub fn validate(&self) -> Result<()> {
        let (m, d, d_pad) = (self.m as usize, self.d as usize, self.d_pad as usize);
        if d == 0 || m == 0 {
            return Err(invalid("map dimensions must be positive"));
        }
        match (self.kind, self.operator) {
            (MapKind::OuterProduct, None) => {
                if m != d * d || d_pad != d {
                    return Err(invalid("outer_product map requires m = d² and d_pad = d"));
                }
                if self.sigma_w != 0.0 || self.operator_seed != 0 || self.dither_seed != 0 {
                    return Err(invalid("outer_product map carries no operator parameters"));
                }
            }
            (MapKind::OuterProduct, Some(_)) => {
                return Err(invalid("outer_product map has no operator"));
            }
            (_, None) => return Err(invalid(format!("{} map requires an operator", self.kind))),
            (kind, Some(op)) => {
                let expected_pad = match op {
                    OperatorKind::Dense => d,
                    OperatorKind::Structured => d.next_power_of_two(),
                };
                if d_pad != expected_pad {
                    return Err(invalid(format!(
                        "d_pad {d_pad} inconsistent with d={d} for {op:?} operator"
                    )));
                }
                if !(self.sigma_w > 0.0 && self.sigma_w.is_finite()) {
                    return Err(invalid("sigma_w must be positive and finite"));
                }
                if kind != MapKind::RffQuantized && self.dither_seed != 0 {
                    return Err(invalid("dither seed is only meaningful for rff_quantized"));
                }
            }
        }
        Ok(())
    }

    fn canonical_bytes(&self) -> Vec<u8> {
        let mut b = Vec::with_capacity(64);
        b.extend_from_slice(b"CSKL-map-v1");
        b.push(self.kind.code());
        b.extend_from_slice(&self.m.to_le_bytes());
        b.extend_from_slice(&self.d.to_le_bytes());
        b.extend_from_slice(&self.d_pad.to_le_bytes());
        b.extend_from_slice(&self.sigma_w.to_bits().to_le_bytes());
        b.push(self.operator.map_or(0xFF, OperatorKind::code));
        b.extend_from_slice(&self.operator_seed.to_le_bytes());
        b.extend_from_slice(&self.dither_seed.to_le_bytes());
        b
    }

    pub fn fingerprint(&self) -> Fingerprint {
        let digest = Sha256::digest(self.canonical_bytes());
        let mut out = [0u8; 32];
        out.copy_from_slice(&digest);
        Fingerprint(out)
    }
}

/// SHA-256 of the canonical map parameters.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fingerprint(pub [u8; 32]);

impl Fingerprint {
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        let bytes = hex::decode(s).map_err(|e| Error::Format(format!("fingerprint: {e}")))?;
        let arr: [u8; 32] = bytes
            .try_into()
            .map_err(|_| Error::Format("fingerprint must be 32 bytes".into()))?;
        Ok(Fingerprint(arr))
    }
}

impl fmt::Debug for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fingerprint({})", &self.to_hex()[..16])
    }
}

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// A fully constructed feature map.
#[derive(Clone, Debug)]
pub struct FeatureMapSpec {
    params: MapParams,
    operator: Option<FrequencyOperator>,
    dither: Vec<f64>,
    fingerprint: Fingerprint,
}

impl FeatureMapSpec {
    pub fn from_params(params: MapParams) -> Result<Self> {
        params.validate()?;
        let (m, d) = (params.m as usize, params.d as usize);
        let operator = match params.operator {
            Some(kind) => Some(FrequencyOperator::build(kind, m, d, params.sigma_w, params.operator_seed)?),
            None => None,
        };
        let dither = if params.kind == MapKind::RffQuantized {
            let mut rng = SeedStream::new(params.dither_seed, streams::DITHER);
            (0..m).map(|_| rng.uniform()).collect()
        } else {
            Vec::new()
        };
        Ok(Self {
            fingerprint: params.fingerprint(),
            params,
            operator,
            dither,
        })
    }

    pub fn new_rff_complex(m: usize, d: usize, sigma_w: f64, operator: OperatorKind, seed: u64) -> Result<Self> {
        Self::from_params(MapParams::new(MapKind::RffComplex, m, d, sigma_w, operator, seed, 0))
    }

    pub fn new_rff_quantized(
        m: usize,
        d: usize,
        sigma_w: f64,
        operator: OperatorKind,
        seed: u64,
        dither_seed: u64,
    ) -> Result<Self> {
        Self::from_params(MapParams::new(
            MapKind::RffQuantized,
            m,
            d,
            sigma_w,
            operator,
            seed,
            dither_seed,
        ))
    }

    pub fn new_quadratic(m: usize, d: usize, sigma_w: f64, operator: OperatorKind, seed: u64) -> Result<Self> {
        Self::from_params(MapParams::new(MapKind::Quadratic, m, d, sigma_w, operator, seed, 0))
    }

    pub fn new_outer_product(d: usize) -> Result<Self> {
        Self::from_params(MapParams::outer_product(d))
    }

    /// Builds a map around an explicit operator (tests, experiments). The
    /// fingerprint covers the operator's nominal parameters only.
    pub fn with_operator(kind: MapKind, operator: FrequencyOperator, dither: Option<Vec<f64>>) -> Result<Self> {
        if kind == MapKind::OuterProduct {
            return Err(invalid("outer_product maps take no operator"));
        }
        let params = MapParams::new(
            kind,
            operator.m(),
            operator.d(),
            operator.sigma_w(),
            operator.kind(),
            operator.seed(),
            0,
        );
        let dither = match (kind, dither) {
            (MapKind::RffQuantized, Some(xi)) => {
                if xi.len() != operator.m() {
                    return Err(Error::DimensionMismatch {
                        expected: operator.m(),
                        got: xi.len(),
                    });
                }
                xi
            }
            (MapKind::RffQuantized, None) => vec![0.0; operator.m()],
            _ => Vec::new(),
        };
        let mut bytes = params.canonical_bytes();
        for v in operator.rows() {
            bytes.extend_from_slice(&v.to_bits().to_le_bytes());
        }
        for v in &dither {
            bytes.extend_from_slice(&v.to_bits().to_le_bytes());
        }
        let digest = Sha256::digest(&bytes);
        let mut fp = [0u8; 32];
        fp.copy_from_slice(&digest);
        Ok(Self {
            params,
            operator: Some(operator),
            dither,
            fingerprint: Fingerprint(fp),
        })
    }

    pub fn params(&self) -> &MapParams {
        &self.params
    }

    pub fn kind(&self) -> MapKind {
        self.params.kind
    }

    pub fn m(&self) -> usize {
        self.params.m as usize
    }

    pub fn d(&self) -> usize {
        self.params.d as usize
    }

    pub fn sigma_w(&self) -> f64 {
        self.params.sigma_w
    }

    pub fn operator(&self) -> Option<&FrequencyOperator> {
        self.operator.as_ref()
    }

    pub fn dither(&self) -> &[f64] {
        &self.dither
    }

    pub fn fingerprint(&self) -> Fingerprint {
        self.fingerprint
    }

    fn require(&self, kind: MapKind, operation: &'static str) -> Result<&FrequencyOperator> {
        if self.params.kind != kind {
            return Err(Error::UnsupportedKind {
                kind: self.params.kind.name(),
                operation,
            });
        }
        self.operator.as_ref().ok_or(Error::UnsupportedKind {
            kind: self.params.kind.name(),
            operation,
        })
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.d() {
            return Err(Error::DimensionMismatch {
                expected: self.d(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Complex random Fourier features `exp(-i2π Wx)`.
    pub fn rff(&self, x: &[f64]) -> Result<Vec<Complex64>> {
        let op = self.require(MapKind::RffComplex, "rff")?;
        let proj = op.apply(x)?;
        Ok(proj.iter().map(|&u| cis(-TAU * u)).collect())
    }

    /// Dithered one-bit features `sign(cos(2π(Wx + ξ)))`, with `sign(0) = +1`.
    pub fn rff_quantized(&self, x: &[f64]) -> Result<Vec<f64>> {
        let op = self.require(MapKind::RffQuantized, "rff_quantized")?;
        let proj = op.apply(x)?;
        Ok(proj
            .iter()
            .zip(&self.dither)
            .map(|(&u, &xi)| square_wave(u + xi))
            .collect())
    }

    /// Dithered complex exponential `exp(-i2π(Wx + ξ))` sharing the quantized
    /// map's dither; the partner of [`Self::rff_quantized`] in the kernel identity.
    pub fn rff_dithered(&self, x: &[f64]) -> Result<Vec<Complex64>> {
        let op = self.require(MapKind::RffQuantized, "rff_dithered")?;
        let proj = op.apply(x)?;
        Ok(proj
            .iter()
            .zip(&self.dither)
            .map(|(&u, &xi)| cis(-TAU * (u + xi)))
            .collect())
    }

    /// Squared projections `(w_jᵀx)²`.
    pub fn quadratic(&self, x: &[f64]) -> Result<Vec<f64>> {
        let op = self.require(MapKind::Quadratic, "quadratic")?;
        Ok(op.apply(x)?.into_iter().map(|u| u * u).collect())
    }

    /// Evaluates whichever map this is into `out` (length `m`).
    pub fn features_into(&self, x: &[f64], proj: &mut Vec<f64>, out: &mut [Complex64]) -> Result<()> {
        self.check_dim(x)?;
        if out.len() != self.m() {
            return Err(Error::DimensionMismatch {
                expected: self.m(),
                got: out.len(),
            });
        }
        if self.params.kind == MapKind::OuterProduct {
            let d = self.d();
            for (c, xc) in x.iter().enumerate() {
                for (r, xr) in x.iter().enumerate() {
                    out[c * d + r] = Complex64::new(xr * xc, 0.0);
                }
            }
            return Ok(());
        }
        let op = self.operator.as_ref().expect("validated map has an operator");
        proj.resize(self.m(), 0.0);
        op.apply_into(x, proj)?;
        match self.params.kind {
            MapKind::RffComplex => {
                for (o, &u) in out.iter_mut().zip(proj.iter()) {
                    *o = cis(-TAU * u);
                }
            }
            MapKind::RffQuantized => {
                for ((o, &u), &xi) in out.iter_mut().zip(proj.iter()).zip(&self.dither) {
                    *o = Complex64::new(square_wave(u + xi), 0.0);
                }
            }
            MapKind::Quadratic => {
                for (o, &u) in out.iter_mut().zip(proj.iter()) {
                    *o = Complex64::new(u * u, 0.0);
                }
            }
            MapKind::OuterProduct => unreachable!(),
        }
        Ok(())
    }

    pub fn features(&self, x: &[f64]) -> Result<Vec<Complex64>> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.m()];
        let mut proj = Vec::new();
        self.features_into(x, &mut proj, &mut out)?;
        Ok(out)
    }

    /// Noiseless sketch of the point mass at `c`: `Φ(c)`.
    pub fn dirac_atom(&self, c: &[f64]) -> Result<Vec<Complex64>> {
        match self.params.kind {
            MapKind::RffComplex | MapKind::Quadratic => self.features(c),
            kind => Err(Error::UnsupportedKind {
                kind: kind.name(),
                operation: "dirac_atom",
            }),
        }
    }

    /// Characteristic function of `N(μ, diag(σ²))` sampled at each frequency.
    pub fn gaussian_atom(&self, mu: &[f64], sigma2: &[f64]) -> Result<Vec<Complex64>> {
        let op = self.require(MapKind::RffComplex, "gaussian_atom")?;
        self.check_dim(mu)?;
        self.check_dim(sigma2)?;
        if let Some(v) = sigma2.iter().find(|v| !(**v >= 0.0)) {
            return Err(invalid(format!("variance must be nonnegative, got {v}")));
        }
        let proj = op.apply(mu)?;
        Ok(proj
            .iter()
            .enumerate()
            .map(|(j, &u)| {
                let spread: f64 = op.row(j).iter().zip(sigma2).map(|(w, s)| w * w * s).sum();
                cis(-TAU * u) * (-2.0 * PI * PI * spread).exp()
            })
            .collect())
    }

    /// Jacobian `∂Φ_j/∂c_t` of the Dirac atom, row-major `m × d`.
    pub fn dirac_jacobian(&self, c: &[f64]) -> Result<Vec<Complex64>> {
        let op = self.require(MapKind::RffComplex, "atom_gradient")?;
        let atom = self.rff(c)?;
        let d = self.d();
        let mut jac = Vec::with_capacity(self.m() * d);
        for (j, a) in atom.iter().enumerate() {
            let factor = Complex64::new(0.0, -TAU) * a;
            jac.extend(op.row(j).iter().map(|w| factor * w));
        }
        Ok(jac)
    }

    /// Jacobian of the Gaussian atom with respect to `(μ, σ²)`, row-major
    /// `m × 2d` with the `μ` block first.
    pub fn gaussian_jacobian(&self, mu: &[f64], sigma2: &[f64]) -> Result<Vec<Complex64>> {
        let op = self.require(MapKind::RffComplex, "atom_gradient")?;
        let atom = self.gaussian_atom(mu, sigma2)?;
        let d = self.d();
        let mut jac = Vec::with_capacity(self.m() * 2 * d);
        for (j, a) in atom.iter().enumerate() {
            let row = op.row(j);
            let dmu = Complex64::new(0.0, -TAU) * a;
            jac.extend(row.iter().map(|w| dmu * w));
            jac.extend(row.iter().map(|w| a * (-2.0 * PI * PI * w * w)));
        }
        Ok(jac)
    }
}

/// Limit of `(1/m) Re⟨Φ(x), Φ(x')⟩` for iid `N(0, σ_w² I)` frequencies.
pub fn expected_kernel(sigma_w: f64, x: &[f64], y: &[f64]) -> f64 {
    let dist2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    (-2.0 * PI * PI * sigma_w * sigma_w * dist2).exp()
}

/// Column-major `vec(x xᵀ)`.
pub fn outer_product(x: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len() * x.len());
    for xc in x {
        out.extend(x.iter().map(|xr| xr * xc));
    }
    out
}

/// `sign(cos(2πt))` with ties resolved to `+1`.
pub fn square_wave(t: f64) -> f64 {
    if (TAU * t).cos() >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

#[inline]
pub(crate) fn cis(theta: f64) -> Complex64 {
    let (s, c) = theta.sin_cos();
    Complex64::new(c, s)
}

/// `(1/m) Re⟨a, b⟩`.
pub fn normalized_inner(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x * y.conj()).re).sum::<f64>() / a.len() as f64
}
