//! Empirical sketches: running means of feature vectors.
//!
//! A [`Sketch`] stores `z = (1/n) Σ Φ(x_i)` together with `n`, the map
//! parameters and an optional privacy record. Sketches over the same map are
//! merged by count-weighted averaging, and single samples can be inserted or
//! removed exactly. Once a privacy mechanism has been applied the sketch is
//! sealed and all of these operations fail.

mod codec;

pub use codec::{deserialize, deserialize_json, serialize, serialize_json, HEADER_LEN, MAGIC, VERSION};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::feature_map::{FeatureMapSpec, Fingerprint, MapKind, MapParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    Laplace,
    Gaussian,
}

impl Mechanism {
    pub fn code(self) -> u8 {
        match self {
            Mechanism::Laplace => 1,
            Mechanism::Gaussian => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrivacyRecord {
    pub mechanism: Mechanism,
    pub epsilon: f64,
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sketch {
    params: MapParams,
    fingerprint: Fingerprint,
    values: Vec<Complex64>,
    n: u64,
    privacy: Option<PrivacyRecord>,
}

impl Sketch {
    pub fn empty(spec: &FeatureMapSpec) -> Self {
        Self {
            params: *spec.params(),
            fingerprint: spec.fingerprint(),
            values: vec![Complex64::new(0.0, 0.0); spec.m()],
            n: 0,
            privacy: None,
        }
    }

    /// Assembles a sketch from raw parts, checking the structural invariants.
    pub fn from_parts(
        params: MapParams,
        values: Vec<Complex64>,
        n: u64,
        privacy: Option<PrivacyRecord>,
    ) -> Result<Self> {
        params.validate()?;
        if values.len() != params.m as usize {
            return Err(Error::DimensionMismatch {
                expected: params.m as usize,
                got: values.len(),
            });
        }
        if n == 0 && privacy.is_none() && values.iter().any(|v| v.re != 0.0 || v.im != 0.0) {
            return Err(Error::Format("empty sketch with nonzero values".into()));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Format("non-finite sketch value".into()));
        }
        if !params.kind.is_complex() && values.iter().any(|v| v.im != 0.0) {
            return Err(Error::Format(format!("{} sketch has imaginary parts", params.kind)));
        }
        if let Some(p) = privacy {
            if !(p.epsilon > 0.0 && p.epsilon.is_finite()) || !(p.delta >= 0.0 && p.delta < 1.0) {
                return Err(Error::Format("invalid privacy record".into()));
            }
        }
        Ok(Self {
            fingerprint: params.fingerprint(),
            params,
            values,
            n,
            privacy,
        })
    }

    pub(crate) fn with_privacy(&self, values: Vec<Complex64>, record: PrivacyRecord) -> Self {
        Self {
            params: self.params,
            fingerprint: self.fingerprint,
            values,
            n: self.n,
            privacy: Some(record),
        }
    }

    pub fn params(&self) -> &MapParams {
        &self.params
    }

    pub fn kind(&self) -> MapKind {
        self.params.kind
    }

    pub fn m(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Real parts, for real-valued maps.
    pub fn real_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn fingerprint(&self) -> Fingerprint {
        self.fingerprint
    }

    pub fn privacy(&self) -> Option<&PrivacyRecord> {
        self.privacy.as_ref()
    }

    pub fn is_sealed(&self) -> bool {
        self.privacy.is_some()
    }

    fn ensure_open(&self) -> Result<()> {
        if self.is_sealed() {
            Err(Error::SealedSketch)
        } else {
            Ok(())
        }
    }

    fn ensure_spec(&self, spec: &FeatureMapSpec) -> Result<()> {
        if spec.fingerprint() != self.fingerprint {
            Err(Error::IncompatibleSketch)
        } else {
            Ok(())
        }
    }

    /// Count-weighted average of two sketches over the same map.
    pub fn merge(&self, other: &Sketch) -> Result<Sketch> {
        if self.fingerprint != other.fingerprint {
            return Err(Error::IncompatibleSketch);
        }
        self.ensure_open()?;
        other.ensure_open()?;
        let n = self.n.checked_add(other.n).ok_or(Error::CountOverflow)?;
        if other.n == 0 {
            return Ok(self.clone());
        }
        if self.n == 0 {
            return Ok(other.clone());
        }
        let w = other.n as f64 / n as f64;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + (b - a) * w)
            .collect();
        Ok(Sketch {
            values,
            n,
            ..self.clone()
        })
    }

    /// Sketch with `x` inserted.
    pub fn update(&self, spec: &FeatureMapSpec, x: &[f64]) -> Result<Sketch> {
        self.ensure_open()?;
        self.ensure_spec(spec)?;
        let phi = spec.features(x)?;
        let n = self.n.checked_add(1).ok_or(Error::CountOverflow)?;
        let inv = 1.0 / n as f64;
        let values = self
            .values
            .iter()
            .zip(&phi)
            .map(|(v, f)| v + (f - v) * inv)
            .collect();
        Ok(Sketch {
            values,
            n,
            ..self.clone()
        })
    }

    /// Sketch with one copy of `x` removed.
    pub fn delete(&self, spec: &FeatureMapSpec, x: &[f64]) -> Result<Sketch> {
        self.ensure_open()?;
        self.ensure_spec(spec)?;
        let phi = spec.features(x)?;
        match self.n {
            0 => Err(Error::EmptySketch),
            1 => Ok(Sketch {
                values: vec![Complex64::new(0.0, 0.0); self.values.len()],
                n: 0,
                ..self.clone()
            }),
            n => {
                let inv = 1.0 / (n - 1) as f64;
                let values = self
                    .values
                    .iter()
                    .zip(&phi)
                    .map(|(v, f)| v + (v - f) * inv)
                    .collect();
                Ok(Sketch {
                    values,
                    n: n - 1,
                    ..self.clone()
                })
            }
        }
    }
}

/// Single-writer accumulator maintaining a compensated running mean.
#[derive(Clone, Debug)]
pub struct SketchBuilder<'a> {
    spec: &'a FeatureMapSpec,
    mean: Vec<Complex64>,
    comp: Vec<Complex64>,
    n: u64,
    phi: Vec<Complex64>,
    proj: Vec<f64>,
}

#[inline]
fn neumaier(sum: &mut f64, comp: &mut f64, x: f64) {
    let t = *sum + x;
    if sum.abs() >= x.abs() {
        *comp += (*sum - t) + x;
    } else {
        *comp += (x - t) + *sum;
    }
    *sum = t;
}

impl<'a> SketchBuilder<'a> {
    pub fn new(spec: &'a FeatureMapSpec) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        Self {
            spec,
            mean: vec![zero; spec.m()],
            comp: vec![zero; spec.m()],
            n: 0,
            phi: vec![zero; spec.m()],
            proj: Vec::with_capacity(spec.m()),
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// Adds one sample; a wrong row length reports the zero-based row index.
    pub fn push(&mut self, x: &[f64]) -> Result<()> {
        if x.len() != self.spec.d() {
            return Err(Error::RowDimension {
                row: self.n,
                expected: self.spec.d(),
                got: x.len(),
            });
        }
        let n = self.n.checked_add(1).ok_or(Error::CountOverflow)?;
        self.spec.features_into(x, &mut self.proj, &mut self.phi)?;
        let inv = 1.0 / n as f64;
        for ((m, c), f) in self.mean.iter_mut().zip(self.comp.iter_mut()).zip(&self.phi) {
            let cur = *m + *c;
            let delta = (f - cur) * inv;
            neumaier(&mut m.re, &mut c.re, delta.re);
            neumaier(&mut m.im, &mut c.im, delta.im);
        }
        self.n = n;
        Ok(())
    }

    pub fn finish(self) -> Sketch {
        let values = self.mean.iter().zip(&self.comp).map(|(m, c)| m + c).collect();
        Sketch {
            params: *self.spec.params(),
            fingerprint: self.spec.fingerprint(),
            values,
            n: self.n,
            privacy: None,
        }
    }
}

/// Sketches a stream of rows in a single pass with `O(m)` memory.
pub fn sketch_dataset<I, R>(rows: I, spec: &FeatureMapSpec) -> Result<Sketch>
where
    I: IntoIterator<Item = R>,
    R: AsRef<[f64]>,
{
    let mut builder = SketchBuilder::new(spec);
    for row in rows {
        builder.push(row.as_ref())?;
    }
    Ok(builder.finish())
}

/// Block-parallel sketching: independent chunk sketches merged in order.
pub fn sketch_parallel(data: &DataMatrix, spec: &FeatureMapSpec, chunk_rows: usize) -> Result<Sketch> {
    if data.d() != spec.d() {
        return Err(Error::DimensionMismatch {
            expected: spec.d(),
            got: data.d(),
        });
    }
    let chunk_rows = chunk_rows.max(1);
    let parts: Vec<Sketch> = data
        .as_slice()
        .par_chunks(chunk_rows * data.d().max(1))
        .map(|chunk| sketch_dataset(chunk.chunks_exact(data.d()), spec))
        .collect::<Result<_>>()?;
    parts.iter().try_fold(Sketch::empty(spec), |acc, s| acc.merge(s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedStream;
    use crate::transform::OperatorKind;

    fn spec() -> FeatureMapSpec {
        FeatureMapSpec::new_rff_complex(32, 3, 0.8, OperatorKind::Dense, 11).unwrap()
    }

    fn random_rows(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = SeedStream::new(seed, 0);
        (0..n).map(|_| (0..d).map(|_| rng.gaussian() * 2.0).collect()).collect()
    }

    fn rel_err(a: &[Complex64], b: &[Complex64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
        let den: f64 = b.iter().map(|y| y.norm_sqr()).sum::<f64>().sqrt().max(1e-300);
        num / den
    }

    #[test]
    fn constant_rows_give_feature_vector() {
        let spec = spec();
        let x = [0.1, -0.4, 2.0];
        let s = sketch_dataset(std::iter::repeat_n(x.to_vec(), 50), &spec).unwrap();
        assert_eq!(s.n(), 50);
        assert!(rel_err(s.values(), &spec.features(&x).unwrap()) < 1e-14);
    }

    #[test]
    fn empty_stream() {
        let spec = spec();
        let s = sketch_dataset(Vec::<Vec<f64>>::new(), &spec).unwrap();
        assert_eq!(s.n(), 0);
        assert!(s.values().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn matches_two_pass_mean() {
        let spec = spec();
        let rows = random_rows(1000, 3, 1);
        let s = sketch_dataset(&rows, &spec).unwrap();
        let mut sum = vec![Complex64::new(0.0, 0.0); spec.m()];
        for r in &rows {
            for (a, f) in sum.iter_mut().zip(spec.features(r).unwrap()) {
                *a += f;
            }
        }
        let mean: Vec<Complex64> = sum.iter().map(|v| v / 1000.0).collect();
        assert!(rel_err(s.values(), &mean) < 1e-12);
    }

    #[test]
    fn bad_row_reports_index() {
        let spec = spec();
        let mut rows = random_rows(5, 3, 2);
        rows[3].pop();
        match sketch_dataset(&rows, &spec) {
            Err(Error::RowDimension { row, expected, got }) => {
                assert_eq!((row, expected, got), (3, 3, 2));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn merge_weighted_average() {
        let spec = spec();
        let a = spec.features(&[0.0, 0.0, 0.0]).unwrap();
        let b = spec.features(&[1.0, 0.5, -0.5]).unwrap();
        let s1 = sketch_dataset([[0.0, 0.0, 0.0]], &spec).unwrap();
        let s2 = sketch_dataset(std::iter::repeat_n([1.0, 0.5, -0.5], 3), &spec).unwrap();
        let merged = s1.merge(&s2).unwrap();
        assert_eq!(merged.n(), 4);
        let expected: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| (x + y * 3.0) / 4.0).collect();
        assert!(rel_err(merged.values(), &expected) < 1e-14);
        let same = s2.merge(&s2).unwrap();
        assert!(rel_err(same.values(), s2.values()) < 1e-15);
    }

    #[test]
    fn merge_rejects_other_maps() {
        let s1 = Sketch::empty(&spec());
        let other = FeatureMapSpec::new_rff_complex(32, 3, 0.8, OperatorKind::Dense, 12).unwrap();
        let s2 = Sketch::empty(&other);
        assert_eq!(s1.merge(&s2), Err(Error::IncompatibleSketch));
    }

    #[test]
    fn update_then_delete_is_identity() {
        let spec = spec();
        let rows = random_rows(20, 3, 3);
        let s = sketch_dataset(&rows, &spec).unwrap();
        let x = [0.3, 0.2, -1.0];
        let back = s.update(&spec, &x).unwrap().delete(&spec, &x).unwrap();
        assert_eq!(back.n(), s.n());
        assert!(rel_err(back.values(), s.values()) < 1e-12);

        let one = Sketch::empty(&spec).update(&spec, &x).unwrap();
        assert_eq!(one.n(), 1);
        assert!(rel_err(one.values(), &spec.features(&x).unwrap()) < 1e-15);
        let gone = one.delete(&spec, &x).unwrap();
        assert_eq!(gone, Sketch::empty(&spec));
        assert_eq!(gone.delete(&spec, &x), Err(Error::EmptySketch));
    }

    #[test]
    fn count_overflow_is_an_error() {
        let spec = spec();
        let big = Sketch::from_parts(*spec.params(), spec.features(&[0.0; 3]).unwrap(), u64::MAX, None).unwrap();
        assert_eq!(big.merge(&big), Err(Error::CountOverflow));
        assert_eq!(big.update(&spec, &[0.0; 3]), Err(Error::CountOverflow));
    }

    #[test]
    fn parallel_equals_sequential() {
        let spec = spec();
        let rows = random_rows(5000, 3, 4);
        let data = DataMatrix::from_rows(&rows).unwrap();
        let seq = sketch_dataset(&rows, &spec).unwrap();
        let par = sketch_parallel(&data, &spec, 333).unwrap();
        assert_eq!(par.n(), seq.n());
        assert!(rel_err(par.values(), seq.values()) < 1e-10);
    }
}
