use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::error::{invalid, Error, Result};
use crate::rng::{streams, SeedStream};
use crate::solvers::GmmModel;

/// Parameters of an isotropic synthetic mixture.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub k: usize,
    pub d: usize,
    pub n: usize,
    /// Minimum centroid spacing in units of `sigma`.
    pub separation: f64,
    pub sigma: f64,
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    pub seed: u64,
    /// Half-width of the centroid box; defaults to `separation·σ·k^(1/d)`.
    #[serde(default)]
    pub box_half_width: Option<f64>,
}

impl SyntheticSpec {
    pub fn new(k: usize, d: usize, n: usize, separation: f64, sigma: f64, seed: u64) -> Self {
        Self {
            k,
            d,
            n,
            separation,
            sigma,
            weights: None,
            seed,
            box_half_width: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticData {
    pub data: DataMatrix,
    pub labels: Vec<usize>,
    pub truth: GmmModel,
}

const PLACEMENT_ATTEMPTS: usize = 100;
const CANDIDATES_PER_CENTROID: usize = 1000;

fn place_centroids(spec: &SyntheticSpec, half: f64, rng: &mut SeedStream) -> Result<Vec<Vec<f64>>> {
    let min_dist2 = (spec.separation * spec.sigma).powi(2);
    for _ in 0..PLACEMENT_ATTEMPTS {
        let mut centers: Vec<Vec<f64>> = Vec::with_capacity(spec.k);
        'centroid: while centers.len() < spec.k {
            for _ in 0..CANDIDATES_PER_CENTROID {
                let c: Vec<f64> = (0..spec.d).map(|_| rng.uniform_range(-half, half)).collect();
                let ok = centers
                    .iter()
                    .all(|o| o.iter().zip(&c).map(|(a, b)| (a - b).powi(2)).sum::<f64>() >= min_dist2);
                if ok {
                    centers.push(c);
                    continue 'centroid;
                }
            }
            break;
        }
        if centers.len() == spec.k {
            return Ok(centers);
        }
    }
    Err(Error::Infeasible(format!(
        "could not place {} centroids {}σ apart in a box of half-width {half}",
        spec.k, spec.separation
    )))
}

/// Draws labels from the weights, then samples from `N(μ_ℓ, σ² I)`.
pub fn synth_gmm(spec: &SyntheticSpec) -> Result<SyntheticData> {
    if spec.k == 0 || spec.d == 0 || spec.n == 0 {
        return Err(invalid("k, d and n must be positive"));
    }
    if !(spec.separation > 0.0) || !(spec.sigma > 0.0) {
        return Err(invalid("separation and sigma must be positive"));
    }
    let weights = match &spec.weights {
        Some(w) => {
            if w.len() != spec.k {
                return Err(Error::DimensionMismatch {
                    expected: spec.k,
                    got: w.len(),
                });
            }
            if w.iter().any(|v| !(*v >= 0.0)) || (w.iter().sum::<f64>() - 1.0).abs() > 1e-10 {
                return Err(invalid("weights must lie on the simplex"));
            }
            w.clone()
        }
        None => vec![1.0 / spec.k as f64; spec.k],
    };
    let half = spec
        .box_half_width
        .unwrap_or(spec.separation * spec.sigma * (spec.k as f64).powf(1.0 / spec.d as f64));
    let mut rng = SeedStream::new(spec.seed, streams::SYNTHETIC);
    let means = place_centroids(spec, half, &mut rng)?;

    let mut cumulative = Vec::with_capacity(spec.k);
    let mut acc = 0.0;
    for w in &weights {
        acc += w;
        cumulative.push(acc);
    }
    let mut values = Vec::with_capacity(spec.n * spec.d);
    let mut labels = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let u = rng.uniform() * acc;
        let label = cumulative.iter().position(|&c| u < c).unwrap_or_else(|| {
            weights.iter().rposition(|&w| w > 0.0).expect("some weight is positive")
        });
        labels.push(label);
        for mu in &means[label] {
            values.push(mu + spec.sigma * rng.gaussian());
        }
    }
    let truth = GmmModel::new(
        weights,
        means,
        vec![vec![spec.sigma * spec.sigma; spec.d]; spec.k],
    )?;
    Ok(SyntheticData {
        data: DataMatrix::new(spec.d, values)?,
        labels,
        truth,
    })
}
