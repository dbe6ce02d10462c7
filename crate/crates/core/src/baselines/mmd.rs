use crate::solvers::GmmModel;

/// One weighted Gaussian with diagonal covariance; zero variances give Diracs.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianComponent {
    pub weight: f64,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

impl GaussianComponent {
    pub fn dirac(mean: Vec<f64>) -> Self {
        let d = mean.len();
        Self {
            weight: 1.0,
            mean,
            variance: vec![0.0; d],
        }
    }

    pub fn from_model(model: &GmmModel) -> Vec<Self> {
        (0..model.k())
            .map(|l| Self {
                weight: model.weights[l],
                mean: model.means[l].clone(),
                variance: model.variances[l].clone(),
            })
            .collect()
    }
}

/// `E exp(-‖X - X'‖² / 2σ²)` for `X ~ p`, `X' ~ q` independent. Per
/// coordinate the difference is Gaussian with mean `δ` and variance `s²`, and
/// the expectation is `σ/√(σ²+s²) · exp(-δ²/(2(σ²+s²)))`.
pub fn mean_kernel(p: &[GaussianComponent], q: &[GaussianComponent], sigma: f64) -> f64 {
    let s2 = sigma * sigma;
    let mut total = 0.0;
    for a in p {
        for b in q {
            let mut k = a.weight * b.weight;
            for t in 0..a.mean.len() {
                let spread = s2 + a.variance[t] + b.variance[t];
                let delta = a.mean[t] - b.mean[t];
                k *= (s2 / spread).sqrt() * (-delta * delta / (2.0 * spread)).exp();
            }
            total += k;
        }
    }
    total
}

/// MMD between two mixtures under the Gaussian kernel of width `sigma`.
pub fn mmd_mixtures(p: &[GaussianComponent], q: &[GaussianComponent], sigma: f64) -> f64 {
    let sq = mean_kernel(p, p, sigma) + mean_kernel(q, q, sigma) - 2.0 * mean_kernel(p, q, sigma);
    sq.max(0.0).sqrt()
}

pub fn mmd_gaussian_closed_form(p: &GmmModel, q: &GmmModel, sigma: f64) -> f64 {
    mmd_mixtures(
        &GaussianComponent::from_model(p),
        &GaussianComponent::from_model(q),
        sigma,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_distributions() {
        let p = GmmModel::new(vec![0.4, 0.6], vec![vec![0.0], vec![2.0]], vec![vec![1.0], vec![0.3]]).unwrap();
        assert!(mmd_gaussian_closed_form(&p, &p, 0.7) < 1e-7);
    }

    #[test]
    fn two_diracs() {
        let x = vec![0.0, 1.0];
        let y = vec![1.5, -0.5];
        let sigma: f64 = 0.8;
        let kappa = (-(1.5f64 * 1.5 + 1.5 * 1.5) / (2.0 * sigma * sigma)).exp();
        let mmd = mmd_mixtures(&[GaussianComponent::dirac(x)], &[GaussianComponent::dirac(y)], sigma);
        assert!((mmd * mmd - (2.0 - 2.0 * kappa)).abs() < 1e-14);
    }
}
