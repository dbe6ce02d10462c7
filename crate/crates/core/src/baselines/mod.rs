//! Classical reference algorithms and closed-form quantities.
//!
//! These run on the full data and serve as oracles for the compressive
//! solvers: Lloyd k-means, diagonal-covariance EM, exact PCA, empirical
//! risks, Parzen scores and the closed-form MMD between Gaussian mixtures,
//! plus a seeded synthetic mixture generator.

mod em;
mod lloyd;
mod mmd;
mod pca;
mod risk;
mod synth;

pub use em::{em_gmm, em_gmm_with_trace};
pub use lloyd::{kmeans_sse, lloyd_kmeans, lloyd_kmeans_with_trace};
pub use mmd::{mean_kernel, mmd_gaussian_closed_form, mmd_mixtures, GaussianComponent};
pub use pca::{autocorrelation, exact_pca};
pub use risk::{empirical_risk, parzen_score, RiskParams};
pub use synth::{synth_gmm, SyntheticData, SyntheticSpec};
