//! Compressive learning from random-feature sketches.
//!
//! A dataset is compressed into a fixed-size [`Sketch`]: the average of a
//! nonlinear random feature map over all samples. Sketches are mergeable and
//! support exact insertion and deletion, and task parameters such as cluster
//! centroids, diagonal Gaussian mixtures, principal subspaces or regression
//! weights are recovered from the sketch alone by the [`solvers`].
//!
//! Modules:
//!
//! * [`transform`]: the random linear stage, dense or fast structured;
//! * [`feature_map`]: random Fourier, quantized, quadratic and outer-product maps;
//! * [`sketch`]: accumulation, merging, updates and the on-disk format;
//! * [`solvers`]: greedy recovery of centroids and mixtures, low-rank PSD
//!   fitting, sketched least squares;
//! * [`privacy`]: Laplace and Gaussian mechanisms on published sketches;
//! * [`baselines`]: Lloyd, EM, exact PCA, risks, Parzen scores, closed-form MMD,
//!   synthetic data;
//! * [`scan`]: evaluation of the greedy selection criterion over a grid.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod data;
pub mod error;
pub mod feature_map;
pub mod privacy;
pub mod rng;
pub mod scan;
pub mod sketch;
pub mod solvers;
pub mod transform;

pub use data::DataMatrix;
pub use error::{Error, Result};
pub use feature_map::{FeatureMapSpec, Fingerprint, MapKind, MapParams};
pub use sketch::{Mechanism, PrivacyRecord, Sketch, SketchBuilder};
pub use transform::{FrequencyOperator, OperatorKind};
