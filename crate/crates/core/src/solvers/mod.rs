//! Parameter recovery from sketches.

mod clomp;
mod lowrank;
pub(crate) mod model;
mod nnls;
mod optim;
mod options;
mod regression;

pub use clomp::{clomp_gmm, clomp_kmeans, sketch_cost, MixtureModel};
pub(crate) use clomp::effective_target as clomp_target;
pub use lowrank::{fit_lowrank_psd, lowrank_objective};
pub use model::{CentroidModel, GmmModel, LowRankPsd, ModelDocument};
pub use nnls::nnls;
pub use options::{SearchBox, SolverOptions, VARIANCE_FLOOR};
pub use regression::{ls_regression, ls_regression_with, RegressionOptions};
