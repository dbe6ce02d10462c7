pub mod eval;
pub mod gen;
pub mod kernelscan;
pub mod learn;
pub mod merge;
pub mod privatize;
pub mod sketch;

use std::fmt;
use std::str::FromStr;

use crate::config::Resolver;
use crate::error::{CliError, CliResult};
use crate::files::Provenance;

/// Learning task.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    KMeans,
    Gmm,
    Pca,
    Regress,
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "kmeans" => Ok(Task::KMeans),
            "gmm" => Ok(Task::Gmm),
            "pca" => Ok(Task::Pca),
            "regress" => Ok(Task::Regress),
            other => Err(format!("unknown task '{other}' (kmeans, gmm, pca, regress)")),
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::KMeans => "kmeans",
            Task::Gmm => "gmm",
            Task::Pca => "pca",
            Task::Regress => "regress",
        })
    }
}

pub(crate) fn provenance(command: &str, r: &Resolver, upstream: Vec<Provenance>) -> Provenance {
    Provenance {
        command: command.into(),
        settings: r.settings().clone(),
        upstream,
    }
}

pub(crate) fn refuse_unsealed(require_dp: bool, what: &str) -> CliResult<()> {
    if require_dp {
        Err(CliError::Sealed(format!(
            "--require-dp is set: refusing to write {what} without a privacy mechanism"
        )))
    } else {
        Ok(())
    }
}
