use std::path::Path;

use clap::Args;
use compsketch::data::read_csv;
use compsketch::scan::{count_local_maxima, criterion_grid, parzen_grid, pearson};
use compsketch::FeatureMapSpec;
use serde::Serialize;

use super::provenance;
use crate::config::{NumberList, Resolver};
use crate::error::{usage, CliResult};
use crate::files::{load_meta, load_sketch, open_input, sidecar_path, with_output, write_json, Provenance};

/// Evaluate the greedy selection criterion of a 2-d sketch on a grid.
#[derive(Args, Debug, Default)]
pub struct KernelscanArgs {
    /// Input sketch (two-dimensional random Fourier map)
    #[arg(long)]
    pub sketch: Option<String>,
    /// CSV data for the Parzen score column
    #[arg(long)]
    pub data: Option<String>,
    /// Lower grid corner `x,y` [default: -3,-3]
    #[arg(long, allow_hyphen_values = true)]
    pub lower: Option<NumberList>,
    /// Upper grid corner `x,y` [default: 3,3]
    #[arg(long, allow_hyphen_values = true)]
    pub upper: Option<NumberList>,
    #[arg(long)]
    pub nx: Option<usize>,
    #[arg(long)]
    pub ny: Option<usize>,
    /// Parzen window width [default: the sketch kernel width 1/(2π·σ_w)]
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Local maxima below this fraction of the grid maximum are not counted
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Grid CSV [default: stdout]
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Serialize)]
struct ScanSummary {
    provenance: Provenance,
    kernel_width: f64,
    criterion_maxima: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    parzen_maxima: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pearson: Option<f64>,
}

fn corner(list: NumberList, name: &str) -> CliResult<[f64; 2]> {
    match list.0.as_slice() {
        [x, y] => Ok([*x, *y]),
        _ => Err(usage(format!("--{name} takes two numbers x,y"))),
    }
}

pub fn run(a: KernelscanArgs, r: &mut Resolver) -> CliResult<()> {
    let input = r.required::<String>("sketch", a.sketch)?;
    let data_path = r.optional::<String>("data", a.data)?;
    let lower = corner(r.or_default("lower", a.lower, NumberList(vec![-3.0, -3.0]))?, "lower")?;
    let upper = corner(r.or_default("upper", a.upper, NumberList(vec![3.0, 3.0]))?, "upper")?;
    let nx = r.or_default("nx", a.nx, 50)?;
    let ny = r.or_default("ny", a.ny, 50)?;
    let threshold = r.or_default("threshold", a.threshold, 0.1)?;
    let out = r.optional::<String>("out", a.out)?;
    let sketch = load_sketch(Path::new(&input))?;
    let meta = load_meta(Path::new(&input), &sketch)?;
    let spec = FeatureMapSpec::from_params(*sketch.params())?;
    let kernel_width = 1.0 / (std::f64::consts::TAU * spec.sigma_w());
    let sigma = r.or_default("sigma", a.sigma, kernel_width)?;

    let criterion = criterion_grid(&sketch, &spec, lower, upper, nx, ny)?;
    let parzen = match &data_path {
        Some(p) => Some(parzen_grid(&read_csv(open_input(Path::new(p))?)?, sigma, lower, upper, nx, ny)?),
        None => None,
    };
    with_output(out.as_deref().map(Path::new), |w| {
        match &parzen {
            Some(_) => writeln!(w, "x,y,criterion,parzen")?,
            None => writeln!(w, "x,y,criterion")?,
        }
        for (i, [x, y]) in criterion.points().enumerate() {
            write!(w, "{x:?},{y:?},{:?}", criterion.values[i])?;
            match &parzen {
                Some(p) => writeln!(w, ",{:?}", p.values[i])?,
                None => writeln!(w)?,
            }
        }
        Ok(())
    })?;
    if let Some(out) = out.as_deref().filter(|o| *o != "-") {
        let summary = ScanSummary {
            kernel_width,
            criterion_maxima: count_local_maxima(&criterion, threshold),
            parzen_maxima: parzen.as_ref().map(|p| count_local_maxima(p, threshold)),
            pearson: parzen.as_ref().map(|p| pearson(&criterion.values, &p.values)),
            provenance: provenance("kernelscan", r, meta.map(|m| vec![m.provenance]).unwrap_or_default()),
        };
        write_json(Some(&sidecar_path(Path::new(out))), &summary)?;
    }
    Ok(())
}
