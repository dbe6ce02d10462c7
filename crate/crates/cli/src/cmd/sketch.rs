use std::fmt;
use std::io::BufRead;
use std::path::Path;
use std::str::FromStr;

use clap::Args;
use compsketch::data::CsvRows;
use compsketch::rng::SeedStream;
use compsketch::sketch::sketch_parallel;
use compsketch::solvers::SearchBox;
use compsketch::{DataMatrix, FeatureMapSpec, MapKind, MapParams, OperatorKind, Sketch};

use super::privatize::{self, PrivacySettings};
use super::{provenance, refuse_unsealed};
use crate::config::Resolver;
use crate::error::{io_err, usage, CliError, CliResult};
use crate::files::{open_input, save_sketch, SketchMeta};

/// Rows from which `--sigma-w auto` estimates the data scale.
pub const RESERVOIR_ROWS: usize = 1000;
/// Rows buffered before a block-parallel accumulation step.
const CHUNK_ROWS: usize = 16_384;
const BLOCK_ROWS: usize = 1024;
const RESERVOIR_STREAM: u64 = 9;

/// Stream a CSV file (or stdin) into a sketch.
#[derive(Args, Debug, Default)]
pub struct SketchArgs {
    /// CSV input with a header row; `-` reads stdin
    #[arg(long)]
    pub input: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
    /// rff | quantized | quadratic | outer_product [default: rff]
    #[arg(long)]
    pub kind: Option<MapKind>,
    /// Sketch size [default: 10·k·d]
    #[arg(long)]
    pub m: Option<usize>,
    /// Number of components, used only for the default sketch size
    #[arg(long)]
    pub k: Option<usize>,
    /// Frequency scale, or `auto` for 1/(2π·median pairwise distance)
    #[arg(long)]
    pub sigma_w: Option<SigmaW>,
    /// dense | structured [default: structured when d > 8, else dense]
    #[arg(long)]
    pub operator: Option<OperatorKind>,
    /// Operator seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Dither seed for quantized maps [default: the operator seed]
    #[arg(long)]
    pub dither_seed: Option<u64>,
    /// Input dimension; needed only for a completely empty input
    #[arg(long)]
    pub d: Option<usize>,
    /// Privatize before writing
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub noise_seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SigmaW {
    Auto,
    Value(f64),
}

impl FromStr for SigmaW {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(SigmaW::Auto);
        }
        match s.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(SigmaW::Value(v)),
            _ => Err(format!("sigma-w must be 'auto' or a positive number, got '{s}'")),
        }
    }
}

impl fmt::Display for SigmaW {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SigmaW::Auto => f.write_str("auto"),
            SigmaW::Value(v) => write!(f, "{v}"),
        }
    }
}

/// Structured blocks only approximate an isotropic kernel once the padded
/// dimension reaches 16.
pub fn default_operator(d: usize) -> OperatorKind {
    if d.next_power_of_two() >= 16 {
        OperatorKind::Structured
    } else {
        OperatorKind::Dense
    }
}

/// Median of all pairwise Euclidean distances.
pub fn median_pairwise_distance(rows: &[Vec<f64>]) -> Option<f64> {
    let mut dist: Vec<f64> = Vec::with_capacity(rows.len() * rows.len().saturating_sub(1) / 2);
    for (i, a) in rows.iter().enumerate() {
        for b in &rows[i + 1..] {
            dist.push(a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt());
        }
    }
    if dist.is_empty() {
        return None;
    }
    let mid = dist.len() / 2;
    let (_, &mut upper, _) = dist.select_nth_unstable_by(mid, f64::total_cmp);
    if dist.len() % 2 == 1 {
        return Some(upper);
    }
    let lower = dist[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Some(0.5 * (lower + upper))
}

/// Uniform reservoir sample of a whole file (first pass).
fn reservoir(path: &Path, seed: u64) -> CliResult<Vec<Vec<f64>>> {
    let mut rows = CsvRows::new(open_input(path)?)?;
    let mut rng = SeedStream::new(seed, RESERVOIR_STREAM);
    let mut sample: Vec<Vec<f64>> = Vec::with_capacity(RESERVOIR_ROWS);
    let mut seen = 0usize;
    while let Some(row) = rows.next() {
        let row = row?;
        seen += 1;
        if sample.len() < RESERVOIR_ROWS {
            sample.push(row.to_vec());
        } else {
            let j = rng.below(seen);
            if j < RESERVOIR_ROWS {
                sample[j] = row.to_vec();
            }
        }
    }
    Ok(sample)
}

struct Accumulator<'a> {
    spec: &'a FeatureMapSpec,
    sketch: Sketch,
    chunk: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl<'a> Accumulator<'a> {
    fn new(spec: &'a FeatureMapSpec) -> Self {
        let d = spec.d();
        Self {
            spec,
            sketch: Sketch::empty(spec),
            chunk: Vec::with_capacity(CHUNK_ROWS * d),
            lower: vec![f64::INFINITY; d],
            upper: vec![f64::NEG_INFINITY; d],
        }
    }

    fn push(&mut self, row: &[f64]) -> CliResult<()> {
        for (t, v) in row.iter().enumerate() {
            self.lower[t] = self.lower[t].min(*v);
            self.upper[t] = self.upper[t].max(*v);
        }
        self.chunk.extend_from_slice(row);
        if self.chunk.len() >= CHUNK_ROWS * self.spec.d() {
            self.flush()?;
        }
        Ok(())
    }

    fn flush(&mut self) -> CliResult<()> {
        if self.chunk.is_empty() {
            return Ok(());
        }
        let values = std::mem::replace(&mut self.chunk, Vec::with_capacity(CHUNK_ROWS * self.spec.d()));
        let part = sketch_parallel(&DataMatrix::new(self.spec.d(), values)?, self.spec, BLOCK_ROWS)?;
        self.sketch = self.sketch.merge(&part)?;
        Ok(())
    }

    fn finish(mut self) -> CliResult<(Sketch, Option<SearchBox>)> {
        self.flush()?;
        let bounds = if self.sketch.n() > 0 {
            Some(SearchBox::new(self.lower, self.upper)?)
        } else {
            None
        };
        Ok((self.sketch, bounds))
    }
}

pub fn run(a: SketchArgs, r: &mut Resolver, require_dp: bool) -> CliResult<()> {
    let input = r.required::<String>("input", a.input)?;
    let out = r.required::<String>("out", a.out)?;
    let kind = r.or_default("kind", a.kind, MapKind::RffComplex)?;
    let operator = r.optional("operator", a.operator)?;
    let seed = r.seed("seed", a.seed)?;
    let dither_seed = r.or_default("dither-seed", a.dither_seed, seed)?;
    let epsilon = r.optional("epsilon", a.epsilon)?;
    let privacy = match epsilon {
        Some(epsilon) => Some(PrivacySettings {
            epsilon,
            delta: r.optional("delta", a.delta)?,
            radius: r.optional("radius", a.radius)?,
            seed: r.or_default("noise-seed", a.noise_seed, seed)?,
        }),
        None => {
            refuse_unsealed(require_dp, "a sketch")?;
            None
        }
    };
    let sigma_w = match kind {
        MapKind::OuterProduct => None,
        MapKind::Quadratic => Some(r.or_default("sigma-w", a.sigma_w, SigmaW::Value(1.0))?),
        _ => Some(r.required("sigma-w", a.sigma_w)?),
    };
    let is_stdin = input == "-";

    let mut reader = open_input(Path::new(&input))?;
    let empty = reader.fill_buf().map_err(io_err(&input))?.is_empty();
    let flag_d = r.optional("d", a.d)?;
    let mut rows = if empty {
        None
    } else {
        let rows = CsvRows::new(reader)?;
        if let Some(d) = flag_d.filter(|&d| d != rows.d()) {
            return Err(compsketch::Error::DimensionMismatch { expected: d, got: rows.d() }.into());
        }
        Some(rows)
    };
    let d = match (&rows, flag_d) {
        (Some(rows), _) => rows.d(),
        (None, Some(d)) => d,
        (None, None) => return Err(usage("input is empty; pass --d to write an empty sketch")),
    };

    // `auto` needs a data subsample before the map exists: a uniform
    // reservoir over a file, or the leading rows of a stream.
    let mut prefix: Vec<Vec<f64>> = Vec::new();
    let mut median_distance = None;
    let sigma_w = match sigma_w {
        None => 0.0,
        Some(SigmaW::Value(v)) => v,
        Some(SigmaW::Auto) => {
            if kind == MapKind::Quadratic {
                return Err(usage("--sigma-w auto applies only to random Fourier maps"));
            }
            let sample = if is_stdin {
                if let Some(rows) = rows.as_mut() {
                    while prefix.len() < RESERVOIR_ROWS {
                        match rows.next() {
                            Some(row) => prefix.push(row?.to_vec()),
                            None => break,
                        }
                    }
                }
                prefix.clone()
            } else {
                reservoir(Path::new(&input), seed)?
            };
            let s = median_pairwise_distance(&sample)
                .filter(|s| *s > 0.0)
                .ok_or_else(|| usage("--sigma-w auto needs at least two distinct rows"))?;
            median_distance = Some(s);
            1.0 / (std::f64::consts::TAU * s)
        }
    };
    let m = match kind {
        MapKind::OuterProduct => d * d,
        _ => match r.optional("m", a.m)? {
            Some(m) => m,
            None => {
                let k: usize = r
                    .optional("k", a.k)?
                    .ok_or_else(|| usage("pass --m, or --k for the default m = 10·k·d"))?;
                let m = 10 * k * d;
                r.record("m", m);
                m
            }
        },
    };
    let operator = operator.unwrap_or_else(|| {
        let op = default_operator(d);
        r.record("operator", op);
        op
    });
    let spec = FeatureMapSpec::from_params(MapParams::new(kind, m, d, sigma_w, operator, seed, dither_seed))
        .map_err(|e| match e {
            compsketch::Error::InvalidArgument(msg) => CliError::Usage(msg),
            other => other.into(),
        })?;

    let mut acc = Accumulator::new(&spec);
    for row in &prefix {
        acc.push(row)?;
    }
    if let Some(rows) = rows.as_mut() {
        while let Some(row) = rows.next() {
            acc.push(row?)?;
        }
    }
    let (mut sketch, mut bounds) = acc.finish()?;
    if sketch.n() == 0 {
        eprintln!("warning: {input} has no data rows; writing an empty sketch");
    }
    if let Some(p) = privacy {
        sketch = privatize::apply(&sketch, &spec, p)?;
        // The box of raw data is not differentially private.
        bounds = None;
    }
    let mut meta = SketchMeta::new(provenance("sketch", r, Vec::new()), &sketch, bounds);
    meta.median_distance = median_distance;
    save_sketch(Path::new(&out), &sketch, &meta)
}
