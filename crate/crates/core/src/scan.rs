//! The greedy selection criterion `c ↦ (1/m) Re⟨z̃, Φ(c)⟩` evaluated over a
//! planar grid, next to the Parzen score it approximates.

use crate::data::DataMatrix;
use crate::error::{invalid, Error, Result};
use crate::feature_map::FeatureMapSpec;
use crate::sketch::Sketch;
use crate::solvers::{CentroidModel, MixtureModel};

/// Values on an `nx × ny` grid, stored with `x` varying fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub values: Vec<f64>,
}

impl Grid {
    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.xs.len() + ix]
    }

    pub fn points(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        self.ys.iter().flat_map(move |&y| self.xs.iter().map(move |&x| [x, y]))
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![(lo + hi) / 2.0];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn axes(lower: [f64; 2], upper: [f64; 2], nx: usize, ny: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if nx == 0 || ny == 0 {
        return Err(invalid("grid needs at least one point per axis"));
    }
    if !(lower[0] <= upper[0] && lower[1] <= upper[1]) {
        return Err(invalid("grid lower corner exceeds upper corner"));
    }
    Ok((linspace(lower[0], upper[0], nx), linspace(lower[1], upper[1], ny)))
}

/// Sketch criterion over the grid; the map must be two-dimensional.
pub fn criterion_grid(
    sketch: &Sketch,
    spec: &FeatureMapSpec,
    lower: [f64; 2],
    upper: [f64; 2],
    nx: usize,
    ny: usize,
) -> Result<Grid> {
    if spec.d() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: spec.d() });
    }
    let (xs, ys) = axes(lower, upper, nx, ny)?;
    let z = crate::solvers::clomp_target(sketch, spec)?;
    let m = spec.m() as f64;
    let mut values = Vec::with_capacity(nx * ny);
    for &y in &ys {
        for &x in &xs {
            let model = CentroidModel {
                centroids: vec![vec![x, y]],
                weights: vec![1.0],
            };
            let atom = model.atom(spec, 0)?;
            values.push(z.iter().zip(&atom).map(|(a, b)| (a * b.conj()).re).sum::<f64>() / m);
        }
    }
    Ok(Grid { xs, ys, values })
}

/// Parzen score of `data` over the same grid layout.
pub fn parzen_grid(data: &DataMatrix, sigma: f64, lower: [f64; 2], upper: [f64; 2], nx: usize, ny: usize) -> Result<Grid> {
    if data.d() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: data.d() });
    }
    let (xs, ys) = axes(lower, upper, nx, ny)?;
    let values = ys
        .iter()
        .flat_map(|&y| xs.iter().map(move |&x| [x, y]))
        .map(|c| crate::baselines::parzen_score(data, &c, sigma))
        .collect();
    Ok(Grid { xs, ys, values })
}

/// Grid points strictly greater than all of their (up to eight) neighbours
/// and at least `threshold` times the grid maximum.
pub fn count_local_maxima(grid: &Grid, threshold: f64) -> usize {
    let (nx, ny) = (grid.xs.len(), grid.ys.len());
    let top = grid.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let floor = threshold * top;
    let mut count = 0;
    for iy in 0..ny {
        for ix in 0..nx {
            let v = grid.get(ix, iy);
            if v < floor {
                continue;
            }
            let mut is_max = true;
            'nb: for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let (jx, jy) = (ix as i64 + dx, iy as i64 + dy);
                    if jx < 0 || jy < 0 || jx >= nx as i64 || jy >= ny as i64 {
                        continue;
                    }
                    if grid.get(jx as usize, jy as usize) >= v {
                        is_max = false;
                        break 'nb;
                    }
                }
            }
            count += usize::from(is_max);
        }
    }
    count
}

/// Sample Pearson correlation.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maxima_counter() {
        let xs = linspace(0.0, 6.0, 7);
        let ys = linspace(0.0, 2.0, 3);
        let mut values = vec![0.0; 21];
        values[7 + 1] = 1.0;
        values[7 + 4] = 0.5;
        values[6] = 0.05;
        let grid = Grid { xs, ys, values };
        assert_eq!(count_local_maxima(&grid, 0.1), 2);
        assert_eq!(count_local_maxima(&grid, 0.0), 3);
        assert_eq!(count_local_maxima(&grid, 0.6), 1);
    }

    #[test]
    fn plateaus_are_not_maxima() {
        let grid = Grid {
            xs: vec![0.0, 1.0],
            ys: vec![0.0],
            values: vec![1.0, 1.0],
        };
        assert_eq!(count_local_maxima(&grid, 0.0), 0);
    }

    #[test]
    fn pearson_basics() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]) - 1.0).abs() < 1e-15);
        assert!((pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-15);
    }
}
