//! Projected gradient descent with Barzilai–Borwein trial steps and Armijo
//! backtracking. Every accepted step decreases the objective.

const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1e-20;
const MAX_STEP: f64 = 1e20;

#[derive(Clone, Copy)]
pub(crate) struct Bounds<'a> {
    pub lower: &'a [f64],
    pub upper: &'a [f64],
}

impl Bounds<'_> {
    fn project(&self, x: &mut [f64]) {
        for ((v, lo), hi) in x.iter_mut().zip(self.lower).zip(self.upper) {
            *v = v.clamp(*lo, *hi);
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    /// Objective after every accepted step, starting with the initial value.
    #[cfg_attr(not(test), allow(dead_code))]
    pub trace: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn minimize<F>(
    mut fg: F,
    x0: Vec<f64>,
    bounds: Option<Bounds<'_>>,
    tolerance: f64,
    max_iterations: usize,
) -> Minimum
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let mut x = x0;
    if let Some(b) = bounds {
        b.project(&mut x);
    }
    let (mut f, mut g) = fg(&x);
    let mut trace = vec![f];
    if !f.is_finite() {
        return Minimum { x, f, trace };
    }
    let gnorm = dot(&g, &g).sqrt();
    let mut step = if gnorm > 0.0 { 1.0 / gnorm } else { 1.0 };
    let mut trial = vec![0.0; x.len()];
    for _ in 0..max_iterations {
        let mut t = step;
        let accepted = loop {
            for ((tr, xi), gi) in trial.iter_mut().zip(&x).zip(&g) {
                *tr = xi - t * gi;
            }
            if let Some(b) = bounds {
                b.project(&mut trial);
            }
            let moved: f64 = trial.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum();
            if moved == 0.0 {
                break None;
            }
            let decrease: f64 = trial.iter().zip(&x).zip(&g).map(|((a, b), gi)| gi * (a - b)).sum();
            let (ft, gt) = fg(&trial);
            if ft.is_finite() && ft <= f + ARMIJO * decrease && ft < f {
                break Some((ft, gt));
            }
            t *= 0.5;
            if t < MIN_STEP {
                break None;
            }
        };
        let Some((f_new, g_new)) = accepted else { break };
        assert!(f_new <= f, "line search accepted an increasing step");
        let s: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        step = if sy > 0.0 { (dot(&s, &s) / sy).clamp(MIN_STEP, MAX_STEP) } else { (t * 2.0).min(MAX_STEP) };
        let gain = f - f_new;
        std::mem::swap(&mut x, &mut trial);
        f = f_new;
        g = g_new;
        trace.push(f);
        if gain <= tolerance * f.abs() {
            break;
        }
    }
    Minimum { x, f, trace }
}
