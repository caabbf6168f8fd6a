#![allow(dead_code)]

use causalcast::panel::TimeSeriesPanel;
use causalcast::seed::{rng, Rng};
use rand_distr::{Distribution, StandardNormal};

pub fn normal(r: &mut Rng) -> f64 {
    StandardNormal.sample(r)
}

pub fn normals(r: &mut Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| normal(r)).collect()
}

/// x_t = 0.7 x_{t-1} + e, y_t = 0.5 x_{t-2} + 0.6 y_{t-1} + e.
pub fn linear_scm(t: usize, seed: u64) -> TimeSeriesPanel {
    let mut r = rng(seed);
    let burn = 100;
    let (mut x, mut y) = (vec![0.0; t + burn], vec![0.0; t + burn]);
    for i in 2..t + burn {
        x[i] = 0.7 * x[i - 1] + normal(&mut r);
        y[i] = 0.5 * x[i - 2] + 0.6 * y[i - 1] + normal(&mut r);
    }
    TimeSeriesPanel::from_columns(&["x", "y"], vec![x[burn..].to_vec(), y[burn..].to_vec()]).unwrap()
}

/// Unobserved L drives both x and y at lag 1.
pub fn latent_scm(t: usize, seed: u64) -> TimeSeriesPanel {
    let mut r = rng(seed);
    let burn = 100;
    let (mut l, mut x, mut y) = (vec![0.0; t + burn], vec![0.0; t + burn], vec![0.0; t + burn]);
    for i in 1..t + burn {
        l[i] = 0.5 * l[i - 1] + normal(&mut r);
        x[i] = 0.4 * x[i - 1] + 0.8 * l[i - 1] + normal(&mut r);
        y[i] = 0.4 * y[i - 1] + 0.8 * l[i - 1] + normal(&mut r);
    }
    TimeSeriesPanel::from_columns(&["x", "y"], vec![x[burn..].to_vec(), y[burn..].to_vec()]).unwrap()
}

pub fn white_noise(names: &[&str], t: usize, seed: u64) -> TimeSeriesPanel {
    let mut r = rng(seed);
    let cols = names.iter().map(|_| normals(&mut r, t)).collect();
    TimeSeriesPanel::from_columns(names, cols).unwrap()
}

pub fn ar1(n: usize, phi: f64, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    let mut x = vec![0.0; n + 200];
    for t in 1..x.len() {
        x[t] = phi * x[t - 1] + normal(&mut r);
    }
    x[200..].to_vec()
}

/// Kolmogorov-Smirnov p-value against U(0,1), asymptotic series.
pub fn ks_uniform_pvalue(p: &[f64]) -> f64 {
    let mut s = p.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let d = s.iter().enumerate().map(|(i, v)| ((i as f64 + 1.0) / n - v).max(v - i as f64 / n)).fold(0.0, f64::max);
    let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    let mut q = 0.0;
    for j in 1..=100 {
        let j = j as f64;
        q += 2.0 * (-1f64).powf(j - 1.0) * (-2.0 * j * j * lambda * lambda).exp();
    }
    q.clamp(0.0, 1.0)
}
