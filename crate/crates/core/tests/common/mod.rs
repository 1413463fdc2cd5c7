#![allow(dead_code)]

use std::collections::BTreeSet;

use dtlet::data::{Domain, DomainDataset};
use dtlet::{Matrix, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Two views of one latent signal. Classes 0 and 1 alternate by row and
/// differ by `±separation` along latent axis 0; each view is an independent
/// random linear map of the latent plus isotropic noise.
pub fn latent_views(
    n: usize,
    latent: usize,
    dim_source: usize,
    dim_target: usize,
    separation: f64,
    noise: f64,
    seed: u64,
) -> (DomainDataset, DomainDataset) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<i32> = (0..n).map(|i| (i % 2) as i32).collect();
    let mut z = gaussian(&mut rng, n, latent);
    for (i, &l) in labels.iter().enumerate() {
        z[(i, 0)] += if l == 1 { separation } else { -separation };
    }
    let a = gaussian(&mut rng, latent, dim_source);
    let b = gaussian(&mut rng, latent, dim_target);
    let xs = &z * a + gaussian(&mut rng, n, dim_source) * noise;
    let xt = &z * b + gaussian(&mut rng, n, dim_target) * noise;
    (
        DomainDataset::new(xs, labels.clone(), Domain::Source).unwrap(),
        DomainDataset::new(xt, labels, Domain::Target).unwrap(),
    )
}

/// Plain correlated Gaussian views without labels, `shared` latent columns.
pub fn correlated_views(n: usize, ds: usize, dt: usize, shared: usize, noise: f64, seed: u64) -> (Matrix, Matrix) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = gaussian(&mut rng, n, shared);
    let a = gaussian(&mut rng, shared, ds);
    let b = gaussian(&mut rng, shared, dt);
    (
        &z * a + gaussian(&mut rng, n, ds) * noise,
        &z * b + gaussian(&mut rng, n, dt) * noise,
    )
}

/// Recursive enumeration of order-preserving matchings that end in `(a, b)`.
pub fn chains(a: usize, b: usize, last: (usize, usize), cur: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
    let mut with_top = cur.clone();
    with_top.push((a, b));
    out.push(with_top);
    for i in last.0 + 1..a {
        for j in last.1 + 1..b {
            cur.push((i, j));
            chains(a, b, (i, j), cur, out);
            cur.pop();
        }
    }
}

/// Every subset of the hidden grid that uses each layer at most once.
pub fn injections(a: usize, b: usize) -> Vec<Vec<(usize, usize)>> {
    let grid: Vec<(usize, usize)> = (2..a).flat_map(|i| (2..b).map(move |j| (i, j))).collect();
    let mut out = Vec::new();
    for mask in 0u32..(1 << grid.len()) {
        let chosen: Vec<(usize, usize)> = (0..grid.len()).filter(|k| mask >> k & 1 == 1).map(|k| grid[k]).collect();
        let src: BTreeSet<usize> = chosen.iter().map(|p| p.0).collect();
        let tgt: BTreeSet<usize> = chosen.iter().map(|p| p.1).collect();
        if src.len() == chosen.len() && tgt.len() == chosen.len() {
            let mut pairs = chosen;
            pairs.push((a, b));
            out.push(pairs);
        }
    }
    out
}

/// FISTA on the box-constrained dual `min ½αᵀQα − 1ᵀα, 0 ≤ α ≤ C`.
/// Returns the maximized dual value `1ᵀα − ½αᵀQα`.
pub fn dual_qp_oracle(x: &Matrix, y: &[f64], c: f64, iters: usize) -> f64 {
    let n = x.nrows();
    let q = Matrix::from_fn(n, n, |i, j| y[i] * y[j] * (x.row(i).dot(&x.row(j)) + 1.0));
    // power iteration for the Lipschitz constant
    let mut v = Vector::from_element(n, 1.0);
    let mut lip = 0.0;
    for _ in 0..500 {
        let w = &q * &v;
        lip = w.norm();
        v = w / lip;
    }
    let step = 1.0 / (lip * 1.01);
    let proj = |a: Vector| a.map(|t| t.clamp(0.0, c));
    let mut alpha = Vector::zeros(n);
    let mut z = alpha.clone();
    let mut t = 1.0f64;
    for _ in 0..iters {
        let grad = &q * &z - Vector::from_element(n, 1.0);
        let next = proj(&z - grad * step);
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        z = &next + (&next - &alpha) * ((t - 1.0) / t_next);
        alpha = next;
        t = t_next;
    }
    alpha.sum() - 0.5 * alpha.dot(&(&q * &alpha))
}
