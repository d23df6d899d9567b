//! Shared test oracles: a step-doubling RK4 integrator for the first-order
//! form of the pencil equation, and seeded sampling helpers.
#![allow(dead_code)]

use quadpencil::experiments::{generate_pencil, ExperimentSpec, Family};
use quadpencil::pencil::QuadraticPencil;
use quadpencil::{ComplexMatrix, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_pencil(family: Family, n: usize, seed: u64) -> QuadraticPencil {
    generate_pencil(&ExperimentSpec::new(family, n, seed)).expect("valid spec")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random points in the box `[-r, r] + [-r, r] i` at least `gap` away from
/// every point of `avoid`.
pub fn off_spectrum_samples(
    rng: &mut ChaCha8Rng,
    count: usize,
    r: f64,
    avoid: &[C64],
    gap: f64,
) -> Vec<C64> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let z = C64::new(rng.random_range(-r..=r), rng.random_range(-r..=r));
        if avoid.iter().all(|a| (a - z).norm() > gap) {
            out.push(z);
        }
    }
    out
}

fn max_abs(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Right-hand side of `y' = [[0, 1], [-C, -B]] y + [0; f(t)]`, written out
/// directly rather than through the library's companion matrix.
fn rhs(
    b: &ComplexMatrix,
    c: &ComplexMatrix,
    f: &dyn Fn(f64) -> Vec<C64>,
    t: f64,
    y: &[C64],
) -> Vec<C64> {
    let n = b.rows();
    let (x, v) = y.split_at(n);
    let ft = f(t);
    let mut out = Vec::with_capacity(2 * n);
    out.extend_from_slice(v);
    for i in 0..n {
        let mut acc = ft[i];
        for j in 0..n {
            acc -= c[(i, j)] * x[j] + b[(i, j)] * v[j];
        }
        out.push(acc);
    }
    out
}

fn rk4_step(
    b: &ComplexMatrix,
    c: &ComplexMatrix,
    f: &dyn Fn(f64) -> Vec<C64>,
    t: f64,
    y: &[C64],
    h: f64,
) -> Vec<C64> {
    let add =
        |y: &[C64], k: &[C64], s: f64| y.iter().zip(k).map(|(a, b)| a + b * s).collect::<Vec<_>>();
    let k1 = rhs(b, c, f, t, y);
    let k2 = rhs(b, c, f, t + h / 2.0, &add(y, &k1, h / 2.0));
    let k3 = rhs(b, c, f, t + h / 2.0, &add(y, &k2, h / 2.0));
    let k4 = rhs(b, c, f, t + h, &add(y, &k3, h));
    (0..y.len())
        .map(|i| y[i] + (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0))
        .collect()
}

/// Adaptive RK4 with step doubling and local extrapolation. Returns `x` and
/// `x'` at every grid point.
pub fn rk4_reference(
    pencil: &QuadraticPencil,
    u0: &[C64],
    u1: &[C64],
    f: &dyn Fn(f64) -> Vec<C64>,
    grid: &[f64],
    tol: f64,
) -> (Vec<Vec<C64>>, Vec<Vec<C64>>) {
    let (b, c) = (pencil.b(), pencil.c());
    let n = b.rows();
    let mut y: Vec<C64> = u0.iter().chain(u1).copied().collect();
    let mut t = grid[0];
    let mut h: f64 = 1e-3;
    let mut xs = vec![y[..n].to_vec()];
    let mut dxs = vec![y[n..].to_vec()];
    for &target in &grid[1..] {
        while t < target {
            let step = h.min(target - t);
            let full = rk4_step(b, c, f, t, &y, step);
            let half = rk4_step(b, c, f, t, &y, step / 2.0);
            let two = rk4_step(b, c, f, t + step / 2.0, &half, step / 2.0);
            let diff: Vec<C64> = two.iter().zip(&full).map(|(a, b)| a - b).collect();
            let err = max_abs(&diff) / 15.0;
            let scale = tol * max_abs(&two).max(1.0);
            if err <= scale {
                t = if step == target - t { target } else { t + step };
                y = two.iter().zip(&diff).map(|(a, d)| a + d / 15.0).collect();
            }
            let factor = if err == 0.0 {
                4.0
            } else {
                (0.9 * (scale / err).powf(0.2)).clamp(0.1, 4.0)
            };
            h = step * factor;
        }
        xs.push(y[..n].to_vec());
        dxs.push(y[n..].to_vec());
    }
    (xs, dxs)
}

pub fn max_deviation(a: &[Vec<C64>], b: &[Vec<C64>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(u, v)| u.iter().zip(v).map(|(p, q)| (p - q).norm()))
        .fold(0.0, f64::max)
}

/// `||X^2 + B X + C||` computed from scratch.
pub fn equation_defect(pencil: &QuadraticPencil, x: &ComplexMatrix) -> f64 {
    let r = &(&(x * x) + &(pencil.b() * x)) + pencil.c();
    r.spectral_norm()
}
