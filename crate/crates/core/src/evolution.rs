//! The evolution operator `U(t)` of a complete pair and the initial value
//! problem `x'' + B x' + C x = f`, `x(0) = u0`, `x'(0) = u1`.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{inverse, matrix_exp, vec_norm, ComplexMatrix, C64};
use crate::pencil::QuadraticPencil;
use crate::solvent::SolventPair;

/// Default number of Simpson substeps per grid interval.
pub const DEFAULT_SUBSTEPS: usize = 32;

/// Evaluates `U(t)` and `U'(t)` for a fixed pair of solvents.
#[derive(Clone, Debug)]
pub struct Propagator {
    x: ComplexMatrix,
    z: ComplexMatrix,
    diff_inv: ComplexMatrix,
}

impl Propagator {
    pub fn new(pair: &SolventPair) -> Result<Self> {
        Self::from_solvents(pair.x.x.clone(), pair.z.x.clone())
    }

    pub fn from_solvents(x: ComplexMatrix, z: ComplexMatrix) -> Result<Self> {
        if !x.is_square() || x.rows() != z.rows() || x.cols() != z.cols() {
            return Err(Error::InvalidInput(
                "solvents must be square and of equal size".into(),
            ));
        }
        let diff_inv = inverse(&(&x - &z))?;
        Ok(Self { x, z, diff_inv })
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    /// `(U(t), U'(t))`.
    pub fn at(&self, t: f64) -> Result<(ComplexMatrix, ComplexMatrix)> {
        let ex = matrix_exp(&self.x.scale_real(t))?;
        let ez = matrix_exp(&self.z.scale_real(t))?;
        let u = &(&ex - &ez) * &self.diff_inv;
        let du = &(&(&self.x * &ex) - &(&self.z * &ez)) * &self.diff_inv;
        Ok((u, du))
    }
}

pub fn evolution_operators(pair: &SolventPair, t: f64) -> Result<(ComplexMatrix, ComplexMatrix)> {
    Propagator::new(pair)?.at(t)
}

/// `(||U(0)||, ||U'(0) - 1||)` in the spectral norm.
pub fn check_initial_identities(pair: &SolventPair) -> Result<(f64, f64)> {
    let (u, du) = evolution_operators(pair, 0.0)?;
    let n = u.rows();
    Ok((
        u.spectral_norm(),
        (&du - &ComplexMatrix::identity(n)).spectral_norm(),
    ))
}

/// Forcing term `f(t)`.
#[derive(Clone)]
pub enum Forcing {
    Zero,
    Constant(Vec<C64>),
    /// Piecewise-linear interpolation of a sampled table.
    Sampled(SampledForcing),
    Custom(Arc<dyn Fn(f64) -> Vec<C64> + Send + Sync>),
}

impl fmt::Debug for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Forcing::Zero => write!(f, "Zero"),
            Forcing::Constant(v) => f.debug_tuple("Constant").field(v).finish(),
            Forcing::Sampled(s) => f.debug_tuple("Sampled").field(s).finish(),
            Forcing::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampledForcing {
    pub times: Vec<f64>,
    pub values: Vec<Vec<C64>>,
}

impl SampledForcing {
    pub fn new(times: Vec<f64>, values: Vec<Vec<C64>>) -> Result<Self> {
        let s = Self { times, values };
        s.validate(None)?;
        Ok(s)
    }

    fn validate(&self, n: Option<usize>) -> Result<()> {
        if self.times.is_empty() || self.times.len() != self.values.len() {
            return Err(Error::InvalidInput(
                "forcing table needs equally many times and values, at least one".into(),
            ));
        }
        if self.times.windows(2).any(|w| w[1] <= w[0]) || self.times.iter().any(|t| !t.is_finite())
        {
            return Err(Error::InvalidInput(
                "forcing table times must be finite and strictly increasing".into(),
            ));
        }
        let width = n.unwrap_or(self.values[0].len());
        if self.values.iter().any(|v| v.len() != width) {
            return Err(Error::InvalidInput(format!(
                "forcing table values must have length {width}"
            )));
        }
        Ok(())
    }

    fn eval(&self, t: f64) -> Vec<C64> {
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            return self.values[0].clone();
        }
        if k == self.times.len() {
            return self.values[k - 1].clone();
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let w = (t - t0) / (t1 - t0);
        self.values[k - 1]
            .iter()
            .zip(&self.values[k])
            .map(|(a, b)| a * (1.0 - w) + b * w)
            .collect()
    }
}

impl Forcing {
    pub fn eval(&self, t: f64, n: usize) -> Vec<C64> {
        match self {
            Forcing::Zero => vec![C64::new(0.0, 0.0); n],
            Forcing::Constant(v) => v.clone(),
            Forcing::Sampled(s) => s.eval(t),
            Forcing::Custom(f) => f(t),
        }
    }

    fn check(&self, n: usize, grid: &[f64]) -> Result<()> {
        match self {
            Forcing::Zero | Forcing::Custom(_) => Ok(()),
            Forcing::Constant(v) if v.len() == n => Ok(()),
            Forcing::Constant(v) => Err(Error::InvalidInput(format!(
                "constant forcing has length {}, expected {n}",
                v.len()
            ))),
            Forcing::Sampled(s) => {
                s.validate(Some(n))?;
                let end = *grid.last().expect("grid checked non-empty");
                if s.times[0] > 0.0 || *s.times.last().unwrap() < end {
                    return Err(Error::InvalidInput(format!(
                        "forcing table covers [{}, {}], grid needs [0, {end}]",
                        s.times[0],
                        s.times.last().unwrap()
                    )));
                }
                Ok(())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    #[serde(rename = "x")]
    pub x_values: Vec<Vec<C64>>,
    #[serde(rename = "dx")]
    pub dx_values: Vec<Vec<C64>>,
    /// Largest norm of the finite-difference defect `x'' + B x' + C x - f`
    /// over interior grid points.
    pub residual_max: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IvpOptions {
    /// Simpson substeps per grid interval; must be even.
    pub substeps: usize,
}

impl Default for IvpOptions {
    fn default() -> Self {
        Self {
            substeps: DEFAULT_SUBSTEPS,
        }
    }
}

/// `n + 1` equally spaced points on `[0, t_end]`.
pub fn uniform_grid(t_end: f64, steps: usize) -> Result<Vec<f64>> {
    if steps == 0 || t_end <= 0.0 || !t_end.is_finite() {
        return Err(Error::InvalidGrid(format!(
            "need t_end > 0 and steps >= 1, got {t_end}, {steps}"
        )));
    }
    Ok((0..=steps)
        .map(|k| t_end * (k as f64 / steps as f64))
        .collect())
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    match grid.first() {
        None => return Err(Error::InvalidGrid("empty grid".into())),
        Some(&t0) if t0 != 0.0 => {
            return Err(Error::InvalidGrid(format!("grid starts at {t0}, not 0")))
        }
        _ => {}
    }
    if let Some(k) = grid
        .windows(2)
        .position(|w| w[1] <= w[0] || !w[1].is_finite())
    {
        return Err(Error::InvalidGrid(format!(
            "grid not strictly increasing at index {}: {} then {}",
            k + 1,
            grid[k],
            grid[k + 1]
        )));
    }
    Ok(())
}

fn is_uniform(grid: &[f64]) -> bool {
    let k = grid.len() - 1;
    if k == 0 {
        return true;
    }
    let end = grid[k];
    grid.iter()
        .enumerate()
        .all(|(j, &t)| (t - end * (j as f64 / k as f64)).abs() <= 1e-13 * end)
}

fn axpy(acc: &mut [C64], w: f64, v: &[C64]) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a += b * w;
    }
}

fn simpson_weight(i: usize, m: usize) -> f64 {
    if i == 0 || i == m {
        1.0
    } else if i % 2 == 1 {
        4.0
    } else {
        2.0
    }
}

/// Solves the initial value problem on `grid` through
/// `x = U' u0 + U (u1 + B u0) + (U * f)` and
/// `x' = U' u1 - U C u0 + (U' * f)`.
pub fn solve_ivp(
    pencil: &QuadraticPencil,
    pair: &SolventPair,
    u0: &[C64],
    u1: &[C64],
    forcing: &Forcing,
    grid: &[f64],
    opts: IvpOptions,
) -> Result<EvolutionResult> {
    let n = pencil.n();
    if u0.len() != n || u1.len() != n {
        return Err(Error::InvalidInput(format!(
            "initial vectors must have length {n}"
        )));
    }
    if opts.substeps == 0 || !opts.substeps.is_multiple_of(2) {
        return Err(Error::InvalidInput(format!(
            "substeps must be even and positive, got {}",
            opts.substeps
        )));
    }
    validate_grid(grid)?;
    forcing.check(n, grid)?;
    let prop = Propagator::new(pair)?;
    if prop.n() != n {
        return Err(Error::InvalidInput(
            "pair does not match pencil size".into(),
        ));
    }

    let shifted = {
        let bu0 = pencil.b().matvec(u0);
        u1.iter().zip(&bu0).map(|(a, b)| a + b).collect::<Vec<_>>()
    };
    let cu0 = pencil.c().matvec(u0);
    let homogeneous = |u: &ComplexMatrix, du: &ComplexMatrix| {
        let mut x = du.matvec(u0);
        axpy(&mut x, 1.0, &u.matvec(&shifted));
        let mut dx = du.matvec(u1);
        axpy(&mut dx, -1.0, &u.matvec(&cu0));
        (x, dx)
    };
    let forced = !matches!(forcing, Forcing::Zero);
    let m = opts.substeps;
    let k_last = grid.len() - 1;

    let (x_values, dx_values): (Vec<_>, Vec<_>) = if is_uniform(grid) && k_last > 0 {
        // Every argument t_k - s lands on the lattice l * delta.
        let delta = grid[k_last] / (k_last * m) as f64;
        let lattice = k_last * m;
        let ops: Vec<(ComplexMatrix, ComplexMatrix)> = if forced {
            (0..=lattice)
                .into_par_iter()
                .map(|l| prop.at(l as f64 * delta))
                .collect::<Result<_>>()?
        } else {
            (0..=k_last)
                .into_par_iter()
                .map(|k| prop.at(grid[k]))
                .collect::<Result<_>>()?
        };
        let stride = if forced { m } else { 1 };
        let f_nodes: Vec<Vec<C64>> = if forced {
            (0..=lattice)
                .map(|l| forcing.eval(l as f64 * delta, n))
                .collect()
        } else {
            Vec::new()
        };
        (0..=k_last)
            .into_par_iter()
            .map(|k| {
                let (u, du) = &ops[k * stride];
                let (mut x, mut dx) = homogeneous(u, du);
                if forced && k > 0 {
                    let top = k * m;
                    for l in 0..=top {
                        let w = simpson_weight(l, top) * delta / 3.0;
                        let (ul, dul) = &ops[top - l];
                        axpy(&mut x, w, &ul.matvec(&f_nodes[l]));
                        axpy(&mut dx, w, &dul.matvec(&f_nodes[l]));
                    }
                }
                (x, dx)
            })
            .collect::<Vec<_>>()
            .into_iter()
            .unzip()
    } else {
        let rows: Vec<(Vec<C64>, Vec<C64>)> = (0..=k_last)
            .into_par_iter()
            .map(|k| -> Result<_> {
                let t = grid[k];
                let (u, du) = prop.at(t)?;
                let (mut x, mut dx) = homogeneous(&u, &du);
                if forced {
                    for j in 0..k {
                        let h = (grid[j + 1] - grid[j]) / m as f64;
                        for i in 0..=m {
                            let s = if i == m {
                                grid[j + 1]
                            } else {
                                grid[j] + i as f64 * h
                            };
                            let (ui, dui) = prop.at(t - s)?;
                            let fs = forcing.eval(s, n);
                            let w = simpson_weight(i, m) * h / 3.0;
                            axpy(&mut x, w, &ui.matvec(&fs));
                            axpy(&mut dx, w, &dui.matvec(&fs));
                        }
                    }
                }
                Ok((x, dx))
            })
            .collect::<Result<_>>()?;
        rows.into_iter().unzip()
    };

    let residual_max = finite_difference_defect(pencil, forcing, grid, &x_values, &dx_values);
    Ok(EvolutionResult {
        times: grid.to_vec(),
        x_values,
        dx_values,
        residual_max,
    })
}

/// Max over interior points of `|x'' + B x' + C x - f|`, with `x''` from the
/// three-point second difference of `x`.
fn finite_difference_defect(
    pencil: &QuadraticPencil,
    forcing: &Forcing,
    grid: &[f64],
    x: &[Vec<C64>],
    dx: &[Vec<C64>],
) -> f64 {
    let n = pencil.n();
    (1..grid.len().saturating_sub(1))
        .map(|k| {
            let (hm, hp) = (grid[k] - grid[k - 1], grid[k + 1] - grid[k]);
            let mut r = forcing.eval(grid[k], n);
            r.iter_mut().for_each(|v| *v = -*v);
            for i in 0..n {
                let d2 =
                    2.0 * ((x[k + 1][i] - x[k][i]) / hp - (x[k][i] - x[k - 1][i]) / hm) / (hm + hp);
                r[i] += d2;
            }
            axpy(&mut r, 1.0, &pencil.b().matvec(&dx[k]));
            axpy(&mut r, 1.0, &pencil.c().matvec(&x[k]));
            vec_norm(&r)
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvent::Solvent;
    use crate::splitting::Splitting;

    fn scalar_pair(x: f64, z: f64) -> SolventPair {
        let wrap = |v: f64| Solvent {
            x: ComplexMatrix::diag_real(&[v]),
            x1: ComplexMatrix::identity(1),
            x2: ComplexMatrix::diag_real(&[v]),
            residual: 0.0,
            kappa_x1: 1.0,
            source_part: vec![],
        };
        SolventPair {
            x: wrap(x),
            z: wrap(z),
            kappa_diff: 1.0,
            splitting: Splitting::from_part_x(vec![0], 2).unwrap(),
        }
    }

    #[test]
    fn scalar_operators() {
        let (u, du) = evolution_operators(&scalar_pair(1.0, -1.0), 1.0).unwrap();
        assert!((u[(0, 0)].re - 1f64.sinh()).abs() < 1e-14);
        assert!((du[(0, 0)].re - 1f64.cosh()).abs() < 1e-14);
        let (u, _) = evolution_operators(&scalar_pair(2.0, 1.0), 1.0).unwrap();
        let e = std::f64::consts::E;
        assert!((u[(0, 0)].re - (e * e - e)).abs() < 1e-13);
        assert_eq!(
            check_initial_identities(&scalar_pair(1.0, -1.0)).unwrap(),
            (0.0, 0.0)
        );
    }

    #[test]
    fn grid_validation() {
        let p = QuadraticPencil::scalar(0.0, -1.0);
        let pair = scalar_pair(1.0, -1.0);
        let z = [C64::new(0.0, 0.0)];
        for bad in [
            vec![],
            vec![0.1, 0.2],
            vec![0.0, 0.5, 0.5],
            vec![0.0, 1.0, 0.5],
        ] {
            let r = solve_ivp(
                &p,
                &pair,
                &z,
                &z,
                &Forcing::Zero,
                &bad,
                IvpOptions::default(),
            );
            assert!(matches!(r, Err(Error::InvalidGrid(_))), "{bad:?}");
        }
        assert!(uniform_grid(0.0, 4).is_err());
        assert_eq!(
            uniform_grid(1.0, 4).unwrap(),
            vec![0.0, 0.25, 0.5, 0.75, 1.0]
        );
    }

    #[test]
    fn sampled_forcing_interpolates() {
        let s = SampledForcing::new(
            vec![0.0, 1.0],
            vec![vec![C64::new(0.0, 0.0)], vec![C64::new(2.0, -2.0)]],
        )
        .unwrap();
        assert_eq!(s.eval(0.25)[0], C64::new(0.5, -0.5));
        assert_eq!(s.eval(1.0)[0], C64::new(2.0, -2.0));
        assert!(SampledForcing::new(vec![0.0, 0.0], vec![vec![], vec![]]).is_err());
    }

    #[test]
    fn sinh_trajectory_uniform_and_not() {
        let p = QuadraticPencil::scalar(0.0, -1.0);
        let pair = scalar_pair(1.0, -1.0);
        let (u0, u1) = ([C64::new(0.0, 0.0)], [C64::new(1.0, 0.0)]);
        for grid in [
            uniform_grid(1.0, 10).unwrap(),
            vec![0.0, 0.1, 0.35, 0.4, 1.0],
        ] {
            let r = solve_ivp(
                &p,
                &pair,
                &u0,
                &u1,
                &Forcing::Zero,
                &grid,
                IvpOptions::default(),
            )
            .unwrap();
            for (t, x) in r.times.iter().zip(&r.x_values) {
                assert!((x[0].re - t.sinh()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn constant_forcing_scalar_closed_form() {
        // x'' - x = 1, x(0) = x'(0) = 0 gives x = cosh t - 1. The coarse
        // non-uniform interval (length 0.55) costs about 3e-10 in Simpson error.
        let p = QuadraticPencil::scalar(0.0, -1.0);
        let pair = scalar_pair(1.0, -1.0);
        let zero = [C64::new(0.0, 0.0)];
        let f = Forcing::Constant(vec![C64::new(1.0, 0.0)]);
        for grid in [uniform_grid(1.0, 8).unwrap(), vec![0.0, 0.3, 0.45, 1.0]] {
            let r = solve_ivp(&p, &pair, &zero, &zero, &f, &grid, IvpOptions::default()).unwrap();
            for (k, t) in r.times.iter().enumerate() {
                assert!((r.x_values[k][0].re - (t.cosh() - 1.0)).abs() < 1e-9);
                assert!((r.dx_values[k][0].re - t.sinh()).abs() < 1e-9);
            }
        }
    }
}
