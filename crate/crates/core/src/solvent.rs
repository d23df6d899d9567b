//! Right solvents `X = X2 X1^{-1}` built from `n` companion eigenvectors,
//! complete pairs, and the identities a complete pair must satisfy.

use crate::error::{Error, Result};
use crate::matcore::{condition_number, eigenpairs, inverse, singular_values, ComplexMatrix, C64};
use crate::pencil::{QuadraticPencil, SPECTRUM_TOL};
use crate::splitting::{EigenPair, Splitting};

/// Default cap on `kappa(X1)` and `kappa(X - Z)`.
pub const DEFAULT_KAPPA_CAP: f64 = 1e12;

/// Default relative residual bound for accepting a solvent.
pub const DEFAULT_SOLVENT_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolventOptions {
    pub kappa_cap: f64,
    pub residual_tol: f64,
}

impl Default for SolventOptions {
    fn default() -> Self {
        Self {
            kappa_cap: DEFAULT_KAPPA_CAP,
            residual_tol: DEFAULT_SOLVENT_TOL,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Solvent {
    pub x: ComplexMatrix,
    /// Top `n` rows of the stacked eigenvectors.
    pub x1: ComplexMatrix,
    /// Bottom `n` rows of the stacked eigenvectors.
    pub x2: ComplexMatrix,
    /// `||X^2 + B X + C||_2`.
    pub residual: f64,
    pub kappa_x1: f64,
    pub source_part: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct SolventPair {
    pub x: Solvent,
    pub z: Solvent,
    pub kappa_diff: f64,
    pub splitting: Splitting,
}

impl SolventPair {
    pub fn difference(&self) -> ComplexMatrix {
        &self.x.x - &self.z.x
    }
}

/// `||X^2 + B X + C||_2`.
pub fn solvent_residual(pencil: &QuadraticPencil, x: &ComplexMatrix) -> f64 {
    let r = &(&(x * x) + &(pencil.b() * x)) + pencil.c();
    r.spectral_norm()
}

/// Scale `||X||^2 + ||B|| ||X|| + ||C||` used for the relative residual.
pub fn residual_scale(pencil: &QuadraticPencil, x: &ComplexMatrix) -> f64 {
    let nx = x.spectral_norm();
    nx * nx + pencil.b().spectral_norm() * nx + pencil.c().spectral_norm()
}

/// Stacks the eigenvectors of `part` (ascending index) into `[X1; X2]` and
/// forms `X = X2 X1^{-1}`.
pub fn solvent_from_part(
    pencil: &QuadraticPencil,
    pairs: &[EigenPair],
    part: &[usize],
    opts: &SolventOptions,
) -> Result<Solvent> {
    let n = pencil.n();
    if part.len() != n || pairs.len() != 2 * n {
        return Err(Error::InvalidInput(format!(
            "part of size {} for a pencil of order {n} with {} eigenpairs",
            part.len(),
            pairs.len()
        )));
    }
    let mut sorted = part.to_vec();
    sorted.sort_unstable();
    let mut x1 = ComplexMatrix::zeros(n, n);
    let mut x2 = ComplexMatrix::zeros(n, n);
    for (col, &idx) in sorted.iter().enumerate() {
        let v = &pairs
            .get(idx)
            .ok_or_else(|| Error::InvalidInput(format!("eigenpair index {idx} out of range")))?
            .vector;
        for i in 0..n {
            x1[(i, col)] = v[i];
            x2[(i, col)] = v[n + i];
        }
    }
    let kappa_x1 = condition_number(&x1)?;
    if kappa_x1.is_nan() || kappa_x1 > opts.kappa_cap {
        return Err(Error::DegeneratePart { kappa: kappa_x1 });
    }
    let x1_inv = inverse(&x1).map_err(|_| Error::DegeneratePart { kappa: kappa_x1 })?;
    let x = &x2 * &x1_inv;
    let residual = solvent_residual(pencil, &x);
    let bound = opts.residual_tol * residual_scale(pencil, &x);
    if residual.is_nan() || residual > bound {
        return Err(Error::ResidualTooLarge { residual, bound });
    }
    Ok(Solvent {
        x,
        x1,
        x2,
        residual,
        kappa_x1,
        source_part: sorted,
    })
}

/// Builds both solvents of a splitting and checks completeness.
pub fn make_pair(
    pencil: &QuadraticPencil,
    pairs: &[EigenPair],
    splitting: &Splitting,
    opts: &SolventOptions,
) -> Result<SolventPair> {
    let x = solvent_from_part(pencil, pairs, &splitting.part_x, opts)?;
    let z = solvent_from_part(pencil, pairs, &splitting.part_z, opts)?;
    let kappa_diff = condition_number(&(&x.x - &z.x))?;
    if kappa_diff.is_nan() || kappa_diff > opts.kappa_cap {
        return Err(Error::IncompletePair { kappa: kappa_diff });
    }
    Ok(SolventPair {
        x,
        z,
        kappa_diff,
        splitting: splitting.clone(),
    })
}

/// Max over samples of `||L(lambda) - (lambda + X + B)(lambda - X)|| / max(1, |lambda|^2)`.
pub fn verify_factorization(pencil: &QuadraticPencil, x: &ComplexMatrix, samples: &[C64]) -> f64 {
    samples
        .iter()
        .map(|&lambda| {
            let left = (x + pencil.b()).shift_diagonal(lambda);
            let right = (-x).shift_diagonal(lambda);
            let defect = &pencil.evaluate(lambda) - &(&left * &right);
            defect.spectral_norm() / lambda.norm_sqr().max(1.0)
        })
        .fold(0.0, f64::max)
}

fn shifted_resolvent(m: &ComplexMatrix, lambda: C64) -> Result<ComplexMatrix> {
    let a = (-m).shift_diagonal(lambda);
    let s = singular_values(&a);
    let scale = m.spectral_norm().max(lambda.norm()).max(1.0);
    if s[s.len() - 1] < SPECTRUM_TOL * scale {
        return Err(Error::SpectrumPoint { lambda });
    }
    inverse(&a).map_err(|_| Error::SpectrumPoint { lambda })
}

/// Max relative defect of
/// `L(lambda)^{-1} = ((lambda - X)^{-1} - (lambda - Z)^{-1}) (X - Z)^{-1}`.
pub fn verify_partial_fractions(
    pencil: &QuadraticPencil,
    pair: &SolventPair,
    samples: &[C64],
) -> Result<f64> {
    let diff_inv = inverse(&pair.difference())?;
    let mut worst: f64 = 0.0;
    for &lambda in samples {
        let rx = shifted_resolvent(&pair.x.x, lambda)?;
        let rz = shifted_resolvent(&pair.z.x, lambda)?;
        let r = pencil.resolvent(lambda)?;
        let rhs = &(&rx - &rz) * &diff_inv;
        worst = worst.max((&r - &rhs).spectral_norm() / r.spectral_norm());
    }
    Ok(worst)
}

/// Minimum-cost perfect matching on a square cost matrix (Hungarian
/// algorithm); returns `assign[row] = col`.
fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let inf = f64::INFINITY;
    // 1-based potentials, classic O(n^3) formulation.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            assign[p[j] - 1] = j - 1;
        }
    }
    assign
}

/// Largest matched distance between two equally sized multisets under the
/// minimum-total-distance assignment.
pub fn matched_distance(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let cost: Vec<Vec<f64>> = a
        .iter()
        .map(|x| b.iter().map(|y| (x - y).norm()).collect())
        .collect();
    let assign = min_cost_assignment(&cost);
    assign
        .iter()
        .enumerate()
        .map(|(i, &j)| cost[i][j])
        .fold(0.0, f64::max)
}

/// Distance between the companion spectrum and `sigma(X) U sigma(Z)`.
pub fn spectrum_union_defect(pencil: &QuadraticPencil, pair: &SolventPair) -> Result<f64> {
    let companion = eigenpairs(&pencil.companion_matrix())?.values;
    let mut union = eigenpairs(&pair.x.x)?.values;
    union.extend(eigenpairs(&pair.z.x)?.values);
    Ok(matched_distance(&companion, &union))
}

/// Smallest distance between an eigenvalue of `X` and one of `Z`.
pub fn spectral_gap(pair: &SolventPair) -> Result<f64> {
    let ex = eigenpairs(&pair.x.x)?.values;
    let ez = eigenpairs(&pair.z.x)?.values;
    Ok(ex
        .iter()
        .flat_map(|a| ez.iter().map(move |b| (a - b).norm()))
        .fold(f64::INFINITY, f64::min))
}
