use std::cmp::Ordering;

use super::{vec_norm, ComplexMatrix, C64};
use crate::error::{Error, Result};

/// Default bound on the per-pair backward error `||Av - lambda v|| / ||A||`.
pub const DEFAULT_EIG_TOL: f64 = 1e-10;

/// Size cap for the dense eigensolver.
pub const MAX_EIG_DIM: usize = 64;

/// A dense nonsymmetric eigensolver backend.
///
/// Implementations return eigenvalues and (not necessarily normalised)
/// eigenvectors as matrix columns, in any order. Normalisation, ordering and
/// residual checks are done by [`eigenpairs_with`].
pub trait EigenSolver: Sync {
    fn solve(&self, a: &ComplexMatrix) -> Result<(Vec<C64>, ComplexMatrix)>;
}

/// Hessenberg reduction followed by implicitly shifted complex QR, with
/// eigenvectors recovered from the Schur form by back substitution.
#[derive(Clone, Copy, Debug, Default)]
pub struct HessenbergQr;

#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    /// Sorted by real part, then imaginary part.
    pub values: Vec<C64>,
    /// Column `j` is a unit eigenvector for `values[j]`.
    pub vectors: ComplexMatrix,
    /// `||A v_j - lambda_j v_j||_2`.
    pub residuals: Vec<f64>,
}

impl EigenDecomposition {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn vector(&self, j: usize) -> Vec<C64> {
        self.vectors.column(j)
    }
}

pub fn eigenpairs(a: &ComplexMatrix) -> Result<EigenDecomposition> {
    eigenpairs_with(a, &HessenbergQr, DEFAULT_EIG_TOL)
}

pub fn eigenpairs_with(
    a: &ComplexMatrix,
    solver: &dyn EigenSolver,
    tol_eig: f64,
) -> Result<EigenDecomposition> {
    if !a.is_square() {
        return Err(Error::InvalidInput(
            "eigenpairs need a square matrix".into(),
        ));
    }
    if a.rows() > MAX_EIG_DIM {
        return Err(Error::InvalidInput(format!(
            "matrix of order {} exceeds the {MAX_EIG_DIM} cap",
            a.rows()
        )));
    }
    if !a.is_finite() {
        return Err(Error::InvalidInput("non-finite entries".into()));
    }
    let m = a.rows();
    let (values, vectors) = solver.solve(a)?;

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| cmp_lex(values[i], values[j]).then(i.cmp(&j)));

    let norm_a = a.spectral_norm();
    let mut out_vals = Vec::with_capacity(m);
    let mut out_vecs = ComplexMatrix::zeros(m, m);
    let mut residuals = Vec::with_capacity(m);
    for (slot, &j) in order.iter().enumerate() {
        let v = normalize_phase(vectors.column(j));
        let lambda = values[j];
        let av = a.matvec(&v);
        let r: Vec<C64> = av.iter().zip(&v).map(|(x, y)| x - lambda * y).collect();
        let res = vec_norm(&r);
        if res > tol_eig * norm_a.max(f64::MIN_POSITIVE) {
            return Err(Error::EigenResidual {
                index: slot,
                residual: res,
            });
        }
        out_vals.push(lambda);
        out_vecs.set_column(slot, &v);
        residuals.push(res);
    }
    Ok(EigenDecomposition {
        values: out_vals,
        vectors: out_vecs,
        residuals,
    })
}

fn cmp_lex(a: C64, b: C64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// Unit Euclidean norm, with the first largest-magnitude entry made real
/// and positive so the arbitrary phase is fixed deterministically.
fn normalize_phase(mut v: Vec<C64>) -> Vec<C64> {
    let norm = vec_norm(&v);
    let (k, _) = v.iter().enumerate().fold((0, -1.0), |best, (i, z)| {
        if z.norm() > best.1 {
            (i, z.norm())
        } else {
            best
        }
    });
    let phase = v[k].conj() / v[k].norm();
    for z in v.iter_mut() {
        *z = *z * phase / norm;
    }
    v[k] = C64::new(v[k].re, 0.0);
    v
}

impl EigenSolver for HessenbergQr {
    fn solve(&self, a: &ComplexMatrix) -> Result<(Vec<C64>, ComplexMatrix)> {
        let (t, z) = schur(a)?;
        let n = t.rows();
        let values: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();
        let y = triangular_eigenvectors(&t);
        Ok((values, &z * &y))
    }
}

/// Unitary reduction to upper Hessenberg form: returns `(H, Q)` with
/// `A = Q H Q^H`.
fn hessenberg(a: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let n = a.rows();
    let mut h = a.clone();
    let mut q = ComplexMatrix::identity(n);
    for k in 0..n.saturating_sub(2) {
        let x: Vec<C64> = ((k + 1)..n).map(|i| h[(i, k)]).collect();
        let tail: f64 = x[1..].iter().map(|z| z.norm_sqr()).sum();
        if tail == 0.0 {
            continue;
        }
        let xnorm = vec_norm(&x);
        let phase = if x[0].norm() == 0.0 {
            C64::new(1.0, 0.0)
        } else {
            x[0] / x[0].norm()
        };
        let alpha = -phase * xnorm;
        let mut v = x.clone();
        v[0] -= alpha;
        let vn = vec_norm(&v);
        for z in v.iter_mut() {
            *z /= vn;
        }
        // H <- P H with P = 1 - 2 v v^H acting on rows k+1..n.
        for j in 0..n {
            let s: C64 = v
                .iter()
                .enumerate()
                .map(|(r, vr)| vr.conj() * h[(k + 1 + r, j)])
                .sum();
            for (r, vr) in v.iter().enumerate() {
                h[(k + 1 + r, j)] -= 2.0 * vr * s;
            }
        }
        // H <- H P and Q <- Q P acting on columns k+1..n.
        for mat in [&mut h, &mut q] {
            for i in 0..n {
                let s: C64 = v
                    .iter()
                    .enumerate()
                    .map(|(c, vc)| mat[(i, k + 1 + c)] * vc)
                    .sum();
                for (c, vc) in v.iter().enumerate() {
                    mat[(i, k + 1 + c)] -= 2.0 * s * vc.conj();
                }
            }
        }
        h[(k + 1, k)] = alpha;
        for i in (k + 2)..n {
            h[(i, k)] = C64::new(0.0, 0.0);
        }
    }
    (h, q)
}

/// Rotation `[c s; -conj(s) c]` mapping `(a, b)` to `(r, 0)`.
fn givens(a: C64, b: C64) -> (f64, C64, C64) {
    let an = a.norm();
    let bn = b.norm();
    if bn == 0.0 {
        return (1.0, C64::new(0.0, 0.0), a);
    }
    if an == 0.0 {
        return (0.0, C64::new(1.0, 0.0), b);
    }
    let norm = an.hypot(bn);
    let ph = a / an;
    (an / norm, ph * b.conj() / norm, ph * norm)
}

fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half = (a + d) * 0.5;
    let p = (a - d) * 0.5;
    let disc = (p * p + b * c).sqrt();
    let (l1, l2) = (half + disc, half - disc);
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Complex Schur form `A = Z T Z^H` via single-shift QR on the Hessenberg form.
fn schur(a: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let n = a.rows();
    let (mut h, mut z) = hessenberg(a);
    if n == 1 {
        return Ok((h, z));
    }
    let eps = f64::EPSILON;
    let small = f64::MIN_POSITIVE * (n as f64) / eps;
    let hnorm = h.frobenius_norm().max(f64::MIN_POSITIVE);
    let max_sweeps = 30 * n;
    let mut sweeps = 0;
    let mut since_deflation = 0;
    let mut hi = n - 1;

    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let sub = h[(l, l - 1)].norm();
            let mut scale = h[(l, l)].norm() + h[(l - 1, l - 1)].norm();
            if scale == 0.0 {
                scale = hnorm;
            }
            if sub <= eps * scale || sub < small {
                h[(l, l - 1)] = C64::new(0.0, 0.0);
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            since_deflation = 0;
            continue;
        }

        sweeps += 1;
        since_deflation += 1;
        if sweeps > max_sweeps {
            return Err(Error::Convergence { sweeps: max_sweeps });
        }
        let mu = if since_deflation % 10 == 0 {
            // Exceptional shift to break cycles.
            h[(hi, hi)] + C64::new(0.75 * h[(hi, hi - 1)].norm(), 0.0)
        } else {
            wilkinson_shift(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            )
        };

        for k in l..hi {
            let (x, y) = if k == l {
                (h[(l, l)] - mu, h[(l + 1, l)])
            } else {
                (h[(k, k - 1)], h[(k + 1, k - 1)])
            };
            let (c, s, r) = givens(x, y);
            if k > l {
                h[(k, k - 1)] = r;
                h[(k + 1, k - 1)] = C64::new(0.0, 0.0);
            }
            for j in k..n {
                let (p, q) = (h[(k, j)], h[(k + 1, j)]);
                h[(k, j)] = p * c + s * q;
                h[(k + 1, j)] = -s.conj() * p + q * c;
            }
            let last = (k + 2).min(hi);
            for i in 0..=last {
                let (p, q) = (h[(i, k)], h[(i, k + 1)]);
                h[(i, k)] = p * c + q * s.conj();
                h[(i, k + 1)] = -p * s + q * c;
            }
            for i in 0..n {
                let (p, q) = (z[(i, k)], z[(i, k + 1)]);
                z[(i, k)] = p * c + q * s.conj();
                z[(i, k + 1)] = -p * s + q * c;
            }
        }
    }
    for i in 1..n {
        for j in 0..i {
            h[(i, j)] = C64::new(0.0, 0.0);
        }
    }
    Ok((h, z))
}

/// Eigenvectors of an upper triangular matrix, column `k` for `T[k,k]`.
fn triangular_eigenvectors(t: &ComplexMatrix) -> ComplexMatrix {
    let n = t.rows();
    let smin = (f64::EPSILON * t.frobenius_norm()).max(f64::MIN_POSITIVE);
    let mut y = ComplexMatrix::zeros(n, n);
    for k in 0..n {
        let lambda = t[(k, k)];
        let mut col = vec![C64::new(0.0, 0.0); k + 1];
        col[k] = C64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let s: C64 = ((i + 1)..=k).map(|j| t[(i, j)] * col[j]).sum();
            let mut d = t[(i, i)] - lambda;
            if d.norm() < smin {
                d = C64::new(smin, 0.0);
            }
            col[i] = -s / d;
            let big = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
            if big > 1e150 {
                for z in col.iter_mut() {
                    *z /= big;
                }
            }
        }
        for (i, z) in col.into_iter().enumerate() {
            y[(i, k)] = z;
        }
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_unit_columns(d: &EigenDecomposition) {
        for j in 0..d.len() {
            assert!((vec_norm(&d.vector(j)) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_swap_matrix() {
        let a = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let d = eigenpairs(&a).unwrap();
        assert!((d.values[0] - C64::new(-1.0, 0.0)).norm() < 1e-14);
        assert!((d.values[1] - C64::new(1.0, 0.0)).norm() < 1e-14);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // Phase-insensitive comparison: |<v, expected>| = 1.
        let v0 = d.vector(0);
        let dot0 = (v0[0] * s - v0[1] * s).norm();
        assert!((dot0 - 1.0).abs() < 1e-14);
        let v1 = d.vector(1);
        let dot1 = (v1[0] * s + v1[1] * s).norm();
        assert!((dot1 - 1.0).abs() < 1e-14);
        assert_unit_columns(&d);
    }

    #[test]
    fn one_by_one() {
        let a = ComplexMatrix::diag_real(&[5.0]);
        let d = eigenpairs(&a).unwrap();
        assert_eq!(d.values, vec![C64::new(5.0, 0.0)]);
        assert_eq!(d.vector(0), vec![C64::new(1.0, 0.0)]);
    }

    #[test]
    fn rejects_oversized_and_rectangular() {
        assert!(eigenpairs(&ComplexMatrix::zeros(2, 3)).is_err());
        assert!(eigenpairs(&ComplexMatrix::identity(65)).is_err());
    }

    #[test]
    fn triangular_input_and_ordering() {
        let a = ComplexMatrix::from_rows(&[
            &[C64::new(2.0, 1.0), C64::new(1.0, 0.0), C64::new(0.0, 3.0)],
            &[C64::new(0.0, 0.0), C64::new(-1.0, 0.0), C64::new(1.0, 1.0)],
            &[C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(2.0, -1.0)],
        ]);
        let d = eigenpairs(&a).unwrap();
        let expect = [C64::new(-1.0, 0.0), C64::new(2.0, -1.0), C64::new(2.0, 1.0)];
        for (got, want) in d.values.iter().zip(expect) {
            assert!((got - want).norm() < 1e-13, "{got} vs {want}");
        }
        assert_unit_columns(&d);
    }

    #[test]
    fn hessenberg_is_unitary_similarity() {
        let a = ComplexMatrix::from_fn(5, 5, |i, j| {
            C64::new(
                (i * 7 + j * 3) as f64 % 5.0 - 2.0,
                (i + 2 * j) as f64 % 3.0 - 1.0,
            )
        });
        let (h, q) = hessenberg(&a);
        let back = &(&q * &h) * &q.adjoint();
        assert!((&back - &a).spectral_norm() < 1e-13);
        for i in 2..5 {
            for j in 0..(i - 1) {
                assert_eq!(h[(i, j)], C64::new(0.0, 0.0));
            }
        }
    }
}
