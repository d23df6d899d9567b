use super::{ComplexMatrix, C64};

const MAX_SWEEPS: usize = 80;

/// Singular values in descending order, by one-sided (Hestenes) Jacobi.
///
/// Columns are orthogonalised pairwise; the singular values are the final
/// column norms. Small singular values come out with good absolute accuracy
/// relative to `sigma_max`, which is what the condition numbers need.
pub fn singular_values(a: &ComplexMatrix) -> Vec<f64> {
    // Work on the orientation with at least as many rows as columns.
    let w = if a.rows() >= a.cols() {
        a.clone()
    } else {
        a.adjoint()
    };
    let n = w.cols();
    let mut cols: Vec<Vec<C64>> = (0..n).map(|j| w.column(j)).collect();

    let eps = f64::EPSILON;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (alpha, beta, gamma) = {
                    let (cp, cq) = (&cols[p], &cols[q]);
                    let alpha: f64 = cp.iter().map(|z| z.norm_sqr()).sum();
                    let beta: f64 = cq.iter().map(|z| z.norm_sqr()).sum();
                    let gamma: C64 = cp.iter().zip(cq).map(|(x, y)| x.conj() * y).sum();
                    (alpha, beta, gamma)
                };
                let g = gamma.norm();
                if g == 0.0 || g <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                // Rephase column q so that the coupling becomes real, then
                // apply a real Jacobi rotation.
                let phase = gamma.conj() / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (left, right) = cols.split_at_mut(q);
                for (xp, xq) in left[p].iter_mut().zip(right[0].iter_mut()) {
                    let x = *xp;
                    let y = *xq * phase;
                    *xp = x * c - y * s;
                    *xq = x * s + y * c;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut s: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}
