use super::{ComplexMatrix, Lu};
use crate::error::{Error, Result};

/// `matrix_exp` refuses inputs whose 2-norm exceeds this.
pub const EXP_NORM_LIMIT: f64 = 1e8;

// Scaling-and-squaring with diagonal Pade approximants of degree 3..13
// (Higham 2005). Thresholds are for the 1-norm.
const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.53939833006323e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
const THETA_13: f64 = 5.371920351148152e0;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn lin_comb(terms: &[(f64, &ComplexMatrix)]) -> ComplexMatrix {
    let mut out = terms[0].1.scale_real(terms[0].0);
    for (c, m) in &terms[1..] {
        out = &out + &m.scale_real(*c);
    }
    out
}

/// Matrix exponential by scaling and squaring with a diagonal Pade
/// approximant.
pub fn matrix_exp(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() {
        return Err(Error::InvalidInput(
            "matrix exponential needs a square matrix".into(),
        ));
    }
    if !a.is_finite() {
        return Err(Error::InvalidInput("non-finite entries".into()));
    }
    // Frobenius bounds the 2-norm from above; only pay for the SVD when needed.
    if a.frobenius_norm() > EXP_NORM_LIMIT {
        let norm = a.spectral_norm();
        if norm > EXP_NORM_LIMIT {
            return Err(Error::OverflowRisk { norm });
        }
    }
    let n = a.rows();
    let id = ComplexMatrix::identity(n);
    let norm1 = a.one_norm();
    if norm1 == 0.0 {
        return Ok(id);
    }

    for (m, theta) in THETA {
        if norm1 <= theta {
            let coeffs: &[f64] = match m {
                3 => &B3,
                5 => &B5,
                7 => &B7,
                _ => &B9,
            };
            return Ok(pade_low(a, coeffs, &id));
        }
    }

    let s = (norm1 / THETA_13).log2().ceil().max(0.0) as i32;
    let scaled = a.scale_real(2f64.powi(-s));
    let mut r = pade13(&scaled, &id);
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

fn solve_pade(u: &ComplexMatrix, v: &ComplexMatrix) -> ComplexMatrix {
    let p = v + u;
    let q = v - u;
    // q is well conditioned inside the theta bounds.
    Lu::factor(&q)
        .expect("Pade denominator is nonsingular within theta bounds")
        .solve(&p)
}

fn pade_low(a: &ComplexMatrix, b: &[f64], id: &ComplexMatrix) -> ComplexMatrix {
    let a2 = a * a;
    let mut powers = vec![id.clone(), a2.clone()];
    while powers.len() < b.len() / 2 {
        let next = powers.last().unwrap() * &a2;
        powers.push(next);
    }
    let mut u_inner = ComplexMatrix::zeros(a.rows(), a.cols());
    let mut v = ComplexMatrix::zeros(a.rows(), a.cols());
    for (k, p) in powers.iter().enumerate() {
        u_inner = &u_inner + &p.scale_real(b[2 * k + 1]);
        v = &v + &p.scale_real(b[2 * k]);
    }
    let u = a * &u_inner;
    solve_pade(&u, &v)
}

fn pade13(a: &ComplexMatrix, id: &ComplexMatrix) -> ComplexMatrix {
    let b = &B13;
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_hi = lin_comb(&[(b[13], &a6), (b[11], &a4), (b[9], &a2)]);
    let u_lo = lin_comb(&[(b[7], &a6), (b[5], &a4), (b[3], &a2), (b[1], id)]);
    let u = a * &(&(&a6 * &u_hi) + &u_lo);
    let v_hi = lin_comb(&[(b[12], &a6), (b[10], &a4), (b[8], &a2)]);
    let v_lo = lin_comb(&[(b[6], &a6), (b[4], &a4), (b[2], &a2), (b[0], id)]);
    let v = &(&a6 * &v_hi) + &v_lo;
    solve_pade(&u, &v)
}
