//! Extended-precision recomputation of `U(1)` and the relative error of the
//! double-precision result.

use std::cmp::Ordering;

use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{ComplexMatrix, C64};

pub type BigFloat = FBig<HalfEven, 2>;

/// Default working precision, in decimal digits.
pub const DEFAULT_DIGITS: u32 = 100;
/// Smallest accepted working precision.
pub const MIN_DIGITS: u32 = 30;
/// Binary guard digits on top of the requested decimal precision.
const GUARD_BITS: usize = 64;

/// Binary precision used for `digits` decimal digits.
pub fn precision_bits(digits: u32) -> usize {
    (digits as f64 * std::f64::consts::LOG2_10).ceil() as usize + GUARD_BITS
}

fn exact(x: f64, bits: usize) -> BigFloat {
    BigFloat::try_from(x)
        .expect("finite double")
        .with_precision(bits)
        .value()
}

fn int(k: u64, bits: usize) -> BigFloat {
    BigFloat::from(k).with_precision(bits).value()
}

#[derive(Clone, Debug, PartialEq)]
pub struct BigComplex {
    pub re: BigFloat,
    pub im: BigFloat,
}

impl BigComplex {
    fn zero(bits: usize) -> Self {
        Self {
            re: exact(0.0, bits),
            im: exact(0.0, bits),
        }
    }

    fn from_c64(z: C64, bits: usize) -> Self {
        Self {
            re: exact(z.re, bits),
            im: exact(z.im, bits),
        }
    }

    pub fn to_c64(&self) -> C64 {
        C64::new(self.re.to_f64().value(), self.im.to_f64().value())
    }

    fn add(&self, o: &Self) -> Self {
        Self {
            re: &self.re + &o.re,
            im: &self.im + &o.im,
        }
    }

    fn sub(&self, o: &Self) -> Self {
        Self {
            re: &self.re - &o.re,
            im: &self.im - &o.im,
        }
    }

    fn mul(&self, o: &Self) -> Self {
        Self {
            re: &self.re * &o.re - &self.im * &o.im,
            im: &self.re * &o.im + &self.im * &o.re,
        }
    }

    fn scale(&self, s: &BigFloat) -> Self {
        Self {
            re: &self.re * s,
            im: &self.im * s,
        }
    }

    fn norm_sqr(&self) -> BigFloat {
        &self.re * &self.re + &self.im * &self.im
    }

    fn div(&self, o: &Self) -> Self {
        let d = o.norm_sqr();
        Self {
            re: (&self.re * &o.re + &self.im * &o.im) / &d,
            im: (&self.im * &o.re - &self.re * &o.im) / &d,
        }
    }

    fn is_zero(&self) -> bool {
        self.re == BigFloat::ZERO && self.im == BigFloat::ZERO
    }

    /// Real part rounded to `decimals` places after the point.
    pub fn re_fixed(&self, decimals: usize) -> String {
        let mag = self.re.to_f64().value().abs();
        let int_digits = if mag >= 1.0 {
            mag.log10().floor() as usize + 1
        } else {
            1
        };
        let rounded = self
            .re
            .clone()
            .with_base_and_precision::<10>(decimals + int_digits)
            .value();
        format!("{rounded:.decimals$}")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BigComplexMatrix {
    rows: usize,
    cols: usize,
    digits: u32,
    data: Vec<BigComplex>,
}

/// Exact embedding of a double matrix; every entry keeps its binary value.
pub fn promote(a: &ComplexMatrix, digits: u32) -> Result<BigComplexMatrix> {
    if digits < MIN_DIGITS {
        return Err(Error::InvalidInput(format!(
            "precision must be at least {MIN_DIGITS} digits, got {digits}"
        )));
    }
    let bits = precision_bits(digits);
    Ok(BigComplexMatrix {
        rows: a.rows(),
        cols: a.cols(),
        digits,
        data: a
            .data()
            .iter()
            .map(|&z| BigComplex::from_c64(z, bits))
            .collect(),
    })
}

/// Rounds every entry to the nearest double.
pub fn demote(a: &BigComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::new(
        a.rows,
        a.cols,
        a.data.iter().map(BigComplex::to_c64).collect(),
    )
    .expect("shape is preserved")
}

impl BigComplexMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn digits(&self) -> u32 {
        self.digits
    }

    fn bits(&self) -> usize {
        precision_bits(self.digits)
    }

    pub fn get(&self, i: usize, j: usize) -> &BigComplex {
        &self.data[i * self.cols + j]
    }

    fn identity(n: usize, digits: u32) -> Self {
        let bits = precision_bits(digits);
        let mut data = vec![BigComplex::zero(bits); n * n];
        for i in 0..n {
            data[i * n + i] = BigComplex::from_c64(C64::new(1.0, 0.0), bits);
        }
        Self {
            rows: n,
            cols: n,
            digits,
            data,
        }
    }

    fn zip(&self, o: &Self, f: impl Fn(&BigComplex, &BigComplex) -> BigComplex) -> Self {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols), "shape mismatch");
        Self {
            rows: self.rows,
            cols: self.cols,
            digits: self.digits.max(o.digits),
            data: self
                .data
                .iter()
                .zip(&o.data)
                .map(|(a, b)| f(a, b))
                .collect(),
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        self.zip(o, BigComplex::add)
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.zip(o, BigComplex::sub)
    }

    pub fn matmul(&self, o: &Self) -> Self {
        assert_eq!(self.cols, o.rows, "shape mismatch");
        let bits = self.bits().max(o.bits());
        let mut data = Vec::with_capacity(self.rows * o.cols);
        for i in 0..self.rows {
            for j in 0..o.cols {
                let mut acc = BigComplex::zero(bits);
                for k in 0..self.cols {
                    acc = acc.add(&self.get(i, k).mul(o.get(k, j)));
                }
                data.push(acc);
            }
        }
        Self {
            rows: self.rows,
            cols: o.cols,
            digits: self.digits.max(o.digits),
            data,
        }
    }

    fn scale(&self, s: &BigFloat) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            digits: self.digits,
            data: self.data.iter().map(|z| z.scale(s)).collect(),
        }
    }

    /// Largest `|re| + |im|` over entries, as a double.
    fn max_abs_f64(&self) -> f64 {
        self.data
            .iter()
            .map(|z| z.re.to_f64().value().abs() + z.im.to_f64().value().abs())
            .fold(0.0, f64::max)
    }

    /// Gauss-Jordan inversion with partial pivoting. A pivot below
    /// `10^-digits` times the largest entry counts as singular.
    pub fn inverse(&self) -> Result<Self> {
        assert_eq!(self.rows, self.cols, "inverse of a non-square matrix");
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n, self.digits);
        let floor = {
            let m = exact(self.max_abs_f64(), self.bits());
            let tiny = exact(
                10f64.powi(-(self.digits as i32)).max(f64::MIN_POSITIVE),
                self.bits(),
            );
            let t = &m * &tiny;
            &t * &t
        };
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| {
                    a.get(i, k)
                        .norm_sqr()
                        .partial_cmp(&a.get(j, k).norm_sqr())
                        .unwrap_or(Ordering::Equal)
                        .then(j.cmp(&i))
                })
                .expect("non-empty range");
            let piv_mag = a.get(p, k).norm_sqr();
            if a.get(p, k).is_zero() || piv_mag <= floor {
                return Err(Error::HighPrecisionSingular);
            }
            for j in 0..n {
                a.data.swap(k * n + j, p * n + j);
                inv.data.swap(k * n + j, p * n + j);
            }
            let piv = a.get(k, k).clone();
            for j in 0..n {
                a.data[k * n + j] = a.data[k * n + j].div(&piv);
                inv.data[k * n + j] = inv.data[k * n + j].div(&piv);
            }
            for i in 0..n {
                if i == k || a.get(i, k).is_zero() {
                    continue;
                }
                let factor = a.get(i, k).clone();
                for j in 0..n {
                    let da = factor.mul(a.get(k, j));
                    let di = factor.mul(inv.get(k, j));
                    a.data[i * n + j] = a.data[i * n + j].sub(&da);
                    inv.data[i * n + j] = inv.data[i * n + j].sub(&di);
                }
            }
        }
        Ok(inv)
    }

    /// `e^A` by Taylor series on `A / 2^s` with `||A / 2^s|| <= 1/2`, then
    /// `s` squarings. Terms stop once their entries drop below
    /// `10^-(digits + 10)`.
    pub fn exp(&self) -> Self {
        assert_eq!(self.rows, self.cols, "exp of a non-square matrix");
        let n = self.rows;
        let bits = self.bits();
        let norm = demote(self).one_norm();
        let s = if norm > 0.5 {
            (norm / 0.5).log2().ceil() as i32
        } else {
            0
        };
        let a = self.scale(&exact(2f64.powi(-s), bits));
        let cutoff = 10f64.powi(-(self.digits as i32) - 10);
        let mut sum = Self::identity(n, self.digits);
        let mut term = Self::identity(n, self.digits);
        for k in 1u64.. {
            term = term.matmul(&a).scale(&(int(1, bits) / int(k, bits)));
            sum = sum.add(&term);
            // The remaining tail is bounded by the current term when ||A|| <= 1/2.
            if term.max_abs_f64() < cutoff {
                break;
            }
        }
        for _ in 0..s {
            sum = sum.matmul(&sum);
        }
        sum
    }
}

/// Recomputes `X = X2 X1^-1`, `Z = Z2 Z1^-1` and `U(1) = (e^X - e^Z)(X - Z)^-1`
/// entirely at `digits` decimal digits.
pub fn u_of_one_highprec(
    x1: &ComplexMatrix,
    x2: &ComplexMatrix,
    z1: &ComplexMatrix,
    z2: &ComplexMatrix,
    digits: u32,
) -> Result<BigComplexMatrix> {
    let n = x1.rows();
    for m in [x1, x2, z1, z2] {
        if m.rows() != n || m.cols() != n {
            return Err(Error::InvalidInput(
                "eigenvector blocks must be n x n".into(),
            ));
        }
    }
    let x = promote(x2, digits)?.matmul(&promote(x1, digits)?.inverse()?);
    let z = promote(z2, digits)?.matmul(&promote(z1, digits)?.inverse()?);
    let diff_inv = x.sub(&z).inverse()?;
    Ok(x.exp().sub(&z.exp()).matmul(&diff_inv))
}

/// `||U_double - U_high|| / ||U_double||` in the spectral norm; the
/// difference is formed at high precision and demoted before the norm.
pub fn relative_error(u_double: &ComplexMatrix, u_high: &BigComplexMatrix) -> Result<f64> {
    if (u_double.rows(), u_double.cols()) != (u_high.rows, u_high.cols) {
        return Err(Error::InvalidInput(
            "relative error of differently shaped matrices".into(),
        ));
    }
    let denom = u_double.spectral_norm();
    if denom == 0.0 || !denom.is_finite() {
        return Err(Error::UndefinedRelativeError);
    }
    let diff = promote(u_double, u_high.digits)?.sub(u_high);
    Ok(demote(&diff).spectral_norm() / denom)
}

/// Serializable summary of an oracle run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleSummary {
    pub digits: u32,
    pub eps: f64,
}
