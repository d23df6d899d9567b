//! The quadratic pencil `L(lambda) = lambda^2 1 + lambda B + C`, its resolvent
//! and companion linearisation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{inverse, singular_values, ComplexMatrix, MatrixJson, C64};

/// Relative tolerance for verifying declared structure.
pub const STRUCTURE_TOL: f64 = 1e-12;

/// Relative smallest-singular-value cutoff for "numerically on the spectrum".
pub const SPECTRUM_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Structure {
    #[default]
    General,
    /// `B` and `C` Hermitian.
    Hermitian,
    /// `B` real skew-symmetric, `C` real symmetric.
    Gyroscopic,
}

impl std::str::FromStr for Structure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "general" => Ok(Self::General),
            "hermitian" => Ok(Self::Hermitian),
            "gyroscopic" => Ok(Self::Gyroscopic),
            other => Err(Error::InvalidInput(format!("unknown structure {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticPencil {
    n: usize,
    b: ComplexMatrix,
    c: ComplexMatrix,
    structure: Structure,
}

fn rel_defect(defect: &ComplexMatrix, reference: &ComplexMatrix) -> bool {
    let scale = reference.spectral_norm();
    defect.spectral_norm() <= STRUCTURE_TOL * scale
}

fn is_real(m: &ComplexMatrix) -> bool {
    rel_defect(&m.imag_part(), m)
}

impl QuadraticPencil {
    /// Builds a pencil and verifies the declared structure.
    pub fn new(b: ComplexMatrix, c: ComplexMatrix, structure: Structure) -> Result<Self> {
        if !b.is_square() || !c.is_square() || b.rows() != c.rows() {
            return Err(Error::InvalidInput(format!(
                "B ({}x{}) and C ({}x{}) must be square of equal size",
                b.rows(),
                b.cols(),
                c.rows(),
                c.cols()
            )));
        }
        let ok = match structure {
            Structure::General => true,
            Structure::Hermitian => {
                rel_defect(&(&b - &b.adjoint()), &b) && rel_defect(&(&c - &c.adjoint()), &c)
            }
            Structure::Gyroscopic => {
                is_real(&b)
                    && is_real(&c)
                    && rel_defect(&(&b + &b.transpose()), &b)
                    && rel_defect(&(&c - &c.transpose()), &c)
            }
        };
        if !ok {
            return Err(Error::InvalidInput(format!(
                "coefficients are not {structure:?} within tolerance"
            )));
        }
        Ok(Self {
            n: b.rows(),
            b,
            c,
            structure,
        })
    }

    pub fn general(b: ComplexMatrix, c: ComplexMatrix) -> Result<Self> {
        Self::new(b, c, Structure::General)
    }

    /// 1x1 pencil `lambda^2 + b lambda + c` with real coefficients.
    pub fn scalar(b: f64, c: f64) -> Self {
        Self::general(
            ComplexMatrix::diag_real(&[b]),
            ComplexMatrix::diag_real(&[c]),
        )
        .expect("scalar pencil is valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn b(&self) -> &ComplexMatrix {
        &self.b
    }

    pub fn c(&self) -> &ComplexMatrix {
        &self.c
    }

    pub fn structure(&self) -> Structure {
        self.structure
    }

    /// `max(1, ||B||, ||C||)`, the scale used by spectrum tolerances.
    pub fn coefficient_scale(&self) -> f64 {
        1f64.max(self.b.spectral_norm()).max(self.c.spectral_norm())
    }

    /// `lambda^2 1 + lambda B + C`.
    pub fn evaluate(&self, lambda: C64) -> ComplexMatrix {
        let mut m = self.c.clone();
        if lambda == C64::new(0.0, 0.0) {
            return m;
        }
        let l2 = lambda * lambda;
        for i in 0..self.n {
            for j in 0..self.n {
                m[(i, j)] += lambda * self.b[(i, j)];
            }
            m[(i, i)] += l2;
        }
        m
    }

    /// Errors when `lambda` is numerically on the spectrum, i.e. when
    /// `sigma_min(L(lambda)) < 1e-12 max(1, |lambda|^2, ||B||, ||C||)`.
    pub fn check_off_spectrum(&self, lambda: C64) -> Result<ComplexMatrix> {
        let l = self.evaluate(lambda);
        let s = singular_values(&l);
        let scale = self.coefficient_scale().max(lambda.norm_sqr());
        if s[s.len() - 1] < SPECTRUM_TOL * scale {
            return Err(Error::SpectrumPoint { lambda });
        }
        Ok(l)
    }

    /// `L(lambda)^{-1}`.
    pub fn resolvent(&self, lambda: C64) -> Result<ComplexMatrix> {
        let l = self.check_off_spectrum(lambda)?;
        inverse(&l).map_err(|_| Error::SpectrumPoint { lambda })
    }

    /// Block companion matrix `[[0, 1], [-C, -B]]`.
    pub fn companion_matrix(&self) -> ComplexMatrix {
        let n = self.n;
        let mut m = ComplexMatrix::zeros(2 * n, 2 * n);
        m.set_block(0, n, &ComplexMatrix::identity(n));
        m.set_block(n, 0, &-&self.c);
        m.set_block(n, n, &-&self.b);
        m
    }

    /// Defect of `L(lambda)^{-1} = [1 0] (lambda - C1)^{-1} [0; 1]`.
    pub fn check_companion_resolvent_identity(&self, lambda: C64) -> Result<f64> {
        let r = self.resolvent(lambda)?;
        let n = self.n;
        let shifted = (-&self.companion_matrix()).shift_diagonal(lambda);
        let full = inverse(&shifted).map_err(|_| Error::SpectrumPoint { lambda })?;
        let block = full.block(0, n, n, n);
        Ok((&r - &block).spectral_norm())
    }
}

/// Pencil file: `{"n": n, "structure": "...", "B": <matrix>, "C": <matrix>}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PencilJson {
    pub n: usize,
    #[serde(default)]
    pub structure: Structure,
    #[serde(rename = "B")]
    pub b: MatrixJson,
    #[serde(rename = "C")]
    pub c: MatrixJson,
}

impl From<&QuadraticPencil> for PencilJson {
    fn from(p: &QuadraticPencil) -> Self {
        Self {
            n: p.n,
            structure: p.structure,
            b: MatrixJson::from(&p.b),
            c: MatrixJson::from(&p.c),
        }
    }
}

impl TryFrom<PencilJson> for QuadraticPencil {
    type Error = Error;

    fn try_from(j: PencilJson) -> Result<Self> {
        let b = ComplexMatrix::try_from(j.b)?;
        let c = ComplexMatrix::try_from(j.c)?;
        if b.rows() != j.n {
            return Err(Error::InvalidInput(format!(
                "declared n = {} but B has {} rows",
                j.n,
                b.rows()
            )));
        }
        QuadraticPencil::new(b, c, j.structure)
    }
}

impl QuadraticPencil {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let j: PencilJson = serde_json::from_str(s)?;
        Self::try_from(j)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&PencilJson::from(self))
            .expect("pencil serialisation is infallible")
    }
}
