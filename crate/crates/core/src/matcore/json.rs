use serde::{Deserialize, Serialize};

use super::{ComplexMatrix, C64};
use crate::error::{Error, Result};

/// Canonical wire form: `{"rows": n, "cols": n, "data": [[re, im], ...]}`,
/// row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl From<&ComplexMatrix> for MatrixJson {
    fn from(m: &ComplexMatrix) -> Self {
        Self {
            rows: m.rows(),
            cols: m.cols(),
            data: m.data().iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl TryFrom<MatrixJson> for ComplexMatrix {
    type Error = Error;

    fn try_from(j: MatrixJson) -> Result<Self> {
        let data = j
            .data
            .into_iter()
            .map(|[re, im]| C64::new(re, im))
            .collect();
        ComplexMatrix::new(j.rows, j.cols, data)
    }
}

impl Serialize for ComplexMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = MatrixJson::deserialize(d)?;
        ComplexMatrix::try_from(j).map_err(serde::de::Error::custom)
    }
}

impl ComplexMatrix {
    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("matrix serialisation is infallible")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_wrong_length_and_unknown_fields() {
        assert!(ComplexMatrix::from_json_str(r#"{"rows":2,"cols":2,"data":[[1,0]]}"#).is_err());
        assert!(
            ComplexMatrix::from_json_str(r#"{"rows":1,"cols":1,"data":[[1,0]],"x":1}"#).is_err()
        );
        let m =
            ComplexMatrix::from_json_str(r#"{"rows":1,"cols":2,"data":[[1,0],[0.5,-2]]}"#).unwrap();
        assert_eq!(m[(0, 1)], C64::new(0.5, -2.0));
    }

    proptest! {
        #[test]
        fn bit_exact_round_trip(
            rows in 1usize..4,
            cols in 1usize..4,
            seed in proptest::collection::vec((any::<f64>(), any::<f64>()), 16),
        ) {
            let data: Vec<C64> = seed
                .iter()
                .take(rows * cols)
                .map(|&(a, b)| C64::new(
                    if a.is_finite() { a } else { 0.0 },
                    if b.is_finite() { b } else { -0.0 },
                ))
                .collect();
            let m = ComplexMatrix::new(rows, cols, data).unwrap();
            let back = ComplexMatrix::from_json_str(&m.to_json_string()).unwrap();
            for (x, y) in m.data().iter().zip(back.data()) {
                prop_assert_eq!(x.re.to_bits(), y.re.to_bits());
                prop_assert_eq!(x.im.to_bits(), y.im.to_bits());
            }
        }
    }
}
