//! JSON interchange for matrices and vectors.
//!
//! Matrices: `{"dim": n, "real": [n*n row-major], "imag": [...]}` with `imag`
//! optional (all-zero when absent). Vectors use the same fields with `n`
//! entries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::psd::{CMatrix, CVector, HermitianMatrix, C64};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub real: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub imag: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VectorJson {
    pub dim: usize,
    pub real: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub imag: Option<Vec<f64>>,
}

fn split(values: impl Iterator<Item = C64>) -> (Vec<f64>, Option<Vec<f64>>) {
    let (real, imag): (Vec<f64>, Vec<f64>) = values.map(|z| (z.re, z.im)).unzip();
    let imag = imag.iter().any(|&x| x != 0.0).then_some(imag);
    (real, imag)
}

fn join(expected: usize, real: &[f64], imag: Option<&[f64]>) -> Result<Vec<C64>> {
    if real.len() != expected {
        return Err(Error::Format(format!(
            "expected {expected} real entries, found {}",
            real.len()
        )));
    }
    match imag {
        None => Ok(real.iter().map(|&r| C64::new(r, 0.0)).collect()),
        Some(im) if im.len() == expected => Ok(real
            .iter()
            .zip(im)
            .map(|(&r, &i)| C64::new(r, i))
            .collect()),
        Some(im) => Err(Error::Format(format!(
            "expected {expected} imag entries, found {}",
            im.len()
        ))),
    }
}

impl From<&HermitianMatrix> for MatrixJson {
    fn from(m: &HermitianMatrix) -> Self {
        let n = m.dim();
        let a = m.as_matrix();
        let (real, imag) = split((0..n * n).map(|k| a[(k / n, k % n)]));
        MatrixJson { dim: n, real, imag }
    }
}

impl From<HermitianMatrix> for MatrixJson {
    fn from(m: HermitianMatrix) -> Self {
        MatrixJson::from(&m)
    }
}

impl TryFrom<MatrixJson> for HermitianMatrix {
    type Error = Error;

    fn try_from(j: MatrixJson) -> Result<Self> {
        if j.dim == 0 {
            return Err(Error::Format("matrix dim must be positive".into()));
        }
        let n = j.dim;
        let entries = join(n * n, &j.real, j.imag.as_deref())?;
        HermitianMatrix::new(CMatrix::from_row_slice(n, n, &entries))
    }
}

impl From<&CVector> for VectorJson {
    fn from(v: &CVector) -> Self {
        let (real, imag) = split(v.iter().copied());
        VectorJson {
            dim: v.len(),
            real,
            imag,
        }
    }
}

impl TryFrom<VectorJson> for CVector {
    type Error = Error;

    fn try_from(j: VectorJson) -> Result<Self> {
        let entries = join(j.dim, &j.real, j.imag.as_deref())?;
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Format("vector has non-finite entries".into()));
        }
        Ok(CVector::from_vec(entries))
    }
}

/// `#[serde(with = "...")]` adapter for a single vector.
pub mod cvec {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &CVector, s: S) -> std::result::Result<S::Ok, S::Error> {
        VectorJson::from(v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CVector, D::Error> {
        let j = VectorJson::deserialize(d)?;
        CVector::try_from(j).map_err(serde::de::Error::custom)
    }
}

/// `#[serde(with = "...")]` adapter for an optional vector.
pub mod opt_cvec {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        v: &Option<CVector>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        v.as_ref().map(VectorJson::from).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Option<CVector>, D::Error> {
        Option::<VectorJson>::deserialize(d)?
            .map(CVector::try_from)
            .transpose()
            .map_err(serde::de::Error::custom)
    }
}

/// `#[serde(with = "...")]` adapter for a list of vectors.
pub mod cvec_list {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[CVector], s: S) -> std::result::Result<S::Ok, S::Error> {
        v.iter().map(VectorJson::from).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<CVector>, D::Error> {
        Vec::<VectorJson>::deserialize(d)?
            .into_iter()
            .map(CVector::try_from)
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)
    }
}

/// `#[serde(with = "...")]` adapter for an optional list of vectors.
pub mod opt_cvec_list {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        v: &Option<Vec<CVector>>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        v.as_ref()
            .map(|xs| xs.iter().map(VectorJson::from).collect::<Vec<_>>())
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Option<Vec<CVector>>, D::Error> {
        match Option::<Vec<VectorJson>>::deserialize(d)? {
            None => Ok(None),
            Some(xs) => xs
                .into_iter()
                .map(CVector::try_from)
                .collect::<Result<Vec<_>>>()
                .map(Some)
                .map_err(serde::de::Error::custom),
        }
    }
}

pub fn matrix_from_json(text: &str) -> Result<HermitianMatrix> {
    Ok(serde_json::from_str(text)?)
}

pub fn vectors_from_json(text: &str) -> Result<Vec<CVector>> {
    let raw: Vec<VectorJson> = serde_json::from_str(text)?;
    raw.into_iter().map(CVector::try_from).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_defaults_imag_to_zero() {
        let m = matrix_from_json(r#"{"dim": 2, "real": [2, 0, 0, 1]}"#).unwrap();
        assert_eq!(m, HermitianMatrix::from_diagonal(&[2.0, 1.0]));
    }

    #[test]
    fn complex_matrix_round_trip() {
        let text = r#"{"dim":2,"real":[1.0,0.5,0.5,1.0],"imag":[0.0,0.25,-0.25,0.0]}"#;
        let m = matrix_from_json(text).unwrap();
        assert_eq!(serde_json::to_string(&m).unwrap(), text);
    }

    #[test]
    fn malformed_inputs() {
        assert!(matrix_from_json(r#"{"dim": 2, "real": [1, 2, 3]}"#).is_err());
        assert!(matrix_from_json(r#"{"dim": 2, "real": [1, 2, 0, 1]}"#).is_err());
        assert!(matrix_from_json(r#"{"dim": 0, "real": []}"#).is_err());
        assert!(matrix_from_json("not json").is_err());
        assert!(vectors_from_json(r#"[{"dim": 2, "real": [1]}]"#).is_err());
    }
}
