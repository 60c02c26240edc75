//! JSON shapes shared by the experiment reports.

use crate::linalg::Mat;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A square matrix as `{"dim": n, "entries": [[row 0], [row 1], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DenseMatrix {
    pub dim: usize,
    pub entries: Vec<Vec<f64>>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
#[error("malformed matrix: {0}")]
pub struct MatrixShapeError(pub String);

impl From<&Mat> for DenseMatrix {
    fn from(m: &Mat) -> Self {
        Self {
            dim: m.nrows(),
            entries: (0..m.nrows()).map(|i| m.row(i).iter().cloned().collect()).collect(),
        }
    }
}

impl TryFrom<&DenseMatrix> for Mat {
    type Error = MatrixShapeError;

    fn try_from(d: &DenseMatrix) -> Result<Self, Self::Error> {
        if d.entries.len() != d.dim || d.entries.iter().any(|r| r.len() != d.dim) {
            return Err(MatrixShapeError(format!("expected {0}x{0} entries", d.dim)));
        }
        if d.entries.iter().flatten().any(|v| !v.is_finite()) {
            return Err(MatrixShapeError("non-finite entry".into()));
        }
        Ok(Mat::from_fn(d.dim, d.dim, |i, j| d.entries[i][j]))
    }
}

/// `serde(with = "crate::io::rows")` for square `Mat` fields: row-major
/// nested lists.
pub mod rows {
    use super::*;

    pub fn serialize<S: Serializer>(m: &Mat, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = (0..m.nrows()).map(|i| m.row(i).iter().cloned().collect()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Mat, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
        let nr = rows.len();
        let nc = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != nc) {
            return Err(serde::de::Error::custom("ragged matrix rows"));
        }
        Ok(Mat::from_fn(nr, nc, |i, j| rows[i][j]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_through_json() {
        let m = Mat::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let d = DenseMatrix::from(&m);
        let text = serde_json::to_string(&d).unwrap();
        assert_eq!(text, r#"{"dim":2,"entries":[[1.0,2.0],[3.0,4.0]]}"#);
        let back: DenseMatrix = serde_json::from_str(&text).unwrap();
        assert_eq!(Mat::try_from(&back).unwrap(), m);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let d = DenseMatrix { dim: 2, entries: vec![vec![1.0, 2.0], vec![3.0]] };
        assert!(Mat::try_from(&d).is_err());
        assert!(serde_json::from_str::<DenseMatrix>(r#"{"dim":1,"entries":[[1.0]],"extra":0}"#).is_err());
    }
}
