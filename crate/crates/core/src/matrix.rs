//! Complex matrix plumbing shared by every module.
//!
//! Matrices are dense [`nalgebra`] matrices over `Complex<f64>`; this module
//! adds the residual measures used by the validation contracts and the
//! `[re, im]` JSON encoding used by every file format.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::error::{Error, Result};

/// Dense complex matrix used throughout.
pub type ComplexMatrix = DMatrix<Complex64>;

/// Maximum absolute entry of `m - m†`.
pub fn hermiticity_residual(m: &ComplexMatrix) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Maximum absolute entry of `m†m - 1`.
pub fn unitarity_residual(m: &ComplexMatrix) -> f64 {
    let prod = m.adjoint() * m;
    let mut worst = 0.0_f64;
    for i in 0..prod.nrows() {
        for j in 0..prod.ncols() {
            let target = if i == j { Complex64::ONE } else { Complex64::ZERO };
            worst = worst.max((prod[(i, j)] - target).norm());
        }
    }
    worst
}

/// Maximum absolute imaginary part over all entries.
pub fn imaginary_residual(m: &ComplexMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.im.abs()))
}

/// Encode a complex matrix as nested JSON arrays of `[re, im]` pairs
/// (row-major).
pub fn matrix_to_json(m: &ComplexMatrix) -> Value {
    let rows: Vec<Value> = (0..m.nrows())
        .map(|i| {
            let row: Vec<Value> = (0..m.ncols())
                .map(|j| json!([m[(i, j)].re, m[(i, j)].im]))
                .collect();
            Value::Array(row)
        })
        .collect();
    Value::Array(rows)
}

/// Decode a complex matrix from nested JSON arrays of `[re, im]` pairs.
pub fn matrix_from_json(v: &Value) -> Result<ComplexMatrix> {
    let rows = v
        .as_array()
        .ok_or_else(|| Error::Parse("matrix: expected an array of rows".into()))?;
    if rows.is_empty() {
        return Err(Error::Parse("matrix: no rows".into()));
    }
    let ncols = rows[0]
        .as_array()
        .ok_or_else(|| Error::Parse("matrix: expected rows to be arrays".into()))?
        .len();
    let mut out = ComplexMatrix::zeros(rows.len(), ncols);
    for (i, row) in rows.iter().enumerate() {
        let row = row
            .as_array()
            .ok_or_else(|| Error::Parse(format!("matrix: row {i} is not an array")))?;
        if row.len() != ncols {
            return Err(Error::Parse(format!(
                "matrix: row {i} has {} entries, expected {ncols}",
                row.len()
            )));
        }
        for (j, entry) in row.iter().enumerate() {
            let pair = entry
                .as_array()
                .filter(|p| p.len() == 2)
                .ok_or_else(|| Error::Parse(format!("matrix: entry ({i},{j}) is not [re, im]")))?;
            let re = pair[0]
                .as_f64()
                .ok_or_else(|| Error::Parse(format!("matrix: entry ({i},{j}) re not a number")))?;
            let im = pair[1]
                .as_f64()
                .ok_or_else(|| Error::Parse(format!("matrix: entry ({i},{j}) im not a number")))?;
            out[(i, j)] = Complex64::new(re, im);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residuals_on_identity_are_zero() {
        let id = ComplexMatrix::identity(4, 4);
        assert_eq!(hermiticity_residual(&id), 0.0);
        assert_eq!(unitarity_residual(&id), 0.0);
        assert_eq!(imaginary_residual(&id), 0.0);
    }

    #[test]
    fn hermiticity_residual_detects_asymmetry() {
        let mut m = ComplexMatrix::zeros(2, 2);
        m[(0, 1)] = Complex64::new(1.0, 0.0);
        assert!((hermiticity_residual(&m) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let mut m = ComplexMatrix::zeros(2, 3);
        m[(0, 0)] = Complex64::new(0.1, -2.5);
        m[(1, 2)] = Complex64::new(std::f64::consts::PI, 1e-17);
        let v = matrix_to_json(&m);
        let back = matrix_from_json(&v).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn malformed_json_is_rejected() {
        for bad in [
            serde_json::json!(3),
            serde_json::json!([[1.0, 2.0]]),
            serde_json::json!([[[1.0]]]),
            serde_json::json!([[[1.0, 2.0]], [[1.0, 2.0], [3.0, 4.0]]]),
        ] {
            assert!(matrix_from_json(&bad).is_err());
        }
    }
}
