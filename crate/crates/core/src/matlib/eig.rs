use nalgebra::{Complex, DMatrix};

use super::Mat;
use crate::error::{Error, Result};

/// Eigenvalues of a square matrix, unordered.
pub fn eigenvalues(a: &Mat) -> Result<Vec<Complex<f64>>> {
    if !a.is_square() {
        return Err(Error::Dimension {
            op: "eigenvalues",
            detail: format!("{}x{} is not square", a.rows(), a.cols()),
        });
    }
    let n = a.rows();
    let m = DMatrix::from_row_slice(n, n, a.as_slice());
    Ok(m.complex_eigenvalues().iter().copied().collect())
}
