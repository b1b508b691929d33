use super::{lu_solve, Mat};
use crate::error::{Error, Result};

// Padé(13) coefficients and the 1-norm threshold below which no scaling is needed.
const PADE13: [f64; 14] = [
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
const THETA13: f64 = 5.371920351148152;

/// exp(A·t) by scaling and squaring with a degree-13 Padé approximant.
pub fn mat_exp(a: &Mat, t: f64) -> Result<Mat> {
    if !a.is_square() {
        return Err(Error::Dimension {
            op: "mat_exp",
            detail: format!("{}x{} is not square", a.rows(), a.cols()),
        });
    }
    if !t.is_finite() {
        return Err(Error::InvalidArgument {
            name: "t",
            reason: "must be finite".into(),
        });
    }
    let n = a.rows();
    if t == 0.0 || a.max_abs() == 0.0 {
        return Ok(Mat::identity(n));
    }
    let at = a.scale(t);
    let norm = at.norm_one();
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let x = at.scale(2f64.powi(-squarings));

    let b = &PADE13;
    let id = Mat::identity(n);
    let x2 = &x * &x;
    let x4 = &x2 * &x2;
    let x6 = &x4 * &x2;

    let inner_u = &(&x6.scale(b[13]) + &x4.scale(b[11])) + &x2.scale(b[9]);
    let u_poly = &(&(&(&(&x6 * &inner_u) + &x6.scale(b[7])) + &x4.scale(b[5])) + &x2.scale(b[3]))
        + &id.scale(b[1]);
    let u = &x * &u_poly;

    let inner_v = &(&x6.scale(b[12]) + &x4.scale(b[10])) + &x2.scale(b[8]);
    let v = &(&(&(&(&x6 * &inner_v) + &x6.scale(b[6])) + &x4.scale(b[4])) + &x2.scale(b[2]))
        + &id.scale(b[0]);

    let mut r = lu_solve(&(&v - &u), &(&v + &u))?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    Ok(r)
}

/// ∫₀ᵗ exp(A·s) ds · B, read off the exponential of the augmented matrix
/// [A B; 0 0]·t. No inverse of A is formed, so singular A is fine.
pub fn zoh_integral(a: &Mat, b: &Mat, t: f64) -> Result<Mat> {
    if !a.is_square() || b.rows() != a.rows() {
        return Err(Error::Dimension {
            op: "zoh_integral",
            detail: format!(
                "A is {}x{}, B is {}x{}",
                a.rows(),
                a.cols(),
                b.rows(),
                b.cols()
            ),
        });
    }
    let n = a.rows();
    let m = b.cols();
    let mut aug = Mat::zeros(n + m, n + m);
    aug.set_block(0, 0, a);
    aug.set_block(0, n, b);
    let e = mat_exp(&aug, t)?;
    Ok(e.block(0, n, n, m))
}
