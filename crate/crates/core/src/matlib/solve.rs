use super::{condition_number, default_rank_tol, numerical_rank, singular_values, Mat};
use crate::error::{Error, Result};

fn singular(op: &'static str, m: &Mat) -> Error {
    let sv = singular_values(m);
    Error::Singular {
        op,
        smallest_sv: *sv.last().unwrap(),
        condition: condition_number(m),
    }
}

/// Solves A·X = B by LU with partial pivoting.
pub fn lu_solve(a: &Mat, b: &Mat) -> Result<Mat> {
    if !a.is_square() || b.rows() != a.rows() {
        return Err(Error::Dimension {
            op: "lu_solve",
            detail: format!("A is {:?}, B is {:?}", a.shape(), b.shape()),
        });
    }
    let n = a.rows();
    let m = b.cols();
    let mut lu = a.clone();
    let mut x = b.clone();
    let scale = a.max_abs();
    for k in 0..n {
        let (piv, pmax) = (k..n)
            .map(|i| (i, lu[(i, k)].abs()))
            .fold((k, -1.0), |acc, v| if v.1 > acc.1 { v } else { acc });
        if pmax <= f64::EPSILON * scale * n as f64 || pmax == 0.0 {
            return Err(singular("lu_solve", a));
        }
        if piv != k {
            for j in 0..n {
                let t = lu[(k, j)];
                lu[(k, j)] = lu[(piv, j)];
                lu[(piv, j)] = t;
            }
            for j in 0..m {
                let t = x[(k, j)];
                x[(k, j)] = x[(piv, j)];
                x[(piv, j)] = t;
            }
        }
        for i in k + 1..n {
            let f = lu[(i, k)] / lu[(k, k)];
            if f == 0.0 {
                continue;
            }
            for j in k..n {
                lu[(i, j)] -= f * lu[(k, j)];
            }
            for j in 0..m {
                x[(i, j)] -= f * x[(k, j)];
            }
        }
    }
    for j in 0..m {
        for i in (0..n).rev() {
            let mut s = x[(i, j)];
            for c in i + 1..n {
                s -= lu[(i, c)] * x[(c, j)];
            }
            x[(i, j)] = s / lu[(i, i)];
        }
    }
    Ok(x)
}

/// Least-squares solution X = (GᵀG)⁻¹Gᵀ·Y.
///
/// Evaluated through a Householder QR of G; the normal-equations matrix is
/// never formed. Rank deficiency at the SVD-scaled default tolerance is
/// reported as [`Error::Singular`] with the smallest singular value.
pub fn lstsq_normal(g: &Mat, y: &Mat) -> Result<Mat> {
    let (rows, n) = g.shape();
    if y.rows() != rows {
        return Err(Error::Dimension {
            op: "lstsq_normal",
            detail: format!("G is {:?}, Y is {:?}", g.shape(), y.shape()),
        });
    }
    if rows < n || numerical_rank(g, default_rank_tol(g)) < n {
        return Err(singular("lstsq_normal", g));
    }
    let k = y.cols();
    let mut r = g.clone();
    let mut qty = y.clone();
    for j in 0..n {
        let norm = (j..rows).map(|i| r[(i, j)] * r[(i, j)]).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(singular("lstsq_normal", g));
        }
        let alpha = if r[(j, j)] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (j..rows).map(|i| r[(i, j)]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let apply = |m: &mut Mat, col: usize| {
            let d: f64 = (j..rows).map(|i| v[i - j] * m[(i, col)]).sum();
            let f = 2.0 * d / vnorm2;
            for i in j..rows {
                m[(i, col)] -= f * v[i - j];
            }
        };
        for c in j..n {
            apply(&mut r, c);
        }
        for c in 0..k {
            apply(&mut qty, c);
        }
    }
    let mut x = Mat::zeros(n, k);
    for c in 0..k {
        for i in (0..n).rev() {
            let mut s = qty[(i, c)];
            for j in i + 1..n {
                s -= r[(i, j)] * x[(j, c)];
            }
            x[(i, c)] = s / r[(i, i)];
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn identity_returns_rhs() {
        let y = Mat::from_rows(&[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]).unwrap();
        assert!(
            lstsq_normal(&Mat::identity(3), &y)
                .unwrap()
                .max_abs_diff(&y)
                < 1e-15
        );
    }

    #[test]
    fn orthonormal_columns_give_transpose_product() {
        let s = 0.5f64.sqrt();
        let g = Mat::from_rows(&[[s, 0.0], [s, 0.0], [0.0, 1.0]]).unwrap();
        let y = Mat::column(&[1.0, 3.0, -2.0]).unwrap();
        let x = lstsq_normal(&g, &y).unwrap();
        assert!(x.max_abs_diff(&(&g.transpose() * &y)) < 1e-14);
    }

    #[test]
    fn recovers_known_solution_and_orthogonal_residual() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let g = Mat::from_fn(8, 4, |_, _| rng.gen_range(-1.0..1.0));
        let x = Mat::from_fn(4, 2, |_, _| rng.gen_range(-3.0..3.0));
        let y = &g * &x;
        assert!(lstsq_normal(&g, &y).unwrap().max_abs_diff(&x) < 1e-10);

        // inconsistent right-hand side: residual ⟂ range(G)
        let y2 = Mat::from_fn(8, 1, |_, _| rng.gen_range(-1.0..1.0));
        let x2 = lstsq_normal(&g, &y2).unwrap();
        let resid = &y2 - &(&g * &x2);
        assert!((&g.transpose() * &resid).max_abs() < 1e-12);
    }

    #[test]
    fn square_nonsingular_is_exact() {
        let g = Mat::from_rows(&[[4.0, 1.0, 0.0], [1.0, 3.0, -1.0], [0.0, 2.0, 5.0]]).unwrap();
        let x = Mat::column(&[1.0, -2.0, 0.5]).unwrap();
        let y = &g * &x;
        assert!(lstsq_normal(&g, &y).unwrap().max_abs_diff(&x) < 1e-14);
        assert!(lu_solve(&g, &y).unwrap().max_abs_diff(&x) < 1e-14);
    }

    #[test]
    fn rank_deficient_reports_smallest_singular_value() {
        let g = Mat::from_rows(&[[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]]).unwrap();
        match lstsq_normal(&g, &Mat::column(&[1.0, 2.0, 3.0]).unwrap()) {
            Err(Error::Singular {
                smallest_sv,
                condition,
                ..
            }) => {
                assert!(smallest_sv < 1e-14);
                assert!(condition > 1e14);
            }
            other => panic!("expected singular error, got {other:?}"),
        }
        assert!(lu_solve(&Mat::zeros(2, 2), &Mat::identity(2)).is_err());
    }
}
