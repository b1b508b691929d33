use super::Mat;

const OFF_DIAGONAL_TOL: f64 = 1e-14;
const MAX_SWEEPS: usize = 80;

/// Singular values in non-increasing order, length min(rows, cols).
///
/// One-sided Jacobi (Hestenes): columns are rotated pairwise until every pair
/// is orthogonal to `1e-14` relative; the column norms are then the singular
/// values. Relative accuracy is good even for the tiny trailing values of the
/// shift-domain observability stacks.
pub fn singular_values(m: &Mat) -> Vec<f64> {
    let work = if m.rows() >= m.cols() {
        m.clone()
    } else {
        m.transpose()
    };
    let rows = work.rows();
    let n = work.cols();
    // column-major copy so each column is contiguous
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| work.col_vec(j)).collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta, gamma) = (0..rows).fold((0.0, 0.0, 0.0), |(a, b, g), i| {
                    let (x, y) = (cols[p][i], cols[q][i]);
                    (a + x * x, b + y * y, g + x * y)
                });
                if gamma == 0.0 || gamma.abs() <= OFF_DIAGONAL_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..rows {
                    let (x, y) = (cols[p][i], cols[q][i]);
                    cols[p][i] = c * x - s * y;
                    cols[q][i] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sv: Vec<f64> = cols.iter().map(|c| super::norm2(c)).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Largest singular value (induced 2-norm).
pub fn spectral_norm(m: &Mat) -> f64 {
    singular_values(m)[0]
}

/// max(rows, cols) · ε · σ₁
pub fn default_rank_tol(m: &Mat) -> f64 {
    let s1 = singular_values(m)[0];
    m.rows().max(m.cols()) as f64 * f64::EPSILON * s1
}

/// Number of singular values strictly above `tol`.
pub fn numerical_rank(m: &Mat, tol: f64) -> usize {
    singular_values(m).iter().filter(|s| **s > tol).count()
}

/// σ₁/σ_min; infinite for an exactly rank-deficient matrix.
pub fn condition_number(m: &Mat) -> f64 {
    let sv = singular_values(m);
    let last = *sv.last().unwrap();
    if last == 0.0 {
        f64::INFINITY
    } else {
        sv[0] / last
    }
}
