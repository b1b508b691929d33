//! Shift- and delta-operator sampled models of a single-input LTI plant.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matlib::{default_rank_tol, eigenvalues, mat_exp, numerical_rank, zoh_integral, Mat};

/// Continuous plant ξ̇ = Aξ + B(u + d), y = Cξ with |d(t)| < d0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuousLti {
    pub a: Mat,
    pub b: Mat,
    pub c: Mat,
    pub d0: f64,
}

impl ContinuousLti {
    /// Validates shapes, the disturbance bound, and controllability /
    /// observability of the continuous pair (the Δ → 0 limit of the delta
    /// stacks) at the default SVD tolerance.
    pub fn new(a: Mat, b: Mat, c: Mat, d0: f64) -> Result<Self> {
        let sys = Self { a, b, c, d0 };
        sys.check_shapes()?;
        if !(d0 >= 0.0 && d0.is_finite()) {
            return Err(Error::InvalidArgument {
                name: "d0",
                reason: format!("must be finite and >= 0, got {d0}"),
            });
        }
        let ctrb = sys.controllability();
        if numerical_rank(&ctrb, default_rank_tol(&ctrb)) < sys.n() {
            return Err(Error::Structural("controllable"));
        }
        let obsv = sys.observability(sys.n());
        if numerical_rank(&obsv, default_rank_tol(&obsv)) < sys.n() {
            return Err(Error::Structural("observable"));
        }
        Ok(sys)
    }

    fn check_shapes(&self) -> Result<()> {
        let n = self.a.rows();
        if !self.a.is_square() {
            return Err(Error::Dimension {
                op: "ContinuousLti",
                detail: format!("A is {:?}", self.a.shape()),
            });
        }
        if self.b.shape() != (n, 1) {
            return Err(Error::Dimension {
                op: "ContinuousLti",
                detail: format!("B must be {n}x1, got {:?}", self.b.shape()),
            });
        }
        if self.c.cols() != n {
            return Err(Error::Dimension {
                op: "ContinuousLti",
                detail: format!("C must have {n} columns, got {:?}", self.c.shape()),
            });
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }

    pub fn outputs(&self) -> usize {
        self.c.rows()
    }

    /// [B, AB, …, A^{n−1}B]
    pub fn controllability(&self) -> Mat {
        let mut cols = vec![self.b.clone()];
        for _ in 1..self.n() {
            let next = &self.a * cols.last().unwrap();
            cols.push(next);
        }
        Mat::hstack(&cols).expect("matching rows")
    }

    /// [C; CA; …; CA^{rows−1}]
    pub fn observability(&self, block_rows: usize) -> Mat {
        let mut blocks = vec![self.c.clone()];
        for _ in 1..block_rows {
            let next = blocks.last().unwrap() * &self.a;
            blocks.push(next);
        }
        Mat::vstack(&blocks).expect("matching cols")
    }
}

/// ξ(k+1) = A_τ ξ(k) + B_τ (u(k) + d(k))
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftSystem {
    pub a_tau: Mat,
    pub b_tau: Mat,
    pub c: Mat,
    pub tau: f64,
}

/// δξ(k) = A_δ ξ(k) + B_δ (u(k) + d(k)) with δ the divided difference at `tau`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaSystem {
    pub a_delta: Mat,
    pub b_delta: Mat,
    pub c: Mat,
    pub tau: f64,
}

impl DeltaSystem {
    pub fn n(&self) -> usize {
        self.a_delta.rows()
    }

    /// A_τ = I + τA_δ, B_τ = τB_δ
    pub fn to_shift(&self) -> ShiftSystem {
        ShiftSystem {
            a_tau: &Mat::identity(self.n()) + &self.a_delta.scale(self.tau),
            b_tau: self.b_delta.scale(self.tau),
            c: self.c.clone(),
            tau: self.tau,
        }
    }
}

fn check_period(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument {
            name: "tau",
            reason: format!("sampling period must be positive, got {tau}"),
        })
    }
}

/// Exact zero-order-hold sampling at period `tau`.
pub fn discretize_shift(sys: &ContinuousLti, tau: f64) -> Result<ShiftSystem> {
    check_period(tau)?;
    Ok(ShiftSystem {
        a_tau: mat_exp(&sys.a, tau)?,
        b_tau: zoh_integral(&sys.a, &sys.b, tau)?,
        c: sys.c.clone(),
        tau,
    })
}

/// A_δ = (A_τ − I)/τ, B_δ = B_τ/τ
pub fn to_delta(shift: &ShiftSystem) -> DeltaSystem {
    let n = shift.a_tau.rows();
    let inv = 1.0 / shift.tau;
    DeltaSystem {
        a_delta: (&shift.a_tau - &Mat::identity(n)).scale(inv),
        b_delta: shift.b_tau.scale(inv),
        c: shift.c.clone(),
        tau: shift.tau,
    }
}

/// Control-rate and output-rate models of one plant, Δ = τ/N.
///
/// Both the shift and delta forms are kept: the shift matrices are what the
/// exact simulation propagates, the delta matrices feed the estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct DualRate {
    pub slow: DeltaSystem,
    pub fast: DeltaSystem,
    pub slow_shift: ShiftSystem,
    pub fast_shift: ShiftSystem,
    pub n_fast: usize,
}

impl DualRate {
    /// Requires N ≥ ⌈n/p⌉ so the N-sample stack can recover the state.
    pub fn new(sys: &ContinuousLti, tau: f64, n_fast: usize) -> Result<Self> {
        check_period(tau)?;
        let min_n = sys.n().div_ceil(sys.outputs());
        if n_fast < min_n.max(1) {
            return Err(Error::InvalidArgument {
                name: "n_fast",
                reason: format!("need N >= ceil(n/p) = {min_n}, got {n_fast}"),
            });
        }
        let delta = tau / n_fast as f64;
        let slow_shift = discretize_shift(sys, tau)?;
        let fast_shift = discretize_shift(sys, delta)?;
        Ok(Self {
            slow: to_delta(&slow_shift),
            fast: to_delta(&fast_shift),
            slow_shift,
            fast_shift,
            n_fast,
        })
    }

    pub fn tau(&self) -> f64 {
        self.slow.tau
    }

    pub fn delta(&self) -> f64 {
        self.fast.tau
    }
}

/// True iff every eigenvalue λ of `a` satisfies |λ + 1/τ| < 1/τ (strict).
pub fn delta_stable(a: &Mat, tau: f64) -> Result<bool> {
    check_period(tau)?;
    let r = 1.0 / tau;
    Ok(eigenvalues(a)?.iter().all(|l| (l.re + r).hypot(l.im) < r))
}

fn check_sequence(x: &[f64]) -> Result<()> {
    if x.len() < 2 {
        return Err(Error::InvalidArgument {
            name: "sequence",
            reason: format!("need at least two samples, got {}", x.len()),
        });
    }
    Ok(())
}

/// δx(k) = (x(k+1) − x(k))/τ; one sample shorter than `x`.
pub fn delta_apply(x: &[f64], tau: f64) -> Result<Vec<f64>> {
    check_sequence(x)?;
    check_period(tau)?;
    Ok(x.windows(2).map(|w| (w[1] - w[0]) / tau).collect())
}

/// Max residual of the product rule δ(xy) = δx·y + x·δy + τ·δx·δy.
pub fn delta_product_check(x: &[f64], y: &[f64], tau: f64) -> Result<f64> {
    check_sequence(x)?;
    if x.len() != y.len() {
        return Err(Error::Dimension {
            op: "delta_product_check",
            detail: format!("lengths {} and {}", x.len(), y.len()),
        });
    }
    let xy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a * b).collect();
    let dxy = delta_apply(&xy, tau)?;
    let dx = delta_apply(x, tau)?;
    let dy = delta_apply(y, tau)?;
    Ok((0..dxy.len())
        .map(|k| (dxy[k] - (dx[k] * y[k] + x[k] * dy[k] + tau * dx[k] * dy[k])).abs())
        .fold(0.0, f64::max))
}
