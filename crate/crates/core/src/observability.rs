//! Multi-rate observability stacks in shift and delta form, the E_p·Q_p
//! factorization linking them, and conditioning reports.

use num::{BigInt, BigRational, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::discretize::{ContinuousLti, DeltaSystem, DualRate, ShiftSystem};
use crate::error::{Error, Result};
use crate::matlib::{condition_number, default_rank_tol, numerical_rank, singular_values, Mat};

/// Fixed rank tolerance reported alongside the SVD-scaled default.
pub const FIXED_RANK_TOL: f64 = 1e-8;

/// Signed binomial rows: block (l, k) is C(l, k)·(−1)^{l−k}·I_p, the
/// coefficients of (s − 1)^l.
pub fn build_qp(n_fast: usize, p: usize) -> Mat {
    let mut out = Mat::zeros(n_fast * p, n_fast * p);
    let mut row: Vec<i64> = vec![1];
    for l in 0..n_fast {
        if l > 0 {
            let mut next = vec![0i64; l + 1];
            for k in 0..=l {
                let carry = if k > 0 { row[k - 1] } else { 0 };
                let stay = if k < l { -row[k] } else { 0 };
                next[k] = carry + stay;
            }
            row = next;
        }
        for (k, r) in row.iter().enumerate() {
            for i in 0..p {
                out[(l * p + i, k * p + i)] = *r as f64;
            }
        }
    }
    out
}

/// blockdiag(I_p, I_p/Δ, …, I_p/Δ^{N−1})
pub fn build_ep(n_fast: usize, p: usize, delta: f64) -> Result<Mat> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidArgument {
            name: "delta",
            reason: format!("must be positive, got {delta}"),
        });
    }
    let diag: Vec<f64> = (0..n_fast * p)
        .map(|i| delta.powi(-((i / p) as i32)))
        .collect();
    Ok(Mat::diag(&diag))
}

fn check_len(n_fast: usize) -> Result<()> {
    if n_fast == 0 {
        return Err(Error::InvalidArgument {
            name: "n_fast",
            reason: "need at least one fast sample".into(),
        });
    }
    Ok(())
}

/// Observability stack [C; CA; …; CA^{N−1}] and the feedthrough stack whose
/// block l is C·Σ_{i<l} A^i·B (shift form).
pub fn build_shift_maps(fast: &ShiftSystem, n_fast: usize) -> Result<(Mat, Mat)> {
    check_len(n_fast)?;
    let n = fast.a_tau.rows();
    let mut co = Vec::with_capacity(n_fast);
    let mut dd = Vec::with_capacity(n_fast);
    let mut power = Mat::identity(n);
    let mut partial = Mat::zeros(n, 1);
    for _ in 0..n_fast {
        co.push(&fast.c * &power);
        dd.push(&fast.c * &partial);
        partial = &partial + &(&power * &fast.b_tau);
        power = &power * &fast.a_tau;
    }
    Ok((Mat::vstack(&co)?, Mat::vstack(&dd)?))
}

/// [C; CA_δ; …; CA_δ^{N−1}] and [0; CB_δ; …; CA_δ^{N−2}B_δ], built directly
/// from the delta matrices.
pub fn build_delta_maps(fast: &DeltaSystem, n_fast: usize) -> Result<(Mat, Mat)> {
    check_len(n_fast)?;
    let n = fast.n();
    let p = fast.c.rows();
    let mut co = Vec::with_capacity(n_fast);
    let mut dd = vec![Mat::zeros(p, 1)];
    let mut power = Mat::identity(n);
    for l in 0..n_fast {
        co.push(&fast.c * &power);
        if l + 1 < n_fast {
            dd.push(&(&fast.c * &power) * &fast.b_delta);
        }
        power = &power * &fast.a_delta;
    }
    Ok((Mat::vstack(&co)?, Mat::vstack(&dd)?))
}

/// [B, AB, …, A^{N−1}B]
fn ctrb(a: &Mat, b: &Mat, n_fast: usize) -> Result<Mat> {
    check_len(n_fast)?;
    let mut cols = vec![b.clone()];
    for _ in 1..n_fast {
        let next = a * cols.last().unwrap();
        cols.push(next);
    }
    Mat::hstack(&cols)
}

pub fn build_ctrb_shift(fast: &ShiftSystem, n_fast: usize) -> Result<Mat> {
    ctrb(&fast.a_tau, &fast.b_tau, n_fast)
}

pub fn build_ctrb_delta(fast: &DeltaSystem, n_fast: usize) -> Result<Mat> {
    ctrb(&fast.a_delta, &fast.b_delta, n_fast)
}

/// ‖(1/Δ)·C_r^d·Q_mᵀ·E_mᵀ − C_r^δ‖_F / ‖C_r^δ‖_F with m = 1 input, the
/// left side evaluated exactly from the stored A_Δ, B_Δ.
pub fn ctrb_relation_check(shift: &ShiftSystem, delta: &DeltaSystem, n_fast: usize) -> Result<f64> {
    let crdelta = build_ctrb_delta(delta, n_fast)?;
    let a = ExactMat::from_mat(&shift.a_tau);
    let mut cols = vec![ExactMat::from_mat(&shift.b_tau)];
    for _ in 1..n_fast {
        let next = a.mul(cols.last().unwrap());
        cols.push(next);
    }
    let lhs = Mat::hstack(&binomial_combine(&cols, delta.tau, 1))?;
    Ok(rel_err(&lhs, &crdelta))
}

/// Block l of the result is Δ^{−(l+shift)}·Σ_{k≤l} C(l,k)(−1)^{l−k}·blocks[k],
/// computed exactly and rounded once.
fn binomial_combine(blocks: &[ExactMat], delta: f64, shift: usize) -> Vec<Mat> {
    let q = build_qp(blocks.len(), 1);
    let inv_delta = BigRational::from_float(delta)
        .expect("finite delta")
        .recip();
    let mut scale = BigRational::from_integer(BigInt::from(1));
    for _ in 0..shift {
        scale *= &inv_delta;
    }
    let mut out = Vec::with_capacity(blocks.len());
    for l in 0..blocks.len() {
        let (rows, cols) = (blocks[l].rows, blocks[l].cols);
        let mut m = Mat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                let mut acc = BigRational::zero();
                for (k, blk) in blocks.iter().enumerate().take(l + 1) {
                    acc +=
                        &blk.get(i, j) * BigRational::from_integer(BigInt::from(q[(l, k)] as i64));
                }
                m[(i, j)] = (acc * &scale).to_f64().unwrap_or(f64::NAN);
            }
        }
        out.push(m);
        scale *= &inv_delta;
    }
    out
}

/// Shift and delta stacks for one fast rate, with the factorization matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct MultirateMaps {
    pub co_d: Mat,
    pub do_d: Mat,
    pub co_delta: Mat,
    pub do_delta: Mat,
    pub ep: Mat,
    pub qp: Mat,
    pub n_fast: usize,
    pub p: usize,
    pub n: usize,
    pub delta: f64,
    fast: ShiftSystem,
}

/// Relative residuals of the factorization identities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorizationResidual {
    pub observability: f64,
    pub feedthrough: f64,
}

impl MultirateMaps {
    pub fn new(fast_shift: &ShiftSystem, fast_delta: &DeltaSystem, n_fast: usize) -> Result<Self> {
        let (co_d, do_d) = build_shift_maps(fast_shift, n_fast)?;
        let (co_delta, do_delta) = build_delta_maps(fast_delta, n_fast)?;
        let p = fast_shift.c.rows();
        Ok(Self {
            ep: build_ep(n_fast, p, fast_delta.tau)?,
            qp: build_qp(n_fast, p),
            co_d,
            do_d,
            co_delta,
            do_delta,
            n_fast,
            p,
            n: fast_shift.a_tau.rows(),
            delta: fast_delta.tau,
            fast: fast_shift.clone(),
        })
    }

    pub fn from_dual(dual: &DualRate) -> Result<Self> {
        Self::new(&dual.fast_shift, &dual.fast, dual.n_fast)
    }

    /// E_p·Q_p
    pub fn ep_qp(&self) -> Mat {
        &self.ep * &self.qp
    }

    /// Residuals of E_pQ_pC_o^d = C_o^δ and E_pQ_pD_o^d = D_o^δ evaluated in
    /// floating point. At small Δ the product multiplies rounding error by
    /// Δ^{−(N−1)}, so this is a conditioning probe rather than a proof.
    pub fn factorization_residual_f64(&self) -> FactorizationResidual {
        let eq = self.ep_qp();
        FactorizationResidual {
            observability: rel_err(&(&eq * &self.co_d), &self.co_delta),
            feedthrough: rel_err(&(&eq * &self.do_d), &self.do_delta),
        }
    }

    /// Same residuals with the shift stacks rebuilt and multiplied in exact
    /// rational arithmetic from the stored A_Δ, B_Δ. Only the rounding in the
    /// direct delta stacks remains.
    pub fn factorization_residual(&self) -> FactorizationResidual {
        let n = self.n;
        let a = ExactMat::from_mat(&self.fast.a_tau);
        let b = ExactMat::from_mat(&self.fast.b_tau);
        let c = ExactMat::from_mat(&self.fast.c);
        let mut co_rows = Vec::with_capacity(self.n_fast);
        let mut do_rows = Vec::with_capacity(self.n_fast);
        let mut power = ExactMat::identity(n);
        let mut partial = ExactMat::zeros(n, 1);
        for _ in 0..self.n_fast {
            co_rows.push(c.mul(&power));
            do_rows.push(c.mul(&partial));
            partial = partial.add(&power.mul(&b));
            power = power.mul(&a);
        }
        let co = Mat::vstack(&binomial_combine(&co_rows, self.delta, 0)).expect("matching cols");
        let dd = Mat::vstack(&binomial_combine(&do_rows, self.delta, 0)).expect("matching cols");
        FactorizationResidual {
            observability: rel_err(&co, &self.co_delta),
            feedthrough: rel_err(&dd, &self.do_delta),
        }
    }
}

fn rel_err(approx: &Mat, reference: &Mat) -> f64 {
    let scale = reference.norm_fro();
    let diff = approx
        .as_slice()
        .iter()
        .zip(reference.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

struct ExactMat {
    rows: usize,
    cols: usize,
    data: Vec<BigRational>,
}

impl ExactMat {
    fn from_mat(m: &Mat) -> Self {
        Self {
            rows: m.rows(),
            cols: m.cols(),
            data: m
                .as_slice()
                .iter()
                .map(|v| BigRational::from_float(*v).expect("finite entry"))
                .collect(),
        }
    }

    fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![BigRational::zero(); rows * cols],
        }
    }

    fn identity(n: usize) -> Self {
        let mut out = Self::zeros(n, n);
        for i in 0..n {
            out.data[i * n + i] = BigRational::from_integer(BigInt::from(1));
        }
        out
    }

    fn get(&self, i: usize, j: usize) -> BigRational {
        self.data[i * self.cols + j].clone()
    }

    fn mul(&self, rhs: &ExactMat) -> ExactMat {
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self.data[i * self.cols + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let b = &rhs.data[k * rhs.cols + j];
                    if !b.is_zero() {
                        out.data[i * rhs.cols + j] += a * b;
                    }
                }
            }
        }
        out
    }

    fn add(&self, rhs: &ExactMat) -> ExactMat {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StackKind {
    Continuous,
    Shift,
    Delta,
}

impl StackKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StackKind::Continuous => "continuous",
            StackKind::Shift => "shift",
            StackKind::Delta => "delta",
        }
    }
}

/// Singular values, ranks and condition number of one stack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackConditioning {
    pub kind: StackKind,
    pub singular_values: Vec<f64>,
    /// rank at the SVD-scaled default tolerance
    pub rank: usize,
    /// rank at the fixed absolute tolerance
    pub rank_fixed: usize,
    /// `None` when the smallest singular value is exactly zero
    pub condition: Option<f64>,
}

impl StackConditioning {
    pub fn of(kind: StackKind, m: &Mat) -> Self {
        Self::with_tol(kind, m, FIXED_RANK_TOL)
    }

    pub fn with_tol(kind: StackKind, m: &Mat, fixed_tol: f64) -> Self {
        let cond = condition_number(m);
        Self {
            kind,
            singular_values: singular_values(m),
            rank: numerical_rank(m, default_rank_tol(m)),
            rank_fixed: numerical_rank(m, fixed_tol),
            condition: cond.is_finite().then_some(cond),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodConditioning {
    pub delta: f64,
    pub shift: StackConditioning,
    pub delta_form: StackConditioning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditioningReport {
    pub n_fast: usize,
    pub fixed_tol: f64,
    pub continuous: StackConditioning,
    pub periods: Vec<PeriodConditioning>,
}

/// Conditioning of the N-sample stacks of `sys` at each fast period in
/// `deltas`, against the continuous stack [C; CA; …; CA^{N−1}].
pub fn conditioning_report(
    sys: &ContinuousLti,
    n_fast: usize,
    deltas: &[f64],
) -> Result<ConditioningReport> {
    conditioning_report_with_tol(sys, n_fast, deltas, FIXED_RANK_TOL)
}

/// [`conditioning_report`] with a caller-chosen fixed rank tolerance.
pub fn conditioning_report_with_tol(
    sys: &ContinuousLti,
    n_fast: usize,
    deltas: &[f64],
    fixed_tol: f64,
) -> Result<ConditioningReport> {
    if !(fixed_tol > 0.0 && fixed_tol.is_finite()) {
        return Err(Error::InvalidArgument {
            name: "fixed_tol",
            reason: format!("must be positive, got {fixed_tol}"),
        });
    }
    if deltas.is_empty() {
        return Err(Error::InvalidArgument {
            name: "deltas",
            reason: "need at least one sampling period".into(),
        });
    }
    check_len(n_fast)?;
    let mut periods = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let dual = DualRate::new(sys, delta * n_fast as f64, n_fast)?;
        let maps = MultirateMaps::from_dual(&dual)?;
        periods.push(PeriodConditioning {
            delta: dual.delta(),
            shift: StackConditioning::with_tol(StackKind::Shift, &maps.co_d, fixed_tol),
            delta_form: StackConditioning::with_tol(StackKind::Delta, &maps.co_delta, fixed_tol),
        });
    }
    Ok(ConditioningReport {
        n_fast,
        fixed_tol,
        continuous: StackConditioning::with_tol(
            StackKind::Continuous,
            &sys.observability(n_fast),
            fixed_tol,
        ),
        periods,
    })
}

impl ConditioningReport {
    /// One row per (Δ, stack): `delta,kind,sigma1..sigmaK,rank,rank_fixed,condition`.
    /// The continuous baseline has an empty delta field.
    pub fn to_csv(&self) -> String {
        let k = self.continuous.singular_values.len();
        let mut out = String::from("delta,kind");
        for i in 1..=k {
            out.push_str(&format!(",sigma{i}"));
        }
        out.push_str(",rank,rank_fixed,condition\n");
        let mut push = |delta: Option<f64>, s: &StackConditioning| {
            out.push_str(&delta.map(|d| d.to_string()).unwrap_or_default());
            out.push(',');
            out.push_str(s.kind.as_str());
            for v in &s.singular_values {
                out.push_str(&format!(",{v}"));
            }
            out.push_str(&format!(",{},{},", s.rank, s.rank_fixed));
            out.push_str(
                &s.condition
                    .map(|c| c.to_string())
                    .unwrap_or_else(|| "inf".into()),
            );
            out.push('\n');
        };
        push(None, &self.continuous);
        for p in &self.periods {
            push(Some(p.delta), &p.shift);
            push(Some(p.delta), &p.delta_form);
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// True if any reported stack falls short of full column rank at the
    /// default tolerance.
    pub fn any_rank_deficient(&self) -> bool {
        let n = self.continuous.singular_values.len();
        std::iter::once(&self.continuous)
            .chain(self.periods.iter().flat_map(|p| [&p.shift, &p.delta_form]))
            .any(|s| s.rank < n)
    }
}
