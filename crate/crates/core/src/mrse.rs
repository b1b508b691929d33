//! Multi-rate state estimation: N fast output samples per control period plus
//! the previous input reconstruct the state at the control instant.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::discretize::DualRate;
use crate::error::{Error, Result};
use crate::matlib::{condition_number, lstsq_normal, singular_values, Dd, Mat};
use crate::observability::MultirateMaps;

/// Gains are refused when the stack they invert is worse conditioned than this.
pub const CONDITION_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GainKind {
    Shift,
    Delta,
}

/// ξ̄(k) = L_y·y_k + L_u·u(k−1)
#[derive(Debug, Clone, PartialEq)]
pub struct MrseGains {
    pub ly: Mat,
    pub lu: Mat,
    pub kind: GainKind,
    pub n_fast: usize,
    pub p: usize,
    pub n: usize,
    pub tau: f64,
    /// condition number of the inverted stack
    pub condition: f64,
    /// A_τ·C_o⁺ for the stack of this kind
    recon: Mat,
    /// E_p·Q_p for the delta kind, `None` for shift
    pre: Option<Mat>,
}

/// Builds the gains from the stack of `kind`.
///
/// Fails with [`Error::Singular`] if the stack is rank deficient or its
/// condition number exceeds [`CONDITION_LIMIT`]; this is the expected outcome
/// for the shift kind at small Δ.
pub fn make_gains(dual: &DualRate, kind: GainKind) -> Result<MrseGains> {
    let maps = MultirateMaps::from_dual(dual)?;
    let (co, dd) = match kind {
        GainKind::Shift => (&maps.co_d, &maps.do_d),
        GainKind::Delta => (&maps.co_delta, &maps.do_delta),
    };
    let condition = condition_number(co);
    if !(condition <= CONDITION_LIMIT) {
        let sv = singular_values(co);
        return Err(Error::Singular {
            op: "make_gains",
            smallest_sv: sv.last().copied().unwrap_or(0.0),
            condition,
        });
    }
    let a_tau = &dual.slow_shift.a_tau;
    let b_tau = &dual.slow_shift.b_tau;
    let rows = co.rows();
    let pinv = lstsq_normal(co, &Mat::identity(rows))?;
    let recon = a_tau * &pinv;
    let lu = b_tau - &(a_tau * &lstsq_normal(co, dd)?);
    let (ly, pre) = match kind {
        GainKind::Shift => (recon.clone(), None),
        GainKind::Delta => {
            let eq = maps.ep_qp();
            (&recon * &eq, Some(eq))
        }
    };
    Ok(MrseGains {
        ly,
        lu,
        kind,
        n_fast: maps.n_fast,
        p: maps.p,
        n: maps.n,
        tau: dual.tau(),
        condition,
        recon,
        pre,
    })
}

impl MrseGains {
    pub fn stack_len(&self) -> usize {
        self.n_fast * self.p
    }

    /// ξ̄ from the stacked outputs. The delta kind forms the scaled divided
    /// differences E_pQ_p·y in double-double before applying A_τ·C_o⁺, which
    /// keeps the 1/Δ^{N−1} amplification from eating the rounding of y.
    pub fn estimate(&self, stack: &OutputStack, u_prev: f64) -> Result<Vec<f64>> {
        let y = stack.full_values(self.stack_len())?;
        let z: Vec<f64> = match &self.pre {
            Some(eq) => (0..eq.rows())
                .map(|i| {
                    let mut acc = Dd::ZERO;
                    for (j, yj) in y.iter().enumerate() {
                        let e = eq[(i, j)];
                        if e != 0.0 {
                            acc += *yj * e;
                        }
                    }
                    acc.to_f64()
                })
                .collect(),
            None => y.iter().map(|v| v.to_f64()).collect(),
        };
        Ok(self.combine(&self.recon, &z, u_prev))
    }

    /// ξ̄ = L_y·y + L_u·u evaluated literally in f64.
    pub fn estimate_literal(&self, stack: &OutputStack, u_prev: f64) -> Result<Vec<f64>> {
        let y: Vec<f64> = stack
            .full_values(self.stack_len())?
            .iter()
            .map(|v| v.to_f64())
            .collect();
        Ok(self.combine(&self.ly, &y, u_prev))
    }

    fn combine(&self, gain: &Mat, z: &[f64], u_prev: f64) -> Vec<f64> {
        gain.matvec(z)
            .iter()
            .enumerate()
            .map(|(i, v)| v + self.lu[(i, 0)] * u_prev)
            .collect()
    }
}

/// The last N fast output samples, oldest first, kept in double-double.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputStack {
    p: usize,
    capacity: usize,
    buf: VecDeque<Dd>,
}

impl OutputStack {
    pub fn new(n_fast: usize, p: usize) -> Self {
        Self {
            p,
            capacity: n_fast * p,
            buf: VecDeque::with_capacity(n_fast * p),
        }
    }

    pub fn for_gains(gains: &MrseGains) -> Self {
        Self::new(gains.n_fast, gains.p)
    }

    /// Appends one p-vector sample, discarding the oldest once full.
    pub fn push(&mut self, sample: &[Dd]) {
        assert_eq!(sample.len(), self.p, "output sample has wrong width");
        for v in sample {
            if self.buf.len() == self.capacity {
                self.buf.pop_front();
            }
            self.buf.push_back(*v);
        }
    }

    pub fn push_f64(&mut self, sample: &[f64]) {
        let s: Vec<Dd> = sample.iter().map(|v| Dd::from(*v)).collect();
        self.push(&s);
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.buf.len() == self.capacity
    }

    pub fn clear(&mut self) {
        self.buf.clear();
    }

    pub fn values(&self) -> Vec<Dd> {
        self.buf.iter().copied().collect()
    }

    fn full_values(&self, need: usize) -> Result<Vec<Dd>> {
        if self.capacity != need {
            return Err(Error::Dimension {
                op: "estimate",
                detail: format!("stack holds {} values, gains expect {need}", self.capacity),
            });
        }
        if !self.is_full() {
            return Err(Error::InsufficientHistory {
                have: self.buf.len(),
                need,
            });
        }
        Ok(self.values())
    }
}

/// s̄(k) = cᵀ·T·ξ̄(k)
pub fn sliding_measurement(
    c: &[f64],
    t: &Mat,
    gains: &MrseGains,
    stack: &OutputStack,
    u_prev: f64,
) -> Result<f64> {
    let xi = gains.estimate(stack, u_prev)?;
    let x = t.matvec(&xi);
    if c.len() != x.len() {
        return Err(Error::Dimension {
            op: "sliding_measurement",
            detail: format!("c has {} entries, state has {}", c.len(), x.len()),
        });
    }
    Ok(crate::matlib::dot(c, &x))
}
