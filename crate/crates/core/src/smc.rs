//! Sliding-mode design in regular form: control laws, gain conditions and the
//! closed-form band and ultimate-bound calculators.

use serde::{Deserialize, Serialize};

use crate::discretize::{delta_stable, DeltaSystem};
use crate::error::{Error, Result};
use crate::matlib::{dot, eigenvalues, lu_solve, norm2, spectral_norm, Mat};
use crate::mrse::MrseGains;

/// |B_δτ2| below this (relative to ‖B_δτ‖) is treated as zero.
const TRANSFORM_TOL: f64 = 1e-12;

/// Coordinates x = T·ξ in which the input enters only the last state.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularForm {
    pub t: Mat,
    pub t_inv: Mat,
    pub abar: Mat,
    pub bbar: Mat,
    pub cbar: Mat,
}

impl RegularForm {
    /// T = [I, −B_δτ1/B_δτ2; 0, 1], Ā = T·A_δτ·T⁻¹, B̄ = T·B_δτ, C̄ = C·T⁻¹.
    pub fn new(sys: &DeltaSystem) -> Result<Self> {
        let n = sys.n();
        let b = &sys.b_delta;
        let last = b[(n - 1, 0)];
        if !(last.abs() > TRANSFORM_TOL * b.max_abs()) {
            return Err(Error::NotTransformable { last });
        }
        let mut t = Mat::identity(n);
        let mut t_inv = Mat::identity(n);
        for i in 0..n - 1 {
            t[(i, n - 1)] = -b[(i, 0)] / last;
            t_inv[(i, n - 1)] = b[(i, 0)] / last;
        }
        let mut bbar = &t * b;
        for i in 0..n - 1 {
            bbar[(i, 0)] = 0.0;
        }
        Ok(Self {
            abar: &(&t * &sys.a_delta) * &t_inv,
            cbar: &sys.c * &t_inv,
            bbar,
            t,
            t_inv,
        })
    }

    pub fn n(&self) -> usize {
        self.abar.rows()
    }

    pub fn a11(&self) -> Mat {
        let n = self.n();
        self.abar.block(0, 0, n - 1, n - 1)
    }

    pub fn a12(&self) -> Mat {
        let n = self.n();
        self.abar.block(0, n - 1, n - 1, 1)
    }

    pub fn a21(&self) -> Mat {
        let n = self.n();
        self.abar.block(n - 1, 0, 1, n - 1)
    }

    pub fn a22(&self) -> f64 {
        let n = self.n();
        self.abar[(n - 1, n - 1)]
    }

    pub fn b2(&self) -> f64 {
        self.bbar[(self.n() - 1, 0)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Periodic,
    Event,
}

/// sgn with sgn(0) = 0
pub fn sgn(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// User-chosen sliding and switching parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmcParams {
    /// sliding vector [c₁ᵀ 1]ᵀ in regular-form coordinates
    pub c: Vec<f64>,
    pub epsilon: f64,
    pub alpha: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmcDesign {
    pub c: Vec<f64>,
    pub epsilon: f64,
    pub alpha: f64,
    pub sigma: f64,
    pub d0: f64,
    /// |cᵀB̄|·d0
    pub d_m: f64,
    /// |cᵀĀ·T·L_u|·d0
    pub f_m: f64,
    /// |cᵀT·L_u|·d0
    pub l_m: f64,
    pub a_cl: Mat,
    pub tau: f64,
    /// cᵀB̄
    pub cb: f64,
    /// cᵀĀ
    pub ca: Vec<f64>,
    /// ‖Ā‖₂
    pub abar_norm: f64,
    /// ‖c‖₂
    pub c_norm: f64,
}

impl SmcDesign {
    pub fn new(rf: &RegularForm, gains: &MrseGains, params: &SmcParams, d0: f64) -> Result<Self> {
        let n = rf.n();
        let SmcParams {
            c,
            epsilon,
            alpha,
            sigma,
        } = params.clone();
        if c.len() != n {
            return Err(Error::Dimension {
                op: "SmcDesign",
                detail: format!("c has {} entries, plant has {n} states", c.len()),
            });
        }
        if c[n - 1] != 1.0 {
            return Err(Error::InvalidArgument {
                name: "c",
                reason: format!("last entry must be 1, got {}", c[n - 1]),
            });
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidArgument {
                name: "epsilon",
                reason: format!("must be positive, got {epsilon}"),
            });
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidArgument {
                name: "alpha",
                reason: format!("must be non-negative, got {alpha}"),
            });
        }
        if !(sigma > 0.0 && sigma < 1.0) {
            return Err(Error::InvalidArgument {
                name: "sigma",
                reason: format!("must lie in (0, 1), got {sigma}"),
            });
        }
        if !(d0 >= 0.0 && d0.is_finite()) {
            return Err(Error::InvalidArgument {
                name: "d0",
                reason: format!("must be non-negative, got {d0}"),
            });
        }
        if gains.n != n {
            return Err(Error::Dimension {
                op: "SmcDesign",
                detail: format!("gains are for {} states, plant has {n}", gains.n),
            });
        }
        let cb = dot(&c, &rf.bbar.col_vec(0));
        if !(cb.abs() > TRANSFORM_TOL * norm2(&c) * rf.bbar.max_abs()) {
            return Err(Error::InvalidArgument {
                name: "c",
                reason: format!("cᵀB̄ = {cb:e} is numerically zero"),
            });
        }
        let ca = rf.abar.transpose().matvec(&c);
        let tlu = (&rf.t * &gains.lu).col_vec(0);
        let abar_tlu = rf.abar.matvec(&tlu);
        let c1 = Mat::row(&c[..n - 1])?;
        let a_cl = if n > 1 {
            &rf.a11() - &(&rf.a12() * &c1)
        } else {
            Mat::zeros(1, 1)
        };
        Ok(Self {
            d_m: cb.abs() * d0,
            f_m: dot(&c, &abar_tlu).abs() * d0,
            l_m: dot(&c, &tlu).abs() * d0,
            abar_norm: spectral_norm(&rf.abar),
            c_norm: norm2(&c),
            cb,
            ca,
            a_cl,
            tau: gains.tau,
            d0,
            c,
            epsilon,
            alpha,
            sigma,
        })
    }

    pub fn c1(&self) -> &[f64] {
        &self.c[..self.c.len() - 1]
    }

    /// s = cᵀx
    pub fn sliding(&self, x: &[f64]) -> f64 {
        dot(&self.c, x)
    }

    /// F = −(cᵀB̄)⁻¹cᵀĀ
    pub fn feedback_row(&self) -> Vec<f64> {
        self.ca.iter().map(|v| -v / self.cb).collect()
    }

    /// g₁ = −(cᵀB̄)⁻¹·ε·sgn s̄
    pub fn switching_term(&self, s_bar: f64) -> f64 {
        -self.epsilon * sgn(s_bar) / self.cb
    }

    /// u(k) = −(cᵀB̄)⁻¹(cᵀĀx̄(k) + ε·sgn s̄(k))
    pub fn control_periodic(&self, x_bar: &[f64], s_bar: f64) -> f64 {
        -(dot(&self.ca, x_bar) + self.epsilon * sgn(s_bar)) / self.cb
    }

    /// Same law evaluated at the last trigger instant k_i; the caller holds it.
    pub fn control_event(&self, x_at_trigger: &[f64], s_at_trigger: f64) -> f64 {
        self.control_periodic(x_at_trigger, s_at_trigger)
    }

    /// ‖c‖·‖Ā‖·‖ē‖, the quantity compared with σα by the trigger rule.
    pub fn trigger_metric(&self, e: &[f64]) -> f64 {
        self.c_norm * self.abar_norm * norm2(e)
    }

    /// d_m + f_m (+ α in event mode)
    pub fn gain_threshold(&self, mode: Mode) -> f64 {
        let base = self.d_m + self.f_m;
        match mode {
            Mode::Periodic => base,
            Mode::Event => base + self.alpha,
        }
    }

    pub fn validate_gain(&self, mode: Mode) -> GainCheck {
        let threshold = self.gain_threshold(mode);
        let margin = self.epsilon - threshold;
        let ok = margin > 0.0;
        let rule = match mode {
            Mode::Periodic => "epsilon > d_m+f_m",
            Mode::Event => "epsilon > d_m+f_m+alpha",
        };
        let violation = (!ok).then(|| {
            let neg = match mode {
                Mode::Periodic => "epsilon ≤ d_m+f_m",
                Mode::Event => "epsilon ≤ d_m+f_m+alpha",
            };
            format!("{neg} ({} ≤ {threshold})", self.epsilon)
        });
        let warning = (ok && margin < 0.01 * self.epsilon)
            .then(|| format!("{rule} holds with margin {margin:e}, under 1% of epsilon"));
        GainCheck {
            mode,
            epsilon: self.epsilon,
            threshold,
            margin,
            ok,
            violation,
            warning,
        }
    }
}

/// Outcome of the strict switching-gain inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainCheck {
    pub mode: Mode,
    pub epsilon: f64,
    pub threshold: f64,
    pub margin: f64,
    pub ok: bool,
    pub violation: Option<String>,
    pub warning: Option<String>,
}

/// Q for the reduced-order Lyapunov equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum QChoice {
    #[default]
    Identity,
    Diagonal(Vec<f64>),
    Matrix(Mat),
}

impl QChoice {
    pub fn build(&self, n: usize) -> Result<Mat> {
        let q = match self {
            QChoice::Identity => Mat::identity(n),
            QChoice::Diagonal(d) => {
                if d.len() != n {
                    return Err(Error::Dimension {
                        op: "QChoice",
                        detail: format!("{} diagonal entries for order {n}", d.len()),
                    });
                }
                Mat::diag(d)
            }
            QChoice::Matrix(m) => {
                if m.shape() != (n, n) {
                    return Err(Error::Dimension {
                        op: "QChoice",
                        detail: format!("Q is {:?}, need {n}x{n}", m.shape()),
                    });
                }
                m.clone()
            }
        };
        if q.max_abs_diff(&q.transpose()) > 1e-12 * q.max_abs() || q.cholesky().is_none() {
            return Err(Error::NotPositiveDefinite { what: "Q" });
        }
        Ok(q)
    }
}

/// Solves A_clᵀP + P·A_cl + τ·A_clᵀP·A_cl = −Q for symmetric P ≻ 0.
pub fn solve_delta_lyapunov(a_cl: &Mat, tau: f64, q: &Mat) -> Result<Mat> {
    let m = a_cl.rows();
    if !a_cl.is_square() || q.shape() != (m, m) {
        return Err(Error::Dimension {
            op: "solve_delta_lyapunov",
            detail: format!("A_cl {:?}, Q {:?}", a_cl.shape(), q.shape()),
        });
    }
    if !delta_stable(a_cl, tau)? {
        return Err(Error::NotDeltaStable { tau });
    }
    if q.max_abs_diff(&q.transpose()) > 1e-12 * q.max_abs() || q.cholesky().is_none() {
        return Err(Error::NotPositiveDefinite { what: "Q" });
    }
    let at = a_cl.transpose();
    let eye = Mat::identity(m);
    let op = &(&eye.kron(&at) + &at.kron(&eye)) + &at.kron(&at).scale(tau);
    let rhs = Mat::column(&q.scale(-1.0).vec_col_major())?;
    let v = lu_solve(&op, &rhs)?;
    let p = Mat::from_col_major(m, m, &v.col_vec(0)).symmetrize();
    if p.cholesky().is_none() {
        return Err(Error::NotPositiveDefinite { what: "P" });
    }
    Ok(p)
}

/// ‖A_clᵀP + P·A_cl + τ·A_clᵀP·A_cl + Q‖_F
pub fn lyapunov_residual(a_cl: &Mat, tau: f64, p: &Mat, q: &Mat) -> f64 {
    let at = a_cl.transpose();
    let atp = &at * p;
    let r = &(&(&atp + &(p * a_cl)) + &(&atp * a_cl).scale(tau)) + q;
    r.norm_fro()
}

fn sym_eig_extremes(m: &Mat) -> Result<(f64, f64)> {
    let ev = eigenvalues(&m.symmetrize())?;
    let lo = ev.iter().map(|e| e.re).fold(f64::INFINITY, f64::min);
    let hi = ev.iter().map(|e| e.re).fold(f64::NEG_INFINITY, f64::max);
    Ok((lo, hi))
}

/// All band and bound quantities for one design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandReport {
    pub d_m: f64,
    pub f_m: f64,
    pub l_m: f64,
    pub epsilon: f64,
    pub alpha: f64,
    pub tau: f64,
    pub a1: f64,
    pub b1: f64,
    pub omega: f64,
    pub a3: f64,
    pub b3: f64,
    pub omega1: f64,
    pub p: Mat,
    pub q: Mat,
    pub gamma1: f64,
    pub gamma2: f64,
    pub a2: f64,
    pub b2: f64,
    pub c2: f64,
    pub theta1: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub b4: f64,
    pub c4: f64,
    pub theta2: f64,
    pub periodic: GainCheck,
    pub event: GainCheck,
    /// false when a gain inequality fails and the report was produced anyway
    pub feasible: bool,
}

/// Computes every band quantity.
///
/// With `enforce` set, a violated gain inequality for `mode` is an
/// [`Error::Infeasible`]. Without it the formulas are still evaluated (the
/// square roots stay real for either sign of a₁, a₃) and `feasible` records
/// the violation.
pub fn band_report(
    design: &SmcDesign,
    rf: &RegularForm,
    q_choice: &QChoice,
    mode: Mode,
    enforce: bool,
) -> Result<BandReport> {
    let periodic = design.validate_gain(Mode::Periodic);
    let event = design.validate_gain(Mode::Event);
    let check = match mode {
        Mode::Periodic => &periodic,
        Mode::Event => &event,
    };
    if enforce && !check.ok {
        return Err(Error::Infeasible(
            check.violation.clone().unwrap_or_default(),
        ));
    }
    let SmcDesign {
        d_m,
        f_m,
        l_m,
        epsilon: eps,
        alpha,
        tau,
        ..
    } = *design;
    let reach = l_m + tau * (eps + d_m + f_m);

    let a1 = 2.0 * (eps - d_m - f_m);
    let b1 = tau * (eps + d_m + f_m).powi(2) / a1;
    let omega = reach.max((b1 * b1 + tau * a1 * b1).sqrt());

    let a3 = 2.0 * (eps - alpha - d_m - f_m);
    let b3 = tau * (eps + alpha + d_m + f_m).powi(2) / a3;
    let omega1 = reach
        .max((b3 * b3 + tau * a3 * b3).sqrt())
        .max(alpha / design.abar_norm + l_m);

    let m = design.a_cl.rows();
    let q = q_choice.build(m)?;
    let p = solve_delta_lyapunov(&design.a_cl, tau, &q)?;
    let (p_min, p_max) = sym_eig_extremes(&p)?;
    let (q_min, _) = sym_eig_extremes(&q)?;
    let a12 = rf.a12();
    let pa12 = &p * &a12;
    let coupling = spectral_norm(&(&pa12 + &(&design.a_cl.transpose() * &pa12).scale(tau)));
    let a12_norm2 = spectral_norm(&a12).powi(2);
    let c1_norm = norm2(design.c1());
    let a2 = q_min;
    let bound = |b: f64, c: f64, band: f64| {
        (1.0 + c1_norm) * ((p_max * (c.sqrt() + b).powi(2) + tau * a2 * c) / p_min).sqrt() + band
    };

    let gamma1 = coupling * omega;
    let gamma2 = tau * p_max * a12_norm2 * omega * omega;
    let b2 = gamma1 / a2;
    let c2 = gamma2 / a2 + b2 * b2;
    let theta1 = bound(b2, c2, omega);

    let beta1 = coupling * omega1;
    let beta2 = tau * p_max * a12_norm2 * omega1 * omega1;
    let b4 = beta1 / a2;
    let c4 = beta2 / a2 + beta1 * beta1 / (a2 * a2);
    let theta2 = bound(b4, c4, omega1);

    Ok(BandReport {
        d_m,
        f_m,
        l_m,
        epsilon: eps,
        alpha,
        tau,
        a1,
        b1,
        omega,
        a3,
        b3,
        omega1,
        p,
        q,
        gamma1,
        gamma2,
        a2,
        b2,
        c2,
        theta1,
        beta1,
        beta2,
        b4,
        c4,
        theta2,
        feasible: check.ok,
        periodic,
        event,
    })
}

/// Sliding vector c = [c₁ᵀ 1]ᵀ placing the eigenvalues of Ā₁₁ − Ā₁₂c₁ᵀ at
/// the given real delta-domain `poles` (Ackermann).
pub fn place_sliding_vector(rf: &RegularForm, poles: &[f64]) -> Result<Vec<f64>> {
    let m = rf.n() - 1;
    if poles.len() != m {
        return Err(Error::Dimension {
            op: "place_sliding_vector",
            detail: format!("{} poles for reduced order {m}", poles.len()),
        });
    }
    if m == 0 {
        return Ok(vec![1.0]);
    }
    let a = rf.a11();
    let b = rf.a12();
    let mut cols = vec![b.clone()];
    for _ in 1..m {
        let next = &a * cols.last().unwrap();
        cols.push(next);
    }
    let ctrb = Mat::hstack(&cols)?;
    let mut phi = Mat::identity(m);
    for &p in poles {
        phi = &phi * &(&a - &Mat::identity(m).scale(p));
    }
    let mut last = Mat::zeros(1, m);
    last[(0, m - 1)] = 1.0;
    // row = e_mᵀ·Ctrb⁻¹, solved as Ctrbᵀ·rowᵀ = e_m
    let row = lu_solve(&ctrb.transpose(), &last.transpose())?.transpose();
    let c1 = &row * &phi;
    let mut c = c1.row_slice(0).to_vec();
    c.push(1.0);
    Ok(c)
}
