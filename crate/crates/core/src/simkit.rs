//! Dual-rate closed-loop simulation: exact Δ-step plant, matched disturbance
//! models, event triggering and trace metrics.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::discretize::{ContinuousLti, DeltaSystem, DualRate};
use crate::error::{Error, Result};
use crate::matlib::{dot, mat_exp, norm2, Dd, Mat};
use crate::mrse::{make_gains, GainKind, MrseGains, OutputStack};
use crate::smc::{
    band_report, BandReport, GainCheck, Mode, QChoice, RegularForm, SmcDesign, SmcParams,
};

/// Disturbance acting on the input channel.
///
/// The matched kinds start from the continuous source d(t) =
/// amplitude·sin(omega·t + phase) and convert it to a sampled input-channel
/// disturbance through w(k).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DisturbanceSpec {
    #[default]
    None,
    Constant {
        value: f64,
    },
    Sinusoid {
        amplitude: f64,
        omega: f64,
        #[serde(default)]
        phase: f64,
    },
    EquivalentMatched {
        amplitude: f64,
        omega: f64,
        #[serde(default)]
        phase: f64,
    },
    ApproximateMatched {
        amplitude: f64,
        omega: f64,
        #[serde(default)]
        phase: f64,
    },
    /// one value per slow step; zero past the end
    Table {
        values: Vec<f64>,
    },
}

impl DisturbanceSpec {
    fn sine(amplitude: f64, omega: f64, phase: f64) -> impl Fn(f64) -> f64 {
        move |t| amplitude * (omega * t + phase).sin()
    }

    /// Continuous-time value where one is defined (not for tables).
    pub fn source(&self, t: f64) -> Option<f64> {
        match *self {
            DisturbanceSpec::None => Some(0.0),
            DisturbanceSpec::Constant { value } => Some(value),
            DisturbanceSpec::Sinusoid {
                amplitude,
                omega,
                phase,
            }
            | DisturbanceSpec::EquivalentMatched {
                amplitude,
                omega,
                phase,
            }
            | DisturbanceSpec::ApproximateMatched {
                amplitude,
                omega,
                phase,
            } => Some(Self::sine(amplitude, omega, phase)(t)),
            DisturbanceSpec::Table { .. } => None,
        }
    }

    pub fn is_matched(&self) -> bool {
        matches!(
            self,
            DisturbanceSpec::EquivalentMatched { .. } | DisturbanceSpec::ApproximateMatched { .. }
        )
    }
}

/// Composite Simpson evaluation of
/// w(k) = (1/τ)∫_{kτ}^{(k+1)τ} e^{A((k+1)τ−s)}B·d(s) ds, doubling the panel
/// count from 64 until successive estimates agree to 1e-10.
#[derive(Debug, Clone)]
pub struct WIntegrator {
    a: Mat,
    b: Mat,
    tau: f64,
    /// kernel e^{A(τ−jh)}B at the nodes of each refinement level
    levels: Vec<Vec<Vec<f64>>>,
}

const W_PANELS: usize = 64;
const W_TOL: f64 = 1e-10;
const W_MAX_LEVELS: usize = 10;

impl WIntegrator {
    pub fn new(sys: &ContinuousLti, tau: f64) -> Self {
        Self {
            a: sys.a.clone(),
            b: sys.b.clone(),
            tau,
            levels: Vec::new(),
        }
    }

    fn kernel(&mut self, level: usize) -> Result<&[Vec<f64>]> {
        while self.levels.len() <= level {
            let m = W_PANELS << self.levels.len();
            let h = self.tau / m as f64;
            let mut nodes = Vec::with_capacity(m + 1);
            for j in 0..=m {
                let e = mat_exp(&self.a, self.tau - j as f64 * h)?;
                nodes.push((&e * &self.b).col_vec(0));
            }
            self.levels.push(nodes);
        }
        Ok(&self.levels[level])
    }

    fn simpson(&mut self, level: usize, t0: f64, d: &dyn Fn(f64) -> f64) -> Result<Vec<f64>> {
        let tau = self.tau;
        let kernel = self.kernel(level)?;
        let m = kernel.len() - 1;
        let h = tau / m as f64;
        let n = kernel[0].len();
        let mut acc = vec![0.0; n];
        for (j, kj) in kernel.iter().enumerate() {
            let wgt = if j == 0 || j == m {
                1.0
            } else if j % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let f = wgt * d(t0 + j as f64 * h);
            for i in 0..n {
                acc[i] += f * kj[i];
            }
        }
        Ok(acc.iter().map(|v| v * h / 3.0 / tau).collect())
    }

    pub fn eval(&mut self, k: usize, d: &dyn Fn(f64) -> f64) -> Result<Vec<f64>> {
        let t0 = k as f64 * self.tau;
        let mut prev = self.simpson(0, t0, d)?;
        for level in 1..W_MAX_LEVELS {
            let next = self.simpson(level, t0, d)?;
            let change = prev
                .iter()
                .zip(&next)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            prev = next;
            if change < W_TOL {
                break;
            }
        }
        Ok(prev)
    }
}

/// One-shot w(k); use [`WIntegrator`] to reuse the kernel across steps.
pub fn w_integral(
    sys: &ContinuousLti,
    k: usize,
    tau: f64,
    d: &dyn Fn(f64) -> f64,
) -> Result<Vec<f64>> {
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument {
            name: "tau",
            reason: format!("must be positive, got {tau}"),
        });
    }
    WIntegrator::new(sys, tau).eval(k, d)
}

#[derive(Debug, Clone)]
struct Matched {
    equivalent: bool,
    h0: f64,
    c: Vec<f64>,
    am: Mat,
    cm: Vec<f64>,
    zeta: Vec<f64>,
    w: WIntegrator,
}

/// Stateful sampler producing the slow-rate disturbance sequence.
#[derive(Debug, Clone)]
pub struct DisturbanceModel {
    spec: DisturbanceSpec,
    tau: f64,
    k: usize,
    matched: Option<Matched>,
}

impl DisturbanceModel {
    /// For matched kinds, h0 = C·B_δτ, Â = τA_δτ + I, A_m = Â − (1/h0)ÂB_δτC
    /// and C_m = C·A_m, with ζ̄(0) = 0.
    pub fn new(spec: &DisturbanceSpec, sys: &ContinuousLti, slow: &DeltaSystem) -> Result<Self> {
        let tau = slow.tau;
        let matched = if spec.is_matched() {
            if slow.c.rows() != 1 {
                return Err(Error::Dimension {
                    op: "DisturbanceModel",
                    detail: format!(
                        "matched disturbances need one output, plant has {}",
                        slow.c.rows()
                    ),
                });
            }
            let n = slow.n();
            let h0 = (&slow.c * &slow.b_delta)[(0, 0)];
            if !(h0.abs() > 1e-12 * slow.c.max_abs() * slow.b_delta.max_abs()) {
                return Err(Error::RelativeDegree { h0 });
            }
            let a_hat = &slow.a_delta.scale(tau) + &Mat::identity(n);
            let am = &a_hat - &(&(&a_hat * &slow.b_delta) * &slow.c).scale(1.0 / h0);
            let cm = (&slow.c * &am).row_slice(0).to_vec();
            Some(Matched {
                equivalent: matches!(spec, DisturbanceSpec::EquivalentMatched { .. }),
                h0,
                c: slow.c.row_slice(0).to_vec(),
                am,
                cm,
                zeta: vec![0.0; n],
                w: WIntegrator::new(sys, tau),
            })
        } else {
            None
        };
        Ok(Self {
            spec: spec.clone(),
            tau,
            k: 0,
            matched,
        })
    }

    /// Index of the next sample [`Self::next_sample`] will return.
    pub fn step(&self) -> usize {
        self.k
    }

    /// d(k) for the current k, then advances to k + 1.
    pub fn next_sample(&mut self) -> Result<f64> {
        let k = self.k;
        self.k += 1;
        let t = k as f64 * self.tau;
        match &self.spec {
            DisturbanceSpec::Table { values } => Ok(values.get(k).copied().unwrap_or(0.0)),
            DisturbanceSpec::EquivalentMatched {
                amplitude,
                omega,
                phase,
            }
            | DisturbanceSpec::ApproximateMatched {
                amplitude,
                omega,
                phase,
            } => {
                let src = DisturbanceSpec::sine(*amplitude, *omega, *phase);
                let m = self.matched.as_mut().expect("matched state");
                let w = m.w.eval(k, &src)?;
                let direct = dot(&m.c, &w) / m.h0;
                if !m.equivalent {
                    return Ok(direct);
                }
                let out = dot(&m.cm, &m.zeta) + direct;
                let az = m.am.matvec(&m.zeta);
                m.zeta = az.iter().zip(&w).map(|(a, wi)| a + wi / m.h0).collect();
                Ok(out)
            }
            other => Ok(other.source(t).expect("closed-form source")),
        }
    }

    /// Value at an arbitrary time, for fast-rate sampling. Only defined for
    /// kinds with a closed-form source that acts directly on the input.
    pub fn at_time(&self, t: f64) -> Option<f64> {
        if self.spec.is_matched() {
            None
        } else {
            self.spec.source(t)
        }
    }

    /// ζ̄(k) for the equivalent kind.
    pub fn filter_state(&self) -> Option<&[f64]> {
        self.matched.as_ref().map(|m| m.zeta.as_slice())
    }
}

/// ξ + Δ·(A_δΔ·ξ + B_δΔ·v), the exact ZOH step at the fast rate.
pub fn step_fast(fast: &DeltaSystem, x: &[f64], u: f64, d: f64) -> Vec<f64> {
    let v = u + d;
    let ax = fast.a_delta.matvec(x);
    x.iter()
        .zip(&ax)
        .enumerate()
        .map(|(i, (xi, axi))| xi + fast.tau * (axi + fast.b_delta[(i, 0)] * v))
        .collect()
}

/// [`step_fast`] carried in double-double.
pub fn step_fast_dd(fast: &DeltaSystem, x: &[Dd], u: f64, d: f64) -> Vec<Dd> {
    let v = Dd::from(u) + Dd::from(d);
    let n = x.len();
    (0..n)
        .map(|i| {
            let mut acc = v * fast.b_delta[(i, 0)];
            for (j, xj) in x.iter().enumerate() {
                let a = fast.a_delta[(i, j)];
                if a != 0.0 {
                    acc += *xj * a;
                }
            }
            x[i] + acc * fast.tau
        })
        .collect()
}

fn output_dd(c: &Mat, x: &[Dd]) -> Vec<Dd> {
    (0..c.rows())
        .map(|i| {
            let mut acc = Dd::ZERO;
            for (j, xj) in x.iter().enumerate() {
                let cij = c[(i, j)];
                if cij != 0.0 {
                    acc += *xj * cij;
                }
            }
            acc
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    /// double-double plant and output stack
    #[default]
    Extended,
    /// f64 plant and the literal L_y·y product
    Double,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DisturbanceRate {
    /// held over each control period at its value at kτ
    #[default]
    Slow,
    /// re-sampled at every fast instant
    Fast,
}

/// Everything derived from a plant and a parameter set.
#[derive(Debug, Clone)]
pub struct LoopSetup {
    pub sys: ContinuousLti,
    pub dual: DualRate,
    pub gains: MrseGains,
    pub rf: RegularForm,
    pub design: SmcDesign,
    pub bands: BandReport,
}

impl LoopSetup {
    pub fn new(
        sys: &ContinuousLti,
        tau: f64,
        n_fast: usize,
        kind: GainKind,
        params: &SmcParams,
        q_choice: &QChoice,
        mode: Mode,
    ) -> Result<Self> {
        let dual = DualRate::new(sys, tau, n_fast)?;
        let gains = make_gains(&dual, kind)?;
        let rf = RegularForm::new(&dual.slow)?;
        let design = SmcDesign::new(&rf, &gains, params, sys.d0)?;
        let bands = band_report(&design, &rf, q_choice, mode, false)?;
        Ok(Self {
            sys: sys.clone(),
            dual,
            gains,
            rf,
            design,
            bands,
        })
    }

    pub fn n(&self) -> usize {
        self.sys.n()
    }

    pub fn tau(&self) -> f64 {
        self.dual.tau()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    pub mode: Mode,
    /// seconds
    pub horizon: f64,
    /// true initial state ξ(0)
    pub xi0: Vec<f64>,
    /// x̂(0) in regular-form coordinates; zero when absent
    pub xhat0: Option<Vec<f64>>,
    pub precision: Precision,
    pub disturbance_rate: DisturbanceRate,
    /// refuse to run when the switching-gain inequality for `mode` fails
    pub enforce_gain_condition: bool,
}

/// Per-step record plus summary. Index k runs over 0..=K with t = kτ.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub n: usize,
    pub tau: f64,
    pub t: Vec<f64>,
    /// true state ξ(k), row-major K+1 by n
    pub xi: Vec<f64>,
    /// estimate ξ̄(k); row 0 holds T⁻¹x̂(0)
    pub xi_bar: Vec<f64>,
    /// estimate in regular-form coordinates, x̄(k) = T·ξ̄(k); row 0 holds x̂(0)
    pub x_bar: Vec<f64>,
    pub s: Vec<f64>,
    pub s_bar: Vec<f64>,
    /// control applied on [kτ, (k+1)τ)
    pub u: Vec<f64>,
    /// disturbance sample at kτ
    pub d: Vec<f64>,
    pub trigger: Vec<bool>,
    /// ‖c‖‖Ā‖‖x̄(k_i) − x̄(k)‖ against the last trigger before k
    pub metric: Vec<f64>,
    pub summary: SimSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub mode: Mode,
    pub steps: usize,
    /// Ω₁ in event mode, Ω in periodic mode
    pub band: f64,
    pub omega: f64,
    pub omega1: f64,
    /// first k after which |s| never exceeds `band`
    pub band_entry_step: Option<usize>,
    pub band_entry_s: Option<f64>,
    /// first k with |s(k)| ≤ `band`
    pub first_entry_step: Option<usize>,
    pub first_entry_s: Option<f64>,
    pub sup_abs_s_after_entry: Option<f64>,
    pub sup_abs_s_after_first_entry: Option<f64>,
    /// updates at k ∈ [0, K)
    pub trigger_count: usize,
    /// updates a periodic loop makes over the same horizon
    pub periodic_count: usize,
    pub max_gap_steps: Option<usize>,
    pub max_gap_s: Option<f64>,
    pub min_gap_steps: Option<usize>,
    pub max_abs_d: f64,
    pub gain: GainCheck,
}

/// Runs the sampled-data loop for `opts.horizon` seconds.
///
/// At k = 0 the control comes from x̂(0) and counts as the first trigger. At
/// each later k the stack holds the N fast outputs of the previous period,
/// the estimate is formed, and the control is refreshed every step
/// (periodic) or when ‖c‖‖Ā‖‖ē(k)‖ ≥ σα (event).
pub fn run_closed_loop(
    setup: &LoopSetup,
    opts: &SimOptions,
    dist: &DisturbanceSpec,
) -> Result<SimTrace> {
    let n = setup.n();
    let tau = setup.tau();
    if !(opts.horizon > 0.0 && opts.horizon.is_finite()) {
        return Err(Error::InvalidArgument {
            name: "horizon",
            reason: format!("must be positive, got {}", opts.horizon),
        });
    }
    if opts.xi0.len() != n {
        return Err(Error::Dimension {
            op: "run_closed_loop",
            detail: format!(
                "initial state has {} entries, plant has {n}",
                opts.xi0.len()
            ),
        });
    }
    let xhat0 = opts.xhat0.clone().unwrap_or_else(|| vec![0.0; n]);
    if xhat0.len() != n {
        return Err(Error::Dimension {
            op: "run_closed_loop",
            detail: format!("xhat0 has {} entries, plant has {n}", xhat0.len()),
        });
    }
    let design = &setup.design;
    let gain = design.validate_gain(opts.mode);
    if opts.enforce_gain_condition && !gain.ok {
        return Err(Error::Infeasible(
            gain.violation.clone().unwrap_or_default(),
        ));
    }
    if opts.disturbance_rate == DisturbanceRate::Fast
        && (dist.is_matched() || matches!(dist, DisturbanceSpec::Table { .. }))
    {
        return Err(Error::InvalidArgument {
            name: "disturbance_rate",
            reason: "fast sampling needs a closed-form input disturbance".into(),
        });
    }
    let steps = (opts.horizon / tau).round() as usize;
    if steps == 0 {
        return Err(Error::InvalidArgument {
            name: "horizon",
            reason: format!("shorter than one control period {tau}"),
        });
    }

    let fast = &setup.dual.fast;
    let n_fast = setup.dual.n_fast;
    let delta = fast.tau;
    let t_mat = &setup.rf.t;
    let t_inv = &setup.rf.t_inv;
    let mut model = DisturbanceModel::new(dist, &setup.sys, &setup.dual.slow)?;
    let mut stack = OutputStack::for_gains(&setup.gains);
    let extended = opts.precision == Precision::Extended;
    let mut x_dd: Vec<Dd> = opts.xi0.iter().map(|v| Dd::from(*v)).collect();
    let mut x_f = opts.xi0.clone();

    let rows = steps + 1;
    let mut trace = SimTrace {
        n,
        tau,
        t: Vec::with_capacity(rows),
        xi: Vec::with_capacity(rows * n),
        xi_bar: Vec::with_capacity(rows * n),
        x_bar: Vec::with_capacity(rows * n),
        s: Vec::with_capacity(rows),
        s_bar: Vec::with_capacity(rows),
        u: Vec::with_capacity(rows),
        d: Vec::with_capacity(rows),
        trigger: Vec::with_capacity(rows),
        metric: Vec::with_capacity(rows),
        summary: empty_summary(opts.mode, steps, gain),
    };

    let s_bar0 = design.sliding(&xhat0);
    let mut u = design.control_event(&xhat0, s_bar0);
    let mut x_at_trigger = xhat0.clone();
    let mut xbar = xhat0;
    let mut s_bar = s_bar0;
    let mut triggered = true;
    let mut metric = 0.0;

    for k in 0..=steps {
        let xi_now: Vec<f64> = if extended {
            x_dd.iter().map(|v| v.to_f64()).collect()
        } else {
            x_f.clone()
        };
        let d_k = model.next_sample()?;
        trace.t.push(k as f64 * tau);
        trace.s.push(design.sliding(&t_mat.matvec(&xi_now)));
        trace.xi.extend_from_slice(&xi_now);
        trace.xi_bar.extend(t_inv.matvec(&xbar));
        trace.x_bar.extend_from_slice(&xbar);
        trace.s_bar.push(s_bar);
        trace.u.push(u);
        trace.d.push(d_k);
        trace.trigger.push(triggered);
        trace.metric.push(metric);
        if k == steps {
            break;
        }

        for j in 0..n_fast {
            let d_j = match opts.disturbance_rate {
                DisturbanceRate::Slow => d_k,
                DisturbanceRate::Fast => model
                    .at_time(k as f64 * tau + j as f64 * delta)
                    .expect("checked above"),
            };
            if extended {
                stack.push(&output_dd(&fast.c, &x_dd));
                x_dd = step_fast_dd(fast, &x_dd, u, d_j);
            } else {
                stack.push_f64(&fast.c.matvec(&x_f));
                x_f = step_fast(fast, &x_f, u, d_j);
            }
        }

        let xi_bar = if extended {
            setup.gains.estimate(&stack, u)?
        } else {
            setup.gains.estimate_literal(&stack, u)?
        };
        xbar = t_mat.matvec(&xi_bar);
        s_bar = design.sliding(&xbar);
        let e: Vec<f64> = x_at_trigger.iter().zip(&xbar).map(|(a, b)| a - b).collect();
        metric = design.trigger_metric(&e);
        triggered = match opts.mode {
            Mode::Periodic => true,
            Mode::Event => metric >= design.sigma * design.alpha,
        };
        if triggered {
            u = design.control_event(&xbar, s_bar);
            x_at_trigger = xbar.clone();
        }
    }

    trace.summary = summarize(&trace, opts.mode, &setup.bands, trace.summary.gain.clone());
    Ok(trace)
}

fn empty_summary(mode: Mode, steps: usize, gain: GainCheck) -> SimSummary {
    SimSummary {
        mode,
        steps,
        band: 0.0,
        omega: 0.0,
        omega1: 0.0,
        band_entry_step: None,
        band_entry_s: None,
        first_entry_step: None,
        first_entry_s: None,
        sup_abs_s_after_entry: None,
        sup_abs_s_after_first_entry: None,
        trigger_count: 0,
        periodic_count: steps,
        max_gap_steps: None,
        max_gap_s: None,
        min_gap_steps: None,
        max_abs_d: 0.0,
        gain,
    }
}

fn summarize(trace: &SimTrace, mode: Mode, bands: &BandReport, gain: GainCheck) -> SimSummary {
    let steps = trace.t.len() - 1;
    let tau = trace.tau;
    let band = match mode {
        Mode::Periodic => bands.omega,
        Mode::Event => bands.omega1,
    };
    let abs_s: Vec<f64> = trace.s.iter().map(|v| v.abs()).collect();
    let entry = match abs_s.iter().rposition(|v| *v > band) {
        None => Some(0),
        Some(last) if last < steps => Some(last + 1),
        Some(_) => None,
    };
    let first = abs_s.iter().position(|v| *v <= band);
    let sup_from = |k: Option<usize>| k.map(|k| abs_s[k..].iter().copied().fold(0.0, f64::max));
    let triggers: Vec<usize> = (0..steps).filter(|k| trace.trigger[*k]).collect();
    let gaps: Vec<usize> = triggers.windows(2).map(|w| w[1] - w[0]).collect();
    SimSummary {
        mode,
        steps,
        band,
        omega: bands.omega,
        omega1: bands.omega1,
        band_entry_step: entry,
        band_entry_s: entry.map(|k| k as f64 * tau),
        first_entry_step: first,
        first_entry_s: first.map(|k| k as f64 * tau),
        sup_abs_s_after_entry: sup_from(entry),
        sup_abs_s_after_first_entry: sup_from(first),
        trigger_count: triggers.len(),
        periodic_count: steps,
        max_gap_steps: gaps.iter().copied().max(),
        max_gap_s: gaps.iter().copied().max().map(|g| g as f64 * tau),
        min_gap_steps: gaps.iter().copied().min(),
        max_abs_d: trace.d.iter().fold(0.0, |m, v| m.max(v.abs())),
        gain,
    }
}

impl SimTrace {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn xi_at(&self, k: usize) -> &[f64] {
        &self.xi[k * self.n..(k + 1) * self.n]
    }

    pub fn xi_bar_at(&self, k: usize) -> &[f64] {
        &self.xi_bar[k * self.n..(k + 1) * self.n]
    }

    pub fn x_bar_at(&self, k: usize) -> &[f64] {
        &self.x_bar[k * self.n..(k + 1) * self.n]
    }

    /// ‖c‖‖Ā‖‖ē(k)‖ with ē measured after any update at k, so zero at
    /// trigger steps; the quantity the control actually carries into step k.
    pub fn held_metric(&self) -> Vec<f64> {
        self.metric
            .iter()
            .zip(&self.trigger)
            .map(|(m, t)| if *t { 0.0 } else { *m })
            .collect()
    }

    /// Largest ‖ξ(k) − ξ̄(k)‖ over k ≥ 1.
    pub fn max_estimation_error(&self) -> f64 {
        (1..self.len())
            .map(|k| {
                let e: Vec<f64> = self
                    .xi_at(k)
                    .iter()
                    .zip(self.xi_bar_at(k))
                    .map(|(a, b)| a - b)
                    .collect();
                norm2(&e)
            })
            .fold(0.0, f64::max)
    }

    /// `t,x1..xn,xhat1..xhatn,s,sbar,u,d,trigger` with shortest round-trip
    /// decimals.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let mut header = String::from("t");
        for i in 1..=self.n {
            header.push_str(&format!(",x{i}"));
        }
        for i in 1..=self.n {
            header.push_str(&format!(",xhat{i}"));
        }
        header.push_str(",s,sbar,u,d,trigger\n");
        w.write_all(header.as_bytes())?;
        let mut line = String::new();
        for k in 0..self.len() {
            line.clear();
            line.push_str(&self.t[k].to_string());
            for v in self.xi_at(k).iter().chain(self.xi_bar_at(k)) {
                line.push(',');
                line.push_str(&v.to_string());
            }
            for v in [self.s[k], self.s_bar[k], self.u[k], self.d[k]] {
                line.push(',');
                line.push_str(&v.to_string());
            }
            line.push_str(if self.trigger[k] { ",1\n" } else { ",0\n" });
            w.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary).expect("summary serializes")
    }
}
