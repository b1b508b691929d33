//! Run configuration and the two built-in presets.
//!
//! Configs are JSON with row-major nested arrays for matrices and seconds for
//! every time quantity.

use serde::{Deserialize, Serialize};

use crate::discretize::ContinuousLti;
use crate::error::{Error, Result};
use crate::matlib::Mat;
use crate::mrse::GainKind;
use crate::observability::{conditioning_report_with_tol, ConditioningReport, FIXED_RANK_TOL};
use crate::simkit::{
    run_closed_loop, DisturbanceRate, DisturbanceSpec, LoopSetup, Precision, SimOptions, SimTrace,
};
use crate::smc::{band_report, BandReport, Mode, QChoice, SmcParams};

pub const PRESETS: [&str; 2] = ["example1", "example2"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantConfig {
    pub a: Mat,
    pub b: Mat,
    pub c: Mat,
    /// bound on |d|
    pub d0: f64,
}

fn default_true() -> bool {
    true
}

fn default_gain_kind() -> GainKind {
    GainKind::Delta
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub plant: PlantConfig,
    /// control period
    pub tau: f64,
    /// output samples per control period
    pub n_fast: usize,
    /// sliding vector in regular-form coordinates, last entry 1
    pub c: Vec<f64>,
    pub epsilon: f64,
    pub alpha: f64,
    pub sigma: f64,
    pub mode: Mode,
    #[serde(default)]
    pub disturbance: DisturbanceSpec,
    pub x0: Vec<f64>,
    /// x̂(0) in regular-form coordinates; zero when absent
    #[serde(default)]
    pub xhat0: Option<Vec<f64>>,
    pub horizon: f64,
    /// fast periods for the conditioning table
    #[serde(default)]
    pub deltas: Vec<f64>,
    /// fixed rank tolerance for the conditioning table
    #[serde(default)]
    pub rank_tol: Option<f64>,
    #[serde(default)]
    pub q_choice: QChoice,
    #[serde(default = "default_true")]
    pub enforce_gain_condition: bool,
    #[serde(default = "default_gain_kind")]
    pub gain_kind: GainKind,
    #[serde(default)]
    pub precision: Precision,
    #[serde(default)]
    pub disturbance_rate: DisturbanceRate,
    /// directory for written reports
    #[serde(default)]
    pub out_dir: Option<String>,
}

impl ScenarioConfig {
    /// Ball and beam, four states, N = 4 at τ = 0.1 ms.
    pub fn example1() -> Self {
        Self {
            name: "example1".into(),
            plant: PlantConfig {
                a: Mat::from_rows(&[
                    [0.0, 1.0, 0.0, 0.0],
                    [0.0, 0.0, 7.0, 0.0],
                    [0.0, 0.0, 0.0, 1.0],
                    [0.0, 0.0, 0.0, 0.0],
                ])
                .expect("static matrix"),
                b: Mat::column(&[0.0, 0.0, 0.0, 1.0]).expect("static matrix"),
                c: Mat::row(&[1.0, 0.0, 0.0, 0.0]).expect("static matrix"),
                d0: 0.05,
            },
            tau: 1e-4,
            n_fast: 4,
            c: vec![0.0114, 0.0943, 1.4999, 1.0],
            epsilon: 0.261,
            alpha: 0.2,
            sigma: 0.9,
            mode: Mode::Event,
            disturbance: DisturbanceSpec::Sinusoid {
                amplitude: 0.05,
                omega: 1.0,
                phase: 0.0,
            },
            x0: vec![3.0, 2.0, 1.0, -1.0],
            xhat0: None,
            horizon: 60.0,
            deltas: vec![1e-4, 2.5e-5],
            rank_tol: None,
            q_choice: QChoice::Identity,
            enforce_gain_condition: true,
            gain_kind: GainKind::Delta,
            precision: Precision::Extended,
            disturbance_rate: DisturbanceRate::Slow,
            out_dir: None,
        }
    }

    /// Third-order plant with a continuous disturbance entering through B,
    /// N = 3 at τ = 10 ms. Its printed ε does not satisfy the event-mode
    /// gain inequality, so the preset reports instead of refusing.
    pub fn example2() -> Self {
        Self {
            name: "example2".into(),
            plant: PlantConfig {
                a: Mat::from_rows(&[[-2.0, 1.0, 0.0], [-2.0, 0.0, 1.0], [-1.0, 0.0, 0.0]])
                    .expect("static matrix"),
                b: Mat::column(&[0.0, 5.0, 4.0]).expect("static matrix"),
                c: Mat::row(&[1.0, 0.0, 0.0]).expect("static matrix"),
                d0: 0.0502,
            },
            tau: 1e-2,
            n_fast: 3,
            c: vec![-1.024, 0.6836, 1.0],
            epsilon: 0.2412,
            alpha: 0.2,
            sigma: 0.9,
            mode: Mode::Event,
            disturbance: DisturbanceSpec::EquivalentMatched {
                amplitude: 0.05,
                omega: 2.0,
                phase: 0.0,
            },
            x0: vec![3.0, -2.0, 1.0],
            xhat0: None,
            horizon: 60.0,
            deltas: vec![1e-2 / 3.0],
            rank_tol: None,
            q_choice: QChoice::Identity,
            enforce_gain_condition: false,
            gain_kind: GainKind::Delta,
            precision: Precision::Extended,
            disturbance_rate: DisturbanceRate::Slow,
            out_dir: None,
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "example1" => Some(Self::example1()),
            "example2" => Some(Self::example2()),
            _ => None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::InvalidArgument {
            name: "config",
            reason: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Field-level checks that do not need any design computation.
    pub fn validate(&self) -> Result<()> {
        let n = self.plant.a.rows();
        let positive = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidArgument {
                    name,
                    reason: format!("must be positive and finite, got {v}"),
                })
            }
        };
        positive("tau", self.tau)?;
        positive("horizon", self.horizon)?;
        positive("epsilon", self.epsilon)?;
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidArgument {
                name: "alpha",
                reason: format!("must be non-negative, got {}", self.alpha),
            });
        }
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return Err(Error::InvalidArgument {
                name: "sigma",
                reason: format!("must lie in (0, 1), got {}", self.sigma),
            });
        }
        if self.n_fast == 0 {
            return Err(Error::InvalidArgument {
                name: "n_fast",
                reason: "must be at least 1".into(),
            });
        }
        let dims = |name: &'static str, got: usize| {
            if got == n {
                Ok(())
            } else {
                Err(Error::InvalidArgument {
                    name,
                    reason: format!("expected {n} entries, got {got}"),
                })
            }
        };
        dims("c", self.c.len())?;
        dims("x0", self.x0.len())?;
        if let Some(x) = &self.xhat0 {
            dims("xhat0", x.len())?;
        }
        for &d in &self.deltas {
            positive("deltas", d)?;
        }
        if let Some(tol) = self.rank_tol {
            positive("rank_tol", tol)?;
        }
        if self.horizon / self.tau < 0.5 {
            return Err(Error::InvalidArgument {
                name: "horizon",
                reason: format!("shorter than one control period {}", self.tau),
            });
        }
        Ok(())
    }

    pub fn plant(&self) -> Result<ContinuousLti> {
        ContinuousLti::new(
            self.plant.a.clone(),
            self.plant.b.clone(),
            self.plant.c.clone(),
            self.plant.d0,
        )
    }

    pub fn params(&self) -> SmcParams {
        SmcParams {
            c: self.c.clone(),
            epsilon: self.epsilon,
            alpha: self.alpha,
            sigma: self.sigma,
        }
    }

    pub fn setup(&self) -> Result<LoopSetup> {
        self.validate()?;
        LoopSetup::new(
            &self.plant()?,
            self.tau,
            self.n_fast,
            self.gain_kind,
            &self.params(),
            &self.q_choice,
            self.mode,
        )
    }

    pub fn sim_options(&self) -> SimOptions {
        SimOptions {
            mode: self.mode,
            horizon: self.horizon,
            xi0: self.x0.clone(),
            xhat0: self.xhat0.clone(),
            precision: self.precision,
            disturbance_rate: self.disturbance_rate,
            enforce_gain_condition: self.enforce_gain_condition,
        }
    }

    /// Conditioning table at `deltas`, or at the configured list when empty.
    pub fn conditioning(&self, deltas: &[f64]) -> Result<ConditioningReport> {
        self.validate()?;
        let list = if deltas.is_empty() {
            &self.deltas
        } else {
            deltas
        };
        conditioning_report_with_tol(
            &self.plant()?,
            self.n_fast,
            list,
            self.rank_tol.unwrap_or(FIXED_RANK_TOL),
        )
    }

    /// Band report for the configured mode; a violated gain inequality is an
    /// error when `enforce_gain_condition` is set.
    pub fn design(&self) -> Result<BandReport> {
        let setup = self.setup()?;
        band_report(
            &setup.design,
            &setup.rf,
            &self.q_choice,
            self.mode,
            self.enforce_gain_condition,
        )
    }

    pub fn simulate(&self) -> Result<SimTrace> {
        let setup = self.setup()?;
        run_closed_loop(&setup, &self.sim_options(), &self.disturbance)
    }
}
