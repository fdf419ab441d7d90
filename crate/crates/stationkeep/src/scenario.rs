//! Scenario configuration: the JSON file format, validation, and the
//! canonical bundled setup.
//!
//! The file mirrors the runtime structure field for field, matrices as
//! row-major nested arrays. Physical fields are mandatory; solver fields
//! (`t_final`, `dt`, `log_stride`, `controller_kind`,
//! `observer_tau_feed`) carry defaults. Unknown keys are rejected.

use crate::adaptive::{AdaptationGains, AdaptiveError, ObserverParams};
use crate::numeric::Mat;
use crate::plant::{ExosystemParams, PlantError, VesselParams};
use crate::regulator::GammaRow;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("config field {field}: {reason}")]
    Invalid { field: String, reason: String },
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error(transparent)]
    Adaptive(#[from] AdaptiveError),
}

/// Which control law closes the loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControllerKind {
    /// Realizable controller: adaptive internal model driven by the
    /// saturated observer estimate.
    AdaptiveObserver,
    /// Simulation-only: adaptive internal model fed the true z₂.
    #[serde(alias = "adaptive-oracle")]
    AdaptiveOracle,
    /// Simulation-only: internal model with the true Γ.
    #[serde(alias = "ideal-known-Γ")]
    IdealKnownGamma,
    /// τ ≡ 0; plant and generator only.
    OpenLoop,
}

impl ControllerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ControllerKind::AdaptiveObserver => "adaptive-observer",
            ControllerKind::AdaptiveOracle => "adaptive-oracle",
            ControllerKind::IdealKnownGamma => "ideal-known-gamma",
            ControllerKind::OpenLoop => "open-loop",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "adaptive-observer" => Some(ControllerKind::AdaptiveObserver),
            "adaptive-oracle" => Some(ControllerKind::AdaptiveOracle),
            "ideal-known-gamma" | "ideal-known-Γ" => Some(ControllerKind::IdealKnownGamma),
            "open-loop" => Some(ControllerKind::OpenLoop),
            _ => None,
        }
    }

    pub fn has_internal_model(&self) -> bool {
        !matches!(self, ControllerKind::OpenLoop)
    }

    pub fn has_adaptation(&self) -> bool {
        matches!(
            self,
            ControllerKind::AdaptiveObserver | ControllerKind::AdaptiveOracle
        )
    }

    pub fn has_observer(&self) -> bool {
        matches!(self, ControllerKind::AdaptiveObserver)
    }
}

/// A fully validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub vessel: VesselParams,
    pub exo: ExosystemParams,
    /// monic cubic coefficients (a0, a1, a2) of the internal-model blocks
    pub char_poly: [f64; 3],
    pub gamma0: [GammaRow; 3],
    pub adapt_gains: AdaptationGains,
    pub observer: ObserverParams,
    pub x_r: [f64; 3],
    pub x0: [f64; 3],
    pub v0: [f64; 3],
    pub t_final: f64,
    pub dt: f64,
    pub log_stride: usize,
    pub kind: ControllerKind,
    /// Internal-model initial state override; `None` means zero. Not part of
    /// the file schema, used by tests that start on the steady-state
    /// manifold.
    pub eta0: Option<[f64; 9]>,
}

// ---------------------------------------------------------------------------
// serde mirror
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub vessel: VesselFile,
    pub exo: ExoFile,
    pub controller: ControllerFile,
    pub x_r: [f64; 3],
    pub x0: [f64; 3],
    pub v0: [f64; 3],
    #[serde(default = "default_t_final")]
    pub t_final: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_log_stride")]
    pub log_stride: usize,
    #[serde(default = "default_kind")]
    pub controller_kind: ControllerKind,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VesselFile {
    pub m: Vec<Vec<f64>>,
    pub d: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExoFile {
    pub q: [f64; 3],
    pub h_rows: [[f64; 3]; 3],
    pub w0: [f64; 9],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerFile {
    pub char_poly: [f64; 3],
    pub gamma0: [[f64; 3]; 3],
    pub q_adapt: [Vec<Vec<f64>>; 3],
    pub k1: Vec<Vec<f64>>,
    pub k2: Vec<Vec<f64>>,
    pub kappa: f64,
    pub c0: Vec<Vec<f64>>,
    pub c1: Vec<Vec<f64>>,
    pub c2: Vec<Vec<f64>>,
    pub sat_limit: f64,
    pub m_bar: Vec<Vec<f64>>,
    #[serde(default)]
    pub observer_tau_feed: bool,
}

fn default_t_final() -> f64 {
    500.0
}
fn default_dt() -> f64 {
    1e-4
}
fn default_log_stride() -> usize {
    100
}
fn default_kind() -> ControllerKind {
    ControllerKind::AdaptiveObserver
}

fn mat_from(field: &str, rows: &[Vec<f64>]) -> Result<Mat, ScenarioError> {
    let m = Mat::from_rows(rows).map_err(|e| ScenarioError::Invalid {
        field: field.to_string(),
        reason: e.to_string(),
    })?;
    if m.rows() != 3 || m.cols() != 3 {
        return Err(ScenarioError::Invalid {
            field: field.to_string(),
            reason: format!("expected a 3x3 matrix, got {}x{}", m.rows(), m.cols()),
        });
    }
    Ok(m)
}

fn mat_to(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

impl ScenarioFile {
    /// Parse a JSON document; line/column context comes from the JSON error,
    /// field context from validation.
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialization cannot fail")
    }

    pub fn into_scenario(self) -> Result<Scenario, ScenarioError> {
        let m = mat_from("vessel.m", &self.vessel.m)?;
        let d = mat_from("vessel.d", &self.vessel.d)?;
        let vessel = VesselParams::new(m, d)?;
        for (i, &qi) in self.exo.q.iter().enumerate() {
            if !qi.is_finite() || qi <= 0.0 {
                return Err(ScenarioError::Invalid {
                    field: format!("exo.q[{i}]"),
                    reason: format!("must be > 0, got {qi}"),
                });
            }
        }
        let exo = ExosystemParams::new(self.exo.q, self.exo.h_rows, self.exo.w0)?;
        let c = self.controller;
        let gains = AdaptationGains::new([
            mat_from("controller.q_adapt[0]", &c.q_adapt[0])?,
            mat_from("controller.q_adapt[1]", &c.q_adapt[1])?,
            mat_from("controller.q_adapt[2]", &c.q_adapt[2])?,
        ])?;
        let observer = ObserverParams::new(
            c.kappa,
            mat_from("controller.c0", &c.c0)?,
            mat_from("controller.c1", &c.c1)?,
            mat_from("controller.c2", &c.c2)?,
            mat_from("controller.m_bar", &c.m_bar)?,
            c.sat_limit,
            mat_from("controller.k1", &c.k1)?,
            mat_from("controller.k2", &c.k2)?,
            c.observer_tau_feed,
        )?;
        if !self.dt.is_finite() || self.dt <= 0.0 {
            return Err(ScenarioError::Invalid {
                field: "dt".into(),
                reason: format!("must be > 0, got {}", self.dt),
            });
        }
        if !self.t_final.is_finite() || self.t_final <= 0.0 {
            return Err(ScenarioError::Invalid {
                field: "t_final".into(),
                reason: format!("must be > 0, got {}", self.t_final),
            });
        }
        if self.log_stride == 0 {
            return Err(ScenarioError::Invalid {
                field: "log_stride".into(),
                reason: "must be >= 1".into(),
            });
        }
        Ok(Scenario {
            vessel,
            exo,
            char_poly: c.char_poly,
            gamma0: c.gamma0,
            adapt_gains: gains,
            observer,
            x_r: self.x_r,
            x0: self.x0,
            v0: self.v0,
            t_final: self.t_final,
            dt: self.dt,
            log_stride: self.log_stride,
            kind: self.controller_kind,
            eta0: None,
        })
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        ScenarioFile::from_json(text)?.into_scenario()
    }

    pub fn to_file(&self) -> ScenarioFile {
        ScenarioFile {
            vessel: VesselFile {
                m: mat_to(&self.vessel.m),
                d: mat_to(&self.vessel.d),
            },
            exo: ExoFile {
                q: self.exo.q,
                h_rows: self.exo.h_rows,
                w0: self.exo.w0,
            },
            controller: ControllerFile {
                char_poly: self.char_poly,
                gamma0: self.gamma0,
                q_adapt: [
                    mat_to(&self.adapt_gains.mats[0]),
                    mat_to(&self.adapt_gains.mats[1]),
                    mat_to(&self.adapt_gains.mats[2]),
                ],
                k1: mat_to(&self.observer.k1),
                k2: mat_to(&self.observer.k2),
                kappa: self.observer.kappa,
                c0: mat_to(&self.observer.c0),
                c1: mat_to(&self.observer.c1),
                c2: mat_to(&self.observer.c2),
                sat_limit: self.observer.sat_limit,
                m_bar: mat_to(&self.observer.m_bar),
                observer_tau_feed: self.observer.tau_feed,
            },
            x_r: self.x_r,
            x0: self.x0,
            v0: self.v0,
            t_final: self.t_final,
            dt: self.dt,
            log_stride: self.log_stride,
            controller_kind: self.kind,
        }
    }

    /// The canonical station-keeping scenario: coupled 3-DOF vessel, three
    /// bias-plus-sinusoid disturbance channels with squared frequencies
    /// (0.5625, 0.25, 0.0625), companion internal model (s+1)³, adaptation
    /// on the middle coefficient only, κ = 100, L = 100, unit feedback and
    /// nominal inertia, x_r = (2, 2, 0).
    pub fn canonical() -> Scenario {
        let vessel = crate::plant::canonical_vessel();
        let exo = crate::plant::canonical_exosystem();
        let q_adapt = Mat::diag(&[0.0, 0.5, 0.0]);
        let gains = AdaptationGains::new([q_adapt.clone(), q_adapt.clone(), q_adapt])
            .expect("canonical gains are psd");
        let c0 = Mat::from_rows(&[
            vec![30.0, 3.0, 3.0],
            vec![3.0, 30.0, 3.0],
            vec![3.0, 3.0, 30.0],
        ])
        .unwrap();
        let c2 = Mat::from_rows(&[
            vec![10.0, 1.0, 1.0],
            vec![1.0, 10.0, 1.0],
            vec![1.0, 1.0, 10.0],
        ])
        .unwrap();
        let observer = ObserverParams::new(
            100.0,
            c0.clone(),
            c0,
            c2,
            Mat::identity(3),
            100.0,
            Mat::identity(3),
            Mat::identity(3),
            false,
        )
        .expect("canonical observer parameters are valid");
        Scenario {
            vessel,
            exo,
            char_poly: [1.0, 3.0, 3.0],
            gamma0: [[1.0, 0.0, 3.0]; 3],
            adapt_gains: gains,
            observer,
            x_r: [2.0, 2.0, 0.0],
            x0: [0.0; 3],
            v0: [0.0; 3],
            t_final: 500.0,
            dt: 1e-4,
            log_stride: 100,
            kind: ControllerKind::AdaptiveObserver,
            eta0: None,
        }
    }
}
