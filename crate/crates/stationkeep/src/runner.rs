//! Scenario assembly and fixed-step time integration of the full closed
//! loop, with sampled logging and metric extraction.
//!
//! One run is strictly sequential; parameter sweeps fan out over immutable
//! scenarios, in parallel when the `parallel` feature is enabled.

use crate::adaptive::{
    adaptation_derivative, observer_derivative, z2_hat, AdaptiveError, ObserverParams,
    ObserverState,
};
use crate::certificates::{
    assemble_closed_loop, closed_loop_hurwitz, francis_solve, observer_matrix_check,
    passivity_certificate, stiffest_mode, Bound, Certificate, CertificateError, Check, ClosedLoop,
    FrancisSolution, LyapunovEvaluator, PassivityOutcome,
};
use crate::numeric::{OdeError, Rk4Scratch};
use crate::plant::{build_error_model, build_transform, PlantError, TransformedModel};
use crate::regulator::{
    build_companion, gamma_apply, sigma_solve, GammaRow, InternalModelParams, RegulatorError,
    SigmaSolution,
};
use crate::scenario::{ControllerKind, Scenario, ScenarioError};
use thiserror::Error;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Component magnitude beyond which a run is declared divergent.
pub const DIVERGENCE_LIMIT: f64 = 1e9;
/// |λ|·dt budget of the fixed-step integrator.
pub const STEP_BUDGET: f64 = 0.5;
/// Refusal threshold: five times the budget.
pub const STEP_REFUSAL: f64 = 5.0 * STEP_BUDGET;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error(transparent)]
    Regulator(#[from] RegulatorError),
    #[error(transparent)]
    Adaptive(#[from] AdaptiveError),
    #[error(transparent)]
    Certificate(#[from] CertificateError),
    #[error(transparent)]
    Numeric(#[from] crate::numeric::NumericError),
    #[error("integration aborted at t = {t:.6}: non-finite derivative in component {index}")]
    NonFinite { t: f64, index: usize },
    #[error("simulation diverged at t = {t:.6}: |state[{index}]| = {value:.3e} exceeds 1e9")]
    Diverged { t: f64, index: usize, value: f64 },
    #[error("dt = {dt:.3e} is refused: stiffest certified mode |λ| = {stiffest:.3} gives |λ|·dt = {product:.3}, more than 5x the {STEP_BUDGET} budget")]
    StepTooLarge {
        dt: f64,
        stiffest: f64,
        product: f64,
    },
    #[error("sweep needs at least one value")]
    EmptySweep,
}

type Mat3 = [[f64; 3]; 3];

/// Sampled time series of one run.
#[derive(Debug, Clone)]
pub struct RunLog {
    pub kind: ControllerKind,
    pub dt: f64,
    pub t: Vec<f64>,
    pub x: Vec<[f64; 3]>,
    pub x_e: Vec<[f64; 3]>,
    pub tau: Vec<[f64; 3]>,
    pub tau_d: Vec<[f64; 3]>,
    pub q_hat: Option<Vec<[f64; 3]>>,
    pub q_til: Option<Vec<[f64; 3]>>,
    pub obs_err: Option<Vec<f64>>,
    pub obs_err2: Option<Vec<f64>>,
    pub v_lyap: Option<Vec<f64>>,
    pub gamma_rows: Option<Vec<Mat3>>,
    pub z2hat_max_abs: Option<f64>,
    pub final_state: Vec<f64>,
}

/// Summary metrics extracted from a [`RunLog`].
#[derive(Debug, Clone, serde::Serialize)]
pub struct Metrics {
    /// max ‖x_e‖ over the last 10% of the horizon
    pub eps_tail_max: f64,
    pub final_x_e_norm: f64,
    /// first logged time after which ‖x_e‖ stays below 0.05
    pub settle_time: Option<f64>,
    pub q_tilde_final: Option<[f64; 3]>,
    /// count of V increases beyond the slack, oracle-style runs
    pub v_violations: Option<usize>,
    pub v_slack: Option<f64>,
    pub v_initial: Option<f64>,
    /// time-averaged ‖ξ₂−ξ̂₂‖ over t ∈ [10, 50]
    pub obs_err2_avg: Option<f64>,
    pub z2hat_max_abs: Option<f64>,
    /// worst drift of the adaptation components with zero gain
    pub gamma_frozen_drift: Option<f64>,
}

/// Threshold used for the settling-time metric.
pub const SETTLE_THRESHOLD: f64 = 0.05;
/// Relative slack for the V-monotonicity count.
pub const V_SLACK_REL: f64 = 1e-6;

/// Extract summary metrics from a log.
pub fn metrics(log: &RunLog) -> Metrics {
    let n = log.t.len();
    let t_end = *log.t.last().unwrap_or(&0.0);
    let norms: Vec<f64> = log
        .x_e
        .iter()
        .map(|e| (e[0] * e[0] + e[1] * e[1] + e[2] * e[2]).sqrt())
        .collect();
    let tail_start = 0.9 * t_end;
    let eps_tail_max = log
        .t
        .iter()
        .zip(&norms)
        .filter(|(t, _)| **t >= tail_start)
        .fold(0.0_f64, |m, (_, v)| m.max(*v));
    let mut settle_time = None;
    for i in (0..n).rev() {
        if norms[i] >= SETTLE_THRESHOLD {
            settle_time = if i + 1 < n { Some(log.t[i + 1]) } else { None };
            break;
        }
        if i == 0 {
            settle_time = Some(log.t[0]);
        }
    }
    let q_tilde_final = log.q_til.as_ref().and_then(|q| q.last().copied());
    let (v_violations, v_slack, v_initial) = match &log.v_lyap {
        Some(v) if !v.is_empty() => {
            let slack = V_SLACK_REL * v[0].abs();
            let count = v.windows(2).filter(|w| w[1] > w[0] + slack).count();
            (Some(count), Some(slack), Some(v[0]))
        }
        _ => (None, None, None),
    };
    let obs_err2_avg = log.obs_err2.as_ref().and_then(|col| {
        let window: Vec<f64> = log
            .t
            .iter()
            .zip(col)
            .filter(|(t, _)| **t >= 10.0 && **t <= 50.0)
            .map(|(_, v)| *v)
            .collect();
        if window.is_empty() {
            None
        } else {
            Some(window.iter().sum::<f64>() / window.len() as f64)
        }
    });
    let gamma_frozen_drift = log.gamma_rows.as_ref().and_then(|rows| {
        let first = rows.first()?;
        let mut worst = 0.0_f64;
        for row in rows {
            for ch in 0..3 {
                for comp in [0usize, 2] {
                    worst = worst.max((row[ch][comp] - first[ch][comp]).abs());
                }
            }
        }
        Some(worst)
    });
    Metrics {
        eps_tail_max,
        final_x_e_norm: *norms.last().unwrap_or(&0.0),
        settle_time,
        q_tilde_final,
        v_violations,
        v_slack,
        v_initial,
        obs_err2_avg,
        z2hat_max_abs: log.z2hat_max_abs,
        gamma_frozen_drift,
    }
}

/// A scenario with all derived matrices, certificates and warnings in place.
pub struct PreparedScenario {
    pub scenario: Scenario,
    pub im: InternalModelParams,
    pub gamma_true: [GammaRow; 3],
    pub transform: TransformedModel,
    pub sigma: SigmaSolution,
    pub closed_loop: ClosedLoop,
    pub passivity: PassivityOutcome,
    pub francis: FrancisSolution,
    pub certificates: Vec<Certificate>,
    pub warnings: Vec<String>,
    pub stiffest_mode: f64,
    lyap: LyapunovEvaluator,
    baked: Baked,
}

struct Baked {
    x_r: [f64; 3],
    m_inv: Mat3,
    d: Mat3,
    t1: Mat3,
    t2: Mat3,
    gamma_true: [GammaRow; 3],
    char_poly: [f64; 3],
}

#[inline]
fn mul3(m: &Mat3, v: &[f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

fn bake3(m: &crate::numeric::Mat) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = m[(i, j)];
        }
    }
    out
}

impl PreparedScenario {
    pub fn new(scenario: Scenario) -> Result<Self, SimError> {
        let im = build_companion(scenario.char_poly)?;
        let gamma_true = [
            crate::regulator::gamma_from_q(&im, scenario.exo.q[0]),
            crate::regulator::gamma_from_q(&im, scenario.exo.q[1]),
            crate::regulator::gamma_from_q(&im, scenario.exo.q[2]),
        ];
        let transform = build_transform(
            &scenario.vessel,
            &scenario.observer.k1,
            &scenario.observer.k2,
            &scenario.exo,
        )?;
        let sigma = sigma_solve(&im, &gamma_true, &scenario.exo)?;
        let closed_loop = assemble_closed_loop(&im, &transform);
        let hurwitz = closed_loop_hurwitz(&closed_loop)?;
        let passivity = passivity_certificate(&im, &transform, &closed_loop)?;
        let error_model = build_error_model(&scenario.vessel, &scenario.exo);
        let francis = francis_solve(
            &error_model,
            &scenario.exo.s_matrix(),
            &scenario.exo.h_matrix(),
        )?;
        let observer_cert = observer_matrix_check(&scenario.observer, scenario.vessel.m_inv())?;
        let sigma_cert = Certificate::from_checks(
            "sigma_equations",
            vec![
                Check::from_value(
                    "sylvester_residual",
                    sigma.residual_sylvester,
                    1e-8,
                    Bound::Below,
                    true,
                ),
                Check::from_value(
                    "output_residual",
                    sigma.residual_output,
                    1e-8,
                    Bound::Below,
                    true,
                ),
            ],
            vec![],
        );
        let b2_cert = Certificate::from_checks(
            "b2_positive_definite",
            vec![Check::from_value(
                "b2_sym_min_eig",
                transform.b2_sym_min_eig,
                1e-9,
                Bound::Above,
                false,
            )],
            vec![],
        );

        let observer_for_step = scenario.kind.has_observer().then_some(&scenario.observer);
        let stiffest = stiffest_mode(&closed_loop, observer_for_step)?;
        let product = stiffest * scenario.dt;

        let mut warnings = Vec::new();
        if product > STEP_BUDGET {
            warnings.push(format!(
                "dt = {:.3e} exceeds the stability budget: |λ|·dt = {product:.3} > {STEP_BUDGET}",
                scenario.dt
            ));
        }
        if !scenario.vessel.m_is_symmetric() {
            warnings.push("inertia matrix M is not symmetric".into());
        }
        if transform.b2_sym_min_eig <= 1e-9 {
            warnings.push(format!(
                "B2 is not positive definite (min eig of sym(B2) = {:.4}); the passivity certificate cannot hold",
                transform.b2_sym_min_eig
            ));
        }
        for check in &observer_cert.checks {
            if !check.passed {
                warnings.push(format!(
                    "observer matrix check {} failed: value {:.6}, threshold {:.3e}",
                    check.name, check.value, check.threshold
                ));
            }
        }
        if !passivity.certificate.passed {
            warnings.push(
                "passivity certificate failed; V is not a certified Lyapunov function".into(),
            );
        }

        let lyap = LyapunovEvaluator::new(passivity.p.clone(), &scenario.adapt_gains)?;
        let baked = Baked {
            x_r: scenario.x_r,
            m_inv: bake3(scenario.vessel.m_inv()),
            d: bake3(&scenario.vessel.d),
            t1: bake3(&transform.t1),
            t2: bake3(&transform.t2),
            gamma_true,
            char_poly: scenario.char_poly,
        };
        let f_max_re = crate::numeric::eig_real_parts(im.f_block())?
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        let im_cert = Certificate::from_checks(
            "internal_model_hurwitz",
            vec![Check::from_value(
                "max_eigenvalue_real_part",
                f_max_re,
                0.0,
                Bound::Below,
                true,
            )],
            vec![],
        );
        let certificates = vec![
            im_cert,
            passivity.certificate.clone(),
            francis.certificate.clone(),
            sigma_cert,
            observer_cert,
            hurwitz,
            b2_cert,
        ];
        Ok(PreparedScenario {
            scenario,
            im,
            gamma_true,
            transform,
            sigma,
            closed_loop,
            passivity,
            francis,
            certificates,
            warnings,
            stiffest_mode: stiffest,
            lyap,
            baked,
        })
    }

    fn state_dim(&self) -> usize {
        match self.scenario.kind {
            ControllerKind::OpenLoop => 15,
            ControllerKind::IdealKnownGamma => 24,
            ControllerKind::AdaptiveOracle => 33,
            ControllerKind::AdaptiveObserver => 42,
        }
    }

    fn initial_state(&self) -> Vec<f64> {
        let s = &self.scenario;
        let mut y = vec![0.0; self.state_dim()];
        y[0..3].copy_from_slice(&s.x0);
        y[3..6].copy_from_slice(&s.v0);
        y[6..15].copy_from_slice(&s.exo.w0);
        if s.kind.has_internal_model() {
            if let Some(eta0) = s.eta0 {
                y[15..24].copy_from_slice(&eta0);
            }
        }
        if s.kind.has_adaptation() {
            for ch in 0..3 {
                y[24 + 3 * ch..27 + 3 * ch].copy_from_slice(&s.gamma0[ch]);
            }
        }
        if s.kind.has_observer() {
            // zero initial innovation: the position error is measured
            y[33] = s.x0[0] - s.x_r[0];
            y[34] = s.x0[1] - s.x_r[1];
            y[35] = s.x0[2] - s.x_r[2];
        }
        y
    }

    #[inline]
    fn gamma_rows_of(&self, y: &[f64]) -> [GammaRow; 3] {
        match self.scenario.kind {
            ControllerKind::AdaptiveOracle | ControllerKind::AdaptiveObserver => [
                [y[24], y[25], y[26]],
                [y[27], y[28], y[29]],
                [y[30], y[31], y[32]],
            ],
            _ => self.baked.gamma_true,
        }
    }

    /// Control and the signal driving the internal model, evaluated at one
    /// state. Recomputed at every integration stage — no sample-and-hold.
    #[inline]
    fn control(&self, y: &[f64]) -> ControlSample {
        let b = &self.baked;
        let xi1 = [y[0] - b.x_r[0], y[1] - b.x_r[1], y[2] - b.x_r[2]];
        let xi2 = [y[3], y[4], y[5]];
        let mut out = ControlSample {
            xi1,
            xi2,
            ..Default::default()
        };
        match self.scenario.kind {
            ControllerKind::OpenLoop => {}
            ControllerKind::IdealKnownGamma | ControllerKind::AdaptiveOracle => {
                let eta = &y[15..24];
                let gammas = self.gamma_rows_of(y);
                let ge = gamma_apply(&gammas, eta);
                let t1x = mul3(&b.t1, &xi1);
                let t2x = mul3(&b.t2, &xi2);
                // tau0 = -Γ(η - Σw): the decoupling term of the reconciled
                // closed loop, available because w is simulator state
                let mut eta_tilde = [0.0; 9];
                self.sigma.eta_tilde(eta, &y[6..15], &mut eta_tilde);
                let tau0 = gamma_apply(&b.gamma_true, &eta_tilde);
                for i in 0..3 {
                    let z2 = t1x[i] + t2x[i];
                    out.z2_used[i] = z2;
                    out.tau[i] = -ge[i] - z2 + tau0[i];
                    out.drive[i] = ge[i] + z2 - tau0[i];
                }
                out.has_controller = true;
            }
            ControllerKind::AdaptiveObserver => {
                let eta = &y[15..24];
                let gammas = self.gamma_rows_of(y);
                let ge = gamma_apply(&gammas, eta);
                let obs = ObserverState {
                    xi1_hat: [y[33], y[34], y[35]],
                    xi2_hat: [y[36], y[37], y[38]],
                    sigma: [y[39], y[40], y[41]],
                };
                let z2h = z2_hat(&obs, &self.scenario.observer);
                for i in 0..3 {
                    out.z2_used[i] = z2h[i];
                    out.tau[i] = -ge[i] - z2h[i];
                    out.drive[i] = ge[i] + z2h[i];
                }
                out.observer = Some(obs);
                out.has_controller = true;
            }
        }
        out
    }

    #[inline]
    fn derivative(&self, y: &[f64], dy: &mut [f64]) {
        let b = &self.baked;
        let s = &self.scenario;
        let ctl = self.control(y);

        // plant
        let tau_d = s.exo.output(&y[6..15]);
        let mut rhs = [0.0; 3];
        for i in 0..3 {
            let mut acc = ctl.tau[i] + tau_d[i];
            for j in 0..3 {
                acc -= b.d[i][j] * y[3 + j];
            }
            rhs[i] = acc;
        }
        let acc = mul3(&b.m_inv, &rhs);
        dy[0] = y[3];
        dy[1] = y[4];
        dy[2] = y[5];
        dy[3] = acc[0];
        dy[4] = acc[1];
        dy[5] = acc[2];
        s.exo.derivative(&y[6..15], &mut dy[6..15]);

        if s.kind.has_internal_model() {
            let [a0, a1, a2] = b.char_poly;
            for ch in 0..3 {
                let e = &y[15 + 3 * ch..18 + 3 * ch];
                dy[15 + 3 * ch] = e[1];
                dy[16 + 3 * ch] = e[2];
                dy[17 + 3 * ch] = -a0 * e[0] - a1 * e[1] - a2 * e[2] + ctl.drive[ch];
            }
        }
        if s.kind.has_adaptation() {
            let d_gamma = adaptation_derivative(&ctl.z2_used, &y[15..24], &s.adapt_gains);
            for ch in 0..3 {
                dy[24 + 3 * ch] = d_gamma[ch][0];
                dy[25 + 3 * ch] = d_gamma[ch][1];
                dy[26 + 3 * ch] = d_gamma[ch][2];
            }
        }
        if let Some(obs) = &ctl.observer {
            let x_e = ctl.xi1;
            let d = observer_derivative(obs, &x_e, &ctl.z2_used, &ctl.tau, &s.observer);
            dy[33..36].copy_from_slice(&d.xi1_hat);
            dy[36..39].copy_from_slice(&d.xi2_hat);
            dy[39..42].copy_from_slice(&d.sigma);
        }
    }

    /// Integrate the scenario and return the sampled log.
    pub fn run(&self) -> Result<RunLog, SimError> {
        let s = &self.scenario;
        let product = self.stiffest_mode * s.dt;
        if product > STEP_REFUSAL {
            return Err(SimError::StepTooLarge {
                dt: s.dt,
                stiffest: self.stiffest_mode,
                product,
            });
        }
        let steps = (s.t_final / s.dt).round() as u64;
        let stride = s.log_stride as u64;
        let mut y = self.initial_state();
        let mut scratch = Rk4Scratch::new(y.len());

        let n_rows = (steps / stride + 2) as usize;
        let mut log = RunLog {
            kind: s.kind,
            dt: s.dt,
            t: Vec::with_capacity(n_rows),
            x: Vec::with_capacity(n_rows),
            x_e: Vec::with_capacity(n_rows),
            tau: Vec::with_capacity(n_rows),
            tau_d: Vec::with_capacity(n_rows),
            q_hat: s.kind.has_internal_model().then(Vec::new),
            q_til: s.kind.has_internal_model().then(Vec::new),
            obs_err: s.kind.has_observer().then(Vec::new),
            obs_err2: s.kind.has_observer().then(Vec::new),
            v_lyap: s.kind.has_internal_model().then(Vec::new),
            gamma_rows: s.kind.has_adaptation().then(Vec::new),
            z2hat_max_abs: s.kind.has_observer().then_some(0.0),
            final_state: Vec::new(),
        };

        let mut deriv = |_t: f64, y: &[f64], dy: &mut [f64]| self.derivative(y, dy);
        for k in 0..=steps {
            let t = k as f64 * s.dt;
            if k % stride == 0 || k == steps {
                self.log_row(t, &y, &mut log);
            }
            if k == steps {
                break;
            }
            scratch
                .step(&mut deriv, t, s.dt, &mut y)
                .map_err(|e| match e {
                    OdeError::NonFiniteDerivative { t, index } => SimError::NonFinite { t, index },
                    OdeError::BadStep { dt } => SimError::StepTooLarge {
                        dt,
                        stiffest: self.stiffest_mode,
                        product: f64::NAN,
                    },
                })?;
            for (index, v) in y.iter().enumerate() {
                if v.abs() > DIVERGENCE_LIMIT {
                    return Err(SimError::Diverged {
                        t: (k + 1) as f64 * s.dt,
                        index,
                        value: *v,
                    });
                }
            }
        }
        log.final_state = y;
        Ok(log)
    }

    fn log_row(&self, t: f64, y: &[f64], log: &mut RunLog) {
        let s = &self.scenario;
        let ctl = self.control(y);
        let tau_d = s.exo.output(&y[6..15]);
        log.t.push(t);
        log.x.push([y[0], y[1], y[2]]);
        log.x_e.push(ctl.xi1);
        log.tau.push(if ctl.has_controller {
            ctl.tau
        } else {
            [0.0; 3]
        });
        log.tau_d.push(tau_d);
        if s.kind.has_internal_model() {
            let gammas = self.gamma_rows_of(y);
            let q_hat = [
                self.im.q_readout(gammas[0][1]),
                self.im.q_readout(gammas[1][1]),
                self.im.q_readout(gammas[2][1]),
            ];
            let q_til = [
                q_hat[0] - s.exo.q[0],
                q_hat[1] - s.exo.q[1],
                q_hat[2] - s.exo.q[2],
            ];
            log.q_hat.as_mut().unwrap().push(q_hat);
            log.q_til.as_mut().unwrap().push(q_til);

            // V(x, Γ̃) over x = (η̃, z1, z2)
            let mut xv = [0.0; 15];
            let mut eta_tilde = [0.0; 9];
            self.sigma.eta_tilde(&y[15..24], &y[6..15], &mut eta_tilde);
            xv[..9].copy_from_slice(&eta_tilde);
            xv[9..12].copy_from_slice(&ctl.xi1);
            let t1x = mul3(&self.baked.t1, &ctl.xi1);
            let t2x = mul3(&self.baked.t2, &ctl.xi2);
            for i in 0..3 {
                xv[12 + i] = t1x[i] + t2x[i];
            }
            let mut g_tilde = [[0.0; 3]; 3];
            for ch in 0..3 {
                for j in 0..3 {
                    g_tilde[ch][j] = gammas[ch][j] - self.baked.gamma_true[ch][j];
                }
            }
            let v = self.lyap.eval(&xv, &g_tilde).unwrap_or(f64::NAN);
            log.v_lyap.as_mut().unwrap().push(v);
        }
        if s.kind.has_adaptation() {
            log.gamma_rows.as_mut().unwrap().push(self.gamma_rows_of(y));
        }
        if let Some(obs) = &ctl.observer {
            let mut e6 = 0.0;
            let mut e3 = 0.0;
            for i in 0..3 {
                let d1 = ctl.xi1[i] - obs.xi1_hat[i];
                let d2 = ctl.xi2[i] - obs.xi2_hat[i];
                e6 += d1 * d1 + d2 * d2;
                e3 += d2 * d2;
            }
            log.obs_err.as_mut().unwrap().push(e6.sqrt());
            log.obs_err2.as_mut().unwrap().push(e3.sqrt());
            let worst = ctl.z2_used.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            let cur = log.z2hat_max_abs.get_or_insert(0.0);
            *cur = cur.max(worst);
        }
    }
}

#[derive(Default)]
struct ControlSample {
    xi1: [f64; 3],
    xi2: [f64; 3],
    tau: [f64; 3],
    drive: [f64; 3],
    z2_used: [f64; 3],
    observer: Option<ObserverState>,
    has_controller: bool,
}

/// Prepare and run a scenario in one call.
pub fn run(scenario: &Scenario) -> Result<RunLog, SimError> {
    PreparedScenario::new(scenario.clone())?.run()
}

// ---------------------------------------------------------------------------
// parameter sweeps
// ---------------------------------------------------------------------------

/// Parameter swept by [`run_sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Kappa,
    SatLimit,
    QScale,
    Frequency(usize),
}

impl SweepParam {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "kappa" => Some(SweepParam::Kappa),
            "L" => Some(SweepParam::SatLimit),
            "Q_scale" => Some(SweepParam::QScale),
            "q1" => Some(SweepParam::Frequency(0)),
            "q2" => Some(SweepParam::Frequency(1)),
            "q3" => Some(SweepParam::Frequency(2)),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            SweepParam::Kappa => "kappa",
            SweepParam::SatLimit => "L",
            SweepParam::QScale => "Q_scale",
            SweepParam::Frequency(0) => "q1",
            SweepParam::Frequency(1) => "q2",
            SweepParam::Frequency(_) => "q3",
        }
    }
}

/// Metrics of one sweep point.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SweepPoint {
    pub param: String,
    pub value: f64,
    pub metrics: Metrics,
}

fn apply_sweep(base: &Scenario, param: SweepParam, value: f64) -> Result<Scenario, SimError> {
    let mut s = base.clone();
    match param {
        SweepParam::Kappa => {
            s.observer = ObserverParams::new(
                value,
                s.observer.c0.clone(),
                s.observer.c1.clone(),
                s.observer.c2.clone(),
                s.observer.m_bar.clone(),
                s.observer.sat_limit,
                s.observer.k1.clone(),
                s.observer.k2.clone(),
                s.observer.tau_feed,
            )?;
        }
        SweepParam::SatLimit => {
            s.observer = ObserverParams::new(
                s.observer.kappa,
                s.observer.c0.clone(),
                s.observer.c1.clone(),
                s.observer.c2.clone(),
                s.observer.m_bar.clone(),
                value,
                s.observer.k1.clone(),
                s.observer.k2.clone(),
                s.observer.tau_feed,
            )?;
        }
        SweepParam::QScale => {
            s.adapt_gains = s.adapt_gains.scaled(value)?;
        }
        SweepParam::Frequency(i) => {
            let mut q = s.exo.q;
            q[i] = value;
            s.exo = crate::plant::ExosystemParams::new(q, s.exo.h_rows, s.exo.w0)?;
        }
    }
    Ok(s)
}

fn sweep_point(base: &Scenario, param: SweepParam, value: f64) -> Result<SweepPoint, SimError> {
    let scenario = apply_sweep(base, param, value)?;
    let log = run(&scenario)?;
    Ok(SweepPoint {
        param: param.as_str().to_string(),
        value,
        metrics: metrics(&log),
    })
}

/// One run per value, executed on the calling thread in order.
pub fn run_sweep_sequential(
    base: &Scenario,
    param: SweepParam,
    values: &[f64],
) -> Result<Vec<SweepPoint>, SimError> {
    if values.is_empty() {
        return Err(SimError::EmptySweep);
    }
    values
        .iter()
        .map(|&v| sweep_point(base, param, v))
        .collect()
}

/// One run per value. With the `parallel` feature (default) the runs fan out
/// over the rayon pool; results keep the input order either way.
pub fn run_sweep(
    base: &Scenario,
    param: SweepParam,
    values: &[f64],
) -> Result<Vec<SweepPoint>, SimError> {
    #[cfg(feature = "parallel")]
    {
        if values.is_empty() {
            return Err(SimError::EmptySweep);
        }
        values
            .par_iter()
            .map(|&v| sweep_point(base, param, v))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_sweep_sequential(base, param, values)
    }
}
