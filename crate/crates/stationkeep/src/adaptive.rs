//! The realizable adaptive controller: internal model driven by Γ̂, saturated
//! estimate ẑ₂ of the transformed velocity variable, high-gain extended
//! observer, and the per-channel adaptation law.
//!
//! None of this needs the generator state: the observer reconstructs the
//! position/velocity errors and an extended state σ that absorbs the lumped
//! uncertainty (unknown damping, inertia mismatch, and whatever part of the
//! disturbance the internal model has not yet cancelled).

use crate::numeric::{invert, sym_eigenvalues, Mat, NumericError};
use crate::regulator::{gamma_apply, ideal_control, GammaRow, IdealControl, InternalModelParams};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AdaptiveError {
    #[error("{field} must be {requirement}, got {value}")]
    BadParameter {
        field: &'static str,
        requirement: &'static str,
        value: f64,
    },
    #[error(
        "observer gain {field} must be symmetric positive definite (min eigenvalue {min_eig:.3e})"
    )]
    GainNotPositiveDefinite { field: &'static str, min_eig: f64 },
    #[error("adaptation gain Q[{channel}] must be symmetric positive semidefinite (min eigenvalue {min_eig:.3e}, asymmetry {asym:.3e})")]
    AdaptationGainInvalid {
        channel: usize,
        min_eig: f64,
        asym: f64,
    },
    #[error("nominal inertia matrix is singular: {0}")]
    SingularNominalInertia(NumericError),
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

type Mat3 = [[f64; 3]; 3];

fn bake(m: &Mat) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = m[(i, j)];
        }
    }
    out
}

#[inline]
fn mul3(m: &Mat3, v: &[f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

fn check_gain(field: &'static str, m: &Mat) -> Result<(), AdaptiveError> {
    let min_eig = sym_eigenvalues(m)?[0];
    if m.asymmetry() > 1e-9 * (1.0 + m.max_abs()) || min_eig <= 0.0 {
        return Err(AdaptiveError::GainNotPositiveDefinite { field, min_eig });
    }
    Ok(())
}

/// Observer and estimator parameters. The 3×3 gains are kept both as [`Mat`]
/// (for the certificate machinery) and as baked arrays for the per-stage
/// derivative evaluations.
#[derive(Debug, Clone)]
pub struct ObserverParams {
    pub kappa: f64,
    pub c0: Mat,
    pub c1: Mat,
    pub c2: Mat,
    pub m_bar: Mat,
    pub m_bar_inv: Mat,
    pub sat_limit: f64,
    pub k1: Mat,
    pub k2: Mat,
    /// Feed the applied control +M̄⁻¹τ into the velocity-estimate equation
    /// instead of −M̄⁻¹ẑ₂. Off by default.
    pub tau_feed: bool,
    c0a: Mat3,
    c1a: Mat3,
    c2a: Mat3,
    m_bar_a: Mat3,
    m_bar_inv_a: Mat3,
    k1a: Mat3,
    k2a: Mat3,
}

impl ObserverParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        kappa: f64,
        c0: Mat,
        c1: Mat,
        c2: Mat,
        m_bar: Mat,
        sat_limit: f64,
        k1: Mat,
        k2: Mat,
        tau_feed: bool,
    ) -> Result<Self, AdaptiveError> {
        if !kappa.is_finite() || kappa <= 0.0 {
            return Err(AdaptiveError::BadParameter {
                field: "controller.kappa",
                requirement: "> 0",
                value: kappa,
            });
        }
        // an infinite limit disables the saturation
        if sat_limit.is_nan() || sat_limit <= 0.0 {
            return Err(AdaptiveError::BadParameter {
                field: "controller.sat_limit",
                requirement: "> 0",
                value: sat_limit,
            });
        }
        check_gain("c0", &c0)?;
        check_gain("c1", &c1)?;
        check_gain("c2", &c2)?;
        let m_bar_inv = invert(&m_bar).map_err(AdaptiveError::SingularNominalInertia)?;
        Ok(ObserverParams {
            kappa,
            c0a: bake(&c0),
            c1a: bake(&c1),
            c2a: bake(&c2),
            m_bar_a: bake(&m_bar),
            m_bar_inv_a: bake(&m_bar_inv),
            k1a: bake(&k1),
            k2a: bake(&k2),
            c0,
            c1,
            c2,
            m_bar,
            m_bar_inv,
            sat_limit,
            k1,
            k2,
            tau_feed,
        })
    }

    /// ‖(M⁻¹ − M̄⁻¹) M̄‖₁, the inertia-mismatch measure the design requires
    /// to stay below 1.
    pub fn delta0(&self, m_inv: &Mat) -> f64 {
        m_inv
            .sub(&self.m_bar_inv)
            .and_then(|d| d.mul(&self.m_bar))
            .map(|m| m.norm_one())
            .unwrap_or(f64::INFINITY)
    }
}

/// Extended-observer state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ObserverState {
    pub xi1_hat: [f64; 3],
    pub xi2_hat: [f64; 3],
    pub sigma: [f64; 3],
}

/// Smooth componentwise saturation s(v) = L·tanh(v/L); odd, |s| < L,
/// s'(0) = 1. An infinite limit is the identity.
pub fn smooth_sat(v: &[f64; 3], limit: f64) -> [f64; 3] {
    if !limit.is_finite() {
        return *v;
    }
    let mut out = [0.0; 3];
    for i in 0..3 {
        out[i] = limit * (v[i] / limit).tanh();
    }
    out
}

/// ẑ₂ = sat_L M̄[σ + K₁ξ̂₁ + K₂ξ̂₂].
pub fn z2_hat(obs: &ObserverState, p: &ObserverParams) -> [f64; 3] {
    let k1x = mul3(&p.k1a, &obs.xi1_hat);
    let k2x = mul3(&p.k2a, &obs.xi2_hat);
    let mut arg = [0.0; 3];
    for i in 0..3 {
        arg[i] = obs.sigma[i] + k1x[i] + k2x[i];
    }
    let scaled = mul3(&p.m_bar_a, &arg);
    smooth_sat(&scaled, p.sat_limit)
}

/// Time derivative of the observer state:
/// ξ̂̇₁ = ξ̂₂ + κC₂(x_e−ξ̂₁), ξ̂̇₂ = σ − M̄⁻¹ẑ₂ + κ²C₁(x_e−ξ̂₁),
/// σ̇ = κ³C₀(x_e−ξ̂₁).
///
/// `tau` is only read when `tau_feed` is set, replacing −M̄⁻¹ẑ₂ by +M̄⁻¹τ.
pub fn observer_derivative(
    obs: &ObserverState,
    x_e: &[f64; 3],
    z2hat: &[f64; 3],
    tau: &[f64; 3],
    p: &ObserverParams,
) -> ObserverState {
    let mut inn = [0.0; 3];
    for i in 0..3 {
        inn[i] = x_e[i] - obs.xi1_hat[i];
    }
    let c2i = mul3(&p.c2a, &inn);
    let c1i = mul3(&p.c1a, &inn);
    let c0i = mul3(&p.c0a, &inn);
    let feed = if p.tau_feed {
        let mt = mul3(&p.m_bar_inv_a, tau);
        [mt[0], mt[1], mt[2]]
    } else {
        let mz = mul3(&p.m_bar_inv_a, z2hat);
        [-mz[0], -mz[1], -mz[2]]
    };
    let k = p.kappa;
    let k2 = k * k;
    let k3 = k2 * k;
    let mut d = ObserverState::default();
    for i in 0..3 {
        d.xi1_hat[i] = obs.xi2_hat[i] + k * c2i[i];
        d.xi2_hat[i] = obs.sigma[i] + feed[i] + k2 * c1i[i];
        d.sigma[i] = k3 * c0i[i];
    }
    d
}

/// Per-channel adaptation gains Q_i (symmetric positive semidefinite).
#[derive(Debug, Clone)]
pub struct AdaptationGains {
    pub mats: [Mat; 3],
    baked: [Mat3; 3],
}

impl AdaptationGains {
    pub fn new(mats: [Mat; 3]) -> Result<Self, AdaptiveError> {
        for (channel, q) in mats.iter().enumerate() {
            let asym = q.asymmetry();
            let min_eig = sym_eigenvalues(q)?[0];
            if asym > 1e-9 * (1.0 + q.max_abs()) || min_eig < -1e-12 {
                return Err(AdaptiveError::AdaptationGainInvalid {
                    channel,
                    min_eig,
                    asym,
                });
            }
        }
        let baked = [bake(&mats[0]), bake(&mats[1]), bake(&mats[2])];
        Ok(AdaptationGains { mats, baked })
    }

    pub fn scaled(&self, factor: f64) -> Result<Self, AdaptiveError> {
        AdaptationGains::new([
            self.mats[0].scale(factor),
            self.mats[1].scale(factor),
            self.mats[2].scale(factor),
        ])
    }
}

/// Γ̂̇ᵢᵀ = Q_i · ẑ₂ᵢ · η_i for each channel.
pub fn adaptation_derivative(
    z2hat: &[f64; 3],
    eta: &[f64],
    gains: &AdaptationGains,
) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        let e = &eta[3 * i..3 * i + 3];
        let scaled = [z2hat[i] * e[0], z2hat[i] * e[1], z2hat[i] * e[2]];
        out[i] = mul3(&gains.baked[i], &scaled);
    }
    out
}

/// τ = −Γ̂η − ẑ₂ with η̇ = Fη + G[Γ̂η + ẑ₂].
pub fn control_law(
    im: &InternalModelParams,
    gamma_hat: &[GammaRow; 3],
    eta: &[f64],
    z2hat: &[f64; 3],
) -> IdealControl {
    ideal_control(im, gamma_hat, eta, z2hat, &[0.0; 3])
}

/// The simulation-only variant fed the true z₂ = T₁ξ₁ + T₂ξ₂ plus the
/// disturbance-decoupling correction `tau0`; identical structure to
/// [`control_law`].
pub fn oracle_adaptive_control(
    im: &InternalModelParams,
    gamma_hat: &[GammaRow; 3],
    eta: &[f64],
    z2_true: &[f64; 3],
    tau0: &[f64; 3],
) -> IdealControl {
    ideal_control(im, gamma_hat, eta, z2_true, tau0)
}

/// Γ̂η for three block rows (re-exported convenience).
pub fn gamma_hat_apply(gamma_hat: &[GammaRow; 3], eta: &[f64]) -> [f64; 3] {
    gamma_apply(gamma_hat, eta)
}
