//! Numerical stability certificates: the constructive passivity matrix P,
//! the steady-state (regulator) equations, closed-loop spectra, observer
//! matrix conditions, and the Lyapunov-function evaluator.
//!
//! Certificates never panic on a failed condition: they carry named checks
//! with values and thresholds, and an overall pass flag. Hard checks gate
//! the `certify` command's exit code; soft ones only warn.

use crate::adaptive::{AdaptationGains, ObserverParams};
use crate::numeric::{
    eigenvalues, invert, lyapunov_solve, solve_linear_vec, sym_eigenvalues, sym_pseudo_inverse,
    Mat, NumericError,
};
use crate::plant::{ErrorModel, TransformedModel};
use crate::regulator::{GammaRow, InternalModelParams};
use serde::Serialize;
use thiserror::Error;

/// Residual threshold for the PB + Cᵀ identity.
pub const PB_RESIDUAL_TOL: f64 = 1e-9;
/// Negative definiteness margin after symmetrization.
pub const NEG_DEF_MARGIN: f64 = -1e-9;
/// Positive definiteness margin.
pub const POS_DEF_MARGIN: f64 = 1e-9;
/// Residual threshold for the steady-state (regulator) equations.
pub const FRANCIS_RESIDUAL_TOL: f64 = 1e-8;
/// Tolerance on eigenvalue imaginary parts in the observer realness check.
pub const AO_IMAG_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum CertificateError {
    #[error("B2 is singular, the passivity construction is undefined: {0}")]
    B2Singular(NumericError),
    #[error("Lyapunov solve for P1 failed: {0}")]
    P1Failed(NumericError),
    #[error("steady-state equations are rank deficient: {0}")]
    FrancisRankDeficient(NumericError),
    #[error("adaptation error has component {value:.3e} outside range(Q) in channel {channel}; Q⁻¹ term undefined")]
    GammaOutsideRange { channel: usize, value: f64 },
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

/// Direction of a certified bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Bound {
    /// value must be strictly below the threshold
    Below,
    /// value must be strictly above the threshold
    Above,
}

/// One named check inside a certificate.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub bound: Bound,
    pub passed: bool,
    /// Hard checks gate exit codes; soft ones downgrade to warnings.
    pub hard: bool,
}

impl Check {
    pub fn from_value(name: &str, value: f64, threshold: f64, bound: Bound, hard: bool) -> Self {
        let passed = match bound {
            Bound::Below => value < threshold,
            Bound::Above => value > threshold,
        };
        Check {
            name: name.to_string(),
            value,
            threshold,
            bound,
            passed,
            hard,
        }
    }
}

/// A named bundle of checks plus free-form numeric context.
#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub name: String,
    pub checks: Vec<Check>,
    pub info: Vec<(String, f64)>,
    pub passed: bool,
}

impl Certificate {
    pub fn from_checks(name: &str, checks: Vec<Check>, info: Vec<(String, f64)>) -> Self {
        let passed = checks.iter().all(|c| c.passed);
        Certificate {
            name: name.to_string(),
            checks,
            info,
            passed,
        }
    }

    /// All hard checks pass (soft failures are warnings only).
    pub fn hard_passed(&self) -> bool {
        self.checks.iter().filter(|c| c.hard).all(|c| c.passed)
    }
}

/// The aggregated closed loop in (η̃, z₁, z₂) coordinates:
/// A = (F 0 G; 0 A₁₁ A₁₂; 0 A₂₁ A₂₂−B₂), B = (G; 0; −B₂), C = (0 0 I).
#[derive(Debug, Clone)]
pub struct ClosedLoop {
    pub a: Mat,
    pub b: Mat,
    pub c: Mat,
}

pub fn assemble_closed_loop(im: &InternalModelParams, tm: &TransformedModel) -> ClosedLoop {
    let f = im.full_f();
    let g = im.full_g();
    let mut a = Mat::zeros(15, 15);
    a.set_block(0, 0, &f);
    a.set_block(0, 12, &g);
    a.set_block(9, 9, &tm.a11);
    a.set_block(9, 12, &tm.a12);
    a.set_block(12, 9, &tm.a21);
    a.set_block(12, 12, &tm.a22.sub(&tm.b2).expect("3x3 blocks"));
    let mut b = Mat::zeros(15, 3);
    b.set_block(0, 0, &g);
    b.set_block(12, 0, &tm.b2.scale(-1.0));
    let mut c = Mat::zeros(3, 15);
    c.set_block(0, 12, &Mat::identity(3));
    ClosedLoop { a, b, c }
}

/// Certificate that the aggregated closed-loop matrix is Hurwitz.
pub fn closed_loop_hurwitz(cl: &ClosedLoop) -> Result<Certificate, CertificateError> {
    let ev = eigenvalues(&cl.a)?;
    let max_re = ev.iter().fold(f64::NEG_INFINITY, |m, e| m.max(e.re));
    Ok(Certificate::from_checks(
        "closed_loop_hurwitz",
        vec![Check::from_value(
            "max_eigenvalue_real_part",
            max_re,
            NEG_DEF_MARGIN,
            Bound::Below,
            true,
        )],
        vec![(
            "min_eigenvalue_real_part".into(),
            ev.iter().fold(f64::INFINITY, |m, e| m.min(e.re)),
        )],
    ))
}

/// Outcome of the constructive passivity certificate.
#[derive(Debug, Clone)]
pub struct PassivityOutcome {
    /// P = Tᵀ · diag(εP₁, I, B₂⁻¹) · T
    pub p: Mat,
    /// scale applied to P₁ (the construction is free to shrink it)
    pub epsilon: f64,
    pub certificate: Certificate,
}

/// Constructive certificate for the passivity matrix P with PA + AᵀP ≺ 0 and
/// PB = −Cᵀ, following the printed proof: T with upper-right block G·B₂⁻¹,
/// P₁ from the Lyapunov equation for F, P̃ = diag(εP₁, I, B₂⁻¹), P = TᵀP̃T.
///
/// ε walks a fixed ladder downward; any ε keeps P₁F + FᵀP₁ ≺ 0, and a small
/// enough ε dominates the off-diagonal coupling whenever the hypotheses
/// (B₂ ≻ 0 symmetric within tolerance) actually hold. The first ε whose
/// checks all pass is kept; otherwise the ε = 1 attempt is reported.
pub fn passivity_certificate(
    im: &InternalModelParams,
    tm: &TransformedModel,
    cl: &ClosedLoop,
) -> Result<PassivityOutcome, CertificateError> {
    let f = im.full_f();
    let g = im.full_g();
    let b2_inv = invert(&tm.b2).map_err(CertificateError::B2Singular)?;
    let p1 = lyapunov_solve(&f, &Mat::identity(9)).map_err(CertificateError::P1Failed)?;

    let mut t = Mat::identity(15);
    t.set_block(0, 12, &g.mul(&b2_inv)?);

    // TB = (0; 0; -B2) is the pivot identity of the construction
    let tb = t.mul(&cl.b)?;
    let mut tb_expect = Mat::zeros(15, 3);
    tb_expect.set_block(12, 0, &tm.b2.scale(-1.0));
    let tb_residual = tb.sub(&tb_expect)?.max_abs();

    let build = |eps: f64| -> Result<(Mat, Vec<Check>), CertificateError> {
        let p_tilde = Mat::block_diag(&[&p1.scale(eps), &Mat::identity(3), &b2_inv]);
        let p = t.transpose().mul(&p_tilde)?.mul(&t)?;
        let pb_residual = p.mul(&cl.b)?.add(&cl.c.transpose())?.max_abs();
        let pa = p.mul(&cl.a)?;
        let decrease = pa.add(&pa.transpose())?.symmetrize();
        let lam_max = *sym_eigenvalues(&decrease)?
            .last()
            .expect("nonempty spectrum");
        let p_sym_min = sym_eigenvalues(&p.symmetrize())?[0];
        let p_asym = p.asymmetry();
        let checks = vec![
            Check::from_value(
                "pb_plus_ct_residual",
                pb_residual,
                PB_RESIDUAL_TOL,
                Bound::Below,
                true,
            ),
            Check::from_value(
                "decrease_max_eigenvalue",
                lam_max,
                NEG_DEF_MARGIN,
                Bound::Below,
                true,
            ),
            Check::from_value(
                "p_min_eigenvalue",
                p_sym_min,
                POS_DEF_MARGIN,
                Bound::Above,
                true,
            ),
            Check::from_value("p_asymmetry", p_asym, PB_RESIDUAL_TOL, Bound::Below, true),
            Check::from_value(
                "tb_identity_residual",
                tb_residual,
                1e-12,
                Bound::Below,
                true,
            ),
        ];
        Ok((p, checks))
    };

    const LADDER: [f64; 10] = [1.0, 0.5, 0.2, 0.1, 0.05, 0.02, 0.01, 5e-3, 2e-3, 1e-3];
    // keep the attempt with the most negative decrease eigenvalue in case
    // no ladder entry certifies
    let mut best: Option<(f64, f64, Mat, Vec<Check>)> = None;
    for &eps in &LADDER {
        let (p, checks) = build(eps)?;
        if checks.iter().all(|c| c.passed) {
            let info = vec![
                ("p1_scale".into(), eps),
                ("b2_sym_min_eig".into(), tm.b2_sym_min_eig),
            ];
            return Ok(PassivityOutcome {
                p,
                epsilon: eps,
                certificate: Certificate::from_checks("passivity_p", checks, info),
            });
        }
        let lam = checks
            .iter()
            .find(|c| c.name == "decrease_max_eigenvalue")
            .map_or(f64::INFINITY, |c| c.value);
        if best.as_ref().is_none_or(|(l, ..)| lam < *l) {
            best = Some((lam, eps, p, checks));
        }
    }
    let (_, eps, p, checks) = best.expect("ladder is nonempty");
    let info = vec![
        ("p1_scale".into(), eps),
        ("b2_sym_min_eig".into(), tm.b2_sym_min_eig),
    ];
    Ok(PassivityOutcome {
        p,
        epsilon: eps,
        certificate: Certificate::from_checks("passivity_p", checks, info),
    })
}

/// Solution of the steady-state (regulator) equations
/// Π S = A Π + B Ψ + P, 0 = C_e Π, solved jointly by Kronecker vectorization.
#[derive(Debug, Clone)]
pub struct FrancisSolution {
    pub pi: Mat,
    pub psi: Mat,
    pub certificate: Certificate,
}

pub fn francis_solve(
    err: &ErrorModel,
    s: &Mat,
    h: &Mat,
) -> Result<FrancisSolution, CertificateError> {
    let n = err.a.rows(); // 6
    let nd = s.rows(); // 9
    let m = err.b.cols(); // 3
    let p_rows = err.c_e.rows(); // 3
    let eye_n = Mat::identity(n);
    let eye_nd = Mat::identity(nd);

    // unknowns: vec(Pi) (n*nd) then vec(Psi) (m*nd), column-major
    let top_left = s.transpose().kron(&eye_n).sub(&eye_nd.kron(&err.a))?;
    let top_right = eye_nd.kron(&err.b).scale(-1.0);
    let bottom_left = eye_nd.kron(&err.c_e);

    let rows = n * nd + p_rows * nd;
    let cols = n * nd + m * nd;
    let mut big = Mat::zeros(rows, cols);
    big.set_block(0, 0, &top_left);
    big.set_block(0, n * nd, &top_right);
    big.set_block(n * nd, 0, &bottom_left);

    let mut rhs = vec![0.0; rows];
    rhs[..n * nd].copy_from_slice(&err.p.vec_cols());

    let sol = solve_linear_vec(&big, &rhs).map_err(CertificateError::FrancisRankDeficient)?;
    let pi = Mat::from_vec_cols(n, nd, &sol[..n * nd]);
    let psi = Mat::from_vec_cols(m, nd, &sol[n * nd..]);

    let r1 = pi
        .mul(s)?
        .sub(&err.a.mul(&pi)?)?
        .sub(&err.b.mul(&psi)?)?
        .sub(&err.p)?
        .max_abs();
    let r2 = err.c_e.mul(&pi)?.max_abs();
    // for this plant the steady-state control exactly cancels the
    // disturbance output: Psi = -H; reported as context, not gated
    let psi_plus_h = psi.add(h)?.max_abs();
    let checks = vec![
        Check::from_value(
            "sylvester_residual",
            r1,
            FRANCIS_RESIDUAL_TOL,
            Bound::Below,
            true,
        ),
        Check::from_value(
            "output_zero_residual",
            r2,
            FRANCIS_RESIDUAL_TOL,
            Bound::Below,
            true,
        ),
    ];
    Ok(FrancisSolution {
        certificate: Certificate::from_checks(
            "francis_equations",
            checks,
            vec![("psi_plus_h_max_abs".into(), psi_plus_h)],
        ),
        pi,
        psi,
    })
}

/// Observer composite-matrix certificate: assembles
/// A_o = (−C₂ I 0; −C₁ 0 I; −C₀ 0 0), requires a Hurwitz spectrum (hard) and
/// real eigenvalues (soft), and reports the inertia-mismatch measure δ₀ < 1
/// (soft).
pub fn observer_matrix_check(
    p: &ObserverParams,
    m_inv: &Mat,
) -> Result<Certificate, CertificateError> {
    let a_o = observer_composite_matrix(p);
    let ev = eigenvalues(&a_o)?;
    let max_re = ev.iter().fold(f64::NEG_INFINITY, |m, e| m.max(e.re));
    let max_im = ev.iter().fold(0.0_f64, |m, e| m.max(e.im.abs()));
    let delta0 = p.delta0(m_inv);
    let checks = vec![
        Check::from_value(
            "max_eigenvalue_real_part",
            max_re,
            NEG_DEF_MARGIN,
            Bound::Below,
            true,
        ),
        Check::from_value(
            "max_eigenvalue_imag_part",
            max_im,
            AO_IMAG_TOL,
            Bound::Below,
            false,
        ),
        Check::from_value("inertia_mismatch_delta0", delta0, 1.0, Bound::Below, false),
    ];
    let info = vec![(
        "max_eigenvalue_magnitude".into(),
        ev.iter().fold(0.0_f64, |m, e| m.max(e.magnitude())),
    )];
    Ok(Certificate::from_checks("observer_matrix", checks, info))
}

/// The 9×9 composite matrix printed with the observer design.
pub fn observer_composite_matrix(p: &ObserverParams) -> Mat {
    let mut a = Mat::zeros(9, 9);
    a.set_block(0, 0, &p.c2.scale(-1.0));
    a.set_block(0, 3, &Mat::identity(3));
    a.set_block(3, 0, &p.c1.scale(-1.0));
    a.set_block(3, 6, &Mat::identity(3));
    a.set_block(6, 0, &p.c0.scale(-1.0));
    a
}

/// Largest |eigenvalue| over all modes the fixed-step integrator must
/// resolve: the κ-scaled observer spectrum dominates when present.
pub fn stiffest_mode(
    cl: &ClosedLoop,
    obs: Option<&ObserverParams>,
) -> Result<f64, CertificateError> {
    let mut worst = eigenvalues(&cl.a)?
        .iter()
        .fold(0.0_f64, |m, e| m.max(e.magnitude()));
    if let Some(p) = obs {
        let a_o = observer_composite_matrix(p);
        let obs_worst = eigenvalues(&a_o)?
            .iter()
            .fold(0.0_f64, |m, e| m.max(e.magnitude()));
        worst = worst.max(p.kappa * obs_worst);
    }
    Ok(worst)
}

/// Evaluator for V(x, Γ̃) = xᵀPx + Σ Γ̃ᵢ Qᵢ⁺ Γ̃ᵢᵀ with the pseudo-inverse
/// restricted to range(Q_i); a Γ̃ component outside that range makes the
/// printed Q⁻¹ term undefined and is an error.
#[derive(Debug, Clone)]
pub struct LyapunovEvaluator {
    pub p: Mat,
    q_pinv: [Mat; 3],
    range_proj: [Mat; 3],
}

impl LyapunovEvaluator {
    pub fn new(p: Mat, gains: &AdaptationGains) -> Result<Self, CertificateError> {
        let mut q_pinv: Vec<Mat> = Vec::with_capacity(3);
        let mut range_proj: Vec<Mat> = Vec::with_capacity(3);
        for q in &gains.mats {
            let pinv = sym_pseudo_inverse(q, 1e-12)?;
            // I - Q Q+ projects onto the orthogonal complement of range(Q)
            let proj = Mat::identity(3).sub(&q.mul(&pinv)?)?;
            q_pinv.push(pinv);
            range_proj.push(proj);
        }
        Ok(LyapunovEvaluator {
            p,
            q_pinv: [q_pinv[0].clone(), q_pinv[1].clone(), q_pinv[2].clone()],
            range_proj: [
                range_proj[0].clone(),
                range_proj[1].clone(),
                range_proj[2].clone(),
            ],
        })
    }

    pub fn eval(&self, x: &[f64], gamma_tilde: &[GammaRow; 3]) -> Result<f64, CertificateError> {
        let px = self.p.matvec(x)?;
        let mut v: f64 = x.iter().zip(&px).map(|(a, b)| a * b).sum();
        for (i, gt) in gamma_tilde.iter().enumerate() {
            let outside = self.range_proj[i].matvec(gt.as_slice())?;
            for &o in &outside {
                if o.abs() > 1e-9 * (1.0 + gt.iter().fold(0.0_f64, |m, g| m.max(g.abs()))) {
                    return Err(CertificateError::GammaOutsideRange {
                        channel: i,
                        value: o,
                    });
                }
            }
            let qg = self.q_pinv[i].matvec(gt.as_slice())?;
            v += gt.iter().zip(&qg).map(|(a, b)| a * b).sum::<f64>();
        }
        Ok(v)
    }
}
