//! Internal-model construction and the known-frequency regulator.
//!
//! Each disturbance channel gets a 3×3 companion block `F_i` (Hurwitz by
//! design), input column `G_i = (0,0,1)ᵀ` and an output row `Γ_i(q_i)` chosen
//! so that `F_i + G_iΓ_i` matches the spectrum of the generator block
//! `S_i(q_i)`. For a companion block that is pure coefficient matching.

use crate::numeric::{eig_real_parts, solve_least_squares, Mat, NumericError};
use crate::plant::ExosystemParams;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RegulatorError {
    #[error("characteristic polynomial s^3 + {a2}*s^2 + {a1}*s + {a0} is not Hurwitz (max root real part {max_re:.6})")]
    NotHurwitz {
        a0: f64,
        a1: f64,
        a2: f64,
        max_re: f64,
    },
    #[error("steady-state equations for channel {channel} are rank deficient: {source}")]
    RankDeficient {
        channel: usize,
        source: NumericError,
    },
    #[error("steady-state equations for channel {channel} have no solution: residuals sylvester {sylvester:.3e}, output {output:.3e} (spectra of F+GΓ and S must coincide)")]
    NoSolution {
        channel: usize,
        sylvester: f64,
        output: f64,
    },
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

/// One output row of the internal model, per channel.
pub type GammaRow = [f64; 3];

/// Companion-form internal model shared by the three channels.
#[derive(Debug, Clone)]
pub struct InternalModelParams {
    /// Monic cubic coefficients (a0, a1, a2) of det(sI − F_i) =
    /// s³ + a2·s² + a1·s + a0.
    pub char_poly: [f64; 3],
    f_block: Mat,
}

impl InternalModelParams {
    /// 3×3 companion block with last row (−a0, −a1, −a2).
    pub fn f_block(&self) -> &Mat {
        &self.f_block
    }

    /// 9×9 block-diagonal F.
    pub fn full_f(&self) -> Mat {
        Mat::block_diag(&[&self.f_block, &self.f_block, &self.f_block])
    }

    /// 9×3 block-diagonal G with columns (0,0,1)ᵀ.
    pub fn full_g(&self) -> Mat {
        let mut g = Mat::zeros(9, 3);
        for i in 0..3 {
            g[(3 * i + 2, i)] = 1.0;
        }
        g
    }

    /// Frequency-squared readout from the adapted middle component:
    /// q̂ = a1 − Γ̂_{i,2}.
    pub fn q_readout(&self, gamma_mid: f64) -> f64 {
        self.char_poly[1] - gamma_mid
    }

    /// Per-channel derivative of the internal model state:
    /// η̇_i = F_i η_i + G_i · drive_i.
    #[inline]
    pub fn channel_derivative(&self, eta_i: &[f64], drive: f64, out: &mut [f64]) {
        let [a0, a1, a2] = self.char_poly;
        out[0] = eta_i[1];
        out[1] = eta_i[2];
        out[2] = -a0 * eta_i[0] - a1 * eta_i[1] - a2 * eta_i[2] + drive;
    }
}

/// Build the companion pair (F_i, G_i) from monic cubic coefficients,
/// rejecting non-Hurwitz polynomials.
pub fn build_companion(poly: [f64; 3]) -> Result<InternalModelParams, RegulatorError> {
    let [a0, a1, a2] = poly;
    let f_block = Mat::from_rows(&[
        vec![0.0, 1.0, 0.0],
        vec![0.0, 0.0, 1.0],
        vec![-a0, -a1, -a2],
    ])
    .map_err(RegulatorError::Numeric)?;
    let max_re = eig_real_parts(&f_block)?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    if max_re >= 0.0 {
        return Err(RegulatorError::NotHurwitz { a0, a1, a2, max_re });
    }
    Ok(InternalModelParams {
        char_poly: poly,
        f_block,
    })
}

/// Output row matching the spectrum of `S_i(q_i)` (char poly s³ + q·s):
/// Γ_i = (a0, a1 − q, a2). For the canonical (1,3,3) this is (1, 3−q, 3).
pub fn gamma_from_q(im: &InternalModelParams, q: f64) -> GammaRow {
    let [a0, a1, a2] = im.char_poly;
    [a0, a1 - q, a2]
}

/// Block-diagonal 3×9 output matrix from three channel rows.
pub fn gamma_matrix(gammas: &[GammaRow; 3]) -> Mat {
    let mut g = Mat::zeros(3, 9);
    for (i, row) in gammas.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            g[(i, 3 * i + j)] = v;
        }
    }
    g
}

/// Γη assembled from the three block rows.
#[inline]
pub fn gamma_apply(gammas: &[GammaRow; 3], eta: &[f64]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for i in 0..3 {
        let g = &gammas[i];
        let e = &eta[3 * i..3 * i + 3];
        out[i] = g[0] * e[0] + g[1] * e[1] + g[2] * e[2];
    }
    out
}

/// Steady-state interconnection matrices Σ_i with
/// Σ_i S_i = (F_i + G_iΓ_i) Σ_i and H_i = Γ_i Σ_i.
#[derive(Debug, Clone)]
pub struct SigmaSolution {
    pub blocks: [Mat; 3],
    /// worst Sylvester residual over the channels
    pub residual_sylvester: f64,
    /// worst output-constraint residual over the channels
    pub residual_output: f64,
}

impl SigmaSolution {
    /// 9×9 block-diagonal Σ.
    pub fn full(&self) -> Mat {
        Mat::block_diag(&[&self.blocks[0], &self.blocks[1], &self.blocks[2]])
    }

    /// η̃ = η − Σw, evaluated blockwise.
    pub fn eta_tilde(&self, eta: &[f64], w: &[f64], out: &mut [f64]) {
        for i in 0..3 {
            let s = &self.blocks[i];
            for r in 0..3 {
                let mut acc = eta[3 * i + r];
                for c in 0..3 {
                    acc -= s[(r, c)] * w[3 * i + c];
                }
                out[3 * i + r] = acc;
            }
        }
    }
}

const SIGMA_RESIDUAL_TOL: f64 = 1e-8;

/// Solve the per-channel steady-state equations by stacking the Sylvester
/// part with the output constraint (12 equations, 9 unknowns) and solving in
/// the least-squares sense; residuals above 1e-8 mean Γ and S have
/// mismatched spectra and are reported as an error.
pub fn sigma_solve(
    im: &InternalModelParams,
    gammas: &[GammaRow; 3],
    exo: &ExosystemParams,
) -> Result<SigmaSolution, RegulatorError> {
    let mut blocks: [Mat; 3] = [Mat::zeros(3, 3), Mat::zeros(3, 3), Mat::zeros(3, 3)];
    let mut worst_sylv = 0.0_f64;
    let mut worst_out = 0.0_f64;
    let eye = Mat::identity(3);
    for ch in 0..3 {
        let s_i = Mat::from_rows(&[
            vec![0.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![0.0, -exo.q[ch], 0.0],
        ])
        .map_err(RegulatorError::Numeric)?;
        let gamma_row = Mat::from_rows(&[gammas[ch].to_vec()]).map_err(RegulatorError::Numeric)?;
        let fg = im
            .f_block
            .add(&im_g_col().mul(&gamma_row)?)
            .map_err(RegulatorError::Numeric)?;
        // stacked system over vec(Sigma): (S^T ⊗ I − I ⊗ (F+GΓ)) on top,
        // (I ⊗ Γ) below
        let top = s_i.transpose().kron(&eye).sub(&eye.kron(&fg))?;
        let bottom = eye.kron(&gamma_row);
        let mut stacked = Mat::zeros(12, 9);
        stacked.set_block(0, 0, &top);
        stacked.set_block(9, 0, &bottom);
        let mut rhs = vec![0.0; 12];
        for (j, &h) in exo.h_rows[ch].iter().enumerate() {
            rhs[9 + j] = h;
        }
        let sol = solve_least_squares(&stacked, &rhs).map_err(|source| {
            RegulatorError::RankDeficient {
                channel: ch,
                source,
            }
        })?;
        let sigma = Mat::from_vec_cols(3, 3, &sol);
        let r_sylv = sigma.mul(&s_i)?.sub(&fg.mul(&sigma)?)?.max_abs();
        let h_row = Mat::from_rows(&[exo.h_rows[ch].to_vec()]).map_err(RegulatorError::Numeric)?;
        let r_out = gamma_row.mul(&sigma)?.sub(&h_row)?.max_abs();
        if r_sylv > SIGMA_RESIDUAL_TOL || r_out > SIGMA_RESIDUAL_TOL {
            return Err(RegulatorError::NoSolution {
                channel: ch,
                sylvester: r_sylv,
                output: r_out,
            });
        }
        worst_sylv = worst_sylv.max(r_sylv);
        worst_out = worst_out.max(r_out);
        blocks[ch] = sigma;
    }
    Ok(SigmaSolution {
        blocks,
        residual_sylvester: worst_sylv,
        residual_output: worst_out,
    })
}

fn im_g_col() -> Mat {
    Mat::from_rows(&[vec![0.0], vec![0.0], vec![1.0]]).unwrap()
}

/// Control and internal-model derivative of the known-frequency regulator:
/// τ = −Γη − z₂ − τ₀ and η̇ = Fη + G[Γη + z₂ + τ₀].
///
/// `tau0` is the disturbance-decoupling correction −Γ(η − Σw). It needs the
/// generator state and therefore only exists inside the simulator; pass
/// zeros for the plain output-feedback form.
pub struct IdealControl {
    pub tau: [f64; 3],
    pub eta_dot: [f64; 9],
}

pub fn ideal_control(
    im: &InternalModelParams,
    gammas: &[GammaRow; 3],
    eta: &[f64],
    z2: &[f64; 3],
    tau0: &[f64; 3],
) -> IdealControl {
    let ge = gamma_apply(gammas, eta);
    let mut tau = [0.0; 3];
    let mut eta_dot = [0.0; 9];
    for i in 0..3 {
        tau[i] = -ge[i] - z2[i] - tau0[i];
        let drive = ge[i] + z2[i] + tau0[i];
        im.channel_derivative(
            &eta[3 * i..3 * i + 3],
            drive,
            &mut eta_dot[3 * i..3 * i + 3],
        );
    }
    IdealControl { tau, eta_dot }
}

/// Canonical internal model: char poly (1, 3, 3), i.e. (s+1)³.
pub fn canonical_internal_model() -> InternalModelParams {
    build_companion([1.0, 3.0, 3.0]).expect("(s+1)^3 is Hurwitz")
}
