//! Feature-redundancy pruning: the lossy minimal coding length of a batch of
//! representations, its second-order trace expansion, and the off-diagonal
//! decorrelation loss computed between a batch and a distorted copy of it.
//!
//! For a K×D batch `F`, with scale `c = K / (D ε²)`:
//!
//! ```text
//! MCL      = (K+D)/2 · ln det(I_D + c FᵀF)
//! MCL_r≤2  = (K+D)/2 · (Σᵢ (ξᵢᵢ − ξᵢᵢ²/2) − ½ Σᵢ Σ_{j≠i} ξᵢⱼ²),   ξ = c F̄ᵀF̄
//! loss     = Σᵢ Σ_{j≠i} ξᵢⱼ²,                                     ξ = c F̄ᵀF̄′
//! ```
//!
//! where `F̄` is `F` with every column standardized. The expansion is only
//! trustworthy while `‖c FᵀF‖₂ < 1`; see [`check_convergence`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::linalg::{DEFAULT_POWER_ITERS, DEFAULT_POWER_TOL};
use crate::numerics::tape::standardize_columns;
use crate::numerics::{log_det_psd, spectral_norm, Rng, Tape, Tensor, Var};

/// Highest Taylor order kept by [`mcl_taylor_r2`].
pub const TAYLOR_ORDER_CAP: usize = 2;
const MAX_DISTORTION_ATTEMPTS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FtcpConfig {
    /// Distortion upper bound ε of the coding length.
    pub epsilon: f64,
    /// Row norm π of the sampled feature distortion.
    pub pi: f64,
    /// Weight γ of the loss in the training objective.
    pub gamma: f64,
}

impl Default for FtcpConfig {
    fn default() -> Self {
        Self {
            epsilon: 1.0,
            pi: 0.1,
            gamma: 1.0,
        }
    }
}

impl FtcpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::Parameter(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if !(self.pi > 0.0) {
            return Err(Error::Parameter(format!("pi must be positive, got {}", self.pi)));
        }
        if !(self.gamma >= 0.0) {
            return Err(Error::Parameter(format!(
                "gamma must be nonnegative, got {}",
                self.gamma
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ViewMode {
    Single,
    Double,
}

#[derive(Clone, Debug, PartialEq)]
pub struct XiMatrix {
    pub matrix: Tensor,
    pub view_mode: ViewMode,
}

impl XiMatrix {
    pub fn off_diagonal_sum_sq(&self) -> f64 {
        let d = self.matrix.rows();
        let mut total = 0.0;
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    total += self.matrix.get(i, j).powi(2);
                }
            }
        }
        total
    }

    pub fn mean_sq_off_diagonal(&self) -> f64 {
        let d = self.matrix.rows();
        if d < 2 {
            return 0.0;
        }
        self.off_diagonal_sum_sq() / (d * (d - 1)) as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Normalized {
    pub matrix: Tensor,
    /// Columns with zero variance; they are centered only.
    pub degenerate: Vec<bool>,
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0) {
        return Err(Error::Parameter(format!("epsilon must be positive, got {eps}")));
    }
    Ok(())
}

/// `K / (D ε²)` for a K×D batch.
pub fn coding_scale(rows: usize, cols: usize, eps: f64) -> f64 {
    rows as f64 / (cols as f64 * eps * eps)
}

/// Column standardization with population standard deviation.
pub fn normalize_dims(f: &Tensor) -> Result<Normalized> {
    if f.rows() < 2 {
        return Err(Error::Parameter(format!(
            "normalization needs at least two rows, got {}",
            f.rows()
        )));
    }
    let (matrix, stds) = standardize_columns(f);
    Ok(Normalized {
        matrix,
        degenerate: stds.iter().map(|s| *s == 0.0).collect(),
    })
}

fn scaled_gram(f: &Tensor, eps: f64) -> Result<Tensor> {
    let c = coding_scale(f.rows(), f.cols(), eps);
    Ok(f.transpose().matmul(f)?.scale(c))
}

/// Exact coding length via a Cholesky log-determinant.
pub fn mcl_exact(f: &Tensor, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    let (k, d) = f.shape();
    let m = Tensor::identity(d).add(&scaled_gram(f, eps)?)?;
    Ok((k + d) as f64 / 2.0 * log_det_psd(&m)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub holds: bool,
    pub norm: f64,
}

/// Whether `‖(K/(Dε²)) FᵀF‖₂ < 1`.
pub fn check_convergence(f: &Tensor, eps: f64) -> Result<Convergence> {
    check_eps(eps)?;
    let norm = spectral_norm(&scaled_gram(f, eps)?, DEFAULT_POWER_ITERS, DEFAULT_POWER_TOL)?.value;
    Ok(Convergence {
        holds: norm < 1.0,
        norm,
    })
}

/// ξ from a single view: `c F̄ᵀF̄`.
pub fn xi_single(f: &Tensor, eps: f64) -> Result<XiMatrix> {
    check_eps(eps)?;
    let fbar = normalize_dims(f)?.matrix;
    Ok(XiMatrix {
        matrix: scaled_gram(&fbar, eps)?,
        view_mode: ViewMode::Single,
    })
}

/// ξ from two views: `c F̄ᵀF̄′`.
pub fn xi_double(f: &Tensor, f_prime: &Tensor, eps: f64) -> Result<XiMatrix> {
    check_eps(eps)?;
    if f.shape() != f_prime.shape() {
        return Err(Error::shape("xi_double", f.shape(), f_prime.shape()));
    }
    let a = normalize_dims(f)?.matrix;
    let b = normalize_dims(f_prime)?.matrix;
    let c = coding_scale(f.rows(), f.cols(), eps);
    Ok(XiMatrix {
        matrix: a.transpose().matmul(&b)?.scale(c),
        view_mode: ViewMode::Double,
    })
}

/// Second-order expansion of the coding length of the standardized batch.
pub fn mcl_taylor_r2(f: &Tensor, eps: f64) -> Result<f64> {
    let xi = xi_single(f, eps)?;
    let (k, d) = f.shape();
    let m = &xi.matrix;
    let diag: f64 = (0..d).map(|i| m.get(i, i) - 0.5 * m.get(i, i).powi(2)).sum();
    Ok((k + d) as f64 / 2.0 * (diag - 0.5 * xi.off_diagonal_sum_sq()))
}

/// Sign-aligned distortion rows of norm exactly `pi`.
///
/// Each row draws `ē ~ U[0,1)^D`, copies the sign pattern of the matching
/// row of `f` onto it (zero entries keep the positive draw), and rescales to
/// norm `pi`.
pub fn sample_distortion(f: &Tensor, pi: f64, rng: &mut Rng) -> Result<Tensor> {
    if !(pi > 0.0) {
        return Err(Error::Parameter(format!("pi must be positive, got {pi}")));
    }
    let (k, d) = f.shape();
    let mut out = Tensor::zeros(k, d);
    for j in 0..k {
        let mut attempt = 0;
        let row = loop {
            let aligned: Vec<f64> = f
                .row(j)
                .iter()
                .map(|x| {
                    let u = rng.uniform();
                    if *x < 0.0 {
                        -u
                    } else {
                        u
                    }
                })
                .collect();
            let norm = crate::numerics::tensor::l2_norm(&aligned);
            if norm > 0.0 {
                break aligned.into_iter().map(|v| pi * v / norm).collect::<Vec<_>>();
            }
            attempt += 1;
            if attempt >= MAX_DISTORTION_ATTEMPTS {
                return Err(Error::Numeric(format!(
                    "zero-norm distortion for row {j} after {MAX_DISTORTION_ATTEMPTS} draws"
                )));
            }
        };
        out.row_mut(j).copy_from_slice(&row);
    }
    Ok(out)
}

/// `f + ε` with ε from [`sample_distortion`].
pub fn make_distorted_view(f: &Tensor, cfg: &FtcpConfig, rng: &mut Rng) -> Result<Tensor> {
    let eps = sample_distortion(f, cfg.pi, rng)?;
    f.add(&eps)
}

/// Double-view decorrelation loss on the tape.
pub fn ftcp_loss_on(tape: &mut Tape, f: Var, f_prime: Var, eps: f64) -> Result<Var> {
    check_eps(eps)?;
    let (k, d) = tape.shape(f);
    if tape.shape(f_prime) != (k, d) {
        return Err(Error::shape("ftcp_loss", (k, d), tape.shape(f_prime)));
    }
    if k < 2 {
        return Err(Error::Parameter(format!(
            "decorrelation loss needs at least two rows, got {k}"
        )));
    }
    let a = tape.standardize_cols(f);
    let b = tape.standardize_cols(f_prime);
    let at = tape.transpose(a);
    let gram = tape.matmul(at, b)?;
    let xi = tape.scale(gram, coding_scale(k, d, eps));
    let off = tape.off_diagonal(xi)?;
    let sq = tape.mul(off, off)?;
    Ok(tape.sum(sq))
}

pub fn ftcp_loss(f: &Tensor, f_prime: &Tensor, cfg: &FtcpConfig) -> Result<f64> {
    let mut tape = Tape::new();
    let a = tape.constant(f);
    let b = tape.constant(f_prime);
    let out = ftcp_loss_on(&mut tape, a, b, cfg.epsilon)?;
    tape.value(out).item()
}
