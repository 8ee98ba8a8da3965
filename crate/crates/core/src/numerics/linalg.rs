use nalgebra::DMatrix;

use super::rng::Rng;
use super::tensor::{l2_norm, Tensor};
use crate::error::{Error, Result};

pub const DEFAULT_POWER_ITERS: usize = 200;
pub const DEFAULT_POWER_TOL: f64 = 1e-8;

fn to_dmatrix(m: &Tensor) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.data())
}

/// `ln det(m)` for a symmetric positive-definite `m`, as twice the sum of the
/// log-diagonal of its Cholesky factor.
pub fn log_det_psd(m: &Tensor) -> Result<f64> {
    if m.rows() != m.cols() {
        return Err(Error::shape("log_det_psd", m.shape(), (m.rows(), m.rows())));
    }
    let chol = nalgebra::linalg::Cholesky::new(to_dmatrix(m))
        .ok_or_else(|| Error::Numeric("Cholesky factorization failed: matrix is not positive definite".into()))?;
    let l = chol.l_dirty();
    Ok((0..m.rows()).map(|i| 2.0 * l[(i, i)].ln()).sum())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralNorm {
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Largest singular value by power iteration on `mᵀm`.
///
/// Stops when the relative change of the eigenvalue estimate drops to `tol`;
/// `converged` is false if `iters` runs out first. The all-zero matrix
/// returns 0, converged.
pub fn spectral_norm(m: &Tensor, iters: usize, tol: f64) -> Result<SpectralNorm> {
    if iters == 0 {
        return Err(Error::Parameter("power iteration needs at least one step".into()));
    }
    if m.data().iter().all(|v| *v == 0.0) {
        return Ok(SpectralNorm {
            value: 0.0,
            converged: true,
            iterations: 0,
        });
    }
    let gram = m.transpose().matmul(m)?;
    let n = gram.rows();
    let mut rng = Rng::new(0x5eed_5eed);
    let mut v: Vec<f64> = (0..n).map(|_| 1.0 + 0.1 * rng.normal(0.0, 1.0)).collect();
    let norm = l2_norm(&v);
    v.iter_mut().for_each(|x| *x /= norm);

    let mut estimate = 0.0;
    for it in 1..=iters {
        let w: Vec<f64> = (0..n)
            .map(|i| gram.row(i).iter().zip(&v).map(|(a, b)| a * b).sum())
            .collect();
        let next = l2_norm(&w);
        if next == 0.0 {
            // start vector fell in the null space
            return Ok(SpectralNorm {
                value: 0.0,
                converged: false,
                iterations: it,
            });
        }
        let done = (next - estimate).abs() <= tol * next;
        estimate = next;
        v = w.into_iter().map(|x| x / next).collect();
        if done {
            return Ok(SpectralNorm {
                value: estimate.sqrt(),
                converged: true,
                iterations: it,
            });
        }
    }
    Ok(SpectralNorm {
        value: estimate.sqrt(),
        converged: false,
        iterations: iters,
    })
}

/// Block-diagonal composition `a ⊕ b`.
pub fn block_diag(a: &Tensor, b: &Tensor) -> Tensor {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = Tensor::zeros(ra + rb, ca + cb);
    for r in 0..ra {
        for c in 0..ca {
            out.set(r, c, a.get(r, c));
        }
    }
    for r in 0..rb {
        for c in 0..cb {
            out.set(ra + r, ca + c, b.get(r, c));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_det_examples() {
        assert_eq!(log_det_psd(&Tensor::identity(3)).unwrap(), 0.0);
        let v = log_det_psd(&Tensor::diag(&[5.0])).unwrap();
        assert!((v - 5f64.ln()).abs() < 1e-15);
        assert!((v - 1.6094).abs() < 1e-4);
        let indefinite = Tensor::from_rows(&[[1.0, 2.0], [2.0, 1.0]]).unwrap();
        assert!(matches!(log_det_psd(&indefinite), Err(Error::Numeric(_))));
    }

    #[test]
    fn spectral_norm_examples() {
        let s = spectral_norm(&Tensor::diag(&[3.0, 1.0]), DEFAULT_POWER_ITERS, DEFAULT_POWER_TOL).unwrap();
        assert!(s.converged);
        assert!((s.value - 3.0).abs() < 1e-8);

        let s = spectral_norm(&Tensor::identity(4), 10, 1e-12).unwrap();
        assert!((s.value - 1.0).abs() < 1e-12);

        let s = spectral_norm(&Tensor::zeros(3, 2), 5, 1e-8).unwrap();
        assert_eq!((s.value, s.converged), (0.0, true));

        assert!(spectral_norm(&Tensor::identity(2), 0, 1e-8).is_err());
    }

    #[test]
    fn non_converged_is_flagged() {
        // nearly equal top singular values converge slowly
        let m = Tensor::diag(&[1.0, 0.999_999]);
        let s = spectral_norm(&m, 2, 1e-14).unwrap();
        assert!(!s.converged);
        assert_eq!(s.iterations, 2);
    }
}
