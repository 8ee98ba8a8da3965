//! Dense linear algebra, seeded randomness and the reverse-mode gradient tape.

pub mod gradcheck;
pub mod linalg;
pub mod rng;
pub mod tape;
pub mod tensor;

pub use gradcheck::{check_gradients, finite_diff_check, GradCheckReport};
pub use linalg::{log_det_psd, spectral_norm, SpectralNorm};
pub use rng::Rng;
pub use tape::{softmax, Gradients, Tape, Var};
pub use tensor::Tensor;

use crate::error::Result;

pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    a.matmul(b)
}

/// Cosine similarity of two equal-length slices; `None` if either has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    let na = tensor::l2_norm(a);
    let nb = tensor::l2_norm(b);
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    Some(tensor::dot(a, b) / (na * nb))
}
