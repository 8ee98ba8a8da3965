//! Fixed, seeded stand-ins for pre-trained text and image towers, plus the
//! cosine-similarity classifier and its cross-entropy.
//!
//! Encoder weights are only ever placed on a tape as constants, so gradients
//! flow through them to the prompt but never into them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{cosine, softmax, Rng, Tape, Tensor, Var};
use crate::prompting::Prompt;

pub const DEFAULT_TAU: f64 = 0.01;
const BIAS_STD: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Linear {
    weight: Tensor,
    bias: Tensor,
}

impl Linear {
    fn init(d_in: usize, d_out: usize, rng: &mut Rng) -> Self {
        Self {
            weight: rng.gaussian_tensor(d_in, d_out, 1.0 / (d_in as f64).sqrt()),
            bias: rng.gaussian_tensor(1, d_out, BIAS_STD),
        }
    }

    fn apply_on(&self, tape: &mut Tape, x: Var) -> Result<Var> {
        let w = tape.constant(&self.weight);
        let b = tape.constant(&self.bias);
        let y = tape.matmul(x, w)?;
        tape.add_row(y, b)
    }
}

/// Two-layer map `tanh(x W₁ + b₁) W₂ + b₂`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct TwoLayer {
    first: Linear,
    second: Linear,
}

impl TwoLayer {
    fn init(d_in: usize, d_emb: usize, rng: &mut Rng) -> Self {
        Self {
            first: Linear::init(d_in, d_emb, rng),
            second: Linear::init(d_emb, d_emb, rng),
        }
    }

    fn apply_on(&self, tape: &mut Tape, x: Var) -> Result<Var> {
        let h = self.first.apply_on(tape, x)?;
        let h = tape.tanh(h);
        self.second.apply_on(tape, h)
    }

    fn tensors(&self) -> [&Tensor; 4] {
        [
            &self.first.weight,
            &self.first.bias,
            &self.second.weight,
            &self.second.bias,
        ]
    }
}

/// Mean-pools prompt tokens, then applies a fixed two-layer map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrozenTextEncoder {
    net: TwoLayer,
}

impl FrozenTextEncoder {
    pub fn new(d_tok: usize, d_emb: usize, rng: &mut Rng) -> Self {
        Self {
            net: TwoLayer::init(d_tok, d_emb, rng),
        }
    }

    pub fn d_tok(&self) -> usize {
        self.net.first.weight.rows()
    }

    pub fn d_emb(&self) -> usize {
        self.net.second.weight.cols()
    }

    /// Encodes an S×d_tok token sequence into a 1×d_emb feature.
    pub fn encode_on(&self, tape: &mut Tape, tokens: Var) -> Result<Var> {
        if tape.shape(tokens).0 == 0 {
            return Err(Error::Parameter("empty prompt".into()));
        }
        let pooled = tape.mean_rows(tokens);
        self.net.apply_on(tape, pooled)
    }

    pub fn encode(&self, prompt: &Prompt) -> Result<Tensor> {
        let mut tape = Tape::new();
        let t = tape.constant(&prompt.tokens);
        let out = self.encode_on(&mut tape, t)?;
        Ok(tape.value(out).clone())
    }

    pub fn weights(&self) -> [&Tensor; 4] {
        self.net.tensors()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrozenImageEncoder {
    net: TwoLayer,
}

impl FrozenImageEncoder {
    pub fn new(d_img: usize, d_emb: usize, rng: &mut Rng) -> Self {
        Self {
            net: TwoLayer::init(d_img, d_emb, rng),
        }
    }

    pub fn d_img(&self) -> usize {
        self.net.first.weight.rows()
    }

    /// Encodes each row of an n×d_img batch.
    pub fn encode(&self, x: &Tensor) -> Result<Tensor> {
        if x.cols() != self.d_img() {
            return Err(Error::shape("encode_image", x.shape(), (x.rows(), self.d_img())));
        }
        if !x.is_finite() {
            return Err(Error::Numeric("non-finite image features".into()));
        }
        let mut tape = Tape::new();
        let xv = tape.constant(x);
        let out = self.net.apply_on(&mut tape, xv)?;
        Ok(tape.value(out).clone())
    }

    pub fn weights(&self) -> [&Tensor; 4] {
        self.net.tensors()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub tau: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self { tau: DEFAULT_TAU }
    }
}

impl ClassifierConfig {
    pub fn new(tau: f64) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::Parameter(format!("temperature must be positive, got {tau}")));
        }
        Ok(Self { tau })
    }
}

/// Class probabilities: softmax over cosine similarities divided by τ.
pub fn predict(h: &Tensor, labels: &Tensor, cfg: &ClassifierConfig) -> Result<Vec<f64>> {
    if labels.rows() == 0 {
        return Err(Error::Parameter("no label features".into()));
    }
    if h.cols() != labels.cols() || h.rows() != 1 {
        return Err(Error::shape("predict", h.shape(), labels.shape()));
    }
    let sims = (0..labels.rows())
        .map(|i| {
            cosine(h.data(), labels.row(i))
                .ok_or_else(|| Error::Numeric("zero-norm feature; cosine similarity undefined".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(softmax(&Tensor::row_vector(&sims), cfg.tau)?.into_data())
}

pub fn cross_entropy(probs: &[f64], y: usize) -> Result<f64> {
    let p = probs.get(y).ok_or(Error::Index {
        index: y,
        len: probs.len(),
    })?;
    Ok(-p.ln())
}

/// n×K cosine similarities between image features and label features.
pub fn cosine_logits_on(tape: &mut Tape, images: Var, labels: Var) -> Result<Var> {
    let hn = tape.normalize_rows(images)?;
    let ln = tape.normalize_rows(labels)?;
    let lt = tape.transpose(ln);
    tape.matmul(hn, lt)
}

/// Mean over rows of `−log softmax(cos/τ)[target]`.
pub fn cross_entropy_on(tape: &mut Tape, cosines: Var, targets: &[usize], tau: f64) -> Result<Var> {
    let (n, k) = tape.shape(cosines);
    if targets.len() != n || n == 0 {
        return Err(Error::Parameter(format!("{} targets for {n} rows", targets.len())));
    }
    if let Some(bad) = targets.iter().find(|t| **t >= k) {
        return Err(Error::Index { index: *bad, len: k });
    }
    let lp = tape.log_softmax_rows(cosines, tau)?;
    let entries: Vec<(usize, usize)> = targets.iter().enumerate().map(|(i, t)| (i, *t)).collect();
    let picked = tape.pick(lp, &entries)?;
    let total = tape.sum(picked);
    Ok(tape.scale(total, -1.0 / n as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn predict_examples() {
        let cfg = ClassifierConfig::new(1.0).unwrap();
        let same = Tensor::from_rows(&[[1.0, 2.0], [1.0, 2.0], [1.0, 2.0]]).unwrap();
        let p = predict(&Tensor::row_vector(&[0.3, -1.0]), &same, &cfg).unwrap();
        assert!(p.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-15));

        let labels = Tensor::from_rows(&[[2.0, 0.0], [0.0, 5.0]]).unwrap();
        let p = predict(&Tensor::row_vector(&[3.0, 0.0]), &labels, &cfg).unwrap();
        assert!((p[0] - 0.7311).abs() < 1e-4 && (p[1] - 0.2689).abs() < 1e-4);

        let p = predict(&Tensor::row_vector(&[3.0, 1.0]), &labels.row_tensor(0), &cfg).unwrap();
        assert_eq!(p, vec![1.0]);
    }

    #[test]
    fn predict_rejects_zero_norm() {
        let cfg = ClassifierConfig::default();
        let labels = Tensor::from_rows(&[[1.0, 0.0], [0.0, 0.0]]).unwrap();
        assert!(matches!(
            predict(&Tensor::row_vector(&[1.0, 1.0]), &labels, &cfg),
            Err(Error::Numeric(_))
        ));
        assert!(ClassifierConfig::new(0.0).is_err());
    }

    #[test]
    fn cross_entropy_examples() {
        assert_eq!(cross_entropy(&[0.0, 1.0], 1).unwrap(), 0.0);
        assert!((cross_entropy(&[0.7311, 0.2689], 0).unwrap() - 0.3133).abs() < 1e-4);
        assert!((cross_entropy(&[0.25; 4], 2).unwrap() - 4f64.ln()).abs() < 1e-15);
        assert!(matches!(cross_entropy(&[1.0], 1), Err(Error::Index { .. })));
    }

    #[test]
    fn text_encoder_mean_pool_properties() {
        let mut rng = Rng::new(4);
        let enc = FrozenTextEncoder::new(5, 3, &mut rng);
        let tokens = rng.gaussian_tensor(3, 5, 1.0);
        let p = Prompt {
            tokens: tokens.clone(),
            label_index: 0,
        };
        let rev = Tensor::vstack(&[tokens.row_tensor(2), tokens.row_tensor(1), tokens.row_tensor(0)]).unwrap();
        let a = enc.encode(&p).unwrap();
        let b = enc
            .encode(&Prompt {
                tokens: rev,
                label_index: 0,
            })
            .unwrap();
        assert!(a.max_abs_diff(&b) < 1e-14);

        let single = tokens.row_tensor(1);
        let one = enc
            .encode(&Prompt {
                tokens: single.clone(),
                label_index: 0,
            })
            .unwrap();
        let [w1, b1, w2, b2] = enc.weights();
        let h = single.matmul(w1).unwrap().add_row(b1).unwrap().map(f64::tanh);
        let expected = h.matmul(w2).unwrap().add_row(b2).unwrap();
        assert!(one.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn image_encoder_zero_input_and_shape() {
        let mut rng = Rng::new(6);
        let enc = FrozenImageEncoder::new(4, 3, &mut rng);
        let out = enc.encode(&Tensor::zeros(1, 4)).unwrap();
        let [_, b1, w2, b2] = enc.weights();
        let expected = b1.map(f64::tanh).matmul(w2).unwrap().add_row(b2).unwrap();
        assert!(out.max_abs_diff(&expected) < 1e-15);
        assert!(matches!(enc.encode(&Tensor::zeros(1, 5)), Err(Error::Shape { .. })));
        let x = rng.gaussian_tensor(1, 4, 1.0);
        assert_eq!(enc.encode(&x).unwrap(), enc.encode(&x).unwrap());
    }

    #[test]
    fn cross_entropy_on_tape_matches_direct() {
        let mut rng = Rng::new(9);
        let h = rng.gaussian_tensor(2, 3, 1.0);
        let l = rng.gaussian_tensor(4, 3, 1.0);
        let cfg = ClassifierConfig::new(0.5).unwrap();
        let mut tape = Tape::new();
        let hv = tape.constant(&h);
        let lv = tape.constant(&l);
        let cos = cosine_logits_on(&mut tape, hv, lv).unwrap();
        let ce = cross_entropy_on(&mut tape, cos, &[1, 3], cfg.tau).unwrap();
        let direct = (cross_entropy(&predict(&h.row_tensor(0), &l, &cfg).unwrap(), 1).unwrap()
            + cross_entropy(&predict(&h.row_tensor(1), &l, &cfg).unwrap(), 3).unwrap())
            / 2.0;
        assert!((tape.value(ce).item().unwrap() - direct).abs() < 1e-12);
        assert!(cross_entropy_on(&mut tape, cos, &[1, 4], 0.5).is_err());
    }
}
