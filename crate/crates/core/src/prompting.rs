//! Knowledge-augmented prompts: learnable context rows shifted by a scaled
//! knowledge vector, followed by the label's token vectors.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph_encoder::GraphEmbedding;
use crate::numerics::rng::hashed_gaussian;
use crate::numerics::{Rng, Tape, Tensor, Var};

pub const CONTEXT_INIT_STD: f64 = 0.02;
pub const DEFAULT_MAX_LEN: usize = 77;
const OOV_STD: f64 = 0.02;
const OOV_SALT: u64 = 0x00b0_7e7e;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PromptMode {
    /// Each label's context is shifted by its own knowledge vector.
    LabelSpecific,
    /// Every label's context is shifted by one linear map of all labels' embeddings.
    LabelShared,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PromptParams {
    /// M×d_tok learnable context.
    pub mu: Tensor,
    pub lambda: f64,
    /// (K·d_g)×d_tok map, present only in label-shared mode.
    pub psi: Option<Tensor>,
    pub mode: PromptMode,
}

#[derive(Clone, Copy, Debug)]
pub struct PromptVars {
    pub mu: Var,
    pub psi: Option<Var>,
    pub lambda: f64,
}

impl PromptParams {
    /// Context rows ~ N(0, 0.02²); ψ (shared mode) with std `1/√(K·d_g)`.
    pub fn init(
        context_len: usize,
        d_tok: usize,
        lambda: f64,
        mode: PromptMode,
        classes: usize,
        d_g: usize,
        rng: &mut Rng,
    ) -> Result<Self> {
        if !(lambda >= 0.0) {
            return Err(Error::Parameter(format!("lambda must be nonnegative, got {lambda}")));
        }
        if context_len == 0 {
            return Err(Error::Parameter("context length must be at least 1".into()));
        }
        let mu = rng.gaussian_tensor(context_len, d_tok, CONTEXT_INIT_STD);
        let psi = match mode {
            PromptMode::LabelSpecific => None,
            PromptMode::LabelShared => {
                let fan_in = classes * d_g;
                Some(rng.gaussian_tensor(fan_in, d_tok, 1.0 / (fan_in as f64).sqrt()))
            }
        };
        Ok(Self { mu, lambda, psi, mode })
    }

    pub fn context_len(&self) -> usize {
        self.mu.rows()
    }

    pub fn d_tok(&self) -> usize {
        self.mu.cols()
    }

    pub fn register(&self, tape: &mut Tape, trainable: bool) -> PromptVars {
        let put = |tape: &mut Tape, t: &Tensor| if trainable { tape.param(t) } else { tape.constant(t) };
        PromptVars {
            mu: put(tape, &self.mu),
            psi: self.psi.as_ref().map(|p| put(tape, p)),
            lambda: self.lambda,
        }
    }
}

/// Token vectors for a small vocabulary, with hash-seeded vectors for
/// out-of-vocabulary words.
#[derive(Clone, Debug, PartialEq)]
pub struct TokenEmbedder {
    words: Vec<String>,
    vectors: Tensor,
    index: HashMap<String, usize>,
    max_len: usize,
}

impl TokenEmbedder {
    pub fn new(words: Vec<String>, vectors: Tensor, max_len: usize) -> Result<Self> {
        if words.len() != vectors.rows() {
            return Err(Error::Parameter(format!(
                "{} words but {} vectors",
                words.len(),
                vectors.rows()
            )));
        }
        let mut index = HashMap::new();
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::Parameter(format!("duplicate vocabulary word {w:?}")));
            }
        }
        Ok(Self {
            words,
            vectors,
            index,
            max_len,
        })
    }

    /// Gaussian vectors with the given std for each word.
    pub fn synthetic(words: Vec<String>, d_tok: usize, std: f64, max_len: usize, rng: &mut Rng) -> Result<Self> {
        let vectors = rng.gaussian_tensor(words.len(), d_tok, std);
        Self::new(words, vectors, max_len)
    }

    /// Reads `word<TAB>v1,v2,…` lines.
    pub fn parse(text: &str, max_len: usize) -> Result<Self> {
        let mut words = Vec::new();
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let (word, values) = line.split_once('\t').ok_or_else(|| Error::Parse {
                line: idx + 1,
                message: "expected word<TAB>comma-separated values".into(),
            })?;
            let values = values
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse {
                    line: idx + 1,
                    message: e.to_string(),
                })?;
            if let Some(first) = rows.first() {
                if first.len() != values.len() {
                    return Err(Error::Parse {
                        line: idx + 1,
                        message: format!("expected {} values, got {}", first.len(), values.len()),
                    });
                }
            }
            words.push(word.to_string());
            rows.push(values);
        }
        if rows.is_empty() {
            return Err(Error::Parameter("vocabulary file is empty".into()));
        }
        Self::new(words, Tensor::from_rows(&rows)?, max_len)
    }

    pub fn load(path: impl AsRef<Path>, max_len: usize) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?, max_len)
    }

    pub fn d_tok(&self) -> usize {
        self.vectors.cols()
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn vectors(&self) -> &Tensor {
        &self.vectors
    }

    pub fn word_vector(&self, word: &str) -> Tensor {
        match self.index.get(word) {
            Some(i) => self.vectors.row_tensor(*i),
            None => hashed_gaussian(word, OOV_SALT, self.d_tok(), OOV_STD),
        }
    }

    /// Lower-cased whitespace tokens, one row per token.
    pub fn embed_label(&self, label: &str) -> Result<Tensor> {
        let lowered = label.to_lowercase();
        let rows: Vec<Tensor> = lowered.split_whitespace().map(|w| self.word_vector(w)).collect();
        if rows.is_empty() {
            return Err(Error::Parameter("label is empty".into()));
        }
        Tensor::vstack(&rows)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prompt {
    pub tokens: Tensor,
    pub label_index: usize,
}

fn check_len(context: usize, label_tokens: usize, max_len: usize) -> Result<()> {
    let len = context + label_tokens;
    if len > max_len {
        return Err(Error::Length { len, max: max_len });
    }
    Ok(())
}

/// Context rows shifted by `λ·k`, then the label tokens.
pub fn knowledge_prompt_on(
    tape: &mut Tape,
    pv: &PromptVars,
    knowledge: Var,
    label_tokens: Var,
    max_len: usize,
) -> Result<Var> {
    check_len(tape.shape(pv.mu).0, tape.shape(label_tokens).0, max_len)?;
    let shift = tape.scale(knowledge, pv.lambda);
    let context = tape.add_row(pv.mu, shift)?;
    tape.concat_rows(&[context, label_tokens])
}

/// Label-specific knowledge vector `g × proj` (1×d_tok).
pub fn specific_knowledge_on(tape: &mut Tape, g: Var, proj: Var) -> Result<Var> {
    tape.matmul(g, proj)
}

/// Label-shared knowledge vector: the K graph embeddings concatenated in
/// label order, then mapped by ψ.
pub fn shared_knowledge_on(tape: &mut Tape, psi: Var, gs: Var) -> Result<Var> {
    let k = tape.shape(gs).0;
    let rows = (0..k).map(|i| tape.row(gs, i)).collect::<Result<Vec<_>>>()?;
    let cascade = tape.concat_cols(&rows)?;
    tape.matmul(cascade, psi)
}

pub fn build_specific_prompt(
    pp: &PromptParams,
    g: &GraphEmbedding,
    proj: &Tensor,
    label_tokens: &Tensor,
    max_len: usize,
) -> Result<Prompt> {
    if pp.mode != PromptMode::LabelSpecific {
        return Err(Error::Parameter(
            "label-specific prompt requested in label-shared mode".into(),
        ));
    }
    let mut tape = Tape::new();
    let pv = pp.register(&mut tape, false);
    let gv = tape.constant(&g.vector);
    let projv = tape.constant(proj);
    let lt = tape.constant(label_tokens);
    let k = specific_knowledge_on(&mut tape, gv, projv)?;
    let out = knowledge_prompt_on(&mut tape, &pv, k, lt, max_len)?;
    Ok(Prompt {
        tokens: tape.value(out).clone(),
        label_index: g.source,
    })
}

pub fn build_shared_prompt(
    pp: &PromptParams,
    gs: &[GraphEmbedding],
    label_tokens: &Tensor,
    label_index: usize,
    max_len: usize,
) -> Result<Prompt> {
    let psi = match (&pp.psi, pp.mode) {
        (Some(psi), PromptMode::LabelShared) => psi,
        _ => {
            return Err(Error::Parameter(
                "label-shared prompt requested in label-specific mode".into(),
            ))
        }
    };
    let d_g = gs.first().map(|g| g.vector.cols()).unwrap_or(0);
    let expected = psi.rows().checked_div(d_g).unwrap_or(0);
    if gs.len() != expected || gs.is_empty() {
        return Err(Error::Arity {
            expected,
            got: gs.len(),
        });
    }
    let mut tape = Tape::new();
    let pv = pp.register(&mut tape, false);
    let rows: Vec<Tensor> = gs.iter().map(|g| g.vector.clone()).collect();
    let stacked = tape.constant(&Tensor::vstack(&rows)?);
    let s = shared_knowledge_on(&mut tape, pv.psi.expect("shared mode"), stacked)?;
    let lt = tape.constant(label_tokens);
    let out = knowledge_prompt_on(&mut tape, &pv, s, lt, max_len)?;
    Ok(Prompt {
        tokens: tape.value(out).clone(),
        label_index,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NearestWord {
    pub word: String,
    pub distance: f64,
}

/// For each context row, the `top_k` vocabulary words nearest in Euclidean
/// distance, ascending; equal distances keep vocabulary order.
pub fn interpret_mu(pp: &PromptParams, te: &TokenEmbedder, top_k: usize) -> Vec<Vec<NearestWord>> {
    (0..pp.mu.rows())
        .map(|r| {
            let row = pp.mu.row(r);
            let mut scored: Vec<(usize, f64)> = (0..te.words.len())
                .map(|i| {
                    let d = row
                        .iter()
                        .zip(te.vectors.row(i))
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt();
                    (i, d)
                })
                .collect();
            scored.sort_by(|a, b| a.1.total_cmp(&b.1));
            scored
                .into_iter()
                .take(top_k)
                .map(|(i, d)| NearestWord {
                    word: te.words[i].clone(),
                    distance: d,
                })
                .collect()
        })
        .collect()
}
