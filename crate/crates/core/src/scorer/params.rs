use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::tensor::Matrix;
use crate::{rng_from_seed, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScorerDims {
    pub vocab_size: usize,
    pub feature_dim: usize,
    pub model_dim: usize,
}

impl ScorerDims {
    pub const POSENC: usize = 4;
}

/// Every learned weight of the region/language scorer.
///
/// Gradients use the same type, so optimizers can walk both in lockstep via
/// [`ScorerParams::tensors`] and [`ScorerParams::tensors_mut`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorerParams {
    pub dims: ScorerDims,
    pub token_embedding: Matrix,
    pub text_proj: Matrix,
    pub text_bias: Matrix,
    pub region_proj: Matrix,
    pub region_bias: Matrix,
    pub pos_proj: Matrix,
    pub context_proj: Matrix,
    pub context_bias: Matrix,
    pub attn_query: Matrix,
    pub attn_key: Matrix,
    pub attn_value: Matrix,
    pub attn_output: Matrix,
    pub head_weight: Matrix,
    pub head_bias: Matrix,
}

pub const TENSOR_NAMES: [&str; 14] = [
    "token_embedding",
    "text_proj",
    "text_bias",
    "region_proj",
    "region_bias",
    "pos_proj",
    "context_proj",
    "context_bias",
    "attn_query",
    "attn_key",
    "attn_value",
    "attn_output",
    "head_weight",
    "head_bias",
];

impl ScorerParams {
    pub fn zeros(dims: ScorerDims) -> Self {
        let ScorerDims {
            vocab_size: v,
            feature_dim: f,
            model_dim: d,
        } = dims;
        ScorerParams {
            dims,
            token_embedding: Matrix::zeros(v, d),
            text_proj: Matrix::zeros(d, d),
            text_bias: Matrix::zeros(1, d),
            region_proj: Matrix::zeros(f, d),
            region_bias: Matrix::zeros(1, d),
            pos_proj: Matrix::zeros(ScorerDims::POSENC, d),
            context_proj: Matrix::zeros(f, d),
            context_bias: Matrix::zeros(1, d),
            attn_query: Matrix::zeros(d, d),
            attn_key: Matrix::zeros(d, d),
            attn_value: Matrix::zeros(d, d),
            attn_output: Matrix::zeros(d, d),
            head_weight: Matrix::zeros(1, d),
            head_bias: Matrix::zeros(1, 1),
        }
    }

    /// Gaussian weights with standard deviation `1/sqrt(fan_in)`, unit-variance
    /// token embeddings, an all-ones score head and zero biases.
    pub fn init(dims: ScorerDims, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let mut p = ScorerParams::zeros(dims);
        let skip = ["text_bias", "region_bias", "context_bias", "head_bias"];
        for (name, m) in p.tensors_mut() {
            if skip.contains(&name) {
                continue;
            }
            *m = match name {
                "token_embedding" => Matrix::random_normal(m.rows, m.cols, 1.0, &mut rng),
                "head_weight" => Matrix {
                    rows: m.rows,
                    cols: m.cols,
                    data: alloc::vec![1.0; m.data.len()],
                },
                "attn_value" | "attn_output" => Matrix::identity(m.rows),
                // Offsets are meters, an order of magnitude above feature entries.
                "pos_proj" => Matrix::random_normal(m.rows, m.cols, 0.05, &mut rng),
                _ => {
                    Matrix::random_normal(m.rows, m.cols, 1.0 / libm::sqrt(m.rows as f64), &mut rng)
                }
            };
        }
        p
    }

    pub fn tensors(&self) -> [(&'static str, &Matrix); 14] {
        [
            (TENSOR_NAMES[0], &self.token_embedding),
            (TENSOR_NAMES[1], &self.text_proj),
            (TENSOR_NAMES[2], &self.text_bias),
            (TENSOR_NAMES[3], &self.region_proj),
            (TENSOR_NAMES[4], &self.region_bias),
            (TENSOR_NAMES[5], &self.pos_proj),
            (TENSOR_NAMES[6], &self.context_proj),
            (TENSOR_NAMES[7], &self.context_bias),
            (TENSOR_NAMES[8], &self.attn_query),
            (TENSOR_NAMES[9], &self.attn_key),
            (TENSOR_NAMES[10], &self.attn_value),
            (TENSOR_NAMES[11], &self.attn_output),
            (TENSOR_NAMES[12], &self.head_weight),
            (TENSOR_NAMES[13], &self.head_bias),
        ]
    }

    pub fn tensors_mut(&mut self) -> [(&'static str, &mut Matrix); 14] {
        [
            (TENSOR_NAMES[0], &mut self.token_embedding),
            (TENSOR_NAMES[1], &mut self.text_proj),
            (TENSOR_NAMES[2], &mut self.text_bias),
            (TENSOR_NAMES[3], &mut self.region_proj),
            (TENSOR_NAMES[4], &mut self.region_bias),
            (TENSOR_NAMES[5], &mut self.pos_proj),
            (TENSOR_NAMES[6], &mut self.context_proj),
            (TENSOR_NAMES[7], &mut self.context_bias),
            (TENSOR_NAMES[8], &mut self.attn_query),
            (TENSOR_NAMES[9], &mut self.attn_key),
            (TENSOR_NAMES[10], &mut self.attn_value),
            (TENSOR_NAMES[11], &mut self.attn_output),
            (TENSOR_NAMES[12], &mut self.head_weight),
            (TENSOR_NAMES[13], &mut self.head_bias),
        ]
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|(_, m)| m.data.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|(_, m)| m.is_finite())
    }

    /// All weights concatenated in tensor order.
    pub fn flatten(&self) -> Vec<f64> {
        self.tensors()
            .iter()
            .flat_map(|(_, m)| m.data.iter().copied())
            .collect()
    }

    /// Checks every tensor against the shapes implied by `dims`.
    pub fn validate(&self) -> Result<()> {
        let expected = ScorerParams::zeros(self.dims);
        for ((name, m), (_, e)) in self.tensors().iter().zip(expected.tensors().iter()) {
            if (m.rows, m.cols) != (e.rows, e.cols) || m.data.len() != e.data.len() {
                return Err(Error::ShapeMismatch {
                    what: name,
                    expected: e.data.len(),
                    found: m.data.len(),
                });
            }
        }
        Ok(())
    }
}
