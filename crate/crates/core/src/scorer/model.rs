//! Forward pass and exact analytic gradients of the region/language scorer.
//!
//! Region token `x_i = W_f f_i + W_p p_i + b_f`, context token
//! `c_k = W_c g_k + b_c`. One attention pass lets every region token read all
//! region and context tokens: `h_i = x_i + W_o Σ_j softmax_j(q_i·k_j/√d) v_j`.
//! The instruction is mean-pooled over non-PAD embeddings and projected to
//! `u`; the logit is `Σ_k w_k h_ik u_k + b` and the score is the sigmoid of
//! the logit clamped to ±30. Loss is binary cross-entropy on the raw logit in
//! log-sum-exp form, averaged over candidate rows.

use alloc::vec;
use alloc::vec::Vec;

use super::batch::{Labels, ViewpointBatch};
use super::params::{ScorerDims, ScorerParams};
use super::tensor::{axpy, dot, Matrix};
use crate::language::PAD;
use crate::{Error, Result};

/// Logits are clamped to this magnitude before the output sigmoid. The loss
/// works on raw logits so saturated rows keep their gradient.
pub const LOGIT_CLAMP: f64 = 30.0;

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

/// Binary cross-entropy of `sigmoid(z)` against `y`, in log-sum-exp form.
pub fn bce_with_logit(z: f64, y: bool) -> f64 {
    let softplus = z.max(0.0) + libm::log1p(libm::exp(-z.abs()));
    if y {
        softplus - z
    } else {
        softplus
    }
}

struct Activations {
    x: Matrix,
    z: Matrix,
    q: Matrix,
    k: Matrix,
    v: Matrix,
    attn: Matrix,
    o: Matrix,
    h: Matrix,
    text_mean: Vec<f64>,
    text_tokens: Vec<u32>,
    u: Vec<f64>,
    g: Vec<f64>,
    logits: Vec<f64>,
}

fn check_shapes(params: &ScorerParams, batch: &ViewpointBatch) -> Result<()> {
    let ScorerDims {
        vocab_size,
        feature_dim,
        ..
    } = params.dims;
    let t = batch.region_features.rows;
    let checks = [
        (
            "region feature width",
            feature_dim,
            batch.region_features.cols,
        ),
        (
            "context feature width",
            feature_dim,
            batch.context_features.cols,
        ),
        ("posenc width", ScorerDims::POSENC, batch.region_posenc.cols),
        ("posenc rows", t, batch.region_posenc.rows),
        ("candidate mask length", t, batch.candidate_mask.len()),
    ];
    for (what, expected, found) in checks {
        if expected != found {
            return Err(Error::ShapeMismatch {
                what,
                expected,
                found,
            });
        }
    }
    if let Some(&bad) = batch.text_ids.iter().find(|&&id| id as usize >= vocab_size) {
        return Err(Error::ShapeMismatch {
            what: "token id (vocabulary size)",
            expected: vocab_size,
            found: bad as usize,
        });
    }
    Ok(())
}

fn add_row_bias(m: &mut Matrix, bias: &Matrix) {
    for i in 0..m.rows {
        axpy(1.0, &bias.data, m.row_mut(i));
    }
}

fn run(p: &ScorerParams, batch: &ViewpointBatch) -> Activations {
    let d = p.dims.model_dim;
    let t = batch.region_features.rows;
    let kc = batch.context_features.rows;

    let mut x = batch.region_features.matmul(&p.region_proj);
    x.add_assign(&batch.region_posenc.matmul(&p.pos_proj));
    add_row_bias(&mut x, &p.region_bias);

    let mut c = batch.context_features.matmul(&p.context_proj);
    add_row_bias(&mut c, &p.context_bias);

    let mut z = Matrix::zeros(t + kc, d);
    z.data[..t * d].copy_from_slice(&x.data);
    z.data[t * d..].copy_from_slice(&c.data);

    let q = x.matmul(&p.attn_query);
    let k = z.matmul(&p.attn_key);
    let v = z.matmul(&p.attn_value);
    let mut attn = q.matmul_t(&k);
    let inv_sqrt_d = 1.0 / libm::sqrt(d as f64);
    for i in 0..t {
        let row = attn.row_mut(i);
        let mut max = f64::NEG_INFINITY;
        for s in row.iter_mut() {
            *s *= inv_sqrt_d;
            max = max.max(*s);
        }
        let mut sum = 0.0;
        for s in row.iter_mut() {
            *s = libm::exp(*s - max);
            sum += *s;
        }
        for s in row.iter_mut() {
            *s /= sum;
        }
    }
    let o = attn.matmul(&v);
    let mut h = o.matmul(&p.attn_output);
    h.add_assign(&x);

    let text_tokens: Vec<u32> = batch
        .text_ids
        .iter()
        .copied()
        .filter(|&id| id != PAD)
        .collect();
    let mut text_mean = vec![0.0; d];
    if !text_tokens.is_empty() {
        let w = 1.0 / text_tokens.len() as f64;
        for &id in &text_tokens {
            axpy(w, p.token_embedding.row(id as usize), &mut text_mean);
        }
    }
    let mut u = p.text_bias.data.clone();
    for (j, &e) in text_mean.iter().enumerate() {
        if e != 0.0 {
            axpy(e, p.text_proj.row(j), &mut u);
        }
    }
    let g: Vec<f64> = u
        .iter()
        .zip(&p.head_weight.data)
        .map(|(a, b)| a * b)
        .collect();
    let logits = (0..t)
        .map(|i| dot(h.row(i), &g) + p.head_bias.data[0])
        .collect();

    Activations {
        x,
        z,
        q,
        k,
        v,
        attn,
        o,
        h,
        text_mean,
        text_tokens,
        u,
        g,
        logits,
    }
}

/// Unclamped logits, one per region row.
pub fn forward_logits(params: &ScorerParams, batch: &ViewpointBatch) -> Result<Vec<f64>> {
    check_shapes(params, batch)?;
    Ok(run(params, batch).logits)
}

/// Per-row sigmoid scores. Non-candidate rows are scored too; callers consult
/// `batch.candidate_mask`.
pub fn forward(params: &ScorerParams, batch: &ViewpointBatch) -> Result<Vec<f64>> {
    Ok(forward_logits(params, batch)?
        .into_iter()
        .map(|z| sigmoid(z.clamp(-LOGIT_CLAMP, LOGIT_CLAMP)))
        .collect())
}

fn check_labels(batch: &ViewpointBatch, labels: &Labels) -> Result<()> {
    if labels.y.len() != batch.num_regions() {
        return Err(Error::ShapeMismatch {
            what: "labels",
            expected: batch.num_regions(),
            found: labels.y.len(),
        });
    }
    Ok(())
}

/// Mean candidate-row BCE without gradients.
pub fn loss(params: &ScorerParams, batch: &ViewpointBatch, labels: &Labels) -> Result<f64> {
    check_shapes(params, batch)?;
    check_labels(batch, labels)?;
    let logits = run(params, batch).logits;
    Ok(mean_candidate_bce(&logits, batch, labels))
}

fn mean_candidate_bce(logits: &[f64], batch: &ViewpointBatch, labels: &Labels) -> f64 {
    let n = batch.num_candidates();
    if n == 0 {
        return 0.0;
    }
    let total: f64 = logits
        .iter()
        .zip(&batch.candidate_mask)
        .zip(&labels.y)
        .filter(|((_, &c), _)| c)
        .map(|((&z, _), &y)| bce_with_logit(z, y))
        .sum();
    total / n as f64
}

/// Mean candidate-row BCE and its exact gradient with respect to every weight.
pub fn loss_and_grad(
    params: &ScorerParams,
    batch: &ViewpointBatch,
    labels: &Labels,
) -> Result<(f64, ScorerParams)> {
    check_shapes(params, batch)?;
    check_labels(batch, labels)?;
    let mut grad = ScorerParams::zeros(params.dims);
    let n_cand = batch.num_candidates();
    if n_cand == 0 {
        return Ok((0.0, grad));
    }
    let act = run(params, batch);
    let loss = mean_candidate_bce(&act.logits, batch, labels);

    let d = params.dims.model_dim;
    let t = batch.num_regions();
    let inv_n = 1.0 / n_cand as f64;
    let dlogit: Vec<f64> = (0..t)
        .map(|i| {
            let z = act.logits[i];
            if !batch.candidate_mask[i] {
                0.0
            } else {
                (sigmoid(z) - if labels.y[i] { 1.0 } else { 0.0 }) * inv_n
            }
        })
        .collect();

    // score head
    let mut dh = Matrix::zeros(t, d);
    let mut dg = vec![0.0; d];
    for (i, &dl) in dlogit.iter().enumerate() {
        if dl != 0.0 {
            axpy(dl, &act.g, dh.row_mut(i));
            axpy(dl, act.h.row(i), &mut dg);
        }
    }
    grad.head_bias.data[0] = dlogit.iter().sum();
    let du: Vec<f64> = dg
        .iter()
        .zip(&params.head_weight.data)
        .map(|(a, b)| a * b)
        .collect();
    for ((gw, a), b) in grad.head_weight.data.iter_mut().zip(&dg).zip(&act.u) {
        *gw = a * b;
    }

    // text branch
    grad.text_bias.data.copy_from_slice(&du);
    for (j, &e) in act.text_mean.iter().enumerate() {
        if e != 0.0 {
            axpy(e, &du, grad.text_proj.row_mut(j));
        }
    }
    if !act.text_tokens.is_empty() {
        let de: Vec<f64> = (0..d).map(|j| dot(params.text_proj.row(j), &du)).collect();
        let w = 1.0 / act.text_tokens.len() as f64;
        for &id in &act.text_tokens {
            axpy(w, &de, grad.token_embedding.row_mut(id as usize));
        }
    }

    // attention block
    let mut dx = dh.clone();
    act.o.add_t_matmul_into(&dh, &mut grad.attn_output);
    let d_o = dh.matmul_t(&params.attn_output);
    let d_attn = d_o.matmul_t(&act.v);
    let mut dv = Matrix::zeros(act.v.rows, d);
    act.attn.add_t_matmul_into(&d_o, &mut dv);
    let inv_sqrt_d = 1.0 / libm::sqrt(d as f64);
    let mut ds = d_attn;
    for i in 0..t {
        let a = act.attn.row(i);
        let row = ds.row_mut(i);
        let inner = dot(row, a);
        for (s, &ai) in row.iter_mut().zip(a) {
            *s = ai * (*s - inner) * inv_sqrt_d;
        }
    }
    let dq = ds.matmul(&act.k);
    let mut dk = Matrix::zeros(act.k.rows, d);
    ds.add_t_matmul_into(&act.q, &mut dk);

    act.x.add_t_matmul_into(&dq, &mut grad.attn_query);
    dx.add_assign(&dq.matmul_t(&params.attn_query));
    act.z.add_t_matmul_into(&dk, &mut grad.attn_key);
    act.z.add_t_matmul_into(&dv, &mut grad.attn_value);
    let mut dz = dk.matmul_t(&params.attn_key);
    dz.add_assign(&dv.matmul_t(&params.attn_value));

    // token projections
    for i in 0..t {
        axpy(1.0, dz.row(i), dx.row_mut(i));
    }
    let kc = batch.context_features.rows;
    let dc = Matrix::from_rows(kc, d, dz.data[t * d..].to_vec());
    batch
        .region_features
        .add_t_matmul_into(&dx, &mut grad.region_proj);
    batch
        .region_posenc
        .add_t_matmul_into(&dx, &mut grad.pos_proj);
    batch
        .context_features
        .add_t_matmul_into(&dc, &mut grad.context_proj);
    for i in 0..t {
        axpy(1.0, dx.row(i), &mut grad.region_bias.data);
    }
    for i in 0..kc {
        axpy(1.0, dc.row(i), &mut grad.context_bias.data);
    }
    Ok((loss, grad))
}
