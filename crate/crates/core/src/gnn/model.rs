use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::params::{LayerOffsets, ModelDims, ModelParams};
use crate::error::{Error, Result};
use crate::graph::{Edge, GraphSample, NodeMatrix};
use crate::math;

pub const PROB_CLAMP: f64 = 1e-7;

/// Dropout between the dense layer and the head.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dropout {
    Off,
    /// Active with the given drop rate; the mask is derived from `seed`.
    On { rate: f64, seed: u64 },
}

/// Binary cross-entropy with `p` clamped to `[1e-7, 1 - 1e-7]`.
pub fn loss(p: f64, y: u8) -> f64 {
    let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    if y != 0 {
        -math::ln(p)
    } else {
        -math::ln(1.0 - p)
    }
}

/// d loss / d logit. Zero where the clamp is active, matching the
/// derivative of the clamped loss.
fn loss_grad_logit(p: f64, y: u8) -> f64 {
    if !(PROB_CLAMP..=1.0 - PROB_CLAMP).contains(&p) {
        return 0.0;
    }
    p - f64::from(y != 0)
}

pub(crate) fn check_graph(dims: &ModelDims, nodes: &NodeMatrix, edges: &[Edge]) -> Result<()> {
    if nodes.width() != dims.node_width {
        return Err(Error::WidthMismatch {
            expected: dims.node_width,
            found: nodes.width(),
        });
    }
    let n = nodes.rows();
    if n == 0 {
        return Err(Error::Empty("graph has no nodes"));
    }
    if let Some(e) = edges.iter().find(|e| e.node >= n || e.neighbor >= n) {
        return Err(Error::ShapeMismatch {
            what: "edge endpoint",
            expected: n,
            found: e.node.max(e.neighbor),
        });
    }
    Ok(())
}

/// `out[r, c] = Σ_k x[r, k] · w[k, c]` for an `f × f` block of a row-major
/// `? × f` weight matrix starting at row `row0`.
fn project(x: &[f64], f: usize, w: &[f64], row0: usize) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for (xr, or) in x.chunks_exact(f).zip(out.chunks_exact_mut(f)) {
        for (k, &xv) in xr.iter().enumerate() {
            if xv == 0.0 {
                continue;
            }
            let wr = &w[(row0 + k) * f..(row0 + k + 1) * f];
            for (o, &wv) in or.iter_mut().zip(wr) {
                *o += xv * wv;
            }
        }
    }
    out
}

/// Per-layer values retained for the backward pass.
#[derive(Debug, Clone, Default)]
struct LayerCache {
    x: Vec<f64>,
    /// Per edge × feature: sigmoid gate, softplus core, sigmoid(core pre-activation).
    gate: Vec<f64>,
    soft: Vec<f64>,
    dsoft: Vec<f64>,
}

fn conv_forward(dims: &ModelDims, p: &[f64], o: LayerOffsets, x: &[f64], edges: &[Edge], cache: Option<&mut LayerCache>) -> Vec<f64> {
    let f = dims.node_width;
    let gate_w = &p[o.gate_w..o.gate_b];
    let gate_b = &p[o.gate_b..o.core_w];
    let core_w = &p[o.core_w..o.core_b];
    let core_b = &p[o.core_b..o.core_b + f];
    let g_top = project(x, f, gate_w, 0);
    let g_mid = project(x, f, gate_w, f);
    let c_top = project(x, f, core_w, 0);
    let c_mid = project(x, f, core_w, f);

    let mut out = x.to_vec();
    let mut store = cache.map(|c| {
        c.x = x.to_vec();
        c.gate = vec![0.0; edges.len() * f];
        c.soft = vec![0.0; edges.len() * f];
        c.dsoft = vec![0.0; edges.len() * f];
        c
    });
    let mut gp = vec![0.0; f];
    let mut cp = vec![0.0; f];
    for (k, e) in edges.iter().enumerate() {
        let (i, j) = (e.node, e.neighbor);
        for c in 0..f {
            gp[c] = gate_b[c] + g_top[i * f + c] + g_mid[j * f + c];
            cp[c] = core_b[c] + c_top[i * f + c] + c_mid[j * f + c];
        }
        for (s, &ev) in e.features.iter().enumerate() {
            let row = (2 * f + s) * f;
            for c in 0..f {
                gp[c] += ev * gate_w[row + c];
                cp[c] += ev * core_w[row + c];
            }
        }
        for c in 0..f {
            let g = math::sigmoid(gp[c]);
            let (sp, ds) = math::softplus_sigmoid(cp[c]);
            out[i * f + c] += g * sp;
            if let Some(cache) = store.as_deref_mut() {
                cache.gate[k * f + c] = g;
                cache.soft[k * f + c] = sp;
                cache.dsoft[k * f + c] = ds;
            }
        }
    }
    out
}

/// Backpropagate `dout` through one conv layer, accumulating weight
/// gradients into `grad` and returning the gradient w.r.t. the layer input.
fn conv_backward(dims: &ModelDims, p: &[f64], o: LayerOffsets, cache: &LayerCache, edges: &[Edge], dout: &[f64], grad: &mut [f64]) -> Vec<f64> {
    let f = dims.node_width;
    let n = dout.len() / f;
    let mut d_gtop = vec![0.0; n * f];
    let mut d_gmid = vec![0.0; n * f];
    let mut d_ctop = vec![0.0; n * f];
    let mut d_cmid = vec![0.0; n * f];
    let mut dg = vec![0.0; f];
    let mut dc = vec![0.0; f];
    for (k, e) in edges.iter().enumerate() {
        let (i, j) = (e.node, e.neighbor);
        for c in 0..f {
            let dm = dout[i * f + c];
            let g = cache.gate[k * f + c];
            dg[c] = dm * cache.soft[k * f + c] * g * (1.0 - g);
            dc[c] = dm * g * cache.dsoft[k * f + c];
            d_gtop[i * f + c] += dg[c];
            d_gmid[j * f + c] += dg[c];
            d_ctop[i * f + c] += dc[c];
            d_cmid[j * f + c] += dc[c];
            grad[o.gate_b + c] += dg[c];
            grad[o.core_b + c] += dc[c];
        }
        for (s, &ev) in e.features.iter().enumerate() {
            let row = (2 * f + s) * f;
            for c in 0..f {
                grad[o.gate_w + row + c] += ev * dg[c];
                grad[o.core_w + row + c] += ev * dc[c];
            }
        }
    }

    let mut dx = dout.to_vec();
    let blocks = [
        (o.gate_w, 0, &d_gtop),
        (o.gate_w, f, &d_gmid),
        (o.core_w, 0, &d_ctop),
        (o.core_w, f, &d_cmid),
    ];
    for (w0, row0, dp) in blocks {
        for r in 0..n {
            let xr = &cache.x[r * f..(r + 1) * f];
            let dpr = &dp[r * f..(r + 1) * f];
            for (kf, &xv) in xr.iter().enumerate() {
                let base = w0 + (row0 + kf) * f;
                let mut acc = 0.0;
                for c in 0..f {
                    grad[base + c] += xv * dpr[c];
                    acc += p[base + c] * dpr[c];
                }
                dx[r * f + kf] += acc;
            }
        }
    }
    dx
}

/// One residual crystal-graph convolution: every node `i` adds
/// `Σ_j sigmoid(z·W_gate + b_gate) ⊙ softplus(z·W_core + b_core)` over its
/// in-edges, with `z = [x_i, x_j, e_ij]`.
pub fn crystal_conv(params: &ModelParams, layer: usize, nodes: &NodeMatrix, edges: &[Edge]) -> Result<NodeMatrix> {
    let dims = params.dims();
    if layer >= dims.layers {
        return Err(Error::ShapeMismatch {
            what: "conv layer index",
            expected: dims.layers,
            found: layer,
        });
    }
    check_graph(&dims, nodes, edges)?;
    let out = conv_forward(&dims, params.as_slice(), dims.layer_offsets(layer), nodes.as_slice(), edges, None);
    NodeMatrix::new(dims.node_width, out)
}

/// Activations of one forward pass, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct Forward {
    pub probability: f64,
    pub logit: f64,
    layers: Vec<LayerCache>,
    n_nodes: usize,
    pooled: Vec<f64>,
    pre_dense: Vec<f64>,
    mask: Vec<f64>,
    dropped: Vec<f64>,
}

fn dropout_mask(h: usize, dropout: Dropout, stream: u64) -> Vec<f64> {
    match dropout {
        Dropout::On { rate, seed } if rate > 0.0 => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream);
            let keep = 1.0 / (1.0 - rate);
            (0..h)
                .map(|_| if rng.random::<f64>() < rate { 0.0 } else { keep })
                .collect()
        }
        _ => vec![1.0; h],
    }
}

fn forward_impl(params: &ModelParams, graph: &GraphSample, dropout: Dropout, stream: u64, keep_cache: bool) -> Result<Forward> {
    let dims = params.dims();
    check_graph(&dims, &graph.nodes, &graph.edges)?;
    if let Dropout::On { rate, .. } = dropout {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::InvalidConfig(alloc::format!("dropout rate {rate} outside [0, 1)")));
        }
    }
    let (f, h) = (dims.node_width, dims.dense_width);
    let p = params.as_slice();
    let n = graph.n_nodes();
    let mut layers = Vec::with_capacity(dims.layers);
    let mut x = graph.nodes.as_slice().to_vec();
    for l in 0..dims.layers {
        let o = dims.layer_offsets(l);
        if keep_cache {
            let mut cache = LayerCache::default();
            x = conv_forward(&dims, p, o, &x, &graph.edges, Some(&mut cache));
            layers.push(cache);
        } else {
            x = conv_forward(&dims, p, o, &x, &graph.edges, None);
        }
    }
    let mut pooled = vec![0.0; f];
    for row in x.chunks_exact(f) {
        for (s, v) in pooled.iter_mut().zip(row) {
            *s += v;
        }
    }
    for s in &mut pooled {
        *s /= n as f64;
    }
    let o = dims.head_offsets();
    let mut pre_dense = p[o.dense_b..o.head_w].to_vec();
    for (c, &g) in pooled.iter().enumerate() {
        let w = &p[o.dense_w + c * h..o.dense_w + (c + 1) * h];
        for (a, &wv) in pre_dense.iter_mut().zip(w) {
            *a += g * wv;
        }
    }
    let mask = dropout_mask(h, dropout, stream);
    let dropped: Vec<f64> = pre_dense
        .iter()
        .zip(&mask)
        .map(|(&a, &m)| a.max(0.0) * m)
        .collect();
    let logit = p[o.head_b]
        + dropped
            .iter()
            .zip(&p[o.head_w..o.head_b])
            .map(|(d, w)| d * w)
            .sum::<f64>();
    Ok(Forward {
        probability: math::sigmoid(logit),
        logit,
        layers,
        n_nodes: n,
        pooled,
        pre_dense,
        mask,
        dropped,
    })
}

pub fn forward(params: &ModelParams, graph: &GraphSample, dropout: Dropout) -> Result<Forward> {
    forward_impl(params, graph, dropout, 0, true)
}

/// Success probability with dropout inactive.
pub fn predict(params: &ModelParams, graph: &GraphSample) -> Result<f64> {
    Ok(forward_impl(params, graph, Dropout::Off, 0, false)?.probability)
}

pub fn predict_all(params: &ModelParams, graphs: &[GraphSample]) -> Result<Vec<f64>> {
    graphs.iter().map(|g| predict(params, g)).collect()
}

fn backward(params: &ModelParams, graph: &GraphSample, fwd: &Forward, dlogit: f64, grad: &mut [f64]) {
    let dims = params.dims();
    let (f, h) = (dims.node_width, dims.dense_width);
    let p = params.as_slice();
    let o = dims.head_offsets();
    grad[o.head_b] += dlogit;
    let mut da = vec![0.0; h];
    for k in 0..h {
        grad[o.head_w + k] += dlogit * fwd.dropped[k];
        if fwd.pre_dense[k] > 0.0 {
            da[k] = dlogit * p[o.head_w + k] * fwd.mask[k];
        }
        grad[o.dense_b + k] += da[k];
    }
    let mut dpool = vec![0.0; f];
    for c in 0..f {
        let base = o.dense_w + c * h;
        for k in 0..h {
            grad[base + k] += fwd.pooled[c] * da[k];
            dpool[c] += p[base + k] * da[k];
        }
    }
    let n = fwd.n_nodes as f64;
    let mut dx: Vec<f64> = (0..fwd.n_nodes).flat_map(|_| dpool.iter().map(|d| d / n)).collect();
    for l in (0..dims.layers).rev() {
        dx = conv_backward(&dims, p, dims.layer_offsets(l), &fwd.layers[l], &graph.edges, &dx, grad);
    }
}

/// Loss and gradient of one sample. `stream` selects its dropout mask.
fn sample_gradient(params: &ModelParams, graph: &GraphSample, dropout: Dropout, stream: u64) -> Result<(f64, Vec<f64>)> {
    let fwd = forward_impl(params, graph, dropout, stream, true)?;
    let mut grad = vec![0.0; params.dims().len()];
    let dl = loss_grad_logit(fwd.probability, graph.label);
    if dl != 0.0 {
        backward(params, graph, &fwd, dl, &mut grad);
    }
    Ok((loss(fwd.probability, graph.label), grad))
}

/// Mean loss over `batch` and its exact gradient w.r.t. every parameter.
///
/// With dropout on, sample `k` of the batch uses mask stream `k` of the
/// given seed, so the result does not depend on evaluation order.
pub fn gradient(params: &ModelParams, batch: &[&GraphSample], dropout: Dropout) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::Empty("gradient batch"));
    }
    #[cfg(feature = "parallel")]
    let parts: Vec<(f64, Vec<f64>)> = {
        use rayon::prelude::*;
        batch
            .par_iter()
            .enumerate()
            .map(|(k, g)| sample_gradient(params, g, dropout, k as u64))
            .collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<(f64, Vec<f64>)> = batch
        .iter()
        .enumerate()
        .map(|(k, g)| sample_gradient(params, g, dropout, k as u64))
        .collect::<Result<_>>()?;

    // fixed-order reduction keeps results identical across thread counts
    let mut total = 0.0;
    let mut grad = vec![0.0; params.dims().len()];
    for (l, g) in parts {
        total += l;
        for (a, b) in grad.iter_mut().zip(&g) {
            *a += b;
        }
    }
    let scale = 1.0 / batch.len() as f64;
    for v in &mut grad {
        *v *= scale;
    }
    Ok((total * scale, grad))
}

/// Mean loss with dropout off.
pub fn mean_loss(params: &ModelParams, batch: &[&GraphSample]) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::Empty("loss batch"));
    }
    let mut total = 0.0;
    for g in batch {
        total += loss(predict(params, g)?, g.label);
    }
    Ok(total / batch.len() as f64)
}
