use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::EDGE_FEATURES;
use crate::math;

pub const DEFAULT_LAYERS: usize = 3;
const CONV_INIT_SCALE: f64 = 0.25;
const INIT_CORE_BIAS: f64 = -3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelDims {
    /// Node feature width `F`, preserved by every conv layer.
    pub node_width: usize,
    /// Edge feature width `S`.
    pub edge_width: usize,
    /// Dense layer width `H`.
    pub dense_width: usize,
    pub layers: usize,
}

impl ModelDims {
    pub fn new(node_width: usize, dense_width: usize) -> Self {
        ModelDims {
            node_width,
            edge_width: EDGE_FEATURES,
            dense_width,
            layers: DEFAULT_LAYERS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.node_width == 0 || self.dense_width == 0 || self.layers == 0 {
            return Err(Error::InvalidConfig(alloc::format!("degenerate model dims {self:?}")));
        }
        if self.edge_width != EDGE_FEATURES {
            return Err(Error::ShapeMismatch {
                what: "edge feature width",
                expected: EDGE_FEATURES,
                found: self.edge_width,
            });
        }
        Ok(())
    }

    /// Rows of a conv weight matrix: `[x_i, x_j, e_ij]`.
    pub fn z_width(&self) -> usize {
        2 * self.node_width + self.edge_width
    }

    fn layer_len(&self) -> usize {
        2 * (self.z_width() * self.node_width + self.node_width)
    }

    /// Total parameter count.
    pub fn len(&self) -> usize {
        let (f, h) = (self.node_width, self.dense_width);
        self.layers * self.layer_len() + f * h + 2 * h + 1
    }

    pub(crate) fn layer_offsets(&self, layer: usize) -> LayerOffsets {
        let zf = self.z_width() * self.node_width;
        let base = layer * self.layer_len();
        LayerOffsets {
            gate_w: base,
            gate_b: base + zf,
            core_w: base + zf + self.node_width,
            core_b: base + 2 * zf + self.node_width,
        }
    }

    pub(crate) fn head_offsets(&self) -> HeadOffsets {
        let dense_w = self.layers * self.layer_len();
        let dense_b = dense_w + self.node_width * self.dense_width;
        let head_w = dense_b + self.dense_width;
        HeadOffsets {
            dense_w,
            dense_b,
            head_w,
            head_b: head_w + self.dense_width,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct LayerOffsets {
    pub gate_w: usize,
    pub gate_b: usize,
    pub core_w: usize,
    pub core_b: usize,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct HeadOffsets {
    pub dense_w: usize,
    pub dense_b: usize,
    pub head_w: usize,
    pub head_b: usize,
}

/// All learnable parameters in one flat vector.
///
/// Order: per conv layer `gate_w` ((2F+S)×F, row-major), `gate_b` (F),
/// `core_w` ((2F+S)×F), `core_b` (F); then `dense_w` (F×H), `dense_b` (H),
/// `head_w` (H), `head_b` (1). Gradients use the same layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    dims: ModelDims,
    data: Vec<f64>,
}

impl ModelParams {
    pub fn zeros(dims: ModelDims) -> Result<Self> {
        dims.validate()?;
        Ok(ModelParams {
            dims,
            data: vec![0.0; dims.len()],
        })
    }

    /// Glorot-uniform dense and head weights. Conv weights start at a
    /// quarter of the Glorot range and core biases at `INIT_CORE_BIAS`, so
    /// the summed messages of a 22-player graph start small instead of
    /// saturating the sigmoid head.
    pub fn init(dims: ModelDims, seed: u64) -> Result<Self> {
        let mut p = ModelParams::zeros(dims)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (f, h, z) = (dims.node_width, dims.dense_width, dims.z_width());
        let mut fill = |slice: &mut [f64], fan_in: usize, fan_out: usize, scale: f64| {
            let limit = scale * math::sqrt(6.0 / (fan_in + fan_out) as f64);
            for w in slice {
                *w = rng.random_range(-limit..limit);
            }
        };
        for l in 0..dims.layers {
            let o = dims.layer_offsets(l);
            fill(&mut p.data[o.gate_w..o.gate_w + z * f], z, f, CONV_INIT_SCALE);
            fill(&mut p.data[o.core_w..o.core_w + z * f], z, f, CONV_INIT_SCALE);
            p.data[o.core_b..o.core_b + f].fill(INIT_CORE_BIAS);
        }
        let o = dims.head_offsets();
        fill(&mut p.data[o.dense_w..o.dense_b], f, h, 1.0);
        fill(&mut p.data[o.head_w..o.head_b], h, 1, 1.0);
        Ok(p)
    }

    pub fn from_vec(dims: ModelDims, data: Vec<f64>) -> Result<Self> {
        dims.validate()?;
        if data.len() != dims.len() {
            return Err(Error::ShapeMismatch {
                what: "parameter vector",
                expected: dims.len(),
                found: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("non-finite parameter".into()));
        }
        Ok(ModelParams { dims, data })
    }

    pub fn dims(&self) -> ModelDims {
        self.dims
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn head_weights_mut(&mut self) -> &mut [f64] {
        let o = self.dims.head_offsets();
        &mut self.data[o.head_w..]
    }

    /// Zero every weight that reads node feature column `feature`: the
    /// receiving and neighbor rows of each conv layer and the dense row.
    /// Because conv layers are residual, this is what it takes to make the
    /// model's output independent of that input column.
    pub fn mask_input_feature(&mut self, feature: usize) -> Result<()> {
        let d = self.dims;
        let f = d.node_width;
        if feature >= f {
            return Err(Error::FeatureIndex { index: feature, limit: f });
        }
        for l in 0..d.layers {
            let o = d.layer_offsets(l);
            for base in [o.gate_w, o.core_w] {
                for row in [feature, f + feature] {
                    self.data[base + row * f..base + (row + 1) * f].fill(0.0);
                }
            }
        }
        let o = d.head_offsets();
        let h = d.dense_width;
        self.data[o.dense_w + feature * h..o.dense_w + (feature + 1) * h].fill(0.0);
        Ok(())
    }
}
