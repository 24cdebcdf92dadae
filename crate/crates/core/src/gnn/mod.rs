//! Attention-based GNN node classifier and the slot-by-slot scheduling loop.
//!
//! Architecture, for `H = hidden_dim`, `M = num_heads`, `d = H / M`:
//!
//! ```text
//! h   = LayerNorm_e(ReLU(X·W_e + b_e))
//! per block:
//!     u    = h·W_l + b_l
//!     q,k,v per head m: u·Wq_m, u·Wk_m, u·Wv_m            (H → d)
//!     e_vj = LeakyReLU_0.2(a_m[..d]·q_v + a_m[d..]·k_j)     j ∈ {v} ∪ N(v)
//!     α_vj = softmax_j(e_vj);  o_v = ||_m Σ_j α_vj v_j
//!     h1   = LayerNorm_1(h + o)
//!     h    = LayerNorm_2(h1 + ReLU(h1·W_p + b_p))
//! logits = h·W_c + b_c                                       (H → 3)
//! ```
//!
//! Matrices are stored `[in, out]` so that `y = x·W + b`. Output classes
//! follow [`Role::class_index`](crate::model::Role::class_index).
//! Computation runs in `f64` with a fixed accumulation order; weights are
//! stored as `f32`.

mod inference;
mod weights;

pub use inference::{
    next_timeslot, schedule_with_gnn, timeslot_from_logits, CachedInstance, GnnScheduler,
    InferencePolicy, RepairPolicy,
};
pub use weights::{WeightError, WEIGHT_FORMAT_VERSION, WEIGHT_MAGIC};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::features::{FeatureMatrix, PeMode};
use crate::model::Topology;

pub const NUM_CLASSES: usize = 3;
pub const LAYER_NORM_EPS: f64 = 1e-5;
pub const LEAKY_RELU_SLOPE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GnnConfig {
    pub num_blocks: usize,
    pub num_heads: usize,
    pub hidden_dim: usize,
    pub pe_mode: PeMode,
}

impl Default for GnnConfig {
    fn default() -> Self {
        Self {
            num_blocks: 12,
            num_heads: 12,
            hidden_dim: 72,
            pe_mode: PeMode::Degree,
        }
    }
}

impl GnnConfig {
    pub fn input_dim(&self) -> usize {
        self.pe_mode.input_dim()
    }

    pub fn head_dim(&self) -> usize {
        self.hidden_dim / self.num_heads
    }

    pub fn validate(&self) -> Result<(), WeightError> {
        let bad = |msg: String| Err(WeightError::Config(msg));
        if self.num_blocks == 0 || self.num_heads == 0 || self.hidden_dim == 0 {
            return bad("num_blocks, num_heads and hidden_dim must be positive".into());
        }
        if self.hidden_dim % self.num_heads != 0 {
            return bad(format!(
                "hidden_dim {} is not divisible by num_heads {}",
                self.hidden_dim, self.num_heads
            ));
        }
        Ok(())
    }

    /// Every tensor the model owns, in canonical (export) order.
    pub fn tensor_specs(&self) -> Vec<(String, Vec<usize>)> {
        let (h, m, d) = (self.hidden_dim, self.num_heads, self.head_dim());
        let mut specs = vec![
            ("embed.weight".to_string(), vec![self.input_dim(), h]),
            ("embed.bias".to_string(), vec![h]),
            ("embed.norm.gamma".to_string(), vec![h]),
            ("embed.norm.beta".to_string(), vec![h]),
        ];
        for b in 0..self.num_blocks {
            let p = format!("blocks.{b}");
            specs.extend([
                (format!("{p}.linear.weight"), vec![h, h]),
                (format!("{p}.linear.bias"), vec![h]),
                (format!("{p}.attn.query"), vec![m, h, d]),
                (format!("{p}.attn.key"), vec![m, h, d]),
                (format!("{p}.attn.value"), vec![m, h, d]),
                (format!("{p}.attn.score"), vec![m, 2 * d]),
                (format!("{p}.norm1.gamma"), vec![h]),
                (format!("{p}.norm1.beta"), vec![h]),
                (format!("{p}.post.weight"), vec![h, h]),
                (format!("{p}.post.bias"), vec![h]),
                (format!("{p}.norm2.gamma"), vec![h]),
                (format!("{p}.norm2.beta"), vec![h]),
            ]);
        }
        specs.extend([
            ("classifier.weight".to_string(), vec![h, NUM_CLASSES]),
            ("classifier.bias".to_string(), vec![NUM_CLASSES]),
        ]);
        specs
    }
}

/// Named row-major tensor as stored in the weight file.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub dims: Vec<usize>,
    pub data: Vec<f32>,
}

struct Linear {
    weight: Vec<f64>,
    bias: Vec<f64>,
    fan_in: usize,
    fan_out: usize,
}

struct Norm {
    gamma: Vec<f64>,
    beta: Vec<f64>,
}

struct Block {
    linear: Linear,
    query: Vec<f64>,
    key: Vec<f64>,
    value: Vec<f64>,
    score: Vec<f64>,
    norm1: Norm,
    post: Linear,
    norm2: Norm,
}

/// Immutable weight set plus its configuration.
pub struct GnnModel {
    config: GnnConfig,
    tensors: Vec<Tensor>,
    embed: Linear,
    embed_norm: Norm,
    blocks: Vec<Block>,
    classifier: Linear,
}

impl std::fmt::Debug for GnnModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GnnModel")
            .field("config", &self.config)
            .field("tensors", &self.tensors.len())
            .finish()
    }
}

impl GnnModel {
    /// Builds a model from named tensors; names and shapes must match
    /// `config.tensor_specs()` exactly (order is free).
    pub fn from_tensors(config: GnnConfig, tensors: Vec<Tensor>) -> Result<Self, WeightError> {
        config.validate()?;
        let specs = config.tensor_specs();
        let mut by_name: std::collections::HashMap<String, Tensor> = Default::default();
        for t in tensors {
            if !specs.iter().any(|(n, _)| *n == t.name) {
                return Err(WeightError::integrity(&t.name, "unexpected tensor"));
            }
            if by_name.contains_key(&t.name) {
                return Err(WeightError::integrity(&t.name, "duplicate tensor"));
            }
            by_name.insert(t.name.clone(), t);
        }
        let mut ordered = Vec::with_capacity(specs.len());
        for (name, dims) in &specs {
            let t = by_name
                .remove(name)
                .ok_or_else(|| WeightError::integrity(name, "missing tensor"))?;
            if &t.dims != dims {
                return Err(WeightError::integrity(
                    name,
                    format!("shape {:?}, expected {:?}", t.dims, dims),
                ));
            }
            if t.data.len() != dims.iter().product::<usize>() {
                return Err(WeightError::integrity(name, "element count does not match shape"));
            }
            if t.data.iter().any(|v| !v.is_finite()) {
                return Err(WeightError::integrity(name, "non-finite value"));
            }
            ordered.push(t);
        }

        let get = |name: &str| -> Vec<f64> {
            ordered
                .iter()
                .find(|t| t.name == name)
                .expect("checked above")
                .data
                .iter()
                .map(|&v| v as f64)
                .collect()
        };
        let linear = |prefix: &str, fan_in, fan_out| Linear {
            weight: get(&format!("{prefix}.weight")),
            bias: get(&format!("{prefix}.bias")),
            fan_in,
            fan_out,
        };
        let norm = |prefix: &str| Norm {
            gamma: get(&format!("{prefix}.gamma")),
            beta: get(&format!("{prefix}.beta")),
        };
        let h = config.hidden_dim;
        let blocks = (0..config.num_blocks)
            .map(|b| {
                let p = format!("blocks.{b}");
                Block {
                    linear: linear(&format!("{p}.linear"), h, h),
                    query: get(&format!("{p}.attn.query")),
                    key: get(&format!("{p}.attn.key")),
                    value: get(&format!("{p}.attn.value")),
                    score: get(&format!("{p}.attn.score")),
                    norm1: norm(&format!("{p}.norm1")),
                    post: linear(&format!("{p}.post"), h, h),
                    norm2: norm(&format!("{p}.norm2")),
                }
            })
            .collect();
        Ok(Self {
            config,
            embed: linear("embed", config.input_dim(), h),
            embed_norm: norm("embed.norm"),
            blocks,
            classifier: linear("classifier", h, NUM_CLASSES),
            tensors: ordered,
        })
    }

    /// All-zero weights and normalization parameters.
    pub fn zeros(config: GnnConfig) -> Result<Self, WeightError> {
        config.validate()?;
        let tensors = config
            .tensor_specs()
            .into_iter()
            .map(|(name, dims)| Tensor {
                data: vec![0.0; dims.iter().product()],
                name,
                dims,
            })
            .collect();
        Self::from_tensors(config, tensors)
    }

    /// Randomly initialized (untrained) model; Glorot-uniform matrices,
    /// small random biases and perturbed normalization parameters.
    pub fn random(config: GnnConfig, seed: u64) -> Result<Self, WeightError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tensors = config
            .tensor_specs()
            .into_iter()
            .map(|(name, dims)| {
                let count: usize = dims.iter().product();
                let data = if name.ends_with(".gamma") {
                    (0..count).map(|_| 1.0 + rng.random_range(-0.1f32..0.1)).collect()
                } else if dims.len() == 1 {
                    (0..count).map(|_| rng.random_range(-0.1f32..0.1)).collect()
                } else {
                    let fan_out = dims[dims.len() - 1];
                    let fan_in = dims[dims.len() - 2];
                    let limit = (6.0 / (fan_in + fan_out) as f32).sqrt();
                    (0..count).map(|_| rng.random_range(-limit..limit)).collect()
                };
                Tensor { name, dims, data }
            })
            .collect();
        Self::from_tensors(config, tensors)
    }

    pub fn config(&self) -> &GnnConfig {
        &self.config
    }

    /// Tensors in canonical order.
    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors.iter().map(|t| t.data.len()).sum()
    }

    /// Per-node class logits, ordered `[carrier, tag_query, idle]`.
    ///
    /// Panics if the feature width does not match the model's input
    /// dimension or the row count does not match the topology.
    pub fn forward(&self, features: &FeatureMatrix, topology: &Topology) -> Vec<[f64; NUM_CLASSES]> {
        let n = features.rows();
        assert_eq!(n, topology.node_count(), "feature rows must equal node count");
        assert_eq!(
            features.cols(),
            self.config.input_dim(),
            "feature width does not match the model's positional-encoding mode"
        );
        let (hd, m, d) = (self.config.hidden_dim, self.config.num_heads, self.config.head_dim());

        let mut h = self.embed.apply(features.as_slice(), n);
        relu(&mut h);
        self.embed_norm.apply(&mut h, hd);

        let mut q = vec![0.0; n * d];
        let mut k = vec![0.0; n * d];
        let mut v = vec![0.0; n * d];
        let mut scores = Vec::new();
        for block in &self.blocks {
            let u = block.linear.apply(&h, n);
            let mut attended = vec![0.0; n * hd];
            for head in 0..m {
                let offset = head * hd * d;
                project(&u, n, hd, &block.query[offset..offset + hd * d], d, &mut q);
                project(&u, n, hd, &block.key[offset..offset + hd * d], d, &mut k);
                project(&u, n, hd, &block.value[offset..offset + hd * d], d, &mut v);
                let a_dst = &block.score[head * 2 * d..head * 2 * d + d];
                let a_src = &block.score[head * 2 * d + d..(head + 1) * 2 * d];
                let src_term: Vec<f64> = (0..n).map(|j| dot(a_src, &k[j * d..(j + 1) * d])).collect();
                for node in 0..n {
                    let dst_term = dot(a_dst, &q[node * d..(node + 1) * d]);
                    let neighborhood = std::iter::once(node).chain(topology.neighbors(node).iter().copied());
                    scores.clear();
                    scores.extend(neighborhood.clone().map(|j| leaky_relu(dst_term + src_term[j])));
                    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let mut total = 0.0;
                    for s in &mut scores {
                        *s = (*s - max).exp();
                        total += *s;
                    }
                    let out = &mut attended[node * hd + head * d..node * hd + (head + 1) * d];
                    for (j, weight) in neighborhood.zip(&scores) {
                        let alpha = weight / total;
                        for (o, val) in out.iter_mut().zip(&v[j * d..(j + 1) * d]) {
                            *o += alpha * val;
                        }
                    }
                }
            }
            for (x, a) in attended.iter_mut().zip(&h) {
                *x += a;
            }
            block.norm1.apply(&mut attended, hd);
            let h1 = attended;
            let mut ff = block.post.apply(&h1, n);
            relu(&mut ff);
            for (x, a) in ff.iter_mut().zip(&h1) {
                *x += a;
            }
            block.norm2.apply(&mut ff, hd);
            h = ff;
        }
        let logits = self.classifier.apply(&h, n);
        logits
            .chunks_exact(NUM_CLASSES)
            .map(|c| [c[0], c[1], c[2]])
            .collect()
    }
}

impl Linear {
    fn apply(&self, x: &[f64], rows: usize) -> Vec<f64> {
        let mut y = Vec::with_capacity(rows * self.fan_out);
        for r in 0..rows {
            y.extend_from_slice(&self.bias);
            let out = &mut y[r * self.fan_out..];
            for (i, &xi) in x[r * self.fan_in..(r + 1) * self.fan_in].iter().enumerate() {
                for (o, w) in out.iter_mut().zip(&self.weight[i * self.fan_out..(i + 1) * self.fan_out]) {
                    *o += xi * w;
                }
            }
        }
        y
    }
}

impl Norm {
    fn apply(&self, x: &mut [f64], width: usize) {
        for row in x.chunks_exact_mut(width) {
            let mean = row.iter().sum::<f64>() / width as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / width as f64;
            let inv = 1.0 / (var + LAYER_NORM_EPS).sqrt();
            for ((v, g), b) in row.iter_mut().zip(&self.gamma).zip(&self.beta) {
                *v = (*v - mean) * inv * g + b;
            }
        }
    }
}

fn project(x: &[f64], rows: usize, fan_in: usize, w: &[f64], fan_out: usize, out: &mut [f64]) {
    out.fill(0.0);
    for r in 0..rows {
        let o = &mut out[r * fan_out..(r + 1) * fan_out];
        for (i, &xi) in x[r * fan_in..(r + 1) * fan_in].iter().enumerate() {
            for (oj, wj) in o.iter_mut().zip(&w[i * fan_out..(i + 1) * fan_out]) {
                *oj += xi * wj;
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn relu(x: &mut [f64]) {
    for v in x {
        *v = v.max(0.0);
    }
}

fn leaky_relu(x: f64) -> f64 {
    if x >= 0.0 {
        x
    } else {
        LEAKY_RELU_SLOPE * x
    }
}
