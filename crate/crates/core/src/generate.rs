//! Random problem-instance generation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ModelError, NodeId, ProblemInstance, Tag, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphModel {
    /// Uniform points in the unit square, edge iff Euclidean distance
    /// is at most `radius`.
    RandomGeometric { radius: f64 },
    /// Each node pair is an edge independently with probability `edge_prob`.
    ErdosRenyi { edge_prob: f64 },
}

impl Default for GraphModel {
    fn default() -> Self {
        GraphModel::RandomGeometric { radius: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    /// Inclusive `[min, max]` node count.
    pub node_range: (usize, usize),
    /// Inclusive `[min, max]` tag count.
    pub tag_range: (usize, usize),
    pub graph_model: GraphModel,
    pub seed: u64,
    /// Graph resamples allowed before giving up on connectivity.
    pub max_retries: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            node_range: (2, 10),
            tag_range: (1, 14),
            graph_model: GraphModel::default(),
            seed: 0,
            max_retries: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenerateError {
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error("no connected graph with {nodes} nodes after {attempts} attempts")]
    NotConnected { nodes: usize, attempts: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), GenerateError> {
        let bad = |msg: &str| Err(GenerateError::InvalidConfig(msg.to_string()));
        let (nmin, nmax) = self.node_range;
        let (tmin, tmax) = self.tag_range;
        if nmin == 0 || nmin > nmax {
            return bad("node_range must satisfy 1 <= min <= max");
        }
        if tmin == 0 || tmin > tmax {
            return bad("tag_range must satisfy 1 <= min <= max");
        }
        if tmax > u32::MAX as usize {
            return bad("tag_range exceeds the tag id space");
        }
        match self.graph_model {
            GraphModel::RandomGeometric { radius } if !(radius > 0.0 && radius.is_finite()) => {
                bad("radius must be positive and finite")
            }
            GraphModel::ErdosRenyi { edge_prob } if !(edge_prob > 0.0 && edge_prob <= 1.0) => {
                bad("edge_prob must lie in (0, 1]")
            }
            _ => Ok(()),
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// Draws one instance from the seeded generator; identical configs give
/// identical instances.
pub fn generate_instance(config: &GeneratorConfig) -> Result<ProblemInstance, GenerateError> {
    generate_instance_with_rng(config, &mut config.rng())
}

/// Draws `count` instances from a single seeded stream.
pub fn generate_corpus(
    config: &GeneratorConfig,
    count: usize,
) -> Result<Vec<ProblemInstance>, GenerateError> {
    let mut rng = config.rng();
    (0..count)
        .map(|_| generate_instance_with_rng(config, &mut rng))
        .collect()
}

pub fn generate_instance_with_rng<R: Rng>(
    config: &GeneratorConfig,
    rng: &mut R,
) -> Result<ProblemInstance, GenerateError> {
    config.validate()?;
    let n = rng.random_range(config.node_range.0..=config.node_range.1);
    let t = rng.random_range(config.tag_range.0..=config.tag_range.1);
    let topology = connected_graph(n, config.graph_model, config.max_retries, rng)?;
    let tags = (1..=t as u32)
        .map(|id| Tag {
            id,
            host: rng.random_range(0..n),
        })
        .collect();
    Ok(ProblemInstance::new(topology, tags)?)
}

fn connected_graph<R: Rng>(
    n: usize,
    model: GraphModel,
    max_retries: usize,
    rng: &mut R,
) -> Result<Topology, GenerateError> {
    for _ in 0..=max_retries {
        let edges = match model {
            GraphModel::RandomGeometric { radius } => geometric_edges(n, radius, rng),
            GraphModel::ErdosRenyi { edge_prob } => gnp_edges(n, edge_prob, rng),
        };
        match Topology::new(n, &edges) {
            Ok(t) => return Ok(t),
            Err(ModelError::Disconnected(_)) => continue,
            Err(e) => return Err(e.into()),
        }
    }
    Err(GenerateError::NotConnected {
        nodes: n,
        attempts: max_retries + 1,
    })
}

fn geometric_edges<R: Rng>(n: usize, radius: f64, rng: &mut R) -> Vec<(NodeId, NodeId)> {
    let points: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.random::<f64>(), rng.random::<f64>()))
        .collect();
    let r2 = radius * radius;
    // cells never narrower than the radius, and at most ~sqrt(n) per side
    let cell = radius.max(1.0 / (n as f64).sqrt().ceil()).min(1.0);
    let cells = ((1.0 / cell).ceil() as usize).max(1);
    let cell_of = |x: f64| ((x / cell) as usize).min(cells - 1);
    let mut grid: Vec<Vec<NodeId>> = vec![Vec::new(); cells * cells];
    for (u, &(x, y)) in points.iter().enumerate() {
        grid[cell_of(x) * cells + cell_of(y)].push(u);
    }
    let mut edges = Vec::new();
    for (u, &(x, y)) in points.iter().enumerate() {
        let (cx, cy) = (cell_of(x), cell_of(y));
        for gx in cx.saturating_sub(1)..=(cx + 1).min(cells - 1) {
            for gy in cy.saturating_sub(1)..=(cy + 1).min(cells - 1) {
                for &v in &grid[gx * cells + gy] {
                    if v <= u {
                        continue;
                    }
                    let (dx, dy) = (points[v].0 - x, points[v].1 - y);
                    if dx * dx + dy * dy <= r2 {
                        edges.push((u, v));
                    }
                }
            }
        }
    }
    edges
}

fn gnp_edges<R: Rng>(n: usize, p: f64, rng: &mut R) -> Vec<(NodeId, NodeId)> {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(p) {
                edges.push((u, v));
            }
        }
    }
    edges
}
