//! Node feature matrices and structural positional encodings.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ProblemInstance, TagId, Topology};

/// Extra structural column appended to the three base features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeMode {
    None,
    #[default]
    Degree,
    LaplacianEigenvalues,
}

impl PeMode {
    pub fn input_dim(self) -> usize {
        match self {
            PeMode::None => 3,
            PeMode::Degree | PeMode::LaplacianEigenvalues => 4,
        }
    }

    pub fn code(self) -> u8 {
        match self {
            PeMode::None => 0,
            PeMode::Degree => 1,
            PeMode::LaplacianEigenvalues => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(PeMode::None),
            1 => Some(PeMode::Degree),
            2 => Some(PeMode::LaplacianEigenvalues),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericalError {
    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },
}

/// Row-major `rows × cols` matrix of node features. Column order:
/// hosted tag count, scaled node id, scaled minimum remaining tag id, then
/// the optional positional-encoding column.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "feature data does not match shape");
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    /// Moves row `u` to row `perm[u]`.
    pub fn permute_rows(&self, perm: &[usize]) -> Self {
        let mut data = vec![0.0; self.data.len()];
        for u in 0..self.rows {
            let v = perm[u];
            data[v * self.cols..(v + 1) * self.cols].copy_from_slice(self.row(u));
        }
        Self::new(self.rows, self.cols, data)
    }
}

/// Degree of each node divided by the maximum degree. All zeros when the
/// graph has no edges.
pub fn node_degrees(topology: &Topology) -> Vec<f64> {
    let degrees: Vec<usize> = (0..topology.node_count()).map(|u| topology.degree(u)).collect();
    let max = degrees.iter().copied().max().unwrap_or(0);
    if max == 0 {
        return vec![0.0; degrees.len()];
    }
    degrees.iter().map(|&d| d as f64 / max as f64).collect()
}

const JACOBI_TOLERANCE: f64 = 1e-10;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigenvalues of `I - D^{-1/2} A D^{-1/2}`, ascending, divided by the
/// largest one when it is nonzero. Rows and columns of isolated nodes are
/// zero.
pub fn laplacian_eigenvalues(topology: &Topology) -> Result<Vec<f64>, NumericalError> {
    let n = topology.node_count();
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|u| match topology.degree(u) {
            0 => 0.0,
            d => 1.0 / (d as f64).sqrt(),
        })
        .collect();
    let mut m = vec![0.0; n * n];
    for u in 0..n {
        if topology.degree(u) > 0 {
            m[u * n + u] = 1.0;
        }
    }
    for &(u, v) in topology.edges() {
        let w = -inv_sqrt[u] * inv_sqrt[v];
        m[u * n + v] = w;
        m[v * n + u] = w;
    }
    let mut values = symmetric_eigenvalues(n, m)?;
    values.sort_by(f64::total_cmp);
    let largest = values.last().copied().unwrap_or(0.0);
    if largest > 0.0 {
        for v in &mut values {
            *v = (*v / largest).clamp(0.0, 1.0);
        }
    }
    Ok(values)
}

/// Cyclic Jacobi rotations on a dense symmetric matrix (row-major, consumed).
pub(crate) fn symmetric_eigenvalues(n: usize, mut a: Vec<f64>) -> Result<Vec<f64>, NumericalError> {
    let off_norm = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                s += 2.0 * a[p * n + q] * a[p * n + q];
            }
        }
        s.sqrt()
    };
    let mut sweeps = 0;
    loop {
        let residual = off_norm(&a);
        if residual < JACOBI_TOLERANCE {
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(NumericalError::NoConvergence { sweeps, residual });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() < f64::MIN_POSITIVE {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    Ok((0..n).map(|i| a[i * n + i]).collect())
}

/// Builds the GNN input for the cached instance state where only
/// `remaining` tags still need interrogation.
///
/// Node ids are divided by `N - 1` and tag ids by the instance's maximum tag
/// id, so both lie in `[0, 1]`. A node hosting no remaining tag gets 0 in the
/// minimum-tag column (real tag ids start at 1).
pub fn build_feature_matrix(
    instance: &ProblemInstance,
    remaining: &BTreeSet<TagId>,
    pe: PeMode,
) -> Result<FeatureMatrix, NumericalError> {
    let n = instance.node_count();
    let cols = pe.input_dim();
    let mut hosted = vec![0usize; n];
    let mut min_tag: Vec<Option<TagId>> = vec![None; n];
    for tag in instance.tags().iter().filter(|t| remaining.contains(&t.id)) {
        hosted[tag.host] += 1;
        let slot = &mut min_tag[tag.host];
        *slot = Some(slot.map_or(tag.id, |m| m.min(tag.id)));
    }
    let id_scale = if n > 1 { (n - 1) as f64 } else { 1.0 };
    let tag_scale = instance.max_tag_id().max(1) as f64;
    let pe_column = match pe {
        PeMode::None => None,
        PeMode::Degree => Some(node_degrees(instance.topology())),
        PeMode::LaplacianEigenvalues => Some(laplacian_eigenvalues(instance.topology())?),
    };
    let mut data = Vec::with_capacity(n * cols);
    for u in 0..n {
        data.push(hosted[u] as f64);
        data.push(u as f64 / id_scale);
        data.push(min_tag[u].map_or(0.0, |t| t as f64 / tag_scale));
        if let Some(col) = &pe_column {
            data.push(col[u]);
        }
    }
    Ok(FeatureMatrix::new(n, cols, data))
}
