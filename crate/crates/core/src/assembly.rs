//! Dense system matrices for the circle and for the line with Type I / Type II
//! boundary rows.
//!
//! State layout follows the block form: all positions of type 1 (cells
//! `1..=n`), then type 2, ..., then the velocities in the same order. On the
//! road, vehicle `p` (0-based, leader first) is type `p % T` in cell `p / T`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::model::{Channel, FlockSpec, ModelError};

/// Smallest number of cells per type accepted by the assemblers.
pub const MIN_CELLS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryType {
    /// Drop missing neighbors and rebalance the central weight.
    #[serde(rename = "I")]
    TypeI,
    /// Keep the central weight at 1 and move each missing neighbor's weight
    /// onto its mirror image across the agent.
    #[serde(rename = "II")]
    TypeII,
}

impl std::fmt::Display for BoundaryType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BoundaryType::TypeI => "I",
            BoundaryType::TypeII => "II",
        })
    }
}

impl std::str::FromStr for BoundaryType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "1" | "I" | "i" | "type1" | "TypeI" => Ok(BoundaryType::TypeI),
            "2" | "II" | "ii" | "type2" | "TypeII" => Ok(BoundaryType::TypeII),
            other => Err(format!("unknown boundary type {other:?} (expected 1 or 2)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Topology {
    Circle,
    LineTypeI,
    LineTypeII,
}

impl Topology {
    pub fn line(bc: BoundaryType) -> Self {
        match bc {
            BoundaryType::TypeI => Topology::LineTypeI,
            BoundaryType::TypeII => Topology::LineTypeII,
        }
    }

    pub fn boundary(self) -> Option<BoundaryType> {
        match self {
            Topology::Circle => None,
            Topology::LineTypeI => Some(BoundaryType::TypeI),
            Topology::LineTypeII => Some(BoundaryType::TypeII),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemMatrix {
    pub n_per_type: usize,
    pub types: usize,
    pub topology: Topology,
    pub entries: DMatrix<f64>,
}

impl SystemMatrix {
    /// Number of vehicles `N = T * n`.
    pub fn vehicles(&self) -> usize {
        self.types * self.n_per_type
    }

    pub fn dim(&self) -> usize {
        2 * self.vehicles()
    }

    /// Position-state index of road vehicle `p`.
    pub fn position_index(&self, p: usize) -> usize {
        block_index(p, self.types, self.n_per_type)
    }

    pub fn velocity_index(&self, p: usize) -> usize {
        self.vehicles() + self.position_index(p)
    }

    /// Row sums of the acceleration rows, in state order.
    pub fn acceleration_row_sums(&self) -> Vec<f64> {
        let nv = self.vehicles();
        (nv..2 * nv).map(|r| self.entries.row(r).sum()).collect()
    }

    /// Compressed rows for repeated matrix-vector products.
    pub fn to_sparse(&self) -> SparseRows {
        SparseRows::from_dense(&self.entries)
    }
}

fn block_index(p: usize, types: usize, n: usize) -> usize {
    (p % types) * n + p / types
}

/// Coupling row of road vehicle `p` for one channel: `(neighbor, weight)`
/// pairs including the central term, before multiplication by the gain.
fn stencil(spec: &FlockSpec, p: usize, vehicles: usize, channel: Channel, topology: Topology) -> Vec<(usize, f64)> {
    let agent = spec.agent(p % spec.types());
    let weights = agent.weights(channel);
    let mut row: Vec<(usize, f64)> = vec![(p, 1.0)];
    let add = |q: usize, w: f64, row: &mut Vec<(usize, f64)>| match row.iter_mut().find(|(c, _)| *c == q) {
        Some(entry) => entry.1 += w,
        None => row.push((q, w)),
    };
    let n = vehicles as i64;
    for (off, w) in weights.iter() {
        let q = p as i64 + off as i64;
        match topology {
            Topology::Circle => add(q.rem_euclid(n) as usize, w, &mut row),
            _ if (0..n).contains(&q) => add(q as usize, w, &mut row),
            Topology::LineTypeI => {}
            Topology::LineTypeII => {
                let mirror = p as i64 - off as i64;
                debug_assert!((0..n).contains(&mirror));
                add(mirror as usize, w, &mut row);
            }
        }
    }
    if topology == Topology::LineTypeI {
        let others: f64 = row.iter().filter(|(c, _)| *c != p).map(|(_, w)| w).sum();
        row[0].1 = -others;
    }
    row
}

fn assemble(spec: &FlockSpec, n: usize, topology: Topology) -> Result<SystemMatrix, ModelError> {
    if n < MIN_CELLS {
        return Err(ModelError::SizeError { n, min: MIN_CELLS });
    }
    let types = spec.types();
    let nv = types * n;
    let mut m = DMatrix::<f64>::zeros(2 * nv, 2 * nv);
    for i in 0..nv {
        m[(i, nv + i)] = 1.0;
    }
    let leader_fixed = topology != Topology::Circle;
    for p in 0..nv {
        if leader_fixed && p == 0 {
            continue;
        }
        let row = nv + block_index(p, types, n);
        let agent = spec.agent(p % types);
        for (channel, col0) in [(Channel::X, 0), (Channel::V, nv)] {
            let gain = agent.gain(channel);
            for (q, w) in stencil(spec, p, nv, channel, topology) {
                m[(row, col0 + block_index(q, types, n))] += gain * w;
            }
        }
    }
    Ok(SystemMatrix {
        n_per_type: n,
        types,
        topology,
        entries: m,
    })
}

/// System matrix on the circle (periodic boundary), dimension `2 T n`.
pub fn assemble_periodic(spec: &FlockSpec, n: usize) -> Result<SystemMatrix, ModelError> {
    assemble(spec, n, Topology::Circle)
}

/// System matrix on the line. The leader's acceleration row is zero and the
/// agents near either end use the requested boundary rows.
pub fn assemble_line(spec: &FlockSpec, n: usize, bc: BoundaryType) -> Result<SystemMatrix, ModelError> {
    assemble(spec, n, Topology::line(bc))
}

/// Row-compressed matrix.
#[derive(Debug, Clone)]
pub struct SparseRows {
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseRows {
    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let mut offsets = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                let v = m[(r, c)];
                if v != 0.0 {
                    cols.push(c);
                    vals.push(v);
                }
            }
            offsets.push(cols.len());
        }
        Self { offsets, cols, vals }
    }

    pub fn rows(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `out = A x`
    pub fn mul_into(&self, x: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let (a, b) = (self.offsets[r], self.offsets[r + 1]);
            *o = self.cols[a..b]
                .iter()
                .zip(&self.vals[a..b])
                .map(|(c, v)| v * x[*c])
                .sum();
        }
    }
}
