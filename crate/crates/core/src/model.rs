//! Agent parameters, arrangements and the validated [`FlockSpec`].
//!
//! Parameters are taken verbatim: a negative gain stays negative. Every agent
//! row must satisfy the decentralization constraint `sum_j rho[j] = -1` for
//! both the position and the velocity weights.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance on `sum_j rho[j] + 1`.
pub const CONSTRAINT_TOL: f64 = 1e-12;

/// Neighbor offsets in road order. Negative offsets look ahead (towards the
/// leader), positive offsets look behind.
pub const OFFSETS: [i32; 4] = [-2, -1, 1, 2];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("agent {}: {channel} weights sum to {sum} (residual {residual:+e} against -1)", agent + 1)]
    ConstraintViolation {
        agent: usize,
        channel: Channel,
        sum: f64,
        residual: f64,
    },
    #[error("shape error: {0}")]
    ShapeError(String),
    #[error("agent {}: non-finite parameter {name}", agent + 1)]
    NonFinite { agent: usize, name: String },
    #[error("need at least {min} cells per type, got {n}")]
    SizeError { n: usize, min: usize },
    #[error("spec parse error: {0}")]
    Parse(String),
}

/// Position (`x`) or velocity (`v`) coupling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    X,
    V,
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Channel::X => f.write_str("rho_x"),
            Channel::V => f.write_str("rho_v"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Arrangement {
    /// `...3-2-1-3-2-1` with nearest-neighbor coupling.
    #[serde(rename = "triatomic_nn", alias = "TriatomicNN")]
    TriatomicNN,
    /// `...2-1-2-1` with next-nearest-neighbor coupling.
    #[serde(rename = "diatomic_nnn", alias = "DiatomicNNN")]
    DiatomicNNN,
}

impl Arrangement {
    /// Number of agent types per cell.
    pub fn types(self) -> usize {
        match self {
            Arrangement::TriatomicNN => 3,
            Arrangement::DiatomicNNN => 2,
        }
    }

    /// Largest neighbor offset.
    pub fn reach(self) -> usize {
        match self {
            Arrangement::TriatomicNN => 1,
            Arrangement::DiatomicNNN => 2,
        }
    }

    /// Degree of the per-mode characteristic polynomial.
    pub fn degree(self) -> usize {
        2 * self.types()
    }
}

impl fmt::Display for Arrangement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arrangement::TriatomicNN => f.write_str("triatomic_nn"),
            Arrangement::DiatomicNNN => f.write_str("diatomic_nnn"),
        }
    }
}

/// Coupling weights indexed by offset in {-2, -1, 1, 2}. The central weight is
/// implicitly 1.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NeighborWeights([f64; 4]);

impl NeighborWeights {
    pub fn nearest(forward: f64, backward: f64) -> Self {
        Self([0.0, backward, forward, 0.0])
    }

    /// `rho[1], rho[-1], rho[2], rho[-2]`.
    pub fn next_nearest(p1: f64, m1: f64, p2: f64, m2: f64) -> Self {
        Self([m2, m1, p1, p2])
    }

    fn slot(offset: i32) -> usize {
        match offset {
            -2 => 0,
            -1 => 1,
            1 => 2,
            2 => 3,
            _ => panic!("offset {offset} outside {{-2,-1,1,2}}"),
        }
    }

    pub fn get(&self, offset: i32) -> f64 {
        self.0[Self::slot(offset)]
    }

    pub fn set(&mut self, offset: i32, value: f64) {
        self.0[Self::slot(offset)] = value;
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Nonzero `(offset, weight)` pairs in offset order.
    pub fn iter(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        OFFSETS
            .iter()
            .zip(self.0.iter())
            .filter(|(_, w)| **w != 0.0)
            .map(|(o, w)| (*o, *w))
    }
}

impl Serialize for NeighborWeights {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let map: BTreeMap<String, f64> = self.iter().map(|(o, w)| (o.to_string(), w)).collect();
        map.serialize(s)
    }
}

impl<'de> Deserialize<'de> for NeighborWeights {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let map = BTreeMap::<String, f64>::deserialize(d)?;
        let mut w = NeighborWeights::default();
        for (k, v) in map {
            let off: i32 = k
                .trim()
                .parse()
                .map_err(|_| serde::de::Error::custom(format!("bad offset key {k:?}")))?;
            if !OFFSETS.contains(&off) {
                return Err(serde::de::Error::custom(format!("offset {off} outside {{-2,-1,1,2}}")));
            }
            w.set(off, v);
        }
        Ok(w)
    }
}

/// Gains and relative weights of one agent type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentParams {
    pub g_x: f64,
    pub g_v: f64,
    #[serde(default)]
    pub rho_x: NeighborWeights,
    #[serde(default)]
    pub rho_v: NeighborWeights,
}

impl AgentParams {
    pub fn weights(&self, channel: Channel) -> &NeighborWeights {
        match channel {
            Channel::X => &self.rho_x,
            Channel::V => &self.rho_v,
        }
    }

    pub fn gain(&self, channel: Channel) -> f64 {
        match channel {
            Channel::X => self.g_x,
            Channel::V => self.g_v,
        }
    }
}

/// A validated periodic arrangement of agent types.
///
/// Agent `k` (0-based) is type `k + 1`; within a cell type 1 drives at the
/// head.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlockSpec {
    arrangement: Arrangement,
    agents: Vec<AgentParams>,
}

impl FlockSpec {
    pub fn arrangement(&self) -> Arrangement {
        self.arrangement
    }

    pub fn agents(&self) -> &[AgentParams] {
        &self.agents
    }

    pub fn agent(&self, k: usize) -> &AgentParams {
        &self.agents[k]
    }

    pub fn types(&self) -> usize {
        self.arrangement.types()
    }

    /// Parse the JSON document format and validate it. Parse errors carry
    /// the line and column.
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let raw: RawSpec = serde_json::from_str(text).map_err(|e| ModelError::Parse(e.to_string()))?;
        raw.into_spec()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    /// Cyclic relabeling: agent `k` of the result is agent `k + shift` of `self`.
    pub fn rotated(&self, shift: usize) -> Self {
        let mut agents = self.agents.clone();
        let len = agents.len();
        agents.rotate_left(shift % len);
        Self {
            arrangement: self.arrangement,
            agents,
        }
    }
}

/// Validate raw agent parameters for an arrangement.
pub fn build_spec(arrangement: Arrangement, agents: Vec<AgentParams>) -> Result<FlockSpec, ModelError> {
    if agents.len() != arrangement.types() {
        return Err(ModelError::ShapeError(format!(
            "{arrangement} needs {} agent types, got {}",
            arrangement.types(),
            agents.len()
        )));
    }
    for (k, a) in agents.iter().enumerate() {
        for (name, value) in [("g_x", a.g_x), ("g_v", a.g_v)] {
            if !value.is_finite() {
                return Err(ModelError::NonFinite {
                    agent: k,
                    name: name.into(),
                });
            }
        }
        for channel in [Channel::X, Channel::V] {
            let w = a.weights(channel);
            for off in OFFSETS {
                let value = w.get(off);
                if !value.is_finite() {
                    return Err(ModelError::NonFinite {
                        agent: k,
                        name: format!("{channel}[{off}]"),
                    });
                }
                if off.unsigned_abs() as usize > arrangement.reach() && value != 0.0 {
                    return Err(ModelError::ShapeError(format!(
                        "agent {k}: {channel}[{off}] set but {arrangement} couples nearest neighbors only"
                    )));
                }
            }
            let sum = w.sum();
            let residual = sum + 1.0;
            if residual.abs() > CONSTRAINT_TOL {
                return Err(ModelError::ConstraintViolation {
                    agent: k,
                    channel,
                    sum,
                    residual,
                });
            }
        }
    }
    Ok(FlockSpec { arrangement, agents })
}

/// On-disk spec document. Omitted offsets are zero; `infer` names weights to
/// complete from the constraint, either `"-1"` (both channels) or `"x:-1"` /
/// `"v:-1"`. A top-level `infer` applies to agents without their own list.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSpec {
    pub arrangement: Arrangement,
    pub agents: Vec<RawAgent>,
    #[serde(default)]
    pub infer: Vec<String>,
    /// Free-form note, ignored.
    #[serde(default)]
    pub comment: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawAgent {
    pub g_x: f64,
    pub g_v: f64,
    #[serde(default)]
    pub rho_x: BTreeMap<String, f64>,
    #[serde(default)]
    pub rho_v: BTreeMap<String, f64>,
    #[serde(default)]
    pub infer: Option<Vec<String>>,
}

fn parse_offset(key: &str) -> Result<i32, ModelError> {
    let off: i32 = key
        .trim()
        .parse()
        .map_err(|_| ModelError::ShapeError(format!("bad offset key {key:?}")))?;
    if OFFSETS.contains(&off) {
        Ok(off)
    } else {
        Err(ModelError::ShapeError(format!("offset {off} outside {{-2,-1,1,2}}")))
    }
}

fn parse_infer(entry: &str) -> Result<(Vec<Channel>, i32), ModelError> {
    match entry.split_once(':') {
        Some((c, off)) => {
            let channel = match c.trim() {
                "x" => Channel::X,
                "v" => Channel::V,
                other => {
                    return Err(ModelError::ShapeError(format!(
                        "infer entry {entry:?}: unknown channel {other:?}"
                    )))
                }
            };
            Ok((vec![channel], parse_offset(off)?))
        }
        None => Ok((vec![Channel::X, Channel::V], parse_offset(entry)?)),
    }
}

impl RawSpec {
    pub fn into_spec(self) -> Result<FlockSpec, ModelError> {
        let mut agents = Vec::with_capacity(self.agents.len());
        for (k, raw) in self.agents.into_iter().enumerate() {
            let mut rho = [NeighborWeights::default(), NeighborWeights::default()];
            for (slot, map) in [(0, &raw.rho_x), (1, &raw.rho_v)] {
                for (key, value) in map {
                    rho[slot].set(parse_offset(key)?, *value);
                }
            }
            let infer = raw.infer.as_ref().unwrap_or(&self.infer);
            let mut inferred: Vec<(Channel, i32)> = Vec::new();
            for entry in infer {
                let (channels, off) = parse_infer(entry)?;
                for channel in channels {
                    if inferred.iter().any(|(c, _)| *c == channel) {
                        return Err(ModelError::ShapeError(format!(
                            "agent {k}: only one {channel} weight can be inferred"
                        )));
                    }
                    let map = match channel {
                        Channel::X => &raw.rho_x,
                        Channel::V => &raw.rho_v,
                    };
                    if map.keys().any(|key| parse_offset(key).ok() == Some(off)) {
                        return Err(ModelError::ShapeError(format!(
                            "agent {k}: {channel}[{off}] is both given and inferred"
                        )));
                    }
                    inferred.push((channel, off));
                }
            }
            for (channel, off) in inferred {
                let w = match channel {
                    Channel::X => &mut rho[0],
                    Channel::V => &mut rho[1],
                };
                let rest = w.sum();
                w.set(off, -1.0 - rest);
            }
            agents.push(AgentParams {
                g_x: raw.g_x,
                g_v: raw.g_v,
                rho_x: rho[0],
                rho_v: rho[1],
            });
        }
        build_spec(self.arrangement, agents)
    }
}

/// Sums and differences of forward/backward weights, per agent and offset
/// magnitude `j` in {1, 2}.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaBeta {
    pub alpha_x: Vec<[f64; 2]>,
    pub beta_x: Vec<[f64; 2]>,
    pub alpha_v: Vec<[f64; 2]>,
    pub beta_v: Vec<[f64; 2]>,
}

impl AlphaBeta {
    pub fn alpha(&self, channel: Channel, k: usize, j: usize) -> f64 {
        match channel {
            Channel::X => self.alpha_x[k][j - 1],
            Channel::V => self.alpha_v[k][j - 1],
        }
    }

    pub fn beta(&self, channel: Channel, k: usize, j: usize) -> f64 {
        match channel {
            Channel::X => self.beta_x[k][j - 1],
            Channel::V => self.beta_v[k][j - 1],
        }
    }
}

pub fn alphas_betas(spec: &FlockSpec) -> AlphaBeta {
    let split = |w: &NeighborWeights| -> ([f64; 2], [f64; 2]) {
        let mut alpha = [0.0; 2];
        let mut beta = [0.0; 2];
        for j in 1..=2 {
            alpha[j - 1] = w.get(j as i32) + w.get(-(j as i32));
            beta[j - 1] = w.get(j as i32) - w.get(-(j as i32));
        }
        (alpha, beta)
    };
    let mut out = AlphaBeta {
        alpha_x: Vec::new(),
        beta_x: Vec::new(),
        alpha_v: Vec::new(),
        beta_v: Vec::new(),
    };
    for a in spec.agents() {
        let (ax, bx) = split(&a.rho_x);
        let (av, bv) = split(&a.rho_v);
        out.alpha_x.push(ax);
        out.beta_x.push(bx);
        out.alpha_v.push(av);
        out.beta_v.push(bv);
    }
    out
}
