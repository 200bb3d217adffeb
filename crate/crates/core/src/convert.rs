//! Conversion from bidirectional to symmetric (three-stage) Clos networks.
//!
//! Every link `(T_i, L_j)` of capacity `C` becomes `C` slot vertices paired up
//! as `(2t, 2t+1)`. Each connection joins one slot on each of its two links.
//! All vertices have degree at most two, so the graph is a union of paths and
//! even cycles and two-colors cleanly. Black slots become up-links of the
//! input switch `U_j`, white slots down-links of the output switch `V_j`, and
//! every connection is directed from its black end to its white end.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{validate_scheme, DemandMatrix, ModelError, NetworkShape, Scheme};

#[derive(Debug, Error)]
pub enum ConvertError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("link ({top}, {low}) has odd capacity {capacity}")]
    OddCapacity { top: usize, low: usize, capacity: u32 },
    #[error("scheme violates the shape: {0} violations")]
    InvalidScheme(usize),
    #[error("low-level switch {0} has no explicitly available link")]
    NoAvailableLink(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Black,
    White,
}

impl Color {
    fn other(self) -> Self {
        match self {
            Color::Black => Color::White,
            Color::White => Color::Black,
        }
    }
}

/// A connection directed from input switch `from` to output switch `to`
/// through top-level switch `top`, with the slot index used on each link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectedConnection {
    pub top: usize,
    pub from: usize,
    pub from_slot: usize,
    pub to: usize,
    pub to_slot: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BipartiteColoring {
    /// `colors[i][j][v]` is the color of slot `v` on link `(T_i, L_j)`.
    pub colors: Vec<Vec<Vec<Color>>>,
    pub connections: Vec<DirectedConnection>,
}

/// A three-stage symmetric Clos instance. Input switch `U_j` and output
/// switch `V_j` both come from low-level switch `L_j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymmetricNetwork {
    pub m: usize,
    pub n: usize,
    /// `up_capacity[i][j]` slots on the link `U_j -> T_i`.
    pub up_capacity: Vec<Vec<u32>>,
    /// `down_capacity[i][j]` slots on the link `T_i -> V_j`.
    pub down_capacity: Vec<Vec<u32>>,
    /// `scheme[i][j][k]` connections `U_j -> T_i -> V_k`.
    pub scheme: Vec<Vec<Vec<u32>>>,
}

impl SymmetricNetwork {
    pub fn up_usage(&self, i: usize, j: usize) -> u32 {
        self.scheme[i][j].iter().sum()
    }

    pub fn down_usage(&self, i: usize, k: usize) -> u32 {
        self.scheme[i].iter().map(|row| row[k]).sum()
    }

    /// Every link within capacity.
    pub fn is_valid(&self) -> bool {
        (0..self.n).all(|i| {
            (0..self.m).all(|j| {
                self.up_usage(i, j) <= self.up_capacity[i][j]
                    && self.down_usage(i, j) <= self.down_capacity[i][j]
            })
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymmetricConversion {
    pub network: SymmetricNetwork,
    pub coloring: BipartiteColoring,
}

struct SlotGraph {
    /// First vertex id of link `(i, j)`, indexed `i * m + j`.
    offset: Vec<usize>,
    /// Connection partner of each vertex.
    partner: Vec<Option<usize>>,
    /// `(top, low, slot)` for each vertex.
    owner: Vec<(usize, usize, usize)>,
    /// Vertex pairs of each connection, in allocation order.
    edges: Vec<(usize, usize)>,
}

impl SlotGraph {
    fn build(shape: &NetworkShape, x: &Scheme) -> Self {
        let (n, m) = (shape.n(), shape.m());
        let mut offset = Vec::with_capacity(n * m);
        let mut owner = Vec::new();
        for i in 0..n {
            for j in 0..m {
                offset.push(owner.len());
                owner.extend((0..shape.capacity(i, j) as usize).map(|v| (i, j, v)));
            }
        }
        let mut partner = vec![None; owner.len()];
        let mut next_free = vec![0usize; n * m];
        let mut edges = Vec::new();
        for i in 0..n {
            for j in 0..m {
                for k in j + 1..m {
                    for _ in 0..x.get(i, j, k) {
                        let a = offset[i * m + j] + next_free[i * m + j];
                        let b = offset[i * m + k] + next_free[i * m + k];
                        next_free[i * m + j] += 1;
                        next_free[i * m + k] += 1;
                        partner[a] = Some(b);
                        partner[b] = Some(a);
                        edges.push((a, b));
                    }
                }
            }
        }
        Self {
            offset,
            partner,
            owner,
            edges,
        }
    }

    /// The type-1 neighbour shares the link and differs in the lowest bit of
    /// the slot index.
    fn pair_mate(&self, v: usize) -> usize {
        let (_, _, slot) = self.owner[v];
        v - slot + (slot ^ 1)
    }

    fn neighbours(&self, v: usize) -> impl Iterator<Item = usize> {
        std::iter::once(self.pair_mate(v)).chain(self.partner[v])
    }
}

fn two_color(g: &SlotGraph) -> (Vec<Color>, Vec<usize>) {
    let total = g.owner.len();
    let mut color: Vec<Option<Color>> = vec![None; total];
    let mut component = vec![usize::MAX; total];
    let mut queue = VecDeque::new();
    let mut next_component = 0;
    for start in 0..total {
        if color[start].is_some() {
            continue;
        }
        color[start] = Some(Color::Black);
        component[start] = next_component;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            let c = color[v].unwrap();
            for u in g.neighbours(v) {
                if color[u].is_none() {
                    color[u] = Some(c.other());
                    component[u] = next_component;
                    queue.push_back(u);
                }
            }
        }
        next_component += 1;
    }
    (color.into_iter().map(Option::unwrap).collect(), component)
}

fn check_input(shape: &NetworkShape, x: &Scheme) -> Result<(), ConvertError> {
    for i in 0..shape.n() {
        for j in 0..shape.m() {
            let c = shape.capacity(i, j);
            if c % 2 == 1 {
                return Err(ConvertError::OddCapacity {
                    top: i,
                    low: j,
                    capacity: c,
                });
            }
        }
    }
    let violations = validate_scheme(shape, x)?;
    if !violations.is_empty() {
        return Err(ConvertError::InvalidScheme(violations.len()));
    }
    Ok(())
}

fn assemble(shape: &NetworkShape, g: &SlotGraph, color: &[Color]) -> SymmetricConversion {
    let (n, m) = (shape.n(), shape.m());
    let half: Vec<Vec<u32>> = (0..n)
        .map(|i| (0..m).map(|j| shape.capacity(i, j) / 2).collect())
        .collect();
    let mut scheme = vec![vec![vec![0u32; m]; m]; n];
    let mut connections = Vec::with_capacity(g.edges.len());
    for &(a, b) in &g.edges {
        let (black, white) = if color[a] == Color::Black { (a, b) } else { (b, a) };
        let (i, from, from_slot) = g.owner[black];
        let (_, to, to_slot) = g.owner[white];
        scheme[i][from][to] += 1;
        connections.push(DirectedConnection {
            top: i,
            from,
            from_slot,
            to,
            to_slot,
        });
    }
    let colors = (0..n)
        .map(|i| {
            (0..m)
                .map(|j| {
                    let base = g.offset[i * m + j];
                    (0..shape.capacity(i, j) as usize)
                        .map(|v| color[base + v])
                        .collect()
                })
                .collect()
        })
        .collect();
    SymmetricConversion {
        network: SymmetricNetwork {
            m,
            n,
            up_capacity: half.clone(),
            down_capacity: half,
            scheme,
        },
        coloring: BipartiteColoring {
            colors,
            connections,
        },
    }
}

/// Converts a valid scheme on an all-even shape into a symmetric network.
/// Each component is colored starting with black at its lowest slot.
pub fn bidi_to_symmetric(shape: &NetworkShape, x: &Scheme) -> Result<SymmetricConversion, ConvertError> {
    check_input(shape, x)?;
    let g = SlotGraph::build(shape, x);
    let (color, _) = two_color(&g);
    Ok(assemble(shape, &g, &color))
}

/// Like [`bidi_to_symmetric`], but flips components so that `U_j0` has a free
/// up-link and `V_k0` a free down-link, ready for scheduling `j0 -> k0`.
/// Only explicitly available links count as free.
pub fn bidi_to_symmetric_for_pair(
    shape: &NetworkShape,
    x: &Scheme,
    j0: usize,
    k0: usize,
) -> Result<SymmetricConversion, ConvertError> {
    check_input(shape, x)?;
    let g = SlotGraph::build(shape, x);
    let (mut color, component) = two_color(&g);
    let free_slots = |low: usize| -> Vec<usize> {
        (0..shape.n())
            .flat_map(|i| {
                let base = g.offset[i * shape.m() + low];
                (base..base + shape.capacity(i, low) as usize).filter(|&v| g.partner[v].is_none())
            })
            .collect()
    };
    let flip = |color: &mut Vec<Color>, comp: usize| {
        for (v, c) in color.iter_mut().enumerate() {
            if component[v] == comp {
                *c = c.other();
            }
        }
    };
    let from = free_slots(j0);
    let Some(&v) = from.first() else {
        return Err(ConvertError::NoAvailableLink(j0));
    };
    if color[v] != Color::Black {
        flip(&mut color, component[v]);
    }
    let to = free_slots(k0);
    if to.is_empty() {
        return Err(ConvertError::NoAvailableLink(k0));
    }
    if !to.iter().any(|&w| color[w] == Color::White) {
        // A free slot sharing v's path would be its other end and hence white,
        // so this flip leaves v alone.
        let w = to[0];
        debug_assert_ne!(component[w], component[v]);
        flip(&mut color, component[w]);
    }
    Ok(assemble(shape, &g, &color))
}

/// Maps a symmetric scheme back: `X[i] = S[i] + S[i]^T`.
pub fn symmetric_to_bidi(network: &SymmetricNetwork) -> Scheme {
    let mut x = Scheme::empty(network.n, network.m);
    for i in 0..network.n {
        for j in 0..network.m {
            for k in 0..network.m {
                for _ in 0..network.scheme[i][j][k] {
                    x.add(i, j, k);
                }
            }
        }
    }
    x
}

/// Directed demand for the symmetric network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrientedDemand {
    pub m: usize,
    /// `demand[j][k]` connections from `U_j` to `V_k`.
    pub demand: Vec<Vec<u32>>,
}

impl OrientedDemand {
    pub fn get(&self, j: usize, k: usize) -> u32 {
        self.demand[j][k]
    }

    pub fn row_sum(&self, j: usize) -> u64 {
        self.demand[j].iter().map(|&v| v as u64).sum()
    }

    pub fn column_sum(&self, k: usize) -> u64 {
        self.demand.iter().map(|row| row[k] as u64).sum()
    }
}

/// Splits each pair's demand into two directions. Even parts are halved; the
/// odd remainders form a graph whose edges are oriented along trails, first
/// between odd-degree vertices and then around the remaining cycles, so
/// every switch gets within one of half its demand in each direction.
pub fn convert_demand(d: &DemandMatrix, seed: u64) -> OrientedDemand {
    let m = d.m();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut odd = vec![vec![false; m]; m];
    let mut degree = vec![0usize; m];
    for (j, k, v) in d.pairs() {
        if v % 2 == 1 {
            odd[j][k] = true;
            odd[k][j] = true;
            degree[j] += 1;
            degree[k] += 1;
        }
    }
    let mut demand: Vec<Vec<u32>> = (0..m)
        .map(|j| (0..m).map(|k| d.get(j, k) / 2).collect())
        .collect();

    let mut walk = |start: usize, odd: &mut Vec<Vec<bool>>, degree: &mut Vec<usize>| {
        let mut at = start;
        let mut next = Vec::new();
        loop {
            next.clear();
            next.extend((0..m).filter(|&k| odd[at][k]));
            let Some(&to) = next.choose(&mut rng) else { break };
            odd[at][to] = false;
            odd[to][at] = false;
            degree[at] -= 1;
            degree[to] -= 1;
            demand[at][to] += 1;
            at = to;
        }
    };

    // An open trail from an odd vertex can only get stuck at another odd
    // vertex, so each pass pairs up two of them.
    for v in 0..m {
        if degree[v] % 2 == 1 {
            walk(v, &mut odd, &mut degree);
        }
    }
    for v in 0..m {
        while degree[v] > 0 {
            walk(v, &mut odd, &mut degree);
        }
    }
    OrientedDemand { m, demand }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConversionViolation {
    /// `Dp[j][k] + Dp[k][j] != D[j][k]`.
    PairSum { j: usize, k: usize, sum: u64, expected: u32 },
    /// Outgoing demand of `U_j` outside `[floor, ceil]` of half its total.
    RowBound { j: usize, sum: u64, low: u64, high: u64 },
    /// Incoming demand of `V_k` outside `[floor, ceil]` of half its total.
    ColumnBound { k: usize, sum: u64, low: u64, high: u64 },
}

pub fn verify_conversion(d: &DemandMatrix, dp: &OrientedDemand) -> Result<Vec<ConversionViolation>, ModelError> {
    let m = d.m();
    if dp.m != m || dp.demand.len() != m || dp.demand.iter().any(|r| r.len() != m) {
        return Err(ModelError::DimensionMismatch(format!(
            "oriented demand is not {m}x{m}"
        )));
    }
    let mut out = Vec::new();
    for j in 0..m {
        for k in j..m {
            let sum = dp.get(j, k) as u64 + dp.get(k, j) as u64;
            if sum != d.get(j, k) as u64 {
                out.push(ConversionViolation::PairSum {
                    j,
                    k,
                    sum,
                    expected: d.get(j, k),
                });
            }
        }
    }
    for j in 0..m {
        let total = d.row_sum(j);
        let (low, high) = (total / 2, total.div_ceil(2));
        let sum = dp.row_sum(j);
        if sum < low || sum > high {
            out.push(ConversionViolation::RowBound { j, sum, low, high });
        }
    }
    for k in 0..m {
        let total = d.row_sum(k);
        let (low, high) = (total / 2, total.div_ceil(2));
        let sum = dp.column_sum(k);
        if sum < low || sum > high {
            out.push(ConversionViolation::ColumnBound { k, sum, low, high });
        }
    }
    Ok(out)
}
