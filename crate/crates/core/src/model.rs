//! Domain types for two-level bidirectional Clos networks.
//!
//! A network has `m` low-level switches `L_0..L_{m-1}` and `n` top-level
//! switches `T_0..T_{n-1}`. Every low-level switch has one bidirectional link
//! to every top-level switch; `C[i][j]` is the number of connection slots on
//! the link `(T_i, L_j)`. A connection `(T_i, L_j, L_k)` occupies one slot on
//! each of its two links.
//!
//! All matrices are stored densely and row-major. The JSON forms carry
//! explicit `m`/`n` fields next to nested arrays.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Upper bound on `m` and `n`.
pub const MAX_DIM: usize = 1024;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid network shape: {0}")]
    InvalidShape(String),
    #[error("invalid demand matrix: {0}")]
    InvalidDemand(String),
    #[error("invalid scheme: {0}")]
    InvalidScheme(String),
    #[error("total link capacity is zero")]
    ZeroCapacity,
}

/// Positive integer weights that generate a proportional capacity matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProportionalWeights {
    pub top: Vec<u32>,
    pub low: Vec<u32>,
}

impl ProportionalWeights {
    pub fn new(top: Vec<u32>, low: Vec<u32>) -> Result<Self, ModelError> {
        if top.is_empty() || low.len() < 2 {
            return Err(ModelError::InvalidShape(
                "need at least one top weight and two low weights".into(),
            ));
        }
        if top.iter().chain(low.iter()).any(|&w| w == 0) {
            return Err(ModelError::InvalidShape("weights must be positive".into()));
        }
        Ok(Self { top, low })
    }

    pub fn capacities(&self) -> Vec<Vec<u32>> {
        capacities_from_weights(&self.top, &self.low)
    }
}

/// `C[i][j] = 2 * top[i] * low[j]`.
pub fn capacities_from_weights(top: &[u32], low: &[u32]) -> Vec<Vec<u32>> {
    top.iter()
        .map(|&wt| low.iter().map(|&wl| 2 * wt * wl).collect())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ShapeRepr", into = "ShapeRepr")]
pub struct NetworkShape {
    m: usize,
    n: usize,
    /// `n * m`, indexed `[i * m + j]`.
    capacity: Vec<u32>,
    weights: Option<ProportionalWeights>,
}

#[derive(Serialize, Deserialize)]
struct ShapeRepr {
    m: usize,
    n: usize,
    capacity: Vec<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<ProportionalWeights>,
}

impl TryFrom<ShapeRepr> for NetworkShape {
    type Error = ModelError;

    fn try_from(r: ShapeRepr) -> Result<Self, ModelError> {
        let mut shape = NetworkShape::new(r.m, r.n, r.capacity)?;
        if let Some(w) = r.weights {
            if w.capacities() != shape.capacity_rows() {
                return Err(ModelError::InvalidShape(
                    "weights do not generate the given capacities".into(),
                ));
            }
            shape.weights = Some(w);
        }
        Ok(shape)
    }
}

impl From<NetworkShape> for ShapeRepr {
    fn from(s: NetworkShape) -> Self {
        ShapeRepr {
            m: s.m,
            n: s.n,
            capacity: s.capacity_rows(),
            weights: s.weights,
        }
    }
}

impl NetworkShape {
    /// `capacity` is `n` rows of `m` entries.
    pub fn new(m: usize, n: usize, capacity: Vec<Vec<u32>>) -> Result<Self, ModelError> {
        if m < 2 || n < 1 {
            return Err(ModelError::InvalidShape(format!(
                "need m >= 2 and n >= 1, got m={m}, n={n}"
            )));
        }
        if m > MAX_DIM || n > MAX_DIM {
            return Err(ModelError::InvalidShape(format!(
                "m and n are limited to {MAX_DIM}"
            )));
        }
        if capacity.len() != n || capacity.iter().any(|row| row.len() != m) {
            return Err(ModelError::DimensionMismatch(format!(
                "capacity matrix must be {n}x{m}"
            )));
        }
        Ok(Self {
            m,
            n,
            capacity: capacity.into_iter().flatten().collect(),
            weights: None,
        })
    }

    /// Every link has capacity `c`.
    pub fn uniform(m: usize, n: usize, c: u32) -> Result<Self, ModelError> {
        Self::new(m, n, vec![vec![c; m]; n])
    }

    pub fn proportional(weights: ProportionalWeights) -> Result<Self, ModelError> {
        let mut shape = Self::new(weights.low.len(), weights.top.len(), weights.capacities())?;
        shape.weights = Some(weights);
        Ok(shape)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn capacity(&self, i: usize, j: usize) -> u32 {
        self.capacity[i * self.m + j]
    }

    pub fn capacity_rows(&self) -> Vec<Vec<u32>> {
        self.capacity.chunks(self.m).map(|r| r.to_vec()).collect()
    }

    pub fn weights(&self) -> Option<&ProportionalWeights> {
        self.weights.as_ref()
    }

    /// `sum_i C[i][j]`: how many connections `L_j` can terminate.
    pub fn port_capacity(&self, j: usize) -> u64 {
        (0..self.n).map(|i| self.capacity(i, j) as u64).sum()
    }

    pub fn total_capacity(&self) -> u64 {
        self.capacity.iter().map(|&c| c as u64).sum()
    }

    pub fn max_capacity(&self) -> u32 {
        self.capacity.iter().copied().max().unwrap_or(0)
    }

    pub fn all_even(&self) -> bool {
        self.capacity.iter().all(|c| c % 2 == 0)
    }

    /// Depth ceiling for replacement-chain search: `sum_j W_L[j] - 1` for
    /// proportional shapes, `m * max(C) / 2` otherwise.
    pub fn default_depth_ceiling(&self) -> usize {
        match &self.weights {
            Some(w) => (w.low.iter().map(|&x| x as usize).sum::<usize>()).saturating_sub(1),
            None => (self.m * self.max_capacity() as usize / 2).max(1),
        }
    }
}

/// Symmetric `m x m` matrix of required connections with a zero diagonal.
///
/// The same type holds edge counts `E(X)`, which obey the same invariants.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "DemandRepr", into = "DemandRepr")]
pub struct DemandMatrix {
    m: usize,
    data: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
struct DemandRepr {
    m: usize,
    demand: Vec<Vec<u32>>,
}

impl TryFrom<DemandRepr> for DemandMatrix {
    type Error = ModelError;

    fn try_from(r: DemandRepr) -> Result<Self, ModelError> {
        if r.demand.len() != r.m {
            return Err(ModelError::DimensionMismatch(format!(
                "demand has {} rows, expected {}",
                r.demand.len(),
                r.m
            )));
        }
        DemandMatrix::from_rows(r.demand)
    }
}

impl From<DemandMatrix> for DemandRepr {
    fn from(d: DemandMatrix) -> Self {
        DemandRepr {
            m: d.m,
            demand: d.rows(),
        }
    }
}

impl DemandMatrix {
    pub fn zeros(m: usize) -> Self {
        Self {
            m,
            data: vec![0; m * m],
        }
    }

    pub fn from_rows(rows: Vec<Vec<u32>>) -> Result<Self, ModelError> {
        let m = rows.len();
        if rows.iter().any(|r| r.len() != m) {
            return Err(ModelError::DimensionMismatch("demand matrix must be square".into()));
        }
        let d = Self {
            m,
            data: rows.into_iter().flatten().collect(),
        };
        for j in 0..m {
            if d.get(j, j) != 0 {
                return Err(ModelError::InvalidDemand(format!("D[{j}][{j}] must be 0")));
            }
            for k in j + 1..m {
                if d.get(j, k) != d.get(k, j) {
                    return Err(ModelError::InvalidDemand(format!(
                        "D[{j}][{k}] != D[{k}][{j}]"
                    )));
                }
            }
        }
        Ok(d)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize) -> u32 {
        self.data[j * self.m + k]
    }

    /// Sets both `D[j][k]` and `D[k][j]`.
    ///
    /// Panics if `j == k` and `v != 0`.
    pub fn set(&mut self, j: usize, k: usize, v: u32) {
        assert!(j != k || v == 0, "diagonal entries must stay zero");
        self.data[j * self.m + k] = v;
        self.data[k * self.m + j] = v;
    }

    pub fn rows(&self) -> Vec<Vec<u32>> {
        self.data.chunks(self.m).map(|r| r.to_vec()).collect()
    }

    pub fn row_sum(&self, j: usize) -> u64 {
        self.data[j * self.m..(j + 1) * self.m]
            .iter()
            .map(|&x| x as u64)
            .sum()
    }

    pub fn total(&self) -> u64 {
        self.data.iter().map(|&x| x as u64).sum()
    }

    /// `(j, k, D[j][k])` for `j < k` with a non-zero entry.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        (0..self.m).flat_map(move |j| {
            (j + 1..self.m).filter_map(move |k| {
                let v = self.get(j, k);
                (v > 0).then_some((j, k, v))
            })
        })
    }

    /// Feasibility of a bidirectional demand: every row sum fits the port
    /// capacity of its low-level switch.
    pub fn is_feasible(&self, shape: &NetworkShape) -> bool {
        self.m == shape.m() && (0..self.m).all(|j| self.row_sum(j) <= shape.port_capacity(j))
    }
}

/// `n x m x m` connection counts; slice `i` lists connections through `T_i`.
///
/// The type does not force symmetry on raw construction so that
/// [`validate_scheme`] can report breaches; [`Scheme::add`] and
/// [`Scheme::remove`] always touch both mirrored entries.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "SchemeRepr", into = "SchemeRepr")]
pub struct Scheme {
    n: usize,
    m: usize,
    data: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
struct SchemeRepr {
    m: usize,
    n: usize,
    connections: Vec<Vec<Vec<u32>>>,
}

impl TryFrom<SchemeRepr> for Scheme {
    type Error = ModelError;

    fn try_from(r: SchemeRepr) -> Result<Self, ModelError> {
        if r.connections.len() != r.n {
            return Err(ModelError::DimensionMismatch(format!(
                "scheme has {} slices, expected {}",
                r.connections.len(),
                r.n
            )));
        }
        Scheme::from_nested(r.m, r.connections)
    }
}

impl From<Scheme> for SchemeRepr {
    fn from(s: Scheme) -> Self {
        SchemeRepr {
            m: s.m,
            n: s.n,
            connections: s.nested(),
        }
    }
}

impl Scheme {
    pub fn empty(n: usize, m: usize) -> Self {
        Self {
            n,
            m,
            data: vec![0; n * m * m],
        }
    }

    pub fn for_shape(shape: &NetworkShape) -> Self {
        Self::empty(shape.n(), shape.m())
    }

    pub fn from_nested(m: usize, slices: Vec<Vec<Vec<u32>>>) -> Result<Self, ModelError> {
        let n = slices.len();
        if slices
            .iter()
            .any(|s| s.len() != m || s.iter().any(|r| r.len() != m))
        {
            return Err(ModelError::DimensionMismatch(format!(
                "every scheme slice must be {m}x{m}"
            )));
        }
        Ok(Self {
            n,
            m,
            data: slices.into_iter().flatten().flatten().collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.m + j) * self.m + k
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> u32 {
        self.data[self.idx(i, j, k)]
    }

    /// Writes a single entry without touching its mirror.
    pub fn set_raw(&mut self, i: usize, j: usize, k: usize, v: u32) {
        let x = self.idx(i, j, k);
        self.data[x] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, k: usize) {
        let (a, b) = (self.idx(i, j, k), self.idx(i, k, j));
        self.data[a] += 1;
        self.data[b] += 1;
    }

    /// Panics if the connection does not exist.
    pub fn remove(&mut self, i: usize, j: usize, k: usize) {
        let (a, b) = (self.idx(i, j, k), self.idx(i, k, j));
        assert!(self.data[a] > 0 && self.data[b] > 0, "no connection ({i},{j},{k})");
        self.data[a] -= 1;
        self.data[b] -= 1;
    }

    /// `sum_k X[i][j][k]`: slots used on link `(T_i, L_j)`.
    pub fn usage(&self, i: usize, j: usize) -> u32 {
        let s = self.idx(i, j, 0);
        self.data[s..s + self.m].iter().sum()
    }

    pub fn apply(&mut self, m: &AtomicModification) {
        match m.kind {
            ModKind::Add => self.add(m.top, m.j, m.k),
            ModKind::Remove => self.remove(m.top, m.j, m.k),
        }
    }

    pub fn nested(&self) -> Vec<Vec<Vec<u32>>> {
        self.data
            .chunks(self.m * self.m)
            .map(|s| s.chunks(self.m).map(|r| r.to_vec()).collect())
            .collect()
    }

    /// Number of physical connections (each counted once).
    pub fn connection_count(&self) -> u64 {
        self.data.iter().map(|&x| x as u64).sum::<u64>() / 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModKind {
    Add,
    Remove,
}

/// `Add(i, j, k)` or `Remove(i, j, k)` on connection `(T_i, L_j, L_k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AtomicModification {
    pub kind: ModKind,
    #[serde(rename = "i")]
    pub top: usize,
    pub j: usize,
    pub k: usize,
}

impl AtomicModification {
    pub fn add(top: usize, j: usize, k: usize) -> Self {
        Self {
            kind: ModKind::Add,
            top,
            j,
            k,
        }
    }

    pub fn remove(top: usize, j: usize, k: usize) -> Self {
        Self {
            kind: ModKind::Remove,
            top,
            j,
            k,
        }
    }

    pub fn inverse(&self) -> Self {
        let kind = match self.kind {
            ModKind::Add => ModKind::Remove,
            ModKind::Remove => ModKind::Add,
        };
        Self { kind, ..*self }
    }

    /// Unordered low-switch pair `(min, max)`.
    pub fn pair(&self) -> (usize, usize) {
        (self.j.min(self.k), self.j.max(self.k))
    }

    pub fn is_valid_for(&self, shape: &NetworkShape) -> bool {
        self.j != self.k && self.top < shape.n() && self.j < shape.m() && self.k < shape.m()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// `sum_k X[i][j][k] > C[i][j]`.
    CapacityExceeded {
        top: usize,
        low: usize,
        used: u64,
        capacity: u32,
    },
    Asymmetric {
        top: usize,
        j: usize,
        k: usize,
    },
    NonZeroDiagonal {
        top: usize,
        j: usize,
    },
}

fn check_scheme_dims(shape: &NetworkShape, x: &Scheme) -> Result<(), ModelError> {
    if x.n() != shape.n() || x.m() != shape.m() {
        return Err(ModelError::DimensionMismatch(format!(
            "scheme is {}x{}x{}, shape is n={} m={}",
            x.n(),
            x.m(),
            x.m(),
            shape.n(),
            shape.m()
        )));
    }
    Ok(())
}

/// Every capacity, symmetry and diagonal breach of `x` on `shape`.
pub fn validate_scheme(shape: &NetworkShape, x: &Scheme) -> Result<Vec<Violation>, ModelError> {
    check_scheme_dims(shape, x)?;
    let (n, m) = (shape.n(), shape.m());
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..m {
            if x.get(i, j, j) != 0 {
                out.push(Violation::NonZeroDiagonal { top: i, j });
            }
            for k in j + 1..m {
                if x.get(i, j, k) != x.get(i, k, j) {
                    out.push(Violation::Asymmetric { top: i, j, k });
                }
            }
            let used: u64 = (0..m).map(|k| x.get(i, j, k) as u64).sum();
            if used > shape.capacity(i, j) as u64 {
                out.push(Violation::CapacityExceeded {
                    top: i,
                    low: j,
                    used,
                    capacity: shape.capacity(i, j),
                });
            }
        }
    }
    Ok(out)
}

/// `sum_i X[i][j][k] >= D[j][k]` for every pair.
pub fn satisfies_demand(x: &Scheme, d: &DemandMatrix) -> Result<bool, ModelError> {
    if x.m() != d.m() {
        return Err(ModelError::DimensionMismatch(format!(
            "scheme has m={}, demand has m={}",
            x.m(),
            d.m()
        )));
    }
    let e = edge_counts(x);
    Ok(e.data.iter().zip(&d.data).all(|(have, need)| have >= need))
}

/// `E(X)[j][k] = sum_i X[i][j][k]`.
pub fn edge_counts(x: &Scheme) -> DemandMatrix {
    let m = x.m();
    let mut e = DemandMatrix::zeros(m);
    for slice in x.data.chunks(m * m) {
        for (acc, v) in e.data.iter_mut().zip(slice) {
            *acc += v;
        }
    }
    e
}

/// `sum_{i,j,k} |X[i][j][k] - Y[i][j][k]|` over the full symmetric slices, so
/// one added bidirectional connection counts 2.
pub fn num_rearrangements(x: &Scheme, y: &Scheme) -> Result<u64, ModelError> {
    if x.n() != y.n() || x.m() != y.m() {
        return Err(ModelError::DimensionMismatch(
            "schemes have different dimensions".into(),
        ));
    }
    Ok(x.data
        .iter()
        .zip(&y.data)
        .map(|(&a, &b)| a.abs_diff(b) as u64)
        .sum())
}

/// `sum_{j,k} D[j][k]`, both triangle halves included.
pub fn num_connections(d: &DemandMatrix) -> u64 {
    d.total()
}

/// Total demand over total capacity.
pub fn network_load(shape: &NetworkShape, d: &DemandMatrix) -> Result<f64, ModelError> {
    if shape.m() != d.m() {
        return Err(ModelError::DimensionMismatch(
            "demand and shape disagree on m".into(),
        ));
    }
    let cap = shape.total_capacity();
    if cap == 0 {
        return Err(ModelError::ZeroCapacity);
    }
    Ok(d.total() as f64 / cap as f64)
}

/// `NumRearr / (NumConn(before) + NumConn(after))`, or 0 when both demands
/// are empty.
pub fn rewiring_ratio(num_rearr: u64, conn_before: u64, conn_after: u64) -> f64 {
    let denom = conn_before + conn_after;
    if denom == 0 {
        0.0
    } else {
        num_rearr as f64 / denom as f64
    }
}
