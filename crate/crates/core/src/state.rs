//! Incrementally maintained scheduler state.
//!
//! Alongside the scheme itself the state keeps five indices so that the
//! availability and redundancy questions asked by the search are answered with
//! a handful of word operations:
//!
//! | index        | shape          | meaning                                        |
//! |--------------|----------------|------------------------------------------------|
//! | `count_lt`   | `m x n`        | slots used on link `(T_i, L_j)`                |
//! | `avail_lt`   | `m` x `n` bits | link `(T_i, L_j)` has a free slot              |
//! | `count_ll`   | `m x m`        | `E(X)[j][k]`                                   |
//! | `redundant`  | `m` x `m` bits | `E(X)[j][k] > D[j][k]`                         |
//! | `pair_tops`  | `m*m` x `n` bits | some connection `(T_i, L_j, L_k)` exists     |
//!
//! Every mutation goes through [`SchedulerState::add_connection`],
//! [`SchedulerState::remove_connection`] or [`SchedulerState::set_demand`].
//! [`SchedulerState::rebuild_from_scratch`] recomputes all indices from their
//! definitions and is used as the consistency oracle in tests.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::{self, BitRows, Bitset};
use crate::model::{
    validate_scheme, AtomicModification, DemandMatrix, ModKind, ModelError, NetworkShape, Scheme,
    Violation,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StateError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("index out of range or self-connection: ({top}, {j}, {k})")]
    BadIndex { top: usize, j: usize, k: usize },
    #[error("link capacity exceeded adding ({top}, {j}, {k})")]
    CapacityOverflow { top: usize, j: usize, k: usize },
    #[error("no connection ({top}, {j}, {k}) to remove")]
    NoSuchConnection { top: usize, j: usize, k: usize },
    #[error("scheme is not feasible: {0:?}")]
    InfeasibleScheme(Vec<Violation>),
}

/// Result of probing link `(T_i, L_j)` for a free slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkAvailability {
    /// The link has an unused slot.
    Explicit,
    /// The link is full but carries a redundant connection to this partner.
    Redundant(usize),
    Unavailable,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Indices {
    count_lt: Vec<u32>,
    avail_lt: BitRows,
    count_ll: Vec<u32>,
    redundant: BitRows,
    pair_tops: BitRows,
}

/// Plain `(shape, D, X)` triple; the incremental indices are never exported.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub shape: NetworkShape,
    pub demand: DemandMatrix,
    pub scheme: Scheme,
}

#[derive(Debug, Clone)]
pub struct SchedulerState {
    shape: NetworkShape,
    demand: DemandMatrix,
    scheme: Scheme,
    idx: Indices,
    rng: ChaCha8Rng,
}

/// Equality covers the network, demand, scheme and every index; the PRNG
/// position is ignored.
impl PartialEq for SchedulerState {
    fn eq(&self, other: &Self) -> bool {
        self.shape == other.shape
            && self.demand == other.demand
            && self.scheme == other.scheme
            && self.idx == other.idx
    }
}

impl SchedulerState {
    /// Empty scheme, zero demand.
    pub fn new(shape: NetworkShape, seed: u64) -> Self {
        let (n, m) = (shape.n(), shape.m());
        let mut avail_lt = BitRows::new(m, n);
        for j in 0..m {
            for i in 0..n {
                if shape.capacity(i, j) > 0 {
                    avail_lt.set(j, i);
                }
            }
        }
        Self {
            demand: DemandMatrix::zeros(m),
            scheme: Scheme::empty(n, m),
            idx: Indices {
                count_lt: vec![0; m * n],
                avail_lt,
                count_ll: vec![0; m * m],
                redundant: BitRows::new(m, m),
                pair_tops: BitRows::new(m * m, n),
            },
            shape,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Computes every index directly from `(shape, D, X)`.
    pub fn rebuild_from_scratch(
        shape: &NetworkShape,
        demand: &DemandMatrix,
        scheme: &Scheme,
    ) -> Result<Self, StateError> {
        let violations = validate_scheme(shape, scheme)?;
        if !violations.is_empty() {
            return Err(StateError::InfeasibleScheme(violations));
        }
        if demand.m() != shape.m() {
            return Err(ModelError::DimensionMismatch("demand and shape disagree on m".into()).into());
        }
        let (n, m) = (shape.n(), shape.m());
        let mut count_lt = vec![0u32; m * n];
        let mut avail_lt = BitRows::new(m, n);
        let mut count_ll = vec![0u32; m * m];
        let mut redundant = BitRows::new(m, m);
        let mut pair_tops = BitRows::new(m * m, n);
        for j in 0..m {
            for i in 0..n {
                let used: u32 = (0..m).map(|k| scheme.get(i, j, k)).sum();
                count_lt[j * n + i] = used;
                if used < shape.capacity(i, j) {
                    avail_lt.set(j, i);
                }
            }
            for k in 0..m {
                let e: u32 = (0..n).map(|i| scheme.get(i, j, k)).sum();
                count_ll[j * m + k] = e;
                if e > demand.get(j, k) {
                    redundant.set(j, k);
                }
                for i in 0..n {
                    if scheme.get(i, j, k) > 0 {
                        pair_tops.set(j * m + k, i);
                    }
                }
            }
        }
        Ok(Self {
            shape: shape.clone(),
            demand: demand.clone(),
            scheme: scheme.clone(),
            idx: Indices {
                count_lt,
                avail_lt,
                count_ll,
                redundant,
                pair_tops,
            },
            rng: ChaCha8Rng::seed_from_u64(0),
        })
    }

    pub fn from_snapshot(s: &Snapshot, seed: u64) -> Result<Self, StateError> {
        let mut st = Self::rebuild_from_scratch(&s.shape, &s.demand, &s.scheme)?;
        st.reseed(seed);
        Ok(st)
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            shape: self.shape.clone(),
            demand: self.demand.clone(),
            scheme: self.scheme.clone(),
        }
    }

    pub fn reseed(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }

    pub fn shape(&self) -> &NetworkShape {
        &self.shape
    }

    pub fn demand(&self) -> &DemandMatrix {
        &self.demand
    }

    pub fn scheme(&self) -> &Scheme {
        &self.scheme
    }

    pub fn m(&self) -> usize {
        self.shape.m()
    }

    pub fn n(&self) -> usize {
        self.shape.n()
    }

    pub(crate) fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Slots used on `(T_i, L_j)`.
    #[inline]
    pub fn link_usage(&self, i: usize, j: usize) -> u32 {
        self.idx.count_lt[j * self.n() + i]
    }

    /// `E(X)[j][k]`.
    #[inline]
    pub fn pair_count(&self, j: usize, k: usize) -> u32 {
        self.idx.count_ll[j * self.m() + k]
    }

    #[inline]
    pub fn has_free_slot(&self, i: usize, j: usize) -> bool {
        self.idx.avail_lt.get(j, i)
    }

    #[inline]
    pub fn is_redundant(&self, j: usize, k: usize) -> bool {
        self.idx.redundant.get(j, k)
    }

    /// Current deficit `D[j][k] - E(X)[j][k]`, floored at zero.
    pub fn deficit(&self, j: usize, k: usize) -> u32 {
        self.demand.get(j, k).saturating_sub(self.pair_count(j, k))
    }

    fn check_triple(&self, i: usize, j: usize, k: usize) -> Result<(), StateError> {
        if j == k || i >= self.n() || j >= self.m() || k >= self.m() {
            return Err(StateError::BadIndex { top: i, j, k });
        }
        Ok(())
    }

    /// Establishes connection `(T_i, L_j, L_k)`.
    pub fn add_connection(&mut self, i: usize, j: usize, k: usize) -> Result<(), StateError> {
        self.check_triple(i, j, k)?;
        if !self.has_free_slot(i, j) || !self.has_free_slot(i, k) {
            return Err(StateError::CapacityOverflow { top: i, j, k });
        }
        self.add_unchecked(i, j, k);
        Ok(())
    }

    /// Tears down one connection `(T_i, L_j, L_k)`.
    pub fn remove_connection(&mut self, i: usize, j: usize, k: usize) -> Result<(), StateError> {
        self.check_triple(i, j, k)?;
        if self.scheme.get(i, j, k) == 0 {
            return Err(StateError::NoSuchConnection { top: i, j, k });
        }
        self.remove_unchecked(i, j, k);
        Ok(())
    }

    pub fn apply(&mut self, m: &AtomicModification) -> Result<(), StateError> {
        match m.kind {
            ModKind::Add => self.add_connection(m.top, m.j, m.k),
            ModKind::Remove => self.remove_connection(m.top, m.j, m.k),
        }
    }

    pub(crate) fn apply_unchecked(&mut self, m: &AtomicModification) {
        match m.kind {
            ModKind::Add => self.add_unchecked(m.top, m.j, m.k),
            ModKind::Remove => self.remove_unchecked(m.top, m.j, m.k),
        }
    }

    pub(crate) fn add_unchecked(&mut self, i: usize, j: usize, k: usize) {
        let (n, m) = (self.n(), self.m());
        let ix = &mut self.idx;
        ix.count_lt[j * n + i] += 1;
        if ix.count_lt[j * n + i] == self.shape.capacity(i, j) {
            ix.avail_lt.clear(j, i);
        }
        ix.count_lt[k * n + i] += 1;
        if ix.count_lt[k * n + i] == self.shape.capacity(i, k) {
            ix.avail_lt.clear(k, i);
        }
        if ix.count_ll[j * m + k] == self.demand.get(j, k) {
            ix.redundant.set(j, k);
            ix.redundant.set(k, j);
        }
        ix.count_ll[j * m + k] += 1;
        ix.count_ll[k * m + j] += 1;
        if self.scheme.get(i, j, k) == 0 {
            ix.pair_tops.set(j * m + k, i);
            ix.pair_tops.set(k * m + j, i);
        }
        self.scheme.add(i, j, k);
    }

    pub(crate) fn remove_unchecked(&mut self, i: usize, j: usize, k: usize) {
        let (n, m) = (self.n(), self.m());
        let ix = &mut self.idx;
        if ix.count_lt[j * n + i] == self.shape.capacity(i, j) {
            ix.avail_lt.set(j, i);
        }
        ix.count_lt[j * n + i] -= 1;
        if ix.count_lt[k * n + i] == self.shape.capacity(i, k) {
            ix.avail_lt.set(k, i);
        }
        ix.count_lt[k * n + i] -= 1;
        ix.count_ll[j * m + k] -= 1;
        ix.count_ll[k * m + j] -= 1;
        if ix.count_ll[j * m + k] == self.demand.get(j, k) {
            ix.redundant.clear(j, k);
            ix.redundant.clear(k, j);
        }
        self.scheme.remove(i, j, k);
        if self.scheme.get(i, j, k) == 0 {
            ix.pair_tops.clear(j * m + k, i);
            ix.pair_tops.clear(k * m + j, i);
        }
    }

    /// Sets `D[j][k] = D[k][j] = value` and refreshes the redundancy bits.
    pub fn set_demand(&mut self, j: usize, k: usize, value: u32) -> Result<(), StateError> {
        if j == k || j >= self.m() || k >= self.m() {
            return Err(StateError::BadIndex { top: 0, j, k });
        }
        self.demand.set(j, k, value);
        let r = self.pair_count(j, k) > value;
        self.idx.redundant.assign(j, k, r);
        self.idx.redundant.assign(k, j, r);
        Ok(())
    }

    /// Replaces the whole demand matrix pair by pair.
    pub fn replace_demand(&mut self, d: &DemandMatrix) -> Result<(), StateError> {
        if d.m() != self.m() {
            return Err(ModelError::DimensionMismatch("demand and shape disagree on m".into()).into());
        }
        for j in 0..self.m() {
            for k in j + 1..self.m() {
                if self.demand.get(j, k) != d.get(j, k) {
                    self.set_demand(j, k, d.get(j, k))?;
                }
            }
        }
        Ok(())
    }

    /// Top-level switches with an available link to `L_j`, either explicitly
    /// or through a redundant connection.
    pub fn selectable_top_switches(&self, j: usize) -> Bitset {
        let mut out = vec![0u64; self.idx.avail_lt.stride()];
        self.selectable_into(j, None, &mut out);
        Bitset::from_words(self.n(), out)
    }

    /// Writes the selectable set for `L_j` into `out` and returns how many
    /// word-wise OR passes were made. Redundancy towards `exclude` is ignored,
    /// so a pending pair never frees a slot by removing one of its own
    /// connections.
    pub fn selectable_into(&self, j: usize, exclude: Option<usize>, out: &mut [u64]) -> usize {
        out.copy_from_slice(self.idx.avail_lt.row(j));
        let m = self.m();
        let mut passes = 1;
        for k in bits::ones(self.idx.redundant.row(j)) {
            if Some(k) == exclude {
                continue;
            }
            bits::or_into(out, self.idx.pair_tops.row(j * m + k));
            passes += 1;
        }
        passes
    }

    /// Selectable tops for `L_j` ignoring redundancy towards `exclude`, one
    /// flag per top-level switch.
    pub fn selectable_with_exclusion(&self, j: usize, exclude: usize) -> Vec<bool> {
        let mut words = vec![0u64; self.top_words()];
        self.selectable_into(j, Some(exclude), &mut words);
        (0..self.n()).map(|i| bits::test(&words, i)).collect()
    }

    /// Words per top-switch bit-vector.
    pub fn top_words(&self) -> usize {
        self.idx.avail_lt.stride()
    }

    /// Partners `k` such that `(T_i, L_j, L_k)` exists and `L_j - L_k` is
    /// redundant, in ascending order.
    pub fn redundant_partners(&self, i: usize, j: usize, exclude: Option<usize>, out: &mut Vec<usize>) {
        out.clear();
        let m = self.m();
        out.extend(
            bits::ones(self.idx.redundant.row(j))
                .filter(|&k| Some(k) != exclude && self.idx.pair_tops.get(j * m + k, i)),
        );
    }

    /// Explicit slot, a uniformly chosen redundant partner, or nothing.
    pub fn find_redundant_connection(&mut self, i: usize, j: usize) -> LinkAvailability {
        self.find_redundant_excluding(i, j, None)
    }

    pub(crate) fn find_redundant_excluding(
        &mut self,
        i: usize,
        j: usize,
        exclude: Option<usize>,
    ) -> LinkAvailability {
        if self.has_free_slot(i, j) {
            return LinkAvailability::Explicit;
        }
        let m = self.m();
        let mut chosen = None;
        let mut seen = 0u32;
        // Reservoir sampling over the candidate partners.
        for k in bits::ones(self.idx.redundant.row(j)) {
            if Some(k) == exclude || !self.idx.pair_tops.get(j * m + k, i) {
                continue;
            }
            seen += 1;
            if self.rng.gen_range(0..seen) == 0 {
                chosen = Some(k);
            }
        }
        match chosen {
            Some(k) => LinkAvailability::Redundant(k),
            None => LinkAvailability::Unavailable,
        }
    }

    /// Partners `l != skip` of connections on `(T_i, L_j)`, shuffled.
    pub(crate) fn shuffled_partners(&mut self, i: usize, j: usize, skip: usize, out: &mut Vec<usize>) {
        out.clear();
        let m = self.m();
        for l in 0..m {
            if l != skip && self.scheme.get(i, j, l) > 0 {
                out.push(l);
            }
        }
        out.shuffle(&mut self.rng);
    }

    /// Checks every index against a from-scratch rebuild.
    pub fn is_consistent(&self) -> bool {
        match Self::rebuild_from_scratch(&self.shape, &self.demand, &self.scheme) {
            Ok(fresh) => fresh == *self,
            Err(_) => false,
        }
    }
}
