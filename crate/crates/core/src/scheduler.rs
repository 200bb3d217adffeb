//! Drivers that turn demand phases and atomic demand changes into scheduling
//! calls.

use std::io::{self, Write};
use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    num_connections, num_rearrangements, AtomicModification, DemandMatrix, ModKind, ModelError,
    NetworkShape, Scheme,
};
use crate::search::{
    schedule_connection, schedule_connection_refined, SearchConfig, SearchOutcome, SearchStats,
};
use crate::state::{SchedulerState, StateError};
use crate::two_switch::two_switch_bfs;

#[derive(Debug, Error)]
pub enum SchedulerError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error("demand exceeds the port capacity of low-level switch {0}")]
    Infeasible(usize),
    #[error("cannot remove demand between {0} and {1}: none is required")]
    NothingToRemove(usize, usize),
    #[error("no replacement chain for a connection between {0} and {1}")]
    Unschedulable(usize, usize),
    #[error("invalid demand change ({0}, {1})")]
    InvalidChange(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    /// Iterative-deepening chain search.
    #[default]
    Plain,
    /// Sample several minimal chains and keep the cheapest.
    Refined,
    /// Breadth-first search over two top-level switches.
    TwoSwitch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SchedulerConfig {
    #[serde(default)]
    pub algorithm: Algorithm,
    #[serde(default)]
    pub search: SearchConfig,
}

impl SchedulerConfig {
    pub fn plain(search: SearchConfig) -> Self {
        Self {
            algorithm: Algorithm::Plain,
            search,
        }
    }

    pub fn refined(search: SearchConfig) -> Self {
        Self {
            algorithm: Algorithm::Refined,
            search,
        }
    }
}

fn run_search(
    st: &mut SchedulerState,
    j: usize,
    k: usize,
    reference: &Scheme,
    config: &SchedulerConfig,
) -> SearchOutcome {
    match config.algorithm {
        Algorithm::Plain => schedule_connection(st, j, k, &config.search),
        Algorithm::Refined => schedule_connection_refined(st, j, k, reference, &config.search),
        Algorithm::TwoSwitch => two_switch_bfs(st, j, k),
    }
}

/// Statistics of one scheduling call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallStats {
    pub pair: (usize, usize),
    pub found: bool,
    pub wall_ns: u64,
    pub search: SearchStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconfigResult {
    pub new_scheme: Scheme,
    pub mod_log: Vec<AtomicModification>,
    pub num_rearr: u64,
    pub rewiring_ratio: f64,
    pub calls: Vec<CallStats>,
    /// Pairs still short of demand, with the missing count.
    pub residual: Vec<(usize, usize, u32)>,
}

impl ReconfigResult {
    pub fn is_complete(&self) -> bool {
        self.residual.is_empty()
    }

    pub fn wall_ns(&self) -> u64 {
        self.calls.iter().map(|c| c.wall_ns).sum()
    }

    /// Chain lengths of the successful calls.
    pub fn chain_lengths(&self) -> impl Iterator<Item = usize> + '_ {
        self.calls.iter().filter_map(|c| c.search.chain_length)
    }
}

/// Rejects demand that violates a dimension or a port-capacity bound.
pub fn check_feasible(shape: &NetworkShape, d: &DemandMatrix) -> Result<(), SchedulerError> {
    if d.m() != shape.m() {
        return Err(ModelError::DimensionMismatch(format!(
            "demand has {} low-level switches, shape has {}",
            d.m(),
            shape.m()
        ))
        .into());
    }
    match (0..d.m()).find(|&j| d.row_sum(j) > shape.port_capacity(j)) {
        Some(j) => Err(SchedulerError::Infeasible(j)),
        None => Ok(()),
    }
}

/// Moves `st` to demand `new_d`, scheduling every missing connection in
/// uniformly random order. Redundant connections are kept.
pub fn reconfigure_static(
    st: &mut SchedulerState,
    new_d: &DemandMatrix,
    config: &SchedulerConfig,
) -> Result<ReconfigResult, SchedulerError> {
    reconfigure_ordered(st, new_d, config, |_, _| 0)
}

/// Like [`reconfigure_static`] but schedules pairs with a higher `priority`
/// first; ties keep the random order.
pub fn reconfigure_ordered<P>(
    st: &mut SchedulerState,
    new_d: &DemandMatrix,
    config: &SchedulerConfig,
    mut priority: P,
) -> Result<ReconfigResult, SchedulerError>
where
    P: FnMut(usize, usize) -> i64,
{
    check_feasible(st.shape(), new_d)?;
    let original = st.scheme().clone();
    let conn_before = num_connections(st.demand());
    st.replace_demand(new_d)?;

    let mut pending = Vec::new();
    for (j, k, _) in new_d.pairs() {
        for _ in 0..st.deficit(j, k) {
            pending.push((j, k));
        }
    }
    pending.shuffle(st.rng());
    pending.sort_by_key(|&(j, k)| std::cmp::Reverse(priority(j, k)));

    let mut mod_log = Vec::new();
    let mut calls = Vec::with_capacity(pending.len());
    for (j, k) in pending {
        // An earlier chain may have covered this unit already.
        if st.deficit(j, k) == 0 {
            continue;
        }
        let started = Instant::now();
        let out = run_search(st, j, k, &original, config);
        let wall_ns = started.elapsed().as_nanos() as u64;
        if let Ok(chain) = &out.result {
            mod_log.extend(chain.modifications().copied());
        }
        calls.push(CallStats {
            pair: (j, k),
            found: out.is_found(),
            wall_ns,
            search: out.stats,
        });
    }

    let residual = new_d
        .pairs()
        .filter_map(|(j, k, _)| {
            let missing = st.deficit(j, k);
            (missing > 0).then_some((j, k, missing))
        })
        .collect();
    let new_scheme = st.scheme().clone();
    let num_rearr = num_rearrangements(&original, &new_scheme)?;
    let rewiring_ratio =
        crate::model::rewiring_ratio(num_rearr, conn_before, num_connections(new_d));
    Ok(ReconfigResult {
        new_scheme,
        mod_log,
        num_rearr,
        rewiring_ratio,
        calls,
        residual,
    })
}

/// A single added or removed unit of demand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemandChange {
    pub kind: ModKind,
    pub j: usize,
    pub k: usize,
}

impl DemandChange {
    pub fn add(j: usize, k: usize) -> Self {
        Self {
            kind: ModKind::Add,
            j,
            k,
        }
    }

    pub fn remove(j: usize, k: usize) -> Self {
        Self {
            kind: ModKind::Remove,
            j,
            k,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChangeOutcome {
    pub mods: Vec<AtomicModification>,
    /// Present when a chain search ran.
    pub search: Option<SearchStats>,
}

/// Applies one demand change. Removals only lower the demand; the connection
/// stays in place as a redundant one.
pub fn apply_demand_change(
    st: &mut SchedulerState,
    change: DemandChange,
    config: &SchedulerConfig,
) -> Result<ChangeOutcome, SchedulerError> {
    let DemandChange { kind, j, k } = change;
    if j == k || j >= st.m() || k >= st.m() {
        return Err(SchedulerError::InvalidChange(j, k));
    }
    let current = st.demand().get(j, k);
    match kind {
        ModKind::Remove => {
            if current == 0 {
                return Err(SchedulerError::NothingToRemove(j, k));
            }
            st.set_demand(j, k, current - 1)?;
            Ok(ChangeOutcome::default())
        }
        ModKind::Add => {
            st.set_demand(j, k, current + 1)?;
            if st.deficit(j, k) == 0 {
                return Ok(ChangeOutcome::default());
            }
            let reference = match config.algorithm {
                Algorithm::Refined => st.scheme().clone(),
                _ => Scheme::empty(0, 0),
            };
            let out = run_search(st, j, k, &reference, config);
            match out.result {
                Ok(chain) => Ok(ChangeOutcome {
                    mods: chain.modifications().copied().collect(),
                    search: Some(out.stats),
                }),
                Err(_) => {
                    st.set_demand(j, k, current)?;
                    Err(SchedulerError::Unschedulable(j, k))
                }
            }
        }
    }
}

/// Builds a scheme with `E(X) = d` by scheduling every connection in random
/// order on an initially empty network.
pub fn random_scheme_for_demand(
    shape: &NetworkShape,
    d: &DemandMatrix,
    seed: u64,
) -> Result<Scheme, SchedulerError> {
    check_feasible(shape, d)?;
    let mut st = SchedulerState::new(shape.clone(), seed);
    st.replace_demand(d)?;
    let mut pending = Vec::new();
    for (j, k, v) in d.pairs() {
        pending.extend(std::iter::repeat_n((j, k), v as usize));
    }
    pending.shuffle(st.rng());
    let config = SearchConfig::default();
    for (j, k) in pending {
        if !schedule_connection(&mut st, j, k, &config).is_found() {
            return Err(SchedulerError::Unschedulable(j, k));
        }
    }
    Ok(st.scheme().clone())
}

/// One line of a modification log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModRecord {
    pub kind: ModKind,
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub seq: u64,
}

/// Writes `mods` as JSON lines numbered from `first_seq`. Returns the next
/// sequence number.
pub fn write_mod_log<W: Write>(
    mut out: W,
    mods: &[AtomicModification],
    first_seq: u64,
) -> io::Result<u64> {
    let mut seq = first_seq;
    for m in mods {
        let rec = ModRecord {
            kind: m.kind,
            i: m.top,
            j: m.j,
            k: m.k,
            seq,
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
        seq += 1;
    }
    Ok(seq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{edge_counts, satisfies_demand, validate_scheme};

    fn demand(m: usize, entries: &[(usize, usize, u32)]) -> DemandMatrix {
        let mut d = DemandMatrix::zeros(m);
        for &(j, k, v) in entries {
            d.set(j, k, v);
        }
        d
    }

    #[test]
    fn same_demand_needs_no_changes() {
        let shape = NetworkShape::uniform(4, 2, 2).unwrap();
        let mut st = SchedulerState::new(shape, 1);
        let d = demand(4, &[(0, 1, 2), (2, 3, 1), (0, 3, 1)]);
        reconfigure_static(&mut st, &d, &SchedulerConfig::default()).unwrap();
        let e = edge_counts(st.scheme());
        let r = reconfigure_static(&mut st, &e, &SchedulerConfig::default()).unwrap();
        assert!(r.mod_log.is_empty());
        assert_eq!(r.num_rearr, 0);
        assert_eq!(r.rewiring_ratio, 0.0);
    }

    #[test]
    fn build_from_empty_has_ratio_one() {
        let shape = NetworkShape::proportional(
            crate::model::ProportionalWeights::new(vec![1, 1], vec![1, 1, 1, 1]).unwrap(),
        )
        .unwrap();
        let mut st = SchedulerState::new(shape, 3);
        let d = demand(4, &[(0, 1, 2), (2, 3, 2), (0, 2, 2), (1, 3, 2)]);
        let r = reconfigure_static(&mut st, &d, &SchedulerConfig::default()).unwrap();
        assert!(r.is_complete());
        assert_eq!(r.num_rearr, num_connections(&d));
        assert_eq!(r.rewiring_ratio, 1.0);
        assert!(validate_scheme(st.shape(), st.scheme()).unwrap().is_empty());
        assert!(satisfies_demand(st.scheme(), &d).unwrap());
    }

    #[test]
    fn infeasible_demand_is_rejected_without_mutation() {
        let shape = NetworkShape::uniform(3, 1, 1).unwrap();
        let mut st = SchedulerState::new(shape, 0);
        let before = st.clone();
        let d = demand(3, &[(0, 1, 1), (0, 2, 1)]);
        let err = reconfigure_static(&mut st, &d, &SchedulerConfig::default()).unwrap_err();
        assert!(matches!(err, SchedulerError::Infeasible(0)));
        assert_eq!(st, before);
    }

    #[test]
    fn priority_order_is_respected() {
        let shape = NetworkShape::uniform(4, 2, 2).unwrap();
        let mut st = SchedulerState::new(shape, 9);
        let d = demand(4, &[(0, 1, 1), (2, 3, 1), (1, 2, 1)]);
        let r = reconfigure_ordered(&mut st, &d, &SchedulerConfig::default(), |j, k| {
            if (j, k) == (2, 3) {
                10
            } else {
                0
            }
        })
        .unwrap();
        assert_eq!(r.calls[0].pair, (2, 3));
    }

    #[test]
    fn remove_then_add_reuses_connection() {
        let shape = NetworkShape::uniform(3, 2, 2).unwrap();
        let mut st = SchedulerState::new(shape, 0);
        let cfg = SchedulerConfig::default();
        let out = apply_demand_change(&mut st, DemandChange::add(0, 1), &cfg).unwrap();
        assert_eq!(out.mods.len(), 1);
        let out = apply_demand_change(&mut st, DemandChange::remove(0, 1), &cfg).unwrap();
        assert!(out.mods.is_empty());
        assert!(st.is_redundant(0, 1));
        let out = apply_demand_change(&mut st, DemandChange::add(0, 1), &cfg).unwrap();
        assert!(out.mods.is_empty());
        assert!(!st.is_redundant(0, 1));
    }

    #[test]
    fn removal_stream_costs_nothing() {
        let shape = NetworkShape::uniform(6, 3, 2).unwrap();
        let d = demand(6, &[(0, 1, 2), (2, 3, 1), (4, 5, 2), (1, 4, 1)]);
        let mut st = SchedulerState::new(shape, 4);
        reconfigure_static(&mut st, &d, &SchedulerConfig::default()).unwrap();
        let scheme = st.scheme().clone();
        for (j, k, v) in d.pairs() {
            for _ in 0..v {
                let out = apply_demand_change(&mut st, DemandChange::remove(j, k), &SchedulerConfig::default()).unwrap();
                assert!(out.mods.is_empty());
            }
        }
        assert_eq!(st.scheme(), &scheme);
        assert_eq!(st.demand().total(), 0);
    }

    #[test]
    fn remove_without_demand_is_an_error() {
        let mut st = SchedulerState::new(NetworkShape::uniform(3, 1, 1).unwrap(), 0);
        let err = apply_demand_change(&mut st, DemandChange::remove(0, 1), &SchedulerConfig::default());
        assert!(matches!(err, Err(SchedulerError::NothingToRemove(0, 1))));
    }

    #[test]
    fn failed_add_rolls_back() {
        let shape = NetworkShape::uniform(3, 1, 1).unwrap();
        let mut st = SchedulerState::new(shape, 0);
        let cfg = SchedulerConfig::default();
        apply_demand_change(&mut st, DemandChange::add(0, 1), &cfg).unwrap();
        let before = st.clone();
        let err = apply_demand_change(&mut st, DemandChange::add(0, 2), &cfg);
        assert!(matches!(err, Err(SchedulerError::Unschedulable(0, 2))));
        assert_eq!(st, before);
        assert!(st.is_consistent());
    }

    #[test]
    fn random_scheme_matches_demand_exactly() {
        let shape = NetworkShape::uniform(5, 3, 2).unwrap();
        let d = demand(5, &[(0, 1, 2), (1, 2, 2), (3, 4, 3), (0, 4, 1)]);
        for seed in 0..5 {
            let x = random_scheme_for_demand(&shape, &d, seed).unwrap();
            assert!(validate_scheme(&shape, &x).unwrap().is_empty());
            assert_eq!(edge_counts(&x), d);
        }
        let zero = random_scheme_for_demand(&shape, &DemandMatrix::zeros(5), 0).unwrap();
        assert_eq!(zero.connection_count(), 0);
    }

    #[test]
    fn mod_log_lines() {
        let mods = [AtomicModification::add(1, 0, 2), AtomicModification::remove(0, 2, 3)];
        let mut buf = Vec::new();
        let next = write_mod_log(&mut buf, &mods, 5).unwrap();
        assert_eq!(next, 7);
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], r#"{"kind":"add","i":1,"j":0,"k":2,"seq":5}"#);
        assert_eq!(lines[1], r#"{"kind":"remove","i":0,"j":2,"k":3,"seq":6}"#);
    }
}
