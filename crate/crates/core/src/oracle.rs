//! Exhaustive reference answers for tiny instances.
//!
//! Nothing here touches the incremental state or the chain search; link
//! availability and redundancy are recomputed from the plain scheme every
//! time, so the results can serve as an independent check.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{edge_counts, DemandMatrix, ModelError, NetworkShape, Scheme};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleLimits {
    pub max_m: usize,
    pub max_n: usize,
    pub max_capacity: u32,
    /// Distinct states the enumeration may visit before giving up.
    pub max_states: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        Self {
            max_m: 4,
            max_n: 2,
            max_capacity: 2,
            max_states: 2_000_000,
        }
    }
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("instance exceeds oracle limits: {0}")]
    TooLarge(String),
    #[error("enumeration visited more than {0} states")]
    StateLimit(usize),
    #[error("pair ({0}, {1}) already has all the connections it needs")]
    NoDeficit(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OracleAnswer {
    Found(u64),
    Infeasible,
}

impl OracleAnswer {
    pub fn value(self) -> Option<u64> {
        match self {
            OracleAnswer::Found(v) => Some(v),
            OracleAnswer::Infeasible => None,
        }
    }
}

fn check_limits(shape: &NetworkShape, limits: &OracleLimits) -> Result<(), OracleError> {
    if shape.m() > limits.max_m || shape.n() > limits.max_n || shape.max_capacity() > limits.max_capacity {
        return Err(OracleError::TooLarge(format!(
            "m={} n={} max capacity {} against limits m<={} n<={} c<={}",
            shape.m(),
            shape.n(),
            shape.max_capacity(),
            limits.max_m,
            limits.max_n,
            limits.max_capacity
        )));
    }
    Ok(())
}

/// Scheme as a flat list of upper-triangle counts per top switch.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Flat {
    m: usize,
    counts: Vec<u8>,
}

impl Flat {
    fn from_scheme(x: &Scheme) -> Self {
        let (n, m) = (x.n(), x.m());
        let mut counts = Vec::with_capacity(n * m * (m - 1) / 2);
        for i in 0..n {
            for j in 0..m {
                for k in j + 1..m {
                    counts.push(x.get(i, j, k) as u8);
                }
            }
        }
        Self { m, counts }
    }

    fn slot(&self, i: usize, a: usize, b: usize) -> usize {
        let (j, k) = if a < b { (a, b) } else { (b, a) };
        let per_top = self.m * (self.m - 1) / 2;
        // Offset of row j in the upper triangle.
        let row = j * self.m - j * (j + 1) / 2;
        i * per_top + row + (k - j - 1)
    }

    fn get(&self, i: usize, a: usize, b: usize) -> u32 {
        if a == b {
            0
        } else {
            self.counts[self.slot(i, a, b)] as u32
        }
    }

    fn bump(&mut self, i: usize, a: usize, b: usize, delta: i32) {
        let s = self.slot(i, a, b);
        self.counts[s] = (self.counts[s] as i32 + delta) as u8;
    }

    fn usage(&self, i: usize, a: usize) -> u32 {
        (0..self.m).map(|b| self.get(i, a, b)).sum()
    }

    fn pair_total(&self, n: usize, a: usize, b: usize) -> u32 {
        (0..n).map(|i| self.get(i, a, b)).sum()
    }
}

struct Instance<'a> {
    shape: &'a NetworkShape,
    demand: &'a DemandMatrix,
}

impl Instance<'_> {
    fn redundant(&self, x: &Flat, a: usize, b: usize) -> bool {
        x.pair_total(self.shape.n(), a, b) > self.demand.get(a, b)
    }

    fn has_space(&self, x: &Flat, i: usize, a: usize) -> bool {
        x.usage(i, a) < self.shape.capacity(i, a)
    }

    /// Ways to get a slot on `(T_i, L_a)` for a connection to `L_b`: nothing
    /// to remove if there is space, otherwise one removal per redundant
    /// connection on the link that is not itself an `L_a - L_b` connection.
    fn room_options(&self, x: &Flat, i: usize, a: usize, b: usize) -> Vec<Option<usize>> {
        if self.has_space(x, i, a) {
            return vec![None];
        }
        (0..self.shape.m())
            .filter(|&c| c != a && c != b && x.get(i, a, c) > 0 && self.redundant(x, a, c))
            .map(Some)
            .collect()
    }
}

/// Length of the shortest replacement chain that adds one `L_j0 - L_k0`
/// connection, searched breadth first over every chain up to the default
/// depth ceiling. `D[j0][k0]` must exceed the current count.
pub fn oracle_min_chain_length(
    shape: &NetworkShape,
    d: &DemandMatrix,
    x: &Scheme,
    j0: usize,
    k0: usize,
    limits: &OracleLimits,
) -> Result<OracleAnswer, OracleError> {
    check_limits(shape, limits)?;
    if x.n() != shape.n() || x.m() != shape.m() || d.m() != shape.m() {
        return Err(ModelError::DimensionMismatch("scheme, demand and shape disagree".into()).into());
    }
    if j0 == k0 || j0 >= shape.m() || k0 >= shape.m() {
        return Err(ModelError::InvalidDemand(format!("bad pair ({j0}, {k0})")).into());
    }
    if edge_counts(x).get(j0, k0) >= d.get(j0, k0) {
        return Err(OracleError::NoDeficit(j0, k0));
    }
    let inst = Instance { shape, demand: d };
    let n = shape.n();
    let ceiling = shape.default_depth_ceiling();

    let start = (Flat::from_scheme(x), (j0.min(k0), j0.max(k0)));
    let mut seen: HashSet<(Flat, (usize, usize))> = HashSet::new();
    seen.insert(start.clone());
    let mut level = vec![start];
    for length in 0..=ceiling {
        let mut next = Vec::new();
        for (state, (a, b)) in &level {
            let avail_a: Vec<bool> = (0..n).map(|i| !inst.room_options(state, i, *a, *b).is_empty()).collect();
            let avail_b: Vec<bool> = (0..n).map(|i| !inst.room_options(state, i, *b, *a).is_empty()).collect();
            if (0..n).any(|i| avail_a[i] && avail_b[i]) {
                return Ok(OracleAnswer::Found(length as u64));
            }
            if length == ceiling {
                continue;
            }
            for i in 0..n {
                for (free, blocked, ok) in [(*a, *b, avail_a[i]), (*b, *a, avail_b[i])] {
                    if !ok {
                        continue;
                    }
                    for h in inst.room_options(state, i, free, blocked) {
                        let mut cleared = state.clone();
                        if let Some(c) = h {
                            cleared.bump(i, free, c, -1);
                        }
                        for l in 0..shape.m() {
                            if l == blocked || l == free || cleared.get(i, blocked, l) == 0 {
                                continue;
                            }
                            let mut moved = cleared.clone();
                            moved.bump(i, blocked, l, -1);
                            moved.bump(i, free, blocked, 1);
                            let key = (moved, (blocked.min(l), blocked.max(l)));
                            if seen.insert(key.clone()) {
                                if seen.len() > limits.max_states {
                                    return Err(OracleError::StateLimit(limits.max_states));
                                }
                                next.push(key);
                            }
                        }
                    }
                }
            }
        }
        if next.is_empty() {
            break;
        }
        level = next;
    }
    Ok(OracleAnswer::Infeasible)
}

/// All slices of one top switch within its link capacities, as
/// upper-triangle count vectors.
fn slices_for_top(shape: &NetworkShape, i: usize) -> Vec<Vec<u32>> {
    let m = shape.m();
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|j| (j + 1..m).map(move |k| (j, k))).collect();
    let mut out = Vec::new();
    let mut current = vec![0u32; pairs.len()];
    let mut usage = vec![0u32; m];
    fn rec(
        idx: usize,
        pairs: &[(usize, usize)],
        cap: &dyn Fn(usize) -> u32,
        current: &mut Vec<u32>,
        usage: &mut Vec<u32>,
        out: &mut Vec<Vec<u32>>,
    ) {
        if idx == pairs.len() {
            out.push(current.clone());
            return;
        }
        let (j, k) = pairs[idx];
        let most = (cap(j) - usage[j]).min(cap(k) - usage[k]);
        for v in 0..=most {
            current[idx] = v;
            usage[j] += v;
            usage[k] += v;
            rec(idx + 1, pairs, cap, current, usage, out);
            usage[j] -= v;
            usage[k] -= v;
        }
        current[idx] = 0;
    }
    let cap = |j: usize| shape.capacity(i, j);
    rec(0, &pairs, &cap, &mut current, &mut usage, &mut out);
    out
}

/// Smallest `num_rearrangements(X, Y)` over all valid schemes `Y` that meet
/// `new_d`.
pub fn oracle_min_rearrangements(
    shape: &NetworkShape,
    x: &Scheme,
    new_d: &DemandMatrix,
    limits: &OracleLimits,
) -> Result<OracleAnswer, OracleError> {
    check_limits(shape, limits)?;
    if x.n() != shape.n() || x.m() != shape.m() || new_d.m() != shape.m() {
        return Err(ModelError::DimensionMismatch("scheme, demand and shape disagree".into()).into());
    }
    let m = shape.m();
    let need: Vec<u32> = (0..m)
        .flat_map(|j| (j + 1..m).map(move |k| (j, k)))
        .map(|(j, k)| new_d.get(j, k))
        .collect();

    // Coverage per pair, capped at the requirement, mapped to the cheapest
    // cost of reaching it.
    let mut frontier: HashMap<Vec<u32>, u64> = HashMap::from([(vec![0; need.len()], 0)]);
    for i in 0..shape.n() {
        let slices = slices_for_top(shape, i);
        let original: Vec<u32> = (0..m)
            .flat_map(|j| (j + 1..m).map(move |k| (j, k)))
            .map(|(j, k)| x.get(i, j, k))
            .collect();
        let mut next: HashMap<Vec<u32>, u64> = HashMap::new();
        for (cover, cost) in &frontier {
            for s in &slices {
                // Both mirrored entries differ, hence the factor two.
                let delta: u64 = s
                    .iter()
                    .zip(&original)
                    .map(|(&a, &b)| 2 * a.abs_diff(b) as u64)
                    .sum();
                let merged: Vec<u32> = cover
                    .iter()
                    .zip(s)
                    .zip(&need)
                    .map(|((&c, &v), &r)| (c + v).min(r))
                    .collect();
                let total = cost + delta;
                let entry = next.entry(merged).or_insert(u64::MAX);
                if total < *entry {
                    *entry = total;
                }
                if next.len() > limits.max_states {
                    return Err(OracleError::StateLimit(limits.max_states));
                }
            }
        }
        frontier = next;
    }
    Ok(match frontier.get(&need) {
        Some(&c) => OracleAnswer::Found(c),
        None => OracleAnswer::Infeasible,
    })
}

/// Whether some valid scheme meets `d`.
pub fn oracle_is_schedulable(
    shape: &NetworkShape,
    d: &DemandMatrix,
    limits: &OracleLimits,
) -> Result<bool, OracleError> {
    let empty = Scheme::for_shape(shape);
    Ok(oracle_min_rearrangements(shape, &empty, d, limits)?.value().is_some())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_swap() -> (NetworkShape, DemandMatrix, Scheme) {
        let shape = NetworkShape::uniform(3, 2, 2).unwrap();
        let mut x = Scheme::for_shape(&shape);
        x.add(0, 1, 2);
        x.add(0, 1, 2);
        x.add(1, 0, 1);
        x.add(1, 0, 2);
        let mut d = edge_counts(&x);
        d.set(0, 1, 2);
        (shape, d, x)
    }

    #[test]
    fn empty_network_needs_no_chain() {
        let shape = NetworkShape::uniform(4, 2, 2).unwrap();
        let mut d = DemandMatrix::zeros(4);
        d.set(0, 3, 1);
        let x = Scheme::for_shape(&shape);
        let got = oracle_min_chain_length(&shape, &d, &x, 0, 3, &OracleLimits::default()).unwrap();
        assert_eq!(got, OracleAnswer::Found(0));
    }

    #[test]
    fn constructed_instance_needs_one_swap() {
        let (shape, d, x) = one_swap();
        let got = oracle_min_chain_length(&shape, &d, &x, 0, 1, &OracleLimits::default()).unwrap();
        assert_eq!(got, OracleAnswer::Found(1));
        let rearr = oracle_min_rearrangements(&shape, &x, &d, &OracleLimits::default()).unwrap();
        assert_eq!(rearr, OracleAnswer::Found(6));
    }

    #[test]
    fn blocked_endpoint_is_infeasible() {
        let shape = NetworkShape::uniform(3, 1, 1).unwrap();
        let mut x = Scheme::for_shape(&shape);
        x.add(0, 0, 1);
        let mut d = edge_counts(&x);
        d.set(0, 2, 1);
        let got = oracle_min_chain_length(&shape, &d, &x, 0, 2, &OracleLimits::default()).unwrap();
        assert_eq!(got, OracleAnswer::Infeasible);
    }

    #[test]
    fn same_demand_costs_nothing() {
        let (shape, _, x) = one_swap();
        let e = edge_counts(&x);
        let got = oracle_min_rearrangements(&shape, &x, &e, &OracleLimits::default()).unwrap();
        assert_eq!(got, OracleAnswer::Found(0));
    }

    #[test]
    fn one_free_add_costs_two() {
        let shape = NetworkShape::uniform(4, 2, 2).unwrap();
        let mut x = Scheme::for_shape(&shape);
        x.add(0, 0, 1);
        let mut d = edge_counts(&x);
        d.set(2, 3, 1);
        let got = oracle_min_rearrangements(&shape, &x, &d, &OracleLimits::default()).unwrap();
        assert_eq!(got, OracleAnswer::Found(2));
    }

    #[test]
    fn overfull_demand_is_infeasible() {
        let shape = NetworkShape::uniform(3, 1, 1).unwrap();
        let mut d = DemandMatrix::zeros(3);
        d.set(0, 1, 1);
        d.set(0, 2, 1);
        assert!(!oracle_is_schedulable(&shape, &d, &OracleLimits::default()).unwrap());
    }

    #[test]
    fn limits_are_enforced() {
        let shape = NetworkShape::uniform(5, 2, 2).unwrap();
        let x = Scheme::for_shape(&shape);
        let d = DemandMatrix::zeros(5);
        assert!(matches!(
            oracle_min_rearrangements(&shape, &x, &d, &OracleLimits::default()),
            Err(OracleError::TooLarge(_))
        ));
    }

    #[test]
    fn no_deficit_is_rejected() {
        let (shape, _, x) = one_swap();
        let e = edge_counts(&x);
        assert!(matches!(
            oracle_min_chain_length(&shape, &e, &x, 0, 1, &OracleLimits::default()),
            Err(OracleError::NoDeficit(0, 1))
        ));
    }

    #[test]
    fn flat_index_is_a_bijection() {
        let shape = NetworkShape::uniform(4, 2, 2).unwrap();
        let f = Flat::from_scheme(&Scheme::for_shape(&shape));
        let mut slots: Vec<usize> = (0..2)
            .flat_map(|i| (0..4).flat_map(move |j| (j + 1..4).map(move |k| (i, j, k))))
            .map(|(i, j, k)| f.slot(i, j, k))
            .collect();
        slots.sort();
        assert_eq!(slots, (0..12).collect::<Vec<_>>());
    }
}
