//! Breadth-first chain search restricted to two top-level switches.
//!
//! The chain alternates between switches `A` and `B`: the new pair is placed
//! on `A`, the connection it displaces moves to `B`, the one displaced there
//! moves back to `A`, and so on. Each link `(T, L_x)` may be used as a
//! displacement point at most twice per switch pair, which bounds the search
//! to `O(m * c)` states per pair.

use std::collections::VecDeque;

use rand::seq::SliceRandom;

use crate::model::AtomicModification;
use crate::search::{ChainMod, NotFound, ReplacementChain, SearchOutcome, SearchStats};
use crate::state::{LinkAvailability, SchedulerState};

#[derive(Debug, Clone, Copy)]
struct Node {
    top: usize,
    /// Endpoint whose slot on `top` is already free.
    free: usize,
    /// Endpoint whose slot on `top` is made by displacing a connection.
    blocked: usize,
    parent: Option<usize>,
}

/// Schedules `L_j0 - L_k0` using at most two top-level switches.
///
/// On success the chain is applied to `st`; otherwise `st` is unchanged.
pub fn two_switch_bfs(st: &mut SchedulerState, j0: usize, k0: usize) -> SearchOutcome {
    let mut stats = SearchStats::default();
    if j0 == k0 || j0 >= st.m() || k0 >= st.m() {
        return SearchOutcome {
            result: Err(NotFound),
            stats,
        };
    }
    let sel_j = st.selectable_with_exclusion(j0, k0);
    let sel_k = st.selectable_with_exclusion(k0, j0);

    let mut direct: Vec<usize> = (0..st.n()).filter(|&i| sel_j[i] && sel_k[i]).collect();
    if !direct.is_empty() {
        stats.nodes = 1;
        direct.shuffle(st.rng());
        let chain = replay(st, (j0, k0), &[Node {
            top: direct[0],
            free: j0,
            blocked: k0,
            parent: None,
        }])
        .expect("selectable top must host the pair");
        stats.chain_length = Some(0);
        return SearchOutcome {
            result: Ok(chain),
            stats,
        };
    }

    let n = st.n();
    let mut starts = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            if sel_j[a] && sel_k[b] {
                starts.push((a, b, j0, k0));
            }
            if sel_k[a] && sel_j[b] {
                starts.push((a, b, k0, j0));
            }
        }
    }
    starts.shuffle(st.rng());

    for (a, b, p, q) in starts {
        stats.iterations += 1;
        if let Some(chain) = bfs_pair(st, a, b, p, q, (j0, k0), &mut stats) {
            stats.chain_length = Some(chain.length);
            return SearchOutcome {
                result: Ok(chain),
                stats,
            };
        }
    }
    SearchOutcome {
        result: Err(NotFound),
        stats,
    }
}

/// Searches chains that start on `a` with `p` free and alternate with `b`,
/// where `q` is known to be available on `b`.
fn bfs_pair(
    st: &mut SchedulerState,
    a: usize,
    b: usize,
    p: usize,
    q: usize,
    target: (usize, usize),
    stats: &mut SearchStats,
) -> Option<ReplacementChain> {
    let m = st.m();
    let slot = |top: usize, x: usize| if top == a { x } else { m + x };
    let mut visits = vec![0u8; 2 * m];
    let mut nodes = vec![Node {
        top: a,
        free: p,
        blocked: q,
        parent: None,
    }];
    let mut queue = VecDeque::from([0usize]);
    visits[slot(a, q)] += 1;
    let mut iteration_nodes = 0u64;

    while let Some(id) = queue.pop_front() {
        iteration_nodes += 1;
        let node = nodes[id];
        let terminal = id != 0
            && st
                .selectable_with_exclusion(node.blocked, node.free)
                .get(node.top)
                .copied()
                .unwrap_or(false);
        if terminal {
            let path = path_to(&nodes, id);
            if let Some(chain) = replay(st, target, &path) {
                stats.nodes += iteration_nodes;
                stats.max_iteration_nodes = stats.max_iteration_nodes.max(iteration_nodes);
                return Some(chain);
            }
            continue;
        }
        let other = if node.top == a { b } else { a };
        for y in 0..m {
            if y == node.free || st.scheme().get(node.top, node.blocked, y) == 0 {
                continue;
            }
            let s = slot(other, y);
            if visits[s] >= 2 {
                continue;
            }
            visits[s] += 1;
            nodes.push(Node {
                top: other,
                free: node.blocked,
                blocked: y,
                parent: Some(id),
            });
            queue.push_back(nodes.len() - 1);
        }
    }
    stats.nodes += iteration_nodes;
    stats.max_iteration_nodes = stats.max_iteration_nodes.max(iteration_nodes);
    None
}

fn path_to(nodes: &[Node], mut id: usize) -> Vec<Node> {
    let mut path = vec![nodes[id]];
    while let Some(p) = nodes[id].parent {
        path.push(nodes[p]);
        id = p;
    }
    path.reverse();
    path
}

/// Applies a BFS path with checked operations, harvesting redundant
/// connections where a link is only implicitly available. Rolls back and
/// returns `None` if any step is not possible on the current state.
fn replay(st: &mut SchedulerState, target: (usize, usize), path: &[Node]) -> Option<ReplacementChain> {
    let mut log: Vec<ChainMod> = Vec::new();
    let ok = (|| {
        for (t, node) in path.iter().enumerate() {
            make_room(st, node.top, node.free, node.blocked, &mut log)?;
            if let Some(next) = path.get(t + 1) {
                let op = AtomicModification::remove(node.top, node.blocked, next.blocked);
                st.apply(&op).ok()?;
                log.push(ChainMod { op, harvest: false });
            } else {
                make_room(st, node.top, node.blocked, node.free, &mut log)?;
            }
            let op = AtomicModification::add(node.top, node.free, node.blocked);
            st.apply(&op).ok()?;
            log.push(ChainMod { op, harvest: false });
        }
        Some(())
    })();
    if ok.is_none() {
        for c in log.iter().rev() {
            st.apply_unchecked(&c.op.inverse());
        }
        return None;
    }
    Some(ReplacementChain {
        target,
        length: path.len() - 1,
        mods: log,
    })
}

fn make_room(
    st: &mut SchedulerState,
    i: usize,
    j: usize,
    partner: usize,
    log: &mut Vec<ChainMod>,
) -> Option<()> {
    match st.find_redundant_excluding(i, j, Some(partner)) {
        LinkAvailability::Explicit => Some(()),
        LinkAvailability::Redundant(x) => {
            let op = AtomicModification::remove(i, j, x);
            st.apply_unchecked(&op);
            log.push(ChainMod { op, harvest: true });
            Some(())
        }
        LinkAvailability::Unavailable => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{satisfies_demand, validate_scheme, NetworkShape};

    #[test]
    fn direct_placement_on_empty_network() {
        let mut st = SchedulerState::new(NetworkShape::uniform(3, 2, 1).unwrap(), 1);
        st.set_demand(0, 2, 1).unwrap();
        let chain = two_switch_bfs(&mut st, 0, 2).result.unwrap();
        assert_eq!(chain.length, 0);
        assert_eq!(st.pair_count(0, 2), 1);
    }

    #[test]
    fn finds_single_swap() {
        let shape = NetworkShape::uniform(3, 2, 2).unwrap();
        let mut st = SchedulerState::new(shape, 5);
        st.set_demand(0, 1, 1).unwrap();
        st.set_demand(0, 2, 1).unwrap();
        st.set_demand(1, 2, 2).unwrap();
        st.add_connection(0, 1, 2).unwrap();
        st.add_connection(0, 1, 2).unwrap();
        st.add_connection(1, 0, 1).unwrap();
        st.add_connection(1, 0, 2).unwrap();
        st.set_demand(0, 1, 2).unwrap();
        let chain = two_switch_bfs(&mut st, 0, 1).result.unwrap();
        assert_eq!(chain.length, 1);
        assert!(chain.alternates());
        assert!(validate_scheme(st.shape(), st.scheme()).unwrap().is_empty());
        assert!(satisfies_demand(st.scheme(), st.demand()).unwrap());
        assert!(st.is_consistent());
    }

    #[test]
    fn failure_leaves_state_unchanged() {
        let shape = NetworkShape::uniform(3, 1, 1).unwrap();
        let mut st = SchedulerState::new(shape, 0);
        st.set_demand(0, 1, 1).unwrap();
        st.add_connection(0, 0, 1).unwrap();
        st.set_demand(0, 2, 1).unwrap();
        let before = st.clone();
        assert!(two_switch_bfs(&mut st, 0, 2).result.is_err());
        assert_eq!(st, before);
    }

    #[test]
    fn alternates_between_two_switches_only() {
        let shape = NetworkShape::uniform(4, 3, 2).unwrap();
        let mut st = SchedulerState::new(shape, 3);
        // Fill the network with a random valid scheme, then request more.
        let pairs = [(0, 1), (2, 3), (0, 2), (1, 3), (0, 3), (1, 2)];
        for &(j, k) in pairs.iter().cycle().take(12) {
            let v = st.demand().get(j, k) + 1;
            st.set_demand(j, k, v).unwrap();
            let _ = two_switch_bfs(&mut st, j, k);
        }
        assert!(validate_scheme(st.shape(), st.scheme()).unwrap().is_empty());
        assert!(st.is_consistent());
        let v = st.demand().get(0, 1) + 1;
        st.set_demand(0, 1, v).unwrap();
        if let Ok(chain) = two_switch_bfs(&mut st, 0, 1).result {
            let tops: std::collections::BTreeSet<usize> =
                chain.core().iter().map(|m| m.top).collect();
            assert!(tops.len() <= 2);
            assert!(chain.alternates());
        }
    }
}
