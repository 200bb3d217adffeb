//! Cross-checks the chain search against the exhaustive oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rechain::model::{edge_counts, validate_scheme, NetworkShape};
use rechain::oracle::{oracle_min_chain_length, OracleAnswer, OracleLimits};
use rechain::search::{schedule_connection, SearchConfig};
use rechain::state::SchedulerState;
use serde::Serialize;

use crate::instances::{jitter_demand, open_pair, random_pair, random_scheme, random_shape};
use crate::BenchError;

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct VerifyReport {
    pub instances: usize,
    pub agreed: usize,
    pub infeasible: usize,
    /// `lengths[l]` instances whose minimum chain had length `l`.
    pub lengths: Vec<usize>,
    pub mismatches: Vec<String>,
}

/// Runs `count` random instances with `m <= 4`, `n <= 2`, capacities `<= 2`.
pub fn verify_against_oracle(count: usize, seed: u64) -> Result<VerifyReport, BenchError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let limits = OracleLimits::default();
    let mut rep = VerifyReport::default();
    for case in 0..count {
        let m = rng.gen_range(3..=4);
        let n = rng.gen_range(1..=2);
        let shape = if rng.gen_bool(0.5) {
            NetworkShape::uniform(m, n, 2)?
        } else {
            random_shape(&mut rng, m, n, 2)
        };
        let attempts = rng.gen_range(4..40);
        let x = random_scheme(&mut rng, &shape, attempts);
        let mut d = jitter_demand(&mut rng, &x);
        let (j, k) = match open_pair(&mut rng, &shape, &x) {
            Some(p) if rng.gen_bool(0.8) => p,
            _ => random_pair(&mut rng, m),
        };
        let before = edge_counts(&x).get(j, k);
        d.set(j, k, before + 1);

        let expected = oracle_min_chain_length(&shape, &d, &x, j, k, &limits)
            .map_err(|e| BenchError::Runtime(format!("oracle failed: {e}")))?;
        let mut st = SchedulerState::rebuild_from_scratch(&shape, &d, &x)?;
        st.reseed(seed ^ case as u64);
        let out = schedule_connection(&mut st, j, k, &SearchConfig::unbounded());
        rep.instances += 1;
        let ok = match (expected, &out.result) {
            (OracleAnswer::Found(len), Ok(chain)) => {
                let valid = validate_scheme(&shape, st.scheme())?.is_empty()
                    && edge_counts(st.scheme()).get(j, k) == before + 1;
                if valid && chain.length as u64 == len {
                    if rep.lengths.len() <= chain.length {
                        rep.lengths.resize(chain.length + 1, 0);
                    }
                    rep.lengths[chain.length] += 1;
                    true
                } else {
                    false
                }
            }
            (OracleAnswer::Infeasible, Err(_)) => {
                rep.infeasible += 1;
                true
            }
            _ => false,
        };
        if ok && st.is_consistent() {
            rep.agreed += 1;
        } else {
            rep.mismatches.push(format!(
                "case {case}: oracle {expected:?}, search {:?}, pair ({j},{k})",
                out.result.as_ref().map(|c| c.length)
            ));
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_batch_agrees() {
        let rep = verify_against_oracle(50, 3).unwrap();
        assert_eq!(rep.agreed, 50, "{:?}", rep.mismatches);
    }
}
