//! Random small instances for cross-checks.

use rand::seq::SliceRandom;
use rand::Rng;
use rechain::model::{edge_counts, DemandMatrix, NetworkShape, Scheme};

/// Capacities drawn from `0..=max_c`, at least one nonzero.
pub fn random_shape(rng: &mut impl Rng, m: usize, n: usize, max_c: u32) -> NetworkShape {
    loop {
        let caps: Vec<Vec<u32>> = (0..n)
            .map(|_| (0..m).map(|_| rng.gen_range(0..=max_c)).collect())
            .collect();
        if caps.iter().flatten().any(|&c| c > 0) {
            return NetworkShape::new(m, n, caps).expect("generated shape is valid");
        }
    }
}

/// Places random connections wherever both links have room.
pub fn random_scheme(rng: &mut impl Rng, shape: &NetworkShape, attempts: usize) -> Scheme {
    let (m, n) = (shape.m(), shape.n());
    let mut x = Scheme::for_shape(shape);
    for _ in 0..attempts {
        let i = rng.gen_range(0..n);
        let (j, k) = random_pair(rng, m);
        if x.usage(i, j) < shape.capacity(i, j) && x.usage(i, k) < shape.capacity(i, k) {
            x.add(i, j, k);
        }
    }
    x
}

/// `E(X)` with every pair moved by at most one.
pub fn jitter_demand(rng: &mut impl Rng, x: &Scheme) -> DemandMatrix {
    let mut d = edge_counts(x);
    let m = d.m();
    for j in 0..m {
        for k in j + 1..m {
            let v = d.get(j, k) as i64 + rng.gen_range(-1..=1);
            d.set(j, k, v.max(0) as u32);
        }
    }
    d
}

pub fn random_pair(rng: &mut impl Rng, m: usize) -> (usize, usize) {
    let j = rng.gen_range(0..m);
    let mut k = rng.gen_range(0..m - 1);
    if k >= j {
        k += 1;
    }
    (j, k)
}

/// A pair whose endpoints both have spare capacity on some link.
pub fn open_pair(rng: &mut impl Rng, shape: &NetworkShape, x: &Scheme) -> Option<(usize, usize)> {
    let open: Vec<usize> = (0..shape.m())
        .filter(|&j| (0..shape.n()).any(|i| x.usage(i, j) < shape.capacity(i, j)))
        .collect();
    if open.len() < 2 {
        return None;
    }
    let picked: Vec<usize> = open.choose_multiple(rng, 2).copied().collect();
    Some((picked[0], picked[1]))
}
