#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rechain::model::{edge_counts, DemandMatrix, NetworkShape, Scheme};

/// Random shape with capacities drawn from `0..=max_c`, at least one nonzero.
pub fn random_shape(rng: &mut impl Rng, m: usize, n: usize, max_c: u32) -> NetworkShape {
    loop {
        let caps: Vec<Vec<u32>> = (0..n)
            .map(|_| (0..m).map(|_| rng.gen_range(0..=max_c)).collect())
            .collect();
        if caps.iter().flatten().any(|&c| c > 0) {
            return NetworkShape::new(m, n, caps).unwrap();
        }
    }
}

/// Random valid scheme: repeatedly tries to place random connections.
pub fn random_scheme(rng: &mut impl Rng, shape: &NetworkShape, attempts: usize) -> Scheme {
    let (m, n) = (shape.m(), shape.n());
    let mut x = Scheme::for_shape(shape);
    for _ in 0..attempts {
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(0..m);
        let k = rng.gen_range(0..m);
        if j == k {
            continue;
        }
        if x.usage(i, j) < shape.capacity(i, j) && x.usage(i, k) < shape.capacity(i, k) {
            x.add(i, j, k);
        }
    }
    x
}

/// Demand near `E(X)`: every pair is randomly one below, equal or one above.
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
    let mut v: Vec<usize> = (0..m).collect();
    v.shuffle(rng);
    (v[0], v[1])
}

/// A pair whose endpoints both have spare capacity on some link, if any.
pub fn open_pair(rng: &mut impl Rng, shape: &NetworkShape, x: &Scheme) -> Option<(usize, usize)> {
    let open: Vec<usize> = (0..shape.m())
        .filter(|&j| (0..shape.n()).any(|i| x.usage(i, j) < shape.capacity(i, j)))
        .collect();
    if open.len() < 2 {
        return None;
    }
    let a = *open.choose(rng).unwrap();
    let b = *open.iter().filter(|&&b| b != a).collect::<Vec<_>>().choose(rng).copied().unwrap();
    Some((a, b))
}
