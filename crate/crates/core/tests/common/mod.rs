#![allow(dead_code)]

use delrips::geometry::PointCloud;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn uniform(n: usize, d: usize, seed: u64) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    PointCloud::new(d, (0..n * d).map(|_| rng.random::<f64>()).collect()).unwrap()
}

/// Random (dim, n) mix used by the equivalence suites.
pub fn mixed_instance(i: u64) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(0xabc0 + i);
    match i % 10 {
        0..=4 => uniform(rng.random_range(4..=40), 2, i),
        5..=8 => uniform(rng.random_range(5..=40), 3, i),
        _ => uniform(rng.random_range(6..=15), 4, i),
    }
}

/// Sorted multiset of values.
pub fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

/// Prim on the complete graph; returns the MST edge lengths.
pub fn prim_lengths(c: &PointCloud) -> Vec<f64> {
    let n = c.len();
    let mut best = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    best[0] = 0.0;
    let mut out = Vec::new();
    for _ in 0..n {
        let u = (0..n).filter(|&i| !done[i]).min_by(|&a, &b| best[a].total_cmp(&best[b])).unwrap();
        done[u] = true;
        if u != 0 {
            out.push(best[u]);
        }
        for v in 0..n {
            if !done[v] {
                best[v] = best[v].min(c.dist(u, v));
            }
        }
    }
    sorted(out)
}
