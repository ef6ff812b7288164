#![allow(dead_code)]

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use fair_kcenter::MetricSpace;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Uniform points in the unit square.
pub fn random_points(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| vec![rng.random::<f64>(), rng.random::<f64>()])
        .collect()
}

pub fn random_space(n: usize, seed: u64) -> MetricSpace {
    MetricSpace::from_points(&random_points(n, seed)).unwrap()
}

pub fn line(xs: &[f64]) -> MetricSpace {
    let pts: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
    MetricSpace::from_points(&pts).unwrap()
}

/// A connected random graph in OR-Library pmed text form: a random spanning
/// tree plus extra random edges, integer costs in 1..=100.
pub fn random_pmed_text(n: usize, m: usize, k: usize, seed: u64) -> String {
    assert!(m >= n - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = format!("{n} {m} {k}\n");
    for v in 2..=n {
        let u = rng.random_range(1..v);
        out.push_str(&format!("{u} {v} {}\n", rng.random_range(1..=100)));
    }
    for _ in (n - 1)..m {
        let u = rng.random_range(1..=n);
        let mut v = rng.random_range(1..=n);
        while v == u {
            v = rng.random_range(1..=n);
        }
        out.push_str(&format!("{u} {v} {}\n", rng.random_range(1..=100)));
    }
    out
}

/// Single-source shortest paths with a binary heap (0-based vertices).
pub fn dijkstra(n: usize, edges: &[(usize, usize, f64)], source: usize) -> Vec<f64> {
    let mut adj = vec![Vec::new(); n];
    for &(u, v, c) in edges {
        adj[u - 1].push((v - 1, c));
        adj[v - 1].push((u - 1, c));
    }
    let mut dist = vec![f64::INFINITY; n];
    dist[source] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((0u64, source)));
    // Costs here are integral, so u64 keys are exact.
    while let Some(Reverse((d, u))) = heap.pop() {
        if d as f64 > dist[u] {
            continue;
        }
        for &(v, c) in &adj[u] {
            let nd = d as f64 + c;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(Reverse((nd as u64, v)));
            }
        }
    }
    dist
}

/// Minimum over all center sets of size <= k, via bitmasks. Independent of
/// the library's subset enumeration.
pub fn exhaustive_radius(space: &MetricSpace, k: usize) -> f64 {
    let n = space.len();
    assert!(n <= 20);
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << n) {
        if mask.count_ones() as usize > k {
            continue;
        }
        let mut radius = 0.0f64;
        for p in 0..n {
            let mut near = f64::INFINITY;
            for c in 0..n {
                if mask & (1 << c) != 0 {
                    near = near.min(space.dist(c, p));
                }
            }
            radius = radius.max(near);
        }
        best = best.min(radius);
    }
    best
}

/// Whether some dominating set of size <= k exists in the bottleneck graph at r.
pub fn has_dominating_set(space: &MetricSpace, k: usize, r: f64) -> bool {
    exhaustive_radius(space, k) <= r
}
