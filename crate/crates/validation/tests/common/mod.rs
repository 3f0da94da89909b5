#![allow(dead_code)]

use std::io::Write;

use netctl::{Graph, RngStream};
use rand::Rng;

/// Prints one verdict line straight to stderr, so it shows up even when the
/// harness captures test output.
pub fn report(id: u32, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "\n{verdict} [{id:>2}] {name}: {detail}");
}

/// Connected graph on `n` nodes with `edges` random edges and weights in
/// `[0.5, 1.5)`. Needs `edges >= n - 1`.
pub fn random_small_graph<R: Rng>(n: usize, edges: usize, rng: &mut R) -> Graph {
    loop {
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        while pairs.len() < edges {
            let i = rng.random_range(0..n);
            let j = rng.random_range(0..n);
            let e = (i.min(j), i.max(j));
            if i != j && !pairs.contains(&e) {
                pairs.push(e);
            }
        }
        let g = Graph::new(
            n,
            pairs.iter().map(|&(i, j)| (i, j, rng.random_range(0.5..1.5))),
        )
        .unwrap();
        if g.is_connected() {
            return g;
        }
    }
}

/// Erdős–Rényi(0.5) support with weights in `[0.5, 1.5)`, connected.
pub fn random_weighted_graph<R: Rng>(n: usize, rng: &mut R) -> Graph {
    loop {
        let mut triples = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random::<f64>() < 0.5 {
                    triples.push((i, j, rng.random_range(0.5..1.5)));
                }
            }
        }
        let g = Graph::new(n, triples).unwrap();
        if g.is_connected() {
            return g;
        }
    }
}

pub fn stream(seed: u64) -> RngStream {
    RngStream::new(seed, 0)
}
