//! Random edge sampling, synthetic graph generators and edge-list I/O.
//!
//! All randomness flows through [`RngStream`], a `(seed, stream)` pair backed by
//! ChaCha8. Independent Monte Carlo workers derive their own streams with
//! [`RngStream::derive`], so results do not depend on scheduling.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gsp::Graph;

/// Resampling cap for generators asked to return a connected graph.
pub const MAX_CONNECTIVITY_ATTEMPTS: usize = 1000;

/// RES(p): every edge of the underlying graph is active independently with
/// probability `p` at each time step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResModel {
    p: f64,
}

impl ResModel {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "edge activation probability {p} not in (0, 1]"
            )));
        }
        Ok(ResModel { p })
    }

    pub fn p(&self) -> f64 {
        self.p
    }
}

/// Reproducible random stream identified by `(seed, stream)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        RngStream { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    /// Child stream for `label`; distinct labels give unrelated streams.
    pub fn derive(&self, label: u64) -> RngStream {
        RngStream {
            seed: self.seed,
            stream: splitmix64(splitmix64(self.stream) ^ label.wrapping_mul(0xA076_1D64_78BD_642F)),
        }
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draws one RES realization. One uniform draw is consumed per underlying edge,
/// in edge order.
pub fn sample_res<R: Rng + ?Sized>(g: &Graph, model: ResModel, rng: &mut R) -> Graph {
    let p = model.p();
    g.filter_edges(|_| rng.random::<f64>() < p)
}

/// Erdős–Rényi graph with unit weights.
pub fn generate_er(n: usize, p_er: f64, stream: &RngStream, require_connected: bool) -> Result<Graph> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("ER graph needs n >= 2, got {n}")));
    }
    if !(p_er > 0.0 && p_er <= 1.0) {
        return Err(Error::InvalidParameter(format!("p_er {p_er} not in (0, 1]")));
    }
    let mut rng = stream.rng();
    for _ in 0..MAX_CONNECTIVITY_ATTEMPTS {
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random::<f64>() < p_er {
                    pairs.push((i, j));
                }
            }
        }
        let g = Graph::unweighted(n, pairs)?;
        if !require_connected || g.is_connected() {
            return Ok(g);
        }
    }
    Err(Error::ConnectivityNotReached(MAX_CONNECTIVITY_ATTEMPTS))
}

/// Random geometric graph: `n` points uniform in the unit square, Gaussian
/// kernel weights `exp(-d²)`, each node linked to its `k_nn` nearest neighbours
/// (union-symmetrized).
pub fn generate_geometric(
    n: usize,
    k_nn: usize,
    stream: &RngStream,
    require_connected: bool,
) -> Result<Graph> {
    if !(k_nn >= 1 && n > k_nn) {
        return Err(Error::InvalidParameter(format!(
            "geometric graph needs n > k_nn >= 1, got n = {n}, k_nn = {k_nn}"
        )));
    }
    let mut rng = stream.rng();
    for _ in 0..MAX_CONNECTIVITY_ATTEMPTS {
        let points: Vec<[f64; 2]> = (0..n)
            .map(|_| [rng.random::<f64>(), rng.random::<f64>()])
            .collect();
        let g = geometric_from_points(&points, k_nn)?;
        if !require_connected || g.is_connected() {
            return Ok(g);
        }
    }
    Err(Error::ConnectivityNotReached(MAX_CONNECTIVITY_ATTEMPTS))
}

/// kNN Gaussian-kernel graph over fixed points. Distance ties are broken by the
/// lower node index.
pub fn geometric_from_points(points: &[[f64; 2]], k_nn: usize) -> Result<Graph> {
    let n = points.len();
    if !(k_nn >= 1 && n > k_nn) {
        return Err(Error::InvalidParameter(format!(
            "kNN graph needs n > k_nn >= 1, got n = {n}, k_nn = {k_nn}"
        )));
    }
    let d2 = |a: usize, b: usize| {
        let dx = points[a][0] - points[b][0];
        let dy = points[a][1] - points[b][1];
        dx * dx + dy * dy
    };
    let mut linked = vec![false; n * n];
    let mut others: Vec<usize> = Vec::with_capacity(n - 1);
    for i in 0..n {
        others.clear();
        others.extend((0..n).filter(|&j| j != i));
        others.sort_by(|&a, &b| d2(i, a).total_cmp(&d2(i, b)).then(a.cmp(&b)));
        for &j in &others[..k_nn] {
            let (a, b) = if i < j { (i, j) } else { (j, i) };
            linked[a * n + b] = true;
        }
    }
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if linked[i * n + j] {
                edges.push((i, j, (-d2(i, j)).exp()));
            }
        }
    }
    Graph::new(n, edges)
}

/// Parses the edge-list text format: the first data line is the node count,
/// each later line is `i j [w]` (0-based, weight defaults to 1). Blank lines and
/// lines starting with `#` are skipped.
pub fn parse_edge_list(text: &str) -> Result<Graph> {
    let mut n: Option<usize> = None;
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = lineno + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| Error::Parse { line: lineno, msg };
        let fields: Vec<&str> = line.split_whitespace().collect();
        let Some(count) = n else {
            if fields.len() != 1 {
                return Err(err(format!("expected node count, found {line:?}")));
            }
            n = Some(
                fields[0]
                    .parse()
                    .map_err(|_| err(format!("bad node count {:?}", fields[0])))?,
            );
            continue;
        };
        if !(2..=3).contains(&fields.len()) {
            return Err(err(format!("expected `i j [w]`, found {line:?}")));
        }
        let idx = |s: &str| -> Result<usize> {
            let v: usize = s.parse().map_err(|_| err(format!("bad node index {s:?}")))?;
            if v >= count {
                return Err(err(format!("node {v} out of range for {count} nodes")));
            }
            Ok(v)
        };
        let (i, j) = (idx(fields[0])?, idx(fields[1])?);
        let w = match fields.get(2) {
            Some(s) => s.parse::<f64>().map_err(|_| err(format!("bad weight {s:?}")))?,
            None => 1.0,
        };
        if i == j {
            return Err(err(format!("self-loop at node {i}")));
        }
        if !(w.is_finite() && w > 0.0) {
            return Err(err(format!("non-positive weight {w}")));
        }
        if !seen.insert((i.min(j), i.max(j))) {
            return Err(err(format!("duplicate edge ({i}, {j})")));
        }
        edges.push((i, j, w));
    }
    let n = n.ok_or(Error::Parse {
        line: 0,
        msg: "missing node count".into(),
    })?;
    Graph::new(n, edges)
}

pub fn load_edge_list(path: impl AsRef<Path>) -> Result<Graph> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(&text)
}

/// Serializes a graph in the edge-list format. Weights use the shortest
/// round-trip representation, so parsing the output gives the same graph.
pub fn format_edge_list(g: &Graph) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{}", g.node_count());
    for e in g.edges() {
        let _ = writeln!(s, "{} {} {}", e.i, e.j, e.w);
    }
    s
}

pub fn write_edge_list(g: &Graph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(format_edge_list(g).as_bytes())
        .map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gsp::{build_shift, spectral_norm, ShiftKind};

    #[test]
    fn res_model_validation() {
        assert!(ResModel::new(0.0).is_err());
        assert!(ResModel::new(1.5).is_err());
        assert!(ResModel::new(f64::NAN).is_err());
        assert!(ResModel::new(1.0).is_ok());
    }

    #[test]
    fn res_with_p_one_is_identity() {
        let g = generate_er(15, 0.4, &RngStream::new(3, 0), true).unwrap();
        let mut rng = RngStream::new(1, 2).rng();
        for _ in 0..20 {
            assert_eq!(sample_res(&g, ResModel::new(1.0).unwrap(), &mut rng), g);
        }
    }

    #[test]
    fn res_edge_frequency_on_k2() {
        let g = Graph::unweighted(2, [(0, 1)]).unwrap();
        let m = ResModel::new(0.5).unwrap();
        let mut rng = RngStream::new(11, 0).rng();
        let draws = 100_000;
        let hits = (0..draws)
            .filter(|_| sample_res(&g, m, &mut rng).edge_count() == 1)
            .count();
        let freq = hits as f64 / draws as f64;
        assert!((freq - 0.5).abs() < 0.01, "{freq}");
    }

    #[test]
    fn res_mean_adjacency_is_p_times_w() {
        let g = generate_geometric(8, 2, &RngStream::new(5, 0), true).unwrap();
        let p = 0.3;
        let m = ResModel::new(p).unwrap();
        let w = g.adjacency();
        let mut rng = RngStream::new(6, 0).rng();
        let draws = 100_000;
        let mut sum = nalgebra::DMatrix::zeros(8, 8);
        for _ in 0..draws {
            sum += sample_res(&g, m, &mut rng).adjacency();
        }
        let mean = sum / draws as f64;
        for i in 0..8 {
            for j in 0..8 {
                let wij = w[(i, j)];
                let se = wij * (p * (1.0 - p) / draws as f64).sqrt();
                assert!((mean[(i, j)] - p * wij).abs() <= 3.0 * se + 1e-15);
            }
        }
    }

    #[test]
    fn res_realizations_are_subgraphs_with_smaller_laplacian_norm() {
        let g = generate_er(12, 0.5, &RngStream::new(9, 0), true).unwrap();
        let full = spectral_norm(&build_shift(&g, ShiftKind::Laplacian));
        let mut rng = RngStream::new(9, 1).rng();
        for _ in 0..50 {
            let r = sample_res(&g, ResModel::new(0.6).unwrap(), &mut rng);
            assert!(r.is_subgraph_of(&g));
            assert!(spectral_norm(&build_shift(&r, ShiftKind::Laplacian)) <= full + 1e-10);
        }
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let g = Graph::complete(10);
        let m = ResModel::new(0.5).unwrap();
        let a = sample_res(&g, m, &mut RngStream::new(42, 7).rng());
        let b = sample_res(&g, m, &mut RngStream::new(42, 7).rng());
        assert_eq!(a, b);
        let root = RngStream::new(42, 0);
        assert_ne!(root.derive(1), root.derive(2));
        assert_eq!(root.derive(1), root.derive(1));
    }

    #[test]
    fn er_examples() {
        assert_eq!(generate_er(6, 1.0, &RngStream::new(0, 0), false).unwrap(), Graph::complete(6));
        for s in 0..20 {
            let g = generate_er(2, 0.5, &RngStream::new(s, 0), true).unwrap();
            assert_eq!(g.edge_count(), 1);
        }
        let mut total = 0.0;
        for s in 0..100 {
            let g = generate_er(100, 0.5, &RngStream::new(s, 0), false).unwrap();
            total += 2.0 * g.edge_count() as f64 / 100.0;
        }
        let avg = total / 100.0;
        assert!((avg - 49.5).abs() < 0.05 * 49.5, "{avg}");
        assert!(generate_er(1, 0.5, &RngStream::new(0, 0), false).is_err());
    }

    #[test]
    fn er_connectivity_cap() {
        assert!(matches!(
            generate_er(60, 1e-6, &RngStream::new(0, 0), true),
            Err(Error::ConnectivityNotReached(MAX_CONNECTIVITY_ATTEMPTS))
        ));
    }

    #[test]
    fn kernel_weights() {
        let g = geometric_from_points(&[[0.2, 0.2], [0.2, 0.2]], 1).unwrap();
        assert_eq!(g.edges()[0].w, 1.0);
        let g = geometric_from_points(&[[0.0, 0.0], [1.0, 0.0]], 1).unwrap();
        assert!((g.edges()[0].w - (-1f64).exp()).abs() < 1e-15);
        assert!((g.edges()[0].w - 0.3679).abs() < 1e-4);
    }

    #[test]
    fn knn_ties_prefer_lower_index() {
        // node 0 is equidistant (exactly) from nodes 1 and 2
        let pts = [[0.5, 0.5], [0.5, 0.75], [0.5, 0.25], [0.5, 0.125]];
        let g = geometric_from_points(&pts, 1).unwrap();
        assert!(g.has_edge(0, 1));
        assert!(!g.has_edge(0, 2));
        assert!(g.has_edge(2, 3));
    }

    #[test]
    fn geometric_min_degree_and_weights() {
        for s in 0..100 {
            let g = generate_geometric(100, 5, &RngStream::new(s, 0), false).unwrap();
            assert!(g.neighbor_counts().iter().all(|&c| c >= 5));
            let lo = (-2f64).exp();
            assert!(g.edges().iter().all(|e| e.w > lo && e.w <= 1.0));
        }
    }

    #[test]
    fn edge_list_examples() {
        assert_eq!(parse_edge_list("3\n0 1\n1 2\n").unwrap(), Graph::path(3));
        let g = parse_edge_list("2\n0 1 0.5\n").unwrap();
        assert_eq!(g.edges()[0].w, 0.5);
        let g = parse_edge_list("# comment\n\n5\n0 1\n").unwrap();
        assert_eq!(g.node_count(), 5);
    }

    #[test]
    fn edge_list_errors_carry_line_numbers() {
        let line_of = |text: &str| match parse_edge_list(text) {
            Err(Error::Parse { line, .. }) => line,
            other => panic!("expected parse error, got {other:?}"),
        };
        assert_eq!(line_of("3\n0 1\n1 1\n"), 3);
        assert_eq!(line_of("3\n0 1\n1 0\n"), 3);
        assert_eq!(line_of("3\n0 1 -2\n"), 2);
        assert_eq!(line_of("3\n0 x\n"), 2);
        assert_eq!(line_of("3\n0 5\n"), 2);
        assert_eq!(line_of("three\n"), 1);
        assert_eq!(line_of(""), 0);
    }

    #[test]
    fn edge_list_round_trip() {
        let g = generate_geometric(30, 4, &RngStream::new(2, 0), true).unwrap();
        assert_eq!(parse_edge_list(&format_edge_list(&g)).unwrap(), g);
    }
}
