//! Graphs, shift operators and the graph Fourier transform.
//!
//! A [`Graph`] is an undirected weighted graph with positive weights. Its
//! [`ShiftOperator`] (adjacency `W` or Laplacian `L = D - W`) is eigendecomposed
//! into a [`SpectralBasis`] whose columns are ordered from low to high graph
//! frequency:
//!
//! * Laplacian: ascending eigenvalues (`λ₁ = 0` first on connected graphs),
//! * adjacency: descending eigenvalues.
//!
//! Eigenvector signs are fixed so that the entry of largest magnitude is positive
//! (the first such entry on ties). Repeated eigenvalues leave the basis of the
//! eigenspace unspecified; only the spanned subspace is meaningful there.
//!
//! A bandlimited signal lives on a [`Band`] of `k` frequencies, either the `k`
//! lowest or the `k` highest ones, and is synthesized as `x = V_K x̃_K`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Symmetry tolerance accepted for shift operators.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

/// Undirected graph with positive edge weights; edges are stored with `i < j`,
/// sorted lexicographically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
}

impl Graph {
    /// Builds a graph from `(i, j, w)` triples. Endpoints may be given in either
    /// order; self-loops, duplicates, out-of-range nodes and non-positive or
    /// non-finite weights are rejected.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut out: Vec<Edge> = Vec::new();
        for (a, b, w) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a}, {b}) references a node outside [0, {n})"
                )));
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop at node {a}")));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a}, {b}) has non-positive weight {w}"
                )));
            }
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            out.push(Edge { i, j, w });
        }
        out.sort_by_key(|e| (e.i, e.j));
        if let Some(d) = out.windows(2).find(|p| (p[0].i, p[0].j) == (p[1].i, p[1].j)) {
            return Err(Error::InvalidGraph(format!(
                "duplicate edge ({}, {})",
                d[0].i, d[0].j
            )));
        }
        Ok(Graph { n, edges: out })
    }

    /// Unit-weight graph from node pairs.
    pub fn unweighted(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        Self::new(n, pairs.into_iter().map(|(i, j)| (i, j, 1.0)))
    }

    pub fn empty(n: usize) -> Self {
        Graph {
            n,
            edges: Vec::new(),
        }
    }

    /// Path graph `0 - 1 - ... - (n-1)` with unit weights.
    pub fn path(n: usize) -> Self {
        Self::unweighted(n, (1..n).map(|i| (i - 1, i))).expect("path graph is valid")
    }

    /// Complete graph on `n` nodes with unit weights.
    pub fn complete(n: usize) -> Self {
        let pairs = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j)));
        Self::unweighted(n, pairs).expect("complete graph is valid")
    }

    /// Keeps the edges for which `keep` returns true. Used for edge sampling.
    pub(crate) fn filter_edges(&self, mut keep: impl FnMut(&Edge) -> bool) -> Graph {
        Graph {
            n: self.n,
            edges: self.edges.iter().copied().filter(|e| keep(e)).collect(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        let (i, j) = if a < b { (a, b) } else { (b, a) };
        self.edges
            .binary_search_by(|e| (e.i, e.j).cmp(&(i, j)))
            .is_ok()
    }

    /// True when every edge of `self` is an edge of `other` with the same weight.
    pub fn is_subgraph_of(&self, other: &Graph) -> bool {
        self.n == other.n
            && self.edges.iter().all(|e| {
                other
                    .edges
                    .binary_search_by(|o| (o.i, o.j).cmp(&(e.i, e.j)))
                    .map(|k| other.edges[k].w == e.w)
                    .unwrap_or(false)
            })
    }

    pub fn adjacency(&self) -> DMatrix<f64> {
        let mut w = DMatrix::zeros(self.n, self.n);
        for e in &self.edges {
            w[(e.i, e.j)] = e.w;
            w[(e.j, e.i)] = e.w;
        }
        w
    }

    /// Weighted degrees `W 1`.
    pub fn degrees(&self) -> DVector<f64> {
        let mut d = DVector::zeros(self.n);
        for e in &self.edges {
            d[e.i] += e.w;
            d[e.j] += e.w;
        }
        d
    }

    pub fn laplacian(&self) -> DMatrix<f64> {
        let mut l = DMatrix::zeros(self.n, self.n);
        for e in &self.edges {
            l[(e.i, e.j)] -= e.w;
            l[(e.j, e.i)] -= e.w;
            l[(e.i, e.i)] += e.w;
            l[(e.j, e.j)] += e.w;
        }
        l
    }

    /// Unweighted neighbour counts.
    pub fn neighbor_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.n];
        for e in &self.edges {
            c[e.i] += 1;
            c[e.j] += 1;
        }
        c
    }

    pub fn is_connected(&self) -> bool {
        if self.n <= 1 {
            return true;
        }
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut components = self.n;
        for e in &self.edges {
            let (a, b) = (find(&mut parent, e.i), find(&mut parent, e.j));
            if a != b {
                parent[a] = b;
                components -= 1;
            }
        }
        components == 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftKind {
    Adjacency,
    Laplacian,
}

impl ShiftKind {
    /// Frequency ordering that puts smooth (low total variation) modes first.
    pub fn ordering(self) -> FrequencyOrdering {
        match self {
            ShiftKind::Adjacency => FrequencyOrdering::AdjacencyDescending,
            ShiftKind::Laplacian => FrequencyOrdering::LaplacianAscending,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftOperator {
    kind: ShiftKind,
    matrix: DMatrix<f64>,
}

impl ShiftOperator {
    /// Wraps an arbitrary symmetric matrix.
    pub fn from_matrix(kind: ShiftKind, matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                actual: matrix.ncols(),
            });
        }
        let asym = linalg::max_asymmetry(&matrix);
        if asym > SYMMETRY_TOL || matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotSymmetric(asym));
        }
        Ok(ShiftOperator { kind, matrix })
    }

    pub fn kind(&self) -> ShiftKind {
        self.kind
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

pub fn build_shift(graph: &Graph, kind: ShiftKind) -> ShiftOperator {
    let matrix = match kind {
        ShiftKind::Adjacency => graph.adjacency(),
        ShiftKind::Laplacian => graph.laplacian(),
    };
    ShiftOperator { kind, matrix }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrequencyOrdering {
    LaplacianAscending,
    AdjacencyDescending,
}

/// Orthonormal eigenbasis `V` and eigenvalues `λ` of a shift operator, ordered
/// from low to high graph frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBasis {
    eigenvectors: DMatrix<f64>,
    eigenvalues: DVector<f64>,
    ordering: FrequencyOrdering,
}

pub fn eigendecompose(s: &ShiftOperator) -> Result<SpectralBasis> {
    let asym = linalg::max_asymmetry(s.matrix());
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(asym));
    }
    let n = s.dim();
    let ordering = s.kind().ordering();
    let eig = s.matrix().clone().symmetric_eigen();

    let mut order: Vec<usize> = (0..n).collect();
    match ordering {
        FrequencyOrdering::LaplacianAscending => {
            order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]))
        }
        FrequencyOrdering::AdjacencyDescending => {
            order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]))
        }
    }

    let mut eigenvectors = DMatrix::zeros(n, n);
    let mut eigenvalues = DVector::zeros(n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvalues[dst] = eig.eigenvalues[src];
        let mut v = eig.eigenvectors.column(src).into_owned();
        fix_sign(&mut v);
        eigenvectors.set_column(dst, &v);
    }
    Ok(SpectralBasis {
        eigenvectors,
        eigenvalues,
        ordering,
    })
}

fn fix_sign(v: &mut DVector<f64>) {
    let amax = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if amax == 0.0 {
        return;
    }
    // near-ties in magnitude resolve to the first index
    let lead = v
        .iter()
        .position(|x| x.abs() >= amax - 1e-12 * amax)
        .unwrap_or(0);
    if v[lead] < 0.0 {
        v.neg_mut();
    }
}

impl SpectralBasis {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn ordering(&self) -> FrequencyOrdering {
        self.ordering
    }

    /// `k`-th eigenvector (0-based, in frequency order).
    pub fn vector(&self, k: usize) -> DVector<f64> {
        self.eigenvectors.column(k).into_owned()
    }

    /// Columns of `V` for the band, i.e. `V_K`.
    pub fn band_block(&self, band: Band) -> Result<DMatrix<f64>> {
        let idx = band.indices(self.dim())?;
        Ok(self.eigenvectors.select_columns(idx.iter()))
    }

    /// Graph Fourier transform `x̃ = Vᵀ x`.
    pub fn gft(&self, x: &GraphSignal) -> Result<DVector<f64>> {
        self.check_len(x.len())?;
        Ok(self.eigenvectors.tr_mul(x.values()))
    }

    /// Inverse transform `x = V x̃`.
    pub fn igft(&self, xf: &DVector<f64>) -> Result<GraphSignal> {
        self.check_len(xf.len())?;
        Ok(GraphSignal::new(&self.eigenvectors * xf))
    }

    /// `V diag(λ) Vᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut scaled = self.eigenvectors.clone();
        for (k, mut col) in scaled.column_iter_mut().enumerate() {
            col *= self.eigenvalues[k];
        }
        scaled * self.eigenvectors.transpose()
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: len,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSignal(DVector<f64>);

impl GraphSignal {
    pub fn new(values: DVector<f64>) -> Self {
        GraphSignal(values)
    }

    pub fn zeros(n: usize) -> Self {
        GraphSignal(DVector::zeros(n))
    }

    pub fn from_vec(values: Vec<f64>) -> Self {
        GraphSignal(DVector::from_vec(values))
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }
}

/// Which end of the spectrum a band occupies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandPlacement {
    /// The `k` lowest frequencies.
    Low,
    /// The `k` highest frequencies.
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Band {
    pub k: usize,
    pub placement: BandPlacement,
}

impl Band {
    pub fn low(k: usize) -> Self {
        Band {
            k,
            placement: BandPlacement::Low,
        }
    }

    pub fn high(k: usize) -> Self {
        Band {
            k,
            placement: BandPlacement::High,
        }
    }

    /// Frequency indices of the band in a basis of dimension `n`.
    pub fn indices(&self, n: usize) -> Result<Vec<usize>> {
        if self.k == 0 || self.k > n {
            return Err(Error::InvalidBandwidth { k: self.k, n });
        }
        Ok(match self.placement {
            BandPlacement::Low => (0..self.k).collect(),
            BandPlacement::High => (n - self.k..n).collect(),
        })
    }
}

/// In-band GFT coefficients `x̃_K` on a band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSpec {
    pub placement: BandPlacement,
    pub coefficients: DVector<f64>,
}

impl BandSpec {
    pub fn new(placement: BandPlacement, coefficients: DVector<f64>) -> Result<Self> {
        if coefficients.is_empty() || coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(
                "band coefficients must be non-empty and finite".into(),
            ));
        }
        Ok(BandSpec {
            placement,
            coefficients,
        })
    }

    /// Coefficients on the `k` lowest frequencies.
    pub fn low(coefficients: Vec<f64>) -> Result<Self> {
        Self::new(BandPlacement::Low, DVector::from_vec(coefficients))
    }

    pub fn k(&self) -> usize {
        self.coefficients.len()
    }

    pub fn band(&self) -> Band {
        Band {
            k: self.k(),
            placement: self.placement,
        }
    }
}

/// `x = V_K x̃_K`.
pub fn synthesize_bandlimited(basis: &SpectralBasis, band: &BandSpec) -> Result<GraphSignal> {
    let vk = basis.band_block(band.band())?;
    Ok(GraphSignal::new(vk * &band.coefficients))
}

/// Orthogonal projector `H = V_K V_Kᵀ` onto the band.
pub fn bandlimiting_filter(basis: &SpectralBasis, band: Band) -> Result<DMatrix<f64>> {
    let vk = basis.band_block(band)?;
    let mut h = &vk * vk.transpose();
    linalg::symmetrize(&mut h);
    Ok(h)
}

/// `max |λ_i|` of a symmetric operator.
pub fn spectral_norm(s: &ShiftOperator) -> f64 {
    symmetric_spectral_norm(s.matrix())
}

pub(crate) fn symmetric_spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .fold(0.0f64, |a, l| a.max(l.abs()))
}
