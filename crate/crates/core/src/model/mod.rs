//! Gaussian graphical models, unit-diagonal normalization and walk-summability.
//!
//! A model stores the precision matrix `J` sparsely: a positive diagonal and
//! one value per unordered edge. Normalizing gives `I - R` with
//! `r_ij = -J_ij / sqrt(d_i d_j)`; every estimator in this crate works on `R`.

mod generators;
mod spectral;

pub use generators::{gen_complete, gen_cycle, gen_grid, gen_random, gen_random_tree};
pub use spectral::{perron_root, spectral_radius_abs, PowerIteration, WalkSummabilityReport};

use std::collections::VecDeque;
use std::ops::Range;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Models with `rho(|R|)` at or above `1 - WALK_SUMMABLE_MARGIN` are rejected
/// by the estimators unless forced.
pub const WALK_SUMMABLE_MARGIN: f64 = 1e-9;

/// Sparse symmetric precision matrix `J` with optional potential vector `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphModel {
    n: usize,
    edges: Vec<(usize, usize)>,
    diag: Vec<f64>,
    off: Vec<f64>,
    h: Option<Vec<f64>>,
}

impl GraphModel {
    /// Builds a model from the diagonal of `J` and its off-diagonal entries.
    ///
    /// Each unordered pair may appear once, in either orientation. Zero
    /// entries, self-loops and non-positive diagonals are rejected.
    pub fn new(
        diag: Vec<f64>,
        entries: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let n = diag.len();
        if let Some((i, d)) = diag
            .iter()
            .enumerate()
            .find(|(_, d)| !(d.is_finite() && **d > 0.0))
        {
            return Err(Error::InvalidModel(format!(
                "diagonal entry {i} is {d}, must be positive"
            )));
        }
        let mut pairs = Vec::new();
        for (i, j, v) in entries {
            if i >= n || j >= n {
                return Err(Error::InvalidModel(format!(
                    "entry ({i}, {j}) out of range for n = {n}"
                )));
            }
            if i == j {
                return Err(Error::InvalidModel(format!("self-loop at vertex {i}")));
            }
            if v == 0.0 || !v.is_finite() {
                return Err(Error::InvalidModel(format!(
                    "entry ({i}, {j}) = {v} must be finite and nonzero"
                )));
            }
            pairs.push(((i.min(j), i.max(j)), v));
        }
        pairs.sort_by_key(|p| p.0);
        if let Some(w) = pairs.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidModel(format!(
                "duplicate edge {{{}, {}}}",
                w[0].0 .0, w[0].0 .1
            )));
        }
        let (edges, off) = pairs.into_iter().unzip();
        Ok(Self {
            n,
            edges,
            diag,
            off,
            h: None,
        })
    }

    /// Attaches a potential vector `h` (one value per vertex).
    pub fn with_potential(mut self, h: Vec<f64>) -> Result<Self> {
        if h.len() != self.n {
            return Err(Error::InvalidModel(format!(
                "potential has {} entries, model has {} vertices",
                h.len(),
                self.n
            )));
        }
        self.h = Some(h);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Unordered edges `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// Off-diagonal values `J_ij`, aligned with [`edges`](Self::edges).
    pub fn off_diag(&self) -> &[f64] {
        &self.off
    }

    pub fn potential(&self) -> Option<&[f64]> {
        self.h.as_deref()
    }

    /// Dense copy of `J`.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut j = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.diag));
        for (&(a, b), &v) in self.edges.iter().zip(&self.off) {
            j[(a, b)] = v;
            j[(b, a)] = v;
        }
        j
    }

    /// `r_ij = -J_ij / sqrt(d_i d_j)` together with `sum_i log d_i`, so that
    /// `log det J = shift + log det(I - R)`.
    pub fn normalize(&self) -> (EdgeWeights, f64) {
        let scale: Vec<f64> = self.diag.iter().map(|d| d.sqrt()).collect();
        let entries = self
            .edges
            .iter()
            .zip(&self.off)
            .map(|(&(i, j), &v)| (i, j, -v / (scale[i] * scale[j])))
            .collect::<Vec<_>>();
        let weights = EdgeWeights::build(self.n, entries.into_iter(), scale);
        let shift = self.diag.iter().map(|d| d.ln()).sum();
        (weights, shift)
    }

    /// Potential of the normalized model, `h_i / sqrt(d_i)`.
    pub fn normalized_potential(&self) -> Option<Vec<f64>> {
        self.h.as_ref().map(|h| {
            h.iter()
                .zip(&self.diag)
                .map(|(hi, d)| hi / d.sqrt())
                .collect()
        })
    }

    /// Shortest cycle length, `None` for forests.
    pub fn girth(&self) -> Option<usize> {
        let mut adj = vec![Vec::new(); self.n];
        for &(i, j) in &self.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        girth_of(&adj)
    }
}

/// Normalized weights `r_ij` indexed by directed edge.
///
/// Directed edges are numbered in lexicographic `(tail, head)` order, so the
/// out-edges of every vertex form a contiguous id range. This numbering is
/// shared by GaBP messages, `R'` and the induced edge blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeWeights {
    n: usize,
    arcs: Vec<(usize, usize)>,
    r: Vec<f64>,
    rev: Vec<usize>,
    out_ptr: Vec<usize>,
    scale: Vec<f64>,
}

impl EdgeWeights {
    /// Weights of a unit-diagonal model from undirected entries `(i, j, r_ij)`.
    pub fn from_undirected(
        n: usize,
        entries: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let model = GraphModel::new(
            vec![1.0; n],
            entries.into_iter().map(|(i, j, r)| (i, j, -r)),
        )?;
        Ok(model.normalize().0)
    }

    fn build(n: usize, entries: impl Iterator<Item = (usize, usize, f64)>, scale: Vec<f64>) -> Self {
        let mut directed: Vec<((usize, usize), f64)> = Vec::new();
        for (i, j, r) in entries {
            directed.push(((i, j), r));
            directed.push(((j, i), r));
        }
        directed.sort_by_key(|d| d.0);
        let (arcs, r): (Vec<_>, Vec<_>) = directed.into_iter().unzip();
        let mut out_ptr = vec![0usize; n + 1];
        for &(i, _) in &arcs {
            out_ptr[i + 1] += 1;
        }
        for i in 0..n {
            out_ptr[i + 1] += out_ptr[i];
        }
        let rev = arcs
            .iter()
            .map(|&(i, j)| arcs.binary_search(&(j, i)).expect("symmetric arc set"))
            .collect();
        Self {
            n,
            arcs,
            r,
            rev,
            out_ptr,
            scale,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of directed edges, `2|E|`.
    pub fn num_arcs(&self) -> usize {
        self.arcs.len()
    }

    pub fn num_edges(&self) -> usize {
        self.arcs.len() / 2
    }

    /// `(tail, head)` of directed edge `id`.
    pub fn arc(&self, id: usize) -> (usize, usize) {
        self.arcs[id]
    }

    pub fn arcs(&self) -> &[(usize, usize)] {
        &self.arcs
    }

    /// `r` of directed edge `id` (equal to `r` of its reverse).
    pub fn r(&self, id: usize) -> f64 {
        self.r[id]
    }

    /// `r` of every directed edge, indexed by id.
    pub fn r_values(&self) -> &[f64] {
        &self.r
    }

    pub fn reverse(&self, id: usize) -> usize {
        self.rev[id]
    }

    /// Ids of the directed edges leaving `i`.
    pub fn out_arcs(&self, i: usize) -> Range<usize> {
        self.out_ptr[i]..self.out_ptr[i + 1]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.out_ptr[i + 1] - self.out_ptr[i]
    }

    /// Id of directed edge `(i, j)`, if the edge exists.
    pub fn arc_id(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.n {
            return None;
        }
        let span = self.out_arcs(i);
        self.arcs[span.clone()]
            .binary_search(&(i, j))
            .ok()
            .map(|k| span.start + k)
    }

    /// `sqrt(d_i)` of the model these weights were normalized from.
    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    /// `R` as an `n x n` sparse matrix.
    pub fn matrix(&self) -> CsrMatrix {
        let rows = (0..self.n)
            .map(|i| {
                self.out_arcs(i)
                    .map(|e| (self.arcs[e].1, self.r[e]))
                    .collect()
            })
            .collect();
        CsrMatrix::from_rows(rows)
    }

    /// Dense `I - R`.
    pub fn identity_minus_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::identity(self.n, self.n);
        for (&(i, j), &r) in self.arcs.iter().zip(&self.r) {
            m[(i, j)] = -r;
        }
        m
    }

    /// Reconstructs `J` from the normalized weights and the stored scale.
    pub fn denormalize(&self) -> GraphModel {
        let diag = self.scale.iter().map(|s| s * s).collect();
        let entries = self
            .arcs
            .iter()
            .zip(&self.r)
            .filter(|((i, j), _)| i < j)
            .map(|(&(i, j), &r)| (i, j, -r * self.scale[i] * self.scale[j]));
        GraphModel::new(diag, entries).expect("weights come from a valid model")
    }

    /// Same graph with every `r_ij` multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            r: self.r.iter().map(|r| r * c).collect(),
            ..self.clone()
        }
    }

    /// Same graph with every `r_ij` replaced by `|r_ij|`.
    pub fn abs(&self) -> Self {
        Self {
            r: self.r.iter().map(|r| r.abs()).collect(),
            ..self.clone()
        }
    }

    pub fn girth(&self) -> Option<usize> {
        let adj: Vec<Vec<usize>> = (0..self.n)
            .map(|i| self.out_arcs(i).map(|e| self.arcs[e].1).collect())
            .collect();
        girth_of(&adj)
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for e in self.out_arcs(u) {
                let v = self.arcs[e].1;
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == self.n
    }
}

/// Girth by breadth-first search from every vertex. A non-tree edge `(u, w)`
/// met from root `s` closes a cycle of length at most `d(u) + d(w) + 1`, and
/// the minimum over all roots is attained by a root lying on a shortest cycle.
fn girth_of(adj: &[Vec<usize>]) -> Option<usize> {
    let n = adj.len();
    let mut best: Option<usize> = None;
    let mut dist = vec![usize::MAX; n];
    let mut parent = vec![usize::MAX; n];
    for s in 0..n {
        dist.fill(usize::MAX);
        parent.fill(usize::MAX);
        dist[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            if best.is_some_and(|b| 2 * dist[u] + 1 >= b) {
                break;
            }
            for &w in &adj[u] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    parent[w] = u;
                    queue.push_back(w);
                } else if parent[u] != w {
                    let len = dist[u] + dist[w] + 1;
                    best = Some(best.map_or(len, |b| b.min(len)));
                }
            }
        }
    }
    best
}
