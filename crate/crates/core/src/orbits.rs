//! Closed walks, orbits and brute-force orbit-product oracles.
//!
//! An orbit is a primitive closed walk up to cyclic shift. It is stored as
//! its lexicographically least rotation without the repeated closing vertex,
//! so `[1 2 3 1]` is kept as `[1, 2, 3]`.
//!
//! Orbits are classified by their irreducible core, the result of deleting
//! backtracking pairs `(ij)(ji)` until none remain (cyclically, across the
//! wrap-around as well):
//!
//! * totally backtracking: the core is empty;
//! * backtrackless: the orbit is its own core;
//! * reducible non-trivial: everything else.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::EdgeWeights;

/// A sequence of vertices `w_0 .. w_L`; closed when `w_0 == w_L`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Walk {
    vertices: Vec<usize>,
}

impl Walk {
    pub fn new(vertices: Vec<usize>) -> Self {
        Self { vertices }
    }

    /// The empty walk `()`.
    pub fn empty() -> Self {
        Self::default()
    }

    /// Closed walk around the cyclic sequence `cycle` (the first vertex is
    /// appended at the end).
    pub fn closed(cycle: &[usize]) -> Self {
        let mut vertices = cycle.to_vec();
        if let Some(&first) = cycle.first() {
            vertices.push(first);
        }
        Self { vertices }
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    /// Number of steps `L`.
    pub fn len(&self) -> usize {
        self.vertices.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn is_closed(&self) -> bool {
        self.vertices.len() >= 2 && self.vertices.first() == self.vertices.last()
    }

    /// Cyclic vertex sequence of a closed walk (closing vertex dropped).
    fn cycle(&self) -> &[usize] {
        &self.vertices[..self.len()]
    }

    /// True when every step is an edge of the graph behind `weights`.
    pub fn is_walk_in(&self, weights: &EdgeWeights) -> bool {
        self.vertices
            .windows(2)
            .all(|s| s[0] < weights.n() && weights.arc_id(s[0], s[1]).is_some())
    }
}

impl fmt::Display for Walk {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_sequence(f, &self.vertices)
    }
}

/// Dash-separated, 1-based vertex labels.
fn write_sequence(f: &mut fmt::Formatter<'_>, seq: &[usize]) -> fmt::Result {
    if seq.is_empty() {
        return f.write_str("()");
    }
    for (k, v) in seq.iter().enumerate() {
        if k > 0 {
            f.write_str("-")?;
        }
        write!(f, "{}", v + 1)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrbitClass {
    TotallyBacktracking,
    Backtrackless,
    ReducibleNonTrivial,
}

impl OrbitClass {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::TotallyBacktracking => "totally-backtracking",
            Self::Backtrackless => "backtrackless",
            Self::ReducibleNonTrivial => "reducible",
        }
    }
}

impl fmt::Display for OrbitClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Canonical representative of an orbit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Orbit {
    cycle: Vec<usize>,
    class: OrbitClass,
}

impl Orbit {
    /// Canonical cyclic sequence (least rotation, closing vertex omitted).
    pub fn cycle(&self) -> &[usize] {
        &self.cycle
    }

    pub fn len(&self) -> usize {
        self.cycle.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycle.is_empty()
    }

    pub fn class(&self) -> OrbitClass {
        self.class
    }

    pub fn to_walk(&self) -> Walk {
        Walk::closed(&self.cycle)
    }

    /// Directed steps `(w_t, w_{t+1})`, including the closing step.
    pub fn steps(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let l = self.cycle.len();
        (0..l).map(move |t| (self.cycle[t], self.cycle[(t + 1) % l]))
    }

    /// `n_ij`: how many times each directed step occurs.
    pub fn step_counts(&self) -> BTreeMap<(usize, usize), usize> {
        let mut counts = BTreeMap::new();
        for s in self.steps() {
            *counts.entry(s).or_insert(0) += 1;
        }
        counts
    }

    /// `R^l = prod r_ij^{n_ij}` using per-arc values `per_arc` (indexed by the
    /// arc ids of `weights`).
    pub(crate) fn weight_with(&self, weights: &EdgeWeights, per_arc: &[f64]) -> Result<f64> {
        self.steps().try_fold(1.0, |acc, (i, j)| {
            let e = weights.arc_id(i, j).ok_or_else(|| {
                Error::Contract(format!("step ({i}, {j}) of orbit {self} is not an edge"))
            })?;
            Ok(acc * per_arc[e])
        })
    }

    /// `R^l`, the product of edge weights along the orbit.
    pub fn weight(&self, weights: &EdgeWeights) -> Result<f64> {
        self.weight_with(weights, weights.r_values())
    }

    /// Audit line `length class vertex-sequence weight`.
    pub fn dump_line(&self, weights: &EdgeWeights) -> Result<String> {
        Ok(format!(
            "{} {} {} {:e}",
            self.len(),
            self.class,
            self,
            self.weight(weights)?
        ))
    }

    /// Builds the orbit of a cyclic sequence that is already canonical and primitive.
    pub(crate) fn from_canonical(cycle: Vec<usize>) -> Self {
        let class = classify(&cycle);
        Self { cycle, class }
    }
}

impl fmt::Display for Orbit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut closed = self.cycle.clone();
        if let Some(&v) = self.cycle.first() {
            closed.push(v);
        }
        write_sequence(f, &closed)
    }
}

/// Cyclically reduced core of a cyclic sequence. Empty for totally reducible input.
fn cyclic_core(cycle: &[usize]) -> Vec<usize> {
    // free reduction of the closed walk as a path
    let mut stack: Vec<usize> = Vec::with_capacity(cycle.len() + 1);
    for &v in cycle.iter().chain(cycle.first()) {
        let l = stack.len();
        if l >= 2 && stack[l - 2] == v {
            stack.pop();
        } else {
            stack.push(v);
        }
    }
    // stack is now u_0 .. u_k with u_0 == u_k; strip pairs across the wrap
    let (mut lo, mut hi) = (0, stack.len() - 1);
    while hi - lo >= 2 && stack[lo + 1] == stack[hi - 1] {
        lo += 1;
        hi -= 1;
    }
    if hi - lo < 2 {
        return Vec::new();
    }
    stack[lo..hi].to_vec()
}

fn classify(cycle: &[usize]) -> OrbitClass {
    let l = cycle.len();
    if (0..l).all(|t| cycle[t] != cycle[(t + 2) % l]) && l > 2 {
        return OrbitClass::Backtrackless;
    }
    if cyclic_core(cycle).is_empty() {
        OrbitClass::TotallyBacktracking
    } else {
        OrbitClass::ReducibleNonTrivial
    }
}

/// Irreducible core of a closed walk: backtracking pairs `(ij)(ji)` are
/// deleted until none remain, including pairs formed across the closing step.
pub fn irreducible_core(w: &Walk) -> Result<Walk> {
    if w.is_empty() {
        return Ok(Walk::empty());
    }
    if !w.is_closed() {
        return Err(Error::Contract(format!("walk {w} is not closed")));
    }
    let core = cyclic_core(w.cycle());
    Ok(Walk::closed(&core))
}

/// Index of the least rotation of `seq` (naive; orbits are short).
fn least_rotation(seq: &[usize]) -> usize {
    let l = seq.len();
    let rot = |k: usize| (0..l).map(move |t| seq[(k + t) % l]);
    (1..l).fold(0, |best, k| if rot(k).lt(rot(best)) { k } else { best })
}

/// Smallest `p` with `seq` invariant under rotation by `p`.
fn period(seq: &[usize]) -> usize {
    let l = seq.len();
    (1..=l)
        .find(|&p| l.is_multiple_of(p) && (0..l).all(|t| seq[t] == seq[(t + p) % l]))
        .unwrap_or(l)
}

/// Canonical orbit of a closed walk, or `None` when the walk is a multiple
/// of a shorter closed walk.
pub fn canonical_orbit(w: &Walk) -> Result<Option<Orbit>> {
    if !w.is_closed() {
        return Err(Error::Contract(format!("walk {w} is not a nonempty closed walk")));
    }
    let cycle = w.cycle();
    if period(cycle) < cycle.len() {
        return Ok(None);
    }
    let k = least_rotation(cycle);
    let canonical: Vec<usize> = cycle[k..].iter().chain(&cycle[..k]).copied().collect();
    Ok(Some(Orbit::from_canonical(canonical)))
}

/// The backtrackless orbit `gamma` whose class contains `orbit`: the primitive
/// root of its irreducible core. `None` for totally backtracking orbits.
pub fn core_class(orbit: &Orbit) -> Option<Orbit> {
    let core = cyclic_core(&orbit.cycle);
    if core.is_empty() {
        return None;
    }
    let p = period(&core);
    let root = &core[..p];
    let k = least_rotation(root);
    Some(Orbit::from_canonical(
        root[k..].iter().chain(&root[..k]).copied().collect(),
    ))
}

/// Limits on brute-force enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrbitBudget {
    /// Largest accepted `L_max`.
    pub max_len: usize,
    /// Cap on the number of partial walks explored.
    pub max_walks: usize,
}

impl Default for OrbitBudget {
    fn default() -> Self {
        Self {
            max_len: 14,
            max_walks: 10_000_000,
        }
    }
}

/// Every primitive cycle (least rotation, length in `min_len..=max_len`) of
/// the directed graph `adj`, each exactly once, sorted by `(length, sequence)`.
///
/// For each base vertex `v` a depth-first search walks within the vertices
/// `>= v`, pruned by the distance back to `v`, and keeps closed walks whose
/// sequence is strictly less than all its rotations. Such a sequence is
/// primitive and is its orbit's canonical form, so no dedup pass is needed.
pub(crate) fn enumerate_cycles(
    adj: &[Vec<usize>],
    min_len: usize,
    max_len: usize,
    budget: &OrbitBudget,
) -> Result<Vec<Vec<usize>>> {
    if max_len > budget.max_len {
        return Err(Error::Budget {
            what: format!("orbit enumeration up to length {max_len}"),
            limit: budget.max_len,
        });
    }
    let n = adj.len();
    let mut radj = vec![Vec::new(); n];
    for (u, succ) in adj.iter().enumerate() {
        for &v in succ {
            radj[v].push(u);
        }
    }
    let explored = AtomicUsize::new(0);
    let exceeded = AtomicBool::new(false);
    let per_base: Vec<Vec<Vec<usize>>> = (0..n)
        .into_par_iter()
        .map(|base| {
            let mut search = CycleSearch {
                adj,
                base,
                max_len,
                min_len,
                dist: distances_to(&radj, base, max_len),
                out: Vec::new(),
                local: 0,
                explored: &explored,
                exceeded: &exceeded,
                limit: budget.max_walks,
            };
            let mut path = vec![base];
            search.dfs(&mut path);
            search.flush();
            search.out
        })
        .collect();
    if exceeded.load(Ordering::Relaxed) {
        return Err(Error::Budget {
            what: format!("orbit enumeration up to length {max_len} (partial walks)"),
            limit: budget.max_walks,
        });
    }
    let mut all: Vec<Vec<usize>> = per_base.into_iter().flatten().collect();
    all.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    Ok(all)
}

/// Distance from every vertex `>= base` back to `base`, inside vertices `>= base`.
fn distances_to(radj: &[Vec<usize>], base: usize, cap: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; radj.len()];
    dist[base] = 0;
    let mut queue = std::collections::VecDeque::from([base]);
    while let Some(u) = queue.pop_front() {
        if dist[u] >= cap {
            continue;
        }
        for &p in &radj[u] {
            if p > base && dist[p] == usize::MAX {
                dist[p] = dist[u] + 1;
                queue.push_back(p);
            }
        }
    }
    dist
}

struct CycleSearch<'a> {
    adj: &'a [Vec<usize>],
    base: usize,
    max_len: usize,
    min_len: usize,
    dist: Vec<usize>,
    out: Vec<Vec<usize>>,
    local: usize,
    explored: &'a AtomicUsize,
    exceeded: &'a AtomicBool,
    limit: usize,
}

impl CycleSearch<'_> {
    fn flush(&mut self) {
        let total = self.explored.fetch_add(self.local, Ordering::Relaxed) + self.local;
        self.local = 0;
        if total > self.limit {
            self.exceeded.store(true, Ordering::Relaxed);
        }
    }

    fn dfs(&mut self, path: &mut Vec<usize>) {
        let u = *path.last().expect("path starts at base");
        let steps = path.len();
        for &v in &self.adj[u] {
            if v < self.base || self.dist[v] == usize::MAX || steps + self.dist[v] > self.max_len {
                continue;
            }
            self.local += 1;
            if self.local >= 4096 {
                self.flush();
            }
            if self.exceeded.load(Ordering::Relaxed) {
                return;
            }
            if v == self.base && steps >= self.min_len && is_lyndon(path) {
                self.out.push(path.clone());
            }
            if steps < self.max_len {
                path.push(v);
                self.dfs(path);
                path.pop();
            }
        }
    }
}

/// True when `s` is strictly smaller than each of its nontrivial rotations.
fn is_lyndon(s: &[usize]) -> bool {
    let l = s.len();
    (1..l).filter(|&k| s[k] == s[0]).all(|k| {
        let rot = (0..l).map(|t| s[(k + t) % l]);
        s.iter().copied().lt(rot)
    })
}

fn neighbor_lists(weights: &EdgeWeights) -> Vec<Vec<usize>> {
    (0..weights.n())
        .map(|i| weights.out_arcs(i).map(|e| weights.arc(e).1).collect())
        .collect()
}

/// All orbits of the graph with `2 <= length <= max_len`, sorted by `(length, sequence)`.
pub fn enumerate_orbits(weights: &EdgeWeights, max_len: usize, budget: &OrbitBudget) -> Result<Vec<Orbit>> {
    let cycles = enumerate_cycles(&neighbor_lists(weights), 2, max_len, budget)?;
    Ok(cycles.into_iter().map(Orbit::from_canonical).collect())
}

/// `log Z_l = -log(1 - x)` for an orbit weight `x`, which must satisfy `|x| < 1`.
pub(crate) fn log_orbit_factor(x: f64) -> Result<f64> {
    if x.abs() < 1.0 {
        Ok(-(-x).ln_1p())
    } else {
        Err(Error::Domain(x))
    }
}

/// `log Z_l = -log(1 - R^l)`.
pub fn orbit_log_z(weights: &EdgeWeights, orbit: &Orbit) -> Result<f64> {
    log_orbit_factor(orbit.weight(weights)?)
}

/// Compensated (Neumaier) summation.
pub(crate) fn stable_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `sum_{|l| <= max_len} log Z_l`, which tends to `log Z` as `max_len` grows.
pub fn truncated_orbit_logsum(weights: &EdgeWeights, max_len: usize, budget: &OrbitBudget) -> Result<f64> {
    let orbits = enumerate_orbits(weights, max_len, budget)?;
    let terms = orbits
        .iter()
        .map(|o| orbit_log_z(weights, o))
        .collect::<Result<Vec<_>>>()?;
    Ok(stable_sum(terms))
}

/// Truncated orbit sum restricted to one class. For totally backtracking
/// orbits this tends to `log Z^bp`.
pub fn truncated_class_logsum(
    weights: &EdgeWeights,
    class: OrbitClass,
    max_len: usize,
    budget: &OrbitBudget,
) -> Result<f64> {
    let orbits = enumerate_orbits(weights, max_len, budget)?;
    let terms = orbits
        .iter()
        .filter(|o| o.class() == class)
        .map(|o| orbit_log_z(weights, o))
        .collect::<Result<Vec<_>>>()?;
    Ok(stable_sum(terms))
}

/// Both sides of `sum_{k <= L} tr(R^k) / k = sum_{l, m : m|l| <= L} (R^l)^m / m`.
/// The left side uses dense matrix powers, the right side the enumerated orbits.
pub fn trace_series_crosscheck(
    weights: &EdgeWeights,
    max_len: usize,
    budget: &OrbitBudget,
) -> Result<(f64, f64)> {
    let r = weights.matrix().to_dense();
    let mut power = r.clone();
    let mut lhs_terms = Vec::with_capacity(max_len);
    for k in 1..=max_len {
        lhs_terms.push(power.trace() / k as f64);
        power = &power * &r;
    }
    let orbits = enumerate_orbits(weights, max_len, budget)?;
    let mut rhs_terms = Vec::new();
    for o in &orbits {
        let x = o.weight(weights)?;
        let mut xm = x;
        let mut m = 1;
        while m * o.len() <= max_len {
            rhs_terms.push(xm / m as f64);
            xm *= x;
            m += 1;
        }
    }
    Ok((stable_sum(lhs_terms), stable_sum(rhs_terms)))
}

/// `dim * rho^(L+1) / ((L+1)(1 - rho))`: bound on the total contribution of
/// orbits longer than `max_len` for an operator of dimension `dim`.
pub fn orbit_tail_bound(dim: usize, rho: f64, max_len: usize) -> f64 {
    let l = (max_len + 1) as f64;
    dim as f64 * rho.powf(l) / (l * (1.0 - rho))
}
