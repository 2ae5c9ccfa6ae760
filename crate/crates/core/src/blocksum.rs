//! Block resummation: `log Z_B = sum_B w_B log Z(A_B)` over an
//! intersection-closed family of index blocks with inclusion-exclusion
//! weights. Every orbit contained in some block is counted exactly once, so
//! the estimate is exact on those orbits and only misses orbits that no
//! block covers. Works for `A = R` (vertex blocks) and `A = R'` (blocks of
//! directed edges).

use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exact::{check_budget, log_z_of, DENSE_BUDGET};
use crate::model::EdgeWeights;
use crate::orbits::{enumerate_orbits, orbit_log_z, stable_sum, Orbit, OrbitBudget};
use crate::sparse::CsrMatrix;

/// Blocks (sorted index sets) with integer weights and the coverage length `L`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockFamily {
    blocks: Vec<Vec<usize>>,
    weights: Vec<i64>,
    coverage: usize,
}

impl BlockFamily {
    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn weights(&self) -> &[i64] {
        &self.weights
    }

    /// The `L` the family was designed for.
    pub fn coverage_length(&self) -> usize {
        self.coverage
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Blocks not strictly contained in another block.
    pub fn maximal_blocks(&self) -> impl Iterator<Item = &[usize]> {
        self.blocks.iter().enumerate().filter_map(|(k, b)| {
            let dominated = self
                .blocks
                .iter()
                .enumerate()
                .any(|(m, c)| m != k && c.len() > b.len() && is_subset(b, c));
            (!dominated).then_some(b.as_slice())
        })
    }

    /// Checks `sum_{B' contains B} w_B' = 1` for every block, exactly.
    pub fn weight_identity_holds(&self) -> bool {
        self.blocks.iter().all(|b| {
            let total: i64 = self
                .blocks
                .iter()
                .zip(&self.weights)
                .filter(|(c, _)| is_subset(b, c))
                .map(|(_, &w)| w)
                .sum();
            total == 1
        })
    }

    /// True when some block contains every vertex of `orbit`.
    pub fn covers(&self, orbit: &Orbit) -> bool {
        let vertices: BTreeSet<usize> = orbit.cycle().iter().copied().collect();
        self.blocks
            .iter()
            .any(|b| vertices.iter().all(|v| b.binary_search(v).is_ok()))
    }
}

/// Both slices sorted; true when every element of `a` occurs in `b`.
fn is_subset(a: &[usize], b: &[usize]) -> bool {
    if a.len() > b.len() {
        return false;
    }
    let mut it = b.iter();
    a.iter().all(|x| it.by_ref().any(|y| y == x))
}

fn intersect(a: &[usize], b: &[usize]) -> Vec<usize> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Closes `blocks` under nonempty pairwise intersection, drops duplicates and
/// assigns `w_B = 1 - sum_{B' strictly containing B} w_B'` from the largest
/// blocks down (maximal blocks get 1).
///
/// Blocks are ordered by decreasing size, then lexicographically.
pub fn close_and_weight(blocks: impl IntoIterator<Item = Vec<usize>>, coverage: usize) -> BlockFamily {
    let mut family: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut pending: Vec<Vec<usize>> = Vec::new();
    for mut b in blocks {
        b.sort_unstable();
        b.dedup();
        if !b.is_empty() && family.insert(b.clone()) {
            pending.push(b);
        }
    }
    let mut all: Vec<Vec<usize>> = family.iter().cloned().collect();
    let mut by_index: HashMap<usize, Vec<usize>> = HashMap::new();
    for (k, b) in all.iter().enumerate() {
        for &v in b {
            by_index.entry(v).or_default().push(k);
        }
    }
    while let Some(b) = pending.pop() {
        let partners: BTreeSet<usize> = b
            .iter()
            .flat_map(|v| by_index.get(v).into_iter().flatten().copied())
            .collect();
        for k in partners {
            let c = intersect(&b, &all[k]);
            if !c.is_empty() && family.insert(c.clone()) {
                let id = all.len();
                for &v in &c {
                    by_index.entry(v).or_default().push(id);
                }
                all.push(c.clone());
                pending.push(c);
            }
        }
    }
    all.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
    let mut weights: Vec<i64> = Vec::with_capacity(all.len());
    for (k, b) in all.iter().enumerate() {
        let above: i64 = all[..k]
            .iter()
            .zip(&weights)
            .filter(|(c, _)| c.len() > b.len() && is_subset(b, c))
            .map(|(_, &w)| w)
            .sum();
        weights.push(1 - above);
    }
    BlockFamily {
        blocks: all,
        weights,
        coverage,
    }
}

/// `L x L` squares at stride `L/2` on a `rows x cols` grid (vertex
/// `row * cols + col`), closed under intersection. The closure adds the
/// `L x L/2`, `L/2 x L` and `L/2 x L/2` overlaps with weights -1, -1, 1.
///
/// On plain grids the last window in each direction is pulled back to end at
/// the border. Periodic grids wrap and need `L/2` to divide both sides.
pub fn grid_block_family(rows: usize, cols: usize, l: usize, periodic: bool) -> Result<BlockFamily> {
    if l < 2 || !l.is_multiple_of(2) || l > rows.min(cols) {
        return Err(Error::InvalidParameter(format!(
            "block size L = {l} must be even, at least 2 and at most min(rows, cols) = {}",
            rows.min(cols)
        )));
    }
    let half = l / 2;
    if periodic && (!rows.is_multiple_of(half) || !cols.is_multiple_of(half)) {
        return Err(Error::InvalidParameter(format!(
            "periodic {rows}x{cols} grid needs L/2 = {half} to divide both sides"
        )));
    }
    let starts = |len: usize| -> Vec<usize> {
        if periodic {
            (0..len).step_by(half).collect()
        } else {
            let mut s: Vec<usize> = (0..=len - l).step_by(half).collect();
            if s.last() != Some(&(len - l)) {
                s.push(len - l);
            }
            s
        }
    };
    let mut squares = Vec::new();
    for r0 in starts(rows) {
        for c0 in starts(cols) {
            let block = (0..l)
                .flat_map(|a| (0..l).map(move |b| ((r0 + a) % rows) * cols + (c0 + b) % cols))
                .collect();
            squares.push(block);
        }
    }
    Ok(close_and_weight(squares, l))
}

/// Maps each vertex block to the directed edges with both endpoints inside
/// it and re-weights the result, giving a family for `A = R'`.
pub fn induced_edge_family(nodes: &BlockFamily, weights: &EdgeWeights) -> BlockFamily {
    let edge_blocks = nodes.blocks.iter().map(|b| {
        b.iter()
            .filter(|&&i| i < weights.n())
            .flat_map(|&i| weights.out_arcs(i))
            .filter(|&e| b.binary_search(&weights.arc(e).1).is_ok())
            .collect::<Vec<usize>>()
    });
    close_and_weight(edge_blocks, nodes.coverage)
}

/// `sum_B w_B (-log det(I - A_B))` with a dense factorization per block.
pub fn log_z_blocks(a: &CsrMatrix, family: &BlockFamily) -> Result<f64> {
    if let Some(&max) = family.blocks.iter().filter_map(|b| b.last()).max() {
        if max >= a.dim() {
            return Err(Error::InvalidParameter(format!(
                "block index {max} outside an operator of dimension {}",
                a.dim()
            )));
        }
    }
    let terms: Vec<f64> = family
        .blocks
        .par_iter()
        .zip(family.weights.par_iter())
        .map(|(b, &w)| {
            check_budget(b.len(), DENSE_BUDGET)?;
            Ok(w as f64 * log_z_of(&a.identity_minus_principal(b))?)
        })
        .collect::<Result<_>>()?;
    Ok(stable_sum(terms))
}

/// Per-node bound `rho^L / (L (1 - rho))` on `|log(Z_B / Z)| / n` for a
/// family covering every orbit shorter than `L`.
pub fn blocksum_error_bound(rho: f64, l: usize) -> f64 {
    rho.powi(l as i32) / (l as f64 * (1.0 - rho))
}

/// `sum log Z_l` over the orbits of length at most `max_len` that lie in
/// some block. For a vertex family this is what `log_z_blocks` computes,
/// up to the orbits longer than `max_len`.
pub fn covered_orbit_logsum(
    weights: &EdgeWeights,
    family: &BlockFamily,
    max_len: usize,
    budget: &OrbitBudget,
) -> Result<f64> {
    let orbits = enumerate_orbits(weights, max_len, budget)?;
    let terms = orbits
        .iter()
        .filter(|o| family.covers(o))
        .map(|o| orbit_log_z(weights, o))
        .collect::<Result<Vec<_>>>()?;
    Ok(stable_sum(terms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::log_z;
    use crate::model::{gen_grid, perron_root};

    #[test]
    fn closure_examples() {
        let f = close_and_weight([vec![0, 1], vec![2, 3]], 2);
        assert_eq!(f.weights(), &[1, 1]);
        let f = close_and_weight([vec![0, 1, 2], vec![2, 3, 1]], 2);
        assert_eq!(f.blocks(), &[vec![0, 1, 2], vec![1, 2, 3], vec![1, 2]]);
        assert_eq!(f.weights(), &[1, 1, -1]);
        assert!(f.weight_identity_holds());
        // triple overlap needs a +1 on the common part
        let f = close_and_weight([vec![0, 1, 9], vec![1, 2, 9], vec![2, 0, 9]], 2);
        assert!(f.weight_identity_holds());
        let w: HashMap<Vec<usize>, i64> = f.blocks().iter().cloned().zip(f.weights().iter().copied()).collect();
        assert_eq!(w[&vec![9]], 1);
        assert_eq!(w[&vec![0, 9]], -1);
    }

    #[test]
    fn grid_family_shapes() {
        let f = grid_block_family(4, 4, 4, false).unwrap();
        assert_eq!((f.len(), f.weights()), (1, &[1][..]));

        let f = grid_block_family(8, 8, 4, true).unwrap();
        let mut count: HashMap<(usize, i64), usize> = HashMap::new();
        for (b, &w) in f.blocks().iter().zip(f.weights()) {
            *count.entry((b.len(), w)).or_default() += 1;
        }
        assert_eq!(count.len(), 3);
        assert_eq!(count[&(16, 1)], 16);
        assert_eq!(count[&(8, -1)], 32);
        assert_eq!(count[&(4, 1)], 16);
        assert!(f.weight_identity_holds());

        let f = grid_block_family(6, 7, 4, false).unwrap();
        assert!(f.weight_identity_holds());
        assert_eq!(f.maximal_blocks().count(), 6);
    }

    #[test]
    fn grid_family_rejects_bad_parameters() {
        assert!(grid_block_family(8, 8, 3, false).is_err());
        assert!(grid_block_family(8, 8, 10, false).is_err());
        assert!(grid_block_family(8, 8, 0, false).is_err());
        assert!(grid_block_family(9, 8, 4, true).is_err());
        assert!(grid_block_family(9, 8, 4, false).is_ok());
    }

    #[test]
    fn periodic_whole_grid_block_dedups() {
        let f = grid_block_family(4, 4, 4, true).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f.blocks()[0].len(), 16);
    }

    #[test]
    fn one_block_is_exact_and_singletons_vanish() {
        let w = gen_grid(4, 4, 0.2, false).unwrap().normalize().0;
        let a = w.matrix();
        let whole = close_and_weight([(0..16).collect()], 4);
        let est = log_z_blocks(&a, &whole).unwrap();
        assert!((est - log_z(&w).unwrap()).abs() < 1e-13);
        let singles = close_and_weight((0..16).map(|i| vec![i]), 1);
        assert_eq!(log_z_blocks(&a, &singles).unwrap(), 0.0);
        let bad = close_and_weight([vec![3, 40]], 2);
        assert!(log_z_blocks(&a, &bad).is_err());
    }

    #[test]
    fn periodic_grid_error_within_bound() {
        let w = gen_grid(8, 8, 0.2, true).unwrap().normalize().0;
        let a = w.matrix();
        let rho = perron_root(&a, 1e-12, 10_000).rho;
        let exact = log_z(&w).unwrap();
        let mut last = f64::INFINITY;
        for l in [2, 4, 8] {
            let f = grid_block_family(8, 8, l, true).unwrap();
            let err = (log_z_blocks(&a, &f).unwrap() - exact).abs() / 64.0;
            assert!(err <= blocksum_error_bound(rho, l), "L = {l}");
            assert!(err <= last);
            last = err;
        }
    }

    #[test]
    fn induced_edges() {
        let w = gen_grid(3, 3, 0.2, false).unwrap().normalize().0;
        let pair = close_and_weight([vec![0, 1]], 2);
        let e = induced_edge_family(&pair, &w);
        let expect = vec![w.arc_id(0, 1).unwrap(), w.arc_id(1, 0).unwrap()];
        assert_eq!(e.blocks(), &[expect]);

        let nodes = grid_block_family(3, 3, 2, false).unwrap();
        let edges = induced_edge_family(&nodes, &w);
        assert!(edges.weight_identity_holds());
        // single vertices induce nothing, leaving squares and edges
        assert!(edges.blocks().iter().all(|b| b.len() == 8 || b.len() == 2));
    }

    #[test]
    fn bound_formula() {
        assert!((blocksum_error_bound(0.8, 8) - 0.8f64.powi(8) / 1.6).abs() < 1e-15);
        assert!((blocksum_error_bound(0.8, 8) - 0.104858).abs() < 1e-6);
        let ratio = blocksum_error_bound(0.5, 8) / blocksum_error_bound(0.5, 4);
        assert!((ratio - 0.5f64.powi(4) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn covered_orbits_reproduce_the_estimate() {
        let w = gen_grid(4, 4, 0.1, false).unwrap().normalize().0;
        let f = grid_block_family(4, 4, 2, false).unwrap();
        let est = log_z_blocks(&w.matrix(), &f).unwrap();
        let oracle = covered_orbit_logsum(&w, &f, 12, &OrbitBudget::default()).unwrap();
        // 2x2 blocks: covered orbits live on single squares, tails beyond 12 are tiny
        assert!((est - oracle).abs() < 1e-9, "{est} vs {oracle}");
    }
}
