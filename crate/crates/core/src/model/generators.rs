use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{perron_root, GraphModel};
use crate::error::{Error, Result};

const MAX_DRAWS: usize = 100;

/// Unit-diagonal 4-connected grid with `J_ij = -r` on every edge.
/// Vertex `(row, col)` has id `row * cols + col`.
pub fn gen_grid(rows: usize, cols: usize, r: f64, periodic: bool) -> Result<GraphModel> {
    if rows < 2 || cols < 2 {
        return Err(Error::InvalidParameter(format!(
            "grid needs rows, cols >= 2 (got {rows}x{cols})"
        )));
    }
    if periodic && (rows < 3 || cols < 3) {
        return Err(Error::InvalidParameter(format!(
            "periodic grid needs rows, cols >= 3 (got {rows}x{cols})"
        )));
    }
    let id = |a: usize, b: usize| a * cols + b;
    let mut entries = Vec::new();
    for a in 0..rows {
        for b in 0..cols {
            if b + 1 < cols || periodic {
                entries.push((id(a, b), id(a, (b + 1) % cols), -r));
            }
            if a + 1 < rows || periodic {
                entries.push((id(a, b), id((a + 1) % rows, b), -r));
            }
        }
    }
    GraphModel::new(vec![1.0; rows * cols], entries)
}

/// Complete graph `K_n` with unit diagonal and `J_ij = -r`.
pub fn gen_complete(n: usize, r: f64) -> Result<GraphModel> {
    let entries = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j, -r)));
    GraphModel::new(vec![1.0; n], entries)
}

/// Cycle `C_n` with unit diagonal and `J_ij = -r`.
pub fn gen_cycle(n: usize, r: f64) -> Result<GraphModel> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!("cycle needs n >= 3 (got {n})")));
    }
    GraphModel::new(vec![1.0; n], (0..n).map(|i| (i, (i + 1) % n, -r)))
}

/// Connected Erdős–Rényi model with signed weights, rescaled so that
/// `rho(|R|) = target_rho`. Diagonals are drawn from `[1, 2]`, off-diagonals
/// from `[-1, 1]` before rescaling. Deterministic in `seed`.
pub fn gen_random(n: usize, avg_degree: f64, target_rho: f64, seed: u64) -> Result<GraphModel> {
    check_target(target_rho)?;
    if n < 2 || !(avg_degree > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "random model needs n >= 2 and avg_degree > 0 (got n = {n}, avg_degree = {avg_degree})"
        )));
    }
    let p = (avg_degree / (n - 1) as f64).min(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_DRAWS {
        let diag: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..=2.0)).collect();
        let mut entries = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random_bool(p) {
                    entries.push((i, j, signed_weight(&mut rng)));
                }
            }
        }
        let model = GraphModel::new(diag, entries)?;
        let (w, _) = model.normalize();
        if model.num_edges() == 0 || !w.is_connected() {
            continue;
        }
        return rescale(model, target_rho);
    }
    Err(Error::InvalidParameter(format!(
        "no connected graph in {MAX_DRAWS} draws (n = {n}, avg_degree = {avg_degree})"
    )))
}

/// Random recursive tree (each vertex attaches to a uniformly chosen earlier
/// vertex) with the same weight distribution and rescaling as [`gen_random`].
pub fn gen_random_tree(n: usize, target_rho: f64, seed: u64) -> Result<GraphModel> {
    check_target(target_rho)?;
    if n < 2 {
        return Err(Error::InvalidParameter(format!("tree needs n >= 2 (got {n})")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let diag: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..=2.0)).collect();
    let entries: Vec<_> = (1..n)
        .map(|v| (rng.random_range(0..v), v, signed_weight(&mut rng)))
        .collect();
    rescale(GraphModel::new(diag, entries)?, target_rho)
}

fn check_target(target_rho: f64) -> Result<()> {
    if target_rho > 0.0 && target_rho < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "target_rho must lie in (0, 1), got {target_rho}"
        )))
    }
}

fn signed_weight(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let v: f64 = rng.random_range(-1.0..=1.0);
        if v != 0.0 {
            return v;
        }
    }
}

/// Multiplies every off-diagonal by `target / rho(|R|)`; `R` scales linearly.
fn rescale(model: GraphModel, target_rho: f64) -> Result<GraphModel> {
    let (w, _) = model.normalize();
    let p = perron_root(&w.matrix(), 1e-13, 1_000_000);
    if !p.converged || p.rho <= 0.0 {
        return Err(Error::Numerical(format!(
            "power iteration failed while rescaling (residual {:e})",
            p.residual
        )));
    }
    let c = target_rho / p.rho;
    let entries: Vec<_> = model
        .edges()
        .iter()
        .zip(model.off_diag())
        .map(|(&(i, j), &v)| (i, j, v * c))
        .collect();
    GraphModel::new(model.diag().to_vec(), entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::spectral_radius_abs;

    #[test]
    fn grid_edge_counts() {
        let g = gen_grid(3, 3, 0.2, false).unwrap();
        assert_eq!((g.n(), g.num_edges()), (9, 12));
        let g = gen_grid(3, 3, 0.2, true).unwrap();
        assert_eq!((g.n(), g.num_edges()), (9, 18));
        assert!(gen_grid(1, 3, 0.2, false).is_err());
        assert!(gen_grid(2, 3, 0.2, true).is_err());
    }

    #[test]
    fn random_is_seeded_and_rescaled() {
        let a = gen_random(20, 3.0, 0.8, 7).unwrap();
        let b = gen_random(20, 3.0, 0.8, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, gen_random(20, 3.0, 0.8, 8).unwrap());
        let rep = spectral_radius_abs(&a.normalize().0, 1e-12, 100_000);
        assert!(rep.walk_summable);
        assert!((rep.rho_abs - 0.8).abs() < 1e-6);
        assert!(a.off_diag().iter().any(|v| *v > 0.0) && a.off_diag().iter().any(|v| *v < 0.0));
    }

    #[test]
    fn random_tree_shape() {
        let t = gen_random_tree(30, 0.9, 1).unwrap();
        assert_eq!(t.num_edges(), 29);
        assert_eq!(t.girth(), None);
        let rep = spectral_radius_abs(&t.normalize().0, 1e-12, 100_000);
        assert!((rep.rho_abs - 0.9).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_targets() {
        assert!(gen_random(10, 2.0, 1.0, 0).is_err());
        assert!(gen_random(10, 2.0, 0.0, 0).is_err());
        assert!(gen_random_tree(10, -0.5, 0).is_err());
    }
}
