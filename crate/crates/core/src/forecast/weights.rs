use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::AtomGrid;

/// Row-normalized adjacency W in CSR form: W_ij = 1/deg(i) for neighbours.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialWeights {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

pub fn build_weights(grid: &AtomGrid) -> SpatialWeights {
    let n = grid.len();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    row_ptr.push(0);
    for i in 0..n {
        let nb = grid.neighbors(i);
        let v = 1.0 / nb.len() as f64;
        for &j in nb {
            cols.push(j);
            vals.push(v);
        }
        row_ptr.push(cols.len());
    }
    SpatialWeights { n, row_ptr, cols, vals }
}

impl SpatialWeights {
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn total_weight(&self) -> f64 {
        self.vals.iter().sum()
    }

    /// W x.
    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    /// (I − ρW) x.
    pub fn apply_lag(&self, rho: f64, x: &[f64]) -> Vec<f64> {
        let wx = self.mul(x);
        x.iter().zip(wx).map(|(a, b)| a - rho * b).collect()
    }

    /// Solves (I − ρW) x = b by Gauss–Seidel. Each row of W sums to at most
    /// one, so the iteration contracts whenever |ρ| < 1.
    pub fn solve_lag(&self, rho: f64, b: &[f64]) -> Result<Vec<f64>> {
        if !(rho.abs() < 1.0) {
            return Err(Error::Singular(format!("I - rho W is singular or unstable at rho = {rho}")));
        }
        let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut x = b.to_vec();
        if scale == 0.0 || rho == 0.0 {
            return Ok(x);
        }
        let tol = 1e-15 * scale / (1.0 - rho.abs());
        let max_iter = 50 + (40.0 / -(rho.abs().ln())).ceil() as usize;
        for _ in 0..max_iter {
            let mut delta = 0.0f64;
            for i in 0..self.n {
                let s: f64 = self.row(i).map(|(j, v)| v * x[j]).sum();
                let new = b[i] + rho * s;
                delta = delta.max((new - x[i]).abs());
                x[i] = new;
            }
            if delta <= tol {
                return Ok(x);
            }
        }
        let r = self.apply_lag(rho, &x);
        let resid = r.iter().zip(b).fold(0.0f64, |m, (a, c)| m.max((a - c).abs()));
        if resid <= 1e-9 * scale {
            Ok(x)
        } else {
            Err(Error::Singular(format!(
                "lag solve did not converge at rho = {rho} (residual {resid:e})"
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::{atomize, GridKind, Polygon, Projection};

    fn grid(rows: usize, cols: usize) -> AtomGrid {
        atomize(
            &[Polygon::rect(0.0, 0.0, cols as f64, rows as f64)],
            1.0,
            GridKind::SquareRook,
            Projection::PlanarMiles,
        )
        .unwrap()
    }

    #[test]
    fn interior_atom_quarter_weights() {
        let w = build_weights(&grid(3, 3));
        let row: Vec<_> = w.row(4).collect();
        assert_eq!(row.len(), 4);
        assert!(row.iter().all(|&(_, v)| v == 0.25));
        assert_eq!(w.get(4, 4), 0.0);
    }

    #[test]
    fn path_rows() {
        let w = build_weights(&grid(1, 3));
        assert_eq!(w.row(1).collect::<Vec<_>>(), vec![(0, 0.5), (2, 0.5)]);
        assert_eq!(w.row(0).collect::<Vec<_>>(), vec![(1, 1.0)]);
    }

    #[test]
    fn isolated_atom_zero_row() {
        let g = atomize(
            &[Polygon::rect(0.0, 0.0, 1.0, 1.0), Polygon::rect(3.0, 0.0, 4.0, 1.0)],
            1.0,
            GridKind::SquareRook,
            Projection::PlanarMiles,
        )
        .unwrap();
        let w = build_weights(&g);
        assert_eq!(w.row(0).count(), 0);
        assert_eq!(w.solve_lag(0.5, &[2.0, 3.0]).unwrap(), vec![2.0, 3.0]);
    }

    #[test]
    fn solve_inverts_apply() {
        let w = build_weights(&grid(4, 5));
        let x: Vec<f64> = (0..20).map(|k| (k as f64 * 0.37).sin() + 2.0).collect();
        for rho in [-0.95, -0.3, 0.0, 0.4, 0.98] {
            let b = w.apply_lag(rho, &x);
            let y = w.solve_lag(rho, &b).unwrap();
            for (a, c) in x.iter().zip(&y) {
                assert!((a - c).abs() < 1e-10, "rho {rho}");
            }
        }
        assert!(matches!(w.solve_lag(1.0, &x), Err(Error::Singular(_))));
    }
}
