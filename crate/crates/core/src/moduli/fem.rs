//! Piecewise-linear Dirichlet energy on structured grids.
//!
//! Every grid cell is split into two right triangles, so the energy of a
//! cell is half the weighted sum of its squared edge differences.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Free,
    Fixed(f64),
    Outside,
}

/// Node grid of `nx × ny` points, optionally periodic in the first index.
pub struct DirichletGrid {
    pub nx: usize,
    pub ny: usize,
    pub periodic_x: bool,
    /// Weight of edges along the first index (`hy/hx`) and along the second (`hx/hy`).
    pub wx: f64,
    pub wy: f64,
    pub nodes: Vec<Node>,
}

impl DirichletGrid {
    pub fn new(nx: usize, ny: usize, hx: f64, hy: f64, periodic_x: bool) -> DirichletGrid {
        DirichletGrid { nx, ny, periodic_x, wx: hy / hx, wy: hx / hy, nodes: vec![Node::Free; nx * ny] }
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    fn cell_count_x(&self) -> usize {
        if self.periodic_x {
            self.nx
        } else {
            self.nx - 1
        }
    }

    /// Edge coefficients: `cr[k]` couples node k to its successor in x,
    /// `cd[k]` to its successor in y.
    fn coefficients(&self) -> (Vec<f64>, Vec<f64>) {
        let mut cr = vec![0.0; self.nodes.len()];
        let mut cd = vec![0.0; self.nodes.len()];
        for j in 0..self.ny - 1 {
            for i in 0..self.cell_count_x() {
                let i1 = (i + 1) % self.nx;
                let corners = [self.idx(i, j), self.idx(i1, j), self.idx(i, j + 1), self.idx(i1, j + 1)];
                if corners.iter().any(|&k| self.nodes[k] == Node::Outside) {
                    continue;
                }
                cr[corners[0]] += 0.5 * self.wx;
                cr[corners[2]] += 0.5 * self.wx;
                cd[corners[0]] += 0.5 * self.wy;
                cd[corners[1]] += 0.5 * self.wy;
            }
        }
        (cr, cd)
    }

    fn neighbors(&self, k: usize) -> [Option<usize>; 4] {
        let (i, j) = (k % self.nx, k / self.nx);
        let right = if i + 1 < self.nx {
            Some(k + 1)
        } else if self.periodic_x {
            Some(self.idx(0, j))
        } else {
            None
        };
        let left = if i > 0 {
            Some(k - 1)
        } else if self.periodic_x {
            Some(self.idx(self.nx - 1, j))
        } else {
            None
        };
        let down = (j + 1 < self.ny).then(|| k + self.nx);
        let up = (j > 0).then(|| k - self.nx);
        [right, left, down, up]
    }

    /// Minimizes the energy over the free nodes by conjugate gradients and
    /// returns the minimal energy `∫|∇u|²` together with the solution.
    pub fn solve(&self, tol: f64) -> Result<(f64, Vec<f64>)> {
        let n = self.nodes.len();
        let (cr, cd) = self.coefficients();
        let coupling = |k: usize| -> [(Option<usize>, f64); 4] {
            let nb = self.neighbors(k);
            [
                (nb[0], cr[k]),
                (nb[1], nb[1].map_or(0.0, |l| cr[l])),
                (nb[2], cd[k]),
                (nb[3], nb[3].map_or(0.0, |u| cd[u])),
            ]
        };
        let free: Vec<bool> = self.nodes.iter().map(|s| *s == Node::Free).collect();
        if !self.nodes.iter().any(|s| matches!(s, Node::Fixed(_))) {
            return Err(Error::Invalid("no boundary values on the grid".into()));
        }
        let mut u: Vec<f64> = self.nodes.iter().map(|s| if let Node::Fixed(v) = s { *v } else { 0.0 }).collect();
        let apply = |p: &[f64], out: &mut [f64]| {
            for k in 0..n {
                if !free[k] {
                    out[k] = 0.0;
                    continue;
                }
                let mut acc = 0.0;
                for (nb, c) in coupling(k) {
                    if let Some(m) = nb {
                        let pm = if free[m] { p[m] } else { 0.0 };
                        acc += c * (p[k] - pm);
                    }
                }
                out[k] = acc;
            }
        };
        let mut b = vec![0.0; n];
        for k in 0..n {
            if !free[k] {
                continue;
            }
            for (nb, c) in coupling(k) {
                if let Some(m) = nb {
                    if let Node::Fixed(v) = self.nodes[m] {
                        b[k] += c * v;
                    }
                }
            }
        }
        let mut x = vec![0.0; n];
        let mut r = b.clone();
        let mut p = r.clone();
        let mut ap = vec![0.0; n];
        let mut rr: f64 = r.iter().map(|v| v * v).sum();
        let b_norm = rr.sqrt().max(1e-300);
        for _ in 0..20 * n.max(10) {
            if rr.sqrt() <= tol * b_norm {
                break;
            }
            apply(&p, &mut ap);
            let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
            if pap <= 0.0 {
                break;
            }
            let alpha = rr / pap;
            for k in 0..n {
                x[k] += alpha * p[k];
                r[k] -= alpha * ap[k];
            }
            let rr_new: f64 = r.iter().map(|v| v * v).sum();
            let beta = rr_new / rr;
            rr = rr_new;
            for k in 0..n {
                p[k] = r[k] + beta * p[k];
            }
        }
        for k in 0..n {
            if free[k] {
                u[k] = x[k];
            }
        }
        let mut energy = 0.0;
        for k in 0..n {
            let nb = self.neighbors(k);
            if let Some(m) = nb[0] {
                energy += cr[k] * (u[k] - u[m]).powi(2);
            }
            if let Some(m) = nb[2] {
                energy += cd[k] * (u[k] - u[m]).powi(2);
            }
        }
        Ok((energy, u))
    }
}
