//! Forward-difference energy, gradient and Hessian on a masked grid.
//!
//! Interior unknowns are addressed by slot (position in `Grid::interior`);
//! full node vectors carry the Dirichlet datum on exterior nodes.

use crate::grid::{Grid, NO_SLOT};
use crate::par::{self, Exec};

/// The lower-order term of the energy.
#[derive(Clone, Copy, Debug)]
pub(crate) enum Source<'a> {
    /// `-α/q ∫|u|^q`
    Power { alpha: f64, q: f64 },
    /// `-∫ f u`, with `f` indexed by slot
    Fixed(&'a [f64]),
}

pub(crate) struct Model<'a> {
    pub grid: &'a Grid,
    pub p: f64,
    pub eps: f64,
    pub source: Source<'a>,
    pub exec: Exec,
}

/// `u^{q-1}` extended oddly, with `u^0 ≡ 1` for `u ≥ 0`.
pub(crate) fn power_source(x: f64, q: f64) -> f64 {
    if q == 1.0 {
        if x >= 0.0 {
            1.0
        } else {
            -1.0
        }
    } else {
        x.abs().powf(q - 1.0).copysign(x)
    }
}

/// Per-cell Hessian blocks `[A11, A12, A22]` (1D: `[a, 0, 0]`).
pub(crate) type CellHessian = [f64; 3];

impl<'a> Model<'a> {
    pub fn n(&self) -> usize {
        self.grid.interior_count()
    }

    /// Writes interior slot values into a full node vector.
    pub fn scatter(&self, x: &[f64], u: &mut [f64]) {
        for (s, &k) in self.grid.interior().iter().enumerate() {
            u[k] = x[s];
        }
    }

    fn cell_gradient(&self, u: &[f64], k: usize) -> [f64; 2] {
        let h = self.grid.spacing();
        let g0 = (u[k + 1] - u[k]) / h;
        if self.grid.dim() == 1 {
            [g0, 0.0]
        } else {
            let e = self.grid.extents()[0];
            [g0, (u[k + e] - u[k]) / h]
        }
    }

    fn squared(&self, g: [f64; 2]) -> f64 {
        g[0] * g[0] + g[1] * g[1] + self.eps * self.eps
    }

    /// `h^N Σ_cells (1/p)((|g|² + ε²)^{p/2} - ε^p)`.
    pub fn dirichlet(&self, u: &[f64]) -> f64 {
        let grid = self.grid;
        let offset = self.eps.powf(self.p);
        let sum = par::chunked_sum(self.exec, grid.node_count(), |r| {
            let mut acc = 0.0;
            for k in r {
                if grid.has_cell(k) {
                    let s = self.squared(self.cell_gradient(u, k));
                    acc += s.powf(0.5 * self.p) - offset;
                }
            }
            acc
        });
        grid.cell_volume() * sum / self.p
    }

    /// The source part of the energy (sign included).
    pub fn source_energy(&self, x: &[f64]) -> f64 {
        let vol = self.grid.cell_volume();
        match self.source {
            Source::Power { alpha, q } => {
                let sum = par::chunked_sum(self.exec, x.len(), |r| {
                    x[r].iter().map(|v| v.abs().powf(q)).sum::<f64>()
                });
                -alpha * vol * sum / q
            }
            Source::Fixed(f) => {
                let sum = par::chunked_sum(self.exec, x.len(), |r| {
                    r.map(|s| f[s] * x[s]).sum::<f64>()
                });
                -vol * sum
            }
        }
    }

    pub fn energy(&self, u: &[f64], x: &[f64]) -> f64 {
        self.dirichlet(u) + self.source_energy(x)
    }

    /// Flux `(|g|² + ε²)^{(p-2)/2} g` on every cell (zero elsewhere).
    fn fluxes(&self, u: &[f64]) -> Vec<[f64; 2]> {
        let grid = self.grid;
        let mut flat = vec![0.0; 2 * grid.node_count()];
        par::fill(self.exec, &mut flat, |i| {
            let k = i / 2;
            if !grid.has_cell(k) {
                return 0.0;
            }
            let g = self.cell_gradient(u, k);
            let s = self.squared(g);
            let a = if s > 0.0 { s.powf(0.5 * self.p - 1.0) } else { 0.0 };
            a * g[i % 2]
        });
        flat.chunks_exact(2).map(|c| [c[0], c[1]]).collect()
    }

    /// Gradient of the Dirichlet part with respect to interior values.
    pub fn dirichlet_gradient(&self, u: &[f64]) -> Vec<f64> {
        let grid = self.grid;
        let flux = self.fluxes(u);
        let scale = grid.spacing().powi(grid.dim() as i32 - 1);
        let e = grid.extents()[0];
        let interior = grid.interior();
        let mut out = vec![0.0; interior.len()];
        par::fill(self.exec, &mut out, |s| {
            let k = interior[s];
            let mut v = flux[k - 1][0] - flux[k][0];
            if grid.dim() == 2 {
                v += flux[k - e][1] - flux[k][1];
            }
            scale * v
        });
        out
    }

    /// Full energy gradient (`h^N`-weighted) at interior values `x`.
    pub fn gradient(&self, u: &[f64], x: &[f64]) -> Vec<f64> {
        let mut g = self.dirichlet_gradient(u);
        let vol = self.grid.cell_volume();
        match self.source {
            Source::Power { alpha, q } => {
                for (gs, &xs) in g.iter_mut().zip(x) {
                    *gs -= alpha * vol * power_source(xs, q);
                }
            }
            Source::Fixed(f) => {
                for (gs, fs) in g.iter_mut().zip(f) {
                    *gs -= vol * fs;
                }
            }
        }
        g
    }

    /// Per-cell Hessian of the Dirichlet integrand with respect to the
    /// cell gradient: `a I + b g gᵀ`.
    pub fn cell_hessians(&self, u: &[f64]) -> Vec<CellHessian> {
        let grid = self.grid;
        let p = self.p;
        let mut flat = vec![0.0; 3 * grid.node_count()];
        par::fill(self.exec, &mut flat, |i| {
            let k = i / 3;
            if !grid.has_cell(k) {
                return 0.0;
            }
            let g = self.cell_gradient(u, k);
            let s = self.squared(g);
            if s <= 0.0 {
                return 0.0;
            }
            let a = s.powf(0.5 * p - 1.0);
            let b = (p - 2.0) * s.powf(0.5 * p - 2.0);
            match i % 3 {
                0 => a + b * g[0] * g[0],
                1 => b * g[0] * g[1],
                _ => a + b * g[1] * g[1],
            }
        });
        flat.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect()
    }

    /// Slot of node `k`, or `None` for exterior nodes.
    pub fn slot(&self, k: usize) -> Option<usize> {
        match self.grid.slots()[k] {
            NO_SLOT => None,
            s => Some(s),
        }
    }
}
