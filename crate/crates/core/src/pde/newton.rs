//! Damped, projected Newton-CG on the interior unknowns.
//!
//! The Hessian is assembled on the 7-point stencil induced by forward
//! differences (3-point in 1D) and preconditioned with IC(0).

use super::discrete::{Model, Source};
use super::{LoopOutcome, LoopSettings};
use crate::grid::NO_SLOT;
use crate::par;

/// Neighbour layout: `[-e2, +e1-e2, -e1]` (lower, increasing slot order),
/// then `[+e1, +e2, -e1+e2]`.
const WIDTH: usize = 6;

pub(crate) struct Ell {
    pub diag: Vec<f64>,
    pub cols: Vec<[usize; WIDTH]>,
    pub vals: Vec<[f64; WIDTH]>,
}

impl Ell {
    fn n(&self) -> usize {
        self.diag.len()
    }

    fn apply(&self, exec: par::Exec, x: &[f64], y: &mut [f64]) {
        par::fill(exec, y, |i| {
            let mut acc = self.diag[i] * x[i];
            for t in 0..WIDTH {
                let c = self.cols[i][t];
                if c != NO_SLOT {
                    acc += self.vals[i][t] * x[c];
                }
            }
            acc
        });
    }
}

/// Assembles the Dirichlet Hessian restricted to the free unknowns. Frozen
/// rows become identity rows. Returns the matrix and the raw Dirichlet diagonal.
pub(crate) fn assemble(model: &Model, u: &[f64], free: &[bool]) -> (Ell, Vec<f64>) {
    let grid = model.grid;
    let cells = model.cell_hessians(u);
    let n = model.n();
    let scale = grid.spacing().powi(grid.dim() as i32 - 2);
    let e = grid.extents()[0];
    let interior = grid.interior();
    let slot = |k: usize| model.slot(k).unwrap_or(NO_SLOT);

    let rows: Vec<usize> = (0..n).collect();
    let assembled = par::map(model.exec, &rows, |&s| {
        let k = interior[s];
        let mut cols = [NO_SLOT; WIDTH];
        let mut vals = [0.0; WIDTH];
        let diag;
        if grid.dim() == 1 {
            let (c, l) = (cells[k][0], cells[k - 1][0]);
            diag = scale * (c + l);
            cols[2] = slot(k - 1);
            vals[2] = -scale * l;
            cols[3] = slot(k + 1);
            vals[3] = -scale * c;
        } else {
            let (c, l, b) = (cells[k], cells[k - 1], cells[k - e]);
            diag = scale * (c[0] + 2.0 * c[1] + c[2] + l[0] + b[2]);
            cols = [
                slot(k - e),
                slot(k + 1 - e),
                slot(k - 1),
                slot(k + 1),
                slot(k + e),
                slot(k - 1 + e),
            ];
            vals = [
                -scale * (b[1] + b[2]),
                scale * b[1],
                -scale * (l[0] + l[1]),
                -scale * (c[0] + c[1]),
                -scale * (c[1] + c[2]),
                scale * l[1],
            ];
        }
        for t in 0..WIDTH {
            if cols[t] != NO_SLOT && !(free[s] && free[cols[t]]) {
                cols[t] = NO_SLOT;
            }
            if cols[t] == NO_SLOT {
                vals[t] = 0.0;
            }
        }
        (diag, cols, vals)
    });
    let mut ell = Ell {
        diag: Vec::with_capacity(n),
        cols: Vec::with_capacity(n),
        vals: Vec::with_capacity(n),
    };
    let mut raw = Vec::with_capacity(n);
    for (s, (d, c, v)) in assembled.into_iter().enumerate() {
        raw.push(d);
        ell.diag.push(if free[s] { d } else { 1.0 });
        ell.cols.push(c);
        ell.vals.push(v);
    }
    (ell, raw)
}

/// Incomplete Cholesky with zero fill on the lower half of an [`Ell`].
pub(crate) struct Ic0 {
    diag: Vec<f64>,
    lower: Vec<[f64; 3]>,
    cols: Vec<[usize; 3]>,
}

impl Ic0 {
    pub fn new(a: &Ell) -> Ic0 {
        let mut shift = 0.0;
        loop {
            if let Some(f) = Self::try_factor(a, shift) {
                return f;
            }
            shift = if shift == 0.0 { 1e-3 } else { 2.0 * shift };
            log::debug!("IC(0) breakdown, retrying with diagonal shift {shift}");
        }
    }

    fn try_factor(a: &Ell, shift: f64) -> Option<Ic0> {
        let n = a.n();
        let dmax = a.diag.iter().fold(0.0, |m: f64, d| m.max(d.abs()));
        let mut diag = vec![0.0; n];
        let mut lower = vec![[0.0; 3]; n];
        let cols: Vec<[usize; 3]> = a.cols.iter().map(|c| [c[0], c[1], c[2]]).collect();
        for i in 0..n {
            let mut pivot = a.diag[i] + shift * a.diag[i].abs().max(1e-3 * dmax);
            for t in 0..3 {
                let j = cols[i][t];
                if j == NO_SLOT {
                    continue;
                }
                let mut v = a.vals[i][t];
                // entries of row i already computed that row j also holds
                for t2 in 0..t {
                    let c = cols[i][t2];
                    if c == NO_SLOT {
                        continue;
                    }
                    for t3 in 0..3 {
                        if cols[j][t3] == c {
                            v -= lower[i][t2] * lower[j][t3];
                        }
                    }
                }
                let l = v / diag[j];
                lower[i][t] = l;
                pivot -= l * l;
            }
            if !(pivot > 0.0 && pivot.is_finite()) {
                return None;
            }
            diag[i] = pivot.sqrt();
        }
        Some(Ic0 { diag, lower, cols })
    }

    pub fn solve(&self, r: &[f64], z: &mut [f64]) {
        let n = self.diag.len();
        for i in 0..n {
            let mut v = r[i];
            for t in 0..3 {
                let j = self.cols[i][t];
                if j != NO_SLOT {
                    v -= self.lower[i][t] * z[j];
                }
            }
            z[i] = v / self.diag[i];
        }
        for i in (0..n).rev() {
            z[i] /= self.diag[i];
            let zi = z[i];
            for t in 0..3 {
                let j = self.cols[i][t];
                if j != NO_SLOT {
                    z[j] -= self.lower[i][t] * zi;
                }
            }
        }
    }
}

fn dot(exec: par::Exec, a: &[f64], b: &[f64]) -> f64 {
    par::chunked_sum(exec, a.len(), |r| r.map(|i| a[i] * b[i]).sum::<f64>())
}

/// Preconditioned CG for `A d = b`. Stops on relative residual `eta`, on
/// `max_iter`, or on non-positive curvature (returning the last iterate, or
/// the preconditioned right-hand side if that happens immediately).
pub(crate) fn pcg(exec: par::Exec, a: &Ell, pre: &Ic0, b: &[f64], eta: f64, max_iter: usize) -> (Vec<f64>, usize) {
    let n = a.n();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    pre.solve(&r, &mut z);
    let mut d = z.clone();
    let mut ad = vec![0.0; n];
    let mut rz = dot(exec, &r, &z);
    let b_norm = dot(exec, b, b).sqrt();
    for it in 0..max_iter {
        a.apply(exec, &d, &mut ad);
        let curv = dot(exec, &d, &ad);
        if curv <= 0.0 {
            if it == 0 {
                return (z, 1);
            }
            return (x, it);
        }
        let step = rz / curv;
        for i in 0..n {
            x[i] += step * d[i];
            r[i] -= step * ad[i];
        }
        if dot(exec, &r, &r).sqrt() <= eta * b_norm {
            return (x, it + 1);
        }
        pre.solve(&r, &mut z);
        let rz_new = dot(exec, &r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            d[i] = z[i] + beta * d[i];
        }
    }
    (x, max_iter)
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Iterations without a 1% gain in the residual after which the loop stops;
/// reached only when the target lies below the roundoff floor.
const STALL_WINDOW: usize = 500;

pub(crate) fn minimize(model: &Model, x0: Vec<f64>, u: &mut [f64], settings: &LoopSettings) -> LoopOutcome {
    let exec = model.exec;
    let n = model.n();
    let vol = model.grid.cell_volume();
    let mut x = x0;
    model.scatter(&x, u);
    let mut energy = model.energy(u, &x);
    let mut grad = model.gradient(u, &x);
    let mut energies = vec![energy];
    let mut mu = 0.0;
    let mut inner = 0usize;
    let mut g0 = dot(exec, &grad, &grad).sqrt();
    let mut trial_u = u.to_vec();
    let mut best = (f64::INFINITY, 0usize);

    for iter in 0..settings.max_iterations {
        let res = sup(&grad) / vol;
        let threshold = (settings.threshold)(&x);
        if !energy.is_finite() {
            return LoopOutcome::failed(x, energies, iter, inner, "energy is not finite");
        }
        if res <= threshold {
            return LoopOutcome::done(x, energies, iter, inner, true);
        }
        if res < 0.99 * best.0 {
            best = (res, iter);
        } else if iter - best.1 >= STALL_WINDOW {
            log::warn!("Newton stalled at residual {res:e} (target {threshold:e})");
            return LoopOutcome::done(x, energies, iter, inner, false);
        }
        if g0 == 0.0 {
            g0 = dot(exec, &grad, &grad).sqrt();
        }

        let free: Vec<bool> = (0..n)
            .map(|s| !settings.project || x[s] > 0.0 || grad[s] < 0.0)
            .collect();
        let (mut h, raw) = assemble(model, u, &free);
        let floor = 1e-2 * raw.iter().cloned().fold(0.0, f64::max);
        if let Source::Power { alpha, q } = model.source {
            if q > 1.0 {
                for s in 0..n {
                    if free[s] {
                        let c = if x[s] > 0.0 {
                            alpha * (q - 1.0) * vol * x[s].powf(q - 2.0)
                        } else {
                            f64::INFINITY
                        };
                        h.diag[s] -= c.min(0.5 * raw[s]);
                    }
                }
            }
        }
        for s in 0..n {
            if free[s] {
                h.diag[s] += mu * raw[s].max(floor);
                // degenerate rows (flat regions when p > 2)
                if h.diag[s] < 1e-6 * floor {
                    h.diag[s] = floor;
                }
            }
        }
        let rhs: Vec<f64> = (0..n).map(|s| if free[s] { -grad[s] } else { 0.0 }).collect();
        let gnorm = dot(exec, &rhs, &rhs).sqrt();
        let eta = (gnorm / g0).clamp(1e-10, 1e-2);
        let pre = Ic0::new(&h);
        let (dir, its) = pcg(exec, &h, &pre, &rhs, eta, settings.max_inner);
        inner += its;

        let slope_scale = energy_scale(model, u, &x);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let xt: Vec<f64> = (0..n)
                .map(|s| {
                    let v = x[s] + step * dir[s];
                    if settings.project {
                        v.max(0.0)
                    } else {
                        v
                    }
                })
                .collect();
            model.scatter(&xt, &mut trial_u);
            let et = model.energy(&trial_u, &xt);
            let decrease: f64 = (0..n).map(|s| grad[s] * (xt[s] - x[s])).sum();
            if et.is_finite() && et <= energy + 1e-4 * decrease {
                accepted = Some((xt, et, None));
                break;
            }
            if et.is_finite() && et <= energy + 1e-12 * slope_scale {
                let gt = model.gradient(&trial_u, &xt);
                if sup(&gt) < sup(&grad) {
                    accepted = Some((xt, et, Some(gt)));
                    break;
                }
            }
            step *= 0.5;
        }
        match accepted {
            Some((xt, et, gt)) => {
                x = xt;
                energy = et;
                u.copy_from_slice(&trial_u);
                grad = gt.unwrap_or_else(|| model.gradient(u, &x));
                energies.push(energy);
                mu = if step == 1.0 {
                    if mu < 1e-10 {
                        0.0
                    } else {
                        mu / 10.0
                    }
                } else {
                    (4.0 * mu).max(1e-6)
                };
            }
            None => {
                mu = (10.0 * mu).max(1e-4);
                if mu > 1e10 {
                    log::warn!("Newton damping exhausted at residual {res:e}");
                    return LoopOutcome::done(x, energies, iter + 1, inner, false);
                }
            }
        }
        log::debug!("newton iter {iter}: E = {energy:.15e}, res = {res:.3e}, cg = {its}, mu = {mu:.1e}");
    }
    let res = sup(&grad) / vol;
    let ok = res <= (settings.threshold)(&x);
    LoopOutcome::done(x, energies, settings.max_iterations, inner, ok)
}

/// Absolute magnitude of the energy terms, for roundoff-level comparisons.
pub(crate) fn energy_scale(model: &Model, u: &[f64], x: &[f64]) -> f64 {
    model.dirichlet(u).abs() + model.source_energy(x).abs()
}
