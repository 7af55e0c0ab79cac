//! Discrete Lane-Emden energy and its minimizers on masked grids.
//!
//! The energy of a grid function `f` is
//! `h^N Σ_cells (1/p)|∇_h f|^p − α h^N Σ_interior (1/q)|f|^q`, where `∇_h`
//! is the forward-difference gradient. Nonnegative minimizers are computed by
//! projected descent; [`fixed_point_solve`] is an independent check that
//! only ever solves convex problems.

mod bb;
mod discrete;
mod newton;

use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{ConvexDomain, DEFAULT_NODE_BUDGET};
use crate::grid::{Grid, Point};
use crate::onedim::{wi_center, wi_profile, PQParams};
use crate::par::{self, Exec};
use discrete::{Model, Source};

/// Values on every node of a grid; exterior nodes hold the Dirichlet datum.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.node_count();
        GridFunction { grid, values: vec![0.0; n] }
    }

    pub fn from_values(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::param(format!(
                "expected {} node values, got {}",
                grid.node_count(),
                values.len()
            )));
        }
        Ok(GridFunction { grid, values })
    }

    /// Samples `f` on interior nodes; exterior nodes are zero.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(Point) -> f64) -> Self {
        let mut out = Self::zeros(grid);
        for &k in out.grid.interior() {
            out.values[k] = f(out.grid.coords(k));
        }
        out
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Interior values in slot order.
    pub fn interior_values(&self) -> Vec<f64> {
        self.grid.interior().iter().map(|&k| self.values[k]).collect()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        GridFunction {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Largest interior value and its node.
    pub fn max_interior(&self) -> (usize, f64) {
        self.grid
            .interior()
            .iter()
            .map(|&k| (k, self.values[k]))
            .fold((usize::MAX, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a })
    }

    pub fn min_interior(&self) -> f64 {
        self.grid.interior().iter().map(|&k| self.values[k]).fold(f64::INFINITY, f64::min)
    }

    /// `max |f|` over interior nodes.
    pub fn sup_norm(&self) -> f64 {
        self.grid.interior().iter().fold(0.0, |m, &k| m.max(self.values[k].abs()))
    }

    /// `max |f - g|` over all nodes; both must live on the same grid.
    pub fn sup_distance(&self, other: &GridFunction) -> Result<f64> {
        if self.grid.as_ref() != other.grid.as_ref() {
            return Err(Error::param("grid functions live on different grids"));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Value at lattice point `l`, extended by zero off the grid.
    pub fn at_lattice(&self, l: [i64; 2]) -> f64 {
        self.grid.node_at_lattice(l).map_or(0.0, |k| self.values[k])
    }

    /// CSV with header `x,value` or `x,y,value`, interior nodes in row-major order.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        if self.grid.dim() == 1 {
            writeln!(out, "x,value")?;
        } else {
            writeln!(out, "x,y,value")?;
        }
        for &k in self.grid.interior() {
            let c = self.grid.coords(k);
            if self.grid.dim() == 1 {
                writeln!(out, "{},{}", c[0], self.values[k])?;
            } else {
                writeln!(out, "{},{},{}", c[0], c[1], self.values[k])?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum Descent {
    /// Damped projected Newton with IC(0)-preconditioned CG.
    #[default]
    NewtonCg,
    /// Projected gradient with Barzilai-Borwein steps.
    ProjectedBb,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub enum Initial {
    /// Scaled `r^{p/(p-q)} w_I(d/r - 1)`, the one-dimensional upper barrier.
    #[default]
    Barrier,
    /// A constant on interior nodes.
    Constant(f64),
    /// The torsion-type solution with right-hand side `α`.
    Torsion,
    /// Interior values in slot order.
    Values(Vec<f64>),
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    /// Residual tolerance; `None` selects `1e-8` in 1D and `1e-6` in 2D.
    pub tol: Option<f64>,
    pub max_iterations: usize,
    pub descent: Descent,
    pub initial: Initial,
    pub exec: Exec,
    pub node_budget: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: None,
            max_iterations: 200_000,
            descent: Descent::default(),
            initial: Initial::default(),
            exec: Exec::default(),
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }
}

impl SolveOptions {
    pub fn tolerance(&self, dim: usize) -> f64 {
        self.tol.unwrap_or(if dim == 1 { 1e-8 } else { 1e-6 })
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = Some(tol);
        self
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn with_initial(mut self, initial: Initial) -> Self {
        self.initial = initial;
        self
    }

    pub fn with_descent(mut self, descent: Descent) -> Self {
        self.descent = descent;
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub inner_iterations: usize,
    pub energy: f64,
    /// Sup of the projected strong residual.
    pub projected_gradient: f64,
    /// Sup of `|−Δ_{p,h} u − source|` over interior nodes.
    pub residual: f64,
    /// The residual threshold the solve aimed for.
    pub threshold: f64,
    pub wall_time_s: f64,
    pub converged: bool,
    /// Energy after each accepted iteration.
    #[serde(skip)]
    pub energies: Vec<f64>,
}

pub(crate) struct LoopSettings<'a> {
    pub max_iterations: usize,
    pub max_inner: usize,
    pub project: bool,
    pub threshold: &'a (dyn Fn(&[f64]) -> f64 + Sync),
}

pub(crate) struct LoopOutcome {
    pub x: Vec<f64>,
    pub energies: Vec<f64>,
    pub iterations: usize,
    pub inner: usize,
    pub converged: bool,
    pub failure: Option<&'static str>,
}

impl LoopOutcome {
    fn done(x: Vec<f64>, energies: Vec<f64>, iterations: usize, inner: usize, converged: bool) -> Self {
        LoopOutcome {
            x,
            energies,
            iterations,
            inner,
            converged,
            failure: None,
        }
    }

    fn failed(x: Vec<f64>, energies: Vec<f64>, iterations: usize, inner: usize, why: &'static str) -> Self {
        LoopOutcome {
            x,
            energies,
            iterations,
            inner,
            converged: false,
            failure: Some(why),
        }
    }
}

/// `ε` of the regularized gradient norm for `p < 2`, relative to a data scale.
pub fn regularization(p: f64, scale: f64) -> f64 {
    if p >= 2.0 {
        0.0
    } else {
        1e-10 * scale.abs().max(f64::MIN_POSITIVE)
    }
}

/// Gradient scale `α^{1/(p-q)} r^{p/(p-q)-1} w_I(0)` of the solution, from the
/// sup bound; it moves with `α` and with dilations so the scaling laws stay exact.
fn lane_emden_eps(grid: &Grid, params: &PQParams) -> f64 {
    let PQParams { p, q, alpha } = *params;
    if p >= 2.0 {
        return 0.0;
    }
    let top = wi_center(p, q).unwrap_or(1.0);
    let r = grid.length_scale();
    regularization(p, alpha.powf(1.0 / (p - q)) * r.powf(p / (p - q) - 1.0) * top)
}

fn model<'a>(grid: &'a Grid, p: f64, eps: f64, source: Source<'a>, exec: Exec) -> Model<'a> {
    Model {
        grid,
        p,
        eps,
        source,
        exec,
    }
}

/// Discrete energy, including the constant contribution of the datum.
pub fn energy(f: &GridFunction, params: &PQParams) -> f64 {
    let source = Source::Power {
        alpha: params.alpha,
        q: params.q,
    };
    let m = model(&f.grid, params.p, lane_emden_eps(&f.grid, params), source, Exec::default());
    m.energy(&f.values, &f.interior_values())
}

/// Exact gradient of [`energy`] with respect to interior values; exterior
/// entries are zero.
pub fn energy_gradient(f: &GridFunction, params: &PQParams) -> GridFunction {
    let source = Source::Power {
        alpha: params.alpha,
        q: params.q,
    };
    let m = model(&f.grid, params.p, lane_emden_eps(&f.grid, params), source, Exec::default());
    let g = m.gradient(&f.values, &f.interior_values());
    let mut out = GridFunction::zeros(f.grid.clone());
    for (s, &k) in f.grid.interior().iter().enumerate() {
        out.values[k] = g[s];
    }
    out
}

/// `max_interior |−Δ_{p,h} f − α f^{q−1}|`, the gradient divided by `h^N`.
pub fn residual(f: &GridFunction, params: &PQParams) -> f64 {
    let g = energy_gradient(f, params);
    g.sup_norm() / f.grid.cell_volume()
}

/// `h^N Σ_cells |∇_h f|^p` without regularization.
pub fn dirichlet_integral(f: &GridFunction, p: f64) -> f64 {
    let m = model(&f.grid, p, 0.0, Source::Fixed(&[]), Exec::default());
    p * m.dirichlet(&f.values)
}

/// `h^N Σ_interior |f|^q`.
pub fn lq_integral(f: &GridFunction, q: f64) -> f64 {
    let grid = &f.grid;
    let interior = grid.interior();
    let sum = par::chunked_sum(Exec::default(), interior.len(), |r| {
        interior[r].iter().map(|&k| f.values[k].abs().powf(q)).sum::<f64>()
    });
    grid.cell_volume() * sum
}

fn check_spacing(domain: &ConvexDomain, h: f64) -> Result<()> {
    let r = domain.metrics()?.inradius;
    if !(h > 0.0) || h > 0.25 * r * (1.0 + 1e-12) {
        return Err(Error::param(format!(
            "grid spacing {h} must lie in (0, r/4] with inradius r = {r}"
        )));
    }
    Ok(())
}

/// Solves on a fresh grid of `domain` with zero datum.
pub fn solve_lane_emden(
    domain: &ConvexDomain,
    params: &PQParams,
    h: f64,
    options: &SolveOptions,
) -> Result<(GridFunction, SolveReport)> {
    check_spacing(domain, h)?;
    let grid = Arc::new(domain.rasterize_with(h, options.node_budget, options.exec)?);
    minimize_energy(domain, grid, params, None, options)
}

/// `r^{p/(p−q)} w_I(d/r − 1)` on interior nodes.
fn barrier(domain: &ConvexDomain, grid: &Arc<Grid>, p: f64, q: f64) -> Result<Vec<f64>> {
    let r = domain.metrics()?.inradius;
    let profile = wi_profile(p, q, 1025)?;
    let scale = r.powf(p / (p - q));
    Ok(grid
        .interior()
        .iter()
        .map(|&k| {
            let d = domain.distance_to_boundary(grid.coords(k));
            scale * profile.eval((d / r).min(1.0) - 1.0)
        })
        .collect())
}

fn check_datum(grid: &Grid, datum: Option<&[f64]>) -> Result<Vec<f64>> {
    let mut u = vec![0.0; grid.node_count()];
    if let Some(d) = datum {
        if d.len() != grid.node_count() {
            return Err(Error::param("datum length does not match the grid"));
        }
        for k in 0..d.len() {
            if !grid.is_interior(k) {
                if !(d[k] >= 0.0) {
                    return Err(Error::param("boundary datum must be nonnegative"));
                }
                u[k] = d[k];
            }
        }
    }
    Ok(u)
}

fn run_loop(m: &Model, x0: Vec<f64>, u: &mut [f64], options: &SolveOptions, project: bool, threshold: &(dyn Fn(&[f64]) -> f64 + Sync)) -> LoopOutcome {
    let settings = LoopSettings {
        max_iterations: options.max_iterations,
        max_inner: 2000,
        project,
        threshold,
    };
    match options.descent {
        Descent::NewtonCg => newton::minimize(m, x0, u, &settings),
        Descent::ProjectedBb => bb::minimize(m, x0, u, &settings),
    }
}

fn report(m: &Model, out: &LoopOutcome, u: &[f64], threshold: f64, start: Instant, project: bool) -> SolveReport {
    let vol = m.grid.cell_volume();
    let g = m.gradient(u, &out.x);
    let residual = g.iter().fold(0.0, |a: f64, v| a.max(v.abs())) / vol;
    let projected = g
        .iter()
        .zip(&out.x)
        .map(|(gs, xs)| if !project || *xs > 0.0 { gs.abs() } else { (-gs).max(0.0) })
        .fold(0.0, f64::max)
        / vol;
    SolveReport {
        iterations: out.iterations,
        inner_iterations: out.inner,
        energy: *out.energies.last().unwrap_or(&f64::NAN),
        projected_gradient: projected,
        residual,
        threshold,
        wall_time_s: start.elapsed().as_secs_f64(),
        converged: out.converged,
        energies: out.energies.clone(),
    }
}

/// Minimizes the energy over nonnegative functions on `grid` whose exterior
/// values equal `datum` (zero when `None`).
pub fn minimize_energy(
    domain: &ConvexDomain,
    grid: Arc<Grid>,
    params: &PQParams,
    datum: Option<&[f64]>,
    options: &SolveOptions,
) -> Result<(GridFunction, SolveReport)> {
    let start = Instant::now();
    let PQParams { p, q, alpha } = *params;
    let mut u = check_datum(&grid, datum)?;
    let source = Source::Power { alpha, q };
    let m = model(&grid, p, lane_emden_eps(&grid, params), source, options.exec);
    let n = m.n();
    let x0 = match &options.initial {
        Initial::Barrier => {
            let phi = barrier(domain, &grid, p, q)?;
            let mut trial = u.clone();
            m.scatter(&phi, &mut trial);
            let a = p * model(&grid, p, 0.0, Source::Fixed(&[]), options.exec).dirichlet(&trial);
            let b = phi.iter().map(|v| v.powf(q)).sum::<f64>() * grid.cell_volume();
            let c = if datum.is_none() && a > 0.0 && b > 0.0 {
                (alpha * b / a).powf(1.0 / (p - q))
            } else {
                alpha.powf(1.0 / (p - q))
            };
            phi.iter().map(|v| c * v).collect()
        }
        Initial::Constant(c) => vec![c.max(0.0); n],
        Initial::Torsion => {
            let rhs = GridFunction::from_fn(grid.clone(), |_| alpha);
            let opts = SolveOptions {
                initial: Initial::Barrier,
                ..options.clone()
            };
            let (t, _) = solve_plaplace_fixed_rhs(domain, p, &rhs, &opts)?;
            t.interior_values()
        }
        Initial::Values(v) => {
            if v.len() != n {
                return Err(Error::param("initial values must have one entry per interior node"));
            }
            v.iter().map(|x| x.max(0.0)).collect()
        }
    };
    let tol = options.tolerance(grid.dim());
    let threshold = move |x: &[f64]| {
        let sup = x.iter().fold(0.0, |a: f64, v| a.max(v.abs()));
        tol * alpha * if q == 1.0 { 1.0 } else { sup.powf(q - 1.0) }
    };
    let out = run_loop(&m, x0, &mut u, options, true, &threshold);
    if let Some(why) = out.failure {
        return Err(Error::numeric(why));
    }
    m.scatter(&out.x, &mut u);
    let rep = report(&m, &out, &u, threshold(&out.x), start, true);
    if !rep.converged {
        log::warn!("Lane-Emden solve stopped at residual {:e} (threshold {:e})", rep.residual, rep.threshold);
    }
    Ok((GridFunction { grid, values: u }, rep))
}

/// Minimizes `h^N Σ (1/p)|∇_h u|^p − h^N Σ rhs·u` with zero datum on the grid of `rhs`.
pub fn solve_plaplace_fixed_rhs(
    domain: &ConvexDomain,
    p: f64,
    rhs: &GridFunction,
    options: &SolveOptions,
) -> Result<(GridFunction, SolveReport)> {
    let start = Instant::now();
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::param(format!("p must satisfy 1 < p < inf, got {p}")));
    }
    let grid = rhs.grid.clone();
    let f = rhs.interior_values();
    if f.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::param("right-hand side must be nonnegative"));
    }
    let scale = f.iter().cloned().fold(0.0, f64::max);
    let mut u = vec![0.0; grid.node_count()];
    // gradient scale (max f · r)^{1/(p-1)}
    let eps = regularization(p, (scale * grid.length_scale()).powf(1.0 / (p - 1.0)));
    let m = model(&grid, p, eps, Source::Fixed(&f), options.exec);
    if scale == 0.0 {
        let out = LoopOutcome::done(vec![0.0; m.n()], vec![0.0], 0, 0, true);
        let rep = report(&m, &out, &u, 0.0, start, false);
        return Ok((GridFunction { grid, values: u }, rep));
    }
    let x0 = match &options.initial {
        Initial::Values(v) if v.len() == m.n() => v.clone(),
        Initial::Constant(c) => vec![*c; m.n()],
        _ => {
            let phi = barrier(domain, &grid, p, 1.0)?;
            let mut trial = u.clone();
            m.scatter(&phi, &mut trial);
            let a = p * model(&grid, p, 0.0, Source::Fixed(&[]), options.exec).dirichlet(&trial);
            let b: f64 = phi.iter().zip(&f).map(|(x, y)| x * y).sum::<f64>() * grid.cell_volume();
            let c = if a > 0.0 && b > 0.0 { (b / a).powf(1.0 / (p - 1.0)) } else { 1.0 };
            phi.iter().map(|v| c * v).collect()
        }
    };
    let tol = options.tolerance(grid.dim());
    let threshold = move |_: &[f64]| tol * scale;
    let out = run_loop(&m, x0, &mut u, options, false, &threshold);
    if let Some(why) = out.failure {
        return Err(Error::numeric(why));
    }
    m.scatter(&out.x, &mut u);
    let rep = report(&m, &out, &u, tol * scale, start, false);
    Ok((GridFunction { grid, values: u }, rep))
}

/// Iterates `u ↦ S(α u^{q−1})`, where `S` solves the fixed right-hand side
/// problem, starting from `S(α)`. Stops when successive iterates differ by at
/// most the tolerance in sup norm.
pub fn fixed_point_solve(
    domain: &ConvexDomain,
    params: &PQParams,
    h: f64,
    options: &SolveOptions,
) -> Result<(GridFunction, SolveReport)> {
    let start = Instant::now();
    check_spacing(domain, h)?;
    let PQParams { p, q, alpha } = *params;
    let grid = Arc::new(domain.rasterize_with(h, options.node_budget, options.exec)?);
    let tol = options.tolerance(grid.dim());
    let inner = SolveOptions {
        tol: Some(1e-2 * tol),
        initial: Initial::Barrier,
        ..options.clone()
    };
    let rhs = GridFunction::from_fn(grid.clone(), |_| alpha);
    let (mut u, first) = solve_plaplace_fixed_rhs(domain, p, &rhs, &inner)?;
    let mut inner_total = first.iterations;
    let mut converged = false;
    let mut iterations = 0;
    let max_outer = options.max_iterations.min(10_000);
    while iterations < max_outer {
        iterations += 1;
        let rhs = u.map(|v| alpha * discrete::power_source(v.max(0.0), q));
        let warm = SolveOptions {
            initial: Initial::Values(u.interior_values()),
            ..inner.clone()
        };
        let (next, rep) = solve_plaplace_fixed_rhs(domain, p, &rhs, &warm)?;
        inner_total += rep.iterations;
        let diff = next.sup_distance(&u)?;
        u = next;
        log::debug!("fixed point iter {iterations}: |du| = {diff:e}");
        if diff <= tol {
            converged = true;
            break;
        }
    }
    let x = u.interior_values();
    let m = model(&grid, p, lane_emden_eps(&grid, params), Source::Power { alpha, q }, options.exec);
    let e = m.energy(&u.values, &x);
    let out = LoopOutcome::done(x, vec![e], iterations, inner_total, converged);
    let sup = u.sup_norm();
    let threshold = tol * alpha * if q == 1.0 { 1.0 } else { sup.powf(q - 1.0) };
    let rep = report(&m, &out, &u.values, threshold, start, true);
    Ok((u, rep))
}
