//! Executable checks of the comparison, pointwise, L∞, localization and
//! slab estimates, plus the convexity inequalities in [`convexity`].
//!
//! Every check returns a [`VerifyReport`] whose `worst` entry is the signed
//! margin of the inequality (negative means violated); the check passes when
//! `worst >= -tol`.

pub mod convexity;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::ConvexDomain;
use crate::onedim::{localization_constant, wb1_center, wb1_profile, wi_center, wi_profile, PQParams};
use crate::pde::{solve_lane_emden, GridFunction, SolveOptions, SolveReport};

pub use convexity::{
    check_equality_cases, check_hidden_convexity, empirical_infimum, quantified_gap_r_ge2, quantified_gap_r_lt2,
};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub check: String,
    pub pass: bool,
    pub worst: f64,
    pub tol: f64,
    pub h: Option<f64>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub alpha: Option<f64>,
    pub domain: Option<String>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub metrics: BTreeMap<String, f64>,
}

impl VerifyReport {
    pub fn new(check: impl Into<String>, worst: f64, tol: f64) -> Self {
        VerifyReport {
            check: check.into(),
            pass: worst >= -tol,
            worst,
            tol,
            h: None,
            p: None,
            q: None,
            alpha: None,
            domain: None,
            metrics: BTreeMap::new(),
        }
    }

    pub fn with_params(mut self, p: f64, q: f64, alpha: f64) -> Self {
        self.p = Some(p);
        self.q = Some(q);
        self.alpha = Some(alpha);
        self
    }

    pub fn with_grid(mut self, h: f64, domain: &ConvexDomain) -> Self {
        self.h = Some(h);
        self.domain = Some(domain.label());
        self
    }

    pub fn metric(mut self, name: &str, value: f64) -> Self {
        self.metrics.insert(name.to_string(), value);
        self
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

fn solve(domain: &ConvexDomain, params: &PQParams, h: f64, options: &SolveOptions) -> Result<(GridFunction, SolveReport)> {
    let (w, rep) = solve_lane_emden(domain, params, h, options)?;
    if !rep.converged {
        return Err(Error::Numeric {
            message: format!("solve on {} did not converge", domain.label()),
            achieved: Some(rep.residual),
        });
    }
    Ok((w, rep))
}

/// Allowance on values implied by a residual tolerance: `10 · tol · scale`.
fn value_tolerance(options: &SolveOptions, dim: usize, scale: f64) -> f64 {
    10.0 * options.tolerance(dim) * scale.max(1.0)
}

/// Solutions on `inner ⊆ outer` satisfy `w_inner ≤ w_outer` (zero extension).
pub fn check_comparison(
    inner: &ConvexDomain,
    outer: &ConvexDomain,
    p: f64,
    q: f64,
    h: f64,
    options: &SolveOptions,
) -> Result<VerifyReport> {
    if !outer.contains_domain(inner) {
        return Err(Error::param(format!("{} is not contained in {}", inner.label(), outer.label())));
    }
    let params = PQParams::unit(p, q)?;
    let (wi, _) = solve(inner, &params, h, options)?;
    let (wo, _) = solve(outer, &params, h, options)?;
    let grid = wi.grid();
    let worst = grid
        .interior()
        .iter()
        .map(|&k| wo.at_lattice(grid.lattice(k)) - wi.values()[k])
        .fold(f64::INFINITY, f64::min);
    let tol = value_tolerance(options, grid.dim(), wo.sup_norm());
    Ok(VerifyReport::new("comparison", worst, tol)
        .with_params(p, q, 1.0)
        .with_grid(h, outer)
        .metric("max_inner", wi.max_interior().1)
        .metric("max_outer", wo.max_interior().1))
}

/// `10 h sup(w) / r`, the first-order allowance of the pointwise checks.
pub fn pointwise_tolerance(h: f64, sup: f64, inradius: f64) -> f64 {
    10.0 * h * sup / inradius
}

/// Ball lower bound and one-dimensional upper barrier at every interior node.
pub fn check_pointwise_bounds(
    domain: &ConvexDomain,
    p: f64,
    q: f64,
    alpha: f64,
    h: f64,
    options: &SolveOptions,
) -> Result<VerifyReport> {
    let params = PQParams::new(p, q, alpha)?;
    let (w, _) = solve(domain, &params, h, options)?;
    let m = domain.metrics()?;
    let r = m.inradius;
    let scale = r.powf(p / (p - q)) * alpha.powf(1.0 / (p - q));
    let ball = wb1_profile(p, q, domain.dim(), 2049)?;
    let slab = wi_profile(p, q, 2049)?;
    let grid = w.grid();
    let (mut lower_margin, mut upper_margin) = (f64::INFINITY, f64::INFINITY);
    let mut saturation: f64 = 0.0;
    let mut upper_gap_center = f64::NAN;
    let (kmax, wmax) = w.max_interior();
    for &k in grid.interior() {
        let x = grid.coords(k);
        let rho = if domain.dim() == 1 {
            (x[0] - m.incenter[0]).abs()
        } else {
            (x[0] - m.incenter[0]).hypot(x[1] - m.incenter[1])
        } / r;
        let lower = if rho < 1.0 { scale * ball.eval(rho) } else { 0.0 };
        let d = domain.distance_to_boundary(x);
        let upper = scale * slab.eval((d / r).min(1.0) - 1.0);
        let v = w.values()[k];
        lower_margin = lower_margin.min(v - lower);
        upper_margin = upper_margin.min(upper - v);
        saturation = saturation.max((v - lower).abs());
        if k == kmax {
            upper_gap_center = (upper - v) / upper;
        }
    }
    let tol = pointwise_tolerance(h, wmax, r);
    Ok(VerifyReport::new("pointwise_bounds", lower_margin.min(upper_margin), tol)
        .with_params(p, q, alpha)
        .with_grid(h, domain)
        .metric("lower_margin", lower_margin)
        .metric("upper_margin", upper_margin)
        .metric("lower_saturation", saturation)
        .metric("upper_relative_gap_at_max", upper_gap_center)
        .metric("max", wmax))
}

/// `w_{B_1,α}(0) ≤ r^{-p/(p-q)} ‖w‖_∞ ≤ α^{1/(p-q)} w_I(0)`.
pub fn check_linfty(
    domain: &ConvexDomain,
    p: f64,
    q: f64,
    alpha: f64,
    h: f64,
    options: &SolveOptions,
) -> Result<VerifyReport> {
    let params = PQParams::new(p, q, alpha)?;
    let (w, _) = solve(domain, &params, h, options)?;
    let r = domain.metrics()?.inradius;
    let a = alpha.powf(1.0 / (p - q));
    let lower = a * wb1_center(p, q, domain.dim())?;
    let upper = a * wi_center(p, q)?;
    let value = w.sup_norm() * r.powf(-p / (p - q));
    let tol = pointwise_tolerance(h, w.sup_norm(), r) * r.powf(-p / (p - q));
    Ok(VerifyReport::new("linfty", (value - lower).min(upper - value), tol)
        .with_params(p, q, alpha)
        .with_grid(h, domain)
        .metric("lower", lower)
        .metric("value", value)
        .metric("upper", upper)
        .metric("upper_ratio", value / upper))
}

/// Near-maximum nodes sit at depth at least `C_{N,p,q} r_Ω` (up to `h`).
pub fn check_localization(domain: &ConvexDomain, p: f64, q: f64, h: f64, options: &SolveOptions) -> Result<VerifyReport> {
    let params = PQParams::unit(p, q)?;
    let (w, _) = solve(domain, &params, h, options)?;
    let r = domain.metrics()?.inradius;
    let c = localization_constant(domain.dim(), p, q)?;
    let (_, wmax) = w.max_interior();
    let select = options.tolerance(domain.dim()) * wmax.max(1.0);
    let grid = w.grid();
    let mut worst = f64::INFINITY;
    let mut count = 0usize;
    for &k in grid.interior() {
        if w.values()[k] >= wmax - select {
            count += 1;
            worst = worst.min(domain.distance_to_boundary(grid.coords(k)) - c * r);
        }
    }
    Ok(VerifyReport::new("localization", worst, h)
        .with_params(p, q, 1.0)
        .with_grid(h, domain)
        .metric("constant", c)
        .metric("near_max_nodes", count as f64)
        .metric("max", wmax))
}

/// Slab solutions on `(-L/2, L/2) × (-1, 1)` increase with `L`, stay below
/// `w_I(0)`, and approach `w_I(x_2)` on the central quarter.
pub fn check_slab_asymptotics(p: f64, q: f64, lengths: &[f64], h: f64, options: &SolveOptions) -> Result<VerifyReport> {
    if lengths.len() < 2 || lengths.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::param("need at least two nondecreasing slab lengths"));
    }
    let params = PQParams::unit(p, q)?;
    let profile = wi_profile(p, q, 2049)?;
    let top = wi_center(p, q)?;
    let domains = lengths.iter().map(|&l| ConvexDomain::slab(l)).collect::<Result<Vec<_>>>()?;
    let sols = crate::par::map(options.exec, &domains, |d| solve(d, &params, h, options))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let tol = value_tolerance(options, 2, top);

    let mut report_metrics = Vec::new();
    let mut errors = Vec::with_capacity(lengths.len());
    let mut upper_margin = f64::INFINITY;
    for (l, (w, _)) in lengths.iter().zip(&sols) {
        let grid: &Arc<_> = w.grid();
        let mut err: f64 = 0.0;
        for &k in grid.interior() {
            let x = grid.coords(k);
            let v = w.values()[k];
            upper_margin = upper_margin.min(top - v);
            if x[0].abs() <= l / 8.0 {
                err = err.max((v - profile.eval(x[1])).abs());
            }
        }
        errors.push(err / top);
        report_metrics.push((format!("central_error_L{l}"), err / top));
    }
    let mut mono_margin = f64::INFINITY;
    let mut decrease_margin = f64::INFINITY;
    for i in 1..sols.len() {
        let (small, big) = (&sols[i - 1].0, &sols[i].0);
        let grid = small.grid();
        for &k in grid.interior() {
            mono_margin = mono_margin.min(big.at_lattice(grid.lattice(k)) - small.values()[k]);
        }
        if lengths[i] > lengths[i - 1] {
            decrease_margin = decrease_margin.min(errors[i - 1] - errors[i]);
        }
    }
    let worst = mono_margin.min(upper_margin).min(if decrease_margin.is_finite() { decrease_margin } else { 0.0 });
    let mut rep = VerifyReport::new("slab_asymptotics", worst, tol)
        .with_params(p, q, 1.0)
        .metric("monotonicity_margin", mono_margin)
        .metric("upper_margin", upper_margin)
        .metric("error_decrease_margin", decrease_margin)
        .metric("final_central_error", *errors.last().unwrap_or(&f64::NAN));
    rep.h = Some(h);
    rep.domain = Some(format!("slab(L in {lengths:?})"));
    for (name, v) in report_metrics {
        rep.metrics.insert(name, v);
    }
    Ok(rep)
}
