//! Generalized principal frequencies from the mass of the positive solution.
//!
//! With `w` the solution for `α = 1`, `λ_{p,q} = (∫ w^q)^{-(p-q)/q}`.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::ConvexDomain;
use crate::onedim::{pi_pq, PQParams};
use crate::par;
use crate::pde::{dirichlet_integral, lq_integral, solve_lane_emden, GridFunction, SolveOptions, SolveReport};

/// Residual tolerance used when the caller does not set one; the mass
/// identity `∫|∇w|^p = ∫w^q` is only as good as the residual.
pub const FREQUENCY_TOL: f64 = 1e-10;

#[derive(Clone, Debug, Serialize)]
pub struct FrequencyResult {
    pub lambda: f64,
    /// `h^N Σ w^q`
    pub mass: f64,
    /// `λ |Ω|^{(p-q)/q} r^p (2/π_{p,q})^p`
    pub hp_ratio: f64,
    /// `hp_ratio - 1`
    pub normalized_gap: f64,
    /// Discretization allowance `max(2%, 10 h)`.
    pub eps_h: f64,
    pub h: f64,
    pub solve: SolveReport,
}

/// `max(0.02, 10 h)`
pub fn discretization_allowance(h: f64) -> f64 {
    (10.0 * h).max(0.02)
}

fn frequency_options(options: &SolveOptions) -> SolveOptions {
    let mut o = options.clone();
    if o.tol.is_none() {
        o.tol = Some(FREQUENCY_TOL);
    }
    o
}

/// `λ_{p,q}(Ω)` on a grid of spacing `h`, together with the solution used.
pub fn lambda_pq_with_solution(
    domain: &ConvexDomain,
    p: f64,
    q: f64,
    h: f64,
    options: &SolveOptions,
) -> Result<(FrequencyResult, GridFunction)> {
    let params = PQParams::unit(p, q)?;
    let (w, solve) = solve_lane_emden(domain, &params, h, &frequency_options(options))?;
    if !solve.converged {
        return Err(Error::Numeric {
            message: "Lane-Emden solve did not converge".into(),
            achieved: Some(solve.residual),
        });
    }
    let mass = lq_integral(&w, q);
    let lambda = mass.powf(-(p - q) / q);
    let hp_ratio = hp_normalization(domain, p, q)? * lambda;
    Ok((
        FrequencyResult {
            lambda,
            mass,
            hp_ratio,
            normalized_gap: hp_ratio - 1.0,
            eps_h: discretization_allowance(h),
            h,
            solve,
        },
        w,
    ))
}

pub fn lambda_pq(domain: &ConvexDomain, p: f64, q: f64, h: f64, options: &SolveOptions) -> Result<FrequencyResult> {
    Ok(lambda_pq_with_solution(domain, p, q, h, options)?.0)
}

/// `|Ω|^{(p-q)/q} r^p (2/π_{p,q})^p`, the factor turning `λ` into the
/// Hersch-Protter ratio.
pub fn hp_normalization(domain: &ConvexDomain, p: f64, q: f64) -> Result<f64> {
    let m = domain.metrics()?;
    Ok(m.area.powf((p - q) / q) * m.inradius.powf(p) * (2.0 / pi_pq(p, q)?).powf(p))
}

/// Lower bound `(π_{p,q}/2)^p r^{-p} |Ω|^{-(p-q)/q}` on `λ_{p,q}`.
pub fn hersch_protter_lower(domain: &ConvexDomain, p: f64, q: f64) -> Result<f64> {
    Ok(1.0 / hp_normalization(domain, p, q)?)
}

/// `λ_{p,q}(Ω) |Ω|^{(p-q)/q} r_Ω^p (2/π_{p,q})^p`; at least 1 on convex sets.
pub fn hersch_protter_ratio(domain: &ConvexDomain, p: f64, q: f64, h: f64, options: &SolveOptions) -> Result<f64> {
    Ok(lambda_pq(domain, p, q, h, options)?.hp_ratio)
}

/// `(π_{p,q}/2)^p (P / |Ω|^{1 - 1/p + 1/q})^p`.
pub fn perimeter_upper_bound(domain: &ConvexDomain, p: f64, q: f64) -> Result<f64> {
    PQParams::unit(p, q)?;
    let m = domain.metrics()?;
    Ok((pi_pq(p, q)? / 2.0).powf(p) * (m.perimeter / m.area.powf(1.0 - 1.0 / p + 1.0 / q)).powf(p))
}

/// `r^p (P/|Ω|)^p`, the ceiling of the Hersch-Protter ratio implied by the
/// perimeter bound.
pub fn hp_ratio_ceiling(domain: &ConvexDomain, p: f64) -> Result<f64> {
    let m = domain.metrics()?;
    Ok((m.inradius * m.perimeter / m.area).powf(p))
}

/// `Σ |∇_h f|^p / (Σ |f|^q)^{p/q}`, both with weight `h^N`.
pub fn rayleigh_quotient(f: &GridFunction, p: f64, q: f64) -> Result<f64> {
    let den = lq_integral(f, q);
    if !(den > 0.0) {
        return Err(Error::param("Rayleigh quotient of the zero function"));
    }
    Ok(dirichlet_integral(f, p) / den.powf(p / q))
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanRow {
    pub q: f64,
    pub lambda: f64,
    pub hp_lower: f64,
    pub perim_upper: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanTable {
    pub p: f64,
    pub h: f64,
    pub eps_h: f64,
    pub rows: Vec<ScanRow>,
    /// Largest change of `λ |Ω|^{(p-q)/q}` between consecutive rows.
    pub max_jump: f64,
    /// Every `λ` lies in `[hp_lower (1-ε_h), perim_upper (1+ε_h)]`.
    pub bracket_holds: bool,
}

impl ScanTable {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "q,lambda,hp_lower,perim_upper,ratio")?;
        for r in &self.rows {
            writeln!(out, "{},{},{},{},{}", r.q, r.lambda, r.hp_lower, r.perim_upper, r.ratio)?;
        }
        Ok(())
    }
}

/// `λ_{p,q}` along increasing `q`, with both bounds.
pub fn continuity_scan(domain: &ConvexDomain, p: f64, q_list: &[f64], h: f64, options: &SolveOptions) -> Result<ScanTable> {
    if q_list.is_empty() || q_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("q values must be strictly increasing"));
    }
    for &q in q_list {
        PQParams::unit(p, q)?;
    }
    let area = domain.metrics()?.area;
    let rows = par::map(options.exec, q_list, |&q| -> Result<ScanRow> {
        let f = lambda_pq(domain, p, q, h, options)?;
        Ok(ScanRow {
            q,
            lambda: f.lambda,
            hp_lower: hersch_protter_lower(domain, p, q)?,
            perim_upper: perimeter_upper_bound(domain, p, q)?,
            ratio: f.hp_ratio,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let eps_h = discretization_allowance(h);
    let bracket_holds = rows
        .iter()
        .all(|r| r.lambda >= r.hp_lower * (1.0 - eps_h) && r.lambda <= r.perim_upper * (1.0 + eps_h));
    let normalized: Vec<f64> = rows.iter().map(|r| r.lambda * area.powf((p - r.q) / r.q)).collect();
    let max_jump = normalized.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
    Ok(ScanTable {
        p,
        h,
        eps_h,
        rows,
        max_jump,
        bracket_holds,
    })
}
