//! Hidden convexity of the discrete Dirichlet integral and the vector
//! inequalities that quantify it.
//!
//! For `σ_t = ((1-t) v^r + t w^r)^{1/r}` the forward differences obey
//! `|Dσ_t| ≤ ((1-t)|Dv|^r + t|Dw|^r)^{1/r}` componentwise (reverse triangle
//! inequality in `ℓ^r`). Summing squares over the two axes keeps the bound when
//! `r ≤ 2` (Minkowski in `ℓ^{2/r}`), so the discrete inequality is exact on
//! 1D grids and on 2D grids with `r ≤ 2`. For `r > 2` rough grid functions
//! can violate it at any spacing; the check allows a slack of `h · rhs`, enough
//! for samples of smooth functions, and logs every violation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::VerifyReport;
use crate::error::{Error, Result};
use crate::par::{self, Exec};
use crate::pde::{dirichlet_integral, GridFunction};

/// Relative allowance for summation roundoff in exact inequalities.
const ROUNDOFF: f64 = 1e-12;

fn interpolate(v: &GridFunction, w: &GridFunction, t: f64, r: f64) -> Result<GridFunction> {
    if v.grid().as_ref() != w.grid().as_ref() {
        return Err(Error::param("v and w must share a grid"));
    }
    if v.values().iter().chain(w.values()).any(|x| !(*x >= 0.0)) {
        return Err(Error::param("hidden convexity needs nonnegative functions"));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::param(format!("t must lie in [0, 1], got {t}")));
    }
    if !(r >= 1.0 && r.is_finite()) {
        return Err(Error::param(format!("r must be at least 1, got {r}")));
    }
    let values = v
        .values()
        .iter()
        .zip(w.values())
        .map(|(a, b)| {
            if t == 0.0 {
                *a
            } else if t == 1.0 {
                *b
            } else {
                ((1.0 - t) * a.powf(r) + t * b.powf(r)).powf(1.0 / r)
            }
        })
        .collect();
    GridFunction::from_values(v.grid().clone(), values)
}

struct Sides {
    lhs: f64,
    rhs: f64,
}

fn sides(v: &GridFunction, w: &GridFunction, t: f64, r: f64, p: f64) -> Result<Sides> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::param(format!("p must satisfy 1 < p < inf, got {p}")));
    }
    let sigma = interpolate(v, w, t, r)?;
    Ok(Sides {
        lhs: dirichlet_integral(&sigma, p),
        rhs: (1.0 - t) * dirichlet_integral(v, p) + t * dirichlet_integral(w, p),
    })
}

/// `D(σ_t) ≤ (1-t) D(v) + t D(w)` with `D(f) = h^N Σ |∇_h f|^p` and `1 ≤ r ≤ p`.
pub fn check_hidden_convexity(v: &GridFunction, w: &GridFunction, t: f64, r: f64, p: f64) -> Result<VerifyReport> {
    if r > p {
        return Err(Error::param(format!("need r <= p, got r = {r}, p = {p}")));
    }
    let s = sides(v, w, t, r, p)?;
    let grid = v.grid();
    let exact = grid.dim() == 1 || r <= 2.0;
    let slack = if exact { 0.0 } else { grid.spacing() * s.rhs };
    let worst = s.rhs - s.lhs;
    if !exact && worst < 0.0 {
        log::warn!(
            "discrete hidden convexity fails for r = {r} > 2 on a 2D grid: lhs {} > rhs {} (slack {slack:e})",
            s.lhs,
            s.rhs
        );
    }
    let mut rep = VerifyReport::new("hidden_convexity", worst, slack + ROUNDOFF * s.rhs.abs())
        .metric("lhs", s.lhs)
        .metric("rhs", s.rhs)
        .metric("slack", slack)
        .metric("t", t)
        .metric("r", r);
    rep.h = Some(grid.spacing());
    rep.p = Some(p);
    Ok(rep)
}

fn proportional(v: &GridFunction, w: &GridFunction) -> bool {
    let mut ratio = None;
    for (a, b) in v.values().iter().zip(w.values()) {
        if *b == 0.0 {
            if *a != 0.0 {
                return false;
            }
            continue;
        }
        let c = a / b;
        match ratio {
            None => ratio = Some(c),
            Some(c0) if (c - c0).abs() > 1e-12 * c0.abs() => return false,
            _ => {}
        }
    }
    ratio.is_some_and(|c| c > 0.0)
}

fn constant_shift(v: &GridFunction, w: &GridFunction) -> bool {
    let diffs: Vec<f64> = v.values().iter().zip(w.values()).map(|(a, b)| a - b).collect();
    diffs.first().is_some_and(|d0| diffs.iter().all(|d| (d - d0).abs() <= 1e-12 * (1.0 + d0.abs())))
}

/// Equality and strictness in the hidden convexity inequality.
///
/// * `r = p` and `v = C w`: equality to `1e-10` relative (`worst = -|gap|/rhs`).
/// * `r = 1` and `v - w` constant on all nodes (datum included): equality,
///   same tolerance.
/// * otherwise, `r < p`: the gap must be strictly positive; `worst` is the
///   relative gap minus the roundoff allowance, with zero tolerance.
pub fn check_equality_cases(v: &GridFunction, w: &GridFunction, t: f64, r: f64, p: f64) -> Result<VerifyReport> {
    if r > p {
        return Err(Error::param(format!("need r <= p, got r = {r}, p = {p}")));
    }
    let s = sides(v, w, t, r, p)?;
    let gap = s.rhs - s.lhs;
    let scale = s.rhs.abs().max(f64::MIN_POSITIVE);
    let (mode, worst, tol) = if r == p {
        if !proportional(v, w) {
            return Err(Error::param("the r = p equality case needs v = C w with C > 0"));
        }
        ("proportional", -gap.abs() / scale, 1e-10)
    } else if r == 1.0 && constant_shift(v, w) {
        ("shift", -gap.abs() / scale, 1e-10)
    } else {
        ("strict", gap / scale - ROUNDOFF, 0.0)
    };
    let mut rep = VerifyReport::new(format!("equality_cases/{mode}"), worst, tol)
        .metric("gap", gap)
        .metric("lhs", s.lhs)
        .metric("rhs", s.rhs);
    rep.h = Some(v.grid().spacing());
    rep.p = Some(p);
    Ok(rep)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `(y + δ)^s - y^s` without cancelling when `δ` is small against `y`.
fn power_increment(y: f64, delta: f64, s: f64) -> f64 {
    if y == 0.0 {
        return delta.max(0.0).powf(s);
    }
    y.powf(s) * (s * (delta / y).ln_1p()).exp_m1()
}

struct GapParts {
    /// `t|z|^r + (1-t)|w|^r - |tz + (1-t)w|^r`
    numerator: f64,
    z2: f64,
    w2: f64,
    d2: f64,
}

/// With `m = tz + (1-t)w` and `d = z - w`, the increments `|z|² - |m|² =
/// (1-t) d·(z+m)` and `|w|² - |m|² = -t d·(w+m)` are formed directly.
fn gap_parts(z: &[f64], w: &[f64], t: f64, r: f64) -> Result<GapParts> {
    if z.len() != w.len() || z.is_empty() {
        return Err(Error::param("vectors must have the same nonzero length"));
    }
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::param(format!("t must lie in (0, 1), got {t}")));
    }
    let m: Vec<f64> = z.iter().zip(w).map(|(a, b)| t * a + (1.0 - t) * b).collect();
    let d: Vec<f64> = z.iter().zip(w).map(|(a, b)| a - b).collect();
    let zm: Vec<f64> = z.iter().zip(&m).map(|(a, b)| a + b).collect();
    let wm: Vec<f64> = w.iter().zip(&m).map(|(a, b)| a + b).collect();
    let m2 = dot(&m, &m);
    let s = 0.5 * r;
    let numerator = t * power_increment(m2, (1.0 - t) * dot(&d, &zm), s)
        + (1.0 - t) * power_increment(m2, -t * dot(&d, &wm), s);
    Ok(GapParts { numerator, z2: dot(z, z), w2: dot(w, w), d2: dot(&d, &d) })
}

/// `[t|z|^r + (1-t)|w|^r − |tz + (1-t)w|^r] / [t(1-t)|z-w|^r]` for `r ≥ 2`.
pub fn quantified_gap_r_ge2(z: &[f64], w: &[f64], t: f64, r: f64) -> Result<f64> {
    if !(r >= 2.0 && r.is_finite()) {
        return Err(Error::param(format!("need r >= 2, got {r}")));
    }
    let g = gap_parts(z, w, t, r)?;
    if g.d2 == 0.0 {
        return Err(Error::UndefinedRatio("z = w".into()));
    }
    Ok(g.numerator / (t * (1.0 - t) * g.d2.powf(0.5 * r)))
}

/// `[t|z|^r + (1-t)|w|^r − |tz + (1-t)w|^r] / [t(1-t)(|z|²+|w|²)^{(r-2)/2}|z-w|²]`
/// for `1 < r < 2`.
pub fn quantified_gap_r_lt2(z: &[f64], w: &[f64], t: f64, r: f64) -> Result<f64> {
    if !(r > 1.0 && r < 2.0) {
        return Err(Error::param(format!("need 1 < r < 2, got {r}")));
    }
    let g = gap_parts(z, w, t, r)?;
    if g.d2 == 0.0 {
        return Err(Error::UndefinedRatio("z = w (or both zero)".into()));
    }
    Ok(g.numerator / (t * (1.0 - t) * (g.z2 + g.w2).powf(0.5 * (r - 2.0)) * g.d2))
}

/// Smallest gap ratio over `samples` seeded draws of `z, w ∈ [-1,1]^dim` and
/// `t ∈ (0,1)`. The value is descriptive: it bounds the constant from above.
pub fn empirical_infimum(r: f64, dim: usize, samples: usize, seed: u64, exec: Exec) -> Result<f64> {
    if dim == 0 || samples == 0 {
        return Err(Error::param("need a positive dimension and sample count"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<(Vec<f64>, Vec<f64>, f64)> = (0..samples)
        .map(|_| {
            let z = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let w = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let t = rng.gen_range(f64::EPSILON..1.0);
            (z, w, t)
        })
        .collect();
    let ratios = par::map(exec, &draws, |(z, w, t)| {
        if r >= 2.0 {
            quantified_gap_r_ge2(z, w, *t, r)
        } else {
            quantified_gap_r_lt2(z, w, *t, r)
        }
    });
    ratios.into_iter().try_fold(f64::INFINITY, |m, v| Ok(m.min(v?)))
}
