//! Closed-form constants and one-dimensional / radial profiles.
//!
//! The interval profile `w_I` is the positive solution on `(-1, 1)` with unit
//! multiplier. Its first integral gives
//! `t(w) = -1 + (q(p-1)/p)^{1/p} ∫_0^w (w_I(0)^q - τ^q)^{-1/p} dτ`, which is
//! what [`wi_profile`] inverts. The substitution `τ = w_I(0)(1 - s^{p'})`
//! turns the endpoint singularity into a bounded integrand.

pub mod ode;
mod profile;
pub mod quad;

use serde::{Deserialize, Serialize};
use statrs::function::beta::ln_beta;

use crate::error::{Error, Result};
pub use profile::{Profile1D, ProfileKind};
use quad::{integrate, QuadOptions};

/// Exponents `(p, q)` with `1 < p < ∞`, `1 ≤ q < p`, and multiplier `alpha > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PQParams {
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
}

impl PQParams {
    pub fn new(p: f64, q: f64, alpha: f64) -> Result<Self> {
        check_pq(p, q)?;
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::param(format!("alpha must be positive, got {alpha}")));
        }
        Ok(PQParams { p, q, alpha })
    }

    /// Unit multiplier.
    pub fn unit(p: f64, q: f64) -> Result<Self> {
        Self::new(p, q, 1.0)
    }

    /// Exponent `p/(p-q)` of the domain scaling `w_{tΩ}(tx) = t^{p/(p-q)} w_Ω(x)`.
    pub fn scaling_exponent(&self) -> f64 {
        self.p / (self.p - self.q)
    }

    pub fn with_alpha(self, alpha: f64) -> Result<Self> {
        Self::new(self.p, self.q, alpha)
    }
}

fn check_pq(p: f64, q: f64) -> Result<()> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::param(format!("p must satisfy 1 < p < inf, got {p}")));
    }
    if !(q >= 1.0 && q < p) {
        return Err(Error::param(format!("q must satisfy 1 <= q < p, got q = {q}, p = {p}")));
    }
    Ok(())
}

/// Hölder conjugate `p/(p-1)`.
pub fn conjugate(p: f64) -> f64 {
    p / (p - 1.0)
}

/// The sharp one-dimensional Sobolev-Poincaré constant `π_{p,q}` on `(0, 1)`:
/// `(2/q)(1+q/p')^{1/q}(1+p'/q)^{-1/p} B(1/q, 1/p')`.
pub fn pi_pq(p: f64, q: f64) -> Result<f64> {
    if !(p > 1.0 && p.is_finite() && q >= 1.0 && q.is_finite()) {
        return Err(Error::param(format!("pi_pq needs 1 < p, 1 <= q, both finite; got ({p}, {q})")));
    }
    let pc = conjugate(p);
    let log = (2.0 / q).ln() + (1.0 + q / pc).ln() / q - (1.0 + pc / q).ln() / p + ln_beta(1.0 / q, 1.0 / pc);
    Ok(log.exp())
}

/// `λ_{p,q}` of the interval `(-L, L)`.
pub fn lambda_pq_interval(p: f64, q: f64, half_length: f64) -> Result<f64> {
    check_pq(p, q)?;
    if !(half_length > 0.0) {
        return Err(Error::param("half length must be positive"));
    }
    let unit = 2f64.powf((q - p) / q) * (pi_pq(p, q)? / 2.0).powf(p);
    Ok(unit * half_length.powf(-p - (p - q) / q))
}

/// `w_I(0) = ((qp - q + p)/p)^{1/q} (2/π_{p,q})^{p/(p-q)}`.
pub fn wi_center(p: f64, q: f64) -> Result<f64> {
    check_pq(p, q)?;
    let pi = pi_pq(p, q)?;
    Ok(((q * p - q + p) / p).powf(1.0 / q) * (2.0 / pi).powf(p / (p - q)))
}

/// `∫_{-1}^0 w_I^q dt = (2/π_{p,q})^{pq/(p-q)}`.
pub fn wi_mass(p: f64, q: f64) -> Result<f64> {
    check_pq(p, q)?;
    Ok((2.0 / pi_pq(p, q)?).powf(p * q / (p - q)))
}

/// Closed form of `w_{B_1}` for `q = 1`: `(p-1)/p · N^{-1/(p-1)} (1 - |x|^{p/(p-1)})`.
pub fn wb1_q1_exact(p: f64, n: usize, x_norm: f64) -> Result<f64> {
    check_pq(p, 1.0)?;
    if !(0.0..=1.0).contains(&x_norm) || n == 0 {
        return Err(Error::param("wb1_q1_exact needs N >= 1 and 0 <= |x| <= 1"));
    }
    let pc = conjugate(p);
    Ok((p - 1.0) / p * (n as f64).powf(-1.0 / (p - 1.0)) * (1.0 - x_norm.powf(pc)))
}

/// Multiplies unit-multiplier values by `alpha^{1/(p-q)}`.
pub fn scale_solution_alpha(values: &[f64], p: f64, q: f64, alpha: f64) -> Result<Vec<f64>> {
    let params = PQParams::new(p, q, alpha)?;
    let f = params.alpha.powf(1.0 / (p - q));
    Ok(values.iter().map(|v| v * f).collect())
}

/// The first-integral quadrature for `w_I` in the variable `s`, where
/// `τ = w_I(0)(1 - s^{p'})`.
struct FirstIntegral {
    p: f64,
    q: f64,
    m: f64,
    center: f64,
    /// `(q(p-1)/p)^{1/p} w_I(0)^{1 - q/p}`
    factor: f64,
    /// `∫_0^1 g(s) ds = ∫_0^1 (1 - y^q)^{-1/p} dy`
    total: f64,
}

impl FirstIntegral {
    fn new(p: f64, q: f64) -> Result<Self> {
        let center = wi_center(p, q)?;
        let factor = (q * (p - 1.0) / p).powf(1.0 / p) * center.powf(1.0 - q / p);
        let mut me = FirstIntegral {
            p,
            q,
            m: conjugate(p),
            center,
            factor,
            total: 0.0,
        };
        me.total = me.partial(1.0)?;
        Ok(me)
    }

    /// Bounded integrand `m (s^m / (1 - (1 - s^m)^q))^{1/p}`.
    fn g(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return self.m * self.q.powf(-1.0 / self.p);
        }
        let sm = s.powf(self.m);
        let denom = -(self.q * (-sm).ln_1p()).exp_m1();
        if denom <= 0.0 {
            return self.m * self.q.powf(-1.0 / self.p);
        }
        self.m * (sm / denom).powf(1.0 / self.p)
    }

    /// `∫_0^s g`.
    fn partial(&self, s: f64) -> Result<f64> {
        let opts = QuadOptions {
            abs_tol: 1e-15,
            rel_tol: 1e-14,
            max_intervals: 4000,
        };
        Ok(integrate(|x| self.g(x), 0.0, s, opts)?.value)
    }

    /// `(q(p-1)/p)^{1/p} ∫_0^w (w_I(0)^q - τ^q)^{-1/p} dτ` for `0 <= w <= w_I(0)`.
    fn scaled_integral(&self, w: f64) -> Result<f64> {
        let y = (w / self.center).clamp(0.0, 1.0);
        let s = (1.0 - y).powf(1.0 / self.m);
        Ok(self.factor * (self.total - self.partial(s)?))
    }

    /// Value `w` with `t(w) = t` for `t ∈ [-1, 0]`.
    fn invert(&self, t: f64) -> Result<f64> {
        let target = self.total - (t + 1.0) / self.factor;
        if target <= 0.0 {
            return Ok(self.center);
        }
        if target >= self.total {
            return Ok(0.0);
        }
        // Safeguarded Newton on A(s) = target; A is increasing with A' = g > 0.
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        let mut s = (target / self.total).clamp(0.0, 1.0);
        for _ in 0..100 {
            let resid = self.partial(s)? - target;
            if resid.abs() <= 1e-15 * self.total {
                break;
            }
            if resid > 0.0 {
                hi = s;
            } else {
                lo = s;
            }
            let mut next = s - resid / self.g(s);
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - s).abs() <= 1e-16 {
                s = next;
                break;
            }
            s = next;
        }
        Ok(self.center * (1.0 - s.powf(self.m)))
    }
}

/// `(q(p-1)/p)^{1/p} ∫_0^{w_I(0)} (w_I(0)^q - τ^q)^{-1/p} dτ`, which equals 1
/// exactly; the deviation measures the quadrature.
pub fn consistency_integral(p: f64, q: f64) -> Result<f64> {
    let fi = FirstIntegral::new(p, q)?;
    fi.scaled_integral(fi.center)
}

/// Samples `w_I` at `n_samples` uniform points of `[-1, 0]`.
pub fn wi_profile(p: f64, q: f64, n_samples: usize) -> Result<Profile1D> {
    if n_samples < 16 {
        return Err(Error::param(format!("need at least 16 samples, got {n_samples}")));
    }
    let fi = FirstIntegral::new(p, q)?;
    let ts: Vec<f64> = (0..n_samples)
        .map(|k| -1.0 + k as f64 / (n_samples - 1) as f64)
        .collect();
    let mut values = ts.iter().map(|&t| fi.invert(t)).collect::<Result<Vec<_>>>()?;
    values[0] = 0.0;
    Profile1D::new(ProfileKind::IntervalHalf, ts, values)
}

/// Sign-preserving `max(u,0)^{q-1}` with the `q = 1` convention `u^0 ≡ 1`.
fn source(u: f64, q: f64) -> f64 {
    if q == 1.0 {
        1.0
    } else {
        u.max(0.0).powf(q - 1.0)
    }
}

/// Integrates the radial problem `-(r^{N-1}|u'|^{p-2}u')' = r^{N-1} u^{q-1}`,
/// `u(0) = a`, `u'(0) = 0` and returns `u` at the requested radii (all > 0).
fn radial_shot(p: f64, q: f64, n: usize, a: f64, radii: &[f64]) -> Result<Vec<f64>> {
    let nf = n as f64;
    let r0 = (1e-4f64).min(0.5 * radii[0]);
    let pc = conjugate(p);
    let c = (1.0 / pc) * (source(a, q) / nf).powf(1.0 / (p - 1.0));
    let u0 = a - c * r0.powf(pc);
    let phi0 = -r0.powf(nf) * source(a, q) / nf;
    let rhs = |r: f64, y: &[f64; 2]| {
        let w = r.powi(n as i32 - 1);
        let du = -(y[1].abs() / w).powf(1.0 / (p - 1.0)) * if y[1] > 0.0 { -1.0 } else { 1.0 };
        [du, -w * source(y[0], q)]
    };
    let states = ode::integrate_to(rhs, r0, [u0, phi0], radii, ode::OdeOptions::default())?;
    Ok(states.into_iter().map(|s| s[0]).collect())
}

/// Radial profile of `w_{B_1}` in `N` dimensions, computed by shooting on
/// `u(0)` with bisection until `u(1) = 0`.
pub fn wb1_profile(p: f64, q: f64, n: usize, n_samples: usize) -> Result<Profile1D> {
    check_pq(p, q)?;
    if n == 0 {
        return Err(Error::param("dimension must be at least 1"));
    }
    if n_samples < 2 {
        return Err(Error::param("need at least two samples"));
    }
    let a = wb1_center(p, q, n)?;
    let radii: Vec<f64> = (1..n_samples).map(|k| k as f64 / (n_samples - 1) as f64).collect();
    let mut values = vec![a];
    values.extend(radial_shot(p, q, n, a, &radii)?);
    let last = values.len() - 1;
    values[last] = 0.0;
    for v in values.iter_mut() {
        *v = v.max(0.0);
    }
    let mut abscissae = vec![0.0];
    abscissae.extend(radii);
    Profile1D::new(ProfileKind::Radial, abscissae, values)
}

/// `w_{B_1}(0)` by shooting. The bracket is `[w_I(0)/10, w_I(0)]`, since the
/// ball value cannot exceed the interval value; each end is widened ×10 once.
pub fn wb1_center(p: f64, q: f64, n: usize) -> Result<f64> {
    check_pq(p, q)?;
    let end = |a: f64| -> Result<f64> { Ok(radial_shot(p, q, n, a, &[1.0])?[0]) };
    let w = wi_center(p, q)?;
    let (mut lo, mut hi) = (0.1 * w, w);
    let (mut f_lo, mut f_hi) = (end(lo)?, end(hi)?);
    if f_hi < 0.0 {
        hi *= 10.0;
        f_hi = end(hi)?;
    }
    if f_lo > 0.0 {
        lo /= 10.0;
        f_lo = end(lo)?;
    }
    if f_lo > 0.0 || f_hi < 0.0 {
        return Err(Error::Numeric {
            message: format!("shooting bracket failed: u(1) = {f_lo} at {lo}, {f_hi} at {hi}"),
            achieved: None,
        });
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f = end(mid)?;
        if f == 0.0 {
            return Ok(mid);
        }
        if f < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `C_{N,p,q}` from the first-integral quadrature, clamped to `(0, 1]`.
/// In one dimension the ball is the interval itself, so `w_{B_1}(0) = w_I(0)`.
pub fn localization_constant(n: usize, p: f64, q: f64) -> Result<f64> {
    check_pq(p, q)?;
    if n == 0 {
        return Err(Error::param("dimension must be at least 1"));
    }
    let fi = FirstIntegral::new(p, q)?;
    let b = if n == 1 { fi.center } else { wb1_center(p, q, n)? };
    let c = fi.scaled_integral(b)?;
    Ok(c.clamp(f64::MIN_POSITIVE, 1.0))
}

/// Closed form `C_{N,p,1} = 1 - (1 - N^{-1/(p-1)})^{(p-1)/p}`.
pub fn localization_constant_q1(n: usize, p: f64) -> Result<f64> {
    check_pq(p, 1.0)?;
    if n == 0 {
        return Err(Error::param("dimension must be at least 1"));
    }
    Ok(1.0 - (1.0 - (n as f64).powf(-1.0 / (p - 1.0))).powf((p - 1.0) / p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn pi_pq_golden_values() {
        assert!((pi_pq(2.0, 2.0).unwrap() - PI).abs() < 1e-12);
        assert!((pi_pq(2.0, 1.0).unwrap() - 2.0 * 3f64.sqrt()).abs() < 1e-12);
        assert!(pi_pq(1.0, 1.0).is_err());
        assert!(pi_pq(2.0, 0.5).is_err());
    }

    #[test]
    fn interval_frequencies() {
        assert!((lambda_pq_interval(2.0, 1.0, 1.0).unwrap() - 1.5).abs() < 1e-12);
        assert!((lambda_pq_interval(2.0, 1.0, 0.5).unwrap() - 12.0).abs() < 1e-10);
        // q -> p: classical eigenvalue (π/2)^2 of (-1, 1)
        let l = lambda_pq_interval(2.0, 1.999_999, 1.0).unwrap();
        assert!((l - (PI / 2.0).powi(2)).abs() < 1e-5);
    }

    #[test]
    fn torsion_case_constants() {
        assert!((wi_center(2.0, 1.0).unwrap() - 0.5).abs() < 1e-12);
        assert!((wi_mass(2.0, 1.0).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!((2.0 * wi_mass(2.0, 1.0).unwrap() - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn params_validation() {
        assert!(PQParams::new(2.0, 2.0, 1.0).is_err());
        assert!(PQParams::new(2.0, 0.9, 1.0).is_err());
        assert!(PQParams::new(1.0, 1.0, 1.0).is_err());
        assert!(PQParams::new(2.0, 1.0, 0.0).is_err());
        assert!(PQParams::new(3.0, 1.0, 2.0).is_ok());
    }

    #[test]
    fn scaling_by_alpha() {
        let v = [1.0, 2.0];
        assert_eq!(scale_solution_alpha(&v, 2.0, 1.5, 1.0).unwrap(), v.to_vec());
        assert_eq!(scale_solution_alpha(&v, 2.0, 1.0, 4.0).unwrap(), vec![4.0, 8.0]);
        let s = scale_solution_alpha(&v, 3.0, 1.0, 8.0).unwrap();
        assert!((s[0] - 8f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn consistency_identity_equals_one() {
        for (p, q) in [(2.0, 1.0), (2.0, 1.5), (3.0, 1.0), (3.0, 2.0), (4.0, 2.5), (1.5, 1.2), (6.0, 1.0)] {
            let c = consistency_integral(p, q).unwrap();
            assert!((c - 1.0).abs() < 1e-10, "({p},{q}) -> {c}");
        }
    }

    #[test]
    fn interval_profile_matches_torsion() {
        let prof = wi_profile(2.0, 1.0, 65).unwrap();
        for (t, v) in prof.abscissae.iter().zip(&prof.values) {
            assert!((v - 0.5 * (1.0 - t * t)).abs() < 1e-8, "t = {t}: {v}");
        }
        assert!((prof.eval(-0.5) - 0.375).abs() < 1e-8);
        assert_eq!(prof.values[0], 0.0);
    }

    #[test]
    fn interval_profile_is_strictly_increasing() {
        for (p, q) in [(3.0, 1.5), (4.0, 2.5), (1.5, 1.2)] {
            let prof = wi_profile(p, q, 129).unwrap();
            assert!(prof.values.windows(2).all(|w| w[1] > w[0]), "({p},{q})");
            assert!((prof.values.last().unwrap() - wi_center(p, q).unwrap()).abs() < 1e-12);
        }
        assert!(wi_profile(2.0, 1.0, 8).is_err());
    }

    #[test]
    fn radial_q1_matches_closed_form() {
        for (p, n) in [(2.0, 2usize), (3.0, 2), (2.0, 3), (4.0, 2)] {
            let prof = wb1_profile(p, 1.0, n, 101).unwrap();
            for (r, v) in prof.abscissae.iter().zip(&prof.values) {
                let exact = wb1_q1_exact(p, n, *r).unwrap();
                assert!((v - exact).abs() < 1e-8, "p={p} N={n} r={r}: {v} vs {exact}");
            }
        }
        assert!((wb1_center(2.0, 1.0, 2).unwrap() - 0.25).abs() < 1e-10);
        assert!((wb1_center(3.0, 1.0, 2).unwrap() - (2.0 / 3.0) * 0.5f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn exact_radial_formula_values() {
        assert_eq!(wb1_q1_exact(2.0, 1, 0.0).unwrap(), 0.5);
        assert_eq!(wb1_q1_exact(2.0, 2, 1.0).unwrap(), 0.0);
        assert_eq!(wb1_q1_exact(2.0, 2, 0.0).unwrap(), 0.25);
        assert!(wb1_q1_exact(2.0, 2, 1.5).is_err());
    }

    #[test]
    fn one_dimensional_ball_is_the_interval() {
        let prof = wb1_profile(2.0, 1.0, 1, 65).unwrap();
        assert!((prof.values[0] - 0.5).abs() < 1e-10);
        for (p, q) in [(3.0, 2.0), (2.0, 1.5)] {
            let a = wb1_center(p, q, 1).unwrap();
            assert!((a - wi_center(p, q).unwrap()).abs() < 1e-9, "({p},{q})");
            let ball = wb1_profile(p, q, 1, 33).unwrap();
            let interval = wi_profile(p, q, 33).unwrap();
            for (r, v) in ball.abscissae.iter().zip(&ball.values) {
                assert!((v - interval.eval(*r)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn ball_center_below_interval_center() {
        for (p, q) in [(2.0, 1.5), (3.0, 2.0), (4.0, 2.5)] {
            for n in 2..=3 {
                assert!(wb1_center(p, q, n).unwrap() < wi_center(p, q).unwrap());
            }
        }
    }

    #[test]
    fn localization_constants() {
        assert!((localization_constant(1, 3.0, 1.7).unwrap() - 1.0).abs() < 1e-10);
        let closed = localization_constant_q1(2, 2.0).unwrap();
        assert!((closed - (1.0 - 0.5f64.sqrt())).abs() < 1e-15);
        assert!((localization_constant(2, 2.0, 1.0).unwrap() - closed).abs() < 1e-8);
        let c331 = localization_constant_q1(3, 3.0).unwrap();
        assert!((c331 - (1.0 - (1.0 - 3f64.powf(-0.5)).powf(2.0 / 3.0))).abs() < 1e-15);
        assert!((localization_constant(3, 3.0, 1.0).unwrap() - c331).abs() < 1e-8);
        let c = localization_constant(2, 3.0, 2.0).unwrap();
        assert!(c > 0.0 && c < 1.0);
    }
}
