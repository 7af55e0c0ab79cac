//! Adaptive Dormand-Prince 5(4) integration for small autonomous-in-form
//! systems `y' = f(t, y)`.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub initial_step: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rel_tol: 1e-12,
            abs_tol: 1e-14,
            initial_step: 1e-6,
            max_steps: 1_000_000,
        }
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates from `t0` to each of the increasing `stops` in turn and returns
/// the state at every stop.
pub fn integrate_to<const D: usize, F>(
    f: F,
    t0: f64,
    y0: [f64; D],
    stops: &[f64],
    opts: OdeOptions,
) -> Result<Vec<[f64; D]>>
where
    F: Fn(f64, &[f64; D]) -> [f64; D],
{
    let mut t = t0;
    let mut y = y0;
    let mut step = opts.initial_step;
    let mut steps = 0usize;
    let mut out = Vec::with_capacity(stops.len());
    for &stop in stops {
        if stop < t {
            return Err(Error::param("integration stops must be increasing"));
        }
        while t < stop {
            steps += 1;
            if steps > opts.max_steps {
                return Err(Error::Numeric {
                    message: format!("ODE integration exceeded {} steps at t = {t}", opts.max_steps),
                    achieved: None,
                });
            }
            let hit = t + step >= stop;
            let dt = if hit { stop - t } else { step };
            let mut k = [[0.0; D]; 7];
            k[0] = f(t, &y);
            for s in 1..7 {
                let mut ys = y;
                for (j, kj) in k.iter().enumerate().take(s) {
                    for d in 0..D {
                        ys[d] += dt * A[s][j] * kj[d];
                    }
                }
                k[s] = f(t + C[s] * dt, &ys);
            }
            let mut y5 = y;
            let mut err = 0.0_f64;
            for d in 0..D {
                let mut hi = 0.0;
                let mut lo = 0.0;
                for s in 0..7 {
                    hi += B5[s] * k[s][d];
                    lo += B4[s] * k[s][d];
                }
                y5[d] += dt * hi;
                let scale = opts.abs_tol + opts.rel_tol * y[d].abs().max(y5[d].abs());
                err = err.max((dt * (hi - lo)).abs() / scale);
            }
            if !err.is_finite() {
                step = 0.25 * dt;
                if step < 1e-300 {
                    return Err(Error::numeric(format!("ODE step underflow at t = {t}")));
                }
                continue;
            }
            if err <= 1.0 {
                t = if hit { stop } else { t + dt };
                y = y5;
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            step = dt * factor;
            if step < 1e-15 * t.abs().max(1e-300) {
                return Err(Error::numeric(format!("ODE step size collapsed at t = {t}")));
            }
        }
        out.push(y);
    }
    Ok(out)
}
