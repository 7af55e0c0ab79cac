use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ProfileKind {
    /// `w_I` sampled on `[-1, 0]`, extended evenly to `[0, 1]`.
    IntervalHalf,
    /// A radial profile sampled on `[0, 1]`, zero beyond radius 1.
    Radial,
}

/// Sampled monotone profile with shape-preserving cubic (PCHIP) interpolation.
#[derive(Clone, Debug, Serialize)]
pub struct Profile1D {
    pub kind: ProfileKind,
    pub abscissae: Vec<f64>,
    pub values: Vec<f64>,
    #[serde(skip)]
    slopes: Vec<f64>,
}

impl Profile1D {
    pub fn new(kind: ProfileKind, abscissae: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if abscissae.len() != values.len() || abscissae.len() < 2 {
            return Err(Error::param("profile needs at least two samples of matching length"));
        }
        if abscissae.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("profile abscissae must be strictly increasing"));
        }
        let slopes = pchip_slopes(&abscissae, &values);
        Ok(Profile1D {
            kind,
            abscissae,
            values,
            slopes,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Evaluates the profile. Interval profiles are even on `[-1, 1]`; both
    /// kinds vanish outside their support.
    pub fn eval(&self, x: f64) -> f64 {
        let x = match self.kind {
            ProfileKind::IntervalHalf => {
                if x.abs() >= 1.0 {
                    return 0.0;
                }
                -x.abs()
            }
            ProfileKind::Radial => {
                if x >= 1.0 {
                    return 0.0;
                }
                x.max(0.0)
            }
        };
        self.interpolate(x)
    }

    fn interpolate(&self, x: f64) -> f64 {
        let xs = &self.abscissae;
        let n = xs.len();
        let x = x.clamp(xs[0], xs[n - 1]);
        let i = match xs.partition_point(|&a| a <= x) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        };
        let h = xs[i + 1] - xs[i];
        let s = (x - xs[i]) / h;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (d0, d1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * d0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * d1
    }

    /// Writes `t,value` (interval) or `r,value` (radial) CSV.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let header = match self.kind {
            ProfileKind::IntervalHalf => "t,value",
            ProfileKind::Radial => "r,value",
        };
        writeln!(out, "{header}")?;
        for (x, v) in self.abscissae.iter().zip(&self.values) {
            writeln!(out, "{x},{v}")?;
        }
        Ok(())
    }
}

/// Fritsch-Carlson derivative estimates (the rule used by SciPy's PCHIP).
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    if n == 2 {
        return vec![delta[0]; 2];
    }
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] > 0.0 {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    let end = |h0: f64, h1: f64, m0: f64, m1: f64| {
        let d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
        if d.signum() != m0.signum() {
            0.0
        } else if m0.signum() != m1.signum() && d.abs() > 3.0 * m0.abs() {
            3.0 * m0
        } else {
            d
        }
    };
    d[0] = end(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}
