//! Reference computations that share no code with the library.

#![allow(dead_code)]

use std::f64::consts::PI;

/// Positive solution of `-(|u'|^{p-2}u')' = u^{q-1}` on `(-1, 0]` with
/// `u(-1) = 0`, `u'(0) = 0`, by iterating the integrated flux:
/// `φ(t) = ∫_t^0 u^{q-1}`, `u(t) = ∫_{-1}^t φ^{1/(p-1)}`. Returns `(u(0), ∫ u^q)`.
pub fn flux_fixed_point(p: f64, q: f64, n: usize) -> (f64, f64) {
    let h = 1.0 / n as f64;
    let mut u: Vec<f64> = (0..=n).map(|i| i as f64 * h * (2.0 - i as f64 * h)).collect();
    for _ in 0..10_000 {
        let src: Vec<f64> = u.iter().map(|v| if q == 1.0 { 1.0 } else { v.powf(q - 1.0) }).collect();
        let mut phi = vec![0.0; n + 1];
        for i in (0..n).rev() {
            phi[i] = phi[i + 1] + 0.5 * h * (src[i] + src[i + 1]);
        }
        let slope: Vec<f64> = phi.iter().map(|f| f.powf(1.0 / (p - 1.0))).collect();
        let mut next = vec![0.0; n + 1];
        for i in 1..=n {
            next[i] = next[i - 1] + 0.5 * h * (slope[i - 1] + slope[i]);
        }
        let change = next.iter().zip(&u).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        u = next;
        if change < 1e-14 {
            break;
        }
    }
    let mass = (0..n).map(|i| 0.5 * h * (u[i].powf(q) + u[i + 1].powf(q))).sum();
    (u[n], mass)
}

/// Five-point red-black SOR for `-Δw = f` on `(a, b)²` with zero boundary
/// values and `n` intervals per side. Returns the `(n+1)²` nodal values.
pub fn poisson_sor(a: f64, b: f64, n: usize, f: f64) -> Vec<f64> {
    let h = (b - a) / n as f64;
    let m = n + 1;
    let mut w = vec![0.0; m * m];
    let omega = 2.0 / (1.0 + (PI / n as f64).sin());
    for _ in 0..100_000 {
        let mut change: f64 = 0.0;
        for colour in 0..2 {
            for j in 1..n {
                for i in 1..n {
                    if (i + j) % 2 != colour {
                        continue;
                    }
                    let k = i + m * j;
                    let gs = 0.25 * (w[k - 1] + w[k + 1] + w[k - m] + w[k + m] + h * h * f);
                    let d = omega * (gs - w[k]);
                    w[k] += d;
                    change = change.max(d.abs());
                }
            }
        }
        if change < 1e-15 {
            break;
        }
    }
    w
}

/// Torsion function of `(-1, 1)²` at the origin from its Fourier series.
pub fn square_torsion_center_series() -> f64 {
    let mut v = 0.5;
    for j in 0..50 {
        let k = (2 * j + 1) as f64;
        let c = 16.0 / (k.powi(3) * PI.powi(3)) * if j % 2 == 0 { 1.0 } else { -1.0 };
        v -= c / (k * PI / 2.0).cosh();
    }
    v
}

/// `∫ w` for the torsion function of the unit square, from its Fourier series.
pub fn unit_square_torsion_mass_series() -> f64 {
    let mut m = 1.0 / 12.0;
    for j in 0..50 {
        let k = (2 * j + 1) as f64;
        m -= 16.0 * (k * PI / 2.0).tanh() / (PI.powi(5) * k.powi(5));
    }
    m
}

/// Twelve convex fixtures: boxes, disks, triangles and hexagons.
pub fn corpus() -> Vec<lek_core::ConvexDomain> {
    use lek_core::ConvexDomain;
    use rand::{Rng, SeedableRng};

    let mut out = vec![
        ConvexDomain::rect([-1.0, -1.0], [1.0, 1.0]).unwrap(),
        ConvexDomain::rect([0.0, 0.0], [3.0, 1.0]).unwrap(),
        ConvexDomain::rect([-4.0, -1.0], [4.0, 1.0]).unwrap(),
        ConvexDomain::disk([0.0, 0.0], 1.0).unwrap(),
        ConvexDomain::disk([0.3, -0.2], 0.6).unwrap(),
        ConvexDomain::polygon(vec![[0.0, 0.0], [2.0, 0.0], [1.0, 3f64.sqrt()]]).unwrap(),
        ConvexDomain::polygon(vec![[0.0, 0.0], [2.0, 0.0], [0.0, 2.0]]).unwrap(),
        ConvexDomain::polygon(vec![[0.0, 0.0], [4.0, 0.0], [1.0, 1.0]]).unwrap(),
        ConvexDomain::polygon((0..6).map(|k| {
            let a = PI * k as f64 / 3.0;
            [a.cos(), a.sin()]
        }).collect()).unwrap(),
    ];
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for _ in 0..3 {
        let (a, b) = (rng.gen_range(1.0..2.0), rng.gen_range(0.6..1.0));
        let vertices = (0..6)
            .map(|k| {
                let t = PI * k as f64 / 3.0 + rng.gen_range(-0.35..0.35);
                [a * t.cos(), b * t.sin()]
            })
            .collect();
        out.push(ConvexDomain::polygon(vertices).unwrap());
    }
    out
}
