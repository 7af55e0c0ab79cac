//! Projected gradient descent with Barzilai-Borwein steps and monotone
//! Armijo backtracking.

use super::discrete::Model;
use super::newton::energy_scale;
use super::{LoopOutcome, LoopSettings};

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub(crate) fn minimize(model: &Model, x0: Vec<f64>, u: &mut [f64], settings: &LoopSettings) -> LoopOutcome {
    let n = model.n();
    let vol = model.grid.cell_volume();
    let h = model.grid.spacing();
    let mut x = x0;
    model.scatter(&x, u);
    let mut energy = model.energy(u, &x);
    // work with the strong residual R = g / h^N
    let mut res: Vec<f64> = model.gradient(u, &x).iter().map(|g| g / vol).collect();
    let mut energies = vec![energy];
    let mut step = h * h / (2.0 * model.grid.dim() as f64);
    let mut trial_u = u.to_vec();

    for iter in 0..settings.max_iterations {
        if !energy.is_finite() {
            return LoopOutcome::failed(x, energies, iter, 0, "energy is not finite");
        }
        if sup(&res) <= (settings.threshold)(&x) {
            return LoopOutcome::done(x, energies, iter, 0, true);
        }
        let scale = energy_scale(model, u, &x);
        let mut s = step;
        let mut accepted = None;
        for _ in 0..60 {
            let xt: Vec<f64> = (0..n)
                .map(|i| {
                    let v = x[i] - s * res[i];
                    if settings.project {
                        v.max(0.0)
                    } else {
                        v
                    }
                })
                .collect();
            model.scatter(&xt, &mut trial_u);
            let et = model.energy(&trial_u, &xt);
            let decrease: f64 = (0..n).map(|i| vol * res[i] * (xt[i] - x[i])).sum();
            if et.is_finite() && (et <= energy + 1e-4 * decrease || (decrease == 0.0 && et <= energy)) {
                accepted = Some((xt, et, None));
                break;
            }
            if et.is_finite() && et <= energy + 1e-12 * scale {
                let rt: Vec<f64> = model.gradient(&trial_u, &xt).iter().map(|g| g / vol).collect();
                if sup(&rt) < sup(&res) {
                    accepted = Some((xt, et, Some(rt)));
                    break;
                }
            }
            s *= 0.5;
        }
        let Some((xt, et, rt)) = accepted else {
            log::warn!("projected BB line search failed at iteration {iter}");
            return LoopOutcome::done(x, energies, iter, 0, false);
        };
        model.scatter(&xt, &mut trial_u);
        let rt = rt.unwrap_or_else(|| model.gradient(&trial_u, &xt).iter().map(|g| g / vol).collect());
        let (mut ss, mut sy) = (0.0, 0.0);
        for i in 0..n {
            let dx = xt[i] - x[i];
            ss += dx * dx;
            sy += dx * (rt[i] - res[i]);
        }
        step = if sy > 0.0 { (ss / sy).clamp(1e-14, 1e14) } else { (2.0 * s).min(1e14) };
        x = xt;
        res = rt;
        energy = et;
        u.copy_from_slice(&trial_u);
        energies.push(energy);
    }
    let ok = sup(&res) <= (settings.threshold)(&x);
    LoopOutcome::done(x, energies, settings.max_iterations, 0, ok)
}
