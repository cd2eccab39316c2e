//! Browser bindings for the demo page in `www/`.
//!
//! Each exported function has a plain Rust counterpart that returns a flat
//! `Vec<f64>` so the page can draw it without a serialization layer.

use pcd_epp::pcd::{pcd_average_figures, pcd_conditional_maps};
use pcd_epp::planner::{crossover_fidelity, efficiency_after_n, fidelity_after_n};
use pcd_epp::{minimal_plan, CavityParams, ThresholdQuery};
use wasm_bindgen::prelude::*;

/// Values per point returned by [`fig4_curves`].
pub const CURVE_STRIDE: usize = 7;

/// `points` evenly spaced initial fidelities on `[start, stop]`, each
/// followed by F and η for 2, 3 and 4 raw pairs.
pub fn fig4_curves_values(start: f64, stop: f64, points: usize) -> Result<Vec<f64>, String> {
    if points < 2 || !(0.0..=1.0).contains(&start) || !(start..=1.0).contains(&stop) {
        return Err("need at least two points with 0 <= start <= stop <= 1".into());
    }
    let mut out = Vec::with_capacity(points * CURVE_STRIDE);
    for i in 0..points {
        let f = start + (stop - start) * i as f64 / (points - 1) as f64;
        out.push(f);
        for n in [2, 3, 4] {
            out.push(fidelity_after_n(f, n).map_err(|e| e.to_string())?);
        }
        for n in [2, 3, 4] {
            out.push(efficiency_after_n(f, n).map_err(|e| e.to_string())?);
        }
    }
    Ok(out)
}

/// `[r, t, r0, t0, Fbar_e, Fbar_o, etabar_e, etabar_o, exact_eta_e, exact_eta_o]`
/// at one cavity point. The exact efficiencies are the Haar averages in
/// closed form.
pub fn pcd_point_values(g: f64, kappa_s: f64, gamma: f64, samples: usize, seed: u64) -> Result<Vec<f64>, String> {
    let c = CavityParams::new(g, kappa_s, gamma)
        .and_then(|p| p.coefficients())
        .map_err(|e| e.to_string())?;
    let avg = pcd_average_figures(&c, samples, seed).map_err(|e| e.to_string())?;
    let maps = pcd_conditional_maps(&c).map_err(|e| e.to_string())?;
    let exact: Vec<f64> = maps.iter().map(|m| m.map.gram().trace().re / 4.0).collect();
    Ok(vec![
        c.r,
        c.t,
        c.r0,
        c.t0,
        avg.f_even.mean,
        avg.f_odd.mean,
        avg.eta_even.mean,
        avg.eta_odd.mean,
        exact[0],
        exact[1],
    ])
}

/// `[leaves, final_fidelity, cumulative_efficiency, expected_raw_pairs,
/// crossover_2, crossover_3, crossover_4]`.
pub fn plan_values(initial: f64, threshold: f64) -> Result<Vec<f64>, String> {
    let plan = minimal_plan(&ThresholdQuery::new(initial, threshold)).map_err(|e| e.to_string())?;
    let mut out = vec![
        plan.leaves as f64,
        plan.final_fidelity,
        plan.cumulative_efficiency,
        plan.expected_raw_pairs,
    ];
    for n in [2, 3, 4] {
        out.push(crossover_fidelity(threshold, n).map_err(|e| e.to_string())?);
    }
    Ok(out)
}

#[wasm_bindgen]
pub fn fig4_curves(start: f64, stop: f64, points: usize) -> Result<Vec<f64>, JsError> {
    fig4_curves_values(start, stop, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn pcd_point(g: f64, kappa_s: f64, gamma: f64, samples: usize, seed: u64) -> Result<Vec<f64>, JsError> {
    pcd_point_values(g, kappa_s, gamma, samples, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn plan(initial: f64, threshold: f64) -> Result<Vec<f64>, JsError> {
    plan_values(initial, threshold).map_err(|e| JsError::new(&e))
}
