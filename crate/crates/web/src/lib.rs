//! Browser bindings for the interactive demo page in `www/`.
//!
//! Each export returns a flat `Float64Array` of interleaved rows so the page
//! can plot it without a serialization layer. The plain functions in
//! [`curves`] hold the logic and are tested natively.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use wasm_bindgen::prelude::*;

pub mod curves {
    use echomem::model::{nlpe_efficiency, NlpeParams};
    use echomem::photonics::{classical_bound, theoretical_fidelity, MemoryChannel};
    use echomem::rffield::{field_at, field_map, homogeneity, linspace, CpwGeometry, Disk, ElectrodeLayout};

    /// Rows `(t, eta)` of the closed-form efficiency with the other interval
    /// held at zero. `axis_t31` selects which interval is swept.
    pub fn nlpe_decay(p: NlpeParams, axis_t31: bool, t_max: f64, points: usize) -> Result<Vec<f64>, String> {
        let mut out = Vec::with_capacity(2 * points);
        for t in linspace(0.0, t_max, points) {
            let (t31, t42) = if axis_t31 { (t, 0.0) } else { (0.0, t) };
            out.push(t);
            out.push(nlpe_efficiency(&p, t31, t42).map_err(|e| e.to_string())?);
        }
        Ok(out)
    }

    /// Rows `(mu, theory, bound)` on a log grid of mean photon numbers.
    pub fn fidelity_vs_bound(
        eta_m: f64,
        p_n: f64,
        mu_min: f64,
        mu_max: f64,
        points: usize,
    ) -> Result<Vec<f64>, String> {
        if !(mu_min > 0.0 && mu_max > mu_min) || points < 2 {
            return Err("need 0 < mu_min < mu_max and at least 2 points".into());
        }
        let ch = MemoryChannel::new(eta_m, p_n);
        let mut out = Vec::with_capacity(3 * points);
        for u in linspace(mu_min.ln(), mu_max.ln(), points) {
            let mu = u.exp();
            out.push(mu);
            out.push(theoretical_fidelity(mu, &ch).map_err(|e| e.to_string())?);
            out.push(classical_bound(mu, eta_m).map_err(|e| e.to_string())?.bound);
        }
        Ok(out)
    }

    /// Rows `(depth, |B|)` per ampere of signal current, under the center
    /// of the signal strip.
    pub fn field_profile(geometry: CpwGeometry, max_depth: f64, points: usize) -> Result<Vec<f64>, String> {
        if !(max_depth > 0.0) || points < 2 {
            return Err("need a positive depth and at least 2 points".into());
        }
        let layout = ElectrodeLayout::cpw(geometry, 1.0);
        layout.validate().map_err(|e| e.to_string())?;
        let mut out = Vec::with_capacity(2 * points);
        for d in linspace(max_depth / points as f64, max_depth, points) {
            out.push(d);
            out.push(field_at(&layout, 0.0, d).map_err(|e| e.to_string())?.norm());
        }
        Ok(out)
    }

    /// Relative standard deviation of `|B|` over a disk centered under the
    /// signal strip.
    pub fn field_spread(geometry: CpwGeometry, center_depth: f64, diameter: f64) -> Result<f64, String> {
        let r = 0.5 * diameter;
        if !(r > 0.0 && center_depth > r) {
            return Err("the disk must lie below the surface".into());
        }
        let layout = ElectrodeLayout::cpw(geometry, 1.0);
        layout.validate().map_err(|e| e.to_string())?;
        let xs = linspace(-r, r, 81);
        let ds = linspace(center_depth - r, center_depth + r, 81);
        let map = field_map(&layout, &xs, &ds).map_err(|e| e.to_string())?;
        let h = homogeneity(&map, &Disk { center_x: 0.0, center_depth, diameter }).map_err(|e| e.to_string())?;
        Ok(h.relative_std)
    }
}

fn js(e: String) -> JsError {
    JsError::new(&e)
}

/// Closed-form echo efficiency against `t31` (`axis = "t31"`) or `t42`.
/// Rates in Hz, times in s.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn nlpe_decay(
    d: f64,
    eta_control: f64,
    gamma13: f64,
    gamma35: f64,
    gamma: f64,
    axis: &str,
    t_max: f64,
    points: usize,
) -> Result<Vec<f64>, JsError> {
    let p = echomem::model::NlpeParams { d, eta_control, gamma13, gamma35, gamma };
    curves::nlpe_decay(p, axis == "t31", t_max, points).map_err(js)
}

#[wasm_bindgen]
pub fn fidelity_vs_bound(eta_m: f64, p_n: f64, mu_min: f64, mu_max: f64, points: usize) -> Result<Vec<f64>, JsError> {
    curves::fidelity_vs_bound(eta_m, p_n, mu_min, mu_max, points).map_err(js)
}

/// Widths in m.
#[wasm_bindgen]
pub fn field_profile(
    signal_width: f64,
    gap: f64,
    ground_width: f64,
    max_depth: f64,
    points: usize,
) -> Result<Vec<f64>, JsError> {
    let g = echomem::rffield::CpwGeometry { signal_width, gap, ground_width };
    curves::field_profile(g, max_depth, points).map_err(js)
}

#[wasm_bindgen]
pub fn field_spread(
    signal_width: f64,
    gap: f64,
    ground_width: f64,
    center_depth: f64,
    diameter: f64,
) -> Result<f64, JsError> {
    let g = echomem::rffield::CpwGeometry { signal_width, gap, ground_width };
    curves::field_spread(g, center_depth, diameter).map_err(js)
}
