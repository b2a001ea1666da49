//! Browser bindings for the Fibonacci chain with an adjustable interval
//! window.
//!
//! Each operation has a plain Rust form returning JSON, used by the native
//! tests, and a `wasm_bindgen` wrapper that the page calls.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use cutproject::averaging::fourier_bohr_estimate;
use cutproject::diffraction::{predicted_diffraction, predicted_fourier_bohr, DualMatch};
use cutproject::window::measure;
use cutproject::{cut_project, lattice_density, Aabb, Cps, Window};

/// Largest half-width the page may request.
pub const MAX_RADIUS: f64 = 5_000.0;

#[derive(Serialize)]
struct PatchView {
    density: f64,
    predicted_density: f64,
    x: Vec<f64>,
    h: Vec<f64>,
}

#[derive(Serialize)]
struct PeakView {
    k: f64,
    l: f64,
    intensity: f64,
}

#[derive(Serialize)]
struct CoefficientView {
    k: f64,
    intensity: f64,
    empirical_intensity: f64,
    predicted_re: f64,
    predicted_im: f64,
    empirical_re: f64,
    empirical_im: f64,
}

fn window(lo: f64, hi: f64) -> Result<Window, String> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(format!("window [{lo}, {hi}) is empty"));
    }
    if hi - lo > 10.0 {
        return Err("window wider than 10 is not supported here".into());
    }
    Ok(Window::interval(lo, hi))
}

fn check_radius(radius: f64) -> Result<(), String> {
    if radius > 0.0 && radius <= MAX_RADIUS {
        Ok(())
    } else {
        Err(format!("radius must lie in (0, {MAX_RADIUS}]"))
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

/// Points of `(−s + Λ(t + [lo, hi))) ∩ [−radius, radius]` with their
/// internal coordinates.
pub fn patch_json(lo: f64, hi: f64, s: f64, t: f64, radius: f64) -> Result<String, String> {
    check_radius(radius)?;
    let cps = Cps::fibonacci();
    let w = window(lo, hi)?;
    let p = cut_project(&cps, &w, &[s], &[t], &Aabb::interval(-radius, radius))
        .map_err(|e| e.to_string())?;
    let density = p.len() as f64 / p.volume();
    to_json(&PatchView {
        density,
        predicted_density: lattice_density(&cps) * measure(&w),
        x: p.points.iter().map(|q| q.x[0]).collect(),
        h: p.points.iter().map(|q| q.x_star[0] - t).collect(),
    })
}

/// Predicted Bragg peaks with `|k| ≤ k_max` and intensity at least
/// `threshold`, strongest first.
pub fn spectrum_json(lo: f64, hi: f64, k_max: f64, threshold: f64) -> Result<String, String> {
    if !(k_max > 0.0 && k_max <= 20.0) {
        return Err("k_max must lie in (0, 20]".into());
    }
    let cps = Cps::fibonacci();
    let spectrum = predicted_diffraction(&cps, &window(lo, hi)?, k_max, threshold)
        .map_err(|e| e.to_string())?;
    to_json(
        &spectrum
            .peaks
            .iter()
            .map(|p| PeakView {
                k: p.k[0],
                l: p.l[0],
                intensity: p.intensity,
            })
            .collect::<Vec<_>>(),
    )
}

/// Predicted and empirical Fourier–Bohr coefficients at the `count`
/// strongest peaks with `k ≥ 0`.
pub fn coefficients_json(
    lo: f64,
    hi: f64,
    s: f64,
    t: f64,
    radius: f64,
    count: usize,
) -> Result<String, String> {
    check_radius(radius)?;
    let cps = Cps::fibonacci();
    let w = window(lo, hi)?;
    let p = cut_project(&cps, &w, &[s], &[t], &Aabb::interval(-radius, radius))
        .map_err(|e| e.to_string())?;
    let spectrum = predicted_diffraction(&cps, &w, 5.0, 1e-3).map_err(|e| e.to_string())?;
    let mut rows = Vec::new();
    for peak in spectrum.strongest(count, |pk| pk.k[0] >= 0.0) {
        let a = fourier_bohr_estimate(&p, &peak.k).map_err(|e| e.to_string())?;
        let pred = predicted_fourier_bohr(&cps, &w, &[s], &[t], &peak.k, &DualMatch::default())
            .map_err(|e| e.to_string())?;
        rows.push(CoefficientView {
            k: peak.k[0],
            intensity: peak.intensity,
            empirical_intensity: a.value.norm_sqr(),
            predicted_re: pred.re,
            predicted_im: pred.im,
            empirical_re: a.value.re,
            empirical_im: a.value.im,
        });
    }
    to_json(&rows)
}

#[wasm_bindgen]
pub fn patch(lo: f64, hi: f64, s: f64, t: f64, radius: f64) -> Result<String, JsValue> {
    patch_json(lo, hi, s, t, radius).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn spectrum(lo: f64, hi: f64, k_max: f64, threshold: f64) -> Result<String, JsValue> {
    spectrum_json(lo, hi, k_max, threshold).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn coefficients(
    lo: f64,
    hi: f64,
    s: f64,
    t: f64,
    radius: f64,
    count: usize,
) -> Result<String, JsValue> {
    coefficients_json(lo, hi, s, t, radius, count).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    const TAU: f64 = cutproject::TAU;

    #[test]
    fn patch_matches_density() {
        let v: Value =
            serde_json::from_str(&patch_json(-1.0, TAU - 1.0, 0.1, 0.2, 1000.0).unwrap()).unwrap();
        let d = v["density"].as_f64().unwrap();
        assert!((d - TAU / 5f64.sqrt()).abs() < 1e-2);
        let h = v["h"].as_array().unwrap();
        assert!(h.iter().all(|x| {
            let x = x.as_f64().unwrap();
            (-1.0..TAU - 1.0).contains(&x)
        }));
    }

    #[test]
    fn spectrum_starts_with_trivial_peak() {
        let v: Value =
            serde_json::from_str(&spectrum_json(-1.0, TAU - 1.0, 5.0, 1e-3).unwrap()).unwrap();
        let first = &v[0];
        assert_eq!(first["k"].as_f64(), Some(0.0));
        assert!((first["intensity"].as_f64().unwrap() - TAU * TAU / 5.0).abs() < 1e-12);
    }

    #[test]
    fn coefficients_agree() {
        let v: Value =
            serde_json::from_str(&coefficients_json(-1.0, TAU - 1.0, 0.3, 0.1, 2000.0, 5).unwrap())
                .unwrap();
        let rows = v.as_array().unwrap();
        assert_eq!(rows.len(), 5);
        for r in rows {
            let i = r["intensity"].as_f64().unwrap();
            let e = r["empirical_intensity"].as_f64().unwrap();
            assert!((i - e).abs() < 2e-2);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(patch_json(1.0, 0.0, 0.0, 0.0, 10.0).is_err());
        assert!(patch_json(0.0, 1.0, 0.0, 0.0, 1e9).is_err());
        assert!(spectrum_json(0.0, 1.0, -1.0, 1e-3).is_err());
    }
}
