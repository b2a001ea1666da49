//! Closed-form autocorrelation, Bragg spectrum and Fourier–Bohr
//! coefficients of model sets, and the comparison of intensities against
//! squared amplitudes.
//!
//! Characters are `t ↦ exp(2πi⟨k, t⟩)`, so the Bragg peaks sit at the
//! physical parts `k` of dual lattice points `(k, l)` with intensity
//! `dens(L)² |1̂_W(l)|²`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::averaging::FourierBohrEstimate;
use crate::cps::{dual_cps, lattice_density, Cps, DEFAULT_LINE_BUDGET};
use crate::error::{Error, Result};
use crate::geometry::{cmp_lex, norm, Aabb};
use crate::window::{covariogram, fourier_indicator, measure, Window};

pub const DEFAULT_PEAK_BUDGET: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeCoefficient {
    pub n: Vec<i64>,
    pub z: Vec<f64>,
    pub z_star: Vec<f64>,
    pub value: f64,
}

/// `dens(L) · c_W(z⋆)` for every lattice difference with `‖z‖ ≤ max_range`
/// and nonzero covariogram.
pub fn predicted_autocorrelation(
    cps: &Cps,
    w: &Window,
    max_range: f64,
) -> Result<BTreeMap<Vec<i64>, LatticeCoefficient>> {
    let mut out = BTreeMap::new();
    let Some(hull) = w.l1_hull() else {
        return Ok(out);
    };
    let dens = lattice_density(cps);
    let internal = hull.minkowski_difference(&hull);
    let physical = Aabb::centered(cps.d(), max_range);
    for p in cps
        .lattice()
        .enumerate(&physical, &internal, DEFAULT_LINE_BUDGET)?
    {
        if norm(&p.x) > max_range {
            continue;
        }
        let c = covariogram(w, &p.x_star);
        if c > 0.0 {
            out.insert(
                p.n.clone(),
                LatticeCoefficient {
                    n: p.n,
                    z: p.x,
                    z_star: p.x_star,
                    value: dens * c,
                },
            );
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    /// Integer coordinates in the dual basis.
    pub n: Vec<i64>,
    pub k: Vec<f64>,
    pub l: Vec<f64>,
    pub intensity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffractionSpectrum {
    /// Sorted by intensity (descending), then by frequency.
    pub peaks: Vec<Peak>,
    pub threshold: f64,
    pub k_max: f64,
    /// Internal cutoff: every dual point with some `|l_j| > l_max` has
    /// intensity below `threshold`.
    pub l_max: f64,
}

impl DiffractionSpectrum {
    /// The `count` strongest peaks whose frequency satisfies `keep`.
    pub fn strongest<F>(&self, count: usize, keep: F) -> Vec<&Peak>
    where
        F: Fn(&Peak) -> bool,
    {
        self.peaks.iter().filter(|p| keep(p)).take(count).collect()
    }
}

/// Bragg intensity `dens(L)² |1̂_W(l)|²`.
pub fn intensity(cps: &Cps, w: &Window, l: &[f64]) -> f64 {
    let dens = lattice_density(cps);
    dens * dens * fourier_indicator(w, l).norm_sqr()
}

/// Certified internal cutoff from `|1̂_W(l)| ≤ θ(W) min(1, 1/(π |l_j| w_min))`.
pub fn internal_cutoff(cps: &Cps, w: &Window, threshold: f64) -> f64 {
    let theta = measure(w);
    let Some(w_min) = w.min_width() else {
        return 0.0;
    };
    let amp = lattice_density(cps) * theta;
    amp / (PI * w_min * threshold.sqrt())
}

pub fn predicted_diffraction(
    cps: &Cps,
    w: &Window,
    k_max: f64,
    threshold: f64,
) -> Result<DiffractionSpectrum> {
    predicted_diffraction_with(cps, w, k_max, threshold, DEFAULT_PEAK_BUDGET)
}

/// Peaks with `‖k‖∞ ≤ k_max` and intensity at least `threshold`.
pub fn predicted_diffraction_with(
    cps: &Cps,
    w: &Window,
    k_max: f64,
    threshold: f64,
    peak_budget: usize,
) -> Result<DiffractionSpectrum> {
    if !(threshold > 0.0) {
        return Err(Error::ThresholdTooLow {
            count: usize::MAX,
            budget: peak_budget,
        });
    }
    let dual = dual_cps(cps)?;
    let l_max = internal_cutoff(cps, w, threshold);
    let mut peaks = Vec::new();
    if measure(w) > 0.0 {
        let physical = Aabb::centered(cps.d(), k_max);
        let internal = Aabb::centered(cps.m(), l_max);
        for q in dual
            .lattice()
            .enumerate(&physical, &internal, DEFAULT_LINE_BUDGET)?
        {
            let i = intensity(cps, w, &q.x_star);
            if i >= threshold {
                peaks.push(Peak {
                    n: q.n,
                    k: q.x,
                    l: q.x_star,
                    intensity: i,
                });
                if peaks.len() > peak_budget {
                    return Err(Error::ThresholdTooLow {
                        count: peaks.len(),
                        budget: peak_budget,
                    });
                }
            }
        }
    }
    sort_peaks(&mut peaks);
    Ok(DiffractionSpectrum {
        peaks,
        threshold,
        k_max,
        l_max,
    })
}

pub fn sort_peaks(peaks: &mut [Peak]) {
    peaks.sort_by(|a, b| {
        b.intensity
            .total_cmp(&a.intensity)
            .then_with(|| cmp_lex(&a.k, &b.k))
    });
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DualMatch {
    /// Sup-norm tolerance between `k` and a dual physical part.
    pub tol: f64,
    /// Internal search bound `‖l‖∞ ≤ l_max` for the match.
    pub l_max: f64,
}

impl Default for DualMatch {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            l_max: 100.0,
        }
    }
}

/// The dual lattice point `(k', l)` with `k' ≈ k`, if any.
pub fn match_dual(
    cps: &Cps,
    k: &[f64],
    opts: &DualMatch,
) -> Result<Option<crate::cps::LatticePoint>> {
    let dual = dual_cps(cps)?;
    let internal = Aabb::centered(cps.m(), opts.l_max);
    let mut hits = dual
        .lattice()
        .near_physical(k, opts.tol, &internal, DEFAULT_LINE_BUDGET)?;
    match hits.len() {
        0 => Ok(None),
        1 => Ok(hits.pop()),
        _ => Err(Error::AmbiguousDualMatch { k: k.to_vec() }),
    }
}

/// `dens(L) e^{2πi k·s} e^{2πi l·t} ∫_W e^{2πi l·r} dr` when `k` is the
/// physical part of a dual point `(k, l)`, else 0.
///
/// This is the limit of [`crate::averaging::fourier_bohr_estimate`] on
/// `-s + Λ(t + W)`: for `x = y - s` with `(k, l)·(y, y⋆) ∈ Z` one has
/// `e^{-2πi k·x} = e^{2πi k·s} e^{2πi l·y⋆}`, and `y⋆` equidistributes
/// in `t + W`.
pub fn predicted_fourier_bohr(
    cps: &Cps,
    w: &Window,
    s: &[f64],
    t: &[f64],
    k: &[f64],
    opts: &DualMatch,
) -> Result<Complex64> {
    let Some(q) = match_dual(cps, k, opts)? else {
        return Ok(Complex64::new(0.0, 0.0));
    };
    Ok(fourier_bohr_at(cps, w, s, t, &q.x, &q.x_star))
}

/// Closed form at a known dual point `(k, l)`.
pub fn fourier_bohr_at(
    cps: &Cps,
    w: &Window,
    s: &[f64],
    t: &[f64],
    k: &[f64],
    l: &[f64],
) -> Complex64 {
    let ks: f64 = k.iter().zip(s).map(|(a, b)| a * b).sum();
    let lt: f64 = l.iter().zip(t).map(|(a, b)| a * b).sum();
    let neg_l: Vec<f64> = l.iter().map(|v| -v).collect();
    let phase = Complex64::from_polar(1.0, 2.0 * PI * (ks + lt));
    lattice_density(cps) * phase * fourier_indicator(w, &neg_l)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub label: String,
    pub predicted: Complex64,
    pub empirical: Complex64,
    pub abs_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl ComparisonRow {
    pub fn new(
        label: impl Into<String>,
        predicted: Complex64,
        empirical: Complex64,
        tolerance: f64,
    ) -> Self {
        let abs_error = (predicted - empirical).norm();
        Self {
            label: label.into(),
            predicted,
            empirical,
            abs_error,
            tolerance,
            pass: abs_error <= tolerance,
        }
    }

    pub fn real(label: impl Into<String>, predicted: f64, empirical: f64, tolerance: f64) -> Self {
        Self::new(
            label,
            Complex64::new(predicted, 0.0),
            Complex64::new(empirical, 0.0),
            tolerance,
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub predicted_source: String,
    pub empirical_source: String,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ComparisonRow> {
        self.rows.iter().filter(|r| !r.pass)
    }

    pub fn max_error(&self) -> f64 {
        self.rows.iter().map(|r| r.abs_error).fold(0.0, f64::max)
    }
}

/// Consistent Phase Property: `γ̂({k}) = |a_k|²` at every peak.
pub fn cpp_check(
    spectrum: &DiffractionSpectrum,
    fb_values: &[FourierBohrEstimate],
    tol: f64,
) -> Result<ComparisonReport> {
    let mut rows = Vec::with_capacity(spectrum.peaks.len());
    for peak in &spectrum.peaks {
        let fb = fb_values
            .iter()
            .find(|f| {
                f.k.len() == peak.k.len()
                    && f.k.iter().zip(&peak.k).all(|(a, b)| (a - b).abs() <= 1e-9)
            })
            .ok_or_else(|| Error::FrequencyMismatch(peak.k.clone()))?;
        rows.push(ComparisonRow::real(
            format!("k={:?}", peak.k),
            peak.intensity,
            fb.value.norm_sqr(),
            tol,
        ));
    }
    Ok(ComparisonReport {
        predicted_source: "bragg intensity".into(),
        empirical_source: "squared fourier-bohr amplitude".into(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::TAU;

    #[test]
    fn autocorrelation_examples() {
        let cps = Cps::fibonacci();
        let w = Window::fibonacci();
        let eta = predicted_autocorrelation(&cps, &w, 10.0).unwrap();
        let dens = 1.0 / 5f64.sqrt();
        assert!((eta[&vec![0, 0]].value - dens * TAU).abs() < 1e-12);
        assert!((eta[&vec![1, 0]].value - dens * (TAU - 1.0)).abs() < 1e-12);
        // z = τ has z⋆ = 1 - τ; z = 2 has z⋆ = 2 > τ and no overlap
        assert!(eta.contains_key(&vec![0, 1]));
        assert!(!eta.contains_key(&vec![2, 0]));
    }

    #[test]
    fn trivial_peak_and_threshold_edges() {
        let cps = Cps::fibonacci();
        let w = Window::fibonacci();
        let spec = predicted_diffraction(&cps, &w, 5.0, 1e-3).unwrap();
        let top = &spec.peaks[0];
        assert_eq!(top.n, vec![0, 0]);
        assert!((top.intensity - TAU * TAU / 5.0).abs() < 1e-12);
        let i0 = top.intensity;
        let only = predicted_diffraction(&cps, &w, 5.0, i0).unwrap();
        assert_eq!(only.peaks.len(), 1);
        let none = predicted_diffraction(&cps, &w, 5.0, i0 * 1.0001).unwrap();
        assert!(none.peaks.is_empty());
        assert!(matches!(
            predicted_diffraction(&cps, &w, 5.0, 0.0),
            Err(Error::ThresholdTooLow { .. })
        ));
        assert!(matches!(
            predicted_diffraction_with(&cps, &w, 50.0, 1e-8, 10),
            Err(Error::ThresholdTooLow { .. })
        ));
    }

    #[test]
    fn fourier_bohr_at_origin() {
        let cps = Cps::fibonacci();
        let w = Window::fibonacci();
        let v = predicted_fourier_bohr(&cps, &w, &[0.0], &[0.0], &[0.0], &DualMatch::default())
            .unwrap();
        assert!((v - Complex64::new(TAU / 5f64.sqrt(), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn fourier_bohr_phase_covariance() {
        let cps = Cps::fibonacci();
        let w = Window::fibonacci();
        let spec = predicted_diffraction(&cps, &w, 3.0, 1e-3).unwrap();
        let opts = DualMatch::default();
        for p in spec.peaks.iter().take(6) {
            let base = predicted_fourier_bohr(&cps, &w, &[0.2], &[0.1], &p.k, &opts).unwrap();
            let shifted =
                predicted_fourier_bohr(&cps, &w, &[0.2 + 1.7], &[0.1], &p.k, &opts).unwrap();
            let factor = Complex64::from_polar(1.0, 2.0 * PI * p.k[0] * 1.7);
            assert!((shifted - base * factor).norm() < 1e-12);
        }
    }

    #[test]
    fn non_dual_frequency_gives_zero() {
        let cps = Cps::fibonacci();
        let v = predicted_fourier_bohr(
            &cps,
            &Window::fibonacci(),
            &[0.0],
            &[0.0],
            &[0.123_456_7],
            &DualMatch::default(),
        )
        .unwrap();
        assert_eq!(v, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn cpp_predicted_against_predicted_is_exact_enough() {
        let cps = Cps::fibonacci();
        let w = Window::fibonacci();
        let spec = predicted_diffraction(&cps, &w, 5.0, 1e-3).unwrap();
        let fb: Vec<FourierBohrEstimate> = spec
            .peaks
            .iter()
            .map(|p| FourierBohrEstimate {
                k: p.k.clone(),
                value: fourier_bohr_at(&cps, &w, &[0.0], &[0.0], &p.k, &p.l),
                radius: f64::INFINITY,
            })
            .collect();
        let report = cpp_check(&spec, &fb, 0.0).unwrap();
        assert!(report.max_error() < 1e-15);
        assert!(matches!(
            cpp_check(&spec, &fb[1..], 1.0),
            Err(Error::FrequencyMismatch(_))
        ));
    }
}
