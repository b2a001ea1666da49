//! Averages over centered boxes `A_k = [-R_k, R_k]^d`: density, pair
//! autocorrelation coefficients, Fourier–Bohr coefficients, and Birkhoff
//! averages of products of smoothed point sets.

use std::collections::{BTreeMap, HashSet};
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cps::Cps;
use crate::error::{Error, Result};
use crate::geometry::{norm, Aabb};
use crate::modelset::Patch;

/// Nested centered boxes with increasing radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VanHoveSequence {
    pub d: usize,
    pub radii: Vec<f64>,
}

impl VanHoveSequence {
    pub fn new(d: usize, radii: Vec<f64>) -> Result<Self> {
        if radii.is_empty() || radii[0] <= 0.0 || radii.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(
                "radii must be positive and strictly increasing".into(),
            ));
        }
        Ok(Self { d, radii })
    }

    pub fn regions(&self) -> impl Iterator<Item = Aabb> + '_ {
        self.radii.iter().map(|&r| Aabb::centered(self.d, r))
    }

    /// `C` with `|∪_j (A_n - A_j)| ≤ C |A_n|`; for centered boxes the union
    /// is `2 A_n`.
    pub fn temperedness_constant(&self) -> f64 {
        2f64.powi(self.d as i32)
    }

    /// `|∂A| / |A|` proxy: surface-to-volume ratio `d / R` of each box.
    pub fn boundary_ratios(&self) -> Vec<f64> {
        self.radii.iter().map(|r| self.d as f64 / r).collect()
    }
}

pub fn density_estimate(patch: &Patch) -> Result<f64> {
    let vol = patch.volume();
    if vol <= 0.0 {
        return Err(Error::EmptyRegion);
    }
    Ok(patch.len() as f64 / vol)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutocorrelationCoefficient {
    /// Integer coordinates of the lattice difference.
    pub n: Vec<i64>,
    pub z: Vec<f64>,
    pub z_star: Vec<f64>,
    pub pairs: u64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutocorrelationEstimate {
    pub coefficients: BTreeMap<Vec<i64>, AutocorrelationCoefficient>,
    pub volume: f64,
    pub count: usize,
    pub max_range: f64,
}

impl AutocorrelationEstimate {
    /// `η(z)` for the lattice difference with integer coordinates `n`; zero
    /// when no pair realizes it.
    pub fn value(&self, n: &[i64]) -> f64 {
        self.coefficients.get(n).map_or(0.0, |c| c.value)
    }
}

/// `η(z) = #{(x, y) : x - y = z} / |A|` for all `‖z‖ ≤ max_range`.
///
/// Differences are keyed by the integer difference of the lattice
/// preimages, so the support is exactly a subset of `L`.
pub fn autocorrelation_estimate(
    patch: &Patch,
    cps: &Cps,
    max_range: f64,
) -> Result<AutocorrelationEstimate> {
    let half = patch.half_width();
    if max_range > half {
        return Err(Error::RangeTooLarge {
            range: max_range,
            half_width: half,
        });
    }
    let vol = patch.volume();
    if vol <= 0.0 {
        return Err(Error::EmptyRegion);
    }
    let mut counts: BTreeMap<Vec<i64>, u64> = BTreeMap::new();
    let pts = &patch.points;
    // points are sorted by x[0]; scan forward pairs and record both orders
    for i in 0..pts.len() {
        *counts.entry(vec![0; pts[i].n.len()]).or_default() += 1;
        for j in i + 1..pts.len() {
            if pts[j].x[0] - pts[i].x[0] > max_range {
                break;
            }
            let z: Vec<f64> = pts[j].x.iter().zip(&pts[i].x).map(|(a, b)| a - b).collect();
            if norm(&z) > max_range {
                continue;
            }
            let fwd: Vec<i64> = pts[j].n.iter().zip(&pts[i].n).map(|(a, b)| a - b).collect();
            let bwd: Vec<i64> = fwd.iter().map(|v| -v).collect();
            *counts.entry(fwd).or_default() += 1;
            *counts.entry(bwd).or_default() += 1;
        }
    }
    let coefficients = counts
        .into_iter()
        .map(|(n, pairs)| {
            let p = cps.point(&n);
            let c = AutocorrelationCoefficient {
                n: n.clone(),
                z: p.x,
                z_star: p.x_star,
                pairs,
                value: pairs as f64 / vol,
            };
            (n, c)
        })
        .collect();
    Ok(AutocorrelationEstimate {
        coefficients,
        volume: vol,
        count: pts.len(),
        max_range,
    })
}

/// Pair count for a single lattice difference, by set lookup.
pub fn autocorrelation_at(patch: &Patch, n: &[i64]) -> Result<f64> {
    let vol = patch.volume();
    if vol <= 0.0 {
        return Err(Error::EmptyRegion);
    }
    let set: HashSet<&[i64]> = patch.points.iter().map(|p| p.n.as_slice()).collect();
    let hits = patch
        .points
        .iter()
        .filter(|p| {
            let shifted: Vec<i64> = p.n.iter().zip(n).map(|(a, b)| a - b).collect();
            set.contains(shifted.as_slice())
        })
        .count();
    Ok(hits as f64 / vol)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierBohrEstimate {
    pub k: Vec<f64>,
    pub value: Complex64,
    pub radius: f64,
}

/// `(1/|A|) Σ_{x ∈ patch} exp(-2πi k·x)`.
pub fn fourier_bohr_estimate(patch: &Patch, k: &[f64]) -> Result<FourierBohrEstimate> {
    let vol = patch.volume();
    if vol <= 0.0 {
        return Err(Error::EmptyRegion);
    }
    let mut sum = Complex64::new(0.0, 0.0);
    for x in patch.physical_points() {
        let phase: f64 = x.iter().zip(k).map(|(a, b)| a * b).sum();
        sum += Complex64::from_polar(1.0, -2.0 * PI * phase);
    }
    Ok(FourierBohrEstimate {
        k: k.to_vec(),
        value: sum / vol,
        radius: patch.half_width(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum ScanOp {
    Density,
    /// `η` at the lattice difference with integer coordinates `n`.
    Autocorrelation {
        n: Vec<i64>,
    },
    FourierBohr {
        k: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub radius: f64,
    pub value: Complex64,
    pub prediction: Complex64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub op: ScanOp,
    pub rows: Vec<ScanRow>,
    /// Errors never increase with the radius.
    pub error_tail_non_increasing: bool,
}

impl ConvergenceTable {
    pub fn final_error(&self) -> Option<f64> {
        self.rows.last().map(|r| r.abs_error)
    }
}

/// Evaluate `op` on patches of increasing radius against `prediction`.
pub fn convergence_scan(
    op: &ScanOp,
    patches: &[Patch],
    prediction: Complex64,
) -> Result<ConvergenceTable> {
    if let Some(first) = patches.first() {
        if let Some(bad) = patches.iter().find(|p| !p.same_source(first)) {
            return Err(Error::InconsistentProvenance(format!(
                "window {} / scheme {} differs from {} / {}",
                bad.window_id, bad.cps_id, first.window_id, first.cps_id
            )));
        }
    }
    let mut ordered: Vec<&Patch> = patches.iter().collect();
    ordered.sort_by(|a, b| a.half_width().total_cmp(&b.half_width()));
    let mut rows = Vec::with_capacity(ordered.len());
    for p in ordered {
        let value = match op {
            ScanOp::Density => Complex64::new(density_estimate(p)?, 0.0),
            ScanOp::Autocorrelation { n } => Complex64::new(autocorrelation_at(p, n)?, 0.0),
            ScanOp::FourierBohr { k } => fourier_bohr_estimate(p, k)?.value,
        };
        rows.push(ScanRow {
            radius: p.half_width(),
            value,
            prediction,
            abs_error: (value - prediction).norm(),
        });
    }
    let error_tail_non_increasing = rows.windows(2).all(|w| w[1].abs_error <= w[0].abs_error);
    Ok(ConvergenceTable {
        op: op.clone(),
        rows,
        error_tail_non_increasing,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelShape {
    Box,
    Triangle,
}

/// A bump of unit integral supported on `center + [-halfwidth, halfwidth]^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub center: Vec<f64>,
    pub halfwidth: f64,
    pub shape: KernelShape,
}

impl Kernel {
    pub fn eval(&self, u: &[f64]) -> f64 {
        let h = self.halfwidth;
        let mut v = 1.0;
        for (x, c) in u.iter().zip(&self.center) {
            let r = (x - c).abs();
            if r >= h {
                return 0.0;
            }
            v *= match self.shape {
                KernelShape::Box => 0.5 / h,
                KernelShape::Triangle => (h - r) / (h * h),
            };
        }
        v
    }
}

/// `(1/|A|) ∫_A Π_j (δ_patch * φ_j)(u) du` by a midpoint rule with step at
/// most `sample_step`.
pub fn birkhoff_product_average(
    patch: &Patch,
    kernels: &[Kernel],
    sample_step: f64,
) -> Result<f64> {
    if patch.volume() <= 0.0 {
        return Err(Error::EmptyRegion);
    }
    if let Some(k) = kernels
        .iter()
        .find(|k| !(sample_step > 0.0 && sample_step <= k.halfwidth / 4.0))
    {
        return Err(Error::StepTooCoarse {
            step: sample_step,
            halfwidth: k.halfwidth,
        });
    }
    if kernels.is_empty() {
        return Ok(1.0);
    }
    let d = patch.d();
    let region = &patch.region;
    let cells: Vec<usize> = region
        .widths()
        .iter()
        .map(|w| (w / sample_step).ceil().max(1.0) as usize)
        .collect();
    let steps: Vec<f64> = region
        .widths()
        .iter()
        .zip(&cells)
        .map(|(w, c)| w / *c as f64)
        .collect();
    let xs: Vec<&[f64]> = patch.physical_points().collect();
    let reach: Vec<(f64, f64)> = kernels
        .iter()
        .map(|k| (k.center[0] - k.halfwidth, k.center[0] + k.halfwidth))
        .collect();

    let total_cells: usize = cells.iter().product();
    let mut sum = 0.0;
    let mut idx = vec![0usize; d];
    let mut u = vec![0.0; d];
    for _ in 0..total_cells {
        for a in 0..d {
            u[a] = region.lo[a] + (idx[a] as f64 + 0.5) * steps[a];
        }
        let mut prod = 1.0;
        for (k, &(lo, hi)) in kernels.iter().zip(&reach) {
            // φ(u - x) ≠ 0 needs x[0] ∈ (u[0] - hi, u[0] - lo)
            let start = xs.partition_point(|x| x[0] <= u[0] - hi);
            let mut conv = 0.0;
            for x in &xs[start..] {
                if x[0] >= u[0] - lo {
                    break;
                }
                let diff: Vec<f64> = u.iter().zip(x.iter()).map(|(a, b)| a - b).collect();
                conv += k.eval(&diff);
            }
            prod *= conv;
            if prod == 0.0 {
                break;
            }
        }
        sum += prod;
        for a in 0..d {
            idx[a] += 1;
            if idx[a] < cells[a] {
                break;
            }
            idx[a] = 0;
        }
    }
    Ok(sum / total_cells as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modelset::cut_project;
    use crate::window::Window;

    fn fib(r: f64) -> Patch {
        cut_project(
            &Cps::fibonacci(),
            &Window::fibonacci(),
            &[0.0],
            &[0.0],
            &Aabb::interval(-r, r),
        )
        .unwrap()
    }

    #[test]
    fn density_equals_eta_zero_and_fb_at_zero() {
        let p = fib(500.0);
        let cps = Cps::fibonacci();
        let dens = density_estimate(&p).unwrap();
        let eta = autocorrelation_estimate(&p, &cps, 10.0).unwrap();
        assert_eq!(eta.value(&[0, 0]), dens);
        let fb = fourier_bohr_estimate(&p, &[0.0]).unwrap();
        assert!((fb.value.re - dens).abs() < 1e-12 && fb.value.im == 0.0);
    }

    #[test]
    fn eta_is_symmetric_and_lattice_supported() {
        let p = fib(300.0);
        let eta = autocorrelation_estimate(&p, &Cps::fibonacci(), 12.0).unwrap();
        for (n, c) in &eta.coefficients {
            let neg: Vec<i64> = n.iter().map(|v| -v).collect();
            assert_eq!(eta.value(&neg), c.value);
            assert!(c.value >= 0.0);
        }
        // 0.5 is not a difference of lattice points: no key has z = 0.5
        assert!(eta
            .coefficients
            .values()
            .all(|c| (c.z[0] - 0.5).abs() > 1e-9));
    }

    #[test]
    fn eta_single_lookup_agrees() {
        let p = fib(300.0);
        let eta = autocorrelation_estimate(&p, &Cps::fibonacci(), 5.0).unwrap();
        for (n, c) in &eta.coefficients {
            assert_eq!(autocorrelation_at(&p, n).unwrap(), c.value);
        }
    }

    #[test]
    fn range_too_large_rejected() {
        let p = fib(5.0);
        assert!(matches!(
            autocorrelation_estimate(&p, &Cps::fibonacci(), 6.0),
            Err(Error::RangeTooLarge { .. })
        ));
    }

    #[test]
    fn empty_patch_density_zero() {
        let p = cut_project(
            &Cps::fibonacci(),
            &Window::empty(1),
            &[0.0],
            &[0.0],
            &Aabb::interval(-5.0, 5.0),
        )
        .unwrap();
        assert_eq!(density_estimate(&p).unwrap(), 0.0);
        let degenerate = Patch {
            region: Aabb::interval(1.0, 1.0),
            ..p
        };
        assert_eq!(density_estimate(&degenerate), Err(Error::EmptyRegion));
    }

    #[test]
    fn empty_kernel_product_is_one() {
        assert_eq!(birkhoff_product_average(&fib(50.0), &[], 0.1).unwrap(), 1.0);
    }

    #[test]
    fn coarse_step_rejected() {
        let k = Kernel {
            center: vec![0.0],
            halfwidth: 0.4,
            shape: KernelShape::Box,
        };
        assert!(matches!(
            birkhoff_product_average(&fib(50.0), &[k], 0.2),
            Err(Error::StepTooCoarse { .. })
        ));
    }

    #[test]
    fn self_prediction_has_zero_final_error() {
        let patches: Vec<Patch> = [50.0, 100.0, 200.0].iter().map(|&r| fib(r)).collect();
        let last = density_estimate(&patches[2]).unwrap();
        let table =
            convergence_scan(&ScanOp::Density, &patches, Complex64::new(last, 0.0)).unwrap();
        assert_eq!(table.final_error(), Some(0.0));
    }

    #[test]
    fn scan_rejects_mixed_sources() {
        let a = fib(50.0);
        let mut b = fib(100.0);
        b.t = vec![0.1];
        assert!(matches!(
            convergence_scan(&ScanOp::Density, &[a, b], Complex64::new(0.0, 0.0)),
            Err(Error::InconsistentProvenance(_))
        ));
    }

    #[test]
    fn kernels_have_unit_integral() {
        for shape in [KernelShape::Box, KernelShape::Triangle] {
            let k = Kernel {
                center: vec![0.3],
                halfwidth: 0.5,
                shape,
            };
            let n = 100_000;
            let h = 2.0 / n as f64;
            let s: f64 = (0..n)
                .map(|i| k.eval(&[-0.7 + (i as f64 + 0.5) * h]) * h)
                .sum();
            assert!((s - 1.0).abs() < 1e-6, "{shape:?}: {s}");
        }
    }
}
