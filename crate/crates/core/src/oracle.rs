//! Brute-force reference scans over integer cubes.
//!
//! These share nothing with the line-solving enumerator beyond the basis
//! itself; they exist to cross-check it and the peak search.

use crate::cps::{Cps, LatticePoint, SplitLattice};
use crate::diffraction::{intensity, sort_peaks, Peak};
use crate::geometry::Aabb;
use crate::window::Window;

/// Every integer vector with `‖n‖∞ ≤ radius`, in lexicographic order.
pub fn integer_cube(dim: usize, radius: i64) -> impl Iterator<Item = Vec<i64>> {
    let side = (2 * radius + 1) as u64;
    let total = side.pow(dim as u32);
    (0..total).map(move |mut idx| {
        let mut n = vec![0i64; dim];
        for slot in n.iter_mut().rev() {
            *slot = (idx % side) as i64 - radius;
            idx /= side;
        }
        n
    })
}

/// Lattice points in `physical × internal` found by testing every `n` in
/// the cube.
pub fn scan_lattice(
    lattice: &SplitLattice,
    physical: &Aabb,
    internal: &Aabb,
    radius: i64,
) -> Vec<LatticePoint> {
    integer_cube(lattice.dim(), radius)
        .map(|n| lattice.point(&n))
        .filter(|p| physical.contains_closed(&p.x) && internal.contains_closed(&p.x_star))
        .collect()
}

/// Peaks with `‖k‖∞ ≤ k_max` and intensity at least `threshold` among dual
/// points with `‖n‖∞ ≤ radius`.
pub fn scan_peaks(cps: &Cps, w: &Window, k_max: f64, threshold: f64, radius: i64) -> Vec<Peak> {
    let dual = crate::cps::dual_cps(cps).expect("valid scheme has a dual");
    let mut peaks: Vec<Peak> = integer_cube(dual.lattice().dim(), radius)
        .map(|n| dual.lattice().point(&n))
        .filter(|q| q.x.iter().all(|k| k.abs() <= k_max))
        .filter_map(|q| {
            let i = intensity(cps, w, &q.x_star);
            (i >= threshold).then_some(Peak {
                n: q.n,
                k: q.x,
                l: q.x_star,
                intensity: i,
            })
        })
        .collect();
    sort_peaks(&mut peaks);
    peaks
}
