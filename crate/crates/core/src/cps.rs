//! Euclidean cut-and-project schemes `(R^d, R^m, L)`.
//!
//! A lattice `L ⊂ R^d × R^m` is given by a square basis whose columns are
//! the generators; the first `d` rows are the physical coordinates and the
//! remaining `m` rows the internal ones. The star map sends the physical
//! part of a lattice point to its internal part.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Aabb;

pub const DET_EPS: f64 = 1e-12;
/// Slack on the integer bounding box and on the per-line solve.
const ENUM_SLACK: f64 = 1e-9;
pub const DEFAULT_LINE_BUDGET: u64 = 50_000_000;

/// A lattice point with its integer coordinates, physical part `x` and
/// internal part `x_star`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticePoint {
    pub n: Vec<i64>,
    pub x: Vec<f64>,
    pub x_star: Vec<f64>,
}

/// A full-rank lattice in `R^d × R^m` with its cached inverse basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitLattice {
    d: usize,
    m: usize,
    basis: DMatrix<f64>,
    inv: DMatrix<f64>,
    det: f64,
}

impl SplitLattice {
    pub fn new(d: usize, m: usize, basis: DMatrix<f64>) -> Result<Self> {
        let dim = d + m;
        if basis.nrows() != dim || basis.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: basis.nrows().max(basis.ncols()),
            });
        }
        let det = basis.determinant();
        if !det.is_finite() || det.abs() < DET_EPS {
            return Err(Error::SingularBasis { det });
        }
        let inv = basis
            .clone()
            .try_inverse()
            .ok_or(Error::SingularBasis { det })?;
        Ok(Self {
            d,
            m,
            basis,
            inv,
            det,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.d + self.m
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn inv_basis(&self) -> &DMatrix<f64> {
        &self.inv
    }

    pub fn det(&self) -> f64 {
        self.det
    }

    /// Points per unit volume of `R^(d+m)`.
    pub fn density(&self) -> f64 {
        1.0 / self.det.abs()
    }

    /// Rows of the basis, as written in config files.
    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|r| (0..self.dim()).map(|c| self.basis[(r, c)]).collect())
            .collect()
    }

    pub fn embed(&self, n: &[i64]) -> Vec<f64> {
        let dim = self.dim();
        let mut y = vec![0.0; dim];
        for (c, &k) in n.iter().enumerate() {
            if k == 0 {
                continue;
            }
            let k = k as f64;
            for (r, yr) in y.iter_mut().enumerate() {
                *yr += self.basis[(r, c)] * k;
            }
        }
        debug_assert_eq!(n.len(), dim);
        y
    }

    pub fn point(&self, n: &[i64]) -> LatticePoint {
        let y = self.embed(n);
        LatticePoint {
            n: n.to_vec(),
            x: y[..self.d].to_vec(),
            x_star: y[self.d..].to_vec(),
        }
    }

    pub fn physical(&self, n: &[i64]) -> Vec<f64> {
        self.embed(n)[..self.d].to_vec()
    }

    pub fn star(&self, n: &[i64]) -> Vec<f64> {
        self.embed(n)[self.d..].to_vec()
    }

    /// Real coordinates `inv · y` of a point of `R^(d+m)`.
    pub fn coordinates(&self, y: &[f64]) -> Vec<f64> {
        let dim = self.dim();
        (0..dim)
            .map(|r| (0..dim).map(|c| self.inv[(r, c)] * y[c]).sum())
            .collect()
    }

    /// Lattice points with physical part in `physical` and internal part in
    /// `internal` (both closed), sorted lexicographically by integer
    /// coordinates.
    pub fn enumerate(
        &self,
        physical: &Aabb,
        internal: &Aabb,
        budget: u64,
    ) -> Result<Vec<LatticePoint>> {
        self.enumerate_clipped(physical, internal, None, budget)
    }

    /// As [`Self::enumerate`], additionally restricted to `‖n‖∞ ≤ clip`.
    pub fn enumerate_clipped(
        &self,
        physical: &Aabb,
        internal: &Aabb,
        clip: Option<i64>,
        budget: u64,
    ) -> Result<Vec<LatticePoint>> {
        self.check_dims(physical, internal)?;
        let lo: Vec<f64> = physical.lo.iter().chain(&internal.lo).copied().collect();
        let hi: Vec<f64> = physical.hi.iter().chain(&internal.hi).copied().collect();
        if lo.iter().zip(&hi).any(|(a, b)| a > b) {
            return Ok(vec![]);
        }
        let dim = self.dim();

        // Integer bounding box of inv · region.
        let mut ranges = Vec::with_capacity(dim);
        for r in 0..dim {
            let (mut mn, mut mx) = (0.0, 0.0);
            for c in 0..dim {
                let a = self.inv[(r, c)] * lo[c];
                let b = self.inv[(r, c)] * hi[c];
                mn += a.min(b);
                mx += a.max(b);
            }
            let scale = 1.0 + mn.abs().max(mx.abs());
            let mut a = (mn - ENUM_SLACK * scale).ceil();
            let mut b = (mx + ENUM_SLACK * scale).floor();
            if let Some(n) = clip {
                a = a.max(-n as f64);
                b = b.min(n as f64);
            }
            if a > b {
                return Ok(vec![]);
            }
            if a.abs() > 1e15 || b.abs() > 1e15 {
                return Err(Error::RegionTooLarge {
                    lines: u128::MAX,
                    budget,
                });
            }
            ranges.push((a as i64, b as i64));
        }

        // Solve the widest axis exactly per line; iterate the others.
        let inner = (0..dim)
            .max_by_key(|&i| ranges[i].1 - ranges[i].0)
            .unwrap_or(0);
        let lines: u128 = (0..dim)
            .filter(|&i| i != inner)
            .map(|i| (ranges[i].1 - ranges[i].0 + 1) as u128)
            .product();
        if lines > budget as u128 {
            return Err(Error::RegionTooLarge { lines, budget });
        }

        let outer: Vec<usize> = (0..dim).filter(|&i| i != inner).collect();
        let mut n: Vec<i64> = ranges.iter().map(|r| r.0).collect();
        let mut out = Vec::new();
        loop {
            n[inner] = 0;
            let base = self.embed(&n);
            let (mut a, mut b) = (ranges[inner].0 as f64, ranges[inner].1 as f64);
            let mut feasible = true;
            for r in 0..dim {
                let g = self.basis[(r, inner)];
                let scale = 1.0 + lo[r].abs().max(hi[r].abs());
                let (l, h) = (
                    lo[r] - base[r] - ENUM_SLACK * scale,
                    hi[r] - base[r] + ENUM_SLACK * scale,
                );
                if g == 0.0 {
                    if l > 0.0 || h < 0.0 {
                        feasible = false;
                        break;
                    }
                    continue;
                }
                let (p, q) = if g > 0.0 {
                    (l / g, h / g)
                } else {
                    (h / g, l / g)
                };
                a = a.max(p.ceil());
                b = b.min(q.floor());
            }
            if feasible && a <= b {
                for k in a as i64..=b as i64 {
                    n[inner] = k;
                    let y = self.embed(&n);
                    if y.iter()
                        .zip(lo.iter().zip(&hi))
                        .all(|(v, (l, h))| l <= v && v <= h)
                    {
                        out.push(LatticePoint {
                            n: n.clone(),
                            x: y[..self.d].to_vec(),
                            x_star: y[self.d..].to_vec(),
                        });
                    }
                }
            }
            // odometer over the outer axes
            let mut advanced = false;
            for &ax in &outer {
                if n[ax] < ranges[ax].1 {
                    n[ax] += 1;
                    advanced = true;
                    break;
                }
                n[ax] = ranges[ax].0;
            }
            if !advanced {
                break;
            }
        }
        out.sort_by(|p, q| p.n.cmp(&q.n));
        Ok(out)
    }

    /// Lattice points whose physical part is within `eps` (sup norm) of `x`
    /// and whose internal part lies in `internal`.
    pub fn near_physical(
        &self,
        x: &[f64],
        eps: f64,
        internal: &Aabb,
        budget: u64,
    ) -> Result<Vec<LatticePoint>> {
        let phys = Aabb {
            lo: x.iter().map(|v| v - eps).collect(),
            hi: x.iter().map(|v| v + eps).collect(),
        };
        self.enumerate(&phys, internal, budget)
    }

    /// Lattice points with internal part within `eps` of `h` and `‖n‖∞ ≤ radius`.
    pub fn near_internal(
        &self,
        h: &[f64],
        eps: f64,
        radius: i64,
        budget: u64,
    ) -> Result<Vec<LatticePoint>> {
        let internal = Aabb {
            lo: h.iter().map(|v| v - eps).collect(),
            hi: h.iter().map(|v| v + eps).collect(),
        };
        let physical = Aabb::centered(self.d, self.row_bound(0..self.d) * radius as f64);
        self.enumerate_clipped(&physical, &internal, Some(radius), budget)
    }

    /// Bound on `|x⋆_r|` per unit of `‖n‖∞`.
    pub(crate) fn row_bound_internal(&self) -> f64 {
        self.row_bound(self.d..self.dim())
    }

    /// Largest row-wise absolute sum over `rows`: bounds `|y_r|` for `‖n‖∞ ≤ 1`.
    fn row_bound(&self, rows: std::ops::Range<usize>) -> f64 {
        rows.map(|r| {
            (0..self.dim())
                .map(|c| self.basis[(r, c)].abs())
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
    }

    fn check_dims(&self, physical: &Aabb, internal: &Aabb) -> Result<()> {
        if physical.dim() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: physical.dim(),
            });
        }
        if internal.dim() != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                got: internal.dim(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WitnessConfig {
    pub injectivity_radius: i64,
    pub injectivity_eps: f64,
    pub density_radius: i64,
    /// Grid cells per axis on the reference box `[0, 1)^m`.
    pub density_cells: usize,
    pub budget: u64,
}

impl Default for WitnessConfig {
    fn default() -> Self {
        Self {
            injectivity_radius: 1000,
            injectivity_eps: 1e-9,
            density_radius: 1000,
            density_cells: 8,
            budget: DEFAULT_LINE_BUDGET,
        }
    }
}

/// Outcome of the finite witnesses run by [`make_cps`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub injectivity_radius: i64,
    pub density_radius: i64,
    pub density_cells: usize,
    /// Number of reference-grid cells hit by internal parts.
    pub density_cells_hit: usize,
    /// `false` records the non-fatal density warning.
    pub density_ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cps {
    lattice: SplitLattice,
    witness: WitnessReport,
    id: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualCps {
    lattice: SplitLattice,
}

/// Build a scheme from basis columns and run both witnesses.
pub fn make_cps(d: usize, m: usize, basis: DMatrix<f64>, cfg: &WitnessConfig) -> Result<Cps> {
    if d == 0 || m == 0 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: 0,
        });
    }
    let lattice = SplitLattice::new(d, m, basis)?;
    injectivity_witness(&lattice, cfg)?;
    let (hit, total) = density_witness(&lattice, cfg)?;
    let witness = WitnessReport {
        injectivity_radius: cfg.injectivity_radius,
        density_radius: cfg.density_radius,
        density_cells: cfg.density_cells,
        density_cells_hit: hit,
        density_ok: hit == total,
    };
    let id = crate::provenance::digest_f64s(lattice.basis.as_slice());
    Ok(Cps {
        lattice,
        witness,
        id,
    })
}

/// Build from basis rows (physical rows first).
pub fn make_cps_from_rows(
    d: usize,
    m: usize,
    rows: &[Vec<f64>],
    cfg: &WitnessConfig,
) -> Result<Cps> {
    let dim = d + m;
    if rows.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: rows.len(),
        });
    }
    if let Some(r) = rows.iter().find(|r| r.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: r.len(),
        });
    }
    let basis = DMatrix::from_fn(dim, dim, |r, c| rows[r][c]);
    make_cps(d, m, basis, cfg)
}

fn injectivity_witness(lattice: &SplitLattice, cfg: &WitnessConfig) -> Result<()> {
    let radius = cfg.injectivity_radius;
    let bound = lattice.row_bound(lattice.d..lattice.dim()) * radius as f64;
    let physical = Aabb::centered(lattice.d, cfg.injectivity_eps);
    let internal = Aabb::centered(lattice.m, bound);
    let hits = lattice.enumerate_clipped(&physical, &internal, Some(radius), cfg.budget)?;
    if let Some(p) = hits.into_iter().find(|p| p.n.iter().any(|&k| k != 0)) {
        let norm = crate::geometry::norm(&p.x);
        return Err(Error::InjectivityFailure { n: p.n, norm });
    }
    Ok(())
}

fn density_witness(lattice: &SplitLattice, cfg: &WitnessConfig) -> Result<(usize, usize)> {
    let cells = cfg.density_cells.max(1);
    let total = cells.pow(lattice.m as u32);
    let radius = cfg.density_radius;
    let bound = lattice.row_bound(0..lattice.d) * radius as f64;
    let physical = Aabb::centered(lattice.d, bound);
    let internal = Aabb::new(vec![0.0; lattice.m], vec![1.0; lattice.m])?;
    let pts = lattice.enumerate_clipped(&physical, &internal, Some(radius), cfg.budget)?;
    let mut hit = vec![false; total];
    for p in &pts {
        if p.x_star.iter().any(|&v| v >= 1.0) {
            continue;
        }
        let mut idx = 0;
        for &v in &p.x_star {
            let c = ((v * cells as f64).floor() as usize).min(cells - 1);
            idx = idx * cells + c;
        }
        hit[idx] = true;
    }
    Ok((hit.iter().filter(|&&h| h).count(), total))
}

impl Cps {
    /// The Fibonacci scheme: columns `(1, 1)` and `(τ, 1 - τ)`.
    pub fn fibonacci() -> Cps {
        let tau = crate::TAU;
        let basis = DMatrix::from_row_slice(2, 2, &[1.0, tau, 1.0, 1.0 - tau]);
        make_cps(1, 1, basis, &WitnessConfig::default()).expect("fibonacci scheme is valid")
    }

    pub fn lattice(&self) -> &SplitLattice {
        &self.lattice
    }

    pub fn witness(&self) -> &WitnessReport {
        &self.witness
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn d(&self) -> usize {
        self.lattice.d
    }

    pub fn m(&self) -> usize {
        self.lattice.m
    }

    pub fn point(&self, n: &[i64]) -> LatticePoint {
        self.lattice.point(n)
    }

    pub fn star(&self, n: &[i64]) -> Vec<f64> {
        self.lattice.star(n)
    }

    pub fn physical(&self, n: &[i64]) -> Vec<f64> {
        self.lattice.physical(n)
    }
}

/// `dens(L) = 1 / |det(basis)|`, with no Haar renormalization.
pub fn lattice_density(cps: &Cps) -> f64 {
    cps.lattice.density()
}

/// The dual scheme under the character convention `t ↦ exp(2πi⟨k, t⟩)`:
/// its basis is the inverse transpose of the primal one.
pub fn dual_cps(cps: &Cps) -> Result<DualCps> {
    let basis = cps.lattice.inv.transpose();
    Ok(DualCps {
        lattice: SplitLattice::new(cps.d(), cps.m(), basis)?,
    })
}

/// Lattice points of `cps` in `physical × internal`.
pub fn enumerate_lattice(
    cps: &Cps,
    physical: &Aabb,
    internal: &Aabb,
    budget: u64,
) -> Result<Vec<LatticePoint>> {
    cps.lattice.enumerate(physical, internal, budget)
}

impl DualCps {
    pub fn lattice(&self) -> &SplitLattice {
        &self.lattice
    }

    /// `k·x + l·x⋆` for a dual point `(k, l)` and primal point `(x, x⋆)`.
    pub fn pairing(q: &LatticePoint, p: &LatticePoint) -> f64 {
        q.x.iter().zip(&p.x).map(|(a, b)| a * b).sum::<f64>()
            + q.x_star
                .iter()
                .zip(&p.x_star)
                .map(|(a, b)| a * b)
                .sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::TAU;

    fn small_cfg() -> WitnessConfig {
        WitnessConfig {
            injectivity_radius: 200,
            density_radius: 200,
            ..Default::default()
        }
    }

    #[test]
    fn fibonacci_is_valid_with_det_minus_sqrt5() {
        let cps = Cps::fibonacci();
        assert!((cps.lattice().det() + 5f64.sqrt()).abs() < 1e-12);
        assert!(cps.witness().density_ok);
        assert!((lattice_density(&cps) - 1.0 / 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn identity_basis_is_not_injective() {
        let err = make_cps(1, 1, DMatrix::identity(2, 2), &small_cfg()).unwrap_err();
        match err {
            Error::InjectivityFailure { n, .. } => assert_eq!(n[0], 0),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn half_integer_shear_is_not_injective() {
        // columns (1,0) and (0.5,1): 2·(0.5) - 1 = 0 in physical space
        let basis = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(
            make_cps(1, 1, basis, &small_cfg()),
            Err(Error::InjectivityFailure { .. })
        ));
    }

    #[test]
    fn discrete_internal_projection_warns() {
        // columns (1,0) and (√2,1): injective, internal parts are integers
        let basis = DMatrix::from_row_slice(2, 2, &[1.0, 2f64.sqrt(), 0.0, 1.0]);
        let cps = make_cps(1, 1, basis, &small_cfg()).unwrap();
        assert!(!cps.witness().density_ok);
        assert_eq!(cps.witness().density_cells_hit, 1);
    }

    #[test]
    fn singular_basis_rejected() {
        let basis = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(
            make_cps(1, 1, basis, &small_cfg()),
            Err(Error::SingularBasis { .. })
        ));
    }

    #[test]
    fn density_scales_with_basis() {
        let basis = DMatrix::from_row_slice(2, 2, &[3.0, 3.0 * TAU, 3.0, 3.0 * (1.0 - TAU)]);
        let cps = make_cps(1, 1, basis, &small_cfg()).unwrap();
        let expected = (1.0 / 5f64.sqrt()) / 9.0;
        assert!((lattice_density(&cps) - expected).abs() < 1e-14);
    }

    #[test]
    fn dual_density_and_double_dual() {
        let cps = Cps::fibonacci();
        let dual = dual_cps(&cps).unwrap();
        assert!((dual.lattice().density() - 5f64.sqrt()).abs() < 1e-12);
        let back = dual.lattice().inv_basis().transpose();
        assert!((back - cps.lattice().basis()).abs().max() < 1e-14);
    }

    #[test]
    fn empty_physical_box_gives_nothing() {
        let cps = Cps::fibonacci();
        let pts = enumerate_lattice(
            &cps,
            &Aabb::interval(1.0, 0.0),
            &Aabb::interval(-10.0, 10.0),
            DEFAULT_LINE_BUDGET,
        )
        .unwrap();
        assert!(pts.is_empty());
    }

    #[test]
    fn budget_is_enforced() {
        let cps = Cps::fibonacci();
        let err = enumerate_lattice(
            &cps,
            &Aabb::interval(-1e4, 1e4),
            &Aabb::interval(-1e4, 1e4),
            100,
        )
        .unwrap_err();
        assert!(matches!(err, Error::RegionTooLarge { .. }));
    }
}
