//! Model-set patches `(-s + Λ(t + W)) ∩ A`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cps::{Cps, LatticePoint, DEFAULT_LINE_BUDGET};
use crate::error::{Error, Result};
use crate::geometry::{cmp_lex, Aabb};
use crate::window::Window;

/// Internal padding of the enumeration box around the window support.
const INTERNAL_PAD: f64 = 1e-6;
const REGION_PAD: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutOptions {
    pub budget: u64,
    /// `‖n‖∞` bound when testing whether `s` or `t` is a lattice projection.
    pub align_radius: i64,
    pub align_eps: f64,
}

impl Default for CutOptions {
    fn default() -> Self {
        Self {
            budget: DEFAULT_LINE_BUDGET,
            align_radius: 1000,
            align_eps: 1e-9,
        }
    }
}

/// A finite sample of a model set.
///
/// Each point stores the integer coordinates `n` of its lattice preimage
/// `x + s`, the shifted physical coordinate `x`, and the internal part of
/// the preimage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Patch {
    pub points: Vec<LatticePoint>,
    pub region: Aabb,
    pub s: Vec<f64>,
    pub t: Vec<f64>,
    pub cps_id: String,
    pub window_id: String,
}

impl Patch {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn physical_points(&self) -> impl Iterator<Item = &[f64]> {
        self.points.iter().map(|p| p.x.as_slice())
    }

    pub fn d(&self) -> usize {
        self.region.dim()
    }

    /// Region volume `|A|`, with the region read as a closed box.
    pub fn volume(&self) -> f64 {
        self.region.widths().iter().map(|w| w.max(0.0)).product()
    }

    /// Smallest half-width of the region.
    pub fn half_width(&self) -> f64 {
        self.region
            .widths()
            .into_iter()
            .fold(f64::INFINITY, f64::min)
            * 0.5
    }

    /// Integer coordinates, sorted, for exact set comparisons.
    pub fn coordinate_set(&self) -> Vec<Vec<i64>> {
        let mut v: Vec<Vec<i64>> = self.points.iter().map(|p| p.n.clone()).collect();
        v.sort();
        v
    }

    /// Same provenance (scheme, window, parameters).
    pub fn same_source(&self, other: &Patch) -> bool {
        self.cps_id == other.cps_id
            && self.window_id == other.window_id
            && self.s == other.s
            && self.t == other.t
    }
}

/// Integer vector `u` with `π_H(u) ≈ t`, if one exists within the radius.
pub fn align_internal(cps: &Cps, t: &[f64], opts: &CutOptions) -> Result<Option<Vec<i64>>> {
    let hits = cps
        .lattice()
        .near_internal(t, opts.align_eps, opts.align_radius, opts.budget)?;
    Ok(closest(hits, |p| &p.x_star, t))
}

/// Integer vector `v` with `π_G(v) ≈ s`, if one exists within the radius.
pub fn align_physical(cps: &Cps, s: &[f64], opts: &CutOptions) -> Result<Option<Vec<i64>>> {
    let lat = cps.lattice();
    let internal = Aabb::centered(cps.m(), lat.row_bound_internal() * opts.align_radius as f64);
    let phys = Aabb {
        lo: s.iter().map(|v| v - opts.align_eps).collect(),
        hi: s.iter().map(|v| v + opts.align_eps).collect(),
    };
    let hits = lat.enumerate_clipped(&phys, &internal, Some(opts.align_radius), opts.budget)?;
    Ok(closest(hits, |p| &p.x, s))
}

fn closest<F>(hits: Vec<LatticePoint>, part: F, target: &[f64]) -> Option<Vec<i64>>
where
    F: Fn(&LatticePoint) -> &Vec<f64>,
{
    hits.into_iter()
        .map(|p| {
            let d: f64 = part(&p)
                .iter()
                .zip(target)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            (d, p.n)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)))
        .map(|(_, n)| n)
}

fn sub(a: &[i64], b: &[i64]) -> Vec<i64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn cut_project(cps: &Cps, w: &Window, s: &[f64], t: &[f64], region: &Aabb) -> Result<Patch> {
    cut_project_with(cps, w, s, t, region, &CutOptions::default())
}

/// Points of `-s + Λ(t + W)` inside the closed region.
///
/// When `t` (resp. `s`) is the internal (resp. physical) part of a lattice
/// vector, window coordinates (resp. shifted positions) are evaluated from
/// integer differences, so lattice translates produce bitwise-identical
/// output. Point-free boxes admit points only when `t` is off the star set.
pub fn cut_project_with(
    cps: &Cps,
    w: &Window,
    s: &[f64],
    t: &[f64],
    region: &Aabb,
    opts: &CutOptions,
) -> Result<Patch> {
    if s.len() != cps.d() || region.dim() != cps.d() {
        return Err(Error::DimensionMismatch {
            expected: cps.d(),
            got: if s.len() != cps.d() {
                s.len()
            } else {
                region.dim()
            },
        });
    }
    if t.len() != cps.m() || w.m() != cps.m() {
        return Err(Error::DimensionMismatch {
            expected: cps.m(),
            got: if t.len() != cps.m() { t.len() } else { w.m() },
        });
    }
    let mut patch = Patch {
        points: vec![],
        region: region.clone(),
        s: s.to_vec(),
        t: t.to_vec(),
        cps_id: cps.id().to_string(),
        window_id: w.id(),
    };
    let Some(support) = w.support_hull() else {
        return Ok(patch);
    };
    let internal = support.translate(t).inflate(INTERNAL_PAD);
    let physical = region.translate(s).inflate(REGION_PAD);
    let candidates = cps.lattice().enumerate(&physical, &internal, opts.budget)?;
    if candidates.is_empty() {
        return Ok(patch);
    }
    let t_align = align_internal(cps, t, opts)?;
    let s_align = align_physical(cps, s, opts)?;

    for p in candidates {
        let h = match &t_align {
            Some(u) => cps.star(&sub(&p.n, u)),
            None => p.x_star.iter().zip(t).map(|(a, b)| a - b).collect(),
        };
        if !w.contains_with(&h, t_align.is_some()) {
            continue;
        }
        let x = match &s_align {
            Some(v) => cps.physical(&sub(&p.n, v)),
            None => p.x.iter().zip(s).map(|(a, b)| a - b).collect(),
        };
        if !region.contains_closed(&x) {
            continue;
        }
        patch.points.push(LatticePoint {
            n: p.n,
            x,
            x_star: p.x_star,
        });
    }
    patch.points.sort_by(|a, b| cmp_lex(&a.x, &b.x));
    Ok(patch)
}

/// Split `Λ(K)` into `Λ(K \ U)` and `Λ(U)`.
pub fn decompose(cps: &Cps, k: &Window, u: &Window, region: &Aabb) -> Result<(Patch, Patch)> {
    check_nested(u, k)?;
    let diff = difference(k, u)?;
    let zero_s = vec![0.0; cps.d()];
    let zero_t = vec![0.0; cps.m()];
    Ok((
        cut_project(cps, &diff, &zero_s, &zero_t, region)?,
        cut_project(cps, u, &zero_s, &zero_t, region)?,
    ))
}

const NEST_GRID: usize = 64;

fn check_nested(u: &Window, k: &Window) -> Result<()> {
    for p in u.include_points() {
        if !k.contains(p) {
            return Err(Error::NotNested(p.clone()));
        }
    }
    for b in u.l1_boxes() {
        let m = b.dim();
        let per_axis = if m == 1 {
            NEST_GRID * NEST_GRID
        } else {
            NEST_GRID
        };
        let total = per_axis.pow(m as u32);
        for idx in 0..total {
            let mut rem = idx;
            let h: Vec<f64> = (0..m)
                .map(|j| {
                    let i = rem % per_axis;
                    rem /= per_axis;
                    b.lo[j] + (i as f64 + 0.5) / per_axis as f64 * (b.hi[j] - b.lo[j])
                })
                .collect();
            if !k.l1_contains(&h) {
                return Err(Error::NotNested(h));
            }
        }
    }
    Ok(())
}

/// The window `K \ U` (L¹ parts by box subtraction, overrides by membership).
pub fn difference(k: &Window, u: &Window) -> Result<Window> {
    let cut = |boxes: &[Aabb]| -> Vec<Aabb> {
        let mut pieces: Vec<Aabb> = boxes.to_vec();
        for ub in u.l1_boxes() {
            pieces = pieces.iter().flat_map(|p| p.subtract(ub)).collect();
        }
        pieces
    };
    let geometric = cut(k.geometric());
    let point_free = cut(k.point_free());
    let in_diff_l1 = |p: &Vec<f64>| {
        geometric
            .iter()
            .chain(&point_free)
            .any(|b| b.contains_half_open(p))
    };
    let mut include: Vec<Vec<f64>> = k
        .include_points()
        .iter()
        .filter(|p| !u.contains(p))
        .cloned()
        .collect();
    // points U excludes but K keeps fall back to K \ U
    include.extend(
        u.exclude_points()
            .iter()
            .filter(|p| k.contains(p) && !in_diff_l1(p))
            .cloned(),
    );
    let mut exclude: Vec<Vec<f64>> = k
        .exclude_points()
        .iter()
        .filter(|p| geometric.iter().any(|b| b.contains_half_open(p)))
        .cloned()
        .collect();
    exclude.extend(
        u.include_points()
            .iter()
            .filter(|p| geometric.iter().any(|b| b.contains_half_open(p)))
            .cloned(),
    );
    Window::new(k.m(), geometric, point_free, include, exclude)
}

/// Deterministic rule selecting `Γ ⊆ Λ(W)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum GammaRule {
    KeepAll,
    /// Keep every other point in physical order, starting with the first.
    Alternate,
    /// Keep each point independently with probability `p`.
    Bernoulli {
        p: f64,
        seed: u64,
    },
}

impl GammaRule {
    pub fn select(&self, points: &[LatticePoint]) -> Vec<LatticePoint> {
        match self {
            GammaRule::KeepAll => points.to_vec(),
            GammaRule::Alternate => points.iter().step_by(2).cloned().collect(),
            GammaRule::Bernoulli { p, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                points
                    .iter()
                    .filter(|_| rng.gen::<f64>() < *p)
                    .cloned()
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BorelCounterexample {
    /// `B_a = Γ⋆ ∪ (cube \ π_H(L))`.
    pub window: Window,
    /// The selected subset `Γ` on the working region.
    pub gamma: Patch,
    pub cube: Aabb,
}

/// Build a Borel window `B_a` with `Λ(B_a) = Γ` on `working_region` and
/// `θ(B_a) = a`.
pub fn make_borel_counterexample(
    cps: &Cps,
    w: &Window,
    rule: &GammaRule,
    a: f64,
    working_region: &Aabb,
    search_range: f64,
) -> Result<BorelCounterexample> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidWindow(format!(
            "target measure {a} must be positive"
        )));
    }
    let m = cps.m();
    let zero_s = vec![0.0; cps.d()];
    let zero_t = vec![0.0; m];
    let full = cut_project(cps, w, &zero_s, &zero_t, working_region)?;
    let kept = rule.select(&full.points);

    let side = a.powf(1.0 / m as f64);
    let cube = place_cube(w, side, search_range)?;
    let include: Vec<Vec<f64>> = kept.iter().map(|p| p.x_star.clone()).collect();
    let window = Window::new(m, vec![], vec![cube.clone()], include, vec![])?;
    let gamma = Patch {
        points: kept,
        window_id: window.id(),
        ..full
    };
    Ok(BorelCounterexample {
        window,
        gamma,
        cube,
    })
}

fn place_cube(w: &Window, side: f64, search_range: f64) -> Result<Aabb> {
    let m = w.m();
    let hull = w.support_hull().unwrap_or_else(|| Aabb::centered(m, 0.0));
    let center = hull.center();
    let clear = |c: &Aabb| {
        w.l1_boxes().all(|b| c.intersect(b).is_none())
            && w.include_points()
                .iter()
                .chain(w.exclude_points())
                .all(|p| !c.contains_closed(p))
    };
    let step = side.max(1e-3);
    let mut offset = 0.0;
    while offset <= search_range {
        for sign in [1.0, -1.0] {
            let mut lo: Vec<f64> = center.iter().map(|c| c - side / 2.0).collect();
            lo[0] += sign * offset;
            let hi: Vec<f64> = lo.iter().map(|v| v + side).collect();
            let cube = Aabb { lo, hi };
            let far = cube.hi[0].abs().max(cube.lo[0].abs()) - center[0].abs();
            if far <= search_range && clear(&cube) {
                return Ok(cube);
            }
        }
        offset += step;
    }
    Err(Error::PlacementFailure {
        side,
        range: search_range,
    })
}
