//! Recovering the torus parameter `(s, t) + L` of a patch cut from a
//! compact box-union window.
//!
//! In `R^m` the window period group is trivial, so the reduced torus is the
//! torus itself and no quotient is taken.

use serde::{Deserialize, Serialize};

use crate::cps::{Cps, LatticePoint, DEFAULT_LINE_BUDGET};
use crate::error::{Error, Result};
use crate::geometry::{norm, Aabb};
use crate::modelset::Patch;
use crate::window::Window;

/// Tolerance for matching patch points to lattice physical parts.
pub const EMBED_EPS: f64 = 1e-6;
/// Slack on closed window membership.
pub const CLOSED_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusParameter {
    pub s: Vec<f64>,
    pub t: Vec<f64>,
    /// Closed box of all `t` compatible with the patch for this `s`.
    pub feasible_box: Aabb,
    pub cps_id: String,
    pub verified: bool,
}

impl TorusParameter {
    pub fn max_width(&self) -> f64 {
        self.feasible_box.widths().into_iter().fold(0.0, f64::max)
    }

    /// Whether the class `(s0, t0) + L` is among the recovered ones: some
    /// lattice vector `v` has `π_G(v) = s0 - s` and `t0 - v⋆` in the
    /// feasible box.
    pub fn contains_class(&self, cps: &Cps, s0: &[f64], t0: &[f64]) -> Result<bool> {
        let ds: Vec<f64> = s0.iter().zip(&self.s).map(|(a, b)| a - b).collect();
        // t0 - v⋆ ∈ box  ⇔  v⋆ ∈ t0 - box
        let internal = self.feasible_box.negate().translate(t0).inflate(CLOSED_EPS);
        let hits = cps
            .lattice()
            .near_physical(&ds, EMBED_EPS, &internal, DEFAULT_LINE_BUDGET)?;
        Ok(!hits.is_empty())
    }
}

/// Closed hull of the L¹ class; `None` when the window has no boxes.
///
/// Generic patches only see the L¹ class, so overrides are ignored and
/// point-free boxes count as ordinary ones.
fn closed_hull(w: &Window) -> Option<Aabb> {
    w.l1_hull()
}

fn closed_contains(w: &Window, h: &[f64]) -> bool {
    w.l1_boxes().any(|b| b.contains_closed_eps(h, CLOSED_EPS))
}

/// Lattice vector near `x` (physical) with internal part in `internal`,
/// nearest first.
fn embed(cps: &Cps, x: &[f64], internal: &Aabb) -> Result<Option<LatticePoint>> {
    let hits = cps
        .lattice()
        .near_physical(x, EMBED_EPS, internal, DEFAULT_LINE_BUDGET)?;
    Ok(hits.into_iter().min_by(|a, b| {
        let da = dist(&a.x, x);
        let db = dist(&b.x, x);
        da.total_cmp(&db).then_with(|| a.n.cmp(&b.n))
    }))
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max)
}

/// Recover `(s, t)` and the feasible set of `t` from the physical points of
/// `patch` only (stored integer coordinates are ignored).
pub fn recover_parameters(patch: &Patch, cps: &Cps, w: &Window) -> Result<TorusParameter> {
    recover_parameters_with(patch, cps, w, 1.0)
}

/// As [`recover_parameters`], searching anchors within `anchor_radius` of
/// the first patch point.
pub fn recover_parameters_with(
    patch: &Patch,
    cps: &Cps,
    w: &Window,
    anchor_radius: f64,
) -> Result<TorusParameter> {
    let hull = closed_hull(w).filter(|h| h.volume() > 0.0).ok_or_else(|| {
        Error::InvalidWindow("torus recovery needs a window of positive measure".into())
    })?;
    let Some(first) = patch.points.first() else {
        return Err(Error::InvalidWindow(
            "cannot recover parameters of an empty patch".into(),
        ));
    };
    let x0 = first.x.clone();
    // W - W widened by diam(W), so incompatible pairs surface as an empty
    // intersection rather than as a missing embedding
    let diam = hull.widths().into_iter().fold(0.0, f64::max);
    let diffs = hull.minkowski_difference(&hull).inflate(diam + EMBED_EPS);

    // anchor λ: lattice physical part closest to x0 with a small star
    let anchor_internal = Aabb::centered(cps.m(), norm(&hull.widths()).max(1.0));
    let near = Aabb {
        lo: x0.iter().map(|v| v - anchor_radius).collect(),
        hi: x0.iter().map(|v| v + anchor_radius).collect(),
    };
    let anchor = cps
        .lattice()
        .enumerate(&near, &anchor_internal, DEFAULT_LINE_BUDGET)?
        .into_iter()
        .min_by(|a, b| {
            dist(&a.x, &x0)
                .total_cmp(&dist(&b.x, &x0))
                .then_with(|| a.n.cmp(&b.n))
        })
        .unwrap_or_else(|| cps.point(&vec![0; cps.d() + cps.m()]));
    let s: Vec<f64> = anchor.x.iter().zip(&x0).map(|(l, x)| l - x).collect();

    // x + s = λ + (x - x0), with (x - x0)⋆ ∈ W - W
    let mut feasible: Option<Aabb> = None;
    for p in &patch.points {
        let dx: Vec<f64> = p.x.iter().zip(&x0).map(|(a, b)| a - b).collect();
        let v = embed(cps, &dx, &diffs)?.ok_or_else(|| Error::NoLatticeEmbedding(p.x.clone()))?;
        let star: Vec<f64> = anchor
            .x_star
            .iter()
            .zip(&v.x_star)
            .map(|(a, b)| a + b)
            .collect();
        let cell = hull.negate().translate(&star);
        feasible = match feasible {
            None => Some(cell),
            Some(f) => Some(f.intersect_closed(&cell).ok_or(Error::EmptyFeasibleBox)?),
        };
    }
    let feasible_box = feasible.ok_or(Error::EmptyFeasibleBox)?;
    let t = feasible_box.center();
    let verified = verify_inclusion(patch, cps, w, &s, &t)?;
    Ok(TorusParameter {
        s,
        t,
        feasible_box,
        cps_id: cps.id().to_string(),
        verified,
    })
}

/// `Γ ⊆ -s + Λ(t + W)` with the L¹ class of `W` read as a closed set.
pub fn verify_inclusion(
    patch: &Patch,
    cps: &Cps,
    w: &Window,
    s: &[f64],
    t: &[f64],
) -> Result<bool> {
    if patch.is_empty() {
        return Ok(true);
    }
    let Some(hull) = closed_hull(w) else {
        return Ok(false);
    };
    let internal = hull.translate(t).inflate(CLOSED_EPS);
    for p in &patch.points {
        let y: Vec<f64> = p.x.iter().zip(s).map(|(a, b)| a + b).collect();
        let Some(v) = embed(cps, &y, &internal)? else {
            return Ok(false);
        };
        let h: Vec<f64> = v.x_star.iter().zip(t).map(|(a, b)| a - b).collect();
        if !closed_contains(w, &h) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Draw `(s, t) = basis · u` with `u` uniform in `[0, 1)^(d+m)`.
pub fn fundamental_domain_draw<R: rand::Rng>(cps: &Cps, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
    let dim = cps.d() + cps.m();
    let u: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
    let b = cps.lattice().basis();
    let y: Vec<f64> = (0..dim)
        .map(|r| (0..dim).map(|c| b[(r, c)] * u[c]).sum())
        .collect();
    (y[..cps.d()].to_vec(), y[cps.d()..].to_vec())
}
