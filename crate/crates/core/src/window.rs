//! Windows in internal space `R^m`.
//!
//! A window is a union of half-open boxes (its geometric part) decorated
//! with measure-zero point overrides and with point-free boxes. Point-free
//! boxes count toward the measure but reject every lattice star point, so
//! they only admit points when the window is shifted off the star set.
//!
//! Measure, covariogram, Fourier transform and the sandwich approximations
//! see only the L¹ class `geometric ∪ point_free`; overrides never change
//! them.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{cmp_lex, normalize_union, Aabb};

/// Matching tolerance (sup norm) for override points.
pub const OVERRIDE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub m: usize,
    #[serde(default)]
    pub geometric: Vec<Aabb>,
    #[serde(default)]
    pub point_free: Vec<Aabb>,
    #[serde(default)]
    pub include_points: Vec<Vec<f64>>,
    #[serde(default)]
    pub exclude_points: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WindowSpec", into = "WindowSpec")]
pub struct Window {
    m: usize,
    geometric: Vec<Aabb>,
    point_free: Vec<Aabb>,
    include_points: Vec<Vec<f64>>,
    exclude_points: Vec<Vec<f64>>,
}

impl TryFrom<WindowSpec> for Window {
    type Error = Error;

    fn try_from(s: WindowSpec) -> Result<Self> {
        Window::new(
            s.m,
            s.geometric,
            s.point_free,
            s.include_points,
            s.exclude_points,
        )
    }
}

impl From<Window> for WindowSpec {
    fn from(w: Window) -> Self {
        WindowSpec {
            m: w.m,
            geometric: w.geometric,
            point_free: w.point_free,
            include_points: w.include_points,
            exclude_points: w.exclude_points,
        }
    }
}

impl Window {
    pub fn new(
        m: usize,
        geometric: Vec<Aabb>,
        point_free: Vec<Aabb>,
        include_points: Vec<Vec<f64>>,
        exclude_points: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidWindow(
                "internal dimension must be positive".into(),
            ));
        }
        for b in geometric.iter().chain(&point_free) {
            if b.dim() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    got: b.dim(),
                });
            }
            if b.lo.iter().chain(&b.hi).any(|v| !v.is_finite()) {
                return Err(Error::InvalidWindow("box bounds must be finite".into()));
            }
        }
        for p in include_points.iter().chain(&exclude_points) {
            if p.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    got: p.len(),
                });
            }
        }
        let geometric = normalize_union(&geometric);
        let point_free = normalize_union(&point_free);
        for g in &geometric {
            if point_free.iter().any(|p| g.intersect(p).is_some()) {
                return Err(Error::InvalidWindow(
                    "geometric and point-free boxes overlap".into(),
                ));
            }
        }
        let include_points = sorted_points(include_points);
        let exclude_points = sorted_points(exclude_points);
        if let Some(p) = include_points.iter().find(|p| {
            geometric
                .iter()
                .chain(&point_free)
                .any(|b| b.contains_half_open(p))
        }) {
            return Err(Error::InvalidWindow(format!(
                "include point {p:?} already lies in the window"
            )));
        }
        if let Some(p) = exclude_points
            .iter()
            .find(|p| !geometric.iter().any(|b| b.contains_half_open(p)))
        {
            return Err(Error::InvalidWindow(format!(
                "exclude point {p:?} lies outside the geometric part"
            )));
        }
        Ok(Self {
            m,
            geometric,
            point_free,
            include_points,
            exclude_points,
        })
    }

    pub fn from_boxes(m: usize, boxes: Vec<Aabb>) -> Result<Self> {
        Self::new(m, boxes, vec![], vec![], vec![])
    }

    /// The half-open interval `[a, b)` in `R^1`.
    pub fn interval(a: f64, b: f64) -> Window {
        Self::from_boxes(1, vec![Aabb::interval(a, b)]).expect("interval window")
    }

    pub fn empty(m: usize) -> Window {
        Self::from_boxes(m, vec![]).expect("empty window")
    }

    /// The Fibonacci window `[-1, τ - 1)`.
    pub fn fibonacci() -> Window {
        Self::interval(-1.0, crate::TAU - 1.0)
    }

    /// Same L¹ class with new overrides.
    pub fn with_overrides(&self, include: Vec<Vec<f64>>, exclude: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(
            self.m,
            self.geometric.clone(),
            self.point_free.clone(),
            include,
            exclude,
        )
    }

    /// The window with overrides stripped.
    pub fn l1_class(&self) -> Window {
        Window {
            m: self.m,
            geometric: self.geometric.clone(),
            point_free: self.point_free.clone(),
            include_points: vec![],
            exclude_points: vec![],
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn geometric(&self) -> &[Aabb] {
        &self.geometric
    }

    pub fn point_free(&self) -> &[Aabb] {
        &self.point_free
    }

    pub fn include_points(&self) -> &[Vec<f64>] {
        &self.include_points
    }

    pub fn exclude_points(&self) -> &[Vec<f64>] {
        &self.exclude_points
    }

    pub fn is_decorated(&self) -> bool {
        !(self.point_free.is_empty()
            && self.include_points.is_empty()
            && self.exclude_points.is_empty())
    }

    pub fn l1_boxes(&self) -> impl Iterator<Item = &Aabb> + Clone {
        self.geometric.iter().chain(&self.point_free)
    }

    pub fn l1_hull(&self) -> Option<Aabb> {
        let mut it = self.l1_boxes();
        let first = it.next()?.clone();
        Some(it.fold(first, |h, b| h.hull(b)))
    }

    /// Hull of the L¹ class together with the override points.
    pub fn support_hull(&self) -> Option<Aabb> {
        let pts = Aabb::bounding(
            self.include_points
                .iter()
                .chain(&self.exclude_points)
                .map(|p| p.as_slice()),
        );
        match (self.l1_hull(), pts) {
            (Some(a), Some(b)) => Some(a.hull(&b)),
            (a, b) => a.or(b),
        }
    }

    /// Smallest box width over all axes of the L¹ boxes.
    pub fn min_width(&self) -> Option<f64> {
        self.l1_boxes()
            .flat_map(|b| b.widths())
            .min_by(f64::total_cmp)
    }

    pub fn l1_contains(&self, h: &[f64]) -> bool {
        self.l1_boxes().any(|b| b.contains_half_open(h))
    }

    pub fn geometric_contains(&self, h: &[f64]) -> bool {
        self.geometric.iter().any(|b| b.contains_half_open(h))
    }

    /// Membership for a lattice star point (`h ∈ π_H(L)`).
    pub fn contains(&self, h: &[f64]) -> bool {
        self.contains_with(h, true)
    }

    /// Membership where `on_star_set` says whether `h` is a lattice star
    /// point. Point-free boxes reject exactly those.
    pub fn contains_with(&self, h: &[f64], on_star_set: bool) -> bool {
        if find_point(&self.exclude_points, h) {
            return false;
        }
        if find_point(&self.include_points, h) {
            return true;
        }
        if self.point_free.iter().any(|b| b.contains_half_open(h)) {
            return !on_star_set;
        }
        self.geometric_contains(h)
    }

    pub fn id(&self) -> String {
        let json = serde_json::to_string(self).expect("window serializes");
        crate::provenance::digest_str(&json)
    }
}

fn sorted_points(mut pts: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    pts.sort_by(|a, b| cmp_lex(a, b));
    pts.dedup();
    pts
}

/// Tolerant lookup in a list sorted lexicographically.
fn find_point(sorted: &[Vec<f64>], h: &[f64]) -> bool {
    if sorted.is_empty() {
        return false;
    }
    let start = sorted.partition_point(|p| p[0] < h[0] - OVERRIDE_EPS);
    sorted[start..]
        .iter()
        .take_while(|p| p[0] <= h[0] + OVERRIDE_EPS)
        .any(|p| p.iter().zip(h).all(|(a, b)| (a - b).abs() <= OVERRIDE_EPS))
}

/// `θ_H(W)`: total volume of the L¹ class.
pub fn measure(w: &Window) -> f64 {
    w.l1_boxes().map(Aabb::volume).sum()
}

/// `c_W(t) = θ_H(W ∩ (t + W))`.
pub fn covariogram(w: &Window, t: &[f64]) -> f64 {
    let mut total = 0.0;
    for a in w.l1_boxes() {
        for b in w.l1_boxes() {
            total += a.overlap_volume_shifted(b, t);
        }
    }
    total
}

/// `∫_W exp(-2πi l·r) dr` in closed form.
pub fn fourier_indicator(w: &Window, l: &[f64]) -> Complex64 {
    let mut total = Complex64::new(0.0, 0.0);
    for b in w.l1_boxes() {
        let mut f = Complex64::new(1.0, 0.0);
        for j in 0..b.dim() {
            f *= interval_transform(l[j], b.lo[j], b.hi[j]);
        }
        total += f;
    }
    total
}

/// `∫_a^b exp(-2πi l r) dr = (b-a) sinc(π l (b-a)) exp(-πi l (a+b))`.
fn interval_transform(l: f64, a: f64, b: f64) -> Complex64 {
    let w = b - a;
    if l == 0.0 {
        return Complex64::new(w, 0.0);
    }
    let x = PI * l * w;
    let amp = w * x.sin() / x;
    Complex64::from_polar(amp, -PI * l * (a + b))
}

/// Inner and outer approximations with `measure(outer) - measure(inner) < 1/n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sandwich {
    pub inner: Window,
    pub outer: Window,
    pub delta: f64,
    pub gap: f64,
    /// Boxes thinner than `2δ`, dropped from `inner`.
    pub dropped: usize,
}

impl Sandwich {
    pub fn degenerate(&self) -> bool {
        self.dropped > 0
    }
}

/// Upper bound on the measure gap for face offset `delta`.
fn sandwich_bound(w: &Window, delta: f64) -> f64 {
    w.l1_boxes()
        .map(|b| {
            let grown: f64 = b.widths().iter().map(|x| x + 2.0 * delta).product();
            let shrunk: f64 = b
                .widths()
                .iter()
                .map(|x| (x - 2.0 * delta).max(0.0))
                .product();
            grown - shrunk
        })
        .sum()
}

pub fn sandwich(w: &Window, n: u32) -> Sandwich {
    let target = 1.0 / n.max(1) as f64;
    let mut delta = 1.0;
    while sandwich_bound(w, delta) >= target && delta > 1e-300 {
        delta *= 0.5;
    }
    let mut dropped = 0;
    let mut inner_boxes = Vec::new();
    let mut outer_boxes = Vec::new();
    for b in w.l1_boxes() {
        outer_boxes.push(b.inflate(delta));
        let k = b.inflate(-delta);
        if k.is_empty() {
            dropped += 1;
        } else {
            inner_boxes.push(k);
        }
    }
    let inner = Window::from_boxes(w.m, inner_boxes).expect("shrunk boxes are valid");
    let outer = Window::from_boxes(w.m, outer_boxes).expect("grown boxes are valid");
    let gap = measure(&outer) - measure(&inner);
    Sandwich {
        inner,
        outer,
        delta,
        gap,
        dropped,
    }
}

/// Grid points `t` with `|c_W(t) - c_W(0)| < tol`.
///
/// In `R^m` the only true period of a window of positive measure is `0`;
/// `tol` is a resolution knob, not a period criterion.
pub fn period_candidates(w: &Window, grid: &[Vec<f64>], tol: f64) -> Result<Vec<Vec<f64>>> {
    let c0 = measure(w);
    if c0 <= 0.0 {
        return Err(Error::InvalidWindow("window has zero measure".into()));
    }
    Ok(grid
        .iter()
        .filter(|t| (covariogram(w, t) - c0).abs() < tol)
        .cloned()
        .collect())
}
