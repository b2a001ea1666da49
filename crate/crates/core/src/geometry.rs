//! Axis-aligned boxes.
//!
//! Window boxes use the half-open convention `[lo, hi)` on every axis.
//! Averaging regions and enumeration bounds use the closed convention
//! `[lo, hi]`; the two are kept apart by method name, not by type.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Aabb {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Aabb {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        if lo.iter().chain(hi.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidWindow("box bounds must be finite".into()));
        }
        Ok(Self { lo, hi })
    }

    /// The centered cube `[-r, r]^dim`.
    pub fn centered(dim: usize, r: f64) -> Self {
        Self {
            lo: vec![-r; dim],
            hi: vec![r; dim],
        }
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        Self {
            lo: vec![lo],
            hi: vec![hi],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Empty as a half-open box.
    pub fn is_empty(&self) -> bool {
        self.lo.iter().zip(&self.hi).any(|(a, b)| a >= b)
    }

    pub fn volume(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).collect()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| 0.5 * (a + b))
            .collect()
    }

    pub fn contains_half_open(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(x, (a, b))| a <= x && x < b)
    }

    pub fn contains_closed(&self, p: &[f64]) -> bool {
        self.contains_closed_eps(p, 0.0)
    }

    pub fn contains_closed_eps(&self, p: &[f64], eps: f64) -> bool {
        p.len() == self.dim()
            && p.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(x, (a, b))| a - eps <= *x && *x <= b + eps)
    }

    /// Intersection as half-open boxes; `None` when empty.
    pub fn intersect(&self, other: &Aabb) -> Option<Aabb> {
        let lo: Vec<f64> = self
            .lo
            .iter()
            .zip(&other.lo)
            .map(|(a, b)| a.max(*b))
            .collect();
        let hi: Vec<f64> = self
            .hi
            .iter()
            .zip(&other.hi)
            .map(|(a, b)| a.min(*b))
            .collect();
        let b = Aabb { lo, hi };
        (!b.is_empty()).then_some(b)
    }

    /// Closed intersection, kept even when degenerate (`lo == hi`).
    pub fn intersect_closed(&self, other: &Aabb) -> Option<Aabb> {
        let lo: Vec<f64> = self
            .lo
            .iter()
            .zip(&other.lo)
            .map(|(a, b)| a.max(*b))
            .collect();
        let hi: Vec<f64> = self
            .hi
            .iter()
            .zip(&other.hi)
            .map(|(a, b)| a.min(*b))
            .collect();
        lo.iter()
            .zip(&hi)
            .all(|(a, b)| a <= b)
            .then_some(Aabb { lo, hi })
    }

    /// Volume of `self ∩ (other + t)` without allocating.
    pub fn overlap_volume_shifted(&self, other: &Aabb, t: &[f64]) -> f64 {
        let mut v = 1.0;
        for i in 0..self.dim() {
            let lo = self.lo[i].max(other.lo[i] + t[i]);
            let hi = self.hi[i].min(other.hi[i] + t[i]);
            if hi <= lo {
                return 0.0;
            }
            v *= hi - lo;
        }
        v
    }

    pub fn translate(&self, t: &[f64]) -> Aabb {
        Aabb {
            lo: self.lo.iter().zip(t).map(|(a, s)| a + s).collect(),
            hi: self.hi.iter().zip(t).map(|(a, s)| a + s).collect(),
        }
    }

    /// Point reflection `-B`.
    pub fn negate(&self) -> Aabb {
        Aabb {
            lo: self.hi.iter().map(|v| -v).collect(),
            hi: self.lo.iter().map(|v| -v).collect(),
        }
    }

    /// Grow every face outward by `delta` (shrink when negative).
    pub fn inflate(&self, delta: f64) -> Aabb {
        Aabb {
            lo: self.lo.iter().map(|a| a - delta).collect(),
            hi: self.hi.iter().map(|b| b + delta).collect(),
        }
    }

    /// Minkowski difference hull `self - other`.
    pub fn minkowski_difference(&self, other: &Aabb) -> Aabb {
        Aabb {
            lo: self.lo.iter().zip(&other.hi).map(|(a, b)| a - b).collect(),
            hi: self.hi.iter().zip(&other.lo).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn hull(&self, other: &Aabb) -> Aabb {
        Aabb {
            lo: self
                .lo
                .iter()
                .zip(&other.lo)
                .map(|(a, b)| a.min(*b))
                .collect(),
            hi: self
                .hi
                .iter()
                .zip(&other.hi)
                .map(|(a, b)| a.max(*b))
                .collect(),
        }
    }

    /// Bounding box of a point set; `None` for an empty set.
    pub fn bounding<'a, I>(points: I) -> Option<Aabb>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut it = points.into_iter();
        let first = it.next()?;
        let mut b = Aabb {
            lo: first.to_vec(),
            hi: first.to_vec(),
        };
        for p in it {
            for i in 0..b.dim() {
                b.lo[i] = b.lo[i].min(p[i]);
                b.hi[i] = b.hi[i].max(p[i]);
            }
        }
        Some(b)
    }

    /// `self \ other` as pairwise disjoint half-open boxes.
    pub fn subtract(&self, other: &Aabb) -> Vec<Aabb> {
        let Some(cut) = self.intersect(other) else {
            return if self.is_empty() {
                vec![]
            } else {
                vec![self.clone()]
            };
        };
        let mut pieces = Vec::new();
        let mut rest = self.clone();
        for i in 0..self.dim() {
            if rest.lo[i] < cut.lo[i] {
                let mut below = rest.clone();
                below.hi[i] = cut.lo[i];
                pieces.push(below);
                rest.lo[i] = cut.lo[i];
            }
            if cut.hi[i] < rest.hi[i] {
                let mut above = rest.clone();
                above.lo[i] = cut.hi[i];
                pieces.push(above);
                rest.hi[i] = cut.hi[i];
            }
        }
        pieces
    }

    /// Flat `[lo..., hi...]` form used in config files.
    pub fn to_flat(&self) -> Vec<f64> {
        self.lo.iter().chain(&self.hi).copied().collect()
    }

    pub fn from_flat(v: &[f64]) -> Result<Aabb> {
        if v.is_empty() || v.len() % 2 != 0 {
            return Err(Error::Config(format!(
                "box must be an even-length [lo..., hi...] array, got {} entries",
                v.len()
            )));
        }
        let m = v.len() / 2;
        Aabb::new(v[..m].to_vec(), v[m..].to_vec())
    }
}

impl Serialize for Aabb {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_flat().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Aabb {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        Aabb::from_flat(&v).map_err(D::Error::custom)
    }
}

/// Rewrite a union of half-open boxes as pairwise disjoint boxes.
///
/// Coordinates are compressed per axis, covered grid cells are kept, and
/// runs of adjacent cells along axis 0 are merged. The output depends only
/// on the union and on the breakpoints that survive in it, so normalizing
/// twice gives the same list.
pub fn normalize_union(boxes: &[Aabb]) -> Vec<Aabb> {
    let boxes: Vec<&Aabb> = boxes.iter().filter(|b| !b.is_empty()).collect();
    if boxes.is_empty() {
        return vec![];
    }
    let m = boxes[0].dim();
    let mut cuts: Vec<Vec<f64>> = vec![Vec::new(); m];
    for b in &boxes {
        for i in 0..m {
            cuts[i].push(b.lo[i]);
            cuts[i].push(b.hi[i]);
        }
    }
    for c in cuts.iter_mut() {
        c.sort_by(f64::total_cmp);
        c.dedup();
    }
    let counts: Vec<usize> = cuts.iter().map(|c| c.len() - 1).collect();

    // Iterate cells with axis 0 innermost so runs along axis 0 are contiguous.
    let mut out = Vec::new();
    let mut idx = vec![0usize; m];
    loop {
        let mut run: Option<Aabb> = None;
        for i0 in 0..counts[0] {
            idx[0] = i0;
            let lo: Vec<f64> = (0..m).map(|a| cuts[a][idx[a]]).collect();
            let hi: Vec<f64> = (0..m).map(|a| cuts[a][idx[a] + 1]).collect();
            let mid: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
            let covered = boxes.iter().any(|b| b.contains_half_open(&mid));
            match (&mut run, covered) {
                (Some(r), true) => r.hi[0] = hi[0],
                (None, true) => run = Some(Aabb { lo, hi }),
                (Some(_), false) => out.push(run.take().unwrap()),
                (None, false) => {}
            }
        }
        if let Some(r) = run.take() {
            out.push(r);
        }
        // odometer over axes 1..m
        let mut axis = 1;
        loop {
            if axis >= m {
                out.sort_by(|a, b| cmp_lex(&a.to_flat(), &b.to_flat()));
                return out;
            }
            idx[axis] += 1;
            if idx[axis] < counts[axis] {
                break;
            }
            idx[axis] = 0;
            axis += 1;
        }
    }
}

pub(crate) fn cmp_lex(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
