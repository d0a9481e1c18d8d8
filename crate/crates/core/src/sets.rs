//! Closed geodesically convex subsets of a manifold.
//!
//! Box-like sets are stored in intrinsic chart coordinates. They require a
//! flat manifold (Euclidean factors and `H^1` factors only), where the chart
//! is an isometry and clamping the chart coordinates is the exact metric
//! projection. Geodesic balls work on every supported manifold.

use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, Manifold, ManifoldDescriptor, ManifoldPoint};

/// Slack allowed on the boundary by [`ConvexSet::contains`].
pub const BOUNDARY_TOL: f64 = 1e-10;
/// Half-width used when sampling or gridding along an unbounded chart axis.
pub const DEFAULT_SAMPLING_CLIP: f64 = 3.0;

const INTERSECTION_MAX_SWEEPS: usize = 500;
const INTERSECTION_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SetError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("point and set live on different manifolds")]
    ManifoldMismatch,
    #[error("unsupported set: {0}")]
    Unsupported(String),
    #[error("invalid set: {0}")]
    Invalid(String),
}

/// Serialized form of a set, as it appears in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SetDescriptor {
    /// `[lo, hi]` on `R`.
    Interval {
        lo: f64,
        hi: f64,
    },
    /// Axis-aligned box on `R^n`.
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    GeodesicBall {
        manifold: ManifoldDescriptor,
        center: Vec<f64>,
        radius: f64,
    },
    /// Factor-wise product of boxes (Euclidean factors) and geodesic-coordinate
    /// ranges (`H^1` factors, chart `t -> (sinh t, cosh t)`).
    ParamRegion {
        manifold: ManifoldDescriptor,
        factors: Vec<FactorRange>,
    },
    Intersection {
        sets: Vec<SetDescriptor>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FactorRange {
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    /// `t_lo <= t <= t_hi`; a missing bound is unbounded.
    Geodesic {
        #[serde(default)]
        t_lo: Option<f64>,
        #[serde(default)]
        t_hi: Option<f64>,
    },
}

#[derive(Debug, Clone)]
enum Shape {
    ChartBox { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: ManifoldPoint, radius: f64 },
    Intersection(Vec<ConvexSet>),
}

#[derive(Debug, Clone)]
pub struct ConvexSet {
    manifold: Manifold,
    shape: Shape,
    descriptor: SetDescriptor,
}

impl fmt::Display for ConvexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.shape {
            Shape::ChartBox { lo, hi } => write!(f, "box {lo:?}..{hi:?} on {}", self.manifold.descriptor()),
            Shape::Ball { center, radius } => write!(f, "ball({center:?}, {radius})"),
            Shape::Intersection(s) => {
                write!(f, "intersection of {} sets", s.len())
            }
        }
    }
}

fn check_bounds(lo: &[f64], hi: &[f64]) -> Result<(), SetError> {
    if lo.len() != hi.len() {
        return Err(SetError::Invalid("bound lengths differ".into()));
    }
    for (a, b) in lo.iter().zip(hi) {
        if a.is_nan() || b.is_nan() || a > b {
            return Err(SetError::Invalid(format!("empty range [{a}, {b}]")));
        }
    }
    Ok(())
}

impl ConvexSet {
    pub fn interval(lo: f64, hi: f64) -> Result<Self, SetError> {
        check_bounds(&[lo], &[hi])?;
        if !lo.is_finite() || !hi.is_finite() {
            return Err(SetError::Invalid("interval bounds must be finite".into()));
        }
        Ok(Self {
            manifold: Manifold::euclidean(1),
            shape: Shape::ChartBox { lo: vec![lo], hi: vec![hi] },
            descriptor: SetDescriptor::Interval { lo, hi },
        })
    }

    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, SetError> {
        check_bounds(&lo, &hi)?;
        if lo.is_empty() || lo.iter().chain(&hi).any(|c| !c.is_finite()) {
            return Err(SetError::Invalid("box bounds must be finite and nonempty".into()));
        }
        Ok(Self {
            manifold: Manifold::euclidean(lo.len()),
            shape: Shape::ChartBox { lo: lo.clone(), hi: hi.clone() },
            descriptor: SetDescriptor::Box { lo, hi },
        })
    }

    pub fn ball(center: ManifoldPoint, radius: f64) -> Result<Self, SetError> {
        if !(radius >= 0.0) || !radius.is_finite() {
            return Err(SetError::Invalid(format!("ball radius {radius}")));
        }
        Ok(Self {
            manifold: center.manifold().clone(),
            descriptor: SetDescriptor::GeodesicBall {
                manifold: center.manifold().descriptor().clone(),
                center: center.coords().to_vec(),
                radius,
            },
            shape: Shape::Ball { center, radius },
        })
    }

    pub fn param_region(manifold: &Manifold, factors: Vec<FactorRange>) -> Result<Self, SetError> {
        let leaves: Vec<&ManifoldDescriptor> = match manifold.descriptor() {
            ManifoldDescriptor::Product { factors } => factors.iter().collect(),
            d => vec![d],
        };
        if leaves.len() != factors.len() {
            return Err(SetError::Invalid(format!("{} factor ranges for {} factors", factors.len(), leaves.len())));
        }
        let (mut lo, mut hi) = (Vec::new(), Vec::new());
        for (leaf, range) in leaves.iter().zip(&factors) {
            match (leaf, range) {
                (ManifoldDescriptor::Euclidean { n }, FactorRange::Box { lo: l, hi: h }) => {
                    if l.len() != *n {
                        return Err(SetError::Invalid("box range has wrong length".into()));
                    }
                    check_bounds(l, h)?;
                    lo.extend_from_slice(l);
                    hi.extend_from_slice(h);
                }
                (ManifoldDescriptor::Hyperbolic { n: 1 }, FactorRange::Geodesic { t_lo, t_hi }) => {
                    let l = t_lo.unwrap_or(f64::NEG_INFINITY);
                    let h = t_hi.unwrap_or(f64::INFINITY);
                    check_bounds(&[l], &[h])?;
                    lo.push(l);
                    hi.push(h);
                }
                _ => {
                    return Err(SetError::Unsupported(format!(
                        "factor range {range:?} on {leaf}; only R^n boxes and H^1 ranges are supported"
                    )))
                }
            }
        }
        Ok(Self {
            manifold: manifold.clone(),
            shape: Shape::ChartBox { lo, hi },
            descriptor: SetDescriptor::ParamRegion { manifold: manifold.descriptor().clone(), factors },
        })
    }

    pub fn intersection(sets: Vec<ConvexSet>) -> Result<Self, SetError> {
        let first = sets.first().ok_or_else(|| SetError::Invalid("empty intersection list".into()))?;
        let manifold = first.manifold.clone();
        if sets.iter().any(|s| s.manifold != manifold) {
            return Err(SetError::ManifoldMismatch);
        }
        Ok(Self {
            manifold,
            descriptor: SetDescriptor::Intersection { sets: sets.iter().map(|s| s.descriptor.clone()).collect() },
            shape: Shape::Intersection(sets),
        })
    }

    pub fn from_descriptor(d: &SetDescriptor) -> Result<Self, SetError> {
        match d {
            SetDescriptor::Interval { lo, hi } => Self::interval(*lo, *hi),
            SetDescriptor::Box { lo, hi } => Self::boxed(lo.clone(), hi.clone()),
            SetDescriptor::GeodesicBall { manifold, center, radius } => {
                let m = Manifold::new(manifold.clone())?;
                Self::ball(m.point(center.clone())?, *radius)
            }
            SetDescriptor::ParamRegion { manifold, factors } => {
                Self::param_region(&Manifold::new(manifold.clone())?, factors.clone())
            }
            SetDescriptor::Intersection { sets } => {
                Self::intersection(sets.iter().map(Self::from_descriptor).collect::<Result<_, _>>()?)
            }
        }
    }

    pub fn descriptor(&self) -> &SetDescriptor {
        &self.descriptor
    }

    pub fn manifold(&self) -> &Manifold {
        &self.manifold
    }

    pub fn is_compact(&self) -> bool {
        match &self.shape {
            Shape::ChartBox { lo, hi } => lo.iter().chain(hi).all(|c| c.is_finite()),
            Shape::Ball { .. } => true,
            Shape::Intersection(s) => s.iter().any(ConvexSet::is_compact),
        }
    }

    fn check(&self, x: &ManifoldPoint) -> Result<(), SetError> {
        if x.manifold() != &self.manifold {
            return Err(SetError::ManifoldMismatch);
        }
        Ok(())
    }

    pub fn contains(&self, x: &ManifoldPoint) -> Result<bool, SetError> {
        self.check(x)?;
        Ok(self.contains_with(x, BOUNDARY_TOL))
    }

    pub(crate) fn contains_with(&self, x: &ManifoldPoint, tol: f64) -> bool {
        match &self.shape {
            Shape::ChartBox { lo, hi } => {
                let u = x.chart_coords();
                u.iter().zip(lo.iter().zip(hi)).all(|(c, (l, h))| *c >= l - tol && *c <= h + tol)
            }
            Shape::Ball { center, radius } => center.distance(x) <= radius + tol,
            Shape::Intersection(sets) => sets.iter().all(|s| s.contains_with(x, tol)),
        }
    }

    /// Metric projection. For intersections this runs Dykstra's method in
    /// chart coordinates on flat manifolds and plain alternating projections
    /// otherwise (the latter returns a feasible point, not necessarily the
    /// nearest one).
    pub fn project(&self, x: &ManifoldPoint) -> Result<ManifoldPoint, SetError> {
        self.check(x)?;
        self.project_point(x)
    }

    fn project_point(&self, x: &ManifoldPoint) -> Result<ManifoldPoint, SetError> {
        if self.contains_with(x, 0.0) {
            return Ok(x.clone());
        }
        match &self.shape {
            Shape::ChartBox { lo, hi } => {
                if !self.manifold.is_flat() {
                    return Err(SetError::Unsupported("chart boxes need a flat manifold".into()));
                }
                let u: Vec<f64> =
                    x.chart_coords().iter().zip(lo.iter().zip(hi)).map(|(c, (l, h))| c.clamp(*l, *h)).collect();
                Ok(self.manifold.point_from_chart(&u)?)
            }
            Shape::Ball { center, radius } => {
                let d = center.distance(x);
                Ok(center.geodesic_to(x, radius / d))
            }
            Shape::Intersection(sets) => {
                if self.manifold.is_flat() {
                    self.dykstra(sets, x)
                } else {
                    Self::alternating(sets, x)
                }
            }
        }
    }

    fn dykstra(&self, sets: &[ConvexSet], x: &ManifoldPoint) -> Result<ManifoldPoint, SetError> {
        let m = &self.manifold;
        let mut u = x.chart_coords();
        let mut incr = vec![vec![0.0; u.len()]; sets.len()];
        for _ in 0..INTERSECTION_MAX_SWEEPS {
            let start = u.clone();
            for (s, p) in sets.iter().zip(incr.iter_mut()) {
                let shifted: Vec<f64> = u.iter().zip(p.iter()).map(|(a, b)| a + b).collect();
                let proj = s.project_point(&m.point_from_chart(&shifted)?)?.chart_coords();
                for i in 0..u.len() {
                    p[i] = shifted[i] - proj[i];
                }
                u = proj;
            }
            let change = start.iter().zip(&u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if change <= INTERSECTION_TOL {
                break;
            }
        }
        Ok(m.point_from_chart(&u)?)
    }

    fn alternating(sets: &[ConvexSet], x: &ManifoldPoint) -> Result<ManifoldPoint, SetError> {
        let mut p = x.clone();
        for _ in 0..INTERSECTION_MAX_SWEEPS {
            let start = p.clone();
            for s in sets {
                p = s.project_point(&p)?;
            }
            if start.distance(&p) <= INTERSECTION_TOL {
                break;
            }
        }
        Ok(p)
    }

    /// `inf_{y in S} d(x, y)`; exactly zero on members.
    pub fn distance_to(&self, x: &ManifoldPoint) -> Result<f64, SetError> {
        if self.contains(x)? {
            return Ok(0.0);
        }
        Ok(x.distance(&self.project_point(x)?))
    }

    /// Per-axis chart bounds of the set, unbounded axes clipped to width `clip`.
    pub fn chart_bounds(&self, clip: f64) -> Vec<(f64, f64)> {
        match &self.shape {
            Shape::ChartBox { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(l, h)| match (l.is_finite(), h.is_finite()) {
                    (true, true) => (*l, *h),
                    (true, false) => (*l, l + clip),
                    (false, true) => (h - clip, *h),
                    (false, false) => (-clip, clip),
                })
                .collect(),
            Shape::Ball { center, radius } => {
                let u = center.chart_coords();
                if self.manifold.is_flat() {
                    return u.iter().map(|c| (c - radius, c + radius)).collect();
                }
                let mut out = vec![(0.0, 0.0); u.len()];
                for (hyp, r) in self.manifold.chart_blocks() {
                    if hyp {
                        let d0 = u[r.clone()].iter().map(|c| c * c).sum::<f64>().sqrt();
                        for i in r {
                            out[i] = (-(d0 + radius), d0 + radius);
                        }
                    } else {
                        for i in r {
                            out[i] = (u[i] - radius, u[i] + radius);
                        }
                    }
                }
                out
            }
            Shape::Intersection(sets) => {
                let mut it = sets.iter().map(|s| s.chart_bounds(clip));
                let mut acc = it.next().expect("nonempty intersection");
                for b in it {
                    for (a, c) in acc.iter_mut().zip(b) {
                        a.0 = a.0.max(c.0);
                        a.1 = a.1.min(c.1);
                    }
                }
                acc
            }
        }
    }

    /// Random member. Unbounded chart axes are sampled within `clip` of
    /// their finite end (or of the origin).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, clip: f64) -> ManifoldPoint {
        match &self.shape {
            Shape::ChartBox { .. } => {
                let u: Vec<f64> = self
                    .chart_bounds(clip)
                    .into_iter()
                    .map(|(l, h)| if l == h { l } else { rng.random_range(l..=h) })
                    .collect();
                self.manifold.wrap(self.manifold.chart_raw(&u))
            }
            Shape::Ball { center, radius } => {
                let m = &self.manifold;
                let mut v: Vec<f64> = (0..m.ambient_dim()).map(|_| rng.sample(StandardNormal)).collect();
                m.project_tangent_raw(center.coords(), &mut v);
                let n = m.inner_raw(&v, &v).max(0.0).sqrt();
                let dim = m.intrinsic_dim() as f64;
                let rho = radius * rng.random_range(0.0f64..=1.0).powf(1.0 / dim);
                if n > 0.0 {
                    v.iter_mut().for_each(|c| *c *= rho / n);
                }
                let p = m.wrap(m.exp_raw(center.coords(), &v));
                if self.contains_with(&p, 0.0) {
                    p
                } else {
                    self.project_point(&p).unwrap_or(p)
                }
            }
            Shape::Intersection(sets) => {
                for _ in 0..64 {
                    for s in sets {
                        let p = s.sample(rng, clip);
                        if self.contains_with(&p, 0.0) {
                            return p;
                        }
                    }
                }
                let p = sets[0].sample(rng, clip);
                self.project_point(&p).unwrap_or(p)
            }
        }
    }
}
