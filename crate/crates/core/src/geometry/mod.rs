//! Hadamard-manifold kernel.
//!
//! Three model spaces are supported: Euclidean space `R^n`, hyperbolic space
//! `H^n` in the Lorentz hyperboloid model, and finite products of those. All
//! of them are complete, simply connected and nonpositively curved, so `exp`
//! is a global diffeomorphism and `log` is defined everywhere.
//!
//! Points and tangent vectors carry ambient coordinates. Every manifold also
//! has an intrinsic chart (identity on `R^n`, the exponential chart at the
//! apex on `H^n`) that the set and grid code uses to describe regions. On
//! products of `R^n` and `H^1` factors the chart is an isometry onto flat
//! space, which is what [`Manifold::is_flat`] reports.

mod hyperbolic;
mod suite;

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use hyperbolic::lorentz;
pub use suite::{property_suite, SuiteReport};

/// Geometry tolerances, shared by validation and the property suites.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryConfig {
    /// `|<x,x>_L + 1|` allowed for hyperboloid points, relative to `max(1, x_{n+1}^2)`.
    pub point_tol: f64,
    /// `|<x,v>_L|` allowed for tangent vectors, relative to `max(1, |x||v|)`.
    pub tangent_tol: f64,
    /// exp/log round trip and `|log| = dist` agreement.
    pub roundtrip_tol: f64,
    /// Triangle inequality slack for sampled metric checks.
    pub triangle_tol: f64,
    /// Sign tolerance for the comparison slacks.
    pub comparison_tol: f64,
    /// Below this norm the hyperbolic exp switches to its Taylor series.
    pub series_threshold: f64,
    /// Two points closer than this count as coincident.
    pub coincidence_tol: f64,
}

pub const DEFAULT_GEOMETRY: GeometryConfig = GeometryConfig {
    point_tol: 1e-10,
    tangent_tol: 1e-10,
    roundtrip_tol: 1e-9,
    triangle_tol: 1e-12,
    comparison_tol: 1e-9,
    series_threshold: 1e-8,
    coincidence_tol: 1e-12,
};

impl Default for GeometryConfig {
    fn default() -> Self {
        DEFAULT_GEOMETRY
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid manifold descriptor: {0}")]
    InvalidDescriptor(String),
    #[error("coordinate length {got} does not match ambient dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point is not on the manifold: {0}")]
    NotOnManifold(String),
    #[error("vector is not tangent at its base point (residual {0:e})")]
    NotTangent(f64),
    #[error("operands live on different manifolds or base points")]
    DomainMismatch,
    #[error("degenerate input: {0}")]
    Degenerate(String),
}

/// Structural description of a manifold; this is also its serialized form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ManifoldDescriptor {
    Euclidean { n: usize },
    Hyperbolic { n: usize },
    Product { factors: Vec<ManifoldDescriptor> },
}

impl ManifoldDescriptor {
    pub fn euclidean(n: usize) -> Self {
        Self::Euclidean { n }
    }

    pub fn hyperbolic(n: usize) -> Self {
        Self::Hyperbolic { n }
    }

    pub fn product(factors: Vec<ManifoldDescriptor>) -> Self {
        Self::Product { factors }
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            Self::Euclidean { n } => *n,
            Self::Hyperbolic { n } => n + 1,
            Self::Product { factors } => factors.iter().map(Self::ambient_dim).sum(),
        }
    }

    pub fn intrinsic_dim(&self) -> usize {
        match self {
            Self::Euclidean { n } | Self::Hyperbolic { n } => *n,
            Self::Product { factors } => factors.iter().map(Self::intrinsic_dim).sum(),
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        match self {
            Self::Euclidean { n } | Self::Hyperbolic { n } if *n == 0 => {
                Err(GeometryError::InvalidDescriptor("dimension must be positive".into()))
            }
            Self::Euclidean { .. } | Self::Hyperbolic { .. } => Ok(()),
            Self::Product { factors } => {
                if factors.len() < 2 {
                    return Err(GeometryError::InvalidDescriptor("a product needs at least two factors".into()));
                }
                factors.iter().try_for_each(Self::validate)
            }
        }
    }
}

impl fmt::Display for ManifoldDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Euclidean { n } => write!(f, "R^{n}"),
            Self::Hyperbolic { n } => write!(f, "H^{n}"),
            Self::Product { factors } => {
                for (i, fac) in factors.iter().enumerate() {
                    if i > 0 {
                        write!(f, " x ")?;
                    }
                    write!(f, "{fac}")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BlockKind {
    Euclidean,
    Hyperbolic,
}

/// One leaf factor of a (possibly nested) product.
#[derive(Debug, Clone, Copy)]
struct Block {
    kind: BlockKind,
    n: usize,
    offset: usize,
    chart_offset: usize,
}

impl Block {
    fn ambient(&self) -> std::ops::Range<usize> {
        let len = match self.kind {
            BlockKind::Euclidean => self.n,
            BlockKind::Hyperbolic => self.n + 1,
        };
        self.offset..self.offset + len
    }

    fn chart(&self) -> std::ops::Range<usize> {
        self.chart_offset..self.chart_offset + self.n
    }
}

#[derive(Debug)]
struct Inner {
    descriptor: ManifoldDescriptor,
    blocks: Vec<Block>,
    ambient: usize,
    intrinsic: usize,
    config: GeometryConfig,
}

/// A validated manifold. Cheap to clone.
#[derive(Clone)]
pub struct Manifold(Arc<Inner>);

impl fmt::Debug for Manifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Manifold({})", self.0.descriptor)
    }
}

impl PartialEq for Manifold {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.descriptor == other.0.descriptor
    }
}

fn flatten(d: &ManifoldDescriptor, blocks: &mut Vec<Block>, off: &mut usize, coff: &mut usize) {
    match d {
        ManifoldDescriptor::Euclidean { n } => {
            blocks.push(Block { kind: BlockKind::Euclidean, n: *n, offset: *off, chart_offset: *coff });
            *off += n;
            *coff += n;
        }
        ManifoldDescriptor::Hyperbolic { n } => {
            blocks.push(Block { kind: BlockKind::Hyperbolic, n: *n, offset: *off, chart_offset: *coff });
            *off += n + 1;
            *coff += n;
        }
        ManifoldDescriptor::Product { factors } => {
            for f in factors {
                flatten(f, blocks, off, coff);
            }
        }
    }
}

impl Manifold {
    pub fn new(descriptor: ManifoldDescriptor) -> Result<Self, GeometryError> {
        Self::with_config(descriptor, DEFAULT_GEOMETRY)
    }

    pub fn with_config(descriptor: ManifoldDescriptor, config: GeometryConfig) -> Result<Self, GeometryError> {
        descriptor.validate()?;
        let mut blocks = Vec::new();
        let (mut off, mut coff) = (0, 0);
        flatten(&descriptor, &mut blocks, &mut off, &mut coff);
        Ok(Self(Arc::new(Inner { descriptor, blocks, ambient: off, intrinsic: coff, config })))
    }

    pub fn euclidean(n: usize) -> Self {
        Self::new(ManifoldDescriptor::euclidean(n)).expect("positive dimension")
    }

    pub fn hyperbolic(n: usize) -> Self {
        Self::new(ManifoldDescriptor::hyperbolic(n)).expect("positive dimension")
    }

    pub fn descriptor(&self) -> &ManifoldDescriptor {
        &self.0.descriptor
    }

    pub fn config(&self) -> &GeometryConfig {
        &self.0.config
    }

    pub fn ambient_dim(&self) -> usize {
        self.0.ambient
    }

    pub fn intrinsic_dim(&self) -> usize {
        self.0.intrinsic
    }

    /// True when the intrinsic chart is an isometry onto `R^d`, i.e. every
    /// factor is Euclidean or one-dimensional hyperbolic.
    pub fn is_flat(&self) -> bool {
        self.0.blocks.iter().all(|b| b.kind == BlockKind::Euclidean || b.n == 1)
    }

    /// Block layout of the intrinsic chart: `(is_hyperbolic, chart range)`
    /// per leaf factor.
    pub fn chart_blocks(&self) -> Vec<(bool, std::ops::Range<usize>)> {
        self.0.blocks.iter().map(|b| (b.kind == BlockKind::Hyperbolic, b.chart())).collect()
    }

    pub fn point(&self, coords: Vec<f64>) -> Result<ManifoldPoint, GeometryError> {
        self.check_len(coords.len())?;
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(GeometryError::NotOnManifold("non-finite coordinate".into()));
        }
        let tol = self.0.config.point_tol;
        for b in &self.0.blocks {
            if b.kind == BlockKind::Hyperbolic {
                let p = &coords[b.ambient()];
                let last = p[b.n];
                let q = lorentz(p, p);
                if last <= 0.0 {
                    return Err(GeometryError::NotOnManifold("time coordinate must be positive".into()));
                }
                if (q + 1.0).abs() > tol * last.powi(2).max(1.0) {
                    return Err(GeometryError::NotOnManifold(format!("<x,x>_L = {q} is not -1")));
                }
            }
        }
        Ok(ManifoldPoint { manifold: self.clone(), coords })
    }

    /// Point with the given intrinsic chart coordinates.
    pub fn point_from_chart(&self, u: &[f64]) -> Result<ManifoldPoint, GeometryError> {
        if u.len() != self.0.intrinsic {
            return Err(GeometryError::DimensionMismatch { expected: self.0.intrinsic, got: u.len() });
        }
        Ok(self.wrap(self.chart_raw(u)))
    }

    pub(crate) fn wrap(&self, coords: Vec<f64>) -> ManifoldPoint {
        debug_assert_eq!(coords.len(), self.0.ambient);
        ManifoldPoint { manifold: self.clone(), coords }
    }

    pub(crate) fn wrap_tangent(&self, base: &ManifoldPoint, coords: Vec<f64>) -> TangentVector {
        debug_assert_eq!(coords.len(), self.0.ambient);
        TangentVector { base: base.clone(), coords }
    }

    pub fn tangent(&self, base: &ManifoldPoint, coords: Vec<f64>) -> Result<TangentVector, GeometryError> {
        self.check_point(base)?;
        self.check_len(coords.len())?;
        let tol = self.0.config.tangent_tol;
        for b in &self.0.blocks {
            if b.kind == BlockKind::Hyperbolic {
                let r = b.ambient();
                let (x, v) = (&base.coords[r.clone()], &coords[r]);
                let res = lorentz(x, v).abs();
                let scale = (norm2(x) * norm2(v)).max(1.0);
                if res > tol * scale {
                    return Err(GeometryError::NotTangent(res));
                }
            }
        }
        Ok(TangentVector { base: base.clone(), coords })
    }

    pub fn zero_tangent(&self, base: &ManifoldPoint) -> TangentVector {
        TangentVector { base: base.clone(), coords: vec![0.0; self.0.ambient] }
    }

    fn check_len(&self, got: usize) -> Result<(), GeometryError> {
        if got != self.0.ambient {
            return Err(GeometryError::DimensionMismatch { expected: self.0.ambient, got });
        }
        Ok(())
    }

    fn check_point(&self, x: &ManifoldPoint) -> Result<(), GeometryError> {
        if &x.manifold != self {
            return Err(GeometryError::DomainMismatch);
        }
        Ok(())
    }

    fn check_tangent(&self, x: &ManifoldPoint, v: &TangentVector) -> Result<(), GeometryError> {
        self.check_point(x)?;
        if v.base.manifold != *self || v.base.coords != x.coords {
            return Err(GeometryError::DomainMismatch);
        }
        Ok(())
    }

    /// Riemannian metric at `x` on tangent vectors `u`, `v`.
    pub fn inner(&self, x: &ManifoldPoint, u: &TangentVector, v: &TangentVector) -> Result<f64, GeometryError> {
        self.check_tangent(x, u)?;
        self.check_tangent(x, v)?;
        Ok(self.inner_raw(&u.coords, &v.coords))
    }

    pub fn norm(&self, v: &TangentVector) -> f64 {
        self.inner_raw(&v.coords, &v.coords).max(0.0).sqrt()
    }

    pub fn exp(&self, x: &ManifoldPoint, v: &TangentVector) -> Result<ManifoldPoint, GeometryError> {
        self.check_tangent(x, v)?;
        Ok(self.wrap(self.exp_raw(&x.coords, &v.coords)))
    }

    pub fn log(&self, x: &ManifoldPoint, y: &ManifoldPoint) -> Result<TangentVector, GeometryError> {
        self.check_point(x)?;
        self.check_point(y)?;
        Ok(self.wrap_tangent(x, self.log_raw(&x.coords, &y.coords)))
    }

    pub fn dist(&self, x: &ManifoldPoint, y: &ManifoldPoint) -> Result<f64, GeometryError> {
        self.check_point(x)?;
        self.check_point(y)?;
        Ok(self.dist_raw(&x.coords, &y.coords))
    }

    /// Point at parameter `t` on the geodesic from `x` (t = 0) to `y` (t = 1).
    pub fn geodesic(&self, x: &ManifoldPoint, y: &ManifoldPoint, t: f64) -> Result<ManifoldPoint, GeometryError> {
        self.check_point(x)?;
        self.check_point(y)?;
        Ok(self.wrap(self.geodesic_raw(&x.coords, &y.coords, t)))
    }

    /// Slacks of the two comparison inequalities on the triangle
    /// `(x1, x2, x3)`:
    ///
    /// * `triangle = d²(x2,x3) + d²(x3,x1) - 2<log_{x3} x2, log_{x3} x1> - d²(x1,x2)`, `<= 0`;
    /// * `pair = <log_x z, log_x y> + <log_y z, log_y x> - d²(x,y)` with
    ///   `(x,y,z) = (x1,x2,x3)`, `>= 0`.
    pub fn comparison_slacks(
        &self,
        x1: &ManifoldPoint,
        x2: &ManifoldPoint,
        x3: &ManifoldPoint,
    ) -> Result<ComparisonSlacks, GeometryError> {
        for p in [x1, x2, x3] {
            self.check_point(p)?;
        }
        let (a, b, c) = (&x1.coords[..], &x2.coords[..], &x3.coords[..]);
        let d12 = self.dist_raw(a, b);
        let d23 = self.dist_raw(b, c);
        let d31 = self.dist_raw(c, a);
        if d12.min(d23).min(d31) <= self.0.config.coincidence_tol {
            return Err(GeometryError::Degenerate("coincident triangle vertices".into()));
        }
        let l32 = self.log_raw(c, b);
        let l31 = self.log_raw(c, a);
        let triangle = d23 * d23 + d31 * d31 - 2.0 * self.inner_raw(&l32, &l31) - d12 * d12;
        let l13 = self.log_raw(a, c);
        let l12 = self.log_raw(a, b);
        let l23 = self.log_raw(b, c);
        let l21 = self.log_raw(b, a);
        let pair = self.inner_raw(&l13, &l12) + self.inner_raw(&l23, &l21) - d12 * d12;
        Ok(ComparisonSlacks { triangle, pair })
    }

    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R, radius: f64) -> ManifoldPoint {
        let u: Vec<f64> = (0..self.0.intrinsic).map(|_| rng.random_range(-radius..=radius)).collect();
        self.wrap(self.chart_raw(&u))
    }

    /// Random tangent vector at `x` with norm uniform in `[0, max_norm]`.
    pub fn random_tangent<R: Rng + ?Sized>(&self, rng: &mut R, x: &ManifoldPoint, max_norm: f64) -> TangentVector {
        let mut v: Vec<f64> = (0..self.0.ambient).map(|_| rng.sample(StandardNormal)).collect();
        self.project_tangent_raw(&x.coords, &mut v);
        let n = self.inner_raw(&v, &v).max(0.0).sqrt();
        let target = rng.random_range(0.0..=max_norm);
        if n > 0.0 {
            v.iter_mut().for_each(|c| *c *= target / n);
        }
        self.wrap_tangent(x, v)
    }

    /// Largest `|<p,p>_L + 1|` over the hyperbolic blocks of `x` (0 on
    /// Euclidean spaces).
    pub fn hyperboloid_residual(&self, x: &ManifoldPoint) -> f64 {
        self.0
            .blocks
            .iter()
            .filter(|b| b.kind == BlockKind::Hyperbolic)
            .map(|b| {
                let p = &x.coords[b.ambient()];
                (lorentz(p, p) + 1.0).abs()
            })
            .fold(0.0, f64::max)
    }

    // Slice-level kernels. Callers guarantee matching lengths.

    pub(crate) fn inner_raw(&self, u: &[f64], v: &[f64]) -> f64 {
        let mut acc = 0.0;
        for b in &self.0.blocks {
            let r = b.ambient();
            acc += match b.kind {
                BlockKind::Euclidean => dot(&u[r.clone()], &v[r]),
                BlockKind::Hyperbolic => lorentz(&u[r.clone()], &v[r]),
            };
        }
        acc
    }

    pub(crate) fn dist_raw(&self, x: &[f64], y: &[f64]) -> f64 {
        if let [b] = self.0.blocks[..] {
            return match b.kind {
                BlockKind::Euclidean => euclid_dist(x, y),
                BlockKind::Hyperbolic => hyperbolic::dist(x, y),
            };
        }
        let mut acc = 0.0;
        for b in &self.0.blocks {
            let r = b.ambient();
            let d = match b.kind {
                BlockKind::Euclidean => euclid_dist(&x[r.clone()], &y[r]),
                BlockKind::Hyperbolic => hyperbolic::dist(&x[r.clone()], &y[r]),
            };
            acc += d * d;
        }
        acc.sqrt()
    }

    pub(crate) fn exp_raw(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        for b in &self.0.blocks {
            let r = b.ambient();
            match b.kind {
                BlockKind::Euclidean => {
                    for i in r {
                        out[i] = x[i] + v[i];
                    }
                }
                BlockKind::Hyperbolic => {
                    hyperbolic::exp(&x[r.clone()], &v[r.clone()], self.0.config.series_threshold, &mut out[r])
                }
            }
        }
        out
    }

    pub(crate) fn log_raw(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        for b in &self.0.blocks {
            let r = b.ambient();
            match b.kind {
                BlockKind::Euclidean => {
                    for i in r {
                        out[i] = y[i] - x[i];
                    }
                }
                BlockKind::Hyperbolic => hyperbolic::log(&x[r.clone()], &y[r.clone()], &mut out[r]),
            }
        }
        out
    }

    pub(crate) fn geodesic_raw(&self, x: &[f64], y: &[f64], t: f64) -> Vec<f64> {
        if t == 0.0 {
            return x.to_vec();
        }
        if t == 1.0 {
            return y.to_vec();
        }
        let mut v = self.log_raw(x, y);
        v.iter_mut().for_each(|c| *c *= t);
        self.exp_raw(x, &v)
    }

    pub(crate) fn project_tangent_raw(&self, x: &[f64], v: &mut [f64]) {
        for b in &self.0.blocks {
            if b.kind == BlockKind::Hyperbolic {
                let r = b.ambient();
                hyperbolic::project_tangent(&x[r.clone()], &mut v[r]);
            }
        }
    }

    pub(crate) fn chart_raw(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.0.ambient];
        for b in &self.0.blocks {
            let (r, c) = (b.ambient(), b.chart());
            match b.kind {
                BlockKind::Euclidean => out[r].copy_from_slice(&u[c]),
                BlockKind::Hyperbolic => hyperbolic::chart(&u[c], &mut out[r]),
            }
        }
        out
    }

    pub(crate) fn chart_inverse_raw(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.0.intrinsic];
        for b in &self.0.blocks {
            let (r, c) = (b.ambient(), b.chart());
            match b.kind {
                BlockKind::Euclidean => out[c].copy_from_slice(&x[r]),
                BlockKind::Hyperbolic => hyperbolic::chart_inverse(&x[r], &mut out[c]),
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSlacks {
    pub triangle: f64,
    pub pair: f64,
}

/// A point in ambient coordinates, tagged with its manifold.
#[derive(Clone, PartialEq)]
pub struct ManifoldPoint {
    manifold: Manifold,
    coords: Vec<f64>,
}

impl fmt::Debug for ManifoldPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.coords)
    }
}

impl ManifoldPoint {
    pub fn manifold(&self) -> &Manifold {
        &self.manifold
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn chart_coords(&self) -> Vec<f64> {
        self.manifold.chart_inverse_raw(&self.coords)
    }

    /// Distance to a point on the same manifold.
    ///
    /// # Panics
    /// If `other` lives on a different manifold.
    pub fn distance(&self, other: &ManifoldPoint) -> f64 {
        assert_eq!(self.manifold, other.manifold, "points on different manifolds");
        self.manifold.dist_raw(&self.coords, &other.coords)
    }

    /// `log_self(other)`; panics on manifold mismatch like [`Self::distance`].
    pub fn log_to(&self, other: &ManifoldPoint) -> TangentVector {
        assert_eq!(self.manifold, other.manifold, "points on different manifolds");
        self.manifold.wrap_tangent(self, self.manifold.log_raw(&self.coords, &other.coords))
    }

    /// `<log_self a, log_self b>`, the quantity behind every regularization
    /// and inconvenience term.
    pub fn log_inner(&self, a: &ManifoldPoint, b: &ManifoldPoint) -> f64 {
        let m = &self.manifold;
        let la = m.log_raw(&self.coords, &a.coords);
        let lb = m.log_raw(&self.coords, &b.coords);
        m.inner_raw(&la, &lb)
    }

    pub fn geodesic_to(&self, other: &ManifoldPoint, t: f64) -> ManifoldPoint {
        assert_eq!(self.manifold, other.manifold, "points on different manifolds");
        self.manifold.wrap(self.manifold.geodesic_raw(&self.coords, &other.coords, t))
    }
}

/// A tangent vector in ambient coordinates together with its base point.
#[derive(Clone, PartialEq)]
pub struct TangentVector {
    base: ManifoldPoint,
    coords: Vec<f64>,
}

impl fmt::Debug for TangentVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}@{:?}", self.coords, self.base.coords)
    }
}

impl TangentVector {
    pub fn base(&self) -> &ManifoldPoint {
        &self.base
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn norm(&self) -> f64 {
        self.base.manifold.norm(self)
    }

    pub fn scaled(&self, s: f64) -> TangentVector {
        TangentVector { base: self.base.clone(), coords: self.coords.iter().map(|c| c * s).collect() }
    }

    /// Sum of two vectors at the same base point.
    pub fn plus(&self, other: &TangentVector) -> Result<TangentVector, GeometryError> {
        if self.base != other.base {
            return Err(GeometryError::DomainMismatch);
        }
        let coords = self.coords.iter().zip(&other.coords).map(|(a, b)| a + b).collect();
        Ok(TangentVector { base: self.base.clone(), coords })
    }

    pub fn exp(&self) -> ManifoldPoint {
        let m = &self.base.manifold;
        m.wrap(m.exp_raw(&self.base.coords, &self.coords))
    }
}

fn manifold_of(x: &ManifoldPoint) -> &Manifold {
    &x.manifold
}

pub fn inner(x: &ManifoldPoint, u: &TangentVector, v: &TangentVector) -> Result<f64, GeometryError> {
    manifold_of(x).inner(x, u, v)
}

pub fn exp(x: &ManifoldPoint, v: &TangentVector) -> Result<ManifoldPoint, GeometryError> {
    manifold_of(x).exp(x, v)
}

pub fn log(x: &ManifoldPoint, y: &ManifoldPoint) -> Result<TangentVector, GeometryError> {
    manifold_of(x).log(x, y)
}

pub fn dist(x: &ManifoldPoint, y: &ManifoldPoint) -> Result<f64, GeometryError> {
    manifold_of(x).dist(x, y)
}

pub fn comparison_slacks(
    x1: &ManifoldPoint,
    x2: &ManifoldPoint,
    x3: &ManifoldPoint,
) -> Result<ComparisonSlacks, GeometryError> {
    manifold_of(x1).comparison_slacks(x1, x2, x3)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn euclid_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn h1() -> Manifold {
        Manifold::hyperbolic(1)
    }

    #[test]
    fn inner_examples() {
        let r2 = Manifold::euclidean(2);
        let x = r2.point(vec![0.0, 0.0]).unwrap();
        let u = r2.tangent(&x, vec![1.0, 0.0]).unwrap();
        let v = r2.tangent(&x, vec![0.0, 1.0]).unwrap();
        assert_eq!(inner(&x, &u, &v).unwrap(), 0.0);

        let h = h1();
        let x = h.point(vec![0.0, 1.0]).unwrap();
        let u = h.tangent(&x, vec![1.0, 0.0]).unwrap();
        assert_eq!(inner(&x, &u, &u).unwrap(), 1.0);

        let r1 = Manifold::euclidean(1);
        let x = r1.point(vec![0.5]).unwrap();
        let u = r1.tangent(&x, vec![1.0]).unwrap();
        assert_eq!(inner(&x, &u, &u).unwrap(), 1.0);
    }

    #[test]
    fn inner_rejects_mismatched_bases() {
        let r1 = Manifold::euclidean(1);
        let x = r1.point(vec![0.0]).unwrap();
        let y = r1.point(vec![1.0]).unwrap();
        let u = r1.tangent(&x, vec![1.0]).unwrap();
        let v = r1.tangent(&y, vec![1.0]).unwrap();
        assert_eq!(inner(&x, &u, &v), Err(GeometryError::DomainMismatch));
        let other = Manifold::euclidean(2).point(vec![0.0, 0.0]).unwrap();
        assert_eq!(dist(&x, &other), Err(GeometryError::DomainMismatch));
    }

    #[test]
    fn exp_examples() {
        let r2 = Manifold::euclidean(2);
        let x = r2.point(vec![1.0, 2.0]).unwrap();
        let v = r2.tangent(&x, vec![0.5, -1.0]).unwrap();
        assert_eq!(exp(&x, &v).unwrap().coords(), &[1.5, 1.0]);

        let h = h1();
        let x = h.point(vec![0.0, 1.0]).unwrap();
        let v = h.tangent(&x, vec![1.0, 0.0]).unwrap();
        let y = exp(&x, &v).unwrap();
        assert_abs_diff_eq!(y.coords()[0], 1f64.sinh(), epsilon = 1e-15);
        assert_abs_diff_eq!(y.coords()[1], 1f64.cosh(), epsilon = 1e-15);

        let z = h.zero_tangent(&x);
        assert_eq!(exp(&x, &z).unwrap(), x);
    }

    #[test]
    fn log_and_dist_examples() {
        let r2 = Manifold::euclidean(2);
        let x = r2.point(vec![0.0, 0.0]).unwrap();
        let y = r2.point(vec![3.0, 4.0]).unwrap();
        assert_eq!(log(&x, &y).unwrap().coords(), &[3.0, 4.0]);
        assert_eq!(log(&x, &x).unwrap().coords(), &[0.0, 0.0]);

        let h = h1();
        let x = h.point(vec![0.0, 1.0]).unwrap();
        let y = h.point(vec![1f64.sinh(), 1f64.cosh()]).unwrap();
        let v = log(&x, &y).unwrap();
        assert_abs_diff_eq!(v.coords()[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v.coords()[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v.norm(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(dist(&x, &y).unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(dist(&x, &x).unwrap(), 0.0);

        let r1 = Manifold::euclidean(1);
        let a = r1.point(vec![0.5]).unwrap();
        let b = r1.point(vec![7.0 / 12.0]).unwrap();
        assert_abs_diff_eq!(dist(&a, &b).unwrap(), 1.0 / 12.0, epsilon = 1e-15);
    }

    #[test]
    fn descriptor_validation_and_dims() {
        assert!(ManifoldDescriptor::product(vec![ManifoldDescriptor::euclidean(1)]).validate().is_err());
        assert!(ManifoldDescriptor::euclidean(0).validate().is_err());
        let d = ManifoldDescriptor::product(vec![ManifoldDescriptor::euclidean(1), ManifoldDescriptor::hyperbolic(1)]);
        assert_eq!(d.ambient_dim(), 3);
        assert_eq!(d.intrinsic_dim(), 2);
        let m = Manifold::new(d).unwrap();
        assert!(m.is_flat());
        assert!(!Manifold::hyperbolic(2).is_flat());
    }

    #[test]
    fn descriptor_serialized_form() {
        let d = ManifoldDescriptor::product(vec![ManifoldDescriptor::euclidean(1), ManifoldDescriptor::hyperbolic(1)]);
        let s = serde_json::to_string(&d).unwrap();
        assert_eq!(s, r#"{"kind":"product","factors":[{"kind":"euclidean","n":1},{"kind":"hyperbolic","n":1}]}"#);
        let back: ManifoldDescriptor = serde_json::from_str(&s).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn invalid_points_rejected() {
        let h = h1();
        assert!(h.point(vec![0.0, -1.0]).is_err());
        assert!(h.point(vec![1.0, 1.0]).is_err());
        assert!(h.point(vec![0.0]).is_err());
        let x = h.point(vec![0.0, 1.0]).unwrap();
        assert!(matches!(h.tangent(&x, vec![0.0, 1.0]), Err(GeometryError::NotTangent(_))));
    }

    #[test]
    fn comparison_slacks_flat_is_equality() {
        let r3 = Manifold::euclidean(3);
        let a = r3.point(vec![0.0, 1.0, 2.0]).unwrap();
        let b = r3.point(vec![-1.0, 0.5, 3.0]).unwrap();
        let c = r3.point(vec![2.0, 2.0, -1.0]).unwrap();
        let s = comparison_slacks(&a, &b, &c).unwrap();
        assert_abs_diff_eq!(s.triangle, 0.0, epsilon = 1e-12);
        assert!(matches!(comparison_slacks(&a, &a, &c), Err(GeometryError::Degenerate(_))));
    }

    #[test]
    fn product_distance_is_root_sum_of_squares() {
        let m = Manifold::new(ManifoldDescriptor::product(vec![
            ManifoldDescriptor::euclidean(1),
            ManifoldDescriptor::hyperbolic(1),
        ]))
        .unwrap();
        let x = m.point_from_chart(&[0.0, 0.0]).unwrap();
        let y = m.point_from_chart(&[3.0, 4.0]).unwrap();
        assert_abs_diff_eq!(dist(&x, &y).unwrap(), 5.0, epsilon = 1e-12);
    }
}
