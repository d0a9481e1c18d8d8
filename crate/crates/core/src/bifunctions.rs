//! Bifunctions `F(x, y)` on a convex domain, their regularization and
//! sampling-based property checkers.

use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, Manifold, ManifoldDescriptor, ManifoldPoint};
use crate::sets::{ConvexSet, FactorRange, SetDescriptor, SetError, DEFAULT_SAMPLING_CLIP};

/// Margin for strict sign tests in the property checkers.
pub const PROPERTY_TOL: f64 = 1e-10;
/// Diagonal tolerance for `F(x, x) = 0`.
pub const H1_TOL: f64 = 1e-12;
/// Midpoint convexity slack.
pub const CONVEXITY_TOL: f64 = 1e-9;
/// Pairs closer than this are skipped when estimating theta.
pub const THETA_MIN_DIST: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BifunctionError {
    #[error("unknown catalog entry `{0}`")]
    UnknownName(String),
    #[error("invalid bifunction: {0}")]
    Invalid(String),
    #[error("regularization needs lambda > 0, got {0}")]
    NonPositiveLambda(f64),
    #[error("regularization anchor is outside the domain")]
    AnchorOutsideDomain,
    #[error("checker needs at least one sample")]
    NoSamples,
    #[error(transparent)]
    Set(#[from] SetError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// A bifunction on a fixed manifold. Implementations must be pure.
pub trait Bifunction: Send + Sync + fmt::Debug {
    fn eval(&self, x: &ManifoldPoint, y: &ManifoldPoint) -> f64;

    /// A subgradient of `y -> F(x, y)` at `y = x`, as ambient tangent
    /// coordinates at `x`.
    fn direction(&self, _x: &ManifoldPoint) -> Option<Vec<f64>> {
        None
    }

    /// The exact resolvent `J_lambda(anchor)`, when one is known.
    fn closed_form_resolvent(&self, _lambda: f64, _anchor: &ManifoldPoint) -> Option<ManifoldPoint> {
        None
    }
}

/// A bifunction bundled with its domain.
#[derive(Clone)]
pub struct BifunctionHandle {
    inner: Arc<dyn Bifunction>,
    domain: ConvexSet,
    label: String,
}

impl fmt::Debug for BifunctionHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BifunctionHandle")
            .field("label", &self.label)
            .field("domain", &self.domain.descriptor())
            .finish()
    }
}

impl BifunctionHandle {
    pub fn new(f: impl Bifunction + 'static, domain: ConvexSet, label: impl Into<String>) -> Self {
        Self { inner: Arc::new(f), domain, label: label.into() }
    }

    /// Wraps a closure with no direction or closed-form resolvent.
    pub fn from_fn<G>(label: impl Into<String>, domain: ConvexSet, g: G) -> Self
    where
        G: Fn(&ManifoldPoint, &ManifoldPoint) -> f64 + Send + Sync + 'static,
    {
        Self::new(FnBifunction(Box::new(g)), domain, label)
    }

    pub fn eval(&self, x: &ManifoldPoint, y: &ManifoldPoint) -> f64 {
        self.inner.eval(x, y)
    }

    pub fn direction(&self, x: &ManifoldPoint) -> Option<Vec<f64>> {
        self.inner.direction(x)
    }

    pub fn closed_form_resolvent(&self, lambda: f64, anchor: &ManifoldPoint) -> Option<ManifoldPoint> {
        self.inner.closed_form_resolvent(lambda, anchor)
    }

    pub fn domain(&self) -> &ConvexSet {
        &self.domain
    }

    pub fn manifold(&self) -> &Manifold {
        self.domain.manifold()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `A = -F`, the advantage-to-change form.
    pub fn negated(&self) -> BifunctionHandle {
        BifunctionHandle {
            inner: Arc::new(Negated(self.clone())),
            domain: self.domain.clone(),
            label: format!("-({})", self.label),
        }
    }

    /// `F_{lambda,z}(x, y) = F(x, y) - lambda <log_x z, log_x y>`.
    pub fn regularize(&self, lambda: f64, z: &ManifoldPoint) -> Result<BifunctionHandle, BifunctionError> {
        if !(lambda > 0.0) {
            return Err(BifunctionError::NonPositiveLambda(lambda));
        }
        if !self.domain.contains(z)? {
            return Err(BifunctionError::AnchorOutsideDomain);
        }
        Ok(BifunctionHandle {
            inner: Arc::new(Regularized { base: self.clone(), lambda, anchor: z.clone() }),
            domain: self.domain.clone(),
            label: format!("{}[lambda={lambda}]", self.label),
        })
    }
}

struct FnBifunction(Box<dyn Fn(&ManifoldPoint, &ManifoldPoint) -> f64 + Send + Sync>);

impl fmt::Debug for FnBifunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("FnBifunction")
    }
}

impl Bifunction for FnBifunction {
    fn eval(&self, x: &ManifoldPoint, y: &ManifoldPoint) -> f64 {
        (self.0)(x, y)
    }
}

#[derive(Debug)]
struct Negated(BifunctionHandle);

impl Bifunction for Negated {
    fn eval(&self, x: &ManifoldPoint, y: &ManifoldPoint) -> f64 {
        -self.0.eval(x, y)
    }

    fn direction(&self, x: &ManifoldPoint) -> Option<Vec<f64>> {
        self.0.direction(x).map(|g| g.into_iter().map(|c| -c).collect())
    }
}

#[derive(Debug)]
struct Regularized {
    base: BifunctionHandle,
    lambda: f64,
    anchor: ManifoldPoint,
}

impl Bifunction for Regularized {
    fn eval(&self, x: &ManifoldPoint, y: &ManifoldPoint) -> f64 {
        self.base.eval(x, y) - self.lambda * x.log_inner(&self.anchor, y)
    }

    fn direction(&self, x: &ManifoldPoint) -> Option<Vec<f64>> {
        let g = self.base.direction(x)?;
        let l = x.log_to(&self.anchor);
        Some(g.iter().zip(l.coords()).map(|(a, b)| a - self.lambda * b).collect())
    }
}

// ---------------------------------------------------------------------------
// Catalog

/// Serialized catalog selection, as it appears in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum CatalogEntry {
    Example31,
    Example41,
    /// `F(x, y) = phi(y) - phi(x)`.
    Potential {
        phi: PotentialSpec,
        domain: SetDescriptor,
    },
    /// `F(x, y) = <M x + b, y - x>` on `R^n`.
    VectorField {
        matrix: Vec<Vec<f64>>,
        offset: Vec<f64>,
        domain: SetDescriptor,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    /// `phi(t) = c_0 + c_1 t + c_2 t^2 + ...` on `R`.
    Polynomial { coeffs: Vec<f64> },
    /// `phi(y) = scale * d(y, point)^power`, `power >= 1`.
    DistancePower {
        point: Vec<f64>,
        power: f64,
        #[serde(default = "one")]
        scale: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl CatalogEntry {
    pub fn build(&self) -> Result<BifunctionHandle, BifunctionError> {
        match self {
            CatalogEntry::Example31 => Ok(example31()),
            CatalogEntry::Example41 => Ok(example41()),
            CatalogEntry::Potential { phi, domain } => potential(phi.clone(), ConvexSet::from_descriptor(domain)?),
            CatalogEntry::VectorField { matrix, offset, domain } => {
                vector_field(matrix.clone(), offset.clone(), ConvexSet::from_descriptor(domain)?)
            }
        }
    }
}

/// Catalog lookup by name for the parameter-free entries.
pub fn make_catalog_bifunction(name: &str) -> Result<BifunctionHandle, BifunctionError> {
    match name {
        "example31" => Ok(example31()),
        "example41" => Ok(example41()),
        "potential" | "vector_field" => {
            Err(BifunctionError::Invalid(format!("`{name}` needs parameters; use a catalog entry")))
        }
        other => Err(BifunctionError::UnknownName(other.to_string())),
    }
}

pub fn example41_domain() -> ConvexSet {
    ConvexSet::interval(0.5, 1.0).expect("valid interval")
}

/// `[0, 1] x {t >= 0}` in `R x H^1`, with `H^1` parametrized by
/// `t -> (sinh t, cosh t)`.
pub fn example31_domain() -> ConvexSet {
    let m = Manifold::new(ManifoldDescriptor::product(vec![
        ManifoldDescriptor::euclidean(1),
        ManifoldDescriptor::hyperbolic(1),
    ]))
    .expect("valid product");
    ConvexSet::param_region(
        &m,
        vec![FactorRange::Box { lo: vec![0.0], hi: vec![1.0] }, FactorRange::Geodesic { t_lo: Some(0.0), t_hi: None }],
    )
    .expect("valid region")
}

/// `F(x, y) = x (x - y)` on `[1/2, 1]`.
pub fn example41() -> BifunctionHandle {
    BifunctionHandle::new(Example41 { domain: example41_domain() }, example41_domain(), "example41")
}

/// `F(p, q) = (2 - p_1) ((q_2^2 + q_3^2) - (p_2^2 + p_3^2))` on the
/// `R x H^1` region, coordinates `(p_1, p_2, p_3)` with `(p_2, p_3)` on `H^1`.
pub fn example31() -> BifunctionHandle {
    BifunctionHandle::new(Example31, example31_domain(), "example31")
}

#[derive(Debug)]
struct Example41 {
    domain: ConvexSet,
}

impl Bifunction for Example41 {
    fn eval(&self, x: &ManifoldPoint, y: &ManifoldPoint) -> f64 {
        let (x, y) = (x.coords()[0], y.coords()[0]);
        x * (x - y)
    }

    fn direction(&self, x: &ManifoldPoint) -> Option<Vec<f64>> {
        Some(vec![-x.coords()[0]])
    }

    /// The regularized bracket `(x - y)(x + lambda (a - x))` vanishes at
    /// `x = lambda a / (lambda - 1)`; clamping gives the resolvent. For
    /// `lambda <= 1` the bracket is positive and the resolvent is 1.
    fn closed_form_resolvent(&self, lambda: f64, anchor: &ManifoldPoint) -> Option<ManifoldPoint> {
        let a = anchor.coords()[0];
        let z = if lambda > 1.0 { (lambda * a / (lambda - 1.0)).clamp(0.5, 1.0) } else { 1.0 };
        self.domain.manifold().point(vec![z]).ok()
    }
}

#[derive(Debug)]
struct Example31;

impl Example31 {
    fn energy(p: &[f64]) -> f64 {
        p[1] * p[1] + p[2] * p[2]
    }
}

impl Bifunction for Example31 {
    fn eval(&self, x: &ManifoldPoint, y: &ManifoldPoint) -> f64 {
        let (p, q) = (x.coords(), y.coords());
        (2.0 - p[0]) * (Self::energy(q) - Self::energy(p))
    }

    fn direction(&self, x: &ManifoldPoint) -> Option<Vec<f64>> {
        let p = x.coords();
        // Lorentz gradient of y^2 + z^2 is (2y, -2z), then project to T_p H^1.
        let mut v = [2.0 * p[1], -2.0 * p[2]];
        let c = v[0] * p[1] - v[1] * p[2];
        v[0] += c * p[1];
        v[1] += c * p[2];
        let s = 2.0 - p[0];
        Some(vec![0.0, s * v[0], s * v[1]])
    }
}

pub fn potential(phi: PotentialSpec, domain: ConvexSet) -> Result<BifunctionHandle, BifunctionError> {
    let label = match &phi {
        PotentialSpec::Polynomial { coeffs } => format!("potential(poly {coeffs:?})"),
        PotentialSpec::DistancePower { power, scale, .. } => {
            format!("potential({scale} d^{power})")
        }
    };
    let f = match phi {
        PotentialSpec::Polynomial { coeffs } => {
            if domain.manifold().descriptor() != &ManifoldDescriptor::euclidean(1) {
                return Err(BifunctionError::Invalid("polynomial potentials live on R".into()));
            }
            if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
                return Err(BifunctionError::Invalid("polynomial needs finite coefficients".into()));
            }
            Potential::Polynomial { coeffs, domain: domain.clone() }
        }
        PotentialSpec::DistancePower { point, power, scale } => {
            if !(power >= 1.0) || !(scale > 0.0) {
                return Err(BifunctionError::Invalid("distance power needs power >= 1 and scale > 0".into()));
            }
            let point = domain.manifold().point(point)?;
            Potential::DistancePower { point, power, scale, domain: domain.clone() }
        }
    };
    Ok(BifunctionHandle::new(f, domain, label))
}

#[derive(Debug)]
enum Potential {
    Polynomial { coeffs: Vec<f64>, domain: ConvexSet },
    DistancePower { point: ManifoldPoint, power: f64, scale: f64, domain: ConvexSet },
}

fn horner(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

impl Potential {
    pub(crate) fn phi(&self, y: &ManifoldPoint) -> f64 {
        match self {
            Potential::Polynomial { coeffs, .. } => horner(coeffs, y.coords()[0]),
            Potential::DistancePower { point, power, scale, .. } => {
                let d = y.distance(point);
                scale * if *power == 1.0 { d } else { d.powf(*power) }
            }
        }
    }

    fn euclidean_interval(domain: &ConvexSet) -> Option<(f64, f64)> {
        match domain.descriptor() {
            SetDescriptor::Interval { lo, hi } => Some((*lo, *hi)),
            SetDescriptor::Box { lo, hi } if lo.len() == 1 => Some((lo[0], hi[0])),
            _ => None,
        }
    }
}

impl Bifunction for Potential {
    fn eval(&self, x: &ManifoldPoint, y: &ManifoldPoint) -> f64 {
        self.phi(y) - self.phi(x)
    }

    fn direction(&self, x: &ManifoldPoint) -> Option<Vec<f64>> {
        match self {
            Potential::Polynomial { coeffs, .. } => {
                let deriv: Vec<f64> = coeffs.iter().enumerate().skip(1).map(|(i, c)| i as f64 * c).collect();
                Some(vec![horner(&deriv, x.coords()[0])])
            }
            Potential::DistancePower { point, power, scale, .. } => {
                let d = x.distance(point);
                if d == 0.0 {
                    return Some(vec![0.0; x.coords().len()]);
                }
                // grad d^p = -p d^{p-2} log_x(point)
                let s = -scale * power * d.powf(power - 2.0);
                Some(x.log_to(point).coords().iter().map(|c| s * c).collect())
            }
        }
    }

    /// Resolvents in the cases where the regularized problem is the
    /// minimization of `phi(y) + (lambda / 2) |y - x|^2` with an explicit
    /// solution: quadratic polynomials on an interval, and squared or plain
    /// distance potentials on Euclidean boxes (plain distance in 1-D only).
    fn closed_form_resolvent(&self, lambda: f64, anchor: &ManifoldPoint) -> Option<ManifoldPoint> {
        match self {
            Potential::Polynomial { coeffs, domain } => {
                if coeffs.len() > 3 {
                    return None;
                }
                let (lo, hi) = Self::euclidean_interval(domain)?;
                let b = coeffs.get(1).copied().unwrap_or(0.0);
                let a = coeffs.get(2).copied().unwrap_or(0.0);
                if 2.0 * a + lambda <= 0.0 {
                    return None;
                }
                let x = anchor.coords()[0];
                let z = ((lambda * x - b) / (2.0 * a + lambda)).clamp(lo, hi);
                domain.manifold().point(vec![z]).ok()
            }
            Potential::DistancePower { point, power, scale, domain } => {
                let m = domain.manifold();
                if !matches!(m.descriptor(), ManifoldDescriptor::Euclidean { .. })
                    || !matches!(domain.descriptor(), SetDescriptor::Interval { .. } | SetDescriptor::Box { .. })
                {
                    return None;
                }
                let (x, p) = (anchor.coords(), point.coords());
                let target: Vec<f64> = if *power == 2.0 {
                    x.iter().zip(p).map(|(xi, pi)| (lambda * xi + 2.0 * scale * pi) / (lambda + 2.0 * scale)).collect()
                } else if *power == 1.0 && x.len() == 1 {
                    let r = x[0] - p[0];
                    let shrink = scale / lambda;
                    vec![p[0] + r.signum() * (r.abs() - shrink).max(0.0)]
                } else {
                    return None;
                };
                domain.project(&m.point(target).ok()?).ok()
            }
        }
    }
}

pub fn vector_field(
    matrix: Vec<Vec<f64>>,
    offset: Vec<f64>,
    domain: ConvexSet,
) -> Result<BifunctionHandle, BifunctionError> {
    let n = offset.len();
    if domain.manifold().descriptor() != &ManifoldDescriptor::euclidean(n) {
        return Err(BifunctionError::Invalid(format!("vector field of length {n} needs a domain on R^{n}")));
    }
    if matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
        return Err(BifunctionError::Invalid("vector field matrix must be n x n".into()));
    }
    Ok(BifunctionHandle::new(VectorField { matrix, offset }, domain, format!("vector_field(n={n})")))
}

#[derive(Debug)]
struct VectorField {
    matrix: Vec<Vec<f64>>,
    offset: Vec<f64>,
}

impl VectorField {
    fn value(&self, x: &[f64]) -> Vec<f64> {
        self.matrix
            .iter()
            .zip(&self.offset)
            .map(|(row, b)| row.iter().zip(x).map(|(m, xi)| m * xi).sum::<f64>() + b)
            .collect()
    }
}

impl Bifunction for VectorField {
    fn eval(&self, x: &ManifoldPoint, y: &ManifoldPoint) -> f64 {
        let (x, y) = (x.coords(), y.coords());
        self.value(x).iter().zip(x.iter().zip(y)).map(|(v, (a, b))| v * (b - a)).sum()
    }

    fn direction(&self, x: &ManifoldPoint) -> Option<Vec<f64>> {
        Some(self.value(x.coords()))
    }
}

// ---------------------------------------------------------------------------
// Property checkers

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Property {
    Monotone,
    Pseudomonotone,
    ThetaUndermonotone,
    ConvexInY,
    H1,
    Assumption1Segments,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    PassedOnSamples,
    CounterexampleFound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub property: Property,
    pub verdict: Verdict,
    /// Ambient coordinates of the violating pair.
    pub witness: Option<(Vec<f64>, Vec<f64>)>,
    /// Amount by which the witness violates the defining inequality.
    pub violation: Option<f64>,
    pub theta_estimate: Option<f64>,
    pub samples: usize,
    pub seed: u64,
}

impl PropertyReport {
    pub(crate) fn passed(property: Property, samples: usize, seed: u64) -> Self {
        Self {
            property,
            verdict: Verdict::PassedOnSamples,
            witness: None,
            violation: None,
            theta_estimate: None,
            samples,
            seed,
        }
    }

    pub(crate) fn failed(
        property: Property,
        x: &ManifoldPoint,
        y: &ManifoldPoint,
        violation: f64,
        samples: usize,
        seed: u64,
    ) -> Self {
        Self {
            property,
            verdict: Verdict::CounterexampleFound,
            witness: Some((x.coords().to_vec(), y.coords().to_vec())),
            violation: Some(violation),
            theta_estimate: None,
            samples,
            seed,
        }
    }

    pub fn passed_on_samples(&self) -> bool {
        self.verdict == Verdict::PassedOnSamples
    }
}

pub(crate) fn sampler(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn require_samples(samples: usize) -> Result<(), BifunctionError> {
    if samples == 0 {
        return Err(BifunctionError::NoSamples);
    }
    Ok(())
}

/// `|F(x, x)| <= 1e-12` on sampled `x`.
pub fn check_h1(f: &BifunctionHandle, samples: usize, seed: u64) -> Result<PropertyReport, BifunctionError> {
    require_samples(samples)?;
    let mut rng = sampler(seed);
    for _ in 0..samples {
        let x = f.domain().sample(&mut rng, DEFAULT_SAMPLING_CLIP);
        let v = f.eval(&x, &x).abs();
        if v > H1_TOL {
            return Ok(PropertyReport::failed(Property::H1, &x, &x, v, samples, seed));
        }
    }
    Ok(PropertyReport::passed(Property::H1, samples, seed))
}

/// `F(x, y) + F(y, x) <= 1e-10` on sampled pairs.
pub fn check_monotone(f: &BifunctionHandle, samples: usize, seed: u64) -> Result<PropertyReport, BifunctionError> {
    require_samples(samples)?;
    let mut rng = sampler(seed);
    let dom = f.domain();
    for _ in 0..samples {
        let x = dom.sample(&mut rng, DEFAULT_SAMPLING_CLIP);
        let y = dom.sample(&mut rng, DEFAULT_SAMPLING_CLIP);
        let s = f.eval(&x, &y) + f.eval(&y, &x);
        if s > PROPERTY_TOL {
            return Ok(PropertyReport::failed(Property::Monotone, &x, &y, s, samples, seed));
        }
    }
    Ok(PropertyReport::passed(Property::Monotone, samples, seed))
}

/// `F(x, y) >= 0  =>  F(y, x) <= 1e-10`, tested in both orders of each pair.
pub fn check_pseudomonotone(
    f: &BifunctionHandle,
    samples: usize,
    seed: u64,
) -> Result<PropertyReport, BifunctionError> {
    require_samples(samples)?;
    let mut rng = sampler(seed);
    let dom = f.domain();
    for _ in 0..samples {
        let x = dom.sample(&mut rng, DEFAULT_SAMPLING_CLIP);
        let y = dom.sample(&mut rng, DEFAULT_SAMPLING_CLIP);
        let (fxy, fyx) = (f.eval(&x, &y), f.eval(&y, &x));
        if fxy >= 0.0 && fyx > PROPERTY_TOL {
            return Ok(PropertyReport::failed(Property::Pseudomonotone, &x, &y, fyx, samples, seed));
        }
        if fyx >= 0.0 && fxy > PROPERTY_TOL {
            return Ok(PropertyReport::failed(Property::Pseudomonotone, &y, &x, fxy, samples, seed));
        }
    }
    Ok(PropertyReport::passed(Property::Pseudomonotone, samples, seed))
}

/// `max (F(x,y) + F(y,x)) / d^2(x,y)` over sampled pairs, clamped below at 0.
pub fn estimate_theta(f: &BifunctionHandle, samples: usize, seed: u64) -> Result<PropertyReport, BifunctionError> {
    require_samples(samples)?;
    let mut rng = sampler(seed);
    let dom = f.domain();
    let mut theta: f64 = 0.0;
    for _ in 0..samples {
        let x = dom.sample(&mut rng, DEFAULT_SAMPLING_CLIP);
        let y = dom.sample(&mut rng, DEFAULT_SAMPLING_CLIP);
        let d = x.distance(&y);
        if d < THETA_MIN_DIST {
            continue;
        }
        theta = theta.max((f.eval(&x, &y) + f.eval(&y, &x)) / (d * d));
    }
    let mut r = PropertyReport::passed(Property::ThetaUndermonotone, samples, seed);
    r.theta_estimate = Some(theta);
    Ok(r)
}

/// Geodesic midpoint test `F(x, m) <= (F(x, y1) + F(x, y2)) / 2 + 1e-9`.
pub fn check_convexity_in_y(
    f: &BifunctionHandle,
    samples: usize,
    seed: u64,
) -> Result<PropertyReport, BifunctionError> {
    require_samples(samples)?;
    let mut rng = sampler(seed);
    let dom = f.domain();
    for _ in 0..samples {
        let x = dom.sample(&mut rng, DEFAULT_SAMPLING_CLIP);
        let y1 = dom.sample(&mut rng, DEFAULT_SAMPLING_CLIP);
        let y2 = dom.sample(&mut rng, DEFAULT_SAMPLING_CLIP);
        let mid = y1.geodesic_to(&y2, 0.5);
        let excess = f.eval(&x, &mid) - 0.5 * (f.eval(&x, &y1) + f.eval(&x, &y2));
        if excess > CONVEXITY_TOL {
            return Ok(PropertyReport::failed(Property::ConvexInY, &x, &mid, excess, samples, seed));
        }
    }
    Ok(PropertyReport::passed(Property::ConvexInY, samples, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn r1(x: f64) -> ManifoldPoint {
        Manifold::euclidean(1).point(vec![x]).unwrap()
    }

    fn h1_point(m: &Manifold, a: f64, t: f64) -> ManifoldPoint {
        m.point(vec![a, t.sinh(), t.cosh()]).unwrap()
    }

    #[test]
    fn example41_values() {
        let f = example41();
        assert_eq!(f.eval(&r1(0.5), &r1(1.0)), -0.25);
        assert_eq!(f.eval(&r1(0.8), &r1(0.8)), 0.0);
    }

    #[test]
    fn example31_equilibrium_sign() {
        let f = example31();
        let m = f.manifold().clone();
        let xs = m.point(vec![1.0, 0.0, 1.0]).unwrap();
        for t in [0.0, 0.3, 1.0, 2.5] {
            let y = h1_point(&m, 0.4, t);
            let v = f.eval(&xs, &y);
            assert!(v >= 0.0);
            assert_abs_diff_eq!(v, (2.0 * t).cosh() - 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn example31_direction_is_tangent_and_matches_difference_quotient() {
        let f = example31();
        let m = f.manifold().clone();
        let x = h1_point(&m, 0.25, 0.7);
        let g = f.direction(&x).unwrap();
        let v = m.tangent(&x, vec![0.3, 0.7f64.cosh() * 0.5, 0.7f64.sinh() * 0.5]).unwrap();
        let h = 1e-6;
        let y = v.scaled(h).exp();
        let fd = f.eval(&x, &y) / h;
        let ip = m.inner(&x, &m.tangent(&x, g).unwrap(), &v).unwrap();
        assert_abs_diff_eq!(fd, ip, epsilon = 1e-5);
    }

    #[test]
    fn regularized_example41_vanishes_at_resolvent() {
        let f = example41();
        let fr = f.regularize(7.0, &r1(0.5)).unwrap();
        for y in [0.5, 0.6, 0.9, 1.0] {
            assert_abs_diff_eq!(fr.eval(&r1(7.0 / 12.0), &r1(y)), 0.0, epsilon = 1e-15);
        }
        assert_eq!(fr.eval(&r1(0.7), &r1(0.7)), 0.0);
        assert!(matches!(f.regularize(0.0, &r1(0.5)), Err(BifunctionError::NonPositiveLambda(_))));
        assert_eq!(f.regularize(1.0, &r1(2.0)).unwrap_err(), BifunctionError::AnchorOutsideDomain);
    }

    #[test]
    fn regularized_vector_field_shifts_value() {
        let dom = ConvexSet::boxed(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let f = vector_field(vec![vec![1.0, 2.0], vec![0.0, 3.0]], vec![0.5, -0.5], dom).unwrap();
        let m = f.manifold().clone();
        let z = m.point(vec![0.2, -0.4]).unwrap();
        let x = m.point(vec![0.6, 0.1]).unwrap();
        let fr = f.regularize(3.0, &z).unwrap();
        let v = f.direction(&x).unwrap();
        let shifted: Vec<f64> = (0..2).map(|i| v[i] - 3.0 * (z.coords()[i] - x.coords()[i])).collect();
        assert_eq!(fr.direction(&x).unwrap(), shifted);
        let y = m.point(vec![-0.3, 0.9]).unwrap();
        let expect: f64 = (0..2).map(|i| shifted[i] * (y.coords()[i] - x.coords()[i])).sum();
        assert_abs_diff_eq!(fr.eval(&x, &y), expect, epsilon = 1e-14);
    }

    #[test]
    fn example41_bracket_zero_matches_resolvent_map() {
        let f = example41();
        for &lambda in &[1.5, 2.0, 7.0, 30.0] {
            for &z in &[0.5, 0.55, 0.7] {
                let r = f.closed_form_resolvent(lambda, &r1(z)).unwrap().coords()[0];
                let root = lambda * z / (lambda - 1.0);
                assert_abs_diff_eq!(r, root.clamp(0.5, 1.0), epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn catalog_lookup() {
        assert!(make_catalog_bifunction("example41").is_ok());
        assert_eq!(make_catalog_bifunction("nope").unwrap_err(), BifunctionError::UnknownName("nope".into()));
        let e: CatalogEntry = serde_json::from_str(
            r#"{"name":"potential","phi":{"kind":"polynomial","coeffs":[0,0,1]},"domain":{"kind":"interval","lo":-1,"hi":1}}"#,
        )
        .unwrap();
        let f = e.build().unwrap();
        assert_eq!(f.eval(&r1(0.5), &r1(-1.0)), 0.75);
    }

    #[test]
    fn property_reports_example41() {
        let f = example41();
        assert_eq!(check_monotone(&f, 1000, 1).unwrap().verdict, Verdict::CounterexampleFound);
        assert!(check_pseudomonotone(&f, 1000, 1).unwrap().passed_on_samples());
        let t = estimate_theta(&f, 1000, 1).unwrap().theta_estimate.unwrap();
        assert_abs_diff_eq!(t, 1.0, epsilon = 1e-9);
        assert!(check_convexity_in_y(&f, 1000, 1).unwrap().passed_on_samples());
        assert!(check_h1(&f, 1000, 1).unwrap().passed_on_samples());
    }

    #[test]
    fn potential_is_monotone_with_zero_sum() {
        let dom = ConvexSet::boxed(vec![-2.0, -2.0], vec![2.0, 2.0]).unwrap();
        let f = potential(PotentialSpec::DistancePower { point: vec![0.3, 0.1], power: 2.0, scale: 1.5 }, dom).unwrap();
        let r = check_monotone(&f, 500, 9).unwrap();
        assert!(r.passed_on_samples());
        assert!(check_convexity_in_y(&f, 500, 9).unwrap().passed_on_samples());
    }

    #[test]
    fn counterexample_witness_violates_by_margin() {
        let f = example31();
        let r = check_monotone(&f, 1000, 4).unwrap();
        let (x, y) = r.witness.clone().unwrap();
        let m = f.manifold();
        let (x, y) = (m.point(x).unwrap(), m.point(y).unwrap());
        assert!(f.eval(&x, &y) + f.eval(&y, &x) > PROPERTY_TOL);
    }
}
