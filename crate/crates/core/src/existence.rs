//! Gap function, brute-force equilibrium oracle, truncated domains and
//! empirical checks of the existence assumptions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bifunctions::{sampler, BifunctionError, BifunctionHandle, Property, PropertyReport, PROPERTY_TOL};
use crate::geometry::ManifoldPoint;
use crate::sets::{ConvexSet, SetError, BOUNDARY_TOL, DEFAULT_SAMPLING_CLIP};

/// `F(z^k, x*) <= ASSUMPTION2_TOL` counts as nonpositive.
pub const ASSUMPTION2_TOL: f64 = 1e-10;
/// `F(x, y0) < -COERCIVITY_TOL` counts as strictly negative.
pub const COERCIVITY_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExistenceError {
    #[error("grid has no nodes inside the domain")]
    EmptyGrid,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("point is outside the domain")]
    NotInDomain,
    #[error("insufficient evidence: {0}")]
    InsufficientEvidence(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Set(#[from] SetError),
    #[error(transparent)]
    Bifunction(#[from] BifunctionError),
}

/// Tensor grid in intrinsic chart coordinates (geodesic coordinates on
/// `H^1` factors).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// One entry per chart axis, or a single entry used for every axis.
    pub points_per_axis: Vec<usize>,
    /// Chart box; defaults to the domain's chart bounds.
    #[serde(default)]
    pub bounds: Option<Vec<(f64, f64)>>,
    /// Width used for unbounded axes when `bounds` is absent.
    #[serde(default = "default_clip")]
    pub clip: f64,
}

fn default_clip() -> f64 {
    DEFAULT_SAMPLING_CLIP
}

impl GridSpec {
    pub fn uniform(points: usize) -> Self {
        Self { points_per_axis: vec![points], bounds: None, clip: DEFAULT_SAMPLING_CLIP }
    }

    /// 201 points per axis up to two dimensions, 51 in three, 11 beyond.
    pub fn default_for(dim: usize) -> Self {
        Self::uniform(match dim {
            0..=2 => 201,
            3 => 51,
            _ => 11,
        })
    }

    pub fn with_bounds(mut self, bounds: Vec<(f64, f64)>) -> Self {
        self.bounds = Some(bounds);
        self
    }

    pub fn build(&self, domain: &ConvexSet) -> Result<Grid, ExistenceError> {
        let dim = domain.manifold().intrinsic_dim();
        let counts: Vec<usize> = match self.points_per_axis.len() {
            1 => vec![self.points_per_axis[0]; dim],
            n if n == dim => self.points_per_axis.clone(),
            n => return Err(ExistenceError::InvalidGrid(format!("{n} axis counts for {dim} axes"))),
        };
        if counts.iter().any(|&c| c < 2) {
            return Err(ExistenceError::InvalidGrid("need at least 2 points per axis".into()));
        }
        let domain_bounds = domain.chart_bounds(self.clip);
        let bounds: Vec<(f64, f64)> = match &self.bounds {
            Some(b) if b.len() == dim => {
                b.iter().zip(&domain_bounds).map(|(a, d)| (a.0.max(d.0), a.1.min(d.1))).collect()
            }
            Some(b) => return Err(ExistenceError::InvalidGrid(format!("{} bounds for {dim} axes", b.len()))),
            None => domain_bounds,
        };
        if bounds.iter().any(|(l, h)| !(l <= h) || !l.is_finite() || !h.is_finite()) {
            return Err(ExistenceError::EmptyGrid);
        }
        let axes: Vec<Vec<f64>> = bounds
            .iter()
            .zip(&counts)
            .map(|(&(lo, hi), &n)| {
                if lo == hi {
                    return vec![lo];
                }
                (0..n).map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect()
            })
            .collect();
        let spacing = bounds.iter().zip(&counts).map(|(&(lo, hi), &n)| (hi - lo) / (n - 1) as f64).collect();

        let m = domain.manifold();
        let mut nodes = Vec::new();
        let mut idx = vec![0usize; dim];
        let mut u = vec![0.0; dim];
        'outer: loop {
            for (a, &i) in idx.iter().enumerate() {
                u[a] = axes[a][i];
            }
            let p = m.point_from_chart(&u).map_err(SetError::from)?;
            if domain.contains_with(&p, BOUNDARY_TOL) {
                nodes.push(p);
            }
            // last axis fastest
            let mut a = dim;
            loop {
                if a == 0 {
                    break 'outer;
                }
                a -= 1;
                idx[a] += 1;
                if idx[a] < axes[a].len() {
                    break;
                }
                idx[a] = 0;
            }
        }
        if nodes.is_empty() {
            return Err(ExistenceError::EmptyGrid);
        }
        Ok(Grid { nodes, spacing })
    }
}

#[derive(Debug, Clone)]
pub struct Grid {
    nodes: Vec<ManifoldPoint>,
    spacing: Vec<f64>,
}

impl Grid {
    pub fn from_nodes(nodes: Vec<ManifoldPoint>) -> Result<Self, ExistenceError> {
        if nodes.is_empty() {
            return Err(ExistenceError::EmptyGrid);
        }
        let dim = nodes[0].manifold().intrinsic_dim();
        Ok(Self { nodes, spacing: vec![0.0; dim] })
    }

    pub fn nodes(&self) -> &[ManifoldPoint] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Chart spacing per axis.
    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    /// Largest chart spacing; this is the geodesic spacing along an axis on
    /// flat manifolds.
    pub fn max_spacing(&self) -> f64 {
        self.spacing.iter().copied().fold(0.0, f64::max)
    }
}

/// `max_y max(0, -F(x, y))` over grid nodes, with the index of the first
/// maximizing node (none when the gap is zero).
pub fn gap_with_witness(
    f: &BifunctionHandle,
    x: &ManifoldPoint,
    grid: &Grid,
) -> Result<(f64, Option<usize>), ExistenceError> {
    if grid.is_empty() {
        return Err(ExistenceError::EmptyGrid);
    }
    if !f.domain().contains(x)? {
        return Err(ExistenceError::NotInDomain);
    }
    let mut best = 0.0;
    let mut arg = None;
    for (i, y) in grid.nodes.iter().enumerate() {
        let v = -f.eval(x, y);
        if v > best {
            best = v;
            arg = Some(i);
        }
    }
    Ok((best, arg))
}

pub fn gap(f: &BifunctionHandle, x: &ManifoldPoint, grid: &Grid) -> Result<f64, ExistenceError> {
    gap_with_witness(f, x, grid).map(|(g, _)| g)
}

/// Grid nodes whose gap relative to the grid is at most `tol`.
pub fn brute_force_equilibria(
    f: &BifunctionHandle,
    grid: &Grid,
    tol: f64,
) -> Result<Vec<ManifoldPoint>, ExistenceError> {
    if !(tol > 0.0) {
        return Err(ExistenceError::Invalid(format!("tolerance must be positive, got {tol}")));
    }
    let nodes = &grid.nodes;
    let mut out = Vec::new();
    // The witness that disqualified the previous node usually disqualifies
    // the next one too; try it first.
    let mut hint = 0usize;
    for x in nodes {
        if -f.eval(x, &nodes[hint]) > tol {
            continue;
        }
        match nodes.iter().position(|y| -f.eval(x, y) > tol) {
            Some(i) => hint = i,
            None => out.push(x.clone()),
        }
    }
    Ok(out)
}

/// `Omega_k = {x in Omega : d(x, z0) <= k}`.
pub fn build_omega_k(omega: &ConvexSet, z0: &ManifoldPoint, k: f64) -> Result<ConvexSet, ExistenceError> {
    if !(k > 0.0) {
        return Err(ExistenceError::Invalid(format!("radius must be positive, got {k}")));
    }
    Ok(ConvexSet::intersection(vec![omega.clone(), ConvexSet::ball(z0.clone(), k)?])?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assumption2Report {
    pub found: bool,
    pub x_star: Option<Vec<f64>>,
    pub k0: Option<usize>,
    /// Every successful candidate with its index `k0`, in candidate order.
    pub successes: Vec<(Vec<f64>, usize)>,
    pub path_len: usize,
    pub candidates: usize,
}

/// Searches the candidates for `x*` with `F(z^k, x*) <= 1e-10` for all `k >= k0`
/// along the supplied path. A candidate counts when at least the last three
/// path points satisfy the inequality.
pub fn check_assumption_2(
    f: &BifunctionHandle,
    z0: &ManifoldPoint,
    path: &[ManifoldPoint],
    candidates: &[ManifoldPoint],
) -> Result<Assumption2Report, ExistenceError> {
    if path.len() < 3 {
        return Err(ExistenceError::InsufficientEvidence(format!(
            "divergent path has {} points, need at least 3",
            path.len()
        )));
    }
    let dists: Vec<f64> = path.iter().map(|z| z.distance(z0)).collect();
    if dists.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(ExistenceError::Invalid("path distances to z0 must be strictly increasing".into()));
    }
    for z in path {
        if !f.domain().contains(z)? {
            return Err(ExistenceError::NotInDomain);
        }
    }
    let mut successes = Vec::new();
    for x in candidates {
        let k0 = path.iter().rposition(|z| f.eval(z, x) > ASSUMPTION2_TOL).map_or(0, |last_bad| last_bad + 1);
        if k0 + 3 <= path.len() {
            successes.push((x.coords().to_vec(), k0));
        }
    }
    let first = successes.first().cloned();
    Ok(Assumption2Report {
        found: first.is_some(),
        x_star: first.as_ref().map(|s| s.0.clone()),
        k0: first.map(|s| s.1),
        successes,
        path_len: path.len(),
        candidates: candidates.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoercivityReport {
    pub passed: bool,
    pub samples_drawn: usize,
    pub samples_outside: usize,
    /// Largest `F(x, y0)` seen outside `B`.
    pub max_value: f64,
    pub witness: Option<Vec<f64>>,
    /// A pass is the sufficient condition for the divergent-path assumption.
    pub implies_assumption_2: bool,
    pub seed: u64,
}

/// Samples `x in Omega \ B` and tests `F(x, y0) < -1e-12`.
pub fn check_coercivity(
    f: &BifunctionHandle,
    b: &ConvexSet,
    y0: &ManifoldPoint,
    samples: usize,
    seed: u64,
) -> Result<CoercivityReport, ExistenceError> {
    let omega = f.domain();
    if !b.is_compact() {
        return Err(ExistenceError::Invalid("B must be compact".into()));
    }
    if !omega.contains(y0)? || !b.contains(y0)? {
        return Err(ExistenceError::NotInDomain);
    }
    let reach = b.chart_bounds(DEFAULT_SAMPLING_CLIP).iter().map(|(l, h)| l.abs().max(h.abs())).fold(0.0, f64::max);
    let clip = 2.0 * reach + 1.0;
    let mut rng = sampler(seed);
    let (mut outside, mut max_value, mut witness) = (0, f64::NEG_INFINITY, None);
    for _ in 0..samples {
        let x = omega.sample(&mut rng, clip);
        if b.contains(&x)? {
            continue;
        }
        outside += 1;
        let v = f.eval(&x, y0);
        if v > max_value {
            max_value = v;
            if v >= -COERCIVITY_TOL {
                witness = Some(x.coords().to_vec());
            }
        }
    }
    if outside == 0 {
        return Err(ExistenceError::InsufficientEvidence("no samples fell outside B".into()));
    }
    let passed = max_value < -COERCIVITY_TOL;
    Ok(CoercivityReport {
        passed,
        samples_drawn: samples,
        samples_outside: outside,
        max_value,
        witness: if passed { None } else { witness },
        implies_assumption_2: passed,
        seed,
    })
}

/// Two-point version of the convex-hull assumption: for sampled `y1, y2` in
/// `omega_k` and `t in {0, 0.1, ..., 1}`, `min(F(y1, g(t)), F(y2, g(t))) <= 1e-10`
/// where `g` is the geodesic from `y1` to `y2`.
pub fn check_assumption_1_segments(
    f: &BifunctionHandle,
    omega_k: &ConvexSet,
    pair_samples: usize,
    seed: u64,
) -> Result<PropertyReport, ExistenceError> {
    if pair_samples == 0 {
        return Err(BifunctionError::NoSamples.into());
    }
    if !omega_k.is_compact() {
        return Err(ExistenceError::Invalid("truncated domain must be compact".into()));
    }
    let mut rng = sampler(seed);
    for _ in 0..pair_samples {
        let y1 = omega_k.sample(&mut rng, DEFAULT_SAMPLING_CLIP);
        let y2 = omega_k.sample(&mut rng, DEFAULT_SAMPLING_CLIP);
        for i in 0..=10 {
            let g = y1.geodesic_to(&y2, i as f64 / 10.0);
            let v = f.eval(&y1, &g).min(f.eval(&y2, &g));
            if v > PROPERTY_TOL {
                return Ok(PropertyReport::failed(Property::Assumption1Segments, &y1, &y2, v, pair_samples, seed));
            }
        }
    }
    Ok(PropertyReport::passed(Property::Assumption1Segments, pair_samples, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bifunctions::{example31, example41, potential, PotentialSpec};
    use crate::geometry::Manifold;
    use approx::assert_abs_diff_eq;

    fn r1(x: f64) -> ManifoldPoint {
        Manifold::euclidean(1).point(vec![x]).unwrap()
    }

    #[test]
    fn grid_nodes_hit_bounds_exactly() {
        let f = example41();
        let g = GridSpec::uniform(201).build(f.domain()).unwrap();
        assert_eq!(g.len(), 201);
        assert_eq!(g.nodes()[0].coords(), &[0.5]);
        assert_eq!(g.nodes()[200].coords(), &[1.0]);
        assert!(GridSpec::uniform(1).build(f.domain()).is_err());
    }

    #[test]
    fn gap_examples() {
        let f = example41();
        let g = GridSpec::uniform(201).build(f.domain()).unwrap();
        assert_eq!(gap(&f, &r1(1.0), &g).unwrap(), 0.0);
        assert_abs_diff_eq!(gap(&f, &r1(0.5), &g).unwrap(), 0.25, epsilon = 1e-15);
        assert_eq!(gap(&f, &r1(2.0), &g), Err(ExistenceError::NotInDomain));

        let f = example31();
        let g = GridSpec::uniform(41).build(f.domain()).unwrap();
        let x = f.manifold().point(vec![0.5, 0.0, 1.0]).unwrap();
        assert_eq!(gap(&f, &x, &g).unwrap(), 0.0);
    }

    #[test]
    fn oracle_examples() {
        let f = example41();
        let g = GridSpec::uniform(201).build(f.domain()).unwrap();
        let s = brute_force_equilibria(&f, &g, 1e-9).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].coords(), &[1.0]);

        let dom = ConvexSet::interval(-1.0, 1.0).unwrap();
        let p = potential(PotentialSpec::DistancePower { point: vec![0.0], power: 2.0, scale: 1.0 }, dom).unwrap();
        let g = GridSpec::uniform(201).build(p.domain()).unwrap();
        let s = brute_force_equilibria(&p, &g, 1e-9).unwrap();
        assert_eq!(s.len(), 1);
        assert_abs_diff_eq!(s[0].coords()[0], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn omega_k_interval() {
        let om = crate::bifunctions::example41_domain();
        let ok = build_omega_k(&om, &r1(0.5), 0.25).unwrap();
        assert!(ok.contains(&r1(0.75)).unwrap());
        assert!(!ok.contains(&r1(0.76)).unwrap());
        let big = build_omega_k(&om, &r1(0.5), 10.0).unwrap();
        assert!(big.contains(&r1(1.0)).unwrap());
        assert!(build_omega_k(&om, &r1(0.5), 0.0).is_err());
    }

    #[test]
    fn assumption2_short_path_is_insufficient() {
        let f = example41();
        let path = vec![r1(0.5), r1(0.6)];
        assert!(matches!(
            check_assumption_2(&f, &r1(0.5), &path, &[r1(1.0)]),
            Err(ExistenceError::InsufficientEvidence(_))
        ));
    }

    #[test]
    fn linear_field_has_no_aspiration_point() {
        // F(x, y) = <c, y - x> with c = 1, path along -c.
        let dom = ConvexSet::interval(-100.0, 100.0).unwrap();
        let f = crate::bifunctions::vector_field(vec![vec![0.0]], vec![1.0], dom.clone()).unwrap();
        let path: Vec<_> = (1..=8).map(|k| r1(-(k as f64) * 10.0)).collect();
        let cands = GridSpec::uniform(21).with_bounds(vec![(-5.0, 5.0)]).build(&dom).unwrap();
        let r = check_assumption_2(&f, &r1(0.0), &path, cands.nodes()).unwrap();
        assert!(!r.found);
    }

    #[test]
    fn coercivity_zero_bifunction_fails() {
        let dom = ConvexSet::interval(-10.0, 10.0).unwrap();
        let f = BifunctionHandle::from_fn("zero", dom, |_, _| 0.0);
        let b = ConvexSet::interval(-1.0, 1.0).unwrap();
        let r = check_coercivity(&f, &b, &r1(0.0), 200, 2).unwrap();
        assert!(!r.passed);
        assert!(r.witness.is_some());
    }

    #[test]
    fn coercivity_needs_outside_samples() {
        let f = example41();
        let b = ConvexSet::interval(0.0, 2.0).unwrap();
        assert!(matches!(check_coercivity(&f, &b, &r1(0.75), 100, 1), Err(ExistenceError::InsufficientEvidence(_))));
    }

    #[test]
    fn assumption1_segments_example41() {
        let f = example41();
        let r = check_assumption_1_segments(&f, f.domain(), 2000, 5).unwrap();
        assert!(r.passed_on_samples());
    }
}
