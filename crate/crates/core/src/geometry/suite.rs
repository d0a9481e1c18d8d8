//! Sampled checks of the metric identities every other module relies on.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{GeometryError, Manifold, ManifoldDescriptor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub manifold: ManifoldDescriptor,
    pub samples: usize,
    pub seed: u64,
    /// Largest triangle comparison slack (must be `<= comparison_tol`).
    pub max_triangle_slack: f64,
    /// Smallest pair comparison slack (must be `>= -comparison_tol`).
    pub min_pair_slack: f64,
    /// Largest componentwise `|log(x, exp(x, v)) - v|`.
    pub max_roundtrip_error: f64,
    /// Largest `| |log(x, y)| - dist(x, y) |`.
    pub max_log_norm_error: f64,
    /// Largest hyperboloid constraint residual of an `exp` output.
    pub max_hyperboloid_residual: f64,
    /// Largest `d(x, z) - d(x, y) - d(y, z)`.
    pub max_triangle_inequality_excess: f64,
    pub degenerate_triples: usize,
    pub passed: bool,
}

/// Runs every check on `samples` random triples and tangent vectors.
/// Points are drawn uniformly in the chart box of half-width `radius`;
/// tangent vectors have norm at most `radius`.
pub fn property_suite(m: &Manifold, samples: usize, seed: u64, radius: f64) -> Result<SuiteReport, GeometryError> {
    let cfg = *m.config();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = SuiteReport {
        manifold: m.descriptor().clone(),
        samples,
        seed,
        max_triangle_slack: f64::NEG_INFINITY,
        min_pair_slack: f64::INFINITY,
        max_roundtrip_error: 0.0,
        max_log_norm_error: 0.0,
        max_hyperboloid_residual: 0.0,
        max_triangle_inequality_excess: f64::NEG_INFINITY,
        degenerate_triples: 0,
        passed: false,
    };
    for _ in 0..samples {
        let a = m.random_point(&mut rng, radius);
        let b = m.random_point(&mut rng, radius);
        let c = m.random_point(&mut rng, radius);
        match m.comparison_slacks(&a, &b, &c) {
            Ok(s) => {
                r.max_triangle_slack = r.max_triangle_slack.max(s.triangle);
                r.min_pair_slack = r.min_pair_slack.min(s.pair);
            }
            Err(GeometryError::Degenerate(_)) => r.degenerate_triples += 1,
            Err(e) => return Err(e),
        }
        let excess = a.distance(&c) - a.distance(&b) - b.distance(&c);
        r.max_triangle_inequality_excess = r.max_triangle_inequality_excess.max(excess);
        let l = m.log(&a, &b)?;
        r.max_log_norm_error = r.max_log_norm_error.max((l.norm() - a.distance(&b)).abs());

        let v = m.random_tangent(&mut rng, &a, radius);
        let y = m.exp(&a, &v)?;
        r.max_hyperboloid_residual = r.max_hyperboloid_residual.max(m.hyperboloid_residual(&y));
        let back = m.log(&a, &y)?;
        let err = back.coords().iter().zip(v.coords()).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        r.max_roundtrip_error = r.max_roundtrip_error.max(err);
    }
    r.passed = r.max_triangle_slack <= cfg.comparison_tol
        && r.min_pair_slack >= -cfg.comparison_tol
        && r.max_roundtrip_error <= cfg.roundtrip_tol
        && r.max_log_norm_error <= cfg.roundtrip_tol
        && r.max_hyperboloid_residual <= cfg.point_tol
        && r.max_triangle_inequality_excess <= cfg.triangle_tol;
    Ok(r)
}
